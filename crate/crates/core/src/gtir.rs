//! Global types with interface roles, their validation and their semantics
//! as communicating systems.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::cfsm::{Cfsm, Message, Role};
use crate::compose::{check_compatibility, compose, CompatibilityVerdict, ComposeError};
use crate::globaltype::{project, GlobalType, GlobalTypeError};
use crate::system::CommunicatingSystem;

/// `base` names a global type and marks some of its roles as interfaces;
/// `connect` joins two expressions through a compatible interface pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GtirExpr {
    Base {
        name: String,
        global_type: GlobalType,
        interfaces: BTreeSet<Role>,
    },
    Connect {
        left: Box<GtirExpr>,
        h: Role,
        right: Box<GtirExpr>,
        k: Role,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GtirError {
    #[error("interface {role} is not a role of type {name}")]
    InterfaceNotInType { name: String, role: Role },
    #[error("{role} is not an interface of the {side} operand")]
    NotAnInterface { role: Role, side: Side },
    #[error("operands share roles {}", join(.0))]
    SharedRoles(BTreeSet<Role>),
    #[error("role {0} does not occur in the expression")]
    UnknownRole(Role),
    #[error("cannot project onto {role}: {error}")]
    Projection { role: Role, error: Box<GlobalTypeError> },
    #[error("expression is not a GTIR: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<GtirViolation>),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

fn join(roles: &BTreeSet<Role>) -> String {
    roles.iter().map(Role::as_str).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GtirViolation {
    #[error(transparent)]
    Structure(GtirError),
    #[error("interface roles {sender} and {receiver} communicate ({message}) in type {name}")]
    InterfaceCommunication {
        name: String,
        sender: Role,
        receiver: Role,
        message: Message,
    },
    #[error("type {name} cannot be projected onto {role}: {error}")]
    Unprojectable {
        name: String,
        role: Role,
        error: GlobalTypeError,
    },
    #[error("interfaces {h} and {k} are not compatible: {}", .verdict.failures.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Incompatible {
        h: Role,
        k: Role,
        verdict: CompatibilityVerdict,
    },
}

impl GtirExpr {
    pub fn base(
        name: impl Into<String>,
        global_type: GlobalType,
        interfaces: BTreeSet<Role>,
    ) -> Result<Self, GtirError> {
        let expr = GtirExpr::Base {
            name: name.into(),
            global_type,
            interfaces,
        };
        expr.check_node()?;
        Ok(expr)
    }

    pub fn connect(left: GtirExpr, h: Role, right: GtirExpr, k: Role) -> Result<Self, GtirError> {
        let expr = GtirExpr::Connect {
            left: Box::new(left),
            h,
            right: Box::new(right),
            k,
        };
        expr.check_node()?;
        Ok(expr)
    }

    /// The structural invariants of this node alone.
    fn check_node(&self) -> Result<(), GtirError> {
        match self {
            GtirExpr::Base {
                name,
                global_type,
                interfaces,
            } => {
                let roles = global_type.roles();
                match interfaces.iter().find(|i| !roles.contains(*i)) {
                    Some(role) => Err(GtirError::InterfaceNotInType {
                        name: name.clone(),
                        role: role.clone(),
                    }),
                    None => Ok(()),
                }
            }
            GtirExpr::Connect { left, h, right, k } => {
                if !left.interfaces().contains(h) {
                    return Err(GtirError::NotAnInterface {
                        role: h.clone(),
                        side: Side::Left,
                    });
                }
                if !right.interfaces().contains(k) {
                    return Err(GtirError::NotAnInterface {
                        role: k.clone(),
                        side: Side::Right,
                    });
                }
                let shared: BTreeSet<Role> = left.roles().intersection(&right.roles()).cloned().collect();
                if shared.is_empty() {
                    Ok(())
                } else {
                    Err(GtirError::SharedRoles(shared))
                }
            }
        }
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        self.components().into_iter().flat_map(|(_, g)| g.roles()).collect()
    }

    /// Interfaces still open: those of the operands minus the connected pair.
    pub fn interfaces(&self) -> BTreeSet<Role> {
        match self {
            GtirExpr::Base { interfaces, .. } => interfaces.clone(),
            GtirExpr::Connect { left, h, right, k } => {
                let mut open = left.interfaces();
                open.extend(right.interfaces());
                open.remove(h);
                open.remove(k);
                open
            }
        }
    }

    /// The base global types, left to right, with their names.
    pub fn components(&self) -> Vec<(&str, &GlobalType)> {
        match self {
            GtirExpr::Base { name, global_type, .. } => vec![(name.as_str(), global_type)],
            GtirExpr::Connect { left, right, .. } => {
                let mut all = left.components();
                all.extend(right.components());
                all
            }
        }
    }
}

impl fmt::Display for GtirExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GtirExpr::Base { name, interfaces, .. } => write!(f, "base {name} interfaces {{{}}}", join(interfaces)),
            GtirExpr::Connect { left, h, right, k } => write!(f, "connect ({left}) via {h}<->{k} ({right})"),
        }
    }
}

/// Projection onto `p` of the component in which `p` occurs.
pub fn project_gtir(g: &GtirExpr, p: &Role) -> Result<Cfsm, GtirError> {
    let (_, component) = g
        .components()
        .into_iter()
        .find(|(_, c)| c.roles().contains(p))
        .ok_or_else(|| GtirError::UnknownRole(p.clone()))?;
    project(component, p).map_err(|error| GtirError::Projection {
        role: p.clone(),
        error: Box::new(error),
    })
}

/// Every reason `g` fails to be a GTIR; empty when it is one.
pub fn validate_gtir(g: &GtirExpr) -> Vec<GtirViolation> {
    let mut violations = Vec::new();
    validate_into(g, &mut violations);
    violations
}

fn validate_into(g: &GtirExpr, out: &mut Vec<GtirViolation>) {
    if let Err(e) = g.check_node() {
        out.push(GtirViolation::Structure(e));
    }
    match g {
        GtirExpr::Base {
            name,
            global_type,
            interfaces,
        } => {
            for role in global_type.roles() {
                match project(global_type, &role) {
                    Err(error) => out.push(GtirViolation::Unprojectable {
                        name: name.clone(),
                        role,
                        error,
                    }),
                    Ok(m) if interfaces.contains(&role) => {
                        for t in m.transitions() {
                            let c = &t.action.channel;
                            if t.action.is_send() && interfaces.contains(c.receiver()) {
                                out.push(GtirViolation::InterfaceCommunication {
                                    name: name.clone(),
                                    sender: c.sender().clone(),
                                    receiver: c.receiver().clone(),
                                    message: t.action.message.clone(),
                                });
                            }
                        }
                    }
                    Ok(_) => {}
                }
            }
        }
        GtirExpr::Connect { left, h, right, k } => {
            validate_into(left, out);
            validate_into(right, out);
            if let (Ok(mh), Ok(mk)) = (project_gtir(left, h), project_gtir(right, k)) {
                let verdict = check_compatibility(&mh, &mk);
                if !verdict.compatible() {
                    out.push(GtirViolation::Incompatible {
                        h: h.clone(),
                        k: k.clone(),
                        verdict,
                    });
                }
            }
        }
    }
}

/// The communicating system denoted by a valid GTIR: the projections of a
/// base type, or the composition of the operands' systems.
pub fn semantics(g: &GtirExpr) -> Result<CommunicatingSystem, GtirError> {
    let violations = validate_gtir(g);
    if !violations.is_empty() {
        return Err(GtirError::Invalid(violations));
    }
    denote(g)
}

fn denote(g: &GtirExpr) -> Result<CommunicatingSystem, GtirError> {
    match g {
        GtirExpr::Base { global_type, .. } => {
            let machines = global_type
                .roles()
                .into_iter()
                .map(|role| {
                    project(global_type, &role).map_err(|error| GtirError::Projection {
                        role,
                        error: Box::new(error),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CommunicatingSystem::new(machines).map_err(ComposeError::from)?)
        }
        GtirExpr::Connect { left, h, right, k } => Ok(compose(&denote(left)?, h, &denote(right)?, k)?),
    }
}
