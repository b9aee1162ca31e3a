//! A small global-type language: interactions, sequencing, located choice,
//! loops with `break`, and `end`, together with projection onto roles.
//!
//! ```text
//! I->C:trialsNum;
//! loop {
//!   J->M:text;
//!   choice at M { M->J:ok; break or M->J:fail }
//! }
//! ```

mod project;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::cfsm::{Message, Role};

pub use project::project;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GlobalType {
    Interaction {
        sender: Role,
        receiver: Role,
        message: Message,
    },
    Seq(Vec<GlobalType>),
    Choice {
        decider: Role,
        branches: Vec<GlobalType>,
    },
    /// Repeats its body; `break` leaves the innermost enclosing loop.
    Loop(Box<GlobalType>),
    Break,
    /// Terminates the protocol; nothing after it happens.
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlobalTypeError {
    #[error("interaction {sender}->{sender}:{message} has the same sender and receiver")]
    SelfInteraction { sender: Role, message: Message },
    #[error("choice at {decider} has no branches")]
    EmptyChoice { decider: Role },
    #[error("branch {branch} of choice at {decider} does not start with an interaction")]
    EmptyBranch { decider: Role, branch: usize },
    #[error(
        "branch {branch} of choice at {decider} starts with {sender}->{receiver}:{message}, not sent by the decider"
    )]
    NotLocated {
        decider: Role,
        branch: usize,
        sender: Role,
        receiver: Role,
        message: Message,
    },
    #[error("break outside of a loop")]
    BreakOutsideLoop,
    #[error("role {role} is not part of the global type")]
    UnknownRole { role: Role },
    #[error("role {role} cannot be projected: branches {first} and {second} of choice at {decider} differ for it before it learns which one was taken")]
    Unprojectable {
        role: Role,
        decider: Role,
        first: usize,
        second: usize,
    },
}

impl GlobalType {
    pub fn interaction(sender: &str, receiver: &str, message: &str) -> Self {
        GlobalType::Interaction {
            sender: Role::new(sender),
            receiver: Role::new(receiver),
            message: Message::new(message),
        }
    }

    pub fn seq(items: impl IntoIterator<Item = GlobalType>) -> Self {
        GlobalType::Seq(items.into_iter().collect())
    }

    pub fn choice(decider: &str, branches: impl IntoIterator<Item = GlobalType>) -> Self {
        GlobalType::Choice {
            decider: Role::new(decider),
            branches: branches.into_iter().collect(),
        }
    }

    pub fn repeat(body: GlobalType) -> Self {
        GlobalType::Loop(Box::new(body))
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a GlobalType)) {
        f(self);
        match self {
            GlobalType::Seq(items) => items.iter().for_each(|g| g.visit(f)),
            GlobalType::Choice { branches, .. } => branches.iter().for_each(|g| g.visit(f)),
            GlobalType::Loop(body) => body.visit(f),
            GlobalType::Interaction { .. } | GlobalType::Break | GlobalType::End => {}
        }
    }

    /// Roles occurring in interactions.
    pub fn roles(&self) -> BTreeSet<Role> {
        let mut roles = BTreeSet::new();
        self.visit(&mut |g| {
            if let GlobalType::Interaction { sender, receiver, .. } = g {
                roles.insert(sender.clone());
                roles.insert(receiver.clone());
            }
        });
        roles
    }

    pub fn messages(&self) -> BTreeSet<Message> {
        let mut messages = BTreeSet::new();
        self.visit(&mut |g| {
            if let GlobalType::Interaction { message, .. } = g {
                messages.insert(message.clone());
            }
        });
        messages
    }

    /// Structural checks: distinct endpoints, nonempty choices, located
    /// choices, and `break` only inside loops.
    pub fn validate(&self) -> Result<(), GlobalTypeError> {
        self.check_syntax(0)?;
        project::GlobalGraph::build(self).check_located()
    }

    fn check_syntax(&self, loops: usize) -> Result<(), GlobalTypeError> {
        match self {
            GlobalType::Interaction {
                sender,
                receiver,
                message,
            } if sender == receiver => Err(GlobalTypeError::SelfInteraction {
                sender: sender.clone(),
                message: message.clone(),
            }),
            GlobalType::Interaction { .. } | GlobalType::End => Ok(()),
            GlobalType::Break if loops == 0 => Err(GlobalTypeError::BreakOutsideLoop),
            GlobalType::Break => Ok(()),
            GlobalType::Seq(items) => items.iter().try_for_each(|g| g.check_syntax(loops)),
            GlobalType::Choice { decider, branches } => {
                if branches.is_empty() {
                    return Err(GlobalTypeError::EmptyChoice {
                        decider: decider.clone(),
                    });
                }
                branches.iter().try_for_each(|g| g.check_syntax(loops))
            }
            GlobalType::Loop(body) => body.check_syntax(loops + 1),
        }
    }
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::Interaction {
                sender,
                receiver,
                message,
            } => write!(f, "{sender}->{receiver}:{message}"),
            GlobalType::Seq(items) if items.is_empty() => write!(f, "{{ }}"),
            GlobalType::Seq(items) => {
                for (i, g) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    match g {
                        GlobalType::Seq(_) => write!(f, "{{ {g} }}")?,
                        _ => write!(f, "{g}")?,
                    }
                }
                Ok(())
            }
            GlobalType::Choice { decider, branches } => {
                write!(f, "choice at {decider} {{ ")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        write!(f, " or ")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, " }}")
            }
            GlobalType::Loop(body) => write!(f, "loop {{ {body} }}"),
            GlobalType::Break => write!(f, "break"),
            GlobalType::End => write!(f, "end"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_and_messages() {
        let g = GlobalType::seq([
            GlobalType::interaction("p", "q", "a"),
            GlobalType::choice(
                "q",
                [
                    GlobalType::interaction("q", "r", "b"),
                    GlobalType::interaction("q", "p", "c"),
                ],
            ),
        ]);
        let roles: Vec<String> = g.roles().iter().map(ToString::to_string).collect();
        assert_eq!(roles, vec!["p", "q", "r"]);
        assert_eq!(g.messages().len(), 3);
        assert!(GlobalType::End.roles().is_empty());
        assert_eq!(GlobalType::interaction("p", "q", "a").roles().len(), 2);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            GlobalType::interaction("p", "p", "a").validate(),
            Err(GlobalTypeError::SelfInteraction { .. })
        ));
        assert_eq!(GlobalType::Break.validate(), Err(GlobalTypeError::BreakOutsideLoop));
        assert!(matches!(
            GlobalType::choice("p", []).validate(),
            Err(GlobalTypeError::EmptyChoice { .. })
        ));
        let unlocated = GlobalType::choice("p", [GlobalType::interaction("q", "p", "a")]);
        assert!(matches!(unlocated.validate(), Err(GlobalTypeError::NotLocated { .. })));
        let empty_branch = GlobalType::choice("p", [GlobalType::interaction("p", "q", "a"), GlobalType::End]);
        assert!(matches!(
            empty_branch.validate(),
            Err(GlobalTypeError::EmptyBranch { branch: 1, .. })
        ));
    }

    #[test]
    fn display_round_trips_through_parser() {
        let g = crate::syntax::parse_global_type(crate::fixtures::FORWARDER_GT).unwrap();
        let again = crate::syntax::parse_global_type(&g.to_string()).unwrap();
        assert_eq!(g, again);
    }
}
