use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gtir_core::compose::check_compatibility;
use gtir_core::format::{machine_from_json, machine_to_json, system_from_json, system_to_json, FormatError};
use gtir_core::gtir::{project_gtir, semantics, validate_gtir, GtirError, GtirExpr};
use gtir_core::report::{render_json, render_text};
use gtir_core::safety::{check_safety, Outcome};
use gtir_core::syntax::{load, LoadError, Program};
use gtir_core::{dot, gateway, project, Bounds, Cfsm, CommunicatingSystem, Role};

/// Exit statuses.
mod code {
    pub const OK: u8 = 0;
    pub const INCOMPATIBLE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const INPUT: u8 = 3;
    pub const VIOLATION: u8 = 4;
    pub const INCONCLUSIVE: u8 = 5;
}

#[derive(Debug, Parser)]
#[command(
    name = "gtir",
    version,
    about = "Projection, compatibility, gateways and safety checking for communicating machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, clap::Args)]
struct Output {
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct Exploration {
    /// Maximum number of messages per channel.
    #[arg(long, env = "GTIR_BOUND", default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..))]
    bound: u16,
    /// Maximum number of configurations to explore.
    #[arg(long, env = "GTIR_MAX_STATES", default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    /// Worker threads for exploration.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project a global type (or a GTIR) onto a role.
    Project {
        file: PathBuf,
        #[arg(long)]
        role: String,
        #[command(flatten)]
        out: Output,
    },
    /// Decide whether two interface machines are compatible.
    Compat {
        left: PathBuf,
        right: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Turn a machine into a gateway towards a partner role.
    Gateway {
        file: PathBuf,
        #[arg(long)]
        partner: String,
        #[command(flatten)]
        out: Output,
    },
    /// Validate a GTIR expression.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Print the communicating system a GTIR or global type denotes.
    System {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Check deadlock freedom, absence of orphan messages and of
    /// unspecified receptions by bounded exploration.
    Check {
        /// A GTIR or global-type file, or a JSON system document.
        file: PathBuf,
        #[command(flatten)]
        bounds: Exploration,
        #[command(flatten)]
        out: Output,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(code::PARSE, format!("cannot read {}: {e}", path.display())))
}

fn format_failure(path: &Path, e: FormatError) -> Failure {
    let code = if e.is_syntax_error() { code::PARSE } else { code::INPUT };
    fail(code, format!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    load(path).map_err(|e: LoadError| fail(if e.is_parse_error() { code::PARSE } else { code::INPUT }, e))
}

fn read_machine(path: &Path) -> Result<Cfsm, Failure> {
    machine_from_json(&read(path)?).map_err(|e| format_failure(path, e))
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// The GTIR a file denotes; a file with a single global type stands for
/// that type with no interfaces.
fn gtir_of(path: &Path) -> Result<GtirExpr, Failure> {
    let program = load_program(path)?;
    if let Some(g) = program.gtir {
        return Ok(g);
    }
    let g = program.sole_type().ok_or_else(|| {
        fail(
            code::INPUT,
            format!("{}: no gtir expression and not exactly one type", path.display()),
        )
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("main");
    GtirExpr::base(name, g.clone(), BTreeSet::new()).map_err(|e| fail(code::INPUT, e))
}

fn system_of(path: &Path) -> Result<CommunicatingSystem, Failure> {
    let text = read(path)?;
    if is_json(&text) {
        return system_from_json(&text).map_err(|e| format_failure(path, e));
    }
    semantics(&gtir_of(path)?).map_err(|e: GtirError| fail(code::INPUT, e))
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => {
            fs::write(path, text).map_err(|e| fail(code::INPUT, format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_machine(out: &Output, m: &Cfsm) -> Result<(), Failure> {
    match out.format.unwrap_or(Format::Json) {
        Format::Json => emit(out, &machine_to_json(m)),
        Format::Dot => emit(out, &dot::machine_to_dot(m)),
        Format::Text => {
            let mut text = format!("machine of {} (initial {})\n", m.subject(), m.initial());
            for t in m.transitions() {
                text.push_str(&format!("  {} --{}--> {}\n", t.from, t.action, t.to));
            }
            emit(out, &text)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Project { file, role, out } => {
            let role = Role::try_from(role).map_err(|e| fail(code::INPUT, e))?;
            let text = read(&file)?;
            let m = if is_json(&text) {
                return Err(fail(
                    code::PARSE,
                    format!("{}: expected a global type or GTIR", file.display()),
                ));
            } else {
                let program = load_program(&file)?;
                match (&program.gtir, program.sole_type()) {
                    (Some(g), _) => project_gtir(g, &role).map_err(|e| fail(code::INPUT, e))?,
                    (None, Some(g)) => project(g, &role).map_err(|e| fail(code::INPUT, e))?,
                    (None, None) => {
                        return Err(fail(
                            code::INPUT,
                            format!("{}: no gtir expression and not exactly one type", file.display()),
                        ))
                    }
                }
            };
            emit_machine(&out, &m)?;
            Ok(code::OK)
        }
        Command::Compat { left, right, out } => {
            let (mh, mk) = (read_machine(&left)?, read_machine(&right)?);
            let verdict = check_compatibility(&mh, &mk);
            let text = match out.format.unwrap_or(Format::Text) {
                Format::Json => {
                    let failures: Vec<String> = verdict.failures.iter().map(ToString::to_string).collect();
                    serde_json::to_string_pretty(&serde_json::json!({
                        "schema": "gtir.compatibility/1",
                        "compatible": verdict.compatible(),
                        "failures": failures,
                    }))
                    .expect("json")
                        + "\n"
                }
                Format::Text => {
                    let mut text = format!(
                        "{} and {}: {}\n",
                        mh.subject(),
                        mk.subject(),
                        if verdict.compatible() {
                            "compatible"
                        } else {
                            "not compatible"
                        }
                    );
                    for f in &verdict.failures {
                        text.push_str(&format!("  {f}\n"));
                    }
                    text
                }
                Format::Dot => return Err(fail(code::INPUT, "dot output is not available for compat")),
            };
            emit(&out, &text)?;
            Ok(if verdict.compatible() {
                code::OK
            } else {
                code::INCOMPATIBLE
            })
        }
        Command::Gateway { file, partner, out } => {
            let m = read_machine(&file)?;
            let partner = Role::try_from(partner).map_err(|e| fail(code::INPUT, e))?;
            let gw = gateway(&m, &partner).map_err(|e| fail(code::INPUT, e))?;
            emit_machine(&out, &gw)?;
            Ok(code::OK)
        }
        Command::Validate { file, out } => {
            let g = gtir_of(&file)?;
            let violations = validate_gtir(&g);
            let text = match out.format.unwrap_or(Format::Text) {
                Format::Json => {
                    let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
                    serde_json::to_string_pretty(&serde_json::json!({
                        "schema": "gtir.validation/1",
                        "valid": violations.is_empty(),
                        "interfaces": g.interfaces().iter().map(Role::as_str).collect::<Vec<_>>(),
                        "violations": list,
                    }))
                    .expect("json")
                        + "\n"
                }
                Format::Text if violations.is_empty() => format!("{g}\nvalid GTIR\n"),
                Format::Text => {
                    let mut text = format!("{g}\nnot a GTIR:\n");
                    for v in &violations {
                        text.push_str(&format!("  {v}\n"));
                    }
                    text
                }
                Format::Dot => return Err(fail(code::INPUT, "dot output is not available for validate")),
            };
            emit(&out, &text)?;
            Ok(if violations.is_empty() { code::OK } else { code::INPUT })
        }
        Command::System { file, out } => {
            let s = system_of(&file)?;
            match out.format.unwrap_or(Format::Json) {
                Format::Dot => emit(&out, &dot::system_to_dot(&s))?,
                _ => emit(&out, &system_to_json(&s))?,
            }
            Ok(code::OK)
        }
        Command::Check { file, bounds, out } => {
            let s = system_of(&file)?;
            let bounds = Bounds {
                max_buffer_bound: usize::from(bounds.bound),
                max_states: usize::try_from(bounds.max_states).unwrap_or(usize::MAX),
                jobs: usize::from(bounds.jobs),
            };
            let report = check_safety(&s, &bounds).map_err(|e| fail(code::INPUT, e))?;
            match out.format.unwrap_or(Format::Text) {
                Format::Json => emit(
                    &out,
                    &(serde_json::to_string_pretty(&render_json(&report)).expect("json") + "\n"),
                )?,
                Format::Text => emit(&out, &render_text(&report))?,
                Format::Dot => return Err(fail(code::INPUT, "dot output is not available for check")),
            }
            Ok(match report.outcome() {
                Outcome::SafeComplete => code::OK,
                Outcome::Violation => code::VIOLATION,
                Outcome::SafeWithinBound | Outcome::Inconclusive => code::INCONCLUSIVE,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
