//! The running example: the text-forwarding system `S` with interface roles
//! `I`, `J`, `H`, and the alternating-sender system `S'` with interface role `K`.

use crate::cfsm::Cfsm;

/// Source of the global type of `S` in the global-type DSL.
pub const FORWARDER_GT: &str = include_str!("../fixtures/forwarder.gt");
/// Source of the global type of `S'`.
pub const ALTERNATOR_GT: &str = include_str!("../fixtures/alternator.gt");
/// `S` connected to `S'` through `J` and `K`.
pub const WORKING_GTIR: &str = include_str!("../fixtures/working.gtir");

/// `M_J`: sends a text, then waits for `ok` or `fail`.
pub fn machine_j() -> Cfsm {
    Cfsm::from_labels(
        "J",
        "1",
        &[("1", "JM!text", "2"), ("2", "MJ?ok", "1"), ("2", "MJ?fail", "1")],
    )
    .expect("valid fixture")
}

/// `M_K`: alternately serves `A` and `B`, resending on `fail`.
pub fn machine_k() -> Cfsm {
    Cfsm::from_labels(
        "K",
        "1",
        &[
            ("1", "AK?text", "2"),
            ("2", "KA!ok", "3"),
            ("2", "KA!fail", "1"),
            ("3", "BK?text", "4"),
            ("4", "KB!ok", "1"),
            ("4", "KB!fail", "3"),
        ],
    )
    .expect("valid fixture")
}

/// The gateway of `M_J` towards `K`, transcribed by hand.
pub fn expected_gateway_j() -> Cfsm {
    Cfsm::from_labels(
        "J",
        "1",
        &[
            ("1", "KJ?text", "1^"),
            ("1^", "JM!text", "2"),
            ("2", "MJ?ok", "2'^"),
            ("2'^", "JK!ok", "1"),
            ("2", "MJ?fail", "2''^"),
            ("2''^", "JK!fail", "1"),
        ],
    )
    .expect("valid fixture")
}

/// The gateway of `M_K` towards `J`, transcribed by hand.
pub fn expected_gateway_k() -> Cfsm {
    Cfsm::from_labels(
        "K",
        "1",
        &[
            ("1", "AK?text", "1^"),
            ("1^", "KJ!text", "2"),
            ("2", "JK?fail", "2''^"),
            ("2", "JK?ok", "2'^"),
            ("2''^", "KA!fail", "1"),
            ("2'^", "KA!ok", "3"),
            ("3", "BK?text", "3^"),
            ("3^", "KJ!text", "4"),
            ("4", "JK?fail", "4'^"),
            ("4", "JK?ok", "4''^"),
            ("4'^", "KB!fail", "3"),
            ("4''^", "KB!ok", "1"),
        ],
    )
    .expect("valid fixture")
}

/// The connected GTIR of the running example, resolved without touching
/// the file system.
pub fn working_gtir() -> crate::gtir::GtirExpr {
    use std::path::Path;
    let mut read = |p: &Path| match p.file_name().and_then(|n| n.to_str()) {
        Some("working.gtir") => Ok(WORKING_GTIR.to_string()),
        Some("forwarder.gt") => Ok(FORWARDER_GT.to_string()),
        Some("alternator.gt") => Ok(ALTERNATOR_GT.to_string()),
        _ => Err(std::io::Error::new(std::io::ErrorKind::NotFound, "not a fixture")),
    };
    crate::syntax::load_with(Path::new("working.gtir"), &mut read)
        .expect("valid fixture")
        .gtir
        .expect("fixture defines a gtir expression")
}
