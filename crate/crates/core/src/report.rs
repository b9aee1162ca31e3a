//! Rendering of safety reports as text or as a versioned JSON document.

use std::fmt::Write;

use serde_json::{json, Value};

use crate::safety::{Outcome, SafetyReport, Verdict, Witness};

pub const SCHEMA: &str = "gtir.safety-report/1";

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Violation => "violation",
            Outcome::Inconclusive => "inconclusive",
            Outcome::SafeWithinBound => "safe-within-bound",
            Outcome::SafeComplete => "safe-complete",
        }
    }
}

/// One `action digest` line per step, starting with the initial
/// configuration's digest.
pub fn trace_lines(w: &Witness) -> Vec<String> {
    std::iter::once(format!("(initial) {}", w.initial.digest()))
        .chain(
            w.steps
                .iter()
                .map(|s| format!("{} {}", s.action, s.configuration.digest())),
        )
        .collect()
}

pub fn render_text(report: &SafetyReport) -> String {
    let mut out = String::new();
    for (property, verdict) in report.verdicts() {
        writeln!(out, "{:<22} {}", property.name(), verdict.label()).unwrap();
        if let Verdict::Violation(w) = verdict {
            writeln!(out, "  witness of length {} ending in {}", w.len(), w.last()).unwrap();
            for line in trace_lines(w) {
                writeln!(out, "    {line}").unwrap();
            }
        }
    }
    let st = &report.stats;
    writeln!(
        out,
        "explored {} configurations, {} transitions (buffer bound {}, state budget {}){}{}",
        st.configurations,
        st.edges,
        st.max_buffer_bound,
        st.max_states,
        if st.frontier_truncated {
            ", some sends suppressed by the bound"
        } else {
            ""
        },
        if st.budget_exhausted {
            ", state budget exhausted"
        } else {
            ""
        },
    )
    .unwrap();
    writeln!(out, "outcome: {}", report.outcome().label()).unwrap();
    out
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Violation(w) => json!({
            "verdict": v.label(),
            "witness": {
                "initial": w.initial.digest(),
                "final": w.last().to_string(),
                "steps": w.steps.iter().map(|s| json!({
                    "action": s.action.to_string(),
                    "digest": s.configuration.digest(),
                })).collect::<Vec<_>>(),
            },
        }),
        _ => json!({ "verdict": v.label() }),
    }
}

pub fn render_json(report: &SafetyReport) -> Value {
    let st = &report.stats;
    let properties: serde_json::Map<String, Value> = report
        .verdicts()
        .map(|(p, v)| (p.name().to_string(), verdict_json(v)))
        .collect();
    json!({
        "schema": SCHEMA,
        "outcome": report.outcome().label(),
        "properties": properties,
        "stats": {
            "configurations": st.configurations,
            "edges": st.edges,
            "max_buffer_bound": st.max_buffer_bound,
            "max_states": st.max_states,
            "frontier_truncated": st.frontier_truncated,
            "budget_exhausted": st.budget_exhausted,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::system_from_json;
    use crate::safety::check_safety;
    use crate::system::Bounds;

    #[test]
    fn mutual_wait_report() {
        let s = system_from_json(include_str!("../fixtures/mutual_wait.sys")).unwrap();
        let report = check_safety(&s, &Bounds::default()).unwrap();
        let text = render_text(&report);
        assert!(text.contains("deadlock               violation"), "{text}");
        assert!(text.contains("witness of length 0"));
        assert!(text.ends_with("outcome: violation\n"));
        let doc = render_json(&report);
        assert_eq!(doc["schema"], SCHEMA);
        assert_eq!(
            doc["properties"]["deadlock"]["witness"]["steps"]
                .as_array()
                .unwrap()
                .len(),
            0
        );
        assert_eq!(doc["properties"]["orphan-message"]["verdict"], "safe-complete");
        assert_eq!(doc["stats"]["configurations"], 1);
    }
}
