//! Line-delimited JSON rendering of trace events.

use serde_json::{json, Value};
use shapes_core::trace::TraceEvent;

pub fn event(e: &TraceEvent) -> Value {
    json!({
        "stage": e.stage,
        "input": e.input,
        "decision": e.decision,
        "rejected": e.rejected.iter().map(|(a, r)| json!({"alternative": a, "reason": r})).collect::<Vec<_>>(),
        "cited": e.cited,
    })
}

/// One record per line, in trace order.
pub fn lines(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&event(e).to_string());
        out.push('\n');
    }
    out
}
