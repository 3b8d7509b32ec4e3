//! Under-the-hood trace records shared by every processing stage.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// One decision taken by a stage, with the alternatives it turned down.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TraceEvent {
    pub stage: String,
    pub input: String,
    pub decision: String,
    /// (alternative, reason)
    pub rejected: Vec<(String, String)>,
    /// Sense ids, concepts, facets or shapes the decision relied on.
    pub cited: Vec<String>,
}

impl TraceEvent {
    pub fn new(stage: &str, input: impl Into<String>, decision: impl Into<String>) -> Self {
        TraceEvent { stage: stage.into(), input: input.into(), decision: decision.into(), ..Default::default() }
    }

    pub fn reject(mut self, alternative: impl Into<String>, reason: impl Into<String>) -> Self {
        self.rejected.push((alternative.into(), reason.into()));
        self
    }

    pub fn cite(mut self, item: impl ToString) -> Self {
        let s = item.to_string();
        if !self.cited.contains(&s) {
            self.cited.push(s);
        }
        self
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", self.stage, self.input)?;
        writeln!(f, "  decision: {}", self.decision)?;
        for (alt, why) in &self.rejected {
            writeln!(f, "  rejected: {} ({})", alt, why)?;
        }
        if !self.cited.is_empty() {
            writeln!(f, "  cited: {}", self.cited.join(", "))?;
        }
        Ok(())
    }
}

/// Plain-text rendering of a whole trace.
pub fn render(events: &[TraceEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&e.to_string());
    }
    s
}
