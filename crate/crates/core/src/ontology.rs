//! Concept store with multiple inheritance, effective-frame computation and
//! facet-graded filler checks.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kr::{canonical_concept, parse_kb, Block, BlockKind, Facet, Filler, Frame, KrError, Slot};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OntologyError {
    Kr(KrError),
    UnknownConcept(String),
    UnknownParent { concept: String, parent: String },
    Cycle(Vec<String>),
    UnknownProperty { concept: String, property: String },
}

impl fmt::Display for OntologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OntologyError::Kr(e) => write!(f, "{}", e),
            OntologyError::UnknownConcept(c) => write!(f, "unknown concept {}", c),
            OntologyError::UnknownParent { concept, parent } => {
                write!(f, "concept {} names unknown parent {}", concept, parent)
            }
            OntologyError::Cycle(path) => write!(f, "IS-A cycle: {}", path.join(" -> ")),
            OntologyError::UnknownProperty { concept, property } => {
                write!(f, "{} has no property {}", concept, property)
            }
        }
    }
}

impl core::error::Error for OntologyError {}

impl From<KrError> for OntologyError {
    fn from(e: KrError) -> Self {
        OntologyError::Kr(e)
    }
}

/// Outcome of grading a candidate filler against a concept's slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerdictKind {
    Violation,
    MatchesRelaxable,
    MatchesSem,
    MatchesDefault,
    MatchesValue,
}

impl VerdictKind {
    fn from_facet(f: Facet) -> Self {
        match f {
            Facet::Value => VerdictKind::MatchesValue,
            Facet::Default => VerdictKind::MatchesDefault,
            Facet::Sem => VerdictKind::MatchesSem,
            Facet::RelaxableTo => VerdictKind::MatchesRelaxable,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Violation => "violation",
            VerdictKind::MatchesRelaxable => "matches-relaxable",
            VerdictKind::MatchesSem => "matches-sem",
            VerdictKind::MatchesDefault => "matches-default",
            VerdictKind::MatchesValue => "matches-value",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintVerdict {
    pub kind: VerdictKind,
    /// The facet line that matched, with the filler that licensed the match.
    pub matched: Option<(Facet, Filler)>,
}

/// The ontology: concepts keyed by canonical name, frozen after load.
#[derive(Clone, Debug, Default)]
pub struct ConceptStore {
    concepts: BTreeMap<String, Frame>,
    parents: BTreeMap<String, Vec<String>>,
}

fn parents_of(frame: &Frame) -> Vec<String> {
    frame
        .all_fillers("IS-A")
        .into_iter()
        .filter_map(|f| f.concept_name().map(canonical_concept))
        .collect()
}

fn head_name(frame: &Frame) -> String {
    match &frame.head {
        Filler::Concept(c) => canonical_concept(c),
        other => other.to_string(),
    }
}

impl ConceptStore {
    /// Parse a document and load its `concept` and `script` blocks.
    pub fn parse(text: &str) -> Result<Self, OntologyError> {
        Self::from_blocks(&parse_kb(text)?)
    }

    pub fn from_blocks(blocks: &[Block]) -> Result<Self, OntologyError> {
        let frames = blocks
            .iter()
            .filter(|b| matches!(b.kind, BlockKind::Concept | BlockKind::Script))
            .map(|b| b.frame.clone());
        Self::from_frames(frames)
    }

    pub fn from_frames(frames: impl IntoIterator<Item = Frame>) -> Result<Self, OntologyError> {
        let mut store = ConceptStore::default();
        for f in frames {
            let name = head_name(&f);
            store.parents.insert(name.clone(), parents_of(&f));
            store.concepts.insert(name, f);
        }
        store.validate_graph()?;
        Ok(store)
    }

    /// A new store with `frame` added or replaced. The receiver is untouched,
    /// so a failed insertion exposes no partial state.
    pub fn with_concept(&self, frame: Frame) -> Result<Self, OntologyError> {
        let mut next = self.clone();
        let name = head_name(&frame);
        next.parents.insert(name.clone(), parents_of(&frame));
        next.concepts.insert(name, frame);
        next.validate_graph()?;
        Ok(next)
    }

    fn validate_graph(&self) -> Result<(), OntologyError> {
        for (c, ps) in &self.parents {
            for p in ps {
                if !self.concepts.contains_key(p) {
                    return Err(OntologyError::UnknownParent { concept: c.clone(), parent: p.clone() });
                }
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for start in self.concepts.keys() {
            if state.get(start.as_str()).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = alloc::vec![(start.as_str(), 0)];
            state.insert(start, 1);
            while let Some((node, i)) = stack.pop() {
                let ps = &self.parents[node];
                if i < ps.len() {
                    stack.push((node, i + 1));
                    let p = ps[i].as_str();
                    match state.get(p).copied().unwrap_or(0) {
                        0 => {
                            state.insert(p, 1);
                            stack.push((p, 0));
                        }
                        1 => {
                            let mut path: Vec<String> = stack.iter().map(|(n, _)| n.to_string()).collect();
                            let from = path.iter().position(|n| n == p).unwrap_or(0);
                            path.drain(..from);
                            path.push(p.to_string());
                            return Err(OntologyError::Cycle(path));
                        }
                        _ => {}
                    }
                } else {
                    state.insert(node, 2);
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.concepts.contains_key(&canonical_concept(concept))
    }

    pub fn get(&self, concept: &str) -> Option<&Frame> {
        self.concepts.get(&canonical_concept(concept))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.concepts.keys().map(|s| s.as_str())
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.concepts.values()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn parents(&self, concept: &str) -> &[String] {
        self.parents.get(&canonical_concept(concept)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn require(&self, concept: &str) -> Result<String, OntologyError> {
        let c = canonical_concept(concept);
        if self.concepts.contains_key(&c) {
            Ok(c)
        } else {
            Err(OntologyError::UnknownConcept(c))
        }
    }

    /// Ancestors (reflexive) ordered by distance, then IS-A line order.
    pub fn ancestors(&self, concept: &str) -> Result<Vec<String>, OntologyError> {
        let c = self.require(concept)?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(c.clone());
        queue.push_back(c);
        while let Some(n) = queue.pop_front() {
            for p in &self.parents[&n] {
                if seen.insert(p.clone()) {
                    queue.push_back(p.clone());
                }
            }
            out.push(n);
        }
        Ok(out)
    }

    /// Reflexive, transitive subsumption.
    pub fn is_a(&self, concept: &str, ancestor: &str) -> Result<bool, OntologyError> {
        let anc = self.require(ancestor)?;
        Ok(self.ancestors(concept)?.contains(&anc))
    }

    /// Like [`is_a`](Self::is_a) but false for unknown names.
    pub fn subsumes(&self, ancestor: &str, concept: &str) -> bool {
        self.is_a(concept, ancestor).unwrap_or(false)
    }

    /// Local slots plus every inherited `(property, facet)` line not already
    /// supplied by a nearer concept.
    pub fn effective_frame(&self, concept: &str) -> Result<Frame, OntologyError> {
        let ancestors = self.ancestors(concept)?;
        let mut frame = Frame::new(Filler::Concept(ancestors[0].clone()));
        let mut seen: BTreeSet<(String, Facet)> = BTreeSet::new();
        for a in &ancestors {
            let local = &self.concepts[a];
            let mut added: BTreeSet<(String, Facet)> = BTreeSet::new();
            for slot in &local.slots {
                let key = (slot.property.clone(), slot.facet);
                if seen.contains(&key) {
                    continue;
                }
                added.insert(key);
                frame.slots.push(slot.clone());
            }
            seen.extend(added);
        }
        Ok(frame)
    }

    /// Grade `candidate` as a filler of `property` on `concept`.
    pub fn check_filler(&self, concept: &str, property: &str, candidate: &Filler) -> Result<ConstraintVerdict, OntologyError> {
        let eff = self.effective_frame(concept)?;
        if !eff.has_property(property) {
            return Err(OntologyError::UnknownProperty { concept: canonical_concept(concept), property: property.into() });
        }
        let cand_concept = match candidate.concept_name() {
            Some(c) => Some(self.require(c)?),
            None => None,
        };
        let matches = |f: &Filler| -> bool {
            match (&cand_concept, f) {
                (Some(c), f) if f.concept_name().is_some() => self.subsumes(f.concept_name().unwrap_or_default(), c),
                (None, Filler::Literal(l)) => candidate.as_literal() == Some(l.as_str()),
                _ => false,
            }
        };
        let value_line = eff.fillers(property, Facet::Value);
        if !value_line.is_empty() && !value_line.iter().any(|f| matches(f)) {
            return Ok(ConstraintVerdict { kind: VerdictKind::Violation, matched: None });
        }
        for facet in Facet::ALL_STRONGEST_FIRST {
            if let Some(f) = eff.fillers(property, facet).into_iter().find(|f| matches(f)) {
                return Ok(ConstraintVerdict { kind: VerdictKind::from_facet(facet), matched: Some((facet, f.clone())) });
            }
        }
        Ok(ConstraintVerdict { kind: VerdictKind::Violation, matched: None })
    }

    /// The strongest-facet concept filler of `property`, used to type fillers
    /// that arrive without a concept of their own.
    pub fn expected_filler(&self, concept: &str, property: &str) -> Option<String> {
        let eff = self.effective_frame(concept).ok()?;
        for facet in [Facet::Sem, Facet::Default, Facet::Value, Facet::RelaxableTo] {
            if let Some(c) = eff.fillers(property, facet).into_iter().find_map(|f| match f {
                Filler::Concept(c) => Some(c.clone()),
                _ => None,
            }) {
                return Some(c);
            }
        }
        None
    }

    /// Nearest concept subsuming all of `concepts`; ties go to the ancestor
    /// listed first in the first concept's ancestor order.
    pub fn nearest_common_ancestor(&self, concepts: &[&str]) -> Option<String> {
        let (first, rest) = concepts.split_first()?;
        let candidates = self.ancestors(first).ok()?;
        candidates.into_iter().find(|a| rest.iter().all(|c| self.subsumes(a, c)))
    }

    /// Lint findings: `value` facets on properties other than IS-A.
    pub fn lint(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, f) in &self.concepts {
            for s in &f.slots {
                if s.facet == Facet::Value && s.property != "IS-A" && !name.contains('-') {
                    out.push(alloc::format!("{}: value facet on {}", name, s.property));
                }
            }
        }
        out
    }
}

/// Convenience for building a concept frame in code.
pub fn concept_frame(name: &str, parent: &str, slots: Vec<Slot>) -> Frame {
    let mut f = Frame::new(Filler::concept(name));
    f.slots.push(Slot::value("IS-A", Filler::concept(parent)));
    f.slots.extend(slots);
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use alloc::vec;

    fn toy() -> ConceptStore {
        bundled::ontology()
    }

    /// Independent closure: BFS straight over the parsed IS-A lines.
    fn brute_reachable(blocks: &[Block], from: &str, to: &str) -> bool {
        let mut frontier = vec![from.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(c) = frontier.pop() {
            if c == to {
                return true;
            }
            if !seen.insert(c.clone()) {
                continue;
            }
            for b in blocks {
                if b.frame.head == Filler::Concept(c.clone()) {
                    for f in b.frame.all_fillers("IS-A") {
                        frontier.push(f.to_string());
                    }
                }
            }
        }
        false
    }

    #[test]
    fn is_a_matches_brute_force_closure() {
        let blocks = parse_kb(bundled::ONTOLOGY_KB).unwrap();
        let store = toy();
        for (a, b) in [("SURGEON", "PHYSICIAN"), ("SURGEON", "HUMAN"), ("TIGER", "EVENT"), ("ROBOT", "HUMAN"), ("HAMMER", "TOOL")] {
            assert_eq!(store.is_a(a, b).unwrap(), brute_reachable(&blocks, a, b), "{} {}", a, b);
        }
        assert!(store.is_a("SURGEON", "PHYSICIAN").unwrap());
        assert!(!store.is_a("TIGER", "EVENT").unwrap());
        assert!(store.is_a("SURGERY", "SURGERY").unwrap());
        assert!(store.is_a("surgeon", "human").unwrap());
    }

    #[test]
    fn unknown_concept_is_an_error() {
        assert_eq!(toy().is_a("ZORCH", "ALL"), Err(OntologyError::UnknownConcept("ZORCH".into())));
    }

    #[test]
    fn surgery_overrides_agent_and_location() {
        let store = toy();
        let eff = store.effective_frame("SURGERY").unwrap();
        assert_eq!(eff.fillers("AGENT", Facet::Sem), vec![&Filler::concept("PHYSICIAN")]);
        assert_eq!(eff.fillers("IS-A", Facet::Value), vec![&Filler::concept("MEDICAL-PROCEDURE")]);
        // Inherited from MEDICAL-PROCEDURE and not overridden.
        assert!(eff.has_property("BENEFICIARY"));
        assert_eq!(eff.fillers("LOCATION", Facet::RelaxableTo), vec![&Filler::concept("PLACE")]);
    }

    #[test]
    fn leaf_without_local_slots() {
        let store = ConceptStore::parse("concept ALL\nconcept AA\n  IS-A value ALL\n  COLOR sem red\nconcept BB\n  IS-A value AA\n").unwrap();
        let eff = store.effective_frame("BB").unwrap();
        assert_eq!(eff.slots, vec![Slot::value("IS-A", Filler::concept("AA")), Slot::new("COLOR", Facet::Sem, vec![Filler::literal("red")])]);
    }

    #[test]
    fn diamond_prefers_first_listed_parent() {
        let text = "concept ALL\nconcept LL\n  IS-A value ALL\n  SIZE sem big\nconcept RR\n  IS-A value ALL\n  SIZE sem small\nconcept DD\n  IS-A value LL RR\n";
        let store = ConceptStore::parse(text).unwrap();
        assert_eq!(store.effective_frame("DD").unwrap().fillers("SIZE", Facet::Sem), vec![&Filler::literal("big")]);
        let swapped = text.replace("IS-A value LL RR", "IS-A value RR LL");
        let store = ConceptStore::parse(&swapped).unwrap();
        assert_eq!(store.effective_frame("DD").unwrap().fillers("SIZE", Facet::Sem), vec![&Filler::literal("small")]);
    }

    #[test]
    fn nearer_ancestor_beats_first_listed_farther_one() {
        let text = "concept ALL\n  SIZE sem huge\nconcept LL\n  IS-A value ALL\nconcept RR\n  IS-A value ALL\n  SIZE sem small\nconcept DD\n  IS-A value LL RR\n";
        let store = ConceptStore::parse(text).unwrap();
        assert_eq!(store.effective_frame("DD").unwrap().fillers("SIZE", Facet::Sem), vec![&Filler::literal("small")]);
    }

    #[test]
    fn cycle_rejected() {
        let e = ConceptStore::parse("concept AA\n  IS-A value BB\nconcept BB\n  IS-A value AA\n").unwrap_err();
        assert!(matches!(e, OntologyError::Cycle(_)));
        let base = ConceptStore::parse("concept ALL\nconcept AA\n  IS-A value ALL\n").unwrap();
        assert!(base.with_concept(concept_frame("ALL", "AA", vec![])).is_err());
        assert!(base.is_a("AA", "ALL").unwrap());
    }

    #[test]
    fn unknown_parent_rejected() {
        assert!(matches!(ConceptStore::parse("concept AA\n  IS-A value NOPE\n"), Err(OntologyError::UnknownParent { .. })));
    }

    #[test]
    fn surgery_agent_grades() {
        let store = toy();
        let grade = |c: &str| store.check_filler("SURGERY", "AGENT", &Filler::concept(c)).unwrap().kind;
        assert_eq!(grade("SURGEON"), VerdictKind::MatchesDefault);
        assert_eq!(grade("PHYSICIAN"), VerdictKind::MatchesSem);
        assert_eq!(grade("ROBOT"), VerdictKind::MatchesRelaxable);
        assert_eq!(grade("HUMAN"), VerdictKind::MatchesRelaxable);
        assert_eq!(grade("MEDICAL-BUILDING"), VerdictKind::Violation);
    }

    #[test]
    fn unknown_property_is_distinct_from_violation() {
        let e = toy().check_filler("SURGERY", "COLOR-OF-MOOD", &Filler::concept("HUMAN")).unwrap_err();
        assert!(matches!(e, OntologyError::UnknownProperty { .. }));
    }

    #[test]
    fn value_facet_is_hard() {
        let store = ConceptStore::parse("concept ALL\nconcept AA\n  IS-A value ALL\nconcept BB\n  IS-A value ALL\nconcept EE\n  IS-A value ALL\n  THEME value AA\n  THEME relaxable-to BB\n").unwrap();
        assert_eq!(store.check_filler("EE", "THEME", &Filler::concept("BB")).unwrap().kind, VerdictKind::Violation);
        assert_eq!(store.check_filler("EE", "THEME", &Filler::concept("AA")).unwrap().kind, VerdictKind::MatchesValue);
    }

    #[test]
    fn literals_match_by_equality() {
        let store = toy();
        let v = store.check_filler("BICYCLE", "COLOR", &Filler::literal("blue")).unwrap();
        assert_eq!(v.kind, VerdictKind::MatchesSem);
        let v = store.check_filler("BICYCLE", "COLOR", &Filler::literal("plaid")).unwrap();
        assert_eq!(v.kind, VerdictKind::Violation);
    }

    #[test]
    fn nearest_common_ancestor_of_tools() {
        assert_eq!(toy().nearest_common_ancestor(&["HAMMER", "SCREWDRIVER", "WRENCH"]).as_deref(), Some("TOOL"));
    }
}
