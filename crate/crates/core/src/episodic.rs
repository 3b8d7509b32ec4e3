//! Episodic memory: anchors for remembered instances, interpretation
//! precedents, habit consolidation, collaborator preferences and plan reuse.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kr::{parse_kb, serialize_kb, Block, BlockKind, Facet, Filler, Frame, InstanceRef, KrError, Slot};
use crate::ontology::ConceptStore;
use crate::semantics::{MeaningRep, PrecedentLookup, EPISODIC_MEM, LEX_MAP};
use crate::trace::TraceEvent;

const PRECEDENT: &str = "PRECEDENT";
const STENCIL: &str = "STENCIL";
const PLAN: &str = "PLAN";

/// Slots describing the mention rather than the thing; never copied into
/// memory.
const MENTION_ONLY: &[&str] = &[LEX_MAP, EPISODIC_MEM, "DISCOURSE-STATUS"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EpisodicError {
    Kr(KrError),
    /// A bookkeeping block is missing a slot it needs.
    Malformed { block: String, missing: &'static str },
    InvalidPath { script: String, reason: String },
}

impl fmt::Display for EpisodicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpisodicError::Kr(e) => write!(f, "{}", e),
            EpisodicError::Malformed { block, missing } => write!(f, "memory block {} lacks {}", block, missing),
            EpisodicError::InvalidPath { script, reason } => write!(f, "invalid path through {}: {}", script, reason),
        }
    }
}

impl core::error::Error for EpisodicError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedentRecord {
    pub key: String,
    /// Sorted sense ids of the chosen reading.
    pub senses: Vec<String>,
    /// Shape key of the chosen reading itself.
    pub reading: String,
    pub count: u32,
    pub last_used: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trigger {
    /// The event follows a use of its own theme.
    AfterUse,
    /// The event precedes another event.
    BeforeEvent,
    /// The event is pinned to a clock time.
    AtTime,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::AfterUse => "after-use",
            Trigger::BeforeEvent => "before-event",
            Trigger::AtTime => "at-time",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frequency {
    Always,
    ObservedSoFar,
}

impl Frequency {
    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::Always => "always",
            Frequency::ObservedSoFar => "observed-so-far",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HabitRecord {
    pub agent: InstanceRef,
    pub event: String,
    /// Nearest common ancestor of the supporting themes.
    pub theme: String,
    pub trigger: Trigger,
    pub support: Vec<InstanceRef>,
    pub frequency: Frequency,
}

impl HabitRecord {
    /// The habit as an ontological event template.
    pub fn frame(&self) -> Frame {
        let mut f = Frame::new(Filler::Concept(self.event.clone()));
        f.add_value("AGENT", Filler::Anchor(self.agent.clone()));
        f.slots.push(Slot::new("THEME", Facet::Sem, alloc::vec![Filler::Concept(self.theme.clone())]));
        f.add_value("TRIGGER", Filler::literal(self.trigger.as_str()));
        f.add_value("FREQUENCY", Filler::literal(self.frequency.as_str()));
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanSource {
    Stencil,
    Reused,
    Default,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub script: String,
    pub steps: Vec<Filler>,
    pub source: PlanSource,
    pub trace: Vec<TraceEvent>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanRecord {
    pub script: String,
    pub steps: Vec<Filler>,
    /// Facts that must hold for the plan to be feasible again.
    pub preconditions: Vec<String>,
    pub success: bool,
    pub time: u64,
}

/// Steps of a script frame and which of them may be left out.
pub struct ScriptOptions {
    pub name: String,
    pub steps: Vec<Filler>,
    pub optional: BTreeSet<Filler>,
}

impl ScriptOptions {
    /// Reads `HAS-EVENT-AS-PART` for the steps and `OPTIONAL-PART` for the
    /// branches a traversal may skip.
    pub fn of(script: &Frame) -> Self {
        ScriptOptions {
            name: script.head.to_string(),
            steps: script.all_fillers("HAS-EVENT-AS-PART").into_iter().cloned().collect(),
            optional: script.all_fillers("OPTIONAL-PART").into_iter().cloned().collect(),
        }
    }

    pub fn default_path(&self) -> Vec<Filler> {
        self.steps.iter().filter(|s| !self.optional.contains(s)).cloned().collect()
    }

    pub fn validate(&self, path: &[Filler]) -> Result<(), EpisodicError> {
        let bad = |reason: String| EpisodicError::InvalidPath { script: self.name.clone(), reason };
        let mut seen = BTreeSet::new();
        for p in path {
            if !self.steps.contains(p) {
                return Err(bad(format!("{} is not a step", p)));
            }
            if !seen.insert(p) {
                return Err(bad(format!("{} repeated", p)));
            }
        }
        for s in self.default_path() {
            if !seen.contains(&s) {
                return Err(bad(format!("required step {} missing", s)));
            }
        }
        Ok(())
    }
}

/// Long-term store of anchored instances and learned bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodicStore {
    anchors: BTreeMap<InstanceRef, Frame>,
    /// Least recent first.
    salience: Vec<InstanceRef>,
    next: BTreeMap<String, u32>,
    precedents: BTreeMap<String, PrecedentRecord>,
    stencils: BTreeMap<(InstanceRef, String), Vec<Filler>>,
    plans: Vec<PlanRecord>,
    clock: u64,
}

fn anchor_of(f: &Frame) -> Option<&InstanceRef> {
    match &f.head {
        Filler::Anchor(r) => Some(r),
        _ => None,
    }
}

fn literal_list(f: &Frame, prop: &str) -> Vec<String> {
    f.all_fillers(prop).into_iter().map(|x| x.as_literal().map(|s| s.to_string()).unwrap_or_else(|| x.to_string())).collect()
}

fn number(f: &Frame, prop: &str) -> u64 {
    f.value(prop).and_then(|x| x.as_literal()).and_then(|s| s.parse().ok()).unwrap_or(0)
}

impl EpisodicStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load a memory file of `instance` blocks. Anchors enter the salience
    /// list in file order.
    pub fn parse(text: &str) -> Result<Self, EpisodicError> {
        let mut s = EpisodicStore::new();
        for b in parse_kb(text).map_err(EpisodicError::Kr)? {
            let name = b.name();
            let Some(r) = anchor_of(&b.frame).cloned() else {
                return Err(EpisodicError::Malformed { block: name, missing: "an anchor name" });
            };
            let f = b.frame;
            s.clock = s.clock.max(number(&f, "LAST-USED")).max(number(&f, "TIME"));
            match r.concept.as_str() {
                PRECEDENT => {
                    let key = literal_list(&f, "KEY").pop().ok_or(EpisodicError::Malformed { block: name.clone(), missing: "KEY" })?;
                    let rec = PrecedentRecord {
                        key: key.clone(),
                        senses: literal_list(&f, "SENSES"),
                        reading: literal_list(&f, "READING").pop().unwrap_or_default(),
                        count: number(&f, "COUNT").max(1) as u32,
                        last_used: number(&f, "LAST-USED"),
                    };
                    s.precedents.insert(key, rec);
                }
                STENCIL => {
                    let human = f.value("AGENT").and_then(|x| x.as_anchor()).cloned().ok_or(EpisodicError::Malformed { block: name.clone(), missing: "AGENT" })?;
                    let script = f.value("SCRIPT").map(|x| x.to_string()).ok_or(EpisodicError::Malformed { block: name, missing: "SCRIPT" })?;
                    s.stencils.insert((human, script), f.all_fillers("PATH").into_iter().cloned().collect());
                }
                PLAN => {
                    let script = f.value("SCRIPT").map(|x| x.to_string()).ok_or(EpisodicError::Malformed { block: name, missing: "SCRIPT" })?;
                    s.plans.push(PlanRecord {
                        script,
                        steps: f.all_fillers("STEP").into_iter().cloned().collect(),
                        preconditions: literal_list(&f, "PRECONDITION"),
                        success: f.value("OUTCOME").and_then(|x| x.as_literal()) == Some("success"),
                        time: number(&f, "TIME"),
                    });
                }
                _ => s.insert(f),
            }
            let n = s.next.entry(r.concept.clone()).or_insert(0);
            *n = (*n).max(r.index);
        }
        Ok(s)
    }

    pub fn serialize(&self) -> String {
        let mut blocks: Vec<Block> = Vec::new();
        for r in &self.salience {
            blocks.push(Block::new(BlockKind::Instance, self.anchors[r].clone()));
        }
        let inst = |c: &str, i: usize| Filler::Anchor(InstanceRef::new(c, i as u32 + 1));
        for (i, p) in self.precedents.values().enumerate() {
            let mut f = Frame::new(inst(PRECEDENT, i));
            f.add_value("KEY", Filler::literal(p.key.clone()));
            f.slots.push(Slot::new("SENSES", Facet::Value, p.senses.iter().map(|s| Filler::literal(s.clone())).collect()));
            f.add_value("READING", Filler::literal(p.reading.clone()));
            f.add_value("COUNT", Filler::literal(p.count.to_string()));
            f.add_value("LAST-USED", Filler::literal(p.last_used.to_string()));
            blocks.push(Block::new(BlockKind::Instance, f));
        }
        for (i, ((h, script), path)) in self.stencils.iter().enumerate() {
            let mut f = Frame::new(inst(STENCIL, i));
            f.add_value("AGENT", Filler::Anchor(h.clone()));
            f.add_value("SCRIPT", Filler::Concept(script.clone()));
            f.slots.push(Slot::new("PATH", Facet::Value, path.clone()));
            blocks.push(Block::new(BlockKind::Instance, f));
        }
        for (i, p) in self.plans.iter().enumerate() {
            let mut f = Frame::new(inst(PLAN, i));
            f.add_value("SCRIPT", Filler::Concept(p.script.clone()));
            f.slots.push(Slot::new("STEP", Facet::Value, p.steps.clone()));
            if !p.preconditions.is_empty() {
                f.slots.push(Slot::new("PRECONDITION", Facet::Value, p.preconditions.iter().map(|s| Filler::literal(s.clone())).collect()));
            }
            f.add_value("OUTCOME", Filler::literal(if p.success { "success" } else { "failure" }));
            f.add_value("TIME", Filler::literal(p.time.to_string()));
            blocks.push(Block::new(BlockKind::Instance, f));
        }
        serialize_kb(&blocks)
    }

    /// Add or replace an anchor frame and make it the most salient.
    pub fn insert(&mut self, frame: Frame) {
        let Some(r) = anchor_of(&frame).cloned() else { return };
        let n = self.next.entry(r.concept.clone()).or_insert(0);
        *n = (*n).max(r.index);
        self.anchors.insert(r.clone(), frame);
        self.touch(&r);
    }

    fn touch(&mut self, r: &InstanceRef) {
        self.salience.retain(|x| x != r);
        self.salience.push(r.clone());
    }

    pub fn get(&self, r: &InstanceRef) -> Option<&Frame> {
        self.anchors.get(r)
    }

    pub fn anchors(&self) -> impl Iterator<Item = &Frame> {
        self.salience.iter().map(move |r| &self.anchors[r])
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Least recent first.
    pub fn salience(&self) -> &[InstanceRef] {
        &self.salience
    }

    /// A fresh anchor name; indices are never handed out twice.
    pub fn mint(&mut self, concept: &str) -> InstanceRef {
        let n = self.next.entry(concept.to_string()).or_insert(0);
        *n += 1;
        InstanceRef::new(concept, *n)
    }

    /// The most recently mentioned anchor at or below `concept`.
    pub fn most_salient(&self, ont: &ConceptStore, concept: &str) -> Option<&InstanceRef> {
        self.salience.iter().rev().find(|r| r.concept == concept || ont.subsumes(concept, &r.concept))
    }

    fn find_named(&self, ont: &ConceptStore, concept: &str, name: &Filler) -> Option<InstanceRef> {
        self.salience
            .iter()
            .rev()
            .find(|r| (r.concept == concept || ont.subsumes(concept, &r.concept)) && self.anchors[*r].value("HAS-NAME") == Some(name))
            .cloned()
    }

    fn find_role(&self, role: &Filler) -> Option<InstanceRef> {
        self.salience.iter().rev().find(|r| self.anchors[*r].value("DISCOURSE-ROLE") == Some(role)).cloned()
    }

    /// Ground every instance of `mr` in memory by adding an `episodic-mem`
    /// filler. Named things match by name, speaker and addressee by role,
    /// new things are minted, and other objects take the most salient
    /// compatible anchor. Events and properties are always new.
    pub fn anchor(&mut self, mr: &MeaningRep, ont: &ConceptStore) -> MeaningRep {
        self.anchor_explained(mr, ont).0
    }

    pub fn anchor_explained(&mut self, mr: &MeaningRep, ont: &ConceptStore) -> (MeaningRep, TraceEvent) {
        let mut out = mr.clone();
        let mut ev = TraceEvent::new("anchor", mr.head.to_string(), String::new());
        let mut map: BTreeMap<Filler, InstanceRef> = BTreeMap::new();
        let mut minted: BTreeSet<InstanceRef> = BTreeSet::new();
        for f in &mr.frames {
            if f.value(EPISODIC_MEM).is_some() {
                continue;
            }
            let Some(r) = f.head.as_local() else { continue };
            let c = r.concept.as_str();
            let is_object = ont.subsumes("OBJECT", c) || !ont.contains(c);
            let status = f.value("DISCOURSE-STATUS").and_then(|x| x.as_literal());
            let found = if let Some(name) = f.value("HAS-NAME") {
                self.find_named(ont, c, name).map(|a| (a, format!("name {}", name)))
            } else if let Some(role) = f.value("DISCOURSE-ROLE") {
                self.find_role(role).map(|a| (a, format!("role {}", role)))
            } else if is_object && status != Some("new") {
                // Anchors minted for this same MR are not antecedents.
                self.salience
                    .iter()
                    .rev()
                    .filter(|a| !minted.contains(*a))
                    .find(|a| a.concept == c || ont.subsumes(c, &a.concept))
                    .cloned()
                    .map(|a| (a, String::from("most salient compatible anchor")))
            } else {
                None
            };
            let a = match found {
                Some((a, why)) => {
                    ev = ev.cite(format!("{} -> {} ({})", f.head, Filler::Anchor(a.clone()), why));
                    a
                }
                None => {
                    let a = self.mint(c);
                    ev = ev.cite(format!("{} -> {} (minted)", f.head, Filler::Anchor(a.clone())));
                    minted.insert(a.clone());
                    a
                }
            };
            map.insert(f.head.clone(), a);
        }
        if map.is_empty() {
            ev.decision = "already anchored".into();
            return (out, ev);
        }
        let ground = |x: &Filler| map.get(x).map(|a| Filler::Anchor(a.clone())).unwrap_or_else(|| x.clone());
        for f in &mut out.frames {
            let Some(a) = map.get(&f.head).cloned() else { continue };
            let mut stored = Frame::new(Filler::Anchor(a.clone()));
            for s in &f.slots {
                if MENTION_ONLY.contains(&s.property.as_str()) {
                    continue;
                }
                stored.slots.push(Slot::new(s.property.clone(), s.facet, s.fillers.iter().map(ground).collect()));
            }
            match self.anchors.get_mut(&a) {
                Some(existing) => {
                    for s in stored.slots {
                        if !existing.has_property(&s.property) {
                            existing.slots.push(s);
                        }
                    }
                }
                None => {
                    self.anchors.insert(a.clone(), stored);
                }
            }
            self.touch(&a);
            f.add_value(EPISODIC_MEM, Filler::Anchor(a));
        }
        ev.decision = format!("{} instance(s) grounded, {} new anchor(s)", map.len(), minted.len());
        (out, ev)
    }

    /// Upsert the interpretation chosen for `key`.
    pub fn record_precedent(&mut self, key: &str, chosen: &MeaningRep) {
        self.clock += 1;
        let clock = self.clock;
        let rec = self.precedents.entry(key.to_string()).or_insert_with(|| PrecedentRecord {
            key: key.to_string(),
            senses: Vec::new(),
            reading: String::new(),
            count: 0,
            last_used: 0,
        });
        rec.senses = chosen.senses.clone();
        rec.reading = chosen.shape_key();
        rec.count += 1;
        rec.last_used = clock;
    }

    pub fn recall_precedent(&self, key: &str) -> Option<&PrecedentRecord> {
        self.precedents.get(key)
    }

    pub fn precedents(&self) -> impl Iterator<Item = &PrecedentRecord> {
        self.precedents.values()
    }

    pub fn clear_precedents(&mut self) {
        self.precedents.clear();
    }

    /// Event anchors grouped by agent, concept and trigger; a group with at
    /// least `min_count` members whose themes generalize below the root
    /// yields one habit.
    pub fn identify_habits(&self, ont: &ConceptStore, min_count: usize) -> Vec<HabitRecord> {
        let mut groups: BTreeMap<(InstanceRef, String, Trigger), Vec<InstanceRef>> = BTreeMap::new();
        let mut totals: BTreeMap<(InstanceRef, String), usize> = BTreeMap::new();
        for r in &self.salience {
            let f = &self.anchors[r];
            if !ont.subsumes("EVENT", &r.concept) {
                continue;
            }
            let Some(agent) = f.value("AGENT").and_then(|x| x.as_anchor()).cloned() else { continue };
            *totals.entry((agent.clone(), r.concept.clone())).or_insert(0) += 1;
            for t in self.triggers(ont, f) {
                groups.entry((agent.clone(), r.concept.clone(), t)).or_default().push(r.clone());
            }
        }
        let mut out = Vec::new();
        for ((agent, event, trigger), mut support) in groups {
            if support.len() < min_count.max(1) {
                continue;
            }
            support.sort();
            let themes: Vec<&str> = support
                .iter()
                .filter_map(|e| self.anchors[e].value("THEME"))
                .filter_map(|t| t.concept_name())
                .collect();
            if themes.len() != support.len() {
                continue;
            }
            let Some(theme) = ont.nearest_common_ancestor(&themes) else { continue };
            if theme == "ALL" {
                continue;
            }
            let frequency = if totals[&(agent.clone(), event.clone())] == support.len() { Frequency::Always } else { Frequency::ObservedSoFar };
            out.push(HabitRecord { agent, event, theme, trigger, support, frequency });
        }
        out
    }

    /// Trigger relations an event anchor satisfies.
    pub fn triggers(&self, ont: &ConceptStore, f: &Frame) -> Vec<Trigger> {
        let mut out = Vec::new();
        let theme = f.value("THEME");
        let after_use = f.all_fillers("AFTER").into_iter().any(|x| {
            let Some(a) = x.as_anchor() else { return false };
            ont.subsumes("USE", &a.concept) && self.anchors.get(a).and_then(|u| u.value("THEME")) == theme && theme.is_some()
        });
        if after_use {
            out.push(Trigger::AfterUse);
        }
        if f.all_fillers("BEFORE").into_iter().any(|x| x.as_anchor().map(|a| ont.subsumes("EVENT", &a.concept)).unwrap_or(false)) {
            out.push(Trigger::BeforeEvent);
        }
        if f.value("TIME").map(|x| x.as_literal().is_some()).unwrap_or(false) {
            out.push(Trigger::AtTime);
        }
        out
    }

    pub fn record_preference(&mut self, human: &InstanceRef, script: &Frame, path: Vec<Filler>) -> Result<(), EpisodicError> {
        let opts = ScriptOptions::of(script);
        opts.validate(&path)?;
        self.stencils.insert((human.clone(), opts.name), path);
        Ok(())
    }

    pub fn stencil(&self, human: &InstanceRef, script: &str) -> Option<&Vec<Filler>> {
        self.stencils.get(&(human.clone(), script.to_string()))
    }

    /// The human's own path through the script when one is stored and
    /// still valid, else the ordinary plan.
    pub fn plan_with_preference(&self, human: &InstanceRef, script: &Frame, context: &BTreeSet<String>) -> Result<Plan, EpisodicError> {
        let opts = ScriptOptions::of(script);
        match self.stencil(human, &opts.name) {
            Some(path) => {
                opts.validate(path)?;
                let ev = TraceEvent::new("plan", &opts.name, format!("stencil of {}", Filler::Anchor(human.clone()))).cite(STENCIL);
                Ok(Plan { script: opts.name, steps: path.clone(), source: PlanSource::Stencil, trace: alloc::vec![ev] })
            }
            None => {
                let mut p = self.instantiate_plan(script, context);
                p.trace.insert(0, TraceEvent::new("plan", &opts.name, "no stencil").reject(format!("stencil of {}", Filler::Anchor(human.clone())), "none stored"));
                Ok(p)
            }
        }
    }

    pub fn record_plan(&mut self, script: &str, steps: Vec<Filler>, preconditions: Vec<String>, success: bool) {
        self.clock += 1;
        self.plans.push(PlanRecord { script: script.to_string(), steps, preconditions, success, time: self.clock });
    }

    /// Copy the last plan that worked for this script if its preconditions
    /// hold in `context`; otherwise traverse the script's default branches.
    pub fn instantiate_plan(&self, script: &Frame, context: &BTreeSet<String>) -> Plan {
        let opts = ScriptOptions::of(script);
        let last = self.plans.iter().filter(|p| p.script == opts.name && p.success).max_by_key(|p| p.time);
        let mut ev = TraceEvent::new("plan", &opts.name, String::new());
        if let Some(p) = last {
            let missing: Vec<&String> = p.preconditions.iter().filter(|c| !context.contains(*c)).collect();
            if missing.is_empty() {
                ev.decision = format!("reuse plan recorded at {}", p.time);
                return Plan { script: opts.name, steps: p.steps.clone(), source: PlanSource::Reused, trace: alloc::vec![ev] };
            }
            let why: Vec<&str> = missing.iter().map(|s| s.as_str()).collect();
            ev = ev.reject(format!("plan recorded at {}", p.time), format!("infeasible: {} does not hold", why.join(", ")));
        }
        ev.decision = "default traversal".into();
        Plan { steps: opts.default_path(), script: opts.name, source: PlanSource::Default, trace: alloc::vec![ev] }
    }
}

impl PrecedentLookup for EpisodicStore {
    fn recall_selection(&self, key: &str) -> Option<Vec<String>> {
        self.precedents.get(key).map(|p| p.senses.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::semantics::{analyze_sentence, AnalyzeOptions};

    fn tony() -> MeaningRep {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        analyze_sentence("Tony was watching a tiger.", &lex, &ont, &AnalyzeOptions::default()).unwrap().readings.remove(0)
    }

    fn preloaded() -> EpisodicStore {
        EpisodicStore::parse("instance HUMAN-#17\n  HAS-NAME value Tony\n\ninstance VOLUNTARY-VISUAL-EVENT-#8\n  AGENT value HUMAN-#17\n").unwrap()
    }

    fn mem_of<'a>(m: &'a MeaningRep, concept: &str) -> &'a Filler {
        m.frames.iter().find(|f| f.head.concept_name() == Some(concept)).and_then(|f| f.value(EPISODIC_MEM)).unwrap()
    }

    #[test]
    fn tony_grounds_by_name_and_tiger_is_minted() {
        let ont = bundled::ontology();
        let mut s = preloaded();
        let m = s.anchor(&tony(), &ont);
        assert_eq!(mem_of(&m, "HUMAN").to_string(), "HUMAN-#17");
        assert_eq!(mem_of(&m, "TIGER").to_string(), "TIGER-#1");
        assert_eq!(mem_of(&m, "VOLUNTARY-VISUAL-EVENT").to_string(), "VOLUNTARY-VISUAL-EVENT-#9");
        let stored = s.get(&InstanceRef::new("VOLUNTARY-VISUAL-EVENT", 9)).unwrap();
        assert_eq!(stored.value("THEME").unwrap().to_string(), "TIGER-#1");
    }

    #[test]
    fn anchoring_twice_changes_nothing() {
        let ont = bundled::ontology();
        let mut s = preloaded();
        let once = s.anchor(&tony(), &ont);
        let before = s.clone();
        assert_eq!(s.anchor(&once, &ont), once);
        assert_eq!(s, before);
    }

    #[test]
    fn definite_takes_most_salient_compatible() {
        let ont = bundled::ontology();
        let mut s = EpisodicStore::parse("instance SURGEON-#3\n\ninstance HUMAN-#2\n\ninstance SURGEON-#14\n\ninstance DOG-#1\n").unwrap();
        assert_eq!(s.most_salient(&ont, "SURGEON"), Some(&InstanceRef::new("SURGEON", 14)));
        assert_eq!(s.most_salient(&ont, "HUMAN"), Some(&InstanceRef::new("SURGEON", 14)));
        let mut f = Frame::new(Filler::Local(InstanceRef::new("SURGEON", 1)));
        f.add_value("DISCOURSE-STATUS", Filler::literal("given"));
        let m = s.anchor(&MeaningRep::from_frames(alloc::vec![f]).unwrap(), &ont);
        assert_eq!(m.frames[0].value(EPISODIC_MEM).unwrap().to_string(), "SURGEON-#14");
    }

    #[test]
    fn indices_never_reused() {
        let mut s = EpisodicStore::parse("instance TIGER-#4\n").unwrap();
        assert_eq!(s.mint("TIGER").index, 5);
        assert_eq!(s.mint("TIGER").index, 6);
        assert_eq!(s.mint("DOG").index, 1);
    }

    #[test]
    fn precedent_record_and_recall() {
        let mut s = EpisodicStore::new();
        assert!(s.recall_precedent("K").is_none());
        let m = tony();
        s.record_precedent("K", &m);
        assert_eq!(s.recall_precedent("K").unwrap().count, 1);
        s.record_precedent("K", &m);
        let r = s.recall_precedent("K").unwrap();
        assert_eq!((r.count, r.senses.clone()), (2, m.senses.clone()));
        let back = EpisodicStore::parse(&s.serialize()).unwrap();
        assert_eq!(back.recall_precedent("K"), s.recall_precedent("K"));
    }

    #[test]
    fn memory_file_round_trips() {
        let ont = bundled::ontology();
        let mut s = preloaded();
        s.anchor(&tony(), &ont);
        s.record_plan("FILL-GAS-TANK", alloc::vec![Filler::Local(InstanceRef::new("REMOVE", 1))], alloc::vec!["fuel-low".into()], true);
        let text = s.serialize();
        let back = EpisodicStore::parse(&text).unwrap();
        assert_eq!(back.serialize(), text);
        assert_eq!(back.salience(), s.salience());
    }
}
