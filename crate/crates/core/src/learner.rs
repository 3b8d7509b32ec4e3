//! Script learning from canonical instruction text: detect what is being
//! taught, assemble its subevents with shared participants, find lacunae,
//! ask about them and store the result as an ontological script.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::generator::{describe_back as describe_procedure, realize_phrase, GenError, PhraseForm, Procedure, ShapeRegistry};
use crate::kr::{canonical_concept, frame_from_node, frame_to_node, frames_equal_modulo_indices, is_concept_token, parse_kb, Block, BlockKind, Filler, Frame, InstanceRef, KrError, Section, Slot};
use crate::lexicon::{skeleton_sense, LexError, LexSense, Lexicon};
use crate::ontology::{concept_frame, ConceptStore, OntologyError};
use crate::semantics::{analyze, AnalyzeError, AnalyzeOptions, MeaningRep, EPISODIC_MEM, LEX_MAP};
use crate::syntax::analyze_words;
use crate::syntax::token::{sentences, tokenize};
use crate::trace::TraceEvent;

/// Concept of the generic performer of a learned script.
pub const PERFORMER: &str = "HUMAN-OR-AGENT";

/// Mention-level slots that do not belong in a script.
const MENTION_ONLY: &[&str] = &[LEX_MAP, EPISODIC_MEM, "DISCOURSE-STATUS", "DISCOURSE-ROLE", "SEQUENCE-MARKER", "CONJOINED-WITH", "ORDER-CERTAINTY", "TIME", "ASPECT"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OrderCertainty {
    Firm,
    Ambiguous,
    Unordered,
}

impl OrderCertainty {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderCertainty::Firm => "firm",
            OrderCertainty::Ambiguous => "ambiguous",
            OrderCertainty::Unordered => "unordered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "firm" => OrderCertainty::Firm,
            "ambiguous" => OrderCertainty::Ambiguous,
            "unordered" => OrderCertainty::Unordered,
            _ => return None,
        })
    }
}

/// The complex event a text teaches.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningTarget {
    pub sentence: usize,
    pub event: Filler,
    pub concept: String,
    pub theme: Option<Filler>,
    /// "Doing X requires doing Y": the prerequisite event.
    pub prerequisite: Option<Filler>,
}

/// Find the canonical cue: "Here's how you X" or "X requires Y".
pub fn detect_learnable(mrs: &[MeaningRep]) -> Option<LearningTarget> {
    for (i, m) in mrs.iter().enumerate() {
        let Some(h) = m.head_frame() else { continue };
        let (event, prerequisite) = match m.head.concept_name() {
            Some("DESCRIBE-PROCEDURE") => (h.value("THEME"), None),
            Some("REQUIRE") => (h.value("THEME"), h.value("PRECONDITION").cloned()),
            _ => continue,
        };
        let Some(e) = event.filter(|e| m.frame(e).is_some()) else { continue };
        return Some(LearningTarget {
            sentence: i,
            event: e.clone(),
            concept: e.concept_name().unwrap_or_default().to_string(),
            theme: m.frame(e).and_then(|f| f.value("THEME")).cloned(),
            prerequisite,
        });
    }
    None
}

/// A learned complex event: its top-level frame plus the frames of its
/// subevents, participants and conditions, all with script-local indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ScriptFrame {
    pub name: String,
    pub parent: Option<String>,
    /// The event concept whose way of doing is taught.
    pub head_concept: String,
    pub agent: Filler,
    pub theme: Option<Filler>,
    pub caused_by: Option<Filler>,
    pub effect: Option<Filler>,
    pub precondition: Option<Filler>,
    pub steps: Vec<Filler>,
    /// Certainty of the order of steps i and i+1.
    pub order: Vec<OrderCertainty>,
    pub frames: Vec<Frame>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScriptError {
    Kr(KrError),
    Malformed(String),
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptError::Kr(e) => write!(f, "{}", e),
            ScriptError::Malformed(m) => write!(f, "malformed script: {}", m),
        }
    }
}

impl core::error::Error for ScriptError {}

impl ScriptFrame {
    pub fn frame(&self, x: &Filler) -> Option<&Frame> {
        self.frames.iter().find(|f| &f.head == x)
    }

    pub fn top_frame(&self) -> Frame {
        let mut f = Frame::new(Filler::concept(&self.name));
        if let Some(p) = &self.parent {
            f.slots.push(Slot::value("IS-A", Filler::concept(p)));
        }
        f.slots.push(Slot::value("HEAD-EVENT", Filler::concept(&self.head_concept)));
        f.slots.push(Slot::value("AGENT", self.agent.clone()));
        for (p, v) in [("THEME", &self.theme), ("CAUSED-BY", &self.caused_by), ("EFFECT", &self.effect), ("PRECONDITION", &self.precondition)] {
            if let Some(v) = v {
                f.slots.push(Slot::value(p, v.clone()));
            }
        }
        f.slots.push(Slot::new("HAS-EVENT-AS-PART", crate::kr::Facet::Value, self.steps.clone()));
        if !self.order.is_empty() {
            f.slots.push(Slot::new("ORDER-CERTAINTY", crate::kr::Facet::Value, self.order.iter().map(|o| Filler::literal(o.as_str())).collect()));
        }
        f
    }

    pub fn to_block(&self) -> Block {
        let mut b = Block::new(BlockKind::Script, self.top_frame());
        b.sections.push(Section { name: "frames".into(), nodes: self.frames.iter().map(frame_to_node).collect() });
        b
    }

    pub fn from_block(b: &Block) -> Result<Self, ScriptError> {
        let top = &b.frame;
        let bad = |m: &str| ScriptError::Malformed(format!("{}: {}", b.name(), m));
        let mut frames = Vec::new();
        for n in b.section("frames").map(|s| s.nodes.as_slice()).unwrap_or(&[]) {
            frames.push(frame_from_node(n).map_err(|kind| ScriptError::Kr(KrError { line: 0, kind }))?);
        }
        let order = top
            .all_fillers("ORDER-CERTAINTY")
            .into_iter()
            .map(|o| o.as_literal().and_then(OrderCertainty::parse).ok_or_else(|| bad("bad ORDER-CERTAINTY")))
            .collect::<Result<Vec<_>, _>>()?;
        let s = ScriptFrame {
            name: b.name(),
            parent: top.value("IS-A").and_then(|p| p.concept_name()).map(|p| p.to_string()),
            head_concept: top.value("HEAD-EVENT").and_then(|p| p.concept_name()).ok_or_else(|| bad("no HEAD-EVENT"))?.to_string(),
            agent: top.value("AGENT").cloned().ok_or_else(|| bad("no AGENT"))?,
            theme: top.value("THEME").cloned(),
            caused_by: top.value("CAUSED-BY").cloned(),
            effect: top.value("EFFECT").cloned(),
            precondition: top.value("PRECONDITION").cloned(),
            steps: top.all_fillers("HAS-EVENT-AS-PART").into_iter().cloned().collect(),
            order,
            frames,
        };
        s.check_shape().map_err(|m| bad(&m))?;
        Ok(s)
    }

    fn check_shape(&self) -> Result<(), String> {
        if self.steps.is_empty() {
            return Err("no subevents".into());
        }
        if self.order.len() + 1 != self.steps.len() {
            return Err(format!("{} order flags for {} steps", self.order.len(), self.steps.len()));
        }
        for f in &self.frames {
            for s in &f.slots {
                for v in &s.fillers {
                    if v.is_instance() && self.frame(v).is_none() {
                        return Err(format!("{} {} has no frame", s.property, v));
                    }
                }
            }
        }
        for x in self.steps.iter().chain([&self.agent]).chain(self.theme.iter()).chain(self.caused_by.iter()).chain(self.effect.iter()) {
            if self.frame(x).is_none() {
                return Err(format!("{} has no frame", x));
            }
        }
        Ok(())
    }

    /// Problems that keep the script out of the ontology.
    pub fn validate(&self, ont: &ConceptStore) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.check_shape() {
            out.push(e);
        }
        match &self.parent {
            None => out.push("no parent".into()),
            Some(p) if !ont.contains(p) => out.push(format!("parent {} is not in the ontology", p)),
            _ => {}
        }
        for f in &self.frames {
            let c = f.head.concept_name().unwrap_or_default();
            if !ont.contains(c) && c != self.head_concept {
                out.push(format!("{} is not typed by a known concept", f.head));
            }
        }
        out
    }

    /// Participants filling roles in more than one frame, with those roles.
    pub fn coreferences(&self) -> BTreeMap<Filler, Vec<(Filler, String)>> {
        let mut m: BTreeMap<Filler, Vec<(Filler, String)>> = BTreeMap::new();
        for f in &self.frames {
            for s in &f.slots {
                for v in s.fillers.iter().filter(|v| v.is_instance()) {
                    m.entry(v.clone()).or_default().push((f.head.clone(), s.property.clone()));
                }
            }
        }
        m.retain(|_, v| v.iter().map(|(h, _)| h).collect::<BTreeSet<_>>().len() > 1);
        m
    }

    /// Same script up to a renaming of instance indices.
    pub fn equivalent(&self, other: &ScriptFrame) -> bool {
        let all = |s: &ScriptFrame| {
            let mut v = alloc::vec![s.top_frame()];
            v.extend(s.frames.iter().cloned());
            v
        };
        self.name == other.name && self.parent == other.parent && frames_equal_modulo_indices(&all(self), &all(other)).is_some()
    }

    fn is_object(&self, x: &Filler, ont: &ConceptStore) -> bool {
        let c = x.concept_name().unwrap_or_default();
        x != &self.agent && !ont.subsumes("EVENT", c) && !ont.subsumes("PROPERTY", c) && c != self.head_concept
    }

    /// Frames reachable from `roots`, made ready for generation: the
    /// performer is the addressee, objects carry `status`.
    fn mention(&self, roots: &[Filler], extra: Vec<Frame>, status: Option<(&Filler, &str)>, default_status: Option<&str>, ont: &ConceptStore) -> MeaningRep {
        let mut frames: Vec<Frame> = extra;
        let mut todo: VecDeque<Filler> = roots.iter().cloned().collect();
        for f in &frames {
            for s in &f.slots {
                todo.extend(s.fillers.iter().filter(|v| v.is_instance()).cloned());
            }
        }
        let mut seen: BTreeSet<Filler> = frames.iter().map(|f| f.head.clone()).collect();
        while let Some(x) = todo.pop_front() {
            if !seen.insert(x.clone()) {
                continue;
            }
            let Some(f) = self.frame(&x) else { continue };
            let mut g = f.clone();
            for s in &f.slots {
                todo.extend(s.fillers.iter().filter(|v| v.is_instance()).cloned());
            }
            if x == self.agent {
                g.slots.push(Slot::value("DISCOURSE-ROLE", Filler::literal("addressee")));
            } else if self.is_object(&x, ont) && g.value("HAS-NAME").is_none() {
                let st = match status {
                    Some((t, s)) if *t == x => Some(s),
                    _ => default_status,
                };
                if let Some(st) = st {
                    g.slots.push(Slot::value("DISCOURSE-STATUS", Filler::literal(st)));
                }
            }
            frames.push(g);
        }
        let mut m = MeaningRep::from_frames(frames).expect("non-empty");
        m.head = m.frames[0].head.clone();
        m
    }

    /// MR of one subevent, participants definite.
    pub fn step_mr(&self, i: usize, ont: &ConceptStore) -> MeaningRep {
        let step = self.steps[i].clone();
        let def = if self.precondition.is_some() { "generic" } else { "given" };
        self.mention(&[step], Vec::new(), None, Some(def), ont)
    }

    /// The taught event itself: performer AGENT, script THEME.
    fn head_event(&self, with_agent: bool) -> Frame {
        let mut ev = Frame::new(Filler::Local(InstanceRef::new(self.head_concept.clone(), 1)));
        if with_agent {
            ev.slots.push(Slot::value("AGENT", self.agent.clone()));
        }
        if let Some(t) = &self.theme {
            ev.slots.push(Slot::value("THEME", t.clone()));
        }
        ev
    }

    /// "Here's how you X", or "X requires Y" for a prerequisite script.
    pub fn goal_mr(&self, ont: &ConceptStore) -> MeaningRep {
        if let Some(p) = &self.precondition {
            let ev = self.head_event(false);
            let mut req = Frame::new(Filler::Local(InstanceRef::new("REQUIRE", 1)));
            req.slots.push(Slot::value("THEME", ev.head.clone()));
            req.slots.push(Slot::value("PRECONDITION", p.clone()));
            return self.mention(&[], alloc::vec![req, ev], None, Some("generic"), ont);
        }
        let ev = self.head_event(true);
        let mut d = Frame::new(Filler::Local(InstanceRef::new("DESCRIBE-PROCEDURE", 1)));
        d.slots.push(Slot::value("THEME", ev.head.clone()));
        self.mention(&[], alloc::vec![d, ev], self.theme.as_ref().map(|t| (t, "new")), Some("given"), ont)
    }

    /// "You X because Y", when the script records why it is done.
    pub fn reason_mr(&self, ont: &ConceptStore) -> Option<MeaningRep> {
        let cb = self.caused_by.clone()?;
        let mut ev = self.head_event(true);
        ev.slots.push(Slot::value("CAUSED-BY", cb));
        Some(self.mention(&[], alloc::vec![ev], self.theme.as_ref().map(|t| (t, "new")), Some("given"), ont))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LacunaKind {
    MissingParent,
    AmbiguousOrder,
    UnknownTerm,
}

impl LacunaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LacunaKind::MissingParent => "missing-parent",
            LacunaKind::AmbiguousOrder => "ambiguous-order",
            LacunaKind::UnknownTerm => "unknown-term",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "missing-parent" => LacunaKind::MissingParent,
            "ambiguous-order" => LacunaKind::AmbiguousOrder,
            "unknown-term" => LacunaKind::UnknownTerm,
            _ => return None,
        })
    }

    /// A script cannot be stored while one of these is open.
    pub fn mandatory(self) -> bool {
        !matches!(self, LacunaKind::AmbiguousOrder)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lacuna {
    pub kind: LacunaKind,
    pub locus: String,
    /// For ambiguous order: the first step of the adjacent pair.
    pub pair: Option<usize>,
    pub candidates: Vec<String>,
    /// For unknown terms: the syntactic class the parse suggests.
    pub hint: Option<String>,
}

impl fmt::Display for Lacuna {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind.as_str(), self.locus)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LearnError {
    Analyze(AnalyzeError),
    NothingToLearn,
    NoSubevents,
    Generate(GenError),
    Ontology(OntologyError),
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::Analyze(e) => write!(f, "{}", e),
            LearnError::NothingToLearn => f.write_str("the text does not present anything to learn"),
            LearnError::NoSubevents => f.write_str("no subevents recovered"),
            LearnError::Generate(e) => write!(f, "{}", e),
            LearnError::Ontology(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for LearnError {}

impl From<GenError> for LearnError {
    fn from(e: GenError) -> Self {
        LearnError::Generate(e)
    }
}

struct Assembler<'a> {
    ont: &'a ConceptStore,
    counters: BTreeMap<String, u32>,
    map: BTreeMap<(usize, Filler), Filler>,
    frames: Vec<Frame>,
    /// Object participants in order of first mention.
    participants: Vec<Filler>,
    agent: Filler,
    prev_step: Option<Filler>,
    notes: Vec<String>,
}

impl<'a> Assembler<'a> {
    fn mint(&mut self, concept: &str) -> Filler {
        let n = self.counters.entry(concept.to_string()).or_insert(0);
        *n += 1;
        Filler::Anchor(InstanceRef::new(concept, *n))
    }

    fn is_a(&self, x: &Filler, c: &str) -> bool {
        x.concept_name().map(|k| k == c || self.ont.subsumes(c, k)).unwrap_or(false)
    }

    fn name_of(&self, x: &Filler) -> Option<&Filler> {
        self.frames.iter().find(|f| &f.head == x).and_then(|f| f.value("HAS-NAME"))
    }

    /// Earlier participant this mention corefers with, if any.
    fn corefer(&mut self, f: &Frame, role: Option<&str>) -> Option<Filler> {
        let c = f.head.concept_name().unwrap_or_default();
        if let Some(n) = f.value("HAS-NAME") {
            return self.participants.iter().find(|p| self.name_of(p) == Some(n)).cloned();
        }
        let pronoun = f.slots.is_empty();
        if pronoun {
            let prev = self.prev_step.clone()?;
            let pf = self.frames.iter().find(|g| g.head == prev)?;
            let cands: Vec<(String, Filler)> = pf
                .slots
                .iter()
                .flat_map(|s| s.fillers.iter().map(move |v| (s.property.clone(), v.clone())))
                .filter(|(_, v)| self.participants.contains(v) && self.is_a(v, c))
                .collect();
            if let Some((_, v)) = cands.iter().find(|(r, _)| Some(r.as_str()) == role) {
                return Some(v.clone());
            }
            if cands.len() > 1 {
                self.notes.push(format!("pronoun {} has {} candidates; took the first", f.head, cands.len()));
            }
            return cands.first().map(|(_, v)| v.clone());
        }
        if f.value("DISCOURSE-STATUS").and_then(|s| s.as_literal()) == Some("given") {
            return self.participants.iter().rev().find(|p| p.concept_name() == Some(c)).cloned();
        }
        None
    }

    fn rename(&mut self, s: usize, mr: &MeaningRep, x: &Filler, role: Option<&str>) -> Filler {
        if let Some(y) = self.map.get(&(s, x.clone())) {
            return y.clone();
        }
        let Some(f) = mr.frame(x).filter(|_| x.is_instance()) else { return x.clone() };
        let role_lit = f.value("DISCOURSE-ROLE").and_then(|r| r.as_literal());
        let event_like = self.is_a(x, "EVENT") || self.is_a(x, "PROPERTY");
        let (y, fresh) = if role_lit == Some("addressee") {
            (self.agent.clone(), false)
        } else if event_like {
            (self.mint(x.concept_name().unwrap_or_default()), true)
        } else {
            match self.corefer(f, role) {
                Some(p) => (p, false),
                None => (self.mint(x.concept_name().unwrap_or_default()), true),
            }
        };
        self.map.insert((s, x.clone()), y.clone());
        if fresh {
            let idx = self.frames.len();
            self.frames.push(Frame::new(y.clone()));
            let mut slots = Vec::new();
            for sl in &f.slots {
                if MENTION_ONLY.contains(&sl.property.as_str()) {
                    continue;
                }
                let fillers = sl.fillers.iter().map(|v| self.rename(s, mr, v, Some(&sl.property))).collect();
                slots.push(Slot::new(sl.property.clone(), sl.facet, fillers));
            }
            self.frames[idx].slots = slots;
            if !event_like {
                self.participants.push(y.clone());
            }
        }
        y
    }
}

fn script_name(head: &str, theme: Option<&str>, ont: &ConceptStore) -> String {
    let base = match theme {
        Some(t) => format!("{}-{}", head, t),
        None => head.to_string(),
    };
    let mut name = base.clone();
    let mut n = 2;
    while ont.contains(&name) {
        name = format!("{}-{}", base, n);
        n += 1;
    }
    name
}

/// Build the script frame for `target` from the analyzed sentences.
pub fn assemble_script(target: &LearningTarget, mrs: &[MeaningRep], ont: &ConceptStore) -> Result<(ScriptFrame, Vec<Lacuna>, Vec<String>), LearnError> {
    let mut a = Assembler {
        ont,
        counters: BTreeMap::new(),
        map: BTreeMap::new(),
        frames: Vec::new(),
        participants: Vec::new(),
        agent: Filler::Anchor(InstanceRef::new(PERFORMER, 1)),
        prev_step: None,
        notes: Vec::new(),
    };
    a.counters.insert(PERFORMER.into(), 1);
    a.frames.push(Frame::new(a.agent.clone()));
    let s0 = target.sentence;
    let m0 = &mrs[s0];
    let theme = target.theme.as_ref().map(|t| a.rename(s0, m0, t, Some("THEME")));
    let mut caused_by = m0.frame(&target.event).and_then(|f| f.value("CAUSED-BY")).cloned().map(|c| a.rename(s0, m0, &c, None));
    let mut effect = None;
    let mut steps: Vec<Filler> = Vec::new();
    let mut order: Vec<OrderCertainty> = Vec::new();
    let mut precondition = None;
    if let Some(p) = &target.prerequisite {
        let y = a.rename(s0, m0, p, None);
        steps.push(y.clone());
        precondition = Some(y.clone());
        a.prev_step = Some(y);
    }
    for (s, m) in mrs.iter().enumerate().skip(s0 + 1) {
        let Some(h) = m.head_frame() else { continue };
        let c = m.head.concept_name().unwrap_or_default();
        if c == target.concept {
            // More about the taught event itself.
            if let (Some(t), Some(st)) = (h.value("THEME"), &theme) {
                a.map.insert((s, t.clone()), st.clone());
            }
            if let Some(cb) = h.value("CAUSED-BY") {
                caused_by = Some(a.rename(s, m, cb, None));
            }
            continue;
        }
        let start = if c == "MODALITY" {
            h.value("SCOPE").cloned()
        } else if a.is_a(&m.head, "EVENT") {
            Some(m.head.clone())
        } else {
            None
        };
        let Some(mut e) = start else {
            a.notes.push(format!("sentence {} is not an instruction", s + 1));
            continue;
        };
        let mut link = OrderCertainty::Firm;
        loop {
            let f = m.frame(&e).expect("closed MR");
            let y = a.rename(s, m, &e, None);
            if !steps.is_empty() {
                order.push(link);
            }
            steps.push(y.clone());
            a.prev_step = Some(y);
            if effect.is_none() {
                if let Some(tc) = f.value("TERMINATION-CONDITION") {
                    effect = a.map.get(&(s, tc.clone())).cloned();
                }
            }
            let Some(next) = f.value("CONJOINED-WITH").cloned() else { break };
            link = if f.value("ORDER-CERTAINTY").and_then(|o| o.as_literal()) == Some("unordered") { OrderCertainty::Unordered } else { OrderCertainty::Ambiguous };
            e = next;
        }
    }
    if steps.is_empty() {
        return Err(LearnError::NoSubevents);
    }
    let name = script_name(&target.concept, theme.as_ref().and_then(|t| t.concept_name()), ont);
    let parent = if ont.contains(&target.concept) { ont.parents(&target.concept).first().cloned() } else { None };
    let mut lacunae = Vec::new();
    if parent.is_none() {
        lacunae.push(Lacuna { kind: LacunaKind::MissingParent, locus: name.clone(), pair: None, candidates: Vec::new(), hint: None });
    }
    for (i, o) in order.iter().enumerate() {
        if *o == OrderCertainty::Ambiguous {
            lacunae.push(Lacuna {
                kind: LacunaKind::AmbiguousOrder,
                locus: format!("{} {}", steps[i], steps[i + 1]),
                pair: Some(i),
                candidates: alloc::vec!["in that order".into(), "in either order".into()],
                hint: None,
            });
        }
    }
    // Keep only frames the script reaches.
    let mut keep: BTreeSet<Filler> = BTreeSet::new();
    let mut todo: Vec<Filler> = steps.iter().chain([&a.agent]).chain(theme.iter()).chain(caused_by.iter()).chain(effect.iter()).cloned().collect();
    while let Some(x) = todo.pop() {
        if !keep.insert(x.clone()) {
            continue;
        }
        if let Some(f) = a.frames.iter().find(|f| f.head == x) {
            for s in &f.slots {
                todo.extend(s.fillers.iter().filter(|v| v.is_instance()).cloned());
            }
        }
    }
    let frames = a.frames.iter().filter(|f| keep.contains(&f.head)).cloned().collect();
    let script = ScriptFrame { name, parent, head_concept: target.concept.clone(), agent: a.agent.clone(), theme, caused_by, effect, precondition, steps, order, frames };
    Ok((script, lacunae, a.notes))
}

/// The short question for a referent: "X or Y?" for two candidates, else a
/// paraphrase to confirm.
pub fn clarify_referent(candidates: &[String], paraphrase: &str) -> String {
    if let [x, y] = candidates {
        let mut cs = x.chars();
        let first: String = cs.next().map(|c| c.to_uppercase().collect()).unwrap_or_default();
        return format!("{}{} or {}?", first, cs.as_str(), y);
    }
    format!("Do you mean: {}?", paraphrase.trim_end_matches(['.', '?']))
}

/// The question that would fill `lacuna`.
pub fn clarify(script: &ScriptFrame, lacuna: &Lacuna, lex: &Lexicon, ont: &ConceptStore) -> Result<String, GenError> {
    match lacuna.kind {
        LacunaKind::AmbiguousOrder => {
            let i = lacuna.pair.unwrap_or(0);
            let x = realize_phrase(&script.step_mr(i, ont), &script.steps[i], PhraseForm::Bare, lex, ont)?;
            let y = realize_phrase(&script.step_mr(i + 1, ont), &script.steps[i + 1], PhraseForm::Gerund, lex, ont)?;
            Ok(format!("Should I {} before {}, or in either order?", x, y))
        }
        LacunaKind::MissingParent => {
            let mut goal = script.goal_mr(ont);
            let ev = script.head_event(true).head;
            goal.head = ev.clone();
            let g = realize_phrase(&goal, &ev, PhraseForm::Gerund, lex, ont)?;
            Ok(format!("What kind of event is {}?", g))
        }
        LacunaKind::UnknownTerm => Ok(format!("What does \"{}\" mean?", lacuna.locus)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LacunaError {
    Incompatible { lacuna: LacunaKind, answer: String },
    Lexicon(LexError),
}

impl fmt::Display for LacunaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LacunaError::Incompatible { lacuna, answer } => write!(f, "\"{}\" does not answer a {} question", answer, lacuna.as_str()),
            LacunaError::Lexicon(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for LacunaError {}

/// Fold a teacher's answer into the script.
pub fn resolve_lacuna(script: &ScriptFrame, lacuna: &Lacuna, answer: &str, ont: &ConceptStore) -> Result<ScriptFrame, LacunaError> {
    let wrong = || LacunaError::Incompatible { lacuna: lacuna.kind, answer: answer.to_string() };
    let mut s = script.clone();
    match lacuna.kind {
        LacunaKind::MissingParent => {
            let c = canonical_concept(answer.trim());
            if !is_concept_token(&c) || !ont.contains(&c) {
                return Err(wrong());
            }
            s.parent = Some(c);
        }
        LacunaKind::AmbiguousOrder => {
            let i = lacuna.pair.filter(|i| *i < s.order.len()).ok_or_else(wrong)?;
            let a = answer.trim().to_lowercase();
            s.order[i] = if a.contains("either") {
                OrderCertainty::Unordered
            } else if a.contains("that order") || a == "yes" || a.contains("before") {
                OrderCertainty::Firm
            } else {
                return Err(wrong());
            };
        }
        LacunaKind::UnknownTerm => return Err(wrong()),
    }
    Ok(s)
}

/// Learn a word on the fly: a new sense whose template is headed by the
/// concept the teacher names.
pub fn resolve_unknown_term(lex: &Lexicon, lacuna: &Lacuna, answer: &str) -> Result<Lexicon, LacunaError> {
    let c = canonical_concept(answer.trim());
    if lacuna.kind != LacunaKind::UnknownTerm || !is_concept_token(&c) {
        return Err(LacunaError::Incompatible { lacuna: lacuna.kind, answer: answer.to_string() });
    }
    let class = lacuna.hint.as_deref().unwrap_or("n");
    let pos = if class.starts_with('v') { "v" } else { "n" };
    let lemma = lacuna.locus.to_lowercase();
    let number = lex.lookup(&lemma, pos).len() as u32 + 1;
    let mut next = lex.clone();
    next.insert(skeleton_sense(&lemma, pos, number, class, &c)).map_err(LacunaError::Lexicon)?;
    Ok(next)
}

/// The first word of `text` the lexicon has no analysis for.
fn first_unknown(text: &str, lex: &Lexicon) -> Option<Lacuna> {
    for (i, s) in sentences(&tokenize(text)).iter().enumerate() {
        if let Some(w) = analyze_words(s, lex).into_iter().find(|w| w.is_unknown()) {
            return Some(unknown_term(text, i, &w.surface));
        }
    }
    None
}

/// Words after which an unknown word is taken for a verb.
const VERB_CONTEXT: &[&str] = &["you", "to", ",", "first", "then", "next", "finally", "and", "how"];

fn unknown_term(text: &str, sentence: usize, token: &str) -> Lacuna {
    let toks = tokenize(text);
    let sents = sentences(&toks);
    let words: Vec<String> = sents.get(sentence).map(|s| s.iter().map(|t| t.text.to_lowercase()).collect()).unwrap_or_default();
    let i = words.iter().position(|w| w == &token.to_lowercase());
    let verb = match i {
        Some(0) | None => true,
        Some(i) => VERB_CONTEXT.contains(&words[i - 1].as_str()),
    };
    Lacuna {
        kind: LacunaKind::UnknownTerm,
        locus: token.to_lowercase(),
        pair: None,
        candidates: Vec::new(),
        hint: Some(if verb { "v-trans" } else { "n" }.into()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleStatus {
    Done,
    Skipped,
    Pending,
}

impl ModuleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ModuleStatus::Done => "done",
            ModuleStatus::Skipped => "skipped",
            ModuleStatus::Pending => "pending",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    NotApplicable,
}

impl Difficulty {
    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
            Difficulty::NotApplicable => "n/a",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "easy" => Difficulty::Easy,
            "medium" => Difficulty::Medium,
            "hard" => Difficulty::Hard,
            "n/a" | "na" => Difficulty::NotApplicable,
            _ => return None,
        })
    }
}

/// Learning modules in pipeline order; the flag marks optional ones.
pub const MODULES: [(&str, bool); 6] = [("analyze", false), ("detect", false), ("lacunae", true), ("clarify", true), ("describe-back", true), ("persist", false)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleReport {
    pub name: &'static str,
    pub optional: bool,
    pub status: ModuleStatus,
    pub difficulty: Difficulty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningTrace {
    pub modules: Vec<ModuleReport>,
    pub questions: Vec<(String, Option<String>)>,
    pub events: Vec<TraceEvent>,
}

impl LearningTrace {
    fn new(difficulty: &BTreeMap<String, Difficulty>) -> Self {
        let modules = MODULES
            .iter()
            .map(|(n, opt)| ModuleReport { name: n, optional: *opt, status: ModuleStatus::Pending, difficulty: difficulty.get(*n).copied().unwrap_or(Difficulty::NotApplicable) })
            .collect();
        LearningTrace { modules, questions: Vec::new(), events: Vec::new() }
    }

    fn set(&mut self, name: &str, status: ModuleStatus) {
        if let Some(m) = self.modules.iter_mut().find(|m| m.name == name) {
            debug_assert!(m.optional || status != ModuleStatus::Skipped);
            m.status = status;
        }
    }

    pub fn status(&self, name: &str) -> Option<ModuleStatus> {
        self.modules.iter().find(|m| m.name == name).map(|m| m.status)
    }
}

/// Source of answers to clarification questions.
pub trait Teacher {
    fn answer(&mut self, question: &str, lacuna: &Lacuna) -> Option<String>;
}

/// Answers in a fixed order, then falls silent.
#[derive(Clone, Debug, Default)]
pub struct ScriptedTeacher {
    answers: VecDeque<String>,
}

impl ScriptedTeacher {
    pub fn new(answers: impl IntoIterator<Item = String>) -> Self {
        ScriptedTeacher { answers: answers.into_iter().collect() }
    }
}

impl Teacher for ScriptedTeacher {
    fn answer(&mut self, _question: &str, _lacuna: &Lacuna) -> Option<String> {
        self.answers.pop_front()
    }
}

#[derive(Clone, Debug)]
pub struct LearnOptions {
    pub max_questions: usize,
    pub describe_back: bool,
    pub difficulty: BTreeMap<String, Difficulty>,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions { max_questions: 5, describe_back: true, difficulty: BTreeMap::new() }
    }
}

#[derive(Clone, Debug)]
pub struct Learned {
    pub script: Option<ScriptFrame>,
    pub learned: bool,
    pub open_lacunae: Vec<Lacuna>,
    pub description: Option<String>,
    /// Ontology with the script stored, when learned.
    pub ontology: ConceptStore,
    /// Lexicon with any words learned on the way.
    pub lexicon: Lexicon,
    pub trace: LearningTrace,
}

/// Read a procedure back as text.
pub fn describe_back(script: &ScriptFrame, reg: &ShapeRegistry, lex: &Lexicon, ont: &ConceptStore) -> Result<String, GenError> {
    let goal = script.goal_mr(ont);
    let skip = usize::from(script.precondition.is_some());
    let steps: Vec<MeaningRep> = (skip..script.steps.len()).map(|i| script.step_mr(i, ont)).collect();
    let order = &script.order[skip.min(script.order.len())..];
    let unordered: Vec<bool> = order.iter().map(|o| *o == OrderCertainty::Unordered).collect();
    let conjoined: Vec<bool> = order.iter().map(|o| *o == OrderCertainty::Ambiguous).collect();
    let background: Vec<MeaningRep> = script.reason_mr(ont).into_iter().collect();
    describe_procedure(&Procedure { goal: Some(&goal), background: &background, steps: &steps, unordered_after: &unordered, conjoined_after: &conjoined }, reg, lex, ont)
}

/// The whole pipeline: analyze, detect, assemble, ask, describe back and
/// store.
pub fn learn(text: &str, lex: &Lexicon, ont: &ConceptStore, reg: &ShapeRegistry, teacher: &mut dyn Teacher, opts: &LearnOptions) -> Result<Learned, LearnError> {
    let mut lex = lex.clone();
    let mut trace = LearningTrace::new(&opts.difficulty);
    let mut open: Vec<Lacuna> = Vec::new();
    let mut asked = 0;
    let not_learned = |script, open, lexicon, mut trace: LearningTrace| {
        trace.set("describe-back", ModuleStatus::Skipped);
        Learned { script, learned: false, open_lacunae: open, description: None, ontology: ont.clone(), lexicon, trace }
    };
    let mrs: Vec<MeaningRep> = loop {
        match analyze(text, &lex, ont, &AnalyzeOptions::default()) {
            Ok(a) => break a.iter().map(|x| x.top().clone()).collect(),
            Err(e) => {
                let Some(lac) = first_unknown(text, &lex) else { return Err(LearnError::Analyze(e)) };
                trace.set("lacunae", ModuleStatus::Done);
                if asked >= opts.max_questions {
                    open.push(lac);
                    return Ok(not_learned(None, open, lex, trace));
                }
                let q = format!("What does \"{}\" mean?", lac.locus);
                asked += 1;
                trace.set("clarify", ModuleStatus::Done);
                let ans = teacher.answer(&q, &lac);
                trace.questions.push((q, ans.clone()));
                match ans.map(|a| resolve_unknown_term(&lex, &lac, &a)) {
                    Some(Ok(l)) => {
                        trace.events.push(TraceEvent::new("lacunae", lac.to_string(), "learned a new sense"));
                        lex = l;
                    }
                    _ => {
                        open.push(lac);
                        return Ok(not_learned(None, open, lex, trace));
                    }
                }
            }
        }
    };
    trace.set("analyze", ModuleStatus::Done);
    trace.events.push(TraceEvent::new("analyze", format!("{} sentences", mrs.len()), mrs.iter().map(|m| m.head.to_string()).collect::<Vec<_>>().join(" ")));
    let target = detect_learnable(&mrs).ok_or(LearnError::NothingToLearn)?;
    trace.set("detect", ModuleStatus::Done);
    trace.events.push(TraceEvent::new("detect", format!("sentence {}", target.sentence + 1), target.concept.clone()));
    let (mut script, lacunae, notes) = assemble_script(&target, &mrs, ont)?;
    trace.set("lacunae", ModuleStatus::Done);
    let mut ev = TraceEvent::new("lacunae", script.name.clone(), format!("{} found", lacunae.len()));
    for n in notes {
        ev = ev.cite(n);
    }
    trace.events.push(ev);
    for lac in lacunae {
        if asked >= opts.max_questions {
            open.push(lac);
            continue;
        }
        let q = clarify(&script, &lac, &lex, ont)?;
        asked += 1;
        trace.set("clarify", ModuleStatus::Done);
        let ans = teacher.answer(&q, &lac);
        trace.questions.push((q.clone(), ans.clone()));
        let mut ev = TraceEvent::new("clarify", lac.to_string(), q);
        match ans.as_deref().map(|a| resolve_lacuna(&script, &lac, a, ont)) {
            Some(Ok(s)) => {
                script = s;
                ev = ev.cite(format!("answer: {}", ans.unwrap_or_default()));
            }
            Some(Err(e)) => {
                ev = ev.reject(lac.kind.as_str(), e.to_string());
                open.push(lac);
            }
            None => {
                ev = ev.reject(lac.kind.as_str(), "no answer");
                open.push(lac);
            }
        }
        trace.events.push(ev);
    }
    if trace.status("clarify") != Some(ModuleStatus::Done) {
        trace.set("clarify", ModuleStatus::Skipped);
    }
    if open.iter().any(|l| l.kind.mandatory()) {
        return Ok(not_learned(Some(script), open, lex, trace));
    }
    let description = if opts.describe_back {
        let d = describe_back(&script, reg, &lex, ont)?;
        trace.set("describe-back", ModuleStatus::Done);
        trace.events.push(TraceEvent::new("describe-back", script.name.clone(), d.clone()));
        Some(d)
    } else {
        trace.set("describe-back", ModuleStatus::Skipped);
        None
    };
    let ontology = persist(&script, ont).map_err(LearnError::Ontology)?;
    trace.set("persist", ModuleStatus::Done);
    trace.events.push(TraceEvent::new("persist", script.name.clone(), format!("IS-A {}", script.parent.clone().unwrap_or_default())));
    Ok(Learned { script: Some(script), learned: true, open_lacunae: open, description, ontology, lexicon: lex, trace })
}

/// Store the script, and its head event concept when that was new.
pub fn persist(script: &ScriptFrame, ont: &ConceptStore) -> Result<ConceptStore, OntologyError> {
    let parent = script.parent.clone().unwrap_or_else(|| "EVENT".into());
    let mut next = ont.clone();
    if !next.contains(&script.head_concept) {
        next = next.with_concept(concept_frame(&script.head_concept, &parent, Vec::new()))?;
    }
    next.with_concept(script.top_frame())
}

/// A teaching scenario: instruction text, scripted answers, module
/// difficulty grades and what learning should produce.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub text: String,
    pub answers: Vec<String>,
    pub difficulty: BTreeMap<String, Difficulty>,
    pub senses: Vec<LexSense>,
    pub concepts: Vec<Frame>,
    pub expect_parent: Option<String>,
    pub expect_steps: Vec<String>,
    pub expect_lacunae: Vec<LacunaKind>,
    pub expect_learned: bool,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let blocks = parse_kb(text).map_err(ScriptError::Kr)?;
        let mut senses = Vec::new();
        let mut concepts = Vec::new();
        let mut main = None;
        for b in &blocks {
            match b.kind {
                BlockKind::Sense => senses.push(LexSense::from_block(b).map_err(|e| ScriptError::Malformed(e.to_string()))?),
                BlockKind::Concept => concepts.push(b.frame.clone()),
                BlockKind::Script if main.is_none() => main = Some(b),
                _ => return Err(ScriptError::Malformed(format!("unexpected block {}", b.name()))),
            }
        }
        let b = main.ok_or_else(|| ScriptError::Malformed("no script block".into()))?;
        let f = &b.frame;
        let lits = |p: &str| f.all_fillers(p).into_iter().map(|x| x.as_literal().map(|s| s.to_string()).unwrap_or_else(|| x.to_string())).collect::<Vec<_>>();
        let lines: Vec<String> = b
            .section("text")
            .map(|s| s.nodes.iter().map(|n| n.tokens.join(" ").trim_matches('"').to_string()).collect())
            .unwrap_or_default();
        if lines.is_empty() {
            return Err(ScriptError::Malformed(format!("{}: no text", b.name())));
        }
        let mut difficulty = BTreeMap::new();
        for s in &f.slots {
            if let Some(m) = s.property.strip_prefix("difficulty-") {
                let d = s.fillers.first().map(|x| x.to_string()).unwrap_or_default();
                difficulty.insert(m.to_string(), Difficulty::parse(&d).ok_or_else(|| ScriptError::Malformed(format!("bad difficulty {}", d)))?);
            }
        }
        let mut expect_lacunae = Vec::new();
        for l in lits("expect-lacunae") {
            if l != "none" {
                expect_lacunae.push(LacunaKind::parse(&l).ok_or_else(|| ScriptError::Malformed(format!("bad lacuna kind {}", l)))?);
            }
        }
        Ok(Scenario {
            name: b.name(),
            text: lines.join(" "),
            answers: lits("answer"),
            difficulty,
            senses,
            concepts,
            expect_parent: f.value("expect-parent").map(|p| p.to_string()),
            expect_steps: lits("expect-steps"),
            expect_lacunae,
            expect_learned: f.value("expect-learned").map(|v| v.to_string() != "no").unwrap_or(true),
        })
    }

    /// Lexicon and ontology extended with the scenario's own entries.
    pub fn knowledge(&self, lex: &Lexicon, ont: &ConceptStore) -> Result<(Lexicon, ConceptStore), LearnError> {
        let mut l = lex.clone();
        for s in &self.senses {
            l = l.with_sense(s.clone());
        }
        let mut o = ont.clone();
        for c in &self.concepts {
            o = o.with_concept(c.clone()).map_err(LearnError::Ontology)?;
        }
        Ok((l, o))
    }

    pub fn options(&self) -> LearnOptions {
        LearnOptions { difficulty: self.difficulty.clone(), ..LearnOptions::default() }
    }

    pub fn teacher(&self) -> ScriptedTeacher {
        ScriptedTeacher::new(self.answers.iter().cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn lacuna(kind: LacunaKind, pair: Option<usize>) -> Lacuna {
        Lacuna { kind, locus: "grind".into(), pair, candidates: Vec::new(), hint: Some("v-trans".into()) }
    }

    fn tiny() -> ScriptFrame {
        let agent = Filler::Anchor(InstanceRef::new(PERFORMER, 1));
        let a = Filler::Anchor(InstanceRef::new("OPEN-CONTAINER", 1));
        let b = Filler::Anchor(InstanceRef::new("POUR", 1));
        ScriptFrame {
            name: "FILL-KETTLE".into(),
            parent: None,
            head_concept: "FILL".into(),
            agent: agent.clone(),
            theme: None,
            caused_by: None,
            effect: None,
            precondition: None,
            steps: alloc::vec![a.clone(), b.clone()],
            order: alloc::vec![OrderCertainty::Ambiguous],
            frames: alloc::vec![Frame::new(agent), Frame::new(a), Frame::new(b)],
        }
    }

    #[test]
    fn literals_round_trip() {
        for o in [OrderCertainty::Firm, OrderCertainty::Ambiguous, OrderCertainty::Unordered] {
            assert_eq!(OrderCertainty::parse(o.as_str()), Some(o));
        }
        for k in [LacunaKind::MissingParent, LacunaKind::AmbiguousOrder, LacunaKind::UnknownTerm] {
            assert_eq!(LacunaKind::parse(k.as_str()), Some(k));
        }
        assert!(!LacunaKind::AmbiguousOrder.mandatory());
    }

    #[test]
    fn order_answers() {
        let ont = bundled::ontology();
        let s = tiny();
        let l = lacuna(LacunaKind::AmbiguousOrder, Some(0));
        assert_eq!(resolve_lacuna(&s, &l, "In either order.", &ont).unwrap().order, [OrderCertainty::Unordered]);
        assert_eq!(resolve_lacuna(&s, &l, "yes", &ont).unwrap().order, [OrderCertainty::Firm]);
        assert!(resolve_lacuna(&s, &l, "maybe", &ont).is_err());
        assert!(resolve_lacuna(&s, &lacuna(LacunaKind::AmbiguousOrder, Some(4)), "yes", &ont).is_err());
    }

    #[test]
    fn parent_answer_must_be_known() {
        let ont = bundled::ontology();
        let l = lacuna(LacunaKind::MissingParent, None);
        assert_eq!(resolve_lacuna(&tiny(), &l, "machine-maintenance", &ont).unwrap().parent.as_deref(), Some("MACHINE-MAINTENANCE"));
        assert!(resolve_lacuna(&tiny(), &l, "NO-SUCH-THING", &ont).is_err());
    }

    #[test]
    fn unknown_terms_become_senses() {
        let lex = bundled::lexicon();
        let next = resolve_unknown_term(&lex, &lacuna(LacunaKind::UnknownTerm, None), "GRIND").unwrap();
        let s = next.get("grind-v1").unwrap();
        assert_eq!(s.syn_class.as_deref(), Some("v-trans"));
        assert_eq!(s.head_concept(), Some("GRIND"));
        assert!(resolve_unknown_term(&lex, &lacuna(LacunaKind::MissingParent, None), "GRIND").is_err());
    }

    #[test]
    fn word_class_guess() {
        assert_eq!(unknown_term("Then you grind it.", 0, "grind").hint.as_deref(), Some("v-trans"));
        assert_eq!(unknown_term("Open the grinder.", 0, "grinder").hint.as_deref(), Some("n"));
    }

    #[test]
    fn unparented_scripts_fail_validation() {
        let v = tiny().validate(&bundled::ontology());
        assert!(v.iter().any(|m| m == "no parent"), "{:?}", v);
    }
}
