//! Scoring of candidate bindings against the ontology and composition of
//! meaning representations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kr::{frames_equal_modulo_indices, parse_kb, serialize_kb, Block, BlockKind, Comparator, Facet, Filler, Frame, InstanceRef, KrError};
use crate::lexicon::{LexSense, Lexicon};
use crate::ontology::{ConceptStore, OntologyError, VerdictKind};
use crate::ontosyntax::{enumerate_candidates, CandidateBinding, Controller, MatchLattice};
use crate::syntax::morph::Gender;
use crate::syntax::token::{sentences, tokenize};
use crate::syntax::{analyze_words, parse_words, ParseError, ParseTree};
use crate::trace::TraceEvent;

/// Routine named by past-tense TIME relations; evaluated only on demand.
pub const FIND_ANCHOR_TIME: &str = "find-anchor-time";

/// Bookkeeping properties that carry provenance rather than meaning.
pub const LEX_MAP: &str = "lex-map";
pub const EPISODIC_MEM: &str = "episodic-mem";

/// Facet weights used to aggregate role verdicts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub value: f64,
    pub default: f64,
    pub sem: f64,
    pub relaxable: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { value: 2.0, default: 2.0, sem: 1.0, relaxable: 0.5 }
    }
}

impl Weights {
    /// None for a violation.
    pub fn weight(&self, k: VerdictKind) -> Option<f64> {
        match k {
            VerdictKind::MatchesValue => Some(self.value),
            VerdictKind::MatchesDefault => Some(self.default),
            VerdictKind::MatchesSem => Some(self.sem),
            VerdictKind::MatchesRelaxable => Some(self.relaxable),
            VerdictKind::Violation => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoleVerdict {
    pub sense: String,
    pub concept: String,
    pub property: String,
    pub filler: String,
    /// None when the filler or the head is not in the ontology.
    pub verdict: Option<VerdictKind>,
}

impl fmt::Display for RoleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.verdict.map(|v| v.as_str()).unwrap_or("unscored");
        write!(f, "{} {} {} {}: {}", self.sense, self.concept, self.property, self.filler, v)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct AnalysisScore {
    pub verdicts: Vec<RoleVerdict>,
    pub aggregate: f64,
    /// Why the reading was rejected, if it was.
    pub reject: Option<String>,
}

impl AnalysisScore {
    pub fn rejected(&self) -> bool {
        self.reject.is_some()
    }

    fn absorb(&mut self, other: AnalysisScore) {
        self.verdicts.extend(other.verdicts);
        self.aggregate += other.aggregate;
        if self.reject.is_none() {
            self.reject = other.reject;
        }
    }
}

fn frame_concept(frame: &Frame, concepts: &BTreeMap<u32, String>) -> Option<String> {
    match &frame.head {
        Filler::Concept(c) => Some(c.clone()),
        Filler::MeaningOf { var, path: None } => concepts.get(var).cloned(),
        _ => None,
    }
}

/// Grade every variable-filled slot of `sense`'s template, given the head
/// concept each variable's meaning carries.
pub fn score_binding(sense: &LexSense, concepts: &BTreeMap<u32, String>, ont: &ConceptStore, w: &Weights) -> AnalysisScore {
    let mut score = AnalysisScore::default();
    for tf in &sense.sem {
        let Some(head) = frame_concept(tf, concepts) else { continue };
        let known = ont.contains(&head);
        for slot in &tf.slots {
            for filler in &slot.fillers {
                match filler {
                    Filler::MeaningOf { var, path: None } => {
                        let Some(fc) = concepts.get(var) else { continue };
                        let mut rv = RoleVerdict { sense: sense.id.clone(), concept: head.clone(), property: slot.property.clone(), filler: fc.clone(), verdict: None };
                        if known && ont.contains(fc) {
                            match ont.check_filler(&head, &slot.property, &Filler::Concept(fc.clone())) {
                                Ok(v) => {
                                    rv.verdict = Some(v.kind);
                                    match w.weight(v.kind) {
                                        Some(x) => score.aggregate += x,
                                        None => {
                                            if score.reject.is_none() {
                                                score.reject = Some(format!("{} of {} cannot be {}", slot.property, head, fc));
                                            }
                                        }
                                    }
                                }
                                Err(OntologyError::UnknownProperty { .. }) => {
                                    rv.verdict = Some(VerdictKind::Violation);
                                    if score.reject.is_none() {
                                        score.reject = Some(format!("{} has no property {}", head, slot.property));
                                    }
                                }
                                Err(_) => {}
                            }
                        }
                        score.verdicts.push(rv);
                    }
                    Filler::Literal(_) | Filler::Concept(_) if known => {
                        let has = ont.effective_frame(&head).map(|f| f.has_property(&slot.property)).unwrap_or(true);
                        if !has && score.reject.is_none() {
                            score.reject = Some(format!("{} has no property {}", head, slot.property));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    score
}

/// Link recorded when two object mentions are merged into one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CorefLink {
    pub kept: InstanceRef,
    pub merged: InstanceRef,
    pub confidence: f64,
    pub pronoun_first: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MrError {
    Empty,
    Kr(KrError),
    NotInstanceBlock(String),
    NotClosed(String),
    DanglingScope(String),
}

impl fmt::Display for MrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MrError::Empty => write!(f, "meaning representation has no frames"),
            MrError::Kr(e) => write!(f, "{}", e),
            MrError::NotInstanceBlock(n) => write!(f, "block {} is not an instance block", n),
            MrError::NotClosed(r) => write!(f, "instance {} is mentioned but has no frame", r),
            MrError::DanglingScope(r) => write!(f, "SCOPE or ATTRIBUTED-TO names missing instance {}", r),
        }
    }
}

impl core::error::Error for MrError {}

/// A meaning representation: instance frames with a proposition head.
#[derive(Clone, Debug, PartialEq)]
pub struct MeaningRep {
    pub head: Filler,
    /// Proposition head first.
    pub frames: Vec<Frame>,
    /// Sense ids of the selected bindings, sorted.
    pub senses: Vec<String>,
    pub transformations: usize,
    pub score: AnalysisScore,
    pub tree_rank: usize,
    /// Ranked first because memory held a precedent for this input.
    pub precedent: bool,
    pub coreference: Vec<CorefLink>,
    /// Instance carrying each tree node's meaning.
    pub node_instances: BTreeMap<usize, Filler>,
}

fn strip(frames: &[Frame], props: &[&str]) -> Vec<Frame> {
    frames
        .iter()
        .map(|f| Frame { head: f.head.clone(), slots: f.slots.iter().filter(|s| !props.contains(&s.property.as_str())).cloned().collect() })
        .collect()
}

impl MeaningRep {
    pub fn from_frames(frames: Vec<Frame>) -> Result<Self, MrError> {
        let head = frames.first().ok_or(MrError::Empty)?.head.clone();
        Ok(MeaningRep {
            head,
            frames,
            senses: Vec::new(),
            transformations: 0,
            score: AnalysisScore::default(),
            tree_rank: 0,
            precedent: false,
            coreference: Vec::new(),
            node_instances: BTreeMap::new(),
        })
    }

    /// Read `instance` blocks; the first block is the proposition head.
    pub fn parse(text: &str) -> Result<Self, MrError> {
        let blocks = parse_kb(text).map_err(MrError::Kr)?;
        let mut frames = Vec::new();
        for b in blocks {
            if b.kind != BlockKind::Instance {
                return Err(MrError::NotInstanceBlock(b.name()));
            }
            frames.push(b.frame);
        }
        let mr = MeaningRep::from_frames(frames)?;
        mr.check_closure()?;
        Ok(mr)
    }

    pub fn serialize(&self) -> String {
        let blocks: Vec<Block> = self.frames.iter().map(|f| Block::new(BlockKind::Instance, f.clone())).collect();
        serialize_kb(&blocks)
    }

    pub fn frame(&self, inst: &Filler) -> Option<&Frame> {
        self.frames.iter().find(|f| &f.head == inst)
    }

    pub fn frame_mut(&mut self, inst: &Filler) -> Option<&mut Frame> {
        self.frames.iter_mut().find(|f| &f.head == inst)
    }

    pub fn head_frame(&self) -> Option<&Frame> {
        self.frame(&self.head)
    }

    /// Frames whose head concept is `concept` or below it.
    pub fn frames_of<'a>(&'a self, ont: &'a ConceptStore, concept: &'a str) -> impl Iterator<Item = &'a Frame> + 'a {
        self.frames.iter().filter(move |f| f.head.concept_name().map(|c| ont.subsumes(concept, c)).unwrap_or(false))
    }

    /// Frames with provenance slots removed.
    pub fn without_lex_map(&self) -> Vec<Frame> {
        strip(&self.frames, &[LEX_MAP])
    }

    /// Equality modulo instance indices, ignoring lex-map.
    pub fn equivalent(&self, other: &MeaningRep) -> bool {
        frames_equal_modulo_indices(&self.without_lex_map(), &other.without_lex_map()).is_some()
    }

    /// Every instance filler has a frame; SCOPE and ATTRIBUTED-TO targets
    /// exist. Episodic-mem fillers point into memory and are exempt.
    pub fn check_closure(&self) -> Result<(), MrError> {
        for f in &self.frames {
            for s in &f.slots {
                if s.property == EPISODIC_MEM {
                    continue;
                }
                for x in &s.fillers {
                    if x.is_instance() && self.frame(x).is_none() {
                        if s.property == "SCOPE" || s.property == "ATTRIBUTED-TO" {
                            return Err(MrError::DanglingScope(x.to_string()));
                        }
                        return Err(MrError::NotClosed(x.to_string()));
                    }
                }
            }
        }
        Ok(())
    }

    fn filler_label(&self, x: &Filler) -> String {
        let c = x.concept_name().unwrap_or_default().to_string();
        match self.frame(x).and_then(|f| f.value("HAS-NAME")).and_then(|n| n.as_literal()) {
            Some(name) => format!("{}({})", c, name),
            None => c,
        }
    }

    /// Normalized shape used as the precedent key: head concept plus sorted
    /// role-to-filler-concept pairs, names kept, indices dropped.
    pub fn shape_key(&self) -> String {
        let Some(h) = self.head_frame() else { return String::new() };
        let mut pairs: Vec<String> = Vec::new();
        for s in &h.slots {
            if s.property == LEX_MAP || s.property == EPISODIC_MEM {
                continue;
            }
            for x in &s.fillers {
                if x.is_instance() {
                    pairs.push(format!("{}={}", s.property, self.filler_label(x)));
                }
            }
        }
        pairs.sort();
        let mut key = h.head.concept_name().unwrap_or_default().to_string();
        for p in pairs {
            key.push('|');
            key.push_str(&p);
        }
        key
    }
}

/// Lookup of a stored interpretation (a sorted sense selection) by shape key.
pub trait PrecedentLookup {
    fn recall_selection(&self, key: &str) -> Option<Vec<String>>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComposeError {
    Uncovered { node: usize, word: String },
    Conflict { node: usize, word: String },
    UnresolvedVariable { sense: String, var: u32 },
    NoVerbSense(String),
    NoHead,
    Mr(MrError),
}

impl fmt::Display for ComposeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComposeError::Uncovered { node, word } => write!(f, "no selected sense covers '{}' (node {})", word, node),
            ComposeError::Conflict { node, word } => write!(f, "'{}' (node {}) claimed twice", word, node),
            ComposeError::UnresolvedVariable { sense, var } => write!(f, "$var{} of {} has no meaning", var, sense),
            ComposeError::NoVerbSense(l) => write!(f, "no verb sense supplies a head for '{}'", l),
            ComposeError::NoHead => write!(f, "no proposition head"),
            ComposeError::Mr(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for ComposeError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    /// Anchor of a binding whose template heads a concept.
    Own(usize),
    /// Anchor of a binding that passes on the meaning of one variable.
    Alias(usize, u32),
    /// Preposition or adverb: relates other meanings, has none itself.
    Relation,
    /// Pronoun or wh-word typed from context.
    Typed,
    /// Verb inside a stored construction anchored elsewhere.
    Borrowed,
    Absorbed,
}

/// Nodes that need a meaning source: content words minus auxiliaries.
pub fn content_nodes(tree: &ParseTree) -> Vec<usize> {
    tree.nodes
        .iter()
        .filter(|n| crate::ontosyntax::sense_pos(&n.pos).is_some() || n.pos == "pron")
        .filter(|n| tree.incoming(n.id).map(|e| e.label != "aux").unwrap_or(true))
        .map(|n| n.id)
        .collect()
}

fn is_typed_word(tree: &ParseTree, id: usize) -> bool {
    tree.node(id).map(|n| n.pos == "pron" || n.pos == "wh").unwrap_or(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Speaker,
    Addressee,
}

struct Composer<'a> {
    tree: &'a ParseTree,
    lex: &'a Lexicon,
    ont: &'a ConceptStore,
    sel: Vec<&'a CandidateBinding>,
    senses: Vec<&'a LexSense>,
    sources: BTreeMap<usize, Source>,
    concepts: BTreeMap<usize, String>,
    inst: BTreeMap<usize, InstanceRef>,
    construction: BTreeMap<usize, InstanceRef>,
    shared: BTreeMap<u8, InstanceRef>,
    counters: BTreeMap<String, u32>,
    order: Vec<InstanceRef>,
}

fn pronoun_role(lemma: &str) -> Option<Role> {
    match lemma {
        "i" | "we" => Some(Role::Speaker),
        "you" => Some(Role::Addressee),
        _ => None,
    }
}

fn role_key(r: Role) -> u8 {
    match r {
        Role::Speaker => 0,
        Role::Addressee => 1,
    }
}

impl<'a> Composer<'a> {
    fn word(&self, id: usize) -> String {
        self.tree.node(id).map(|n| n.word().to_string()).unwrap_or_default()
    }

    fn claim(&mut self, node: usize, s: Source) -> Result<(), ComposeError> {
        if self.sources.insert(node, s).is_some() {
            return Err(ComposeError::Conflict { node, word: self.word(node) });
        }
        Ok(())
    }

    fn assign_sources(&mut self) -> Result<(), ComposeError> {
        let content: BTreeSet<usize> = content_nodes(self.tree).into_iter().collect();
        for bi in 0..self.sel.len() {
            let b = self.sel[bi];
            let sense = self.senses[bi];
            if b.frame_node == b.anchor {
                let s = match sense.sem.first().map(|f| &f.head) {
                    Some(Filler::Concept(_)) => Source::Own(bi),
                    Some(Filler::MeaningOf { var, path: None }) if sense.pos == "v" || sense.pos == "n" => Source::Alias(bi, *var),
                    _ => Source::Relation,
                };
                self.claim(b.anchor, s)?;
            } else {
                self.claim(b.anchor, Source::Typed)?;
                self.claim(b.frame_node, Source::Borrowed)?;
            }
            for &a in &b.absorbed {
                if content.contains(&a) {
                    self.claim(a, Source::Absorbed)?;
                }
            }
        }
        for &n in &content {
            if !self.sources.contains_key(&n) {
                if is_typed_word(self.tree, n) {
                    self.sources.insert(n, Source::Typed);
                } else {
                    return Err(ComposeError::Uncovered { node: n, word: self.word(n) });
                }
            }
        }
        Ok(())
    }

    /// Head concept of a node's meaning, before instances exist.
    fn concept_of(&self, node: usize, depth: usize) -> Option<String> {
        if depth > 8 {
            return None;
        }
        if let Some(c) = self.concepts.get(&node) {
            return Some(c.clone());
        }
        match self.sources.get(&node)? {
            Source::Alias(bi, k) => self.concept_of(*self.sel[*bi].vars.get(k)?, depth + 1),
            _ => None,
        }
    }

    fn fix_concepts(&mut self) -> Result<(), ComposeError> {
        let nodes: Vec<(usize, Source)> = self.sources.iter().map(|(k, v)| (*k, *v)).collect();
        for &(n, s) in &nodes {
            match s {
                Source::Own(bi) => {
                    let c = self.senses[bi].head_concept().unwrap_or("ALL").to_string();
                    self.concepts.insert(n, c);
                }
                Source::Borrowed => {
                    let lemma = self.tree.node(n).map(|x| x.lemma.clone()).unwrap_or_default();
                    let mut vs = self.lex.lookup(&lemma, "v");
                    vs.sort_by_key(|s| s.number);
                    let c = vs.iter().find_map(|s| s.head_concept()).ok_or(ComposeError::NoVerbSense(lemma))?;
                    self.concepts.insert(n, c.to_string());
                }
                Source::Typed => {
                    let lemma = self.tree.node(n).map(|x| x.lemma.as_str()).unwrap_or("");
                    if pronoun_role(lemma).is_some() || matches!(lemma, "he" | "she" | "they") {
                        self.concepts.insert(n, "HUMAN".into());
                    }
                }
                _ => {}
            }
        }
        // Remaining typed words take the filler type their role expects.
        for &(n, s) in &nodes {
            if s != Source::Typed || self.concepts.contains_key(&n) {
                continue;
            }
            let c = self.selectional_type(n).unwrap_or_else(|| "OBJECT".into());
            self.concepts.insert(n, c);
        }
        Ok(())
    }

    fn selectional_type(&self, node: usize) -> Option<String> {
        for (bi, b) in self.sel.iter().enumerate() {
            for (&k, &v) in &b.vars {
                if v != node {
                    continue;
                }
                for tf in &self.senses[bi].sem {
                    let head = match &tf.head {
                        Filler::Concept(c) => Some(c.clone()),
                        Filler::MeaningOf { var, path: None } => b.vars.get(var).and_then(|&m| self.concept_of(m, 0)),
                        _ => None,
                    };
                    let Some(head) = head else { continue };
                    for slot in &tf.slots {
                        if slot.fillers.iter().any(|f| matches!(f, Filler::MeaningOf { var, path: None } if *var == k)) {
                            if let Some(c) = self.ont.expected_filler(&head, &slot.property) {
                                return Some(c);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn mint(&mut self, concept: &str) -> InstanceRef {
        let n = self.counters.entry(concept.to_string()).or_insert(0);
        *n += 1;
        let r = InstanceRef::new(concept, *n);
        self.order.push(r.clone());
        r
    }

    fn shared_instance(&mut self, role: Role) -> InstanceRef {
        if let Some(r) = self.shared.get(&role_key(role)) {
            return r.clone();
        }
        let r = self.mint("HUMAN");
        self.shared.insert(role_key(role), r.clone());
        r
    }

    fn mint_all(&mut self) {
        let nodes: Vec<usize> = self.sources.keys().copied().collect();
        for n in nodes {
            let Some(c) = self.concepts.get(&n).cloned() else { continue };
            let lemma = self.tree.node(n).map(|x| x.lemma.clone()).unwrap_or_default();
            let r = match (self.sources[&n], pronoun_role(&lemma)) {
                (Source::Typed, Some(role)) => self.shared_instance(role),
                _ => self.mint(&c),
            };
            self.inst.insert(n, r);
        }
        for bi in 0..self.sel.len() {
            let b = self.sel[bi];
            if b.frame_node != b.anchor {
                if let Some(c) = self.senses[bi].head_concept() {
                    let r = self.mint(c);
                    self.construction.insert(bi, r);
                }
            }
        }
        if self.sel.iter().any(|b| b.controlled.values().any(|c| *c == Controller::Addressee)) {
            self.shared_instance(Role::Addressee);
        }
    }

    fn meaning(&self, node: usize, depth: usize) -> Option<InstanceRef> {
        if depth > 8 {
            return None;
        }
        if let Some(r) = self.inst.get(&node) {
            return Some(r.clone());
        }
        match self.sources.get(&node)? {
            Source::Alias(bi, k) => self.meaning(*self.sel[*bi].vars.get(k)?, depth + 1),
            _ => None,
        }
    }

    fn var_instance(&self, bi: usize, k: u32, depth: usize) -> Option<InstanceRef> {
        let b = self.sel[bi];
        if let Some(&n) = b.vars.get(&k) {
            return self.meaning(n, depth);
        }
        if b.controlled.contains_key(&k) {
            return self.resolve_controller(bi, k, depth + 1);
        }
        None
    }

    fn subject_meaning(&self, node: usize, depth: usize) -> Option<InstanceRef> {
        if depth > 12 {
            return None;
        }
        if let Some(s) = self.tree.child(node, "subject") {
            return self.meaning(s, depth);
        }
        for (bi, b) in self.sel.iter().enumerate() {
            if b.frame_node != node {
                continue;
            }
            for &k in b.controlled.keys() {
                if self.senses[bi].constituent_for(k).map(|c| c.role == "subject").unwrap_or(false) {
                    return self.resolve_controller(bi, k, depth + 1);
                }
            }
        }
        None
    }

    /// A governor template that sets the controlled role on the embedded
    /// event directly, as `^$var2 AGENT ^$var1` does.
    fn governor_template(&self, gov: usize, embedded: usize, bi: usize, k: u32, depth: usize) -> Option<InstanceRef> {
        let head = self.senses[bi].sem.first()?;
        let props: Vec<&str> = head
            .slots
            .iter()
            .filter(|s| s.fillers.iter().any(|f| matches!(f, Filler::MeaningOf { var, path: None } if *var == k)))
            .map(|s| s.property.as_str())
            .collect();
        for (gi, g) in self.sel.iter().enumerate() {
            if g.frame_node != gov {
                continue;
            }
            for tf in &self.senses[gi].sem {
                let Filler::MeaningOf { var: x, path: None } = &tf.head else { continue };
                if g.vars.get(x) != Some(&embedded) {
                    continue;
                }
                for s in &tf.slots {
                    if !props.contains(&s.property.as_str()) {
                        continue;
                    }
                    for f in &s.fillers {
                        if let Filler::MeaningOf { var: y, path: None } = f {
                            return self.var_instance(gi, *y, depth + 1);
                        }
                    }
                }
            }
        }
        None
    }

    fn resolve_controller(&self, bi: usize, k: u32, depth: usize) -> Option<InstanceRef> {
        if depth > 12 {
            return None;
        }
        let b = self.sel[bi];
        let fnode = b.frame_node;
        let incoming = self.tree.incoming(fnode);
        match b.controlled.get(&k)? {
            Controller::XcompGovernor => {
                let e = incoming.filter(|e| e.label == "xcomp")?;
                if let Some(r) = self.governor_template(e.head, fnode, bi, k, depth) {
                    return Some(r);
                }
                match self.tree.child(e.head, "directobject") {
                    Some(o) => self.meaning(o, depth),
                    None => self.subject_meaning(e.head, depth),
                }
            }
            Controller::GerundGovernor => {
                let e = incoming.filter(|e| e.label == "obj")?;
                let up = self.tree.incoming(e.head).filter(|u| u.label == "pp")?;
                self.subject_meaning(up.head, depth)
            }
            Controller::FirstConjunct => {
                let e = incoming.filter(|e| e.label == "conj")?;
                self.subject_meaning(e.head, depth)
            }
            Controller::Addressee => self.shared.get(&role_key(Role::Addressee)).cloned(),
            Controller::Copula => {
                let e = incoming.filter(|e| e.label == "xcomp" || e.label == "mod")?;
                if e.label == "mod" {
                    return self.meaning(e.head, depth);
                }
                self.subject_meaning(e.head, depth)
            }
        }
    }
}

/// Composition of one selection of bindings over one tree.
pub fn compose_mr(tree: &ParseTree, selection: &[&CandidateBinding], lex: &Lexicon, ont: &ConceptStore, w: &Weights) -> Result<MeaningRep, ComposeError> {
    let mut senses = Vec::new();
    for b in selection {
        let s = lex.get(&b.sense).ok_or(ComposeError::UnresolvedVariable { sense: b.sense.clone(), var: 0 })?;
        senses.push(s);
    }
    let mut c = Composer {
        tree,
        lex,
        ont,
        sel: selection.to_vec(),
        senses,
        sources: BTreeMap::new(),
        concepts: BTreeMap::new(),
        inst: BTreeMap::new(),
        construction: BTreeMap::new(),
        shared: BTreeMap::new(),
        counters: BTreeMap::new(),
        order: Vec::new(),
    };
    c.assign_sources()?;
    c.fix_concepts()?;
    c.mint_all();

    let mut frames: BTreeMap<InstanceRef, Frame> = BTreeMap::new();
    for r in &c.order {
        frames.insert(r.clone(), Frame::new(Filler::Local(r.clone())));
    }
    let mut score = AnalysisScore::default();
    let mut deferred: Vec<(InstanceRef, String, InstanceRef, String)> = Vec::new();

    for bi in 0..c.sel.len() {
        let b = c.sel[bi];
        let sense = c.senses[bi];
        let mut var_concepts = BTreeMap::new();
        let mut all_vars: BTreeSet<u32> = b.vars.keys().copied().collect();
        all_vars.extend(b.controlled.keys().copied());
        for &k in &all_vars {
            if let Some(r) = c.var_instance(bi, k, 0) {
                var_concepts.insert(k, r.concept.clone());
            }
        }
        score.absorb(score_binding(sense, &var_concepts, ont, w));

        for (fi, tf) in sense.sem.iter().enumerate() {
            let target = match &tf.head {
                Filler::Concept(_) if fi == 0 => match c.construction.get(&bi) {
                    Some(r) => Some(r.clone()),
                    None => c.meaning(b.anchor, 0),
                },
                Filler::MeaningOf { var, path: None } => c.var_instance(bi, *var, 0),
                _ => None,
            };
            let Some(target) = target else {
                if let Filler::MeaningOf { var, .. } = &tf.head {
                    return Err(ComposeError::UnresolvedVariable { sense: sense.id.clone(), var: *var });
                }
                continue;
            };
            for slot in &tf.slots {
                for f in &slot.fillers {
                    let filler = match f {
                        Filler::MeaningOf { var, path: None } => match c.var_instance(bi, *var, 0) {
                            Some(r) => Filler::Local(r),
                            None => {
                                let optional = sense.var_optional(*var);
                                // A controller with no clause to supply it (a
                                // subject gerund) leaves the role open.
                                let open = b.controlled.contains_key(var);
                                if optional || open {
                                    continue;
                                }
                                return Err(ComposeError::UnresolvedVariable { sense: sense.id.clone(), var: *var });
                            }
                        },
                        Filler::MeaningOf { var, path: Some(p) } => {
                            match c.var_instance(bi, *var, 0) {
                                Some(r) => deferred.push((target.clone(), slot.property.clone(), r, p.clone())),
                                None => return Err(ComposeError::UnresolvedVariable { sense: sense.id.clone(), var: *var }),
                            }
                            continue;
                        }
                        other => other.clone(),
                    };
                    let fr = frames.entry(target.clone()).or_insert_with(|| Frame::new(Filler::Local(target.clone())));
                    if slot.facet == Facet::Value {
                        fr.add_value(&slot.property, filler);
                    } else {
                        fr.slots.push(crate::kr::Slot::new(slot.property.clone(), slot.facet, alloc::vec![filler]));
                    }
                }
            }
        }
        let own = match c.construction.get(&bi) {
            Some(r) => Some(r.clone()),
            None if matches!(c.sources.get(&b.anchor), Some(Source::Own(_))) => c.inst.get(&b.anchor).cloned(),
            None => None,
        };
        if let Some(r) = own {
            if let Some(fr) = frames.get_mut(&r) {
                fr.add_value(LEX_MAP, Filler::literal(sense.id.clone()));
            }
        }
    }

    for (target, prop, src, path) in deferred {
        let v = frames.get(&src).and_then(|f| f.value(&path)).cloned();
        match v {
            Some(v) => {
                if let Some(fr) = frames.get_mut(&target) {
                    fr.add_value(&prop, v);
                }
            }
            None => return Err(ComposeError::UnresolvedVariable { sense: format!("{}.{}", src.concept, path), var: 0 }),
        }
    }

    // Speaker and addressee.
    for (k, role) in [(0u8, "speaker"), (1u8, "addressee")] {
        if let Some(r) = c.shared.get(&k) {
            if let Some(fr) = frames.get_mut(r) {
                fr.add_value("DISCOURSE-ROLE", Filler::literal(role));
            }
        }
    }

    // Tense, aspect, discourse status, number.
    for n in &tree.nodes {
        let Some(r) = c.meaning(n.id, 0) else { continue };
        let Some(fr) = frames.get_mut(&r) else { continue };
        if n.is_verb() && c.sources.contains_key(&n.id) {
            if n.feat("ctense") == Some("past") {
                fr.set_value("TIME", Filler::Relation { cmp: Comparator::Lt, operand: FIND_ANCHOR_TIME.into() });
            }
            if n.feat("aspect") == Some("progressive") {
                fr.set_value("ASPECT", Filler::literal("progressive"));
            }
        }
        if n.pos == "n" && matches!(c.sources.get(&n.id), Some(Source::Own(_))) {
            if let Some(d) = tree.child(n.id, "det").and_then(|d| tree.node(d)) {
                match d.feat("def") {
                    Some("no") => fr.set_value("DISCOURSE-STATUS", Filler::literal("new")),
                    Some("yes") => fr.set_value("DISCOURSE-STATUS", Filler::literal("given")),
                    _ => {}
                }
            }
        }
        if (n.pos == "n" || n.pos == "pron") && n.feat("num") == Some("pl") {
            fr.set_value("CARDINALITY", Filler::Relation { cmp: Comparator::Gt, operand: "1".into() });
        }
    }

    // Coordinated events.
    for e in &tree.edges {
        if e.label != "conj" {
            continue;
        }
        let (Some(a), Some(b)) = (c.meaning(e.head, 0), c.meaning(e.dep, 0)) else { continue };
        if a != b {
            if let Some(fr) = frames.get_mut(&a) {
                fr.add_value("CONJOINED-WITH", Filler::Local(b));
            }
        }
    }

    let root = tree.root();
    let mut head = c.construction.values().find(|r| ont.subsumes("REQUEST-INFO", &r.concept)).cloned();

    // Questions answered by composition alone get their request frame here.
    let asks = c.order.iter().any(|r| ont.subsumes("REQUEST-INFO", &r.concept));
    if tree.is_interrogative() && !asks {
        let wh = tree.nodes.iter().find(|n| n.pos == "wh").map(|n| n.id);
        if let Some(w) = wh.and_then(|w| c.meaning(w, 0)) {
            let wf = Filler::Local(w.clone());
            let role = frames.values().find_map(|f| f.slots.iter().find(|s| s.fillers.contains(&wf)).map(|s| s.property.clone()));
            let name = role.map(|p| format!("REQUEST-INFO-WHAT-{}", p)).filter(|n| ont.contains(n)).unwrap_or_else(|| "REQUEST-INFO".into());
            let r = c.mint(&name);
            let mut fr = Frame::new(Filler::Local(r.clone()));
            fr.add_value("THEME", wf);
            frames.insert(r.clone(), fr);
            head = Some(r);
        }
    }
    let mut head = match head {
        Some(h) => h,
        None => c.meaning(root, 0).ok_or(ComposeError::NoHead)?,
    };

    let mut node_instances: BTreeMap<usize, Filler> = BTreeMap::new();
    for n in &tree.nodes {
        if let Some(r) = c.meaning(n.id, 0) {
            node_instances.insert(n.id, Filler::Local(r));
        }
    }

    flatten_attributes(&mut frames, &mut head, &mut node_instances, ont);

    let mut ordered: Vec<Frame> = Vec::new();
    if let Some(f) = frames.remove(&head) {
        ordered.push(f);
    }
    for r in &c.order {
        if let Some(f) = frames.remove(r) {
            ordered.push(f);
        }
    }
    ordered.extend(frames.into_values());

    let mut mr = MeaningRep::from_frames(ordered).map_err(ComposeError::Mr)?;
    mr.head = Filler::Local(head);
    let mut ids: Vec<String> = selection.iter().map(|b| b.sense.clone()).collect();
    ids.sort();
    mr.senses = ids;
    mr.transformations = selection.iter().map(|b| b.chain.len()).sum();
    mr.score = score;
    mr.node_instances = node_instances;
    resolve_coordinated_objects(tree, &mut mr, ont);
    mr.check_closure().map_err(ComposeError::Mr)?;
    Ok(mr)
}

/// Fold a literal attribute (`COLOR DOMAIN x RANGE blue`) into its domain's
/// frame (`x COLOR blue`) unless another frame refers to it or it says more
/// than domain and range.
fn flatten_attributes(frames: &mut BTreeMap<InstanceRef, Frame>, head: &mut InstanceRef, nodes: &mut BTreeMap<usize, Filler>, ont: &ConceptStore) {
    let keys: Vec<InstanceRef> = frames.keys().cloned().collect();
    for a in keys {
        if !ont.subsumes("LITERAL-ATTRIBUTE", &a.concept) {
            continue;
        }
        let af = Filler::Local(a.clone());
        let referenced = frames.values().any(|f| f.head != af && f.slots.iter().any(|s| s.fillers.contains(&af)));
        if referenced {
            continue;
        }
        let fr = &frames[&a];
        if fr.properties().iter().any(|p| !matches!(*p, "DOMAIN" | "RANGE" | LEX_MAP)) {
            continue;
        }
        let domains = fr.all_fillers("DOMAIN");
        let ranges: Vec<Filler> = fr.all_fillers("RANGE").into_iter().cloned().collect();
        if domains.len() != 1 || ranges.is_empty() {
            continue;
        }
        let Some(d) = domains[0].as_local().cloned() else { continue };
        let fits = ont.effective_frame(&d.concept).map(|f| f.has_property(&a.concept)).unwrap_or(false);
        if !fits || !frames.contains_key(&d) {
            continue;
        }
        frames.remove(&a);
        let df = frames.get_mut(&d).expect("domain frame");
        for r in ranges {
            df.add_value(&a.concept, r);
        }
        if *head == a {
            *head = d.clone();
        }
        for v in nodes.values_mut() {
            if *v == af {
                *v = Filler::Local(d.clone());
            }
        }
    }
}

fn agreement(tree: &ParseTree, id: usize) -> (Option<String>, String, Gender) {
    let n = tree.node(id);
    let num = n.and_then(|n| n.feat("num")).map(|s| s.to_string());
    let person = n.and_then(|n| n.feat("person")).unwrap_or("3").to_string();
    let gender = n.and_then(|n| n.feat("gender")).and_then(Gender::parse).unwrap_or(Gender::Unknown);
    (num, person, gender)
}

/// Whether two mentions agree in number, person and gender; unknown values
/// agree with anything.
pub fn mentions_agree(tree: &ParseTree, a: usize, b: usize) -> bool {
    let (na, pa, ga) = agreement(tree, a);
    let (nb, pb, gb) = agreement(tree, b);
    let num_ok = match (na, nb) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    };
    num_ok && pa == pb && ga.agrees(gb)
}

fn replace_instance(mr: &mut MeaningRep, from: &Filler, to: &Filler) {
    mr.frames.retain(|f| &f.head != from);
    for f in &mut mr.frames {
        for s in &mut f.slots {
            for x in &mut s.fillers {
                if x == from {
                    *x = to.clone();
                }
            }
            s.fillers.dedup();
        }
    }
    for v in mr.node_instances.values_mut() {
        if v == from {
            *v = to.clone();
        }
    }
    if &mr.head == from {
        mr.head = to.clone();
    }
}

/// Merge a pronoun object of a second conjunct into the object of the first
/// when they agree.
/// A pronoun first object makes the link more certain.
pub fn resolve_coordinated_objects(tree: &ParseTree, mr: &mut MeaningRep, ont: &ConceptStore) {
    for e in tree.edges.clone() {
        if e.label != "conj" {
            continue;
        }
        let (Some(a), Some(b)) = (tree.child(e.head, "directobject"), tree.child(e.dep, "directobject")) else { continue };
        let (Some(ia), Some(ib)) = (mr.node_instances.get(&a).cloned(), mr.node_instances.get(&b).cloned()) else { continue };
        if ia == ib || !mentions_agree(tree, a, b) {
            continue;
        }
        let pa = tree.node(a).map(|n| n.pos == "pron").unwrap_or(false);
        // Two full noun phrases name two things.
        if !tree.node(b).map(|n| n.pos == "pron").unwrap_or(false) {
            continue;
        }
        // The first mention survives unless both are pronouns and the second
        // was typed more narrowly.
        let ca = ia.concept_name().unwrap_or_default();
        let cb = ib.concept_name().unwrap_or_default();
        let (kept, merged) = if pa && ca != cb && ont.subsumes(ca, cb) { (ib, ia) } else { (ia, ib) };
        replace_instance(mr, &merged, &kept);
        let (Some(k), Some(m)) = (kept.as_local().cloned(), merged.as_local().cloned()) else { continue };
        mr.coreference.push(CorefLink { kept: k, merged: m, confidence: if pa { 0.9 } else { 0.7 }, pronoun_first: pa });
    }
}

/// Ranked readings of one sentence.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub sentence: String,
    pub readings: Vec<MeaningRep>,
    pub trees: Vec<ParseTree>,
    pub trace: Vec<TraceEvent>,
}

impl Analysis {
    pub fn top(&self) -> &MeaningRep {
        &self.readings[0]
    }

    /// Key of the best reading by score alone, used to look up and record
    /// precedents for this input.
    pub fn precedent_key(&self) -> String {
        self.readings.iter().find(|r| !r.precedent).map(|r| r.shape_key()).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnalyzeError {
    Parse(ParseError),
    Rejected { sentence: String, diagnosis: String },
}

impl fmt::Display for AnalyzeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyzeError::Parse(e) => write!(f, "{}", e),
            AnalyzeError::Rejected { sentence, diagnosis } => write!(f, "no acceptable reading of \"{}\": {}", sentence, diagnosis),
        }
    }
}

impl core::error::Error for AnalyzeError {}

#[derive(Clone, Copy, Default)]
pub struct AnalyzeOptions<'a> {
    pub weights: Weights,
    pub precedents: Option<&'a dyn PrecedentLookup>,
}

const SELECTION_LIMIT: usize = 4096;

/// Every way of choosing at most one binding per content node such that the
/// choices do not overlap.
fn selections<'l>(tree: &ParseTree, lat: &'l MatchLattice) -> Vec<Vec<&'l CandidateBinding>> {
    let content = content_nodes(tree);
    let mut claimable: BTreeSet<usize> = BTreeSet::new();
    for b in lat.all() {
        claimable.extend(b.absorbed.iter().copied());
        if b.frame_node != b.anchor {
            claimable.insert(b.frame_node);
            claimable.insert(b.anchor);
        }
    }
    let mut out = Vec::new();
    let mut acc: Vec<&CandidateBinding> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn go<'l>(
        i: usize,
        content: &[usize],
        tree: &ParseTree,
        lat: &'l MatchLattice,
        claimable: &BTreeSet<usize>,
        claimed: &mut BTreeSet<usize>,
        acc: &mut Vec<&'l CandidateBinding>,
        out: &mut Vec<Vec<&'l CandidateBinding>>,
    ) {
        if out.len() >= SELECTION_LIMIT {
            return;
        }
        let Some(&n) = content.get(i) else {
            out.push(acc.clone());
            return;
        };
        if !claimed.contains(&n) {
            for b in lat.candidates(n) {
                let mut grabs: Vec<usize> = b.absorbed.iter().copied().collect();
                if b.frame_node != b.anchor {
                    grabs.push(b.frame_node);
                }
                if grabs.iter().any(|g| claimed.contains(g)) {
                    continue;
                }
                let fresh: Vec<usize> = grabs.into_iter().filter(|g| claimed.insert(*g)).collect();
                claimed.insert(n);
                acc.push(b);
                go(i + 1, content, tree, lat, claimable, claimed, acc, out);
                acc.pop();
                claimed.remove(&n);
                for g in fresh {
                    claimed.remove(&g);
                }
            }
        }
        if claimed.contains(&n) || claimable.contains(&n) || is_typed_word(tree, n) {
            go(i + 1, content, tree, lat, claimable, claimed, acc, out);
        }
    }
    go(0, &content, tree, lat, &claimable, &mut BTreeSet::new(), &mut acc, &mut out);
    out
}

fn selection_label(sel: &[&CandidateBinding]) -> String {
    let parts: Vec<String> = sel
        .iter()
        .map(|b| {
            if b.chain.is_empty() {
                format!("{}@{}", b.sense, b.anchor)
            } else {
                let ch: Vec<&str> = b.chain.iter().map(|t| t.as_str()).collect();
                format!("{}@{}[{}]", b.sense, b.anchor, ch.join(","))
            }
        })
        .collect();
    format!("{{{}}}", parts.join(" "))
}

fn rank_key(m: &MeaningRep) -> (i64, usize, Vec<String>, usize) {
    (-((m.score.aggregate * 1000.0) as i64), m.transformations, m.senses.clone(), m.tree_rank)
}

/// Analyze one sentence given its tokens' text.
pub fn analyze_sentence(text: &str, lex: &Lexicon, ont: &ConceptStore, opts: &AnalyzeOptions) -> Result<Analysis, AnalyzeError> {
    let toks = tokenize(text);
    let words = analyze_words(&toks, lex);
    let sentence = text.trim().to_string();
    let trees = parse_words(&words, 0).map_err(AnalyzeError::Parse)?;
    let mut trace = alloc::vec![TraceEvent::new("parse", &sentence, format!("{} tree(s), ranked by attachment cost", trees.len()))];
    let mut readings: Vec<MeaningRep> = Vec::new();
    let mut best_rejection: Option<(f64, String)> = None;
    for (rank, tree) in trees.iter().enumerate() {
        let lat = enumerate_candidates(tree, lex);
        let mut ev = TraceEvent::new("match", format!("tree {}", rank + 1), format!("{} candidate binding(s)", lat.all().count()));
        for t in &lat.trace {
            match &t.outcome {
                Ok(_) => ev = ev.cite(&t.sense),
                Err(why) => ev = ev.reject(format!("{} at {}{}", t.sense, t.node, chain_label(&t.chain)), why.clone()),
            }
        }
        trace.push(ev);
        let mut ev = TraceEvent::new("compose", format!("tree {}", rank + 1), String::new());
        let mut accepted = 0;
        for sel in selections(tree, &lat) {
            let label = selection_label(&sel);
            match compose_mr(tree, &sel, lex, ont, &opts.weights) {
                Ok(mut mr) => {
                    if let Some(why) = &mr.score.reject {
                        ev = ev.reject(label, why.clone());
                        if best_rejection.as_ref().map(|(s, _)| mr.score.aggregate > *s).unwrap_or(true) {
                            best_rejection = Some((mr.score.aggregate, why.clone()));
                        }
                        continue;
                    }
                    mr.tree_rank = rank;
                    for id in &mr.senses {
                        ev = ev.cite(id);
                    }
                    accepted += 1;
                    readings.push(mr);
                }
                Err(e) => {
                    let why = e.to_string();
                    if best_rejection.is_none() {
                        best_rejection = Some((f64::MIN, why.clone()));
                    }
                    ev = ev.reject(label, why);
                }
            }
        }
        ev.decision = format!("{} reading(s) accepted", accepted);
        trace.push(ev);
    }
    if readings.is_empty() {
        // Open-class guesses let the parse through, but nothing can mean them.
        if let Some((position, w)) = words.iter().enumerate().find(|(_, w)| w.is_unknown()) {
            return Err(AnalyzeError::Parse(ParseError { sentence: 0, position, token: w.surface.clone(), unknown_word: true }));
        }
        let diagnosis = best_rejection.map(|(_, d)| d).unwrap_or_else(|| "no candidate bindings".into());
        return Err(AnalyzeError::Rejected { sentence, diagnosis });
    }
    readings.sort_by_key(rank_key);
    let mut unique: Vec<MeaningRep> = Vec::new();
    for r in readings {
        if !unique.iter().any(|u| frames_equal_modulo_indices(&u.frames, &r.frames).is_some()) {
            unique.push(r);
        }
    }
    let mut ev = TraceEvent::new("score", &sentence, format!("top reading {} with aggregate {}", selection_ids(&unique[0]), unique[0].score.aggregate));
    for r in unique.iter().skip(1) {
        ev = ev.reject(selection_ids(r), format!("aggregate {}, {} transformation(s)", r.score.aggregate, r.transformations));
    }
    for v in &unique[0].score.verdicts {
        ev = ev.cite(v);
    }
    trace.push(ev);

    let key = unique[0].shape_key();
    if let Some(p) = opts.precedents {
        match p.recall_selection(&key) {
            Some(sel) => match unique.iter().position(|r| r.senses == sel) {
                Some(i) => {
                    let mut r = unique.remove(i);
                    r.precedent = true;
                    unique.insert(0, r);
                    trace.push(TraceEvent::new("precedent", &key, format!("stored interpretation {} ranked first", sel.join(" "))));
                }
                None => trace.push(TraceEvent::new("precedent", &key, "stored interpretation not among readings; near miss ignored")),
            },
            None => trace.push(TraceEvent::new("precedent", &key, "no precedent")),
        }
    }
    for l in &unique[0].coreference {
        trace.push(TraceEvent::new("coreference", &sentence, format!("{} = {} (confidence {})", l.kept_str(), l.merged_str(), l.confidence)));
    }
    Ok(Analysis { sentence, readings: unique, trees, trace })
}

impl CorefLink {
    fn kept_str(&self) -> String {
        format!("{}-{}", self.kept.concept, self.kept.index)
    }
    fn merged_str(&self) -> String {
        format!("{}-{}", self.merged.concept, self.merged.index)
    }
}

fn selection_ids(m: &MeaningRep) -> String {
    format!("{{{}}}", m.senses.join(" "))
}

fn chain_label(chain: &[crate::ontosyntax::TransformName]) -> String {
    if chain.is_empty() {
        return String::new();
    }
    let v: Vec<&str> = chain.iter().map(|t| t.as_str()).collect();
    format!(" via {}", v.join("+"))
}

/// Analyze every sentence of a text.
pub fn analyze(text: &str, lex: &Lexicon, ont: &ConceptStore, opts: &AnalyzeOptions) -> Result<Vec<Analysis>, AnalyzeError> {
    let toks = tokenize(text);
    let mut out = Vec::new();
    for (i, s) in sentences(&toks).iter().enumerate() {
        let Some(first) = s.first() else { continue };
        let last = s.last().expect("non-empty");
        let piece = &text[first.start..last.end];
        match analyze_sentence(piece, lex, ont, opts) {
            Ok(a) => out.push(a),
            Err(AnalyzeError::Parse(mut e)) => {
                e.sentence = i;
                return Err(AnalyzeError::Parse(e));
            }
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(AnalyzeError::Parse(ParseError { sentence: 0, position: 0, token: String::new(), unknown_word: false }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn top(s: &str) -> MeaningRep {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        analyze_sentence(s, &lex, &ont, &AnalyzeOptions::default()).unwrap_or_else(|e| panic!("{}: {}", s, e)).readings.remove(0)
    }

    fn frame_of<'a>(m: &'a MeaningRep, concept: &str) -> &'a Frame {
        m.frames.iter().find(|f| f.head.concept_name() == Some(concept)).unwrap_or_else(|| panic!("no {} in\n{}", concept, m.serialize()))
    }

    #[test]
    fn weights_follow_facet_order() {
        let w = Weights::default();
        assert!(w.weight(VerdictKind::MatchesValue) >= w.weight(VerdictKind::MatchesSem));
        assert_eq!(w.weight(VerdictKind::Violation), None);
    }

    #[test]
    fn watch_binding_accepts_human_and_tiger() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        let s = lex.get("watch-v1").unwrap();
        let c: BTreeMap<u32, String> = [(1, "HUMAN".to_string()), (2, "TIGER".to_string())].into_iter().collect();
        let sc = score_binding(s, &c, &ont, &Weights::default());
        assert!(!sc.rejected());
        assert!(sc.verdicts.iter().all(|v| v.verdict >= Some(VerdictKind::MatchesSem)));
    }

    #[test]
    fn watch_binding_downgrades_abstract_theme_and_rejects_abstract_agent() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        let s = lex.get("watch-v1").unwrap();
        let w = Weights::default();
        let ok: BTreeMap<u32, String> = [(1, "HUMAN".to_string()), (2, "TIGER".to_string())].into_iter().collect();
        let idea: BTreeMap<u32, String> = [(1, "HUMAN".to_string()), (2, "IDEA".to_string())].into_iter().collect();
        let low = score_binding(s, &idea, &ont, &w);
        assert!(!low.rejected() && low.aggregate < score_binding(s, &ok, &ont, &w).aggregate);
        let bad: BTreeMap<u32, String> = [(1, "IDEA".to_string()), (2, "TIGER".to_string())].into_iter().collect();
        assert!(score_binding(s, &bad, &ont, &w).rejected());
    }

    #[test]
    fn binding_without_roles_scores_zero() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        let sc = score_binding(lex.get("tiger-n1").unwrap(), &BTreeMap::new(), &ont, &Weights::default());
        assert!(sc.verdicts.is_empty() && sc.aggregate == 0.0 && !sc.rejected());
    }

    #[test]
    fn tony_watching_tiger() {
        let m = top("Tony was watching a tiger.");
        let expect = MeaningRep::parse(
            "instance VOLUNTARY-VISUAL-EVENT-1
  AGENT value HUMAN-1
  THEME value TIGER-1
  TIME value < find-anchor-time
  ASPECT value progressive

instance HUMAN-1
  HAS-NAME value Tony

instance TIGER-1
  DISCOURSE-STATUS value new
",
        )
        .unwrap();
        assert!(m.equivalent(&expect), "{}", m.serialize());
        assert_eq!(m.head.concept_name(), Some("VOLUNTARY-VISUAL-EVENT"));
    }

    #[test]
    fn passive_matches_active_event() {
        let a = top("Tony watched a tiger.");
        let p = top("A tiger was watched by Tony.");
        assert!(a.equivalent(&p), "{}\n{}", a.serialize(), p.serialize());
    }

    #[test]
    fn modality_shares_agent() {
        let m = top("Mary needed to feed Spot before going out to dinner.");
        let modal = frame_of(&m, "MODALITY");
        let feed = frame_of(&m, "FEED");
        let eat = frame_of(&m, "EAT-AT-RESTAURANT");
        let mary = modal.value("ATTRIBUTED-TO").unwrap();
        assert_eq!(modal.value("SCOPE"), Some(&feed.head));
        assert_eq!(feed.value("AGENT"), Some(mary));
        assert_eq!(eat.value("AGENT"), Some(mary));
        assert_eq!(modal.value("TYPE"), Some(&Filler::literal("obligative")));
        assert_eq!(feed.value("BEFORE"), Some(&eat.head));
    }

    #[test]
    fn admire_paraphrases_share_shape() {
        let a = top("John admires his uncle.");
        let b = top("John looks up to his uncle.");
        let c = top("John puts his uncle on a pedestal.");
        assert!(a.equivalent(&b) && b.equivalent(&c), "{}\n{}\n{}", a.serialize(), b.serialize(), c.serialize());
    }

    #[test]
    fn stored_and_derived_wh_agree() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        let q = "What was Mary given by the workers?";
        let stored = analyze_sentence(q, &lex, &ont, &AnalyzeOptions::default()).unwrap();
        assert!(stored.top().senses.contains(&"what-interrogpro7".to_string()));
        let derived = analyze_sentence(q, &lex.without("what-interrogpro7"), &ont, &AnalyzeOptions::default()).unwrap();
        assert!(stored.top().equivalent(derived.top()), "{}\n{}", stored.top().serialize(), derived.top().serialize());
        let active = top("What did the workers give Mary?");
        assert!(active.equivalent(stored.top()));
        assert_eq!(stored.top().head.concept_name(), Some("REQUEST-INFO-WHAT-THEME"));
    }

    #[test]
    fn coordinated_objects_merge_on_agreement() {
        let m = top("Patty grabbed the cupcake and scarfed it down.");
        assert_eq!(m.coreference.len(), 1);
        assert_eq!(frame_of(&m, "GRAB").value("THEME"), frame_of(&m, "EAT").value("THEME"));
        let p = top("Patty grabbed it and scarfed it down.");
        assert!(p.coreference[0].confidence > m.coreference[0].confidence);
        let k = top("You have to open the kettle and pour the water.");
        assert!(k.coreference.is_empty());
        let n = top("Patty grabbed the cupcakes and scarfed it down.");
        assert!(n.coreference.is_empty());
        assert_ne!(frame_of(&n, "GRAB").value("THEME"), frame_of(&n, "EAT").value("THEME"));
    }

    #[test]
    fn attributes_fold_into_their_objects() {
        let m = top("The bicycle is blue.");
        assert_eq!(m.head.concept_name(), Some("BICYCLE"));
        assert_eq!(m.frames.len(), 1);
        assert_eq!(m.frames[0].value("COLOR"), Some(&Filler::literal("blue")));
        let m = top("The blue bicycle is expensive.");
        assert_eq!(m.head.concept_name(), Some("COST"));
        assert_eq!(frame_of(&m, "BICYCLE").value("COLOR"), Some(&Filler::literal("blue")));
        let m = top("The fact that the bicycle was blue amused me.");
        let color = frame_of(&m, "COLOR");
        assert_eq!(frame_of(&m, "AMUSE").value("CAUSED-BY"), Some(&color.head));
    }

    #[test]
    fn coffee_readings_ranked_by_score() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        let a = analyze_sentence("I need a cup of coffee.", &lex, &ont, &AnalyzeOptions::default()).unwrap();
        let heads: Vec<&str> = a.readings.iter().map(|r| r.head.concept_name().unwrap()).collect();
        assert!(heads.contains(&"TAKE-BREAK") && heads.len() >= 2, "{:?}", heads);
        assert_ne!(heads[0], "TAKE-BREAK");
    }

    struct Fixed(Vec<String>);
    impl PrecedentLookup for Fixed {
        fn recall_selection(&self, _: &str) -> Option<Vec<String>> {
            Some(self.0.clone())
        }
    }

    #[test]
    fn precedent_moves_stored_reading_first() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        let plain = analyze_sentence("I need a cup of coffee.", &lex, &ont, &AnalyzeOptions::default()).unwrap();
        let other = plain.readings.iter().find(|r| r.head.concept_name() == Some("TAKE-BREAK")).unwrap();
        let memory = Fixed(other.senses.clone());
        let opts = AnalyzeOptions { precedents: Some(&memory), ..Default::default() };
        let a = analyze_sentence("I need a cup of coffee.", &lex, &ont, &opts).unwrap();
        assert!(a.top().precedent);
        assert_eq!(a.top().head.concept_name(), Some("TAKE-BREAK"));
        assert_eq!(a.precedent_key(), plain.top().shape_key());
        let miss = Fixed(alloc::vec!["nothing-n1".into()]);
        let opts = AnalyzeOptions { precedents: Some(&miss), ..Default::default() };
        let a = analyze_sentence("I need a cup of coffee.", &lex, &ont, &opts).unwrap();
        assert!(!a.top().precedent);
        assert!(a.trace.iter().any(|e| e.stage == "precedent" && e.decision.contains("near miss")));
    }

    #[test]
    fn out_of_fragment_is_parse_error() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        assert!(matches!(analyze_sentence("Tony the tiger.", &lex, &ont, &AnalyzeOptions::default()), Err(AnalyzeError::Parse(_))));
    }

    #[test]
    fn every_corpus_sentence_composes_and_is_closed() {
        let (lex, ont) = (bundled::lexicon(), bundled::ontology());
        for line in bundled::CORPUS.lines().filter(|l| !l.trim().is_empty()) {
            let a = analyze_sentence(line, &lex, &ont, &AnalyzeOptions::default()).unwrap_or_else(|e| panic!("{}: {}", line, e));
            for r in &a.readings {
                r.check_closure().unwrap();
                assert_eq!(MeaningRep::parse(&r.serialize()).unwrap().frames, r.frames);
            }
        }
    }
}
