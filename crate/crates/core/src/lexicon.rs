//! Construction-semantics lexicon: senses pairing a syntactic pattern
//! (`syn-struc`) with a semantic template (`sem-struc`).
//!
//! ```text
//! sense look-v24
//!   ex value "John looks up to his uncle."
//!   syn-class value v-part-pp
//!   sem-shape value EVENT(AGENT,THEME)
//!   syn-struc
//!     subject $var1
//!     v $var0
//!     part up
//!     pp
//!       prep to
//!       obj $var2
//!   sem-struc
//!     ADMIRE
//!       AGENT value ^$var1
//!       THEME value ^$var2
//! ```
//!
//! A constituent line is `role [$varN] [word] [opt] [form=F]`. Nested lines
//! describe dependents of that constituent's node, except `prep` and `n`,
//! which constrain the node itself.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kr::{frame_from_node, frame_to_node, parse_kb, Block, BlockKind, Facet, Filler, Frame, KrError, Node, Section, Slot};
use crate::ontology::ConceptStore;

/// Roles a constituent may carry.
pub const ROLES: &[&str] = &[
    "subject", "v", "directobject", "indirectobject", "xcomp", "part", "pp", "prep", "obj", "det", "n",
    "wh-focus", "by-agent", "aux", "mod", "adj", "modified", "cue",
];

/// Roles that name the constituent's own node rather than a dependent.
pub fn is_self_role(role: &str) -> bool {
    matches!(role, "prep" | "n")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LexError {
    Kr(KrError),
    BadId(String),
    UnknownRole { sense: String, role: String },
    DuplicateVariable { sense: String, var: u32 },
    BadConstituent { sense: String, token: String },
    BadTemplate { sense: String, detail: String },
    DuplicateSense(String),
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexError::Kr(e) => write!(f, "{}", e),
            LexError::BadId(id) => write!(f, "sense id {} is not lemma-posN", id),
            LexError::UnknownRole { sense, role } => write!(f, "{}: unknown syn-struc role {}", sense, role),
            LexError::DuplicateVariable { sense, var } => write!(f, "{}: $var{} bound twice", sense, var),
            LexError::BadConstituent { sense, token } => write!(f, "{}: bad constituent token {}", sense, token),
            LexError::BadTemplate { sense, detail } => write!(f, "{}: bad sem-struc: {}", sense, detail),
            LexError::DuplicateSense(id) => write!(f, "duplicate sense {}", id),
        }
    }
}

impl core::error::Error for LexError {}

impl From<KrError> for LexError {
    fn from(e: KrError) -> Self {
        LexError::Kr(e)
    }
}

/// One element of a syn-struc pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constituent {
    pub role: String,
    pub var: Option<u32>,
    /// Fixed lemma the bound node must carry.
    pub word: Option<String>,
    pub optional: bool,
    /// Required verb form (`pastpart`, `bare`, `ing`).
    pub form: Option<String>,
    pub children: Vec<Constituent>,
}

impl Constituent {
    pub fn new(role: &str) -> Self {
        Constituent { role: role.into(), var: None, word: None, optional: false, form: None, children: Vec::new() }
    }

    pub fn with_var(role: &str, var: u32) -> Self {
        Constituent { var: Some(var), ..Constituent::new(role) }
    }

    pub fn with_word(role: &str, word: &str) -> Self {
        Constituent { word: Some(word.into()), ..Constituent::new(role) }
    }

    fn from_node(sense: &str, node: &Node) -> Result<Self, LexError> {
        let mut tokens = node.tokens.iter();
        let role = tokens.next().cloned().unwrap_or_default();
        if !ROLES.contains(&role.as_str()) {
            return Err(LexError::UnknownRole { sense: sense.into(), role });
        }
        let mut c = Constituent::new(&role);
        for t in tokens {
            if let Some(n) = t.strip_prefix("$var") {
                c.var = Some(n.parse().map_err(|_| LexError::BadConstituent { sense: sense.into(), token: t.clone() })?);
            } else if t == "opt" {
                c.optional = true;
            } else if let Some(f) = t.strip_prefix("form=") {
                c.form = Some(f.into());
            } else if c.word.is_none() {
                c.word = Some(t.clone());
            } else {
                return Err(LexError::BadConstituent { sense: sense.into(), token: t.clone() });
            }
        }
        for child in &node.children {
            c.children.push(Constituent::from_node(sense, child)?);
        }
        Ok(c)
    }

    fn to_node(&self) -> Node {
        let mut tokens = alloc::vec![self.role.clone()];
        if let Some(v) = self.var {
            tokens.push(format!("$var{}", v));
        }
        if let Some(w) = &self.word {
            tokens.push(w.clone());
        }
        if self.optional {
            tokens.push("opt".into());
        }
        if let Some(f) = &self.form {
            tokens.push(format!("form={}", f));
        }
        Node { tokens, children: self.children.iter().map(|c| c.to_node()).collect() }
    }

    /// Depth-first walk over this constituent and its descendants.
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a Constituent>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }
}

/// A lexical sense (construction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexSense {
    pub id: String,
    pub lemma: String,
    pub pos: String,
    pub number: u32,
    pub def: Option<String>,
    pub ex: Option<String>,
    pub syn_class: Option<String>,
    pub sem_shape: Option<String>,
    /// Name of a procedural semantic routine attached to the sense.
    pub routine: Option<String>,
    pub syn: Vec<Constituent>,
    pub sem: Vec<Frame>,
}

/// Split `watch-v1` into (`watch`, `v`, 1). Lemmas may contain hyphens.
pub fn split_sense_id(id: &str) -> Option<(String, String, u32)> {
    let dash = id.rfind('-')?;
    let (lemma, tail) = (&id[..dash], &id[dash + 1..]);
    let digits = tail.find(|c: char| c.is_ascii_digit())?;
    let (pos, num) = tail.split_at(digits);
    if lemma.is_empty() || pos.is_empty() || !pos.chars().all(|c| c.is_ascii_lowercase()) {
        return None;
    }
    Some((lemma.into(), pos.into(), num.parse().ok()?))
}

impl LexSense {
    pub fn from_block(block: &Block) -> Result<Self, LexError> {
        let id = block.name();
        let (lemma, pos, number) = split_sense_id(&id).ok_or_else(|| LexError::BadId(id.clone()))?;
        let text = |p: &str| block.frame.value(p).map(|f| f.as_literal().map(|s| s.to_string()).unwrap_or_else(|| f.to_string()));
        let mut sense = LexSense {
            def: text("def"),
            ex: text("ex"),
            syn_class: text("syn-class"),
            sem_shape: text("sem-shape"),
            routine: text("routine"),
            id,
            lemma,
            pos,
            number,
            syn: Vec::new(),
            sem: Vec::new(),
        };
        if let Some(sec) = block.section("syn-struc") {
            for n in &sec.nodes {
                sense.syn.push(Constituent::from_node(&sense.id, n)?);
            }
        }
        if let Some(sec) = block.section("sem-struc") {
            for n in &sec.nodes {
                let f = frame_from_node(n).map_err(|e| LexError::BadTemplate { sense: sense.id.clone(), detail: e.to_string() })?;
                sense.sem.push(f);
            }
        }
        let mut seen = BTreeSet::new();
        for c in sense.constituents() {
            if let Some(v) = c.var {
                if !seen.insert(v) {
                    return Err(LexError::DuplicateVariable { sense: sense.id.clone(), var: v });
                }
            }
        }
        Ok(sense)
    }

    pub fn to_block(&self) -> Block {
        let mut frame = Frame::new(Filler::Literal(self.id.clone()));
        let mut put = |p: &str, v: &Option<String>| {
            if let Some(v) = v {
                frame.slots.push(Slot::value(p, Filler::literal(v.clone())));
            }
        };
        put("def", &self.def);
        put("ex", &self.ex);
        put("syn-class", &self.syn_class);
        put("sem-shape", &self.sem_shape);
        put("routine", &self.routine);
        let mut block = Block::new(BlockKind::Sense, frame);
        block.sections.push(Section { name: "syn-struc".into(), nodes: self.syn.iter().map(|c| c.to_node()).collect() });
        block.sections.push(Section { name: "sem-struc".into(), nodes: self.sem.iter().map(frame_to_node).collect() });
        block
    }

    /// All constituents, depth first.
    pub fn constituents(&self) -> Vec<&Constituent> {
        let mut out = Vec::new();
        for c in &self.syn {
            c.walk(&mut out);
        }
        out
    }

    /// The constituent binding `$var`.
    pub fn constituent_for(&self, var: u32) -> Option<&Constituent> {
        self.constituents().into_iter().find(|c| c.var == Some(var))
    }

    /// Whether `$var` sits inside an optional constituent.
    pub fn var_optional(&self, var: u32) -> bool {
        fn find(c: &Constituent, var: u32, opt: bool) -> Option<bool> {
            let opt = opt || c.optional;
            if c.var == Some(var) {
                return Some(opt);
            }
            c.children.iter().find_map(|k| find(k, var, opt))
        }
        self.syn.iter().find_map(|c| find(c, var, false)).unwrap_or(false)
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        self.constituents().iter().filter_map(|c| c.var).collect()
    }

    /// Head concept of the first template frame, when it is a concept.
    pub fn head_concept(&self) -> Option<&str> {
        match &self.sem.first()?.head {
            Filler::Concept(c) => Some(c),
            _ => None,
        }
    }

    /// Case roles of the head template frame filled by a variable meaning.
    pub fn head_arity(&self) -> Vec<String> {
        let Some(head) = self.sem.first() else { return Vec::new() };
        let mut roles: Vec<String> = head
            .slots
            .iter()
            .filter(|s| s.fillers.iter().any(|f| matches!(f, Filler::MeaningOf { .. })))
            .map(|s| s.property.clone())
            .collect();
        roles.sort();
        roles.dedup();
        roles
    }

    /// True for senses whose own syn-struc fixes a surface word besides the
    /// head (idioms, phrasal verbs, stored constructions).
    pub fn has_literals(&self) -> bool {
        self.constituents().iter().any(|c| c.word.is_some())
    }
}

/// A problem found by [`validate_sense`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SenseIssue {
    UnboundVariable(u32),
    MissingHead,
    HeadNotVerb,
    UnknownConcept(String),
    ModalityIncomplete,
}

impl fmt::Display for SenseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SenseIssue::UnboundVariable(v) => write!(f, "^$var{} has no $var{} in syn-struc", v, v),
            SenseIssue::MissingHead => write!(f, "no constituent binds $var0"),
            SenseIssue::HeadNotVerb => write!(f, "verb sense binds $var0 outside role v"),
            SenseIssue::UnknownConcept(c) => write!(f, "unknown concept {}", c),
            SenseIssue::ModalityIncomplete => write!(f, "MODALITY frame lacks SCOPE or ATTRIBUTED-TO"),
        }
    }
}

fn template_vars(f: &Filler, out: &mut BTreeSet<u32>) {
    match f {
        Filler::MeaningOf { var, .. } | Filler::Var(var) => {
            out.insert(*var);
        }
        _ => {}
    }
}

/// Check a sense against its own pattern and the ontology.
pub fn validate_sense(sense: &LexSense, ont: &ConceptStore) -> Vec<SenseIssue> {
    let mut issues = BTreeSet::new();
    let declared = sense.variables();
    let mut used = BTreeSet::new();
    for frame in &sense.sem {
        template_vars(&frame.head, &mut used);
        for s in &frame.slots {
            for f in &s.fillers {
                template_vars(f, &mut used);
                if let Filler::Concept(c) = f {
                    if !ont.contains(c) {
                        issues.insert(SenseIssue::UnknownConcept(c.clone()));
                    }
                }
            }
        }
        if let Filler::Concept(c) = &frame.head {
            if !ont.contains(c) {
                issues.insert(SenseIssue::UnknownConcept(c.clone()));
            }
            if c == "MODALITY" && (!frame.has_property("SCOPE") || !frame.has_property("ATTRIBUTED-TO")) {
                issues.insert(SenseIssue::ModalityIncomplete);
            }
        }
    }
    for v in used.difference(&declared) {
        issues.insert(SenseIssue::UnboundVariable(*v));
    }
    match sense.constituent_for(0) {
        None => {
            issues.insert(SenseIssue::MissingHead);
        }
        Some(c) if sense.pos == "v" && c.role != "v" => {
            issues.insert(SenseIssue::HeadNotVerb);
        }
        _ => {}
    }
    issues.into_iter().collect()
}

/// Parse `EVENT(AGENT,THEME)` into its role list.
pub fn sem_shape_roles(label: &str) -> Option<Vec<String>> {
    let open = label.find('(')?;
    let inner = label[open + 1..].strip_suffix(')')?;
    let mut roles: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    roles.sort();
    Some(roles)
}

/// The lexicon, immutable once built.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    senses: BTreeMap<String, LexSense>,
    by_lemma: BTreeMap<(String, String), Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self, LexError> {
        Self::from_blocks(&parse_kb(text)?)
    }

    pub fn from_blocks(blocks: &[Block]) -> Result<Self, LexError> {
        let mut lex = Lexicon::default();
        for b in blocks.iter().filter(|b| b.kind == BlockKind::Sense) {
            lex.insert(LexSense::from_block(b)?)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, sense: LexSense) -> Result<(), LexError> {
        if self.senses.contains_key(&sense.id) {
            return Err(LexError::DuplicateSense(sense.id));
        }
        let key = (sense.lemma.clone(), sense.pos.clone());
        let ids = self.by_lemma.entry(key).or_default();
        ids.push(sense.id.clone());
        let senses = &self.senses;
        let number = |id: &String| senses.get(id).map(|s| s.number).unwrap_or(sense.number);
        ids.sort_by_key(number);
        self.senses.insert(sense.id.clone(), sense);
        Ok(())
    }

    /// A copy with `sense` added, replacing any sense with the same id.
    pub fn with_sense(&self, sense: LexSense) -> Self {
        let mut next = self.without(&sense.id);
        next.insert(sense).expect("id freed above");
        next
    }

    /// A copy with the named sense removed.
    pub fn without(&self, id: &str) -> Self {
        let mut next = Lexicon::default();
        for s in self.senses.values().filter(|s| s.id != id) {
            next.insert(s.clone()).expect("ids are unique");
        }
        next
    }

    /// Senses of `lemma` with part of speech `pos`, in numeric order.
    pub fn lookup(&self, lemma: &str, pos: &str) -> Vec<&LexSense> {
        self.by_lemma
            .get(&(lemma.to_string(), pos.to_string()))
            .map(|ids| ids.iter().map(|id| &self.senses[id]).collect())
            .unwrap_or_default()
    }

    /// Every sense of `lemma` regardless of part of speech.
    pub fn lookup_any(&self, lemma: &str) -> Vec<&LexSense> {
        self.by_lemma.iter().filter(|((l, _), _)| l == lemma).flat_map(|(_, ids)| ids.iter().map(|id| &self.senses[id])).collect()
    }

    pub fn get(&self, id: &str) -> Option<&LexSense> {
        self.senses.get(id)
    }

    pub fn senses(&self) -> impl Iterator<Item = &LexSense> {
        self.senses.values()
    }

    pub fn len(&self) -> usize {
        self.senses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senses.is_empty()
    }

    pub fn senses_by_syn_class(&self, class: &str) -> Vec<&LexSense> {
        self.senses.values().filter(|s| s.syn_class.as_deref() == Some(class)).collect()
    }

    /// Senses whose head template frame is `concept`.
    pub fn senses_for_concept(&self, concept: &str) -> Vec<&LexSense> {
        self.senses.values().filter(|s| s.head_concept() == Some(concept)).collect()
    }

    /// Is `lemma` known under any part of speech?
    pub fn knows(&self, lemma: &str) -> bool {
        self.by_lemma.keys().any(|(l, _)| l == lemma)
    }

    /// Multiword lemmas (written with `_`), longest first.
    pub fn multiword_lemmas(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = self
            .by_lemma
            .keys()
            .filter(|(l, _)| l.contains('_'))
            .map(|(l, _)| l.split('_').map(|s| s.to_string()).collect())
            .collect();
        out.sort_by(|a: &Vec<String>, b: &Vec<String>| b.len().cmp(&a.len()).then(a.cmp(b)));
        out.dedup();
        out
    }

    pub fn to_blocks(&self) -> Vec<Block> {
        self.senses.values().map(|s| s.to_block()).collect()
    }

    /// Senses sharing a sem-shape label must agree on head arity, and agree
    /// with the label's own role list when it has one.
    pub fn lint_sem_shapes(&self) -> Vec<String> {
        let mut groups: BTreeMap<&str, Vec<&LexSense>> = BTreeMap::new();
        for s in self.senses.values() {
            if let Some(label) = &s.sem_shape {
                groups.entry(label.as_str()).or_default().push(s);
            }
        }
        let mut out = Vec::new();
        for (label, senses) in groups {
            let expected = sem_shape_roles(label).unwrap_or_else(|| senses[0].head_arity());
            for s in senses {
                let got = s.head_arity();
                if got != expected {
                    out.push(format!("{}: sem-shape {} expects {:?}, template has {:?}", s.id, label, expected, got));
                }
            }
        }
        out
    }
}

/// A new sense skeleton for a word learned on the fly: the syntactic class
/// comes from the parse, the template head from the teacher's concept.
pub fn skeleton_sense(lemma: &str, pos: &str, number: u32, syn_class: &str, concept: &str) -> LexSense {
    let mut syn = Vec::new();
    let mut head = Frame::new(Filler::concept(concept));
    match syn_class {
        "v-trans" => {
            syn.push(Constituent::with_var("subject", 1));
            syn.push(Constituent::with_var("v", 0));
            syn.push(Constituent::with_var("directobject", 2));
            head.slots.push(Slot::new("AGENT", Facet::Value, alloc::vec![Filler::MeaningOf { var: 1, path: None }]));
            head.slots.push(Slot::new("THEME", Facet::Value, alloc::vec![Filler::MeaningOf { var: 2, path: None }]));
        }
        "v-intrans" => {
            syn.push(Constituent::with_var("subject", 1));
            syn.push(Constituent::with_var("v", 0));
            head.slots.push(Slot::new("AGENT", Facet::Value, alloc::vec![Filler::MeaningOf { var: 1, path: None }]));
        }
        _ => syn.push(Constituent::with_var(if pos == "v" { "v" } else { "n" }, 0)),
    }
    LexSense {
        id: format!("{}-{}{}", lemma, pos, number),
        lemma: lemma.into(),
        pos: pos.into(),
        number,
        def: None,
        ex: None,
        syn_class: Some(syn_class.into()),
        sem_shape: None,
        routine: None,
        syn,
        sem: alloc::vec![head],
    }
}
