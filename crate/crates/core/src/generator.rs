//! Generation of English sentences from meaning representations. A shape of
//! meaning is fitted to the MR (`wrapper_fit`), then its recipe drives a
//! realizer that inverts lexicon senses (`apply_wrapper`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kr::{parse_kb, BlockKind, Comparator, Filler, Frame, KrError, Node};
use crate::lexicon::{Constituent, LexSense, Lexicon};
use crate::ontology::ConceptStore;
use crate::semantics::{MeaningRep, EPISODIC_MEM, LEX_MAP};
use crate::syntax::morph::{be_form, inflect_verb, plural_noun, VerbForm};

type Used = (Filler, String, Filler);
type Unified = (BTreeMap<u32, Filler>, Vec<Used>);
type Selected<'a> = (&'a LexSense, BTreeMap<u32, Filler>, Vec<Used>);
type SenseRank<'a> = (isize, usize, u32, &'a str);
type SlotOption = (Option<(String, String)>, Option<(String, Filler)>);
use crate::trace::TraceEvent;

pub const SHAPES_KB: &str = include_str!("../kb/shapes.kb");

/// Slots realized through inflection, determiners or names rather than
/// through a sense of their own.
const GRAMMATICAL: &[&str] = &[LEX_MAP, EPISODIC_MEM, "TIME", "ASPECT", "DISCOURSE-STATUS", "DISCOURSE-ROLE", "CARDINALITY", "HAS-NAME"];

fn is_content(prop: &str) -> bool {
    !GRAMMATICAL.contains(&prop)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Lit(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropPattern {
    Name(String),
    /// Any property at or below `under`, bound to the variable.
    Var { name: String, under: Option<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotPattern {
    pub prop: PropPattern,
    pub term: Term,
    pub optional: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramePattern {
    pub var: String,
    pub concept: String,
    pub slots: Vec<SlotPattern>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    Same { a: String, b: String, reason: String },
    Different { a: String, b: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transform {
    WhFronting(String),
    FactClause(String),
    Copula,
    Predicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Select { var: String, by_type: bool },
    Transform(Transform),
    Linearize,
    Inflect,
    Punctuate(char),
}

/// A shape of meaning: a frame pattern, constraints on its bindings and a
/// realization recipe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub name: String,
    pub pattern: Vec<FramePattern>,
    pub constraints: Vec<Constraint>,
    pub recipe: Vec<Step>,
    /// Modality type to lemma.
    pub lemma_for: BTreeMap<String, String>,
    pub specificity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShapeError {
    Kr(KrError),
    Bad { shape: String, reason: String },
}

impl fmt::Display for ShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeError::Kr(e) => write!(f, "{}", e),
            ShapeError::Bad { shape, reason } => write!(f, "shape {}: {}", shape, reason),
        }
    }
}

impl core::error::Error for ShapeError {}

fn var_name(t: &str) -> Option<String> {
    t.strip_prefix('?').map(|s| s.to_string())
}

fn term(t: &str) -> Term {
    match var_name(t) {
        Some(v) => Term::Var(v),
        None => Term::Lit(t.to_string()),
    }
}

impl Shape {
    fn parse_block(name: &str, frame: &Frame, pattern: &[Node], constraints: &[Node], recipe: &[Node]) -> Result<Shape, ShapeError> {
        let bad = |reason: String| ShapeError::Bad { shape: name.to_string(), reason };
        let mut frames = Vec::new();
        for n in pattern {
            let (Some(v), Some(c)) = (n.tokens.first().and_then(|t| var_name(t)), n.tokens.get(1)) else {
                return Err(bad(format!("pattern line '{}' needs ?var CONCEPT", n.tokens.join(" "))));
            };
            let mut slots = Vec::new();
            for s in &n.children {
                if s.tokens.len() < 2 {
                    return Err(bad(format!("slot line '{}' needs PROPERTY TERM", s.tokens.join(" "))));
                }
                let p = &s.tokens[0];
                let prop = match var_name(p) {
                    Some(v) => match v.split_once(':') {
                        Some((n, u)) => PropPattern::Var { name: n.into(), under: Some(u.into()) },
                        None => PropPattern::Var { name: v, under: None },
                    },
                    None => PropPattern::Name(p.clone()),
                };
                slots.push(SlotPattern { prop, term: term(&s.tokens[1]), optional: s.tokens.get(2).map(|t| t == "opt").unwrap_or(false) });
            }
            frames.push(FramePattern { var: v, concept: c.clone(), slots });
        }
        if frames.is_empty() {
            return Err(bad("empty pattern".into()));
        }
        let mut cons = Vec::new();
        for n in constraints {
            let t = &n.tokens;
            let (Some(a), Some(b)) = (t.get(1).and_then(|x| var_name(x)), t.get(2).and_then(|x| var_name(x))) else {
                return Err(bad(format!("constraint '{}' needs two variables", t.join(" "))));
            };
            let reason = t.get(3).cloned().unwrap_or_else(|| t[0].clone());
            cons.push(match t[0].as_str() {
                "same" => Constraint::Same { a, b, reason },
                "different" => Constraint::Different { a, b, reason },
                other => return Err(bad(format!("unknown constraint {}", other))),
            });
        }
        let mut steps = Vec::new();
        for n in recipe {
            let t = &n.tokens;
            let arg = |i: usize| t.get(i).and_then(|x| var_name(x)).ok_or_else(|| bad(format!("recipe step '{}' needs a variable", t.join(" "))));
            steps.push(match t[0].as_str() {
                "select" => Step::Select { var: arg(1)?, by_type: t.get(2).map(|x| x == "by-type").unwrap_or(false) },
                "transform" => Step::Transform(match t.get(1).map(|s| s.as_str()) {
                    Some("wh-fronting") => Transform::WhFronting(arg(2)?),
                    Some("fact-clause") => Transform::FactClause(arg(2)?),
                    Some("copula") => Transform::Copula,
                    Some("predicate") => Transform::Predicate(arg(2)?),
                    other => return Err(bad(format!("unknown transformation {:?}", other))),
                }),
                "linearize" => Step::Linearize,
                "inflect" => Step::Inflect,
                "punctuate" => Step::Punctuate(t.get(1).and_then(|p| p.chars().next()).unwrap_or('.')),
                other => return Err(bad(format!("unknown recipe step {}", other))),
            });
        }
        let shape = Shape {
            name: name.to_string(),
            specificity: frames.iter().map(|f| 1 + f.slots.len()).sum::<usize>() + cons.len(),
            pattern: frames,
            constraints: cons,
            recipe: steps,
            lemma_for: frame
                .slots
                .iter()
                .filter_map(|s| Some((s.property.strip_prefix("lemma-for-")?.to_string(), s.fillers.first()?.to_string())))
                .collect(),
        };
        shape.check()?;
        Ok(shape)
    }

    fn vars(&self) -> BTreeSet<String> {
        let mut v = BTreeSet::new();
        for f in &self.pattern {
            v.insert(f.var.clone());
            for s in &f.slots {
                if let PropPattern::Var { name, .. } = &s.prop {
                    v.insert(name.clone());
                }
                if let Term::Var(t) = &s.term {
                    v.insert(t.clone());
                }
            }
        }
        v
    }

    /// Recipe references resolve and the steps come in pipeline order.
    fn check(&self) -> Result<(), ShapeError> {
        let bad = |reason: String| ShapeError::Bad { shape: self.name.clone(), reason };
        let vars = self.vars();
        let mut refs: Vec<&String> = Vec::new();
        for c in &self.constraints {
            match c {
                Constraint::Same { a, b, .. } | Constraint::Different { a, b, .. } => refs.extend([a, b]),
            }
        }
        let rank = |s: &Step| match s {
            Step::Select { .. } => 0,
            Step::Transform(_) => 1,
            Step::Linearize => 2,
            Step::Inflect => 3,
            Step::Punctuate(_) => 4,
        };
        for w in self.recipe.windows(2) {
            if rank(&w[0]) > rank(&w[1]) {
                return Err(bad("recipe steps out of order".into()));
            }
        }
        if !matches!(self.recipe.first(), Some(Step::Select { .. })) {
            return Err(bad("recipe must start with select".into()));
        }
        for s in &self.recipe {
            match s {
                Step::Select { var, .. } => refs.push(var),
                Step::Transform(Transform::WhFronting(v) | Transform::FactClause(v) | Transform::Predicate(v)) => refs.push(v),
                _ => {}
            }
        }
        for r in refs {
            if !vars.contains(r) {
                return Err(bad(format!("?{} is not a pattern variable", r)));
            }
        }
        Ok(())
    }
}

/// Registered shapes, tried most specific first; ties keep registration
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeRegistry {
    shapes: Vec<Shape>,
}

impl ShapeRegistry {
    pub fn parse(text: &str) -> Result<Self, ShapeError> {
        let mut shapes = Vec::new();
        for b in parse_kb(text).map_err(ShapeError::Kr)? {
            if b.kind != BlockKind::Shape {
                continue;
            }
            let name = b.name();
            let sec = |n: &str| b.section(n).map(|s| s.nodes.as_slice()).unwrap_or(&[]);
            shapes.push(Shape::parse_block(&name, &b.frame, sec("pattern"), sec("constraints"), sec("recipe"))?);
        }
        Ok(ShapeRegistry::from_shapes(shapes))
    }

    pub fn from_shapes(mut shapes: Vec<Shape>) -> Self {
        shapes.sort_by_key(|s| core::cmp::Reverse(s.specificity));
        ShapeRegistry { shapes }
    }

    pub fn bundled() -> Self {
        Self::parse(SHAPES_KB).expect("bundled shapes are well-formed")
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn get(&self, name: &str) -> Option<&Shape> {
        self.shapes.iter().find(|s| s.name == name)
    }
}

pub type Bindings = BTreeMap<String, Filler>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub reason: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

#[derive(Clone, Copy)]
enum Goal {
    Frame(usize),
    Slot(usize, usize),
}

struct Fitter<'a> {
    shape: &'a Shape,
    mr: &'a MeaningRep,
    ont: &'a ConceptStore,
    goals: Vec<Goal>,
    found: Vec<Bindings>,
    first_failure: Option<String>,
}

fn concept_fits(ont: &ConceptStore, want: &str, have: &str) -> bool {
    want == have || ont.subsumes(want, have)
}

impl<'a> Fitter<'a> {
    fn fail(&mut self, why: String) {
        if self.first_failure.is_none() {
            self.first_failure = Some(why);
        }
    }

    fn search(&mut self, i: usize, b: &mut Bindings) {
        if self.found.len() >= 64 {
            return;
        }
        let Some(goal) = self.goals.get(i).copied() else {
            self.found.push(b.clone());
            return;
        };
        match goal {
            Goal::Frame(fi) => {
                let fp = &self.shape.pattern[fi];
                let cands: Vec<Filler> = match b.get(&fp.var) {
                    Some(x) => alloc::vec![x.clone()],
                    None if fi == 0 => alloc::vec![self.mr.head.clone()],
                    None => self.mr.frames.iter().map(|f| f.head.clone()).collect(),
                };
                let mut any = false;
                for x in cands {
                    let Some(c) = x.concept_name() else { continue };
                    if self.mr.frame(&x).is_none() || !concept_fits(self.ont, &fp.concept, c) {
                        continue;
                    }
                    any = true;
                    let fresh = !b.contains_key(&fp.var);
                    b.insert(fp.var.clone(), x);
                    self.search(i + 1, b);
                    if fresh {
                        b.remove(&fp.var);
                    }
                }
                if !any {
                    let what = match b.get(&fp.var) {
                        Some(x) => format!("?{} is {}, not {}", fp.var, x, fp.concept),
                        None if fi == 0 => format!("head {} is not {}", self.mr.head, fp.concept),
                        None => format!("no {} frame for ?{}", fp.concept, fp.var),
                    };
                    self.fail(what);
                }
            }
            Goal::Slot(fi, si) => {
                let fp = &self.shape.pattern[fi];
                let sp = &fp.slots[si];
                let frame = self.mr.frame(&b[&fp.var]).expect("frame goal ran first");
                let mut options: Vec<SlotOption> = Vec::new();
                let props: Vec<String> = match &sp.prop {
                    PropPattern::Name(p) => alloc::vec![p.clone()],
                    PropPattern::Var { name, under } => match b.get(name) {
                        Some(p) => alloc::vec![p.to_string()],
                        None => frame
                            .slots
                            .iter()
                            .map(|s| s.property.clone())
                            .filter(|p| is_content(p))
                            .filter(|p| under.as_ref().map(|u| concept_fits(self.ont, u, p)).unwrap_or(true))
                            .collect(),
                    },
                };
                for p in props {
                    let bind_prop = match &sp.prop {
                        PropPattern::Var { name, .. } if !b.contains_key(name) => Some((name.clone(), p.clone())),
                        _ => None,
                    };
                    for f in frame.all_fillers(&p) {
                        let ok_bind = match &sp.term {
                            Term::Lit(l) => (f.as_literal() == Some(l.as_str()) || f.concept_name() == Some(l.as_str()) && !f.is_instance()).then_some(None),
                            Term::Var(v) => match b.get(v) {
                                Some(x) => (x == f).then_some(None),
                                None => Some(Some((v.clone(), f.clone()))),
                            },
                        };
                        if let Some(bind) = ok_bind {
                            options.push((bind_prop.clone(), bind));
                        }
                    }
                }
                if options.is_empty() && !sp.optional {
                    let prop = match &sp.prop {
                        PropPattern::Name(p) => p.clone(),
                        PropPattern::Var { name, under } => format!("?{}{}", name, under.as_ref().map(|u| format!(":{}", u)).unwrap_or_default()),
                    };
                    let t = match &sp.term {
                        Term::Lit(l) => l.clone(),
                        Term::Var(v) => b.get(v).map(|x| x.to_string()).unwrap_or_else(|| format!("?{}", v)),
                    };
                    self.fail(format!("?{} lacks {} {}", fp.var, prop, t));
                    return;
                }
                for (bp, bt) in &options {
                    if let Some((k, v)) = bp {
                        b.insert(k.clone(), Filler::literal(v.clone()));
                    }
                    if let Some((k, v)) = bt {
                        b.insert(k.clone(), v.clone());
                    }
                    self.search(i + 1, b);
                    if let Some((k, _)) = bp {
                        b.remove(k);
                    }
                    if let Some((k, _)) = bt {
                        b.remove(k);
                    }
                }
                if sp.optional {
                    self.search(i + 1, b);
                }
            }
        }
    }
}

/// Unify the shape's pattern with the MR and check its constraints.
pub fn wrapper_fit(shape: &Shape, mr: &MeaningRep, ont: &ConceptStore) -> Result<Bindings, Mismatch> {
    if mr.frames.is_empty() || mr.head_frame().is_none() {
        return Err(Mismatch { reason: "no-head".into() });
    }
    let mut goals = Vec::new();
    for (fi, f) in shape.pattern.iter().enumerate() {
        goals.push(Goal::Frame(fi));
        for si in 0..f.slots.len() {
            goals.push(Goal::Slot(fi, si));
        }
    }
    let mut fitter = Fitter { shape, mr, ont, goals, found: Vec::new(), first_failure: None };
    fitter.search(0, &mut Bindings::new());
    if fitter.found.is_empty() {
        return Err(Mismatch { reason: fitter.first_failure.unwrap_or_else(|| "pattern does not match".into()) });
    }
    let mut violated = None;
    for b in fitter.found {
        let broken = shape.constraints.iter().find(|c| match c {
            Constraint::Same { a, b: other, .. } => b.get(a) != b.get(other),
            Constraint::Different { a, b: other, .. } => b.get(a) == b.get(other),
        });
        match broken {
            None => return Ok(b),
            Some(Constraint::Same { reason, .. } | Constraint::Different { reason, .. }) => {
                violated.get_or_insert_with(|| reason.clone());
            }
        }
    }
    Err(Mismatch { reason: violated.unwrap_or_default() })
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenError {
    NoShapeFits { reasons: Vec<(String, String)> },
    NoSense { concept: String },
    NoAdjective { attribute: String, value: String },
    Unrealized { instance: String, property: String },
    Unmentioned { instance: String },
    UncontrolledSubject { instance: String },
    Unbound { shape: String, var: String },
    NotClosed(String),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::NoShapeFits { reasons } => {
                write!(f, "no shape fits")?;
                for (s, r) in reasons {
                    write!(f, "; {}: {}", s, r)?;
                }
                Ok(())
            }
            GenError::NoSense { concept } => write!(f, "no sense found for {}", concept),
            GenError::NoAdjective { attribute, value } => write!(f, "no adjective expresses {} {}", attribute, value),
            GenError::Unrealized { instance, property } => write!(f, "cannot realize {} of {}", property, instance),
            GenError::Unmentioned { instance } => write!(f, "{} is not expressed", instance),
            GenError::UncontrolledSubject { instance } => write!(f, "the subject of {} cannot be left implicit", instance),
            GenError::Unbound { shape, var } => write!(f, "shape {} leaves ?{} unbound", shape, var),
            GenError::NotClosed(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for GenError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Finite,
    Imperative,
    ToInf,
    Bare,
    Gerund,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Case {
    Subject,
    Object,
}

#[derive(Default)]
struct Clause {
    front: Vec<String>,
    subject: Vec<String>,
    subject_filler: Option<Filler>,
    verb: Option<String>,
    rest: Vec<String>,
    end: Vec<String>,
}

struct Realizer<'a> {
    mr: &'a MeaningRep,
    lex: &'a Lexicon,
    ont: &'a ConceptStore,
    consumed: BTreeSet<(Filler, String, Filler)>,
    mentioned: BTreeSet<Filler>,
    gap: Option<Filler>,
    cited: Vec<String>,
    depth: usize,
}

fn is_past(f: &Frame) -> bool {
    matches!(f.value("TIME"), Some(Filler::Relation { cmp: Comparator::Lt, .. }))
}

fn is_plural(f: &Frame) -> bool {
    matches!(f.value("CARDINALITY"), Some(Filler::Relation { cmp: Comparator::Gt, .. }))
}

fn words(s: &str) -> Vec<String> {
    s.split('_').flat_map(|w| w.split(' ')).map(|w| w.to_string()).collect()
}

impl<'a> Realizer<'a> {
    fn new(mr: &'a MeaningRep, lex: &'a Lexicon, ont: &'a ConceptStore) -> Self {
        Realizer { mr, lex, ont, consumed: BTreeSet::new(), mentioned: BTreeSet::new(), gap: None, cited: Vec::new(), depth: 0 }
    }

    fn frame(&self, x: &Filler) -> Option<&'a Frame> {
        self.mr.frame(x)
    }

    fn concept(&self, x: &Filler) -> String {
        x.concept_name().unwrap_or_default().to_string()
    }

    fn is_a(&self, x: &Filler, c: &str) -> bool {
        x.concept_name().map(|k| concept_fits(self.ont, c, k)).unwrap_or(false)
    }

    fn consume(&mut self, x: &Filler, p: &str, f: &Filler) {
        self.consumed.insert((x.clone(), p.to_string(), f.clone()));
    }

    fn is_consumed(&self, x: &Filler, p: &str, f: &Filler) -> bool {
        self.consumed.contains(&(x.clone(), p.to_string(), f.clone()))
    }

    fn cite(&mut self, s: &str) {
        if !self.cited.iter().any(|c| c == s) {
            self.cited.push(s.to_string());
        }
    }

    fn person(&self, x: Option<&Filler>) -> (u8, bool) {
        let Some(f) = x.and_then(|x| self.frame(x)) else { return (3, false) };
        let p = match f.value("DISCOURSE-ROLE").and_then(|r| r.as_literal()) {
            Some("speaker") => 1,
            Some("addressee") => 2,
            _ => 3,
        };
        (p, is_plural(f))
    }

    fn is_addressee(&self, x: Option<&Filler>) -> bool {
        x.and_then(|x| self.frame(x)).and_then(|f| f.value("DISCOURSE-ROLE")).and_then(|r| r.as_literal()) == Some("addressee")
    }

    /// Unify a sense's semantic template with the MR around `x`.
    fn unify(&self, sense: &LexSense, x: &Filler) -> Option<Unified> {
        let mut b: BTreeMap<u32, Filler> = BTreeMap::new();
        let mut used = Vec::new();
        // Gerunds leave their subject unexpressed.
        let subject_var = sense.syn.iter().find(|c| c.role == "subject").and_then(|c| c.var);
        for (fi, tf) in sense.sem.iter().enumerate() {
            let target = match &tf.head {
                Filler::Concept(c) if fi == 0 => {
                    if x.concept_name() != Some(c.as_str()) {
                        return None;
                    }
                    x.clone()
                }
                Filler::MeaningOf { var, path: None } if fi > 0 => b.get(var)?.clone(),
                _ => return None,
            };
            let fr = self.frame(&target)?;
            for slot in &tf.slots {
                for tfill in &slot.fillers {
                    let have = fr.all_fillers(&slot.property);
                    match tfill {
                        Filler::MeaningOf { var, path: None } => match b.get(var) {
                            Some(bound) => {
                                if !have.contains(&bound) {
                                    return None;
                                }
                                used.push((target.clone(), slot.property.clone(), bound.clone()));
                            }
                            None => match have.into_iter().find(|h| !used.iter().any(|(t, p, f)| t == &target && p == &slot.property && f == *h)) {
                                Some(h) => {
                                    b.insert(*var, h.clone());
                                    used.push((target.clone(), slot.property.clone(), h.clone()));
                                }
                                None if sense.var_optional(*var) || subject_var == Some(*var) => {}
                                None => return None,
                            },
                        },
                        Filler::MeaningOf { .. } | Filler::Var(_) => return None,
                        lit => {
                            if !have.contains(&lit) {
                                return None;
                            }
                            used.push((target.clone(), slot.property.clone(), lit.clone()));
                        }
                    }
                }
            }
        }
        Some((b, used))
    }

    /// The sense expressing `x` that covers most of its frame; ties go to
    /// preferred lemmas, then the lowest sense number.
    fn select(&self, x: &Filler, prefer: &[String]) -> Result<Selected<'a>, GenError> {
        let concept = self.concept(x);
        let mut best: Option<(SenseRank<'a>, Selected<'a>)> = None;
        for s in self.lex.senses().filter(|s| s.pos == "v" || s.pos == "cue") {
            if s.head_concept() != Some(concept.as_str()) {
                continue;
            }
            let Some((b, used)) = self.unify(s, x) else { continue };
            let pref = prefer.iter().position(|p| *p == s.lemma).unwrap_or(prefer.len());
            let key = (-(used.len() as isize), pref, s.number, s.id.as_str());
            if best.as_ref().map(|(k, ..)| key < *k).unwrap_or(true) {
                best = Some((key, (s, b, used)));
            }
        }
        match best {
            Some((_, sel)) => Ok(sel),
            None => Err(GenError::NoSense { concept }),
        }
    }

    fn adjective(&self, attribute: &str, value: &Filler) -> Result<&'a LexSense, GenError> {
        let mut cands: Vec<&LexSense> = self
            .lex
            .senses()
            .filter(|s| s.pos == "adj" && s.head_concept() == Some(attribute))
            .filter(|s| s.sem[0].all_fillers("RANGE").contains(&value))
            .collect();
        cands.sort_by_key(|s| (s.number, s.id.clone()));
        cands.first().copied().ok_or_else(|| GenError::NoAdjective { attribute: attribute.into(), value: value.to_string() })
    }

    /// A relation sense (preposition or adverb) for `prop`, given whether the
    /// filler is a meaning or a fixed literal.
    fn relation(&self, prop: &str, filler: &Filler) -> Option<&'a LexSense> {
        let mut cands: Vec<&LexSense> = self
            .lex
            .senses()
            .filter(|s| s.sem.len() == 1 && matches!(s.sem[0].head, Filler::MeaningOf { var: 1, path: None }))
            .filter(|s| {
                s.sem[0].slots.iter().any(|sl| {
                    sl.property == prop
                        && sl.fillers.iter().any(|f| match f {
                            Filler::MeaningOf { path: None, .. } => filler.is_instance(),
                            lit => lit == filler,
                        })
                })
            })
            .collect();
        cands.sort_by_key(|s| (s.number, s.id.clone()));
        cands.first().copied()
    }

    fn noun_lemma(&self, f: &Frame) -> Option<String> {
        if let Some(id) = f.value(LEX_MAP).and_then(|l| l.as_literal()) {
            if let Some(s) = self.lex.get(id).filter(|s| s.pos == "n") {
                return Some(s.lemma.clone());
            }
        }
        let c = f.head.concept_name()?;
        let mut cands: Vec<&LexSense> = self.lex.senses_for_concept(c).into_iter().filter(|s| s.pos == "n" && s.sem[0].slots.is_empty()).collect();
        cands.sort_by_key(|s| (s.number, s.id.clone()));
        cands.first().map(|s| s.lemma.clone())
    }

    fn pronoun(&self, f: &Frame, case: Case) -> &'static str {
        let human = self.is_a(&f.head, "HUMAN");
        match (is_plural(f) || human, case) {
            (true, Case::Subject) => "they",
            (true, Case::Object) => "them",
            (false, _) => "it",
        }
    }

    /// Referring expression for one filler.
    fn np(&mut self, x: &Filler, case: Case) -> Result<Vec<String>, GenError> {
        if !x.is_instance() {
            return Ok(words(&x.to_string()));
        }
        if self.gap.as_ref() == Some(x) {
            self.mentioned.insert(x.clone());
            return Ok(alloc::vec!["what".into()]);
        }
        let f = self.frame(x).ok_or_else(|| GenError::NotClosed(x.to_string()))?;
        let again = !self.mentioned.insert(x.clone());
        match f.value("DISCOURSE-ROLE").and_then(|r| r.as_literal()) {
            Some("speaker") => {
                let w = match (is_plural(f), case) {
                    (false, Case::Subject) => "I",
                    (false, Case::Object) => "me",
                    (true, Case::Subject) => "we",
                    (true, Case::Object) => "us",
                };
                return Ok(alloc::vec![w.into()]);
            }
            Some("addressee") => return Ok(alloc::vec!["you".into()]),
            _ => {}
        }
        if let Some(name) = f.value("HAS-NAME") {
            self.consume(x, "HAS-NAME", name);
            return Ok(words(&name.to_string()));
        }
        if again {
            return Ok(alloc::vec![self.pronoun(f, case).into()]);
        }
        if self.is_a(x, "EVENT") {
            return self.subclause(x, Mode::Gerund, None);
        }
        if self.is_a(x, "ATTRIBUTE") && f.value("DOMAIN").is_some() {
            let fact = self
                .lex
                .senses()
                .find(|s| s.pos == "n" && s.syn_class.as_deref() == Some("n-that-clause"))
                .ok_or(GenError::NoSense { concept: "ATTRIBUTE".into() })?;
            self.cite(&fact.id.clone());
            let mut out = alloc::vec!["the".to_string(), fact.lemma.clone(), "that".into()];
            out.extend(self.subclause(x, Mode::Finite, None)?);
            return Ok(out);
        }
        let descriptive = f.slots.iter().any(|s| s.property != EPISODIC_MEM);
        let lemma = if descriptive { self.noun_lemma(f) } else { None };
        let Some(lemma) = lemma else {
            return Ok(alloc::vec![self.pronoun(f, case).into()]);
        };
        let plural = is_plural(f);
        let mut out = Vec::new();
        match f.value("DISCOURSE-STATUS").and_then(|s| s.as_literal()) {
            Some("new") if !plural => out.push("a".to_string()),
            Some("given") => out.push("the".into()),
            None if f.value(EPISODIC_MEM).is_some() => out.push("the".into()),
            _ => {}
        }
        let mut post = Vec::new();
        for s in &f.slots {
            if !is_content(&s.property) {
                continue;
            }
            for v in &s.fillers {
                if self.is_consumed(x, &s.property, v) {
                    continue;
                }
                if concept_fits(self.ont, "LITERAL-ATTRIBUTE", &s.property) && !v.is_instance() {
                    let adj = self.adjective(&s.property, v)?;
                    self.cite(&adj.id.clone());
                    out.extend(words(&adj.lemma));
                    self.consume(x, &s.property, v);
                } else if let Some(rel) = self.relation(&s.property, v) {
                    self.cite(&rel.id.clone());
                    self.consume(x, &s.property, v);
                    post.push((rel.lemma.clone(), v.clone()));
                } else {
                    return Err(GenError::Unrealized { instance: x.to_string(), property: s.property.clone() });
                }
            }
        }
        let base = lemma.replace('_', " ");
        // Some nouns are listed in their plural form already.
        let noun = if plural && !base.ends_with('s') { plural_noun(&base) } else { base };
        out.extend(words(&noun));
        if out.first().map(|w| w == "a").unwrap_or(false) && out.get(1).and_then(|w| w.chars().next()).map(|c| "aeiou".contains(c)).unwrap_or(false) {
            out[0] = "an".into();
        }
        for (prep, v) in post {
            out.extend(words(&prep));
            out.extend(self.np(&v, Case::Object)?);
        }
        Ok(out)
    }

    fn subclause(&mut self, x: &Filler, mode: Mode, controller: Option<&Filler>) -> Result<Vec<String>, GenError> {
        let c = self.clause(x, mode, controller, &[], None)?;
        Ok(self.assemble(c, false))
    }

    /// Verb group for a finite clause headed by `lemma`.
    fn finite_verb(&self, lemma: &str, x: &Filler, subject: Option<&Filler>) -> Vec<String> {
        let f = self.frame(x);
        let past = f.map(is_past).unwrap_or(false);
        let prog = f.and_then(|f| f.value("ASPECT")).and_then(|a| a.as_literal()) == Some("progressive");
        let (person, plural) = self.person(subject);
        if prog {
            return alloc::vec![be_form(past, person, plural).into(), inflect_verb(lemma, VerbForm::Ing)];
        }
        if lemma == "be" {
            return alloc::vec![be_form(past, person, plural).into()];
        }
        let form = if past {
            VerbForm::Past
        } else if person == 3 && !plural {
            VerbForm::Present3sg
        } else {
            VerbForm::Bare
        };
        alloc::vec![inflect_verb(lemma, form)]
    }

    fn verb_group(&self, lemma: &str, x: &Filler, mode: Mode, subject: Option<&Filler>) -> Vec<String> {
        match mode {
            Mode::Finite => self.finite_verb(lemma, x, subject),
            Mode::Imperative | Mode::Bare => alloc::vec![lemma.into()],
            Mode::ToInf => alloc::vec!["to".into(), lemma.into()],
            Mode::Gerund => alloc::vec![inflect_verb(lemma, VerbForm::Ing)],
        }
    }

    /// Omit the subject of a non-finite clause; it must be the controller
    /// or absent.
    fn drop_subject(&mut self, x: &Filler, subj: Option<&Filler>, mode: Mode, controller: Option<&Filler>) -> Result<bool, GenError> {
        if mode == Mode::Finite {
            return Ok(false);
        }
        match subj {
            None => Ok(true),
            Some(s) if Some(s) == controller || mode == Mode::Imperative && self.is_addressee(Some(s)) => {
                self.mentioned.insert(s.clone());
                Ok(true)
            }
            Some(_) => Err(GenError::UncontrolledSubject { instance: x.to_string() }),
        }
    }

    fn copula(&mut self, p: &Filler, mode: Mode, controller: Option<&Filler>, predicate: Option<(&str, &Filler)>) -> Result<Clause, GenError> {
        let f = self.frame(p).ok_or_else(|| GenError::NotClosed(p.to_string()))?;
        let (subject, attr, value) = match predicate {
            Some((a, v)) => (p.clone(), a.to_string(), v.clone()),
            None => {
                let d = f.value("DOMAIN").cloned().ok_or_else(|| GenError::Unrealized { instance: p.to_string(), property: "DOMAIN".into() })?;
                let v = f.value("RANGE").cloned().ok_or_else(|| GenError::Unrealized { instance: p.to_string(), property: "RANGE".into() })?;
                self.consume(p, "DOMAIN", &d);
                self.consume(p, "RANGE", &v);
                (d, self.concept(p), v)
            }
        };
        self.consume(&subject, &attr, &value);
        let adj = self.adjective(&attr, &value)?;
        self.cite(&adj.id.clone());
        let mut c = Clause::default();
        if !self.drop_subject(p, Some(&subject), mode, controller)? {
            c.subject = self.np(&subject, Case::Subject)?;
            c.subject_filler = Some(subject.clone());
        }
        let be = self.verb_group("be", p, mode, Some(&subject));
        c.verb = Some(be.join(" "));
        c.rest = words(&adj.lemma);
        self.adjuncts(p, &mut c, mode, Some(&subject))?;
        Ok(c)
    }

    fn clause(&mut self, x: &Filler, mode: Mode, controller: Option<&Filler>, prefer: &[String], predicate: Option<(&str, &Filler)>) -> Result<Clause, GenError> {
        self.depth += 1;
        if self.depth > 16 {
            return Err(GenError::Unrealized { instance: x.to_string(), property: "nesting".into() });
        }
        if predicate.is_none() {
            self.mentioned.insert(x.clone());
        }
        let out = if predicate.is_some() || (self.is_a(x, "ATTRIBUTE") && self.frame(x).map(|f| f.value("DOMAIN").is_some()).unwrap_or(false)) {
            self.copula(x, mode, controller, predicate)
        } else {
            self.event_clause(x, mode, controller, prefer)
        };
        self.depth -= 1;
        out
    }

    fn event_clause(&mut self, x: &Filler, mode: Mode, controller: Option<&Filler>, prefer: &[String]) -> Result<Clause, GenError> {
        let (sense, b, used) = self.select(x, prefer)?;
        self.cite(&sense.id.clone());
        for (t, p, f) in &used {
            self.consume(t, p, f);
        }
        let subj_var = sense.syn.iter().find(|c| c.role == "subject").and_then(|c| c.var);
        let subj = subj_var.and_then(|k| b.get(&k)).cloned();
        let mut c = Clause::default();
        if !self.drop_subject(x, subj.as_ref(), mode, controller)? {
            if let Some(s) = &subj {
                c.subject = self.np(s, Case::Subject)?;
                c.subject_filler = Some(s.clone());
            }
        }
        for con in &sense.syn {
            match con.role.as_str() {
                "subject" => {}
                "v" => c.verb = Some(self.verb_group(&sense.lemma, x, mode, subj.as_ref()).join(" ")),
                "cue" => c.front.extend(words(&sense.lemma)),
                "xcomp" => {
                    let Some(e) = con.var.and_then(|k| b.get(&k)).cloned() else { continue };
                    if sense.pos == "cue" {
                        let inner = self.subclause(&e, Mode::Finite, None)?;
                        c.rest.extend(inner);
                    } else {
                        let ctl = self.frame(&e).and_then(|f| f.value("AGENT")).cloned().filter(|a| used.iter().any(|(t, p, f)| t == &e && p == "AGENT" && f == a));
                        let inner = self.subclause(&e, Mode::ToInf, ctl.as_ref())?;
                        c.rest.extend(inner);
                    }
                }
                _ => {
                    let w = self.constituent(con, &b)?;
                    c.rest.extend(w);
                }
            }
        }
        self.adjuncts(x, &mut c, mode, subj.as_ref())?;
        Ok(c)
    }

    /// Object, particle and prepositional constituents, fixed or bound.
    fn constituent(&mut self, con: &Constituent, b: &BTreeMap<u32, Filler>) -> Result<Vec<String>, GenError> {
        if let Some(k) = con.var {
            let Some(f) = b.get(&k).cloned() else { return Ok(Vec::new()) };
            if self.gap.as_ref() == Some(&f) {
                self.mentioned.insert(f);
                return Ok(Vec::new());
            }
            return self.np(&f, Case::Object);
        }
        if con.role == "pp" {
            let obj = con.children.iter().find(|c| c.role == "obj");
            if let Some(k) = obj.and_then(|o| o.var) {
                if !b.contains_key(&k) {
                    return Ok(Vec::new());
                }
            }
        }
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for ch in &con.children {
            let w = self.constituent(ch, b)?;
            if matches!(ch.role.as_str(), "det" | "adj" | "prep") {
                pre.extend(w);
            } else {
                post.extend(w);
            }
        }
        let mut out = pre;
        if let Some(w) = &con.word {
            out.extend(words(w));
        }
        out.extend(post);
        Ok(out)
    }

    /// Leftover content slots of `x`, realized through relation senses.
    fn adjuncts(&mut self, x: &Filler, c: &mut Clause, mode: Mode, subject: Option<&Filler>) -> Result<(), GenError> {
        let f = self.frame(x).ok_or_else(|| GenError::NotClosed(x.to_string()))?;
        let mut conj = Vec::new();
        let mut tail = Vec::new();
        for s in &f.slots {
            if !is_content(&s.property) {
                continue;
            }
            for v in &s.fillers {
                if self.is_consumed(x, &s.property, v) {
                    continue;
                }
                self.consume(x, &s.property, v);
                if s.property == "CONJOINED-WITH" {
                    conj.push(v.clone());
                    continue;
                }
                let rel = self.relation(&s.property, v).ok_or_else(|| GenError::Unrealized { instance: x.to_string(), property: s.property.clone() })?;
                self.cite(&rel.id.clone());
                if !v.is_instance() {
                    if rel.syn_class.as_deref() == Some("adv-ordinal") {
                        c.front.extend(words(&rel.lemma));
                        if rel.lemma != "then" {
                            c.front.push(",".into());
                        }
                    } else {
                        tail.extend(words(&rel.lemma));
                    }
                    continue;
                }
                let mut w = words(&rel.lemma);
                if self.is_a(v, "EVENT") {
                    let same = self.frame(v).and_then(|g| g.value("AGENT")).is_some_and(|a| Some(a) == subject);
                    let ctl = if same { subject.cloned() } else { None };
                    if same {
                        let a = ctl.clone().expect("same agent");
                        self.consume(v, "AGENT", &a);
                    }
                    w.extend(self.subclause(v, Mode::Gerund, ctl.as_ref())?);
                } else if self.is_a(v, "ATTRIBUTE") {
                    w.extend(self.subclause(v, Mode::Finite, None)?);
                } else {
                    w.extend(self.np(v, Case::Object)?);
                }
                c.rest.extend(w);
            }
        }
        for y in conj {
            let same = self.frame(&y).and_then(|g| g.value("AGENT")).is_some_and(|a| Some(a) == subject);
            let inner_mode = match mode {
                Mode::ToInf => Mode::Bare,
                m => m,
            };
            let ctl = if same { subject.cloned() } else { None };
            let mut inner = self.clause(&y, inner_mode, ctl.as_ref(), &[], None)?;
            if same {
                inner.subject.clear();
                inner.subject_filler = ctl;
            }
            c.end.push("and".into());
            let w = self.assemble(inner, false);
            c.end.extend(w);
        }
        c.end.extend(tail);
        Ok(())
    }

    fn assemble(&self, c: Clause, question: bool) -> Vec<String> {
        let mut out = c.front;
        let verb: Vec<String> = c.verb.map(|v| words(&v)).unwrap_or_default();
        if question && !c.subject.is_empty() {
            // The fronted wh word leads; the finite auxiliary precedes the subject.
            out.push("what".into());
            let (aux, main) = verb.split_first().map(|(a, m)| (a.clone(), m.to_vec())).unwrap_or_default();
            out.push(aux);
            out.extend(c.subject);
            out.extend(main);
        } else {
            out.extend(c.subject);
            out.extend(verb);
        }
        out.extend(c.rest);
        out.extend(c.end);
        out
    }
}

/// A realized sentence with the shape that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub sentence: String,
    pub shape: String,
    pub trace: Vec<TraceEvent>,
}

fn join_words(ws: Vec<String>) -> String {
    let mut s = String::new();
    for w in ws {
        if w.is_empty() {
            continue;
        }
        let glue = w == "," || s.is_empty();
        if !glue {
            s.push(' ');
        }
        if w == "i" {
            s.push('I');
        } else {
            s.push_str(&w);
        }
    }
    s
}

fn finish(ws: Vec<String>, punct: char) -> String {
    let s = join_words(ws);
    let mut cs = s.chars();
    let mut out: String = match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    };
    out.push(punct);
    out
}

/// Execute a fitted shape's recipe.
pub fn apply_wrapper(shape: &Shape, bindings: &Bindings, mr: &MeaningRep, lex: &Lexicon, ont: &ConceptStore) -> Result<(String, Vec<String>), GenError> {
    let get = |v: &str| bindings.get(v).cloned().ok_or_else(|| GenError::Unbound { shape: shape.name.clone(), var: v.into() });
    let mut r = Realizer::new(mr, lex, ont);
    r.cite(&shape.name);
    let mut head = None;
    let mut prefer = Vec::new();
    let mut question = false;
    let mut predicate: Option<(String, Filler)> = None;
    let mut punct = '.';
    for step in &shape.recipe {
        match step {
            Step::Select { var, by_type } => {
                let x = get(var)?;
                if *by_type {
                    let t = mr.frame(&x).and_then(|f| f.value("TYPE")).map(|t| t.to_string()).unwrap_or_default();
                    if let Some(l) = shape.lemma_for.get(&t) {
                        prefer.push(l.clone());
                    }
                }
                head = Some(x);
            }
            Step::Transform(Transform::WhFronting(w)) => {
                r.gap = Some(get(w)?);
                question = true;
            }
            Step::Transform(Transform::Predicate(a)) => {
                let attr = get(a)?.as_literal().map(|s| s.to_string()).unwrap_or_default();
                let x = head.clone().expect("select precedes transform");
                let v = mr.frame(&x).and_then(|f| f.value(&attr)).cloned().ok_or_else(|| GenError::Unrealized { instance: x.to_string(), property: attr.clone() })?;
                predicate = Some((attr, v));
            }
            Step::Transform(Transform::FactClause(_) | Transform::Copula) => {}
            Step::Linearize | Step::Inflect => {}
            Step::Punctuate(p) => punct = *p,
        }
    }
    let head = head.expect("recipe starts with select");
    // Slots the pattern itself accounts for outside the realized clause.
    if mr.head != head {
        r.mentioned.insert(mr.head.clone());
        if let Some(hf) = mr.head_frame() {
            for s in &hf.slots {
                for v in &s.fillers {
                    if bindings.values().any(|b| b == v) {
                        r.consume(&mr.head, &s.property, v);
                    }
                }
            }
        }
    }
    let subject_of = |x: &Filler| mr.frame(x).and_then(|f| f.value("AGENT")).cloned();
    let imperative = mr.frame(&head).map(|f| !is_past(f) && f.value("ASPECT").is_none() && f.value("CAUSED-BY").is_none()).unwrap_or(false)
        && r.is_a(&head, "EVENT")
        && !question
        && r.is_addressee(subject_of(&head).as_ref());
    let mode = if imperative { Mode::Imperative } else { Mode::Finite };
    if question {
        if let Some(past) = mr.frame(&head).map(is_past) {
            let _ = past;
        }
    }
    let clause = r.clause(&head, mode, None, &prefer, predicate.as_ref().map(|(a, v)| (a.as_str(), v)))?;
    let ws = if question {
        let subj = clause.subject_filler.clone();
        let prog = mr.frame(&head).and_then(|f| f.value("ASPECT")).is_some();
        let mut c = clause;
        if !prog && !c.subject.is_empty() {
            // Do-support: the tense moves to "do" and the verb goes bare.
            let lemma = c.verb.as_deref().map(|v| v.to_string()).unwrap_or_default();
            let past = mr.frame(&head).map(is_past).unwrap_or(false);
            let (person, plural) = r.person(subj.as_ref());
            let aux = if past {
                "did"
            } else if person == 3 && !plural {
                "does"
            } else {
                "do"
            };
            let bare = bare_of(&lemma, lex);
            c.verb = Some(format!("{} {}", aux, bare));
        }
        r.assemble(c, true)
    } else {
        r.assemble(clause, false)
    };
    for f in &mr.frames {
        if !r.mentioned.contains(&f.head) {
            return Err(GenError::Unmentioned { instance: f.head.to_string() });
        }
        for s in &f.slots {
            if !is_content(&s.property) {
                continue;
            }
            for v in &s.fillers {
                if !r.is_consumed(&f.head, &s.property, v) {
                    return Err(GenError::Unrealized { instance: f.head.to_string(), property: s.property.clone() });
                }
            }
        }
    }
    Ok((finish(ws, punct), r.cited))
}

/// Recover the lemma of a finite verb produced by `finite_verb`.
fn bare_of(form: &str, lex: &Lexicon) -> String {
    let w = form.split(' ').next_back().unwrap_or(form);
    let mut lemmas: Vec<String> = crate::syntax::morph::morph_analyze(w, lex).into_iter().filter(|m| m.tense.is_some()).map(|m| m.lemma).collect();
    lemmas.dedup();
    lemmas.into_iter().next().unwrap_or_else(|| w.to_string())
}

/// Try shapes in order and realize the first that fits.
pub fn generate(mr: &MeaningRep, reg: &ShapeRegistry, lex: &Lexicon, ont: &ConceptStore) -> Result<Generation, GenError> {
    mr.check_closure().map_err(|e| GenError::NotClosed(e.to_string()))?;
    let mut ev = TraceEvent::new("generate", mr.head.to_string(), String::new());
    let mut reasons = Vec::new();
    for shape in reg.shapes() {
        match wrapper_fit(shape, mr, ont) {
            Ok(b) => match apply_wrapper(shape, &b, mr, lex, ont) {
                Ok((sentence, cited)) => {
                    ev.decision = format!("shape {}: {}", shape.name, sentence);
                    for c in cited {
                        ev = ev.cite(c);
                    }
                    return Ok(Generation { sentence, shape: shape.name.clone(), trace: alloc::vec![ev] });
                }
                Err(e) => {
                    ev = ev.reject(&shape.name, e.to_string());
                    reasons.push((shape.name.clone(), e.to_string()));
                }
            },
            Err(m) => {
                ev = ev.reject(&shape.name, m.reason.clone());
                reasons.push((shape.name.clone(), m.reason));
            }
        }
    }
    Err(GenError::NoShapeFits { reasons })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhraseForm {
    Bare,
    Gerund,
    Noun,
}

/// Realize one instance of `mr` as a phrase rather than a sentence. Verb
/// phrases leave their AGENT implicit.
pub fn realize_phrase(mr: &MeaningRep, x: &Filler, form: PhraseForm, lex: &Lexicon, ont: &ConceptStore) -> Result<String, GenError> {
    let mut r = Realizer::new(mr, lex, ont);
    let ws = match form {
        PhraseForm::Noun => r.np(x, Case::Object)?,
        PhraseForm::Bare | PhraseForm::Gerund => {
            let agent = mr.frame(x).and_then(|f| f.value("AGENT")).cloned();
            let mode = if form == PhraseForm::Bare { Mode::Bare } else { Mode::Gerund };
            r.subclause(x, mode, agent.as_ref())?
        }
    };
    Ok(join_words(ws))
}

/// A taught procedure to be read back: an optional goal, background
/// sentences and ordered steps; `unordered_after[i]` marks steps i and i+1
/// as doable in either order.
pub struct Procedure<'a> {
    pub goal: Option<&'a MeaningRep>,
    pub background: &'a [MeaningRep],
    pub steps: &'a [MeaningRep],
    pub unordered_after: &'a [bool],
    /// Pairs joined by a bare "and", order left open.
    pub conjoined_after: &'a [bool],
}

fn with_marker(step: &MeaningRep, marker: Option<&str>) -> MeaningRep {
    let mut m = step.clone();
    if let (Some(k), Some(f)) = (marker, m.frames.iter_mut().find(|f| f.head == step.head)) {
        f.remove_property("SEQUENCE-MARKER");
        f.add_value("SEQUENCE-MARKER", Filler::literal(k));
    }
    m
}

/// Join two steps into one MR: the first gains CONJOINED-WITH the second.
fn conjoin(a: &MeaningRep, b: &MeaningRep, unordered: bool) -> MeaningRep {
    let mut m = a.clone();
    let mut shift = BTreeMap::new();
    for f in &b.frames {
        if let Some(r) = f.head.as_local() {
            if m.frame(&f.head).is_some() && a.frames.iter().all(|g| g.head != f.head || g != f) {
                let n = m.frames.iter().filter(|g| g.head.concept_name() == Some(r.concept.as_str())).count() as u32 + 1;
                shift.insert(f.head.clone(), Filler::Local(crate::kr::InstanceRef::new(r.concept.clone(), r.index + n)));
            }
        }
    }
    for f in &b.frames {
        let mut g = f.clone();
        if let Some(h) = shift.get(&g.head) {
            g.head = h.clone();
        }
        for s in &mut g.slots {
            for x in &mut s.fillers {
                if let Some(y) = shift.get(x) {
                    *x = y.clone();
                }
            }
        }
        if m.frame(&g.head).is_none() {
            m.frames.push(g);
        }
    }
    let second = shift.get(&b.head).cloned().unwrap_or_else(|| b.head.clone());
    if let Some(f) = m.frames.iter_mut().find(|f| f.head == a.head) {
        f.add_value("CONJOINED-WITH", second);
        if unordered {
            f.add_value("ORDER-CERTAINTY", Filler::literal("unordered"));
        }
    }
    m
}

/// Describe a procedure back as enumerated step sentences.
pub fn describe_back(p: &Procedure, reg: &ShapeRegistry, lex: &Lexicon, ont: &ConceptStore) -> Result<String, GenError> {
    let mut groups: Vec<MeaningRep> = Vec::new();
    let mut i = 0;
    while i < p.steps.len() {
        let unordered = p.unordered_after.get(i).copied().unwrap_or(false);
        if (unordered || p.conjoined_after.get(i).copied().unwrap_or(false)) && i + 1 < p.steps.len() {
            groups.push(conjoin(&p.steps[i], &p.steps[i + 1], unordered));
            i += 2;
        } else {
            groups.push(p.steps[i].clone());
            i += 1;
        }
    }
    let mut out: Vec<String> = Vec::new();
    let goal = match p.goal {
        Some(g) => Some(generate(g, reg, lex, ont)?.sentence),
        None => None,
    };
    if groups.is_empty() {
        out.extend(goal);
        for b in p.background {
            out.push(generate(b, reg, lex, ont)?.sentence);
        }
        return Ok(out.join(" "));
    }
    if groups.len() == 1 {
        let step = generate(&groups[0], reg, lex, ont)?.sentence;
        let lead = goal.map(|g| g.trim_end_matches('.').to_string()).unwrap_or_else(|| "Proceed".into());
        let mut cs = step.chars();
        let first = cs.next().map(|c| c.to_lowercase().collect::<String>()).unwrap_or_default();
        let step = if step.starts_with("I ") { step } else { format!("{}{}", first, cs.as_str()) };
        return Ok(format!("{} as follows: {}", lead, step));
    }
    if let Some(g) = goal {
        out.push(g);
    }
    for b in p.background {
        out.push(generate(b, reg, lex, ont)?.sentence);
    }
    let last = groups.len() - 1;
    for (k, g) in groups.iter().enumerate() {
        let marker = match k {
            0 => "first",
            k if k == last => "finally",
            _ => "then",
        };
        out.push(generate(&with_marker(g, Some(marker)), reg, lex, ont)?.sentence);
    }
    Ok(out.join(" "))
}
