//! Matching syn-struc patterns against parse trees, directly or after
//! rewriting the pattern with a chain of transformations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::lexicon::{is_self_role, Constituent, LexSense, Lexicon};
use crate::syntax::{ParseTree, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransformName {
    Passive,
    ControlledInfinitive,
    PrepGerund,
    VpCoordinationGap,
    Imperative,
    WhObjectFronting,
}

impl TransformName {
    /// Argument-structure transformations first, movement last.
    pub const ALL: [TransformName; 6] = [
        TransformName::Passive,
        TransformName::ControlledInfinitive,
        TransformName::PrepGerund,
        TransformName::VpCoordinationGap,
        TransformName::Imperative,
        TransformName::WhObjectFronting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformName::Passive => "passive",
            TransformName::ControlledInfinitive => "controlled-infinitive",
            TransformName::PrepGerund => "prep-gerund",
            TransformName::VpCoordinationGap => "vp-coordination-gap",
            TransformName::Imperative => "imperative",
            TransformName::WhObjectFronting => "wh-object-fronting",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|t| t.as_str() == s)
    }

    pub fn is_movement(self) -> bool {
        self == TransformName::WhObjectFronting
    }
}

impl fmt::Display for TransformName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a variable removed from the surface gets its referent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Controller {
    /// The clause governing an infinitive.
    XcompGovernor,
    /// The clause a prepositional gerund attaches to.
    GerundGovernor,
    /// The subject of the first conjunct.
    FirstConjunct,
    /// The hearer of an imperative.
    Addressee,
    /// A predicative adjective's subject, supplied by the copula.
    Copula,
}

impl Controller {
    pub fn as_str(self) -> &'static str {
        match self {
            Controller::XcompGovernor => "xcomp-governor",
            Controller::GerundGovernor => "gerund-governor",
            Controller::FirstConjunct => "first-conjunct",
            Controller::Addressee => "addressee",
            Controller::Copula => "copula",
        }
    }
}

/// Tree position a pattern's frame node must occupy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Any,
    Xcomp,
    Gerund,
    Conjunct,
    Root,
}

/// A syn-struc pattern plus what transformations did to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub syn: Vec<Constituent>,
    pub controlled: BTreeMap<u32, Controller>,
    pub context: Context,
}

impl Pattern {
    pub fn of(sense: &LexSense) -> Self {
        Pattern { syn: sense.syn.clone(), controlled: BTreeMap::new(), context: Context::Any }
    }

    fn var_idx(&self, role: &str) -> Option<(usize, u32)> {
        self.syn.iter().enumerate().find(|(_, c)| c.role == role && !c.optional).and_then(|(i, c)| c.var.map(|v| (i, v)))
    }

    fn verb(&mut self) -> Option<&mut Constituent> {
        self.syn.iter_mut().find(|c| c.role == "v")
    }

    fn verb_form(&self) -> Option<Option<&str>> {
        self.syn.iter().find(|c| c.role == "v").map(|c| c.form.as_deref())
    }

    fn has_aux(&self, word: &str) -> bool {
        self.syn.iter().any(|c| c.role == "aux" && c.word.as_deref() == Some(word))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_c(f: &mut fmt::Formatter<'_>, c: &Constituent) -> fmt::Result {
            f.write_str(&c.role)?;
            if let Some(v) = c.var {
                write!(f, " $var{}", v)?;
            }
            if let Some(w) = &c.word {
                write!(f, " {}", w)?;
            }
            if c.optional {
                f.write_str(" opt")?;
            }
            if let Some(fm) = &c.form {
                write!(f, " form={}", fm)?;
            }
            if !c.children.is_empty() {
                f.write_str(" (")?;
                for (i, ch) in c.children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_c(f, ch)?;
                }
                f.write_str(")")?;
            }
            Ok(())
        }
        for (i, c) in self.syn.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write_c(f, c)?;
        }
        for (v, c) in &self.controlled {
            write!(f, "; $var{} controlled by {}", v, c.as_str())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformError {
    pub transformation: TransformName,
    pub reason: &'static str,
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} inapplicable: {}", self.transformation, self.reason)
    }
}

impl core::error::Error for TransformError {}

fn aux(word: &str) -> Constituent {
    Constituent::with_word("aux", word)
}

/// Rewrite `p` by `t`. The semantic template is not touched: only which
/// surface position binds which variable changes.
pub fn apply_transformation(t: TransformName, p: &Pattern) -> Result<Pattern, TransformError> {
    let err = |reason| Err(TransformError { transformation: t, reason });
    let Some(form) = p.verb_form() else { return err("pattern has no verb") };
    let mut q = p.clone();
    match t {
        TransformName::Passive => {
            if form.is_some() || p.context != Context::Any {
                return err("verb already transformed");
            }
            let Some((si, a)) = p.var_idx("subject") else { return err("no subject variable") };
            if let Some((ii, c)) = p.var_idx("indirectobject") {
                q.syn[si].var = Some(c);
                q.syn.remove(ii);
            } else if let Some((di, b)) = p.var_idx("directobject") {
                q.syn[si].var = Some(b);
                q.syn.remove(di);
            } else {
                return err("no object to promote");
            }
            q.syn.push(Constituent { optional: true, ..Constituent::with_var("by-agent", a) });
            q.verb().expect("verb").form = Some("pastpart".into());
            q.syn.push(aux("be"));
        }
        TransformName::WhObjectFronting => {
            if p.context != Context::Any {
                return err("not a main clause");
            }
            let Some((di, _)) = p.var_idx("directobject") else { return err("no object variable") };
            match form {
                None => {
                    q.verb().expect("verb").form = Some("bare".into());
                    q.syn.push(aux("do"));
                }
                Some("pastpart") if p.has_aux("be") => {}
                _ => return err("verb form blocks fronting"),
            }
            q.syn[di].role = "wh-focus".into();
        }
        TransformName::ControlledInfinitive
        | TransformName::PrepGerund
        | TransformName::VpCoordinationGap
        | TransformName::Imperative => {
            if form.is_some() || p.context != Context::Any {
                return err("verb already transformed");
            }
            let Some((si, a)) = p.var_idx("subject") else { return err("no subject variable") };
            q.syn.remove(si);
            let (ctl, ctx, new_form) = match t {
                TransformName::ControlledInfinitive => (Controller::XcompGovernor, Context::Xcomp, Some("bare")),
                TransformName::PrepGerund => (Controller::GerundGovernor, Context::Gerund, Some("prespart")),
                TransformName::VpCoordinationGap => (Controller::FirstConjunct, Context::Conjunct, None),
                _ => (Controller::Addressee, Context::Root, Some("bare")),
            };
            q.controlled.insert(a, ctl);
            q.context = ctx;
            q.verb().expect("verb").form = new_form.map(|s| s.to_string());
            if t == TransformName::ControlledInfinitive {
                q.syn.push(aux("to"));
            }
        }
    }
    Ok(q)
}

/// Every chain of at most two distinct transformations, movement last,
/// shortest first.
pub fn chains() -> Vec<Vec<TransformName>> {
    let mut out = alloc::vec![Vec::new()];
    for t in TransformName::ALL {
        out.push(alloc::vec![t]);
    }
    for a in TransformName::ALL {
        for b in TransformName::ALL {
            if a != b && !a.is_movement() {
                out.push(alloc::vec![a, b]);
            }
        }
    }
    out
}

pub fn apply_chain(chain: &[TransformName], p: &Pattern) -> Result<Pattern, TransformError> {
    let mut q = p.clone();
    for &t in chain {
        q = apply_transformation(t, &q)?;
    }
    Ok(q)
}

/// A way of reading one sense off the tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CandidateBinding {
    pub sense: String,
    pub chain: Vec<TransformName>,
    /// Node bound to `$var0`.
    pub anchor: usize,
    /// Node whose dependents the pattern describes; differs from the anchor
    /// for constructions anchored on a dependent (wh-focus).
    pub frame_node: usize,
    pub vars: BTreeMap<u32, usize>,
    pub controlled: BTreeMap<u32, Controller>,
    /// Nodes matched by fixed words; they need no meaning of their own.
    pub absorbed: BTreeSet<usize>,
}

impl CandidateBinding {
    /// Key compared against the brute-force enumeration.
    pub fn key(&self) -> (String, Vec<TransformName>, BTreeMap<u32, usize>, BTreeMap<u32, Controller>) {
        (self.sense.clone(), self.chain.clone(), self.vars.clone(), self.controlled.clone())
    }
}

/// Edge labels a frame node's pattern must account for.
const CORE: &[&str] = &["subject", "directobject", "indirectobject", "xcomp", "part", "wh-focus", "by-agent", "obj", "aux"];

/// Roles naming the constituent's own node.
fn names_self(role: &str) -> bool {
    is_self_role(role) || matches!(role, "v" | "adj" | "cue")
}

/// Lexicon part of speech for a tree tag.
pub fn sense_pos(tag: &str) -> Option<&'static str> {
    Some(match tag {
        "n" => "n",
        "name" => "name",
        "wh" => "interrogpro",
        "adj" => "adj",
        "p" => "prep",
        "adv" => "adv",
        "cue" => "cue",
        "v" => "v",
        _ => return None,
    })
}

fn frame_node_of(p: &Pattern, tree: &ParseTree, anchor: usize) -> Result<usize, &'static str> {
    let c0 = p.syn.iter().find(|c| c.var == Some(0)).ok_or("no $var0 constituent")?;
    if names_self(&c0.role) {
        return Ok(anchor);
    }
    match tree.incoming(anchor) {
        Some(e) if e.label == c0.role => Ok(e.head),
        _ => Err("anchor not in its pattern role"),
    }
}

fn context_ok(ctx: Context, tree: &ParseTree, f: usize) -> bool {
    let inc = tree.incoming(f).map(|e| e.label.as_str());
    match ctx {
        Context::Any => true,
        Context::Xcomp => inc == Some("xcomp"),
        Context::Gerund => matches!(inc, Some("obj" | "subject" | "directobject")),
        Context::Conjunct => inc == Some("conj"),
        Context::Root => inc.is_none(),
    }
}

fn has_aux_be(tree: &ParseTree, f: usize) -> bool {
    tree.children(f).iter().any(|e| e.label == "aux" && tree.node(e.dep).map(|n| n.lemma == "be").unwrap_or(false))
}

/// Verb form requirement on the frame node when the pattern leaves it open:
/// finite, or progressive; conjuncts may also be bare or gerunds.
fn open_form_ok(p: &Pattern, tree: &ParseTree, f: usize) -> bool {
    let form = tree.node(f).and_then(|n| n.feat("form")).unwrap_or("");
    match form {
        "past" | "present" => true,
        "prespart" => has_aux_be(tree, f) || p.context == Context::Conjunct,
        "bare" => p.context == Context::Conjunct,
        _ => false,
    }
}

/// The aux edge licensed by an open-form (progressive) frame node.
fn implicit_aux(p: &Pattern, tree: &ParseTree, f: usize, dep: usize) -> bool {
    p.verb_form() == Some(None)
        && tree.node(f).and_then(|n| n.feat("form")) == Some("prespart")
        && tree.node(dep).map(|n| n.lemma == "be").unwrap_or(false)
}

fn lemma_is(n: &TreeNode, w: &str) -> bool {
    n.lemma.eq_ignore_ascii_case(w)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct State {
    vars: BTreeMap<u32, usize>,
    consumed: BTreeSet<(usize, usize)>,
    absorbed: BTreeSet<usize>,
    controlled: BTreeMap<u32, Controller>,
}

impl State {
    fn bind(&mut self, var: u32, node: usize) -> bool {
        match self.vars.get(&var) {
            Some(&n) => n == node,
            None => {
                if self.vars.values().any(|&n| n == node) {
                    return false;
                }
                self.vars.insert(var, node);
                true
            }
        }
    }
}

struct Matcher<'a> {
    tree: &'a ParseTree,
    fail: Option<String>,
}

impl<'a> Matcher<'a> {
    fn note(&mut self, why: String) {
        if self.fail.is_none() {
            self.fail = Some(why);
        }
    }

    /// Constraints of `c` on `node` itself, then its children relative to it.
    fn match_node(&mut self, c: &Constituent, node: usize, mut st: State, out: &mut Vec<State>) {
        let Some(n) = self.tree.node(node) else { return };
        if let Some(w) = &c.word {
            if !lemma_is(n, w) {
                self.note(alloc::format!("{} is not {}", c.role, w));
                return;
            }
            if c.var.is_none() {
                st.absorbed.insert(node);
            }
        }
        if let Some(f) = &c.form {
            if n.feat("form") != Some(f.as_str()) {
                self.note(alloc::format!("{} form is not {}", c.role, f));
                return;
            }
        }
        if let Some(v) = c.var {
            if !st.bind(v, node) {
                self.note(alloc::format!("$var{} cannot bind node {}", v, node));
                return;
            }
        }
        let kids: Vec<&Constituent> = c.children.iter().collect();
        self.match_seq(&kids, node, st, out);
    }

    fn match_seq(&mut self, cons: &[&Constituent], base: usize, st: State, out: &mut Vec<State>) {
        let Some((c, rest)) = cons.split_first() else {
            out.push(st);
            return;
        };
        if names_self(&c.role) {
            let mut mid = Vec::new();
            self.match_node(c, base, st, &mut mid);
            for s in mid {
                self.match_seq(rest, base, s, out);
            }
            return;
        }
        if c.role == "modified" {
            let inc = self.tree.incoming(base);
            match inc {
                Some(e) if e.label == "mod" || e.label == "pp" => {
                    let mut mid = Vec::new();
                    self.match_node(c, e.head, st, &mut mid);
                    for s in mid {
                        self.match_seq(rest, base, s, out);
                    }
                }
                Some(e) if e.label == "xcomp" => {
                    let mut s = st;
                    if let Some(v) = c.var {
                        s.controlled.insert(v, Controller::Copula);
                    }
                    self.match_seq(rest, base, s, out);
                }
                _ => self.note("nothing to modify".into()),
            }
            return;
        }
        let deps: Vec<usize> = self
            .tree
            .children(base)
            .iter()
            .filter(|e| e.label == c.role && !st.consumed.contains(&(base, e.dep)))
            .map(|e| e.dep)
            .collect();
        if deps.is_empty() && !c.optional {
            self.note(alloc::format!("no {} dependent", c.role));
        }
        for d in deps {
            let mut s = st.clone();
            s.consumed.insert((base, d));
            let mut mid = Vec::new();
            self.match_node(c, d, s, &mut mid);
            for s in mid {
                self.match_seq(rest, base, s, out);
            }
        }
        if c.optional {
            self.match_seq(rest, base, st, out);
        }
    }
}

fn unconsumed_core(p: &Pattern, tree: &ParseTree, f: usize, st: &State) -> Option<String> {
    for e in tree.children(f) {
        if CORE.contains(&e.label.as_str()) && !st.consumed.contains(&(f, e.dep)) && !(e.label == "aux" && implicit_aux(p, tree, f, e.dep)) {
            return Some(alloc::format!("unconsumed {} dependent", e.label));
        }
    }
    None
}

fn frame_checks(p: &Pattern, tree: &ParseTree, anchor: usize) -> Result<usize, String> {
    let f = frame_node_of(p, tree, anchor).map_err(|e| e.to_string())?;
    if !context_ok(p.context, tree, f) {
        return Err("frame node not in the required position".into());
    }
    if p.verb_form() == Some(None) && tree.node(f).map(|n| n.is_verb()).unwrap_or(false) && !open_form_ok(p, tree, f) {
        return Err("verb form does not fit".into());
    }
    Ok(f)
}

/// Variable bindings, controllers, covered nodes and the anchor node.
pub type Binding = (BTreeMap<u32, usize>, BTreeMap<u32, Controller>, BTreeSet<usize>, usize);

/// Anchor, sense id, transforms, variable bindings and controllers.
pub type Candidate = (usize, String, Vec<TransformName>, BTreeMap<u32, usize>, BTreeMap<u32, Controller>);

/// Bindings of one (possibly transformed) pattern, or why there are none.
pub fn match_pattern(p: &Pattern, tree: &ParseTree, anchor: usize) -> Result<Vec<Binding>, String> {
    let f = frame_checks(p, tree, anchor)?;
    let mut m = Matcher { tree, fail: None };
    let mut st = State::default();
    st.vars.insert(0, anchor);
    st.controlled = p.controlled.clone();
    let top: Vec<&Constituent> = p.syn.iter().collect();
    let mut states = Vec::new();
    m.match_seq(&top, f, st, &mut states);
    if states.is_empty() {
        return Err(m.fail.unwrap_or_else(|| "no match".into()));
    }
    let mut last = None;
    let mut out = Vec::new();
    for s in states {
        match unconsumed_core(p, tree, f, &s) {
            Some(why) => last = Some(why),
            None => {
                let mut absorbed = s.absorbed.clone();
                for (_, d) in &s.consumed {
                    if tree.node(*d).map(|n| matches!(n.pos.as_str(), "det" | "to" | "part")).unwrap_or(false)
                        || tree.incoming(*d).map(|e| e.label == "aux").unwrap_or(false)
                    {
                        absorbed.insert(*d);
                    }
                }
                out.push((s.vars, s.controlled, absorbed, f));
            }
        }
    }
    if out.is_empty() {
        return Err(last.unwrap_or_else(|| "no match".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// One line of the matcher trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchTrace {
    pub node: usize,
    pub sense: String,
    pub chain: Vec<TransformName>,
    pub outcome: Result<usize, String>,
}

impl fmt::Display for MatchTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chain: Vec<&str> = self.chain.iter().map(|t| t.as_str()).collect();
        let chain = if chain.is_empty() { "direct".to_string() } else { chain.join("+") };
        match &self.outcome {
            Ok(n) => write!(f, "node {} {} via {}: {} binding(s)", self.node, self.sense, chain, n),
            Err(why) => write!(f, "node {} {} via {}: fail ({})", self.node, self.sense, chain, why),
        }
    }
}

fn match_sense_traced(sense: &LexSense, tree: &ParseTree, head: usize, trace: &mut Vec<MatchTrace>, all_chains: &[Vec<TransformName>]) -> Vec<CandidateBinding> {
    let base = Pattern::of(sense);
    let mut out = Vec::new();
    for chain in all_chains {
        let p = match apply_chain(chain, &base) {
            Ok(p) => p,
            Err(e) => {
                if chain.len() <= 1 {
                    trace.push(MatchTrace { node: head, sense: sense.id.clone(), chain: chain.clone(), outcome: Err(e.to_string()) });
                }
                continue;
            }
        };
        match match_pattern(&p, tree, head) {
            Ok(found) => {
                trace.push(MatchTrace { node: head, sense: sense.id.clone(), chain: chain.clone(), outcome: Ok(found.len()) });
                for (vars, controlled, absorbed, frame_node) in found {
                    out.push(CandidateBinding { sense: sense.id.clone(), chain: chain.clone(), anchor: head, frame_node, vars, controlled, absorbed });
                }
            }
            Err(why) => trace.push(MatchTrace { node: head, sense: sense.id.clone(), chain: chain.clone(), outcome: Err(why) }),
        }
    }
    out
}

/// All bindings of `sense` at `head` reachable with up to two
/// transformations; direct matches first.
pub fn match_sense(sense: &LexSense, tree: &ParseTree, head: usize) -> Vec<CandidateBinding> {
    let mut trace = Vec::new();
    match_sense_traced(sense, tree, head, &mut trace, &chains())
}

/// Candidate bindings for every node that has lexicon senses.
#[derive(Clone, Debug, Default)]
pub struct MatchLattice {
    pub heads: BTreeMap<usize, Vec<CandidateBinding>>,
    /// Nodes whose word the lexicon does not know.
    pub unknown: BTreeSet<usize>,
    pub trace: Vec<MatchTrace>,
}

impl MatchLattice {
    pub fn candidates(&self, node: usize) -> &[CandidateBinding] {
        self.heads.get(&node).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn all(&self) -> impl Iterator<Item = &CandidateBinding> {
        self.heads.values().flatten()
    }
}

fn senses_at<'l>(node: &TreeNode, lex: &'l Lexicon) -> Vec<&'l LexSense> {
    match sense_pos(&node.pos) {
        Some(pos) => lex.lookup(&node.lemma, pos),
        None => Vec::new(),
    }
}

pub fn enumerate_candidates(tree: &ParseTree, lex: &Lexicon) -> MatchLattice {
    let mut lat = MatchLattice::default();
    let all_chains = chains();
    for node in &tree.nodes {
        if sense_pos(&node.pos).is_none() {
            continue;
        }
        if node.feat("unknown") == Some("yes") {
            lat.unknown.insert(node.id);
        }
        let mut found = Vec::new();
        for sense in senses_at(node, lex) {
            found.extend(match_sense_traced(sense, tree, node.id, &mut lat.trace, &all_chains));
        }
        found.sort_by(|a, b| (a.chain.len(), &a.chain, &a.sense, &a.vars).cmp(&(b.chain.len(), &b.chain, &b.sense, &b.vars)));
        lat.heads.insert(node.id, found);
    }
    lat
}

/// Brute-force oracle: every sense at every node, every chain, every
/// injective assignment of the pattern's variables to nodes, kept when the
/// pattern predicate holds.
pub fn brute_force_candidates(tree: &ParseTree, lex: &Lexicon) -> BTreeSet<Candidate> {
    let mut out = BTreeSet::new();
    let ids: Vec<usize> = tree.nodes.iter().map(|n| n.id).collect();
    for node in &tree.nodes {
        for sense in senses_at(node, lex) {
            for chain in chains() {
                let Ok(p) = apply_chain(&chain, &Pattern::of(sense)) else { continue };
                let mut vars: Vec<(u32, bool)> = Vec::new();
                for c in p.syn.iter() {
                    let mut all = Vec::new();
                    c.walk(&mut all);
                    for x in all {
                        if let Some(v) = x.var {
                            if v != 0 {
                                vars.push((v, x.optional));
                            }
                        }
                    }
                }
                let mut assign: BTreeMap<u32, usize> = BTreeMap::new();
                assign.insert(0, node.id);
                enumerate_assignments(&vars, 0, &ids, &mut assign, &mut |a| {
                    if let Some(ctl) = predicate(&p, tree, node.id, a) {
                        out.insert((node.id, sense.id.clone(), chain.clone(), a.clone(), ctl));
                    }
                });
            }
        }
    }
    out
}

fn enumerate_assignments(vars: &[(u32, bool)], k: usize, ids: &[usize], assign: &mut BTreeMap<u32, usize>, f: &mut dyn FnMut(&BTreeMap<u32, usize>)) {
    if k == vars.len() {
        f(assign);
        return;
    }
    let (v, _) = vars[k];
    // Unbound is always tried; the predicate decides whether that is allowed.
    enumerate_assignments(vars, k + 1, ids, assign, f);
    for &id in ids {
        if assign.values().any(|&n| n == id) {
            continue;
        }
        assign.insert(v, id);
        enumerate_assignments(vars, k + 1, ids, assign, f);
        assign.remove(&v);
    }
}

/// Declarative check of an assignment. Returns the controlled variables on
/// success.
fn predicate(p: &Pattern, tree: &ParseTree, anchor: usize, a: &BTreeMap<u32, usize>) -> Option<BTreeMap<u32, Controller>> {
    let f = frame_checks(p, tree, anchor).ok()?;
    let mut controlled = p.controlled.clone();
    let mut explained: BTreeSet<(usize, usize)> = BTreeSet::new();
    for c in &p.syn {
        if names_self(&c.role) {
            if !holds_at(c, f, tree, a) {
                return None;
            }
        } else if c.role == "modified" {
            let inc = tree.incoming(f);
            match (c.var.and_then(|v| a.get(&v)), inc) {
                (Some(&n), Some(e)) if (e.label == "mod" || e.label == "pp") && e.head == n => {}
                (None, Some(e)) if e.label == "xcomp" => {
                    controlled.insert(c.var?, Controller::Copula);
                }
                _ => return None,
            }
        } else {
            let edges: Vec<usize> = tree.children(f).iter().filter(|e| e.label == c.role).map(|e| e.dep).collect();
            match c.var.and_then(|v| a.get(&v)) {
                Some(&n) => {
                    if !edges.contains(&n) || !holds_at(c, n, tree, a) {
                        return None;
                    }
                    explained.insert((f, n));
                }
                None if c.var.is_some() && !c.children.is_empty() => return None,
                None if c.var.is_some() => {
                    if !c.optional {
                        return None;
                    }
                }
                None => {
                    let ok: Vec<usize> = edges.into_iter().filter(|&d| holds_at(c, d, tree, a)).collect();
                    if ok.is_empty() && !c.optional {
                        return None;
                    }
                    explained.extend(ok.into_iter().map(|d| (f, d)));
                }
            }
        }
    }
    // Every bound variable must have been checked by some constituent.
    for (&v, &n) in a {
        if v == 0 {
            continue;
        }
        if !var_reached(p, f, tree, v, n) {
            return None;
        }
    }
    for e in tree.children(f) {
        if CORE.contains(&e.label.as_str()) && !explained.contains(&(f, e.dep)) && !(e.label == "aux" && implicit_aux(p, tree, f, e.dep)) {
            return None;
        }
    }
    Some(controlled)
}

fn var_reached(p: &Pattern, f: usize, tree: &ParseTree, v: u32, n: usize) -> bool {
    fn walk(c: &Constituent, base: usize, tree: &ParseTree, v: u32, n: usize, at_base: bool) -> bool {
        let here: Vec<usize> = if at_base || names_self(&c.role) {
            alloc::vec![base]
        } else if c.role == "modified" {
            tree.incoming(base).map(|e| alloc::vec![e.head]).unwrap_or_default()
        } else {
            tree.children(base).iter().filter(|e| e.label == c.role).map(|e| e.dep).collect()
        };
        here.iter().any(|&h| (c.var == Some(v) && h == n) || c.children.iter().any(|ch| walk(ch, h, tree, v, n, false)))
    }
    p.syn.iter().any(|c| walk(c, f, tree, v, n, false))
}

/// Does constituent `c` hold at `node`: word, form, variable and children.
fn holds_at(c: &Constituent, node: usize, tree: &ParseTree, a: &BTreeMap<u32, usize>) -> bool {
    let Some(n) = tree.node(node) else { return false };
    if let Some(w) = &c.word {
        if !lemma_is(n, w) {
            return false;
        }
    }
    if let Some(fm) = &c.form {
        if n.feat("form") != Some(fm.as_str()) {
            return false;
        }
    }
    if let Some(v) = c.var {
        if a.get(&v) != Some(&node) {
            return false;
        }
    }
    c.children.iter().all(|ch| {
        if names_self(&ch.role) {
            return holds_at(ch, node, tree, a);
        }
        let deps: Vec<usize> = tree.children(node).iter().filter(|e| e.label == ch.role).map(|e| e.dep).collect();
        match ch.var.and_then(|v| a.get(&v)) {
            Some(&m) => deps.contains(&m) && holds_at(ch, m, tree, a),
            None if ch.var.is_some() => ch.optional,
            None => ch.optional || deps.iter().any(|&d| holds_at(ch, d, tree, a)),
        }
    })
}
