//! The frame knowledge-representation language.
//!
//! Every knowledge structure in the crate (ontology concepts, lexicon senses,
//! meaning representations, memory anchors, scripts, generation shapes) is a
//! [`Frame`]: a head plus an ordered list of `(property, facet, fillers)`
//! slots. On disk frames live in a line-oriented block format:
//!
//! ```text
//! concept SURGERY
//!   IS-A value MEDICAL-PROCEDURE
//!   AGENT default SURGEON
//!   AGENT relaxable-to HUMAN, ROBOT   ; commas are stripped
//! ```
//!
//! A slot line is indented two spaces. A two-space line holding a single word
//! opens a nested section (`syn-struc`, `sem-struc`, `pattern`, ...) whose
//! deeper-indented lines are kept as a token tree for the owning module.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Comparator of a relational filler such as `< find-anchor-time`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comparator {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
}

impl Comparator {
    pub fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "<" => Comparator::Lt,
            ">" => Comparator::Gt,
            "<=" => Comparator::Le,
            ">=" => Comparator::Ge,
            "=" => Comparator::Eq,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }
}

/// A concept name plus a numeric index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceRef {
    pub concept: String,
    pub index: u32,
}

impl InstanceRef {
    pub fn new(concept: impl Into<String>, index: u32) -> Self {
        InstanceRef { concept: concept.into(), index }
    }
}

/// One filler of a slot.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Filler {
    /// `TIGER`
    Concept(String),
    /// `TIGER-#1`: grounded in episodic memory.
    Anchor(InstanceRef),
    /// `TIGER-1`: an instance local to one meaning representation or script.
    Local(InstanceRef),
    /// `Tony`, `blue`, `.8`, `2024-12-12`, or any quoted string.
    Literal(String),
    /// `< find-anchor-time`
    Relation { cmp: Comparator, operand: String },
    /// `$var1`
    Var(u32),
    /// `^$var1`, optionally followed by a property path: `^$var2.THEME`.
    MeaningOf { var: u32, path: Option<String> },
}

impl Filler {
    pub fn concept(name: &str) -> Self {
        Filler::Concept(canonical_concept(name))
    }

    pub fn literal(text: impl Into<String>) -> Self {
        Filler::Literal(text.into())
    }

    /// Concept named by this filler, for concept and instance fillers.
    pub fn concept_name(&self) -> Option<&str> {
        match self {
            Filler::Concept(c) => Some(c),
            Filler::Anchor(r) | Filler::Local(r) => Some(&r.concept),
            _ => None,
        }
    }

    pub fn as_local(&self) -> Option<&InstanceRef> {
        match self {
            Filler::Local(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_anchor(&self) -> Option<&InstanceRef> {
        match self {
            Filler::Anchor(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&str> {
        match self {
            Filler::Literal(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_instance(&self) -> bool {
        matches!(self, Filler::Anchor(_) | Filler::Local(_))
    }
}

impl fmt::Display for Filler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filler::Concept(c) => f.write_str(c),
            Filler::Anchor(r) => write!(f, "{}-#{}", r.concept, r.index),
            Filler::Local(r) => write!(f, "{}-{}", r.concept, r.index),
            Filler::Literal(s) => {
                if literal_needs_quotes(s) {
                    write!(f, "\"{}\"", s)
                } else {
                    f.write_str(s)
                }
            }
            Filler::Relation { cmp, operand } => write!(f, "{} {}", cmp.as_str(), operand),
            Filler::Var(n) => write!(f, "$var{}", n),
            Filler::MeaningOf { var, path: None } => write!(f, "^$var{}", var),
            Filler::MeaningOf { var, path: Some(p) } => write!(f, "^$var{}.{}", var, p),
        }
    }
}

/// Constraint strength of a slot.
///
/// Declared weakest first so the derived `Ord` matches strength:
/// `Value > Default > Sem > RelaxableTo`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facet {
    RelaxableTo,
    Sem,
    Default,
    Value,
}

impl Facet {
    pub const ALL_STRONGEST_FIRST: [Facet; 4] =
        [Facet::Value, Facet::Default, Facet::Sem, Facet::RelaxableTo];

    pub fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "value" => Facet::Value,
            "default" => Facet::Default,
            "sem" => Facet::Sem,
            "relaxable-to" => Facet::RelaxableTo,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Value => "value",
            Facet::Default => "default",
            Facet::Sem => "sem",
            Facet::RelaxableTo => "relaxable-to",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub property: String,
    pub facet: Facet,
    pub fillers: Vec<Filler>,
}

impl Slot {
    pub fn new(property: impl Into<String>, facet: Facet, fillers: Vec<Filler>) -> Self {
        Slot { property: property.into(), facet, fillers }
    }

    pub fn value(property: impl Into<String>, filler: Filler) -> Self {
        Slot::new(property, Facet::Value, alloc::vec![filler])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frame {
    pub head: Filler,
    pub slots: Vec<Slot>,
}

impl Frame {
    pub fn new(head: Filler) -> Self {
        Frame { head, slots: Vec::new() }
    }

    /// All fillers of `property` under `facet`, merged across repeated lines
    /// in line order.
    pub fn fillers(&self, property: &str, facet: Facet) -> Vec<&Filler> {
        self.slots
            .iter()
            .filter(|s| s.property == property && s.facet == facet)
            .flat_map(|s| s.fillers.iter())
            .collect()
    }

    /// Fillers of `property` under any facet, in line order.
    pub fn all_fillers(&self, property: &str) -> Vec<&Filler> {
        self.slots
            .iter()
            .filter(|s| s.property == property)
            .flat_map(|s| s.fillers.iter())
            .collect()
    }

    /// First `value`-facet filler of `property`.
    pub fn value(&self, property: &str) -> Option<&Filler> {
        self.fillers(property, Facet::Value).into_iter().next()
    }

    pub fn has_property(&self, property: &str) -> bool {
        self.slots.iter().any(|s| s.property == property)
    }

    /// Replace every `value` line of `property` with one holding `filler`.
    pub fn set_value(&mut self, property: &str, filler: Filler) {
        if let Some(pos) = self.slots.iter().position(|s| s.property == property && s.facet == Facet::Value) {
            self.slots[pos].fillers = alloc::vec![filler];
            let mut i = pos + 1;
            while i < self.slots.len() {
                if self.slots[i].property == property && self.slots[i].facet == Facet::Value {
                    self.slots.remove(i);
                } else {
                    i += 1;
                }
            }
        } else {
            self.slots.push(Slot::value(property, filler));
        }
    }

    /// Append a `value` filler, merging into an existing `value` line.
    pub fn add_value(&mut self, property: &str, filler: Filler) {
        if let Some(slot) = self.slots.iter_mut().find(|s| s.property == property && s.facet == Facet::Value) {
            if !slot.fillers.contains(&filler) {
                slot.fillers.push(filler);
            }
        } else {
            self.slots.push(Slot::value(property, filler));
        }
    }

    pub fn remove_property(&mut self, property: &str) {
        self.slots.retain(|s| s.property != property);
    }

    /// Properties in first-appearance order, without repeats.
    pub fn properties(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.slots {
            if !out.contains(&s.property.as_str()) {
                out.push(&s.property);
            }
        }
        out
    }
}

/// Kind of a top-level block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    Concept,
    Instance,
    Sense,
    Shape,
    Script,
}

impl BlockKind {
    pub fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "concept" => BlockKind::Concept,
            "instance" => BlockKind::Instance,
            "sense" => BlockKind::Sense,
            "shape" => BlockKind::Shape,
            "script" => BlockKind::Script,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Concept => "concept",
            BlockKind::Instance => "instance",
            BlockKind::Sense => "sense",
            BlockKind::Shape => "shape",
            BlockKind::Script => "script",
        }
    }
}

/// A line inside a nested section, with its deeper-indented children.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Node {
    pub tokens: Vec<String>,
    pub children: Vec<Node>,
}

impl Node {
    pub fn leaf(tokens: &[&str]) -> Self {
        Node { tokens: tokens.iter().map(|t| t.to_string()).collect(), children: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub nodes: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub frame: Frame,
    pub sections: Vec<Section>,
}

impl Block {
    pub fn new(kind: BlockKind, frame: Frame) -> Self {
        Block { kind, frame, sections: Vec::new() }
    }

    pub fn name(&self) -> String {
        self.frame.head.to_string()
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KrErrorKind {
    BadHeader(String),
    UnknownKind(String),
    UnknownFacet(String),
    MissingFacet,
    NoFillers,
    DanglingComparator,
    UnterminatedQuote,
    BadIndent,
    OrphanLine,
    DuplicateBlock(String),
    BadFiller(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KrError {
    pub line: usize,
    pub kind: KrErrorKind,
}

impl fmt::Display for KrErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KrErrorKind::BadHeader(h) => write!(f, "malformed block header `{}`", h),
            KrErrorKind::UnknownKind(k) => write!(f, "unknown block kind `{}`", k),
            KrErrorKind::UnknownFacet(t) => write!(f, "unknown facet `{}`", t),
            KrErrorKind::MissingFacet => f.write_str("slot line has no facet"),
            KrErrorKind::NoFillers => f.write_str("slot line has no fillers"),
            KrErrorKind::DanglingComparator => f.write_str("comparator without operand"),
            KrErrorKind::UnterminatedQuote => f.write_str("unterminated quoted literal"),
            KrErrorKind::BadIndent => f.write_str("indentation must be a multiple of two spaces"),
            KrErrorKind::OrphanLine => f.write_str("indented line outside any block"),
            KrErrorKind::DuplicateBlock(n) => write!(f, "duplicate block `{}`", n),
            KrErrorKind::BadFiller(t) => write!(f, "malformed filler `{}`", t),
        }
    }
}

impl fmt::Display for KrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.kind)
    }
}

impl core::error::Error for KrError {}

/// Uppercase a concept name. Concept lookups are case-insensitive.
pub fn canonical_concept(name: &str) -> String {
    name.to_ascii_uppercase()
}

/// `HUMAN`, `OPERATING-ROOM`, `HUMAN-OR-AGENT`.
pub fn is_concept_token(t: &str) -> bool {
    let mut chars = t.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    t.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '-')
        && !t.ends_with('-')
        && t.chars().any(|c| c.is_ascii_uppercase())
        && t.len() > 1
}

fn split_indexed(t: &str) -> Option<(&str, &str)> {
    let pos = t.rfind('-')?;
    let (concept, rest) = (&t[..pos], &t[pos + 1..]);
    if concept.is_empty() || rest.is_empty() {
        return None;
    }
    Some((concept, rest))
}

fn literal_needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s.chars().any(|c| c.is_whitespace() || c == ';' || c == '"' || c == ',')
        || !matches!(parse_atom(s), Some(Filler::Literal(_)))
}

fn parse_var(t: &str) -> Option<u32> {
    let digits = t.strip_prefix("$var")?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parse one unquoted filler token. Comparators are handled by the caller.
pub fn parse_atom(t: &str) -> Option<Filler> {
    if let Some(rest) = t.strip_prefix('^') {
        let (var, path) = match rest.find('.') {
            Some(i) => (&rest[..i], Some(rest[i + 1..].to_string())),
            None => (rest, None),
        };
        return parse_var(var).map(|var| Filler::MeaningOf { var, path });
    }
    if t.starts_with("$var") {
        return parse_var(t).map(Filler::Var);
    }
    // `HUMAN#17` is accepted as a spelling of `HUMAN-#17`.
    if let Some((concept, n)) = t.split_once('#') {
        if !concept.ends_with('-') && is_concept_token(concept) && !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
            return n.parse().ok().map(|i| Filler::Anchor(InstanceRef::new(concept, i)));
        }
    }
    if let Some((concept, idx)) = split_indexed(t) {
        if is_concept_token(concept) {
            if let Some(n) = idx.strip_prefix('#') {
                if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
                    return n.parse().ok().map(|i| Filler::Anchor(InstanceRef::new(concept, i)));
                }
            } else if idx.chars().all(|c| c.is_ascii_digit()) {
                return idx.parse().ok().map(|i| Filler::Local(InstanceRef::new(concept, i)));
            }
        }
    }
    if is_concept_token(t) {
        return Some(Filler::Concept(t.to_string()));
    }
    Some(Filler::Literal(t.to_string()))
}

/// Split a line into tokens, honoring double quotes and `;` comments.
/// Quoted tokens keep their quotes so callers can tell them apart.
fn tokenize_line(line: &str) -> Result<Vec<String>, KrErrorKind> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => break,
            '"' => {
                if !cur.is_empty() {
                    out.push(core::mem::take(&mut cur));
                }
                let mut q = String::from("\"");
                let mut closed = false;
                for c in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    q.push(c);
                }
                if !closed {
                    return Err(KrErrorKind::UnterminatedQuote);
                }
                q.push('"');
                out.push(q);
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(core::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

/// Parse filler tokens (quoted tokens become literals; trailing commas are
/// stripped; comparators consume the following token).
pub fn parse_fillers(tokens: &[String]) -> Result<Vec<Filler>, KrErrorKind> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let raw = &tokens[i];
        if raw.len() >= 2 && raw.starts_with('"') && raw.ends_with('"') {
            out.push(Filler::Literal(raw[1..raw.len() - 1].to_string()));
            i += 1;
            continue;
        }
        let t = raw.strip_suffix(',').unwrap_or(raw);
        if t.is_empty() {
            i += 1;
            continue;
        }
        if let Some(cmp) = Comparator::parse(t) {
            let operand = tokens.get(i + 1).ok_or(KrErrorKind::DanglingComparator)?;
            let operand = operand.trim_matches('"').trim_end_matches(',').to_string();
            out.push(Filler::Relation { cmp, operand });
            i += 2;
            continue;
        }
        out.push(parse_atom(t).ok_or_else(|| KrErrorKind::BadFiller(t.to_string()))?);
        i += 1;
    }
    Ok(out)
}

fn parse_slot_tokens(tokens: &[String]) -> Result<Slot, KrErrorKind> {
    let property = tokens[0].clone();
    let facet_tok = tokens.get(1).ok_or(KrErrorKind::MissingFacet)?;
    let facet = Facet::parse(facet_tok).ok_or_else(|| KrErrorKind::UnknownFacet(facet_tok.clone()))?;
    let fillers = parse_fillers(&tokens[2..])?;
    if fillers.is_empty() {
        return Err(KrErrorKind::NoFillers);
    }
    Ok(Slot { property, facet, fillers })
}

/// Parse slot lines held in section nodes: a node's tokens are a slot line.
pub fn slot_from_tokens(tokens: &[String]) -> Result<Slot, KrErrorKind> {
    if tokens.is_empty() {
        return Err(KrErrorKind::MissingFacet);
    }
    parse_slot_tokens(tokens)
}

/// Parse a frame written as a section node: the node's single token is the
/// head and its children are slot lines.
pub fn frame_from_node(node: &Node) -> Result<Frame, KrErrorKind> {
    let head = parse_fillers(&node.tokens)?
        .into_iter()
        .next()
        .ok_or_else(|| KrErrorKind::BadFiller(String::new()))?;
    let mut frame = Frame::new(head);
    for child in &node.children {
        frame.slots.push(slot_from_tokens(&child.tokens)?);
    }
    Ok(frame)
}

/// Inverse of [`frame_from_node`].
pub fn frame_to_node(frame: &Frame) -> Node {
    Node {
        tokens: alloc::vec![frame.head.to_string()],
        children: frame.slots.iter().map(|s| Node { tokens: slot_tokens(s), children: Vec::new() }).collect(),
    }
}

fn slot_tokens(slot: &Slot) -> Vec<String> {
    let mut t = alloc::vec![slot.property.clone(), slot.facet.as_str().to_string()];
    t.extend(slot.fillers.iter().map(|f| f.to_string()));
    t
}

/// Parse a whole KB document into blocks.
pub fn parse_kb(text: &str) -> Result<Vec<Block>, KrError> {
    let mut blocks: Vec<Block> = Vec::new();
    // Stack of (indent, path into current section nodes).
    let mut section_stack: Vec<(usize, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |kind| KrError { line: line_no, kind };
        let indent = raw.chars().take_while(|c| *c == ' ').count();
        let tokens = tokenize_line(raw).map_err(err)?;
        if tokens.is_empty() {
            continue;
        }
        if indent % 2 != 0 {
            return Err(err(KrErrorKind::BadIndent));
        }
        if indent == 0 {
            if tokens.len() != 2 {
                return Err(err(KrErrorKind::BadHeader(raw.trim().to_string())));
            }
            let kind = BlockKind::parse(&tokens[0]).ok_or_else(|| err(KrErrorKind::UnknownKind(tokens[0].clone())))?;
            let head = parse_fillers(&tokens[1..2]).map_err(err)?.remove(0);
            let head = match head {
                Filler::Concept(c) => Filler::Concept(canonical_concept(&c)),
                other => other,
            };
            if blocks.iter().any(|b| b.kind == kind && b.frame.head == head) {
                return Err(err(KrErrorKind::DuplicateBlock(head.to_string())));
            }
            blocks.push(Block::new(kind, Frame::new(head)));
            section_stack.clear();
            continue;
        }
        let block = blocks.last_mut().ok_or_else(|| err(KrErrorKind::OrphanLine))?;
        if indent == 2 {
            section_stack.clear();
            if tokens.len() == 1 {
                block.sections.push(Section { name: tokens[0].clone(), nodes: Vec::new() });
                section_stack.push((2, 0));
            } else {
                block.frame.slots.push(parse_slot_tokens(&tokens).map_err(err)?);
            }
            continue;
        }
        // Nested section content.
        if section_stack.is_empty() {
            return Err(err(KrErrorKind::BadIndent));
        }
        let depth = (indent - 4) / 2;
        let section = block.sections.last_mut().ok_or_else(|| err(KrErrorKind::BadIndent))?;
        let mut nodes = &mut section.nodes;
        for _ in 0..depth {
            nodes = match nodes.last_mut() {
                Some(n) => &mut n.children,
                None => return Err(err(KrErrorKind::BadIndent)),
            };
        }
        nodes.push(Node { tokens, children: Vec::new() });
    }
    Ok(blocks)
}

fn write_nodes(out: &mut String, nodes: &[Node], indent: usize) {
    for n in nodes {
        for _ in 0..indent {
            out.push(' ');
        }
        out.push_str(&n.tokens.join(" "));
        out.push('\n');
        write_nodes(out, &n.children, indent + 2);
    }
}

/// Serialize blocks; `parse_kb(serialize_kb(b)) == b` for parsed input.
pub fn serialize_kb(blocks: &[Block]) -> String {
    let mut out = String::new();
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(b.kind.as_str());
        out.push(' ');
        out.push_str(&b.frame.head.to_string());
        out.push('\n');
        for s in &b.frame.slots {
            out.push_str("  ");
            out.push_str(&slot_tokens(s).join(" "));
            out.push('\n');
        }
        for sec in &b.sections {
            out.push_str("  ");
            out.push_str(&sec.name);
            out.push('\n');
            write_nodes(&mut out, &sec.nodes, 4);
        }
    }
    out
}

/// Key identifying an indexed reference independent of its number.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RefKey {
    pub anchored: bool,
    pub concept: String,
    pub index: u32,
}

impl RefKey {
    fn of(f: &Filler) -> Option<RefKey> {
        match f {
            Filler::Anchor(r) => Some(RefKey { anchored: true, concept: r.concept.clone(), index: r.index }),
            Filler::Local(r) => Some(RefKey { anchored: false, concept: r.concept.clone(), index: r.index }),
            _ => None,
        }
    }
}

/// Mapping from indices of the left set to indices of the right set.
pub type IndexMapping = BTreeMap<RefKey, u32>;

fn filler_compatible(a: &Filler, b: &Filler, map: &mut IndexMapping, inverse: &mut BTreeMap<RefKey, u32>) -> bool {
    match (RefKey::of(a), RefKey::of(b)) {
        (Some(ka), Some(kb)) => {
            if ka.anchored != kb.anchored || ka.concept != kb.concept {
                return false;
            }
            match map.get(&ka) {
                Some(&i) => i == kb.index,
                None => {
                    if inverse.contains_key(&kb) {
                        return false;
                    }
                    map.insert(ka.clone(), kb.index);
                    inverse.insert(kb, ka.index);
                    true
                }
            }
        }
        (None, None) => a == b,
        _ => false,
    }
}

fn frame_compatible(a: &Frame, b: &Frame, map: &mut IndexMapping, inverse: &mut BTreeMap<RefKey, u32>) -> bool {
    if a.slots.len() != b.slots.len() || !filler_compatible(&a.head, &b.head, map, inverse) {
        return false;
    }
    // Slot lines compare as multisets keyed by (property, facet); fillers in order.
    let mut used = alloc::vec![false; b.slots.len()];
    for sa in &a.slots {
        let mut found = false;
        for (j, sb) in b.slots.iter().enumerate() {
            if used[j] || sa.property != sb.property || sa.facet != sb.facet || sa.fillers.len() != sb.fillers.len() {
                continue;
            }
            let (mut m2, mut i2) = (map.clone(), inverse.clone());
            if sa.fillers.iter().zip(&sb.fillers).all(|(x, y)| filler_compatible(x, y, &mut m2, &mut i2)) {
                *map = m2;
                *inverse = i2;
                used[j] = true;
                found = true;
                break;
            }
        }
        if !found {
            return false;
        }
    }
    true
}

fn match_frames(a: &[&Frame], b: &[&Frame], used: &mut [bool], map: &IndexMapping, inverse: &BTreeMap<RefKey, u32>) -> Option<IndexMapping> {
    let Some((first, rest)) = a.split_first() else {
        return Some(map.clone());
    };
    for j in 0..b.len() {
        if used[j] {
            continue;
        }
        let (mut m2, mut i2) = (map.clone(), inverse.clone());
        if frame_compatible(first, b[j], &mut m2, &mut i2) {
            used[j] = true;
            if let Some(found) = match_frames(rest, b, used, &m2, &i2) {
                return Some(found);
            }
            used[j] = false;
        }
    }
    None
}

/// Structural equality of two frame sets up to a consistent renumbering of
/// instance indices (per concept, anchors and locals kept apart). Returns the
/// left-to-right index mapping on success.
pub fn frames_equal_modulo_indices(a: &[Frame], b: &[Frame]) -> Option<IndexMapping> {
    if a.len() != b.len() {
        return None;
    }
    let ra: Vec<&Frame> = a.iter().collect();
    let rb: Vec<&Frame> = b.iter().collect();
    let mut used = alloc::vec![false; b.len()];
    match_frames(&ra, &rb, &mut used, &BTreeMap::new(), &BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const SURGERY: &str = "concept SURGERY
  IS-A value MEDICAL-PROCEDURE
  AGENT default SURGEON
  AGENT sem PHYSICIAN
  AGENT relaxable-to HUMAN, ROBOT
  LOCATION default OPERATING-ROOM
  LOCATION sem MEDICAL-BUILDING
  LOCATION relaxable-to PLACE
";

    #[test]
    fn surgery_block_has_seven_slots() {
        let blocks = parse_kb(SURGERY).unwrap();
        assert_eq!(blocks.len(), 1);
        let f = &blocks[0].frame;
        assert_eq!(f.head, Filler::Concept("SURGERY".into()));
        assert_eq!(f.slots.len(), 7);
        assert_eq!(f.fillers("AGENT", Facet::RelaxableTo), vec![&Filler::concept("HUMAN"), &Filler::concept("ROBOT")]);
    }

    #[test]
    fn empty_document() {
        assert!(parse_kb("").unwrap().is_empty());
        assert_eq!(serialize_kb(&[]), "");
    }

    #[test]
    fn unknown_facet_rejected_with_line() {
        let e = parse_kb("concept X\n  IS-A value ALL\n  AGENT maybe HUMAN\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.kind, KrErrorKind::UnknownFacet("maybe".into()));
    }

    #[test]
    fn duplicate_block_rejected() {
        let e = parse_kb("concept X\n  IS-A value ALL\nconcept X\n  IS-A value ALL\n").unwrap_err();
        assert_eq!(e.kind, KrErrorKind::DuplicateBlock("X".into()));
    }

    #[test]
    fn multi_filler_serializes_on_one_line() {
        let blocks = parse_kb(SURGERY).unwrap();
        let text = serialize_kb(&blocks);
        assert!(text.contains("  AGENT relaxable-to HUMAN ROBOT\n"));
        assert_eq!(parse_kb(&text).unwrap(), blocks);
    }

    #[test]
    fn filler_kinds() {
        let toks: Vec<String> = ["HUMAN-#17", "TIGER-1", "Tony", ".8", "2024-12-12", "<", "find-anchor-time", "$var2", "^$var2.THEME", "\"two words\""]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let f = parse_fillers(&toks).unwrap();
        assert_eq!(f[0], Filler::Anchor(InstanceRef::new("HUMAN", 17)));
        assert_eq!(f[1], Filler::Local(InstanceRef::new("TIGER", 1)));
        assert_eq!(f[2], Filler::literal("Tony"));
        assert_eq!(f[3], Filler::literal(".8"));
        assert_eq!(f[4], Filler::literal("2024-12-12"));
        assert_eq!(f[5], Filler::Relation { cmp: Comparator::Lt, operand: "find-anchor-time".into() });
        assert_eq!(f[6], Filler::Var(2));
        assert_eq!(f[7], Filler::MeaningOf { var: 2, path: Some("THEME".into()) });
        assert_eq!(f[8], Filler::literal("two words"));
    }

    #[test]
    fn comments_are_ignored() {
        let b = parse_kb("script FILL-GAS-TANK\n  CAUSED-BY value FLUID-LEVEL-1 ; fuel level is low\n").unwrap();
        assert_eq!(b[0].frame.slots[0].fillers, vec![Filler::Local(InstanceRef::new("FLUID-LEVEL", 1))]);
    }

    #[test]
    fn sections_nest_by_indent() {
        let text = "sense put-v29\n  syn-class value v-do-pp\n  syn-struc\n    subject $var1\n    pp\n      prep on\n      obj\n        det a\n        n pedestal\n";
        let b = parse_kb(text).unwrap();
        let s = b[0].section("syn-struc").unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.nodes[1].children[1].children[1].tokens, vec!["n".to_string(), "pedestal".into()]);
        assert_eq!(parse_kb(&serialize_kb(&b)).unwrap(), b);
    }

    #[test]
    fn facet_order_is_strict_and_total() {
        let f = Facet::ALL_STRONGEST_FIRST;
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(f[i] > f[j], i < j);
            }
        }
    }

    fn tiger(idx: u32, facet: Facet) -> Frame {
        Frame {
            head: Filler::Local(InstanceRef::new("TIGER", idx)),
            slots: vec![Slot::new("DISCOURSE-STATUS", facet, vec![Filler::literal("new")])],
        }
    }

    #[test]
    fn modulo_indices() {
        let m = frames_equal_modulo_indices(&[tiger(1, Facet::Value)], &[tiger(7, Facet::Value)]).unwrap();
        assert_eq!(m.values().copied().collect::<Vec<_>>(), vec![7]);
        let id = frames_equal_modulo_indices(&[tiger(3, Facet::Value)], &[tiger(3, Facet::Value)]).unwrap();
        assert_eq!(id.values().copied().collect::<Vec<_>>(), vec![3]);
        assert!(frames_equal_modulo_indices(&[tiger(1, Facet::Value)], &[tiger(1, Facet::Default)]).is_none());
    }

    #[test]
    fn renumbering_must_be_a_bijection() {
        let pair = |a: u32, b: u32| Frame {
            head: Filler::Local(InstanceRef::new("EVENT", 1)),
            slots: vec![
                Slot::value("AGENT", Filler::Local(InstanceRef::new("HUMAN", a))),
                Slot::value("THEME", Filler::Local(InstanceRef::new("HUMAN", b))),
            ],
        };
        assert!(frames_equal_modulo_indices(&[pair(1, 2)], &[pair(5, 6)]).is_some());
        assert!(frames_equal_modulo_indices(&[pair(1, 2)], &[pair(5, 5)]).is_none());
        assert!(frames_equal_modulo_indices(&[pair(1, 1)], &[pair(5, 6)]).is_none());
    }
}
