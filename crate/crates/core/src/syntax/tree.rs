//! Labeled dependency trees and their parenthesized text format.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::grammar::is_edge_label;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeNode {
    pub id: usize,
    pub lemma: String,
    pub pos: String,
    pub feats: BTreeMap<String, String>,
}

impl TreeNode {
    pub fn feat(&self, key: &str) -> Option<&str> {
        self.feats.get(key).map(|s| s.as_str())
    }

    /// Surface form; falls back to the lemma.
    pub fn word(&self) -> &str {
        self.feat("w").unwrap_or(&self.lemma)
    }

    pub fn is_verb(&self) -> bool {
        self.pos == "v"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub head: usize,
    pub label: String,
    pub dep: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParseTree {
    /// Sorted by id.
    pub nodes: Vec<TreeNode>,
    /// Sorted by (head, label, dep).
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeReadError {
    Malformed(String),
    UnknownLabel(String),
    UnknownNode(usize),
    TwoHeads(usize),
    RootCount(usize),
}

impl fmt::Display for TreeReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeReadError::Malformed(m) => write!(f, "malformed tree: {}", m),
            TreeReadError::UnknownLabel(l) => write!(f, "unknown edge label {}", l),
            TreeReadError::UnknownNode(n) => write!(f, "edge names unknown node {}", n),
            TreeReadError::TwoHeads(n) => write!(f, "node {} has more than one head", n),
            TreeReadError::RootCount(k) => write!(f, "tree must have exactly one root, found {}", k),
        }
    }
}

impl core::error::Error for TreeReadError {}

impl ParseTree {
    pub fn node(&self, id: usize) -> Option<&TreeNode> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: usize) -> Option<&mut TreeNode> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(move |i| &mut self.nodes[i])
    }

    pub fn root(&self) -> usize {
        self.nodes.iter().map(|n| n.id).find(|&id| self.incoming(id).is_none()).unwrap_or(0)
    }

    pub fn incoming(&self, id: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.dep == id)
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.incoming(id).map(|e| e.head)
    }

    /// Outgoing edges of `id` in dependent order.
    pub fn children(&self, id: usize) -> Vec<&Edge> {
        let mut v: Vec<&Edge> = self.edges.iter().filter(|e| e.head == id).collect();
        v.sort_by_key(|e| e.dep);
        v
    }

    pub fn child(&self, id: usize, label: &str) -> Option<usize> {
        self.children(id).into_iter().find(|e| e.label == label).map(|e| e.dep)
    }

    pub fn is_interrogative(&self) -> bool {
        self.edges.iter().any(|e| e.label == "wh-focus")
    }

    pub fn serialize(&self) -> String {
        let mut s = String::from("(tree\n");
        for n in &self.nodes {
            s.push_str(&alloc::format!("  (node {} {} {}", n.id, n.lemma, n.pos));
            for (k, v) in &n.feats {
                s.push_str(&alloc::format!(" {}={}", k, v));
            }
            s.push_str(")\n");
        }
        for e in &self.edges {
            s.push_str(&alloc::format!("  (edge {} {} {})\n", e.head, e.label, e.dep));
        }
        s.push_str(")\n");
        s
    }

    /// Structural checks shared by the reader and the parser.
    pub fn validate(&self) -> Result<(), TreeReadError> {
        let mut heads: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &self.edges {
            if !is_edge_label(&e.label) {
                return Err(TreeReadError::UnknownLabel(e.label.clone()));
            }
            for id in [e.head, e.dep] {
                if self.node(id).is_none() {
                    return Err(TreeReadError::UnknownNode(id));
                }
            }
            if heads.insert(e.dep, e.head).is_some() {
                return Err(TreeReadError::TwoHeads(e.dep));
            }
        }
        let roots = self.nodes.iter().filter(|n| !heads.contains_key(&n.id)).count();
        if roots != 1 {
            return Err(TreeReadError::RootCount(roots));
        }
        Ok(())
    }

    pub fn read(text: &str) -> Result<ParseTree, TreeReadError> {
        let mut toks: Vec<&str> = Vec::new();
        let mut rest = text;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            if rest.starts_with('(') || rest.starts_with(')') {
                toks.push(&rest[..1]);
                rest = &rest[1..];
                continue;
            }
            let end = rest.find(|c: char| c.is_whitespace() || c == '(' || c == ')').unwrap_or(rest.len());
            toks.push(&rest[..end]);
            rest = &rest[end..];
        }
        let malformed = |m: &str| TreeReadError::Malformed(m.to_string());
        let mut it = toks.into_iter().peekable();
        if it.next() != Some("(") || it.next() != Some("tree") {
            return Err(malformed("expected (tree"));
        }
        let mut tree = ParseTree { nodes: Vec::new(), edges: Vec::new() };
        loop {
            match it.next() {
                Some(")") => break,
                Some("(") => {}
                Some(t) => return Err(TreeReadError::Malformed(alloc::format!("unexpected {}", t))),
                None => return Err(malformed("unbalanced parentheses")),
            }
            let kind = it.next().ok_or_else(|| malformed("unbalanced parentheses"))?;
            let mut items = Vec::new();
            loop {
                match it.next() {
                    Some(")") => break,
                    Some("(") => return Err(malformed("nested list inside node or edge")),
                    Some(t) => items.push(t),
                    None => return Err(malformed("unbalanced parentheses")),
                }
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| TreeReadError::Malformed(alloc::format!("bad id {}", s)));
            match kind {
                "node" => {
                    if items.len() < 3 {
                        return Err(malformed("node needs id, lemma and pos"));
                    }
                    let mut feats = BTreeMap::new();
                    for f in &items[3..] {
                        let (k, v) = f.split_once('=').ok_or_else(|| TreeReadError::Malformed(alloc::format!("bad feature {}", f)))?;
                        feats.insert(k.to_string(), v.to_string());
                    }
                    tree.nodes.push(TreeNode { id: num(items[0])?, lemma: items[1].to_string(), pos: items[2].to_string(), feats });
                }
                "edge" => {
                    if items.len() != 3 {
                        return Err(malformed("edge needs head, label and dependent"));
                    }
                    tree.edges.push(Edge { head: num(items[0])?, label: items[1].to_string(), dep: num(items[2])? });
                }
                other => return Err(TreeReadError::Malformed(alloc::format!("unknown item {}", other))),
            }
        }
        if it.next().is_some() {
            return Err(malformed("text after tree"));
        }
        tree.nodes.sort();
        tree.edges.sort();
        for w in tree.nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(TreeReadError::Malformed(alloc::format!("duplicate node {}", w[0].id)));
            }
        }
        tree.validate()?;
        Ok(tree)
    }
}
