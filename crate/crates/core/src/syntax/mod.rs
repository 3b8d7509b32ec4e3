//! Tokenizing, morphology and chart parsing of the controlled fragment.

pub mod chart;
pub mod grammar;
pub mod morph;
pub mod token;
pub mod tree;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::lexicon::Lexicon;
use chart::{Cands, Chart, Frag};
use grammar::{form_of, preterminals, rules, Pre, Sym};
use morph::{morph_analyze, MorphAnalysis, Number, WordClass};
use token::{sentences, tokenize, Token};
pub use tree::{Edge, ParseTree, TreeNode, TreeReadError};

/// A token after multiword merging, with all its analyses.
#[derive(Clone, Debug)]
pub struct Word {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub analyses: Vec<MorphAnalysis>,
}

impl Word {
    pub fn is_unknown(&self) -> bool {
        self.analyses.iter().all(|a| a.unknown)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub sentence: usize,
    pub position: usize,
    pub token: String,
    pub unknown_word: bool,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.token.is_empty() {
            return write!(f, "parse failure: empty input");
        }
        let why = if self.unknown_word { "unknown word" } else { "first uncovered token" };
        write!(f, "parse failure in sentence {}: {} '{}' at position {}", self.sentence + 1, why, self.token, self.position)
    }
}

impl core::error::Error for ParseError {}

/// Merge tokens that spell a multiword lemma, longest match first.
fn merge_multiwords(tokens: &[Token], lex: &Lexicon) -> Vec<(String, usize, usize)> {
    let multi: Vec<Vec<String>> = lex.multiword_lemmas();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let hit = multi.iter().find(|parts| {
            parts.len() <= tokens.len() - i && parts.iter().zip(&tokens[i..]).all(|(p, t)| t.text.to_lowercase() == *p)
        });
        match hit {
            Some(parts) => {
                let k = parts.len();
                let surface: Vec<&str> = tokens[i..i + k].iter().map(|t| t.text.as_str()).collect();
                out.push((surface.join("_"), tokens[i].start, tokens[i + k - 1].end));
                i += k;
            }
            None => {
                out.push((tokens[i].text.clone(), tokens[i].start, tokens[i].end));
                i += 1;
            }
        }
    }
    out
}

/// Words of one sentence, analyzed.
pub fn analyze_words(tokens: &[Token], lex: &Lexicon) -> Vec<Word> {
    merge_multiwords(tokens, lex)
        .into_iter()
        .map(|(surface, start, end)| {
            let analyses = morph_analyze(&surface, lex);
            Word { surface, start, end, analyses }
        })
        .collect()
}

fn candidates(words: &[Word]) -> Cands {
    words
        .iter()
        .map(|w| {
            let mut c: Vec<(Pre, usize)> = Vec::new();
            for (k, a) in w.analyses.iter().enumerate() {
                for p in preterminals(a, &w.surface) {
                    c.push((p, k));
                }
            }
            c
        })
        .collect()
}

fn node_for(word: &Word, analysis: &MorphAnalysis, pre: Pre, pos: usize) -> TreeNode {
    let mut feats = alloc::collections::BTreeMap::new();
    feats.insert("w".to_string(), word.surface.clone());
    let form = if analysis.unknown {
        pre.implied_form().or(match pre {
            Pre::VFin if word.surface.ends_with("ed") => Some("past"),
            Pre::VFin => Some("present"),
            _ => None,
        })
    } else {
        form_of(analysis)
    };
    if let Some(f) = form {
        feats.insert("form".into(), f.into());
    }
    if let Some(n) = analysis.number {
        feats.insert("num".into(), if n == Number::Singular { "sg" } else { "pl" }.into());
    }
    if let Some(p) = analysis.person {
        feats.insert("person".into(), alloc::format!("{}", p));
    }
    if matches!(analysis.class, WordClass::Name | WordClass::Pronoun) {
        feats.insert("gender".into(), analysis.gender.as_str().into());
    }
    if let Some(d) = analysis.definite {
        feats.insert("def".into(), if d { "yes" } else { "no" }.into());
    }
    if analysis.unknown {
        feats.insert("unknown".into(), "yes".into());
    }
    TreeNode { id: pos, lemma: analysis.lemma.clone(), pos: pre.tag().to_string(), feats }
}

/// Clause features read off auxiliaries: clause tense, progressive aspect,
/// passive voice.
fn add_clause_features(tree: &mut ParseTree) {
    let ids: Vec<usize> = tree.nodes.iter().filter(|n| n.is_verb()).map(|n| n.id).collect();
    for id in ids {
        let own = tree.node(id).and_then(|n| n.feat("form")).map(|s| s.to_string());
        let mut ctense = own.clone().filter(|f| f == "past" || f == "present");
        let mut be_aux = false;
        for e in tree.children(id) {
            if e.label != "aux" {
                continue;
            }
            let Some(a) = tree.node(e.dep) else { continue };
            if a.lemma == "be" {
                be_aux = true;
            }
            if let Some(f) = a.feat("form").filter(|f| *f == "past" || *f == "present") {
                ctense = Some(f.to_string());
            }
        }
        let node = tree.node_mut(id).expect("verb id");
        if let Some(t) = ctense {
            node.feats.insert("ctense".into(), t);
        }
        if be_aux {
            match own.as_deref() {
                Some("prespart") => {
                    node.feats.insert("aspect".into(), "progressive".into());
                }
                Some("pastpart") => {
                    node.feats.insert("voice".into(), "passive".into());
                }
                _ => {}
            }
        }
    }
}

fn build_tree(words: &[Word], frag: &Frag) -> ParseTree {
    let nodes = frag.nodes.iter().map(|&(pos, a, pre)| node_for(&words[pos], &words[pos].analyses[a], pre, pos)).collect();
    let edges = frag.edges.iter().map(|&(h, l, d)| Edge { head: h, label: l.to_string(), dep: d }).collect();
    let mut t = ParseTree { nodes, edges };
    t.nodes.sort();
    t.edges.sort();
    add_clause_features(&mut t);
    t
}

/// Attachment cost: total distance spanned by pp and conj edges, so lower
/// attachments come first.
pub fn attachment_cost(t: &ParseTree) -> usize {
    t.edges.iter().filter(|e| e.label == "pp" || e.label == "conj").map(|e| e.head.abs_diff(e.dep)).sum()
}

fn rank(words: &[Word], frags: &BTreeSet<Frag>) -> Vec<ParseTree> {
    let mut trees: Vec<(usize, String, ParseTree)> = frags
        .iter()
        .map(|f| {
            let t = build_tree(words, f);
            (attachment_cost(&t), t.serialize(), t)
        })
        .collect();
    trees.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    trees.dedup_by(|a, b| a.1 == b.1);
    trees.into_iter().map(|(_, _, t)| t).collect()
}

fn failure(words: &[Word], sentence: usize, reach: usize) -> ParseError {
    if let Some((i, w)) = words.iter().enumerate().find(|(_, w)| w.is_unknown()) {
        return ParseError { sentence, position: i, token: w.surface.clone(), unknown_word: true };
    }
    let position = reach.min(words.len().saturating_sub(1));
    ParseError { sentence, position, token: words.get(position).map(|w| w.surface.clone()).unwrap_or_default(), unknown_word: false }
}

/// Ranked trees for one sentence's words.
pub fn parse_words(words: &[Word], sentence: usize) -> Result<Vec<ParseTree>, ParseError> {
    if words.is_empty() {
        return Err(ParseError { sentence, position: 0, token: String::new(), unknown_word: false });
    }
    let cands = candidates(words);
    let g = rules();
    let chart = Chart::parse(&cands, &g);
    match chart.get(Sym::Root, 0, words.len()) {
        Some(frags) if !frags.is_empty() => Ok(rank(words, frags)),
        _ => Err(failure(words, sentence, chart.prefix_reach())),
    }
}

/// Parse text holding a single sentence.
pub fn parse(text: &str, lex: &Lexicon) -> Result<Vec<ParseTree>, ParseError> {
    let toks = tokenize(text);
    parse_words(&analyze_words(&toks, lex), 0)
}

/// Parse every sentence of a document.
pub fn parse_text(text: &str, lex: &Lexicon) -> Result<Vec<Vec<ParseTree>>, ParseError> {
    sentences(&tokenize(text))
        .iter()
        .enumerate()
        .map(|(i, s)| parse_words(&analyze_words(s, lex), i))
        .collect()
}

/// All trees by exhaustive, unshared enumeration of the grammar. Slow; meant
/// for checking the chart parser.
pub fn parse_brute_force(text: &str, lex: &Lexicon) -> Vec<ParseTree> {
    let words = analyze_words(&tokenize(text), lex);
    let frags = chart::enumerate(&candidates(&words), &rules(), Sym::Root, 0, words.len());
    rank(&words, &frags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn edges(t: &ParseTree) -> Vec<(String, String, String)> {
        t.edges
            .iter()
            .map(|e| (t.node(e.head).unwrap().lemma.clone(), e.label.clone(), t.node(e.dep).unwrap().lemma.clone()))
            .collect()
    }

    fn has(t: &ParseTree, h: &str, l: &str, d: &str) -> bool {
        edges(t).contains(&(h.into(), l.into(), d.into()))
    }

    #[test]
    fn progressive_declarative() {
        let lex = bundled::lexicon();
        let trees = parse("Tony was watching a tiger.", &lex).unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.node(t.root()).unwrap().lemma, "watch");
        assert!(has(t, "watch", "subject", "tony"));
        assert!(has(t, "watch", "directobject", "tiger"));
        assert!(has(t, "watch", "aux", "be"));
        assert_eq!(t.node(t.root()).unwrap().feat("aspect"), Some("progressive"));
        assert_eq!(t.node(t.root()).unwrap().feat("ctense"), Some("past"));
    }

    #[test]
    fn passive_wh_question() {
        let lex = bundled::lexicon();
        let t = &parse("What was Mary given by the workers?", &lex).unwrap()[0];
        assert!(has(t, "give", "wh-focus", "what"));
        assert!(has(t, "give", "aux", "be"));
        assert!(has(t, "give", "subject", "mary"));
        assert!(has(t, "give", "by-agent", "worker"));
        assert_eq!(t.node(t.root()).unwrap().feat("voice"), Some("passive"));
    }

    #[test]
    fn infinitive_and_prepositional_gerund() {
        let lex = bundled::lexicon();
        let t = &parse("Mary needed to feed Spot before going out to dinner.", &lex).unwrap()[0];
        assert!(has(t, "need", "xcomp", "feed"));
        assert!(has(t, "feed", "pp", "before"));
        assert!(has(t, "before", "obj", "go"));
        assert!(has(t, "go", "part", "out"));
        assert!(has(t, "go", "pp", "to"));
    }

    #[test]
    fn low_attachment_first_both_kept() {
        let lex = bundled::lexicon();
        let trees = parse("John puts his uncle on a pedestal.", &lex).unwrap();
        assert_eq!(trees.len(), 2);
        assert!(has(&trees[0], "uncle", "pp", "on"));
        assert!(has(&trees[1], "put", "pp", "on"));
    }

    #[test]
    fn chart_top_tree_is_in_brute_force_set() {
        let lex = bundled::lexicon();
        for s in ["Tony was watching a tiger.", "John looks up to his uncle.", "Patty grabbed the cupcake and scarfed it down."] {
            let fast = parse(s, &lex).unwrap();
            let slow = parse_brute_force(s, &lex);
            assert_eq!(fast, slow, "{}", s);
        }
    }

    #[test]
    fn out_of_fragment_names_token() {
        let lex = bundled::lexicon();
        let e = parse("Tony the tiger.", &lex).unwrap_err();
        assert_eq!(e.token, "the");
        assert!(!e.unknown_word);
    }

    #[test]
    fn unknown_verb_still_parses() {
        let lex = bundled::lexicon();
        let t = &parse("Tony zorched a tiger.", &lex).unwrap()[0];
        let root = t.node(t.root()).unwrap();
        assert_eq!(root.lemma, "zorched");
        assert_eq!(root.feat("unknown"), Some("yes"));
    }

    #[test]
    fn round_trip_serialization() {
        let lex = bundled::lexicon();
        for s in ["Tony was watching a tiger.", "What did the workers give Mary?", "Here's how you fill a gas tank."] {
            for t in parse(s, &lex).unwrap() {
                assert_eq!(ParseTree::read(&t.serialize()).unwrap(), t);
            }
        }
    }
}
