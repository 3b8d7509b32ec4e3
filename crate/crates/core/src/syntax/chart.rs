//! Bottom-up chart parsing over the controlled grammar, plus an unmemoized
//! top-down enumerator used as a test oracle.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::grammar::{Attach, Pre, Rule, Sym};

/// Per token position: the categories it can serve as, each with the index
/// of the morphological analysis that licenses it.
pub type Cands = Vec<Vec<(Pre, usize)>>;

/// A dependency fragment covering a span.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frag {
    pub head: usize,
    /// (token position, analysis index, category), sorted by position.
    pub nodes: Vec<(usize, usize, Pre)>,
    /// (head position, label, dependent position), sorted.
    pub edges: Vec<(usize, &'static str, usize)>,
}

fn leaf(pos: usize, analysis: usize, pre: Pre) -> Frag {
    Frag { head: pos, nodes: alloc::vec![(pos, analysis, pre)], edges: Vec::new() }
}

fn combine(rule: &Rule, children: &[&Frag]) -> Frag {
    let h = rule.head();
    let head = children[h].head;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (k, c) in children.iter().enumerate() {
        match rule.rhs[k].1 {
            Attach::Drop => continue,
            Attach::Head => {}
            Attach::Edge(l) => edges.push((head, l, c.head)),
        }
        nodes.extend(c.nodes.iter().copied());
        edges.extend(c.edges.iter().copied());
    }
    nodes.sort();
    edges.sort();
    Frag { head, nodes, edges }
}

type Cell = BTreeMap<Sym, BTreeSet<Frag>>;

pub struct Chart {
    n: usize,
    cells: Vec<Cell>,
}

impl Chart {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    pub fn get(&self, sym: Sym, i: usize, j: usize) -> Option<&BTreeSet<Frag>> {
        self.cells[self.idx(i, j)].get(&sym)
    }

    /// Largest j such that some constituent spans [0, j).
    pub fn prefix_reach(&self) -> usize {
        (1..=self.n).rev().find(|&j| !self.cells[self.idx(0, j)].is_empty()).unwrap_or(0)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn parse(cands: &Cands, rules: &[Rule]) -> Chart {
        let n = cands.len();
        let mut chart = Chart { n, cells: alloc::vec![Cell::new(); (n + 1) * (n + 1)] };
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                let mut cell = Cell::new();
                if len == 1 {
                    for &(pre, a) in &cands[i] {
                        cell.entry(Sym::T(pre)).or_default().insert(leaf(i, a, pre));
                    }
                }
                for rule in rules.iter().filter(|r| r.rhs.len() > 1) {
                    let mut acc = Vec::new();
                    let mut out = BTreeSet::new();
                    chart.splits(rule, 0, i, j, &mut acc, &mut out);
                    if !out.is_empty() {
                        cell.entry(rule.lhs).or_default().extend(out);
                    }
                }
                // Unary closure; the unary rules are acyclic so this settles.
                loop {
                    let mut added = false;
                    for rule in rules.iter().filter(|r| r.rhs.len() == 1) {
                        let Some(src) = cell.get(&rule.rhs[0].0) else { continue };
                        let new: Vec<Frag> = src.iter().map(|f| combine(rule, &[f])).collect();
                        let dst = cell.entry(rule.lhs).or_default();
                        for f in new {
                            added |= dst.insert(f);
                        }
                    }
                    if !added {
                        break;
                    }
                }
                let k = chart.idx(i, j);
                chart.cells[k] = cell;
            }
        }
        chart
    }

    fn splits<'a>(&'a self, rule: &Rule, k: usize, pos: usize, end: usize, acc: &mut Vec<&'a Frag>, out: &mut BTreeSet<Frag>) {
        let remaining = rule.rhs.len() - k;
        if end < pos + remaining {
            return;
        }
        if remaining == 1 {
            if let Some(fs) = self.get(rule.rhs[k].0, pos, end) {
                for f in fs {
                    acc.push(f);
                    out.insert(combine(rule, acc));
                    acc.pop();
                }
            }
            return;
        }
        for mid in pos + 1..=end - (remaining - 1) {
            if let Some(fs) = self.get(rule.rhs[k].0, pos, mid) {
                for f in fs {
                    acc.push(f);
                    self.splits(rule, k + 1, mid, end, acc, out);
                    acc.pop();
                }
            }
        }
    }
}

/// Every derivation of `sym` over [i, j), by plain recursion with no
/// sharing between calls.
pub fn enumerate(cands: &Cands, rules: &[Rule], sym: Sym, i: usize, j: usize) -> BTreeSet<Frag> {
    let mut out = BTreeSet::new();
    if let Sym::T(pre) = sym {
        if j == i + 1 {
            for &(p, a) in &cands[i] {
                if p == pre {
                    out.insert(leaf(i, a, p));
                }
            }
        }
        return out;
    }
    for rule in rules.iter().filter(|r| r.lhs == sym) {
        let mut partial: Vec<Vec<Frag>> = alloc::vec![Vec::new()];
        let mut ends: Vec<usize> = alloc::vec![i];
        for k in 0..rule.rhs.len() {
            let last = k + 1 == rule.rhs.len();
            let mut next_partial = Vec::new();
            let mut next_ends = Vec::new();
            for (p, &start) in partial.iter().zip(&ends) {
                let stops: Vec<usize> = if last { alloc::vec![j] } else { (start + 1..j).collect() };
                for stop in stops {
                    if stop <= start {
                        continue;
                    }
                    for f in enumerate(cands, rules, rule.rhs[k].0, start, stop) {
                        let mut q = p.clone();
                        q.push(f);
                        next_partial.push(q);
                        next_ends.push(stop);
                    }
                }
            }
            partial = next_partial;
            ends = next_ends;
        }
        for p in partial {
            let refs: Vec<&Frag> = p.iter().collect();
            out.insert(combine(rule, &refs));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::grammar::{rules, Pre::*};

    fn cands(cats: &[&[Pre]]) -> Cands {
        cats.iter().map(|cs| cs.iter().map(|&p| (p, 0)).collect()).collect()
    }

    #[test]
    fn chart_agrees_with_enumeration_on_pp_ambiguity() {
        // name v det n p det n punct
        let c = cands(&[&[Name], &[VFin], &[Det], &[N], &[P], &[Det], &[N], &[Punct]]);
        let g = rules();
        let chart = Chart::parse(&c, &g);
        let fast = chart.get(Sym::Root, 0, c.len()).cloned().unwrap_or_default();
        let slow = enumerate(&c, &g, Sym::Root, 0, c.len());
        assert_eq!(fast, slow);
        assert_eq!(fast.len(), 2);
    }

    #[test]
    fn no_parse_reports_prefix() {
        let c = cands(&[&[Name], &[Det], &[N]]);
        let chart = Chart::parse(&c, &rules());
        assert!(chart.get(Sym::Root, 0, 3).is_none());
        assert_eq!(chart.prefix_reach(), 1);
    }
}
