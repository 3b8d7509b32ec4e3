//! The controlled grammar: preterminal categories read off morphological
//! analyses, and headed phrase-structure rules whose non-head children are
//! attached by labeled dependency edges.

use alloc::vec::Vec;

use super::morph::{MorphAnalysis, Participle, Tense, WordClass};

/// Preterminal categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pre {
    N,
    Name,
    Pron,
    Wh,
    Det,
    Adj,
    P,
    By,
    Part,
    To,
    Conj,
    Comma,
    Punct,
    Adv,
    Cue,
    That,
    BeFin,
    DoFin,
    VFin,
    VBare,
    VIng,
    VEn,
}

impl Pre {
    pub fn tag(self) -> &'static str {
        match self {
            Pre::N => "n",
            Pre::Name => "name",
            Pre::Pron => "pron",
            Pre::Wh => "wh",
            Pre::Det => "det",
            Pre::Adj => "adj",
            Pre::P | Pre::By => "p",
            Pre::Part => "part",
            Pre::To => "to",
            Pre::Conj => "conj",
            Pre::Comma | Pre::Punct => "punct",
            Pre::Adv => "adv",
            Pre::Cue => "cue",
            Pre::That => "that",
            Pre::BeFin | Pre::DoFin | Pre::VFin | Pre::VBare | Pre::VIng | Pre::VEn => "v",
        }
    }

    /// Verb form feature implied by the category, for words the
    /// morphology could not analyze.
    pub fn implied_form(self) -> Option<&'static str> {
        match self {
            Pre::VBare => Some("bare"),
            Pre::VIng => Some("prespart"),
            Pre::VEn => Some("pastpart"),
            _ => None,
        }
    }
}

/// Categories an analysis can serve as.
pub fn preterminals(m: &MorphAnalysis, surface: &str) -> Vec<Pre> {
    let mut out = Vec::new();
    if m.unknown {
        out.push(Pre::N);
        out.push(Pre::Adj);
        let s = surface.to_lowercase();
        if s.ends_with("ing") {
            out.push(Pre::VIng);
        } else if s.ends_with("ed") {
            out.push(Pre::VFin);
            out.push(Pre::VEn);
        } else {
            out.push(Pre::VFin);
            out.push(Pre::VBare);
        }
        return out;
    }
    let verbal = |finite: Pre| -> Option<Pre> {
        if m.tense.is_some() {
            Some(finite)
        } else if m.participle == Some(Participle::Present) {
            Some(Pre::VIng)
        } else if m.participle == Some(Participle::Past) {
            Some(Pre::VEn)
        } else if m.bare {
            Some(Pre::VBare)
        } else {
            None
        }
    };
    match m.class {
        WordClass::Noun => out.push(Pre::N),
        WordClass::Name => out.push(Pre::Name),
        WordClass::Pronoun => out.push(Pre::Pron),
        WordClass::Wh => out.push(Pre::Wh),
        WordClass::Det => out.push(Pre::Det),
        WordClass::Adj => out.push(Pre::Adj),
        WordClass::Prep if m.lemma == "by" => out.push(Pre::By),
        WordClass::Prep => out.push(Pre::P),
        WordClass::Particle => out.push(Pre::Part),
        WordClass::InfTo => out.push(Pre::To),
        WordClass::Conj => out.push(Pre::Conj),
        WordClass::Comma => out.push(Pre::Comma),
        WordClass::Punct => out.push(Pre::Punct),
        WordClass::Adv => out.push(Pre::Adv),
        WordClass::Cue => out.push(Pre::Cue),
        WordClass::That => out.push(Pre::That),
        WordClass::Be => {
            if m.tense.is_some() {
                out.push(Pre::BeFin);
            }
        }
        WordClass::Do => {
            if m.tense.is_some() {
                out.push(Pre::DoFin);
            }
        }
        WordClass::Verb => out.extend(verbal(Pre::VFin)),
    }
    out
}

/// Verb form feature of an analysis.
pub fn form_of(m: &MorphAnalysis) -> Option<&'static str> {
    match (m.tense, m.participle, m.bare) {
        (Some(Tense::Past), _, _) => Some("past"),
        (Some(Tense::Present), _, _) => Some("present"),
        (_, Some(Participle::Past), _) => Some("pastpart"),
        (_, Some(Participle::Present), _) => Some("prespart"),
        (_, _, true) => Some("bare"),
        _ => None,
    }
}

/// Grammar symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    T(Pre),
    Root,
    S,
    Q,
    Imp,
    CueS,
    Np,
    Nom,
    Adjp,
    Pp,
    Cp,
    Byp,
    Xcomp,
    VpFin,
    VpBare,
    VpIng,
    VpEn,
    /// Verb phrases missing their fronted object.
    VpgBare,
    VpgEn,
}

/// How a non-head child attaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attach {
    Head,
    Edge(&'static str),
    /// The child's words are absorbed into the phrase without a node.
    Drop,
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub lhs: Sym,
    pub rhs: Vec<(Sym, Attach)>,
}

impl Rule {
    pub fn head(&self) -> usize {
        self.rhs.iter().position(|(_, a)| *a == Attach::Head).unwrap_or(0)
    }
}

/// Labels the grammar can put on edges.
pub const EDGE_LABELS: &[&str] = &[
    "subject",
    "directobject",
    "indirectobject",
    "xcomp",
    "part",
    "pp",
    "obj",
    "det",
    "mod",
    "aux",
    "conj",
    "wh-focus",
    "by-agent",
];

pub fn is_edge_label(s: &str) -> bool {
    EDGE_LABELS.contains(&s)
}

use Attach::{Drop, Edge, Head};
use Pre::*;
use Sym::*;

fn r(lhs: Sym, rhs: &[(Sym, Attach)]) -> Rule {
    Rule { lhs, rhs: rhs.to_vec() }
}

/// Verb-phrase rules for one verb form.
fn vp_rules(out: &mut Vec<Rule>, vp: Sym, v: Pre) {
    let v = T(v);
    out.push(r(vp, &[(v, Head)]));
    out.push(r(vp, &[(v, Head), (Np, Edge("directobject"))]));
    out.push(r(vp, &[(v, Head), (Np, Edge("indirectobject")), (Np, Edge("directobject"))]));
    out.push(r(vp, &[(v, Head), (T(Part), Edge("part"))]));
    out.push(r(vp, &[(v, Head), (Np, Edge("directobject")), (T(Part), Edge("part"))]));
    out.push(r(vp, &[(v, Head), (T(Part), Edge("part")), (Np, Edge("directobject"))]));
    out.push(r(vp, &[(v, Head), (Xcomp, Edge("xcomp"))]));
    out.push(r(vp, &[(v, Head), (Np, Edge("directobject")), (Xcomp, Edge("xcomp"))]));
    out.push(r(vp, &[(vp, Head), (Pp, Edge("pp"))]));
    out.push(r(vp, &[(vp, Head), (T(Conj), Drop), (vp, Edge("conj"))]));
    out.push(r(vp, &[(vp, Head), (T(Adv), Edge("mod"))]));
    out.push(r(vp, &[(T(Adv), Edge("mod")), (vp, Head)]));
}

/// The full rule set, in a fixed order.
pub fn rules() -> Vec<Rule> {
    let mut g = Vec::new();
    for s in [S, Q, Imp, CueS] {
        g.push(r(Root, &[(s, Head), (T(Punct), Drop)]));
        g.push(r(Root, &[(s, Head)]));
    }
    g.push(r(S, &[(Np, Edge("subject")), (VpFin, Head)]));
    g.push(r(S, &[(Np, Edge("subject")), (T(BeFin), Edge("aux")), (VpIng, Head)]));
    g.push(r(S, &[(Np, Edge("subject")), (T(BeFin), Edge("aux")), (VpEn, Head)]));
    g.push(r(S, &[(Np, Edge("subject")), (T(BeFin), Head), (Adjp, Edge("xcomp"))]));
    for s in [S, Imp] {
        g.push(r(s, &[(T(Adv), Edge("mod")), (T(Comma), Drop), (s, Head)]));
        g.push(r(s, &[(T(Adv), Edge("mod")), (s, Head)]));
    }
    g.push(r(Imp, &[(VpBare, Head)]));
    g.push(r(Q, &[(T(Wh), Edge("wh-focus")), (T(DoFin), Edge("aux")), (Np, Edge("subject")), (VpgBare, Head)]));
    g.push(r(Q, &[(T(Wh), Edge("wh-focus")), (T(BeFin), Edge("aux")), (Np, Edge("subject")), (VpgEn, Head)]));
    g.push(r(CueS, &[(T(Cue), Head), (S, Edge("xcomp"))]));

    vp_rules(&mut g, VpFin, VFin);
    vp_rules(&mut g, VpBare, VBare);
    vp_rules(&mut g, VpIng, VIng);

    g.push(r(VpEn, &[(T(VEn), Head)]));
    g.push(r(VpEn, &[(T(VEn), Head), (Np, Edge("directobject"))]));
    g.push(r(VpEn, &[(T(VEn), Head), (T(Part), Edge("part"))]));
    g.push(r(VpEn, &[(VpEn, Head), (Pp, Edge("pp"))]));
    g.push(r(VpEn, &[(VpEn, Head), (Byp, Edge("by-agent"))]));

    g.push(r(VpgBare, &[(T(VBare), Head)]));
    g.push(r(VpgBare, &[(T(VBare), Head), (Np, Edge("indirectobject"))]));
    g.push(r(VpgBare, &[(T(VBare), Head), (T(Part), Edge("part"))]));
    g.push(r(VpgBare, &[(VpgBare, Head), (Pp, Edge("pp"))]));
    g.push(r(VpgEn, &[(T(VEn), Head)]));
    g.push(r(VpgEn, &[(VpgEn, Head), (Byp, Edge("by-agent"))]));
    g.push(r(VpgEn, &[(VpgEn, Head), (Pp, Edge("pp"))]));

    g.push(r(Xcomp, &[(T(To), Edge("aux")), (VpBare, Head)]));
    g.push(r(Np, &[(T(Name), Head)]));
    g.push(r(Np, &[(T(Pron), Head)]));
    g.push(r(Np, &[(T(Det), Edge("det")), (Nom, Head)]));
    g.push(r(Np, &[(Nom, Head)]));
    g.push(r(Np, &[(VpIng, Head)]));
    g.push(r(Nom, &[(T(N), Head)]));
    g.push(r(Nom, &[(T(Adj), Edge("mod")), (Nom, Head)]));
    g.push(r(Nom, &[(Nom, Head), (Pp, Edge("pp"))]));
    g.push(r(Nom, &[(T(N), Head), (Cp, Edge("xcomp"))]));
    g.push(r(Adjp, &[(T(Adj), Head)]));
    g.push(r(Pp, &[(T(P), Head), (Np, Edge("obj"))]));
    g.push(r(Pp, &[(T(P), Head), (S, Edge("obj"))]));
    g.push(r(Cp, &[(T(That), Drop), (S, Head)]));
    g.push(r(Byp, &[(T(By), Drop), (Np, Head)]));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn every_rule_has_one_head() {
        for rule in rules() {
            assert_eq!(rule.rhs.iter().filter(|(_, a)| *a == Attach::Head).count(), 1, "{:?}", rule);
        }
    }

    #[test]
    fn edge_labels_are_declared() {
        for rule in rules() {
            for (_, a) in &rule.rhs {
                if let Attach::Edge(l) = a {
                    assert!(is_edge_label(l), "{}", l);
                }
            }
        }
    }

    #[test]
    fn unary_rules_are_acyclic() {
        let unary: Vec<(Sym, Sym)> = rules().iter().filter(|r| r.rhs.len() == 1).map(|r| (r.lhs, r.rhs[0].0)).collect();
        for &(start, _) in &unary {
            let mut seen = BTreeSet::new();
            let mut frontier = alloc::vec![start];
            while let Some(s) = frontier.pop() {
                for &(l, c) in &unary {
                    if l == s {
                        assert_ne!(c, start, "unary cycle through {:?}", start);
                        if seen.insert(c) {
                            frontier.push(c);
                        }
                    }
                }
            }
        }
    }
}
