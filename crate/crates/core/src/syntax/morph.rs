//! Morphological analysis over a closed-class table, an irregular-form
//! table and regular suffix rules checked against the lexicon.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lexicon::Lexicon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tense {
    Past,
    Present,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Participle {
    Past,
    Present,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Number {
    Singular,
    Plural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Masculine,
    Feminine,
    Neuter,
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Masculine => "m",
            Gender::Feminine => "f",
            Gender::Neuter => "n",
            Gender::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "m" => Gender::Masculine,
            "f" => Gender::Feminine,
            "n" => Gender::Neuter,
            "unknown" => Gender::Unknown,
            _ => return None,
        })
    }

    /// Unknown agrees with anything.
    pub fn agrees(self, other: Gender) -> bool {
        self == other || self == Gender::Unknown || other == Gender::Unknown
    }
}

/// Word classes the grammar sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WordClass {
    Noun,
    Name,
    Pronoun,
    Wh,
    Det,
    Adj,
    Prep,
    Particle,
    InfTo,
    Conj,
    Comma,
    Punct,
    Adv,
    Cue,
    That,
    /// Forms of auxiliary/copular `be`.
    Be,
    /// Forms of auxiliary `do`.
    Do,
    Verb,
}

impl WordClass {
    /// The part-of-speech tag written in trees.
    pub fn tag(self) -> &'static str {
        match self {
            WordClass::Noun => "n",
            WordClass::Name => "name",
            WordClass::Pronoun => "pron",
            WordClass::Wh => "wh",
            WordClass::Det => "det",
            WordClass::Adj => "adj",
            WordClass::Prep => "p",
            WordClass::Particle => "part",
            WordClass::InfTo => "to",
            WordClass::Conj => "conj",
            WordClass::Comma | WordClass::Punct => "punct",
            WordClass::Adv => "adv",
            WordClass::Cue => "cue",
            WordClass::That => "that",
            WordClass::Be | WordClass::Do | WordClass::Verb => "v",
        }
    }

    /// The lexicon part of speech whose senses apply to this class.
    pub fn sense_pos(self) -> Option<&'static str> {
        Some(match self {
            WordClass::Noun => "n",
            WordClass::Name => "name",
            WordClass::Wh => "interrogpro",
            WordClass::Adj => "adj",
            WordClass::Prep => "prep",
            WordClass::Adv => "adv",
            WordClass::Cue => "cue",
            WordClass::Be | WordClass::Verb => "v",
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MorphAnalysis {
    pub lemma: String,
    pub class: WordClass,
    pub tense: Option<Tense>,
    pub participle: Option<Participle>,
    /// Bare (infinitive/imperative) verb form.
    pub bare: bool,
    pub number: Option<Number>,
    pub person: Option<u8>,
    pub gender: Gender,
    /// Determiners: definite or not.
    pub definite: Option<bool>,
    pub unknown: bool,
}

impl MorphAnalysis {
    pub fn new(lemma: &str, class: WordClass) -> Self {
        MorphAnalysis {
            lemma: lemma.to_string(),
            class,
            tense: None,
            participle: None,
            bare: false,
            number: None,
            person: None,
            gender: Gender::Unknown,
            definite: None,
            unknown: false,
        }
    }

    fn finite(lemma: &str, class: WordClass, tense: Tense) -> Self {
        MorphAnalysis { tense: Some(tense), ..MorphAnalysis::new(lemma, class) }
    }

    fn participle(lemma: &str, class: WordClass, p: Participle) -> Self {
        MorphAnalysis { participle: Some(p), ..MorphAnalysis::new(lemma, class) }
    }

    fn bare(lemma: &str, class: WordClass) -> Self {
        MorphAnalysis { bare: true, ..MorphAnalysis::new(lemma, class) }
    }

    fn with_number(mut self, n: Number) -> Self {
        self.number = Some(n);
        self
    }

    fn pronoun(lemma: &str, person: u8, n: Number, g: Gender) -> Self {
        MorphAnalysis { person: Some(person), number: Some(n), gender: g, ..MorphAnalysis::new(lemma, WordClass::Pronoun) }
    }

    fn det(lemma: &str, definite: bool) -> Self {
        MorphAnalysis { definite: Some(definite), ..MorphAnalysis::new(lemma, WordClass::Det) }
    }
}

/// Gender of a proper name, from a closed table.
pub fn name_gender(lemma: &str) -> Gender {
    match lemma {
        "tony" | "john" | "sam" | "harry" | "lou" | "phil" | "hal" => Gender::Masculine,
        "mary" | "patty" => Gender::Feminine,
        "spot" => Gender::Neuter,
        _ => Gender::Unknown,
    }
}

fn closed_class(w: &str) -> Vec<MorphAnalysis> {
    use Gender::*;
    use Number::*;
    let v = |xs: &[MorphAnalysis]| xs.to_vec();
    match w {
        "a" | "an" => v(&[MorphAnalysis::det("a", false)]),
        "the" => v(&[MorphAnalysis::det("the", true)]),
        "his" | "my" | "your" | "their" | "its" | "this" => v(&[MorphAnalysis::det(w, true)]),
        "her" => v(&[MorphAnalysis::det("her", true), MorphAnalysis::pronoun("she", 3, Singular, Feminine)]),
        "i" | "me" => v(&[MorphAnalysis::pronoun("i", 1, Singular, Unknown)]),
        "we" | "us" => v(&[MorphAnalysis::pronoun("we", 1, Plural, Unknown)]),
        "you" => v(&[MorphAnalysis::pronoun("you", 2, Singular, Unknown)]),
        "he" | "him" => v(&[MorphAnalysis::pronoun("he", 3, Singular, Masculine)]),
        "she" => v(&[MorphAnalysis::pronoun("she", 3, Singular, Feminine)]),
        "it" => v(&[MorphAnalysis::pronoun("it", 3, Singular, Neuter)]),
        "they" | "them" => v(&[MorphAnalysis::pronoun("they", 3, Plural, Unknown)]),
        "what" => v(&[MorphAnalysis::new("what", WordClass::Wh)]),
        "to" => v(&[MorphAnalysis::new("to", WordClass::Prep), MorphAnalysis::new("to", WordClass::InfTo)]),
        "on" | "in" | "into" | "from" | "of" | "before" | "after" | "because" | "until" | "at" | "for" | "with" | "by" => {
            v(&[MorphAnalysis::new(w, WordClass::Prep)])
        }
        "up" | "down" | "out" | "back" | "off" => v(&[MorphAnalysis::new(w, WordClass::Particle)]),
        "and" | "or" => v(&[MorphAnalysis::new(w, WordClass::Conj)]),
        "that" => v(&[MorphAnalysis::new("that", WordClass::That)]),
        "," => v(&[MorphAnalysis::new(",", WordClass::Comma)]),
        "." | "?" | "!" => v(&[MorphAnalysis::new(w, WordClass::Punct)]),
        "am" => v(&[MorphAnalysis::finite("be", WordClass::Be, Tense::Present).with_number(Singular)]),
        "is" => v(&[MorphAnalysis::finite("be", WordClass::Be, Tense::Present).with_number(Singular)]),
        "are" => v(&[MorphAnalysis::finite("be", WordClass::Be, Tense::Present).with_number(Plural)]),
        "was" => v(&[MorphAnalysis::finite("be", WordClass::Be, Tense::Past).with_number(Singular)]),
        "were" => v(&[MorphAnalysis::finite("be", WordClass::Be, Tense::Past).with_number(Plural)]),
        "be" => v(&[MorphAnalysis::bare("be", WordClass::Be)]),
        "been" => v(&[MorphAnalysis::participle("be", WordClass::Be, Participle::Past)]),
        "being" => v(&[MorphAnalysis::participle("be", WordClass::Be, Participle::Present)]),
        "do" => v(&[MorphAnalysis::finite("do", WordClass::Do, Tense::Present)]),
        "does" => v(&[MorphAnalysis::finite("do", WordClass::Do, Tense::Present).with_number(Singular)]),
        "did" => v(&[MorphAnalysis::finite("do", WordClass::Do, Tense::Past)]),
        _ => Vec::new(),
    }
}

/// Irregular verb forms: (form, lemma, past tense?, past participle?).
const IRREGULAR: &[(&str, &str, bool, bool)] = &[
    ("gave", "give", true, false),
    ("given", "give", false, true),
    ("went", "go", true, false),
    ("gone", "go", false, true),
    ("fed", "feed", true, true),
    ("put", "put", true, true),
    ("made", "make", true, true),
    ("had", "have", true, true),
    ("ground", "grind", true, true),
    ("ate", "eat", true, false),
    ("eaten", "eat", false, true),
    ("took", "take", true, false),
    ("taken", "take", false, true),
    ("brought", "bring", true, true),
    ("saw", "see", true, false),
    ("seen", "see", false, true),
];

const IRREGULAR_3SG: &[(&str, &str)] = &[("has", "have"), ("goes", "go"), ("does", "do")];

/// Verb forms produced by generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerbForm {
    Bare,
    Past,
    PastPart,
    /// Third person singular present.
    Present3sg,
    Ing,
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Consonant-vowel-consonant monosyllables double their last letter
/// before a vowel suffix (grab, grabbed).
fn doubles(lemma: &str) -> bool {
    let b = lemma.as_bytes();
    let vowel_groups = b.windows(2).filter(|w| !is_vowel(w[0]) && is_vowel(w[1])).count() + usize::from(b.first().map(|c| is_vowel(*c)).unwrap_or(false));
    b.len() >= 3
        && vowel_groups == 1
        && !is_vowel(b[b.len() - 1])
        && !matches!(b[b.len() - 1], b'w' | b'x' | b'y')
        && is_vowel(b[b.len() - 2])
        && !is_vowel(b[b.len() - 3])
}

fn suffix_vowel(lemma: &str, suffix: &str) -> String {
    if let Some(stem) = lemma.strip_suffix('e') {
        if !lemma.ends_with("ee") {
            return alloc::format!("{}{}", stem, suffix);
        }
    }
    if doubles(lemma) {
        let last = &lemma[lemma.len() - 1..];
        return alloc::format!("{}{}{}", lemma, last, suffix);
    }
    alloc::format!("{}{}", lemma, suffix)
}

fn suffix_s(word: &str) -> String {
    let b = word.as_bytes();
    if word.ends_with('y') && b.len() >= 2 && !is_vowel(b[b.len() - 2]) {
        return alloc::format!("{}ies", &word[..word.len() - 1]);
    }
    if ["s", "sh", "ch", "x", "z", "o"].iter().any(|e| word.ends_with(e)) {
        return alloc::format!("{}es", word);
    }
    alloc::format!("{}s", word)
}

/// Inflected form of a verb lemma, the inverse of `morph_analyze`.
pub fn inflect_verb(lemma: &str, form: VerbForm) -> String {
    match (lemma, form) {
        ("be", VerbForm::Past) => return "was".into(),
        ("be", VerbForm::PastPart) => return "been".into(),
        ("be", VerbForm::Present3sg) => return "is".into(),
        (_, VerbForm::Bare) => return lemma.into(),
        _ => {}
    }
    match form {
        VerbForm::Past | VerbForm::PastPart => {
            let want_past = form == VerbForm::Past;
            if let Some(&(f, ..)) = IRREGULAR.iter().find(|(_, l, past, pp)| *l == lemma && if want_past { *past } else { *pp }) {
                return f.into();
            }
            if lemma.ends_with('e') {
                return alloc::format!("{}d", lemma);
            }
            let b = lemma.as_bytes();
            if lemma.ends_with('y') && b.len() >= 2 && !is_vowel(b[b.len() - 2]) {
                return alloc::format!("{}ied", &lemma[..lemma.len() - 1]);
            }
            suffix_vowel(lemma, "ed")
        }
        VerbForm::Present3sg => match IRREGULAR_3SG.iter().find(|(_, l)| *l == lemma) {
            Some((f, _)) => (*f).into(),
            None => suffix_s(lemma),
        },
        VerbForm::Ing => {
            if let Some(stem) = lemma.strip_suffix("ie") {
                return alloc::format!("{}ying", stem);
            }
            suffix_vowel(lemma, "ing")
        }
        VerbForm::Bare => lemma.into(),
    }
}

/// Present or past form of "be" agreeing with the subject.
pub fn be_form(past: bool, person: u8, plural: bool) -> &'static str {
    match (past, person, plural) {
        (false, 1, false) => "am",
        (false, _, false) if person != 2 => "is",
        (false, ..) => "are",
        (true, _, false) if person != 2 => "was",
        (true, ..) => "were",
    }
}

/// Plural of a noun lemma; multiword lemmas inflect their last word.
pub fn plural_noun(lemma: &str) -> String {
    if lemma.ends_with('s') {
        return lemma.into();
    }
    match lemma.rsplit_once(' ') {
        Some((head, last)) => alloc::format!("{} {}", head, suffix_s(last)),
        None => suffix_s(lemma),
    }
}

/// Candidate lemmas for a suffixed form: plain strip, e-restore, undouble.
fn stems(base: &str) -> Vec<String> {
    let mut out = alloc::vec![base.to_string(), alloc::format!("{}e", base)];
    let b = base.as_bytes();
    if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
        out.push(base[..base.len() - 1].to_string());
    }
    if let Some(s) = base.strip_suffix('i') {
        out.push(alloc::format!("{}y", s));
    }
    out
}

fn has(lex: &Lexicon, lemma: &str, pos: &str) -> bool {
    !lex.lookup(lemma, pos).is_empty()
}

/// All analyses of one (lowercased) token.
pub fn morph_analyze(token: &str, lex: &Lexicon) -> Vec<MorphAnalysis> {
    let w = token.to_lowercase();
    let mut out = closed_class(&w);
    if !out.is_empty() && w != "her" {
        return out;
    }
    // Open-class words, possibly also closed-class (none currently overlap).
    let verb = |lemma: &str| has(lex, lemma, "v");
    for &(form, lemma, past, pp) in IRREGULAR {
        if form == w && verb(lemma) {
            if past {
                out.push(MorphAnalysis::finite(lemma, WordClass::Verb, Tense::Past));
            }
            if pp {
                out.push(MorphAnalysis::participle(lemma, WordClass::Verb, Participle::Past));
            }
        }
    }
    for &(form, lemma) in IRREGULAR_3SG {
        if form == w && verb(lemma) {
            out.push(MorphAnalysis::finite(lemma, WordClass::Verb, Tense::Present).with_number(Number::Singular));
        }
    }
    if verb(&w) {
        out.push(MorphAnalysis::finite(&w, WordClass::Verb, Tense::Present).with_number(Number::Plural));
        out.push(MorphAnalysis::bare(&w, WordClass::Verb));
    }
    if let Some(base) = w.strip_suffix("ed") {
        for s in stems(base) {
            if verb(&s) {
                out.push(MorphAnalysis::finite(&s, WordClass::Verb, Tense::Past));
                out.push(MorphAnalysis::participle(&s, WordClass::Verb, Participle::Past));
                break;
            }
        }
    }
    if let Some(base) = w.strip_suffix("ing") {
        for s in stems(base) {
            if verb(&s) {
                out.push(MorphAnalysis::participle(&s, WordClass::Verb, Participle::Present));
                break;
            }
        }
    }
    let s_stems = |w: &str| -> Vec<String> {
        let mut v = Vec::new();
        if let Some(b) = w.strip_suffix("ies") {
            v.push(alloc::format!("{}y", b));
        }
        if let Some(b) = w.strip_suffix("es") {
            v.push(b.to_string());
        }
        if let Some(b) = w.strip_suffix('s') {
            v.push(b.to_string());
        }
        v
    };
    for s in s_stems(&w) {
        if verb(&s) {
            out.push(MorphAnalysis::finite(&s, WordClass::Verb, Tense::Present).with_number(Number::Singular));
            break;
        }
    }
    if has(lex, &w, "n") {
        out.push(MorphAnalysis::new(&w, WordClass::Noun).with_number(if w.ends_with('s') && w != "gas" { Number::Plural } else { Number::Singular }));
    } else {
        for s in s_stems(&w) {
            if has(lex, &s, "n") {
                out.push(MorphAnalysis::new(&s, WordClass::Noun).with_number(Number::Plural));
                break;
            }
        }
    }
    if has(lex, &w, "name") {
        out.push(MorphAnalysis { gender: name_gender(&w), ..MorphAnalysis::new(&w, WordClass::Name).with_number(Number::Singular) });
    }
    if has(lex, &w, "adj") {
        out.push(MorphAnalysis::new(&w, WordClass::Adj));
    }
    if has(lex, &w, "adv") {
        out.push(MorphAnalysis::new(&w, WordClass::Adv));
    }
    if has(lex, &w, "cue") {
        out.push(MorphAnalysis::new(&w, WordClass::Cue));
    }
    if out.is_empty() {
        out.push(MorphAnalysis { unknown: true, ..MorphAnalysis::new(&w, WordClass::Noun) });
    }
    out.sort();
    out.dedup();
    out
}
