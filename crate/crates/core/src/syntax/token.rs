//! Tokenization and sentence splitting.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// A word or punctuation token with its byte span in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub sentence: usize,
}

impl Token {
    pub fn is_terminator(&self) -> bool {
        matches!(self.text.as_str(), "." | "?" | "!")
    }

    pub fn is_punct(&self) -> bool {
        self.text.len() == 1 && ".?!,;:\"".contains(self.text.as_str())
    }
}

const ABBREVIATIONS: &[&str] = &["mr.", "mrs.", "ms.", "dr.", "st.", "e.g.", "i.e.", "etc."];

/// Split on whitespace and detach punctuation. Apostrophes inside words
/// stay (`here's`); periods stay on known abbreviations.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut sentence = 0;
    let mut i = 0;
    let bytes = text.as_bytes();
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap_or(' ');
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let mut end = i;
        for (off, ch) in text[i..].char_indices() {
            if ch.is_whitespace() {
                break;
            }
            end = i + off + ch.len_utf8();
        }
        let word = &text[start..end];
        split_word(word, start, &mut sentence, &mut out);
        i = end;
    }
    out
}

fn split_word(word: &str, offset: usize, sentence: &mut usize, out: &mut Vec<Token>) {
    if ABBREVIATIONS.contains(&word.to_ascii_lowercase().as_str()) {
        out.push(Token { text: word.to_string(), start: offset, end: offset + word.len(), sentence: *sentence });
        return;
    }
    // Leading punctuation.
    let mut body_start = 0;
    for (idx, ch) in word.char_indices() {
        if "\"(".contains(ch) {
            out.push(Token { text: ch.to_string(), start: offset + idx, end: offset + idx + 1, sentence: *sentence });
            body_start = idx + 1;
        } else {
            break;
        }
    }
    // Trailing punctuation.
    let mut body_end = word.len();
    let mut trailing = Vec::new();
    while body_end > body_start {
        let ch = word[..body_end].chars().next_back().unwrap_or(' ');
        if ".,?!;:\")".contains(ch) {
            body_end -= ch.len_utf8();
            trailing.push((ch, body_end));
        } else {
            break;
        }
    }
    if body_end > body_start {
        let body = &word[body_start..body_end];
        out.push(Token { text: body.to_string(), start: offset + body_start, end: offset + body_end, sentence: *sentence });
    }
    for (ch, at) in trailing.into_iter().rev() {
        out.push(Token { text: ch.to_string(), start: offset + at, end: offset + at + 1, sentence: *sentence });
        if ".?!".contains(ch) {
            *sentence += 1;
        }
    }
}

/// Group tokens by sentence index.
pub fn sentences(tokens: &[Token]) -> Vec<Vec<Token>> {
    let mut out: Vec<Vec<Token>> = Vec::new();
    for t in tokens {
        while out.len() <= t.sentence {
            out.push(Vec::new());
        }
        out[t.sentence].push(t.clone());
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Split text into sentence strings, terminator included.
pub fn split_sentences(text: &str) -> Vec<String> {
    sentences(&tokenize(text))
        .into_iter()
        .map(|s| {
            let (a, b) = (s[0].start, s[s.len() - 1].end);
            text[a..b].to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn simple_sentence() {
        assert_eq!(texts("Tony was watching a tiger."), vec!["Tony", "was", "watching", "a", "tiger", "."]);
    }

    #[test]
    fn empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn comma_detached() {
        assert_eq!(texts("First, open the tank."), vec!["First", ",", "open", "the", "tank", "."]);
    }

    #[test]
    fn apostrophes_stay() {
        assert_eq!(texts("Here's how"), vec!["Here's", "how"]);
    }

    #[test]
    fn spans_ordered_and_exact() {
        let s = "Dr. Hal went out. Then, Mary?";
        let toks = tokenize(s);
        for w in toks.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
        for t in &toks {
            assert_eq!(&s[t.start..t.end], t.text);
        }
        assert_eq!(sentences(&toks).len(), 2);
        assert_eq!(split_sentences(s), vec!["Dr. Hal went out.", "Then, Mary?"]);
    }
}
