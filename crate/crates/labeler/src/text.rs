//! Sentence splitting, word tokens and token-sequence phrase search.

/// Tokens ending in a period that do not end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "dr.", "drs.", "mr.", "mrs.", "ms.", "a.p.", "p.a.", "e.g.", "i.e.", "vs.", "approx.", "cf.", "etc.",
];

/// A sentence with byte offsets into the text it was cut from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn run_before(text: &str, end: usize) -> &str {
    let start = text[..end]
        .char_indices()
        .rev()
        .find(|&(_, c)| c.is_whitespace() || c == '(' || c == '"')
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    &text[start..end]
}

fn is_boundary(text: &str, i: usize, c: char) -> bool {
    let rest = &text[i + c.len_utf8()..];
    let next = rest.chars().next();
    if !matches!(next, None | Some(' ' | '\t' | '\n' | '\r')) {
        return false;
    }
    if c == '.' {
        let word = run_before(text, i + 1).to_lowercase();
        if ABBREVIATIONS.contains(&word.as_str()) {
            return false;
        }
    }
    true
}

fn blank_line_at(text: &str, i: usize) -> Option<usize> {
    let rest = &text[i..];
    let mut chars = rest.char_indices();
    if !matches!(chars.next(), Some((_, '\n'))) {
        return None;
    }
    for (j, c) in chars {
        match c {
            '\n' => return Some(i + j + 1),
            ' ' | '\t' | '\r' => {}
            _ => return None,
        }
    }
    None
}

/// Splits on `.`, `!` or `?` followed by whitespace, except after a listed
/// abbreviation, and on blank lines. Offsets are bytes into `text`.
pub fn tokenize_sentences(text: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut start = 0;
    let push = |s: usize, e: usize, out: &mut Vec<Sentence>| {
        let piece = &text[s..e];
        let lead = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            out.push(Sentence {
                text: trimmed.to_string(),
                start: s + lead,
                end: s + lead + trimmed.len(),
            });
        }
    };
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if matches!(c, '.' | '!' | '?') && is_boundary(text, i, c) {
            push(start, i + 1, &mut out);
            start = i + 1;
        } else if let Some(after) = blank_line_at(text, i) {
            push(start, i, &mut out);
            start = after;
            while iter.peek().is_some_and(|&(j, _)| j < after) {
                iter.next();
            }
        }
    }
    push(start, text.len(), &mut out);
    out
}

/// A lowercase word or punctuation token with byte offsets into its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub norm: String,
    pub start: usize,
    pub end: usize,
}

/// Alphanumeric runs become word tokens; `-`, `/` and `'` only separate words;
/// any other punctuation mark is a token of its own.
pub fn word_tokens(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            word.get_or_insert(i);
            continue;
        }
        if let Some(s) = word.take() {
            out.push(Token {
                norm: text[s..i].to_lowercase(),
                start: s,
                end: i,
            });
        }
        if !(c.is_whitespace() || matches!(c, '-' | '/' | '\'')) {
            out.push(Token {
                norm: c.to_lowercase().collect(),
                start: i,
                end: i + c.len_utf8(),
            });
        }
    }
    if let Some(s) = word {
        out.push(Token {
            norm: text[s..].to_lowercase(),
            start: s,
            end: text.len(),
        });
    }
    out
}

/// The normalized token sequence of a phrase.
pub fn phrase_tokens(phrase: &str) -> Vec<String> {
    word_tokens(phrase).into_iter().map(|t| t.norm).collect()
}

/// Token index ranges `[start, end)` where `phrase` occurs in `tokens`.
pub fn find_phrase(tokens: &[Token], phrase: &[String]) -> Vec<(usize, usize)> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return Vec::new();
    }
    (0..=tokens.len() - phrase.len())
        .filter(|&i| tokens[i..i + phrase.len()].iter().zip(phrase).all(|(t, p)| &t.norm == p))
        .map(|i| (i, i + phrase.len()))
        .collect()
}

pub fn find_any(tokens: &[Token], phrases: &[Vec<String>]) -> Vec<(usize, usize)> {
    let mut hits: Vec<(usize, usize)> = phrases.iter().flat_map(|p| find_phrase(tokens, p)).collect();
    hits.sort_unstable();
    hits.dedup();
    hits
}
