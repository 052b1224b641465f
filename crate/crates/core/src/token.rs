use serde::{Deserialize, Serialize};

/// Half-open byte range into the text a token was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased surface form.
    pub text: String,
    pub span: Span,
}

/// Splits `text` into lowercase tokens.
///
/// A token is a maximal run of alphanumeric characters; everything else
/// (whitespace, punctuation, apostrophes, symbols) separates tokens. Spans
/// index the original string, so `span.slice(text).to_lowercase() == token.text`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        match (ch.is_alphanumeric(), start) {
            (true, None) => start = Some(idx),
            (false, Some(s)) => {
                tokens.push(make_token(text, s, idx));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(make_token(text, s, text.len()));
    }
    tokens
}

fn make_token(text: &str, start: usize, end: usize) -> Token {
    Token {
        text: text[start..end].to_lowercase(),
        span: Span { start, end },
    }
}

/// Lowercase form of a single word, or `None` if it does not tokenize to
/// exactly one token.
pub fn normalize_word(word: &str) -> Option<String> {
    let mut tokens = tokenize(word);
    if tokens.len() == 1 {
        tokens.pop().map(|t| t.text)
    } else {
        None
    }
}
