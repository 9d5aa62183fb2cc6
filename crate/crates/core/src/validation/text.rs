//! Rule-based text operations used by hypothesis tests: sentence and clause
//! segmentation, negation removal and quote extraction.

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("text has a single sentence; nothing remains after removing it")]
    SingleSentence,
    #[error("no clause boundary found; nothing remains after removing the first clause")]
    SingleClause,
    #[error("no quoted span found")]
    NoQuote,
}

/// Words whose whole-word occurrences [`remove_negation`] deletes.
pub const NEGATION_WORDS: [&str; 9] = [
    "no", "not", "never", "nobody", "none", "nothing", "neither", "nor", "cannot",
];

const CONJUNCTIONS: [&str; 5] = ["and", "but", "or", "so", "yet"];

const SUBJECT_PRONOUNS: [&str; 11] = [
    "i", "you", "he", "she", "it", "we", "they", "this", "that", "these", "those",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201D}' | '\u{2019}' | ')' | ']')
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Byte ranges of the sentences in `text`, trimmed, empties dropped.
///
/// A sentence ends at a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets) that is followed by whitespace or the end of text.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !is_terminal(chars[i].1) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && is_terminal(chars[j + 1].1) {
            j += 1;
        }
        while j + 1 < chars.len() && is_closer(chars[j + 1].1) {
            j += 1;
        }
        let at_end = j + 1 == chars.len();
        if at_end || chars[j + 1].1.is_whitespace() {
            let end = if at_end { text.len() } else { chars[j + 1].0 };
            push_trimmed(text, start..end, &mut spans);
            start = end;
        }
        i = j + 1;
    }
    push_trimmed(text, start..text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, range: Range<usize>, spans: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        let start = range.start + lead;
        spans.push(start..start + trimmed.len());
    }
}

pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|r| &text[r]).collect()
}

pub fn contains_at_least_two_sentences(text: &str) -> bool {
    sentence_spans(text).len() >= 2
}

pub fn remove_first_sentence(text: &str) -> Result<String, TransformError> {
    let spans = sentence_spans(text);
    if spans.len() < 2 {
        return Err(TransformError::SingleSentence);
    }
    Ok(text[spans[1].start..].trim().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenKind {
    Word,
    Comma,
    Semicolon,
    Other,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    span: Range<usize>,
}

/// Words are runs of alphanumerics with embedded apostrophes; every other
/// non-space character is its own token.
fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                let embedded_apostrophe = is_apostrophe(cj)
                    && chars.get(j + 1).is_some_and(|(_, n)| n.is_alphanumeric());
                if cj.is_alphanumeric() || embedded_apostrophe {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
            tokens.push(Token {
                kind: TokenKind::Word,
                span: pos..end,
            });
            i = j;
        } else {
            let kind = match c {
                ',' => TokenKind::Comma,
                ';' => TokenKind::Semicolon,
                _ => TokenKind::Other,
            };
            tokens.push(Token {
                kind,
                span: pos..pos + c.len_utf8(),
            });
            i += 1;
        }
    }
    tokens
}

fn normalized(word: &str) -> String {
    word.to_lowercase().replace('\u{2019}', "'")
}

fn is_subject(text: &str, token: &Token) -> bool {
    if token.kind != TokenKind::Word {
        return false;
    }
    let word = normalized(&text[token.span.clone()]);
    let stem = word.split('\'').next().unwrap_or_default();
    SUBJECT_PRONOUNS.contains(&stem)
}

/// Byte offset where the second clause starts, if any.
///
/// A boundary is one of:
/// - a coordinating conjunction (and, but, or, so, yet) followed by a subject
///   pronoun or preceded by a comma/semicolon; the clause starts after it;
/// - a semicolon followed by a subject pronoun;
/// - a comma followed by a subject pronoun.
///
/// At least one word must precede the boundary and one must follow it.
fn clause_boundary(text: &str) -> Option<usize> {
    let tokens = tokenize(text);
    let mut words_before = 0;
    for (i, token) in tokens.iter().enumerate() {
        let next = tokens.get(i + 1);
        let next_is_subject = next.is_some_and(|n| is_subject(text, n));
        let has_words_after = tokens[i + 1..].iter().any(|t| t.kind == TokenKind::Word);
        match token.kind {
            TokenKind::Word => {
                let word = normalized(&text[token.span.clone()]);
                if words_before > 0 && CONJUNCTIONS.contains(&word.as_str()) && has_words_after {
                    let after_punct = i > 0
                        && matches!(
                            tokens[i - 1].kind,
                            TokenKind::Comma | TokenKind::Semicolon
                        );
                    if next_is_subject || after_punct {
                        return next.map(|n| n.span.start);
                    }
                }
                words_before += 1;
            }
            TokenKind::Comma | TokenKind::Semicolon => {
                if words_before > 0 && next_is_subject {
                    return next.map(|n| n.span.start);
                }
            }
            TokenKind::Other => {}
        }
    }
    None
}

pub fn contains_at_least_two_clauses(text: &str) -> bool {
    clause_boundary(text).is_some()
}

pub fn remove_first_clause(text: &str) -> Result<String, TransformError> {
    let start = clause_boundary(text).ok_or(TransformError::SingleClause)?;
    let rest = text[start..].trim();
    if rest.is_empty() {
        return Err(TransformError::SingleClause);
    }
    Ok(rest.to_string())
}

fn match_case(template: &str, original: &str) -> String {
    if original.chars().all(|c| !c.is_lowercase()) && original.chars().count() > 1 {
        template.to_uppercase()
    } else if original.starts_with(|c: char| c.is_uppercase()) {
        let mut chars = template.chars();
        chars
            .next()
            .map(|first| first.to_uppercase().chain(chars).collect())
            .unwrap_or_default()
    } else {
        template.to_string()
    }
}

/// What a word becomes once negation is removed, or `None` if unchanged.
fn strip_negation(word: &str) -> Option<String> {
    let lower = normalized(word);
    let replacement = match lower.as_str() {
        "cannot" | "can't" => Some("can"),
        "won't" => Some("will"),
        "shan't" => Some("shall"),
        "ain't" => Some("is"),
        _ => None,
    };
    if let Some(r) = replacement {
        return Some(match_case(r, word));
    }
    if NEGATION_WORDS.contains(&lower.as_str()) {
        return Some(String::new());
    }
    if lower.len() > 3 && lower.ends_with("n't") {
        // "n't" is three chars; the apostrophe may be two bytes wide.
        let cut = word
            .char_indices()
            .rev()
            .nth(2)
            .map(|(p, _)| p)
            .unwrap_or(0);
        return Some(word[..cut].to_string());
    }
    None
}

/// Deletes negation words (and expands negated contractions) from `text`.
///
/// Text without negations is returned unchanged. Otherwise whitespace runs
/// are collapsed and spaces left before punctuation are dropped.
pub fn remove_negation(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    let mut changed = false;
    for token in tokenize(text) {
        if token.kind != TokenKind::Word {
            continue;
        }
        if let Some(replacement) = strip_negation(&text[token.span.clone()]) {
            out.push_str(&text[cursor..token.span.start]);
            out.push_str(&replacement);
            cursor = token.span.end;
            changed = true;
        }
    }
    if !changed {
        return text.to_string();
    }
    out.push_str(&text[cursor..]);
    tidy_spacing(&out)
}

fn tidy_spacing(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut out = String::with_capacity(collapsed.len());
    let mut chars = collapsed.chars().peekable();
    while let Some(c) = chars.next() {
        if c == ' ' && chars.peek().is_some_and(|n| matches!(n, '.' | ',' | '!' | '?' | ';' | ':')) {
            continue;
        }
        out.push(c);
    }
    out
}

fn closing_for(open: char) -> Option<char> {
    match open {
        '"' => Some('"'),
        '\u{201C}' => Some('\u{201D}'),
        '\'' => Some('\''),
        '\u{2018}' => Some('\u{2019}'),
        _ => None,
    }
}

/// Contents of the first quoted span (straight or typographic, single or
/// double quotes).
///
/// Single quotes only open at a word boundary and only close when not
/// followed by a letter, so apostrophes are not taken for quotes.
pub fn extract_quote(text: &str) -> Result<String, TransformError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, open)) in chars.iter().enumerate() {
        let Some(close) = closing_for(open) else {
            continue;
        };
        let single = matches!(open, '\'' | '\u{2018}');
        if single && i > 0 && chars[i - 1].1.is_alphanumeric() {
            continue;
        }
        let content_start = pos + open.len_utf8();
        let closing = chars[i + 1..].iter().enumerate().find(|(k, (_, c))| {
            *c == close
                && (!single
                    || chars
                        .get(i + 1 + k + 1)
                        .is_none_or(|(_, n)| !n.is_alphanumeric()))
        });
        if let Some((_, &(end, _))) = closing {
            let inner = text[content_start..end].trim();
            if !inner.is_empty() {
                return Ok(inner.to_string());
            }
        }
    }
    Err(TransformError::NoQuote)
}
