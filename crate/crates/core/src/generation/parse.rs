use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no list items found in completion")]
pub struct ParseError;

/// Returns the text after a leading enumeration marker (`1.`, `12)`, `-`,
/// `*`, `•`), or `None` if the line does not start with one.
fn strip_marker(line: &str) -> Option<&str> {
    let line = line.trim_start();
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    let rest = if digits > 0 {
        let after = &line[digits..];
        after.strip_prefix('.').or_else(|| after.strip_prefix(')'))?
    } else {
        let mut chars = line.chars();
        match chars.next() {
            Some('-' | '*' | '\u{2022}') => chars.as_str(),
            _ => return None,
        }
    };
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest.trim())
    } else {
        None
    }
}

fn strip_quotes(item: &str) -> &str {
    let item = item.trim();
    for (open, close) in [('"', '"'), ('\u{201C}', '\u{201D}'), ('\'', '\'')] {
        if let Some(inner) = item
            .strip_prefix(open)
            .and_then(|rest| rest.strip_suffix(close))
        {
            if !inner.contains(open) && !inner.contains(close) || open == '\'' {
                return inner.trim();
            }
        }
    }
    item
}

/// Splits a completion into list items.
///
/// An item starts at a line-initial enumeration marker and continues over
/// wrapped lines until a blank line or the next marker. Text outside items
/// (preambles, closing remarks) is dropped. Surrounding quotes are stripped
/// and empty items discarded.
pub fn parse_numbered_list(raw: &str) -> Result<Vec<String>, ParseError> {
    let mut items: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in raw.lines() {
        if let Some(rest) = strip_marker(line) {
            items.extend(current.take());
            current = Some(rest.to_string());
        } else if line.trim().is_empty() {
            items.extend(current.take());
        } else if let Some(item) = current.as_mut() {
            item.push(' ');
            item.push_str(line.trim());
        }
    }
    items.extend(current);
    let items: Vec<String> = items
        .iter()
        .map(|i| strip_quotes(i).to_string())
        .filter(|i| !i.is_empty())
        .collect();
    if items.is_empty() {
        Err(ParseError)
    } else {
        Ok(items)
    }
}
