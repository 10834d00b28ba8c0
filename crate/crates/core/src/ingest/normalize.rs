use super::translit;

/// Outcome of keyword normalization when nothing survives.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("keyword normalizes to an empty string")]
pub struct EmptyCanonical;

/// Canonical form of a keyword or query: ASCII, lowercase, punctuation
/// replaced by spaces, single-spaced and trimmed.
pub fn normalize_keyword(raw: &str) -> Result<String, EmptyCanonical> {
    let mut ascii = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_ascii() {
            ascii.push(c);
        } else if let Some(rep) = translit::lookup(c) {
            ascii.push_str(rep);
        } else if c.is_whitespace() {
            ascii.push(' ');
        }
    }

    let mut out = String::with_capacity(ascii.len());
    let mut pending_space = false;
    for c in ascii.chars() {
        if c.is_ascii_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c.to_ascii_lowercase());
        } else {
            pending_space = true;
        }
    }
    if out.is_empty() {
        Err(EmptyCanonical)
    } else {
        Ok(out)
    }
}

/// Whitespace tokens of an already-canonical string.
pub fn tokens(canonical: &str) -> impl Iterator<Item = &str> {
    canonical.split(' ').filter(|t| !t.is_empty())
}
