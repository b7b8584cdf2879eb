use crate::prompt::{END_MARKER, START_MARKER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractWarning {
    MissingDelimiters,
}

impl std::fmt::Display for ExtractWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtractWarning::MissingDelimiters => {
                write!(f, "MissingDelimiters: response lacks a {START_MARKER}...{END_MARKER} pair")
            }
        }
    }
}

/// Text between the first `<START>` and the first `<END>` after it. Without
/// such a pair the whole input comes back with a warning.
pub fn extract_delimited(raw: &str) -> (String, Option<ExtractWarning>) {
    if let Some(start) = raw.find(START_MARKER) {
        let body = &raw[start + START_MARKER.len()..];
        if let Some(end) = body.find(END_MARKER) {
            return (body[..end].to_string(), None);
        }
    }
    (raw.to_string(), Some(ExtractWarning::MissingDelimiters))
}
