use unicode_normalization::UnicodeNormalization;

/// Canonical form of an attribute value.
///
/// Full-width ASCII variants and the ideographic space fold to half-width,
/// the result is NFC-composed, whitespace runs collapse to one space and the
/// ends are trimmed. Width folding runs before composition: folding after NFC
/// could expose new composable sequences and break idempotence.
pub fn normalize_value(raw: &str) -> String {
    let folded: String = raw.chars().map(fold_width).collect();
    let composed: String = folded.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn fold_width(c: char) -> char {
    match c {
        '\u{3000}' => ' ',
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        _ => c,
    }
}
