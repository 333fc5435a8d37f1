use alloc::string::String;
use unicode_normalization::UnicodeNormalization;

/// Canonical composition (NFC) plus newline folding: `\r\n` and lone `\r`
/// become `\n`. Nothing else is touched.
pub fn normalize_text(raw: &str) -> String {
    let mut folded = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\r' {
            if chars.peek() == Some(&'\n') {
                chars.next();
            }
            folded.push('\n');
        } else {
            folded.push(c);
        }
    }
    folded.nfc().collect()
}
