use alloc::string::String;
use alloc::vec::Vec;

use super::{Abbreviations, Span, Token};

pub(crate) fn is_leading_punct(c: char) -> bool {
    matches!(c, '¿' | '¡' | '(' | '[' | '{' | '«' | '"' | '\'')
}

pub(crate) fn is_trailing_punct(c: char) -> bool {
    matches!(
        c,
        '?' | '!' | ')' | ']' | '}' | '»' | '"' | '\'' | ',' | ';' | ':' | '.' | '…'
    )
}

/// Tokenizes one sentence. Offsets in the result are `base_offset` plus the
/// character offset inside `sentence_text`.
///
/// Whitespace separates chunks; leading and trailing punctuation is peeled
/// off each chunk one character at a time. A final `.` stays attached when
/// the chunk is a protected abbreviation. Interior characters are never
/// split, which keeps `3,5`, `3.50`, `EE.UU.`, hyphenated words and clitics
/// whole.
pub fn tokenize(sentence_text: &str, base_offset: usize, abbreviations: &Abbreviations) -> Vec<Token> {
    let chars: Vec<char> = sentence_text.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let push = |start: usize, end: usize, out: &mut Vec<Token>| {
        let index = out.len();
        out.push(Token {
            span: Span::new(base_offset + start, base_offset + end),
            surface: chars[start..end].iter().collect(),
            index,
        });
    };

    let n = chars.len();
    let mut i = 0;
    while i < n {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < n && !chars[i].is_whitespace() {
            i += 1;
        }
        let chunk_end = i;

        let mut lead = chunk_start;
        while lead < chunk_end && is_leading_punct(chars[lead]) {
            push(lead, lead + 1, &mut out);
            lead += 1;
        }

        let mut end = chunk_end;
        let mut trailing = Vec::new();
        while end > lead && is_trailing_punct(chars[end - 1]) {
            if chars[end - 1] == '.' {
                let core: String = chars[lead..end].iter().collect();
                if abbreviations.contains(&core) {
                    break;
                }
            }
            trailing.push(end - 1);
            end -= 1;
        }

        if lead < end {
            push(lead, end, &mut out);
        }
        for &p in trailing.iter().rev() {
            push(p, p + 1, &mut out);
        }
    }
    out
}
