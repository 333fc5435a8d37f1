use alloc::vec::Vec;

use super::tokenize::is_leading_punct;
use super::{Abbreviations, Span};

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c == '¿' || c == '¡' || c.is_ascii_digit()
}

/// Single uppercase letter followed by a period, e.g. the `J.` of `J. Pérez`.
fn is_initial(word: &[char]) -> bool {
    word.len() == 2 && word[0].is_uppercase() && word[1] == '.'
}

/// Splits normalized text into sentence spans.
///
/// A boundary follows a run of terminators (`.`, `!`, `?`, `…`) when the run
/// is followed by whitespace and then an uppercase letter, `¿`, `¡`, a digit
/// or the end of the text. A lone `.` closing a protected abbreviation or an
/// initial is not a boundary. Whitespace containing a blank line always is.
/// Returned spans are trimmed of surrounding whitespace.
pub fn split_sentences(text: &str, abbreviations: &Abbreviations) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    split_chars(&chars, abbreviations)
}

pub(crate) fn split_chars(chars: &[char], abbreviations: &Abbreviations) -> Vec<Span> {
    let n = chars.len();
    let mut spans = Vec::new();
    let mut seg_start = 0;
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if is_terminator(c) {
            let mut last = i;
            while last + 1 < n && is_terminator(chars[last + 1]) {
                last += 1;
            }
            let after = last + 1;
            if after < n && chars[after].is_whitespace() {
                let mut next = after;
                while next < n && chars[next].is_whitespace() {
                    next += 1;
                }
                let starts_new = next == n || opens_sentence(chars[next]);
                let protected = last == i && c == '.' && is_protected(chars, last, abbreviations);
                if starts_new && !protected {
                    push_trimmed(chars, seg_start, after, &mut spans);
                    seg_start = after;
                }
            }
            i = after;
            continue;
        }
        if c == '\n' {
            let mut next = i;
            let mut newlines = 0;
            while next < n && chars[next].is_whitespace() {
                if chars[next] == '\n' {
                    newlines += 1;
                }
                next += 1;
            }
            if newlines >= 2 {
                push_trimmed(chars, seg_start, i, &mut spans);
                seg_start = next;
            }
            i = next;
            continue;
        }
        i += 1;
    }
    push_trimmed(chars, seg_start, n, &mut spans);
    spans
}

/// Whether the period at `dot` closes a protected abbreviation or an initial.
fn is_protected(chars: &[char], dot: usize, abbreviations: &Abbreviations) -> bool {
    let mut start = dot;
    while start > 0 && !chars[start - 1].is_whitespace() {
        start -= 1;
    }
    while start < dot && is_leading_punct(chars[start]) {
        start += 1;
    }
    let word = &chars[start..=dot];
    if is_initial(word) {
        return true;
    }
    let word: alloc::string::String = word.iter().collect();
    abbreviations.contains(&word)
}

fn push_trimmed(chars: &[char], start: usize, end: usize, spans: &mut Vec<Span>) {
    let mut s = start;
    let mut e = end;
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    if s < e {
        spans.push(Span::new(s, e));
    }
}
