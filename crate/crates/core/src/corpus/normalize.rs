use log::warn;

use crate::error::{Error, Result};

const START_MARKER: &str = "START OF";
const END_MARKER: &str = "END OF";

/// Decode raw bytes as UTF-8, dropping a leading byte-order mark.
pub fn decode_text(raw: &[u8]) -> Result<String> {
    let raw = raw.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(raw);
    match std::str::from_utf8(raw) {
        Ok(s) => Ok(s.to_owned()),
        Err(e) => Err(Error::Encoding {
            offset: e.valid_up_to(),
        }),
    }
}

pub fn normalize_bytes(raw: &[u8]) -> Result<String> {
    decode_text(raw).map(|s| normalize_text(&s))
}

/// Normalize line endings to `\n` and cut the body out of the catalog's
/// `*** START OF` / `*** END OF` boilerplate.
///
/// With both markers present the result is the trimmed content strictly
/// between them. With one marker, everything before (or after) it is kept.
/// Without markers the text only has its line endings normalized.
pub fn normalize_text(raw: &str) -> String {
    let mut text = raw.replace("\r\n", "\n").replace('\r', "\n");
    // Repeat until no marker line remains so the result is a fixed point.
    loop {
        match strip_once(&text) {
            Some(stripped) => text = stripped,
            None => return text,
        }
    }
}

fn strip_once(text: &str) -> Option<String> {
    let start = find_marker_line(text, START_MARKER, 0);
    let end_search_from = start.map_or(0, |(_, line_end)| line_end);
    let end = find_marker_line(text, END_MARKER, end_search_from);

    let (from, to) = match (start, end) {
        (None, None) => return None,
        (Some((_, s_end)), Some((e_start, _))) => (s_end, e_start),
        (Some((_, s_end)), None) => {
            warn!("text has a start marker but no end marker; keeping everything after it");
            (s_end, text.len())
        }
        (None, Some((e_start, _))) => {
            warn!("text has an end marker but no start marker; keeping everything before it");
            (0, e_start)
        }
    };
    Some(text[from..to].trim().to_owned())
}

/// Byte span `(line_start, line_end_after_newline)` of the first marker line
/// at or after `from`.
fn find_marker_line(text: &str, marker: &str, from: usize) -> Option<(usize, usize)> {
    let mut pos = from;
    for line in text[from..].split_inclusive('\n') {
        let line_start = pos;
        pos += line.len();
        if is_marker(line, marker) {
            return Some((line_start, pos));
        }
    }
    None
}

fn is_marker(line: &str, marker: &str) -> bool {
    let Some(rest) = line.trim_start().strip_prefix("***") else {
        return false;
    };
    let rest = rest.trim_start();
    rest.len() >= marker.len()
        && rest.is_char_boundary(marker.len())
        && rest[..marker.len()].eq_ignore_ascii_case(marker)
}
