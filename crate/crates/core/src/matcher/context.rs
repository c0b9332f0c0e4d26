use crate::error::{Error, Result};

/// Context around a match given in char offsets: `window / 2` chars before,
/// the match itself, and `window - window / 2` chars after, clipped at the
/// body boundaries.
pub fn extract_context(
    body: &str,
    match_start: usize,
    match_len: usize,
    window: usize,
) -> Result<String> {
    let end = match_start.checked_add(match_len).ok_or(Error::Range {
        start: match_start,
        end: usize::MAX,
        len: body.chars().count(),
    })?;
    let mut start_byte = None;
    let mut end_byte = None;
    let mut count = 0usize;
    for (i, (b, _)) in body.char_indices().enumerate() {
        if i == match_start {
            start_byte = Some(b);
        }
        if i == end {
            end_byte = Some(b);
            break;
        }
        count = i + 1;
    }
    if end_byte.is_none() && end == count {
        end_byte = Some(body.len());
        if match_start == count {
            start_byte = Some(body.len());
        }
    }
    match (start_byte, end_byte) {
        (Some(s), Some(e)) => Ok(context_bytes(body, s, e, window).to_owned()),
        _ => Err(Error::Range {
            start: match_start,
            end,
            len: body.chars().count(),
        }),
    }
}

/// Same as [`extract_context`] but with byte offsets that already sit on
/// char boundaries.
pub(crate) fn context_bytes(body: &str, start: usize, end: usize, window: usize) -> &str {
    let before = window / 2;
    let after = window - before;
    let from = if before == 0 {
        start
    } else {
        body[..start]
            .char_indices()
            .rev()
            .nth(before - 1)
            .map_or(0, |(i, _)| i)
    };
    let to = body[end..]
        .char_indices()
        .nth(after)
        .map_or(body.len(), |(i, _)| end + i);
    &body[from..to]
}
