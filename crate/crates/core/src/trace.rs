//! Line-delimited JSON trace files: one [`EventRecord`] per line, and a
//! sibling format with one verdict record per line.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::history::{build_history, EventRecord, History};
use crate::verdict::VerdictRecord;

/// Serialize events, one JSON object per line, each line `\n`-terminated.
pub fn write_events<W: Write>(mut out: W, events: &[EventRecord]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_trace_string(h: &History) -> String {
    let mut buf = Vec::new();
    write_events(&mut buf, h.events()).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Parse raw event lines. Blank lines are skipped.
pub fn read_events<R: BufRead>(input: R) -> Result<Vec<EventRecord>> {
    let mut events = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: EventRecord = serde_json::from_str(&line)
            .map_err(|err| Error::Parse { line: n + 1, message: err.to_string() })?;
        events.push(e);
    }
    Ok(events)
}

pub fn parse_trace(text: &str) -> Result<History> {
    build_history(read_events(text.as_bytes())?)
}

pub fn load_trace(path: &Path) -> Result<History> {
    parse_trace(&fs::read_to_string(path)?)
}

pub fn save_trace(path: &Path, h: &History) -> Result<()> {
    fs::write(path, to_trace_string(h))?;
    Ok(())
}

pub fn write_verdicts<W: Write>(mut out: W, records: &[VerdictRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_verdicts<R: BufRead>(input: R) -> Result<Vec<VerdictRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|err| Error::Parse { line: n + 1, message: err.to_string() })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryBuilder;
    use crate::value::Value;

    #[test]
    fn line_format() {
        let h = HistoryBuilder::new("x").op("write", 5, Value::ok(), 1, 3).build().unwrap();
        let text = to_trace_string(&h);
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"event_id":0,"kind":"invocation","op_id":0,"client":0,"object":"x","op_name":"write","payload":5,"time":1}"#
        );
        assert_eq!(parse_trace(&text).unwrap(), h);
    }

    #[test]
    fn truncated_line_is_a_parse_error() {
        let h = HistoryBuilder::new("x").op("read", (), 0, 1, 3).build().unwrap();
        let text = to_trace_string(&h);
        let cut = &text[..text.len() - 10];
        assert!(matches!(parse_trace(cut), Err(Error::Parse { line: 2, .. })));
    }
}
