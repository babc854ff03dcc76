//! Timeline diagrams of histories, optionally with witness points or
//! overlap intervals.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{History, OpId, Operation};
use crate::verdict::Witness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Ascii,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Show {
    Spans,
    Points,
    Intervals,
}

impl Style {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(Style::Ascii),
            "svg" => Ok(Style::Svg),
            _ => Err(Error::UnknownName(s.into())),
        }
    }
}

impl Show {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spans" => Ok(Show::Spans),
            "points" => Ok(Show::Points),
            "intervals" => Ok(Show::Intervals),
            _ => Err(Error::UnknownName(s.into())),
        }
    }
}

/// Concrete times for witness points: each point is put at the earliest
/// time allowed by its operations' invocations, half a tick after the
/// previous point when the operations' responses leave room.
/// Marks are `(op, time, label)`.
pub fn witness_marks(h: &History, w: &Witness) -> Result<Vec<(OpId, f64, String)>> {
    let mut marks = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let mut place = |ops: &[&Operation]| -> f64 {
        let inv = ops.iter().map(|o| o.invocation_time as f64).fold(f64::NEG_INFINITY, f64::max);
        let resp = ops
            .iter()
            .filter_map(|o| o.response_time)
            .map(|t| t as f64)
            .fold(f64::INFINITY, f64::min);
        let next = inv.max(last + 0.5);
        last = if next <= resp { next } else { (last + resp) / 2.0 };
        last
    };
    match w {
        Witness::Order(order) => {
            for (k, id) in order.iter().enumerate() {
                let o = h.op(*id)?;
                marks.push((*id, place(&[o]), format!("{}", k + 1)));
            }
        }
        Witness::Steps(steps) => {
            for s in steps {
                let o = h.op(s.op)?;
                marks.push((s.op, place(&[o]), s.to_string()));
            }
        }
        Witness::Sets(sets) => {
            for (k, set) in sets.iter().enumerate() {
                let ops: Vec<&Operation> = set.iter().map(|id| h.op(*id)).collect::<Result<_>>()?;
                let t = place(&ops);
                for id in set {
                    marks.push((*id, t, format!("{}", k + 1)));
                }
            }
        }
        Witness::Run(points) => {
            for p in points {
                let t = match (p.after_time, p.before_time) {
                    (Some(a), Some(b)) => (a + b) as f64 / 2.0,
                    (Some(a), None) => a as f64 + 0.5,
                    (None, Some(b)) => b as f64 - 0.5,
                    (None, None) => 0.0,
                };
                for (id, _) in &p.responses {
                    marks.push((*id, t, p.action.clone().unwrap_or_default()));
                }
            }
        }
    }
    Ok(marks)
}

/// Maximal windows during which at least two operations are active.
pub fn overlap_intervals(h: &History) -> Vec<(i64, i64)> {
    let mut edges: Vec<(i64, i32)> = Vec::new();
    for o in h.operations() {
        let Some(r) = o.response_time else { continue };
        edges.push((o.invocation_time, 1));
        edges.push((r, -1));
    }
    // closed spans: at equal times invocations count before responses
    edges.sort_by_key(|(t, d)| (*t, -d));
    let mut out = Vec::new();
    let mut active = 0;
    let mut start = None;
    for (t, d) in edges {
        active += d;
        match (active >= 2, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                if t > s {
                    out.push((s, t));
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn label(o: &Operation) -> String {
    let ret = o.ret.as_ref().map_or("…".to_string(), |v| v.to_string());
    format!("{} {} {}({})={}", o.op_id, o.client, o.op_name, o.arg, ret)
}

pub fn render(h: &History, witness: Option<&Witness>, style: Style, show: Show) -> Result<String> {
    let marks = match (show, witness) {
        (Show::Points, Some(w)) => witness_marks(h, w)?,
        _ => Vec::new(),
    };
    let intervals = if show == Show::Intervals { overlap_intervals(h) } else { Vec::new() };
    Ok(match style {
        Style::Ascii => ascii(h, &marks, &intervals),
        Style::Svg => svg(h, &marks, &intervals),
    })
}

fn bounds(h: &History) -> (i64, i64) {
    let t0 = h.operations().iter().map(|o| o.invocation_time).min().unwrap_or(0);
    let t1 = h.max_time().unwrap_or(0).max(t0);
    (t0, t1 + 1)
}

fn ascii(h: &History, marks: &[(OpId, f64, String)], intervals: &[(i64, i64)]) -> String {
    if h.is_empty() {
        return String::new();
    }
    let (t0, t1) = bounds(h);
    let col = |t: f64| (((t - t0 as f64) * 2.0).round() as usize).min(((t1 - t0) * 2) as usize);
    let width = col(t1 as f64) + 1;
    let labels: Vec<String> = h.operations().iter().map(label).collect();
    let pad = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    let mut axis = vec![' '; width];
    let mut t = t0;
    while t <= t1 {
        let c = col(t as f64);
        let text = t.to_string();
        if c == 0 || axis[c - 1] == ' ' {
            if axis.len() < c + text.len() {
                axis.resize(c + text.len(), ' ');
            }
            for (k, ch) in text.chars().enumerate() {
                axis[c + k] = ch;
            }
        }
        t += ((t1 - t0) / 8).max(1);
    }
    let _ = writeln!(out, "{:pad$}  {}", "", axis.iter().collect::<String>());
    let by_op: BTreeMap<OpId, Vec<f64>> = marks.iter().fold(BTreeMap::new(), |mut m, (id, t, _)| {
        m.entry(*id).or_insert_with(Vec::new).push(*t);
        m
    });
    for (o, l) in h.operations().iter().zip(&labels) {
        let mut row = vec![' '; width];
        let a = col(o.invocation_time as f64);
        let b = o.response_time.map_or(width - 1, |r| col(r as f64));
        for c in row.iter_mut().take(b + 1).skip(a) {
            *c = '-';
        }
        row[a] = '[';
        if o.response_time.is_some() {
            row[b] = ']';
        } else {
            row[b] = '>';
        }
        for t in by_op.get(&o.op_id).into_iter().flatten() {
            row[col(*t)] = '*';
        }
        let _ = writeln!(out, "{l:pad$}  {}", row.iter().collect::<String>().trim_end());
    }
    if !intervals.is_empty() {
        let mut row = vec![' '; width];
        for (s, e) in intervals {
            for c in row.iter_mut().take(col(*e as f64) + 1).skip(col(*s as f64)) {
                *c = '=';
            }
        }
        let _ = writeln!(out, "{:pad$}  {}", "overlap", row.iter().collect::<String>().trim_end());
    }
    out
}

const X0: f64 = 220.0;
const SCALE: f64 = 24.0;
const ROW: f64 = 24.0;

fn svg(h: &History, marks: &[(OpId, f64, String)], intervals: &[(i64, i64)]) -> String {
    let (t0, t1) = bounds(h);
    let x = |t: f64| X0 + (t - t0 as f64) * SCALE;
    let width = x(t1 as f64) + 20.0;
    let height = ROW * (h.len() as f64 + 2.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="12">"#
    );
    for (s, e) in intervals {
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="0" width="{}" height="{height}" fill="#f4d03f" fill-opacity="0.35"/>"##,
            x(*s as f64),
            x(*e as f64) - x(*s as f64)
        );
    }
    let row_of: BTreeMap<OpId, usize> =
        h.operations().iter().enumerate().map(|(i, o)| (o.op_id, i)).collect();
    for (i, o) in h.operations().iter().enumerate() {
        let y = ROW * (i as f64 + 1.0);
        let a = x(o.invocation_time as f64);
        let b = x(o.response_time.unwrap_or(t1) as f64);
        let _ = writeln!(out, r#"<text x="4" y="{}">{}</text>"#, y + 4.0, escape(&label(o)));
        let dash = if o.response_time.is_some() { "" } else { r#" stroke-dasharray="4 3""# };
        let _ = writeln!(out, r#"<line x1="{a}" y1="{y}" x2="{b}" y2="{y}" stroke="black" stroke-width="2"{dash}/>"#);
        let _ = writeln!(out, r#"<line x1="{a}" y1="{}" x2="{a}" y2="{}" stroke="black"/>"#, y - 5.0, y + 5.0);
        if o.response_time.is_some() {
            let _ = writeln!(out, r#"<line x1="{b}" y1="{}" x2="{b}" y2="{}" stroke="black"/>"#, y - 5.0, y + 5.0);
        }
    }
    for (id, t, l) in marks {
        let y = ROW * (row_of[id] as f64 + 1.0);
        let _ = writeln!(out, r##"<circle cx="{}" cy="{y}" r="4" fill="#c0392b"/>"##, x(*t));
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="9">{}</text>"#, x(*t) - 3.0, y - 7.0, escape(l));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryBuilder;
    use crate::value::Value;

    fn three() -> History {
        HistoryBuilder::new("x")
            .op("write", 1, "ok", 0, 4)
            .op("read", Value::Nil, 1, 2, 6)
            .op("write", 2, "ok", 7, 9)
            .build()
            .unwrap()
    }

    #[test]
    fn ascii_points_mark_each_op_once() {
        let w = Witness::Order(vec![OpId(0), OpId(1), OpId(2)]);
        let s = render(&three(), Some(&w), Style::Ascii, Show::Points).unwrap();
        assert_eq!(s.matches('*').count(), 3);
        assert_eq!(s.lines().count(), 4);
    }

    #[test]
    fn overlap_windows() {
        assert_eq!(overlap_intervals(&three()), vec![(2, 4)]);
        let s = render(&three(), None, Style::Svg, Show::Intervals).unwrap();
        assert_eq!(s.matches("fill-opacity").count(), 1);
    }

    #[test]
    fn empty_and_deterministic() {
        assert_eq!(render(&History::empty(), None, Style::Ascii, Show::Spans).unwrap(), "");
        let a = render(&three(), None, Style::Svg, Show::Spans).unwrap();
        assert_eq!(a, render(&three(), None, Style::Svg, Show::Spans).unwrap());
    }
}
