use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// One raw ad-event record.
///
/// `clicks` and `cost` are optional: a record whose click or cost field is
/// missing or unparsable is still a well-formed event, it just cannot be
/// used to observe CPC and is dropped by the relevance filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub keyword: String,
    pub query: String,
    pub url: String,
    pub device: String,
    pub search_type: String,
    pub impressions: u64,
    pub clicks: Option<u64>,
    pub cost: Option<f64>,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the source.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default, Clone)]
pub struct ParseOutcome {
    pub events: Vec<RawEvent>,
    pub rejections: Vec<Rejection>,
}

/// Parse a line-delimited event stream. Malformed lines are rejected with a
/// reason and never abort the stream; only an unreadable source is fatal.
pub fn parse_events<R: BufRead>(source: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    for (idx, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<event stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(ev) => out.events.push(ev),
            Err(reason) => out.rejections.push(Rejection {
                line: idx + 1,
                reason,
            }),
        }
    }
    Ok(out)
}

fn parse_line(line: &str) -> std::result::Result<RawEvent, String> {
    let value: Value = serde_json::from_str(line).map_err(|_| "not a json object".to_string())?;
    let obj = value.as_object().ok_or("not a json object")?;

    let text = |name: &str| -> std::result::Result<String, String> {
        match obj.get(name) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Null) | None => Ok(String::new()),
            Some(_) => Err(format!("bad {name}")),
        }
    };
    let keyword = match obj.get("keyword") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        _ => return Err("missing keyword".into()),
    };

    let impressions = match count_field(obj, "impressions") {
        Field::Value(v) => v,
        Field::Missing | Field::Unparsable => return Err("bad impressions".into()),
        Field::Negative => return Err("negative impressions".into()),
    };
    let clicks = match count_field(obj, "clicks") {
        Field::Value(v) => Some(v),
        Field::Missing | Field::Unparsable => None,
        Field::Negative => return Err("negative clicks".into()),
    };
    let cost = match real_field(obj, "cost") {
        Field::Value(v) => Some(v),
        Field::Missing | Field::Unparsable => None,
        Field::Negative => return Err("negative cost".into()),
    };

    let date = obj
        .get("date")
        .and_then(Value::as_str)
        .and_then(|s| NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok())
        .ok_or("bad date")?;

    Ok(RawEvent {
        keyword,
        query: text("query")?,
        url: text("url")?,
        device: text("device")?,
        search_type: text("search_type")?,
        impressions,
        clicks,
        cost,
        date,
    })
}

enum Field<T> {
    Value(T),
    Missing,
    Unparsable,
    Negative,
}

fn real_field(obj: &Map<String, Value>, name: &str) -> Field<f64> {
    let v = match obj.get(name) {
        None | Some(Value::Null) => return Field::Missing,
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
        Some(_) => None,
    };
    match v {
        Some(x) if !x.is_finite() => Field::Unparsable,
        Some(x) if x < 0.0 => Field::Negative,
        Some(x) => Field::Value(x),
        None => Field::Unparsable,
    }
}

fn count_field(obj: &Map<String, Value>, name: &str) -> Field<u64> {
    match real_field(obj, name) {
        Field::Value(x) if x.fract() == 0.0 && x <= u64::MAX as f64 => Field::Value(x as u64),
        Field::Value(_) => Field::Unparsable,
        Field::Missing => Field::Missing,
        Field::Unparsable => Field::Unparsable,
        Field::Negative => Field::Negative,
    }
}

/// Write events in the same line-delimited format `parse_events` reads.
pub fn write_events<W: Write>(mut sink: W, events: &[RawEvent]) -> std::io::Result<()> {
    for ev in events {
        serde_json::to_writer(&mut sink, ev)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_rejections<W: Write>(mut sink: W, rejections: &[Rejection]) -> std::io::Result<()> {
    for r in rejections {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}
