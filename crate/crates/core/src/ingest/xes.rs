//! XES subset reader.
//!
//! Reads `log/trace/event` with the `concept:name`, `time:timestamp` and
//! `lifecycle:transition` attributes. Other event attributes are kept as
//! strings in [`Event::attrs`]. Nested attribute children, `<global>`,
//! `<extension>` and `<classifier>` declarations are skipped. Input may be
//! gzip-compressed; it is detected from the magic bytes.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;
use thiserror::Error;

use super::{parse_timestamp, Event, EventLog, Lifecycle, Trace};

#[derive(Debug, Error)]
pub enum XesError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no <log> element found")]
    NoLog,
    #[error("gzip: {0}")]
    Gzip(io::Error),
    #[error("reading {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// A parsed log plus the per-event problems that were recovered from.
#[derive(Debug, Clone, Default)]
pub struct XesParse {
    pub log: EventLog,
    pub warnings: Vec<String>,
}

pub fn parse_xes_path(path: impl AsRef<Path>) -> Result<XesParse, XesError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| XesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut parsed = parse_xes_bytes(&bytes)?;
    parsed.log.source.name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parsed)
}

pub fn parse_xes<R: Read>(mut input: R) -> Result<XesParse, XesError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|source| XesError::Io {
        path: "<input>".into(),
        source,
    })?;
    parse_xes_bytes(&bytes)
}

pub fn parse_xes_bytes(bytes: &[u8]) -> Result<XesParse, XesError> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut inflated = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut inflated)
            .map_err(XesError::Gzip)?;
        return XesParser::new(&inflated).run();
    }
    XesParser::new(bytes).run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Log,
    Trace,
    Event,
    /// Anything whose children are not interpreted.
    Skip,
}

#[derive(Default)]
struct PendingTrace {
    name: Option<String>,
    events: Vec<Event>,
}

#[derive(Default)]
struct PendingEvent {
    activity: Option<String>,
    lifecycle: Option<String>,
    timestamp: Option<String>,
    attrs: BTreeMap<String, String>,
    line: usize,
}

struct XesParser<'a> {
    bytes: &'a [u8],
    reader: Reader<&'a [u8]>,
    scopes: Vec<Scope>,
    saw_log: bool,
    traces: Vec<PendingTrace>,
    trace: Option<PendingTrace>,
    event: Option<PendingEvent>,
    warnings: Vec<String>,
}

const ATTRIBUTE_TAGS: [&[u8]; 8] = [
    b"string",
    b"date",
    b"int",
    b"float",
    b"boolean",
    b"id",
    b"list",
    b"container",
];

impl<'a> XesParser<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        let mut reader = Reader::from_reader(bytes);
        reader.config_mut().trim_text(true);
        XesParser {
            bytes,
            reader,
            scopes: Vec::new(),
            saw_log: false,
            traces: Vec::new(),
            trace: None,
            event: None,
            warnings: Vec::new(),
        }
    }

    fn line_col(&self, pos: u64) -> (usize, usize) {
        let pos = (pos as usize).min(self.bytes.len());
        let before = &self.bytes[..pos];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = pos - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
        (line, column)
    }

    fn xml_error(&self, pos: u64, message: String) -> XesError {
        let (line, column) = self.line_col(pos);
        XesError::Xml {
            line,
            column,
            message,
        }
    }

    fn run(mut self) -> Result<XesParse, XesError> {
        loop {
            let ev = match self.reader.read_event() {
                Ok(ev) => ev,
                Err(e) => {
                    let pos = self.reader.error_position();
                    return Err(self.xml_error(pos, e.to_string()));
                }
            };
            match ev {
                XmlEvent::Start(tag) => self.open(&tag, false)?,
                XmlEvent::Empty(tag) => self.open(&tag, true)?,
                XmlEvent::End(_) => self.close(),
                XmlEvent::Eof => break,
                _ => {}
            }
        }
        if !self.scopes.is_empty() {
            let pos = self.reader.buffer_position();
            return Err(self.xml_error(pos, "unexpected end of document".into()));
        }
        if !self.saw_log {
            return Err(XesError::NoLog);
        }
        Ok(self.finish())
    }

    fn open(&mut self, tag: &BytesStart<'_>, empty: bool) -> Result<(), XesError> {
        let name = tag.local_name();
        let name = name.as_ref();
        let parent = self.scopes.last().copied();
        let scope = match (parent, name) {
            (None, b"log") => {
                self.saw_log = true;
                Scope::Log
            }
            (None, _) => Scope::Skip,
            (Some(Scope::Log), b"trace") => {
                self.trace = Some(PendingTrace::default());
                Scope::Trace
            }
            (Some(Scope::Trace), b"event") => {
                let pos = self.reader.buffer_position();
                self.event = Some(PendingEvent {
                    line: self.line_col(pos).0,
                    ..PendingEvent::default()
                });
                Scope::Event
            }
            (Some(Scope::Log), b"event") => {
                let line = self.line_col(self.reader.buffer_position()).0;
                self.warnings
                    .push(format!("line {line}: event outside a trace ignored"));
                Scope::Skip
            }
            (Some(Scope::Trace), n) if ATTRIBUTE_TAGS.contains(&n) => {
                let (key, value) = self.attribute(tag)?;
                if key == "concept:name" {
                    if let Some(t) = self.trace.as_mut() {
                        t.name = Some(value);
                    }
                }
                Scope::Skip
            }
            (Some(Scope::Event), n) if ATTRIBUTE_TAGS.contains(&n) => {
                let (key, value) = self.attribute(tag)?;
                if let Some(ev) = self.event.as_mut() {
                    match key.as_str() {
                        "concept:name" => ev.activity = Some(value),
                        "time:timestamp" => ev.timestamp = Some(value),
                        "lifecycle:transition" => ev.lifecycle = Some(value),
                        _ => {
                            ev.attrs.insert(key, value);
                        }
                    }
                }
                Scope::Skip
            }
            _ => Scope::Skip,
        };
        if empty {
            // `<trace/>` or `<event/>` still has to be finalized.
            self.scopes.push(scope);
            self.close();
        } else {
            self.scopes.push(scope);
        }
        Ok(())
    }

    fn attribute(&self, tag: &BytesStart<'_>) -> Result<(String, String), XesError> {
        let mut key = String::new();
        let mut value = String::new();
        for attr in tag.attributes() {
            let attr = attr.map_err(|e| {
                self.xml_error(self.reader.buffer_position(), e.to_string())
            })?;
            let text = attr
                .unescape_value()
                .map_err(|e| self.xml_error(self.reader.buffer_position(), e.to_string()))?;
            match attr.key.as_ref() {
                b"key" => key = text.into_owned(),
                b"value" => value = text.into_owned(),
                _ => {}
            }
        }
        Ok((key, value))
    }

    fn close(&mut self) {
        match self.scopes.pop() {
            Some(Scope::Event) => self.finish_event(),
            Some(Scope::Trace) => {
                if let Some(t) = self.trace.take() {
                    self.traces.push(t);
                }
            }
            _ => {}
        }
    }

    fn finish_event(&mut self) {
        let Some(ev) = self.event.take() else { return };
        let line = ev.line;
        let activity = match ev.activity {
            Some(a) if !a.is_empty() => a,
            _ => {
                self.warnings
                    .push(format!("line {line}: event without concept:name dropped"));
                return;
            }
        };
        let timestamp = match ev.timestamp.as_deref().map(parse_timestamp) {
            Some(Some(ts)) => ts,
            Some(None) => {
                self.warnings.push(format!(
                    "line {line}: event '{activity}' has an unparseable time:timestamp, dropped"
                ));
                return;
            }
            None => {
                self.warnings.push(format!(
                    "line {line}: event '{activity}' has no time:timestamp, dropped"
                ));
                return;
            }
        };
        let lifecycle = Lifecycle::parse(ev.lifecycle.as_deref().unwrap_or(""));
        if let Some(t) = self.trace.as_mut() {
            t.events.push(Event {
                trace_id: String::new(),
                activity,
                lifecycle,
                timestamp,
                attrs: ev.attrs,
            });
        }
    }

    fn finish(mut self) -> XesParse {
        let mut seen = HashSet::new();
        let mut traces = Vec::with_capacity(self.traces.len());
        for (ordinal, pending) in std::mem::take(&mut self.traces).into_iter().enumerate() {
            let mut id = match pending.name {
                Some(n) => n,
                None => {
                    let id = format!("trace-{ordinal}");
                    self.warnings
                        .push(format!("trace #{ordinal} has no concept:name, using '{id}'"));
                    id
                }
            };
            if !seen.insert(id.clone()) {
                let mut k = 2;
                while seen.contains(&format!("{id}#{k}")) {
                    k += 1;
                }
                let renamed = format!("{id}#{k}");
                self.warnings
                    .push(format!("duplicate trace id '{id}' renamed to '{renamed}'"));
                seen.insert(renamed.clone());
                id = renamed;
            }
            traces.push(Trace::new(id, pending.events));
        }
        XesParse {
            log: EventLog::new("<input>", traces),
            warnings: self.warnings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;

    const TWO_TRACES: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>
  <global scope="event"><string key="concept:name" value="__INVALID__"/></global>
  <string key="concept:name" value="fixture"/>
  <trace>
    <string key="concept:name" value="t1"/>
    <event>
      <string key="concept:name" value="A"/>
      <string key="lifecycle:transition" value="START"/>
      <date key="time:timestamp" value="2020-01-01T10:00:00.000+01:00"/>
      <string key="org:resource" value="112"/>
    </event>
    <event>
      <string key="concept:name" value="A"/>
      <string key="lifecycle:transition" value="complete"/>
      <date key="time:timestamp" value="2020-01-01T09:00:05.000Z"/>
    </event>
    <event>
      <string key="concept:name" value="B"/>
      <date key="time:timestamp" value="2020-01-01T09:00:07.500Z"/>
    </event>
  </trace>
  <trace>
    <string key="concept:name" value="t2"/>
    <event>
      <string key="concept:name" value="C"/>
      <string key="lifecycle:transition" value="complete"/>
      <date key="time:timestamp" value="2020-01-02T00:00:03Z"/>
    </event>
    <event>
      <string key="concept:name" value="C"/>
      <string key="lifecycle:transition" value="start"/>
      <date key="time:timestamp" value="2020-01-02T00:00:01Z"/>
    </event>
    <event>
      <string key="concept:name" value="D"/>
      <string key="lifecycle:transition" value="SCHEDULE"/>
      <date key="time:timestamp" value="2020-01-02T00:00:03Z"/>
      <int key="amount" value="5000"/>
    </event>
  </trace>
</log>"#;

    fn ts(s: &str) -> crate::ingest::Timestamp {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn hand_transcribed_fixture() {
        let parsed = parse_xes_bytes(TWO_TRACES.as_bytes()).unwrap();
        assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
        let log = parsed.log;
        assert_eq!(log.traces.len(), 2);
        assert_eq!(log.event_count(), 6);

        let mut resource = BTreeMap::new();
        resource.insert("org:resource".to_string(), "112".to_string());
        let mut amount = BTreeMap::new();
        amount.insert("amount".to_string(), "5000".to_string());
        let expected = vec![
            Trace {
                trace_id: "t1".into(),
                events: vec![
                    Event {
                        attrs: resource,
                        ..Event::new("t1", "A", Lifecycle::Start, ts("2020-01-01T09:00:00Z"))
                    },
                    Event::new("t1", "A", Lifecycle::Complete, ts("2020-01-01T09:00:05Z")),
                    Event::new(
                        "t1",
                        "B",
                        Lifecycle::Other(String::new()),
                        ts("2020-01-01T09:00:07.5Z"),
                    ),
                ],
            },
            Trace {
                trace_id: "t2".into(),
                events: vec![
                    Event::new("t2", "C", Lifecycle::Start, ts("2020-01-02T00:00:01Z")),
                    // Equal timestamps keep log order.
                    Event::new("t2", "C", Lifecycle::Complete, ts("2020-01-02T00:00:03Z")),
                    Event {
                        attrs: amount,
                        ..Event::new(
                            "t2",
                            "D",
                            Lifecycle::Other("SCHEDULE".into()),
                            ts("2020-01-02T00:00:03Z"),
                        )
                    },
                ],
            },
        ];
        assert_eq!(log.traces, expected);
    }

    #[test]
    fn empty_log() {
        let parsed = parse_xes_bytes(b"<log/>").unwrap();
        assert!(parsed.log.traces.is_empty());
        let parsed = parse_xes_bytes(b"<?xml version=\"1.0\"?><log></log>").unwrap();
        assert!(parsed.log.traces.is_empty());
    }

    #[test]
    fn missing_root_is_an_error() {
        assert!(matches!(parse_xes_bytes(b""), Err(XesError::NoLog)));
        assert!(matches!(
            parse_xes_bytes(b"<notalog/>"),
            Err(XesError::NoLog)
        ));
    }

    #[test]
    fn malformed_xml_reports_line() {
        let doc = "<log>\n<trace>\n<event>\n</trace>\n</log>";
        match parse_xes_bytes(doc.as_bytes()) {
            Err(XesError::Xml { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let truncated = "<log>\n<trace>\n";
        assert!(matches!(
            parse_xes_bytes(truncated.as_bytes()),
            Err(XesError::Xml { .. })
        ));
    }

    #[test]
    fn recoverable_problems_become_warnings() {
        let doc = r#"<log>
<trace>
  <event><string key="concept:name" value="A"/></event>
  <event><string key="concept:name" value="B"/><date key="time:timestamp" value="garbage"/></event>
  <event><string key="concept:name" value="C"/><date key="time:timestamp" value="2020-01-01T00:00:00Z"/></event>
</trace>
<trace><string key="concept:name" value="x"/></trace>
<trace><string key="concept:name" value="x"/></trace>
</log>"#;
        let parsed = parse_xes_bytes(doc.as_bytes()).unwrap();
        let log = parsed.log;
        assert_eq!(log.traces.len(), 3);
        assert_eq!(log.traces[0].trace_id, "trace-0");
        assert_eq!(log.traces[0].events.len(), 1);
        assert_eq!(log.traces[0].events[0].activity, "C");
        assert_eq!(log.traces[1].trace_id, "x");
        assert_eq!(log.traces[2].trace_id, "x#2");
        assert_eq!(parsed.warnings.len(), 4, "{:?}", parsed.warnings);
        assert!(parsed.warnings[0].starts_with("line 3"));
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::fast());
        enc.write_all(TWO_TRACES.as_bytes()).unwrap();
        let gz = enc.finish().unwrap();
        let a = parse_xes_bytes(&gz).unwrap();
        let b = parse_xes_bytes(TWO_TRACES.as_bytes()).unwrap();
        assert_eq!(a.log, b.log);
    }
}
