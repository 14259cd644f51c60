//! Construction traces: staged events, named outputs and witness obligations,
//! serialized as line-delimited JSON.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub stage: usize,
    pub action: String,
    pub payload: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub claim: String,
    pub status: Status,
    pub data: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstructionTrace {
    pub events: Vec<Event>,
    pub outputs: Vec<(String, Value)>,
    pub witnesses: Vec<Witness>,
}

impl ConstructionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append an event; stages must not decrease.
    pub fn event(&mut self, stage: usize, action: &str, payload: Value) {
        debug_assert!(self.events.last().is_none_or(|e| e.stage <= stage), "events out of stage order");
        self.events.push(Event { stage, action: action.to_string(), payload });
    }

    /// Merge events recorded elsewhere, keeping stage order stable.
    pub fn absorb(&mut self, events: impl IntoIterator<Item = Event>) {
        self.events.extend(events);
        self.events.sort_by_key(|e| e.stage);
    }

    pub fn output(&mut self, name: &str, value: Value) {
        self.outputs.push((name.to_string(), value));
    }

    /// Record an obligation and return whether it held.
    pub fn check(&mut self, claim: &str, ok: bool, data: Value) -> bool {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.witnesses.push(Witness { claim: claim.to_string(), status, data });
        ok
    }

    pub fn all_pass(&self) -> bool {
        self.witnesses.iter().all(|w| w.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(|w| w.status == Status::Fail)
    }

    pub fn events_named<'a>(&'a self, action: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
        self.events.iter().filter(move |e| e.action == action)
    }

    pub fn output_named(&self, name: &str) -> Option<&Value> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Lines: events, then one `output` record per output, then witnesses.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.events.len() + self.outputs.len() + self.witnesses.len());
        for e in &self.events {
            out.push(serde_json::to_string(e).expect("event serializes"));
        }
        let last = self.events.last().map_or(0, |e| e.stage);
        for (name, v) in &self.outputs {
            let rec = json!({"stage": last, "action": "output", "payload": {"name": name, "value": v}});
            out.push(rec.to_string());
        }
        for w in &self.witnesses {
            out.push(serde_json::to_string(w).expect("witness serializes"));
        }
        out
    }

    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut t = ConstructionTrace::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Value = serde_json::from_str(line).map_err(|e| Error::Parse(format!("trace line {}: {e}", n + 1)))?;
            if v.get("claim").is_some() {
                t.witnesses.push(serde_json::from_value(v).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?);
                continue;
            }
            let e: Event = serde_json::from_value(v).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
            if e.action == "output" {
                let name = e.payload["name"].as_str().unwrap_or_default().to_string();
                t.outputs.push((name, e.payload["value"].clone()));
            } else {
                t.events.push(e);
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = ConstructionTrace::new();
        t.event(0, "config", json!({"a": 1}));
        t.event(3, "sigma", json!({"s": 3, "sigma": "0101"}));
        t.output("w0", json!([]));
        assert!(!t.check("bound", false, json!({"i": 2})));
        let text = t.to_lines().join("\n");
        let back = ConstructionTrace::parse_lines(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.failures().count(), 1);
        assert!(text.contains(r#""status":"fail""#));
    }
}
