use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::transport::{Envelope, MessageKind};
use crate::data::PartyDataset;
use crate::error::Result;
use crate::fed_hfl::ClientAudit;
use crate::fed_vfl::SplitLookupTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    RawFeature,
    Label,
    UnmaskedSum,
    PassiveSecret,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub position: usize,
    pub sender: String,
    pub recipient: String,
    pub kind: MessageKind,
    pub finding: FindingKind,
    pub detail: String,
}

/// What must never appear in a transcript. Floats are matched by bit
/// pattern; `±0.0` is never a target.
#[derive(Clone, Debug, Default)]
pub struct ScanTargets {
    pub raw_values: BTreeSet<u64>,
    pub labels: Vec<Vec<u8>>,
    /// Per sender: what it must never send in the clear.
    pub secrets: Vec<Secrets>,
    /// `(recipient, values)`: values that must not reach that recipient.
    pub withheld: Vec<(String, BTreeSet<u64>)>,
    /// Message kinds allowed to carry raw values (per-feature ranges used
    /// to agree on bins, and the boundaries derived from them). Their
    /// floats are not matched against any target and count as disclosed
    /// in every other message.
    pub raw_exempt: Vec<MessageKind>,
}

/// One party's unmasked contributions: encodings (matched against strings
/// and integers) and real-valued sums.
#[derive(Clone, Debug, Default)]
pub struct Secrets {
    pub sender: String,
    pub tokens: BTreeSet<String>,
    pub values: BTreeSet<u64>,
}

fn bits(v: f64) -> Option<u64> {
    (v != 0.0 && v.is_finite()).then(|| v.to_bits())
}

impl ScanTargets {
    pub fn add_dataset(&mut self, d: &PartyDataset) {
        for row in d.features.rows() {
            self.raw_values.extend(row.iter().filter_map(|&v| bits(v)));
        }
        if let Some(l) = &d.labels {
            self.labels.push(l.clone());
        }
    }

    pub fn add_audit(&mut self, sender: &str, a: &ClientAudit) {
        self.secrets.push(Secrets {
            sender: sender.to_string(),
            tokens: a.encodings.iter().cloned().collect(),
            values: a.sums.iter().filter_map(|&v| bits(v)).collect(),
        });
    }

    /// Passive features and split thresholds must not reach `active`.
    pub fn withhold_from(&mut self, active: &str, passive: &PartyDataset, table: &SplitLookupTable) {
        let mut set: BTreeSet<u64> = table.records.iter().filter_map(|r| bits(r.threshold)).collect();
        for row in passive.features.rows() {
            set.extend(row.iter().filter_map(|&v| bits(v)));
        }
        self.withheld.push((active.to_string(), set));
    }

    /// Targets for a horizontal run: raw data and labels of every client,
    /// and what each client sent before masking.
    pub fn for_hfl(parties: &[PartyDataset], audit: &[ClientAudit]) -> Self {
        let mut t = ScanTargets {
            raw_exempt: vec![MessageKind::RangeReport, MessageKind::BinningBroadcast],
            ..ScanTargets::default()
        };
        for p in parties {
            t.add_dataset(p);
        }
        for (p, a) in parties.iter().zip(audit) {
            t.add_audit(&p.party, a);
        }
        t
    }

    /// Targets for a vertical run: labels at the active party, and passive
    /// features and thresholds that must stay away from it.
    pub fn for_vfl(active: &PartyDataset, passive: &[(PartyDataset, SplitLookupTable)]) -> Self {
        let mut t = ScanTargets::default();
        if let Some(l) = &active.labels {
            t.labels.push(l.clone());
        }
        for row in active.features.rows() {
            t.raw_values.extend(row.iter().filter_map(|&v| bits(v)));
        }
        for (d, table) in passive {
            t.withhold_from(&active.party, d, table);
        }
        t
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub messages: usize,
    pub findings: Vec<Finding>,
}

impl ScanReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn verdict(&self) -> String {
        if self.is_clean() {
            format!("clean: no raw labels/features found in {} messages", self.messages)
        } else {
            format!("{} finding(s) in {} messages", self.findings.len(), self.messages)
        }
    }
}

struct Walker<'a> {
    targets: &'a ScanTargets,
    disclosed: &'a BTreeSet<u64>,
    env: &'a Envelope,
    raw_ok: bool,
    secrets: Vec<&'a Secrets>,
    withheld: Vec<&'a BTreeSet<u64>>,
    out: Vec<Finding>,
}

impl Walker<'_> {
    fn flag(&mut self, finding: FindingKind, detail: String) {
        self.out.push(Finding {
            position: self.env.position,
            sender: self.env.sender.clone(),
            recipient: self.env.recipient.clone(),
            kind: self.env.kind,
            finding,
            detail,
        });
    }

    fn float(&mut self, v: f64) {
        let Some(b) = bits(v) else { return };
        if self.raw_ok {
            return;
        }
        if self.targets.raw_values.contains(&b) && !self.disclosed.contains(&b) {
            self.flag(FindingKind::RawFeature, format!("{v:?}"));
        }
        if self.secrets.iter().any(|s| s.values.contains(&b)) {
            self.flag(FindingKind::UnmaskedSum, format!("{v:?}"));
        }
        if self.withheld.iter().any(|s| s.contains(&b)) {
            self.flag(FindingKind::PassiveSecret, format!("{v:?}"));
        }
    }

    fn walk(&mut self, v: &Value) {
        match v {
            Value::Number(n) => {
                if n.is_f64() {
                    self.float(n.as_f64().unwrap_or(0.0));
                } else {
                    self.token(&n.to_string());
                }
            }
            Value::String(s) => self.token(s),
            Value::Array(items) => {
                self.label_array(items);
                for i in items {
                    self.walk(i);
                }
            }
            Value::Object(map) => {
                for i in map.values() {
                    self.walk(i);
                }
            }
            Value::Bool(_) | Value::Null => {}
        }
    }

    fn token(&mut self, s: &str) {
        if self.secrets.iter().any(|x| x.tokens.contains(s)) {
            self.flag(FindingKind::UnmaskedSum, s.to_string());
        }
    }

    fn label_array(&mut self, items: &[Value]) {
        if items.len() < 2 {
            return;
        }
        let bits: Option<Vec<u8>> = items
            .iter()
            .map(|v| match v.as_u64() {
                Some(b @ (0 | 1)) => Some(b as u8),
                _ => None,
            })
            .collect();
        if let Some(bits) = bits {
            if self.targets.labels.contains(&bits) {
                self.flag(FindingKind::Label, format!("{} labels", bits.len()));
            }
        }
    }
}

fn collect_floats(v: &Value, out: &mut BTreeSet<u64>) {
    match v {
        Value::Number(n) if n.is_f64() => out.extend(n.as_f64().and_then(bits)),
        Value::Array(items) => items.iter().for_each(|i| collect_floats(i, out)),
        Value::Object(map) => map.values().for_each(|i| collect_floats(i, out)),
        _ => {}
    }
}

/// Looks for protected values anywhere in the transcript payloads.
pub fn scan_transcript(transcript: &[Envelope], targets: &ScanTargets) -> Result<ScanReport> {
    let payloads = transcript
        .iter()
        .map(|env| serde_json::from_str::<Value>(&env.payload))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut disclosed = BTreeSet::new();
    for (env, v) in transcript.iter().zip(&payloads) {
        if targets.raw_exempt.contains(&env.kind) {
            collect_floats(v, &mut disclosed);
        }
    }
    let mut findings = Vec::new();
    for (env, v) in transcript.iter().zip(&payloads) {
        let mut w = Walker {
            targets,
            disclosed: &disclosed,
            env,
            raw_ok: targets.raw_exempt.contains(&env.kind),
            secrets: targets.secrets.iter().filter(|s| s.sender == env.sender).collect(),
            withheld: targets
                .withheld
                .iter()
                .filter(|(to, _)| *to == env.recipient)
                .map(|(_, s)| s)
                .collect(),
            out: Vec::new(),
        };
        w.walk(v);
        findings.extend(w.out);
    }
    Ok(ScanReport {
        messages: transcript.len(),
        findings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::Bus;

    fn transcript(payloads: &[(&str, serde_json::Value)]) -> Vec<Envelope> {
        let mut bus = Bus::new();
        bus.register("a");
        bus.register("b");
        for (i, (to, p)) in payloads.iter().enumerate() {
            let from = if *to == "a" { "b" } else { "a" };
            bus.send(from, to, i as u64, MessageKind::Ping, p).unwrap();
        }
        bus.into_transcript()
    }

    #[test]
    fn finds_planted_values() {
        let mut t = ScanTargets::default();
        t.raw_values.insert(1570.38f64.to_bits());
        t.labels.push(vec![1, 0, 1]);
        t.secrets.push(Secrets {
            sender: "a".into(),
            tokens: ["123456789".to_string()].into_iter().collect(),
            values: BTreeSet::new(),
        });
        t.withheld.push(("a".into(), [4.25f64.to_bits()].into_iter().collect()));
        let tr = transcript(&[
            ("b", serde_json::json!({"x": [1.0, 1570.38]})),
            ("b", serde_json::json!({"y": [1, 0, 1]})),
            ("b", serde_json::json!({"z": 123456789u64})),
            ("a", serde_json::json!({"t": 4.25})),
            ("b", serde_json::json!({"t": 4.25, "zero": 0.0, "ids": [1, 0, 0]})),
        ]);
        let r = scan_transcript(&tr, &t).unwrap();
        let kinds: Vec<FindingKind> = r.findings.iter().map(|f| f.finding).collect();
        assert_eq!(
            kinds,
            vec![FindingKind::RawFeature, FindingKind::Label, FindingKind::UnmaskedSum, FindingKind::PassiveSecret]
        );
        assert!(!r.is_clean());
    }

    #[test]
    fn exempt_kinds_may_carry_raw_values() {
        let mut t = ScanTargets::default();
        t.raw_values.insert(2.5f64.to_bits());
        t.raw_exempt.push(MessageKind::Ping);
        let tr = transcript(&[("b", serde_json::json!([2.5]))]);
        assert!(scan_transcript(&tr, &t).unwrap().is_clean());
    }

    #[test]
    fn disclosed_values_are_not_raw_findings() {
        let mut t = ScanTargets::default();
        t.raw_values.extend([2.5f64.to_bits(), 7.25f64.to_bits()]);
        t.raw_exempt.push(MessageKind::Ping);
        let mut bus = Bus::new();
        bus.register("a");
        bus.register("b");
        bus.send("a", "b", 0, MessageKind::Ping, &serde_json::json!({"min": 2.5})).unwrap();
        bus.send("b", "a", 1, MessageKind::Pong, &serde_json::json!([2.5, 7.25])).unwrap();
        let r = scan_transcript(&bus.into_transcript(), &t).unwrap();
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].detail, "7.25");
    }
}
