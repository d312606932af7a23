use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    PublicKey,
    RangeReport,
    BinningBroadcast,
    HistogramSubmit,
    SplitBroadcast,
    PartitionReport,
    ModelDelivery,
    GradientBroadcast,
    SampleSpace,
    EncHistogramSubmit,
    SplitNotice,
    PartitionReply,
    InferQuery,
    InferReply,
    Ping,
    Pong,
}

impl MessageKind {
    pub fn tag(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }
}

/// One message as recorded on the bus. `bytes` is the length of `payload`,
/// the serialized JSON body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    /// Position in the transcript.
    pub position: usize,
    pub sender: String,
    pub recipient: String,
    /// Protocol round; nondecreasing per sender.
    pub round: u64,
    /// Per-sender sequence number; strictly increasing per sender.
    pub seq: u64,
    pub kind: MessageKind,
    pub payload: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficStats {
    pub messages_sent: u64,
    pub bytes_sent: u64,
    pub messages_received: u64,
    pub bytes_received: u64,
}

#[derive(Debug)]
struct Replay {
    party: String,
    recorded: Vec<Envelope>,
    consumed: Vec<bool>,
    next_out: usize,
}

/// In-process message bus. Parties are registered by name; every envelope
/// is serialized, appended to the transcript and queued for its recipient.
///
/// In replay mode one party is re-executed against a recorded transcript:
/// its inbound messages come from the record and each of its outbound
/// messages must equal the recorded one.
#[derive(Debug, Default)]
pub struct Bus {
    transcript: Vec<Envelope>,
    queues: BTreeMap<String, VecDeque<usize>>,
    seq: BTreeMap<String, u64>,
    last_round: BTreeMap<String, u64>,
    replay: Option<Replay>,
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    pub fn replay(party: &str, recorded: Vec<Envelope>) -> Self {
        let consumed = vec![false; recorded.len()];
        Bus {
            replay: Some(Replay {
                party: party.to_string(),
                recorded,
                consumed,
                next_out: 0,
            }),
            ..Bus::default()
        }
    }

    pub fn is_replay(&self) -> bool {
        self.replay.is_some()
    }

    fn replay_send(&mut self, env: &Envelope) -> Result<()> {
        let rp = self.replay.as_mut().expect("replay mode");
        let next = rp.recorded[rp.next_out..]
            .iter()
            .position(|e| e.sender == rp.party)
            .map(|i| i + rp.next_out);
        let Some(i) = next else {
            return Err(Error::Protocol {
                position: env.position,
                reason: "replay produced a message absent from the record".into(),
            });
        };
        let rec = &rp.recorded[i];
        if rec.recipient != env.recipient || rec.kind != env.kind || rec.payload != env.payload {
            return Err(Error::Protocol {
                position: rec.position,
                reason: format!("replay diverged on {} to {}", env.kind.tag(), env.recipient),
            });
        }
        rp.next_out = i + 1;
        Ok(())
    }

    fn replay_recv(&mut self, to: &str, from: &str, kind: MessageKind) -> Result<Option<String>> {
        let Some(rp) = self.replay.as_mut() else {
            return Ok(None);
        };
        if rp.party != to {
            return Ok(None);
        }
        let found = rp
            .recorded
            .iter()
            .enumerate()
            .position(|(i, e)| !rp.consumed[i] && e.sender == from && e.recipient == to && e.kind == kind);
        match found {
            Some(i) => {
                rp.consumed[i] = true;
                Ok(Some(rp.recorded[i].payload.clone()))
            }
            None => Err(Error::Protocol {
                position: rp.recorded.len(),
                reason: format!("record holds no further {} from {from}", kind.tag()),
            }),
        }
    }

    pub fn register(&mut self, party: &str) {
        self.queues.entry(party.to_string()).or_default();
    }

    pub fn is_registered(&self, party: &str) -> bool {
        self.queues.contains_key(party)
    }

    fn abort(&self, reason: impl Into<String>) -> Error {
        Error::Protocol {
            position: self.transcript.len(),
            reason: reason.into(),
        }
    }

    pub fn send<T: Serialize>(&mut self, from: &str, to: &str, round: u64, kind: MessageKind, payload: &T) -> Result<()> {
        if !self.is_registered(from) || !self.is_registered(to) {
            return Err(self.abort(format!("unregistered party in {from} → {to}")));
        }
        if self.last_round.get(from).is_some_and(|&r| round < r) {
            return Err(self.abort(format!("{from} sent round {round} after a later round")));
        }
        self.last_round.insert(from.to_string(), round);
        let seq = self.seq.entry(from.to_string()).or_insert(0);
        let body = serde_json::to_string(payload)?;
        let env = Envelope {
            position: self.transcript.len(),
            sender: from.to_string(),
            recipient: to.to_string(),
            round,
            seq: *seq,
            kind,
            bytes: body.len(),
            payload: body,
        };
        *seq += 1;
        if self.replay.as_ref().is_some_and(|r| r.party == from) {
            self.replay_send(&env)?;
        }
        self.queues.get_mut(to).expect("registered").push_back(env.position);
        self.transcript.push(env);
        Ok(())
    }

    /// Sends the same payload to each recipient in order.
    pub fn broadcast<T: Serialize>(&mut self, from: &str, to: &[String], round: u64, kind: MessageKind, payload: &T) -> Result<()> {
        for r in to {
            self.send(from, r, round, kind, payload)?;
        }
        Ok(())
    }

    /// Takes the oldest queued message for `to` from `from` of `kind`.
    pub fn recv<T: DeserializeOwned>(&mut self, to: &str, from: &str, kind: MessageKind) -> Result<T> {
        if let Some(body) = self.replay_recv(to, from, kind)? {
            return serde_json::from_str(&body).map_err(|e| Error::Protocol {
                position: self.transcript.len(),
                reason: format!("malformed recorded {} payload: {e}", kind.tag()),
            });
        }
        let queue = self
            .queues
            .get(to)
            .ok_or_else(|| self.abort(format!("{to} is not registered")))?;
        let found = queue.iter().position(|&p| {
            let e = &self.transcript[p];
            e.sender == from && e.kind == kind
        });
        let Some(i) = found else {
            return Err(self.abort(format!("{to} expected {} from {from}, none pending", kind.tag())));
        };
        let p = self.queues.get_mut(to).expect("registered").remove(i).expect("index valid");
        serde_json::from_str(&self.transcript[p].payload).map_err(|e| Error::Protocol {
            position: p,
            reason: format!("malformed {} payload: {e}", kind.tag()),
        })
    }

    /// Barrier: one message of `kind` from every sender, in sender order.
    pub fn collect<T: DeserializeOwned>(&mut self, to: &str, from: &[String], kind: MessageKind) -> Result<Vec<T>> {
        from.iter().map(|f| self.recv(to, f, kind)).collect()
    }

    pub fn pending(&self, party: &str) -> usize {
        self.queues.get(party).map_or(0, VecDeque::len)
    }

    pub fn transcript(&self) -> &[Envelope] {
        &self.transcript
    }

    pub fn into_transcript(self) -> Vec<Envelope> {
        self.transcript
    }

    pub fn total_bytes(&self) -> u64 {
        self.transcript.iter().map(|e| e.bytes as u64).sum()
    }
}

/// Per-party message and byte totals.
pub fn traffic(transcript: &[Envelope]) -> BTreeMap<String, TrafficStats> {
    let mut out: BTreeMap<String, TrafficStats> = BTreeMap::new();
    for e in transcript {
        let s = out.entry(e.sender.clone()).or_default();
        s.messages_sent += 1;
        s.bytes_sent += e.bytes as u64;
        let r = out.entry(e.recipient.clone()).or_default();
        r.messages_received += 1;
        r.bytes_received += e.bytes as u64;
    }
    out
}

/// Checks ordering invariants: positions are consecutive, per-sender
/// sequence numbers strictly increase, rounds never decrease per sender and
/// byte counts match payload lengths.
pub fn validate_transcript(transcript: &[Envelope]) -> Result<()> {
    let mut seq: BTreeMap<&str, u64> = BTreeMap::new();
    let mut round: BTreeMap<&str, u64> = BTreeMap::new();
    for (i, e) in transcript.iter().enumerate() {
        let bad = |reason: String| Error::Protocol { position: i, reason };
        if e.position != i {
            return Err(bad(format!("position {} out of order", e.position)));
        }
        if e.bytes != e.payload.len() {
            return Err(bad("byte count does not match payload".into()));
        }
        if let Some(&s) = seq.get(e.sender.as_str()) {
            if e.seq <= s {
                return Err(bad(format!("sequence of {} did not increase", e.sender)));
            }
        }
        if round.get(e.sender.as_str()).is_some_and(|&r| e.round < r) {
            return Err(bad(format!("round of {} decreased", e.sender)));
        }
        seq.insert(&e.sender, e.seq);
        round.insert(&e.sender, e.round);
    }
    Ok(())
}

pub fn write_transcript(path: &Path, transcript: &[Envelope]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for e in transcript {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_transcript(path: &Path) -> Result<Vec<Envelope>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Serde(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}
