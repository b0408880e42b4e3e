use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Exposure,
    BecomeIa,
    BecomeIp,
    BecomeIs,
    Hospitalize,
    Recover,
    Die,
    TestOutcome,
    PolicyTick,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Exposure => "Exposure",
            EventKind::BecomeIa => "BecomeIa",
            EventKind::BecomeIp => "BecomeIp",
            EventKind::BecomeIs => "BecomeIs",
            EventKind::Hospitalize => "Hospitalize",
            EventKind::Recover => "Recover",
            EventKind::Die => "Die",
            EventKind::TestOutcome => "TestOutcome",
            EventKind::PolicyTick => "PolicyTick",
        }
    }
}

/// A logged state change. `site` is `None` for household, imported and seed
/// exposures; `infector` is `None` for imports and seeds. `positive` is set
/// only on test outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "t_h")]
    pub time: f64,
    pub kind: EventKind,
    pub subject: u32,
    pub infector: Option<u32>,
    pub site: Option<u32>,
    #[serde(
        rename = "result",
        default,
        skip_serializing_if = "Option::is_none",
        with = "result_label"
    )]
    pub positive: Option<bool>,
}

mod result_label {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(true) => s.serialize_str("positive"),
            Some(false) => s.serialize_str("negative"),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        match v.as_deref() {
            None => Ok(None),
            Some("positive") => Ok(Some(true)),
            Some("negative") => Ok(Some(false)),
            Some(other) => Err(serde::de::Error::custom(format!("unknown test result `{other}`"))),
        }
    }
}

impl Event {
    pub fn new(time: f64, kind: EventKind, subject: u32) -> Self {
        Event {
            time,
            kind,
            subject,
            infector: None,
            site: None,
            positive: None,
        }
    }
}

/// How a pending exposure reaches its subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Site(u32),
    Household,
    Import,
}

/// Queue payloads, including bookkeeping that never reaches the log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pending {
    Exposure {
        subject: u32,
        infector: u32,
        route: Route,
    },
    Import,
    Transition {
        kind: EventKind,
        subject: u32,
    },
    /// `capacity` is false for tests that bypass the daily capacity.
    TestSample {
        subject: u32,
        enqueued: f64,
        capacity: bool,
    },
    TestOutcome {
        subject: u32,
        enqueued: f64,
        sampled: f64,
        positive: bool,
    },
    PolicyTick,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    time: f64,
    seq: u64,
    item: Pending,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so the max-heap pops the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-queue on `(time, insertion order)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, item: Pending) {
        debug_assert!(time >= 0.0 && time.is_finite(), "bad event time {time}");
        self.heap.push(Entry {
            time,
            seq: self.seq,
            item,
        });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(f64, Pending)> {
        self.heap.pop().map(|e| (e.time, e.item))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
