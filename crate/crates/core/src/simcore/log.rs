use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::event::{Event, EventKind};

/// Time-ordered record of one rollout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySummary {
    pub day: u32,
    pub susceptible: u64,
    pub exposed: u64,
    pub infectious_asym: u64,
    pub infectious_presym: u64,
    pub infectious_sym: u64,
    pub hospitalized: u64,
    pub recovered: u64,
    pub dead: u64,
    pub cum_positive_tests: u64,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(file).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EventLog> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut events = Vec::new();
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Event =
                serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
            events.push(e);
        }
        Ok(EventLog { events })
    }

    /// Compartment counts at the end of each day `0..days`.
    pub fn daily_summary(&self, population: usize, days: u32) -> Vec<DailySummary> {
        #[derive(Clone, Copy, PartialEq)]
        enum C {
            S,
            E,
            Ia,
            Ip,
            Is,
            R,
            D,
        }
        let mut state = vec![C::S; population];
        let mut hosp = vec![false; population];
        let mut counts = [0i64; 7];
        counts[0] = population as i64;
        let idx = |c: C| c as usize;
        let mut hospitalized = 0i64;
        let mut positives = 0u64;
        let mut rows = Vec::with_capacity(days as usize);
        let mut events = self.events.iter().peekable();
        for day in 0..days {
            let end = 24.0 * (day + 1) as f64;
            while let Some(e) = events.next_if(|e| e.time < end) {
                let i = e.subject as usize;
                let next = match e.kind {
                    EventKind::Exposure => C::E,
                    EventKind::BecomeIa => C::Ia,
                    EventKind::BecomeIp => C::Ip,
                    EventKind::BecomeIs => C::Is,
                    EventKind::Recover => C::R,
                    EventKind::Die => C::D,
                    EventKind::Hospitalize => {
                        if !hosp[i] {
                            hosp[i] = true;
                            hospitalized += 1;
                        }
                        continue;
                    }
                    EventKind::TestOutcome => {
                        positives += u64::from(e.positive == Some(true));
                        continue;
                    }
                    EventKind::PolicyTick => continue,
                };
                counts[idx(state[i])] -= 1;
                counts[idx(next)] += 1;
                state[i] = next;
                if matches!(next, C::R | C::D) && hosp[i] {
                    hosp[i] = false;
                    hospitalized -= 1;
                }
            }
            let c = |k: C| counts[idx(k)] as u64;
            rows.push(DailySummary {
                day,
                susceptible: c(C::S),
                exposed: c(C::E),
                infectious_asym: c(C::Ia),
                infectious_presym: c(C::Ip),
                infectious_sym: c(C::Is),
                hospitalized: hospitalized as u64,
                recovered: c(C::R),
                dead: c(C::D),
                cum_positive_tests: positives,
            });
        }
        rows
    }
}

pub fn write_daily_csv(path: &Path, rows: &[DailySummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_replays_transitions() {
        let mut log = EventLog::default();
        log.events.push(Event::new(1.0, EventKind::Exposure, 0));
        log.events.push(Event::new(30.0, EventKind::BecomeIp, 0));
        log.events.push(Event::new(40.0, EventKind::BecomeIs, 0));
        log.events.push(Event::new(41.0, EventKind::Hospitalize, 0));
        log.events.push(Event {
            positive: Some(true),
            ..Event::new(45.0, EventKind::TestOutcome, 0)
        });
        log.events.push(Event::new(60.0, EventKind::Recover, 0));
        let rows = log.daily_summary(3, 3);
        assert_eq!(rows[0].exposed, 1);
        assert_eq!(rows[0].susceptible, 2);
        assert_eq!(rows[1].infectious_sym, 1);
        assert_eq!(rows[1].hospitalized, 1);
        assert_eq!(rows[1].cum_positive_tests, 1);
        assert_eq!(rows[2].recovered, 1);
        assert_eq!(rows[2].hospitalized, 0);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let log = EventLog {
            events: vec![
                Event {
                    infector: Some(2),
                    site: Some(7),
                    ..Event::new(0.25, EventKind::Exposure, 1)
                },
                Event {
                    positive: Some(false),
                    ..Event::new(3.0, EventKind::TestOutcome, 1)
                },
            ],
        };
        log.save(&path).unwrap();
        assert_eq!(EventLog::load(&path).unwrap(), log);
    }
}
