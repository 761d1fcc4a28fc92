//! Line-delimited event log: `timestep,event_kind,driver,route,value`.
//!
//! The first line is that header and the last record is an `end` event whose
//! value is the number of records before it, so a log cut short at a line
//! boundary is still detected. Values use the shortest representation that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{DriverId, RouteId};

pub const HEADER: &str = "timestep,event_kind,driver,route,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Flow `X_t` recorded for a route.
    Flow,
    /// Predicted flow `X_{t+q}`.
    Forecast,
    /// Route toll after this step's update.
    Toll,
    /// Offer issued; value is the frozen per-driver charge.
    Assign,
    /// Projected utility of the issued offer.
    Quote,
    /// No eligible route.
    Unmatched,
    /// Offer taken up; route is the assigned one, value the charge paid.
    Accept,
    /// Trip start; route is the one actually used, value the trip length.
    Depart,
    Expire,
    /// Switching penalty charged on the route actually used.
    Penalty,
    /// Trip finished.
    Complete,
    Occupancy,
    /// Per-driver charge on the route at the end of the step.
    Charge,
    /// Sum of per-driver charges over travelling drivers.
    Distributed,
    /// Route cost `R(E, C)_r` at the end of the step.
    RouteCost,
    End,
}

impl EventKind {
    pub const ALL: [EventKind; 16] = [
        EventKind::Flow,
        EventKind::Forecast,
        EventKind::Toll,
        EventKind::Assign,
        EventKind::Quote,
        EventKind::Unmatched,
        EventKind::Accept,
        EventKind::Depart,
        EventKind::Expire,
        EventKind::Penalty,
        EventKind::Complete,
        EventKind::Occupancy,
        EventKind::Charge,
        EventKind::Distributed,
        EventKind::RouteCost,
        EventKind::End,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Flow => "flow",
            EventKind::Forecast => "forecast",
            EventKind::Toll => "toll",
            EventKind::Assign => "assign",
            EventKind::Quote => "quote",
            EventKind::Unmatched => "unmatched",
            EventKind::Accept => "accept",
            EventKind::Depart => "depart",
            EventKind::Expire => "expire",
            EventKind::Penalty => "penalty",
            EventKind::Complete => "complete",
            EventKind::Occupancy => "occupancy",
            EventKind::Charge => "charge",
            EventKind::Distributed => "distributed",
            EventKind::RouteCost => "route_cost",
            EventKind::End => "end",
        }
    }

    fn needs_driver(self) -> bool {
        matches!(
            self,
            EventKind::Assign
                | EventKind::Quote
                | EventKind::Unmatched
                | EventKind::Accept
                | EventKind::Depart
                | EventKind::Expire
                | EventKind::Penalty
                | EventKind::Complete
        )
    }

    fn needs_route(self) -> bool {
        !matches!(self, EventKind::Unmatched | EventKind::End)
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub timestep: u64,
    pub kind: EventKind,
    pub driver: Option<DriverId>,
    pub route: Option<RouteId>,
    pub value: f64,
}

impl Event {
    pub fn route(timestep: u64, kind: EventKind, route: RouteId, value: f64) -> Self {
        Event {
            timestep,
            kind,
            driver: None,
            route: Some(route),
            value,
        }
    }

    pub fn driver(timestep: u64, kind: EventKind, driver: DriverId, route: Option<RouteId>, value: f64) -> Self {
        Event {
            timestep,
            kind,
            driver: Some(driver),
            route,
            value,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_csv(&self, final_timestep: u64) -> String {
        let mut out = String::with_capacity(32 * (self.events.len() + 2));
        out.push_str(HEADER);
        out.push('\n');
        for e in &self.events {
            write_record(&mut out, e);
        }
        write_record(
            &mut out,
            &Event {
                timestep: final_timestep,
                kind: EventKind::End,
                driver: None,
                route: None,
                value: self.events.len() as f64,
            },
        );
        out
    }

    /// Parses a log written by [`EventLog::to_csv`]; the trailing `end`
    /// record is checked and dropped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut events = Vec::new();
        let mut saw_header = false;
        let mut ended = false;
        let mut last_line = 0;
        for record in reader.records() {
            let record = record.map_err(|e| Error::MalformedLog {
                line: e.position().map_or(last_line + 1, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = record.position().map_or(last_line + 1, |p| p.line());
            last_line = line;
            let malformed = |reason: String| Error::MalformedLog { line, reason };
            if !saw_header {
                if record.iter().collect::<Vec<_>>().join(",") != HEADER {
                    return Err(malformed("missing header".into()));
                }
                saw_header = true;
                continue;
            }
            if ended {
                return Err(malformed("record after end".into()));
            }
            if record.len() != 5 {
                return Err(malformed(format!("expected 5 fields, found {}", record.len())));
            }
            let timestep = record[0]
                .parse::<u64>()
                .map_err(|e| malformed(format!("bad timestep {:?}: {e}", &record[0])))?;
            let kind = record[1].parse::<EventKind>().map_err(malformed)?;
            let driver = parse_id(&record[2]).map_err(malformed)?.map(DriverId);
            let route = parse_id(&record[3]).map_err(malformed)?.map(RouteId);
            let value = record[4]
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad value {:?}: {e}", &record[4])))?;
            if kind.needs_driver() && driver.is_none() {
                return Err(malformed(format!("{} event without driver", kind.as_str())));
            }
            if kind.needs_route() && route.is_none() {
                return Err(malformed(format!("{} event without route", kind.as_str())));
            }
            if kind == EventKind::End {
                if value != events.len() as f64 {
                    return Err(malformed(format!(
                        "end record counts {value} events, log holds {}",
                        events.len()
                    )));
                }
                ended = true;
                continue;
            }
            events.push(Event {
                timestep,
                kind,
                driver,
                route,
                value,
            });
        }
        if !saw_header {
            return Err(Error::MalformedLog {
                line: 1,
                reason: "empty log".into(),
            });
        }
        if !ended {
            return Err(Error::MalformedLog {
                line: last_line + 1,
                reason: "truncated log: missing end record".into(),
            });
        }
        Ok(EventLog { events })
    }
}

fn parse_id(field: &str) -> std::result::Result<Option<u32>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<u32>()
        .map(Some)
        .map_err(|e| format!("bad id {field:?}: {e}"))
}

fn write_record(out: &mut String, e: &Event) {
    let _ = write!(out, "{},{},", e.timestep, e.kind.as_str());
    if let Some(d) = e.driver {
        let _ = write!(out, "{}", d.0);
    }
    out.push(',');
    if let Some(r) = e.route {
        let _ = write!(out, "{}", r.0);
    }
    let _ = writeln!(out, ",{}", e.value);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> EventLog {
        let mut log = EventLog::new();
        log.push(Event::route(0, EventKind::Toll, RouteId(1), 0.1 + 0.2));
        log.push(Event::driver(0, EventKind::Unmatched, DriverId(4), None, 0.0));
        log.push(Event::driver(
            1,
            EventKind::Assign,
            DriverId(5),
            Some(RouteId(2)),
            1.0 / 3.0,
        ));
        log
    }

    #[test]
    fn round_trip() {
        let text = sample().to_csv(2);
        assert!(text.starts_with(HEADER));
        assert!(text.ends_with("2,end,,,3\n"));
        assert_eq!(EventLog::parse(&text).unwrap(), sample());
    }

    #[test]
    fn truncated_log_reports_line() {
        let text = sample().to_csv(2);
        let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        match EventLog::parse(&cut) {
            Err(Error::MalformedLog { line, reason }) => {
                assert_eq!(line, 4);
                assert!(reason.contains("truncated"));
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        let partial = format!("{HEADER}\n0,toll,,1,0.3\n1,assign\n");
        match EventLog::parse(&partial) {
            Err(Error::MalformedLog { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_records() {
        for body in [
            "0,teleport,,1,0",
            "x,toll,,1,0",
            "0,toll,,,0",
            "0,assign,,1,0",
            "0,toll,,1,abc",
        ] {
            let text = format!("{HEADER}\n{body}\n0,end,,,1\n");
            assert!(
                matches!(EventLog::parse(&text), Err(Error::MalformedLog { line: 2, .. })),
                "{body}"
            );
        }
        assert!(EventLog::parse("").is_err());
        assert!(EventLog::parse("a,b\n").is_err());
        let wrong_count = format!("{HEADER}\n0,end,,,5\n");
        assert!(EventLog::parse(&wrong_count).is_err());
    }

    proptest! {
        #[test]
        fn values_round_trip_exactly(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..20)) {
            let mut log = EventLog::new();
            for (i, &v) in values.iter().enumerate() {
                log.push(Event::route(i as u64, EventKind::Forecast, RouteId(i as u32), v));
            }
            let parsed = EventLog::parse(&log.to_csv(values.len() as u64)).unwrap();
            prop_assert_eq!(parsed, log);
        }
    }
}
