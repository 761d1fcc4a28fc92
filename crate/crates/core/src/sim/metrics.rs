use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DriverId, RouteId};
use crate::sim::events::{Event, EventKind, EventLog};

/// Per-route, per-timestep snapshot.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraceRow {
    pub timestep: u64,
    pub route: RouteId,
    pub flow: f64,
    pub forecast: f64,
    pub toll: f64,
    pub occupancy: f64,
    pub charge: f64,
    pub distributed: f64,
    pub route_cost: f64,
}

/// Aggregates of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub welfare: f64,
    pub total_route_cost: f64,
    pub tolls_collected: f64,
    pub penalties_collected: f64,
    pub drivers: u64,
    pub matched: u64,
    pub unmatched: u64,
    pub expired: u64,
    /// Offers still pending when the horizon ran out.
    pub unresolved: u64,
    pub penalized: u64,
    pub trips_completed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub summary: MetricsSummary,
    pub traces: Vec<TraceRow>,
}

impl MetricsReport {
    /// Recomputes the report from a log alone.
    pub fn from_log(log: &EventLog) -> Result<Self> {
        let mut builder = MetricsBuilder::default();
        for (i, e) in log.events().iter().enumerate() {
            // line 1 is the header
            builder.apply(e).map_err(|reason| Error::MalformedLog {
                line: i as u64 + 2,
                reason,
            })?;
        }
        Ok(builder.finish())
    }

    pub fn trace(&self, route: RouteId) -> impl Iterator<Item = &TraceRow> {
        self.traces.iter().filter(move |r| r.route == route)
    }

    pub fn traces_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.traces {
            w.serialize(row).expect("trace rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }
}

#[derive(Debug, Default)]
pub(crate) struct MetricsBuilder {
    summary: MetricsSummary,
    traces: BTreeMap<(u64, RouteId), TraceRow>,
    quotes: BTreeMap<DriverId, f64>,
    matched: BTreeSet<DriverId>,
}

impl MetricsBuilder {
    pub(crate) fn apply(&mut self, e: &Event) -> std::result::Result<(), String> {
        let driver = || {
            e.driver
                .ok_or_else(|| format!("{} event without driver", e.kind.as_str()))
        };
        let route = || {
            e.route
                .ok_or_else(|| format!("{} event without route", e.kind.as_str()))
        };
        let s = &mut self.summary;
        match e.kind {
            EventKind::Assign => s.drivers += 1,
            EventKind::Unmatched => {
                s.drivers += 1;
                s.unmatched += 1;
            }
            EventKind::Quote => {
                self.quotes.insert(driver()?, e.value);
            }
            EventKind::Accept => {
                let d = driver()?;
                let quote = self
                    .quotes
                    .get(&d)
                    .copied()
                    .ok_or_else(|| format!("accept for {d} without a quote"))?;
                if !self.matched.insert(d) {
                    return Err(format!("{d} accepted twice"));
                }
                s.matched += 1;
                s.welfare += quote;
                s.tolls_collected += e.value;
            }
            EventKind::Expire => s.expired += 1,
            EventKind::Penalty => {
                s.penalized += 1;
                s.penalties_collected += e.value;
            }
            EventKind::Complete => s.trips_completed += 1,
            EventKind::Depart => {}
            EventKind::End => return Err("end record inside log body".into()),
            kind => {
                let r = route()?;
                let row = self.traces.entry((e.timestep, r)).or_insert_with(|| TraceRow {
                    timestep: e.timestep,
                    route: r,
                    ..TraceRow::default()
                });
                match kind {
                    EventKind::Flow => row.flow = e.value,
                    EventKind::Forecast => row.forecast = e.value,
                    EventKind::Toll => row.toll = e.value,
                    EventKind::Occupancy => row.occupancy = e.value,
                    EventKind::Charge => row.charge = e.value,
                    EventKind::Distributed => row.distributed = e.value,
                    EventKind::RouteCost => {
                        row.route_cost = e.value;
                        s.total_route_cost += e.value;
                    }
                    _ => unreachable!("driver events handled above"),
                }
            }
        }
        Ok(())
    }

    pub(crate) fn finish(mut self) -> MetricsReport {
        let s = &mut self.summary;
        s.unresolved = s.drivers.saturating_sub(s.matched + s.unmatched + s.expired);
        MetricsReport {
            summary: self.summary,
            traces: self.traces.into_values().collect(),
        }
    }
}
