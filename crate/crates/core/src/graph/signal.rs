use serde::{Deserialize, Serialize};

use super::Digraph;
use crate::error::{domain, Error, Result};

/// Relative slack used when comparing switch-time gaps against the dwell time.
const DWELL_SLACK: f64 = 1e-12;

/// Piecewise-constant map from time to one of a finite set of digraphs.
///
/// Segment `k` covers `[switch_times[k], switch_times[k + 1])`, the last one
/// ending at `horizon`. Consecutive switch instants are at least `tau_d` apart;
/// the final segment may be cut short by the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalDocument", into = "SignalDocument")]
pub struct SwitchingSignal {
    graphs: Vec<Digraph>,
    switch_times: Vec<f64>,
    assignment: Vec<usize>,
    horizon: f64,
    tau_d: f64,
}

/// One maximal interval on which the active graph does not change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub graph: usize,
}

impl SwitchingSignal {
    pub fn new(
        graphs: Vec<Digraph>,
        schedule: Vec<(f64, usize)>,
        horizon: f64,
        tau_d: f64,
    ) -> Result<Self> {
        if graphs.is_empty() {
            return domain("switching signal needs at least one graph");
        }
        let n = graphs[0].n();
        if graphs.iter().any(|g| g.n() != n) {
            return domain("all graphs of a switching signal must share the same node count");
        }
        if !(tau_d > 0.0 && tau_d.is_finite()) {
            return domain(format!("dwell time must be positive, got {tau_d}"));
        }
        if schedule.is_empty() {
            return domain("schedule must contain at least the entry for t = 0");
        }
        if schedule[0].0 != 0.0 {
            return domain(format!(
                "schedule must start at t = 0, got {}",
                schedule[0].0
            ));
        }
        for w in schedule.windows(2) {
            let gap = w[1].0 - w[0].0;
            if !(gap > 0.0) {
                return domain(format!(
                    "switch times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                ));
            }
            if gap < tau_d * (1.0 - DWELL_SLACK) {
                return domain(format!(
                    "switches at {} and {} are closer than the dwell time {tau_d}",
                    w[0].0, w[1].0
                ));
            }
        }
        let last = schedule.last().unwrap().0;
        if !(horizon > last && horizon.is_finite()) {
            return domain(format!(
                "horizon {horizon} must exceed the last switch time {last}"
            ));
        }
        if let Some(&(_, g)) = schedule.iter().find(|&&(_, g)| g >= graphs.len()) {
            return domain(format!(
                "schedule references graph {g} but only {} exist",
                graphs.len()
            ));
        }
        let (switch_times, assignment) = schedule.into_iter().unzip();
        Ok(SwitchingSignal {
            graphs,
            switch_times,
            assignment,
            horizon,
            tau_d,
        })
    }

    /// A signal that holds one graph over the whole horizon.
    pub fn constant(graph: Digraph, horizon: f64, tau_d: f64) -> Result<Self> {
        SwitchingSignal::new(vec![graph], vec![(0.0, 0)], horizon, tau_d)
    }

    pub fn n(&self) -> usize {
        self.graphs[0].n()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tau_d(&self) -> f64 {
        self.tau_d
    }

    pub fn graphs(&self) -> &[Digraph] {
        &self.graphs
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn all_bidirectional(&self) -> bool {
        self.graphs.iter().all(Digraph::is_bidirectional)
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.switch_times.len()).map(move |k| Segment {
            start: self.switch_times[k],
            end: self
                .switch_times
                .get(k + 1)
                .copied()
                .unwrap_or(self.horizon),
            graph: self.assignment[k],
        })
    }

    /// Index of the segment containing `t` (segments are right-open).
    /// Times at or beyond the horizon map to the last segment.
    pub fn segment_index(&self, t: f64) -> usize {
        self.switch_times
            .partition_point(|&s| s <= t)
            .saturating_sub(1)
    }

    pub fn graph_at(&self, t: f64) -> &Digraph {
        &self.graphs[self.assignment[self.segment_index(t)]]
    }

    /// Switch instants strictly inside `(t1, t2)`.
    pub fn switches_between(&self, t1: f64, t2: f64) -> impl Iterator<Item = f64> + '_ {
        self.switch_times
            .iter()
            .copied()
            .filter(move |&s| s > t1 && s < t2)
    }

    pub fn to_document(&self) -> SignalDocument {
        SignalDocument {
            n: self.n(),
            tau_d: self.tau_d,
            graphs: self
                .graphs
                .iter()
                .map(|g| g.arcs().iter().map(|&(j, i)| [j + 1, i + 1]).collect())
                .collect(),
            schedule: self
                .switch_times
                .iter()
                .zip(&self.assignment)
                .map(|(&t, &g)| (t, g))
                .collect(),
            horizon: self.horizon,
        }
    }
}

/// Serialized switching signal. Arc pairs are 1-indexed `[j, i]`, meaning
/// `j` is a neighbor of `i`; `schedule` lists `[switch_time, graph_index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDocument {
    pub n: usize,
    pub tau_d: f64,
    pub graphs: Vec<Vec<[usize; 2]>>,
    pub schedule: Vec<(f64, usize)>,
    pub horizon: f64,
}

impl TryFrom<SignalDocument> for SwitchingSignal {
    type Error = Error;

    fn try_from(doc: SignalDocument) -> Result<Self> {
        let mut graphs = Vec::with_capacity(doc.graphs.len());
        for (idx, arcs) in doc.graphs.iter().enumerate() {
            let mut zero_based = Vec::with_capacity(arcs.len());
            for &[j, i] in arcs {
                if j == 0 || i == 0 || j > doc.n || i > doc.n {
                    return Err(Error::Parse(format!(
                        "graphs[{idx}]: arc [{j}, {i}] outside 1..={}",
                        doc.n
                    )));
                }
                zero_based.push((j - 1, i - 1));
            }
            graphs.push(
                Digraph::new(doc.n, zero_based)
                    .map_err(|e| Error::Parse(format!("graphs[{idx}]: {e}")))?,
            );
        }
        SwitchingSignal::new(graphs, doc.schedule, doc.horizon, doc.tau_d)
    }
}

impl From<SwitchingSignal> for SignalDocument {
    fn from(signal: SwitchingSignal) -> Self {
        signal.to_document()
    }
}

impl SwitchingSignal {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SignalDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_graphs() -> Vec<Digraph> {
        vec![
            Digraph::new(2, [(0, 1)]).unwrap(),
            Digraph::new(2, [(1, 0)]).unwrap(),
        ]
    }

    #[test]
    fn enforces_dwell_time() {
        let err = SwitchingSignal::new(two_graphs(), vec![(0.0, 0), (0.5, 1)], 2.0, 1.0);
        assert!(err.is_err());
        assert!(SwitchingSignal::new(two_graphs(), vec![(0.0, 0), (1.0, 1)], 2.0, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(SwitchingSignal::new(two_graphs(), vec![(0.5, 0)], 2.0, 0.1).is_err());
        assert!(SwitchingSignal::new(two_graphs(), vec![(0.0, 2)], 2.0, 0.1).is_err());
        assert!(SwitchingSignal::new(two_graphs(), vec![(0.0, 0), (2.0, 1)], 2.0, 0.1).is_err());
        let mixed = vec![Digraph::empty(2).unwrap(), Digraph::empty(3).unwrap()];
        assert!(SwitchingSignal::new(mixed, vec![(0.0, 0)], 1.0, 0.1).is_err());
    }

    #[test]
    fn segment_lookup_is_right_open() {
        let s = SwitchingSignal::new(two_graphs(), vec![(0.0, 0), (1.0, 1)], 3.0, 1.0).unwrap();
        assert_eq!(s.segment_index(0.0), 0);
        assert_eq!(s.segment_index(0.999), 0);
        assert_eq!(s.segment_index(1.0), 1);
        assert_eq!(s.segment_index(5.0), 1);
        assert!(s.graph_at(1.0).has_arc(1, 0));
    }

    #[test]
    fn document_uses_one_based_arcs() {
        let text = r#"{"n": 2, "tau_d": 1.0, "graphs": [[[1, 2]], []],
                       "schedule": [[0.0, 0], [1.0, 1]], "horizon": 3.0}"#;
        let s = SwitchingSignal::from_json(text).unwrap();
        assert!(s.graphs()[0].has_arc(0, 1));
        let back = SwitchingSignal::try_from(s.to_document()).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"n": 2, "tau_d": 1.0, "graphs": [[[0, 2]]], "schedule": [[0.0, 0]], "horizon": 3.0}"#;
        assert!(SwitchingSignal::from_json(bad).is_err());
    }
}
