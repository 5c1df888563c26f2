//! Joint graphs over time windows and the connectivity notions built on them:
//! uniform (quasi-)strong connectivity over sliding windows, the partition of
//! the time axis into jointly connected windows used for bidirectional
//! signals, and centers of persistent-arc graphs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    find_centers, is_quasi_strongly_connected, is_strongly_connected, Digraph, SwitchingSignal,
};
use crate::error::{domain, precondition, Result};

/// Time resolution for window scans, relative to `max(1, horizon)`.
const TIME_SLACK: f64 = 1e-12;

fn slack(signal: &SwitchingSignal) -> f64 {
    TIME_SLACK * signal.horizon().max(1.0)
}

/// Arcs active on some segment overlapping `[t1 + eps, t2 - eps)`.
fn joint_arcs(signal: &SwitchingSignal, t1: f64, t2: f64, eps: f64) -> BTreeSet<(usize, usize)> {
    let mut arcs = BTreeSet::new();
    let first = signal.segment_index(t1);
    for seg in signal.segments().skip(first) {
        if seg.start >= t2 - eps {
            break;
        }
        if seg.end > t1 + eps {
            arcs.extend(signal.graphs()[seg.graph].arcs().iter().copied());
        }
    }
    arcs
}

/// The joint graph: union of all arc sets active at some instant of `[t1, t2)`.
pub fn union_over(signal: &SwitchingSignal, t1: f64, t2: f64) -> Result<Digraph> {
    if !(0.0 <= t1 && t1 < t2 && t2 <= signal.horizon()) {
        return domain(format!(
            "interval [{t1}, {t2}) is not inside the signal domain [0, {}]",
            signal.horizon()
        ));
    }
    Digraph::new(signal.n(), joint_arcs(signal, t1, t2, 0.0))
}

/// Window start instants at which the joint graph over `[t, t + window)` can
/// change. Between consecutive critical instants the joint graph is constant
/// and contains the one at the left critical instant, so checking these
/// instants decides the sliding-window property exactly on the horizon.
fn critical_starts(signal: &SwitchingSignal, window: f64) -> Vec<f64> {
    let last = signal.horizon() - window;
    let mut starts: Vec<f64> = std::iter::once(0.0)
        .chain(signal.switch_times().iter().copied())
        .chain(signal.switch_times().iter().map(|&s| s - window))
        .filter(|&t| t >= 0.0 && t <= last)
        .collect();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    starts
}

fn check_windows(
    signal: &SwitchingSignal,
    window: f64,
    predicate: fn(&Digraph) -> bool,
) -> Result<bool> {
    if !(window > 0.0) {
        return domain(format!("window must be positive, got {window}"));
    }
    if window > signal.horizon() {
        return domain(format!(
            "window {window} exceeds the horizon {}",
            signal.horizon()
        ));
    }
    let eps = slack(signal);
    for t in critical_starts(signal, window) {
        let g = Digraph::new(signal.n(), joint_arcs(signal, t, t + window, eps))?;
        if !predicate(&g) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every window `[t, t + window)` inside the horizon has a quasi-strongly
/// connected joint graph.
pub fn check_uqsc(signal: &SwitchingSignal, window: f64) -> Result<bool> {
    check_windows(signal, window, is_quasi_strongly_connected)
}

/// Every window `[t, t + window)` inside the horizon has a strongly connected
/// joint graph.
pub fn check_usc(signal: &SwitchingSignal, window: f64) -> Result<bool> {
    check_windows(signal, window, is_strongly_connected)
}

/// Candidate windows: the dwell time plus every positive gap between two
/// instants of `{0} ∪ switch times ∪ {horizon}`.
fn window_grid(signal: &SwitchingSignal) -> Vec<f64> {
    let mut marks: Vec<f64> = signal.switch_times().to_vec();
    marks.push(signal.horizon());
    let mut grid = vec![signal.tau_d()];
    for (a, &ta) in marks.iter().enumerate() {
        for &tb in &marks[a + 1..] {
            grid.push(tb - ta);
        }
    }
    grid.retain(|&w| w > 0.0 && w <= signal.horizon());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn min_window(
    signal: &SwitchingSignal,
    check: fn(&SwitchingSignal, f64) -> Result<bool>,
) -> Option<f64> {
    let grid = window_grid(signal);
    // Passing is monotone in the window length.
    let passes = |w: f64| check(signal, w).unwrap_or(false);
    if !passes(*grid.last()?) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, grid.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if passes(grid[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(grid[lo])
}

/// Smallest window on the critical grid for which [`check_uqsc`] holds, or
/// `None` if even the full horizon fails.
pub fn min_uqsc_window(signal: &SwitchingSignal) -> Option<f64> {
    min_window(signal, check_uqsc)
}

pub fn min_usc_window(signal: &SwitchingSignal) -> Option<f64> {
    min_window(signal, check_usc)
}

/// Maximal contiguous presence intervals of every arc within `[t1, t2)`.
fn arc_runs(signal: &SwitchingSignal, t1: f64, t2: f64) -> Vec<((usize, usize), f64, f64)> {
    let mut open: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut runs = Vec::new();
    let first = signal.segment_index(t1);
    for seg in signal.segments().skip(first) {
        if seg.start >= t2 {
            break;
        }
        let start = seg.start.max(t1);
        let arcs = signal.graphs()[seg.graph].arcs();
        let ended: Vec<_> = open.keys().filter(|a| !arcs.contains(a)).copied().collect();
        for arc in ended {
            let rs = open.remove(&arc).unwrap();
            runs.push((arc, rs, start));
        }
        for &arc in arcs {
            open.entry(arc).or_insert(start);
        }
    }
    let end = t2.min(signal.horizon());
    runs.extend(open.into_iter().map(|(arc, rs)| (arc, rs, end)));
    runs
}

/// Graph of arcs present contiguously for at least the dwell time within
/// `[t1, t2)`.
pub fn persistent_graph(signal: &SwitchingSignal, t1: f64, t2: f64) -> Result<Digraph> {
    if !(0.0 <= t1 && t1 < t2 && t2 <= signal.horizon()) {
        return domain(format!(
            "interval [{t1}, {t2}) is not inside the signal domain [0, {}]",
            signal.horizon()
        ));
    }
    let eps = slack(signal);
    if t2 - t1 < signal.tau_d() - eps {
        return domain(format!(
            "interval [{t1}, {t2}) is shorter than the dwell time {}",
            signal.tau_d()
        ));
    }
    let arcs = arc_runs(signal, t1, t2)
        .into_iter()
        .filter(|&(_, rs, re)| re - rs >= signal.tau_d() - eps)
        .map(|(arc, _, _)| arc);
    Digraph::new(signal.n(), arcs)
}

/// Centers of the joint graph over `[t1, t2)` restricted to arcs that persist
/// for at least the dwell time inside the interval.
pub fn persistent_centers(signal: &SwitchingSignal, t1: f64, t2: f64) -> Result<BTreeSet<usize>> {
    Ok(find_centers(&persistent_graph(signal, t1, t2)?))
}

/// Partition `0 = T_0 < T_1 < T_2 < ...` of the time axis for bidirectional
/// signals. `boundaries` holds `T_1, T_2, ...` (the implicit `T_0 = 0` is not
/// stored); `complete` is set once at least one window has closed inside the
/// horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcPartition {
    pub boundaries: Vec<f64>,
    pub complete: bool,
    pub horizon: f64,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut v: usize) -> usize {
        while self.0[v] != v {
            self.0[v] = self.0[self.0[v]];
            v = self.0[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

fn require_bidirectional(signal: &SwitchingSignal) -> Result<()> {
    if !signal.all_bidirectional() {
        return precondition("joint-connection partition requires every graph to be bidirectional");
    }
    if signal.n() < 2 {
        return domain("joint-connection partition needs at least two nodes");
    }
    Ok(())
}

/// First instant after `start` at which the arcs that have been present
/// contiguously for the dwell time since `start` span a connected graph.
fn next_boundary(signal: &SwitchingSignal, start: f64) -> Option<f64> {
    let tau = signal.tau_d();
    let eps = slack(signal);
    let mut first: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (arc, rs, re) in arc_runs(signal, start, signal.horizon()) {
        if re - rs >= tau - eps {
            let at = first.entry(arc).or_insert(f64::INFINITY);
            *at = at.min(rs + tau);
        }
    }
    let mut completions: Vec<(f64, (usize, usize))> =
        first.into_iter().map(|(arc, at)| (at, arc)).collect();
    completions.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind((0..signal.n()).collect());
    let mut components = signal.n();
    for (at, (a, b)) in completions {
        if at > signal.horizon() + eps {
            break;
        }
        if uf.union(a, b) {
            components -= 1;
            if components == 1 {
                return Some(at.min(signal.horizon()));
            }
        }
    }
    None
}

/// Greedy construction of the joint-connection partition up to the horizon.
pub fn jc_partition(signal: &SwitchingSignal) -> Result<JcPartition> {
    require_bidirectional(signal)?;
    let mut boundaries = Vec::new();
    let mut start = 0.0;
    while let Some(tk) = next_boundary(signal, start) {
        boundaries.push(tk);
        start = tk;
    }
    Ok(JcPartition {
        complete: !boundaries.is_empty(),
        boundaries,
        horizon: signal.horizon(),
    })
}

/// Finite-horizon surrogate for infinite joint connectivity: the partition
/// closes at least `max(1, min_windows)` windows before the horizon. A `true`
/// result means "consistent with infinite joint connectivity up to the horizon".
pub fn check_ijc(signal: &SwitchingSignal, min_windows: usize) -> Result<bool> {
    let partition = jc_partition(signal)?;
    Ok(partition.complete && partition.boundaries.len() >= min_windows.max(1))
}

/// `J(t) = max{k : t > T_k}`, zero for `t <= T_1`.
pub fn count_j(partition: &JcPartition, t: f64) -> usize {
    partition.boundaries.partition_point(|&b| b < t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one_signal(horizon: f64) -> SwitchingSignal {
        let graphs = vec![
            Digraph::empty(2).unwrap(),
            Digraph::new(2, [(0, 1)]).unwrap(),
        ];
        let mut schedule = vec![(0.0, 0)];
        let mut on = 1.0;
        while on < horizon {
            schedule.push((on, 1));
            if on + 1.0 < horizon {
                schedule.push((on + 1.0, 0));
            }
            on *= 10.0;
        }
        SwitchingSignal::new(graphs, schedule, horizon, 1.0).unwrap()
    }

    #[test]
    fn union_examples() {
        let g = Digraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let constant = SwitchingSignal::constant(g.clone(), 5.0, 1.0).unwrap();
        assert_eq!(union_over(&constant, 1.0, 2.5).unwrap(), g);

        let ex1 = example_one_signal(100.0);
        let u = union_over(&ex1, 0.0, 2.0).unwrap();
        assert_eq!(u.arcs(), &BTreeSet::from([(0, 1)]));
        assert_eq!(union_over(&ex1, 2.0, 10.0).unwrap().arc_count(), 0);

        let alt = SwitchingSignal::new(
            vec![
                Digraph::new(3, [(0, 1)]).unwrap(),
                Digraph::new(3, [(1, 2)]).unwrap(),
            ],
            vec![(0.0, 0), (1.0, 1), (2.0, 0), (3.0, 1)],
            4.0,
            1.0,
        )
        .unwrap();
        assert_eq!(
            union_over(&alt, 0.0, 4.0).unwrap().arcs(),
            &BTreeSet::from([(0, 1), (1, 2)])
        );
        assert!(union_over(&alt, 0.0, 5.0).is_err());
        assert!(union_over(&alt, 2.0, 2.0).is_err());
    }

    #[test]
    fn uqsc_examples() {
        let cycle = Digraph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let s = SwitchingSignal::constant(cycle, 10.0, 1.0).unwrap();
        assert!(check_uqsc(&s, 0.5).unwrap());
        assert!(check_usc(&s, 0.5).unwrap());
        assert!(check_uqsc(&s, 11.0).is_err());

        let ex1 = example_one_signal(100.0);
        assert!(!check_uqsc(&ex1, 1.0).unwrap());

        let star = Digraph::new(3, [(0, 1), (0, 2)]).unwrap();
        let s = SwitchingSignal::constant(star, 10.0, 1.0).unwrap();
        assert!(check_uqsc(&s, 1.0).unwrap());
        assert!(!check_usc(&s, 1.0).unwrap());
    }

    #[test]
    fn alternating_directions_are_jointly_strong() {
        let s = SwitchingSignal::new(
            vec![
                Digraph::new(2, [(0, 1)]).unwrap(),
                Digraph::new(2, [(1, 0)]).unwrap(),
            ],
            (0..10).map(|k| (k as f64, k % 2)).collect(),
            10.0,
            1.0,
        )
        .unwrap();
        assert!(!check_usc(&s, 1.0).unwrap());
        assert!(check_usc(&s, 2.0).unwrap());
        assert_eq!(min_usc_window(&s), Some(2.0));
    }

    #[test]
    fn periodic_spanning_star_rotation() {
        // Arcs 0->1, 0->2, 0->3 held one at a time for 1 time unit each.
        let graphs: Vec<_> = (1..4).map(|i| Digraph::new(4, [(0, i)]).unwrap()).collect();
        let schedule = (0..30).map(|k| (k as f64, k % 3)).collect();
        let s = SwitchingSignal::new(graphs, schedule, 30.0, 1.0).unwrap();
        assert!(check_uqsc(&s, 3.0).unwrap());
        assert!(!check_uqsc(&s, 2.0).unwrap());
        let w = min_uqsc_window(&s).unwrap();
        assert!(w <= 3.0 + 1.0);
        assert_eq!(w, 3.0);
    }

    #[test]
    fn min_window_edge_cases() {
        let star = Digraph::new(3, [(0, 1), (0, 2)]).unwrap();
        let s = SwitchingSignal::constant(star, 10.0, 0.5).unwrap();
        assert_eq!(min_uqsc_window(&s), Some(0.5));
        let s = SwitchingSignal::constant(Digraph::empty(3).unwrap(), 10.0, 0.5).unwrap();
        assert_eq!(min_uqsc_window(&s), None);
    }

    #[test]
    fn partition_of_constant_graph() {
        let g = Digraph::undirected(3, [(0, 1), (1, 2)]).unwrap();
        let s = SwitchingSignal::constant(g, 5.0, 1.0).unwrap();
        let p = jc_partition(&s).unwrap();
        assert_eq!(p.boundaries, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(p.complete);
        assert!(check_ijc(&s, 3).unwrap());
    }

    #[test]
    fn partition_of_bidirectional_example_one() {
        let graphs = vec![
            Digraph::empty(2).unwrap(),
            Digraph::undirected(2, [(0, 1)]).unwrap(),
        ];
        let schedule = vec![
            (0.0, 0),
            (1.0, 1),
            (2.0, 0),
            (10.0, 1),
            (11.0, 0),
            (100.0, 1),
            (101.0, 0),
        ];
        let s = SwitchingSignal::new(graphs, schedule, 150.0, 1.0).unwrap();
        assert_eq!(jc_partition(&s).unwrap().boundaries, vec![2.0, 11.0, 101.0]);
    }

    #[test]
    fn partition_requires_bidirectional_graphs() {
        let g = Digraph::new(2, [(0, 1)]).unwrap();
        let s = SwitchingSignal::constant(g, 5.0, 1.0).unwrap();
        assert!(jc_partition(&s).is_err());
        assert!(check_ijc(&s, 1).is_err());
    }

    #[test]
    fn disconnected_partition_is_empty() {
        let s = SwitchingSignal::constant(Digraph::empty(3).unwrap(), 5.0, 1.0).unwrap();
        let p = jc_partition(&s).unwrap();
        assert!(p.boundaries.is_empty());
        assert!(!p.complete);
        assert!(!check_ijc(&s, 1).unwrap());
    }

    #[test]
    fn arcs_need_contiguous_dwell() {
        let graphs = vec![
            Digraph::undirected(2, [(0, 1)]).unwrap(),
            Digraph::empty(2).unwrap(),
        ];
        let schedule = vec![(0.0, 0), (0.5, 1), (1.0, 0)];
        let s = SwitchingSignal::new(graphs.clone(), schedule, 1.5, 0.5).unwrap();
        let p = jc_partition(&s).unwrap();
        assert_eq!(p.boundaries, vec![0.5, 1.5]);
        // Two 0.5-long presences split by a gap never accrue a contiguous 1.0.
        let schedule = vec![(0.0, 0), (1.0, 1), (2.0, 0)];
        let s = SwitchingSignal::new(graphs, schedule, 2.75, 1.0).unwrap();
        assert_eq!(jc_partition(&s).unwrap().boundaries, vec![1.0]);
    }

    #[test]
    fn j_counts() {
        let p = JcPartition {
            boundaries: vec![1.0, 2.0, 3.0],
            complete: true,
            horizon: 4.0,
        };
        assert_eq!(count_j(&p, 0.5), 0);
        assert_eq!(count_j(&p, 1.0), 0);
        assert_eq!(count_j(&p, 2.5), 2);
        assert_eq!(count_j(&p, 3.0 + 1e-9), 3);
    }

    #[test]
    fn persistent_center_examples() {
        let star = Digraph::new(3, [(0, 1), (0, 2)]).unwrap();
        let s = SwitchingSignal::constant(star, 5.0, 1.0).unwrap();
        assert_eq!(
            persistent_centers(&s, 0.0, 2.0).unwrap(),
            BTreeSet::from([0])
        );
        assert!(persistent_centers(&s, 0.0, 0.5).is_err());

        let empty = SwitchingSignal::constant(Digraph::empty(3).unwrap(), 5.0, 1.0).unwrap();
        assert!(persistent_centers(&empty, 0.0, 2.0).unwrap().is_empty());

        // Rotating star hub: 0 then 1, each configuration held for 1.
        let graphs = vec![
            Digraph::new(3, [(0, 1), (0, 2)]).unwrap(),
            Digraph::new(3, [(1, 0), (1, 2)]).unwrap(),
        ];
        let s = SwitchingSignal::new(graphs, vec![(0.0, 0), (1.0, 1)], 2.0, 1.0).unwrap();
        assert_eq!(
            persistent_centers(&s, 0.0, 2.0).unwrap(),
            BTreeSet::from([0, 1])
        );
        // Only half of the second configuration lies in [0.5, 1.5).
        assert!(persistent_centers(&s, 0.5, 1.5).unwrap().is_empty());
    }
}
