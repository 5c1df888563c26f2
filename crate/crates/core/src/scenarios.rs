//! Scenario documents and generators: the two-node intermittent link, the
//! split-network counterexample, randomized uniformly quasi-strongly connected
//! signals and sparse jointly connected bidirectional signals.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{bidir_certificate, grc_certificate, BidirCertificate, GrcCertificate};
use crate::dynamics::{DisturbanceClass, DisturbanceKind, DisturbanceSpec, WeightFn, WeightSpec};
use crate::error::{domain, precondition, Error, Result};
use crate::event_triggered::EtConfig;
use crate::graph::{
    check_ijc, check_uqsc, check_usc, generalized_diameter, jc_partition, union_over, Digraph,
    SwitchingSignal,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Range of the per-arc constant weights drawn by [`random_uqsc`]; the
/// declared bounds cover the whole range so they do not depend on the seed.
pub const GAIN_RANGE: (f64, f64) = (0.5, 2.0);

/// Connectivity property a scenario claims, with the parameter its
/// construction guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Guarantee {
    Uqsc { window: f64 },
    Usc { window: f64 },
    Ijc { min_windows: usize },
    None,
}

impl Guarantee {
    /// Re-checks the claim with the graph-module checker.
    pub fn holds(&self, signal: &SwitchingSignal) -> Result<bool> {
        match *self {
            Guarantee::Uqsc { window } => check_uqsc(signal, window),
            Guarantee::Usc { window } => check_usc(signal, window),
            Guarantee::Ijc { min_windows } => check_ijc(signal, min_windows),
            Guarantee::None => Ok(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDocument", into = "ScenarioDocument")]
pub struct Scenario {
    pub name: String,
    pub signal: SwitchingSignal,
    pub weights: WeightSpec,
    pub disturbance: DisturbanceSpec,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub horizon: f64,
    pub guarantees: Vec<Guarantee>,
    pub seed: Option<u64>,
    pub event_triggered: Option<EtConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    schema_version: u32,
    #[serde(default)]
    name: String,
    signal: SwitchingSignal,
    weights: WeightSpec,
    #[serde(default = "DisturbanceSpec::zero")]
    disturbance: DisturbanceSpec,
    x0: Vec<f64>,
    #[serde(default)]
    t0: f64,
    horizon: f64,
    #[serde(default)]
    guarantees: Vec<Guarantee>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event_triggered: Option<EtConfig>,
}

impl TryFrom<ScenarioDocument> for Scenario {
    type Error = Error;

    fn try_from(doc: ScenarioDocument) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "schema_version: unsupported version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        let scenario = Scenario {
            name: doc.name,
            signal: doc.signal,
            weights: doc.weights,
            disturbance: doc.disturbance,
            x0: doc.x0,
            t0: doc.t0,
            horizon: doc.horizon,
            guarantees: doc.guarantees,
            seed: doc.seed,
            event_triggered: doc.event_triggered,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<Scenario> for ScenarioDocument {
    fn from(s: Scenario) -> Self {
        ScenarioDocument {
            schema_version: SCHEMA_VERSION,
            name: s.name,
            signal: s.signal,
            weights: s.weights,
            disturbance: s.disturbance,
            x0: s.x0,
            t0: s.t0,
            horizon: s.horizon,
            guarantees: s.guarantees,
            seed: s.seed,
            event_triggered: s.event_triggered,
        }
    }
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.signal.n()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes to JSON")
    }

    /// Checks dimensions, specs and every declared guarantee.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.x0.len() != n {
            return domain(format!("x0 has {} entries for {n} agents", self.x0.len()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return domain("x0 must be finite");
        }
        self.weights.validate()?;
        self.disturbance.validate(n)?;
        if let Some(et) = &self.event_triggered {
            et.validate()?;
        }
        if !(self.t0 >= 0.0 && self.t0 < self.horizon && self.horizon <= self.signal.horizon()) {
            return domain(format!(
                "need 0 <= t0 < horizon <= signal horizon, got t0 = {}, horizon = {}, signal horizon = {}",
                self.t0,
                self.horizon,
                self.signal.horizon()
            ));
        }
        self.verify_guarantees()
    }

    pub fn verify_guarantees(&self) -> Result<()> {
        for g in &self.guarantees {
            if !g.holds(&self.signal)? {
                return precondition(format!("declared guarantee {g:?} does not hold"));
            }
        }
        Ok(())
    }

    pub fn with_disturbance(mut self, w: DisturbanceSpec) -> Self {
        self.disturbance = w;
        self
    }

    /// Generalized diameter of the joint graph over the whole horizon.
    pub fn joint_diameter(&self) -> Result<usize> {
        let joint = union_over(&self.signal, 0.0, self.signal.horizon())?;
        Ok(generalized_diameter(&joint)?.max(1))
    }

    /// Window of the first declared UQSC or USC guarantee.
    pub fn declared_window(&self) -> Option<f64> {
        self.guarantees.iter().find_map(|g| match *g {
            Guarantee::Uqsc { window } | Guarantee::Usc { window } => Some(window),
            _ => None,
        })
    }

    /// Certificate for the given window (or the declared one) using the joint
    /// diameter and the declared weight bounds.
    pub fn grc_certificate(&self, window: Option<f64>) -> Result<GrcCertificate> {
        let Some(window) = window.or(self.declared_window()) else {
            return precondition("no window given and the scenario declares none");
        };
        grc_certificate(
            self.n(),
            self.joint_diameter()?,
            window,
            self.signal.tau_d(),
            self.weights.a_low,
            self.weights.a_high,
        )
    }

    pub fn bidir_certificate(&self) -> Result<BidirCertificate> {
        bidir_certificate(
            self.n(),
            self.joint_diameter()?,
            self.weights.a_low,
            self.weights.a_high,
            jc_partition(&self.signal)?,
        )
    }
}

/// Two nodes; node 1 feeds node 2 only on `[10^k, 10^k + 1)`.
pub fn example_one(horizon: f64) -> Result<Scenario> {
    if !(horizon >= 2.0 && horizon.is_finite()) {
        return domain(format!("horizon must be at least 2, got {horizon}"));
    }
    let graphs = vec![Digraph::empty(2)?, Digraph::new(2, [(0, 1)])?];
    let mut schedule = vec![(0.0, 0)];
    let mut on = 1.0;
    while on < horizon {
        schedule.push((on, 1));
        if on + 1.0 < horizon {
            schedule.push((on + 1.0, 0));
        }
        on *= 10.0;
    }
    let signal = SwitchingSignal::new(graphs, schedule, horizon, 1.0)?;
    let scenario = Scenario {
        name: "example_one".into(),
        signal,
        weights: WeightSpec::constant(1.0, 1.0),
        disturbance: DisturbanceSpec::zero(),
        x0: vec![1.0, 0.0],
        t0: 0.0,
        horizon,
        guarantees: vec![Guarantee::None],
        seed: None,
        event_triggered: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Two disjoint cliques, the first holding `ceil(N/2)` nodes; the second is
/// pushed by a unit disturbance from a consensus state at zero.
pub fn necessity_counterexample(n: usize, t_star: f64) -> Result<Scenario> {
    if n < 2 || !(t_star > 0.0 && t_star.is_finite()) {
        return domain(format!(
            "need N >= 2 and T_star > 0, got N = {n}, T_star = {t_star}"
        ));
    }
    let split = n.div_ceil(2);
    let clique = |nodes: std::ops::Range<usize>| {
        let nodes: Vec<usize> = nodes.collect();
        nodes
            .iter()
            .flat_map(|&a| nodes.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect::<Vec<_>>()
    };
    let arcs = clique(0..split).into_iter().chain(clique(split..n));
    let tau_d = t_star.min(1.0);
    let signal = SwitchingSignal::constant(Digraph::new(n, arcs)?, t_star, tau_d)?;
    let values = (0..n).map(|i| if i < split { 0.0 } else { 1.0 }).collect();
    let scenario = Scenario {
        name: "necessity_counterexample".into(),
        signal,
        weights: WeightSpec::constant(1.0, tau_d),
        disturbance: DisturbanceSpec::from(DisturbanceKind::Constant { values })
            .with_classes([DisturbanceClass::F]),
        x0: vec![0.0; n],
        t0: 0.0,
        horizon: t_star,
        guarantees: vec![Guarantee::None],
        seed: None,
        event_triggered: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Random spanning tree on `n` nodes as arcs `(parent, child)` away from a
/// random root.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    (1..n)
        .map(|k| (order[rng.gen_range(0..k)], order[k]))
        .collect()
}

fn random_x0(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Cycles through the arcs of a random spanning arborescence, one arc at a
/// time, each held for a random duration in `[tau_d, T/N]`. Every window of
/// length `T` meets at least `N` consecutive slots and hence every arc.
pub fn random_uqsc(n: usize, window: f64, tau_d: f64, horizon: f64, seed: u64) -> Result<Scenario> {
    if n < 2 {
        return domain(format!("need N >= 2, got {n}"));
    }
    if !(tau_d > 0.0 && window >= n as f64 * tau_d && window.is_finite()) {
        return domain(format!(
            "need T >= N tau_d > 0, got T = {window}, N = {n}, tau_d = {tau_d}"
        ));
    }
    if !(horizon >= window && horizon.is_finite()) {
        return domain(format!(
            "horizon {horizon} is shorter than the window {window}"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(n, &mut rng);
    let graphs = tree
        .iter()
        .map(|&arc| Digraph::new(n, [arc]))
        .collect::<Result<Vec<_>>>()?;
    let gains: Vec<f64> = tree
        .iter()
        .map(|_| rng.gen_range(GAIN_RANGE.0..GAIN_RANGE.1))
        .collect();
    let slot_max = window / n as f64;
    let mut schedule = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        schedule.push((t, schedule.len() % graphs.len()));
        t += if slot_max > tau_d {
            rng.gen_range(tau_d..=slot_max)
        } else {
            tau_d
        };
    }
    let signal = SwitchingSignal::new(graphs, schedule, horizon, tau_d)?;
    let overrides: BTreeMap<(usize, usize), WeightFn> = tree
        .iter()
        .zip(&gains)
        .map(|(&arc, &value)| (arc, WeightFn::Constant { value }))
        .collect();
    let weights = WeightSpec {
        default: WeightFn::Constant { value: gains[0] },
        overrides,
        a_low: GAIN_RANGE.0 * tau_d,
        a_high: GAIN_RANGE.1 * tau_d,
    };
    let scenario = Scenario {
        name: "random_uqsc".into(),
        signal,
        weights,
        disturbance: DisturbanceSpec::zero(),
        x0: random_x0(n, &mut rng),
        t0: 0.0,
        horizon,
        guarantees: vec![Guarantee::Uqsc { window }],
        seed: Some(seed),
        event_triggered: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// A random undirected spanning tree shown one edge per dwell slot during
/// appearance windows `[s_k, s_k + N tau_d)`, the last slot of each window
/// empty. Windows start `2 N tau_d` apart and the gap grows by `gap_growth`.
pub fn sparse_ijc(
    n: usize,
    gap_growth: f64,
    tau_d: f64,
    horizon: f64,
    seed: u64,
) -> Result<Scenario> {
    if n < 2 {
        return domain(format!("need N >= 2, got {n}"));
    }
    if !(gap_growth >= 1.0 && gap_growth.is_finite() && tau_d > 0.0 && tau_d.is_finite()) {
        return domain(format!(
            "need gap_growth >= 1 and tau_d > 0, got {gap_growth} and {tau_d}"
        ));
    }
    let span = n as f64 * tau_d;
    if !(horizon >= span && horizon.is_finite()) {
        return domain(format!(
            "horizon {horizon} holds no appearance window of length {span}"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(n, &mut rng);
    let mut graphs = vec![Digraph::empty(n)?];
    for &edge in &tree {
        graphs.push(Digraph::undirected(n, [edge])?);
    }
    let mut schedule = Vec::new();
    let mut start = 0.0;
    let mut gap = 2.0 * span;
    let mut windows = 0;
    while start + span <= horizon {
        for k in 0..tree.len() {
            schedule.push((start + k as f64 * tau_d, k + 1));
        }
        schedule.push((start + tree.len() as f64 * tau_d, 0));
        windows += 1;
        start += gap;
        gap *= gap_growth;
    }
    let signal = SwitchingSignal::new(graphs, schedule, horizon, tau_d)?;
    let scenario = Scenario {
        name: "sparse_ijc".into(),
        signal,
        weights: WeightSpec::constant(1.0, tau_d),
        disturbance: DisturbanceSpec::zero(),
        x0: random_x0(n, &mut rng),
        t0: 0.0,
        horizon,
        guarantees: vec![Guarantee::Ijc {
            min_windows: windows,
        }],
        seed: Some(seed),
        event_triggered: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Sinusoidal noise with amplitudes up to `amplitude` and random frequencies
/// and phases.
pub fn bounded_noise(n: usize, amplitude: f64, seed: u64) -> DisturbanceSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>();
    let amplitude = draw(-amplitude, amplitude);
    let frequency = draw(0.2, 3.0);
    let phase = draw(0.0, std::f64::consts::TAU);
    DisturbanceSpec::from(DisturbanceKind::Sinusoid {
        amplitude,
        frequency,
        phase,
    })
    .with_classes([DisturbanceClass::F])
}

/// `c_i (1 + t)^{-2}` with `|c_i| <= amplitude`: bounded, vanishing and
/// integrable.
pub fn integrable_noise(n: usize, amplitude: f64, seed: u64) -> DisturbanceSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitude = (0..n)
        .map(|_| rng.gen_range(-amplitude..amplitude))
        .collect();
    DisturbanceSpec::from(DisturbanceKind::IntegrableDecay {
        amplitude,
        power: 2.0,
    })
    .with_classes([
        DisturbanceClass::F,
        DisturbanceClass::F1,
        DisturbanceClass::F2,
    ])
}
