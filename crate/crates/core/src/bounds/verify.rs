use serde::{Deserialize, Serialize};

use super::{
    floor_snap, grc_bound, partition_edge, period_edge, BidirCertificate, GrcCertificate, KernelSum,
};
use crate::dynamics::{DisturbanceSpec, Trajectory};
use crate::error::{precondition, Result};

/// Additive tolerance for the integrated max/min envelopes.
pub const ENVELOPE_TOLERANCE: f64 = 1e-4;
/// Largest number of samples kept for the all-pairs envelope check.
const ENVELOPE_GRID: usize = 256;

/// `max_i x_i - min_i x_i`
pub fn spread(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// Per-sample extremes and spread of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusMetrics {
    pub times: Vec<f64>,
    pub max: Vec<f64>,
    pub min: Vec<f64>,
    pub spread: Vec<f64>,
}

pub fn metrics(traj: &Trajectory) -> ConsensusMetrics {
    let mut m = ConsensusMetrics {
        times: traj.times.clone(),
        max: Vec::with_capacity(traj.len()),
        min: Vec::with_capacity(traj.len()),
        spread: Vec::with_capacity(traj.len()),
    };
    for x in &traj.states {
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        m.max.push(hi);
        m.min.push(lo);
        m.spread.push(hi - lo);
    }
    m
}

/// First sample time at which `H(x(t)) / H(x(t0)) <= eps`.
pub fn convergence_time(traj: &Trajectory, eps: f64) -> Result<Option<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return precondition(format!("eps must lie in (0, 1), got {eps}"));
    }
    let h0 = spread(&traj.echo.x0);
    if h0 == 0.0 {
        return precondition("initial state is already at consensus");
    }
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .find(|(_, x)| spread(x) / h0 <= eps)
        .map(|(t, _)| *t))
}

/// `int_{t0}^{t} |w|` on the sample grid, extended between samples by
/// direct quadrature.
#[derive(Debug, Clone)]
pub struct NoiseIntegral<'a> {
    w: &'a DisturbanceSpec,
    times: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> NoiseIntegral<'a> {
    pub fn new(w: &'a DisturbanceSpec, times: &[f64]) -> Self {
        let mut cumulative = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for p in times.windows(2) {
            acc += w.l1_norm(p[0], p[1]);
            cumulative.push(acc);
        }
        NoiseIntegral {
            w,
            times: times.to_vec(),
            cumulative,
        }
    }

    /// Integral from the first sample to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        self.cumulative[k] + self.w.l1_norm(self.times[k], t)
    }

    pub fn between(&self, a: f64, b: f64) -> f64 {
        self.at(b) - self.at(a)
    }

    /// Integral up to the sample with index `k`.
    pub fn at_sample(&self, k: usize) -> f64 {
        self.cumulative[k]
    }
}

/// One sample at which a bound was exceeded beyond tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of checking `H(x(t)) <= bound(t) + tolerance` at every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: String,
    pub samples: usize,
    pub tolerance: f64,
    /// Largest `lhs - rhs` seen; negative when the bound holds with room.
    pub worst_margin: f64,
    pub violations: Vec<Violation>,
}

impl BoundReport {
    fn new(bound: &str, tolerance: f64) -> Self {
        BoundReport {
            bound: bound.to_string(),
            samples: 0,
            tolerance,
            worst_margin: f64::NEG_INFINITY,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, time: f64, lhs: f64, rhs: f64) {
        self.samples += 1;
        self.worst_margin = self.worst_margin.max(lhs - rhs);
        if !(lhs <= rhs + self.tolerance) {
            self.violations.push(Violation { time, lhs, rhs });
        }
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `1e-6 max(1, H0) + 10 step^4`
pub fn bound_tolerance(h0: f64, step: f64) -> f64 {
    1e-6 * h0.max(1.0) + 10.0 * step.powi(4)
}

fn spreads(traj: &Trajectory) -> impl Iterator<Item = (f64, f64)> + '_ {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, x)| (*t, spread(x)))
}

/// Checks the sup-norm bound at every sample, measuring time from `t0` and
/// taking `||w||_inf` over the trajectory's time span.
pub fn verify_grc(traj: &Trajectory, cert: &GrcCertificate, w: &DisturbanceSpec) -> BoundReport {
    let h0 = spread(&traj.echo.x0);
    let t0 = traj.t0();
    let end = traj.times.last().copied().unwrap_or(t0);
    let w_inf = w.sup_norm(t0, end);
    let mut report = BoundReport::new("grc", bound_tolerance(h0, traj.echo.step));
    for (t, h) in spreads(traj) {
        report.check(t, h, grc_bound(cert, h0, t - t0, w_inf));
    }
    report
}

/// Plain and sharpened integral bounds checked side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GircReport {
    pub plain: BoundReport,
    pub sharpened: BoundReport,
    /// Samples at which the sharpened bound exceeded the plain one.
    pub sharpened_above_plain: usize,
}

impl GircReport {
    pub fn ok(&self) -> bool {
        self.plain.ok() && self.sharpened.ok() && self.sharpened_above_plain == 0
    }
}

pub fn verify_girc(traj: &Trajectory, cert: &GrcCertificate, w: &DisturbanceSpec) -> GircReport {
    let h0 = spread(&traj.echo.x0);
    let t0 = traj.t0();
    let tol = bound_tolerance(h0, traj.echo.step);
    let noise = NoiseIntegral::new(w, &traj.times);
    let gain = 4.0 * cert.d0 as f64 + 1.0;
    let mut kernel = KernelSum::new(cert.ln_one_minus_xi());
    let mut plain = BoundReport::new("girc", tol);
    let mut sharpened = BoundReport::new("girc_sharpened", tol);
    let mut above = 0;
    for (k, (t, h)) in spreads(traj).enumerate() {
        let s = t - t0;
        let beta = cert.decay(s) * h0;
        let p = beta + gain * noise.at_sample(k);
        let n = floor_snap(s / cert.k0) as usize;
        let q = beta
            + gain
                * kernel.at(n, s, period_edge(cert.k0), |a, b| {
                    noise.between(t0 + a, t0 + b)
                });
        if q > p * (1.0 + 1e-12) + 1e-15 {
            above += 1;
        }
        plain.check(t, h, p);
        sharpened.check(t, h, q);
    }
    GircReport {
        plain,
        sharpened,
        sharpened_above_plain: above,
    }
}

/// Checks the bidirectional integral bound at every sample. The partition is
/// anchored at absolute time zero, so the trajectory must start there.
pub fn verify_bidir_girc(
    traj: &Trajectory,
    cert: &BidirCertificate,
    w: &DisturbanceSpec,
) -> Result<BoundReport> {
    if traj.t0() != 0.0 {
        return precondition("the joint-connection partition is anchored at t = 0");
    }
    if let Some(&end) = traj.times.last() {
        if end > cert.partition.horizon {
            return precondition(format!(
                "trajectory ends at {end}, beyond the partition horizon {}",
                cert.partition.horizon
            ));
        }
    }
    let h0 = spread(&traj.echo.x0);
    let noise = NoiseIntegral::new(w, &traj.times);
    let mut kernel = KernelSum::new(cert.ln_one_minus_eta());
    let mut report = BoundReport::new("bidir_girc", bound_tolerance(h0, traj.echo.step));
    for (t, h) in spreads(traj) {
        let n = cert.j(t) / cert.d0;
        let sum = kernel.at(n, t, partition_edge(cert), |a, b| noise.between(a, b));
        report.check(t, h, cert.decay(t) * h0 + cert.gain * sum);
    }
    Ok(report)
}

/// A sample pair at which an extreme moved further than the disturbance allows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeViolation {
    pub start: f64,
    pub end: f64,
    /// `true` for the maximum, `false` for the minimum.
    pub upper: bool,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniReport {
    pub pairs: usize,
    pub tolerance: f64,
    pub violations: Vec<EnvelopeViolation>,
}

impl DiniReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Integrated envelopes `max x(t) <= max x(s) + int_s^t |w|` and
/// `min x(t) >= min x(s) - int_s^t |w|`, checked on consecutive samples and on
/// all pairs of a decimated grid.
pub fn verify_dini_envelopes(traj: &Trajectory, w: &DisturbanceSpec) -> DiniReport {
    let m = metrics(traj);
    let noise = NoiseIntegral::new(w, &traj.times);
    let mut report = DiniReport {
        pairs: 0,
        tolerance: ENVELOPE_TOLERANCE,
        violations: Vec::new(),
    };
    let mut check = |a: usize, b: usize| {
        report.pairs += 1;
        let budget = noise.at_sample(b) - noise.at_sample(a);
        let up = m.max[b] - m.max[a] - budget;
        let down = m.min[a] - m.min[b] - budget;
        for (upper, excess) in [(true, up), (false, down)] {
            if excess > ENVELOPE_TOLERANCE {
                report.violations.push(EnvelopeViolation {
                    start: m.times[a],
                    end: m.times[b],
                    upper,
                    excess,
                });
            }
        }
    };
    for k in 1..m.times.len() {
        check(k - 1, k);
    }
    let stride = m.times.len().div_ceil(ENVELOPE_GRID).max(1);
    let grid: Vec<usize> = (0..m.times.len()).step_by(stride).collect();
    for (i, &a) in grid.iter().enumerate() {
        for &b in &grid[i + 1..] {
            check(a, b);
        }
    }
    report
}
