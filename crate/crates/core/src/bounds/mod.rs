//! Certificate constants, the robust-consensus bounds built from them, and
//! their verification against simulated trajectories.

mod certificate;
mod verify;

pub use certificate::{bidir_certificate, grc_certificate, BidirCertificate, GrcCertificate};
pub use verify::{
    bound_tolerance, convergence_time, metrics, spread, verify_bidir_girc, verify_dini_envelopes,
    verify_girc, verify_grc, BoundReport, ConsensusMetrics, DiniReport, EnvelopeViolation,
    GircReport, NoiseIntegral, Violation, ENVELOPE_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::DisturbanceSpec;
use crate::error::{domain, precondition, Result};

/// Relative slack used when rounding ratios that should be integers.
const SNAP: f64 = 1e-9;

pub(crate) fn floor_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

pub(crate) fn ceil_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `ln(e^a + e^b)`
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY || lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(-ln(1 - x))` from `ln x`, accurate when `x` underflows.
pub(crate) fn ln_neg_ln_1m(ln_x: f64) -> f64 {
    if ln_x < -30.0 {
        let x = ln_x.exp();
        ln_x + (0.5 * x).ln_1p()
    } else {
        (-(-ln_x.exp()).ln_1p()).ln()
    }
}

/// Connectivity regime a convergence-time bound is derived for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    Uqsc,
    Usc,
}

/// `(1 - xi)^{floor(t/K0)} H0 + g ||w||_inf`
pub fn grc_bound(cert: &GrcCertificate, h0: f64, t: f64, w_inf: f64) -> f64 {
    let gamma = if w_inf == 0.0 {
        0.0
    } else {
        (cert.ln_gamma_gain + w_inf.ln()).exp()
    };
    cert.decay(t) * h0 + gamma
}

/// Smoothed zero-noise form `(1 - xi)^{-1} e^{-lambda0 t} H0`.
pub fn grc_bound_smoothed(cert: &GrcCertificate, h0: f64, t: f64) -> f64 {
    let rate = if t == 0.0 {
        0.0
    } else {
        (cert.ln_lambda0 + t.ln()).exp()
    };
    (-cert.ln_one_minus_xi() - rate).exp() * h0
}

/// `(1 - xi)^{floor(t/K0)} H0 + (4 d0 + 1) int_0^t |w|`
pub fn girc_bound(cert: &GrcCertificate, h0: f64, t: f64, w: &DisturbanceSpec) -> f64 {
    cert.decay(t) * h0 + (4.0 * cert.d0 as f64 + 1.0) * w.l1_norm(0.0, t)
}

/// Weighted kernel `sum_c q^{max(0, n - c)} int_{bucket c} |w|` over buckets
/// `(edge(c), edge(c + 1)]` clipped to `[0, t]`. Queries must come with
/// non-decreasing `t`; completed buckets are accumulated once.
pub(crate) struct KernelSum {
    ln_q: f64,
    /// `prefix[m] = sum_{c <= m} q^{m - c} B_c` over completed buckets.
    prefix: Vec<f64>,
}

impl KernelSum {
    pub(crate) fn new(ln_q: f64) -> Self {
        KernelSum {
            ln_q,
            prefix: Vec::new(),
        }
    }

    /// `integral(a, b)` integrates `|w|` over `[a, b]`.
    pub(crate) fn at(
        &mut self,
        n: usize,
        t: f64,
        edge: impl Fn(usize) -> f64,
        integral: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        let q = self.ln_q.exp();
        let pow = |k: usize| (k as f64 * self.ln_q).exp();
        while edge(self.prefix.len() + 1) <= t {
            let c = self.prefix.len();
            let b = integral(edge(c), edge(c + 1));
            let prev = self.prefix.last().map_or(0.0, |p| p * q);
            self.prefix.push(prev + b);
        }
        let full = self.prefix.len();
        let mut sum = 0.0;
        if full > 0 {
            let m = n.min(full - 1);
            sum += pow(n - m) * self.prefix[m];
            if n + 1 < full {
                sum += integral(edge(n + 1), edge(full));
            }
        }
        if edge(full) < t {
            sum += pow(n.saturating_sub(full)) * integral(edge(full), t);
        }
        sum
    }
}

/// Bucket edges for the period-based kernel: bucket `c >= 1` is
/// `((c - 1) K0, c K0]`, bucket 0 is empty.
pub(crate) fn period_edge(k0: f64) -> impl Fn(usize) -> f64 {
    move |c| c.saturating_sub(1) as f64 * k0
}

/// Sharpened form with the kernel `(1 - xi)^{max(0, floor(t/K0) - ceil(s/K0))}`
/// inside the disturbance integral.
pub fn girc_bound_sharpened(cert: &GrcCertificate, h0: f64, t: f64, w: &DisturbanceSpec) -> f64 {
    let n = floor_snap(t / cert.k0) as usize;
    let mut kernel = KernelSum::new(cert.ln_one_minus_xi());
    let sum = kernel.at(n, t, period_edge(cert.k0), |a, b| w.l1_norm(a, b));
    cert.decay(t) * h0 + (4.0 * cert.d0 as f64 + 1.0) * sum
}

/// Bucket edges for the partition-based kernel: bucket 0 is `(0, T_1]` and
/// bucket `c >= 1` is `(T_{(c-1) d0 + 1}, T_{c d0 + 1}]`.
pub(crate) fn partition_edge(cert: &BidirCertificate) -> impl Fn(usize) -> f64 + '_ {
    move |c| {
        if c == 0 {
            return 0.0;
        }
        let k = (c - 1) * cert.d0 + 1;
        cert.partition
            .boundaries
            .get(k - 1)
            .copied()
            .unwrap_or(f64::INFINITY)
    }
}

/// `(1 - eta)^{floor(J(t)/d0)} H0
///  + (3 d0 + 1) int_0^t (1 - eta)^{max(0, floor(J(t)/d0) - ceil(J(s)/d0))} |w(s)| ds`
pub fn bidir_girc_bound(
    cert: &BidirCertificate,
    h0: f64,
    t: f64,
    w: &DisturbanceSpec,
) -> Result<f64> {
    if t > cert.partition.horizon {
        return domain(format!(
            "t = {t} is beyond the partition horizon {}",
            cert.partition.horizon
        ));
    }
    let n = cert.j(t) / cert.d0;
    let mut kernel = KernelSum::new(cert.ln_one_minus_eta());
    let sum = kernel.at(n, t, partition_edge(cert), |a, b| w.l1_norm(a, b));
    Ok(cert.decay(t) * h0 + cert.gain * sum)
}

/// Zero-noise smoothed form `(1 - eta)^{-1} e^{-ln(1/(1-eta)) J(t) / d0} H0`.
pub fn bidir_smoothed(cert: &BidirCertificate, h0: f64, t: f64) -> f64 {
    let l = -cert.ln_one_minus_eta();
    (l - l * cert.j(t) as f64 / cert.d0 as f64).exp() * h0
}

/// `ln` of the time after which the zero-noise spread ratio is at most `eps`.
pub fn ln_convergence_time_bound(
    cert: &GrcCertificate,
    eps: f64,
    mode: ConvergenceMode,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return precondition(format!("eps must lie in (0, 1), got {eps}"));
    }
    let (xi, ln_lambda) = match mode {
        ConvergenceMode::Uqsc => (cert.xi, cert.ln_lambda0),
        ConvergenceMode::Usc => (cert.xi_star, cert.ln_lambda_star),
    };
    let numerator = -(-xi).ln_1p() - eps.ln();
    Ok(numerator.ln() - ln_lambda)
}

/// `ln(((1 - xi) eps)^{-1}) / lambda` with the mode's rate; may be `inf`.
pub fn convergence_time_bound(
    cert: &GrcCertificate,
    eps: f64,
    mode: ConvergenceMode,
) -> Result<f64> {
    ln_convergence_time_bound(cert, eps, mode).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DisturbanceKind;
    use crate::graph::JcPartition;

    fn unit_pair() -> GrcCertificate {
        grc_certificate(2, 1, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn snapping_absorbs_rounding() {
        assert_eq!(floor_snap(0.3 / 0.1), 3.0);
        assert_eq!(ceil_snap(0.7 / 0.1), 7.0);
        assert_eq!(floor_snap(2.5), 2.0);
        assert_eq!(ceil_snap(2.5), 3.0);
    }

    #[test]
    fn log_helpers() {
        assert!((ln_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(ln_add_exp(f64::INFINITY, 1.0), f64::INFINITY);
        let x: f64 = 1e-3;
        assert!((ln_neg_ln_1m(x.ln()) - (-(1.0 - x).ln()).ln()).abs() < 1e-12);
        assert!((ln_neg_ln_1m(-800.0) + 800.0).abs() < 1e-12);
    }

    #[test]
    fn grc_bound_examples() {
        let c = unit_pair();
        assert_eq!(grc_bound(&c, 1.0, 0.0, 0.0), 1.0);
        assert!((grc_bound(&c, 0.0, 5.0, 0.1) - c.gamma_gain * 0.1).abs() < 1e-12 * c.gamma_gain);
        let expect = (1.0 - c.xi).powi(3);
        assert!((grc_bound(&c, 1.0, 9.0, 0.0) - expect).abs() < 1e-15);
        assert!((expect - 0.997653).abs() < 2e-6);
        assert!(grc_bound_smoothed(&c, 1.0, 9.0) >= grc_bound(&c, 1.0, 9.0, 0.0));
    }

    #[test]
    fn girc_forms() {
        let c = unit_pair();
        let zero = DisturbanceSpec::zero();
        assert_eq!(girc_bound(&c, 2.0, 7.0, &zero), 2.0 * c.decay(7.0));
        let w: DisturbanceSpec = DisturbanceKind::Constant {
            values: vec![0.0, 0.5],
        }
        .into();
        let plain = girc_bound(&c, 1.0, 7.0, &w);
        assert!((plain - (c.decay(7.0) + 5.0 * 0.5 * 7.0)).abs() < 1e-9);
        let q = 1.0 - c.xi;
        // Buckets (0,3] and (3,6] settled with exponents 1 and 0, (6,7] open.
        let sharp = c.decay(7.0) + 5.0 * 0.5 * (3.0 * q + 3.0 + 1.0);
        assert!((girc_bound_sharpened(&c, 1.0, 7.0, &w) - sharp).abs() < 1e-9);
        for t in [0.5, 3.0, 4.2, 9.0, 20.0] {
            assert!(girc_bound_sharpened(&c, 1.0, t, &w) <= girc_bound(&c, 1.0, t, &w) + 1e-12);
        }
    }

    #[test]
    fn bidirectional_forms() {
        let partition = JcPartition {
            boundaries: vec![1.0, 2.0, 3.0, 4.0],
            complete: true,
            horizon: 5.0,
        };
        let c = bidir_certificate(2, 1, 1.0, 1.0, partition).unwrap();
        let zero = DisturbanceSpec::zero();
        assert_eq!(bidir_girc_bound(&c, 1.0, 0.5, &zero).unwrap(), 1.0);
        let q = 1.0 - c.eta_star;
        assert!((bidir_girc_bound(&c, 1.0, 3.5, &zero).unwrap() - q.powi(3)).abs() < 1e-15);
        assert!(bidir_girc_bound(&c, 1.0, 6.0, &zero).is_err());
        let w: DisturbanceSpec = DisturbanceKind::Constant {
            values: vec![1.0, 0.0],
        }
        .into();
        // J(2.5) = 2: buckets (0,1], (1,2], (2,3] with exponents 2, 1, 0.
        let expect = q * q + 4.0 * (q * q + q + 0.5);
        assert!((bidir_girc_bound(&c, 1.0, 2.5, &w).unwrap() - expect).abs() < 1e-9);
        let mut last = f64::INFINITY;
        for t in [0.5, 1.5, 2.5, 3.5, 4.5] {
            let v = bidir_smoothed(&c, 1.0, t);
            assert!(v <= last && v >= c.decay(t));
            last = v;
        }
    }

    #[test]
    fn convergence_time_bound_examples() {
        let c = unit_pair();
        let b = convergence_time_bound(&c, 0.5, ConvergenceMode::Uqsc).unwrap();
        let direct = (1.0 / ((1.0 - c.xi) * 0.5)).ln() / c.lambda0;
        assert!((b - direct).abs() < 1e-9 * direct);
        assert!((b - 2656.0).abs() < 1.0, "{b}");
        let tighter = convergence_time_bound(&c, 0.1, ConvergenceMode::Uqsc).unwrap();
        assert!(tighter > b);
        assert!(convergence_time_bound(&c, 1.0, ConvergenceMode::Uqsc).is_err());
        assert!(convergence_time_bound(&c, 0.5, ConvergenceMode::Usc)
            .unwrap()
            .is_finite());
    }
}
