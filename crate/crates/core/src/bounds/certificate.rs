use serde::{Deserialize, Serialize};

use super::{ceil_snap, floor_snap, ln_add_exp, ln_neg_ln_1m};
use crate::error::{domain, Result};
use crate::graph::{count_j, JcPartition};

/// Constants of the robust-consensus certificate for uniformly jointly
/// quasi-strongly connected signals, plus the strongly connected variant.
///
/// `xi` underflows to zero for moderately large networks, so every constant
/// that can leave the `f64` range is also kept as a natural logarithm and all
/// bound evaluations go through the logarithmic fields. Value fields may then
/// read `0` or `inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrcCertificate {
    pub n: usize,
    pub d0: usize,
    pub window: f64,
    pub tau_d: f64,
    pub a_low: f64,
    pub a_high: f64,
    /// `T + 2 tau_d`
    pub t_hat: f64,
    /// `((d0 - 1) N + 1) t_hat`
    pub k0: f64,
    pub ceil_k0_over_tau: f64,
    /// `e^{-(N-2) a_high} (1 - e^{-a_low})`
    pub zeta: f64,
    pub xi: f64,
    pub ln_xi: f64,
    pub lambda0: f64,
    pub ln_lambda0: f64,
    /// Linear gain of the sup-norm disturbance term, `(2 + (4 d0 + 1) / xi) K0`.
    pub gamma_gain: f64,
    pub ln_gamma_gain: f64,
    /// `(N - 1) t_hat`
    pub k_star: f64,
    pub ceil_k_star_over_tau: f64,
    pub xi_star: f64,
    pub ln_xi_star: f64,
    pub lambda_star: f64,
    pub ln_lambda_star: f64,
    /// `2 K_star + (4N - 3) / xi_star`
    pub usc_gamma_gain: f64,
    pub ln_usc_gamma_gain: f64,
}

/// `ln xi` for the contraction rate over `d` hops and period `k`.
fn ln_rate(n: usize, d: usize, k: f64, tau_d: f64, a_low: f64, a_high: f64) -> (f64, f64) {
    let (n, d) = (n as f64, d as f64);
    let c = ceil_snap(k / tau_d);
    let ln_xi = -c * a_high * (d + 1.0) * (n - 1.0) - (n - 2.0) * d * a_high
        + d * (-(-a_low).exp()).ln_1p()
        - std::f64::consts::LN_2;
    (c, ln_xi)
}

/// Builds the certificate; `d0` is the generalized diameter of the joint graph.
pub fn grc_certificate(
    n: usize,
    d0: usize,
    window: f64,
    tau_d: f64,
    a_low: f64,
    a_high: f64,
) -> Result<GrcCertificate> {
    if n < 2 || d0 < 1 {
        return domain(format!("need n >= 2 and d0 >= 1, got n = {n}, d0 = {d0}"));
    }
    if !(window > 0.0 && window.is_finite() && tau_d > 0.0 && tau_d.is_finite()) {
        return domain(format!(
            "need positive finite T and tau_d, got T = {window}, tau_d = {tau_d}"
        ));
    }
    if !(a_low > 0.0 && a_low <= a_high && a_high.is_finite()) {
        return domain(format!("need 0 < a_low <= a_high, got [{a_low}, {a_high}]"));
    }
    let nf = n as f64;
    let t_hat = window + 2.0 * tau_d;
    let k0 = ((d0 as f64 - 1.0) * nf + 1.0) * t_hat;
    let (ceil_k0_over_tau, ln_xi) = ln_rate(n, d0, k0, tau_d, a_low, a_high);
    let ln_lambda0 = ln_neg_ln_1m(ln_xi) - k0.ln();
    let ln_gamma_gain =
        k0.ln() + ln_add_exp(std::f64::consts::LN_2, (4.0 * d0 as f64 + 1.0).ln() - ln_xi);

    let k_star = (nf - 1.0) * t_hat;
    let (ceil_k_star_over_tau, ln_xi_star) = ln_rate(n, n - 1, k_star, tau_d, a_low, a_high);
    let ln_lambda_star = ln_neg_ln_1m(ln_xi_star) - k_star.ln();
    let ln_usc_gamma_gain = ln_add_exp((2.0 * k_star).ln(), (4.0 * nf - 3.0).ln() - ln_xi_star);

    Ok(GrcCertificate {
        n,
        d0,
        window,
        tau_d,
        a_low,
        a_high,
        t_hat,
        k0,
        ceil_k0_over_tau,
        zeta: (-(nf - 2.0) * a_high).exp() * -(-a_low).exp_m1(),
        xi: ln_xi.exp(),
        ln_xi,
        lambda0: ln_lambda0.exp(),
        ln_lambda0,
        gamma_gain: ln_gamma_gain.exp(),
        ln_gamma_gain,
        k_star,
        ceil_k_star_over_tau,
        xi_star: ln_xi_star.exp(),
        ln_xi_star,
        lambda_star: ln_lambda_star.exp(),
        ln_lambda_star,
        usc_gamma_gain: ln_usc_gamma_gain.exp(),
        ln_usc_gamma_gain,
    })
}

impl GrcCertificate {
    /// `ln(1 - xi)`
    pub fn ln_one_minus_xi(&self) -> f64 {
        (-self.xi).ln_1p()
    }

    /// `(1 - xi)^{floor(t / K0)}`
    pub fn decay(&self, t: f64) -> f64 {
        (floor_snap(t / self.k0) * self.ln_one_minus_xi()).exp()
    }

    /// Same certificate with unit weight bounds.
    pub fn with_unit_weights(&self) -> GrcCertificate {
        grc_certificate(self.n, self.d0, self.window, self.tau_d, 1.0, 1.0)
            .expect("parameters already validated")
    }
}

/// Constants of the integral certificate for bidirectional signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidirCertificate {
    pub n: usize,
    pub d0: usize,
    pub a_low: f64,
    pub a_high: f64,
    /// `e^{-(N-1) a_high}`
    pub m0: f64,
    /// `e^{-(N-2) a_high} (1 - e^{-a_low})`
    pub zeta: f64,
    /// `e^{-2(2N-3) a_high} (1 - e^{-2 a_low})`
    pub eta0: f64,
    pub ln_eta0: f64,
    /// `eta0^{d0}`
    pub eta_star: f64,
    pub ln_eta_star: f64,
    /// `3 d0 + 1`
    pub gain: f64,
    pub partition: JcPartition,
}

pub fn bidir_certificate(
    n: usize,
    d0: usize,
    a_low: f64,
    a_high: f64,
    partition: JcPartition,
) -> Result<BidirCertificate> {
    if n < 2 || d0 < 1 {
        return domain(format!("need n >= 2 and d0 >= 1, got n = {n}, d0 = {d0}"));
    }
    if !(a_low > 0.0 && a_low <= a_high && a_high.is_finite()) {
        return domain(format!("need 0 < a_low <= a_high, got [{a_low}, {a_high}]"));
    }
    let nf = n as f64;
    let ln_eta0 = -2.0 * (2.0 * nf - 3.0) * a_high + (-(-2.0 * a_low).exp()).ln_1p();
    let ln_eta_star = d0 as f64 * ln_eta0;
    Ok(BidirCertificate {
        n,
        d0,
        a_low,
        a_high,
        m0: (-(nf - 1.0) * a_high).exp(),
        zeta: (-(nf - 2.0) * a_high).exp() * -(-a_low).exp_m1(),
        eta0: ln_eta0.exp(),
        ln_eta0,
        eta_star: ln_eta_star.exp(),
        ln_eta_star,
        gain: 3.0 * d0 as f64 + 1.0,
        partition,
    })
}

impl BidirCertificate {
    /// `ln(1 - eta_star)`
    pub fn ln_one_minus_eta(&self) -> f64 {
        (-self.eta_star).ln_1p()
    }

    /// `J(t)` on the stored partition.
    pub fn j(&self, t: f64) -> usize {
        count_j(&self.partition, t)
    }

    /// `(1 - eta_star)^{floor(J(t) / d0)}`
    pub fn decay(&self, t: f64) -> f64 {
        ((self.j(t) / self.d0) as f64 * self.ln_one_minus_eta()).exp()
    }

    /// Whether `eta0 <= zeta * m0`, the relaxation the contraction estimate
    /// relies on.
    pub fn relaxation_holds(&self) -> bool {
        self.eta0 <= self.zeta * self.m0
    }
}
