//! Distributed event-triggered coordination: agents broadcast their state only
//! at trigger instants and hold a piecewise-constant input built from the
//! latest messages received from recent neighbors.

mod hat_w;
mod sim;

pub use hat_w::{reconstruct_hat_w, HatW};
pub use sim::{
    control_input, min_inter_event, simulate_et, AgentTriggerState, Delivery, EtTrace,
    StoredMessage, TriggerCause, TriggerRecord, UsedMessage,
};

use serde::{Deserialize, Serialize};

use crate::bounds::GrcCertificate;
use crate::error::{domain, precondition, Result};

/// Threshold `delta(t) = A e^{-theta t}`, forced wake-up interval `l0`, and
/// the resolution of threshold-crossing detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtConfig {
    pub amplitude: f64,
    pub theta: f64,
    pub l0: f64,
    #[serde(default = "default_crossing_tol")]
    pub crossing_tol: f64,
    /// Spacing of the regular samples recorded in addition to event instants.
    #[serde(default = "default_sample_step")]
    pub sample_step: f64,
}

fn default_crossing_tol() -> f64 {
    1e-9
}

fn default_sample_step() -> f64 {
    1e-2
}

impl EtConfig {
    pub fn new(amplitude: f64, theta: f64, l0: f64) -> Self {
        EtConfig {
            amplitude,
            theta,
            l0,
            crossing_tol: default_crossing_tol(),
            sample_step: default_sample_step(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                domain(format!("{name} must be positive and finite, got {v}"))
            }
        };
        positive("threshold amplitude", self.amplitude)?;
        positive("timeout L0", self.l0)?;
        positive("crossing tolerance", self.crossing_tol)?;
        positive("sample step", self.sample_step)?;
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return domain(format!(
                "theta must be finite and non-negative, got {}",
                self.theta
            ));
        }
        if self.crossing_tol >= self.l0 {
            return domain("crossing tolerance must be smaller than L0");
        }
        Ok(())
    }

    /// `A e^{-theta t}`
    pub fn delta(&self, t: f64) -> f64 {
        self.amplitude * (-self.theta * t).exp()
    }
}

/// `(A0, theta0)` from a certificate built with unit weight bounds.
pub fn theta0_a0(unit: &GrcCertificate) -> Result<(f64, f64)> {
    if unit.a_low != 1.0 || unit.a_high != 1.0 {
        return precondition("theta0 and A0 are defined for the unit-weight certificate");
    }
    Ok((1.0 / (1.0 - unit.xi), unit.lambda0))
}

/// Admissibility of the timeout:
/// `L0 e^{2 theta L0} (N-1) [(N-1)(4 d0 + 1) A0^2 / (theta0 - theta) + 1] < 1/2`.
pub fn check_l0(n: usize, d0: usize, a0: f64, theta0: f64, theta: f64, l0: f64) -> Result<bool> {
    if !(theta > 0.0 && theta < theta0) {
        return precondition(format!("need 0 < theta < theta0 = {theta0}, got {theta}"));
    }
    let m = n as f64 - 1.0;
    let bracket = m * (4.0 * d0 as f64 + 1.0) * a0 * a0 / (theta0 - theta) + 1.0;
    Ok(l0 * (2.0 * theta * l0).exp() * m * bracket < 0.5)
}

/// Whether a run is covered by the convergence theorem or is an empirical run
/// outside its constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compliance {
    TheoremCompliant,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub a0: f64,
    pub theta0: f64,
    pub theta_admissible: bool,
    pub l0_admissible: bool,
    pub label: Compliance,
}

/// Labels a configuration against the unit-weight certificate of its signal.
pub fn classify(unit: &GrcCertificate, config: &EtConfig) -> Result<ComplianceReport> {
    let (a0, theta0) = theta0_a0(unit)?;
    let theta_admissible = config.theta > 0.0 && config.theta < theta0;
    let l0_admissible =
        theta_admissible && check_l0(unit.n, unit.d0, a0, theta0, config.theta, config.l0)?;
    Ok(ComplianceReport {
        a0,
        theta0,
        theta_admissible,
        l0_admissible,
        label: if l0_admissible {
            Compliance::TheoremCompliant
        } else {
            Compliance::Empirical
        },
    })
}

/// Spread envelope for event-triggered runs given the running minimum
/// inter-event time `m_t`:
/// `A0 e^{-theta0 t} H0 + 2(N-1)(4 d0 + 1)[1 + e^{2 theta L0} L0 / M(t)]
///  A0^2 A / (theta0 - theta) (e^{-theta t} - e^{-theta0 t})`.
pub fn et_envelope(
    unit: &GrcCertificate,
    config: &EtConfig,
    h0: f64,
    m_t: f64,
    t: f64,
) -> Result<f64> {
    let (a0, theta0) = theta0_a0(unit)?;
    let theta = config.theta;
    if !(theta < theta0) {
        return precondition(format!("need theta < theta0 = {theta0}, got {theta}"));
    }
    let m = unit.n as f64 - 1.0;
    let stale = 1.0 + (2.0 * theta * config.l0).exp() * config.l0 / m_t;
    let drive = 2.0 * m * (4.0 * unit.d0 as f64 + 1.0) * stale * a0 * a0 * config.amplitude
        / (theta0 - theta);
    Ok(a0 * (-theta0 * t).exp() * h0 + drive * ((-theta * t).exp() - (-theta0 * t).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::grc_certificate;

    fn unit_pair() -> GrcCertificate {
        grc_certificate(2, 1, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn theta0_and_a0_examples() {
        let (a0, theta0) = theta0_a0(&unit_pair()).unwrap();
        assert!((a0 - 1.000784).abs() < 1e-6);
        assert!(a0 > 1.0);
        assert_eq!(theta0, unit_pair().lambda0);
        let weighted = grc_certificate(2, 1, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(theta0_a0(&weighted).is_err());
    }

    #[test]
    fn l0_condition_examples() {
        let (a0, theta0) = theta0_a0(&unit_pair()).unwrap();
        let theta = theta0 / 2.0;
        assert!(check_l0(2, 1, a0, theta0, theta, 1e-12).unwrap());
        assert!(check_l0(2, 1, a0, theta0, theta, 1e-5).unwrap());
        assert!(!check_l0(2, 1, a0, theta0, theta, 1e-4).unwrap());
        assert!(check_l0(2, 1, a0, theta0, theta0, 1e-5).is_err());
        let bracket = 5.0 * a0 * a0 / (theta0 - theta) + 1.0;
        assert!((bracket - 3.834e4).abs() < 20.0, "{bracket}");
    }

    #[test]
    fn labels_follow_the_timeout_condition() {
        let cert = unit_pair();
        let (_, theta0) = theta0_a0(&cert).unwrap();
        let strict = EtConfig::new(1.0, theta0 / 2.0, 1e-5);
        assert_eq!(
            classify(&cert, &strict).unwrap().label,
            Compliance::TheoremCompliant
        );
        let loose = EtConfig::new(1.0, 0.05, 1.0);
        let r = classify(&cert, &loose).unwrap();
        assert_eq!(r.label, Compliance::Empirical);
        assert!(!r.theta_admissible);
    }

    #[test]
    fn envelope_starts_at_scaled_initial_spread() {
        let cert = unit_pair();
        let (a0, theta0) = theta0_a0(&cert).unwrap();
        let cfg = EtConfig::new(0.5, theta0 / 2.0, 1e-5);
        assert!((et_envelope(&cert, &cfg, 2.0, 1e-5, 0.0).unwrap() - 2.0 * a0).abs() < 1e-12);
        assert!(et_envelope(&cert, &EtConfig::new(0.5, 1.0, 1.0), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EtConfig::new(0.5, 0.1, 1.0).validate().is_ok());
        assert!(EtConfig::new(0.0, 0.1, 1.0).validate().is_err());
        assert!(EtConfig::new(0.5, -0.1, 1.0).validate().is_err());
        assert!(EtConfig::new(0.5, 0.1, 0.0).validate().is_err());
    }
}
