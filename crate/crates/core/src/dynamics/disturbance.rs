use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad::simpson_piecewise;

/// Panel width used for L1 quadrature.
const L1_PANEL: f64 = 1e-2;
/// Grid size used for sup-norm scans.
const SUP_GRID: usize = 20_000;

/// Deterministic disturbance `w(t)` acting on every agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceKind {
    Zero,
    Constant {
        values: Vec<f64>,
    },
    /// `amplitude_i * sin(frequency_i * t + phase_i)`
    Sinusoid {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    },
    /// `amplitude_i * exp(-rate * t)`
    ExpVanishing {
        amplitude: Vec<f64>,
        rate: f64,
    },
    /// `amplitude_i * (1 + t)^(-power)` with `power > 1`
    IntegrableDecay {
        amplitude: Vec<f64>,
        power: f64,
    },
    /// `values` on `[start, end)` and zero elsewhere; pushing one group of
    /// agents away from the rest.
    SplitAdversarial {
        values: Vec<f64>,
        start: f64,
        end: f64,
    },
    /// Piecewise constant: row `k` on `[times[k], times[k + 1])`, zero before
    /// `times[0]`, last row extending forever.
    Table {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// Disturbance classes: bounded (`F`), vanishing (`F1`), integrable (`F2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DisturbanceClass {
    F,
    F1,
    F2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    #[serde(flatten)]
    pub kind: DisturbanceKind,
    /// Classes the spec claims membership of; checked by [`DisturbanceSpec::check_classes`].
    #[serde(default)]
    pub classes: BTreeSet<DisturbanceClass>,
}

/// Numerical class-membership evidence over a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassCheck {
    pub bounded: bool,
    /// Sup over the last eighth of the horizon is at most a tenth of the overall sup.
    pub vanishing: bool,
    /// Integral over the last eighth of the horizon is at most a tenth of the total.
    pub integrable: bool,
    pub sup: f64,
    pub tail_sup: f64,
    pub l1: f64,
    pub tail_l1: f64,
}

impl From<DisturbanceKind> for DisturbanceSpec {
    fn from(kind: DisturbanceKind) -> Self {
        DisturbanceSpec {
            kind,
            classes: BTreeSet::new(),
        }
    }
}

impl DisturbanceSpec {
    pub fn zero() -> Self {
        DisturbanceKind::Zero.into()
    }

    pub fn with_classes(mut self, classes: impl IntoIterator<Item = DisturbanceClass>) -> Self {
        self.classes.extend(classes);
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, DisturbanceKind::Zero)
    }

    /// Checks per-agent parameter lengths against `n` and parameter ranges.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_len = |name: &str, v: &[f64]| {
            if v.len() != n {
                domain(format!(
                    "disturbance {name} has {} entries, expected {n}",
                    v.len()
                ))
            } else if v.iter().any(|x| !x.is_finite()) {
                domain(format!("disturbance {name} must be finite"))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            DisturbanceKind::Zero => Ok(()),
            DisturbanceKind::Constant { values } => check_len("values", values),
            DisturbanceKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                check_len("amplitude", amplitude)?;
                check_len("frequency", frequency)?;
                check_len("phase", phase)
            }
            DisturbanceKind::ExpVanishing { amplitude, rate } => {
                check_len("amplitude", amplitude)?;
                if !(*rate > 0.0) {
                    return domain(format!("exp-vanishing rate must be positive, got {rate}"));
                }
                Ok(())
            }
            DisturbanceKind::IntegrableDecay { amplitude, power } => {
                check_len("amplitude", amplitude)?;
                if !(*power > 1.0) {
                    return domain(format!("integrable decay power must exceed 1, got {power}"));
                }
                Ok(())
            }
            DisturbanceKind::SplitAdversarial { values, start, end } => {
                check_len("values", values)?;
                if !(start < end) {
                    return domain("split-adversarial window must have start < end");
                }
                Ok(())
            }
            DisturbanceKind::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return domain("disturbance table needs matching non-empty times/values");
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("disturbance table times must be strictly increasing");
                }
                values
                    .iter()
                    .try_for_each(|row| check_len("table row", row))
            }
        }
    }

    /// Writes `w(t)` into `out`; with `left` set, piecewise-constant kinds
    /// return the left limit at `t`.
    pub fn value_into(&self, t: f64, left: bool, out: &mut [f64]) {
        match &self.kind {
            DisturbanceKind::Zero => out.fill(0.0),
            DisturbanceKind::Constant { values } => out.copy_from_slice(values),
            DisturbanceKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = amplitude[i] * (frequency[i] * t + phase[i]).sin();
                }
            }
            DisturbanceKind::ExpVanishing { amplitude, rate } => {
                let decay = (-rate * t).exp();
                for (o, a) in out.iter_mut().zip(amplitude) {
                    *o = a * decay;
                }
            }
            DisturbanceKind::IntegrableDecay { amplitude, power } => {
                let decay = (1.0 + t).powf(-power);
                for (o, a) in out.iter_mut().zip(amplitude) {
                    *o = a * decay;
                }
            }
            DisturbanceKind::SplitAdversarial { values, start, end } => {
                let active = if left {
                    t > *start && t <= *end
                } else {
                    t >= *start && t < *end
                };
                if active {
                    out.copy_from_slice(values);
                } else {
                    out.fill(0.0);
                }
            }
            DisturbanceKind::Table { times, values } => {
                let k = if left {
                    times.partition_point(|&s| s < t)
                } else {
                    times.partition_point(|&s| s <= t)
                };
                if k == 0 {
                    out.fill(0.0);
                } else {
                    out.copy_from_slice(&values[k - 1]);
                }
            }
        }
    }

    pub fn value(&self, t: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.value_into(t, false, &mut out);
        out
    }

    /// `|w(t)|`, the max norm over agents.
    pub fn norm_at(&self, t: f64, left: bool) -> f64 {
        match &self.kind {
            DisturbanceKind::Zero => 0.0,
            DisturbanceKind::Constant { values } => max_abs(values),
            DisturbanceKind::ExpVanishing { amplitude, rate } => {
                max_abs(amplitude) * (-rate * t).exp()
            }
            DisturbanceKind::IntegrableDecay { amplitude, power } => {
                max_abs(amplitude) * (1.0 + t).powf(-power)
            }
            _ => {
                let n = self.dimension().unwrap_or(0);
                let mut buf = vec![0.0; n];
                self.value_into(t, left, &mut buf);
                max_abs(&buf)
            }
        }
    }

    fn dimension(&self) -> Option<usize> {
        match &self.kind {
            DisturbanceKind::Zero => None,
            DisturbanceKind::Constant { values } => Some(values.len()),
            DisturbanceKind::Sinusoid { amplitude, .. } => Some(amplitude.len()),
            DisturbanceKind::ExpVanishing { amplitude, .. } => Some(amplitude.len()),
            DisturbanceKind::IntegrableDecay { amplitude, .. } => Some(amplitude.len()),
            DisturbanceKind::SplitAdversarial { values, .. } => Some(values.len()),
            DisturbanceKind::Table { values, .. } => values.first().map(Vec::len),
        }
    }

    /// Jump instants strictly inside `(t1, t2)`.
    pub fn breakpoints(&self, t1: f64, t2: f64) -> Vec<f64> {
        let candidates: Vec<f64> = match &self.kind {
            DisturbanceKind::SplitAdversarial { start, end, .. } => vec![*start, *end],
            DisturbanceKind::Table { times, .. } => times.clone(),
            _ => Vec::new(),
        };
        candidates
            .into_iter()
            .filter(|&s| s > t1 && s < t2)
            .collect()
    }

    /// `sup |w(t)|` over `[t1, t2]`, scanned on a dense grid plus both one-sided
    /// limits at every jump.
    pub fn sup_norm(&self, t1: f64, t2: f64) -> f64 {
        if self.is_zero() || t2 < t1 {
            return 0.0;
        }
        let h = (t2 - t1) / SUP_GRID as f64;
        let grid = (0..=SUP_GRID).map(|k| self.norm_at(t1 + k as f64 * h, false));
        let jumps = self
            .breakpoints(t1, t2)
            .into_iter()
            .flat_map(|b| [self.norm_at(b, true), self.norm_at(b, false)]);
        grid.chain(jumps)
            .chain([self.norm_at(t2, true)])
            .fold(0.0, f64::max)
    }

    /// `∫ |w(t)| dt` over `[t1, t2]` by composite Simpson split at jumps.
    pub fn l1_norm(&self, t1: f64, t2: f64) -> f64 {
        if self.is_zero() || t2 <= t1 {
            return 0.0;
        }
        let breaks = self.breakpoints(t1, t2);
        simpson_piecewise(|t, left| self.norm_at(t, left), t1, t2, &breaks, L1_PANEL)
    }

    /// Finite-horizon evidence for the bounded, vanishing and integrable classes.
    pub fn check_classes(&self, horizon: f64) -> ClassCheck {
        let tail = horizon * 7.0 / 8.0;
        let sup = self.sup_norm(0.0, horizon);
        let tail_sup = self.sup_norm(tail, horizon);
        let l1 = self.l1_norm(0.0, horizon);
        let tail_l1 = self.l1_norm(tail, horizon);
        ClassCheck {
            bounded: sup.is_finite(),
            vanishing: sup == 0.0 || tail_sup <= 0.1 * sup,
            integrable: l1 == 0.0 || (l1.is_finite() && tail_l1 <= 0.1 * l1),
            sup,
            tail_sup,
            l1,
            tail_l1,
        }
    }

    /// Fails if a declared class is contradicted on `[0, horizon]`.
    pub fn validate_classes(&self, horizon: f64) -> Result<ClassCheck> {
        let check = self.check_classes(horizon);
        for class in &self.classes {
            let ok = match class {
                DisturbanceClass::F => check.bounded,
                DisturbanceClass::F1 => check.vanishing,
                DisturbanceClass::F2 => check.integrable,
            };
            if !ok {
                return domain(format!(
                    "disturbance tagged {class:?} fails the numerical class check on [0, {horizon}]"
                ));
            }
        }
        Ok(check)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `sup |w|` over `[0, horizon]`.
pub fn sup_norm(w: &DisturbanceSpec, horizon: f64) -> f64 {
    w.sup_norm(0.0, horizon)
}

/// `∫_{t1}^{t2} |w(t)| dt`.
pub fn l1_norm(w: &DisturbanceSpec, t1: f64, t2: f64) -> f64 {
    w.l1_norm(t1, t2)
}
