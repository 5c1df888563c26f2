use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::simpson_piecewise;

/// Time profile of one arc weight `a_ij(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFn {
    Constant {
        value: f64,
    },
    /// `scale * |sin t|`
    AbsSin {
        scale: f64,
    },
    /// Piecewise constant: `values[k]` on `[times[k], times[k + 1])`, the last
    /// value extending forever. `times[0]` must be 0.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// `slope * t`; unbounded, useful to exercise weight validation.
    Ramp {
        slope: f64,
    },
}

impl WeightFn {
    pub fn eval(&self, t: f64, left: bool) -> f64 {
        match self {
            WeightFn::Constant { value } => *value,
            WeightFn::AbsSin { scale } => scale * t.sin().abs(),
            WeightFn::Table { times, values } => {
                let k = if left {
                    times.partition_point(|&s| s < t)
                } else {
                    times.partition_point(|&s| s <= t)
                };
                values[k.saturating_sub(1)]
            }
            WeightFn::Ramp { slope } => slope * t,
        }
    }

    /// Instants in `(t1, t2)` where the profile is not smooth.
    pub fn breakpoints(&self, t1: f64, t2: f64) -> Vec<f64> {
        match self {
            WeightFn::Table { times, .. } => times
                .iter()
                .copied()
                .filter(|&s| s > t1 && s < t2)
                .collect(),
            WeightFn::AbsSin { .. } => {
                let first = (t1 / PI).floor() as i64 + 1;
                (first..)
                    .map(|k| k as f64 * PI)
                    .take_while(|&s| s < t2)
                    .filter(|&s| s > t1)
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightFn::Constant { value } if !(*value >= 0.0 && value.is_finite()) => domain(
                format!("constant weight must be finite and non-negative, got {value}"),
            ),
            WeightFn::AbsSin { scale } if !(*scale >= 0.0 && scale.is_finite()) => domain(format!(
                "abs-sin scale must be finite and non-negative, got {scale}"
            )),
            WeightFn::Ramp { slope } if !(*slope >= 0.0 && slope.is_finite()) => domain(format!(
                "ramp slope must be finite and non-negative, got {slope}"
            )),
            WeightFn::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() || times[0] != 0.0 {
                    return domain("weight table needs matching times/values starting at t = 0");
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("weight table times must be strictly increasing");
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return domain("weight table values must be finite and non-negative");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn window_integral(&self, t: f64, tau: f64) -> f64 {
        let breaks = self.breakpoints(t, t + tau);
        simpson_piecewise(
            |s, left| self.eval(s, left),
            t,
            t + tau,
            &breaks,
            tau / 256.0,
        )
    }
}

/// Arc weights: a default profile plus per-arc overrides, with the declared
/// bounds on every dwell-window integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightDocument", into = "WeightDocument")]
pub struct WeightSpec {
    pub default: WeightFn,
    /// Keyed by 0-based arc `(j, i)`.
    pub overrides: BTreeMap<(usize, usize), WeightFn>,
    pub a_low: f64,
    pub a_high: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDocument {
    default: WeightFn,
    #[serde(default)]
    arcs: Vec<ArcWeight>,
    a_low: f64,
    a_high: f64,
}

/// Override for one 1-indexed arc `[j, i]`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcWeight {
    arc: [usize; 2],
    weight: WeightFn,
}

impl TryFrom<WeightDocument> for WeightSpec {
    type Error = Error;

    fn try_from(doc: WeightDocument) -> Result<Self> {
        let mut overrides = BTreeMap::new();
        for aw in doc.arcs {
            let [j, i] = aw.arc;
            if j == 0 || i == 0 {
                return Err(Error::Parse(format!(
                    "weights: arc [{j}, {i}] is 1-indexed"
                )));
            }
            overrides.insert((j - 1, i - 1), aw.weight);
        }
        let spec = WeightSpec {
            default: doc.default,
            overrides,
            a_low: doc.a_low,
            a_high: doc.a_high,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<WeightSpec> for WeightDocument {
    fn from(spec: WeightSpec) -> Self {
        WeightDocument {
            default: spec.default,
            arcs: spec
                .overrides
                .into_iter()
                .map(|((j, i), weight)| ArcWeight {
                    arc: [j + 1, i + 1],
                    weight,
                })
                .collect(),
            a_low: spec.a_low,
            a_high: spec.a_high,
        }
    }
}

impl WeightSpec {
    /// Every arc weighted by the same constant; bounds declared for the given
    /// dwell time.
    pub fn constant(value: f64, tau_d: f64) -> Self {
        WeightSpec {
            default: WeightFn::Constant { value },
            overrides: BTreeMap::new(),
            a_low: value * tau_d,
            a_high: value * tau_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.default.validate()?;
        for f in self.overrides.values() {
            f.validate()?;
        }
        if !(self.a_low > 0.0 && self.a_low <= self.a_high && self.a_high.is_finite()) {
            return domain(format!(
                "declared weight bounds must satisfy 0 < a_low <= a_high, got [{}, {}]",
                self.a_low, self.a_high
            ));
        }
        Ok(())
    }

    pub fn profile(&self, arc: (usize, usize)) -> &WeightFn {
        self.overrides.get(&arc).unwrap_or(&self.default)
    }

    /// `a_ij(t)` for the arc `(j, i)`.
    pub fn weight(&self, arc: (usize, usize), t: f64, left: bool) -> f64 {
        self.profile(arc).eval(t, left)
    }

    pub fn profiles(&self) -> impl Iterator<Item = &WeightFn> {
        std::iter::once(&self.default).chain(self.overrides.values())
    }

    pub fn is_symmetric(&self) -> bool {
        self.overrides
            .iter()
            .all(|(&(j, i), f)| self.profile((i, j)) == f)
    }

    pub fn breakpoints(&self, t1: f64, t2: f64) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .profiles()
            .flat_map(|f| f.breakpoints(t1, t2))
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

/// Observed range of the dwell-window weight integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub a_low_observed: f64,
    pub a_high_observed: f64,
    pub ok: bool,
}

/// Integrates every weight profile over `[t, t + tau_d]` for `t` on a grid of
/// spacing `grid` covering `[0, horizon]`, and checks the integrals against the
/// declared bounds.
pub fn validate_weights_a2(
    weights: &WeightSpec,
    tau_d: f64,
    horizon: f64,
    grid: f64,
) -> Result<A2Report> {
    if !(grid > 0.0) || !(tau_d > 0.0) {
        return domain("grid spacing and dwell time must be positive");
    }
    let tol = 1e-9 * weights.a_high.abs().max(1.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let steps = (horizon / grid).floor() as usize;
    for k in 0..=steps {
        let t = k as f64 * grid;
        for f in weights.profiles() {
            let v = f.window_integral(t, tau_d);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(A2Report {
        a_low_observed: lo,
        a_high_observed: hi,
        ok: lo >= weights.a_low - tol && hi <= weights.a_high + tol,
    })
}
