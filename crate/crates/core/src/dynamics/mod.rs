//! Noisy consensus dynamics over a switching signal,
//!
//! ```text
//! dx_i/dt = sum_{j in N_i(sigma(t))} a_ij(t) (x_j - x_i) + w_i(t),
//! ```
//!
//! with weight and disturbance families, their validators, and a fixed-step
//! fourth-order integrator whose steps never straddle a switch or a declared
//! jump.

mod disturbance;
mod trajectory;
mod weights;

pub use disturbance::{
    l1_norm, sup_norm, ClassCheck, DisturbanceClass, DisturbanceKind, DisturbanceSpec,
};
pub use trajectory::{IntegrationEcho, Trajectory};
pub use weights::{validate_weights_a2, A2Report, WeightFn, WeightSpec};

use crate::error::{domain, Error, Result};
use crate::graph::{Digraph, SwitchingSignal};

/// Step used when none is configured: `min(tau_d / 20, 1e-2)`.
pub fn default_step(tau_d: f64) -> f64 {
    (tau_d / 20.0).min(1e-2)
}

/// Right-hand side on a fixed graph. `left` selects left limits of the
/// weights and disturbance at `t`.
pub(crate) fn rhs_on(
    graph: &Digraph,
    weights: &WeightSpec,
    w: &DisturbanceSpec,
    t: f64,
    left: bool,
    x: &[f64],
    out: &mut [f64],
) {
    w.value_into(t, left, out);
    for &(j, i) in graph.arcs() {
        out[i] += weights.weight((j, i), t, left) * (x[j] - x[i]);
    }
}

fn check_dims(signal: &SwitchingSignal, w: &DisturbanceSpec, x: &[f64]) -> Result<()> {
    if x.len() != signal.n() {
        return domain(format!(
            "state has {} entries but the signal has {} nodes",
            x.len(),
            signal.n()
        ));
    }
    w.validate(signal.n())
}

/// `dx/dt` at time `t` under the graph active at `t`.
pub fn rhs(
    t: f64,
    x: &[f64],
    signal: &SwitchingSignal,
    weights: &WeightSpec,
    w: &DisturbanceSpec,
) -> Result<Vec<f64>> {
    check_dims(signal, w, x)?;
    if !(0.0..=signal.horizon()).contains(&t) {
        return domain(format!("t = {t} is outside [0, {}]", signal.horizon()));
    }
    let mut out = vec![0.0; x.len()];
    rhs_on(signal.graph_at(t), weights, w, t, false, x, &mut out);
    Ok(out)
}

/// Total incoming weight `Y_i(t) = sum_{j in N_i(sigma(t))} a_ij(t)` per agent.
pub fn neighbor_weight_sums(t: f64, signal: &SwitchingSignal, weights: &WeightSpec) -> Vec<f64> {
    let mut y = vec![0.0; signal.n()];
    for &(j, i) in signal.graph_at(t).arcs() {
        y[i] += weights.weight((j, i), t, false);
    }
    y
}

/// Fixed-step classical Runge-Kutta integration on `[t0, horizon]`.
///
/// The interval is cut at every switch instant and every weight or
/// disturbance breakpoint; each piece is split into equal steps no longer than
/// `step`, so all cut instants appear exactly among the samples.
pub fn integrate(
    signal: &SwitchingSignal,
    weights: &WeightSpec,
    w: &DisturbanceSpec,
    t0: f64,
    x0: &[f64],
    step: f64,
    horizon: f64,
) -> Result<Trajectory> {
    check_dims(signal, w, x0)?;
    weights.validate()?;
    if !(step > 0.0) {
        return domain(format!("step must be positive, got {step}"));
    }
    if !(t0 >= 0.0 && t0 < horizon) {
        return domain(format!(
            "need 0 <= t0 < horizon, got t0 = {t0}, horizon = {horizon}"
        ));
    }
    if horizon > signal.horizon() {
        return domain(format!(
            "integration horizon {horizon} exceeds the signal horizon {}",
            signal.horizon()
        ));
    }

    let mut cuts: Vec<f64> = std::iter::once(t0)
        .chain(signal.switches_between(t0, horizon))
        .chain(weights.breakpoints(t0, horizon))
        .chain(w.breakpoints(t0, horizon))
        .chain(std::iter::once(horizon))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let n = x0.len();
    let mut times = vec![t0];
    let mut states = vec![x0.to_vec()];
    let mut disturbances = vec![w.value(t0, n)];
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );

    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let graph = signal.graph_at(a);
        let m = (((b - a) / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h_nominal = (b - a) / m as f64;
        for k in 0..m {
            let ta = a + k as f64 * h_nominal;
            let tb = if k + 1 == m {
                b
            } else {
                a + (k + 1) as f64 * h_nominal
            };
            let h = tb - ta;
            let tm = ta + 0.5 * h;
            rhs_on(graph, weights, w, ta, false, &x, &mut k1);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            rhs_on(graph, weights, w, tm, false, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            rhs_on(graph, weights, w, tm, false, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            rhs_on(graph, weights, w, tb, true, &tmp, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    time: tb,
                    msg: "state became non-finite".into(),
                });
            }
            times.push(tb);
            states.push(x.clone());
            disturbances.push(w.value(tb, n));
        }
    }

    Ok(Trajectory {
        times,
        states,
        disturbances,
        echo: IntegrationEcho {
            step,
            order: 4,
            t0,
            x0: x0.to_vec(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_arc() -> SwitchingSignal {
        SwitchingSignal::constant(Digraph::new(2, [(0, 1)]).unwrap(), 10.0, 1.0).unwrap()
    }

    fn bidirectional_pair() -> SwitchingSignal {
        SwitchingSignal::constant(Digraph::undirected(2, [(0, 1)]).unwrap(), 10.0, 1.0).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let ones = WeightSpec::constant(1.0, 1.0);
        let empty = SwitchingSignal::constant(Digraph::empty(2).unwrap(), 1.0, 1.0).unwrap();
        let zero = DisturbanceSpec::zero();
        assert_eq!(
            rhs(0.0, &[1.0, 0.0], &empty, &ones, &zero).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            rhs(0.0, &[1.0, 0.0], &single_arc(), &ones, &zero).unwrap(),
            vec![0.0, 1.0]
        );
        let w: DisturbanceSpec = DisturbanceKind::Constant {
            values: vec![0.1, -0.1],
        }
        .into();
        let d = rhs(0.0, &[1.0, 0.0], &bidirectional_pair(), &ones, &w).unwrap();
        assert!((d[0] + 0.9).abs() < 1e-15 && (d[1] - 0.9).abs() < 1e-15);
        assert!(rhs(0.0, &[1.0], &single_arc(), &ones, &zero).is_err());
    }

    #[test]
    fn neighbor_weight_sum_counts_incoming_arcs() {
        let ones = WeightSpec::constant(2.0, 1.0);
        assert_eq!(
            neighbor_weight_sums(0.0, &single_arc(), &ones),
            vec![0.0, 2.0]
        );
    }

    #[test]
    fn single_arc_follows_closed_form() {
        let traj = integrate(
            &single_arc(),
            &WeightSpec::constant(1.0, 1.0),
            &DisturbanceSpec::zero(),
            0.0,
            &[1.0, 0.0],
            0.01,
            10.0,
        )
        .unwrap();
        let k = traj.index_at(1.0).unwrap();
        assert!((traj.times[k] - 1.0).abs() < 1e-12);
        let spread = traj.states[k][0] - traj.states[k][1];
        assert!((spread - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn samples_include_switches_and_jumps() {
        let graphs = vec![
            Digraph::new(2, [(0, 1)]).unwrap(),
            Digraph::new(2, [(1, 0)]).unwrap(),
        ];
        let s =
            SwitchingSignal::new(graphs, vec![(0.0, 0), (0.333, 1), (0.777, 0)], 1.0, 0.3).unwrap();
        let w: DisturbanceSpec = DisturbanceKind::SplitAdversarial {
            values: vec![1.0, 0.0],
            start: 0.5,
            end: 0.9,
        }
        .into();
        let traj = integrate(
            &s,
            &WeightSpec::constant(1.0, 0.3),
            &w,
            0.0,
            &[0.0, 1.0],
            0.1,
            1.0,
        )
        .unwrap();
        for t in [0.333, 0.5, 0.777, 0.9, 1.0] {
            assert!(traj.times.contains(&t), "{t} missing");
        }
        assert!(traj
            .times
            .windows(2)
            .all(|p| p[1] > p[0] && p[1] - p[0] <= 0.1 + 1e-15));
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.states[0], vec![0.0, 1.0]);
    }

    #[test]
    fn reports_non_finite_states() {
        let w: DisturbanceSpec = DisturbanceKind::Constant {
            values: vec![f64::MAX, 0.0],
        }
        .into();
        let err = integrate(
            &single_arc(),
            &WeightSpec::constant(1.0, 1.0),
            &w,
            0.0,
            &[f64::MAX, 0.0],
            0.5,
            2.0,
        );
        assert!(matches!(err, Err(Error::Numerical { .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        let ones = WeightSpec::constant(1.0, 1.0);
        let zero = DisturbanceSpec::zero();
        assert!(integrate(&single_arc(), &ones, &zero, 0.0, &[1.0, 0.0], 0.0, 1.0).is_err());
        assert!(integrate(&single_arc(), &ones, &zero, 2.0, &[1.0, 0.0], 0.1, 1.0).is_err());
        assert!(integrate(&single_arc(), &ones, &zero, 0.0, &[1.0, 0.0], 0.1, 11.0).is_err());
    }

    #[test]
    fn trajectory_csv_header() {
        let traj = integrate(
            &single_arc(),
            &WeightSpec::constant(1.0, 1.0),
            &DisturbanceSpec::zero(),
            0.0,
            &[1.0, 0.0],
            0.5,
            1.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x_1,x_2,w_1,w_2"));
        assert_eq!(lines.count(), traj.len());
    }
}
