use proptest::prelude::*;
use robcon::dynamics::{integrate, DisturbanceKind, DisturbanceSpec, Trajectory, WeightSpec};
use robcon::graph::{Digraph, SwitchingSignal};

fn spread(x: &[f64]) -> f64 {
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

fn pair_error(step: f64) -> f64 {
    let g = Digraph::undirected(2, [(0, 1)]).unwrap();
    let s = SwitchingSignal::constant(g, 2.0, 1.0).unwrap();
    let traj = integrate(
        &s,
        &WeightSpec::constant(1.0, 1.0),
        &DisturbanceSpec::zero(),
        0.0,
        &[1.0, 0.0],
        step,
        2.0,
    )
    .unwrap();
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, x)| ((x[0] - x[1]) - (-2.0 * t).exp()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn bidirectional_pair_difference_decays_at_rate_two() {
    assert!(pair_error(1e-2) < 1e-6);
}

#[test]
fn halving_the_step_gains_fourth_order() {
    let ratio = pair_error(0.2) / pair_error(0.1);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

/// A random switching signal on `n` nodes with dwell `tau`.
fn arb_signal() -> impl Strategy<Value = SwitchingSignal> {
    (2usize..5)
        .prop_flat_map(|n| {
            let arcs = proptest::collection::vec(
                proptest::collection::vec((0..n, 0..n), 0..(2 * n)),
                1..4,
            );
            let schedule = proptest::collection::vec((0.0f64..1.0, 0usize..4), 1..6);
            (Just(n), arcs, schedule)
        })
        .prop_map(|(n, arcs, schedule)| {
            let graphs: Vec<Digraph> = arcs
                .into_iter()
                .map(|list| Digraph::new(n, list.into_iter().filter(|(a, b)| a != b)).unwrap())
                .collect();
            let tau = 0.25;
            let mut t = 0.0;
            let mut sched = Vec::new();
            for (gap, g) in schedule {
                sched.push((t, g % graphs.len()));
                t += tau + gap;
            }
            SwitchingSignal::new(graphs, sched, t + tau, tau).unwrap()
        })
}

fn arb_disturbance(n: usize) -> impl Strategy<Value = DisturbanceSpec> {
    let vals = proptest::collection::vec(-1.0f64..1.0, n);
    prop_oneof![
        Just(DisturbanceSpec::zero()),
        vals.clone()
            .prop_map(|values| DisturbanceKind::Constant { values }.into()),
        (vals.clone(), 0.0f64..1.0, 0.1f64..1.0).prop_map(|(values, start, len)| {
            DisturbanceKind::SplitAdversarial {
                values,
                start,
                end: start + len,
            }
            .into()
        }),
        vals.prop_map(|amplitude| {
            let n = amplitude.len();
            DisturbanceKind::Sinusoid {
                amplitude,
                frequency: vec![3.0; n],
                phase: vec![0.5; n],
            }
            .into()
        }),
    ]
}

fn run(signal: &SwitchingSignal, w: &DisturbanceSpec, x0: &[f64]) -> Trajectory {
    integrate(
        signal,
        &WeightSpec::constant(1.0, signal.tau_d()),
        w,
        0.0,
        x0,
        0.01,
        signal.horizon(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn consensus_states_stay_put(signal in arb_signal(), c in -5.0f64..5.0) {
        let x0 = vec![c; signal.n()];
        let traj = run(&signal, &DisturbanceSpec::zero(), &x0);
        for x in &traj.states {
            for v in x {
                prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }
    }

    #[test]
    fn samples_cover_every_switch(signal in arb_signal()) {
        let traj = run(&signal, &DisturbanceSpec::zero(), &vec![0.0; signal.n()]);
        for t in signal.switch_times() {
            prop_assert!(traj.times.contains(t));
        }
        prop_assert!(traj.times.windows(2).all(|p| p[1] > p[0] && p[1] - p[0] <= 0.01 + 1e-15));
    }

    #[test]
    fn translation_equivariance(
        (signal, w, x0) in arb_signal().prop_flat_map(|s| {
            let n = s.n();
            (Just(s), arb_disturbance(n), proptest::collection::vec(-2.0f64..2.0, n))
        }),
        c in -3.0f64..3.0,
    ) {
        let base = run(&signal, &w, &x0);
        let shifted: Vec<f64> = x0.iter().map(|v| v + c).collect();
        let moved = run(&signal, &w, &shifted);
        for (a, b) in base.states.iter().zip(&moved.states) {
            for (u, v) in a.iter().zip(b) {
                prop_assert!((u + c - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn symmetric_exchange_conserves_sum(
        n in 2usize..6,
        edges in proptest::collection::vec((0usize..6, 0usize..6), 1..8),
        x0 in proptest::collection::vec(-2.0f64..2.0, 6),
    ) {
        let edges: Vec<_> = edges.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
        let g = Digraph::undirected(n, edges).unwrap();
        let s = SwitchingSignal::constant(g, 3.0, 0.5).unwrap();
        let traj = run(&s, &DisturbanceSpec::zero(), &x0[..n]);
        let total: f64 = x0[..n].iter().sum();
        for x in &traj.states {
            prop_assert!((x.iter().sum::<f64>() - total).abs() < 1e-10);
        }
    }

    #[test]
    fn extremes_move_no_faster_than_the_disturbance(
        (signal, w, x0) in arb_signal().prop_flat_map(|s| {
            let n = s.n();
            (Just(s), arb_disturbance(n), proptest::collection::vec(-2.0f64..2.0, n))
        }),
    ) {
        let traj = run(&signal, &w, &x0);
        let tol = 1e-4;
        for (k, pair) in traj.states.windows(2).enumerate() {
            let (s, t) = (traj.times[k], traj.times[k + 1]);
            let budget = w.l1_norm(s, t) + tol;
            let max = |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(max(&pair[1]) <= max(&pair[0]) + budget);
            prop_assert!(min(&pair[1]) >= min(&pair[0]) - budget);
        }
        prop_assert!(spread(traj.final_state()) <= spread(&x0) + 2.0 * w.l1_norm(0.0, signal.horizon()) + tol);
    }
}
