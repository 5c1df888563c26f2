use serde::{Deserialize, Serialize};

use super::sim::{EtTrace, TriggerRecord};
use crate::dynamics::Trajectory;
use crate::error::{domain, Result};
use crate::graph::SwitchingSignal;

/// Absolute slack for the identity and envelope checks on `hat_w`.
const HAT_W_TOL: f64 = 1e-9;

/// Equivalent disturbance seen by the consensus dynamics of an event-triggered
/// run, `u_i = sum_{j in N_hat} (x_j - x_i) + hat_w_i`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HatW {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Largest `|u_applied - sum (x_j - x_i) - hat_w|` over samples and agents.
    pub identity_residual: f64,
    /// `(N-1)(2 + 2 L0 e^{2 theta L0} / tau0)`, the multiplier of `delta(t)`.
    pub bound_factor: f64,
    /// Largest `|hat_w_i(t)| / (bound_factor delta(t))`.
    pub max_bound_ratio: f64,
    pub bound_violations: usize,
}

fn latest<'a>(records: &[&'a TriggerRecord], t: f64) -> &'a TriggerRecord {
    let k = records.partition_point(|r| r.time <= t);
    records[k.saturating_sub(1)]
}

pub(crate) fn reconstruct_with(traj: &Trajectory, trace: &EtTrace) -> Result<HatW> {
    let n = trace.n;
    if traj.n() != n || trace.inputs.len() != traj.len() {
        return domain("trajectory and trace come from different runs");
    }
    let mut per_agent: Vec<Vec<&TriggerRecord>> = vec![Vec::new(); n];
    for r in &trace.triggers {
        if r.agent >= n {
            return domain(format!("trigger record names agent {} of {n}", r.agent));
        }
        per_agent[r.agent].push(r);
    }
    if per_agent
        .iter()
        .any(|v| v.first().is_none_or(|r| r.time != 0.0))
    {
        return domain("every agent must trigger at t = 0");
    }

    let cfg = &trace.config;
    let stale = if trace.tau0.is_finite() {
        2.0 * cfg.l0 * (2.0 * cfg.theta * cfg.l0).exp() / trace.tau0
    } else {
        0.0
    };
    let mut out = HatW {
        times: traj.times.clone(),
        values: Vec::with_capacity(traj.len()),
        identity_residual: 0.0,
        bound_factor: (n as f64 - 1.0) * (2.0 + stale),
        max_bound_ratio: 0.0,
        bound_violations: 0,
    };
    for (s, (&t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let current: Vec<&TriggerRecord> = per_agent.iter().map(|v| latest(v, t)).collect();
        let err = |j: usize| x[j] - current[j].held_value;
        let bound = out.bound_factor * cfg.delta(t);
        let mut row = Vec::with_capacity(n);
        for (i, rec) in current.iter().enumerate() {
            let mut w = 0.0;
            let mut coupling = 0.0;
            for m in &rec.messages {
                let j = m.from;
                w += err(i) - err(j) + m.value - current[j].held_value;
                coupling += x[j] - x[i];
            }
            let residual = (trace.inputs[s][i] - coupling - w).abs();
            out.identity_residual = out.identity_residual.max(residual);
            if bound > 0.0 {
                out.max_bound_ratio = out.max_bound_ratio.max(w.abs() / bound);
            }
            if w.abs() > bound + HAT_W_TOL {
                out.bound_violations += 1;
            }
            row.push(w);
        }
        out.values.push(row);
    }
    Ok(out)
}

/// Rebuilds `hat_w` from a run's trajectory and trace and checks the rewrite
/// identity and the `delta`-proportional envelope at every sample.
pub fn reconstruct_hat_w(
    traj: &Trajectory,
    trace: &EtTrace,
    signal: &SwitchingSignal,
) -> Result<HatW> {
    if signal.n() != trace.n {
        return domain(format!(
            "signal has {} nodes but the trace has {}",
            signal.n(),
            trace.n
        ));
    }
    if traj.times.last().is_some_and(|&t| t > signal.horizon()) {
        return domain("trajectory extends beyond the signal horizon");
    }
    reconstruct_with(traj, trace)
}
