use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::hat_w::{reconstruct_with, HatW};
use super::EtConfig;
use crate::dynamics::{IntegrationEcho, Trajectory};
use crate::error::{domain, precondition, Error, Result};
use crate::format::sci17;
use crate::graph::SwitchingSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerCause {
    /// The simultaneous start-up trigger of every agent at `t = 0`.
    Initial,
    Threshold,
    Timeout,
}

impl TriggerCause {
    fn as_str(self) -> &'static str {
        match self {
            TriggerCause::Initial => "initial",
            TriggerCause::Threshold => "threshold",
            TriggerCause::Timeout => "timeout",
        }
    }
}

/// A neighbor value that entered an agent's input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsedMessage {
    pub from: usize,
    pub from_trigger_time: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub agent: usize,
    pub k: usize,
    pub time: f64,
    pub held_value: f64,
    pub cause: TriggerCause,
    /// Neighbors seen since the previous trigger.
    pub neighbors: Vec<usize>,
    pub messages: Vec<UsedMessage>,
    /// Input held until the next trigger.
    pub input: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    pub from_trigger_time: f64,
    pub value: f64,
}

/// Latest broadcast received from one source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredMessage {
    pub from_trigger_time: f64,
    pub value: f64,
    pub last_contact: f64,
}

/// Protocol state of one agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentTriggerState {
    pub trigger_times: Vec<f64>,
    pub held_value: f64,
    /// Union of neighbor sets since the latest trigger.
    pub accumulated_neighbors: BTreeSet<usize>,
    pub message_store: BTreeMap<usize, StoredMessage>,
}

/// `sum_{j in N_hat} (stored x_j - held x_i)` over the neighbors accumulated
/// since the agent's last trigger.
pub fn control_input(i: usize, state: &AgentTriggerState) -> Result<f64> {
    if state.trigger_times.is_empty() {
        return precondition(format!("agent {i} has not been triggered yet"));
    }
    let mut u = 0.0;
    for j in &state.accumulated_neighbors {
        let msg = state.message_store.get(j).ok_or_else(|| {
            Error::Precondition(format!("agent {i} has no message from neighbor {j}"))
        })?;
        u += msg.value - state.held_value;
    }
    Ok(u)
}

/// Complete record of an event-triggered run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtTrace {
    pub n: usize,
    pub config: EtConfig,
    pub triggers: Vec<TriggerRecord>,
    pub deliveries: Vec<Delivery>,
    /// Applied input per trajectory sample.
    pub inputs: Vec<Vec<f64>>,
    /// Smallest realized inter-event time; `inf` when no agent triggered twice.
    pub tau0: f64,
    /// Triggers pushed to `t_k + crossing_tol` because the threshold was
    /// crossed earlier than the detection resolution.
    pub floored_triggers: usize,
    pub final_spread: f64,
    pub hat_w: HatW,
}

impl EtTrace {
    /// Trigger records of one agent, in time order.
    pub fn agent_triggers(&self, i: usize) -> impl Iterator<Item = &TriggerRecord> {
        self.triggers.iter().filter(move |r| r.agent == i)
    }

    /// CSV `agent,k,trigger_time,held_value,cause` with 1-based agents.
    pub fn write_triggers_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "agent,k,trigger_time,held_value,cause")?;
        for r in &self.triggers {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.agent + 1,
                r.k,
                sci17(r.time),
                sci17(r.held_value),
                r.cause.as_str()
            )?;
        }
        Ok(())
    }

    /// CSV `time,from,to,from_trigger_time,value` with 1-based agents.
    pub fn write_deliveries_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,from,to,from_trigger_time,value")?;
        for d in &self.deliveries {
            writeln!(
                out,
                "{},{},{},{},{}",
                sci17(d.time),
                d.from + 1,
                d.to + 1,
                sci17(d.from_trigger_time),
                sci17(d.value)
            )?;
        }
        Ok(())
    }
}

/// `tau0` and the running minimum `M(t)` as `(trigger time, min so far)`
/// steps, taken over completed inter-event intervals.
pub fn min_inter_event(trace: &EtTrace) -> (f64, Vec<(f64, f64)>) {
    let mut last = vec![None; trace.n];
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    for r in &trace.triggers {
        if let Some(prev) = last[r.agent] {
            gaps.push((r.time, r.time - prev));
        }
        last[r.agent] = Some(r.time);
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut running = f64::INFINITY;
    let profile: Vec<(f64, f64)> = gaps
        .into_iter()
        .map(|(t, g)| {
            running = running.min(g);
            (t, running)
        })
        .collect();
    (running, profile)
}

struct Agent {
    state: AgentTriggerState,
    input: f64,
    next: f64,
    next_cause: TriggerCause,
}

impl Agent {
    fn last_trigger(&self) -> f64 {
        *self
            .state
            .trigger_times
            .last()
            .expect("agents trigger at t = 0")
    }

    fn position(&self, t: f64) -> f64 {
        self.state.held_value + self.input * (t - self.last_trigger())
    }
}

/// Next trigger after `t_k` for constant input `u`: the threshold crossing
/// `|u| (t - t_k) = delta(t)` resolved by bisection, or the timeout.
fn schedule(config: &EtConfig, t_k: f64, u: f64) -> (f64, TriggerCause, bool) {
    let timeout = t_k + config.l0;
    let gap = |t: f64| u.abs() * (t - t_k) - config.delta(t);
    if u == 0.0 || gap(timeout) < 0.0 {
        return (timeout, TriggerCause::Timeout, false);
    }
    let (mut lo, mut hi) = (t_k, timeout);
    while hi - lo > config.crossing_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let floor = t_k + config.crossing_tol;
    if lo < floor {
        (floor, TriggerCause::Threshold, true)
    } else {
        (lo, TriggerCause::Threshold, false)
    }
}

/// Simulates the protocol on `[0, horizon]` with `dx_i/dt = u_i`.
///
/// All agents trigger at `t = 0`, knowing their initial neighbors' states. At
/// each event instant, triggering agents (ascending index) first rebuild their
/// inputs from messages delivered strictly earlier; then every agent's current
/// broadcast is delivered to the agents it is currently a neighbor of.
pub fn simulate_et(
    signal: &SwitchingSignal,
    config: &EtConfig,
    x0: &[f64],
    horizon: f64,
) -> Result<(Trajectory, EtTrace)> {
    config.validate()?;
    let n = signal.n();
    if x0.len() != n {
        return domain(format!(
            "state has {} entries but the signal has {n} nodes",
            x0.len()
        ));
    }
    if !(horizon > 0.0 && horizon <= signal.horizon()) {
        return domain(format!(
            "horizon must lie in (0, {}], got {horizon}",
            signal.horizon()
        ));
    }

    let mut triggers = Vec::new();
    let mut deliveries = Vec::new();
    let mut floored = 0;
    let graph0 = signal.graph_at(0.0);
    let mut agents: Vec<Agent> = (0..n)
        .map(|i| {
            let neighbors: Vec<usize> = graph0.neighbors(i).collect();
            let messages: Vec<UsedMessage> = neighbors
                .iter()
                .map(|&j| UsedMessage {
                    from: j,
                    from_trigger_time: 0.0,
                    value: x0[j],
                })
                .collect();
            let input = messages.iter().map(|m| m.value - x0[i]).sum();
            triggers.push(TriggerRecord {
                agent: i,
                k: 0,
                time: 0.0,
                held_value: x0[i],
                cause: TriggerCause::Initial,
                neighbors,
                messages,
                input,
            });
            let (next, next_cause, f) = schedule(config, 0.0, input);
            floored += usize::from(f);
            Agent {
                state: AgentTriggerState {
                    trigger_times: vec![0.0],
                    held_value: x0[i],
                    ..Default::default()
                },
                input,
                next,
                next_cause,
            }
        })
        .collect();
    deliver_and_accumulate(signal, &mut agents, 0.0, &mut deliveries);

    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut inputs = vec![agents.iter().map(|a| a.input).collect::<Vec<_>>()];
    let mut grid_k = 1usize;
    let mut switches = signal.switches_between(0.0, horizon).peekable();
    let mut t = 0.0;

    loop {
        let next_trigger = agents.iter().map(|a| a.next).fold(f64::INFINITY, f64::min);
        let next_switch = switches.peek().copied().unwrap_or(f64::INFINITY);
        let t_next = next_trigger.min(next_switch).min(horizon);

        loop {
            let g = grid_k as f64 * config.sample_step;
            if g >= t_next {
                break;
            }
            times.push(g);
            states.push(agents.iter().map(|a| a.position(g)).collect());
            inputs.push(agents.iter().map(|a| a.input).collect());
            grid_k += 1;
        }
        if t_next <= t {
            return Err(Error::Numerical {
                time: t,
                msg: "event time failed to advance".into(),
            });
        }
        t = t_next;
        if next_switch == t {
            switches.next();
        }

        let firing: Vec<usize> = (0..n).filter(|&i| agents[i].next == t).collect();
        if t < horizon || !firing.is_empty() {
            let positions: Vec<f64> = agents.iter().map(|a| a.position(t)).collect();
            if positions.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    time: t,
                    msg: "state became non-finite".into(),
                });
            }
            for &i in &firing {
                let a = &mut agents[i];
                a.state.held_value = positions[i];
                a.state.trigger_times.push(t);
                let input = control_input(i, &a.state)?;
                triggers.push(TriggerRecord {
                    agent: i,
                    k: a.state.trigger_times.len() - 1,
                    time: t,
                    held_value: positions[i],
                    cause: a.next_cause,
                    neighbors: a.state.accumulated_neighbors.iter().copied().collect(),
                    messages: a
                        .state
                        .accumulated_neighbors
                        .iter()
                        .map(|&j| {
                            let m = a.state.message_store[&j];
                            UsedMessage {
                                from: j,
                                from_trigger_time: m.from_trigger_time,
                                value: m.value,
                            }
                        })
                        .collect(),
                    input,
                });
                a.input = input;
                a.state.accumulated_neighbors.clear();
                let (next, cause, f) = schedule(config, t, input);
                floored += usize::from(f);
                a.next = next;
                a.next_cause = cause;
            }
            deliver_and_accumulate(signal, &mut agents, t, &mut deliveries);
        }

        if times.last() != Some(&t) {
            times.push(t);
            states.push(agents.iter().map(|a| a.position(t)).collect());
            inputs.push(agents.iter().map(|a| a.input).collect());
        }
        if t >= horizon {
            break;
        }
    }

    let disturbances = vec![vec![0.0; n]; times.len()];
    let traj = Trajectory {
        times,
        states,
        disturbances,
        echo: IntegrationEcho {
            step: config.sample_step,
            order: 0,
            t0: 0.0,
            x0: x0.to_vec(),
        },
    };
    let final_spread = crate::bounds::spread(traj.final_state());
    let mut trace = EtTrace {
        n,
        config: config.clone(),
        triggers,
        deliveries,
        inputs,
        tau0: f64::INFINITY,
        floored_triggers: floored,
        final_spread,
        hat_w: HatW::default(),
    };
    trace
        .triggers
        .sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent.cmp(&b.agent)));
    trace.tau0 = min_inter_event(&trace).0;
    trace.hat_w = reconstruct_with(&traj, &trace)?;
    Ok((traj, trace))
}

/// Delivers every agent's current broadcast over the links active at `t` and
/// adds those links to the receivers' accumulated neighbor sets.
fn deliver_and_accumulate(
    signal: &SwitchingSignal,
    agents: &mut [Agent],
    t: f64,
    log: &mut Vec<Delivery>,
) {
    let graph = signal.graph_at(t);
    for &(j, i) in graph.arcs() {
        let from_trigger_time = agents[j].last_trigger();
        let value = agents[j].state.held_value;
        let store = &mut agents[i].state;
        store.accumulated_neighbors.insert(j);
        let fresh = store
            .message_store
            .get(&j)
            .is_none_or(|m| m.from_trigger_time != from_trigger_time);
        store.message_store.insert(
            j,
            StoredMessage {
                from_trigger_time,
                value,
                last_contact: t,
            },
        );
        if fresh {
            log.push(Delivery {
                time: t,
                from: j,
                to: i,
                from_trigger_time,
                value,
            });
        }
    }
}
