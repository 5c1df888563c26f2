use anyhow::Result;
use robcon::graph::{
    check_uqsc, check_usc, is_quasi_strongly_connected, is_strongly_connected, jc_partition,
    min_uqsc_window, min_usc_window, union_over,
};
use robcon::scenarios::{Guarantee, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeStatus {
    pub guarantee: Guarantee,
    pub holds: bool,
}

/// Connectivity facts about a scenario's switching signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub n: usize,
    pub tau_d: f64,
    pub horizon: f64,
    pub switches: usize,
    pub joint_quasi_strongly_connected: bool,
    pub joint_strongly_connected: bool,
    pub joint_diameter: Option<usize>,
    pub min_uqsc_window: Option<f64>,
    pub min_usc_window: Option<f64>,
    pub bidirectional: bool,
    /// Completed jointly connected windows, for bidirectional signals.
    pub jc_windows: Option<usize>,
    pub guarantees: Vec<GuaranteeStatus>,
    /// `(window, uqsc, usc)` for a requested window.
    pub window_check: Option<(f64, bool, bool)>,
}

pub fn connectivity_report(scenario: &Scenario, window: Option<f64>) -> Result<ConnectivityReport> {
    let signal = &scenario.signal;
    let joint = union_over(signal, 0.0, signal.horizon())?;
    let jc_windows = if signal.all_bidirectional() {
        Some(jc_partition(signal)?.boundaries.len())
    } else {
        None
    };
    let guarantees = scenario
        .guarantees
        .iter()
        .map(|g| {
            Ok(GuaranteeStatus {
                guarantee: *g,
                holds: g.holds(signal)?,
            })
        })
        .collect::<robcon::Result<Vec<_>>>()?;
    let window_check = match window {
        Some(w) => Some((w, check_uqsc(signal, w)?, check_usc(signal, w)?)),
        None => None,
    };
    Ok(ConnectivityReport {
        n: signal.n(),
        tau_d: signal.tau_d(),
        horizon: signal.horizon(),
        switches: signal.switch_times().len(),
        joint_quasi_strongly_connected: is_quasi_strongly_connected(&joint),
        joint_strongly_connected: is_strongly_connected(&joint),
        joint_diameter: scenario.joint_diameter().ok(),
        min_uqsc_window: min_uqsc_window(signal),
        min_usc_window: min_usc_window(signal),
        bidirectional: signal.all_bidirectional(),
        jc_windows,
        guarantees,
        window_check,
    })
}
