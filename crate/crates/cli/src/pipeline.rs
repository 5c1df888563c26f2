//! Single experiment runs: certificate construction, simulation, bound
//! verification and artifact export.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use robcon::bounds::{
    bidir_girc_bound, convergence_time, convergence_time_bound, grc_bound,
    ln_convergence_time_bound, metrics, spread, verify_bidir_girc, verify_dini_envelopes,
    verify_girc, verify_grc, BidirCertificate, BoundReport, ConvergenceMode, GrcCertificate,
};
use robcon::dynamics::{default_step, integrate, Trajectory};
use robcon::event_triggered::{
    classify, et_envelope, simulate_et, Compliance, ComplianceReport, EtConfig, EtTrace,
};
use robcon::format::sci17;
use robcon::graph::{check_uqsc, check_usc, min_uqsc_window};
use robcon::scenarios::Scenario;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode};

/// Slack on the threshold check `|x_i - held_i| <= delta(t)`.
const THRESHOLD_TOL: f64 = 1e-9;
/// Slack on the `hat_w` rewrite identity.
const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub grc: Option<GrcCertificate>,
    /// Where the window came from: `override`, `declared` or `measured`.
    pub window_source: Option<String>,
    pub usc: bool,
    pub bidir: Option<BidirCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
}

impl Check {
    fn from_bound(report: &BoundReport) -> Self {
        Check {
            name: report.bound.clone(),
            samples: report.samples,
            violations: report.violations.len(),
            worst_margin: Some(report.worst_margin),
        }
    }

    fn counted(name: &str, samples: usize, violations: usize) -> Self {
        Check {
            name: name.to_string(),
            samples,
            violations,
            worst_margin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Measured from `t0`; absent when the ratio never reached `eps`.
    pub measured: Option<f64>,
    pub bound_uqsc: Option<f64>,
    /// `ln` of `bound_uqsc`, finite when the bound itself overflows.
    pub ln_bound_uqsc: Option<f64>,
    pub bound_usc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtSummary {
    pub triggers: usize,
    pub deliveries: usize,
    pub tau0: f64,
    pub floored_triggers: usize,
    pub final_spread: f64,
    pub identity_residual: f64,
    pub hat_w_bound_ratio: f64,
    pub compliance: Option<ComplianceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub mode: Mode,
    pub n: usize,
    pub t0: f64,
    pub horizon: f64,
    pub step: Option<f64>,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    pub convergence: Vec<ConvergenceRow>,
    pub event_triggered: Option<EtSummary>,
    pub violations: usize,
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub certificates: Certificates,
    pub report: Report,
    pub trajectory: Option<Trajectory>,
    /// `(t, max, min, H, bound)` per sample.
    pub metrics: Vec<[f64; 5]>,
    pub et_trace: Option<EtTrace>,
}

impl RunOutcome {
    pub fn ok(&self) -> bool {
        self.report.violations == 0
    }
}

pub fn certificates(config: &ExperimentConfig, scenario: &Scenario) -> Result<Certificates> {
    let signal = &scenario.signal;
    let window = match (config.certificate.window, scenario.declared_window()) {
        (Some(w), _) => Some((w, "override")),
        (None, Some(w)) => Some((w, "declared")),
        (None, None) => min_uqsc_window(signal).map(|w| (w, "measured")),
    };
    let (grc, window_source, usc) = match window {
        Some((w, source)) => {
            if !check_uqsc(signal, w)? {
                bail!("the signal is not uniformly quasi-strongly connected with window {w}");
            }
            let cert = scenario
                .grc_certificate(Some(w))
                .context("cannot build the certificate")?;
            (Some(cert), Some(source.to_string()), check_usc(signal, w)?)
        }
        None => (None, None, false),
    };
    let bidir = if signal.all_bidirectional() {
        Some(scenario.bidir_certificate()?).filter(|c| c.partition.complete)
    } else {
        None
    };
    Ok(Certificates {
        grc,
        window_source,
        usc,
        bidir,
    })
}

fn convergence_rows(
    eps: &[f64],
    certs: &Certificates,
    traj: Option<&Trajectory>,
) -> Result<Vec<ConvergenceRow>> {
    eps.iter()
        .map(|&e| {
            let measured = match traj {
                Some(t) if spread(&t.echo.x0) > 0.0 => {
                    convergence_time(t, e)?.map(|at| at - t.t0())
                }
                _ => None,
            };
            let bound = |mode| {
                certs
                    .grc
                    .as_ref()
                    .map(|c| convergence_time_bound(c, e, mode))
                    .transpose()
            };
            Ok(ConvergenceRow {
                eps: e,
                measured,
                bound_uqsc: bound(ConvergenceMode::Uqsc)?,
                ln_bound_uqsc: certs
                    .grc
                    .as_ref()
                    .map(|c| ln_convergence_time_bound(c, e, ConvergenceMode::Uqsc))
                    .transpose()?,
                bound_usc: if certs.usc {
                    bound(ConvergenceMode::Usc)?
                } else {
                    None
                },
            })
        })
        .collect()
}

fn simulate(
    scenario: &Scenario,
    certs: &Certificates,
    step: f64,
    checks: &mut Vec<Check>,
) -> Result<(Trajectory, Vec<[f64; 5]>)> {
    let traj = integrate(
        &scenario.signal,
        &scenario.weights,
        &scenario.disturbance,
        scenario.t0,
        &scenario.x0,
        step,
        scenario.horizon,
    )?;
    let w = &scenario.disturbance;
    let dini = verify_dini_envelopes(&traj, w);
    checks.push(Check::counted(
        "dini_envelopes",
        dini.pairs,
        dini.violations.len(),
    ));
    if let Some(cert) = &certs.grc {
        checks.push(Check::from_bound(&verify_grc(&traj, cert, w)));
        let girc = verify_girc(&traj, cert, w);
        checks.push(Check::from_bound(&girc.plain));
        checks.push(Check::from_bound(&girc.sharpened));
        checks.push(Check::counted(
            "sharpened_not_above_plain",
            girc.plain.samples,
            girc.sharpened_above_plain,
        ));
    }
    let bidir = certs.bidir.as_ref().filter(|_| scenario.t0 == 0.0);
    if let Some(cert) = bidir {
        checks.push(Check::from_bound(&verify_bidir_girc(&traj, cert, w)?));
    }

    let h0 = spread(&scenario.x0);
    let w_inf = w.sup_norm(scenario.t0, scenario.horizon);
    let m = metrics(&traj);
    let mut rows = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let t = m.times[k];
        let bound = if let Some(cert) = &certs.grc {
            grc_bound(cert, h0, t - scenario.t0, w_inf)
        } else if let Some(cert) = bidir {
            bidir_girc_bound(cert, h0, t, w)?
        } else {
            f64::NAN
        };
        rows.push([t, m.max[k], m.min[k], m.spread[k], bound]);
    }
    Ok((traj, rows))
}

fn threshold_violations(traj: &Trajectory, trace: &EtTrace) -> usize {
    let cfg = &trace.config;
    let mut count = 0;
    for i in 0..trace.n {
        let recs: Vec<_> = trace.agent_triggers(i).collect();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let k = recs.partition_point(|r| r.time <= *t);
            let Some(rec) = k.checked_sub(1).map(|k| recs[k]) else {
                continue;
            };
            if (x[i] - rec.held_value).abs() > cfg.delta(*t) + THRESHOLD_TOL {
                count += 1;
            }
        }
    }
    count
}

fn event_triggered(
    scenario: &Scenario,
    certs: &Certificates,
    config: &EtConfig,
    checks: &mut Vec<Check>,
) -> Result<(Trajectory, EtTrace, EtSummary, Vec<[f64; 5]>)> {
    if scenario.t0 != 0.0 {
        bail!(
            "event-triggered runs start at t = 0, the scenario starts at {}",
            scenario.t0
        );
    }
    let (traj, trace) = simulate_et(&scenario.signal, config, &scenario.x0, scenario.horizon)?;
    let samples = traj.len() * trace.n;
    checks.push(Check::counted(
        "threshold",
        samples,
        threshold_violations(&traj, &trace),
    ));
    checks.push(Check::counted(
        "hat_w_identity",
        samples,
        usize::from(trace.hat_w.identity_residual > IDENTITY_TOL),
    ));
    checks.push(Check::counted(
        "hat_w_envelope",
        samples,
        trace.hat_w.bound_violations,
    ));

    let unit = certs.grc.as_ref().map(GrcCertificate::with_unit_weights);
    let compliance = unit.as_ref().map(|u| classify(u, config)).transpose()?;
    let compliant = compliance
        .as_ref()
        .is_some_and(|c| c.label == Compliance::TheoremCompliant);
    let h0 = spread(&scenario.x0);
    let m = metrics(&traj);
    let mut rows = Vec::with_capacity(traj.len());
    let mut envelope_violations = 0;
    for k in 0..traj.len() {
        let t = m.times[k];
        let bound = match (&unit, compliant) {
            (Some(u), true) => et_envelope(u, config, h0, trace.tau0.min(config.l0), t)?,
            _ => f64::NAN,
        };
        if m.spread[k] > bound + 1e-6 * h0.max(1.0) {
            envelope_violations += 1;
        }
        rows.push([t, m.max[k], m.min[k], m.spread[k], bound]);
    }
    if compliant {
        checks.push(Check::counted(
            "et_envelope",
            traj.len(),
            envelope_violations,
        ));
    }
    let summary = EtSummary {
        triggers: trace.triggers.len(),
        deliveries: trace.deliveries.len(),
        tau0: trace.tau0,
        floored_triggers: trace.floored_triggers,
        final_spread: trace.final_spread,
        identity_residual: trace.hat_w.identity_residual,
        hat_w_bound_ratio: trace.hat_w.max_bound_ratio,
        compliance,
    };
    Ok((traj, trace, summary, rows))
}

/// Runs the configured experiment in memory.
pub fn execute(config: &ExperimentConfig, scenario: Scenario) -> Result<RunOutcome> {
    let certs = certificates(config, &scenario)?;
    let mut checks = Vec::new();
    let step = config
        .integrator
        .step
        .unwrap_or_else(|| default_step(scenario.signal.tau_d()));
    let (trajectory, metrics, et_trace, et_summary, step) = match config.mode {
        Mode::CertifyOnly => (None, Vec::new(), None, None, None),
        Mode::Simulate => {
            let (traj, rows) = simulate(&scenario, &certs, step, &mut checks)?;
            (Some(traj), rows, None, None, Some(step))
        }
        Mode::EventTriggered => {
            let et = scenario
                .event_triggered
                .as_ref()
                .context("mode event_triggered needs an event_triggered section")?;
            let (traj, trace, summary, rows) = event_triggered(&scenario, &certs, et, &mut checks)?;
            (Some(traj), rows, Some(trace), Some(summary), None)
        }
    };
    let convergence = convergence_rows(&config.certificate.eps, &certs, trajectory.as_ref())?;
    if config.mode == Mode::Simulate && scenario.disturbance.is_zero() && certs.grc.is_some() {
        let late = convergence
            .iter()
            .filter(|r| {
                let bound = r.bound_uqsc.unwrap_or(f64::INFINITY);
                match r.measured {
                    Some(m) => m > bound,
                    None => bound <= scenario.horizon - scenario.t0,
                }
            })
            .count();
        checks.push(Check::counted("convergence_time", convergence.len(), late));
    }
    let report = Report {
        scenario: scenario.name.clone(),
        mode: config.mode,
        n: scenario.n(),
        t0: scenario.t0,
        horizon: scenario.horizon,
        step,
        seed: scenario.seed,
        violations: checks.iter().map(|c| c.violations).sum(),
        checks,
        convergence,
        event_triggered: et_summary,
    };
    Ok(RunOutcome {
        scenario,
        certificates: certs,
        report,
        trajectory,
        metrics,
        et_trace,
    })
}

fn optional(v: Option<f64>) -> String {
    v.map(sci17).unwrap_or_else(|| "-".into())
}

pub fn summary_text(outcome: &RunOutcome) -> String {
    let r = &outcome.report;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario {} ({:?}), N = {}, t in [{}, {}]",
        r.scenario, r.mode, r.n, r.t0, r.horizon
    );
    if let Some(c) = &outcome.certificates.grc {
        let _ = writeln!(
            s,
            "certificate: T = {} ({}), d0 = {}, ln xi = {}, ln lambda0 = {}",
            c.window,
            outcome.certificates.window_source.as_deref().unwrap_or("-"),
            c.d0,
            sci17(c.ln_xi),
            sci17(c.ln_lambda0)
        );
    }
    if let Some(c) = &outcome.certificates.bidir {
        let _ = writeln!(
            s,
            "bidirectional certificate: d0 = {}, ln eta* = {}, windows = {}",
            c.d0,
            sci17(c.ln_eta_star),
            c.partition.boundaries.len()
        );
    }
    for row in &r.convergence {
        let _ = writeln!(
            s,
            "eps {}: measured {}, bound {} (ln {})",
            row.eps,
            optional(row.measured),
            optional(row.bound_uqsc),
            optional(row.ln_bound_uqsc)
        );
    }
    if let Some(et) = &r.event_triggered {
        let label = et
            .compliance
            .as_ref()
            .map_or(Compliance::Empirical, |c| c.label);
        let _ = writeln!(
            s,
            "event-triggered: {} triggers, tau0 = {}, final H = {}, label {:?}",
            et.triggers,
            sci17(et.tau0),
            sci17(et.final_spread),
            label
        );
    }
    for c in &r.checks {
        let _ = writeln!(
            s,
            "check {}: {} violations over {} samples",
            c.name, c.violations, c.samples
        );
    }
    let _ = writeln!(s, "total violations: {}", r.violations);
    s
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(
    path: &Path,
    contents: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    {
        let mut out = std::io::BufWriter::new(tmp.as_file_mut());
        contents(&mut out)?;
        out.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    write_json(&dir.join("scenario.json"), &outcome.scenario)?;
    write_json(&dir.join("certificate.json"), &outcome.certificates)?;
    write_json(&dir.join("report.json"), &outcome.report)?;
    write_atomic(&dir.join("summary.txt"), |out| {
        out.write_all(summary_text(outcome).as_bytes())
    })?;
    if let Some(traj) = &outcome.trajectory {
        write_atomic(&dir.join("trajectory.csv"), |out| traj.write_csv(out))?;
        write_atomic(&dir.join("metrics.csv"), |out| {
            writeln!(out, "t,max,min,H,bound")?;
            for row in &outcome.metrics {
                let cells: Vec<String> = row
                    .iter()
                    .map(|&v| if v.is_nan() { String::new() } else { sci17(v) })
                    .collect();
                writeln!(out, "{}", cells.join(","))?;
            }
            Ok(())
        })?;
    }
    if let Some(trace) = &outcome.et_trace {
        write_atomic(&dir.join("triggers.csv"), |out| {
            trace.write_triggers_csv(out)
        })?;
        write_atomic(&dir.join("deliveries.csv"), |out| {
            trace.write_deliveries_csv(out)
        })?;
    }
    Ok(())
}

/// Resolves the scenario, runs it and writes every artifact to the config's
/// output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let scenario = config.resolve_scenario()?;
    let outcome = execute(config, scenario)?;
    write_artifacts(&outcome, &config.output_dir)?;
    Ok(outcome)
}
