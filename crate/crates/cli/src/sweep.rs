//! Parameter sweeps over a grid of run configurations.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use robcon::format::sci17;

use crate::config::{ExperimentConfig, Generator, ScenarioSource, SweepGrid};
use crate::pipeline::{execute, write_atomic};

pub const SWEEP_HEADER: &str =
    "n,window,amplitude,theta,l0,eps,seed,measured_time,bound,tau0,violations";

/// One grid point; `None` keeps the configured value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridPoint {
    pub n: Option<usize>,
    pub window: Option<f64>,
    pub amplitude: Option<f64>,
    pub theta: Option<f64>,
    pub l0: Option<f64>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub window: Option<f64>,
    pub amplitude: Option<f64>,
    pub theta: Option<f64>,
    pub l0: Option<f64>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub measured_time: Option<f64>,
    pub bound: Option<f64>,
    pub tau0: Option<f64>,
    pub violations: usize,
}

fn axis<T: Copy>(values: &Option<Vec<T>>) -> Vec<Option<T>> {
    match values {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    }
}

/// Cartesian product in the order `n, window, amplitude, theta, l0, eps,
/// seed`, the last axis varying fastest. A grid with no axes, or with an
/// empty axis, has no points.
pub fn grid_points(grid: &SweepGrid) -> Vec<GridPoint> {
    let SweepGrid {
        n,
        window,
        amplitude,
        theta,
        l0,
        eps,
        seed,
    } = grid;
    if n.is_none()
        && window.is_none()
        && amplitude.is_none()
        && theta.is_none()
        && l0.is_none()
        && eps.is_none()
        && seed.is_none()
    {
        return Vec::new();
    }
    let mut points = Vec::new();
    for n in axis(n) {
        for window in axis(window) {
            for amplitude in axis(amplitude) {
                for theta in axis(theta) {
                    for l0 in axis(l0) {
                        for eps in axis(eps) {
                            for seed in axis(seed) {
                                points.push(GridPoint {
                                    n,
                                    window,
                                    amplitude,
                                    theta,
                                    l0,
                                    eps,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    points
}

fn configure(base: &ExperimentConfig, p: &GridPoint) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    if let Some(n) = p.n {
        let ScenarioSource::Generator(g) = &mut config.scenario else {
            bail!("sweeping n needs a generator scenario");
        };
        g.set_n(n)?;
    }
    if let Some(w) = p.window {
        if let ScenarioSource::Generator(Generator::RandomUqsc { window, .. }) =
            &mut config.scenario
        {
            *window = w;
        }
        config.certificate.window = Some(w);
    }
    if p.amplitude.is_some() || p.theta.is_some() || p.l0.is_some() {
        let mut et = match &config.event_triggered {
            Some(et) => et.clone(),
            None => config
                .resolve_scenario()?
                .event_triggered
                .context("sweeping A, theta or L0 needs event-triggered settings")?,
        };
        if let Some(a) = p.amplitude {
            et.amplitude = a;
        }
        if let Some(t) = p.theta {
            et.theta = t;
        }
        if let Some(l) = p.l0 {
            et.l0 = l;
        }
        config.event_triggered = Some(et);
    }
    if let Some(e) = p.eps {
        config.certificate.eps = vec![e];
    }
    if let Some(s) = p.seed {
        config.seed = Some(s);
    }
    Ok(config)
}

/// Runs every grid point in order; artifacts are kept in memory.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    grid_points(grid)
        .iter()
        .map(|p| {
            let config = configure(base, p).with_context(|| format!("grid point {p:?}"))?;
            let scenario = config.resolve_scenario()?;
            let et = scenario.event_triggered.clone();
            let outcome =
                execute(&config, scenario).with_context(|| format!("grid point {p:?}"))?;
            let first = outcome.report.convergence.first();
            Ok(SweepRow {
                n: outcome.report.n,
                window: outcome.certificates.grc.as_ref().map(|c| c.window),
                amplitude: et.as_ref().map(|e| e.amplitude),
                theta: et.as_ref().map(|e| e.theta),
                l0: et.as_ref().map(|e| e.l0),
                eps: first.map(|r| r.eps),
                seed: outcome.report.seed,
                measured_time: first.and_then(|r| r.measured),
                bound: first.and_then(|r| r.bound_uqsc),
                tau0: outcome.report.event_triggered.as_ref().map(|e| e.tau0),
                violations: outcome.report.violations,
            })
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(sci17).unwrap_or_default()
}

pub fn write_sweep_csv(rows: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            cell(r.window),
            cell(r.amplitude),
            cell(r.theta),
            cell(r.l0),
            cell(r.eps),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            cell(r.measured_time),
            cell(r.bound),
            cell(r.tau0),
            r.violations
        )?;
    }
    Ok(())
}

pub fn write_sweep(rows: &[SweepRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    write_atomic(&dir.join("sweep.csv"), |out| write_sweep_csv(rows, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_fixed() {
        let grid = SweepGrid {
            eps: Some(vec![0.5, 0.1]),
            seed: Some(vec![1, 2]),
            ..SweepGrid::default()
        };
        let pts = grid_points(&grid);
        let pairs: Vec<_> = pts
            .iter()
            .map(|p| (p.eps.unwrap(), p.seed.unwrap()))
            .collect();
        assert_eq!(pairs, vec![(0.5, 1), (0.5, 2), (0.1, 1), (0.1, 2)]);
    }

    #[test]
    fn empty_grids_have_no_points() {
        assert!(grid_points(&SweepGrid::default()).is_empty());
        let grid = SweepGrid {
            eps: Some(vec![]),
            seed: Some(vec![1]),
            ..SweepGrid::default()
        };
        assert!(grid_points(&grid).is_empty());
    }
}
