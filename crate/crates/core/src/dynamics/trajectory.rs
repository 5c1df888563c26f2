use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::format::sci17;

/// Integration settings echoed alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationEcho {
    pub step: f64,
    pub order: u32,
    pub t0: f64,
    pub x0: Vec<f64>,
}

/// Time-stamped state samples and the disturbance values that drove them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    pub echo: IntegrationEcho,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.echo.x0.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.echo.t0
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .map(Vec::as_slice)
            .unwrap_or(&self.echo.x0)
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t);
        (k < self.times.len()).then_some(k)
    }

    /// CSV with header `t,x_1..x_N,w_1..w_N`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.n();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=n).map(|i| format!("w_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for ((t, x), w) in self.times.iter().zip(&self.states).zip(&self.disturbances) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(x.iter().copied())
                .chain(w.iter().copied())
                .map(sci17)
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
