//! End-to-end protocols: preparation, noisy hold, readout, shot sampling
//! and fitting.

mod comb;
mod engine;
mod protocols;
mod scan;
mod sideband;

pub use comb::{floquet_qubit_shift, run_comb, CombReport};
pub use engine::HoldScan;
pub use protocols::{
    noisy_hold_step, run_lifetime, run_rabi, run_ramsey, LifetimeConfig, LifetimeReport, OscillationReport, RabiConfig, RamseyConfig,
};
pub use scan::{robustness_grid, scan_stirap, ScanAxis, ScanRow};
pub use sideband::{run_sideband_gate, SidebandConfig, SidebandReport, FOCK_ABORT_LIMIT, FOCK_WARN_LIMIT};

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit, FitModel, FitResult};
use crate::noise::trajectory_rng;

/// State-preparation and measurement errors applied to a dark-state
/// probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SpamModel {
    /// Probability that the initial state is not prepared.
    #[serde(default)]
    pub preparation_error: f64,
    /// Probability that a dark ion is registered as bright.
    #[serde(default)]
    pub dark_to_bright: f64,
    /// Probability that a bright ion is registered as dark.
    #[serde(default)]
    pub bright_to_dark: f64,
}

impl SpamModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("preparation_error", self.preparation_error),
            ("dark_to_bright", self.dark_to_bright),
            ("bright_to_dark", self.bright_to_dark),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} is not a probability")));
            }
        }
        Ok(())
    }

    /// Measured dark fraction for a true dark probability `p`. A failed
    /// preparation ends bright.
    pub fn apply(&self, p: f64) -> f64 {
        let dark = (1.0 - self.preparation_error) * p;
        dark * (1.0 - self.dark_to_bright) + (1.0 - dark) * self.bright_to_dark
    }

    /// Slope of [`SpamModel::apply`], used to scale uncertainties.
    pub fn gain(&self) -> f64 {
        (1.0 - self.preparation_error) * (1.0 - self.dark_to_bright - self.bright_to_dark)
    }
}

/// Which data a protocol fits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FitSource {
    /// Trajectory-averaged probabilities with their standard errors.
    #[default]
    Ensemble,
    /// Shot-sampled dark fractions with binomial errors.
    Shots,
}

/// One measured curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentResult {
    pub name: String,
    pub x_label: String,
    pub x: Vec<f64>,
    /// Expected measured dark fraction (ensemble mean after SPAM).
    pub mean: Vec<f64>,
    /// Standard error of `mean` from the finite trajectory ensemble.
    pub stderr: Vec<f64>,
    pub n_traj: usize,
    pub n_reps: u32,
    /// Dark counts out of `n_reps` shots per point.
    pub counts: Vec<u64>,
    pub fit: Option<FitResult>,
}

impl ExperimentResult {
    pub fn shot_fraction(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_reps.max(1) as f64).collect()
    }

    /// Fits `model`, to the ensemble curve or to the shots.
    pub fn fit_with(&self, model: FitModel, source: FitSource) -> Result<FitResult> {
        match source {
            FitSource::Ensemble => {
                let sigma = self.stderr.iter().all(|s| *s > 0.0).then_some(self.stderr.as_slice());
                fit(model, &self.x, &self.mean, sigma)
            }
            FitSource::Shots => {
                if self.n_reps == 0 {
                    return Err(Error::param("n_reps", "no shots to fit"));
                }
                let n = self.n_reps as f64;
                let y = self.shot_fraction();
                // binomial errors, floored at one count
                let s: Vec<f64> = y.iter().map(|p| (p * (1.0 - p) / n).sqrt().max(1.0 / n)).collect();
                fit(model, &self.x, &y, Some(&s))
            }
        }
    }
}

/// Binomial dark counts for each probability in `p`, from stream
/// `stream` of `seed`.
pub fn sample_shots(p: &[f64], n_reps: u32, seed: u64, stream: u64) -> Vec<u64> {
    let mut rng = trajectory_rng(seed, stream);
    p.iter()
        .map(|&q| {
            let q = q.clamp(0.0, 1.0);
            Binomial::new(n_reps as u64, q).map(|b| b.sample(&mut rng)).unwrap_or(0)
        })
        .collect()
}

/// Stream used for shot sampling, disjoint from trajectory streams.
pub(crate) const SHOT_STREAM: u64 = 1 << 62;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spam_reproduces_plateau() {
        let s = SpamModel { preparation_error: 0.035, dark_to_bright: 0.035, bright_to_dark: 0.0 };
        assert!((s.apply(1.0) - 0.931225).abs() < 1e-12);
        assert_eq!(SpamModel::default().apply(0.37), 0.37);
    }

    #[test]
    fn shots_are_reproducible() {
        let p = [0.1, 0.5, 0.9];
        assert_eq!(sample_shots(&p, 100, 3, SHOT_STREAM), sample_shots(&p, 100, 3, SHOT_STREAM));
        assert_eq!(sample_shots(&[1.0, 0.0], 7, 1, 0), vec![7, 0]);
    }
}
