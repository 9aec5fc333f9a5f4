//! Levenberg-Marquardt least squares for the decay and oscillation models
//! used in the experiment reports.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FitModel {
    /// `a exp(-x/tau)`
    Exponential,
    /// `c + a cos(2 pi f x + phi)`
    Sinusoid,
    /// `c + a exp(-x/tau) cos(2 pi f x + phi)`
    DampedSinusoid,
}

impl FitModel {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FitModel::Exponential => &["amplitude", "tau"],
            FitModel::Sinusoid => &["offset", "amplitude", "frequency", "phase"],
            FitModel::DampedSinusoid => &["offset", "amplitude", "tau", "frequency", "phase"],
        }
    }

    pub fn eval(self, p: &[f64], x: f64) -> f64 {
        match self {
            FitModel::Exponential => p[0] * (-x / p[1]).exp(),
            FitModel::Sinusoid => p[0] + p[1] * (TAU * p[2] * x + p[3]).cos(),
            FitModel::DampedSinusoid => p[0] + p[1] * (-x / p[2]).exp() * (TAU * p[3] * x + p[4]).cos(),
        }
    }

    fn canonical(self, p: &mut [f64]) {
        let (amp, freq, phase, taus): (Option<usize>, Option<usize>, Option<usize>, &[usize]) = match self {
            FitModel::Exponential => (None, None, None, &[1]),
            FitModel::Sinusoid => (Some(1), Some(2), Some(3), &[]),
            FitModel::DampedSinusoid => (Some(1), Some(3), Some(4), &[2]),
        };
        if let (Some(f), Some(ph)) = (freq, phase) {
            if p[f] < 0.0 {
                p[f] = -p[f];
                p[ph] = -p[ph];
            }
        }
        if let (Some(a), Some(ph)) = (amp, phase) {
            if p[a] < 0.0 {
                p[a] = -p[a];
                p[ph] += PI;
            }
            p[ph] = (p[ph] + PI).rem_euclid(TAU) - PI;
        }
        for &t in taus {
            p[t] = p[t].abs();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitResult {
    pub model: FitModel,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// One-sigma uncertainties from the covariance matrix.
    pub errors: Vec<f64>,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.names.iter().position(|n| n == name).map(|i| (self.params[i], self.errors[i]))
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |v| v.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }
}

/// Fits `model` to `(x, y)`. With `sigma`, the uncertainties are taken as
/// absolute; without, unit weights are used and the covariance is scaled
/// by the reduced chi-square.
pub fn fit(model: FitModel, x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    let np = model.names().len();
    if x.len() != y.len() || sigma.is_some_and(|s| s.len() != x.len()) {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    if x.len() <= np {
        return Err(Error::DegenerateFit(format!("{} points for {} parameters", x.len(), np)));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite data".into()));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => {
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::DegenerateFit("uncertainties must be positive".into()));
            }
            s.iter().map(|v| 1.0 / v).collect()
        }
        None => vec![1.0; x.len()],
    };
    let starts = initial_guesses(model, x, y);
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    let mut last_err = None;
    for p0 in starts {
        match levenberg_marquardt(model, x, y, &w, p0) {
            Ok((p, chi2, it)) => {
                if best.as_ref().is_none_or(|b| chi2 < b.1) {
                    best = Some((p, chi2, it));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (mut p, chi2, iterations) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or(Error::DegenerateFit("no starting point".into()))),
    };
    let j = jacobian(model, x, &w, &p);
    let jtj = j.transpose() * &j;
    let cov = jtj.try_inverse().ok_or_else(|| Error::DegenerateFit("singular normal matrix; parameters are not identifiable".into()))?;
    let dof = (x.len() - np) as f64;
    let reduced = chi2 / dof;
    let scale = if sigma.is_some() { 1.0 } else { reduced };
    let errors: Vec<f64> = (0..np).map(|i| (cov[(i, i)] * scale).max(0.0).sqrt()).collect();
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::DegenerateFit("non-finite parameter uncertainty".into()));
    }
    model.canonical(&mut p);
    if matches!(model, FitModel::Sinusoid | FitModel::DampedSinusoid) {
        let spread = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - y.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if p[1] <= 1e-9 * spread.max(f64::MIN_POSITIVE) || spread == 0.0 {
            return Err(Error::DegenerateFit("oscillation amplitude is zero".into()));
        }
    }
    Ok(FitResult {
        model,
        names: model.names().iter().map(|s| s.to_string()).collect(),
        params: p,
        errors,
        chi2,
        reduced_chi2: reduced,
        iterations,
    })
}

fn chi2(model: FitModel, x: &[f64], y: &[f64], w: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(y).zip(w).map(|((&xi, &yi), &wi)| ((yi - model.eval(p, xi)) * wi).powi(2)).sum()
}

fn jacobian(model: FitModel, x: &[f64], w: &[f64], p: &[f64]) -> DMatrix<f64> {
    let np = p.len();
    let mut j = DMatrix::zeros(x.len(), np);
    let mut q = p.to_vec();
    for k in 0..np {
        let h = 1e-6 * p[k].abs().max(1e-8);
        q[k] = p[k] + h;
        let plus: Vec<f64> = x.iter().map(|&xi| model.eval(&q, xi)).collect();
        q[k] = p[k] - h;
        for (i, &xi) in x.iter().enumerate() {
            j[(i, k)] = w[i] * (plus[i] - model.eval(&q, xi)) / (2.0 * h);
        }
        q[k] = p[k];
    }
    j
}

fn levenberg_marquardt(model: FitModel, x: &[f64], y: &[f64], w: &[f64], mut p: Vec<f64>) -> Result<(Vec<f64>, f64, usize)> {
    let mut c = chi2(model, x, y, w, &p);
    let mut mu = 1e-3;
    for it in 0..MAX_ITER {
        let j = jacobian(model, x, w, &p);
        let r = DVector::from_iterator(x.len(), x.iter().zip(y).zip(w).map(|((&xi, &yi), &wi)| (yi - model.eval(&p, xi)) * wi));
        let jtj = j.transpose() * &j;
        let g = j.transpose() * r;
        if g.amax() <= 1e-14 * (1.0 + c) {
            return Ok((p, c, it));
        }
        let mut accepted = false;
        while mu < 1e16 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&g) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let ct = chi2(model, x, y, w, &trial);
            if ct.is_finite() && ct <= c {
                let small_step = delta.iter().zip(&p).all(|(d, v)| d.abs() <= 1e-10 * (v.abs() + 1e-10));
                let small_gain = c - ct <= 1e-13 * c.max(f64::MIN_POSITIVE);
                p = trial;
                c = ct;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if small_step || small_gain {
                    return Ok((p, c, it + 1));
                }
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            // no downhill step at any damping: a local minimum to working precision
            return Ok((p, c, it));
        }
    }
    Err(Error::FitNotConverged { iterations: MAX_ITER, chi2: c })
}

fn initial_guesses(model: FitModel, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let span = x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - x.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let span = if span > 0.0 { span } else { 1.0 };
    match model {
        FitModel::Exponential => {
            let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(&a, &b)| (a, b.ln())).collect();
            let (slope, intercept) = linear_regression(&pts).unwrap_or((-1.0 / span, y[0].abs().max(1e-12).ln()));
            let tau = if slope < 0.0 { -1.0 / slope } else { 10.0 * span };
            vec![vec![intercept.exp(), tau], vec![y.iter().cloned().fold(0.0, f64::max), span]]
        }
        FitModel::Sinusoid | FitModel::DampedSinusoid => {
            let freqs = periodogram_peaks(x, y, span, 3);
            freqs
                .into_iter()
                .map(|f| {
                    let (c, a, ph) = harmonic_fit(x, y, f);
                    if model == FitModel::Sinusoid {
                        vec![c, a, f, ph]
                    } else {
                        vec![c, a, span, f, ph]
                    }
                })
                .collect()
        }
    }
}

fn linear_regression(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Strongest frequencies of a (possibly non-uniform) sampling, from a
/// direct Fourier sum on a grid oversampled tenfold.
fn periodogram_peaks(x: &[f64], y: &[f64], span: f64, count: usize) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let df = 0.1 / span;
    let fmax = 0.5 * x.len() as f64 / span;
    let n = (fmax / df).ceil() as usize;
    let power: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let f = k as f64 * df;
            let (mut re, mut im) = (0.0, 0.0);
            for (&xi, &yi) in x.iter().zip(y) {
                let (s, c) = (TAU * f * xi).sin_cos();
                re += (yi - mean) * c;
                im += (yi - mean) * s;
            }
            (f, re * re + im * im)
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (0..power.len())
        .filter(|&i| (i == 0 || power[i].1 >= power[i - 1].1) && (i + 1 == power.len() || power[i].1 >= power[i + 1].1))
        .map(|i| power[i])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out: Vec<f64> = peaks.iter().take(count).map(|p| p.0).collect();
    if out.is_empty() {
        out.push(1.0 / span);
    }
    out
}

/// Linear least squares of `c + a cos(2 pi f x + ph)` at fixed `f`.
fn harmonic_fit(x: &[f64], y: &[f64], f: f64) -> (f64, f64, f64) {
    let m = DMatrix::from_fn(x.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => (TAU * f * x[i]).cos(),
        _ => (TAU * f * x[i]).sin(),
    });
    let rhs = DVector::from_column_slice(y);
    let mtm = m.transpose() * &m;
    let mty = m.transpose() * rhs;
    match mtm.lu().solve(&mty) {
        Some(s) => {
            // c + A cos + B sin = c + R cos(theta - ph') with ph = -atan2(B, A)
            (s[0], s[1].hypot(s[2]), -s[2].atan2(s[1]))
        }
        None => (0.0, 0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_exponential() {
        let x: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| 0.9 * (-t / 1.7f64).exp()).collect();
        let r = fit(FitModel::Exponential, &x, &y, None).unwrap();
        assert!((r.value("tau") - 1.7).abs() < 1e-8);
    }

    #[test]
    fn recovers_damped_sinusoid_with_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let x: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let truth = [0.5, 0.4, 1.2, 3.3, 0.7];
        let y: Vec<f64> = x.iter().map(|&t| FitModel::DampedSinusoid.eval(&truth, t) + noise.sample(&mut rng)).collect();
        let r = fit(FitModel::DampedSinusoid, &x, &y, Some(&vec![0.01; 200])).unwrap();
        for (k, name) in ["offset", "amplitude", "tau", "frequency", "phase"].iter().enumerate() {
            let (v, e) = r.get(name).unwrap();
            assert!((v - truth[k]).abs() < 4.0 * e, "{name}: {v} +- {e}");
        }
    }

    #[test]
    fn constant_data_is_flagged() {
        let x: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let y = vec![0.3; 20];
        assert!(fit(FitModel::Sinusoid, &x, &y, None).is_err());
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit(FitModel::Sinusoid, &[0.0, 1.0], &[0.0, 1.0], None), Err(Error::DegenerateFit(_))));
    }
}
