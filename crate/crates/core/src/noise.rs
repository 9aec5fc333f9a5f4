//! Magnetic-field noise as an Ornstein-Uhlenbeck shift of `lambda0`, plus
//! optional microwave phase and amplitude noise.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Level, StateVector, C64};
use crate::error::{Error, Result};
use crate::hamiltonian::{IonLevels, Perturbation};
use crate::propagator::{run_segments, Kernel4, NoiseSource};
use crate::sequence::Segment;

/// Stationary OU process: zero mean, standard deviation `amplitude`
/// (rad/s), autocorrelation `amplitude^2 exp(-|t|/correlation_time)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OuNoise {
    pub amplitude: f64,
    pub correlation_time: f64,
    #[serde(default)]
    pub seed: u64,
}

impl OuNoise {
    pub fn new(amplitude: f64, correlation_time: f64) -> Self {
        OuNoise { amplitude, correlation_time, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::param("amplitude", "must be finite and non-negative"));
        }
        if !(self.correlation_time.is_finite() && self.correlation_time > 0.0) {
            return Err(Error::param("correlation_time", "must be positive"));
        }
        Ok(())
    }

    /// Two-sided power spectral density `2 s^2 tau / (1 + w^2 tau^2)`, in
    /// (rad/s)^2 per (rad/s) with the `int S dw / 2pi = s^2` normalisation.
    pub fn psd(&self, omega: f64) -> f64 {
        let tau = self.correlation_time;
        2.0 * self.amplitude.powi(2) * tau / (1.0 + (omega * tau).powi(2))
    }

    /// Ensemble-averaged coherence `|<rho_{-1,+1}>|/|rho_{-1,+1}(0)|` of an
    /// undressed `|-1>, |+1>` superposition. The relative phase is twice
    /// the integrated shift.
    pub fn bare_coherence(&self, t: f64) -> f64 {
        let tau = self.correlation_time;
        let x = t / tau;
        (-4.0 * (self.amplitude * tau).powi(2) * (x - 1.0 + (-x).exp())).exp()
    }

    /// Amplitude at which [`OuNoise::bare_coherence`] reaches 1/e at `t2`.
    pub fn analytic_amplitude(t2: f64, correlation_time: f64) -> f64 {
        let x = t2 / correlation_time;
        1.0 / (2.0 * correlation_time * (x - 1.0 + (-x).exp()).sqrt())
    }

    /// Leakage rate out of the protected state for a dressing gap `gap`
    /// (rad/s): the noise spectrum at the gap frequency.
    pub fn dressed_leakage_rate(&self, gap: f64) -> f64 {
        self.psd(gap)
    }
}

/// Microwave phase diffusion (rad^2/s) and static relative amplitude
/// error per trajectory. Both default to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DriveNoise {
    #[serde(default)]
    pub phase_diffusion: f64,
    #[serde(default)]
    pub amplitude_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NoiseModel {
    pub zeeman: OuNoise,
    #[serde(default)]
    pub drive: DriveNoise,
}

impl NoiseModel {
    pub fn quiet() -> Self {
        NoiseModel { zeeman: OuNoise::new(0.0, 1.0), drive: DriveNoise::default() }
    }

    pub fn zeeman(amplitude: f64, correlation_time: f64) -> Self {
        NoiseModel { zeeman: OuNoise::new(amplitude, correlation_time), drive: DriveNoise::default() }
    }

    pub fn is_quiet(&self) -> bool {
        self.zeeman.amplitude == 0.0 && self.drive.phase_diffusion == 0.0 && self.drive.amplitude_sigma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        self.zeeman.validate()?;
        if !(self.drive.phase_diffusion >= 0.0 && self.drive.amplitude_sigma >= 0.0) {
            return Err(Error::param("drive", "noise strengths must be non-negative"));
        }
        Ok(())
    }
}

/// Seeded RNG for trajectory `stream` of a run with master `seed`.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Streaming noise realisation. Samples are taken at step midpoints and
/// the OU update uses the exact transition density for the elapsed time.
#[derive(Clone, Debug)]
pub struct NoiseGenerator {
    rng: ChaCha8Rng,
    model: NoiseModel,
    x: f64,
    t_last: Option<f64>,
    phase: [f64; 2],
    scale: [f64; 2],
    cache: (f64, f64, f64),
}

impl NoiseGenerator {
    pub fn new(model: NoiseModel, seed: u64, stream: u64) -> Self {
        let mut rng = trajectory_rng(seed, stream);
        let mut scale = [1.0; 2];
        if model.drive.amplitude_sigma > 0.0 {
            for s in &mut scale {
                let z: f64 = rng.sample(StandardNormal);
                *s = 1.0 + model.drive.amplitude_sigma * z;
            }
        }
        NoiseGenerator { rng, model, x: 0.0, t_last: None, phase: [0.0; 2], scale, cache: (f64::NAN, 0.0, 0.0) }
    }

    /// Zeeman shift at time `t` (rad/s). Times must be non-decreasing.
    pub fn zeeman_at(&mut self, t: f64) -> f64 {
        let ou = self.model.zeeman;
        if ou.amplitude == 0.0 {
            return 0.0;
        }
        match self.t_last {
            None => {
                let z: f64 = self.rng.sample(StandardNormal);
                self.x = ou.amplitude * z;
            }
            Some(t0) => {
                let gap = t - t0;
                if gap > 0.0 {
                    if gap != self.cache.0 {
                        let decay = (-gap / ou.correlation_time).exp();
                        self.cache = (gap, decay, ou.amplitude * (1.0 - decay * decay).sqrt());
                    }
                    let z: f64 = self.rng.sample(StandardNormal);
                    self.x = self.x * self.cache.1 + self.cache.2 * z;
                }
            }
        }
        self.advance_phase(t);
        self.t_last = Some(t);
        self.x
    }

    fn advance_phase(&mut self, t: f64) {
        let d = self.model.drive.phase_diffusion;
        if d == 0.0 {
            return;
        }
        let gap = self.t_last.map_or(0.0, |t0| (t - t0).max(0.0));
        for p in &mut self.phase {
            let z: f64 = self.rng.sample(StandardNormal);
            *p += (d * gap).sqrt() * z;
        }
    }
}

impl NoiseSource for NoiseGenerator {
    fn sample(&mut self, _step: usize, t_mid: f64) -> Perturbation {
        let zeeman = self.zeeman_at(t_mid);
        if self.model.zeeman.amplitude == 0.0 {
            self.advance_phase(t_mid);
            self.t_last = Some(t_mid);
        }
        Perturbation { zeeman, mw_phase: self.phase, mw_scale: self.scale }
    }
}

/// `n_steps` OU values at the midpoints of steps of length `dt`.
pub fn sample_ou(model: &OuNoise, n_steps: usize, dt: f64) -> Result<Vec<f64>> {
    model.validate()?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let mut g = NoiseGenerator::new(NoiseModel { zeeman: *model, drive: DriveNoise::default() }, model.seed, 0);
    Ok((0..n_steps).map(|k| g.zeeman_at((k as f64 + 0.5) * dt)).collect())
}

/// Averaged periodogram of `trace` at angular frequency `omega`, using
/// `segments` equal non-overlapping pieces. Same normalisation as
/// [`OuNoise::psd`].
pub fn estimate_psd(trace: &[f64], dt: f64, omega: f64, segments: usize) -> f64 {
    let segments = segments.max(1);
    let len = trace.len() / segments;
    if len == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for s in 0..segments {
        let chunk = &trace[s * len..(s + 1) * len];
        let sum: C64 = chunk.iter().enumerate().map(|(k, &x)| C64::from_polar(x, -omega * k as f64 * dt)).sum();
        acc += sum.norm_sqr() * dt / len as f64;
    }
    acc / segments as f64
}

/// How [`calibrate_bare_t2`] reads a T2 off a simulated coherence curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum T2Estimator {
    /// Linear interpolation of the first 1/e crossing.
    Crossing,
    /// Weighted least-squares slope of `ln C(t)` through the origin, using
    /// points with `C > 0.1`. Weights `C^2` follow the shot noise of `ln C`.
    #[default]
    LogSlope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CalibrationOptions {
    pub n_traj: usize,
    pub seed: u64,
    /// Integration step; defaults to a tenth of the correlation time
    /// (capped at a fiftieth of the target).
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub estimator: T2Estimator,
    /// Relative bracket width at which bisection stops.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_rel_tol() -> f64 {
    1e-4
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { n_traj: 20_000, seed: 1, dt: None, estimator: T2Estimator::LogSlope, rel_tol: default_rel_tol() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Calibration {
    /// Calibrated OU amplitude, rad/s.
    pub amplitude: f64,
    /// T2 reached with the calibrated amplitude and the calibration seed.
    pub achieved_t2: f64,
    /// Amplitude predicted by the closed-form coherence.
    pub analytic_amplitude: f64,
    pub iterations: usize,
}

/// Simulated bare Ramsey coherence of `(|-1> + |+1>)/sqrt2` with no drives.
/// Returns sample times and `|<rho_{-1,+1}>| * 2`.
pub fn simulate_bare_coherence(
    noise: &OuNoise,
    t_max: f64,
    dt: f64,
    record_every: usize,
    n_traj: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    noise.validate()?;
    let seg = Segment::with_max_step(t_max, dt, vec![])?;
    let record_every = record_every.max(1);
    let n_rec = seg.steps() / record_every + 1;
    let psi0 = StateVector::superposition(&[(Level::Minus, C64::from(FRAC_1_SQRT_2)), (Level::Plus, C64::from(FRAC_1_SQRT_2))])?;
    let model = NoiseModel { zeeman: *noise, drive: DriveNoise::default() };
    let levels = IonLevels::default();
    let per_traj: Vec<Vec<C64>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut gen = NoiseGenerator::new(model, seed, i as u64);
            let mut psi = psi0.amplitudes().clone();
            let mut kernel = Kernel4::default();
            let mut out = Vec::with_capacity(n_rec);
            out.push(coherence(&psi));
            run_segments(
                &levels,
                Default::default(),
                std::slice::from_ref(&seg),
                0.0,
                0,
                &mut psi,
                &mut gen,
                &mut kernel,
                &mut |k, _, v| {
                    if (k + 1) % record_every == 0 {
                        out.push(coherence(v));
                    }
                },
            );
            out
        })
        .collect();
    let times: Vec<f64> = (0..n_rec).map(|j| (j * record_every) as f64 * seg.step).collect();
    let mut mean = vec![C64::new(0.0, 0.0); n_rec];
    for tr in &per_traj {
        for (m, c) in mean.iter_mut().zip(tr) {
            *m += c;
        }
    }
    let c0 = mean[0].norm();
    Ok((times, mean.iter().map(|m| m.norm() / c0).collect()))
}

fn coherence(psi: &nalgebra::DVector<C64>) -> C64 {
    psi[Level::Minus.index()] * psi[Level::Plus.index()].conj()
}

/// T2 read off a coherence curve.
pub fn estimate_t2(times: &[f64], coherence: &[f64], estimator: T2Estimator) -> f64 {
    let target = (-1.0f64).exp();
    match estimator {
        T2Estimator::Crossing => {
            for k in 1..coherence.len() {
                if coherence[k] <= target {
                    let (c0, c1) = (coherence[k - 1], coherence[k]);
                    let f = (c0 - target) / (c0 - c1);
                    return times[k - 1] + f * (times[k] - times[k - 1]);
                }
            }
            f64::INFINITY
        }
        T2Estimator::LogSlope => {
            let (mut num, mut den) = (0.0, 0.0);
            for (&t, &c) in times.iter().zip(coherence) {
                if c <= 0.1 {
                    break;
                }
                num += c * c * t * c.ln();
                den += c * c * t * t;
            }
            if num >= 0.0 || den == 0.0 {
                f64::INFINITY
            } else {
                -den / num
            }
        }
    }
}

/// Finds the OU amplitude whose simulated bare Ramsey coherence has the
/// given T2, by bisection in log-amplitude.
///
/// Every trajectory's accumulated phase is linear in the amplitude, so the
/// unit-amplitude phase paths are simulated once and rescaled at each
/// bisection step. This keeps the random numbers common to all amplitudes
/// and makes the simulated T2 monotone in the amplitude.
pub fn calibrate_bare_t2(target_t2: f64, correlation_time: f64, opts: &CalibrationOptions) -> Result<Calibration> {
    if !(target_t2 > 0.0 && correlation_time > 0.0) {
        return Err(Error::param("target_t2", "target and correlation time must be positive"));
    }
    if opts.n_traj == 0 {
        return Err(Error::param("n_traj", "need at least one trajectory"));
    }
    let dt = opts.dt.unwrap_or((correlation_time / 10.0).min(target_t2 / 50.0));
    let seg = Segment::with_max_step(3.0 * target_t2, dt, vec![])?;
    let dt = seg.step;
    let record_every = ((target_t2 / 40.0) / dt).floor().max(1.0) as usize;
    let n_rec = seg.steps() / record_every + 1;
    let unit = NoiseModel::zeeman(1.0, correlation_time);
    let paths: Vec<Vec<f64>> = (0..opts.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut gen = NoiseGenerator::new(unit, opts.seed, i as u64);
            let mut phi = 0.0;
            let mut out = Vec::with_capacity(n_rec);
            out.push(0.0);
            for k in 0..seg.steps() {
                phi += 2.0 * gen.zeeman_at((k as f64 + 0.5) * dt) * dt;
                if (k + 1) % record_every == 0 {
                    out.push(phi);
                }
            }
            out
        })
        .collect();
    let times: Vec<f64> = (0..n_rec).map(|j| (j * record_every) as f64 * dt).collect();
    let t2_of = |amp: f64| -> f64 {
        let c: Vec<f64> = (0..n_rec)
            .map(|j| {
                let (re, im) = paths.iter().fold((0.0, 0.0), |(re, im), p| {
                    let (s, c) = (amp * p[j]).sin_cos();
                    (re + c, im + s)
                });
                re.hypot(im) / opts.n_traj as f64
            })
            .collect();
        estimate_t2(&times, &c, opts.estimator)
    };
    let analytic = OuNoise::analytic_amplitude(target_t2, correlation_time);
    let (mut lo, mut hi) = (analytic / 4.0, analytic * 4.0);
    let (t_lo, t_hi) = (t2_of(lo), t2_of(hi));
    if !(t_lo > target_t2 && t_hi < target_t2) {
        return Err(Error::NotBracketed { target: target_t2, low: t_hi, high: t_lo });
    }
    let mut iterations = 0;
    while (hi / lo).ln() > opts.rel_tol {
        let mid = (lo * hi).sqrt();
        if t2_of(mid) > target_t2 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let amplitude = (lo * hi).sqrt();
    Ok(Calibration { amplitude, achieved_t2: t2_of(amplitude), analytic_amplitude: analytic, iterations })
}

/// Scales a bare amplitude in Hz (the convention of config files) to rad/s.
pub fn amplitude_from_hz(f: f64) -> f64 {
    TAU * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_trace_is_reproducible_and_stationary() {
        let m = OuNoise { amplitude: 2.0, correlation_time: 1e-3, seed: 9 };
        let a = sample_ou(&m, 200_000, 1e-4).unwrap();
        let b = sample_ou(&m, 200_000, 1e-4).unwrap();
        assert_eq!(a, b);
        let var = a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64;
        assert!((var / 4.0 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn analytic_amplitude_inverts_coherence() {
        let amp = OuNoise::analytic_amplitude(5.3e-3, 1e-4);
        let c = OuNoise::new(amp, 1e-4).bare_coherence(5.3e-3);
        assert!((c - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn estimators_agree_on_exponential() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        let c: Vec<f64> = t.iter().map(|x| (-x / 1.3f64).exp()).collect();
        assert!((estimate_t2(&t, &c, T2Estimator::LogSlope) - 1.3).abs() < 1e-9);
        assert!((estimate_t2(&t, &c, T2Estimator::Crossing) - 1.3).abs() < 5e-3);
    }
}
