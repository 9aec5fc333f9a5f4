use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use super::{sample_shots, ExperimentResult, FitSource, HoldScan, SpamModel, SHOT_STREAM};
use crate::basis::{Level, StateVector};
use crate::error::{Error, Result};
use crate::fit::FitModel;
use crate::hamiltonian::{Frame, IonLevels, Transition};
use crate::noise::NoiseModel;
use crate::sequence::{pi_pulse, rf_half_pi_time, rf_pair, Segment, StirapParams, STEPS_PER_PERIOD};

/// Hold step for noisy runs: fine enough to sample the noise spectrum at
/// the dressing gap (half a radian of gap phase per step) and the noise
/// correlation time (a tenth). Quiet runs use the generic rule.
pub fn noisy_hold_step(p: &StirapParams, noise: &NoiseModel) -> f64 {
    if let Some(h) = p.hold_step {
        return h;
    }
    let hold_rabi = p.omega() * p.crossing_level();
    let generic = TAU / (STEPS_PER_PERIOD * hold_rabi.max(f64::MIN_POSITIVE));
    if noise.is_quiet() {
        generic
    } else {
        let gap = hold_rabi / SQRT_2;
        (noise.zeeman.correlation_time / 10.0).min(0.5 / gap).max(generic)
    }
}

fn readout_pulses(p: &StirapParams) -> Result<(Segment, Segment)> {
    Ok((pi_pulse(Transition::MinusZero, p.omega())?, pi_pulse(Transition::PlusZero, p.omega())?))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    name: &str,
    x_label: &str,
    x: Vec<f64>,
    raw: (Vec<f64>, Vec<f64>),
    spam: &SpamModel,
    n_traj: usize,
    n_reps: u32,
    seed: u64,
) -> ExperimentResult {
    let mean: Vec<f64> = raw.0.iter().map(|&p| spam.apply(p)).collect();
    let stderr: Vec<f64> = raw.1.iter().map(|s| s * spam.gain().abs()).collect();
    let counts = if n_reps > 0 { sample_shots(&mean, n_reps, seed, SHOT_STREAM) } else { Vec::new() };
    ExperimentResult { name: name.into(), x_label: x_label.into(), x, mean, stderr, n_traj, n_reps, counts, fit: None }
}

/// Protected-state lifetime: STIRAP in, dressed hold, STIRAP out, dark readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LifetimeConfig {
    pub levels: IonLevels,
    pub stirap: StirapParams,
    pub holds: Vec<f64>,
    pub noise: NoiseModel,
    pub n_traj: usize,
    pub n_reps: u32,
    pub seed: u64,
    pub spam: SpamModel,
    pub fit_source: FitSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LifetimeReport {
    pub result: ExperimentResult,
    /// Fitted 1/e lifetime, s.
    pub lifetime: f64,
    pub lifetime_err: f64,
    /// Rabi frequency of each dressing field during the hold, rad/s.
    pub hold_rabi: f64,
    /// `1 / S(gap)`: the golden-rule lifetime, s.
    pub predicted_lifetime: f64,
}

pub fn run_lifetime(cfg: &LifetimeConfig) -> Result<LifetimeReport> {
    cfg.spam.validate()?;
    let p = &cfg.stirap;
    let parts = p.parts()?;
    let (prep, read) = readout_pulses(p)?;
    let scan = HoldScan {
        levels: cfg.levels,
        frame: Frame::MultiRotatingRwa,
        prefix: vec![prep, parts.ramp_in.clone()],
        hold_drives: parts.hold_drives.clone(),
        hold_step: noisy_hold_step(p, &cfg.noise),
        tail: vec![parts.ramp_out.clone(), read],
        holds: cfg.holds.clone(),
    };
    let raw = scan.run(&StateVector::basis(Level::Zero), &cfg.noise, cfg.n_traj, cfg.seed)?;
    let mut result = finish("lifetime", "hold time (s)", cfg.holds.clone(), raw, &cfg.spam, cfg.n_traj, cfg.n_reps, cfg.seed);
    let fit = result.fit_with(FitModel::Exponential, cfg.fit_source)?;
    let (lifetime, lifetime_err) = fit.get("tau").expect("exponential has tau");
    result.fit = Some(fit);
    let gap = parts.hold_rabi / SQRT_2;
    Ok(LifetimeReport {
        result,
        lifetime,
        lifetime_err,
        hold_rabi: parts.hold_rabi,
        predicted_lifetime: 1.0 / cfg.noise.zeeman.dressed_leakage_rate(gap),
    })
}

/// Fitted oscillation of a Rabi or Ramsey window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OscillationReport {
    pub result: ExperimentResult,
    /// Fitted frequency, Hz.
    pub frequency: f64,
    pub frequency_err: f64,
    /// Peak-to-peak fitted amplitude.
    pub contrast: f64,
    pub contrast_err: f64,
    /// Frequency expected from the drive parameters, Hz.
    pub expected_frequency: f64,
}

/// With `driven` false nothing can oscillate (zero rf, or zero Ramsey
/// detuning), so the fit is skipped and the contrast is the raw spread.
fn oscillation(mut result: ExperimentResult, source: FitSource, expected: f64, driven: bool) -> Result<OscillationReport> {
    if !driven {
        let (lo, hi) = result.mean.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
        return Ok(OscillationReport {
            result,
            frequency: 0.0,
            frequency_err: 0.0,
            contrast: hi - lo,
            contrast_err: 0.0,
            expected_frequency: expected,
        });
    }
    let fit = result.fit_with(FitModel::Sinusoid, source)?;
    let (frequency, frequency_err) = fit.get("frequency").expect("sinusoid has frequency");
    let (a, a_err) = fit.get("amplitude").expect("sinusoid has amplitude");
    result.fit = Some(fit);
    Ok(OscillationReport { result, frequency, frequency_err, contrast: 2.0 * a, contrast_err: 2.0 * a_err, expected_frequency: expected })
}

/// Dressed Rabi flopping between the protected state and `|0'>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RabiConfig {
    pub levels: IonLevels,
    /// The relative phase is forced to pi so the rf pair drives the protected state.
    pub stirap: StirapParams,
    /// Rabi frequency of each rf field, rad/s.
    pub rf_rabi: f64,
    pub durations: Vec<f64>,
    pub noise: NoiseModel,
    pub n_traj: usize,
    pub n_reps: u32,
    pub seed: u64,
    pub spam: SpamModel,
    pub fit_source: FitSource,
}

pub fn run_rabi(cfg: &RabiConfig) -> Result<OscillationReport> {
    cfg.spam.validate()?;
    if !(cfg.rf_rabi >= 0.0) {
        return Err(Error::param("rf_rabi", "must be non-negative"));
    }
    let p = StirapParams { relative_phase: PI, ..cfg.stirap.clone() };
    let parts = p.parts()?;
    let (prep, read) = readout_pulses(&p)?;
    let mut hold = parts.hold_drives.clone();
    hold.extend(rf_pair(cfg.rf_rabi, 0.0));
    let scan = HoldScan {
        levels: cfg.levels,
        frame: Frame::MultiRotatingRwa,
        prefix: vec![prep, parts.ramp_in.clone()],
        hold_drives: hold,
        hold_step: noisy_hold_step(&p, &cfg.noise),
        tail: vec![parts.ramp_out.clone(), read],
        holds: cfg.durations.clone(),
    };
    let raw = scan.run(&StateVector::basis(Level::Zero), &cfg.noise, cfg.n_traj, cfg.seed)?;
    let result = finish("rabi", "rf duration (s)", cfg.durations.clone(), raw, &cfg.spam, cfg.n_traj, cfg.n_reps, cfg.seed);
    oscillation(result, cfg.fit_source, SQRT_2 * cfg.rf_rabi / TAU, cfg.rf_rabi > 0.0)
}

/// Dressed Ramsey fringes between the protected state and `|0'>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RamseyConfig {
    pub levels: IonLevels,
    pub stirap: StirapParams,
    pub rf_rabi: f64,
    /// rf detuning, rad/s.
    pub rf_detuning: f64,
    pub free_times: Vec<f64>,
    pub noise: NoiseModel,
    pub n_traj: usize,
    pub n_reps: u32,
    pub seed: u64,
    pub spam: SpamModel,
    pub fit_source: FitSource,
}

pub fn run_ramsey(cfg: &RamseyConfig) -> Result<OscillationReport> {
    cfg.spam.validate()?;
    if !(cfg.rf_rabi > 0.0) {
        return Err(Error::param("rf_rabi", "must be positive"));
    }
    let p = StirapParams { relative_phase: PI, ..cfg.stirap.clone() };
    let parts = p.parts()?;
    let (prep, read) = readout_pulses(&p)?;
    let step = noisy_hold_step(&p, &cfg.noise);
    let tp = rf_half_pi_time(cfg.rf_rabi);
    let rf = rf_pair(cfg.rf_rabi, cfg.rf_detuning);
    let pulse = {
        let mut d = parts.hold_drives.clone();
        d.extend(rf);
        // resolve both the rf phase ramp and the noise
        let fmax = (cfg.rf_detuning.abs() / TAU) * STEPS_PER_PERIOD;
        let s = if fmax > 0.0 { step.min(1.0 / fmax) } else { step };
        Segment::with_max_step(tp, s, d)?.labeled("rf-pi/2")
    };
    let scan = HoldScan {
        levels: cfg.levels,
        frame: Frame::MultiRotatingRwa,
        prefix: vec![prep, parts.ramp_in.clone(), pulse.clone()],
        hold_drives: parts.hold_drives.clone(),
        hold_step: step,
        tail: vec![pulse, parts.ramp_out.clone(), read],
        holds: cfg.free_times.clone(),
    };
    let raw = scan.run(&StateVector::basis(Level::Zero), &cfg.noise, cfg.n_traj, cfg.seed)?;
    let result = finish("ramsey", "free evolution (s)", cfg.free_times.clone(), raw, &cfg.spam, cfg.n_traj, cfg.n_reps, cfg.seed);
    oscillation(result, cfg.fit_source, cfg.rf_detuning / TAU, cfg.rf_detuning != 0.0)
}
