use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{DressedFrame, Level, StateLabel, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_mqg, polaron_transform, resonant_pair, sideband_effective, HamiltonianFunction, IonLevels, TrapMode};
use crate::propagator::{evolve_function, evolve_periodic};
use crate::sequence::rf_pair;

/// Top-Fock-level population that triggers a warning.
pub const FOCK_WARN_LIMIT: f64 = 1e-6;
/// Top-Fock-level population that aborts a run.
pub const FOCK_ABORT_LIMIT: f64 = 1e-4;

/// Red-sideband gate on one ion: dressing pair (phase 0) plus an rf pair
/// detuned by the trap frequency, compared with the effective sideband
/// Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SidebandConfig {
    pub levels: IonLevels,
    /// Dressing Rabi frequency, rad/s.
    pub omega: f64,
    /// Rabi frequency of each rf field, rad/s.
    pub rf_rabi: f64,
    pub mode: TrapMode,
    pub initial_fock: usize,
    /// rf detuning from the red sideband resonance, rad/s.
    pub detuning_offset: f64,
    pub steps_per_period: usize,
    /// Defaults to two sideband pi times.
    pub duration: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SidebandReport {
    pub times: Vec<f64>,
    /// `P(D), P(0'), P(bright manifold)` of the full model in the polaron frame.
    pub full: Vec<[f64; 3]>,
    /// Same populations from the effective Hamiltonian.
    pub effective: Vec<[f64; 3]>,
    /// `|<D,n-1|H_eff|0',n>|`, rad/s.
    pub sideband_rate: f64,
    pub pi_time: f64,
    /// Largest `|P_full - P_eff|` over time and states.
    pub max_deviation: f64,
    pub max_bright_leakage: f64,
    /// `4 (rf_rabi / omega)^2`.
    pub leakage_bound: f64,
    pub peak_transfer_full: f64,
    pub peak_transfer_effective: f64,
    pub max_top_fock: f64,
    /// rf detuning used in the full model, rad/s.
    pub full_detuning: f64,
}

pub fn run_sideband_gate(cfg: &SidebandConfig) -> Result<SidebandReport> {
    let mode = cfg.mode;
    mode.validate()?;
    let n = mode.n_fock;
    if cfg.initial_fock >= n {
        return Err(Error::param("initial_fock", format!("{} outside truncation {n}", cfg.initial_fock)));
    }
    if !(cfg.omega > 0.0 && cfg.rf_rabi > 0.0) {
        return Err(Error::param("sideband", "omega and rf_rabi must be positive"));
    }
    if cfg.steps_per_period < 4 {
        return Err(Error::param("steps_per_period", "need at least 4"));
    }
    if cfg.rf_rabi > cfg.omega / 10.0 {
        log::warn!(
            "rf Rabi frequency {:.3e} rad/s exceeds a tenth of the dressing {:.3e} rad/s; the gap no longer protects the gate",
            cfg.rf_rabi,
            cfg.omega
        );
    }
    let eta = mode.eta();
    // |+-1> are pushed down by lambda^2/nu in the polaron frame
    let full_detuning = mode.nu + mode.lambda * eta + cfg.detuning_offset;
    let dressing = resonant_pair(Level::Zero, cfg.omega, 0.0);
    let rf = rf_pair(cfg.rf_rabi, full_detuning);
    let full_h = build_mqg(&cfg.levels, &mode, &dressing, &[rf[0].clone(), rf[1].clone()])?;
    let g = -0.5 * cfg.rf_rabi;
    let eff_h = sideband_effective(&mode, g, mode.nu + cfg.detuning_offset)?;
    let rate = eff_h.sideband_rate(cfg.initial_fock.max(1));
    let pi_time = PI / (2.0 * rate);
    let duration = match cfg.duration {
        Some(d) if d > 0.0 && d.is_finite() => d,
        Some(d) => return Err(Error::param("duration", format!("{d} is not a positive time"))),
        None if rate > 0.0 => 2.0 * pi_time,
        None => return Err(Error::param("duration", "no sideband coupling, give an explicit duration")),
    };

    let psi0 = StateVector::basis_fock(Level::ZeroPrime, cfg.initial_fock, n)?;
    let period = full_h.period().expect("rf pair has a non-zero detuning");
    let n_periods = (duration / period).ceil() as usize;
    let (times, full_states) = evolve_periodic(&full_h, &psi0, cfg.steps_per_period, n_periods)?;

    let mut max_top_fock: f64 = 0.0;
    for (t, s) in times.iter().zip(&full_states) {
        let top = s.fock_distribution()[n - 1];
        if top > FOCK_ABORT_LIMIT {
            return Err(Error::FockTruncation { population: top, level: n - 1, limit: FOCK_ABORT_LIMIT, time: *t });
        }
        max_top_fock = max_top_fock.max(top);
    }
    if max_top_fock > FOCK_WARN_LIMIT {
        log::warn!("top Fock level reached population {max_top_fock:.2e}; consider a larger n_fock");
    }

    let u = polaron_transform(&mode)?;
    let frame = DressedFrame::new(0.0);
    let pops = |s: &StateVector| -> Result<[f64; 3]> {
        Ok([
            s.population(StateLabel::Protected, Some(&frame))?,
            s.level_population(Level::ZeroPrime),
            s.population(StateLabel::Up, Some(&frame))? + s.population(StateLabel::Down, Some(&frame))?,
        ])
    };
    let full = full_states
        .iter()
        .map(|s| pops(&StateVector::from_slice((u.matrix() * s.amplitudes()).as_slice())?))
        .collect::<Result<Vec<_>>>()?;

    let (eff_times, eff_states) = match eff_h.period() {
        Some(p_eff) => {
            let m = ((p_eff / period) * cfg.steps_per_period as f64).ceil() as usize;
            evolve_periodic(&eff_h, &psi0, m.max(4), (duration / p_eff).ceil() as usize + 1)?
        }
        None => evolve_function(&eff_h, &psi0, duration + period, period / cfg.steps_per_period as f64, cfg.steps_per_period)?,
    };
    let eff_pops = eff_states.iter().map(pops).collect::<Result<Vec<_>>>()?;
    let effective: Vec<[f64; 3]> = times.iter().map(|&t| interpolate(&eff_times, &eff_pops, t)).collect();

    let max_deviation = full.iter().zip(&effective).flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs())).fold(0.0, f64::max);
    let max_bright_leakage = full.iter().map(|p| p[2]).fold(0.0, f64::max);
    Ok(SidebandReport {
        peak_transfer_full: full.iter().map(|p| p[0]).fold(0.0, f64::max),
        peak_transfer_effective: effective.iter().map(|p| p[0]).fold(0.0, f64::max),
        times,
        full,
        effective,
        sideband_rate: rate,
        pi_time,
        max_deviation,
        max_bright_leakage,
        leakage_bound: 4.0 * (cfg.rf_rabi / cfg.omega).powi(2),
        max_top_fock,
        full_detuning,
    })
}

fn interpolate(ts: &[f64], ys: &[[f64; 3]], t: f64) -> [f64; 3] {
    let k = ts.partition_point(|&x| x <= t);
    if k == 0 {
        return ys[0];
    }
    if k >= ts.len() {
        return *ys.last().expect("non-empty");
    }
    let f = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    std::array::from_fn(|i| ys[k - 1][i] + f * (ys[k][i] - ys[k - 1][i]))
}
