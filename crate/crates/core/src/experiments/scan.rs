use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SpamModel;
use crate::basis::{Level, StateVector};
use crate::error::Result;
use crate::hamiltonian::{Frame, IonLevels};
use crate::propagator::evolve;
use crate::sequence::{stirap_schedule, StirapParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScanAxis {
    StepsPerPeriod,
    Width,
    Separation,
    Detuning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanRow {
    pub axis: ScanAxis,
    pub width: f64,
    pub separation: f64,
    pub steps_per_period: u32,
    /// `Delta_+ - Delta_-`, Hz.
    pub detuning: f64,
    /// `|<+1|U|-1>|^2` of the ramp in and out without hold.
    pub fidelity: f64,
    /// Fidelity seen through the SPAM model.
    pub measured: f64,
}

/// Default robustness grid around `f_omega` (Hz):
/// `N_t` at `N = 10, s_t = 15`; `N` with `s_t = 1.5 N`; `s_t` at `N = 10`;
/// and the two-photon detuning at `N = 10, s_t = 15`.
pub fn robustness_grid(f_omega: f64) -> Vec<(ScanAxis, StirapParams)> {
    let base = StirapParams { f_omega, width: 10.0, separation: 15.0, steps_per_period: 10, ..Default::default() };
    let mut out = Vec::new();
    for nt in [10, 20, 30, 40] {
        out.push((ScanAxis::StepsPerPeriod, StirapParams { steps_per_period: nt, ..base.clone() }));
    }
    for n in [2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0] {
        out.push((ScanAxis::Width, StirapParams { width: n, separation: 1.5 * n, ..base.clone() }));
    }
    for st in [0.0, 2.5, 5.0, 7.5, 10.0, 12.0, 14.0, 15.0, 16.0, 18.0, 20.0, 22.5, 25.0, 30.0] {
        out.push((ScanAxis::Separation, StirapParams { separation: st, ..base.clone() }));
    }
    for x in [-0.09, -0.06, -0.03, 0.0, 0.03, 0.06, 0.09] {
        let d = x * f_omega;
        out.push((ScanAxis::Detuning, StirapParams { detuning_minus: -0.5 * d, detuning_plus: 0.5 * d, ..base.clone() }));
    }
    out
}

/// End-to-end `|-1> -> |+1>` transfer for each grid point, without noise.
pub fn scan_stirap(points: &[(ScanAxis, StirapParams)], levels: IonLevels, spam: &SpamModel) -> Result<Vec<ScanRow>> {
    spam.validate()?;
    points
        .par_iter()
        .map(|(axis, p)| {
            let p = StirapParams { hold_time: 0.0, ..p.clone() };
            let s = stirap_schedule(&p, levels, Frame::MultiRotatingRwa, &[])?;
            let tr = evolve(&s, &StateVector::basis(Level::Minus), None, 0)?;
            let fidelity = tr.final_state().level_population(Level::Plus);
            Ok(ScanRow {
                axis: *axis,
                width: p.width,
                separation: p.separation,
                steps_per_period: p.steps_per_period,
                detuning: p.detuning_plus - p.detuning_minus,
                fidelity,
                measured: spam.apply(fidelity),
            })
        })
        .collect()
}
