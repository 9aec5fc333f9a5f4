//! Ramsey fringes of the dressed qubit with a detuned rf pair.

use std::f64::consts::TAU;

use dressed_ion::experiments::{run_ramsey, FitSource, RamseyConfig, SpamModel};
use dressed_ion::hamiltonian::IonLevels;
use dressed_ion::noise::NoiseModel;
use dressed_ion::sequence::StirapParams;

fn main() -> dressed_ion::Result<()> {
    let detuning = 144.4;
    let cfg = RamseyConfig {
        levels: IonLevels::default(),
        stirap: StirapParams { f_omega: 37.3e3, ..Default::default() },
        rf_rabi: TAU * 1e3,
        rf_detuning: TAU * detuning,
        free_times: (0..31).map(|k| 0.1e-3 + k as f64 * 1e-3).collect(),
        noise: NoiseModel::quiet(),
        n_traj: 1,
        n_reps: 20,
        seed: 1,
        spam: SpamModel::default(),
        fit_source: FitSource::Ensemble,
    };
    let r = run_ramsey(&cfg)?;
    println!("fringe {:.4} Hz for a {detuning} Hz detuning, contrast {:.3}", r.frequency, r.contrast);
    println!("first shots: {:?}", &r.result.counts[..5]);
    Ok(())
}
