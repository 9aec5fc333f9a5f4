//! Rabi flopping between the protected state and |0'> driven by an rf pair.

use std::f64::consts::TAU;

use dressed_ion::experiments::{run_rabi, FitSource, RabiConfig, SpamModel};
use dressed_ion::hamiltonian::IonLevels;
use dressed_ion::noise::NoiseModel;
use dressed_ion::sequence::StirapParams;

fn main() -> dressed_ion::Result<()> {
    let cfg = RabiConfig {
        levels: IonLevels::default(),
        stirap: StirapParams { f_omega: 31.8e3, ..Default::default() },
        rf_rabi: TAU * 100.0,
        durations: (0..21).map(|k| k as f64 * 1e-3).collect(),
        noise: NoiseModel::quiet(),
        n_traj: 1,
        n_reps: 0,
        seed: 1,
        spam: SpamModel::default(),
        fit_source: FitSource::Ensemble,
    };
    let r = run_rabi(&cfg)?;
    println!("fitted {:.3} Hz, expected {:.3} Hz, contrast {:.3}", r.frequency, r.expected_frequency, r.contrast);
    Ok(())
}
