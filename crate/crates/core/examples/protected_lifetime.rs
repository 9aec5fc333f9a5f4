//! Protected-state lifetime under calibrated magnetic noise, with fewer
//! trajectories than the reference run.

use dressed_ion::experiments::{run_lifetime, FitSource, LifetimeConfig, SpamModel};
use dressed_ion::hamiltonian::IonLevels;
use dressed_ion::noise::{NoiseModel, OuNoise};
use dressed_ion::sequence::StirapParams;

fn main() -> dressed_ion::Result<()> {
    let tau_c = 100e-6;
    let cfg = LifetimeConfig {
        levels: IonLevels::default(),
        stirap: StirapParams { f_omega: 36.5e3, ..Default::default() },
        holds: vec![0.0, 0.1, 0.2, 0.4, 0.6],
        noise: NoiseModel::zeeman(OuNoise::analytic_amplitude(5.3e-3, tau_c), tau_c),
        n_traj: 40,
        n_reps: 100,
        seed: 3,
        spam: SpamModel::default(),
        fit_source: FitSource::Ensemble,
    };
    let r = run_lifetime(&cfg)?;
    for (x, m) in r.result.x.iter().zip(&r.result.mean) {
        println!("hold {x:.2} s: P(dark) {m:.3}");
    }
    println!("lifetime {:.2} ± {:.2} s, golden-rule {:.2} s", r.lifetime, r.lifetime_err, r.predicted_lifetime);
    Ok(())
}
