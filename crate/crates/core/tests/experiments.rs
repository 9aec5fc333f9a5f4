use std::f64::consts::TAU;

use dressed_ion::experiments::{
    run_lifetime, run_rabi, run_ramsey, run_sideband_gate, sample_shots, FitSource, LifetimeConfig, RabiConfig, RamseyConfig,
    SidebandConfig, SpamModel,
};
use dressed_ion::hamiltonian::{IonLevels, TrapMode};
use dressed_ion::noise::NoiseModel;
use dressed_ion::sequence::StirapParams;
use dressed_ion::Error;

fn reference_stirap(f_omega: f64) -> StirapParams {
    StirapParams { f_omega, ..Default::default() }
}

fn sideband(eta: f64, n_fock: usize, initial_fock: usize, rf_fraction: f64) -> SidebandConfig {
    let omega = TAU * 36.5e3;
    SidebandConfig {
        levels: IonLevels::default(),
        omega,
        rf_rabi: omega * rf_fraction,
        mode: TrapMode::new(TAU * 200e3, eta, n_fock).unwrap(),
        initial_fock,
        detuning_offset: 0.0,
        steps_per_period: 32,
        duration: Some(2e-3),
    }
}

fn quiet_survival(stirap: StirapParams) -> Vec<f64> {
    let cfg = LifetimeConfig {
        levels: IonLevels::default(),
        stirap,
        holds: vec![0.0, 0.1, 0.25, 0.5],
        noise: NoiseModel::quiet(),
        n_traj: 1,
        n_reps: 0,
        seed: 1,
        spam: SpamModel::default(),
        fit_source: FitSource::Ensemble,
    };
    run_lifetime(&cfg).unwrap().result.mean
}

#[test]
fn quiet_lifetime_is_flat() {
    // the short reference ramps leave ~0.6% in u and d, whose phase
    // scrambles during a hold
    let m = quiet_survival(reference_stirap(36.5e3));
    let held = &m[1..];
    let (lo, hi) = held.iter().fold((1.0f64, 0.0f64), |(a, b), &p| (a.min(p), b.max(p)));
    assert!(lo > 0.98 && hi - lo < 5e-3, "{m:?}");
    // slower ramps push the plateau above 0.99
    let m = quiet_survival(StirapParams { width: 20.0, separation: 30.0, ..reference_stirap(36.5e3) });
    assert!(m.iter().all(|&p| p > 0.99), "{m:?}");
}

fn ramsey(detuning_hz: f64) -> RamseyConfig {
    RamseyConfig {
        levels: IonLevels::default(),
        stirap: reference_stirap(37.3e3),
        rf_rabi: TAU * 1e3,
        rf_detuning: TAU * detuning_hz,
        free_times: (0..16).map(|k| k as f64 * 1e-3).collect(),
        noise: NoiseModel::quiet(),
        n_traj: 1,
        n_reps: 0,
        seed: 1,
        spam: SpamModel::default(),
        fit_source: FitSource::Ensemble,
    }
}

#[test]
fn ramsey_with_zero_free_time_starts_dark() {
    let r = run_ramsey(&ramsey(144.4)).unwrap();
    // two pi/2 pulses back to back form a pi pulse
    assert!(r.result.mean[0] < 0.02, "{}", r.result.mean[0]);
}

#[test]
fn resonant_ramsey_does_not_depend_on_free_time() {
    let r = run_ramsey(&ramsey(0.0)).unwrap();
    let (lo, hi) = r.result.mean.iter().fold((1.0f64, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    assert_eq!(r.frequency, 0.0);
    assert!(hi - lo < 0.05, "{lo}..{hi}");
}

#[test]
fn no_gradient_means_no_sideband_dynamics() {
    let r = run_sideband_gate(&sideband(0.0, 6, 1, 0.05)).unwrap();
    assert_eq!(r.sideband_rate, 0.0);
    let drift = r.full.iter().map(|p| p[0]).fold(0.0, f64::max);
    assert!(drift < 1e-2, "{drift}");
}

#[test]
fn no_gradient_without_duration_is_an_error() {
    let cfg = SidebandConfig { duration: None, ..sideband(0.0, 6, 1, 0.05) };
    assert!(run_sideband_gate(&cfg).is_err());
}

fn rabi(rf_hz: f64) -> RabiConfig {
    RabiConfig {
        levels: IonLevels::default(),
        stirap: reference_stirap(31.8e3),
        rf_rabi: TAU * rf_hz,
        durations: (0..11).map(|k| k as f64 * 1e-3).collect(),
        noise: NoiseModel::quiet(),
        n_traj: 1,
        n_reps: 0,
        seed: 1,
        spam: SpamModel::default(),
        fit_source: FitSource::Ensemble,
    }
}

#[test]
fn zero_rf_gives_flat_trace() {
    let r = run_rabi(&rabi(0.0)).unwrap();
    assert_eq!(r.frequency, 0.0);
    assert!(r.result.fit.is_none());
    // only the small non-adiabatic ripple of the ramps remains
    assert!(r.contrast < 0.05, "{}", r.contrast);
    assert!(run_rabi(&rabi(-1.0)).is_err());
    let r = run_rabi(&rabi(100.0)).unwrap();
    assert!(r.contrast > 0.9);
}

#[test]
fn sideband_needs_an_rf_field() {
    assert!(run_sideband_gate(&sideband(0.05, 6, 1, 0.0)).is_err());
}

#[test]
fn truncation_breach_is_reported() {
    // the initial Fock level is the top one
    match run_sideband_gate(&sideband(0.05, 2, 1, 0.05)) {
        Err(Error::FockTruncation { level, .. }) => assert_eq!(level, 1),
        other => panic!("expected a truncation error, got {other:?}"),
    }
}

#[test]
fn shot_fraction_converges_to_probability() {
    let p = [0.1, 0.5, 0.93];
    let n = 200_000;
    let counts = sample_shots(&p, n, 5, 1 << 62);
    for (c, q) in counts.iter().zip(p) {
        let f = *c as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((f - q).abs() < 5.0 * se, "{f} vs {q}");
    }
}

#[test]
fn transfer_does_not_depend_on_time_resolution() {
    use dressed_ion::experiments::{robustness_grid, scan_stirap, ScanAxis};
    let grid: Vec<_> = robustness_grid(36.5e3)
        .into_iter()
        .filter(|(a, p)| *a == ScanAxis::StepsPerPeriod && [10, 20, 40].contains(&p.steps_per_period))
        .collect();
    let rows = scan_stirap(&grid, IonLevels::default(), &SpamModel::default()).unwrap();
    assert_eq!(rows.len(), 3);
    let (lo, hi) = rows.iter().fold((1.0f64, 0.0f64), |(a, b), r| (a.min(r.fidelity), b.max(r.fidelity)));
    assert!(hi - lo < 1e-3, "{lo}..{hi}");
}
