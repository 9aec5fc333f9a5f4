use std::f64::consts::TAU;

use dressed_ion::experiments::{sample_shots, ExperimentResult, FitSource};
use dressed_ion::fit::{fit, FitModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const FIG2_HOLDS: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0];

#[test]
fn exponential_with_one_percent_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let y: Vec<f64> = FIG2_HOLDS.iter().map(|t| 0.93 * (-t / 1.7).exp() + noise.sample(&mut rng)).collect();
    let r = fit(FitModel::Exponential, &FIG2_HOLDS, &y, None).unwrap();
    let (tau, err) = r.get("tau").unwrap();
    assert!((tau / 1.7 - 1.0).abs() < 0.03, "{tau}");
    assert!(err > 0.0);
}

#[test]
fn exact_exponential_within_one_sigma() {
    let y: Vec<f64> = FIG2_HOLDS.iter().map(|t| 0.9 * (-t / 1.7).exp()).collect();
    let sigma = vec![0.01; y.len()];
    let (tau, err) = fit(FitModel::Exponential, &FIG2_HOLDS, &y, Some(&sigma)).unwrap().get("tau").unwrap();
    assert!((tau - 1.7).abs() < err, "{tau} ± {err}");
}

#[test]
fn exact_sinusoid_at_fringe_frequency() {
    let x: Vec<f64> = (0..61).map(|k| 1e-4 + k as f64 * 0.5e-3).collect();
    let y: Vec<f64> = x.iter().map(|t| 0.5 - 0.45 * (TAU * 144.4 * t).cos()).collect();
    let f = fit(FitModel::Sinusoid, &x, &y, None).unwrap().value("frequency");
    assert!((f / 144.4 - 1.0).abs() < 1e-3, "{f}");
}

#[test]
fn fitter_is_unbiased() {
    let x: Vec<f64> = (0..30).map(|k| k as f64 * 0.05).collect();
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut sum, mut sum_err) = (0.0, 0.0);
    let n = 100;
    for _ in 0..n {
        let y: Vec<f64> = x.iter().map(|t| (-t / 0.5).exp() + noise.sample(&mut rng)).collect();
        let (tau, err) = fit(FitModel::Exponential, &x, &y, Some(&vec![0.02; x.len()])).unwrap().get("tau").unwrap();
        sum += tau;
        sum_err += err;
    }
    let (mean, sigma) = (sum / n as f64, sum_err / n as f64);
    assert!((mean - 0.5).abs() < 3.0 * sigma / (n as f64).sqrt(), "{mean} ± {sigma}");
}

#[test]
fn damped_sinusoid_recovers_decay() {
    let x: Vec<f64> = (0..200).map(|k| k as f64 * 1e-3).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let y: Vec<f64> =
        x.iter().map(|t| 0.5 + 0.4 * (-t / 0.08).exp() * (TAU * 31.0 * t).cos() + 0.005 * (rng.random::<f64>() - 0.5)).collect();
    let r = fit(FitModel::DampedSinusoid, &x, &y, None).unwrap();
    assert!((r.value("tau") / 0.08 - 1.0).abs() < 0.05);
    assert!((r.value("frequency") / 31.0 - 1.0).abs() < 1e-3);
}

#[test]
fn shot_fits_converge_with_repetitions() {
    let x: Vec<f64> = (0..41).map(|k| k as f64 * 0.5e-3).collect();
    let mean: Vec<f64> = x.iter().map(|t| 0.5 + 0.45 * (TAU * 141.4 * t).cos()).collect();
    let mut errors = Vec::new();
    for n_reps in [25, 300, 10_000] {
        let counts = sample_shots(&mean, n_reps, 3, 1 << 62);
        let result = ExperimentResult {
            name: "rabi".into(),
            x_label: "t".into(),
            x: x.clone(),
            mean: mean.clone(),
            stderr: vec![0.0; x.len()],
            n_traj: 1,
            n_reps,
            counts,
            fit: None,
        };
        let f = result.fit_with(FitModel::Sinusoid, FitSource::Shots).unwrap().value("frequency");
        errors.push((f - 141.4).abs());
    }
    assert!(errors[2] < errors[0] && errors[2] < 0.05, "{errors:?}");
}
