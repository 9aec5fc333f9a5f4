use std::f64::consts::TAU;

use dressed_ion::basis::{DressedFrame, Level, StateLabel, StateVector};
use dressed_ion::fit::{fit, FitModel};
use dressed_ion::hamiltonian::build_sqg_interaction;
use dressed_ion::io::{parse_config, RunConfig};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dressed_spectrum_for_any_phase(f in 1e3f64..1e5, phase in -10.0f64..10.0) {
        let omega = TAU * f;
        let e = build_sqg_interaction(omega, 0.0, phase).unwrap().eigenvalues();
        let g = omega / 2f64.sqrt();
        prop_assert!((e[0] + g).abs() < 1e-9 * g);
        prop_assert!(e[1].abs() < 1e-9 * g && e[2].abs() < 1e-9 * g);
        prop_assert!((e[3] - g).abs() < 1e-9 * g);
    }

    #[test]
    fn dressed_populations_sum_to_one(re in prop::array::uniform4(-1.0f64..1.0), im in prop::array::uniform4(-1.0f64..1.0), phase in -4.0f64..4.0) {
        let amps: Vec<C64> = re.iter().zip(im).map(|(a, b)| C64::new(*a, b)).collect();
        prop_assume!(amps.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-3);
        let psi = StateVector::from_slice(&amps).unwrap();
        let frame = DressedFrame::new(phase);
        let total: f64 = [StateLabel::Up, StateLabel::Down, StateLabel::Protected, StateLabel::Bare(Level::ZeroPrime)]
            .iter()
            .map(|l| psi.population(*l, Some(&frame)).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_fit_recovers_frequency(f in 20.0f64..200.0, a in 0.1f64..0.5, phi in -3.0f64..3.0) {
        let x: Vec<f64> = (0..80).map(|k| k as f64 * 5e-4).collect();
        let y: Vec<f64> = x.iter().map(|t| 0.5 + a * (TAU * f * t + phi).cos()).collect();
        let r = fit(FitModel::Sinusoid, &x, &y, None).unwrap();
        prop_assert!((r.value("frequency") - f).abs() < 1e-6 * f);
    }

    #[test]
    fn seed_and_counts_round_trip(seed in 0u64..1_000_000, n_traj in 1usize..5000) {
        let mut cfg = RunConfig::defaults(dressed_ion::io::ExperimentKind::Fig2);
        cfg.seed = seed;
        cfg.fig2.n_traj = n_traj;
        prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}
