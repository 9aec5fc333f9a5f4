use dressed_ion::noise::{estimate_psd, estimate_t2, sample_ou, simulate_bare_coherence, OuNoise, T2Estimator};

fn t2(amplitude: f64, correlation_time: f64) -> f64 {
    let noise = OuNoise::new(amplitude, correlation_time);
    let (t, c) = simulate_bare_coherence(&noise, 1e-3, 2e-6, 5, 3000, 17).unwrap();
    estimate_t2(&t, &c, T2Estimator::Crossing)
}

#[test]
fn quasi_static_t2_halves_when_amplitude_doubles() {
    // tau_c far longer than T2: Gaussian decay with T2 = 1/(sqrt2 sigma)
    let (a, tau) = (2000.0, 0.1);
    let (t1, t2) = (t2(a, tau), t2(2.0 * a, tau));
    assert!((t1 * a * 2f64.sqrt() - 1.0).abs() < 0.1, "{t1}");
    assert!((t2 / t1 - 0.5).abs() < 0.05, "{t1} {t2}");
}

#[test]
fn sampled_spectrum_matches_lorentzian() {
    let noise = OuNoise::new(1000.0, 1e-4);
    let dt = 1e-5;
    let trace = sample_ou(&noise, 1 << 18, dt).unwrap();
    for f in [0.0, 1e3] {
        let w = std::f64::consts::TAU * f;
        let want = noise.psd(w);
        let got = estimate_psd(&trace, dt, w, 64);
        assert!((got / want - 1.0).abs() < 0.25, "{f} Hz: {got} vs {want}");
    }
}

#[test]
fn weak_noise_means_long_t2() {
    assert!(OuNoise::analytic_amplitude(1.0, 1e-4) < OuNoise::analytic_amplitude(1e-3, 1e-4) / 10.0);
}
