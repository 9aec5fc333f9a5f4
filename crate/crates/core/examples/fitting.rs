//! The damped-sinusoid and exponential fitters on synthetic data.

use dressed_ion::fit::{fit, FitModel};

fn main() -> dressed_ion::Result<()> {
    let x: Vec<f64> = (0..60).map(|k| k as f64 * 1e-3).collect();
    let y: Vec<f64> = x.iter().map(|t| 0.5 + 0.4 * (std::f64::consts::TAU * 37.0 * t + 0.3).cos()).collect();
    let r = fit(FitModel::Sinusoid, &x, &y, None)?;
    println!("sinusoid: frequency {:.4} Hz, amplitude {:.4}", r.value("frequency"), r.value("amplitude"));

    let y: Vec<f64> = x.iter().map(|t| 0.9 * (-t / 0.02).exp()).collect();
    let r = fit(FitModel::Exponential, &x, &y, None)?;
    println!("exponential: tau {:.4} s", r.value("tau"));
    Ok(())
}
