//! Unit helpers. Everything inside the crate is SI with angular frequencies
//! in rad/s. Configuration files and reports use Hz.

use std::f64::consts::TAU;

pub fn hz(f: f64) -> f64 {
    TAU * f
}

pub fn khz(f: f64) -> f64 {
    TAU * f * 1e3
}

pub fn to_hz(omega: f64) -> f64 {
    omega / TAU
}

pub fn ms(t: f64) -> f64 {
    t * 1e-3
}

pub fn us(t: f64) -> f64 {
    t * 1e-6
}
