//! Piecewise-constant exact-exponential time stepping.
//!
//! Each step of length `dt` uses `exp(-i H(t_mid) dt)` with `H` sampled at
//! the step midpoint, computed from the Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector, Matrix4};
use rayon::prelude::*;

use crate::basis::{Operator, StateVector, C64, ZERO};
use crate::error::{Error, Result};
use crate::hamiltonian::{fill_drives, Frame, HamiltonianFunction, IonLevels, Perturbation};
use crate::noise::{NoiseGenerator, NoiseModel};
use crate::sequence::{Schedule, Segment};

const RENORMALIZE_EVERY: usize = 1000;

/// Supplies the perturbation for each step.
pub trait NoiseSource {
    fn sample(&mut self, step: usize, t_mid: f64) -> Perturbation;
}

/// No noise.
pub struct Quiet;

impl NoiseSource for Quiet {
    fn sample(&mut self, _step: usize, _t_mid: f64) -> Perturbation {
        Perturbation::default()
    }
}

/// Pre-computed Zeeman shifts, one per step.
pub struct ZeemanTrace<'a>(pub &'a [f64]);

impl NoiseSource for ZeemanTrace<'_> {
    fn sample(&mut self, step: usize, _t_mid: f64) -> Perturbation {
        Perturbation { zeeman: self.0[step], ..Default::default() }
    }
}

fn is_diagonal<const N: usize>(h: &nalgebra::SMatrix<C64, N, N>) -> bool {
    (0..N).all(|i| (0..N).all(|j| i == j || h[(i, j)] == ZERO))
}

fn exp_hermitian4(h: &Matrix4<C64>, dt: f64) -> Matrix4<C64> {
    if is_diagonal(h) {
        return Matrix4::from_diagonal(&h.diagonal().map(|e| C64::from_polar(1.0, -e.re * dt)));
    }
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors;
    let mut vd = v;
    for j in 0..4 {
        let ph = C64::from_polar(1.0, -eig.eigenvalues[j] * dt);
        for i in 0..4 {
            vd[(i, j)] *= ph;
        }
    }
    vd * v.adjoint()
}

fn exp_hermitian(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors;
    let mut vd = v.clone();
    for j in 0..v.ncols() {
        let ph = C64::from_polar(1.0, -eig.eigenvalues[j] * dt);
        for i in 0..v.nrows() {
            vd[(i, j)] *= ph;
        }
    }
    vd * v.adjoint()
}

/// Caches the last 4x4 step propagator.
#[derive(Clone, Debug)]
pub(crate) struct Kernel4 {
    h: Matrix4<C64>,
    dt: f64,
    u: Matrix4<C64>,
    valid: bool,
}

impl Default for Kernel4 {
    fn default() -> Self {
        Kernel4 { h: Matrix4::zeros(), dt: 0.0, u: Matrix4::identity(), valid: false }
    }
}

impl Kernel4 {
    fn propagator(&mut self, h: &Matrix4<C64>, dt: f64) -> &Matrix4<C64> {
        if !(self.valid && self.dt == dt && self.h == *h) {
            self.u = exp_hermitian4(h, dt);
            self.h = *h;
            self.dt = dt;
            self.valid = true;
        }
        &self.u
    }

    /// Applies `exp(-i h dt) (x) 1_fock` to `psi`.
    fn apply(&mut self, h: &Matrix4<C64>, dt: f64, psi: &mut DVector<C64>) {
        let u = *self.propagator(h, dt);
        let n = psi.len() / 4;
        for k in 0..n {
            let x = [psi[k], psi[n + k], psi[2 * n + k], psi[3 * n + k]];
            for i in 0..4 {
                psi[i * n + k] = u[(i, 0)] * x[0] + u[(i, 1)] * x[1] + u[(i, 2)] * x[2] + u[(i, 3)] * x[3];
            }
        }
    }
}

fn renormalize(psi: &mut DVector<C64>) {
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-9 {
        log::debug!("renormalising state, norm drift {:.3e}", n - 1.0);
    }
    *psi /= C64::from(n);
}

/// Runs `segments` starting at absolute time `t0` and global step `step0`.
/// `on_step` gets the global index of each completed step, its end time
/// and the state. Returns the end time and next step index.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_segments(
    levels: &IonLevels,
    frame: Frame,
    segments: &[Segment],
    t0: f64,
    step0: usize,
    psi: &mut DVector<C64>,
    noise: &mut dyn NoiseSource,
    kernel: &mut Kernel4,
    on_step: &mut dyn FnMut(usize, f64, &DVector<C64>),
) -> (f64, usize) {
    let mut t_seg = t0;
    let mut global = step0;
    let mut h = Matrix4::zeros();
    for seg in segments {
        let dt = seg.step;
        for k in 0..seg.steps() {
            let local = (k as f64 + 0.5) * dt;
            let p = noise.sample(global, t_seg + local);
            h.fill(ZERO);
            fill_drives(&mut h, &seg.drives, t_seg + local, local, frame, levels.lambda0, &p);
            kernel.apply(&h, dt, psi);
            global += 1;
            if global.is_multiple_of(RENORMALIZE_EVERY) {
                renormalize(psi);
            }
            on_step(global - 1, t_seg + (k + 1) as f64 * dt, psi);
        }
        t_seg += seg.duration;
    }
    (t_seg, global)
}

/// One exact step `exp(-i H dt) psi`.
pub fn step(h: &Operator, psi: &StateVector, dt: f64) -> Result<StateVector> {
    if psi.dim() != h.dim() {
        return Err(Error::Dimension { expected: h.dim(), got: psi.dim() });
    }
    let h = Operator::hermitian(h.matrix().clone())?;
    let u = exp_hermitian(h.matrix(), dt);
    let mut v = u * psi.amplitudes();
    renormalize(&mut v);
    Ok(StateVector::from_normalized(v))
}

/// `exp(-i H dt)` of a Hermitian operator.
pub fn propagator(h: &Operator, dt: f64) -> Result<Operator> {
    let h = Operator::hermitian(h.matrix().clone())?;
    Operator::new(exp_hermitian(h.matrix(), dt))
}

/// Recorded states of one evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Zeeman shift applied at each step (empty without noise).
    pub noise: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("a trajectory records at least the initial state")
    }

    pub fn level_populations(&self) -> Vec<[f64; 4]> {
        self.states.iter().map(StateVector::level_populations).collect()
    }
}

/// Evolves `psi0` through `schedule`. With `noise`, `noise[k]` is the
/// Zeeman shift (rad/s) during step `k`. States are recorded at t = 0,
/// every `record_every` steps (0 disables) and at the end.
pub fn evolve(schedule: &Schedule, psi0: &StateVector, noise: Option<&[f64]>, record_every: usize) -> Result<Trajectory> {
    schedule.validate()?;
    let n = schedule.step_count();
    if let Some(tr) = noise {
        if tr.len() != n {
            return Err(Error::NoiseTraceLength { expected: n, got: tr.len() });
        }
    }
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut psi = psi0.amplitudes().clone();
    let mut kernel = Kernel4::default();
    let mut quiet = Quiet;
    let mut trace;
    let source: &mut dyn NoiseSource = match noise {
        Some(tr) => {
            trace = ZeemanTrace(tr);
            &mut trace
        }
        None => &mut quiet,
    };
    let mut last = 0;
    run_segments(&schedule.levels, schedule.frame, schedule.segments(), 0.0, 0, &mut psi, source, &mut kernel, &mut |k, t, v| {
        if record_every > 0 && (k + 1) % record_every == 0 {
            times.push(t);
            states.push(StateVector::from_normalized(v / C64::from(v.norm())));
            last = k + 1;
        }
    });
    if last != n {
        times.push(schedule.duration());
        renormalize(&mut psi);
        states.push(StateVector::from_normalized(psi));
    }
    Ok(Trajectory { times, states, noise: noise.map(<[f64]>::to_vec).unwrap_or_default() })
}

/// Ensemble mean and standard error of the bare level populations.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 4]>,
    pub stderr: Vec<[f64; 4]>,
    pub n_traj: usize,
}

/// Runs `n_traj` noisy trajectories in parallel (on the current rayon
/// pool). Trajectory `i` draws from stream `i` of `seed`, and the
/// reduction runs in index order, so the result does not depend on the
/// number of worker threads.
pub fn ensemble_average(
    schedule: &Schedule,
    psi0: &StateVector,
    model: &NoiseModel,
    n_traj: usize,
    seed: u64,
    record_every: usize,
) -> Result<EnsembleAverage> {
    schedule.validate()?;
    model.validate()?;
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be at least 1"));
    }
    let run = |i: usize| -> (Vec<f64>, Vec<[f64; 4]>) {
        let mut gen = NoiseGenerator::new(*model, seed, i as u64);
        let mut psi = psi0.amplitudes().clone();
        let mut kernel = Kernel4::default();
        let mut times = vec![0.0];
        let mut pops = vec![psi0.level_populations()];
        let mut last = 0;
        let n = schedule.step_count();
        let (_, _) =
            run_segments(&schedule.levels, schedule.frame, schedule.segments(), 0.0, 0, &mut psi, &mut gen, &mut kernel, &mut |k, t, v| {
                if record_every > 0 && (k + 1) % record_every == 0 {
                    times.push(t);
                    pops.push(populations(v));
                    last = k + 1;
                }
            });
        if last != n {
            times.push(schedule.duration());
            pops.push(populations(&psi));
        }
        (times, pops)
    };
    let runs: Vec<(Vec<f64>, Vec<[f64; 4]>)> = if model.is_quiet() { vec![run(0)] } else { (0..n_traj).into_par_iter().map(run).collect() };
    let times = runs[0].0.clone();
    let (mean, stderr) = mean_stderr(runs.iter().map(|r| r.1.as_slice()));
    Ok(EnsembleAverage { times, mean, stderr, n_traj })
}

/// Ensemble mean and standard error of the populations of `targets`
/// (4-level vectors, summed over motional states), recorded like
/// [`ensemble_average`]. Returns `(times, mean, stderr)` with one row per
/// recorded time.
/// Sample times, then per-target mean and standard error.
pub type Projections = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);

pub fn ensemble_projections(
    schedule: &Schedule,
    psi0: &StateVector,
    model: &NoiseModel,
    n_traj: usize,
    seed: u64,
    record_every: usize,
    targets: &[[C64; 4]],
) -> Result<Projections> {
    schedule.validate()?;
    model.validate()?;
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be at least 1"));
    }
    let project = |v: &DVector<C64>| -> Vec<f64> {
        let n = v.len() / 4;
        let norm = v.norm_squared();
        targets
            .iter()
            .map(|t| (0..n).map(|k| (0..4).map(|l| t[l].conj() * v[l * n + k]).sum::<C64>().norm_sqr()).sum::<f64>() / norm)
            .collect()
    };
    let run = |i: usize| -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut gen = NoiseGenerator::new(*model, seed, i as u64);
        let mut psi = psi0.amplitudes().clone();
        let mut kernel = Kernel4::default();
        let mut times = vec![0.0];
        let mut rows = vec![project(&psi)];
        let mut last = 0;
        let n = schedule.step_count();
        run_segments(&schedule.levels, schedule.frame, schedule.segments(), 0.0, 0, &mut psi, &mut gen, &mut kernel, &mut |k, t, v| {
            if record_every > 0 && (k + 1) % record_every == 0 {
                times.push(t);
                rows.push(project(v));
                last = k + 1;
            }
        });
        if last != n {
            times.push(schedule.duration());
            rows.push(project(&psi));
        }
        (times, rows)
    };
    let runs: Vec<(Vec<f64>, Vec<Vec<f64>>)> = if model.is_quiet() { vec![run(0)] } else { (0..n_traj).into_par_iter().map(run).collect() };
    let times = runs[0].0.clone();
    let (n_t, k) = (times.len(), targets.len());
    let mut sum = vec![vec![0.0; k]; n_t];
    let mut sq = vec![vec![0.0; k]; n_t];
    for (_, rows) in &runs {
        for (j, row) in rows.iter().enumerate() {
            for (q, &x) in row.iter().enumerate() {
                sum[j][q] += x;
                sq[j][q] += x * x;
            }
        }
    }
    let m = runs.len() as f64;
    let mean: Vec<Vec<f64>> = sum.iter().map(|r| r.iter().map(|x| x / m).collect()).collect();
    let stderr = sq
        .iter()
        .zip(&mean)
        .map(|(r, mu)| {
            r.iter().zip(mu).map(|(s, u)| if m > 1.0 { ((s / m - u * u).max(0.0) * m / (m - 1.0) / m).sqrt() } else { 0.0 }).collect()
        })
        .collect();
    Ok((times, mean, stderr))
}

fn populations(v: &DVector<C64>) -> [f64; 4] {
    let n = v.len() / 4;
    let norm = v.norm_squared();
    std::array::from_fn(|l| v.rows(l * n, n).norm_squared() / norm)
}

/// Per-point mean and standard error over runs, reduced in run order.
pub(crate) fn mean_stderr<'a, const K: usize>(runs: impl Iterator<Item = &'a [[f64; K]]>) -> (Vec<[f64; K]>, Vec<[f64; K]>) {
    let mut sum: Vec<[f64; K]> = Vec::new();
    let mut sq: Vec<[f64; K]> = Vec::new();
    let mut count = 0usize;
    for r in runs {
        if sum.is_empty() {
            sum = vec![[0.0; K]; r.len()];
            sq = vec![[0.0; K]; r.len()];
        }
        for (j, row) in r.iter().enumerate() {
            for k in 0..K {
                sum[j][k] += row[k];
                sq[j][k] += row[k] * row[k];
            }
        }
        count += 1;
    }
    let c = count as f64;
    let mean: Vec<[f64; K]> = sum.iter().map(|s| s.map(|x| x / c)).collect();
    let stderr = sq
        .iter()
        .zip(&mean)
        .map(|(s, m)| std::array::from_fn(|k| if count < 2 { 0.0 } else { ((s[k] / c - m[k] * m[k]).max(0.0) * c / (c - 1.0) / c).sqrt() }))
        .collect();
    (mean, stderr)
}

/// Evolves under a general `H(t)` from t = 0 with step `dt`, recording
/// every `record_every` steps (and at the end).
pub fn evolve_function(
    h: &dyn HamiltonianFunction,
    psi0: &StateVector,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<(Vec<f64>, Vec<StateVector>)> {
    if psi0.dim() != h.dim() {
        return Err(Error::Dimension { expected: h.dim(), got: psi0.dim() });
    }
    let seg = Segment::with_max_step(t_end, dt, vec![])?;
    let dt = seg.step;
    let n = seg.steps();
    let mut psi = psi0.amplitudes().clone();
    let mut hm = DMatrix::zeros(h.dim(), h.dim());
    let mut cache: Option<(DMatrix<C64>, DMatrix<C64>)> = None;
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    for k in 0..n {
        h.fill((k as f64 + 0.5) * dt, &mut hm);
        let hit = matches!(&cache, Some((hc, _)) if *hc == hm);
        if !hit {
            cache = Some((hm.clone(), exp_hermitian(&hm, dt)));
        }
        psi = &cache.as_ref().expect("filled above").1 * psi;
        if (k + 1) % RENORMALIZE_EVERY == 0 {
            renormalize(&mut psi);
        }
        if (record_every > 0 && (k + 1) % record_every == 0) || k + 1 == n {
            times.push((k + 1) as f64 * dt);
            states.push(StateVector::from_normalized(&psi / C64::from(psi.norm())));
        }
    }
    Ok((times, states))
}

/// Propagator over one period of a periodic `H(t)`, from
/// `steps_per_period` midpoint steps.
pub fn period_propagator(h: &dyn HamiltonianFunction, steps_per_period: usize) -> Result<(f64, DMatrix<C64>)> {
    let period = h.period().ok_or_else(|| Error::param("h", "Hamiltonian is not periodic"))?;
    if steps_per_period == 0 {
        return Err(Error::param("steps_per_period", "must be positive"));
    }
    let dt = period / steps_per_period as f64;
    let d = h.dim();
    let mut hm = DMatrix::zeros(d, d);
    let mut u = DMatrix::<C64>::identity(d, d);
    for k in 0..steps_per_period {
        h.fill((k as f64 + 0.5) * dt, &mut hm);
        u = exp_hermitian(&hm, dt) * u;
    }
    Ok((period, u))
}

/// Stroboscopic evolution of a periodic Hamiltonian: the state after each
/// of `n_periods` periods (plus the initial state).
pub fn evolve_periodic(
    h: &dyn HamiltonianFunction,
    psi0: &StateVector,
    steps_per_period: usize,
    n_periods: usize,
) -> Result<(Vec<f64>, Vec<StateVector>)> {
    if psi0.dim() != h.dim() {
        return Err(Error::Dimension { expected: h.dim(), got: psi0.dim() });
    }
    let (period, u) = period_propagator(h, steps_per_period)?;
    let mut psi = psi0.amplitudes().clone();
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    for k in 1..=n_periods {
        psi = &u * psi;
        renormalize(&mut psi);
        times.push(k as f64 * period);
        states.push(StateVector::from_normalized(psi.clone()));
    }
    Ok((times, states))
}

/// Lindblad evolution with dephasing operator `sqrt(rate) (|+1><+1| - |-1><-1|)`,
/// used to cross-check the stochastic ensembles. Returns the density
/// matrix at t = 0, every `record_every` steps and at the end.
pub fn lindblad_check(schedule: &Schedule, rho0: &Operator, rate: f64, record_every: usize) -> Result<(Vec<f64>, Vec<Operator>)> {
    schedule.validate()?;
    if rho0.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho0.dim() });
    }
    if !(rate >= 0.0) {
        return Err(Error::param("rate", "must be non-negative"));
    }
    let id = DMatrix::<C64>::identity(4, 4);
    let l = Operator::zeeman().matrix() * C64::from(rate.sqrt());
    let ldl = l.adjoint() * &l;
    let dissipator = l.conjugate().kronecker(&l) - id.kronecker(&ldl) * C64::from(0.5) - ldl.transpose().kronecker(&id) * C64::from(0.5);
    let mut rho = DVector::from_column_slice(rho0.matrix().as_slice());
    let mut times = vec![0.0];
    let mut out = vec![rho0.clone()];
    let mut cache: Option<(Matrix4<C64>, f64, DMatrix<C64>)> = None;
    let mut t_seg = 0.0;
    let mut count = 0usize;
    let mut h = Matrix4::zeros();
    for seg in schedule.segments() {
        let dt = seg.step;
        for k in 0..seg.steps() {
            let local = (k as f64 + 0.5) * dt;
            h.fill(ZERO);
            fill_drives(&mut h, &seg.drives, t_seg + local, local, schedule.frame, schedule.levels.lambda0, &Perturbation::default());
            let hit = matches!(&cache, Some((hc, dc, _)) if *hc == h && *dc == dt);
            if !hit {
                let hd = DMatrix::from_column_slice(4, 4, h.as_slice());
                let gen = (id.kronecker(&hd) - hd.transpose().kronecker(&id)) * C64::new(0.0, -1.0) + &dissipator;
                cache = Some((h, dt, (gen * C64::from(dt)).exp()));
            }
            rho = &cache.as_ref().expect("filled above").2 * rho;
            count += 1;
            if record_every > 0 && count.is_multiple_of(record_every) {
                times.push(t_seg + (k + 1) as f64 * dt);
                out.push(Operator::new(DMatrix::from_column_slice(4, 4, rho.as_slice()))?);
            }
        }
        t_seg += seg.duration;
    }
    if record_every == 0 || !count.is_multiple_of(record_every) {
        times.push(schedule.duration());
        out.push(Operator::new(DMatrix::from_column_slice(4, 4, rho.as_slice()))?);
    }
    Ok((times, out))
}

/// Pure-state density matrix.
pub fn density_matrix(psi: &StateVector) -> Result<Operator> {
    let v = psi.amplitudes();
    Operator::new(v * v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Level, ONE};
    use crate::hamiltonian::{DriveField, Transition};
    use crate::sequence::{pi_pulse, stirap_schedule, StirapParams};

    fn schedule(segs: Vec<Segment>) -> Schedule {
        Schedule::from_segments(IonLevels::default(), Frame::MultiRotatingRwa, segs).unwrap()
    }

    #[test]
    fn pi_pulse_transfers_population() {
        let s = schedule(vec![pi_pulse(Transition::MinusZero, 1e5).unwrap()]);
        let tr = evolve(&s, &StateVector::basis(Level::Zero), None, 0).unwrap();
        assert!((tr.final_state().level_population(Level::Minus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_step_matches_phase() {
        let mut m = DMatrix::zeros(4, 4);
        m[(3, 3)] = C64::from(2.0);
        let psi = StateVector::basis(Level::Plus);
        let out = step(&Operator::new(m).unwrap(), &psi, 0.25).unwrap();
        assert!((out.amplitudes()[3] - C64::from_polar(1.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 2)] = ONE;
        assert!(matches!(step(&Operator::new(m).unwrap(), &StateVector::basis(Level::Zero), 1.0), Err(Error::NonHermitian { .. })));
        let s = schedule(vec![Segment::new(1.0, 0.1, vec![]).unwrap()]);
        let r = evolve(&s, &StateVector::basis(Level::Zero), Some(&[0.0; 3]), 0);
        assert!(matches!(r, Err(Error::NoiseTraceLength { expected: 10, got: 3 })));
    }

    #[test]
    fn stirap_transfer_at_reference_parameters() {
        // independent prototype value for N=5, s_t=6, N_t=10
        let s = stirap_schedule(&StirapParams::default(), IonLevels::default(), Frame::MultiRotatingRwa, &[]).unwrap();
        let tr = evolve(&s, &StateVector::basis(Level::Minus), None, 0).unwrap();
        let f = tr.final_state().level_population(Level::Plus);
        assert!((f - 0.99971).abs() < 2e-5, "{f}");
    }

    #[test]
    fn time_reversal_restores_state() {
        let p = StirapParams { hold_time: 2e-4, detuning_minus: 300.0, detuning_plus: -200.0, relative_phase: 0.4, ..Default::default() };
        let gate = [DriveField::new(Transition::MinusZeroPrime, 2e3).with_detuning(50.0)];
        let s = stirap_schedule(&p, IonLevels::default(), Frame::MultiRotatingRwa, &gate).unwrap();
        let psi0 = StateVector::from_slice(&[C64::new(0.3, 0.1), C64::new(0.5, 0.0), C64::new(0.2, -0.6), C64::new(0.1, 0.4)]).unwrap();
        let fwd = evolve(&s, &psi0, None, 0).unwrap();
        let back = evolve(&s.inverse().unwrap(), fwd.final_state(), None, 0).unwrap();
        let f = back.final_state().fidelity(&psi0).unwrap();
        assert!((1.0 - f) < 1e-10, "{f}");
    }

    #[test]
    fn quiet_ensemble_equals_single_trajectory() {
        let s = stirap_schedule(&StirapParams::default(), IonLevels::default(), Frame::MultiRotatingRwa, &[]).unwrap();
        let psi = StateVector::basis(Level::Minus);
        let avg = ensemble_average(&s, &psi, &NoiseModel::quiet(), 10, 3, 50).unwrap();
        let single = evolve(&s, &psi, None, 50).unwrap();
        assert_eq!(avg.times, single.times);
        for (a, b) in avg.mean.iter().zip(single.level_populations()) {
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ensemble_is_independent_of_worker_count() {
        let p = StirapParams { hold_time: 1e-3, hold_step: Some(5e-6), ..Default::default() };
        let s = stirap_schedule(&p, IonLevels::default(), Frame::MultiRotatingRwa, &[]).unwrap();
        let psi = StateVector::basis(Level::Minus);
        let model = NoiseModel::zeeman(2e4, 1e-4);
        let run = |w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| ensemble_average(&s, &psi, &model, 12, 42, 100).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn lindblad_dephasing_of_bare_superposition() {
        let psi = StateVector::superposition(&[(Level::Minus, ONE), (Level::Plus, ONE)]).unwrap();
        let s = schedule(vec![Segment::new(1.0, 0.01, vec![]).unwrap()]);
        let (t, rho) = lindblad_check(&s, &density_matrix(&psi).unwrap(), 0.3, 50).unwrap();
        for (t, r) in t.iter().zip(&rho) {
            let c = 2.0 * r.matrix()[(2, 3)].norm();
            assert!((c - (-2.0 * 0.3 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_evolution_matches_direct_stepping() {
        use crate::hamiltonian::{sideband_effective, TrapMode};
        let mode = TrapMode::new(10.0, 0.1, 4).unwrap();
        let h = sideband_effective(&mode, 0.5, 10.0).unwrap();
        let psi = StateVector::basis_fock(Level::ZeroPrime, 1, 4).unwrap();
        let (_, a) = evolve_periodic(&h, &psi, 40, 25).unwrap();
        let period = h.period().unwrap();
        let (_, b) = evolve_function(&h, &psi, 25.0 * period, period / 40.0, 0).unwrap();
        assert!((a.last().unwrap().fidelity(b.last().unwrap()).unwrap() - 1.0).abs() < 1e-10);
    }
}
