use rayon::prelude::*;

use crate::basis::{Level, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{DriveField, Frame, IonLevels};
use crate::noise::{NoiseGenerator, NoiseModel};
use crate::propagator::{mean_stderr, run_segments, Kernel4};
use crate::sequence::{Schedule, Segment};

/// `prefix`, a hold of variable length, then `tail`; the dark (`|0>`)
/// probability is read at the end.
///
/// One trajectory covers every hold length: the hold is run in chunks up to
/// each requested length, where the state and the noise generator are
/// cloned and the tail is run on the copy. Branch `k` is therefore an exact
/// run of [`HoldScan::branch_schedule`]`(k)`.
#[derive(Clone, Debug)]
pub struct HoldScan {
    pub levels: IonLevels,
    pub frame: Frame,
    pub prefix: Vec<Segment>,
    pub hold_drives: Vec<DriveField>,
    /// Largest step used in the hold, s.
    pub hold_step: f64,
    pub tail: Vec<Segment>,
    /// Hold lengths, ascending, s.
    pub holds: Vec<f64>,
}

impl HoldScan {
    fn chunks(&self) -> Result<Vec<Option<Segment>>> {
        if self.holds.is_empty() {
            return Err(Error::param("holds", "need at least one hold time"));
        }
        let mut prev = 0.0;
        let mut out = Vec::with_capacity(self.holds.len());
        for &h in &self.holds {
            if !(h.is_finite() && h >= prev) {
                return Err(Error::param("holds", "must be finite, non-negative and ascending"));
            }
            let d = h - prev;
            out.push(if d > 0.0 {
                Some(Segment::with_max_step(d, self.hold_step, self.hold_drives.clone())?.labeled("hold"))
            } else {
                None
            });
            prev = h;
        }
        Ok(out)
    }

    /// The full schedule realised by branch `k`.
    pub fn branch_schedule(&self, k: usize) -> Result<Schedule> {
        let chunks = self.chunks()?;
        let mut s = Schedule::new(self.levels, self.frame);
        s.extend(self.prefix.iter().cloned())?;
        s.mark("hold-start");
        s.extend(chunks.into_iter().take(k + 1).flatten())?;
        s.mark("hold-end");
        s.extend(self.tail.iter().cloned())?;
        Ok(s)
    }

    /// Mean and standard error of the dark probability at every hold.
    pub fn run(&self, psi0: &StateVector, model: &NoiseModel, n_traj: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        model.validate()?;
        if n_traj == 0 {
            return Err(Error::param("n_traj", "must be at least 1"));
        }
        let chunks = self.chunks()?;
        self.branch_schedule(0)?.validate()?;
        let one = |i: usize| -> Vec<[f64; 1]> {
            let mut gen = NoiseGenerator::new(*model, seed, i as u64);
            let mut kernel = Kernel4::default();
            let mut psi = psi0.amplitudes().clone();
            let (mut t, mut step) =
                run_segments(&self.levels, self.frame, &self.prefix, 0.0, 0, &mut psi, &mut gen, &mut kernel, &mut |_, _, _| {});
            let mut out = Vec::with_capacity(chunks.len());
            for chunk in &chunks {
                if let Some(c) = chunk {
                    (t, step) = run_segments(
                        &self.levels,
                        self.frame,
                        std::slice::from_ref(c),
                        t,
                        step,
                        &mut psi,
                        &mut gen,
                        &mut kernel,
                        &mut |_, _, _| {},
                    );
                }
                let mut branch = psi.clone();
                let mut g = gen.clone();
                run_segments(&self.levels, self.frame, &self.tail, t, step, &mut branch, &mut g, &mut kernel, &mut |_, _, _| {});
                let n = branch.len() / 4;
                let dark = branch.rows(Level::Zero.index() * n, n).norm_squared() / branch.norm_squared();
                out.push([dark]);
            }
            out
        };
        let runs: Vec<Vec<[f64; 1]>> = if model.is_quiet() { vec![one(0)] } else { (0..n_traj).into_par_iter().map(one).collect() };
        let (mean, stderr) = mean_stderr(runs.iter().map(Vec::as_slice));
        Ok((mean.iter().map(|m| m[0]).collect(), stderr.iter().map(|s| s[0]).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Transition;
    use crate::propagator::evolve;
    use crate::sequence::{pi_pulse, StirapParams};

    #[test]
    fn branches_match_direct_schedules() {
        let p = StirapParams { relative_phase: 0.3, ..Default::default() };
        let parts = p.parts().unwrap();
        let rabi = p.omega();
        let mut hold = parts.hold_drives.clone();
        hold.push(DriveField::new(Transition::MinusZeroPrime, 4e3).with_detuning(900.0));
        let scan = HoldScan {
            levels: IonLevels::default(),
            frame: Frame::MultiRotatingRwa,
            prefix: vec![pi_pulse(Transition::MinusZero, rabi).unwrap(), parts.ramp_in.clone()],
            hold_drives: hold,
            hold_step: 3e-6,
            tail: vec![parts.ramp_out.clone(), pi_pulse(Transition::PlusZero, rabi).unwrap()],
            holds: vec![0.0, 1e-4, 3.5e-4],
        };
        let psi = StateVector::basis(Level::Zero);
        let (mean, _) = scan.run(&psi, &NoiseModel::quiet(), 1, 0).unwrap();
        for (k, m) in mean.iter().enumerate() {
            let tr = evolve(&scan.branch_schedule(k).unwrap(), &psi, None, 0).unwrap();
            let direct = tr.final_state().level_population(Level::Zero);
            assert!((direct - m).abs() < 1e-12, "{k}: {direct} vs {m}");
        }
    }
}
