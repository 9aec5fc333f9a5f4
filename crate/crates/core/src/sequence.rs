//! Pulse schedules: STIRAP ramps, holds, rf gates and readout pulses.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::basis::Level;
use crate::error::{Error, Result};
use crate::hamiltonian::{resonant_pair, DriveField, Envelope, Frame, IonLevels, Transition};

/// Default resolution of non-STIRAP segments: steps per period of the
/// fastest frequency in the segment.
pub const STEPS_PER_PERIOD: f64 = 50.0;

/// Piecewise-constant stretch of a schedule, stepped at fixed `step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Segment {
    pub duration: f64,
    pub step: f64,
    #[serde(default)]
    pub drives: Vec<DriveField>,
    #[serde(default)]
    pub label: String,
}

impl Segment {
    pub fn new(duration: f64, step: f64, drives: Vec<DriveField>) -> Result<Self> {
        let s = Segment { duration, step, drives, label: String::new() };
        s.validate()?;
        Ok(s)
    }

    /// Segment whose step is `1/(50 f_max)`, shrunk to divide `duration`.
    pub fn auto(duration: f64, drives: Vec<DriveField>) -> Result<Self> {
        let fmax = drives.iter().map(|d| (d.rabi * d.envelope.peak()).max(d.detuning.abs()) / TAU).fold(0.0, f64::max);
        let step = if fmax > 0.0 { 1.0 / (STEPS_PER_PERIOD * fmax) } else { duration.max(f64::MIN_POSITIVE) };
        Self::with_max_step(duration, step, drives)
    }

    /// Uses the largest step `<= max_step` that divides `duration`.
    pub fn with_max_step(duration: f64, max_step: f64, drives: Vec<DriveField>) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::Schedule(format!("step {max_step} must be positive")));
        }
        let n = (duration / max_step - 1e-9).ceil().max(1.0);
        let step = if duration > 0.0 { duration / n } else { max_step };
        Self::new(duration, step, drives)
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn steps(&self) -> usize {
        if self.duration == 0.0 {
            0
        } else {
            (self.duration / self.step).round() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::Schedule(format!("segment duration {} must be non-negative", self.duration)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Schedule(format!("segment step {} must be positive", self.step)));
        }
        if self.duration > 0.0 {
            let n = (self.duration / self.step).round();
            if n < 1.0 || (n * self.step - self.duration).abs() > 1e-6 * self.duration {
                return Err(Error::Schedule(format!("step {:.6e} s does not divide duration {:.6e} s", self.step, self.duration)));
            }
        }
        for d in &self.drives {
            d.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub time: f64,
}

/// Contiguous segments starting at t = 0, plus the level structure and
/// frame needed to turn them into a Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Schedule {
    #[serde(default)]
    pub levels: IonLevels,
    #[serde(default)]
    pub frame: Frame,
    segments: Vec<Segment>,
    #[serde(default)]
    markers: Vec<Marker>,
}

impl Schedule {
    pub fn new(levels: IonLevels, frame: Frame) -> Self {
        Schedule { levels, frame, segments: Vec::new(), markers: Vec::new() }
    }

    pub fn from_segments(levels: IonLevels, frame: Frame, segments: Vec<Segment>) -> Result<Self> {
        let mut s = Self::new(levels, frame);
        for seg in segments {
            s.push(seg)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, seg: Segment) -> Result<&mut Self> {
        seg.validate()?;
        self.segments.push(seg);
        Ok(self)
    }

    pub fn extend(&mut self, segs: impl IntoIterator<Item = Segment>) -> Result<&mut Self> {
        for s in segs {
            self.push(s)?;
        }
        Ok(self)
    }

    /// Marks the current end of the schedule.
    pub fn mark(&mut self, name: &str) -> &mut Self {
        let t = self.duration();
        self.markers.push(Marker { name: name.to_string(), time: t });
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.levels.validate()?;
        if self.frame == Frame::SingleRotatingFull && self.levels.lambda0 == 0.0 {
            return Err(Error::param("lambda0", "singleRotatingFull needs a non-zero Zeeman splitting"));
        }
        self.segments.iter().try_for_each(Segment::validate)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn marker(&self, name: &str) -> Option<f64> {
        self.markers.iter().find(|m| m.name == name).map(|m| m.time)
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn step_count(&self) -> usize {
        self.segments.iter().map(Segment::steps).sum()
    }

    /// Start time of every segment.
    pub fn starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                start
            })
            .collect()
    }

    /// Time-reversed schedule: running it after `self` undoes `self`
    /// exactly in the absence of noise.
    pub fn inverse(&self) -> Result<Schedule> {
        if self.frame != Frame::MultiRotatingRwa {
            return Err(Error::Schedule("time reversal is only defined in the multiRotatingRWA frame".into()));
        }
        let total = self.duration();
        let starts = self.starts();
        let mut segs: Vec<Segment> = self
            .segments
            .iter()
            .zip(&starts)
            .map(|(s, &start)| Segment {
                duration: s.duration,
                step: s.step,
                drives: s.drives.iter().map(|d| d.reversed(start, start + s.duration, total)).collect(),
                label: s.label.clone(),
            })
            .collect();
        segs.reverse();
        let mut markers: Vec<Marker> = self.markers.iter().map(|m| Marker { name: m.name.clone(), time: total - m.time }).collect();
        markers.reverse();
        Ok(Schedule { levels: self.levels, frame: self.frame, segments: segs, markers })
    }
}

/// How the STIRAP width `N / f_Omega` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WidthConvention {
    /// `exp(-(t/T)^2)`: the amplitude falls to 1/e at `T` from the centre.
    #[default]
    HalfWidthInvE,
    /// `exp(-t^2/(2 sigma^2))`.
    Sigma,
    Fwhm,
    /// Full width between the 1/e amplitude points.
    FullWidthInvE,
}

impl WidthConvention {
    /// Converts a width in this convention to the `T` of `exp(-(t/T)^2)`.
    pub fn to_half_width(self, w: f64) -> f64 {
        match self {
            WidthConvention::HalfWidthInvE => w,
            WidthConvention::Sigma => SQRT_2 * w,
            WidthConvention::Fwhm => w / (2.0 * std::f64::consts::LN_2.sqrt()),
            WidthConvention::FullWidthInvE => 0.5 * w,
        }
    }
}

/// STIRAP between `|-1>` and the protected state, in units of the dressing
/// frequency `f_omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StirapParams {
    /// Peak Rabi frequency of both pulses, Hz.
    pub f_omega: f64,
    /// Pulse width `N` in periods of `f_omega`.
    pub width: f64,
    /// Pulse separation `s_t` in periods of `f_omega`.
    pub separation: f64,
    /// Time steps per period, `N_t`.
    pub steps_per_period: u32,
    /// Hold at the crossing point, s.
    pub hold_time: f64,
    /// Phase of the `|+1>` pulse relative to the `|-1>` pulse.
    pub relative_phase: f64,
    #[serde(default)]
    pub width_convention: WidthConvention,
    /// Detuning of the `|-1>` pulse, Hz.
    #[serde(default)]
    pub detuning_minus: f64,
    /// Detuning of the `|+1>` pulse, Hz.
    #[serde(default)]
    pub detuning_plus: f64,
    /// Maximum step during the hold, s. Defaults to `1/(50 f)` of the
    /// fastest frequency present.
    #[serde(default)]
    pub hold_step: Option<f64>,
}

impl Default for StirapParams {
    fn default() -> Self {
        StirapParams {
            f_omega: 36.5e3,
            width: 5.0,
            separation: 6.0,
            steps_per_period: 10,
            hold_time: 0.0,
            relative_phase: 0.0,
            width_convention: WidthConvention::HalfWidthInvE,
            detuning_minus: 0.0,
            detuning_plus: 0.0,
            hold_step: None,
        }
    }
}

/// Ramps and hold drives of a STIRAP sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct StirapParts {
    pub ramp_in: Segment,
    /// Dressing drives frozen at the crossing amplitude.
    pub hold_drives: Vec<DriveField>,
    pub ramp_out: Segment,
    /// Rabi frequency of each dressing drive during the hold, rad/s.
    pub hold_rabi: f64,
}

impl StirapParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} must be positive")))
            }
        };
        pos("f_omega", self.f_omega)?;
        pos("width", self.width)?;
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::param("separation", "must be non-negative"));
        }
        if self.steps_per_period == 0 {
            return Err(Error::param("steps_per_period", "must be a positive integer"));
        }
        if !(self.hold_time.is_finite() && self.hold_time >= 0.0) {
            return Err(Error::param("hold_time", "must be non-negative"));
        }
        if let Some(h) = self.hold_step {
            pos("hold_step", h)?;
        }
        if !(self.relative_phase.is_finite() && self.detuning_minus.is_finite() && self.detuning_plus.is_finite()) {
            return Err(Error::param("stirap", "phase and detunings must be finite"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        TAU * self.f_omega
    }

    /// STIRAP time step `1/(f_omega N_t)`.
    pub fn step(&self) -> f64 {
        1.0 / (self.f_omega * self.steps_per_period as f64)
    }

    /// Gaussian `T` of `exp(-(t/T)^2)`.
    pub fn half_width(&self) -> f64 {
        self.width_convention.to_half_width(self.width / self.f_omega)
    }

    pub fn pulse_separation(&self) -> f64 {
        self.separation / self.f_omega
    }

    /// Envelope value of each pulse at the crossing.
    pub fn crossing_level(&self) -> f64 {
        let t = self.half_width();
        let x = 0.5 * self.pulse_separation();
        if x > 3.0 * t {
            0.0
        } else {
            (-(x / t).powi(2)).exp()
        }
    }

    pub fn parts(&self) -> Result<StirapParts> {
        self.validate()?;
        let dt = self.step();
        let t = self.half_width();
        let cut = 3.0 * t;
        let tau = self.pulse_separation();
        let n = ((0.5 * tau + cut) / dt - 1e-9).ceil().max(1.0);
        let len = n * dt;
        let omega = self.omega();
        let gauss = |center| Envelope::Gaussian { center, width: t, cutoff: cut };
        let [minus, plus] = resonant_pair(Level::Zero, omega, self.relative_phase);
        let minus = minus.with_detuning(TAU * self.detuning_minus);
        let plus = plus.with_detuning(TAU * self.detuning_plus);
        // the |+1> pulse leads
        let ramp_in = Segment::new(
            len,
            dt,
            vec![plus.clone().with_envelope(gauss(len - 0.5 * tau)), minus.clone().with_envelope(gauss(len + 0.5 * tau))],
        )?
        .labeled("stirap-in");
        let ramp_out =
            Segment::new(len, dt, vec![plus.clone().with_envelope(gauss(-0.5 * tau)), minus.clone().with_envelope(gauss(0.5 * tau))])?
                .labeled("stirap-out");
        let level = self.crossing_level();
        let hold = Envelope::Constant { level };
        Ok(StirapParts {
            ramp_in,
            hold_drives: vec![plus.with_envelope(hold.clone()), minus.with_envelope(hold)],
            ramp_out,
            hold_rabi: omega * level,
        })
    }

    /// Hold segment of `duration` with the dressing plus `extra` drives.
    pub fn hold_segment(&self, parts: &StirapParts, duration: f64, extra: &[DriveField]) -> Result<Segment> {
        let mut drives = parts.hold_drives.clone();
        drives.extend_from_slice(extra);
        let seg = match self.hold_step {
            Some(h) => Segment::with_max_step(duration, h, drives)?,
            None => Segment::auto(duration, drives)?,
        };
        Ok(seg.labeled("hold"))
    }
}

/// STIRAP in, hold at the crossing point with optional gate drives, STIRAP out.
///
/// Markers: `T1` end of the ramp in, `T2` end of the hold, `end`.
pub fn stirap_schedule(p: &StirapParams, levels: IonLevels, frame: Frame, gate_drives: &[DriveField]) -> Result<Schedule> {
    let parts = p.parts()?;
    if !gate_drives.is_empty() {
        if p.hold_time == 0.0 {
            return Err(Error::Schedule("gate drives need a non-zero hold; they would overlap the ramps".into()));
        }
        for d in gate_drives {
            if let Envelope::Gaussian { center, cutoff, .. } = d.envelope {
                if center - cutoff < 0.0 || center + cutoff > p.hold_time {
                    return Err(Error::Schedule("gate drive envelope overlaps the STIRAP ramps".into()));
                }
            }
        }
    }
    let mut s = Schedule::new(levels, frame);
    s.push(parts.ramp_in.clone())?.mark("T1");
    if p.hold_time > 0.0 {
        s.push(p.hold_segment(&parts, p.hold_time, gate_drives)?)?;
    }
    s.mark("T2");
    s.push(parts.ramp_out)?.mark("end");
    Ok(s)
}

/// Resonant pi pulse on `transition` with Rabi frequency `rabi` (rad/s).
pub fn pi_pulse(transition: Transition, rabi: f64) -> Result<Segment> {
    if !(rabi > 0.0 && rabi.is_finite()) {
        return Err(Error::param("rabi", "pi pulse needs a positive Rabi frequency"));
    }
    Ok(Segment::auto(PI / rabi, vec![DriveField::new(transition, rabi)])?.labeled("pi"))
}

/// rf pair on `|+-1> <-> |0'>` with equal phases, so it couples `|0'>` to
/// `(|-1> + |+1>)/sqrt2`, the protected state of a phase-pi dressing.
pub fn rf_pair(rf_rabi: f64, detuning: f64) -> Vec<DriveField> {
    resonant_pair(Level::ZeroPrime, rf_rabi, 0.0).into_iter().map(|d| d.with_detuning(detuning)).collect()
}

/// Duration of an rf pi/2 pulse between `|0'>` and the protected state,
/// whose coupling is `rf_rabi / sqrt2`.
pub fn rf_half_pi_time(rf_rabi: f64) -> f64 {
    PI / (2.0 * SQRT_2 * rf_rabi)
}

/// Dressed Rabi experiment: STIRAP in with phase pi, rf pair on for
/// `duration`, STIRAP out.
pub fn rabi_schedule(p: &StirapParams, levels: IonLevels, rf_rabi: f64, duration: f64) -> Result<Schedule> {
    let mut p = p.clone();
    p.relative_phase = PI;
    p.hold_time = duration;
    let gate = if duration > 0.0 { rf_pair(rf_rabi, 0.0) } else { Vec::new() };
    stirap_schedule(&p, levels, Frame::MultiRotatingRwa, &gate)
}

/// Dressed Ramsey experiment: two rf pi/2 pulses separated by `free_time`
/// inside the hold.
pub fn ramsey_schedule(p: &StirapParams, levels: IonLevels, rf_rabi: f64, rf_detuning: f64, free_time: f64) -> Result<Schedule> {
    let mut p = p.clone();
    p.relative_phase = PI;
    let parts = p.parts()?;
    let rf = rf_pair(rf_rabi, rf_detuning);
    let tp = rf_half_pi_time(rf_rabi);
    let mut s = Schedule::new(levels, Frame::MultiRotatingRwa);
    s.push(parts.ramp_in.clone())?.mark("T1");
    s.push(p.hold_segment(&parts, tp, &rf)?.labeled("rf-pi/2"))?;
    if free_time > 0.0 {
        s.push(p.hold_segment(&parts, free_time, &[])?.labeled("free"))?;
    }
    s.push(p.hold_segment(&parts, tp, &rf)?.labeled("rf-pi/2"))?;
    s.mark("T2");
    s.push(parts.ramp_out)?.mark("end");
    Ok(s)
}

/// Prepends the `|0> -> |-1>` pi pulse and appends the `|+1> -> |0>` pi
/// pulse, so that the dark (`|0>`) probability reads out the protected state.
pub fn with_readout(schedule: &Schedule, rabi: f64) -> Result<Schedule> {
    let mut s = Schedule::new(schedule.levels, schedule.frame);
    s.push(pi_pulse(Transition::MinusZero, rabi)?)?.mark("prepared");
    let offset = s.duration();
    s.extend(schedule.segments.iter().cloned())?;
    for m in &schedule.markers {
        s.markers.push(Marker { name: m.name.clone(), time: m.time + offset });
    }
    s.push(pi_pulse(Transition::PlusZero, rabi)?)?.mark("readout");
    Ok(s)
}
