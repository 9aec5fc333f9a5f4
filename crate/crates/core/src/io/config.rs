use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::units::{Hertz, Seconds};
use crate::error::{Error, Result};
use crate::experiments::{FitSource, ScanAxis, SpamModel};
use crate::hamiltonian::{Envelope, Frame, IonLevels, Transition};
use crate::noise::DriveNoise;
use crate::sequence::{StirapParams, WidthConvention};
use crate::units::hz;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fig2,
    Fig3a,
    Fig3b,
    StirapScan,
    Sideband,
    Comb,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Fig2,
        ExperimentKind::Fig3a,
        ExperimentKind::Fig3b,
        ExperimentKind::StirapScan,
        ExperimentKind::Sideband,
        ExperimentKind::Comb,
        ExperimentKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3a => "fig3a",
            ExperimentKind::Fig3b => "fig3b",
            ExperimentKind::StirapScan => "stirap-scan",
            ExperimentKind::Sideband => "sideband",
            ExperimentKind::Comb => "comb",
            ExperimentKind::Custom => "custom",
        }
    }

    /// Whether the run needs the Zeeman noise model.
    pub fn uses_noise(self) -> bool {
        matches!(self, ExperimentKind::Fig2 | ExperimentKind::Fig3a | ExperimentKind::Fig3b | ExperimentKind::Custom)
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config { path: "experiment".into(), message: format!("unknown experiment `{s}`") })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// A complete, validated run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub fit_source: FitSource,
    #[serde(default)]
    pub ion: IonSection,
    #[serde(default)]
    pub stirap: StirapSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub spam: SpamModel,
    #[serde(default)]
    pub fig2: Fig2Section,
    #[serde(default)]
    pub fig3a: Fig3aSection,
    #[serde(default)]
    pub fig3b: Fig3bSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub sideband: SidebandSection,
    #[serde(default)]
    pub comb: CombSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSection>,
}

fn default_seed() -> u64 {
    1
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

/// The two microwave lines fix the clock frequency and the Zeeman splitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct IonSection {
    /// `|0> <-> |+1>` line.
    pub upper_line: Hertz,
    /// `|0> <-> |-1>` line.
    pub lower_line: Hertz,
    pub frame: Frame,
}

impl Default for IonSection {
    fn default() -> Self {
        IonSection { upper_line: Hertz(12.652_812_1e9), lower_line: Hertz(12.632_827_2e9), frame: Frame::MultiRotatingRwa }
    }
}

impl IonSection {
    pub fn levels(&self) -> IonLevels {
        let (hi, lo) = (self.upper_line.0, self.lower_line.0);
        IonLevels { omega0: hz(0.5 * (hi + lo)), lambda0: hz(0.5 * (hi - lo)) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct StirapSection {
    pub f_omega: Hertz,
    pub width: f64,
    pub separation: f64,
    pub steps_per_period: u32,
    pub hold_time: Seconds,
    pub relative_phase: f64,
    pub width_convention: WidthConvention,
    pub detuning_minus: Hertz,
    pub detuning_plus: Hertz,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hold_step: Option<Seconds>,
}

impl Default for StirapSection {
    fn default() -> Self {
        let p = StirapParams::default();
        StirapSection {
            f_omega: Hertz(p.f_omega),
            width: p.width,
            separation: p.separation,
            steps_per_period: p.steps_per_period,
            hold_time: Seconds(p.hold_time),
            relative_phase: p.relative_phase,
            width_convention: p.width_convention,
            detuning_minus: Hertz(p.detuning_minus),
            detuning_plus: Hertz(p.detuning_plus),
            hold_step: None,
        }
    }
}

impl StirapSection {
    /// Pulse parameters at dressing frequency `f_omega` (Hz).
    pub fn params(&self, f_omega: f64) -> StirapParams {
        StirapParams {
            f_omega,
            width: self.width,
            separation: self.separation,
            steps_per_period: self.steps_per_period,
            hold_time: self.hold_time.0,
            relative_phase: self.relative_phase,
            width_convention: self.width_convention,
            detuning_minus: self.detuning_minus.0,
            detuning_plus: self.detuning_plus.0,
            hold_step: self.hold_step.map(|s| s.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct NoiseSection {
    pub enabled: bool,
    /// Bare coherence time the OU amplitude is calibrated against.
    pub bare_t2: Seconds,
    pub correlation_time: Seconds,
    /// RMS Zeeman shift in Hz. Skips the calibration when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Hertz>,
    pub calibration_trajectories: usize,
    pub drive: DriveNoise,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            enabled: true,
            bare_t2: Seconds(5.3e-3),
            correlation_time: Seconds(100e-6),
            amplitude: None,
            calibration_trajectories: 20_000,
            drive: DriveNoise::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Fig2Section {
    pub holds: Vec<Seconds>,
    pub n_traj: usize,
    pub n_reps: u32,
}

impl Default for Fig2Section {
    fn default() -> Self {
        let holds = [0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0].map(Seconds).to_vec();
        Fig2Section { holds, n_traj: 400, n_reps: 300 }
    }
}

/// Evenly spaced sample times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Window {
    pub start: Seconds,
    pub stop: Seconds,
    pub points: usize,
    pub n_reps: u32,
}

impl Window {
    pub fn times(&self) -> Vec<f64> {
        let (a, b) = (self.start.0, self.stop.0);
        let n = self.points.max(2);
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Fig3aSection {
    pub f_omega: Hertz,
    pub rf_rabi: Hertz,
    pub early: Window,
    pub late: Window,
    pub n_traj: usize,
}

impl Default for Fig3aSection {
    fn default() -> Self {
        Fig3aSection {
            f_omega: Hertz(31.8e3),
            rf_rabi: Hertz(100.0),
            early: Window { start: Seconds(0.0), stop: Seconds(20e-3), points: 41, n_reps: 50 },
            late: Window { start: Seconds(0.5), stop: Seconds(0.52), points: 41, n_reps: 25 },
            n_traj: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RamseyWindow {
    pub detuning: Hertz,
    pub start: Seconds,
    pub stop: Seconds,
    pub points: usize,
    pub n_reps: u32,
}

impl RamseyWindow {
    pub fn window(&self) -> Window {
        Window { start: self.start, stop: self.stop, points: self.points, n_reps: self.n_reps }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Fig3bSection {
    pub f_omega: Hertz,
    pub rf_rabi: Hertz,
    pub windows: Vec<RamseyWindow>,
    pub n_traj: usize,
}

impl Default for Fig3bSection {
    fn default() -> Self {
        Fig3bSection {
            f_omega: Hertz(37.3e3),
            rf_rabi: Hertz(1e3),
            windows: vec![
                RamseyWindow { detuning: Hertz(144.4), start: Seconds(0.1e-3), stop: Seconds(30e-3), points: 61, n_reps: 20 },
                RamseyWindow { detuning: Hertz(8.069), start: Seconds(0.5), stop: Seconds(1.0), points: 41, n_reps: 40 },
            ],
            n_traj: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ScanSection {
    pub axes: Vec<ScanAxis>,
    /// Fidelity below which a grid point counts as degraded.
    pub threshold: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { axes: vec![ScanAxis::StepsPerPeriod, ScanAxis::Width, ScanAxis::Separation, ScanAxis::Detuning], threshold: 0.99 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SidebandSection {
    /// Rabi frequency of each rf field. Defaults to a twentieth of the dressing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rf_rabi: Option<Hertz>,
    pub trap_frequency: Hertz,
    pub eta: f64,
    pub n_fock: usize,
    pub initial_fock: usize,
    /// Offset from the sideband resonance.
    pub detuning: Hertz,
    pub steps_per_period: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<Seconds>,
}

impl Default for SidebandSection {
    fn default() -> Self {
        SidebandSection {
            rf_rabi: None,
            trap_frequency: Hertz(200e3),
            eta: 0.05,
            n_fock: 8,
            initial_fock: 1,
            detuning: Hertz(0.0),
            steps_per_period: 64,
            duration: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CombTone {
    pub transition: Transition,
    pub detuning: Hertz,
    pub rabi: Hertz,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct CombSection {
    pub ion_count: usize,
    pub zeeman_step: Hertz,
    /// Empty means one resonant dressing pair per ion.
    pub lines: Vec<CombTone>,
    /// Steps per comb period for the exact quasi-energy check; 0 skips it.
    pub floquet_steps: usize,
}

impl Default for CombSection {
    fn default() -> Self {
        CombSection { ion_count: 3, zeeman_step: Hertz(1e6), lines: Vec::new(), floquet_steps: 2000 }
    }
}

/// A drive in a hand-written schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CustomDrive {
    pub transition: Transition,
    pub rabi: Hertz,
    #[serde(default)]
    pub detuning: Hertz,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CustomSegment {
    pub duration: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Seconds>,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub drives: Vec<CustomDrive>,
}

/// Contents of a raw schedule file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScheduleFile {
    pub segments: Vec<CustomSegment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CustomSection {
    /// Schedule file, relative to the config file. Ignored when
    /// `segments` is non-empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<CustomSegment>,
    #[serde(default = "default_initial")]
    pub initial: String,
    #[serde(default = "default_observe")]
    pub observe: Vec<String>,
    /// Relative phase of the dressed frame used for `u`, `d` and `P`.
    #[serde(default)]
    pub dressed_phase: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_custom_traj")]
    pub n_traj: usize,
}

fn default_initial() -> String {
    "-1".into()
}

fn default_observe() -> Vec<String> {
    ["-1", "+1", "0", "0'"].map(String::from).to_vec()
}

fn default_record_every() -> usize {
    10
}

fn default_custom_traj() -> usize {
    1
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(path, format!("must be non-negative, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be finite, got {v}")))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(invalid(path, format!("must be at least {min}, got {v}")))
    }
}

impl Window {
    fn validate(&self, path: &str) -> Result<()> {
        non_negative(&format!("{path}.start"), self.start.0)?;
        positive(&format!("{path}.stop"), self.stop.0)?;
        if self.stop.0 <= self.start.0 {
            return Err(invalid(&format!("{path}.stop"), "must be later than start"));
        }
        at_least(&format!("{path}.points"), self.points, 2)
    }
}

/// Parses and validates a TOML run description. Errors carry the path of
/// the offending key.
pub fn parse_config(doc: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(doc).map_err(|e| invalid("", e.to_string().trim()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().trim().to_string();
        Error::Config { path: if path == "." { String::new() } else { path }, message }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a raw schedule file for the `custom` experiment.
pub fn parse_schedule_file(doc: &str) -> Result<ScheduleFile> {
    let de = toml::Deserializer::parse(doc).map_err(|e| invalid("", e.to_string().trim()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path, message: e.into_inner().message().trim().to_string() }
    })
}

impl RunConfig {
    /// Config for `experiment` with every default filled in.
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let mut cfg: RunConfig = toml::from_str(&format!("experiment = \"{}\"", experiment.name())).expect("defaults parse");
        if experiment == ExperimentKind::Custom {
            cfg.custom = Some(CustomSection {
                schedule: None,
                segments: Vec::new(),
                initial: default_initial(),
                observe: default_observe(),
                dressed_phase: 0.0,
                record_every: default_record_every(),
                n_traj: default_custom_traj(),
            });
        }
        cfg
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.formats.is_empty() {
            return Err(invalid("formats", "at least one output format"));
        }
        positive("ion.upperLine", self.ion.upper_line.0)?;
        positive("ion.lowerLine", self.ion.lower_line.0)?;
        if self.ion.upper_line.0 < self.ion.lower_line.0 {
            return Err(invalid("ion.upperLine", "must not be below lowerLine"));
        }
        if self.ion.frame == Frame::SingleRotatingFull && self.ion.upper_line == self.ion.lower_line {
            return Err(invalid("ion.frame", "singleRotatingFull needs split lines"));
        }
        let s = &self.stirap;
        positive("stirap.fOmega", s.f_omega.0)?;
        positive("stirap.width", s.width)?;
        non_negative("stirap.separation", s.separation)?;
        if s.steps_per_period == 0 {
            return Err(invalid("stirap.stepsPerPeriod", "must be positive"));
        }
        non_negative("stirap.holdTime", s.hold_time.0)?;
        finite("stirap.relativePhase", s.relative_phase)?;
        finite("stirap.detuningMinus", s.detuning_minus.0)?;
        finite("stirap.detuningPlus", s.detuning_plus.0)?;
        if let Some(h) = s.hold_step {
            positive("stirap.holdStep", h.0)?;
        }
        let n = &self.noise;
        positive("noise.bareT2", n.bare_t2.0)?;
        positive("noise.correlationTime", n.correlation_time.0)?;
        if let Some(a) = n.amplitude {
            non_negative("noise.amplitude", a.0)?;
        }
        at_least("noise.calibrationTrajectories", n.calibration_trajectories, 1)?;
        non_negative("noise.drive.phaseDiffusion", n.drive.phase_diffusion)?;
        non_negative("noise.drive.amplitudeSigma", n.drive.amplitude_sigma)?;
        self.spam.validate().map_err(|e| invalid("spam", e.to_string()))?;

        match self.experiment {
            ExperimentKind::Fig2 => {
                let f = &self.fig2;
                if f.holds.len() < 3 {
                    return Err(invalid("fig2.holds", "need at least three hold times for a lifetime fit"));
                }
                for (i, h) in f.holds.iter().enumerate() {
                    non_negative(&format!("fig2.holds[{i}]"), h.0)?;
                }
                at_least("fig2.nTraj", f.n_traj, 1)?;
            }
            ExperimentKind::Fig3a => {
                let f = &self.fig3a;
                positive("fig3a.fOmega", f.f_omega.0)?;
                non_negative("fig3a.rfRabi", f.rf_rabi.0)?;
                f.early.validate("fig3a.early")?;
                f.late.validate("fig3a.late")?;
                at_least("fig3a.early.points", f.early.points, 5)?;
                at_least("fig3a.late.points", f.late.points, 5)?;
                at_least("fig3a.nTraj", f.n_traj, 1)?;
            }
            ExperimentKind::Fig3b => {
                let f = &self.fig3b;
                positive("fig3b.fOmega", f.f_omega.0)?;
                positive("fig3b.rfRabi", f.rf_rabi.0)?;
                if f.windows.is_empty() {
                    return Err(invalid("fig3b.windows", "need at least one window"));
                }
                for (i, w) in f.windows.iter().enumerate() {
                    finite(&format!("fig3b.windows[{i}].detuning"), w.detuning.0)?;
                    w.window().validate(&format!("fig3b.windows[{i}]"))?;
                    at_least(&format!("fig3b.windows[{i}].points"), w.points, 5)?;
                }
                at_least("fig3b.nTraj", f.n_traj, 1)?;
            }
            ExperimentKind::StirapScan => {
                if self.scan.axes.is_empty() {
                    return Err(invalid("scan.axes", "need at least one axis"));
                }
                if !(0.0..=1.0).contains(&self.scan.threshold) {
                    return Err(invalid("scan.threshold", "must lie in [0, 1]"));
                }
            }
            ExperimentKind::Sideband => {
                let b = &self.sideband;
                if let Some(r) = b.rf_rabi {
                    positive("sideband.rfRabi", r.0)?;
                }
                positive("sideband.trapFrequency", b.trap_frequency.0)?;
                non_negative("sideband.eta", b.eta)?;
                at_least("sideband.nFock", b.n_fock, 2)?;
                if b.initial_fock >= b.n_fock {
                    return Err(invalid("sideband.initialFock", format!("must be below nFock = {}", b.n_fock)));
                }
                finite("sideband.detuning", b.detuning.0)?;
                at_least("sideband.stepsPerPeriod", b.steps_per_period, 4)?;
                if let Some(d) = b.duration {
                    positive("sideband.duration", d.0)?;
                }
                if b.eta == 0.0 && b.duration.is_none() {
                    return Err(invalid("sideband.duration", "required when eta = 0"));
                }
            }
            ExperimentKind::Comb => {
                let c = &self.comb;
                at_least("comb.ionCount", c.ion_count, 1)?;
                finite("comb.zeemanStep", c.zeeman_step.0)?;
                for (i, l) in c.lines.iter().enumerate() {
                    finite(&format!("comb.lines[{i}].detuning"), l.detuning.0)?;
                    non_negative(&format!("comb.lines[{i}].rabi"), l.rabi.0)?;
                    if !l.transition.is_microwave() {
                        return Err(invalid(&format!("comb.lines[{i}].transition"), "comb tones drive the microwave transitions"));
                    }
                }
            }
            ExperimentKind::Custom => {
                let c = self.custom.as_ref().ok_or_else(|| invalid("custom", "the custom experiment needs a [custom] section"))?;
                if c.schedule.is_none() && c.segments.is_empty() {
                    return Err(invalid("custom.schedule", "give a schedule file or inline segments"));
                }
                for (i, seg) in c.segments.iter().enumerate() {
                    validate_segment(&format!("custom.segments[{i}]"), seg)?;
                }
                c.initial.parse::<crate::basis::StateLabel>().map_err(|e| invalid("custom.initial", e.to_string()))?;
                for (i, o) in c.observe.iter().enumerate() {
                    o.parse::<crate::basis::StateLabel>().map_err(|e| invalid(&format!("custom.observe[{i}]"), e.to_string()))?;
                }
                at_least("custom.nTraj", c.n_traj, 1)?;
            }
        }
        Ok(())
    }

    /// Every effective parameter of this run with where its value comes from.
    pub fn explain(&self) -> String {
        let d = RunConfig::defaults(self.experiment);
        let mut out = String::new();
        let mut line = |key: &str, value: String, default: String, source: &str| {
            let origin = if value == default { source.to_string() } else { format!("set in config (default {default}: {source})") };
            let _ = writeln!(out, "{key:<32} = {value:<24} # {origin}");
        };
        line("experiment", self.experiment.name().into(), self.experiment.name().into(), "selected experiment");
        line("seed", self.seed.to_string(), d.seed.to_string(), "simulator default");
        line(
            "ion.upperLine",
            self.ion.upper_line.to_string(),
            d.ion.upper_line.to_string(),
            "reference |0>-|+1> microwave line (metadata)",
        );
        line(
            "ion.lowerLine",
            self.ion.lower_line.to_string(),
            d.ion.lower_line.to_string(),
            "reference |0>-|-1> microwave line (metadata)",
        );
        line("ion.frame", format!("{:?}", self.ion.frame), format!("{:?}", d.ion.frame), "rotating-wave frame per transition");
        let s = &self.stirap;
        let ds = &d.stirap;
        line("stirap.fOmega", s.f_omega.to_string(), ds.f_omega.to_string(), "reference fig2 dressing Rabi frequency");
        line("stirap.width", s.width.to_string(), ds.width.to_string(), "reference fig2 pulse width, in periods of 1/fOmega");
        line(
            "stirap.separation",
            s.separation.to_string(),
            ds.separation.to_string(),
            "reference fig2 pulse separation, in periods of 1/fOmega",
        );
        line(
            "stirap.stepsPerPeriod",
            s.steps_per_period.to_string(),
            ds.steps_per_period.to_string(),
            "reference fig2 time step 1/(10 fOmega)",
        );
        line("stirap.holdTime", s.hold_time.to_string(), ds.hold_time.to_string(), "no hold unless scanned");
        line(
            "stirap.widthConvention",
            format!("{:?}", s.width_convention),
            format!("{:?}", ds.width_convention),
            "half width at 1/e amplitude (see decisions ledger)",
        );
        line("stirap.relativePhase", s.relative_phase.to_string(), ds.relative_phase.to_string(), "phase 0 prepares (|-1> - |+1>)/sqrt2");
        if self.experiment.uses_noise() {
            let n = &self.noise;
            let dn = &d.noise;
            line("noise.enabled", n.enabled.to_string(), dn.enabled.to_string(), "Zeeman noise on by default");
            line("noise.bareT2", n.bare_t2.to_string(), dn.bare_t2.to_string(), "reference measured bare coherence limit 5.3 ms");
            line(
                "noise.correlationTime",
                n.correlation_time.to_string(),
                dn.correlation_time.to_string(),
                "simulator choice, tau_c much shorter than T2",
            );
            let amp = n.amplitude.map(|a| a.to_string()).unwrap_or_else(|| "calibrated".into());
            line("noise.amplitude", amp, "calibrated".into(), "bisection against the simulated bare T2");
            line(
                "noise.calibrationTrajectories",
                n.calibration_trajectories.to_string(),
                dn.calibration_trajectories.to_string(),
                "keeps calibration scatter near 1%",
            );
        }
        line("spam.preparationError", self.spam.preparation_error.to_string(), "0".into(), "ideal preparation unless emulating lab data");
        line("spam.darkToBright", self.spam.dark_to_bright.to_string(), "0".into(), "ideal readout unless emulating lab data");
        line("spam.brightToDark", self.spam.bright_to_dark.to_string(), "0".into(), "ideal readout unless emulating lab data");
        match self.experiment {
            ExperimentKind::Fig2 => {
                let holds: Vec<String> = self.fig2.holds.iter().map(|h| h.0.to_string()).collect();
                let dh: Vec<String> = d.fig2.holds.iter().map(|h| h.0.to_string()).collect();
                line(
                    "fig2.holds",
                    format!("[{}] s", holds.join(", ")),
                    format!("[{}] s", dh.join(", ")),
                    "eight holds spanning the expected lifetime",
                );
                line("fig2.nTraj", self.fig2.n_traj.to_string(), d.fig2.n_traj.to_string(), "trajectory budget");
                line("fig2.nReps", self.fig2.n_reps.to_string(), d.fig2.n_reps.to_string(), "reference fig2 repetitions per point");
            }
            ExperimentKind::Fig3a => {
                let f = &self.fig3a;
                line("fig3a.fOmega", f.f_omega.to_string(), d.fig3a.f_omega.to_string(), "reference fig3a dressing Rabi frequency");
                line("fig3a.rfRabi", f.rf_rabi.to_string(), d.fig3a.rf_rabi.to_string(), "simulator choice, slow rf flopping");
                line("fig3a.early", window_str(&f.early), window_str(&d.fig3a.early), "reference fig3a early window");
                line("fig3a.late", window_str(&f.late), window_str(&d.fig3a.late), "reference fig3a late window");
                line("fig3a.nTraj", f.n_traj.to_string(), d.fig3a.n_traj.to_string(), "trajectory budget");
            }
            ExperimentKind::Fig3b => {
                let f = &self.fig3b;
                line("fig3b.fOmega", f.f_omega.to_string(), d.fig3b.f_omega.to_string(), "reference fig3b dressing Rabi frequency");
                line("fig3b.rfRabi", f.rf_rabi.to_string(), d.fig3b.rf_rabi.to_string(), "simulator choice, short pi/2 pulses");
                for (i, w) in f.windows.iter().enumerate() {
                    let dw = d.fig3b.windows.get(i);
                    line(
                        &format!("fig3b.windows[{i}].detuning"),
                        w.detuning.to_string(),
                        dw.map(|w| w.detuning.to_string()).unwrap_or_default(),
                        "reference fig3b fringe frequency",
                    );
                    line(
                        &format!("fig3b.windows[{i}]"),
                        window_str(&w.window()),
                        dw.map(|w| window_str(&w.window())).unwrap_or_default(),
                        "reference fig3b sampling window",
                    );
                }
                line("fig3b.nTraj", f.n_traj.to_string(), d.fig3b.n_traj.to_string(), "trajectory budget");
            }
            ExperimentKind::StirapScan => {
                line("scan.axes", format!("{:?}", self.scan.axes), format!("{:?}", d.scan.axes), "the four robustness scans");
                line("scan.threshold", self.scan.threshold.to_string(), d.scan.threshold.to_string(), "degradation threshold");
            }
            ExperimentKind::Sideband => {
                let b = &self.sideband;
                let db = &d.sideband;
                let rf = b.rf_rabi.map(|r| r.to_string()).unwrap_or_else(|| "fOmega/20".into());
                line("sideband.rfRabi", rf, "fOmega/20".into(), "weak gate field well inside the gap");
                line(
                    "sideband.trapFrequency",
                    b.trap_frequency.to_string(),
                    db.trap_frequency.to_string(),
                    "simulator choice (see decisions ledger)",
                );
                line("sideband.eta", b.eta.to_string(), db.eta.to_string(), "effective Lamb-Dicke parameter");
                line("sideband.nFock", b.n_fock.to_string(), db.n_fock.to_string(), "motional truncation");
                line("sideband.initialFock", b.initial_fock.to_string(), db.initial_fock.to_string(), "one phonon");
                line("sideband.detuning", b.detuning.to_string(), db.detuning.to_string(), "on the red sideband");
                line("sideband.stepsPerPeriod", b.steps_per_period.to_string(), db.steps_per_period.to_string(), "steps per rf period");
            }
            ExperimentKind::Comb => {
                let c = &self.comb;
                line("comb.ionCount", c.ion_count.to_string(), d.comb.ion_count.to_string(), "three-ion chain");
                line("comb.zeemanStep", c.zeeman_step.to_string(), d.comb.zeeman_step.to_string(), "gradient splitting between neighbours");
                line("comb.lines", format!("{} tones", c.lines.len()), "0 tones".into(), "empty means one dressing pair per ion");
                line("comb.floquetSteps", c.floquet_steps.to_string(), d.comb.floquet_steps.to_string(), "exact quasi-energy cross-check");
            }
            ExperimentKind::Custom => {
                if let Some(c) = &self.custom {
                    let src = c
                        .schedule
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_else(|| format!("{} inline segments", c.segments.len()));
                    line("custom.schedule", src.clone(), src, "user schedule");
                    line("custom.initial", c.initial.clone(), default_initial(), "initial state label");
                    line("custom.observe", c.observe.join(","), default_observe().join(","), "recorded populations");
                    line("custom.nTraj", c.n_traj.to_string(), default_custom_traj().to_string(), "trajectory budget");
                }
            }
        }
        out
    }
}

fn window_str(w: &Window) -> String {
    format!("{}..{} s x{} ({} reps)", w.start.0, w.stop.0, w.points, w.n_reps)
}

fn validate_segment(path: &str, seg: &CustomSegment) -> Result<()> {
    positive(&format!("{path}.duration"), seg.duration.0)?;
    if let Some(s) = seg.step {
        positive(&format!("{path}.step"), s.0)?;
    }
    for (j, d) in seg.drives.iter().enumerate() {
        non_negative(&format!("{path}.drives[{j}].rabi"), d.rabi.0)?;
        finite(&format!("{path}.drives[{j}].detuning"), d.detuning.0)?;
        finite(&format!("{path}.drives[{j}].phase"), d.phase)?;
    }
    Ok(())
}

pub(crate) fn validate_schedule_file(file: &ScheduleFile) -> Result<()> {
    if file.segments.is_empty() {
        return Err(invalid("segments", "schedule has no segments"));
    }
    for (i, seg) in file.segments.iter().enumerate() {
        validate_segment(&format!("segments[{i}]"), seg)?;
    }
    Ok(())
}
