use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{Level, C64};
use crate::error::{Error, Result};

/// The four driven transitions. Microwaves couple `|+-1>` to `|0>`, the rf
/// field couples them to `|0'>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Transition {
    MinusZero,
    PlusZero,
    MinusZeroPrime,
    PlusZeroPrime,
}

impl Transition {
    pub fn side(self) -> Level {
        match self {
            Transition::MinusZero | Transition::MinusZeroPrime => Level::Minus,
            Transition::PlusZero | Transition::PlusZeroPrime => Level::Plus,
        }
    }

    pub fn hub(self) -> Level {
        match self {
            Transition::MinusZero | Transition::PlusZero => Level::Zero,
            Transition::MinusZeroPrime | Transition::PlusZeroPrime => Level::ZeroPrime,
        }
    }

    pub fn is_microwave(self) -> bool {
        self.hub() == Level::Zero
    }

    /// The transition sharing this hub but the opposite Zeeman level.
    pub fn partner(self) -> Transition {
        match self {
            Transition::MinusZero => Transition::PlusZero,
            Transition::PlusZero => Transition::MinusZero,
            Transition::MinusZeroPrime => Transition::PlusZeroPrime,
            Transition::PlusZeroPrime => Transition::MinusZeroPrime,
        }
    }
}

/// Dimensionless amplitude profile, evaluated in segment-local time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "camelCase")]
pub enum Envelope {
    Constant {
        level: f64,
    },
    /// `exp(-((t - center)/width)^2)` for `|t - center| <= cutoff`, zero outside.
    Gaussian {
        center: f64,
        width: f64,
        cutoff: f64,
    },
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Constant { level: 1.0 }
    }
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant { level } => level,
            Envelope::Gaussian { center, width, cutoff } => {
                let x = t - center;
                if x.abs() > cutoff {
                    0.0
                } else {
                    (-(x / width).powi(2)).exp()
                }
            }
        }
    }

    /// Time-reversed copy for a segment of length `duration`.
    pub fn mirrored(&self, duration: f64) -> Envelope {
        match *self {
            Envelope::Constant { level } => Envelope::Constant { level },
            Envelope::Gaussian { center, width, cutoff } => Envelope::Gaussian { center: duration - center, width, cutoff },
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Envelope::Constant { level } => level.abs(),
            Envelope::Gaussian { .. } => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Constant { level } if !(level.is_finite() && level >= 0.0) => {
                Err(Error::param("envelope.level", format!("{level} must be finite and non-negative")))
            }
            Envelope::Gaussian { width, cutoff, center } if !(width > 0.0 && cutoff >= 0.0 && center.is_finite()) => {
                Err(Error::param("envelope", "Gaussian needs positive width and non-negative cutoff"))
            }
            _ => Ok(()),
        }
    }
}

/// A classical drive. It adds `(Omega(t)/2) e^{i(phase + detuning t)} |m><hub| + h.c.`
/// in the frame rotating with each bare transition, so `detuning` is the
/// drive frequency minus the transition frequency as seen from the hub level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DriveField {
    pub transition: Transition,
    /// Peak Rabi frequency, rad/s.
    pub rabi: f64,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl DriveField {
    pub fn new(transition: Transition, rabi: f64) -> Self {
        DriveField { transition, rabi, detuning: 0.0, phase: 0.0, envelope: Envelope::default() }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(Error::param("rabi", format!("{} must be finite and non-negative", self.rabi)));
        }
        if !self.detuning.is_finite() || !self.phase.is_finite() {
            return Err(Error::param("drive", "detuning and phase must be finite"));
        }
        self.envelope.validate()
    }

    pub fn rabi_at(&self, t_local: f64) -> f64 {
        self.rabi * self.envelope.value(t_local)
    }

    /// Matrix element `<m|H|hub>` at absolute time `t`.
    pub fn coupling(&self, t: f64, t_local: f64) -> C64 {
        C64::from_polar(0.5 * self.rabi_at(t_local), self.phase + self.detuning * t)
    }

    /// Drive for the mirrored segment of a time-reversed schedule. The
    /// segment occupies `[start, end]` of a schedule of length `total`.
    pub fn reversed(&self, start: f64, end: f64, total: f64) -> DriveField {
        DriveField {
            transition: self.transition,
            rabi: self.rabi,
            detuning: -self.detuning,
            phase: self.phase + PI + self.detuning * total,
            envelope: self.envelope.mirrored(end - start),
        }
    }
}

/// Resonant pair on `|-1>,|+1> <-> hub`; `relative_phase` goes on the `|+1>` drive.
pub fn resonant_pair(hub: Level, rabi: f64, relative_phase: f64) -> [DriveField; 2] {
    let (minus, plus) = match hub {
        Level::ZeroPrime => (Transition::MinusZeroPrime, Transition::PlusZeroPrime),
        _ => (Transition::MinusZero, Transition::PlusZero),
    };
    [DriveField::new(minus, rabi), DriveField::new(plus, rabi).with_phase(relative_phase)]
}
