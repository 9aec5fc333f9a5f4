//! Config files, experiment dispatch and output artifacts.

mod config;
mod output;
mod run;
mod units;

pub use config::{
    parse_config, parse_schedule_file, CombSection, CombTone, CustomDrive, CustomSection, CustomSegment, ExperimentKind, Fig2Section,
    Fig3aSection, Fig3bSection, Format, IonSection, NoiseSection, RamseyWindow, RunConfig, ScanSection, ScheduleFile, SidebandSection,
    StirapSection, Window,
};
pub use output::{csv_bytes, fit_block, result_json, sha256_hex, svg_plot, Artifact, OutputWriter, Series};
pub use run::{contrast_decay_time, resolve_noise, run, RunOptions, RunSummary};
pub use units::{Hertz, Seconds};
