use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{parse_schedule_file, validate_schedule_file, CustomSegment, ExperimentKind, RunConfig};
use super::output::{result_json, Artifact, OutputWriter, Series};
use crate::basis::{DressedFrame, StateLabel, StateVector};
use crate::error::{Error, Result};
use crate::experiments::{
    robustness_grid, run_comb, run_lifetime, run_rabi, run_ramsey, run_sideband_gate, scan_stirap, ExperimentResult, LifetimeConfig,
    OscillationReport, RabiConfig, RamseyConfig, ScanAxis, ScanRow, SidebandConfig,
};
use crate::hamiltonian::{CombLine, CombSpec, DriveField, TrapMode};
use crate::noise::{calibrate_bare_t2, CalibrationOptions, NoiseModel, OuNoise};
use crate::propagator::ensemble_projections;
use crate::sequence::{Schedule, Segment};
use crate::units::hz;

/// Where a run reads relative paths from and writes to.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Directory relative schedule paths are resolved against.
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub experiment: ExperimentKind,
    pub out_dir: PathBuf,
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

/// Noise model for a run: off, given, or calibrated against the bare T2.
pub fn resolve_noise(cfg: &RunConfig) -> Result<(NoiseModel, Value)> {
    let n = &cfg.noise;
    if !n.enabled || !cfg.experiment.uses_noise() {
        return Ok((NoiseModel::quiet(), Value::Null));
    }
    let tau = n.correlation_time.0;
    let (amplitude, info) = match n.amplitude {
        Some(a) => (hz(a.0), json!({ "source": "config", "amplitudeHz": a.0 })),
        None => {
            let opts = CalibrationOptions { n_traj: n.calibration_trajectories, seed: cfg.seed, ..Default::default() };
            let cal = calibrate_bare_t2(n.bare_t2.0, tau, &opts)?;
            log::info!("calibrated OU amplitude {:.2} rad/s for bare T2 {} s", cal.amplitude, n.bare_t2.0);
            let info = json!({
                "source": "calibration",
                "amplitudeHz": cal.amplitude / TAU,
                "analyticAmplitudeHz": cal.analytic_amplitude / TAU,
                "achievedT2": cal.achieved_t2,
                "targetT2": n.bare_t2.0,
                "iterations": cal.iterations,
            });
            (cal.amplitude, info)
        }
    };
    let model = NoiseModel { zeeman: OuNoise { amplitude, correlation_time: tau, seed: cfg.seed }, drive: n.drive };
    Ok((model, info))
}

/// Runs the configured experiment and writes its artifacts.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let mut out = OutputWriter::new(&opts.out_dir, &cfg.formats)?;
    let (noise, noise_info) = resolve_noise(cfg)?;
    let mut summary = match cfg.experiment {
        ExperimentKind::Fig2 => fig2(cfg, &noise, &mut out)?,
        ExperimentKind::Fig3a => fig3a(cfg, &noise, &mut out)?,
        ExperimentKind::Fig3b => fig3b(cfg, &noise, &mut out)?,
        ExperimentKind::StirapScan => stirap_scan(cfg, &mut out)?,
        ExperimentKind::Sideband => sideband(cfg, &mut out)?,
        ExperimentKind::Comb => comb(cfg, &mut out)?,
        ExperimentKind::Custom => custom(cfg, &noise, &opts.base_dir, &mut out)?,
    };
    if let Value::Object(m) = &mut summary {
        m.insert("noise".into(), noise_info);
    }
    let artifacts = out.finish(&cfg.to_toml(), cfg.seed, summary.clone())?;
    Ok(RunSummary { experiment: cfg.experiment, out_dir: opts.out_dir.clone(), artifacts, summary })
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn fig2(cfg: &RunConfig, noise: &NoiseModel, out: &mut OutputWriter) -> Result<Value> {
    let lc = LifetimeConfig {
        levels: cfg.ion.levels(),
        stirap: cfg.stirap.params(cfg.stirap.f_omega.0),
        holds: cfg.fig2.holds.iter().map(|h| h.0).collect(),
        noise: *noise,
        n_traj: cfg.fig2.n_traj,
        n_reps: cfg.fig2.n_reps,
        seed: cfg.seed,
        spam: cfg.spam,
        fit_source: cfg.fit_source,
    };
    let r = run_lifetime(&lc)?;
    out.result("fig2", "protected-state survival", "dark fraction", &r.result)?;
    let bare = cfg.noise.bare_t2.0;
    let summary = json!({
        "experiment": "fig2",
        "lifetime": finite_or_null(r.lifetime),
        "lifetimeErr": finite_or_null(r.lifetime_err),
        "predictedLifetime": finite_or_null(r.predicted_lifetime),
        "holdRabiHz": r.hold_rabi / TAU,
        "bareT2": bare,
        "protectionRatio": finite_or_null(r.lifetime / bare),
    });
    out.json("fig2", &json!({ "summary": summary, "results": [result_json(&r.result)] }))?;
    Ok(summary)
}

fn window_contrast(r: &OscillationReport) -> Value {
    json!({
        "frequency": r.frequency,
        "frequencyErr": r.frequency_err,
        "expectedFrequency": r.expected_frequency,
        "contrast": r.contrast,
        "contrastErr": r.contrast_err,
    })
}

/// Exponential decay time through `(t, contrast)` pairs, by a log-linear fit.
/// Infinite when the contrast does not fall.
pub fn contrast_decay_time(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, c)| *c > 0.0).map(|&(t, c)| (t, c.ln())).collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let (mt, ml) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    let slope = sxy / sxx;
    if slope < 0.0 {
        -1.0 / slope
    } else {
        f64::INFINITY
    }
}

fn mid(x: &[f64]) -> f64 {
    0.5 * (x[0] + x[x.len() - 1])
}

fn fig3a(cfg: &RunConfig, noise: &NoiseModel, out: &mut OutputWriter) -> Result<Value> {
    let f = &cfg.fig3a;
    let base = RabiConfig {
        levels: cfg.ion.levels(),
        stirap: cfg.stirap.params(f.f_omega.0),
        rf_rabi: hz(f.rf_rabi.0),
        durations: Vec::new(),
        noise: *noise,
        n_traj: f.n_traj,
        n_reps: 0,
        seed: cfg.seed,
        spam: cfg.spam,
        fit_source: cfg.fit_source,
    };
    let mut reports = Vec::new();
    for (name, w) in [("early", &f.early), ("late", &f.late)] {
        let rc = RabiConfig { durations: w.times(), n_reps: w.n_reps, ..base.clone() };
        let mut r = run_rabi(&rc)?;
        r.result.name = format!("rabi-{name}");
        out.result(&format!("fig3a-{name}"), &format!("dressed Rabi flopping, {name} window"), "dark fraction", &r.result)?;
        reports.push((name, r));
    }
    let pts: Vec<(f64, f64)> = reports.iter().map(|(_, r)| (mid(&r.result.x), r.contrast)).collect();
    let decay = contrast_decay_time(&pts);
    let summary = json!({
        "experiment": "fig3a",
        "early": window_contrast(&reports[0].1),
        "late": window_contrast(&reports[1].1),
        "contrastDecayTime": finite_or_null(decay),
    });
    let results: Vec<Value> = reports.iter().map(|(_, r)| result_json(&r.result)).collect();
    out.json("fig3a", &json!({ "summary": summary, "results": results }))?;
    Ok(summary)
}

fn fig3b(cfg: &RunConfig, noise: &NoiseModel, out: &mut OutputWriter) -> Result<Value> {
    let f = &cfg.fig3b;
    let mut windows = Vec::new();
    let mut results = Vec::new();
    let mut pts = Vec::new();
    for (i, w) in f.windows.iter().enumerate() {
        let win = w.window();
        let rc = RamseyConfig {
            levels: cfg.ion.levels(),
            stirap: cfg.stirap.params(f.f_omega.0),
            rf_rabi: hz(f.rf_rabi.0),
            rf_detuning: hz(w.detuning.0),
            free_times: win.times(),
            noise: *noise,
            n_traj: f.n_traj,
            n_reps: win.n_reps,
            seed: cfg.seed,
            spam: cfg.spam,
            fit_source: cfg.fit_source,
        };
        let mut r = run_ramsey(&rc)?;
        r.result.name = format!("ramsey-{i}");
        out.result(&format!("fig3b-{i}"), &format!("dressed Ramsey fringes at {} Hz", w.detuning.0), "dark fraction", &r.result)?;
        pts.push((mid(&r.result.x), r.contrast));
        let mut v = window_contrast(&r);
        v["programmedDetuning"] = json!(w.detuning.0);
        v["relativeFrequencyError"] = json!((r.frequency - w.detuning.0).abs() / w.detuning.0.abs().max(f64::MIN_POSITIVE));
        windows.push(v);
        results.push(result_json(&r.result));
    }
    let summary = json!({
        "experiment": "fig3b",
        "windows": windows,
        "coherenceTime": finite_or_null(contrast_decay_time(&pts)),
    });
    out.json("fig3b", &json!({ "summary": summary, "results": results }))?;
    Ok(summary)
}

fn axis_value(axis: ScanAxis, row: &ScanRow) -> f64 {
    match axis {
        ScanAxis::StepsPerPeriod => row.steps_per_period as f64,
        ScanAxis::Width => row.width,
        ScanAxis::Separation => row.separation,
        ScanAxis::Detuning => row.detuning,
    }
}

fn axis_name(axis: ScanAxis) -> (&'static str, &'static str) {
    match axis {
        ScanAxis::StepsPerPeriod => ("steps-per-period", "steps per period N_t"),
        ScanAxis::Width => ("width", "pulse width N (periods)"),
        ScanAxis::Separation => ("separation", "pulse separation s_t (periods)"),
        ScanAxis::Detuning => ("detuning", "two-photon detuning (Hz)"),
    }
}

fn stirap_scan(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Value> {
    let grid: Vec<_> = robustness_grid(cfg.stirap.f_omega.0).into_iter().filter(|(a, _)| cfg.scan.axes.contains(a)).collect();
    let rows = scan_stirap(&grid, cfg.ion.levels(), &cfg.spam)?;
    let mut axes = serde_json::Map::new();
    for &axis in &cfg.scan.axes {
        let sel: Vec<&ScanRow> = rows.iter().filter(|r| r.axis == axis).collect();
        let (stem, label) = axis_name(axis);
        let result = ExperimentResult {
            name: format!("stirap-scan-{stem}"),
            x_label: label.into(),
            x: sel.iter().map(|r| axis_value(axis, r)).collect(),
            mean: sel.iter().map(|r| r.measured).collect(),
            stderr: vec![0.0; sel.len()],
            n_traj: 1,
            n_reps: 0,
            counts: Vec::new(),
            fit: None,
        };
        out.result(&format!("stirap-scan-{stem}"), &format!("STIRAP transfer vs {label}"), "transfer fidelity", &result)?;
        let degraded: Vec<f64> = sel.iter().filter(|r| r.fidelity < cfg.scan.threshold).map(|r| axis_value(axis, r)).collect();
        axes.insert(stem.into(), json!({ "degradedAt": degraded, "minFidelity": sel.iter().map(|r| r.fidelity).fold(1.0, f64::min) }));
    }
    let summary = json!({ "experiment": "stirap-scan", "threshold": cfg.scan.threshold, "axes": axes });
    out.json("stirap-scan", &json!({ "summary": summary, "rows": rows }))?;
    Ok(summary)
}

fn sideband(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Value> {
    let b = &cfg.sideband;
    let omega = hz(cfg.stirap.f_omega.0);
    let sc = SidebandConfig {
        levels: cfg.ion.levels(),
        omega,
        rf_rabi: b.rf_rabi.map(|r| hz(r.0)).unwrap_or(omega / 20.0),
        mode: TrapMode::new(hz(b.trap_frequency.0), b.eta, b.n_fock)?,
        initial_fock: b.initial_fock,
        detuning_offset: hz(b.detuning.0),
        steps_per_period: b.steps_per_period,
        duration: b.duration.map(|d| d.0),
    };
    let r = run_sideband_gate(&sc)?;
    let labels = ["D", "0'", "bright"];
    let mut traces = Vec::new();
    for (model, data) in [("full", &r.full), ("effective", &r.effective)] {
        for (k, label) in labels.iter().enumerate() {
            let stem = format!("sideband-{model}-{}", label.replace('\'', "p"));
            let res = ExperimentResult {
                name: stem.clone(),
                x_label: "time (s)".into(),
                x: r.times.clone(),
                mean: data.iter().map(|p| p[k]).collect(),
                stderr: vec![0.0; r.times.len()],
                n_traj: 1,
                n_reps: 0,
                counts: Vec::new(),
                fit: None,
            };
            out.csv(&stem, &res)?;
            traces.push(res);
        }
    }
    let series: Vec<Series> = traces
        .iter()
        .map(|t| Series { label: &t.name["sideband-".len()..], x: &t.x, y: &t.mean, dashed: t.name.contains("effective") })
        .collect();
    out.svg("sideband", "red-sideband gate: full vs effective model", "time (s)", "population", &series)?;
    let summary = json!({
        "experiment": "sideband",
        "piTime": r.pi_time,
        "sidebandRateHz": r.sideband_rate / TAU,
        "maxDeviation": r.max_deviation,
        "maxBrightLeakage": r.max_bright_leakage,
        "leakageBound": r.leakage_bound,
        "peakTransferFull": r.peak_transfer_full,
        "peakTransferEffective": r.peak_transfer_effective,
        "maxTopFock": r.max_top_fock,
        "fullDetuningHz": r.full_detuning / TAU,
    });
    out.json("sideband", &json!({ "summary": summary, "report": r }))?;
    Ok(summary)
}

fn comb(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Value> {
    let c = &cfg.comb;
    let omega = hz(cfg.stirap.f_omega.0);
    let spec = if c.lines.is_empty() {
        CombSpec::dressing_comb(c.ion_count, hz(c.zeeman_step.0), omega)
    } else {
        CombSpec {
            ion_count: c.ion_count,
            zeeman_step: hz(c.zeeman_step.0),
            lines: c
                .lines
                .iter()
                .map(|l| CombLine { transition: l.transition, detuning: hz(l.detuning.0), rabi: hz(l.rabi.0), phase: l.phase })
                .collect(),
        }
    };
    let r = run_comb(&spec, omega, c.floquet_steps)?;
    let result = ExperimentResult {
        name: "comb".into(),
        x_label: "ion".into(),
        x: r.shifts.iter().map(|s| s.ion as f64).collect(),
        mean: r.shifts.iter().map(|s| s.qubit_shift / TAU).collect(),
        stderr: r.floquet.iter().zip(&r.shifts).map(|(f, s)| f.map_or(0.0, |f| (f - s.qubit_shift).abs() / TAU)).collect(),
        n_traj: 1,
        n_reps: 0,
        counts: Vec::new(),
        fit: None,
    };
    out.result("comb", "comb-induced qubit shift per ion", "qubit shift (Hz)", &result)?;
    let ions: Vec<Value> = r
        .shifts
        .iter()
        .zip(&r.floquet)
        .map(|(s, f)| {
            json!({
                "ion": s.ion,
                "dressingRabiHz": s.dressing_rabi / TAU,
                "shiftsHz": { "u": s.shifts[0] / TAU, "d": s.shifts[1] / TAU, "P": s.shifts[2] / TAU, "0'": s.shifts[3] / TAU },
                "qubitShiftHz": s.qubit_shift / TAU,
                "floquetQubitShiftHz": f.map(|f| f / TAU),
            })
        })
        .collect();
    let summary = json!({ "experiment": "comb", "worstQubitShiftHz": r.worst_qubit_shift / TAU, "ions": ions });
    out.json("comb", &json!({ "summary": summary, "spec": spec }))?;
    Ok(summary)
}

fn build_segment(seg: &CustomSegment) -> Result<Segment> {
    let drives: Vec<DriveField> = seg
        .drives
        .iter()
        .map(|d| DriveField {
            transition: d.transition,
            rabi: hz(d.rabi.0),
            detuning: hz(d.detuning.0),
            phase: d.phase,
            envelope: d.envelope.clone(),
        })
        .collect();
    let s = match seg.step {
        Some(step) => Segment::with_max_step(seg.duration.0, step.0, drives)?,
        None => Segment::auto(seg.duration.0, drives)?,
    };
    Ok(s.labeled(&seg.label))
}

fn custom(cfg: &RunConfig, noise: &NoiseModel, base: &Path, out: &mut OutputWriter) -> Result<Value> {
    let c = cfg.custom.as_ref().ok_or_else(|| Error::Config { path: "custom".into(), message: "missing section".into() })?;
    let segments = if c.segments.is_empty() {
        let rel = c.schedule.as_ref().expect("validated");
        let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
        let doc = fs::read_to_string(&path)?;
        let file = parse_schedule_file(&doc).map_err(|e| match e {
            Error::Config { path: p, message } => Error::Config { path: format!("{}:{p}", path.display()), message },
            other => other,
        })?;
        validate_schedule_file(&file)?;
        file.segments
    } else {
        c.segments.clone()
    };
    let segs = segments.iter().map(build_segment).collect::<Result<Vec<_>>>()?;
    let schedule = Schedule::from_segments(cfg.ion.levels(), cfg.ion.frame, segs)?;
    let frame = DressedFrame::new(c.dressed_phase);
    let initial: StateLabel = c.initial.parse()?;
    let psi0 = StateVector::from_slice(&frame.vector(initial)?)?;
    let labels: Vec<StateLabel> = c.observe.iter().map(|o| o.parse()).collect::<Result<_>>()?;
    let targets = labels.iter().map(|&l| frame.vector(l)).collect::<Result<Vec<_>>>()?;
    let (times, mean, stderr) = ensemble_projections(&schedule, &psi0, noise, c.n_traj, cfg.seed, c.record_every, &targets)?;
    let n_traj = if noise.is_quiet() { 1 } else { c.n_traj };
    let mut results = Vec::new();
    for (k, label) in c.observe.iter().enumerate() {
        let stem = format!("custom-{}", label.replace('\'', "p").replace('+', "plus").replace('-', "minus"));
        let res = ExperimentResult {
            name: stem.clone(),
            x_label: "time (s)".into(),
            x: times.clone(),
            mean: mean.iter().map(|r| r[k]).collect(),
            stderr: stderr.iter().map(|r| r[k]).collect(),
            n_traj,
            n_reps: 0,
            counts: Vec::new(),
            fit: None,
        };
        out.csv(&stem, &res)?;
        results.push(res);
    }
    let series: Vec<Series> =
        results.iter().zip(&c.observe).map(|(r, l)| Series { label: l, x: &r.x, y: &r.mean, dashed: false }).collect();
    out.svg("custom", "custom schedule", "time (s)", "population", &series)?;
    let finals: serde_json::Map<String, Value> =
        c.observe.iter().zip(&results).map(|(l, r)| (l.clone(), json!(r.mean.last().copied().unwrap_or(f64::NAN)))).collect();
    let summary = json!({ "experiment": "custom", "duration": schedule.duration(), "steps": schedule.step_count(), "final": finals });
    let rj: Vec<Value> = results.iter().map(result_json).collect();
    out.json("custom", &json!({ "summary": summary, "results": rj }))?;
    Ok(summary)
}
