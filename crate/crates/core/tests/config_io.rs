use dressed_ion::io::{parse_config, parse_schedule_file, run, ExperimentKind, Hertz, RunConfig, RunOptions};
use dressed_ion::Error;

fn config_error(doc: &str) -> (String, String) {
    match parse_config(doc) {
        Err(Error::Config { path, message }) => (path, message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = parse_config("experiment = \"fig2\"").unwrap();
    assert_eq!(cfg, RunConfig::defaults(ExperimentKind::Fig2));
    assert_eq!(cfg.seed, 1);
    assert_eq!(cfg.fig2.holds.len(), 8);
    assert!((cfg.stirap.f_omega.0 - 36.5e3).abs() < 1e-9);
}

#[test]
fn every_default_round_trips_through_toml() {
    // custom has no schedule by default, so it cannot validate
    for kind in ExperimentKind::ALL.into_iter().filter(|k| *k != ExperimentKind::Custom) {
        let cfg = RunConfig::defaults(kind);
        let back = parse_config(&cfg.to_toml()).unwrap_or_else(|e| panic!("{}: {e}", kind.name()));
        assert_eq!(back, cfg, "{}", kind.name());
    }
}

#[test]
fn unit_strings_parse() {
    let cfg = parse_config(
        r#"
experiment = "fig2"
[stirap]
fOmega = "36.5kHz"
holdTime = "250 ms"
[fig2]
holds = [0, "20ms", 0.5, "1.5e-1 s"]
"#,
    )
    .unwrap();
    assert_eq!(cfg.stirap.f_omega, Hertz(36.5e3));
    assert!((cfg.stirap.hold_time.0 - 0.25).abs() < 1e-15);
    let holds: Vec<f64> = cfg.fig2.holds.iter().map(|s| s.0).collect();
    assert_eq!(holds, vec![0.0, 0.02, 0.5, 0.15]);
}

#[test]
fn negative_hold_names_the_key() {
    let (path, _) = config_error("experiment = \"fig2\"\n[stirap]\nholdTime = \"-1ms\"\n");
    assert_eq!(path, "stirap.holdTime");
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let (path, message) = config_error("experiment = \"fig2\"\n[stirap]\nfomega = 3\n");
    assert!(path.starts_with("stirap"), "{path}");
    assert!(message.contains("fomega"), "{message}");
    let (_, message) = config_error("experiment = \"fig2\"\n[stirap]\nfOmega = \"12 parsecs\"\n");
    assert!(message.contains("parsecs"), "{message}");
    assert!(parse_config("experiment = \"fig9\"").is_err());
}

#[test]
fn explain_lists_changed_keys() {
    let cfg = parse_config("experiment = \"fig2\"\nseed = 42\n").unwrap();
    let text = cfg.explain();
    let seed_line = text.lines().find(|l| l.starts_with("seed")).unwrap();
    assert!(seed_line.contains("42") && seed_line.contains("set in config"), "{seed_line}");
}

#[test]
fn schedule_files_parse() {
    let doc = r#"
[[segments]]
duration = "1ms"
step = "1us"
label = "pulse"
[[segments.drives]]
transition = "minusZero"
rabi = "10kHz"
"#;
    let f = parse_schedule_file(doc).unwrap();
    assert_eq!(f.segments.len(), 1);
    assert_eq!(f.segments[0].drives.len(), 1);
    assert!(parse_schedule_file(&doc.replace("minusZero", "sideways")).is_err());
}

fn small_fig3b() -> RunConfig {
    parse_config(
        r#"
experiment = "fig3b"
seed = 3
formats = ["csv", "json"]
[noise]
enabled = false
[fig3b]
nTraj = 1
[[fig3b.windows]]
detuning = "144.4Hz"
start = "0.1ms"
stop = "30ms"
points = 31
nReps = 10
"#,
    )
    .unwrap()
}

#[test]
fn fig3b_writes_fit_block_and_manifest() {
    let dir = tempdir("fig3b");
    let summary = run(&small_fig3b(), &RunOptions { out_dir: dir.clone(), base_dir: ".".into() }).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("fig3b.json")).unwrap()).unwrap();
    let f = &json["results"][0]["fit"]["parameters"]["frequency"];
    assert!((f["value"].as_f64().unwrap() - 144.4).abs() < 0.2, "{f}");
    assert!(f["error"].is_number());

    let csv = std::fs::read_to_string(dir.join("fig3b-0.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,mean,stderr,counts");
    assert_eq!(csv.lines().count(), 32);

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    for a in &summary.artifacts {
        let bytes = std::fs::read(dir.join(&a.file)).unwrap();
        assert_eq!(dressed_ion::io::sha256_hex(&bytes), a.sha256, "{}", a.file);
    }
    assert!(std::fs::read_to_string(dir.join("SHA256SUMS")).unwrap().contains("fig3b-0.csv"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let cfg = small_fig3b();
    let mut files = Vec::new();
    for workers in [1, 4] {
        let dir = tempdir(&format!("workers{workers}"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        pool.install(|| run(&cfg, &RunOptions { out_dir: dir.clone(), base_dir: ".".into() })).unwrap();
        files.push(std::fs::read(dir.join("fig3b-0.csv")).unwrap());
        std::fs::remove_dir_all(dir).ok();
    }
    assert_eq!(files[0], files[1]);
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("dressed-ion-test-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
