//! Runs an experiment from an inline TOML config and writes artifacts to a
//! temporary directory.

use dressed_ion::io::{parse_config, run, RunOptions};

const CONFIG: &str = r#"
experiment = "fig2"
seed = 4
formats = ["csv", "json", "svg"]

[noise]
amplitude = "110Hz"

[fig2]
holds = [0, "50ms", "100ms"]
nTraj = 8
nReps = 50
"#;

fn main() -> dressed_ion::Result<()> {
    let cfg = parse_config(CONFIG)?;
    print!("{}", cfg.explain());
    let out_dir = std::env::temp_dir().join("dressed-ion-config-run");
    let summary = run(&cfg, &RunOptions { out_dir, base_dir: ".".into() })?;
    for a in &summary.artifacts {
        println!("{}  {}", a.sha256, a.file);
    }
    println!("{:#}", summary.summary);
    Ok(())
}
