// Runs a TOML-configured command through the harness, as the `htb` binary
// does, and prints the verification reports.
//
// `cargo run --release --example config_run -- [config.toml]`

use htb::config::{parse_config_with, Overrides};
use htb::harness::run;

const BUNDLED: &str = include_str!("configs/verify_measure.toml");

pub fn run_example() -> htb::Result<()> {
    let text = match std::env::args().nth(1).filter(|a| a.ends_with(".toml")) {
        Some(path) => std::fs::read_to_string(path)?,
        None => BUNDLED.to_owned(),
    };
    let out = std::env::temp_dir().join("htb-config-run.csv");
    let cfg = parse_config_with(&text, &Overrides { output: Some(out), ..Overrides::default() })?;
    let outcome = run(&cfg)?;
    print!("{}", outcome.summary);
    for a in &outcome.artifacts {
        println!("wrote {}", a.display());
    }
    println!("exit code {}", outcome.exit as i32);
    Ok(())
}

#[allow(dead_code)]
fn main() -> htb::Result<()> {
    run_example()
}
