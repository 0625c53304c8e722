//! Necker two-mode experiment: the regressor lands on the mean of the two
//! depth readings, diffusion samples land on one of them, and a little
//! mode-A partial depth pins the choice.
//!
//! cargo run --release --example two_mode -- [seed]

use std::time::Instant;

use wiredepth::diffusion::{two_mode_experiment, TwoModeConfig};

fn main() {
    env_logger::init();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = TwoModeConfig {
        seed,
        ..TwoModeConfig::default()
    };
    let start = Instant::now();
    let report = two_mode_experiment(&cfg).expect("experiment runs");
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
}
