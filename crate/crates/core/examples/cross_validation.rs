//! Leave-one-insertion-out cross validation on the synthetic suite, printed
//! next to the published results.
//!
//! cargo run --release --example cross_validation -- [epochs] [paper]
//!
//! Defaults to the small configuration; pass `paper` for C = 64, b = 7.

use kst_mixer::model::MixerConfig;
use kst_mixer::synth::{generate_suite, PhantomSpec, SuiteSpec};
use kst_mixer::train::{render_latency, render_loocv, run_loocv, LatencyOptions, LoocvOptions, TrainConfig};

fn main() -> kst_mixer::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(30, |e| e.parse().expect("epochs"));
    let cfg = match args.next().as_deref() {
        Some("paper") => MixerConfig::default(),
        _ => MixerConfig::tiny(),
    };
    let recordings = generate_suite(&SuiteSpec::paper_scale(PhantomSpec::default(), 0), cfg.tau)?;
    let tc = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let opts = LoocvOptions {
        parallel: false,
        latency: Some(LatencyOptions { warmup: 20, reps: 50 }),
    };
    let run = run_loocv(&recordings, &cfg, &tc, &opts)?;
    print!("{}", render_loocv(&run.report));
    if let Some(latency) = &run.latency {
        println!();
        print!("{}", render_latency(latency));
    }
    Ok(())
}
