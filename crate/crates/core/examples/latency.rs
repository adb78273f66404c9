//! Time single estimates at the published configuration on one CPU thread.
//!
//! cargo run --release --example latency

use kst_mixer::data::{make_window_samples, NormalizationStats, WindowInput};
use kst_mixer::model::{MixerConfig, Model, ModelParams};
use kst_mixer::synth::{generate_recording, PhantomSpec};
use kst_mixer::train::{measure_latency, LatencyOptions, PUBLISHED_LATENCY};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kst_mixer::Result<()> {
    let rec = generate_recording(&PhantomSpec::default(), 60, 18, "timing")?;
    let stats = NormalizationStats::from_recordings([&rec])?;
    for (name, cfg) in [("paper", MixerConfig::default()), ("tiny", MixerConfig::tiny())] {
        let model = Model {
            params: ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            config: cfg,
            stats: stats.clone(),
        };
        let inputs: Vec<WindowInput> = make_window_samples(&rec, model.config.window_spec(), &stats)?
            .samples
            .into_iter()
            .map(|s| WindowInput {
                t_c: s.t_c,
                patches: s.patches,
                lengths: s.lengths,
                clamped: 0,
            })
            .collect();
        let s = measure_latency(&model, &inputs, LatencyOptions::default())?;
        println!(
            "{name:<6} median {:.3} ms  p95 {:.3} ms  min {:.3} ms  ({} runs)",
            s.median_ms, s.p95_ms, s.min_ms, s.reps
        );
    }
    for (method, ms) in PUBLISHED_LATENCY {
        println!("{method}: {ms} ms");
    }
    Ok(())
}
