//! Feed a recording frame by frame through the streaming estimator, the same
//! path `kst estimate` uses on stdin.
//!
//! cargo run --release --example stream_estimates -- [checkpoint]

use std::io::Cursor;

use kst_mixer::cli::stream_estimates;
use kst_mixer::data::io::frame_line;
use kst_mixer::data::NormalizationStats;
use kst_mixer::model::{load_checkpoint, MixerConfig, Model, ModelParams};
use kst_mixer::synth::{generate_recording, PhantomSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kst_mixer::Result<()> {
    let rec = generate_recording(
        &PhantomSpec {
            seed: 42,
            ..PhantomSpec::default()
        },
        24,
        18,
        "live",
    )?;
    let model = match std::env::args().nth(1) {
        Some(path) => load_checkpoint(std::path::Path::new(&path))?,
        None => {
            // untrained weights: the stream mechanics are the point here
            let cfg = MixerConfig::default();
            Model {
                params: ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)),
                config: cfg,
                stats: NormalizationStats::from_recordings([&rec])?,
            }
        }
    };

    let mut input = String::new();
    for (scope, _) in &rec.frames {
        input.push_str(&frame_line(scope, None)?);
        input.push('\n');
    }
    input.push_str("{\"t\": 24, \"broken\n");

    let mut out = Vec::new();
    let mut diag = Vec::new();
    let summary = stream_estimates(&model, Cursor::new(input), &mut out, &mut diag)?;
    for line in String::from_utf8_lossy(&out).lines().take(2) {
        println!("{}…", &line[..line.len().min(120)]);
    }
    print!("diagnostics: {}", String::from_utf8_lossy(&diag));
    println!(
        "{} frames in, {} estimates out, {} rejected",
        summary.frames, summary.estimates, summary.errors
    );
    Ok(())
}
