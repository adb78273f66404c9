//! Generate the eight-insertion synthetic suite and optionally write it out.
//!
//! cargo run --release --example synth_suite -- [out_dir]

use kst_mixer::data::{distance, save_recording};
use kst_mixer::synth::{generate_suite, PhantomSpec, Preset, SuiteSpec};

fn main() -> kst_mixer::Result<()> {
    let suite = SuiteSpec::paper_scale(PhantomSpec::default(), 0);
    let recordings = generate_suite(&suite, 18)?;
    let rigid = PhantomSpec::preset(Preset::Rigid);
    let rest = kst_mixer::synth::generate_recording(&rigid, 18, 18, "rest")?;
    let rest = &rest.frames[0].1.markers;

    println!("centerline length {:.1} mm", suite.base.centerline()?.length());
    println!(
        "{:<14} {:>6} {:>12} {:>12} {:>14}",
        "recording", "frames", "len start", "len end", "max bulge mm"
    );
    for rec in &recordings {
        let first = &rec.frames[0].0;
        let last = &rec.frames[rec.len() - 1].0;
        let bulge = rec
            .colon_frames()
            .flat_map(|c| c.markers.iter().zip(rest).map(|(a, b)| distance(*a, *b)))
            .fold(0.0, f64::max);
        println!(
            "{:<14} {:>6} {:>12.1} {:>12.1} {:>14.1}",
            rec.id,
            rec.len(),
            first.insertion_length,
            last.insertion_length,
            bulge
        );
    }

    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        for rec in &recordings {
            save_recording(rec, &dir.join(format!("{}.jsonl", rec.id)))?;
        }
        println!("wrote {} recordings to {}", recordings.len(), dir.display());
    }
    Ok(())
}
