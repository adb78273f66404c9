//! Turn one τ-frame window into the positional and directional matrices and
//! the patch sequence the network reads.
//!
//! cargo run --release --example window_patches

use kst_mixer::data::{
    build_directional_matrix, build_positional_matrix, extract_patches, window_input, ColonoscopeFrame,
    NormalizationStats, PATCH_ORDERING,
};
use kst_mixer::model::MixerConfig;
use kst_mixer::synth::{generate_recording, PhantomSpec};

fn main() -> kst_mixer::Result<()> {
    let cfg = MixerConfig::default();
    let rec = generate_recording(&PhantomSpec::default(), 40, cfg.tau, "demo")?;
    let stats = NormalizationStats::from_recordings([&rec])?;
    let window: Vec<&ColonoscopeFrame> = rec.scope_frames().skip(40 - cfg.tau).collect();

    let p = build_positional_matrix(&window, cfg.tau)?;
    let d = build_directional_matrix(&window, cfg.tau)?;
    println!("positional matrix  {}×{} (3N × τ)", p.rows(), p.cols());
    println!("directional matrix {}×{}", d.rows(), d.cols());
    let patches = extract_patches(&p, cfg.s1, cfg.s2)?;
    println!(
        "{} patches of {}×{} per matrix, flattened to {} values each",
        patches.rows(),
        cfg.s1,
        cfg.s2,
        patches.cols()
    );

    let input = window_input(&window, cfg.window_spec(), &stats)?;
    println!(
        "network input: {}×{} patches ({PATCH_ORDERING}), {} insertion lengths, t_c = {}",
        input.patches.rows(),
        input.patches.cols(),
        input.lengths.len(),
        input.t_c
    );
    println!("first patch (normalized): {:.3?}", input.patches.row(0));
    Ok(())
}
