//! Compare every analytic gradient of a small network with central
//! differences.
//!
//! cargo run --release --example gradient_check

use kst_mixer::model::{model_grad_check, MixerConfig, ModelParams};
use kst_mixer::nn::{GradCheckOptions, Parameters, Tensor2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> kst_mixer::Result<()> {
    let cfg = MixerConfig::tiny();
    for seed in 0..2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::init(&cfg, &mut rng);
        let patches = Tensor2D::from_fn(2 * cfg.tokens(), cfg.patch_len(), |_, _| rng.gen());
        let lengths = Tensor2D::from_fn(2, cfg.tau, |_, _| rng.gen());
        let targets = Tensor2D::from_fn(2, cfg.output_dim(), |_, _| rng.gen());
        let start = std::time::Instant::now();
        let report = model_grad_check(
            &cfg,
            &params,
            &patches,
            &lengths,
            &targets,
            GradCheckOptions::with_tolerance(1e-4),
            None,
        )?;
        println!(
            "seed {seed}: {} of {} parameters checked, worst {:.2e} at {}[{}] ({:.1}s)",
            report.checked,
            params.parameter_count(),
            report.max_rel_error,
            report.worst_tensor,
            report.worst_index,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
