use crate::error::Result;
use crate::model::{MixerConfig, ModelParams};
use crate::nn::{grad_check_subset, mse_loss, GradCheckOptions, GradCheckReport, Mode, Parameters, Tensor2D};

/// Mean squared error of a batch and its analytic parameter gradient,
/// inference mode. `targets` is `B × 3M`.
pub fn loss_and_gradient(
    cfg: &MixerConfig,
    params: &ModelParams,
    patches: &Tensor2D,
    lengths: &Tensor2D,
    targets: &Tensor2D,
) -> Result<(f64, ModelParams)> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let pass = params.forward(cfg, patches, lengths, Mode::Infer, &mut rng)?;
    let (loss, grad_out) = mse_loss(&pass.output, targets)?;
    let mut grads = ModelParams::zeros(cfg);
    params.backward(cfg, &pass, &grad_out, &mut grads)?;
    Ok((loss, grads))
}

/// Central-difference check of every parameter of the network.
///
/// The loss is always the full-model MSE, but each perturbation is propagated
/// only from the first layer it can affect: mixing-block tensors start from
/// that block's cached input, the length encoder and head start from cached
/// trunk activations.
///
/// `flip_sign_of` negates the analytic gradient of the named tensor before
/// comparison; it exists to confirm the check catches a broken backward pass.
pub fn model_grad_check(
    cfg: &MixerConfig,
    params: &ModelParams,
    patches: &Tensor2D,
    lengths: &Tensor2D,
    targets: &Tensor2D,
    opts: GradCheckOptions,
    flip_sign_of: Option<&str>,
) -> Result<GradCheckReport> {
    let (_, mut analytic) = loss_and_gradient(cfg, params, patches, lengths, targets)?;
    if let Some(name) = flip_sign_of {
        for (n, t) in analytic.named_tensors_mut() {
            if n == name {
                t.scale(-1.0);
            }
        }
    }
    let (xs, length_hidden) = params.block_inputs(cfg, patches, lengths)?;
    let trunk_out = &xs[cfg.blocks];

    let head_loss = |p: &ModelParams, features: &Tensor2D| -> f64 {
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let (out, _) = p
            .head_forward(cfg, features, Mode::Infer, &mut rng)
            .expect("forward on checked shapes");
        mse_loss(&out, targets).expect("same shape").0
    };

    let mut stages: Vec<Result<GradCheckReport>> = Vec::new();
    stages.push(grad_check_subset(
        params,
        &analytic,
        |p| {
            let out = p
                .predict_batch(cfg, patches, lengths)
                .expect("forward on checked shapes");
            mse_loss(&out, targets).expect("same shape").0
        },
        opts,
        |n| n.starts_with("embed."),
    ));
    for k in 0..cfg.blocks {
        let prefix = format!("blocks.{k}.");
        stages.push(grad_check_subset(
            params,
            &analytic,
            |p| {
                let f = p
                    .features_from_block(cfg, k, &xs[k], &length_hidden)
                    .expect("forward on checked shapes");
                head_loss(p, &f)
            },
            opts,
            |n| n.starts_with(&prefix),
        ));
    }
    stages.push(grad_check_subset(
        params,
        &analytic,
        |p| {
            let lh = p.length_features(lengths).expect("forward on checked shapes");
            head_loss(p, &ModelParams::concat_features(trunk_out, &lh))
        },
        opts,
        |n| n.starts_with("length."),
    ));
    let features = ModelParams::concat_features(trunk_out, &length_hidden);
    stages.push(grad_check_subset(
        params,
        &analytic,
        |p| head_loss(p, &features),
        opts,
        |n| n.starts_with("head."),
    ));

    // the first failing stage wins; otherwise report the worst entry overall
    let mut report: Option<GradCheckReport> = None;
    for stage in stages {
        let r = stage?;
        report = Some(match report {
            Some(acc) => acc.merge(r),
            None => r,
        });
    }
    Ok(report.expect("at least one stage"))
}
