//! Train on synthetic withdrawals, save a checkpoint and score a held-out
//! insertion.
//!
//! cargo run --release --example train_model -- [epochs] [checkpoint]

use std::ops::ControlFlow;

use kst_mixer::data::{make_window_samples, NormalizationStats};
use kst_mixer::model::{save_checkpoint, MixerConfig, Model};
use kst_mixer::synth::{generate_suite, PhantomSpec, SuiteSpec};
use kst_mixer::train::{evaluate_recording, train_with, TrainConfig};

fn main() -> kst_mixer::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(40, |e| e.parse().expect("epochs"));
    let out = args.next().unwrap_or_else(|| "kst-demo.ckpt".into());

    let cfg = MixerConfig::tiny();
    let recordings = generate_suite(&SuiteSpec::paper_scale(PhantomSpec::default(), 0), cfg.tau)?;
    let (held_out, train_set) = recordings.split_last().expect("eight recordings");
    let stats = NormalizationStats::from_recordings(train_set)?;
    let mut samples = Vec::new();
    for rec in train_set {
        samples.extend(make_window_samples(rec, cfg.window_spec(), &stats)?.samples);
    }

    let tc = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    println!("{} training windows, {} epochs", samples.len(), epochs);
    let outcome = train_with(&samples, &cfg, &tc, |e| {
        if (e.epoch + 1) % 10 == 0 {
            println!("epoch {:>4}  loss {:.3e}", e.epoch + 1, e.loss);
        }
        ControlFlow::Continue(())
    })?;

    let model = Model {
        config: cfg,
        params: outcome.params,
        stats,
    };
    save_checkpoint(&model, std::path::Path::new(&out))?;
    let eval = evaluate_recording(&model, held_out)?;
    println!(
        "{}: MED {:.2} mm over {} windows",
        held_out.id,
        eval.med.med,
        eval.t_c.len()
    );
    println!("per marker: {:.1?}", eval.med.per_marker);
    println!("checkpoint written to {out}");
    Ok(())
}
