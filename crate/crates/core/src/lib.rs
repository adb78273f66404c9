//! Colon shape estimation from colonoscope kinematics with a spatio-temporal
//! MLP mixer.
//!
//! A window of τ electromagnetic-sensor frames (positions, directions and
//! insertion length along the scope) is cut into patches, mixed across
//! patches and channels, and regressed onto twelve colon marker positions.
//!
//! - [`nn`]: tensors, dense/LayerNorm/GELU/dropout layers, Adam, gradient check
//! - [`data`]: recordings, window matrices, patches, normalization, LOOCV split
//! - [`model`]: the mixer network, its gradients and checkpoint format
//! - [`train`]: training loop, MED, cross validation, t-test, latency, reports
//! - [`synth`]: synthetic phantom withdrawals
//! - [`cli`]: the `kst` command line
//!
//! ## Examples
//!
//! ```bash
//! cargo run --release --example synth_suite        # generate the 8-insertion suite
//! cargo run --release --example window_patches     # window → matrices → patches
//! cargo run --release --example gradient_check     # analytic vs numeric gradients
//! cargo run --release --example train_model        # train, checkpoint, score a held-out insertion
//! cargo run --release --example cross_validation   # leave-one-insertion-out table
//! cargo run --release --example stream_estimates   # frame-by-frame streaming estimates
//! cargo run --release --example latency            # per-estimate CPU timing
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod model;
pub mod nn;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
