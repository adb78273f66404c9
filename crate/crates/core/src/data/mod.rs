//! Recording model, file ingestion and window preparation.

mod frame;
pub mod io;
mod matrix;
mod normalize;
mod patch;
mod split;
mod window;

pub use frame::{
    distance, norm, ColonFrame, ColonoscopeFrame, InsertionRecording, Vec3, DEFAULT_SAMPLE_RATE_HZ, UNIT_TOLERANCE,
};
pub use io::{load_dir, load_recording, save_recording};
pub use matrix::{build_directional_matrix, build_positional_matrix};
pub use normalize::{AxisRange, MatrixKind, NormalizationStats};
pub use patch::{assemble_patches, extract_patches};
pub use split::{loocv_split, Fold};
pub use window::{make_window_samples, window_input, WindowInput, WindowSample, WindowSet, WindowSpec, PATCH_ORDERING};
