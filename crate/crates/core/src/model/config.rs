use serde::{Deserialize, Serialize};

use crate::data::WindowSpec;
use crate::error::{Error, Result};

/// Architecture hyperparameters.
///
/// Defaults are the published training configuration (τ = 18, patches of
/// 6 × 3, 7 mixing blocks, h_S = 64, h_C = 128, dropout 0.1 / 0.3). The hidden
/// width `hidden_dim` (C) is not published; 64 is an assumption, as are the
/// length-encoder width and the two head layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixerConfig {
    /// Sensors along the scope, N.
    pub sensors: usize,
    /// Colon markers, M.
    pub markers: usize,
    /// Window length in frames, τ.
    pub tau: usize,
    /// Patch height over the 3N coordinate rows.
    pub s1: usize,
    /// Patch width over the τ time columns.
    pub s2: usize,
    /// Patch feature width, C.
    pub hidden_dim: usize,
    /// Number of mixing blocks, b.
    pub blocks: usize,
    /// Hidden width of the patch-mixing MLP, h_S.
    pub h_s: usize,
    /// Hidden width of the channel MLP, h_C.
    pub h_c: usize,
    /// Dropout inside the mixing blocks, d1.
    pub d1: f64,
    /// Dropout after each head hidden layer, d2.
    pub d2: f64,
    /// Width of the insertion-length feature, F.
    pub length_features: usize,
    pub head_hidden: [usize; 2],
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self {
            sensors: 6,
            markers: 12,
            tau: 18,
            s1: 6,
            s2: 3,
            hidden_dim: 64,
            blocks: 7,
            h_s: 64,
            h_c: 128,
            d1: 0.1,
            d2: 0.3,
            length_features: 16,
            head_hidden: [256, 128],
        }
    }
}

impl MixerConfig {
    /// Small configuration for gradient checks and quick tests (C = 8, b = 2,
    /// dropout off).
    pub fn tiny() -> Self {
        Self {
            hidden_dim: 8,
            blocks: 2,
            d1: 0.0,
            d2: 0.0,
            ..Self::default()
        }
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            tau: self.tau,
            s1: self.s1,
            s2: self.s2,
        }
    }

    /// Patches per matrix, S.
    pub fn patches(&self) -> usize {
        3 * self.sensors * self.tau / (self.s1 * self.s2)
    }

    /// Rows of the mixer input, 2S.
    pub fn tokens(&self) -> usize {
        2 * self.patches()
    }

    pub fn patch_len(&self) -> usize {
        self.s1 * self.s2
    }

    pub fn output_dim(&self) -> usize {
        3 * self.markers
    }

    pub fn head_input(&self) -> usize {
        self.tokens() * self.hidden_dim + self.length_features
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("sensors", self.sensors),
            ("markers", self.markers),
            ("tau", self.tau),
            ("s1", self.s1),
            ("s2", self.s2),
            ("hidden_dim", self.hidden_dim),
            ("blocks", self.blocks),
            ("h_s", self.h_s),
            ("h_c", self.h_c),
            ("length_features", self.length_features),
            ("head_hidden[0]", self.head_hidden[0]),
            ("head_hidden[1]", self.head_hidden[1]),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        self.window_spec()
            .patches_per_matrix(self.sensors)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.hidden_dim < 2 {
            return Err(Error::Config("hidden_dim must be >= 2 for layer normalization".into()));
        }
        for (name, p) in [("d1", self.d1), ("d2", self.d2)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} must lie in [0, 1)")));
            }
        }
        Ok(())
    }
}
