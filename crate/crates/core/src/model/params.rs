use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::MixerConfig;
use crate::nn::{Dense, LayerNorm, Parameters, Shape, Tensor2D};

/// One spatio-temporal mixing block: a patch-mixing MLP across the `2S` axis
/// and a channel MLP across the `C` axis, each behind a layer norm and wrapped
/// in a residual connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingBlock {
    pub ln1: LayerNorm,
    /// `2S → h_S`
    pub token_fc1: Dense,
    /// `h_S → 2S`
    pub token_fc2: Dense,
    pub ln2: LayerNorm,
    /// `C → h_C`
    pub channel_fc1: Dense,
    /// `h_C → C`
    pub channel_fc2: Dense,
}

impl MixingBlock {
    fn init<R: Rng + ?Sized>(cfg: &MixerConfig, rng: &mut R) -> Self {
        let (tokens, c) = (cfg.tokens(), cfg.hidden_dim);
        Self {
            ln1: LayerNorm::new(c),
            token_fc1: Dense::glorot(tokens, cfg.h_s, rng),
            token_fc2: Dense::glorot(cfg.h_s, tokens, rng),
            ln2: LayerNorm::new(c),
            channel_fc1: Dense::glorot(c, cfg.h_c, rng),
            channel_fc2: Dense::glorot(cfg.h_c, c, rng),
        }
    }

    fn zeros(cfg: &MixerConfig) -> Self {
        let (tokens, c) = (cfg.tokens(), cfg.hidden_dim);
        Self {
            ln1: LayerNorm::zeros(c),
            token_fc1: Dense::zeros(tokens, cfg.h_s),
            token_fc2: Dense::zeros(cfg.h_s, tokens),
            ln2: LayerNorm::zeros(c),
            channel_fc1: Dense::zeros(c, cfg.h_c),
            channel_fc2: Dense::zeros(cfg.h_c, c),
        }
    }
}

/// Every learnable tensor of the network.
///
/// Tensor names (used by checkpoints and gradient reports):
/// `embed.{w,b}`, `blocks.{k}.{ln1,ln2}.{gain,bias}`,
/// `blocks.{k}.token.{fc1,fc2}.{w,b}`, `blocks.{k}.channel.{fc1,fc2}.{w,b}`,
/// `length.{w,b}`, `head.fc1.{w,b}`, `head.fc2.{w,b}` and the output layer
/// `head.{w,b}`. Dense weights are `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Shared patch projection, `s1·s2 → C`.
    pub embed: Dense,
    pub blocks: Vec<MixingBlock>,
    /// Insertion-length encoder, `τ → F`.
    pub length: Dense,
    pub head_fc1: Dense,
    pub head_fc2: Dense,
    pub head_out: Dense,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, unit layer-norm gains.
    pub fn init<R: Rng + ?Sized>(cfg: &MixerConfig, rng: &mut R) -> Self {
        let embed = Dense::glorot(cfg.patch_len(), cfg.hidden_dim, rng);
        let blocks = (0..cfg.blocks).map(|_| MixingBlock::init(cfg, rng)).collect();
        let length = Dense::glorot(cfg.tau, cfg.length_features, rng);
        let head_fc1 = Dense::glorot(cfg.head_input(), cfg.head_hidden[0], rng);
        let head_fc2 = Dense::glorot(cfg.head_hidden[0], cfg.head_hidden[1], rng);
        let head_out = Dense::glorot(cfg.head_hidden[1], cfg.output_dim(), rng);
        Self {
            embed,
            blocks,
            length,
            head_fc1,
            head_fc2,
            head_out,
        }
    }

    /// All-zero tensors in the layout of `cfg`; also the gradient accumulator.
    pub fn zeros(cfg: &MixerConfig) -> Self {
        Self {
            embed: Dense::zeros(cfg.patch_len(), cfg.hidden_dim),
            blocks: (0..cfg.blocks).map(|_| MixingBlock::zeros(cfg)).collect(),
            length: Dense::zeros(cfg.tau, cfg.length_features),
            head_fc1: Dense::zeros(cfg.head_input(), cfg.head_hidden[0]),
            head_fc2: Dense::zeros(cfg.head_hidden[0], cfg.head_hidden[1]),
            head_out: Dense::zeros(cfg.head_hidden[1], cfg.output_dim()),
        }
    }

    /// Names and shapes implied by `cfg`, in storage order.
    pub fn layout(cfg: &MixerConfig) -> Vec<(String, Shape)> {
        Self::zeros(cfg)
            .named_tensors()
            .into_iter()
            .map(|(n, t)| (n, t.shape()))
            .collect()
    }
}

impl Parameters for ModelParams {
    fn named_tensors(&self) -> Vec<(String, &Tensor2D)> {
        let mut v = Vec::with_capacity(8 + 20 * self.blocks.len());
        self.embed.push_named("embed", &mut v);
        for (k, b) in self.blocks.iter().enumerate() {
            v.push((format!("blocks.{k}.ln1.gain"), &b.ln1.gain));
            v.push((format!("blocks.{k}.ln1.bias"), &b.ln1.bias));
            b.token_fc1.push_named(&format!("blocks.{k}.token.fc1"), &mut v);
            b.token_fc2.push_named(&format!("blocks.{k}.token.fc2"), &mut v);
            v.push((format!("blocks.{k}.ln2.gain"), &b.ln2.gain));
            v.push((format!("blocks.{k}.ln2.bias"), &b.ln2.bias));
            b.channel_fc1.push_named(&format!("blocks.{k}.channel.fc1"), &mut v);
            b.channel_fc2.push_named(&format!("blocks.{k}.channel.fc2"), &mut v);
        }
        self.length.push_named("length", &mut v);
        self.head_fc1.push_named("head.fc1", &mut v);
        self.head_fc2.push_named("head.fc2", &mut v);
        self.head_out.push_named("head", &mut v);
        v
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor2D)> {
        let mut v = Vec::with_capacity(8 + 20 * self.blocks.len());
        self.embed.push_named_mut("embed", &mut v);
        for (k, b) in self.blocks.iter_mut().enumerate() {
            v.push((format!("blocks.{k}.ln1.gain"), &mut b.ln1.gain));
            v.push((format!("blocks.{k}.ln1.bias"), &mut b.ln1.bias));
            b.token_fc1.push_named_mut(&format!("blocks.{k}.token.fc1"), &mut v);
            b.token_fc2.push_named_mut(&format!("blocks.{k}.token.fc2"), &mut v);
            v.push((format!("blocks.{k}.ln2.gain"), &mut b.ln2.gain));
            v.push((format!("blocks.{k}.ln2.bias"), &mut b.ln2.bias));
            b.channel_fc1.push_named_mut(&format!("blocks.{k}.channel.fc1"), &mut v);
            b.channel_fc2.push_named_mut(&format!("blocks.{k}.channel.fc2"), &mut v);
        }
        self.length.push_named_mut("length", &mut v);
        self.head_fc1.push_named_mut("head.fc1", &mut v);
        self.head_fc2.push_named_mut("head.fc2", &mut v);
        self.head_out.push_named_mut("head", &mut v);
        v
    }

    fn tensor_mut(&mut self, index: usize) -> Option<&mut Tensor2D> {
        fn dense(d: &mut Dense, i: usize) -> &mut Tensor2D {
            if i == 0 {
                &mut d.weight
            } else {
                &mut d.bias
            }
        }
        const PER_BLOCK: usize = 12;
        let nb = self.blocks.len();
        match index {
            0 | 1 => Some(dense(&mut self.embed, index)),
            i if i < 2 + PER_BLOCK * nb => {
                let b = &mut self.blocks[(i - 2) / PER_BLOCK];
                Some(match (i - 2) % PER_BLOCK {
                    0 => &mut b.ln1.gain,
                    1 => &mut b.ln1.bias,
                    j @ 2..=3 => dense(&mut b.token_fc1, j - 2),
                    j @ 4..=5 => dense(&mut b.token_fc2, j - 4),
                    6 => &mut b.ln2.gain,
                    7 => &mut b.ln2.bias,
                    j @ 8..=9 => dense(&mut b.channel_fc1, j - 8),
                    j => dense(&mut b.channel_fc2, j - 10),
                })
            }
            i => {
                let j = i - 2 - PER_BLOCK * nb;
                let layer = match j / 2 {
                    0 => &mut self.length,
                    1 => &mut self.head_fc1,
                    2 => &mut self.head_fc2,
                    3 => &mut self.head_out,
                    _ => return None,
                };
                Some(dense(layer, j % 2))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn names_are_unique_and_orders_agree() {
        let cfg = MixerConfig::tiny();
        let mut p = ModelParams::zeros(&cfg);
        let names: Vec<String> = p.named_tensors().into_iter().map(|(n, _)| n).collect();
        let unique: BTreeSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        let mut_names: Vec<String> = p.named_tensors_mut().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, mut_names);
    }

    #[test]
    fn indexed_access_follows_named_order() {
        let cfg = MixerConfig::tiny();
        let mut p = ModelParams::zeros(&cfg);
        let n = p.named_tensors().len();
        for i in 0..n {
            p.tensor_mut(i).unwrap().data_mut()[0] = i as f64 + 1.0;
        }
        assert!(p.tensor_mut(n).is_none());
        for (i, (name, t)) in p.named_tensors().into_iter().enumerate() {
            assert_eq!(t.data()[0], i as f64 + 1.0, "{name}");
        }
    }

    #[test]
    fn output_layer_shape_reads_out_by_in() {
        let layout = ModelParams::layout(&MixerConfig::default());
        let (_, shape) = layout.iter().find(|(n, _)| n == "head.w").unwrap();
        assert_eq!(shape.to_string(), "36×128");
    }

    #[test]
    fn parameter_count_depends_only_on_config() {
        use rand::SeedableRng;
        let cfg = MixerConfig::default();
        let a = ModelParams::init(&cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
        let b = ModelParams::init(&cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(2));
        assert_eq!(a.parameter_count(), b.parameter_count());
        assert_eq!(a.parameter_count(), ModelParams::zeros(&cfg).parameter_count());
        // embed 18·64+64, 7 blocks of (2·128 + 36·64+64 + 64·36+36 + 64·128+128 + 128·64+64),
        // length 18·16+16, head (2304+16)·256+256 + 256·128+128 + 128·36+36
        let block = 256 + (36 * 64 + 64) + (64 * 36 + 36) + (64 * 128 + 128) + (128 * 64 + 64);
        let expected =
            (18 * 64 + 64) + 7 * block + (18 * 16 + 16) + (2320 * 256 + 256) + (256 * 128 + 128) + (128 * 36 + 36);
        assert_eq!(a.parameter_count(), expected);
    }
}
