//! Forward and backward passes of the mixer.
//!
//! ```text
//! patches (2S × s1s2) ─ embed ─► Ξ (2S × C) ─ b × mixing block ─► O (2S × C) ─ flatten ─┐
//! lengths (τ) ─ length encoder + GELU ─► F ─────────────────────────────────────────── concat
//!   ─► FC h1, GELU, dropout d2 ─► FC h2, GELU, dropout d2 ─► FC 3M (normalized markers)
//! ```
//!
//! Mixing block on `I` (2S × C), biases omitted:
//!
//! ```text
//! U[:, i] = I[:, i] + W₂ · drop(σ(W₁ · LN₁(I)[:, i]))    for each of the C columns
//! O[j, :] = U[j, :] + W₄ · drop(σ(W₃ · LN₂(U)[j, :]))    for each of the 2S rows
//! ```
//!
//! A batch of `B` samples travels as row stacks: patches `(B·2S) × s1s2`,
//! lengths `B × τ`, head input `B × (2S·C + F)`, output `B × 3M`. Every dense
//! layer acts on rows, so the per-sample matrices simply stack; only the
//! patch-mixing transposes work block by block.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::params::{MixingBlock, ModelParams};
use crate::model::MixerConfig;
use crate::nn::{dropout, gelu_forward, DropoutMask, GeluCache, LayerNormCache, Mode, Tensor2D};

/// Activations of one mixing block needed by its backward pass.
#[derive(Clone, Debug)]
pub struct BlockCache {
    batch: usize,
    ln1: LayerNormCache,
    /// `LN₁(I)ᵀ` per sample, `(B·C) × 2S`
    token_in: Tensor2D,
    token_act: GeluCache,
    token_mask: DropoutMask,
    token_hidden: Tensor2D,
    ln2: LayerNormCache,
    channel_in: Tensor2D,
    channel_act: GeluCache,
    channel_mask: DropoutMask,
    channel_hidden: Tensor2D,
}

impl MixingBlock {
    /// `input` is `(batch·2S) × C`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: &Tensor2D,
        batch: usize,
        d1: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Tensor2D, BlockCache)> {
        // patch mixing: every column of I goes through 2S → h_S → 2S
        let (n1, ln1) = self.ln1.forward(input)?;
        let token_in = n1.transpose_blocks(batch)?;
        let (token_act_out, token_act) = gelu_forward(self.token_fc1.forward(&token_in)?);
        let (token_hidden, token_mask) = dropout(&token_act_out, d1, mode, rng)?;
        let mixed = self.token_fc2.forward(&token_hidden)?;
        let mut u = mixed.transpose_blocks(batch)?;
        u.add_assign(input)?;

        // channel mixing: every row of U goes through C → h_C → C
        let (channel_in, ln2) = self.ln2.forward(&u)?;
        let (channel_act_out, channel_act) = gelu_forward(self.channel_fc1.forward(&channel_in)?);
        let (channel_hidden, channel_mask) = dropout(&channel_act_out, d1, mode, rng)?;
        let mut out = self.channel_fc2.forward(&channel_hidden)?;
        out.add_assign(&u)?;

        Ok((
            out,
            BlockCache {
                batch,
                ln1,
                token_in,
                token_act,
                token_mask,
                token_hidden,
                ln2,
                channel_in,
                channel_act,
                channel_mask,
                channel_hidden,
            },
        ))
    }

    /// Accumulates parameter gradients into `grads`; returns `dL/dI`.
    pub fn backward(&self, cache: &BlockCache, grad_out: &Tensor2D, grads: &mut MixingBlock) -> Result<Tensor2D> {
        let g_hidden = self
            .channel_fc2
            .backward(&cache.channel_hidden, grad_out, &mut grads.channel_fc2)?;
        let g_pre = cache.channel_act.backward(&cache.channel_mask.backward(&g_hidden));
        let g_norm = self
            .channel_fc1
            .backward(&cache.channel_in, &g_pre, &mut grads.channel_fc1)?;
        let mut g_u = self.ln2.backward(&cache.ln2, &g_norm, &mut grads.ln2)?;
        g_u.add_assign(grad_out)?;

        let g_mixed = g_u.transpose_blocks(cache.batch)?;
        let g_hidden = self
            .token_fc2
            .backward(&cache.token_hidden, &g_mixed, &mut grads.token_fc2)?;
        let g_pre = cache.token_act.backward(&cache.token_mask.backward(&g_hidden));
        let g_token_in = self.token_fc1.backward(&cache.token_in, &g_pre, &mut grads.token_fc1)?;
        let g_n1 = g_token_in.transpose_blocks(cache.batch)?;
        let mut g_in = self.ln1.backward(&cache.ln1, &g_n1, &mut grads.ln1)?;
        g_in.add_assign(&g_u)?;
        Ok(g_in)
    }
}

/// Trunk activations: everything up to the concatenated head input.
#[derive(Clone, Debug)]
pub struct TrunkCache {
    batch: usize,
    patches: Tensor2D,
    blocks: Vec<BlockCache>,
    lengths: Tensor2D,
    length_act: GeluCache,
}

#[derive(Clone, Debug)]
pub struct HeadCache {
    features: Tensor2D,
    act1: GeluCache,
    mask1: DropoutMask,
    hidden1: Tensor2D,
    act2: GeluCache,
    mask2: DropoutMask,
    hidden2: Tensor2D,
}

#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// `B × 3M` normalized marker coordinates.
    pub output: Tensor2D,
    pub trunk: TrunkCache,
    pub head: HeadCache,
}

fn infer_rng() -> rand::rngs::mock::StepRng {
    // dropout is the identity in inference mode and never draws
    rand::rngs::mock::StepRng::new(0, 0)
}

impl ModelParams {
    /// Validates a batch against `cfg` and returns the batch size.
    pub fn check_input(&self, cfg: &MixerConfig, patches: &Tensor2D, lengths: &Tensor2D) -> Result<usize> {
        if self.blocks.len() != cfg.blocks || self.embed.outputs() != cfg.hidden_dim {
            return Err(Error::contract(format!(
                "parameters ({} blocks, C = {}) do not match config ({} blocks, C = {})",
                self.blocks.len(),
                self.embed.outputs(),
                cfg.blocks,
                cfg.hidden_dim
            )));
        }
        let batch = lengths.rows();
        if lengths.cols() != cfg.tau || batch == 0 {
            return Err(Error::shape(
                "model input lengths",
                format!("B×{} with B ≥ 1", cfg.tau),
                lengths.shape(),
            ));
        }
        if patches.rows() != batch * cfg.tokens() || patches.cols() != cfg.patch_len() {
            return Err(Error::shape(
                "model input patches",
                format!("{}×{}", batch * cfg.tokens(), cfg.patch_len()),
                patches.shape(),
            ));
        }
        Ok(batch)
    }

    /// Patch projection: `2S × (s1·s2) → 2S × C`, row-stacked over the batch.
    pub fn embed_patches(&self, patches: &Tensor2D) -> Result<Tensor2D> {
        self.embed.forward(patches)
    }

    /// Runs mixing blocks `from..` on `x`.
    fn mix_from<R: Rng + ?Sized>(
        &self,
        cfg: &MixerConfig,
        from: usize,
        mut x: Tensor2D,
        batch: usize,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Tensor2D, Vec<BlockCache>)> {
        let mut caches = Vec::with_capacity(self.blocks.len() - from);
        for block in &self.blocks[from..] {
            let (y, cache) = block.forward(&x, batch, cfg.d1, mode, rng)?;
            caches.push(cache);
            x = y;
        }
        Ok((x, caches))
    }

    /// Row `b` is the flattened `O` of sample `b` followed by its `F` length
    /// features.
    pub(crate) fn concat_features(mixed: &Tensor2D, length_hidden: &Tensor2D) -> Tensor2D {
        let batch = length_hidden.rows();
        let per = mixed.len() / batch;
        let width = per + length_hidden.cols();
        let mut out = Tensor2D::zeros(batch, width);
        for b in 0..batch {
            let row = out.row_mut(b);
            row[..per].copy_from_slice(&mixed.data()[b * per..(b + 1) * per]);
            row[per..].copy_from_slice(length_hidden.row(b));
        }
        out
    }

    /// Embedding, mixing blocks and length encoder. Returns the
    /// `B × (2S·C + F)` head input.
    pub fn trunk_forward<R: Rng + ?Sized>(
        &self,
        cfg: &MixerConfig,
        patches: &Tensor2D,
        lengths: &Tensor2D,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Tensor2D, TrunkCache)> {
        let batch = self.check_input(cfg, patches, lengths)?;
        let x = self.embed_patches(patches)?;
        let (x, blocks) = self.mix_from(cfg, 0, x, batch, mode, rng)?;
        let (length_hidden, length_act) = gelu_forward(self.length.forward(lengths)?);
        Ok((
            Self::concat_features(&x, &length_hidden),
            TrunkCache {
                batch,
                patches: patches.clone(),
                blocks,
                lengths: lengths.clone(),
                length_act,
            },
        ))
    }

    pub fn head_forward<R: Rng + ?Sized>(
        &self,
        cfg: &MixerConfig,
        features: &Tensor2D,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Tensor2D, HeadCache)> {
        let (a1, act1) = gelu_forward(self.head_fc1.forward(features)?);
        let (hidden1, mask1) = dropout(&a1, cfg.d2, mode, rng)?;
        let (a2, act2) = gelu_forward(self.head_fc2.forward(&hidden1)?);
        let (hidden2, mask2) = dropout(&a2, cfg.d2, mode, rng)?;
        let output = self.head_out.forward(&hidden2)?;
        Ok((
            output,
            HeadCache {
                features: features.clone(),
                act1,
                mask1,
                hidden1,
                act2,
                mask2,
                hidden2,
            },
        ))
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        cfg: &MixerConfig,
        patches: &Tensor2D,
        lengths: &Tensor2D,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardPass> {
        let (features, trunk) = self.trunk_forward(cfg, patches, lengths, mode, rng)?;
        let (output, head) = self.head_forward(cfg, &features, mode, rng)?;
        Ok(ForwardPass { output, trunk, head })
    }

    /// Inference-mode forward of a batch; `B × 3M`.
    pub fn predict_batch(&self, cfg: &MixerConfig, patches: &Tensor2D, lengths: &Tensor2D) -> Result<Tensor2D> {
        Ok(self
            .forward(cfg, patches, lengths, Mode::Infer, &mut infer_rng())?
            .output)
    }

    /// Inference-mode forward of one sample returning the `3M` normalized
    /// outputs.
    pub fn predict(&self, cfg: &MixerConfig, patches: &Tensor2D, lengths: &[f64]) -> Result<Vec<f64>> {
        let lengths = Tensor2D::row_vector(lengths.to_vec());
        Ok(self.predict_batch(cfg, patches, &lengths)?.into_data())
    }

    /// Inference-mode head input computed from the output of block `from − 1`
    /// (the embedding when `from == 0`) and precomputed length features.
    pub(crate) fn features_from_block(
        &self,
        cfg: &MixerConfig,
        from: usize,
        x: &Tensor2D,
        length_hidden: &Tensor2D,
    ) -> Result<Tensor2D> {
        let (mixed, _) = self.mix_from(
            cfg,
            from,
            x.clone(),
            length_hidden.rows(),
            Mode::Infer,
            &mut infer_rng(),
        )?;
        Ok(Self::concat_features(&mixed, length_hidden))
    }

    /// Inference-mode inputs of every mixing block followed by the trunk
    /// output, and the length features.
    pub(crate) fn block_inputs(
        &self,
        cfg: &MixerConfig,
        patches: &Tensor2D,
        lengths: &Tensor2D,
    ) -> Result<(Vec<Tensor2D>, Tensor2D)> {
        let batch = self.check_input(cfg, patches, lengths)?;
        let mut xs = vec![self.embed_patches(patches)?];
        let mut rng = infer_rng();
        for block in &self.blocks {
            let (y, _) = block.forward(xs.last().unwrap(), batch, cfg.d1, Mode::Infer, &mut rng)?;
            xs.push(y);
        }
        let (length_hidden, _) = gelu_forward(self.length.forward(lengths)?);
        Ok((xs, length_hidden))
    }

    pub(crate) fn length_features(&self, lengths: &Tensor2D) -> Result<Tensor2D> {
        Ok(gelu_forward(self.length.forward(lengths)?).0)
    }

    /// Backward through the head only; returns `dL/d(features)`.
    pub fn head_backward(&self, cache: &HeadCache, grad_out: &Tensor2D, grads: &mut ModelParams) -> Result<Tensor2D> {
        let g = self.head_out.backward(&cache.hidden2, grad_out, &mut grads.head_out)?;
        let g = cache.act2.backward(&cache.mask2.backward(&g));
        let g = self.head_fc2.backward(&cache.hidden1, &g, &mut grads.head_fc2)?;
        let g = cache.act1.backward(&cache.mask1.backward(&g));
        self.head_fc1.backward(&cache.features, &g, &mut grads.head_fc1)
    }

    pub fn trunk_backward(
        &self,
        cfg: &MixerConfig,
        cache: &TrunkCache,
        grad_features: &Tensor2D,
        grads: &mut ModelParams,
    ) -> Result<()> {
        let batch = cache.batch;
        let per = cfg.tokens() * cfg.hidden_dim;
        let mut g_mixed = Vec::with_capacity(batch * per);
        let mut g_len = Tensor2D::zeros(batch, cfg.length_features);
        for b in 0..batch {
            let row = grad_features.row(b);
            g_mixed.extend_from_slice(&row[..per]);
            g_len.row_mut(b).copy_from_slice(&row[per..]);
        }
        let g_len = cache.length_act.backward(&g_len);
        self.length.backward(&cache.lengths, &g_len, &mut grads.length)?;

        let mut g = Tensor2D::new(batch * cfg.tokens(), cfg.hidden_dim, g_mixed)?;
        for (k, block) in self.blocks.iter().enumerate().rev() {
            g = block.backward(&cache.blocks[k], &g, &mut grads.blocks[k])?;
        }
        self.embed.backward(&cache.patches, &g, &mut grads.embed)?;
        Ok(())
    }

    /// Accumulates `dL/dθ` into `grads`, given `dL/d(output)`.
    pub fn backward(
        &self,
        cfg: &MixerConfig,
        pass: &ForwardPass,
        grad_out: &Tensor2D,
        grads: &mut ModelParams,
    ) -> Result<()> {
        let g_features = self.head_backward(&pass.head, grad_out, grads)?;
        self.trunk_backward(cfg, &pass.trunk, &g_features, grads)
    }
}
