//! Positional and directional `3N × τ` window matrices.
//!
//! Rows run `(s₁x, s₁y, s₁z, …, s_Nx, s_Ny, s_Nz)`; column 0 holds the newest
//! frame `t_c` and column `τ−1` the oldest, `t_c − τ + 1`.

use crate::data::frame::{ColonoscopeFrame, Vec3};
use crate::error::{Error, Result};
use crate::nn::Tensor2D;

/// `window` is in chronological order (oldest first), as sliced from a
/// recording; the last frame is `t_c`.
pub fn build_positional_matrix(window: &[&ColonoscopeFrame], tau: usize) -> Result<Tensor2D> {
    build(window, tau, |f| &f.positions)
}

pub fn build_directional_matrix(window: &[&ColonoscopeFrame], tau: usize) -> Result<Tensor2D> {
    build(window, tau, |f| &f.directions)
}

fn build(window: &[&ColonoscopeFrame], tau: usize, pick: impl Fn(&ColonoscopeFrame) -> &Vec<Vec3>) -> Result<Tensor2D> {
    if window.len() != tau {
        return Err(Error::contract(format!(
            "window has {} frames, expected τ = {tau}",
            window.len()
        )));
    }
    let sensors = window[0].sensors();
    if let Some(f) = window.iter().find(|f| f.sensors() != sensors) {
        return Err(Error::contract(format!(
            "frame {} has {} sensors, expected {sensors}",
            f.t,
            f.sensors()
        )));
    }
    let mut m = Tensor2D::zeros(3 * sensors, tau);
    for (col, frame) in window.iter().rev().enumerate() {
        for (n, v) in pick(frame).iter().enumerate() {
            for axis in 0..3 {
                m.set(3 * n + axis, col, v[axis]);
            }
        }
    }
    Ok(m)
}
