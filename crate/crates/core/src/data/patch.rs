use crate::error::{Error, Result};
use crate::nn::Tensor2D;

fn check_grid(rows: usize, cols: usize, s1: usize, s2: usize) -> Result<()> {
    if s1 == 0 || rows % s1 != 0 {
        return Err(Error::contract(format!(
            "patch height s1 = {s1} does not divide the row axis ({rows})"
        )));
    }
    if s2 == 0 || cols % s2 != 0 {
        return Err(Error::contract(format!(
            "patch width s2 = {s2} does not divide the time axis ({cols})"
        )));
    }
    Ok(())
}

/// Cuts `matrix` into non-overlapping `s1 × s2` patches.
///
/// Patches are ordered row-major over the patch grid (top-left first) and each
/// patch is flattened row-major, giving an `S × (s1·s2)` tensor with
/// `S = rows·cols / (s1·s2)`.
pub fn extract_patches(matrix: &Tensor2D, s1: usize, s2: usize) -> Result<Tensor2D> {
    check_grid(matrix.rows(), matrix.cols(), s1, s2)?;
    let (grid_r, grid_c) = (matrix.rows() / s1, matrix.cols() / s2);
    let mut out = Tensor2D::zeros(grid_r * grid_c, s1 * s2);
    for gi in 0..grid_r {
        for gj in 0..grid_c {
            let patch = out.row_mut(gi * grid_c + gj);
            for i in 0..s1 {
                let src = &matrix.row(gi * s1 + i)[gj * s2..(gj + 1) * s2];
                patch[i * s2..(i + 1) * s2].copy_from_slice(src);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`extract_patches`].
pub fn assemble_patches(patches: &Tensor2D, rows: usize, cols: usize, s1: usize, s2: usize) -> Result<Tensor2D> {
    check_grid(rows, cols, s1, s2)?;
    let expected = rows * cols / (s1 * s2);
    if patches.rows() != expected || patches.cols() != s1 * s2 {
        return Err(Error::shape(
            "patch stack",
            format!("{expected}×{}", s1 * s2),
            patches.shape(),
        ));
    }
    let grid_c = cols / s2;
    let mut m = Tensor2D::zeros(rows, cols);
    for p in 0..patches.rows() {
        let (gi, gj) = (p / grid_c, p % grid_c);
        for i in 0..s1 {
            let dst = &mut m.row_mut(gi * s1 + i)[gj * s2..(gj + 1) * s2];
            dst.copy_from_slice(&patches.row(p)[i * s2..(i + 1) * s2]);
        }
    }
    Ok(m)
}
