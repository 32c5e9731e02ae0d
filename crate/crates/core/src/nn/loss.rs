use super::Matrix;
use crate::error::{Error, Result};

/// Mean squared error over an `n×1` batch and its gradient `(2/n)(pred − target)`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::dim("mse_loss", pred.shape(), target.shape()));
    }
    let n = pred.rows() * pred.cols();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let diff = pred.sub(target)?;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n as f64;
    Ok((loss, diff.scale(2.0 / n as f64)))
}
