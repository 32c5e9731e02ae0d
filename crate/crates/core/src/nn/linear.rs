use rand::Rng;

use super::{fan_in_bound, HasParams, Matrix, Parameter};
use crate::error::{Error, Result};

/// Affine map `y = xW + b`, with `b` broadcast over rows.
#[derive(Clone, Debug)]
pub struct Linear {
    pub w: Parameter,
    pub b: Parameter,
    cache: Option<Matrix>,
}

impl Linear {
    pub fn new(name: &str, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        let bound = fan_in_bound(d_in);
        let w = Parameter::uniform(format!("{name}.w"), d_in, d_out, bound, rng);
        let b = Parameter::uniform(format!("{name}.b"), 1, d_out, bound, rng);
        Linear { w, b, cache: None }
    }

    pub fn from_params(w: Parameter, b: Parameter) -> Result<Self> {
        if b.value.rows() != 1 || b.value.cols() != w.value.cols() {
            return Err(Error::dim("linear bias", w.value.shape(), b.value.shape()));
        }
        Ok(Linear { w, b, cache: None })
    }

    pub fn d_in(&self) -> usize {
        self.w.value.rows()
    }

    pub fn d_out(&self) -> usize {
        self.w.value.cols()
    }

    /// Forward pass without touching the cache.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.d_in() {
            return Err(Error::dim("linear_forward", x.shape(), self.w.value.shape()));
        }
        x.matmul(&self.w.value)?.add_row_broadcast(&self.b.value)
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let y = self.apply(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    /// Accumulates `dW += xᵀdy`, `db += colsum(dy)` and returns `dy·Wᵀ`.
    pub fn backward(&mut self, dy: &Matrix) -> Result<Matrix> {
        let x = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("linear backward before forward".into()))?;
        if dy.rows() != x.rows() || dy.cols() != self.d_out() {
            return Err(Error::dim(
                "linear_backward",
                dy.shape(),
                (x.rows(), self.d_out()),
            ));
        }
        x.accumulate_tn(dy, &mut self.w.grad);
        self.b.grad.add_assign(&dy.column_sums())?;
        dy.matmul_nt(&self.w.value)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

impl HasParams for Linear {
    fn params(&self) -> Vec<&Parameter> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.w, &mut self.b]
    }
}
