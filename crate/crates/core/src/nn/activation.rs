use super::{fastmath, Matrix};
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    let e = fastmath::exp(-x.abs());
    let num = if x >= 0.0 { 1.0 } else { e };
    num / (1.0 + e)
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

pub fn tanh_act(x: &Matrix) -> Matrix {
    x.map(fastmath::tanh)
}

/// `dx = dy ⊙ y(1−y)` given the forward output `y`.
pub fn sigmoid_backward(y: &Matrix, dy: &Matrix) -> Result<Matrix> {
    if y.shape() != dy.shape() {
        return Err(Error::dim("sigmoid_backward", y.shape(), dy.shape()));
    }
    let mut out = dy.clone();
    for (o, &s) in out.as_mut_slice().iter_mut().zip(y.as_slice()) {
        *o *= s * (1.0 - s);
    }
    Ok(out)
}

/// `dx = dy ⊙ (1−y²)` given the forward output `y`.
pub fn tanh_backward(y: &Matrix, dy: &Matrix) -> Result<Matrix> {
    if y.shape() != dy.shape() {
        return Err(Error::dim("tanh_backward", y.shape(), dy.shape()));
    }
    let mut out = dy.clone();
    for (o, &t) in out.as_mut_slice().iter_mut().zip(y.as_slice()) {
        *o *= 1.0 - t * t;
    }
    Ok(out)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in row.iter_mut() {
        *v = fastmath::exp(*v - max);
    }
    let sum: f64 = row.iter().sum();
    let inv = 1.0 / sum;
    for v in row.iter_mut() {
        *v *= inv;
    }
}

/// Backward of a row-wise softmax: `dx = y ⊙ (dy − rowsum(dy ⊙ y))`.
pub fn softmax_rows_backward(y: &Matrix, dy: &Matrix) -> Result<Matrix> {
    if y.shape() != dy.shape() {
        return Err(Error::dim("softmax_backward", y.shape(), dy.shape()));
    }
    let mut out = Matrix::zeros(y.rows(), y.cols());
    for r in 0..y.rows() {
        let (yr, dr) = (y.row(r), dy.row(r));
        let inner: f64 = yr.iter().zip(dr).map(|(a, b)| a * b).sum();
        for ((o, &a), &d) in out.row_mut(r).iter_mut().zip(yr).zip(dr) {
            *o = a * (d - inner);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
}

/// Elementwise activation layer caching its output for backward.
#[derive(Clone, Debug)]
pub struct Activation {
    kind: ActivationKind,
    cache: Option<Matrix>,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        Activation { kind, cache: None }
    }

    pub fn forward(&mut self, x: &Matrix) -> Matrix {
        let y = match self.kind {
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Tanh => tanh_act(x),
        };
        self.cache = Some(y.clone());
        y
    }

    pub fn backward(&self, dy: &Matrix) -> Result<Matrix> {
        let y = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("activation backward before forward".into()))?;
        match self.kind {
            ActivationKind::Sigmoid => sigmoid_backward(y, dy),
            ActivationKind::Tanh => tanh_backward(y, dy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_known_values() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!((sigmoid_scalar(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid_scalar(-800.0) >= 0.0 && sigmoid_scalar(800.0) <= 1.0);
    }

    #[test]
    fn tanh_derivative_at_zero_matches_finite_difference() {
        let x = Matrix::zeros(1, 1);
        let mut act = Activation::new(ActivationKind::Tanh);
        assert_eq!(act.forward(&x).get(0, 0), 0.0);
        let analytic = act.backward(&Matrix::filled(1, 1, 1.0)).unwrap().get(0, 0);
        let eps = 1e-5;
        let numeric = ((eps as f64).tanh() - (-eps as f64).tanh()) / (2.0 * eps);
        assert_eq!(analytic, 1.0);
        assert!((analytic - numeric).abs() < 1e-9);
    }

    #[test]
    fn activation_gradients_match_finite_differences() {
        let xs = [-2.0, -0.3, 0.0, 0.7, 1.9];
        for kind in [ActivationKind::Sigmoid, ActivationKind::Tanh] {
            for &x0 in &xs {
                let mut act = Activation::new(kind);
                act.forward(&Matrix::filled(1, 1, x0));
                let g = act.backward(&Matrix::filled(1, 1, 1.0)).unwrap().get(0, 0);
                let f = |x: f64| match kind {
                    ActivationKind::Sigmoid => sigmoid_scalar(x),
                    ActivationKind::Tanh => x.tanh(),
                };
                let eps = 1e-5;
                let n = (f(x0 + eps) - f(x0 - eps)) / (2.0 * eps);
                assert!((g - n).abs() / g.abs().max(1e-12) < 1e-8, "{kind:?} at {x0}");
            }
        }
    }

    #[test]
    fn softmax_known_rows() {
        let s = softmax_rows(&Matrix::from_rows(&[&[1.0, 1.0, 1.0]]).unwrap());
        for &v in s.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let s = softmax_rows(&Matrix::from_rows(&[&[0.0, 2f64.ln()]]).unwrap());
        assert!((s.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        let s = softmax_rows(&Matrix::from_rows(&[&[42.0]]).unwrap());
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let x = Matrix::from_rows(&[&[0.3, -1.2, 2.0], &[0.0, 0.5, -0.5]]).unwrap();
        let w = Matrix::from_rows(&[&[1.0, -2.0, 0.5], &[0.3, 0.7, -1.1]]).unwrap();
        let loss = |x: &Matrix| softmax_rows(x).hadamard(&w).unwrap().sum();
        let g = softmax_rows_backward(&softmax_rows(&x), &w).unwrap();
        let eps = 1e-5;
        for i in 0..x.as_slice().len() {
            let mut p = x.clone();
            p.as_mut_slice()[i] += eps;
            let mut m = x.clone();
            m.as_mut_slice()[i] -= eps;
            let n = (loss(&p) - loss(&m)) / (2.0 * eps);
            assert!((n - g.as_slice()[i]).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn softmax_rows_are_distributions(v in prop::collection::vec(-50.0f64..50.0, 1..24)) {
            let x = Matrix::from_vec(1, v.len(), v).unwrap();
            let s = softmax_rows(&x);
            prop_assert!((s.sum() - 1.0).abs() < 1e-9);
            prop_assert!(s.as_slice().iter().all(|&p| (0.0..=1.0).contains(&p)));
        }

        #[test]
        fn softmax_is_shift_invariant(
            v in prop::collection::vec(-20.0f64..20.0, 1..16),
            c in -100.0f64..100.0,
        ) {
            let x = Matrix::from_vec(1, v.len(), v).unwrap();
            let shifted = x.map(|a| a + c);
            prop_assert!(softmax_rows(&x).max_abs_diff(&softmax_rows(&shifted)) < 1e-12);
        }
    }
}
