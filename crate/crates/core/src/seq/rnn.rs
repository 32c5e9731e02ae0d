use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{fan_in_bound, sigmoid, sigmoid_backward, HasParams, Matrix, Parameter};

/// Elman cell: `h_t = σ(x_t·w_xh + h_{t-1}·w_hh + b_h)` with a linear
/// read-out `y_t = h_t·w_hy + b_y`.
#[derive(Clone, Debug)]
pub struct RnnCellParams {
    pub w_xh: Parameter,
    pub w_hh: Parameter,
    pub b_h: Parameter,
    pub w_hy: Parameter,
    pub b_y: Parameter,
}

impl RnnCellParams {
    pub fn new(name: &str, d_in: usize, d_h: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        let bh = fan_in_bound(d_in + d_h);
        let by = fan_in_bound(d_h);
        RnnCellParams {
            w_xh: Parameter::uniform(format!("{name}.w_xh"), d_in, d_h, bh, rng),
            w_hh: Parameter::uniform(format!("{name}.w_hh"), d_h, d_h, bh, rng),
            b_h: Parameter::uniform(format!("{name}.b_h"), 1, d_h, bh, rng),
            w_hy: Parameter::uniform(format!("{name}.w_hy"), d_h, d_out, by, rng),
            b_y: Parameter::uniform(format!("{name}.b_y"), 1, d_out, by, rng),
        }
    }

    pub fn zeros(name: &str, d_in: usize, d_h: usize, d_out: usize) -> Self {
        RnnCellParams {
            w_xh: Parameter::new(format!("{name}.w_xh"), Matrix::zeros(d_in, d_h)),
            w_hh: Parameter::new(format!("{name}.w_hh"), Matrix::zeros(d_h, d_h)),
            b_h: Parameter::new(format!("{name}.b_h"), Matrix::zeros(1, d_h)),
            w_hy: Parameter::new(format!("{name}.w_hy"), Matrix::zeros(d_h, d_out)),
            b_y: Parameter::new(format!("{name}.b_y"), Matrix::zeros(1, d_out)),
        }
    }
}

impl HasParams for RnnCellParams {
    fn params(&self) -> Vec<&Parameter> {
        vec![&self.w_xh, &self.w_hh, &self.b_h, &self.w_hy, &self.b_y]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.w_xh,
            &mut self.w_hh,
            &mut self.b_h,
            &mut self.w_hy,
            &mut self.b_y,
        ]
    }
}

pub fn rnn_step(x_t: &Matrix, h_prev: &Matrix, p: &RnnCellParams) -> Result<(Matrix, Matrix)> {
    if x_t.rows() != 1 || h_prev.rows() != 1 {
        return Err(Error::dim("rnn_step", x_t.shape(), h_prev.shape()));
    }
    if h_prev.cols() != p.w_hh.value.rows() {
        return Err(Error::dim("rnn_step", h_prev.shape(), p.w_hh.value.shape()));
    }
    let pre = x_t
        .matmul(&p.w_xh.value)?
        .add(&h_prev.matmul(&p.w_hh.value)?)?
        .add(&p.b_h.value)?;
    let h = sigmoid(&pre);
    let y = h.matmul(&p.w_hy.value)?.add(&p.b_y.value)?;
    Ok((h, y))
}

/// Unrolled RNN returning every `y_t`, with BPTT.
#[derive(Clone, Debug)]
pub struct Rnn {
    pub params: RnnCellParams,
    xs: Vec<Matrix>,
    hs: Vec<Matrix>,
}

impl Rnn {
    pub fn from_params(params: RnnCellParams) -> Self {
        Rnn {
            params,
            xs: Vec::new(),
            hs: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        if x.rows() == 0 {
            return Err(Error::EmptySequence);
        }
        let d_h = self.params.w_hh.value.rows();
        let d_out = self.params.w_hy.value.cols();
        let mut h = Matrix::zeros(1, d_h);
        let mut y = Matrix::zeros(x.rows(), d_out);
        self.xs.clear();
        self.hs = vec![h.clone()];
        for t in 0..x.rows() {
            let xt = Matrix::row_vector(x.row(t))?;
            let (h_next, y_t) = rnn_step(&xt, &h, &self.params)?;
            y.row_mut(t).copy_from_slice(y_t.as_slice());
            self.xs.push(xt);
            self.hs.push(h_next.clone());
            h = h_next;
        }
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Matrix) -> Result<Matrix> {
        let len = self.xs.len();
        if len == 0 {
            return Err(Error::State("rnn backward before forward".into()));
        }
        let d_h = self.params.w_hh.value.rows();
        let mut dx = Matrix::zeros(len, self.params.w_xh.value.rows());
        let mut dh_next = Matrix::zeros(1, d_h);
        for t in (0..len).rev() {
            let dyt = Matrix::row_vector(dy.row(t))?;
            let h = &self.hs[t + 1];
            self.hs[t + 1].accumulate_tn(&dyt, &mut self.params.w_hy.grad);
            self.params.b_y.grad.add_assign(&dyt)?;
            let dh = dyt.matmul_nt(&self.params.w_hy.value)?.add(&dh_next)?;
            let dpre = sigmoid_backward(h, &dh)?;
            self.xs[t].accumulate_tn(&dpre, &mut self.params.w_xh.grad);
            self.hs[t].accumulate_tn(&dpre, &mut self.params.w_hh.grad);
            self.params.b_h.grad.add_assign(&dpre)?;
            dx.row_mut(t)
                .copy_from_slice(dpre.matmul_nt(&self.params.w_xh.value)?.as_slice());
            dh_next = dpre.matmul_nt(&self.params.w_hh.value)?;
        }
        Ok(dx)
    }
}

impl HasParams for Rnn {
    fn params(&self) -> Vec<&Parameter> {
        self.params.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.params.params_mut()
    }
}
