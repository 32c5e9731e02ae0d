use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{dot, fan_in_bound, fastmath, sigmoid_scalar, HasParams, Matrix, Parameter};

/// Gate order used by every per-gate array in this module.
const INPUT: usize = 0;
const FORGET: usize = 1;
const CANDIDATE: usize = 2;
const OUTPUT: usize = 3;

/// Gate weights acting on the concatenation `[h_{t-1}; x_t]` (hidden part
/// first) and the matching biases, ordered input, forget, candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCellParams {
    pub w: [Parameter; 4],
    pub b: [Parameter; 4],
}

impl LstmCellParams {
    /// Uniform `±1/√(d_h+d_in)` weights; the forget bias starts at +1.
    pub fn new(name: &str, d_in: usize, d_h: usize, rng: &mut impl Rng) -> Self {
        let fan_in = d_h + d_in;
        let bound = fan_in_bound(fan_in);
        let gate = ["i", "f", "c", "o"];
        let w = gate.map(|g| Parameter::uniform(format!("{name}.w_{g}"), fan_in, d_h, bound, rng));
        let mut b = gate.map(|g| Parameter::uniform(format!("{name}.b_{g}"), 1, d_h, bound, rng));
        b[FORGET].value.fill(1.0);
        LstmCellParams { w, b }
    }

    pub fn zeros(name: &str, d_in: usize, d_h: usize) -> Self {
        let gate = ["i", "f", "c", "o"];
        LstmCellParams {
            w: gate.map(|g| Parameter::new(format!("{name}.w_{g}"), Matrix::zeros(d_h + d_in, d_h))),
            b: gate.map(|g| Parameter::new(format!("{name}.b_{g}"), Matrix::zeros(1, d_h))),
        }
    }

    pub fn d_h(&self) -> usize {
        self.w[0].value.cols()
    }

    pub fn d_in(&self) -> usize {
        self.w[0].value.rows() - self.d_h()
    }

    fn validate(&self) -> Result<()> {
        let ws = self.w[0].value.shape();
        let bs = self.b[0].value.shape();
        for g in 1..4 {
            if self.w[g].value.shape() != ws {
                return Err(Error::dim("lstm gate weights", ws, self.w[g].value.shape()));
            }
            if self.b[g].value.shape() != bs {
                return Err(Error::dim("lstm gate biases", bs, self.b[g].value.shape()));
            }
        }
        if bs != (1, ws.1) || ws.0 <= ws.1 {
            return Err(Error::dim("lstm cell", ws, bs));
        }
        Ok(())
    }
}

impl HasParams for LstmCellParams {
    fn params(&self) -> Vec<&Parameter> {
        self.w.iter().chain(self.b.iter()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.w.iter_mut().chain(self.b.iter_mut()).collect()
    }
}

/// Recurrent `(h, c)` state, each `1×d_h`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Matrix,
    pub c: Matrix,
}

impl LstmState {
    pub fn zeros(d_h: usize) -> Self {
        LstmState {
            h: Matrix::zeros(1, d_h),
            c: Matrix::zeros(1, d_h),
        }
    }
}

/// Per-step activations kept for backpropagation through time.
#[derive(Clone, Debug)]
struct StepCache {
    z: Vec<f64>,
    gates: [Vec<f64>; 4],
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    input_open: bool,
}

/// One step of the cell on raw slices. Writes the new state into
/// `h_out`/`c_out` and returns the cache.
fn step_raw(
    p: &LstmCellParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    input_open: bool,
    h_out: &mut [f64],
    c_out: &mut [f64],
) -> StepCache {
    let d_h = p.d_h();
    let mut z = Vec::with_capacity(d_h + x.len());
    z.extend_from_slice(h_prev);
    z.extend_from_slice(x);

    let mut gates: [Vec<f64>; 4] = std::array::from_fn(|g| p.b[g].value.as_slice().to_vec());
    for (g, pre) in gates.iter_mut().enumerate() {
        let w = p.w[g].value.as_slice();
        for (k, &zk) in z.iter().enumerate() {
            if zk == 0.0 {
                continue;
            }
            let row = &w[k * d_h..(k + 1) * d_h];
            for (a, &wk) in pre.iter_mut().zip(row) {
                *a += zk * wk;
            }
        }
    }
    for (g, pre) in gates.iter_mut().enumerate() {
        if g == CANDIDATE {
            pre.iter_mut().for_each(|v| *v = fastmath::tanh(*v));
        } else {
            pre.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
        }
    }
    if !input_open {
        gates[INPUT].iter_mut().for_each(|v| *v = 0.0);
    }

    let mut tanh_c = vec![0.0; d_h];
    for j in 0..d_h {
        let c = gates[FORGET][j] * c_prev[j] + gates[INPUT][j] * gates[CANDIDATE][j];
        c_out[j] = c;
        tanh_c[j] = fastmath::tanh(c);
        h_out[j] = gates[OUTPUT][j] * tanh_c[j];
    }
    StepCache {
        z,
        gates,
        c_prev: c_prev.to_vec(),
        tanh_c,
        input_open,
    }
}

fn check_step_shapes(x_t: &Matrix, s: &LstmState, p: &LstmCellParams) -> Result<()> {
    p.validate()?;
    if x_t.shape() != (1, p.d_in()) {
        return Err(Error::dim("lstm_step input", x_t.shape(), (1, p.d_in())));
    }
    if s.h.shape() != (1, p.d_h()) || s.c.shape() != (1, p.d_h()) {
        return Err(Error::dim("lstm_step state", s.h.shape(), (1, p.d_h())));
    }
    Ok(())
}

/// A single cell update: returns the new state and `h_t`.
pub fn lstm_step(x_t: &Matrix, s: &LstmState, p: &LstmCellParams) -> Result<(LstmState, Matrix)> {
    check_step_shapes(x_t, s, p)?;
    let d_h = p.d_h();
    let mut next = LstmState::zeros(d_h);
    step_raw(
        p,
        x_t.as_slice(),
        s.h.as_slice(),
        s.c.as_slice(),
        true,
        next.h.as_mut_slice(),
        next.c.as_mut_slice(),
    );
    let h = next.h.clone();
    Ok((next, h))
}

/// Unrolled LSTM over a sequence with full backpropagation through time.
#[derive(Clone, Debug)]
pub struct Lstm {
    pub params: LstmCellParams,
    cache: Vec<StepCache>,
    steps: u64,
}

impl Lstm {
    pub fn new(name: &str, d_in: usize, d_h: usize, rng: &mut impl Rng) -> Self {
        Lstm::from_params(LstmCellParams::new(name, d_in, d_h, rng))
    }

    pub fn from_params(params: LstmCellParams) -> Self {
        Lstm {
            params,
            cache: Vec::new(),
            steps: 0,
        }
    }

    pub fn d_in(&self) -> usize {
        self.params.d_in()
    }

    pub fn d_h(&self) -> usize {
        self.params.d_h()
    }

    /// Number of cell steps executed since construction or the last reset.
    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn reset_step_count(&mut self) {
        self.steps = 0;
    }

    /// Runs the cell over every row of `x`; row `t` of the result is `h_t`.
    pub fn forward(&mut self, x: &Matrix, s0: &LstmState) -> Result<Matrix> {
        self.run(x, s0, None)
    }

    /// Like [`Lstm::forward`], but rows with `input_open[t] == false` have
    /// their input gate forced shut, so the cell only forgets there.
    pub fn forward_gated(&mut self, x: &Matrix, s0: &LstmState, input_open: &[bool]) -> Result<Matrix> {
        if input_open.len() != x.rows() {
            return Err(Error::dim("lstm gate mask", x.shape(), (input_open.len(), 1)));
        }
        self.run(x, s0, Some(input_open))
    }

    fn run(&mut self, x: &Matrix, s0: &LstmState, input_open: Option<&[bool]>) -> Result<Matrix> {
        if x.rows() == 0 {
            return Err(Error::EmptySequence);
        }
        check_step_shapes(&Matrix::zeros(1, x.cols()), s0, &self.params)
            .map_err(|_| Error::dim("lstm_sequence", x.shape(), (x.rows(), self.d_in())))?;
        let d_h = self.d_h();
        let mut out = Matrix::zeros(x.rows(), d_h);
        let mut h = s0.h.as_slice().to_vec();
        let mut c = s0.c.as_slice().to_vec();
        let mut c_next = vec![0.0; d_h];
        self.cache.clear();
        for t in 0..x.rows() {
            let open = input_open.map_or(true, |m| m[t]);
            let cache = step_raw(&self.params, x.row(t), &h, &c, open, out.row_mut(t), &mut c_next);
            h.copy_from_slice(out.row(t));
            std::mem::swap(&mut c, &mut c_next);
            self.cache.push(cache);
            self.steps += 1;
        }
        Ok(out)
    }

    /// Backpropagation through time. `dh` holds the upstream gradient for
    /// every output row; returns the gradient with respect to the inputs.
    pub fn backward(&mut self, dh: &Matrix) -> Result<Matrix> {
        if self.cache.is_empty() {
            return Err(Error::State("lstm backward before forward".into()));
        }
        let (len, d_h, d_in) = (self.cache.len(), self.d_h(), self.d_in());
        if dh.shape() != (len, d_h) {
            return Err(Error::dim("lstm_backward", dh.shape(), (len, d_h)));
        }
        let mut dx = Matrix::zeros(len, d_in);
        let mut dh_next = vec![0.0; d_h];
        let mut dc_next = vec![0.0; d_h];
        let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; d_h]);
        let mut dz = vec![0.0; d_h + d_in];

        for t in (0..len).rev() {
            let sc = &self.cache[t];
            let [i, f, g, o] = &sc.gates;
            for j in 0..d_h {
                let dht = dh.get(t, j) + dh_next[j];
                let d_o = dht * sc.tanh_c[j];
                let dc = dc_next[j] + dht * o[j] * (1.0 - sc.tanh_c[j] * sc.tanh_c[j]);
                da[INPUT][j] = if sc.input_open {
                    dc * g[j] * i[j] * (1.0 - i[j])
                } else {
                    0.0
                };
                da[FORGET][j] = dc * sc.c_prev[j] * f[j] * (1.0 - f[j]);
                da[CANDIDATE][j] = dc * i[j] * (1.0 - g[j] * g[j]);
                da[OUTPUT][j] = d_o * o[j] * (1.0 - o[j]);
                dc_next[j] = dc * f[j];
            }

            dz.iter_mut().for_each(|v| *v = 0.0);
            for gate in 0..4 {
                let dag = &da[gate];
                let w = self.params.w[gate].value.as_slice();
                let wg = self.params.w[gate].grad.as_mut_slice();
                for (k, &zk) in sc.z.iter().enumerate() {
                    if zk != 0.0 {
                        for (gw, &a) in wg[k * d_h..(k + 1) * d_h].iter_mut().zip(dag) {
                            *gw += zk * a;
                        }
                    }
                    dz[k] += dot(&w[k * d_h..(k + 1) * d_h], dag);
                }
                for (b, &a) in self.params.b[gate].grad.as_mut_slice().iter_mut().zip(dag) {
                    *b += a;
                }
            }
            dh_next.copy_from_slice(&dz[..d_h]);
            dx.row_mut(t).copy_from_slice(&dz[d_h..]);
        }
        Ok(dx)
    }
}

impl HasParams for Lstm {
    fn params(&self) -> Vec<&Parameter> {
        self.params.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.params.params_mut()
    }
}
