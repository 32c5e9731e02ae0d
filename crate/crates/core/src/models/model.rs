use crate::error::{Error, Result};
use crate::nn::{layer_rng, tanh_act, tanh_backward, HasParams, Linear, Matrix, Parameter};
use crate::select::{
    selection_gradient_mask_check, top_k_select_anchored, RoutedSequence, SelectRouter,
    SelectionResult,
};
use crate::seq::{received_attention, AttentionParams, Lstm, LstmState, PositionalEncoding};

use super::{Arch, ModelConfig};

/// Input layer shared by the recurrent architectures: `tanh(xW + b)`.
#[derive(Clone, Debug)]
struct InputLayer {
    fc: Linear,
    out: Option<Matrix>,
}

impl InputLayer {
    fn new(cfg: &ModelConfig) -> Self {
        let mut rng = layer_rng(cfg.seed, "input");
        InputLayer {
            fc: Linear::new("input", cfg.n_input_channels, cfg.hidden_dim, &mut rng),
            out: None,
        }
    }

    fn forward(&mut self, window: &Matrix) -> Result<Matrix> {
        let u = tanh_act(&self.fc.forward(window)?);
        self.out = Some(u.clone());
        Ok(u)
    }

    fn backward(&mut self, du: &Matrix) -> Result<()> {
        let u = self
            .out
            .as_ref()
            .ok_or_else(|| Error::State("backward before forward".into()))?;
        self.fc.backward(&tanh_backward(u, du)?)?;
        Ok(())
    }
}

/// Output layer reading the final row: `row·w + b`.
fn output_layer(cfg: &ModelConfig, d_in: usize) -> Linear {
    let mut rng = layer_rng(cfg.seed, "output");
    Linear::new("output", d_in, 1, &mut rng)
}

fn last_row(m: &Matrix) -> Result<Matrix> {
    Matrix::row_vector(m.row(m.rows() - 1))
}

/// Input FC → stacked LSTM → positional encoding → output FC on the final row.
#[derive(Clone, Debug)]
struct RecurrentNet {
    input: InputLayer,
    layers: Vec<Lstm>,
    pe: PositionalEncoding,
    output: Linear,
    len: usize,
}

impl RecurrentNet {
    fn new(cfg: &ModelConfig, n_layers: usize) -> Self {
        let h = cfg.hidden_dim;
        let layers = (0..n_layers)
            .map(|i| {
                let name = format!("lstm{i}");
                Lstm::new(&name, h, h, &mut layer_rng(cfg.seed, &name))
            })
            .collect();
        RecurrentNet {
            input: InputLayer::new(cfg),
            layers,
            pe: PositionalEncoding::new(cfg.window_len, h),
            output: output_layer(cfg, h),
            len: cfg.window_len,
        }
    }

    fn forward(&mut self, window: &Matrix) -> Result<f64> {
        let mut h = self.input.forward(window)?;
        let d_h = h.cols();
        for lstm in &mut self.layers {
            h = lstm.forward(&h, &LstmState::zeros(d_h))?;
        }
        let routed = self.pe.add_in_order(&h)?;
        Ok(self.output.forward(&last_row(&routed)?)?.get(0, 0))
    }

    fn backward(&mut self, dloss: f64) -> Result<()> {
        let d_last = self.output.backward(&Matrix::filled(1, 1, dloss))?;
        let mut d = Matrix::zeros(self.len, d_last.cols());
        d.row_mut(self.len - 1).copy_from_slice(d_last.as_slice());
        for lstm in self.layers.iter_mut().rev() {
            d = lstm.backward(&d)?;
        }
        self.input.backward(&d)
    }
}

/// Input FC → attention scoring and Top-K selection → routed LSTM →
/// output FC on the final row.
///
/// The scoring branch projects the input-FC rows to the attention width and
/// only produces attention matrices; the discrete selection passes no
/// gradient back into it.
#[derive(Clone, Debug)]
struct EsaNet {
    input: InputLayer,
    score_proj: Linear,
    attention: AttentionParams,
    router: SelectRouter,
    select: crate::select::SelectConfig,
    output: Linear,
    len: usize,
}

impl EsaNet {
    fn new(cfg: &ModelConfig) -> Result<Self> {
        let h = cfg.hidden_dim;
        let d_att = cfg.attention_dim();
        let score_proj = Linear::new("score_proj", h, d_att, &mut layer_rng(cfg.seed, "score_proj"));
        let attention =
            AttentionParams::new("attention", d_att, cfg.n_heads, &mut layer_rng(cfg.seed, "attention"))?;
        let lstm = Lstm::new("lstm0", h, h, &mut layer_rng(cfg.seed, "lstm0"));
        let router = SelectRouter::new(
            lstm,
            None,
            PositionalEncoding::new(cfg.window_len, h),
            cfg.select.mode,
        )?;
        Ok(EsaNet {
            input: InputLayer::new(cfg),
            score_proj,
            attention,
            router,
            select: cfg.select,
            output: output_layer(cfg, h),
            len: cfg.window_len,
        })
    }

    /// Top-K by received attention. The final row, whose target is being
    /// predicted, is always among the K routed rows.
    fn select(&self, u: &Matrix) -> Result<SelectionResult> {
        let s = self.score_proj.apply(u)?;
        let scores = received_attention(&s, &self.attention)?;
        Ok(top_k_select_anchored(&scores, &self.select, self.len - 1))
    }

    fn forward(&mut self, window: &Matrix) -> Result<f64> {
        let u = self.input.forward(window)?;
        let sel = self.select(&u)?;
        let routed = self.router.route_forward(&u, &sel)?;
        Ok(self.output.forward(&last_row(&routed)?)?.get(0, 0))
    }

    fn backward(&mut self, dloss: f64) -> Result<()> {
        let d_last = self.output.backward(&Matrix::filled(1, 1, dloss))?;
        let mut d = Matrix::zeros(self.len, d_last.cols());
        d.row_mut(self.len - 1).copy_from_slice(d_last.as_slice());
        let du = self.router.route_backward(&d)?;
        self.input.backward(&du)
    }
}

/// Flattened window (row-major) → `depth` tanh layers → linear output.
#[derive(Clone, Debug)]
struct FcnnNet {
    hidden: Vec<Linear>,
    outs: Vec<Matrix>,
    output: Linear,
}

impl FcnnNet {
    fn new(cfg: &ModelConfig) -> Self {
        let mut d_in = cfg.window_len * cfg.n_input_channels;
        let hidden = (0..cfg.fcnn_depth)
            .map(|i| {
                let name = format!("fc{i}");
                let l = Linear::new(&name, d_in, cfg.hidden_dim, &mut layer_rng(cfg.seed, &name));
                d_in = cfg.hidden_dim;
                l
            })
            .collect();
        FcnnNet {
            hidden,
            outs: Vec::new(),
            output: output_layer(cfg, cfg.hidden_dim),
        }
    }

    fn forward(&mut self, window: &Matrix) -> Result<f64> {
        let mut a = Matrix::row_vector(window.as_slice())?;
        self.outs.clear();
        for layer in &mut self.hidden {
            a = tanh_act(&layer.forward(&a)?);
            self.outs.push(a.clone());
        }
        Ok(self.output.forward(&a)?.get(0, 0))
    }

    fn backward(&mut self, dloss: f64) -> Result<()> {
        if self.outs.len() != self.hidden.len() {
            return Err(Error::State("backward before forward".into()));
        }
        let mut d = self.output.backward(&Matrix::filled(1, 1, dloss))?;
        for (layer, out) in self.hidden.iter_mut().zip(&self.outs).rev() {
            d = layer.backward(&tanh_backward(out, &d)?)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Net {
    Recurrent(RecurrentNet),
    Esa(EsaNet),
    Fcnn(FcnnNet),
}

/// A many-to-one regressor: one window in, one scalar out.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    net: Net,
    forwarded: bool,
}

/// Builds a model with deterministic, seed-derived initial parameters.
/// Layers with the same role share names across architectures (`input`,
/// `lstm0`, `output`) and therefore start from identical values.
pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    Model::new(cfg.clone())
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let net = match config.arch {
            Arch::Lstm => Net::Recurrent(RecurrentNet::new(&config, 1)),
            Arch::CascadedLstm => Net::Recurrent(RecurrentNet::new(&config, config.lstm_layers)),
            Arch::EsaLstm => Net::Esa(EsaNet::new(&config)?),
            Arch::Fcnn => Net::Fcnn(FcnnNet::new(&config)),
        };
        Ok(Model {
            config,
            net,
            forwarded: false,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn check_window(&self, window: &Matrix) -> Result<()> {
        let want = (self.config.window_len, self.config.n_input_channels);
        if window.shape() != want {
            return Err(Error::dim("model_forward", window.shape(), want));
        }
        if !window.is_finite() {
            return Err(Error::NonFinite("model input window".into()));
        }
        Ok(())
    }

    /// Prediction for the window's final sample; caches activations for
    /// [`Model::backward`].
    pub fn forward(&mut self, window: &Matrix) -> Result<f64> {
        self.check_window(window)?;
        let y = match &mut self.net {
            Net::Recurrent(n) => n.forward(window),
            Net::Esa(n) => n.forward(window),
            Net::Fcnn(n) => n.forward(window),
        }?;
        self.forwarded = true;
        Ok(y)
    }

    /// Accumulates parameter gradients for `∂loss/∂prediction = dloss`.
    pub fn backward(&mut self, dloss: f64) -> Result<()> {
        if !self.forwarded {
            return Err(Error::State("model backward before forward".into()));
        }
        match &mut self.net {
            Net::Recurrent(n) => n.backward(dloss),
            Net::Esa(n) => n.backward(dloss),
            Net::Fcnn(n) => n.backward(dloss),
        }
    }

    /// The two-FC path that skips every recurrent layer: input FC, the
    /// final row's positional encoding, output FC. Recurrent models only.
    pub fn fc_only_predict(&self, window: &Matrix) -> Result<f64> {
        self.check_window(window)?;
        let (input, pe, output) = match &self.net {
            Net::Recurrent(n) => (&n.input, &n.pe, &n.output),
            Net::Esa(n) => (&n.input, n.router.positional_encoding(), &n.output),
            Net::Fcnn(_) => {
                return Err(Error::Config("fcnn has no FC-only path".into()));
            }
        };
        let u = tanh_act(&input.fc.apply(window)?);
        let routed = pe.add_in_order(&u)?;
        Ok(output.apply(&last_row(&routed)?)?.get(0, 0))
    }

    /// The Top-K selection the model would use for `window` (ESA only).
    pub fn selection(&mut self, window: &Matrix) -> Result<Option<SelectionResult>> {
        self.check_window(window)?;
        match &mut self.net {
            Net::Esa(n) => {
                let u = n.input.forward(window)?;
                Ok(Some(n.select(&u)?))
            }
            _ => Ok(None),
        }
    }

    /// Runs [`selection_gradient_mask_check`] on the model's own routing for
    /// each window. Always true for non-ESA models, which do no routing.
    pub fn selection_gradient_mask_check(&mut self, windows: &[Matrix]) -> Result<bool> {
        let mut batch = Vec::with_capacity(windows.len());
        for w in windows {
            self.check_window(w)?;
            if let Net::Esa(n) = &mut self.net {
                let u = tanh_act(&n.input.fc.apply(w)?);
                let sel = n.select(&u)?;
                batch.push((u, sel));
            }
        }
        match &mut self.net {
            Net::Esa(n) => {
                let ok = selection_gradient_mask_check(&mut n.router, &batch)?;
                n.router.zero_lstm_grads();
                Ok(ok)
            }
            _ => Ok(true),
        }
    }

    /// Total LSTM cell steps executed so far.
    pub fn lstm_steps(&self) -> u64 {
        match &self.net {
            Net::Recurrent(n) => n.layers.iter().map(Lstm::step_count).sum(),
            Net::Esa(n) => n.router.lstm.step_count(),
            Net::Fcnn(_) => 0,
        }
    }

    pub fn reset_lstm_steps(&mut self) {
        match &mut self.net {
            Net::Recurrent(n) => n.layers.iter_mut().for_each(Lstm::reset_step_count),
            Net::Esa(n) => n.router.lstm.reset_step_count(),
            Net::Fcnn(_) => {}
        }
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.params().into_iter().find(|p| p.name == name)
    }

    /// Flat copy of every parameter value, in parameter order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|p| p.value.as_slice().iter().copied())
            .collect()
    }
}

impl HasParams for Model {
    fn params(&self) -> Vec<&Parameter> {
        match &self.net {
            Net::Recurrent(n) => {
                let mut v = n.input.fc.params();
                for l in &n.layers {
                    v.extend(l.params());
                }
                v.extend(n.output.params());
                v
            }
            Net::Esa(n) => {
                let mut v = n.input.fc.params();
                v.extend(n.score_proj.params());
                v.extend(n.attention.params());
                v.extend(n.router.params());
                v.extend(n.output.params());
                v
            }
            Net::Fcnn(n) => {
                let mut v: Vec<&Parameter> = n.hidden.iter().flat_map(|l| l.params()).collect();
                v.extend(n.output.params());
                v
            }
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        match &mut self.net {
            Net::Recurrent(n) => {
                let mut v = n.input.fc.params_mut();
                for l in &mut n.layers {
                    v.extend(l.params_mut());
                }
                v.extend(n.output.params_mut());
                v
            }
            Net::Esa(n) => {
                let mut v = n.input.fc.params_mut();
                v.extend(n.score_proj.params_mut());
                v.extend(n.attention.params_mut());
                v.extend(n.router.params_mut());
                v.extend(n.output.params_mut());
                v
            }
            Net::Fcnn(n) => {
                let mut v: Vec<&mut Parameter> =
                    n.hidden.iter_mut().flat_map(|l| l.params_mut()).collect();
                v.extend(n.output.params_mut());
                v
            }
        }
    }
}
