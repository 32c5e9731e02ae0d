//! Attention-driven Top-K routing.
//!
//! Positions of a window are ranked by the attention they receive, averaged
//! over heads and query rows. Only the K best positions run through the LSTM;
//! the rest bypass it and rejoin the sequence in original order, after which
//! positional encodings for the original indices are added.

use crate::error::{Error, Result};
use crate::nn::{HasParams, Linear, Matrix, Parameter};
use crate::seq::{Lstm, LstmState, PositionalEncoding};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteMode {
    /// Non-selected rows skip the LSTM and are passed through unchanged.
    Bypass,
    /// The LSTM sees every row, but its input gate is shut on non-selected rows.
    Gate,
}

impl RouteMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RouteMode::Bypass => "bypass",
            RouteMode::Gate => "gate",
        }
    }
}

impl std::str::FromStr for RouteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bypass" => Ok(RouteMode::Bypass),
            "gate" => Ok(RouteMode::Gate),
            other => Err(Error::Config(format!("unknown route mode `{other}`"))),
        }
    }
}

/// Selection ratio and routing mode. Ties are always broken toward the
/// lower original index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectConfig {
    pub ratio: f64,
    pub mode: RouteMode,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            ratio: 0.3,
            mode: RouteMode::Bypass,
        }
    }
}

impl SelectConfig {
    pub fn new(ratio: f64, mode: RouteMode) -> Result<Self> {
        let cfg = SelectConfig { ratio, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::Config(format!(
                "selection ratio {} outside [0, 1]",
                self.ratio
            )));
        }
        Ok(())
    }

    /// `0` when the ratio is zero, otherwise `max(1, round(ratio·len))`.
    pub fn k_for(&self, len: usize) -> usize {
        if self.ratio <= 0.0 {
            0
        } else {
            ((self.ratio * len as f64).round() as usize).clamp(1, len)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub scores: Vec<f64>,
    /// Ascending, distinct, all `< scores.len()`.
    pub selected: Vec<usize>,
    pub k: usize,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Per-position membership flags.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &i in &self.selected {
            mask[i] = true;
        }
        mask
    }

    fn validate(&self, len: usize) -> Result<()> {
        let ascending = self.selected.windows(2).all(|w| w[0] < w[1]);
        if self.len() != len
            || self.k != self.selected.len()
            || !ascending
            || self.selected.last().is_some_and(|&i| i >= len)
        {
            return Err(Error::State(format!(
                "selection for {} positions (k = {}) does not fit a sequence of {len}",
                self.len(),
                self.k
            )));
        }
        Ok(())
    }
}

/// Attention received by each position: column means of every head's
/// matrix, averaged over heads.
pub fn attention_scores(alpha_heads: &[Matrix]) -> Result<Vec<f64>> {
    let first = alpha_heads
        .first()
        .ok_or_else(|| Error::State("no attention heads to score".into()))?;
    let len = first.cols();
    let mut scores = vec![0.0; len];
    for alpha in alpha_heads {
        if alpha.shape() != (len, len) {
            return Err(Error::dim("attention_scores", alpha.shape(), (len, len)));
        }
        for r in 0..len {
            for (s, &a) in scores.iter_mut().zip(alpha.row(r)) {
                *s += a;
            }
        }
    }
    let norm = 1.0 / (alpha_heads.len() * len) as f64;
    scores.iter_mut().for_each(|s| *s *= norm);
    Ok(scores)
}

/// The K highest-scoring positions, ties toward the lower index, returned
/// in ascending index order. Sort-based, `O(L log L)`.
pub fn top_k_select(scores: &[f64], cfg: &SelectConfig) -> SelectionResult {
    let k = cfg.k_for(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected = order[..k].to_vec();
    selected.sort_unstable();
    SelectionResult {
        scores: scores.to_vec(),
        selected,
        k,
    }
}

/// Top-K that always keeps `anchor` once K ≥ 1: the anchor plus the K−1
/// highest-scoring other positions, ties toward the lower index, ascending.
pub fn top_k_select_anchored(scores: &[f64], cfg: &SelectConfig, anchor: usize) -> SelectionResult {
    let k = cfg.k_for(scores.len());
    if k == 0 || anchor >= scores.len() {
        return top_k_select(scores, cfg);
    }
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| i != anchor).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected = order[..k - 1].to_vec();
    selected.push(anchor);
    selected.sort_unstable();
    SelectionResult {
        scores: scores.to_vec(),
        selected,
        k,
    }
}

/// A layer that routes a sequence through an LSTM according to a selection.
pub trait RoutedSequence {
    fn route_forward(&mut self, x: &Matrix, sel: &SelectionResult) -> Result<Matrix>;
    fn route_backward(&mut self, d_out: &Matrix) -> Result<Matrix>;
    fn lstm_params(&self) -> Vec<&Parameter>;
    fn zero_lstm_grads(&mut self);
}

#[derive(Clone, Debug)]
struct RouteCache {
    len: usize,
    selected: Vec<usize>,
    ran_lstm: bool,
}

/// Selection-aware LSTM block. When the LSTM width differs from the row
/// width, `out_proj` maps hidden states back to the row width.
#[derive(Clone, Debug)]
pub struct SelectRouter {
    pub lstm: Lstm,
    pub out_proj: Option<Linear>,
    pe: PositionalEncoding,
    mode: RouteMode,
    cache: Option<RouteCache>,
}

impl SelectRouter {
    pub fn new(
        lstm: Lstm,
        out_proj: Option<Linear>,
        pe: PositionalEncoding,
        mode: RouteMode,
    ) -> Result<Self> {
        let d_model = pe.d_model();
        match &out_proj {
            Some(p) if p.d_in() != lstm.d_h() || p.d_out() != d_model => {
                return Err(Error::dim(
                    "router projection",
                    (p.d_in(), p.d_out()),
                    (lstm.d_h(), d_model),
                ));
            }
            None if lstm.d_h() != d_model => {
                return Err(Error::Config(format!(
                    "LSTM width {} differs from row width {d_model} and no projection was given",
                    lstm.d_h()
                )));
            }
            _ => {}
        }
        if lstm.d_in() != d_model {
            return Err(Error::dim("router lstm input", (1, lstm.d_in()), (1, d_model)));
        }
        Ok(SelectRouter {
            lstm,
            out_proj,
            pe,
            mode,
            cache: None,
        })
    }

    pub fn mode(&self) -> RouteMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: RouteMode) {
        self.mode = mode;
    }

    pub fn positional_encoding(&self) -> &PositionalEncoding {
        &self.pe
    }

    pub fn d_model(&self) -> usize {
        self.pe.d_model()
    }

    fn hidden_to_rows(&mut self, h: Matrix) -> Result<Matrix> {
        match &mut self.out_proj {
            Some(p) => p.forward(&h),
            None => Ok(h),
        }
    }

    fn rows_to_hidden(&mut self, d: Matrix) -> Result<Matrix> {
        match &mut self.out_proj {
            Some(p) => p.backward(&d),
            None => Ok(d),
        }
    }
}

impl RoutedSequence for SelectRouter {
    fn route_forward(&mut self, x: &Matrix, sel: &SelectionResult) -> Result<Matrix> {
        let len = x.rows();
        sel.validate(len)?;
        if x.cols() != self.d_model() {
            return Err(Error::dim("route_forward", x.shape(), (len, self.d_model())));
        }
        let d_h = self.lstm.d_h();
        let positions: Vec<usize> = (0..len).collect();
        let mut ran_lstm = false;
        let routed = match self.mode {
            RouteMode::Bypass => {
                let mut out = x.clone();
                if sel.k > 0 {
                    let compact = x.select_rows(&sel.selected)?;
                    let h = self.lstm.forward(&compact, &LstmState::zeros(d_h))?;
                    let h = self.hidden_to_rows(h)?;
                    for (r, &pos) in sel.selected.iter().enumerate() {
                        out.row_mut(pos).copy_from_slice(h.row(r));
                    }
                    ran_lstm = true;
                }
                out
            }
            RouteMode::Gate => {
                let h = self
                    .lstm
                    .forward_gated(x, &LstmState::zeros(d_h), &sel.mask())?;
                ran_lstm = true;
                self.hidden_to_rows(h)?
            }
        };
        self.cache = Some(RouteCache {
            len,
            selected: sel.selected.clone(),
            ran_lstm,
        });
        self.pe.add(&routed, &positions)
    }

    fn route_backward(&mut self, d_out: &Matrix) -> Result<Matrix> {
        let cache = self
            .cache
            .clone()
            .ok_or_else(|| Error::State("route backward before forward".into()))?;
        if d_out.shape() != (cache.len, self.d_model()) {
            return Err(Error::dim(
                "route_backward",
                d_out.shape(),
                (cache.len, self.d_model()),
            ));
        }
        match self.mode {
            RouteMode::Bypass => {
                let mut dx = d_out.clone();
                if cache.ran_lstm {
                    let d_sel = d_out.select_rows(&cache.selected)?;
                    if d_sel.as_slice().iter().all(|&v| v == 0.0) {
                        // nothing flows into the LSTM
                        for &pos in &cache.selected {
                            dx.row_mut(pos).fill(0.0);
                        }
                        return Ok(dx);
                    }
                    let dh = self.rows_to_hidden(d_sel)?;
                    let d_compact = self.lstm.backward(&dh)?;
                    for (r, &pos) in cache.selected.iter().enumerate() {
                        dx.row_mut(pos).copy_from_slice(d_compact.row(r));
                    }
                }
                Ok(dx)
            }
            RouteMode::Gate => {
                let dh = self.rows_to_hidden(d_out.clone())?;
                self.lstm.backward(&dh)
            }
        }
    }

    fn lstm_params(&self) -> Vec<&Parameter> {
        self.params()
    }

    fn zero_lstm_grads(&mut self) {
        self.zero_grad();
    }
}

impl HasParams for SelectRouter {
    fn params(&self) -> Vec<&Parameter> {
        let mut out = self.lstm.params();
        if let Some(p) = &self.out_proj {
            out.extend(p.params());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = self.lstm.params_mut();
        if let Some(p) = &mut self.out_proj {
            out.extend(p.params_mut());
        }
        out
    }
}

/// Verifies that non-selected positions contribute nothing to the LSTM
/// gradients: for every `(window, selection)` pair the upstream gradient is
/// zeroed on selected rows, backpropagated, and every LSTM-side gradient must
/// come out exactly zero. Meaningful in bypass mode.
pub fn selection_gradient_mask_check<R: RoutedSequence + ?Sized>(
    router: &mut R,
    batch: &[(Matrix, SelectionResult)],
) -> Result<bool> {
    for (x, sel) in batch {
        router.zero_lstm_grads();
        let out = router.route_forward(x, sel)?;
        let mut d_out = Matrix::zeros(out.rows(), out.cols());
        let mask = sel.mask();
        for r in 0..out.rows() {
            if mask[r] {
                continue;
            }
            for (c, d) in d_out.row_mut(r).iter_mut().enumerate() {
                *d = 1.0 + 0.1 * ((r * 7 + c * 3) % 5) as f64;
            }
        }
        router.route_backward(&d_out)?;
        let clean = router
            .lstm_params()
            .iter()
            .all(|p| p.grad.as_slice().iter().all(|&g| g == 0.0));
        router.zero_lstm_grads();
        if !clean {
            return Ok(false);
        }
    }
    Ok(true)
}
