use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    fan_in_bound, softmax_in_place, softmax_rows_backward, HasParams, Matrix, Parameter,
};

#[derive(Clone, Debug)]
pub struct HeadParams {
    pub w_q: Parameter,
    pub w_k: Parameter,
    pub w_v: Parameter,
}

/// Multi-head scaled dot-product self-attention. Each head projects the
/// input to `d_k` columns; head outputs are concatenated and mapped back to
/// `d_model` by `w_p`.
#[derive(Clone, Debug)]
pub struct AttentionParams {
    pub heads: Vec<HeadParams>,
    pub w_p: Parameter,
    pub d_k: usize,
}

impl AttentionParams {
    pub fn new(name: &str, d_model: usize, n_heads: usize, rng: &mut impl Rng) -> Result<Self> {
        if n_heads == 0 || d_model % n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {d_model} does not split evenly over {n_heads} heads"
            )));
        }
        let d_k = d_model / n_heads;
        let bound = fan_in_bound(d_model);
        let heads = (0..n_heads)
            .map(|h| HeadParams {
                w_q: Parameter::uniform(format!("{name}.h{h}.w_q"), d_model, d_k, bound, rng),
                w_k: Parameter::uniform(format!("{name}.h{h}.w_k"), d_model, d_k, bound, rng),
                w_v: Parameter::uniform(format!("{name}.h{h}.w_v"), d_model, d_k, bound, rng),
            })
            .collect();
        let w_p = Parameter::uniform(format!("{name}.w_p"), d_model, d_model, bound, rng);
        Ok(AttentionParams { heads, w_p, d_k })
    }

    pub fn n_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn d_model(&self) -> usize {
        self.n_heads() * self.d_k
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.rows() == 0 {
            return Err(Error::EmptySequence);
        }
        if x.cols() != self.d_model() {
            return Err(Error::dim("attention", x.shape(), (x.rows(), self.d_model())));
        }
        Ok(())
    }
}

impl HasParams for AttentionParams {
    fn params(&self) -> Vec<&Parameter> {
        let mut out: Vec<&Parameter> = self
            .heads
            .iter()
            .flat_map(|h| [&h.w_q, &h.w_k, &h.w_v])
            .collect();
        out.push(&self.w_p);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out: Vec<&mut Parameter> = self
            .heads
            .iter_mut()
            .flat_map(|h| [&mut h.w_q, &mut h.w_k, &mut h.w_v])
            .collect();
        out.push(&mut self.w_p);
        out
    }
}

/// `K_hᵀ` as a row-major `d_k × L` block, columns `col0..col0+d_k` of `k`.
fn head_keys_t(k: &Matrix, col0: usize, d_k: usize) -> Vec<f64> {
    let len = k.rows();
    let mut kt = vec![0.0; d_k * len];
    for j in 0..len {
        for (c, &v) in k.row(j)[col0..col0 + d_k].iter().enumerate() {
            kt[c * len + j] = v;
        }
    }
    kt
}

/// One softmax row: `out = softmax(q_i K_hᵀ · scale)`.
#[inline]
fn attention_row(q_i: &[f64], kt: &[f64], scale: f64, out: &mut [f64]) {
    let len = out.len();
    out.fill(0.0);
    for (c, &qc) in q_i.iter().enumerate() {
        for (o, &kv) in out.iter_mut().zip(&kt[c * len..(c + 1) * len]) {
            *o += qc * kv;
        }
    }
    out.iter_mut().for_each(|o| *o *= scale);
    softmax_in_place(out);
}

/// `softmax(QKᵀ/√d_k)` for one head.
fn head_weights(q: &Matrix, k: &Matrix, d_k: usize) -> Matrix {
    let scale = 1.0 / (d_k as f64).sqrt();
    let len = q.rows();
    let kt = head_keys_t(k, 0, d_k);
    let mut alpha = Matrix::zeros(len, len);
    for i in 0..len {
        attention_row(q.row(i), &kt, scale, alpha.row_mut(i));
    }
    alpha
}

/// Attention matrices only, one `L×L` row-stochastic matrix per head.
pub fn attention_weights(x: &Matrix, p: &AttentionParams) -> Result<Vec<Matrix>> {
    p.check_input(x)?;
    p.heads
        .iter()
        .map(|h| {
            let q = x.matmul(&h.w_q.value)?;
            let k = x.matmul(&h.w_k.value)?;
            Ok(head_weights(&q, &k, p.d_k))
        })
        .collect()
}

/// Attention received by each position: column means of every head's
/// `softmax(QKᵀ/√d_k)`, averaged over heads. Computes the matrices one row at
/// a time with all heads' projections in a single product; the summation
/// order matches summing the output of [`attention_weights`] head by head,
/// row by row.
pub fn received_attention(x: &Matrix, p: &AttentionParams) -> Result<Vec<f64>> {
    p.check_input(x)?;
    let (len, d_k, n_heads) = (x.rows(), p.d_k, p.n_heads());
    let d = p.d_model();
    let mut wq = vec![0.0; d * d];
    let mut wk = vec![0.0; d * d];
    for (h, head) in p.heads.iter().enumerate() {
        for r in 0..d {
            wq[r * d + h * d_k..r * d + (h + 1) * d_k].copy_from_slice(head.w_q.value.row(r));
            wk[r * d + h * d_k..r * d + (h + 1) * d_k].copy_from_slice(head.w_k.value.row(r));
        }
    }
    let q = x.matmul(&Matrix::from_vec(d, d, wq)?)?;
    let k = x.matmul(&Matrix::from_vec(d, d, wk)?)?;
    let scale = 1.0 / (d_k as f64).sqrt();
    let mut scores = vec![0.0; len];
    let mut row = vec![0.0; len];
    for h in 0..n_heads {
        let kt = head_keys_t(&k, h * d_k, d_k);
        for i in 0..len {
            attention_row(&q.row(i)[h * d_k..(h + 1) * d_k], &kt, scale, &mut row);
            for (s, &a) in scores.iter_mut().zip(&row) {
                *s += a;
            }
        }
    }
    let norm = 1.0 / (n_heads * len) as f64;
    scores.iter_mut().for_each(|s| *s *= norm);
    Ok(scores)
}

#[derive(Clone, Debug)]
struct HeadCache {
    q: Matrix,
    k: Matrix,
    v: Matrix,
    alpha: Matrix,
}

#[derive(Clone, Debug)]
struct Cache {
    x: Matrix,
    heads: Vec<HeadCache>,
    concat: Matrix,
}

/// Attention layer with a cached forward for backpropagation.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub params: AttentionParams,
    cache: Option<Cache>,
}

impl MultiHeadAttention {
    pub fn new(params: AttentionParams) -> Self {
        MultiHeadAttention {
            params,
            cache: None,
        }
    }

    /// Returns the projected context `[L×d_model]` and every head's
    /// attention matrix.
    pub fn forward(&mut self, x: &Matrix) -> Result<(Matrix, Vec<Matrix>)> {
        let p = &self.params;
        p.check_input(x)?;
        let (len, d_k) = (x.rows(), p.d_k);
        let mut concat = Matrix::zeros(len, p.d_model());
        let mut heads = Vec::with_capacity(p.n_heads());
        for (h, hp) in p.heads.iter().enumerate() {
            let q = x.matmul(&hp.w_q.value)?;
            let k = x.matmul(&hp.w_k.value)?;
            let v = x.matmul(&hp.w_v.value)?;
            let alpha = head_weights(&q, &k, d_k);
            let out = alpha.matmul(&v)?;
            for r in 0..len {
                concat.row_mut(r)[h * d_k..(h + 1) * d_k].copy_from_slice(out.row(r));
            }
            heads.push(HeadCache { q, k, v, alpha });
        }
        let context = concat.matmul(&p.w_p.value)?;
        let alphas = heads.iter().map(|h| h.alpha.clone()).collect();
        self.cache = Some(Cache {
            x: x.clone(),
            heads,
            concat,
        });
        Ok((context, alphas))
    }

    pub fn backward(&mut self, d_context: &Matrix) -> Result<Matrix> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("attention backward before forward".into()))?;
        let p = &mut self.params;
        if d_context.shape() != cache.x.shape() {
            return Err(Error::dim("attention_backward", d_context.shape(), cache.x.shape()));
        }
        let (len, d_k) = (cache.x.rows(), p.d_k);
        let scale = 1.0 / (d_k as f64).sqrt();
        cache.concat.accumulate_tn(d_context, &mut p.w_p.grad);
        let d_concat = d_context.matmul_nt(&p.w_p.value)?;
        let mut dx = Matrix::zeros(len, cache.x.cols());
        for (h, (hp, hc)) in p.heads.iter_mut().zip(&cache.heads).enumerate() {
            let mut d_out = Matrix::zeros(len, d_k);
            for r in 0..len {
                d_out
                    .row_mut(r)
                    .copy_from_slice(&d_concat.row(r)[h * d_k..(h + 1) * d_k]);
            }
            let d_alpha = d_out.matmul_nt(&hc.v)?;
            let dv = hc.alpha.matmul_tn(&d_out)?;
            let ds = softmax_rows_backward(&hc.alpha, &d_alpha)?.scale(scale);
            let dq = ds.matmul(&hc.k)?;
            let dk = ds.matmul_tn(&hc.q)?;
            cache.x.accumulate_tn(&dq, &mut hp.w_q.grad);
            cache.x.accumulate_tn(&dk, &mut hp.w_k.grad);
            cache.x.accumulate_tn(&dv, &mut hp.w_v.grad);
            dx.add_assign(&dq.matmul_nt(&hp.w_q.value)?)?;
            dx.add_assign(&dk.matmul_nt(&hp.w_k.value)?)?;
            dx.add_assign(&dv.matmul_nt(&hp.w_v.value)?)?;
        }
        Ok(dx)
    }
}

impl HasParams for MultiHeadAttention {
    fn params(&self) -> Vec<&Parameter> {
        self.params.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.params.params_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, layer_rng};

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn received_attention_matches_stored_matrices_exactly() {
        let mut rng = layer_rng(11, "recv");
        for (len, d, heads) in [(1, 8, 2), (7, 8, 4), (33, 32, 8)] {
            let p = AttentionParams::new("a", d, heads, &mut rng).unwrap();
            let x = random(len, d, &mut rng);
            let alphas = attention_weights(&x, &p).unwrap();
            let mut oracle = vec![0.0; len];
            for a in &alphas {
                for r in 0..len {
                    for (o, v) in oracle.iter_mut().zip(a.row(r)) {
                        *o += v;
                    }
                }
            }
            let norm = 1.0 / (heads * len) as f64;
            oracle.iter_mut().for_each(|o| *o *= norm);
            assert_eq!(received_attention(&x, &p).unwrap(), oracle);
        }
    }

    /// Three nested loops per head, straight from the definition.
    fn brute_force(x: &Matrix, p: &AttentionParams) -> (Matrix, Vec<Matrix>) {
        let (len, dm, dk) = (x.rows(), p.d_model(), p.d_k);
        let proj = |w: &Parameter, i: usize, c: usize| -> f64 {
            (0..dm).map(|m| x.get(i, m) * w.value.get(m, c)).sum()
        };
        let mut concat = vec![vec![0.0; dm]; len];
        let mut alphas = Vec::new();
        for (h, hp) in p.heads.iter().enumerate() {
            let mut alpha = Matrix::zeros(len, len);
            for i in 0..len {
                let mut logits = vec![0.0; len];
                for (j, l) in logits.iter_mut().enumerate() {
                    *l = (0..dk).map(|c| proj(&hp.w_q, i, c) * proj(&hp.w_k, j, c)).sum::<f64>()
                        / (dk as f64).sqrt();
                }
                let z: f64 = logits.iter().map(|l| l.exp()).sum();
                for j in 0..len {
                    alpha.set(i, j, logits[j].exp() / z);
                }
                for c in 0..dk {
                    concat[i][h * dk + c] =
                        (0..len).map(|j| alpha.get(i, j) * proj(&hp.w_v, j, c)).sum();
                }
            }
            alphas.push(alpha);
        }
        let mut out = Matrix::zeros(len, dm);
        for i in 0..len {
            for c in 0..dm {
                out.set(i, c, (0..dm).map(|m| concat[i][m] * p.w_p.value.get(m, c)).sum());
            }
        }
        (out, alphas)
    }

    #[test]
    fn single_token_attends_to_itself() {
        let mut rng = layer_rng(1, "a");
        let p = AttentionParams::new("a", 8, 4, &mut rng).unwrap();
        let alphas = attention_weights(&random(1, 8, &mut rng), &p).unwrap();
        assert_eq!(alphas.len(), 4);
        assert!(alphas.iter().all(|a| a.as_slice() == [1.0]));
    }

    #[test]
    fn identical_rows_attend_uniformly() {
        let mut rng = layer_rng(2, "a");
        let p = AttentionParams::new("a", 4, 2, &mut rng).unwrap();
        let row = random(1, 4, &mut rng);
        let x = row.select_rows(&[0, 0, 0, 0, 0]).unwrap();
        for a in attention_weights(&x, &p).unwrap() {
            for &v in a.as_slice() {
                assert!((v - 0.2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matches_brute_force_oracle() {
        let mut rng = layer_rng(3, "a");
        let p = AttentionParams::new("a", 4, 2, &mut rng).unwrap();
        let x = random(3, 4, &mut rng);
        let mut mha = MultiHeadAttention::new(p.clone());
        let (ctx, alphas) = mha.forward(&x).unwrap();
        let (ctx_o, alphas_o) = brute_force(&x, &p);
        assert!(ctx.max_abs_diff(&ctx_o) < 1e-10);
        for (a, b) in alphas.iter().zip(&alphas_o) {
            assert!(a.max_abs_diff(b) < 1e-10);
        }
        let w = attention_weights(&x, &p).unwrap();
        assert_eq!(w, alphas);
    }

    #[test]
    fn uneven_head_split_is_rejected() {
        let mut rng = layer_rng(4, "a");
        assert!(AttentionParams::new("a", 30, 8, &mut rng).is_err());
        let p = AttentionParams::new("a", 32, 8, &mut rng).unwrap();
        assert_eq!(p.d_k, 4);
        assert!(attention_weights(&Matrix::zeros(3, 30), &p).is_err());
    }

    #[test]
    fn rows_permute_with_input() {
        let mut rng = layer_rng(5, "perm");
        let p = AttentionParams::new("a", 4, 2, &mut rng).unwrap();
        let x = random(5, 4, &mut rng);
        let perm = [3, 0, 4, 1, 2];
        let xp = x.select_rows(&perm).unwrap();
        let mut mha = MultiHeadAttention::new(p);
        let (c, _) = mha.forward(&x).unwrap();
        let (cp, _) = mha.forward(&xp).unwrap();
        assert!(c.select_rows(&perm).unwrap().max_abs_diff(&cp) < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = layer_rng(6, "a-gc");
        let mut mha = MultiHeadAttention::new(AttentionParams::new("a", 4, 2, &mut rng).unwrap());
        let x = random(5, 4, &mut rng);
        let w = random(5, 4, &mut rng);
        let err = grad_check(
            &mut mha,
            |m, backward| {
                let (c, _) = m.forward(&x)?;
                if backward {
                    m.backward(&w)?;
                }
                Ok(c.hadamard(&w)?.sum())
            },
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = layer_rng(7, "a-dx");
        let mut mha = MultiHeadAttention::new(AttentionParams::new("a", 4, 2, &mut rng).unwrap());
        let x = random(3, 4, &mut rng);
        let w = random(3, 4, &mut rng);
        mha.forward(&x).unwrap();
        let dx = mha.backward(&w).unwrap();
        let eps = 1e-6;
        for k in 0..12 {
            let mut xp = x.clone();
            xp.as_mut_slice()[k] += eps;
            let mut xm = x.clone();
            xm.as_mut_slice()[k] -= eps;
            let lp = mha.forward(&xp).unwrap().0.hadamard(&w).unwrap().sum();
            let lm = mha.forward(&xm).unwrap().0.hadamard(&w).unwrap().sum();
            assert!(((lp - lm) / (2.0 * eps) - dx.as_slice()[k]).abs() < 1e-8);
        }
    }
}
