use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Fixed sinusoidal position table: even columns `sin(pos/10000^(2i/d))`,
/// odd columns the matching cosine.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionalEncoding {
    table: Matrix,
}

impl PositionalEncoding {
    pub fn new(max_len: usize, d_model: usize) -> Self {
        let mut table = Matrix::zeros(max_len, d_model);
        for pos in 0..max_len {
            for i in (0..d_model).step_by(2) {
                let angle = pos as f64 / 10000f64.powf(i as f64 / d_model as f64);
                table.set(pos, i, angle.sin());
                if i + 1 < d_model {
                    table.set(pos, i + 1, angle.cos());
                }
            }
        }
        PositionalEncoding { table }
    }

    pub fn max_len(&self) -> usize {
        self.table.rows()
    }

    pub fn d_model(&self) -> usize {
        self.table.cols()
    }

    pub fn table(&self) -> &Matrix {
        &self.table
    }

    pub fn encoding(&self, pos: usize) -> Result<&[f64]> {
        if pos >= self.max_len() {
            return Err(Error::Bounds {
                index: pos,
                len: self.max_len(),
            });
        }
        Ok(self.table.row(pos))
    }

    /// Adds to row `r` of `x` the encoding of `positions[r]`.
    pub fn add(&self, x: &Matrix, positions: &[usize]) -> Result<Matrix> {
        if positions.len() != x.rows() || x.cols() != self.d_model() {
            return Err(Error::dim(
                "positional_encoding_add",
                x.shape(),
                (positions.len(), self.d_model()),
            ));
        }
        let mut out = x.clone();
        for (r, &pos) in positions.iter().enumerate() {
            let enc = self.encoding(pos)?;
            for (o, &e) in out.row_mut(r).iter_mut().zip(enc) {
                *o += e;
            }
        }
        Ok(out)
    }

    /// Adds the encoding of positions `0..x.rows()`.
    pub fn add_in_order(&self, x: &Matrix) -> Result<Matrix> {
        let positions: Vec<usize> = (0..x.rows()).collect();
        self.add(x, &positions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_zero_is_sin_zero_cos_zero() {
        let pe = PositionalEncoding::new(4, 6);
        let row = pe.encoding(0).unwrap();
        for (d, &v) in row.iter().enumerate() {
            assert_eq!(v, if d % 2 == 0 { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn add_then_subtract_is_identity() {
        let pe = PositionalEncoding::new(8, 4);
        let x = Matrix::from_rows(&[&[0.1, 0.2, 0.3, 0.4], &[-1.0, 2.0, 0.5, 0.0]]).unwrap();
        let y = pe.add(&x, &[5, 2]).unwrap();
        let mut back = y.clone();
        for (r, pos) in [5usize, 2].into_iter().enumerate() {
            for (o, e) in back.row_mut(r).iter_mut().zip(pe.encoding(pos).unwrap()) {
                *o -= e;
            }
        }
        assert!(back.max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn out_of_range_position_is_rejected() {
        let pe = PositionalEncoding::new(3, 2);
        let err = pe.add(&Matrix::zeros(1, 2), &[3]).unwrap_err();
        assert!(matches!(err, Error::Bounds { index: 3, len: 3 }));
    }

    #[test]
    fn rows_are_pairwise_distinct() {
        let pe = PositionalEncoding::new(64, 30);
        let mut min = f64::INFINITY;
        for a in 0..64 {
            for b in a + 1..64 {
                let d: f64 = pe
                    .encoding(a)
                    .unwrap()
                    .iter()
                    .zip(pe.encoding(b).unwrap())
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min = min.min(d);
            }
        }
        assert!(min > 0.0);
    }
}
