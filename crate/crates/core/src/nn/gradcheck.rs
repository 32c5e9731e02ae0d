use super::HasParams;
use crate::error::{Error, Result};

/// Compares analytic gradients against central finite differences.
///
/// `loss_fn(model, backward)` must evaluate the scalar loss and, when
/// `backward` is true, accumulate gradients into the model's parameters.
/// Returns the maximum over all parameter coordinates of
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn grad_check<M, F>(model: &mut M, mut loss_fn: F, eps: f64) -> Result<f64>
where
    M: HasParams,
    F: FnMut(&mut M, bool) -> Result<f64>,
{
    model.zero_grad();
    let base = loss_fn(model, true)?;
    if !base.is_finite() {
        return Err(Error::NonFinite("loss during gradient check".into()));
    }
    let analytic: Vec<Vec<f64>> = model
        .params()
        .iter()
        .map(|p| p.grad.as_slice().to_vec())
        .collect();

    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let orig = model.params()[pi].value.as_slice()[k];
            model.params_mut()[pi].value.as_mut_slice()[k] = orig + eps;
            let plus = loss_fn(model, false);
            model.params_mut()[pi].value.as_mut_slice()[k] = orig - eps;
            let minus = loss_fn(model, false);
            model.params_mut()[pi].value.as_mut_slice()[k] = orig;
            let (plus, minus) = (plus?, minus?);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite("perturbed loss during gradient check".into()));
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
    }
    model.zero_grad();
    Ok(worst)
}
