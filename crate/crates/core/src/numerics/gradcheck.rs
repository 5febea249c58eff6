//! Central finite-difference oracle for analytic gradients.
//!
//! Only the loss value is used here, never the backward pass, so this
//! stays independent of the code it checks.

use super::graph::{Gradients, ParamSet};
use super::tensor::Tensor2;

/// Denominator floor for the relative error of near-zero entries.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheck {
    pub param: String,
    pub entries: usize,
    pub max_rel_error: f64,
    pub worst_entry: usize,
}

/// Central differences `(f(p+h) - f(p-h)) / 2h` for every parameter entry.
pub fn numeric_gradients(
    params: &ParamSet,
    h: f64,
    loss: impl Fn(&ParamSet) -> f64,
) -> Vec<Tensor2> {
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.len());
    for id in params.ids() {
        let (rows, cols) = params.get(id).shape();
        let mut g = Tensor2::zeros(rows, cols);
        for k in 0..rows * cols {
            let orig = params.get(id).data()[k];
            probe.get_mut(id).data_mut()[k] = orig + h;
            let up = loss(&probe);
            probe.get_mut(id).data_mut()[k] = orig - h;
            let down = loss(&probe);
            probe.get_mut(id).data_mut()[k] = orig;
            g.data_mut()[k] = (up - down) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Per-parameter comparison of analytic against numeric gradients.
pub fn compare(params: &ParamSet, analytic: &Gradients, numeric: &[Tensor2]) -> Vec<GradCheck> {
    params
        .ids()
        .map(|id| {
            let a = analytic.get(id).data();
            let n = numeric[id.index()].data();
            let (worst_entry, max_rel_error) = a
                .iter()
                .zip(n)
                .map(|(&x, &y)| relative_error(x, y))
                .enumerate()
                .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
            GradCheck {
                param: params.name(id).to_string(),
                entries: a.len(),
                max_rel_error,
                worst_entry,
            }
        })
        .collect()
}
