//! Central finite-difference checks for tape-built scalar functions.

use super::{Tape, Var};
use crate::error::Result;
use crate::tensor::Tensor;

/// Default step for central differences.
pub const FD_STEP: f64 = 1e-4;

/// Gradients smaller than this are compared absolutely rather than
/// relatively; below it the finite-difference truncation error dominates.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `(input index, element index, analytic, numeric)` of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
    /// Relative error of every checked element, inputs in order.
    pub errors: Vec<f64>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compares the analytic gradient of `f` with respect to every element of
/// every input against `(f(x+h) − f(x−h)) / 2h`.
pub fn check_gradients<F>(inputs: &[Tensor<f64>], h: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let root = f(&mut tape, &vars)?;
    let grads = tape.backward(root)?;

    let mut report = GradCheckReport::default();
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (ii, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var).expect("params always get gradients").clone();
        for ei in 0..inputs[ii].len() {
            let orig = inputs[ii].data()[ei];
            work[ii].data_mut()[ei] = orig + h;
            let plus = eval(&work)?;
            work[ii].data_mut()[ei] = orig - h;
            let minus = eval(&work)?;
            work[ii].data_mut()[ei] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic.data()[ei];
            let err = relative_error(a, numeric);
            report.checked += 1;
            report.errors.push(err);
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((ii, ei, a, numeric));
            }
        }
    }
    Ok(report)
}
