//! Central finite-difference gradient checking in 64-bit.

use serde::Serialize;

use super::graph::{Gradients, Graph, NodeId, ParamSet};
use super::TensorError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub nan_coordinates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| {
                if p.nan_coordinates > 0 {
                    f64::INFINITY
                } else {
                    p.max_relative_error
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_error() < tolerance
    }
}

/// |a − n| / max(|a|, |n|, 1e-8)
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn loss_of<F>(params: &ParamSet<f64>, build: &F) -> Result<f64, TensorError>
where
    F: Fn(&mut Graph<'_, f64>) -> Result<NodeId, TensorError>,
{
    let mut g = Graph::new(params);
    let loss = build(&mut g)?;
    Ok(g.value(loss).item())
}

/// Compares backpropagated gradients against central differences for every
/// coordinate of every parameter. `build` must be deterministic.
pub fn grad_check<F>(params: &ParamSet<f64>, build: F, step: f64) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Graph<'_, f64>) -> Result<NodeId, TensorError>,
{
    let analytic = {
        let mut g = Graph::new(params);
        let loss = build(&mut g)?;
        g.backward(loss)?
    };
    check_against(params, &analytic, build, step)
}

/// Compares a supplied analytic gradient against central differences.
pub fn check_against<F>(
    params: &ParamSet<f64>,
    analytic: &Gradients<f64>,
    build: F,
    step: f64,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Graph<'_, f64>) -> Result<NodeId, TensorError>,
{
    let mut probe = params.clone();
    let mut report = Vec::with_capacity(params.len());
    for id in params.ids() {
        let mut check = ParamCheck {
            name: params.name(id).to_string(),
            max_relative_error: 0.0,
            worst_index: 0,
            nan_coordinates: 0,
        };
        for i in 0..params.get(id).len() {
            let original = params.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = original + step;
            let plus = loss_of(&probe, &build)?;
            probe.get_mut(id).data_mut()[i] = original - step;
            let minus = loss_of(&probe, &build)?;
            probe.get_mut(id).data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(analytic.get(id).data()[i], numeric);
            if err.is_nan() {
                check.nan_coordinates += 1;
            } else if err > check.max_relative_error {
                check.max_relative_error = err;
                check.worst_index = i;
            }
        }
        report.push(check);
    }
    Ok(GradCheckReport { params: report })
}
