//! Central-difference verification of analytic gradients.

use std::collections::BTreeMap;

use super::matrix::{Matrix, Parameter};
use super::NnError;

#[derive(Debug, Clone)]
pub struct GroupResult {
    pub name: String,
    pub max_rel_err: f64,
    pub coords: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub groups: Vec<GroupResult>,
    pub max_rel_err: f64,
    pub step: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Compares the analytic gradients in `analytic` (keyed by parameter name)
/// against central finite differences of `loss_of`, perturbing each
/// coordinate of each parameter returned by `params_of` in turn.
///
/// The relative error per coordinate is
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
pub fn finite_diff_check<M>(
    model: &mut M,
    analytic: &BTreeMap<String, Matrix>,
    params_of: impl Fn(&mut M) -> Vec<&mut Parameter>,
    mut loss_of: impl FnMut(&mut M) -> f64,
    h: f64,
) -> Result<GradCheckReport, NnError> {
    let group_meta: Vec<(String, usize)> = params_of(model)
        .iter()
        .map(|p| (p.name.clone(), p.value.data.len()))
        .collect();

    let mut groups = Vec::with_capacity(group_meta.len());
    let mut overall: f64 = 0.0;

    for (gi, (name, len)) in group_meta.iter().enumerate() {
        let grad = analytic
            .get(name)
            .unwrap_or_else(|| panic!("no analytic gradient recorded for {name}"));
        assert_eq!(grad.data.len(), *len, "gradient shape mismatch for {name}");

        let mut group_max: f64 = 0.0;
        for k in 0..*len {
            params_of(model)[gi].value.data[k] += h;
            let lp = loss_of(model);
            params_of(model)[gi].value.data[k] -= 2.0 * h;
            let lm = loss_of(model);
            params_of(model)[gi].value.data[k] += h;
            if !lp.is_finite() || !lm.is_finite() {
                return Err(NnError::NonFinite(format!("loss while perturbing {name}")));
            }
            let numeric = (lp - lm) / (2.0 * h);
            let a = grad.data[k];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            group_max = group_max.max(rel);
        }
        overall = overall.max(group_max);
        groups.push(GroupResult {
            name: name.clone(),
            max_rel_err: group_max,
            coords: *len,
        });
    }

    Ok(GradCheckReport {
        groups,
        max_rel_err: overall,
        step: h,
    })
}

/// Snapshot of current parameter gradients, keyed by name.
pub fn snapshot_grads(params: &[&mut Parameter]) -> BTreeMap<String, Matrix> {
    params
        .iter()
        .map(|p| (p.name.clone(), p.grad.clone()))
        .collect()
}
