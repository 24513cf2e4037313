//! Whole-parameter-set gradients and the central-difference checker.

use crate::{Graph, ParamSet, ParamVars, Real, Result, Tensor, Var};

/// Evaluates a scalar loss without a reverse sweep.
pub fn evaluate<T, F>(params: &ParamSet<T>, loss_fn: F) -> Result<T>
where
    T: Real,
    F: Fn(&Graph<'_, T>, &ParamVars) -> Result<Var>,
{
    let graph = Graph::new();
    let vars = params.bind(&graph)?;
    let loss = loss_fn(&graph, &vars)?;
    let value = graph.value(loss);
    if value.len() != 1 {
        return Err(crate::Error::NotScalar {
            shape: value.shape().to_vec(),
        });
    }
    Ok(value.data()[0])
}

/// Loss value and its gradient w.r.t. every parameter. Parameters the loss
/// does not touch get zero gradients, so the result always has the same
/// layout as `params`.
pub fn grad<T, F>(params: &ParamSet<T>, loss_fn: F) -> Result<(T, ParamSet<T>)>
where
    T: Real,
    F: Fn(&Graph<'_, T>, &ParamVars) -> Result<Var>,
{
    let graph = Graph::new();
    let vars = params.bind(&graph)?;
    let loss = loss_fn(&graph, &vars)?;
    let mut grads = graph.backward(loss)?;
    let value = graph.value(loss).data()[0];
    if !value.is_finite() {
        return Err(crate::Error::NonFinite {
            context: "loss".into(),
            index: 0,
        });
    }
    let mut out = ParamSet::new();
    for (name, t) in params.iter() {
        let g = match grads.take(vars.get(name)?) {
            Some(g) => g,
            None => Tensor::zeros(t.shape()),
        };
        g.check_finite(&format!("gradient of {name}"))?;
        out.insert(name, g)?;
    }
    Ok((value, out))
}

/// Largest `|analytic - numeric| / max(1, |numeric|)` over every scalar
/// parameter, with the numeric derivative from central differences of step
/// `eps`.
pub fn grad_check<F>(params: &ParamSet<f64>, loss_fn: F, eps: f64) -> Result<f64>
where
    F: Fn(&Graph<'_, f64>, &ParamVars) -> Result<Var>,
{
    let (_, analytic) = grad(params, &loss_fn)?;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in &names {
        let n = params.get(name)?.len();
        for i in 0..n {
            let base = params.get(name)?.data()[i];
            probe.get_mut(name)?.data_mut()[i] = base + eps;
            let up = evaluate(&probe, &loss_fn)?;
            probe.get_mut(name)?.data_mut()[i] = base - eps;
            let down = evaluate(&probe, &loss_fn)?;
            probe.get_mut(name)?.data_mut()[i] = base;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic.get(name)?.data()[i];
            let err = (a - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
