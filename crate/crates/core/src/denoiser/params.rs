use fdm_autodiff::{ParamSet, Tensor};
use rand::Rng;
use rand_distr::StandardNormal;

use super::DenoiserConfig;
use crate::rng::keyed;
use crate::{Error, Result};

/// Every parameter name with its shape, in construction order.
pub fn param_shapes(cfg: &DenoiserConfig) -> Vec<(String, Vec<usize>)> {
    let (c, h, fd) = (cfg.channels, cfg.hidden, cfg.frame_dim);
    let mut out = vec![
        ("input.w".to_string(), vec![fd + 1, c]),
        ("input.b".to_string(), vec![c]),
        ("time.w1".to_string(), vec![c, c]),
        ("time.b1".to_string(), vec![c]),
        ("time.w2".to_string(), vec![c, c]),
        ("time.b2".to_string(), vec![c]),
    ];
    for l in 0..cfg.blocks {
        let p = |s: &str| format!("blocks.{l}.{s}");
        out.extend([
            (p("mlp.ln.g"), vec![c]),
            (p("mlp.ln.b"), vec![c]),
            (p("mlp.w1"), vec![c, h]),
            (p("mlp.b1"), vec![h]),
            (p("mlp.w2"), vec![h, c]),
            (p("mlp.b2"), vec![c]),
            (p("attn.ln.g"), vec![c]),
            (p("attn.ln.b"), vec![c]),
            (p("attn.wq"), vec![c, c]),
            (p("attn.wk"), vec![c, c]),
            (p("attn.wv"), vec![c, c]),
            (p("attn.wo"), vec![c, c]),
            (p("attn.bo"), vec![c]),
            (p("attn.rpe.w1"), vec![3, c]),
            (p("attn.rpe.b1"), vec![c]),
            (p("attn.rpe.w2"), vec![c, 3 * c]),
            (p("attn.rpe.b2"), vec![3 * c]),
        ]);
    }
    out.extend([
        ("out.ln.g".to_string(), vec![c]),
        ("out.ln.b".to_string(), vec![c]),
        ("out.w".to_string(), vec![c, fd]),
        ("out.b".to_string(), vec![fd]),
    ]);
    out
}

/// Weight matrices ~ N(0, 1/fan_in), layer-norm gains 1, everything else 0.
/// Each tensor draws from its own stream so adding a parameter never
/// changes the others.
pub fn init_params(cfg: &DenoiserConfig, seed: u64) -> Result<ParamSet<f32>> {
    cfg.validate()?;
    let mut params = ParamSet::new();
    for (i, (name, shape)) in param_shapes(cfg).into_iter().enumerate() {
        let n: usize = shape.iter().product();
        let data = if shape.len() == 2 {
            let std = (1.0 / shape[0] as f64).sqrt();
            let mut rng = keyed(seed, &[0x1417, i as u64]);
            (0..n)
                .map(|_| (rng.sample::<f64, _>(StandardNormal) * std) as f32)
                .collect()
        } else if name.ends_with(".g") {
            vec![1.0; n]
        } else {
            vec![0.0; n]
        };
        params.insert(name, Tensor::new(shape, data)?)?;
    }
    Ok(params)
}

/// Checks that `params` has exactly the layout `cfg` implies.
pub fn check_params(cfg: &DenoiserConfig, params: &ParamSet<f32>) -> Result<()> {
    let expected = param_shapes(cfg);
    if expected.len() != params.len() {
        return Err(Error::invalid(format!(
            "expected {} parameters, found {}",
            expected.len(),
            params.len()
        )));
    }
    for (name, shape) in expected {
        let t = params
            .get(&name)
            .map_err(|_| Error::invalid(format!("missing parameter {name}")))?;
        if t.shape() != shape.as_slice() {
            return Err(Error::Shape(format!("{name}: {:?} vs {:?}", t.shape(), shape)));
        }
    }
    if !params.is_finite() {
        return Err(Error::invalid("parameters contain non-finite values"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_matches_layout_and_is_seeded() {
        let cfg = DenoiserConfig::new(3, 8, 2, 2, 4, 10, 16).unwrap();
        let a = init_params(&cfg, 1).unwrap();
        check_params(&cfg, &a).unwrap();
        assert_eq!(a, init_params(&cfg, 1).unwrap());
        assert_ne!(a, init_params(&cfg, 2).unwrap());
        assert!(a.get("blocks.1.attn.ln.g").unwrap().data().iter().all(|&v| v == 1.0));
        assert!(a.get("out.b").unwrap().data().iter().all(|&v| v == 0.0));
    }
}
