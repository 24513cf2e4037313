use fdm_autodiff::{Graph, ParamSet, ParamVars, Real, Tensor, Var};

use super::DenoiserConfig;
use crate::{Error, Result};

const LN_EPS: f64 = 1e-5;

/// Rows fed jointly through the network. Rows with different `group` ids
/// never attend to each other, which is how padded training slots keep
/// their videos apart.
#[derive(Debug, Clone)]
pub struct FrameSet<T> {
    /// `rows x frame_dim` values: noisy for latent rows, clean for observed.
    pub frames: Tensor<T>,
    pub observed: Vec<bool>,
    /// Diffusion step per row.
    pub t: Vec<usize>,
    pub pos: Vec<usize>,
    pub group: Vec<usize>,
}

impl<T: Real> FrameSet<T> {
    pub fn rows(&self) -> usize {
        self.observed.len()
    }

    pub fn validate(&self, cfg: &DenoiserConfig) -> Result<()> {
        let rows = self.rows();
        if rows == 0 {
            return Err(Error::EmptyLatent);
        }
        if self.frames.shape() != [rows, cfg.frame_dim] {
            return Err(Error::Shape(format!(
                "frames {:?} for {rows} rows of dim {}",
                self.frames.shape(),
                cfg.frame_dim
            )));
        }
        if self.t.len() != rows || self.pos.len() != rows || self.group.len() != rows {
            return Err(Error::Shape("per-row metadata lengths differ".into()));
        }
        for &t in &self.t {
            if t == 0 || t > cfg.steps {
                return Err(Error::TimestepOutOfRange { t, steps: cfg.steps });
            }
        }
        for (i, &p) in self.pos.iter().enumerate() {
            if p >= cfg.n_max {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    len: cfg.n_max,
                });
            }
            let clash = (0..i).any(|j| self.group[j] == self.group[i] && self.pos[j] == p);
            if clash {
                return Err(Error::Overlap(p));
            }
        }
        Ok(())
    }

    /// Row-major `rows x rows` attention mask: same group only.
    pub fn attention_mask(&self) -> Vec<bool> {
        let n = self.rows();
        let mut mask = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                mask.push(self.group[i] == self.group[j]);
            }
        }
        mask
    }
}

/// Sinusoidal embedding of one diffusion step into `channels` values.
pub fn timestep_embedding(t: usize, channels: usize) -> Vec<f64> {
    let half = channels / 2;
    let mut out = vec![0.0; channels];
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half as f64).exp();
        let arg = t as f64 * freq;
        out[i] = arg.sin();
        out[half + i] = arg.cos();
    }
    out
}

/// Three-feature embedding of a signed frame offset: sign, linear and
/// logarithmic magnitude, both scaled to `[0, 1]` over `n_max`.
pub fn offset_features(d: i64, n_max: usize) -> [f64; 3] {
    let a = d.unsigned_abs() as f64;
    let n = n_max as f64;
    [d.signum() as f64, a / n, (1.0 + a).ln() / (1.0 + n).ln()]
}

fn real<T: Real>(v: f64) -> T {
    T::from_f64_lossy(v)
}

fn linear<T: Real>(g: &Graph<'_, T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = g.matmul(x, w)?;
    Ok(g.add_row(y, b)?)
}

fn layer_norm<T: Real>(g: &Graph<'_, T>, vars: &ParamVars, x: Var, prefix: &str) -> Result<Var> {
    Ok(g.layer_norm(
        x,
        vars.get(&format!("{prefix}.g"))?,
        vars.get(&format!("{prefix}.b"))?,
        real(LN_EPS),
    )?)
}

/// Pair bookkeeping for one attention call over `n` rows.
struct Pairs {
    n: usize,
    /// Row `i` of each pair `(i, j)`, pair-major.
    left: Vec<usize>,
    right: Vec<usize>,
    /// Index of `pos(i) - pos(j)` in `offsets`.
    offset_idx: Vec<usize>,
    offsets: Vec<i64>,
}

impl Pairs {
    fn new(pos: &[usize]) -> Self {
        let n = pos.len();
        let mut offsets: Vec<i64> = Vec::new();
        let (mut left, mut right, mut raw) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            for j in 0..n {
                left.push(i);
                right.push(j);
                raw.push(pos[i] as i64 - pos[j] as i64);
            }
        }
        offsets.extend(raw.iter().copied());
        offsets.sort_unstable();
        offsets.dedup();
        let offset_idx = raw.iter().map(|d| offsets.binary_search(d).unwrap_or(0)).collect();
        Self {
            n,
            left,
            right,
            offset_idx,
            offsets,
        }
    }
}

/// Evaluates the position network of `layer` at every distinct offset and
/// returns its `offsets x 3C` output laid out `[query | key | value]`, each
/// part split into per-head slices.
pub fn rpe_table<T: Real>(
    g: &Graph<'_, T>,
    vars: &ParamVars,
    cfg: &DenoiserConfig,
    layer: usize,
    offsets: &[i64],
) -> Result<Var> {
    for &d in offsets {
        if d.unsigned_abs() as usize >= cfg.n_max {
            return Err(Error::IndexOutOfRange {
                index: d.unsigned_abs() as usize,
                len: cfg.n_max,
            });
        }
    }
    let feats: Vec<T> = offsets
        .iter()
        .flat_map(|&d| offset_features(d, cfg.n_max))
        .map(real)
        .collect();
    let x = g.constant(Tensor::matrix(offsets.len(), 3, feats)?)?;
    let p = |s: &str| format!("blocks.{layer}.attn.rpe.{s}");
    let h = linear(g, x, vars.get(&p("w1"))?, vars.get(&p("b1"))?)?;
    let h = g.silu(h)?;
    linear(g, h, vars.get(&p("w2"))?, vars.get(&p("b2"))?)
}

/// Temporal self-attention of `layer` with relative position terms; returns
/// `z + attention(z)`. `mask[i * n + j]` allows row `i` to attend to row `j`.
pub fn temporal_attention<T: Real>(
    g: &Graph<'_, T>,
    vars: &ParamVars,
    cfg: &DenoiserConfig,
    layer: usize,
    z: Var,
    pos: &[usize],
    mask: &[bool],
) -> Result<Var> {
    let pairs = Pairs::new(pos);
    attention_with_pairs(g, vars, cfg, layer, z, &pairs, mask)
}

fn attention_with_pairs<T: Real>(
    g: &Graph<'_, T>,
    vars: &ParamVars,
    cfg: &DenoiserConfig,
    layer: usize,
    z: Var,
    pairs: &Pairs,
    mask: &[bool],
) -> Result<Var> {
    let n = pairs.n;
    let (c, dh) = (cfg.channels, cfg.head_dim());
    let p = |s: &str| format!("blocks.{layer}.attn.{s}");
    let a = layer_norm(g, vars, z, &p("ln"))?;
    let q = g.matmul(a, vars.get(&p("wq"))?)?;
    let k = g.matmul(a, vars.get(&p("wk"))?)?;
    let v = g.matmul(a, vars.get(&p("wv"))?)?;

    let table = rpe_table(g, vars, cfg, layer, &pairs.offsets)?;
    let rel = g.gather_rows(table, &pairs.offset_idx)?;

    // S[i, i * n + j] = 1 sums pair rows back onto their query row.
    let mut s = vec![T::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            s[i * n * n + i * n + j] = T::one();
        }
    }
    let sum_pairs = g.constant(Tensor::matrix(n, n * n, s)?)?;
    let ones = g.constant(Tensor::filled(&[1, dh], T::one()))?;
    let inv_sqrt = real::<T>(1.0 / (dh as f64).sqrt());

    let mut heads = Vec::with_capacity(cfg.heads);
    for h in 0..cfg.heads {
        let cols = (h * dh, (h + 1) * dh);
        let qh = g.slice_cols(q, cols.0, cols.1)?;
        let kh = g.slice_cols(k, cols.0, cols.1)?;
        let vh = g.slice_cols(v, cols.0, cols.1)?;
        let pq = g.slice_cols(rel, cols.0, cols.1)?;
        let pk = g.slice_cols(rel, c + cols.0, c + cols.1)?;
        let pv = g.slice_cols(rel, 2 * c + cols.0, 2 * c + cols.1)?;

        let kt = g.transpose(kh)?;
        let content = g.scale(g.matmul(qh, kt)?, inv_sqrt)?;
        let k_right = g.gather_rows(kh, &pairs.right)?;
        let q_left = g.gather_rows(qh, &pairs.left)?;
        let pos_q = g.sum_rows(g.mul(pq, k_right)?)?;
        let pos_k = g.sum_rows(g.mul(q_left, pk)?)?;
        let pos_terms = g.reshape(g.add(pos_q, pos_k)?, &[n, n])?;
        let scores = g.add(content, pos_terms)?;
        let alpha = g.softmax(scores, Some(mask))?;

        let from_values = g.matmul(alpha, vh)?;
        let alpha_pairs = g.matmul(g.reshape(alpha, &[n * n, 1])?, ones)?;
        let from_rel = g.matmul(sum_pairs, g.mul(alpha_pairs, pv)?)?;
        heads.push(g.add(from_values, from_rel)?);
    }
    let joined = g.concat_cols(&heads)?;
    let out = linear(g, joined, vars.get(&p("wo"))?, vars.get(&p("bo"))?)?;
    Ok(g.add(z, out)?)
}

fn mlp_block<T: Real>(g: &Graph<'_, T>, vars: &ParamVars, layer: usize, z: Var) -> Result<Var> {
    let p = |s: &str| format!("blocks.{layer}.mlp.{s}");
    let a = layer_norm(g, vars, z, &p("ln"))?;
    let h = linear(g, a, vars.get(&p("w1"))?, vars.get(&p("b1"))?)?;
    let h = g.silu(h)?;
    let h = linear(g, h, vars.get(&p("w2"))?, vars.get(&p("b2"))?)?;
    Ok(g.add(z, h)?)
}

/// Input rows: frame values plus the observed-indicator column, projected
/// to `C` channels, plus the per-row timestep embedding.
fn embed<T: Real>(g: &Graph<'_, T>, vars: &ParamVars, cfg: &DenoiserConfig, input: &FrameSet<T>) -> Result<Var> {
    let (rows, fd, c) = (input.rows(), cfg.frame_dim, cfg.channels);
    let mut data = Vec::with_capacity(rows * (fd + 1));
    for r in 0..rows {
        data.extend_from_slice(input.frames.row(r));
        data.push(if input.observed[r] { T::one() } else { T::zero() });
    }
    let x = g.constant(Tensor::matrix(rows, fd + 1, data)?)?;
    let z = linear(g, x, vars.get("input.w")?, vars.get("input.b")?)?;

    let emb: Vec<T> = input
        .t
        .iter()
        .flat_map(|&t| timestep_embedding(t, c))
        .map(real)
        .collect();
    let e = g.constant(Tensor::matrix(rows, c, emb)?)?;
    let e = linear(g, e, vars.get("time.w1")?, vars.get("time.b1")?)?;
    let e = g.silu(e)?;
    let e = linear(g, e, vars.get("time.w2")?, vars.get("time.b2")?)?;
    Ok(g.add(z, e)?)
}

/// Full network: returns a `rows x frame_dim` noise estimate for every row
/// of `input`. Observed rows' outputs are meaningless and should be dropped.
pub fn forward<T: Real>(g: &Graph<'_, T>, vars: &ParamVars, cfg: &DenoiserConfig, input: &FrameSet<T>) -> Result<Var> {
    input.validate(cfg)?;
    let mask = input.attention_mask();
    let pairs = Pairs::new(&input.pos);
    let mut z = embed(g, vars, cfg, input)?;
    for layer in 0..cfg.blocks {
        z = mlp_block(g, vars, layer, z)?;
        z = attention_with_pairs(g, vars, cfg, layer, z, &pairs, &mask)?;
    }
    let z = layer_norm(g, vars, z, "out.ln")?;
    linear(g, z, vars.get("out.w")?, vars.get("out.b")?)
}

/// `eps_theta(x_t, y, t)` for a single task: latent rows first, then
/// observed rows, all in one attention group. Returns `|X| x frame_dim`.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_theta<T: Real>(
    cfg: &DenoiserConfig,
    params: &ParamSet<T>,
    x_t: &Tensor<T>,
    y: &Tensor<T>,
    t: usize,
    latent: &[usize],
    observed: &[usize],
) -> Result<Tensor<T>> {
    crate::diffusion::check_task(latent, observed, cfg.k)?;
    let input = task_frame_set(cfg, x_t, y, t, latent, observed)?;
    let g = Graph::new();
    let vars = params.bind(&g)?;
    let out = forward(&g, &vars, cfg, &input)?;
    let idx: Vec<usize> = (0..latent.len()).collect();
    let picked = g.gather_rows(out, &idx)?;
    let value = g.value(picked).clone();
    Ok(value)
}

/// Stacks `x_t` over `y` into a single-group [`FrameSet`].
pub fn task_frame_set<T: Real>(
    cfg: &DenoiserConfig,
    x_t: &Tensor<T>,
    y: &Tensor<T>,
    t: usize,
    latent: &[usize],
    observed: &[usize],
) -> Result<FrameSet<T>> {
    let fd = cfg.frame_dim;
    if x_t.shape() != [latent.len(), fd] {
        return Err(Error::Shape(format!(
            "x_t {:?} for {} latents",
            x_t.shape(),
            latent.len()
        )));
    }
    if y.len() != observed.len() * fd {
        return Err(Error::Shape(format!(
            "y {:?} for {} observed",
            y.shape(),
            observed.len()
        )));
    }
    let rows = latent.len() + observed.len();
    let mut data = x_t.data().to_vec();
    data.extend_from_slice(y.data());
    Ok(FrameSet {
        frames: Tensor::matrix(rows, fd, data)?,
        observed: (0..rows).map(|r| r >= latent.len()).collect(),
        t: vec![t; rows],
        pos: latent.iter().chain(observed).copied().collect(),
        group: vec![0; rows],
    })
}
