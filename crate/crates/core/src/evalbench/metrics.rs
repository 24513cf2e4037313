use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

/// `|pos[i + lag] - pos[i]| / (lag / fps)` for every valid `i`, where the
/// position is the first two channels.
pub fn estimate_speeds(video: ArrayView2<'_, f32>, lag: usize, fps: f64) -> Result<Vec<f64>> {
    if lag == 0 || video.nrows() <= lag {
        return Err(Error::invalid(format!(
            "need more than {lag} frames for lag-{lag} speeds, got {}",
            video.nrows()
        )));
    }
    if video.ncols() < 2 {
        return Err(Error::Shape("speed estimation needs two position channels".into()));
    }
    let dt = lag as f64 / fps;
    Ok((0..video.nrows() - lag)
        .map(|i| {
            let dx = (video[[i + lag, 0]] - video[[i, 0]]) as f64;
            let dy = (video[[i + lag, 1]] - video[[i, 1]]) as f64;
            dx.hypot(dy) / dt
        })
        .collect())
}

/// Percent of speeds strictly above `threshold`.
pub fn outlier_pct(speeds: &[f64], threshold: f64) -> Result<f64> {
    if speeds.is_empty() {
        return Err(Error::invalid("no speeds"));
    }
    let over = speeds.iter().filter(|&&s| s > threshold).count();
    Ok(100.0 * over as f64 / speeds.len() as f64)
}

/// Speeds at or below `threshold`.
pub fn within_threshold(speeds: &[f64], threshold: f64) -> Vec<f64> {
    speeds.iter().copied().filter(|&s| s <= threshold).collect()
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("sample contains NaN"));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// 1-Wasserstein distance between two empirical distributions, as the
/// integral of `|F_a - F_b|` over the merged support.
pub fn wasserstein1d(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (x - prev);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        prev = x;
    }
    Ok(total)
}

/// Fraction of frames whose colour is within 0.5 of the colour the same
/// room showed on its first appearance in the video. The room is the
/// argmax of the first `n_rooms` channels; the colour is the next channel.
pub fn color_accuracy(video: ArrayView2<'_, f32>, n_rooms: usize) -> Result<f64> {
    if n_rooms == 0 || video.ncols() < n_rooms + 1 {
        return Err(Error::Shape(format!(
            "frames of dim {} cannot hold {n_rooms} rooms and a colour",
            video.ncols()
        )));
    }
    if video.nrows() == 0 {
        return Err(Error::invalid("empty video"));
    }
    let mut reference: Vec<Option<f32>> = vec![None; n_rooms];
    let mut hits = 0usize;
    for row in video.rows() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("frame is not decodable"));
        }
        let mut room = 0;
        for r in 1..n_rooms {
            if row[r] > row[room] {
                room = r;
            }
        }
        let color = row[n_rooms];
        let want = *reference[room].get_or_insert(color);
        if (color - want).abs() < 0.5 {
            hits += 1;
        }
    }
    Ok(hits as f64 / video.nrows() as f64)
}

/// Per-video summary: mean and variance of lag-10 speeds, start-to-end
/// displacement, then the mean and variance of every channel.
pub fn features(video: ArrayView2<'_, f32>, fps: f64) -> Result<Vec<f64>> {
    let speeds = estimate_speeds(video, 10, fps)?;
    let (m, v) = mean_var(&speeds);
    let last = video.nrows() - 1;
    let disp = ((video[[last, 0]] - video[[0, 0]]) as f64).hypot((video[[last, 1]] - video[[0, 1]]) as f64);
    let mut out = vec![m, v, disp];
    for col in video.columns() {
        let c: Vec<f64> = col.iter().map(|&x| x as f64).collect();
        let (cm, cv) = mean_var(&c);
        out.push(cm);
        out.push(cv);
    }
    Ok(out)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n)
}

/// Sample mean and unbiased covariance of row vectors.
pub fn gaussian_stats(rows: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if rows.len() < 2 {
        return Err(Error::invalid("need at least two feature vectors"));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("feature vectors differ in length".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite feature"));
    }
    let n = rows.len() as f64;
    let mut mu = DVector::zeros(d);
    for r in rows {
        mu += DVector::from_column_slice(r);
    }
    mu /= n;
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        let c = DVector::from_column_slice(r) - &mu;
        cov += &c * c.transpose();
    }
    cov /= n - 1.0;
    Ok((mu, cov))
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2))`, both covariances
/// ridged by 1e-6. The trace of the product root is taken from the
/// symmetric matrix `S1^(1/2) S2 S1^(1/2)`, which has the same spectrum.
pub fn frechet_from_stats(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d || s1.shape() != (d, d) || s2.shape() != (d, d) {
        return Err(Error::Shape("Gaussian statistics differ in dimension".into()));
    }
    let ridge = DMatrix::identity(d, d) * 1e-6;
    let (s1, s2) = (s1 + &ridge, s2 + &ridge);
    let r1 = sym_sqrt(&s1);
    let inner = &r1 * &s2 * &r1;
    let inner = (&inner + inner.transpose()) * 0.5;
    let tr_root: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let value = (mu1 - mu2).norm_squared() + s1.trace() + s2.trace() - 2.0 * tr_root;
    Ok(value.max(0.0))
}

/// Fréchet distance between Gaussians fitted to two feature sets.
pub fn frechet_gaussian(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let (m1, s1) = gaussian_stats(a)?;
    let (m2, s2) = gaussian_stats(b)?;
    frechet_from_stats(&m1, &s1, &m2, &s2)
}

/// Equal-width bins over `[lo, hi]`; values outside are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

pub fn speed_histogram(speeds: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::invalid("histogram needs bins >= 1 and hi > lo"));
    }
    let mut counts = vec![0; bins];
    let w = (hi - lo) / bins as f64;
    for &s in speeds {
        if s >= lo && s <= hi {
            counts[(((s - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    Ok(Histogram { lo, hi, counts })
}

/// `bin_lo,bin_hi,<label>...` with one count column per histogram. All
/// histograms must share their bins.
pub fn histogram_csv(series: &[(&str, &Histogram)]) -> Result<String> {
    let Some((_, first)) = series.first() else {
        return Err(Error::invalid("no histograms"));
    };
    if series
        .iter()
        .any(|(_, h)| h.lo != first.lo || h.hi != first.hi || h.counts.len() != first.counts.len())
    {
        return Err(Error::invalid("histograms use different bins"));
    }
    let mut out = String::from("bin_lo,bin_hi");
    for (name, _) in series {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let w = (first.hi - first.lo) / first.counts.len() as f64;
    for b in 0..first.counts.len() {
        out.push_str(&format!(
            "{},{}",
            first.lo + w * b as f64,
            first.lo + w * (b + 1) as f64
        ));
        for (_, h) in series {
            out.push_str(&format!(",{}", h.counts[b]));
        }
        out.push('\n');
    }
    Ok(out)
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Overlaid normalized histograms as step outlines.
pub fn histogram_svg(series: &[(&str, &Histogram)]) -> Result<String> {
    histogram_csv(series)?;
    let (w, h, pad) = (480.0, 240.0, 30.0);
    let bins = series[0].1.counts.len();
    let dens: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, hist)| {
            let total = hist.counts.iter().sum::<usize>().max(1) as f64;
            hist.counts.iter().map(|&c| c as f64 / total).collect()
        })
        .collect();
    let top = dens.iter().flatten().fold(1e-12f64, |a, &b| a.max(b));
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n",
        w + 2.0 * pad,
        h + 2.0 * pad
    );
    svg.push_str(&format!(
        "<line x1=\"{pad}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"black\"/>\n",
        y = pad + h,
        x = pad + w
    ));
    for (i, d) in dens.iter().enumerate() {
        let mut path = format!("M{pad},{}", pad + h);
        for (b, &v) in d.iter().enumerate() {
            let y = pad + h - h * v / top;
            path.push_str(&format!(
                " L{:.2},{y:.2} L{:.2},{y:.2}",
                pad + w * b as f64 / bins as f64,
                pad + w * (b + 1) as f64 / bins as f64
            ));
        }
        path.push_str(&format!(" L{},{}", pad + w, pad + h));
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{}\"/>\n<text x=\"{}\" y=\"{}\" fill=\"{}\" font-size=\"12\">{}</text>\n",
            COLORS[i % COLORS.len()],
            pad + w - 100.0,
            pad + 14.0 * (i + 1) as f64,
            COLORS[i % COLORS.len()],
            series[i].0
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Features of every video, in order.
pub fn feature_rows(videos: &[Array2<f32>], fps: f64) -> Result<Vec<Vec<f64>>> {
    videos.iter().map(|v| features(v.view(), fps)).collect()
}
