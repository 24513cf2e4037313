use std::fmt::Write;

use super::SamplingScheme;

const CELL: usize = 12;
const LATENT: &str = "#1f77b4";
const OBSERVED: &str = "#d62728";
const IGNORED: &str = "#bdbdbd";
const UNSAMPLED: &str = "#ffffff";

/// One row per stage, one column per frame: latent frames blue, observed
/// red, available but unused gray, not yet sampled white.
pub fn render_svg(scheme: &SamplingScheme) -> String {
    let (w, h) = (scheme.n * CELL, scheme.stages.len().max(1) * CELL);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let mut available = vec![false; scheme.n];
    available.iter_mut().take(scheme.n_obs).for_each(|a| *a = true);
    for (s, stage) in scheme.stages.iter().enumerate() {
        for (i, avail) in available.iter().enumerate() {
            let fill = if stage.latent.contains(&i) {
                LATENT
            } else if stage.observed.contains(&i) {
                OBSERVED
            } else if *avail {
                IGNORED
            } else {
                UNSAMPLED
            };
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#666" stroke-width="0.5"/>"##,
                i * CELL,
                s * CELL
            );
        }
        for &i in &stage.latent {
            if i < scheme.n {
                available[i] = true;
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::make_autoreg;

    #[test]
    fn one_row_per_stage() {
        let s = make_autoreg(30, 10, 7).unwrap();
        let svg = render_svg(&s);
        assert_eq!(svg.matches("<rect").count(), 7 * 30);
        assert_eq!(svg.matches(LATENT).count(), 20);
        assert_eq!(svg.matches(OBSERVED).count(), 7 * 4);
    }
}
