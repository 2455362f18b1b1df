//! Static SVG figures. No plotting dependency: the markup is small enough
//! to write by hand.

use std::fmt::Write as _;
use std::path::Path;

use super::HarnessError;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

/// Equal-width histogram over the range of the values and the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, reference: f64) -> Self {
        let bins = bins.max(1);
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let (mut lo, mut hi) = finite.fold((reference, reference), |(a, b), v| (a.min(v), b.max(v)));
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for v in values.iter().filter(|v| v.is_finite()) {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn edges(&self) -> Vec<f64> {
        let k = self.counts.len();
        (0..=k)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / k as f64)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let e = self.edges();
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", e[i], e[i + 1], c);
        }
        s
    }

    pub fn to_svg(&self, title: &str, reference: f64) -> String {
        let k = self.counts.len();
        let max = *self.counts.iter().max().unwrap_or(&1).max(&1) as f64;
        let plot_w = W - 2.0 * PAD;
        let plot_h = H - 2.0 * PAD;
        let x_of = |v: f64| PAD + (v - self.lo) / (self.hi - self.lo) * plot_w;
        let bar_w = plot_w / k as f64;
        let mut s = svg_open(title);
        for (i, &c) in self.counts.iter().enumerate() {
            let h = c as f64 / max * plot_h;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white" stroke-width="0.5"/>"##,
                PAD + i as f64 * bar_w,
                H - PAD - h,
                bar_w,
                h
            );
        }
        let xr = x_of(reference);
        let _ = writeln!(
            s,
            r##"<line x1="{xr:.2}" y1="{:.2}" x2="{xr:.2}" y2="{:.2}" stroke="#c44e52" stroke-width="2" stroke-dasharray="6,3"/>"##,
            PAD,
            H - PAD
        );
        axis_labels(&mut s, self.lo, self.hi, &format!("count (max {})", max as usize));
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn axis_labels(s: &mut String, lo: f64, hi: f64, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = H - PAD,
        x2 = W - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" text-anchor="start">{lo:.3}</text>"#,
        H - PAD + 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{hi:.3}</text>"#,
        W - PAD,
        H - PAD + 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" transform="rotate(-90 12 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

/// Writes an SVG histogram with a dashed reference line, plus the bin
/// counts as CSV next to it.
pub fn emit_histogram_svg(
    values: &[f64],
    bins: usize,
    reference: f64,
    title: &str,
    svg_path: &Path,
    csv_path: &Path,
) -> Result<Histogram, HarnessError> {
    if values.len() < 2 {
        return Err(HarnessError::NoData);
    }
    let h = Histogram::new(values, bins, reference);
    std::fs::write(svg_path, h.to_svg(title, reference))?;
    std::fs::write(csv_path, h.to_csv())?;
    Ok(h)
}

/// Scatter of `y` against `x` with the identity line.
pub fn emit_scatter_svg(
    x: &[f64],
    y: &[f64],
    title: &str,
    x_label: &str,
    y_label: &str,
    path: &Path,
) -> Result<(), HarnessError> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a, b))
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(HarnessError::NoData);
    }
    let (mut lo, mut hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(a, b)| {
        (l.min(a).min(b), h.max(a).max(b))
    });
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let span = W - 2.0 * PAD;
    let vspan = H - 2.0 * PAD;
    let px = |v: f64| PAD + (v - lo) / (hi - lo) * span;
    let py = |v: f64| H - PAD - (v - lo) / (hi - lo) * vspan;
    let mut s = svg_open(title);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4,3"/>"##,
        px(lo),
        py(lo),
        px(hi),
        py(hi)
    );
    for (a, b) in pts {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#4c72b0" fill-opacity="0.5"/>"##,
            px(a),
            py(b)
        );
    }
    axis_labels(&mut s, lo, hi, &format!("{y_label} vs {x_label}"));
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Density-scaled histogram of `values` with the `N(0, sd²)` density drawn
/// over it.
pub fn emit_density_overlay_svg(
    values: &[f64],
    bins: usize,
    sd: f64,
    title: &str,
    path: &Path,
) -> Result<Histogram, HarnessError> {
    if values.len() < 2 || !(sd > 0.0) {
        return Err(HarnessError::NoData);
    }
    let h = Histogram::new(values, bins, 0.0);
    let width = (h.hi - h.lo) / h.counts.len() as f64;
    let m = values.len() as f64;
    let dens: Vec<f64> = h.counts.iter().map(|&c| c as f64 / (m * width)).collect();
    let normal = |x: f64| (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let peak = dens.iter().copied().fold(normal(0.0), f64::max);
    let plot_w = W - 2.0 * PAD;
    let plot_h = H - 2.0 * PAD;
    let px = |x: f64| PAD + (x - h.lo) / (h.hi - h.lo) * plot_w;
    let py = |d: f64| H - PAD - d / peak * plot_h;
    let mut s = svg_open(title);
    for (i, d) in dens.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" fill-opacity="0.6"/>"##,
            px(h.lo + i as f64 * width),
            py(*d),
            plot_w / h.counts.len() as f64,
            d / peak * plot_h
        );
    }
    let pts: Vec<String> = (0..=200)
        .map(|k| {
            let x = h.lo + (h.hi - h.lo) * k as f64 / 200.0;
            format!("{:.2},{:.2}", px(x), py(normal(x)))
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#c44e52" stroke-width="2"/>"##,
        pts.join(" ")
    );
    axis_labels(&mut s, h.lo, h.hi, "density");
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_bins_thirty_rects() {
        let v: Vec<f64> = (0..1000).map(|i| 200.0 + (i as f64 * 0.37).sin() * 10.0).collect();
        let dir = tempfile::tempdir().unwrap();
        let (svg, csv) = (dir.path().join("h.svg"), dir.path().join("h.csv"));
        let h = emit_histogram_svg(&v, 30, 210.0, "OR", &svg, &csv).unwrap();
        let text = std::fs::read_to_string(&svg).unwrap();
        assert_eq!(text.matches("<rect").count(), 30);
        assert_eq!(h.counts.iter().sum::<usize>(), 1000);
        let rows = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(rows.lines().count(), 31);
    }

    #[test]
    fn overlay_has_bars_and_curve() {
        let v: Vec<f64> = (0..500).map(|i| ((i as f64) * 0.731).sin() * 2.0).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.svg");
        emit_density_overlay_svg(&v, 25, 1.0, "W", &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.matches("<rect").count(), 25);
        assert_eq!(text.matches("<polyline").count(), 1);
        assert!(emit_density_overlay_svg(&v, 25, 0.0, "W", &p).is_err());
    }

    #[test]
    fn equal_values_fill_one_bin() {
        let h = Histogram::new(&[3.0; 10], 7, 3.0);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts.iter().sum::<usize>(), 10);
        assert!(emit_histogram_svg(
            &[1.0],
            5,
            0.0,
            "x",
            Path::new("/nonexistent/a"),
            Path::new("/nonexistent/b")
        )
        .is_err());
    }
}
