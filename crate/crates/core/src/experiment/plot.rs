//! Deterministic SVG charts rendered from the CSV files of a run bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 56.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(w: f64, h: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        esc(title)
    )
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Finite range of the values, widened when degenerate.
fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
    /// Values printed at the left and right ends of the x axis.
    xticks: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, ylabel: &str) {
        let _ = writeln!(
            out,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>",
            self.x0, self.y0, self.w, self.h
        );
        let font = "font-family=\"sans-serif\" font-size=\"10\"";
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {font} text-anchor=\"end\">{}</text>",
            self.x0 - 4.0,
            self.y0 + 8.0,
            fmt_tick(self.yr.1)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {font} text-anchor=\"end\">{}</text>",
            self.x0 - 4.0,
            self.y0 + self.h,
            fmt_tick(self.yr.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {font}>{}</text>",
            self.x0,
            self.y0 + self.h + 12.0,
            fmt_tick(self.xticks.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {font} text-anchor=\"end\">{}</text>",
            self.x0 + self.w,
            self.y0 + self.h + 12.0,
            fmt_tick(self.xticks.1)
        );
        if !ylabel.is_empty() {
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" {font} transform=\"rotate(-90 {:.1} {:.1})\" text-anchor=\"middle\">{}</text>",
                self.x0 - 30.0,
                self.y0 + self.h / 2.0,
                self.x0 - 30.0,
                self.y0 + self.h / 2.0,
                esc(ylabel)
            );
        }
        if self.yr.0 < 0.0 && self.yr.1 > 0.0 {
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#bbb\"/>",
                self.x0,
                self.py(0.0),
                self.x0 + self.w,
                self.py(0.0)
            );
        }
    }

    fn polyline(&self, out: &mut String, s: &Series, color: &str, dashed: bool) {
        let pts: Vec<String> = s
            .x
            .iter()
            .zip(&s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed { " stroke-dasharray=\"5,3\"" } else { "" };
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            pts.join(" ")
        );
    }
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn legend(out: &mut String, labels: &[(&str, &str, bool)]) {
    for (i, (label, color, dashed)) in labels.iter().enumerate() {
        let y = 36.0 + 14.0 * i as f64;
        let dash = if *dashed { " stroke-dasharray=\"5,3\"" } else { "" };
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            W - MARGIN - 110.0,
            W - MARGIN - 90.0,
            W - MARGIN - 86.0,
            y + 3.0,
            esc(label)
        );
    }
}

/// Line chart; with `log_y` the base-10 logarithm of positive values is drawn.
pub fn svg_lines(title: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let series: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            x: s.x.clone(),
            y: if log_y {
                s.y.iter().map(|&v| if v > 0.0 { v.log10() } else { f64::NAN }).collect()
            } else {
                s.y.clone()
            },
        })
        .collect();
    let xr = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let frame = Frame {
        x0: MARGIN,
        y0: MARGIN - 16.0,
        w: W - 2.0 * MARGIN,
        h: H - 2.0 * MARGIN,
        xr,
        yr: range(series.iter().flat_map(|s| s.y.iter().copied())),
        xticks: xr,
    };
    let mut out = header(W, H, title);
    frame.axes(&mut out, if log_y { "log10" } else { ylabel });
    let mut labels = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        frame.polyline(&mut out, s, color, false);
        labels.push((s.label.as_str(), color, false));
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Bar chart of `values` by index, with an optional dashed reference curve.
pub fn svg_bars(title: &str, values: &[f64], reference: Option<&[f64]>) -> String {
    let n = values.len().max(1) as f64;
    let frame = Frame {
        x0: MARGIN,
        y0: MARGIN - 16.0,
        w: W - 2.0 * MARGIN,
        h: H - 2.0 * MARGIN,
        xr: (-0.5, n - 0.5),
        yr: range(
            values
                .iter()
                .copied()
                .chain(reference.into_iter().flatten().copied())
                .chain(std::iter::once(0.0)),
        ),
        xticks: (0.0, n - 1.0),
    };
    let mut out = header(W, H, title);
    frame.axes(&mut out, "");
    let bw = frame.w / n * 0.8;
    for (i, &v) in values.iter().enumerate() {
        let x = frame.px(i as f64) - bw / 2.0;
        let (top, bottom) = if v >= 0.0 {
            (frame.py(v), frame.py(0.0))
        } else {
            (frame.py(0.0), frame.py(v))
        };
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            (bottom - top).max(0.0),
            COLORS[0]
        );
    }
    if let Some(r) = reference {
        let s = Series {
            label: "true".into(),
            x: (0..r.len()).map(|i| i as f64).collect(),
            y: r.to_vec(),
        };
        frame.polyline(&mut out, &s, COLORS[1], true);
        legend(&mut out, &[("reconstruction", COLORS[0], false), ("true", COLORS[1], true)]);
    }
    out.push_str("</svg>\n");
    out
}

/// Polar plot of magnitudes against angle; the printed number is the largest magnitude.
pub fn svg_polar(title: &str, angles: &[f64], values: &[f64], reference: Option<&[f64]>) -> String {
    let size = 420.0;
    let (cx, cy, rad) = (size / 2.0, size / 2.0 + 10.0, size / 2.0 - 40.0);
    let peak = values
        .iter()
        .chain(reference.into_iter().flatten())
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 { peak } else { 1.0 };
    let mut out = header(size, size + 20.0, title);
    for frac in [0.5, 1.0] {
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{:.1}\" fill=\"none\" stroke=\"#ccc\"/>",
            rad * frac
        );
    }
    for deg in (0..360).step_by(45) {
        let t = (deg as f64).to_radians();
        let _ = writeln!(
            out,
            "<line x1=\"{cx:.1}\" y1=\"{cy:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>",
            cx + rad * t.cos(),
            cy - rad * t.sin()
        );
    }
    let path = |vals: &[f64]| -> String {
        angles
            .iter()
            .zip(vals)
            .map(|(&t, &v)| {
                let r = rad * v.abs() / scale;
                format!("{:.2},{:.2}", cx + r * t.cos(), cy - r * t.sin())
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    if let Some(r) = reference {
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"/>",
            path(r),
            COLORS[1]
        );
    }
    let _ = writeln!(
        out,
        "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.25\" stroke=\"{}\" stroke-width=\"1.5\"/>",
        path(values),
        COLORS[0],
        COLORS[0]
    );
    let t = 22.5f64.to_radians();
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        cx + 0.8 * rad * t.cos(),
        cy - 0.8 * rad * t.sin(),
        fmt_tick(peak)
    );
    out.push_str("</svg>\n");
    out
}

/// Grid of small line charts, three per row.
pub fn svg_grid(title: &str, panels: &[Series]) -> String {
    let cols = 3usize;
    let rows = panels.len().div_ceil(cols).max(1);
    let (pw, ph) = (210.0, 150.0);
    let (w, h) = (pw * cols as f64, ph * rows as f64 + 30.0);
    let mut out = header(w, h, title);
    for (i, s) in panels.iter().enumerate() {
        let (r, c) = (i / cols, i % cols);
        let xr = range(s.x.iter().copied());
        let frame = Frame {
            x0: c as f64 * pw + 52.0,
            y0: r as f64 * ph + 44.0,
            w: pw - 64.0,
            h: ph - 44.0,
            xr,
            yr: range(s.y.iter().copied()),
            xticks: xr,
        };
        frame.axes(&mut out, "");
        frame.polyline(&mut out, s, COLORS[0], false);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            frame.x0 + frame.w / 2.0,
            frame.y0 - 4.0,
            esc(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Header and numeric columns of a CSV file; empty cells become NaN.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if !path.is_file() {
        return Err(Error::Input(format!("missing bundle file {}", path.display())));
    }
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        for (c, field) in rec.iter().enumerate().take(headers.len()) {
            let v = if field.is_empty() {
                f64::NAN
            } else if let Ok(b) = field.parse::<bool>() {
                f64::from(u8::from(b))
            } else {
                field.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: line + 2,
                    msg: format!("not a number: {field:?}"),
                })?
            };
            cols[c].push(v);
        }
    }
    Ok((headers, cols))
}

fn column<'a>(path: &Path, data: &'a (Vec<String>, Vec<Vec<f64>>), name: &str) -> Result<&'a [f64]> {
    data.0
        .iter()
        .position(|h| h == name)
        .map(|i| data.1[i].as_slice())
        .ok_or_else(|| Error::Input(format!("{}: no column {name:?}", path.display())))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Renders every chart of a bundle written by `run_experiment` into `<bundle>/plots`.
pub fn emit_plots(bundle: &Path) -> Result<Vec<PathBuf>> {
    let info_path = bundle.join("model").join("info.json");
    if !info_path.is_file() {
        return Err(Error::Input(format!("missing bundle file {}", info_path.display())));
    }
    let info: serde_json::Value = serde_json::from_str(&fs::read_to_string(&info_path)?)?;
    let periodic = info.get("period").is_some_and(|p| !p.is_null());
    let model = info.get("model").and_then(|m| m.as_str()).unwrap_or("model").to_string();
    let plots = bundle.join("plots");
    fs::create_dir_all(&plots)?;
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, svg: String| -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, svg)?;
        written.push(path);
        Ok(())
    };

    let sv_path = bundle.join("model").join("singular_values.csv");
    let sv = read_csv(&sv_path)?;
    let spectrum = Series {
        label: "σ_i".into(),
        x: column(&sv_path, &sv, "index")?.to_vec(),
        y: column(&sv_path, &sv, "sigma")?.to_vec(),
    };
    emit(plots.join("spectrum.svg"), svg_lines(&format!("{model}: singular values"), "", &[spectrum], true))?;

    let rv_path = bundle.join("model").join("right_vectors.csv");
    let rv = read_csv(&rv_path)?;
    let idx = column(&rv_path, &rv, "index")?.to_vec();
    let panels: Vec<Series> = rv
        .0
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, name)| Series {
            label: name.clone(),
            x: idx.clone(),
            y: rv.1[c].clone(),
        })
        .collect();
    emit(plots.join("singular_vectors.svg"), svg_grid(&format!("{model}: right singular vectors"), &panels))?;

    let co_path = bundle.join("model").join("coords.csv");
    let co = read_csv(&co_path)?;
    let coords = column(&co_path, &co, "coord")?.to_vec();
    let truth = column(&co_path, &co, "true_value")?.to_vec();
    let truth = (!truth.iter().any(|v| v.is_nan())).then_some(truth);

    let cells = bundle.join("cells");
    if cells.is_dir() {
        for dir in sorted_entries(&cells)?.into_iter().filter(|p| p.is_dir()) {
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let out_dir = plots.join(&name);
            let wpath = dir.join("weights.csv");
            let wd = read_csv(&wpath)?;
            let weights = column(&wpath, &wd, "weight")?;
            emit(out_dir.join("weights.svg"), svg_bars(&format!("weights {name}"), weights, None))?;
            for file in sorted_entries(&dir)? {
                let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                if file.extension().is_none_or(|e| e != "csv") || stem == "weights" || stem == "data" {
                    continue;
                }
                let rd = read_csv(&file)?;
                let x = column(&file, &rd, "value")?;
                let title = format!("{stem} {name}");
                let svg = if periodic {
                    svg_polar(&title, &coords, x, truth.as_deref())
                } else {
                    svg_bars(&title, x, truth.as_deref())
                };
                emit(out_dir.join(format!("{stem}.svg")), svg)?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_reconstruction_gives_flat_plot() {
        let svg = svg_bars("zeros", &[0.0; 5], None);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("NaN"));
        let svg = svg_polar("zeros", &[0.0, 1.0, 2.0], &[0.0; 3], None);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn log_lines_skip_nonpositive() {
        let s = Series {
            label: "s".into(),
            x: vec![1.0, 2.0, 3.0],
            y: vec![1.0, 0.0, 1e-3],
        };
        let svg = svg_lines("t", "", &[s], true);
        assert!(!svg.contains("NaN"));
        assert_eq!(svg_lines("t", "", &[], false), svg_lines("t", "", &[], false));
    }

    #[test]
    fn titles_are_escaped() {
        assert!(svg_bars("a<b & c", &[1.0], None).contains("a&lt;b &amp; c"));
    }

    #[test]
    fn missing_bundle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_plots(dir.path()).unwrap_err().to_string();
        assert!(err.contains("missing bundle file"), "{err}");
    }
}
