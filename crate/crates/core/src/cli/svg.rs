//! A small SVG writer for the `report` command. Output depends only on the
//! data: coordinates are printed with fixed precision and nothing reads the
//! clock or the environment.

use std::fmt::Write;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::measure::dimension::fit_line;

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 260.0;
const TOP: f64 = 50.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const PAD_TOP: f64 = 30.0;
const PAD_BOTTOM: f64 = 45.0;

/// One profile row as plotted.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterPoint {
    pub level: i32,
    pub radius: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxFit {
    pub estimate: f64,
    pub scales: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportData {
    pub title: String,
    pub has_profile: bool,
    pub scatter: Vec<ScatterPoint>,
    pub has_sums: bool,
    /// (level, increment)
    pub bars: Vec<(i32, f64)>,
    pub boxcount: Option<BoxFit>,
}

fn csv_columns<'a>(rdr: &mut csv::Reader<&'a [u8]>, need: &[&str]) -> Result<Vec<usize>> {
    let headers = rdr.headers().map_err(|e| Error::Schema {
        field: "header".into(),
        reason: e.to_string(),
    })?;
    need.iter()
        .map(|&col| {
            headers.iter().position(|h| h == col).ok_or_else(|| Error::Schema {
                field: col.into(),
                reason: format!("missing column `{col}`"),
            })
        })
        .collect()
}

fn cell<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, col: &str, row: usize) -> Result<T> {
    rec.get(idx).and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Schema {
        field: col.into(),
        reason: format!("row {row}: cannot parse `{}`", rec.get(idx).unwrap_or("")),
    })
}

/// Rows of a β profile CSV; needs `level`, `radius` and `value`.
pub fn read_profile(text: &str) -> Result<Vec<ScatterPoint>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let cols = csv_columns(&mut rdr, &["level", "radius", "value"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema {
            field: format!("row {}", i + 1),
            reason: e.to_string(),
        })?;
        out.push(ScatterPoint {
            level: cell(&rec, cols[0], "level", i + 1)?,
            radius: cell(&rec, cols[1], "radius", i + 1)?,
            value: cell(&rec, cols[2], "value", i + 1)?,
        });
    }
    Ok(out)
}

/// Rows of a β-sum CSV; needs `level` and `increment`.
pub fn read_sums(text: &str) -> Result<Vec<(i32, f64)>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let cols = csv_columns(&mut rdr, &["level", "increment"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema {
            field: format!("row {}", i + 1),
            reason: e.to_string(),
        })?;
        out.push((cell(&rec, cols[0], "level", i + 1)?, cell(&rec, cols[1], "increment", i + 1)?));
    }
    Ok(out)
}

/// A box-counting report, bare or wrapped in a `result` field.
pub fn read_dimension(v: &Value) -> Result<BoxFit> {
    let body = v.get("result").unwrap_or(v);
    let estimate = body.get("estimate").and_then(Value::as_f64).ok_or_else(|| Error::Schema {
        field: "estimate".into(),
        reason: "missing number `estimate`".into(),
    })?;
    let list = body.get("scales").and_then(Value::as_array).ok_or_else(|| Error::Schema {
        field: "scales".into(),
        reason: "missing array `scales` of [epsilon, count] pairs".into(),
    })?;
    let mut scales = Vec::with_capacity(list.len());
    for (i, pair) in list.iter().enumerate() {
        let e = pair.get(0).and_then(Value::as_f64);
        let n = pair.get(1).and_then(Value::as_f64);
        match (e, n) {
            (Some(e), Some(n)) if e > 0.0 && n > 0.0 => scales.push((e, n)),
            _ => {
                return Err(Error::Schema {
                    field: format!("scales[{i}]"),
                    reason: "expected a positive [epsilon, count] pair".into(),
                })
            }
        }
    }
    Ok(BoxFit { estimate, scales })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Fixed-precision number for coordinates.
fn f(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick label with three significant digits.
fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        return format!("{}", v as i64);
    }
    let mag = v.abs().log10().floor() as i32;
    if (-3..4).contains(&mag) {
        let d = (2 - mag).max(0) as usize;
        format!("{v:.d$}")
    } else {
        format!("{v:.2e}")
    }
}

/// Maps data ranges onto a panel's plot area.
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi - lo <= 0.0 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl Frame {
    fn new(index: usize, xr: (f64, f64), yr: (f64, f64)) -> Frame {
        let top = TOP + index as f64 * PANEL_H;
        Frame {
            x0: LEFT,
            y0: top + PAD_TOP,
            w: WIDTH - LEFT - RIGHT,
            h: PANEL_H - PAD_TOP - PAD_BOTTOM,
            xr: widen(xr),
            yr: widen(yr),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    /// Axes with five ticks per axis, or the given x ticks.
    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str, xticks: Option<&[f64]>) {
        let (l, r, t, b) = (self.x0, self.x0 + self.w, self.y0, self.y0 + self.h);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" class=\"panel\">{}</text>", f(l), f(t - 10.0), escape(title));
        let _ = writeln!(out, "<path d=\"M{} {}H{}M{} {}V{}\" class=\"axis\"/>", f(l), f(b), f(r), f(l), f(b), f(t));
        let even: Vec<f64> = (0..=4).map(|k| self.xr.0 + (self.xr.1 - self.xr.0) * k as f64 / 4.0).collect();
        for &fx in xticks.unwrap_or(&even) {
            let x = self.px(fx);
            let _ = writeln!(
                out,
                "<path d=\"M{} {}v5\" class=\"axis\"/><text x=\"{}\" y=\"{}\" class=\"tx\">{}</text>",
                f(x), f(b), f(x), f(b + 18.0), tick(fx)
            );
        }
        for k in 0..=4 {
            let fy = self.yr.0 + (self.yr.1 - self.yr.0) * k as f64 / 4.0;
            let y = self.py(fy);
            let _ = writeln!(
                out,
                "<path d=\"M{} {}h-5\" class=\"axis\"/><text x=\"{}\" y=\"{}\" class=\"ty\">{}</text>",
                f(l), f(y), f(l - 8.0), f(y + 4.0), tick(fy)
            );
        }
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" class=\"tx\">{}</text>", f(l + self.w / 2.0), f(b + 36.0), escape(xlabel));
        let _ = writeln!(
            out,
            "<text transform=\"translate({} {}) rotate(-90)\" class=\"tx\">{}</text>",
            f(l - 58.0),
            f(t + self.h / 2.0),
            escape(ylabel)
        );
    }

    fn no_data(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" class=\"nodata\">no data</text>",
            f(self.x0 + self.w / 2.0),
            f(self.y0 + self.h / 2.0)
        );
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn scatter_panel(out: &mut String, data: &ReportData) {
    let pts: Vec<(f64, f64)> = data
        .scatter
        .iter()
        .filter(|p| p.radius > 0.0 && p.value.is_finite())
        .map(|p| (p.radius.log10(), p.value))
        .collect();
    let (ylo, yhi) = range(pts.iter().map(|p| p.1));
    let yr = if pts.is_empty() || yhi <= 0.0 { (0.0, 1.0) } else { (ylo.min(0.0), yhi) };
    let fr = Frame::new(0, range(pts.iter().map(|p| p.0)), yr);
    fr.axes(out, "β against scale", "log10 radius", "β", None);
    if pts.is_empty() {
        fr.no_data(out);
        return;
    }
    for (x, y) in pts {
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" class=\"pt\"/>", f(fr.px(x)), f(fr.py(y)));
    }
}

fn bars_panel(out: &mut String, data: &ReportData) {
    let bars = &data.bars;
    let (_, hi) = range(bars.iter().map(|b| b.1));
    let (llo, lhi) = range(bars.iter().map(|b| b.0 as f64));
    let fr = Frame::new(
        1,
        (llo - 0.5, lhi + 0.5),
        (0.0, if bars.is_empty() || hi <= 0.0 { 1.0 } else { hi }),
    );
    let levels: Vec<f64> = bars.iter().map(|b| b.0 as f64).collect();
    fr.axes(
        out,
        "β-sum increment per level",
        "level",
        "increment",
        (!levels.is_empty()).then_some(levels.as_slice()),
    );
    if bars.is_empty() {
        fr.no_data(out);
        return;
    }
    let bw = fr.w / (lhi - llo + 1.0) * 0.7;
    for &(level, inc) in bars {
        let x = fr.px(level as f64) - bw / 2.0;
        let y = fr.py(inc.max(0.0));
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" class=\"bar\"/>",
            f(x),
            f(y),
            f(bw),
            f(fr.py(0.0) - y)
        );
    }
}

fn boxcount_panel(out: &mut String, data: &ReportData) {
    let pts: Vec<(f64, f64)> = data
        .boxcount
        .as_ref()
        .map(|b| b.scales.iter().map(|&(e, n)| (-e.log10(), n.log10())).collect())
        .unwrap_or_default();
    let fr = Frame::new(2, range(pts.iter().map(|p| p.0)), range(pts.iter().map(|p| p.1)));
    fr.axes(out, "box counting", "log10 1/ε", "log10 N(ε)", None);
    let Some(fit) = data.boxcount.as_ref().filter(|_| pts.len() >= 2) else {
        fr.no_data(out);
        return;
    };
    for &(x, y) in &pts {
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"3\" class=\"pt\"/>", f(fr.px(x)), f(fr.py(y)));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, icpt, _) = fit_line(&xs, &ys);
    let (a, b) = fr.xr;
    let _ = writeln!(
        out,
        "<path d=\"M{} {}L{} {}\" class=\"fit\"/>",
        f(fr.px(a)),
        f(fr.py(icpt + slope * a)),
        f(fr.px(b)),
        f(fr.py(icpt + slope * b))
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" class=\"slope\">slope = {:.4}</text>",
        f(fr.x0 + 10.0),
        f(fr.y0 + 16.0),
        fit.estimate
    );
}

/// The full document; `provenance` is embedded as metadata.
pub fn render(data: &ReportData, provenance: &Value) -> String {
    let height = TOP + 3.0 * PANEL_H;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        f(WIDTH),
        f(height),
        f(WIDTH),
        f(height)
    );
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(&provenance.to_string()));
    out.push_str(
        "<style>text{font-family:sans-serif;font-size:11px}.panel{font-size:13px;font-weight:bold}\
.tx{text-anchor:middle}.ty{text-anchor:end}.nodata{text-anchor:middle;font-size:16px;fill:#888}\
.axis{stroke:#000;fill:none}.pt{fill:#1f5fa8}.bar{fill:#d08a2c}.fit{stroke:#b02020;stroke-width:1.5}\
.slope{fill:#b02020;font-size:13px}</style>\n",
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>");
    let _ = writeln!(out, "<text x=\"{}\" y=\"28\" class=\"panel\">{}</text>", f(LEFT), escape(&data.title));
    scatter_panel(&mut out, data);
    bars_panel(&mut out, data);
    boxcount_panel(&mut out, data);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inputs_say_no_data() {
        let svg = render(&ReportData::default(), &Value::Null);
        assert_eq!(svg.matches("no data").count(), 3);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn missing_column_is_named() {
        match read_profile("level,radius\n0,1\n") {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "value"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_sums("level,count\n"), Err(Error::Schema { field, .. }) if field == "increment"));
    }

    #[test]
    fn zero_profile_sits_on_the_axis() {
        let pts = read_profile("level,point_index,radius,kind,value,bound,witness_json\n0,0,2,hat,0,exact,\"null\"\n1,0,1,hat,0,exact,\"null\"\n")
            .unwrap();
        let data = ReportData {
            has_profile: true,
            scatter: pts,
            ..ReportData::default()
        };
        let svg = render(&data, &Value::Null);
        let fr = Frame::new(0, (0.0, 1.0), (0.0, 1.0));
        let base = format!("cy=\"{}\"", f(fr.py(0.0)));
        assert_eq!(svg.matches(&base).count(), 2);
    }

    #[test]
    fn slope_annotation() {
        let v = serde_json::json!({"result": {"estimate": 1.5, "scales": [[0.1, 31.6], [0.01, 1000.0]]}});
        let data = ReportData {
            boxcount: Some(read_dimension(&v).unwrap()),
            ..ReportData::default()
        };
        assert!(render(&data, &Value::Null).contains("slope = 1.5000"));
        assert!(matches!(read_dimension(&serde_json::json!({"estimate": 1.0})), Err(Error::Schema { field, .. }) if field == "scales"));
    }
}
