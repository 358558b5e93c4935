//! Trace CSV files and static SVG line charts.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::run::{ConvergenceTrace, TraceRecord};

const FIXED_COLUMNS: [&str; 7] = ["t", "objective", "dist", "acc", "micros", "learner_micros", "example_id"];

pub fn trace_header(label_len: usize) -> Vec<String> {
    let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend((0..label_len).map(|k| format!("label_{k}")));
    h
}

/// Floats use the shortest representation that parses back to the same value.
pub fn write_trace<W: Write>(trace: &ConvergenceTrace, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trace_header(trace.label_len))?;
    for r in &trace.records {
        let mut row = vec![
            r.t.to_string(),
            format!("{:?}", r.objective),
            format!("{:?}", r.dist),
            format!("{:?}", r.acc),
            format!("{:?}", r.micros),
            format!("{:?}", r.learner_micros),
            r.example_id.map(|v| v.to_string()).unwrap_or_default(),
        ];
        row.extend((0..trace.label_len).map(|k| r.label.get(k).map(|v| format!("{v:?}")).unwrap_or_default()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace_csv(trace: &ConvergenceTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(trace, std::io::BufWriter::new(f)).map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })
}

pub fn read_trace<R: Read>(r: R, seed: u64) -> Result<ConvergenceTrace> {
    let mut rd = csv::Reader::from_reader(r);
    let csv_err = |e: csv::Error| Error::parse("trace csv", e.to_string());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::parse("trace csv", format!("unexpected header {header:?}")));
    }
    let label_len = header.len() - FIXED_COLUMNS.len();
    let num = |s: &str, col: &str| -> Result<f64> { s.parse().map_err(|e| Error::parse("trace csv", format!("{col} = {s:?}: {e}"))) };
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err)?;
        let t = row[0].parse().map_err(|e| Error::parse("trace csv", format!("t = {:?}: {e}", &row[0])))?;
        let example_id = match &row[6] {
            "" => None,
            s => Some(s.parse().map_err(|e| Error::parse("trace csv", format!("example_id = {s:?}: {e}")))?),
        };
        let label = (0..label_len).filter(|k| !row[7 + k].is_empty()).map(|k| num(&row[7 + k], "label")).collect::<Result<_>>()?;
        records.push(TraceRecord {
            t,
            objective: num(&row[1], "objective")?,
            dist: num(&row[2], "dist")?,
            acc: num(&row[3], "acc")?,
            micros: num(&row[4], "micros")?,
            learner_micros: num(&row[5], "learner_micros")?,
            example_id,
            label,
        });
    }
    Ok(ConvergenceTrace { seed, label_len, records })
}

pub fn read_trace_csv(path: impl AsRef<Path>, seed: u64) -> Result<ConvergenceTrace> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(f, seed)
}

/// Writes `name,col1,col2,...` rows of `(x, y...)` columns, e.g. mean curves.
pub fn write_columns_csv(path: impl AsRef<Path>, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    crate::error::check_len("write_columns_csv", header.len(), columns.len())?;
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArg("columns differ in length".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for i in 0..n {
        w.write_record(columns.iter().map(|c| format!("{:?}", c[i]))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a numeric CSV into `(header, columns)`.
pub fn read_columns_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for row in rd.records() {
        let row = row.map_err(csv_err)?;
        for (c, v) in cols.iter_mut().zip(row.iter()) {
            c.push(if v.is_empty() { f64::NAN } else { v.parse().map_err(|e| Error::parse(path.display().to_string(), format!("{v:?}: {e}")))? });
        }
    }
    Ok((header, cols))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self { title: String::new(), x_label: "iteration".into(), y_label: String::new(), log_y: false, width: 720.0, height: 440.0 }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

/// Renders a static SVG 1.1 line chart. Points with non-finite coordinates
/// (or non-positive `y` on a log axis) are skipped.
pub fn render_svg_chart(series: &[Series], cfg: &ChartConfig) -> Result<String> {
    for s in series {
        crate::error::check_len("chart series", s.x.len(), s.y.len())?;
    }
    let keep = |x: f64, y: f64| x.is_finite() && y.is_finite() && (!cfg.log_y || y > 0.0);
    let ty = |y: f64| if cfg.log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.x.iter().zip(&s.y).filter(|(x, y)| keep(**x, **y)).map(|(x, y)| (*x, ty(*y)))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), (x, y)| {
        (a.min(*x), b.max(*x), c.min(*y), d.max(*y))
    });
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (w, h) = (cfg.width, cfg.height);
    let (ml, mr, mt, mb) = (70.0, 160.0, 40.0, 50.0);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(&cfg.title));
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1"><line x1="{ml}" y1="{}" x2="{}" y2="{}"/><line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}"/></g>"#, h - mb, w - mr, h - mb, h - mb);
    s.push_str(r#"<g font-family="sans-serif" font-size="11">"#);
    s.push('\n');
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let ylab = if cfg.log_y { tick_label(10f64.powf(fy)) } else { tick_label(fy) };
        let _ = writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#, px(fx), h - mb, h - mb + 4.0, h - mb + 17.0, tick_label(fx));
        let _ = writeln!(s, r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#ddd"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"##, ml, py(fy), w - mr, ml - 6.0, py(fy) + 4.0, escape(&ylab));
    }
    s.push_str("</g>\n");
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, (ml + w - mr) / 2.0, h - 12.0, escape(&cfg.x_label));
    let ylab = if cfg.log_y { format!("{} (log scale)", cfg.y_label) } else { cfg.y_label.clone() };
    let _ = writeln!(s, r#"<text x="16" y="{0}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#, (mt + h - mb) / 2.0, escape(&ylab));
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let poly: Vec<String> = ser.x.iter().zip(&ser.y).filter(|(x, y)| keep(**x, **y)).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(ty(*y)))).collect();
        if !poly.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, poly.join(" "));
        }
        let ly = mt + 18.0 * k as f64 + 8.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="12">{5}</text>"#,
            w - mr + 10.0,
            ly,
            w - mr + 30.0,
            w - mr + 36.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg_chart(series: &[Series], path: impl AsRef<Path>, cfg: &ChartConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg_chart(series, cfg)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Checks that tags nest properly under a single root element.
    pub(crate) fn well_formed(svg: &str) -> std::result::Result<(), String> {
        let mut stack: Vec<String> = Vec::new();
        let mut roots = 0;
        let mut rest = svg;
        while let Some(i) = rest.find('<') {
            let j = rest[i..].find('>').ok_or("unterminated tag")? + i;
            let tag = &rest[i + 1..j];
            rest = &rest[j + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                match stack.pop() {
                    Some(open) if open == name.trim() => {}
                    other => return Err(format!("closing {name} does not match {other:?}")),
                }
                continue;
            }
            let name = tag.split_whitespace().next().ok_or("empty tag")?.trim_end_matches('/').to_string();
            if stack.is_empty() {
                roots += 1;
            }
            if !tag.ends_with('/') {
                stack.push(name);
            }
        }
        if !stack.is_empty() {
            return Err(format!("unclosed {stack:?}"));
        }
        if roots != 1 {
            return Err(format!("{roots} root elements"));
        }
        Ok(())
    }

    fn sample_trace() -> ConvergenceTrace {
        let mut records = vec![TraceRecord { t: 0, objective: 1.0 / 3.0, dist: 2.0, acc: f64::NAN, micros: 0.0, learner_micros: 0.0, example_id: None, label: vec![] }];
        records.push(TraceRecord { t: 1, objective: 0.1 + 0.2, dist: 1e-300, acc: 0.5, micros: 12.25, learner_micros: 3.0, example_id: Some(7), label: vec![-0.1, 1.0 / 7.0] });
        ConvergenceTrace { seed: 4, label_len: 2, records }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_trace(&ConvergenceTrace { seed: 0, label_len: 1, records: vec![] }, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,objective,dist,acc,micros,learner_micros,example_id,label_0\n");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let tr = sample_trace();
        let mut buf = Vec::new();
        write_trace(&tr, &mut buf).unwrap();
        let back = read_trace(buf.as_slice(), 4).unwrap();
        assert_eq!(back.records.len(), 2);
        for (a, b) in tr.records.iter().zip(&back.records) {
            assert_eq!((a.t, a.example_id, &a.label), (b.t, b.example_id, &b.label));
            for (x, y) in [(a.objective, b.objective), (a.dist, b.dist), (a.acc, b.acc), (a.micros, b.micros)] {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert!(read_trace("a,b\n1,2\n".as_bytes(), 0).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let s = vec![
            Series { name: "a <b>".into(), x: vec![0.0, 1.0, 2.0], y: vec![1.0, 0.1, 0.0] },
            Series { name: "c & d".into(), x: vec![0.0, 2.0], y: vec![f64::NAN, 3.0] },
        ];
        for log_y in [false, true] {
            let svg = render_svg_chart(&s, &ChartConfig { title: "t".into(), log_y, ..Default::default() }).unwrap();
            well_formed(&svg).unwrap();
            assert_eq!(svg.matches("<polyline").count(), 2);
        }
        well_formed(&render_svg_chart(&[], &ChartConfig::default()).unwrap()).unwrap();
        assert!(well_formed("<a><b></a></b>").is_err());
        assert!(well_formed("<a/><b/>").is_err());
    }
}
