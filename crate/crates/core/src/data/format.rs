//! Text pool format.
//!
//! ```text
//! LSPOOL 1
//! d <dim>
//! n <count>
//! label_kind regression | binary | classes:<K>
//! seed <u64>
//! <id> <x_1> … <x_d> <y_1> … <y_L>
//! ```
//!
//! One example per line, whitespace separated. Floats use Rust's shortest
//! round-trip formatting, so reading a written pool reproduces it bit-exactly.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Example, LabelKind, Pool};
use crate::error::{Error, Result};

fn kind_str(k: LabelKind) -> String {
    match k {
        LabelKind::Regression => "regression".into(),
        LabelKind::Binary => "binary".into(),
        LabelKind::Classes(c) => format!("classes:{c}"),
    }
}

fn parse_kind(s: &str) -> Option<LabelKind> {
    match s {
        "regression" => Some(LabelKind::Regression),
        "binary" => Some(LabelKind::Binary),
        _ => s.strip_prefix("classes:")?.parse().ok().map(LabelKind::Classes),
    }
}

pub fn write_pool(pool: &Pool, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "LSPOOL 1")?;
    writeln!(w, "d {}", pool.dim())?;
    writeln!(w, "n {}", pool.len())?;
    writeln!(w, "label_kind {}", kind_str(pool.label_kind()))?;
    writeln!(w, "seed {}", pool.seed())?;
    for e in pool.examples() {
        write!(w, "{}", e.id)?;
        for v in e.x.iter().chain(&e.y) {
            write!(w, " {v:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_pool(pool: &Pool, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_pool(pool, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn header<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix(key)).and_then(|l| l.strip_prefix(' ')).ok_or_else(|| Error::parse("pool header", format!("missing `{key}`")))
}

pub fn read_pool(r: impl Read) -> Result<Pool> {
    let lines: Vec<String> = BufReader::new(r).lines().collect::<std::io::Result<_>>().map_err(|e| Error::parse("pool", e.to_string()))?;
    let mut it = lines.iter().map(|s| s.as_str());
    if it.next() != Some("LSPOOL 1") {
        return Err(Error::parse("pool header", "expected `LSPOOL 1`"));
    }
    let num = |s: &str, what: &str| s.trim().parse::<u64>().map_err(|e| Error::parse(what.to_string(), e.to_string()));
    let d = num(header(it.next(), "d")?, "d")? as usize;
    let n = num(header(it.next(), "n")?, "n")? as usize;
    let kind_s = header(it.next(), "label_kind")?;
    let kind = parse_kind(kind_s.trim()).ok_or_else(|| Error::parse("label_kind", kind_s.to_string()))?;
    let seed = num(header(it.next(), "seed")?, "seed")?;
    let l = kind.label_len();
    let mut examples = Vec::with_capacity(n);
    for (row, line) in it.filter(|s| !s.trim().is_empty()).enumerate() {
        let mut f = line.split_whitespace();
        let id = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| Error::parse(format!("row {row}"), "bad id"))?;
        let vals = f.map(|s| s.parse::<f64>()).collect::<std::result::Result<Vec<f64>, _>>().map_err(|e| Error::parse(format!("row {row}"), e.to_string()))?;
        if vals.len() != d + l {
            return Err(Error::parse(format!("row {row}"), format!("expected {} values, found {}", d + l, vals.len())));
        }
        examples.push(Example { id, x: vals[..d].to_vec(), y: vals[d..].to_vec() });
    }
    if examples.len() != n {
        return Err(Error::parse("pool", format!("header says {n} rows, found {}", examples.len())));
    }
    Pool::new(examples, kind, seed)
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<Pool> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_pool(f)
}
