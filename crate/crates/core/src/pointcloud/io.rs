//! Plain-text cloud formats.
//!
//! `xyzb`: a `#dim d k` header followed by whitespace-separated rows
//! `x_1 .. x_d flag [V] [S]`. `csv`: an optional `#dim d k` line, then a
//! header row naming `x0..x{d-1}`, `boundary` and optionally `volume` and
//! `bweight`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::PointCloud;
use crate::error::{PimError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyzb,
    Csv,
}

impl CloudFormat {
    /// Guesses the format from the file extension (`.csv` or anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CloudFormat::Csv,
            _ => CloudFormat::Xyzb,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = PimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyzb" => Ok(CloudFormat::Xyzb),
            "csv" => Ok(CloudFormat::Csv),
            other => Err(PimError::Parameter(format!(
                "unknown cloud format '{other}'"
            ))),
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PimError::io(path, e))?;
    parse_cloud(&text, format)
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_cloud(cloud, format)).map_err(|e| PimError::io(path, e))
}

fn fmt_err(line: usize, msg: impl Into<String>) -> PimError {
    PimError::Format {
        line,
        msg: msg.into(),
    }
}

fn parse_dim_header(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.trim_start_matches('#').split_whitespace();
    if it.next() != Some("dim") {
        return Err(fmt_err(lineno, "expected '#dim d k' header"));
    }
    let mut num = || -> Result<usize> {
        it.next()
            .ok_or_else(|| fmt_err(lineno, "header needs d and k"))?
            .parse()
            .map_err(|_| fmt_err(lineno, "header dimensions must be integers"))
    };
    let d = num()?;
    let k = num()?;
    Ok((d, k))
}

fn parse_f64(tok: &str, lineno: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| fmt_err(lineno, format!("cannot parse number '{tok}'")))?;
    if !v.is_finite() {
        return Err(fmt_err(lineno, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_flag(tok: &str, lineno: usize) -> Result<bool> {
    match tok.trim() {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(fmt_err(
            lineno,
            format!("boundary flag must be 0 or 1, got '{other}'"),
        )),
    }
}

#[derive(Default)]
struct Rows {
    coords: Vec<f64>,
    flags: Vec<bool>,
    volume: Vec<f64>,
    bweight: Vec<f64>,
}

impl Rows {
    fn finish(self, dim: usize, k: usize, has_v: bool, has_s: bool) -> Result<PointCloud> {
        if self.flags.is_empty() {
            return Err(PimError::InvalidCloud("file contains no points".into()));
        }
        let mut cloud = PointCloud::new(self.coords, dim, k, self.flags)?;
        if has_v {
            cloud.set_volume_weights(self.volume)?;
        }
        if has_s {
            cloud.set_boundary_weights(self.bweight)?;
        }
        Ok(cloud)
    }
}

pub(crate) fn parse_cloud(text: &str, format: CloudFormat) -> Result<PointCloud> {
    match format {
        CloudFormat::Xyzb => parse_xyzb(text),
        CloudFormat::Csv => parse_csv(text),
    }
}

fn parse_xyzb(text: &str) -> Result<PointCloud> {
    let mut header = None;
    let mut ncols = None;
    let mut rows = Rows::default();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if header.is_none() && line.trim_start_matches('#').trim_start().starts_with("dim") {
                header = Some(parse_dim_header(line, lineno)?);
            }
            continue;
        }
        let (d, _) = header.ok_or_else(|| fmt_err(lineno, "data before '#dim d k' header"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < d + 1 || toks.len() > d + 3 {
            return Err(fmt_err(
                lineno,
                format!(
                    "expected {} to {} columns, found {}",
                    d + 1,
                    d + 3,
                    toks.len()
                ),
            ));
        }
        match ncols {
            None => ncols = Some(toks.len()),
            Some(c) if c != toks.len() => {
                return Err(fmt_err(
                    lineno,
                    format!("row has {} columns, previous rows have {c}", toks.len()),
                ))
            }
            _ => {}
        }
        for tok in &toks[..d] {
            rows.coords.push(parse_f64(tok, lineno)?);
        }
        rows.flags.push(parse_flag(toks[d], lineno)?);
        if toks.len() > d + 1 {
            rows.volume.push(parse_f64(toks[d + 1], lineno)?);
        }
        if toks.len() > d + 2 {
            rows.bweight.push(parse_f64(toks[d + 2], lineno)?);
        }
    }
    let (d, k) = header.ok_or_else(|| fmt_err(1, "missing '#dim d k' header"))?;
    let ncols = ncols.unwrap_or(d + 1);
    rows.finish(d, k, ncols > d + 1, ncols > d + 2)
}

fn parse_csv(text: &str) -> Result<PointCloud> {
    let mut dims = None;
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Rows::default();
    let mut layout = (Vec::new(), 0, None, None);
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if columns.is_none() && line.trim_start_matches('#').trim_start().starts_with("dim") {
                dims = Some(parse_dim_header(line, lineno)?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(cols) = &columns else {
            let names: Vec<String> = fields.iter().map(|s| s.to_ascii_lowercase()).collect();
            let find = |name: &str| names.iter().position(|c| c == name);
            let mut xs = Vec::new();
            while let Some(p) = find(&format!("x{}", xs.len())) {
                xs.push(p);
            }
            if xs.is_empty() {
                return Err(fmt_err(
                    lineno,
                    "CSV header must name coordinate columns x0, x1, ...",
                ));
            }
            let b = find("boundary")
                .ok_or_else(|| fmt_err(lineno, "CSV header lacks a 'boundary' column"))?;
            if let Some((d, _)) = dims {
                if d != xs.len() {
                    return Err(fmt_err(
                        lineno,
                        format!(
                            "header declares d = {d} but {} coordinate columns",
                            xs.len()
                        ),
                    ));
                }
            }
            layout = (xs, b, find("volume"), find("bweight"));
            columns = Some(names);
            continue;
        };
        if fields.len() != cols.len() {
            return Err(fmt_err(
                lineno,
                format!("row has {} fields, header has {}", fields.len(), cols.len()),
            ));
        }
        for &c in &layout.0 {
            rows.coords.push(parse_f64(fields[c], lineno)?);
        }
        rows.flags.push(parse_flag(fields[layout.1], lineno)?);
        if let Some(v) = layout.2 {
            rows.volume.push(parse_f64(fields[v], lineno)?);
        }
        if let Some(s) = layout.3 {
            rows.bweight.push(parse_f64(fields[s], lineno)?);
        }
    }
    if columns.is_none() {
        return Err(fmt_err(1, "missing CSV header row"));
    }
    let d = layout.0.len();
    let k = dims.map_or(d, |(_, k)| k);
    rows.finish(d, k, layout.2.is_some(), layout.3.is_some())
}

pub(crate) fn format_cloud(cloud: &PointCloud, format: CloudFormat) -> String {
    let d = cloud.dim();
    let v = cloud.volume_weights();
    let s = cloud.boundary_weights();
    let mut out = format!("#dim {} {}\n", d, cloud.intrinsic_dim());
    let sep = match format {
        CloudFormat::Xyzb => " ",
        CloudFormat::Csv => ",",
    };
    if format == CloudFormat::Csv {
        let mut names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        names.push("boundary".into());
        if v.is_some() {
            names.push("volume".into());
        }
        if s.is_some() {
            names.push("bweight".into());
        }
        out.push_str(&names.join(","));
        out.push('\n');
    }
    // Rust's float Display is the shortest representation that round-trips.
    // Positional xyzb needs V whenever S is present.
    let write_v = v.is_some() || (s.is_some() && format == CloudFormat::Xyzb);
    for i in 0..cloud.len() {
        let mut fields: Vec<String> = cloud.point(i).iter().map(|c| c.to_string()).collect();
        fields.push(if cloud.is_boundary(i) { "1" } else { "0" }.into());
        if write_v {
            fields.push(v.map_or(0.0, |v| v[i]).to_string());
        }
        if let Some(s) = s {
            fields.push(s[i].to_string());
        }
        let _ = writeln!(out, "{}", fields.join(sep));
    }
    out
}
