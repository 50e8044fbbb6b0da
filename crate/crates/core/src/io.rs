//! Reading and writing fields, ensembles and diagrams.
//!
//! `.sfield` (ASCII):
//!
//! ```text
//! SFIELD 1
//! dims nx ny nz
//! spacing sx sy sz
//! origin ox oy oz
//! v0 v1 v2 ...            (nx·ny·nz reals, x fastest, any whitespace)
//! ```
//!
//! `.pdiag` (CSV), optionally preceded by `# family: …` and `# source: …`
//! lines:
//!
//! ```text
//! birth,death,btype,b_x,b_y,b_z,d_x,d_y,d_z,pair_class
//! ```
//!
//! `btype` is the critical type of the birth vertex (`minimum` or `saddle`).
//!
//! A directory may hold an `ensemble.txt` manifest listing member files one
//! per line; otherwise members are the directory's files with the expected
//! extension, in lexicographic order. Manifest lines starting with `#!` carry
//! `key=value` metadata, other `#` lines are comments.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::field::{Ensemble, ScalarField};
use crate::persistence::{DiagramPoint, Family, PairClass, PersistenceDiagram};
use crate::{Error, Result};

pub const FIELD_EXTENSION: &str = "sfield";
pub const DIAGRAM_EXTENSION: &str = "pdiag";
pub const MANIFEST_NAME: &str = "ensemble.txt";
pub const DIAGRAM_HEADER: &str = "birth,death,btype,b_x,b_y,b_z,d_x,d_y,d_z,pair_class";

fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// `{:?}` prints the shortest representation that parses back to the same
/// bits, switching to exponent form for extreme magnitudes.
fn fmt_real(out: &mut String, v: f64) {
    let _ = write!(out, "{v:?}");
}

fn header_triple<T: std::str::FromStr>(path: &Path, line_no: usize, line: Option<&str>, key: &str) -> Result<[T; 3]> {
    let line = line.ok_or_else(|| Error::parse(path, line_no, format!("missing '{key}' line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::parse(path, line_no, format!("expected '{key} a b c'")));
    }
    let values: Vec<T> = parts
        .map(|p| {
            p.parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad {key} entry '{p}'")))
        })
        .collect::<Result<_>>()?;
    values
        .try_into()
        .map_err(|_| Error::parse(path, line_no, format!("'{key}' needs exactly three entries")))
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("SFIELD 1") => {}
        _ => return Err(Error::parse(path, 1, "expected 'SFIELD 1'")),
    }
    let dims: [usize; 3] = header_triple(path, 2, lines.next(), "dims")?;
    let spacing: [f64; 3] = header_triple(path, 3, lines.next(), "spacing")?;
    let origin: [f64; 3] = header_triple(path, 4, lines.next(), "origin")?;

    let expected = dims.iter().product::<usize>();
    let mut values = Vec::with_capacity(expected);
    let mut last_line = 4;
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 5;
        last_line = line_no;
        for token in line.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("'{token}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    file: path.to_path_buf(),
                    index: values.len(),
                });
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(Error::parse(
            path,
            last_line,
            format!("expected {expected} values for dims {dims:?}, found {}", values.len()),
        ));
    }
    ScalarField::new(stem(path), dims, spacing, origin, values).map_err(|e| match e {
        Error::InvalidField(msg) => Error::parse(path, 2, msg),
        other => other,
    })
}

pub fn write_field(field: &ScalarField, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(field.vertex_count() * 12 + 64);
    let [nx, ny, nz] = field.dims();
    let _ = writeln!(out, "SFIELD 1\ndims {nx} {ny} {nz}");
    for (key, triple) in [("spacing", field.spacing()), ("origin", field.origin())] {
        out.push_str(key);
        for v in triple {
            out.push(' ');
            fmt_real(&mut out, v);
        }
        out.push('\n');
    }
    for row in field.values().chunks(nx) {
        for (i, &v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            fmt_real(&mut out, v);
        }
        out.push('\n');
    }
    write_text(path, &out)
}

struct Manifest {
    files: Vec<PathBuf>,
    metadata: BTreeMap<String, String>,
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut files = Vec::new();
    let mut metadata = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(meta) = line.strip_prefix("#!") {
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "metadata lines are '#! key=value'"))?;
            metadata.insert(k.trim().to_string(), v.trim().to_string());
        } else if !line.is_empty() && !line.starts_with('#') {
            files.push(base.join(line));
        }
    }
    Ok(Manifest { files, metadata })
}

/// Member files of an ensemble-like directory, or of a manifest file.
fn resolve_members(path: &Path, extension: &str) -> Result<Manifest> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    if path.is_file() {
        if path.extension().is_some_and(|e| e == extension) {
            return Ok(Manifest {
                files: vec![path.to_path_buf()],
                metadata: BTreeMap::new(),
            });
        }
        return read_manifest(path);
    }
    let manifest = path.join(MANIFEST_NAME);
    if manifest.is_file() {
        return read_manifest(&manifest);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == extension))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(Manifest {
        files,
        metadata: BTreeMap::new(),
    })
}

/// Loads every member of an ensemble directory (or manifest) in parallel.
pub fn load_ensemble(path: &Path) -> Result<Ensemble> {
    let Manifest { files, metadata } = resolve_members(path, FIELD_EXTENSION)?;
    if files.is_empty() {
        return Err(Error::EmptyInput);
    }
    let members = files.par_iter().map(|f| read_field(f)).collect::<Result<Vec<_>>>()?;
    for (member, file) in members.iter().zip(&files).skip(1) {
        if member.dims() != members[0].dims()
            || member.spacing() != members[0].spacing()
            || member.origin() != members[0].origin()
        {
            return Err(Error::DimensionMismatch(file.clone()));
        }
    }
    Ensemble::new(members, metadata)
}

/// Writes one `.sfield` per member plus a manifest preserving order and
/// metadata.
pub fn save_ensemble(ensemble: &Ensemble, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut seen = HashSet::new();
    let mut manifest = String::new();
    for (k, v) in ensemble.metadata() {
        let _ = writeln!(manifest, "#! {k}={v}");
    }
    for member in ensemble.members() {
        if !seen.insert(member.name()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate member name '{}'",
                member.name()
            )));
        }
        let file = format!("{}.{FIELD_EXTENSION}", member.name());
        write_field(member, &dir.join(&file))?;
        let _ = writeln!(manifest, "{file}");
    }
    write_text(&dir.join(MANIFEST_NAME), &manifest)
}

fn birth_type(family: Family, class: PairClass) -> &'static str {
    match (family, class) {
        (Family::Maxima, PairClass::SaddleMax) => "saddle",
        (Family::Minima, PairClass::SaddleMax) => "saddle",
        _ => "minimum",
    }
}

pub fn save_diagram(diagram: &PersistenceDiagram, path: &Path) -> Result<()> {
    write_text(path, &diagram_to_string(diagram))
}

pub fn diagram_to_string(diagram: &PersistenceDiagram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# family: {}", diagram.family());
    let _ = writeln!(out, "# source: {}", diagram.source_name());
    out.push_str(DIAGRAM_HEADER);
    out.push('\n');
    for p in diagram.points() {
        fmt_real(&mut out, p.birth);
        out.push(',');
        fmt_real(&mut out, p.death);
        let _ = write!(out, ",{}", birth_type(diagram.family(), p.pair_class));
        for v in p.birth_location.iter().chain(&p.death_location) {
            out.push(',');
            fmt_real(&mut out, *v);
        }
        let _ = writeln!(out, ",{}", p.pair_class);
    }
    out
}

pub fn load_diagram(path: &Path) -> Result<PersistenceDiagram> {
    parse_diagram(&read_text(path)?, path)
}

/// Parses `.pdiag` text; `path` names the source in errors and supplies the
/// default source name.
pub fn parse_diagram(text: &str, path: &Path) -> Result<PersistenceDiagram> {
    let mut family = Family::Minima;
    let mut source = stem(path);
    let mut header_seen = false;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if !header_seen {
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    match key.trim() {
                        "family" => {
                            family = value.trim().parse().map_err(|_| {
                                Error::parse(path, line_no, format!("unknown family '{}'", value.trim()))
                            })?
                        }
                        "source" => source = value.trim().to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            if line != DIAGRAM_HEADER {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected header '{DIAGRAM_HEADER}'"),
                ));
            }
            header_seen = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        points.push(parse_point(path, line_no, line)?);
    }
    if !header_seen {
        return Err(Error::parse(path, text.lines().count().max(1), "missing header"));
    }
    PersistenceDiagram::new(family, source, points).map_err(|e| Error::parse(path, 0, e.to_string()))
}

fn parse_point(path: &Path, line_no: usize, line: &str) -> Result<DiagramPoint> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 10 {
        return Err(Error::parse(
            path,
            line_no,
            format!("expected 10 columns, found {}", fields.len()),
        ));
    }
    let real = |s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("'{s}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::parse(path, line_no, format!("'{s}' is not finite")))
        }
    };
    if !matches!(fields[2], "minimum" | "saddle") {
        return Err(Error::parse(path, line_no, format!("unknown btype '{}'", fields[2])));
    }
    let pair_class: PairClass = fields[9]
        .parse()
        .map_err(|_| Error::parse(path, line_no, format!("unknown pair_class '{}'", fields[9])))?;
    Ok(DiagramPoint {
        birth: real(fields[0])?,
        death: real(fields[1])?,
        birth_location: [real(fields[3])?, real(fields[4])?, real(fields[5])?],
        death_location: [real(fields[6])?, real(fields[7])?, real(fields[8])?],
        pair_class,
    })
}

/// Loads a directory (or manifest) of `.pdiag` files, in member order.
pub fn load_diagrams(path: &Path) -> Result<Vec<PersistenceDiagram>> {
    let Manifest { files, .. } = resolve_members(path, DIAGRAM_EXTENSION)?;
    if files.is_empty() {
        return Err(Error::EmptyInput);
    }
    files.par_iter().map(|f| load_diagram(f)).collect()
}
