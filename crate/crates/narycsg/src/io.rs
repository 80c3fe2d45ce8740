//! OFF and OBJ meshes, and the stats file.

use std::fmt::Write as _;
use std::path::Path;

use narycsg_core::math::Vec3;
use narycsg_core::stats::StatsRecord;
use narycsg_core::RawMesh;
use thiserror::Error;

/// Version of the stats file layout.
pub const STATS_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: vertex index {index} out of range ({count} vertices)")]
    IndexOutOfRange { line: usize, index: i64, count: usize },
    #[error("unknown mesh format for {0} (expected .off or .obj)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Syntax { line, msg: msg.into() }
}

fn text(bytes: &[u8]) -> Result<&str, IoError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        syntax(line, "not valid UTF-8")
    })
}

fn number<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, IoError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("bad {what} '{tok}'")))
}

/// Non-blank lines with comments removed, numbered from 1.
fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_off(bytes: &[u8]) -> Result<RawMesh, IoError> {
    let mut lines = content_lines(text(bytes)?);
    let (ln, header) = lines.next().ok_or_else(|| syntax(1, "empty file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("OFF") {
        return Err(syntax(ln, "expected OFF header"));
    }
    // Counts may share the header line.
    let mut rest: Vec<&str> = toks.collect();
    let mut count_line = ln;
    if rest.is_empty() {
        let (l, c) = lines.next().ok_or_else(|| syntax(ln + 1, "missing counts"))?;
        rest = c.split_whitespace().collect();
        count_line = l;
    }
    let mut it = rest.into_iter();
    let nv: usize = number(it.next(), count_line, "vertex count")?;
    let nf: usize = number(it.next(), count_line, "facet count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| syntax(count_line, "file ends before all vertices"))?;
        let mut t = s.split_whitespace();
        let x = number(t.next(), l, "coordinate")?;
        let y = number(t.next(), l, "coordinate")?;
        let z = number(t.next(), l, "coordinate")?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = lines.next().ok_or_else(|| syntax(count_line, "file ends before all facets"))?;
        let mut t = s.split_whitespace();
        let k: usize = number(t.next(), l, "facet size")?;
        let mut f = Vec::with_capacity(k);
        for _ in 0..k {
            let i: i64 = number(t.next(), l, "vertex index")?;
            if i < 0 || i as usize >= nv {
                return Err(IoError::IndexOutOfRange { line: l, index: i, count: nv });
            }
            f.push(i as u32);
        }
        facets.push(f);
    }
    Ok(RawMesh::new(vertices, facets))
}

pub fn parse_obj(bytes: &[u8]) -> Result<RawMesh, IoError> {
    let mut vertices = Vec::new();
    let mut facets = Vec::new();
    for (l, s) in content_lines(text(bytes)?) {
        let mut t = s.split_whitespace();
        match t.next() {
            Some("v") => {
                let x = number(t.next(), l, "coordinate")?;
                let y = number(t.next(), l, "coordinate")?;
                let z = number(t.next(), l, "coordinate")?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut f = Vec::new();
                for tok in t {
                    let i: i64 = number(tok.split('/').next(), l, "vertex index")?;
                    let n = vertices.len() as i64;
                    let r = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || r < 0 || r >= n {
                        return Err(IoError::IndexOutOfRange { line: l, index: i, count: vertices.len() });
                    }
                    f.push(r as u32);
                }
                if f.len() < 3 {
                    return Err(syntax(l, "facet with fewer than 3 vertices"));
                }
                facets.push(f);
            }
            _ => {}
        }
    }
    Ok(RawMesh::new(vertices, facets))
}

/// 17 significant digits, enough to recover every f64 exactly.
fn coord(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

fn vertex_line(out: &mut String, prefix: &str, p: Vec3) {
    out.push_str(prefix);
    coord(out, p.x);
    out.push(' ');
    coord(out, p.y);
    out.push(' ');
    coord(out, p.z);
    out.push('\n');
}

pub fn write_off(mesh: &RawMesh) -> Vec<u8> {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertices.len(), mesh.facets.len());
    for &p in &mesh.vertices {
        vertex_line(&mut s, "", p);
    }
    for f in &mesh.facets {
        let _ = write!(s, "{}", f.len());
        for v in f {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s.into_bytes()
}

pub fn write_obj(mesh: &RawMesh) -> Vec<u8> {
    let mut s = String::new();
    for &p in &mesh.vertices {
        vertex_line(&mut s, "v ", p);
    }
    for f in &mesh.facets {
        s.push('f');
        for v in f {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
    }
    s.into_bytes()
}

/// Facet loops with holes, one OFF facet per loop. Loops of the same output
/// facet are preceded by a `# plane <id>` comment.
pub fn write_off_loops(vertices: &[Vec3], facets: &[Vec<Vec<u32>>]) -> Vec<u8> {
    let nloops: usize = facets.iter().map(|f| f.len()).sum();
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", vertices.len(), nloops);
    for &p in vertices {
        vertex_line(&mut s, "", p);
    }
    for (id, f) in facets.iter().enumerate() {
        let _ = writeln!(s, "# plane {id}");
        for l in f {
            let _ = write!(s, "{}", l.len());
            for v in l {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
    }
    s.into_bytes()
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

pub fn read_mesh(path: &Path) -> Result<RawMesh, IoError> {
    let ext = extension(path);
    if ext != "off" && ext != "obj" {
        return Err(IoError::UnknownFormat(path.display().to_string()));
    }
    let bytes = std::fs::read(path)?;
    if ext == "off" {
        parse_off(&bytes)
    } else {
        parse_obj(&bytes)
    }
}

pub fn write_mesh(path: &Path, mesh: &RawMesh) -> Result<(), IoError> {
    let bytes = match extension(path).as_str() {
        "off" => write_off(mesh),
        "obj" => write_obj(mesh),
        _ => return Err(IoError::UnknownFormat(path.display().to_string())),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// `key=value` lines followed by the same record as a single JSON line.
pub fn write_stats(r: &StatsRecord) -> Vec<u8> {
    let scaling = r.scaling();
    let mut s = String::new();
    let _ = writeln!(s, "schema={STATS_SCHEMA}");
    let _ = writeln!(s, "m={}", r.m);
    let _ = writeln!(s, "s={}", r.s);
    let _ = writeln!(s, "h={}", r.h);
    let _ = writeln!(s, "t_topology_s={}", r.t_topology_s);
    let _ = writeln!(s, "t_vertices_s={}", r.t_vertices_s);
    let _ = writeln!(s, "t_facets_s={}", r.t_facets_s);
    let _ = writeln!(s, "errors={}", r.errors);
    match scaling {
        Some(x) => {
            let _ = writeln!(s, "scaling={x}");
        }
        None => s.push_str("scaling=absent\n"),
    }
    let json = serde_json::json!({
        "schema": STATS_SCHEMA,
        "m": r.m,
        "s": r.s,
        "h": r.h,
        "t_topology_s": r.t_topology_s,
        "t_vertices_s": r.t_vertices_s,
        "t_facets_s": r.t_facets_s,
        "errors": r.errors,
        "scaling": scaling,
    });
    let _ = writeln!(s, "json={json}");
    s.into_bytes()
}
