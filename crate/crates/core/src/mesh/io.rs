//! Plain-text mesh files.
//!
//! ```text
//! polymesh 1
//! vertices N
//! x y
//! ...
//! cells M
//! i0 i1 i2 ...
//! ...
//! ```
//!
//! Cells list 0-based vertex indices counterclockwise. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::PolygonalMesh;
use crate::{Error, Point, Result};

pub fn to_string(mesh: &PolygonalMesh) -> String {
    let mut out = String::new();
    out.push_str("polymesh 1\n");
    let _ = writeln!(out, "vertices {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e}", p.x, p.y);
    }
    let _ = writeln!(out, "cells {}", mesh.num_cells());
    for cell in mesh.cells() {
        let line: Vec<String> = cell.iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn from_str(text: &str) -> Result<PolygonalMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line: usize, reason: String| Error::Parse { line, reason };

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["polymesh", "1"] {
        return Err(parse_err(ln, format!("expected 'polymesh 1', found '{header}'")));
    }

    let (mut last, nv) = read_count(&mut lines, "vertices", ln)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines_next(&mut lines, last, "vertex")?;
        let coords: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
        if coords.len() != 2 || !coords.iter().all(|c| c.is_finite()) {
            return Err(parse_err(ln, format!("expected two finite coordinates, found '{l}'")));
        }
        vertices.push(Point::new(coords[0], coords[1]));
        last = ln;
    }

    let (mut last, nc) = read_count(&mut lines, "cells", last)?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines_next(&mut lines, last, "cell")?;
        let cell: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad vertex index: {e}")))?;
        cells.push(cell);
        last = ln;
    }
    if let Some((ln, l)) = lines.next() {
        return Err(parse_err(ln, format!("unexpected content '{l}'")));
    }
    PolygonalMesh::new(vertices, cells)
}

fn read_count<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &str,
    last: usize,
) -> Result<(usize, usize)> {
    let parse_err = |line: usize, reason: String| Error::Parse { line, reason };
    let (ln, l) = lines
        .next()
        .ok_or_else(|| parse_err(last + 1, format!("missing '{keyword}' line")))?;
    let mut it = l.split_whitespace();
    if it.next() != Some(keyword) {
        return Err(parse_err(ln, format!("expected '{keyword} <count>', found '{l}'")));
    }
    let n = it
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| parse_err(ln, format!("bad {keyword} count in '{l}'")))?;
    if it.next().is_some() {
        return Err(parse_err(ln, format!("trailing tokens in '{l}'")));
    }
    Ok((ln, n))
}

fn lines_next<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    last: usize,
    what: &str,
) -> Result<(usize, &'a str)> {
    lines.next().ok_or_else(|| Error::Parse {
        line: last + 1,
        reason: format!("unexpected end of file while reading {what} lines"),
    })
}

pub fn read(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}

pub fn write(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_string(mesh)).map_err(|e| Error::io(path, e))
}
