use super::{BoundaryKind, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::scalar::Real;
use std::io::{BufRead, Write};

const HEADER: &str = "# nx,ny,lx,ly";

/// Writes `# nx,ny,lx,ly`, the four values, then one line per grid row
/// (`j = 0` first). Values use the shortest round-trip representation.
pub fn write_field_csv<T: Real, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    let g = field.grid();
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{},{},{},{}", g.nx(), g.ny(), g.lx(), g.ly())?;
    let mut line = String::new();
    for j in 0..g.ny() {
        line.clear();
        for i in 0..g.nx() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&field.get(i, j).to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse<V: std::str::FromStr>(token: &str, line: usize) -> Result<V> {
    token
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse `{}`", token.trim())))
}

/// Reads a field written by [`write_field_csv`] onto a grid with the given
/// boundary kind.
pub fn read_field_csv<T: Real, R: BufRead>(input: R, boundary: BoundaryKind) -> Result<ScalarField<T>> {
    let mut lines = input.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((k, l)) => Ok(Some((k + 1, l?))),
        }
    };
    match next()? {
        Some((_, l)) if l.trim() == HEADER => {}
        _ => return Err(Error::Format(format!("line 1: expected header `{HEADER}`"))),
    }
    let (ln, dims) = next()?.ok_or_else(|| Error::Format("missing dimension line".into()))?;
    let dims: Vec<&str> = dims.split(',').collect();
    if dims.len() != 4 {
        return Err(Error::Format(format!("line {ln}: expected nx,ny,lx,ly")));
    }
    let nx: usize = parse(dims[0], ln)?;
    let ny: usize = parse(dims[1], ln)?;
    let lx: f64 = parse(dims[2], ln)?;
    let ly: f64 = parse(dims[3], ln)?;
    let grid = Grid::new(nx, ny, T::lit(lx), T::lit(ly), boundary)
        .map_err(|e| Error::Format(format!("line {ln}: {e}")))?;
    let mut values = Vec::with_capacity(grid.len());
    for row in 0..ny {
        let (ln, l) = next()?.ok_or_else(|| Error::Format(format!("missing row {row}")))?;
        let before = values.len();
        for tok in l.split(',') {
            let v: f64 = parse(tok, ln)?;
            values.push(T::lit(v));
        }
        if values.len() - before != nx {
            return Err(Error::Format(format!("line {ln}: expected {nx} values")));
        }
    }
    while let Some((ln, l)) = next()? {
        if !l.trim().is_empty() {
            return Err(Error::Format(format!("line {ln}: trailing data")));
        }
    }
    ScalarField::from_values(grid, values).map_err(|e| Error::Format(e.to_string()))
}
