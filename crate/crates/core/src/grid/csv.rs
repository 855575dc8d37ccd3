//! Field dumps: header `x,y,re,im,mask`, one row per node, row-major with `x`
//! varying fastest, 17 significant digits.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{Bounds, Grid, GridError, GridField, NodeKind};
use crate::expr::C64;

pub const CSV_HEADER: &str = "x,y,re,im,mask";

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

pub fn write_csv<W: Write>(field: &GridField, mut out: W) -> Result<(), GridError> {
    let g = field.grid();
    writeln!(out, "{CSV_HEADER}")?;
    for k in 0..g.len() {
        let p = g.point_at(k);
        let v = if field.is_defined(k) {
            field.get(k)
        } else {
            C64::new(f64::NAN, f64::NAN)
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            num(p.re),
            num(p.im),
            num(v.re),
            num(v.im),
            g.kind(k).as_str()
        )?;
    }
    Ok(())
}

/// Reads a dump written by [`write_csv`], rebuilding the lattice from the
/// coordinates and the mask column.
pub fn read_csv<R: BufRead>(input: R) -> Result<GridField, GridError> {
    let mut rows: Vec<(f64, f64, C64, NodeKind)> = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if n == 0 {
            if line != CSV_HEADER {
                return Err(GridError::Csv {
                    line: 1,
                    msg: format!("expected header `{CSV_HEADER}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| GridError::Csv {
            line: n + 1,
            msg: msg.to_string(),
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad("expected 5 columns"));
        }
        let parse = |s: &str| -> Result<f64, GridError> {
            s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")))
        };
        let kind = match cols[4] {
            "interior" => NodeKind::Interior,
            "boundary" => NodeKind::Boundary,
            "outside" => NodeKind::Outside,
            other => return Err(bad(&format!("bad mask `{other}`"))),
        };
        rows.push((
            parse(cols[0])?,
            parse(cols[1])?,
            C64::new(parse(cols[2])?, parse(cols[3])?),
            kind,
        ));
    }
    if rows.is_empty() {
        return Err(GridError::Csv {
            line: 1,
            msg: "no data rows".into(),
        });
    }
    let y0 = rows[0].1;
    let nx = rows.iter().take_while(|r| r.1 == y0).count();
    if nx == 0 || rows.len() % nx != 0 {
        return Err(GridError::Csv {
            line: 2,
            msg: "rows do not form a rectangular lattice".into(),
        });
    }
    let ny = rows.len() / nx;
    let bounds = Bounds::new(rows[0].0, rows[nx - 1].0, y0, rows[rows.len() - 1].1);
    let kinds: Vec<NodeKind> = rows.iter().map(|r| r.3).collect();
    let grid = Grid::custom(bounds, nx, ny, kinds.clone())?;
    if grid.kinds() != kinds.as_slice() {
        return Err(GridError::Csv {
            line: 2,
            msg: "mask violates the interior/boundary invariant".into(),
        });
    }
    let values = rows.iter().map(|r| r.2).collect();
    Ok(GridField::new(Arc::new(grid), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ComplexExpr;

    #[test]
    fn dump_and_reload() {
        let g = Arc::new(Grid::disk(17, 0.05).unwrap());
        let f = GridField::sample(&ComplexExpr::parse("w^2 + 0.1*conj(w)").unwrap(), &g).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,re,im,mask\n"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.grid().kinds(), g.kinds());
        for k in g.masked() {
            assert!((back.get(k) - f.get(k)).norm() <= 1e-15 * (1.0 + f.get(k).norm()));
            assert!((back.grid().point_at(k) - g.point_at(k)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_header() {
        assert!(read_csv("a,b\n".as_bytes()).is_err());
    }
}
