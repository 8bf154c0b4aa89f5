//! CSV dumps of grid fields: header `r,z,<name>`, one row per cell in
//! storage order, 17 significant digits.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::CylGrid;

pub fn write_csv<W: Write>(mut out: W, grid: &CylGrid, values: &[f64], name: &str) -> Result<()> {
    writeln!(out, "r,z,{name}")?;
    for i in 0..grid.n_r {
        for j in 0..grid.n_z {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                grid.r(i),
                grid.z(j),
                values[grid.idx(i, j)]
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn csv_string(grid: &CylGrid, values: &[f64], name: &str) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, grid, values, name).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Reads a dump written for `grid`, checking that every row sits on the
/// matching cell centre.
pub fn read_csv<R: BufRead>(input: R, grid: &CylGrid) -> Result<Vec<f64>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty field file".into()))??;
    if header.split(',').count() != 3 || !header.starts_with("r,z,") {
        return Err(Error::Io(format!("unexpected field header `{header}`")));
    }
    let mut values = Vec::with_capacity(grid.len());
    let tol = 1e-9 * grid.dr().min(grid.dz());
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Io(format!("row {}: {e}", n + 2)))?;
        if cols.len() != 3 {
            return Err(Error::Io(format!(
                "row {} has {} columns",
                n + 2,
                cols.len()
            )));
        }
        let k = values.len();
        if k >= grid.len() {
            return Err(Error::Io("field file has more rows than grid cells".into()));
        }
        let (i, j) = (k / grid.n_z, k % grid.n_z);
        if (cols[0] - grid.r(i)).abs() > tol || (cols[1] - grid.z(j)).abs() > tol {
            return Err(Error::Io(format!(
                "row {} is not at cell centre ({i}, {j})",
                n + 2
            )));
        }
        values.push(cols[2]);
    }
    if values.len() != grid.len() {
        return Err(Error::Io(format!(
            "field file has {} rows, grid has {} cells",
            values.len(),
            grid.len()
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let g = CylGrid::new(1.3, 0.7, 8, 9).unwrap();
        let v = g.sample(|r, z| (r * 3.1).sin().abs() / 3.0 + z * z * std::f64::consts::E);
        let s = csv_string(&g, &v, "rho");
        assert!(s.starts_with("r,z,rho\n"));
        assert_eq!(s.lines().count(), 1 + g.len());
        let back = read_csv(s.as_bytes(), &g).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn rejects_wrong_grid() {
        let g = CylGrid::new(1.0, 1.0, 8, 8).unwrap();
        let s = csv_string(&g, &vec![0.0; g.len()], "rho");
        assert!(read_csv(s.as_bytes(), &g.refined(2)).is_err());
        assert!(read_csv(s.as_bytes(), &g.scaled(2.0)).is_err());
    }
}
