//! Per-point geometry rows for `cliffbundle geometry`.

use cliffbundle::geometry::lattice::Grid;
use cliffbundle::geometry::{christoffel_at, spin_connection_with_step, vierbein_at, ChartMetric};
use cliffbundle::{Error, Result};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Column names: `x{μ}`, `e_{a}_{μ}` (= e^a_μ), `christoffel_{α}_{μ}_{ν}` (= Γ^α_μν),
/// `omega_{a}_{b}_{μ}` (= ω_abμ).
pub fn header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..n).map(|m| format!("x{m}")).collect();
    for a in 0..n {
        for m in 0..n {
            h.push(format!("e_{a}_{m}"));
        }
    }
    for al in 0..n {
        for m in 0..n {
            for nu in 0..n {
                h.push(format!("christoffel_{al}_{m}_{nu}"));
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for m in 0..n {
                h.push(format!("omega_{a}_{b}_{m}"));
            }
        }
    }
    h
}

pub fn tabulate(metric: &dyn ChartMetric, points: &[Vec<f64>], h: f64) -> Result<Table> {
    let n = metric.dim();
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let mut row = x.clone();
        let v = vierbein_at(metric, x)?;
        row.extend((0..n).flat_map(|a| (0..n).map(move |m| (a, m))).map(|(a, m)| v.e[(a, m)]));
        let ch = christoffel_at(metric, x, h)?;
        for al in 0..n {
            for m in 0..n {
                for nu in 0..n {
                    row.push(ch.get(al, m, nu));
                }
            }
        }
        let sc = spin_connection_with_step(metric, x, h)?;
        for a in 0..n {
            for b in 0..n {
                for m in 0..n {
                    row.push(sc.data.omega(a, b, m));
                }
            }
        }
        rows.push(row);
    }
    Ok(Table { header: header(n), rows })
}

/// Lattice points in row-major order over the last axis.
pub fn grid_points(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Vec<Vec<f64>>> {
    if lo.len() != hi.len() || lo.len() != counts.len() {
        return Err(Error::Config("--grid-lo, --grid-hi and --grid-n must have the same length".into()));
    }
    if counts.contains(&0) {
        return Err(Error::Config("--grid-n entries must be positive".into()));
    }
    let spacing = lo.iter().zip(hi).zip(counts).map(|((l, h), &c)| if c > 1 { (h - l) / (c - 1) as f64 } else { 1.0 }).collect();
    let grid = Grid::new(counts.to_vec(), spacing, lo.to_vec())?;
    Ok((0..grid.len()).map(|k| grid.point(&grid.unflat(k))).collect())
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|r| serde_json::Value::Object(self.header.iter().cloned().zip(r.iter().map(|v| serde_json::json!(v))).collect()))
                .collect(),
        )
    }
}
