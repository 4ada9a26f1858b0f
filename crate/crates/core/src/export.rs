//! CSV and JSON writers. Every CSV starts with `#`-prefixed `key: value`
//! metadata lines followed by a header row. Floats use Rust's shortest
//! round-trip formatting (exponent form for very small or large values), so
//! identical inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::filtration::FiltrationOrder;
use crate::grid::BranchState;
use crate::observables::{FieldUnit, ScalarField, VectorField};
use crate::pite::Trajectory;
use crate::scenario::{FilterOutcome, Spectrum, SweepRow};

pub type Metadata = [(String, String)];

fn unit_label(u: FieldUnit, dims: usize) -> String {
    match u {
        FieldUnit::Density => format!("nm^-{dims}"),
        FieldUnit::ProbabilityCurrent => format!("nm^-{dims} meV (probability current, hbar = 1)"),
        FieldUnit::ChargeCurrent => format!("e nm^-{dims} meV (charge current, hbar = 1)"),
    }
}

/// Writes metadata, header and rows.
pub fn write_csv(
    path: &Path,
    meta: &Metadata,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (k, v) in meta {
        writeln!(out, "# {k}: {}", v.replace('\n', " "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with the metadata under `"metadata"` and the payload under
/// `"data"`.
pub fn write_json<T: Serialize>(path: &Path, meta: &Metadata, data: &T) -> Result<()> {
    let metadata: serde_json::Map<String, serde_json::Value> = meta
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let doc = serde_json::json!({ "metadata": metadata, "data": data });
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn s(h: &[&str]) -> Vec<String> {
    h.iter().map(|x| x.to_string()).collect()
}

fn with(meta: &Metadata, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = meta.to_vec();
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

/// `b_tesla, level, energy[, analytic, rel_error]`, one row per level.
pub fn spectrum_table(spectra: &[Spectrum]) -> (Vec<String>, Vec<Vec<String>>) {
    let analytic = spectra.iter().any(|s| s.analytic.is_some());
    let mut header = s(&["b_tesla", "level", "energy_mev", "residual"]);
    if analytic {
        header.extend(s(&["analytic_mev", "rel_error"]));
    }
    let mut rows = Vec::new();
    for sp in spectra {
        for (i, &e) in sp.eig.eigenvalues().iter().enumerate() {
            let mut r = vec![f(sp.b_tesla), i.to_string(), f(e), f(sp.eig.residuals()[i])];
            if analytic {
                match sp.analytic.as_ref().and_then(|a| a.get(i)) {
                    Some(&a) => r.extend([f(a), f(((e - a) / a).abs())]),
                    None => r.extend([String::new(), String::new()]),
                }
            }
            rows.push(r);
        }
    }
    (header, rows)
}

pub fn write_spectrum_csv(path: &Path, meta: &Metadata, spectra: &[Spectrum]) -> Result<()> {
    let (h, r) = spectrum_table(spectra);
    write_csv(path, meta, &h, &r)
}

/// `k_x, k_y, re, im` rows; the format read back by custom-table states.
pub fn write_amplitudes_csv(path: &Path, meta: &Metadata, state: &BranchState) -> Result<()> {
    let g = state.grid();
    let rows = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = g.unravel(i);
            vec![k[0].to_string(), k[1].to_string(), f(a.re), f(a.im)]
        })
        .collect::<Vec<_>>();
    write_csv(path, meta, &s(&["k_x", "k_y", "re", "im"]), &rows)
}

/// Step zero is the initial state; `dtau` and `p_success` are empty there.
pub fn trajectory_table(t: &Trajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let levels = t.initial.weights.len();
    let mut header = s(&[
        "step",
        "dtau",
        "p_success",
        "p_cumulative",
        "energy_mev",
        "parity",
    ]);
    header.extend((0..levels).map(|i| format!("w{i}")));
    let mut rows = vec![{
        let mut r = vec![
            "0".into(),
            String::new(),
            String::new(),
            "1".into(),
            f(t.initial.energy),
            f(t.initial.parity),
        ];
        r.extend(t.initial.weights.iter().map(|&w| f(w)));
        r
    }];
    for row in &t.rows {
        let mut r = vec![
            (row.step + 1).to_string(),
            f(row.dtau),
            f(row.p_success),
            f(row.p_cumulative),
            f(row.energy),
            f(row.parity),
        ];
        r.extend(row.weights.iter().map(|&w| f(w)));
        rows.push(r);
    }
    (header, rows)
}

/// With `n_steps = 0` the file holds the metadata and header only.
pub fn write_trajectory_csv(
    path: &Path,
    meta: &Metadata,
    t: &Trajectory,
    n_steps: usize,
) -> Result<()> {
    let (h, mut r) = trajectory_table(t);
    if n_steps == 0 {
        r.clear();
    }
    write_csv(path, meta, &h, &r)
}

/// One row per stage: target, λ, Δt_f, success probability, weights after.
/// Stage zero holds the weights before filtration.
pub fn filtration_table(
    out: &FilterOutcome,
    order: FiltrationOrder,
) -> (Vec<String>, Vec<Vec<String>>) {
    let levels = out.weights_before.len();
    let mut header = s(&[
        "stage",
        "order",
        "target",
        "lambda_mev",
        "dt_f",
        "p_success",
    ]);
    header.extend((0..levels).map(|i| format!("w{i}")));
    let mut rows = vec![{
        let mut r = vec![
            "0".into(),
            order.number().to_string(),
            String::new(),
            String::new(),
            String::new(),
            "1".into(),
        ];
        r.extend(out.weights_before.iter().map(|&w| f(w)));
        r
    }];
    for (i, st) in out.stages.iter().enumerate() {
        let mut r = vec![
            (i + 1).to_string(),
            order.number().to_string(),
            st.target.to_string(),
            f(st.lambda),
            f(st.dt_f),
            f(st.p_success),
        ];
        r.extend(st.weights_after.iter().map(|&w| f(w)));
        rows.push(r);
    }
    (header, rows)
}

pub fn write_filtration_csv(
    path: &Path,
    meta: &Metadata,
    out: &FilterOutcome,
    order: FiltrationOrder,
) -> Result<()> {
    let (h, r) = filtration_table(out, order);
    write_csv(path, meta, &h, &r)
}

/// One row per δE value with columns for both circuit orders.
pub fn sweep_table(rows: &[SweepRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = s(&["level", "delta_e_mev"]);
    if let Some(first) = rows.first() {
        for o in &first.orders {
            header.push(format!("p_success_o{}", o.order));
            header.extend((0..o.weights.len()).map(|i| format!("w{i}_o{}", o.order)));
        }
    }
    let body = rows
        .iter()
        .map(|row| {
            let mut r = vec![row.level.to_string(), f(row.delta_e)];
            for o in &row.orders {
                r.push(f(o.p_success));
                r.extend(o.weights.iter().map(|&w| f(w)));
            }
            r
        })
        .collect();
    (header, body)
}

pub fn write_sweep_csv(path: &Path, meta: &Metadata, rows: &[SweepRow]) -> Result<()> {
    let (h, r) = sweep_table(rows);
    write_csv(path, meta, &h, &r)
}

/// `k_x, k_y, value` (grid indices).
pub fn scalar_field_table(field: &ScalarField) -> (Vec<String>, Vec<Vec<String>>) {
    let g = field.grid;
    let rows = field
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let k = g.unravel(i);
            vec![k[0].to_string(), k[1].to_string(), f(v)]
        })
        .collect();
    (s(&["k_x", "k_y", "value"]), rows)
}

pub fn write_scalar_field_csv(path: &Path, meta: &Metadata, field: &ScalarField) -> Result<()> {
    let meta = field_meta(meta, field.unit, field.grid.dims());
    let (h, r) = scalar_field_table(field);
    write_csv(path, &meta, &h, &r)
}

/// `x, y, jx, jy` in nm for quiver plots. Needs a 2D field.
pub fn quiver_table(field: &VectorField) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let g = field.grid;
    if g.dims() != 2 {
        return Err(crate::error::FqeError::invalid(
            "quiver output needs a two-dimensional field",
        ));
    }
    let rows = (0..g.len())
        .map(|i| {
            let k = g.unravel(i);
            vec![
                f(g.coord(k[0])),
                f(g.coord(k[1])),
                f(field.components[0][i]),
                f(field.components[1][i]),
            ]
        })
        .collect();
    Ok((s(&["x", "y", "jx", "jy"]), rows))
}

pub fn write_quiver_csv(path: &Path, meta: &Metadata, field: &VectorField) -> Result<()> {
    let (h, r) = quiver_table(field)?;
    write_csv(
        path,
        &field_meta(meta, field.unit, field.grid.dims()),
        &h,
        &r,
    )
}

/// `meta` plus a `field_unit` line.
pub fn field_meta(meta: &Metadata, unit: FieldUnit, dims: usize) -> Vec<(String, String)> {
    with(meta, &[("field_unit", unit_label(unit, dims))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("fqe-export-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn csv_has_comment_header_and_is_deterministic() {
        let g = Grid::new(1, 2, 4.0).unwrap();
        let field = ScalarField {
            grid: g,
            values: vec![0.1, 0.2, 0.3, 1.0 / 3.0],
            unit: FieldUnit::Density,
        };
        let meta = vec![("scenario".to_string(), "t".to_string())];
        let (a, b) = (tmp("a.csv"), tmp("b.csv"));
        write_scalar_field_csv(&a, &meta, &field).unwrap();
        write_scalar_field_csv(&b, &meta, &field).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# scenario: t");
        assert!(lines[1].starts_with("# field_unit: nm^-2"));
        assert_eq!(lines[2], "k_x,k_y,value");
        assert_eq!(lines[6], "1,1,0.3333333333333333");
    }

    #[test]
    fn quiver_uses_coordinates() {
        let g = Grid::new(1, 2, 10.0).unwrap();
        let mut v = VectorField::zeros(g, FieldUnit::ProbabilityCurrent);
        v.components[1][3] = -2.0;
        let p = tmp("q.csv");
        write_quiver_csv(&p, &[], &v).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(last, "5.0,5.0,0.0,-2.0");
        let g1 = Grid::new(2, 1, 10.0).unwrap();
        assert!(write_quiver_csv(&p, &[], &VectorField::zeros(g1, FieldUnit::Density)).is_err());
    }

    #[test]
    fn json_wraps_metadata() {
        let p = tmp("x.json");
        write_json(&p, &[("k".into(), "v".into())], &vec![1, 2]).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["metadata"]["k"], "v");
        assert_eq!(v["data"][1], 2);
    }
}
