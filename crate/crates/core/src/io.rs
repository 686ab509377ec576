//! CSV interchange: state matrices, DDE trajectories, readout weights and
//! experiment records. UTF-8, dot decimal separator, RFC-4180-style quoting
//! (all fields here are plain numerics or bare words, so no quoting in
//! practice). Floats are printed in Rust's shortest round-trip form.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::deep::ToleranceRow;
use crate::error::Result;
use crate::readout::{ReadoutKind, ReadoutWeights};
use crate::series::{StateMatrix, TimeSeries};
use crate::tasks::MetricsRecord;

/// `index,node_0,...`: one row per time step.
pub fn write_states_csv<W: Write>(out: W, states: &StateMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((0..states.cols()).map(|i| format!("node_{i}")));
    w.write_record(&header)?;
    for k in 0..states.rows() {
        let mut row = vec![k.to_string()];
        row.extend((0..states.cols()).map(|i| states.data()[(k, i)].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `time,x_0,...`: sample k is stamped (k+1)*dt, the end of its integration
/// interval (the convention of the DDE trajectory grid).
pub fn write_trajectory_csv<W: Write>(out: W, traj: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend((0..traj.width()).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for k in 0..traj.len() {
        let mut row = vec![((k + 1) as f64 * traj.dt()).to_string()];
        row.extend((0..traj.width()).map(|i| traj.data()[(k, i)].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Headerless weight rows: one row per output, N node weights then the bias.
pub fn write_weights_csv<W: Write>(out: W, weights: &ReadoutWeights) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let m = weights.matrix();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read weights written by [`write_weights_csv`].
pub fn read_weights_csv<R: Read>(input: R, kind: ReadoutKind) -> Result<ReadoutWeights> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    crate::error::Error::InvalidParameter(format!("bad weight '{f}': {e}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(crate::error::Error::InvalidParameter(
            "weight rows missing or ragged".into(),
        ));
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    ReadoutWeights::new(m, kind)
}

/// Metrics table header used by every experiment run.
pub const METRICS_HEADER: [&str; 8] = [
    "task",
    "reservoir",
    "seed",
    "n_nodes",
    "lambda",
    "train_nmse",
    "test_nmse",
    "mc_total",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per record; absent metrics stay empty.
pub fn write_metrics_csv<W: Write>(out: W, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        w.write_record(&[
            r.task.clone(),
            r.reservoir.clone(),
            r.seed.to_string(),
            r.n_nodes.to_string(),
            r.lambda.to_string(),
            opt(r.train_nmse),
            opt(r.test_nmse),
            opt(r.mc_total),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `sigma,median_nmse,n_seeds`: the tolerance-transfer table.
pub fn write_tolerance_csv<W: Write>(out: W, rows: &[ToleranceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sigma", "median_nmse", "n_seeds"])?;
    for r in rows {
        w.write_record(&[
            r.sigma.to_string(),
            r.median_nmse.to_string(),
            r.n_seeds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readout::BooleanAlphabet;

    #[test]
    fn states_csv_shape() {
        let states = StateMatrix::new(DMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64)).unwrap();
        let mut buf = Vec::new();
        write_states_csv(&mut buf, &states).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 4); // header + 3 rows
        assert_eq!(lines[0], "index,node_0,node_1,node_2,node_3");
        assert_eq!(lines[1].split(',').count(), 5);
        assert!(lines[1].starts_with("0,"));
    }

    #[test]
    fn weights_roundtrip() {
        let m = DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 1.0, -0.25, 1.0, 0.0, 0.0, 0.5]);
        let w = ReadoutWeights::new(m.clone(), ReadoutKind::Boolean(BooleanAlphabet::ZeroOne))
            .unwrap();
        let mut buf = Vec::new();
        write_weights_csv(&mut buf, &w).unwrap();
        let back = read_weights_csv(
            buf.as_slice(),
            ReadoutKind::Boolean(BooleanAlphabet::ZeroOne),
        )
        .unwrap();
        assert_eq!(back.matrix(), &m);
    }

    #[test]
    fn metrics_csv_leaves_missing_fields_empty() {
        let rec = MetricsRecord {
            task: "memory_capacity".into(),
            reservoir: "esn".into(),
            seed: 7,
            n_nodes: 20,
            lambda: 1e-9,
            train_nmse: None,
            test_nmse: None,
            mc_total: Some(12.5),
        };
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.trim_end().lines().nth(1).unwrap();
        assert_eq!(line, "memory_capacity,esn,7,20,0.000000001,,,12.5");
    }
}
