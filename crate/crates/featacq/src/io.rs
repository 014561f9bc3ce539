//! File formats: CSV datasets, plain-text DAG edge lists, JSONL episode
//! traces, and the curve CSV emitted by experiments. All writers produce
//! byte-stable output for a given input.

use crate::acquisition::EpisodeTrace;
use crate::dataset::{normalize_full, Dataset, NormStats, TaskKind};
use crate::error::{DataError, Error};
use crate::graph::Dag;
use std::io::Write;
use std::path::Path;

fn io_err(path: &Path, e: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), msg: e.to_string() }
}

/// How the prediction target is encoded in a CSV file.
#[derive(Debug, Clone)]
pub enum TargetSpec {
    /// Named column holds a non-negative integer class label.
    Label(String),
    /// Named column is a continuous regression target (kept in the rows).
    Column(String),
    /// Regression on the last column.
    LastColumn,
}

fn resolve_column(name: &str, header: &[String]) -> Result<usize, DataError> {
    if let Some(i) = header.iter().position(|h| h == name) {
        return Ok(i);
    }
    if let Ok(i) = name.parse::<usize>() {
        if i < header.len() {
            return Ok(i);
        }
    }
    Err(DataError::BadLabelColumn { col: header.len(), width: header.len() })
}

/// Rectangular numeric CSV with an optional header row (detected by any
/// non-numeric cell in the first row). Returns the dataset and, when
/// `normalize` is set, the min-max statistics applied to all columns.
pub fn load_csv(
    path: &Path,
    target: TargetSpec,
    normalize: bool,
) -> Result<(Dataset, Option<NormStats>), Error> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let mut lines: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| DataError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let cells: Vec<String> = rec.iter().map(String::from).collect();
        if cells.len() == 1 && cells[0].is_empty() {
            continue;
        }
        lines.push(cells);
    }
    if lines.is_empty() {
        return Err(DataError::TooFewRows { got: 0, min: 1 }.into());
    }
    let has_header = lines[0].iter().any(|c| c.parse::<f64>().is_err());
    let header: Vec<String> = if has_header {
        lines.remove(0)
    } else {
        (0..lines[0].len()).map(|i| format!("c{i}")).collect()
    };
    let width = header.len();
    let mut cells = Vec::with_capacity(lines.len());
    for (r, line) in lines.iter().enumerate() {
        if line.len() != width {
            return Err(DataError::RaggedRows { row: r + 1, got: line.len(), expected: width }.into());
        }
        let mut row = Vec::with_capacity(width);
        for (c, cell) in line.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| DataError::ParseError {
                row: r + 1,
                col: c + 1,
                text: cell.clone(),
            })?;
            row.push(v);
        }
        cells.push(row);
    }
    let n = cells.len();
    let build = |cols: &[usize]| {
        nalgebra::DMatrix::from_fn(n, cols.len(), |r, c| cells[r][cols[c]])
    };
    let mut ds = match target {
        TargetSpec::Label(name) => {
            let lc = resolve_column(&name, &header)?;
            let mut labels = Vec::with_capacity(n);
            for row in &cells {
                let v = row[lc];
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(DataError::BadLabel(format!("{v}")).into());
                }
                labels.push(v as usize);
            }
            let num_classes = labels.iter().max().copied().unwrap_or(0) + 1;
            let feat_cols: Vec<usize> = (0..width).filter(|&c| c != lc).collect();
            let names: Vec<String> = feat_cols.iter().map(|&c| header[c].clone()).collect();
            Dataset::new(
                build(&feat_cols),
                Some(labels),
                TaskKind::Classification { num_classes },
                names,
            )?
        }
        TargetSpec::Column(name) => {
            let tc = resolve_column(&name, &header)?;
            let all: Vec<usize> = (0..width).collect();
            Dataset::new(build(&all), None, TaskKind::Regression { target_index: tc }, header)?
        }
        TargetSpec::LastColumn => {
            let all: Vec<usize> = (0..width).collect();
            Dataset::new(
                build(&all),
                None,
                TaskKind::Regression { target_index: width - 1 },
                header,
            )?
        }
    };
    let stats = normalize.then(|| normalize_full(&mut ds));
    Ok((ds, stats))
}

/// Features (plus a final `label` column for classification) with a header.
pub fn write_csv(path: &Path, ds: &Dataset) -> Result<(), Error> {
    let mut out = String::new();
    let mut header = ds.feature_names.join(",");
    if ds.labels.is_some() {
        header.push_str(",label");
    }
    out.push_str(&header);
    out.push('\n');
    for r in 0..ds.n() {
        let mut cells: Vec<String> = (0..ds.d()).map(|c| format!("{}", ds.rows[(r, c)])).collect();
        if let Some(labels) = &ds.labels {
            cells.push(labels[r].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// One `parent -> child` line per edge, in deterministic edge order.
pub fn write_dag_file(path: &Path, dag: &Dag, names: &[String]) -> Result<(), Error> {
    assert_eq!(names.len(), dag.num_nodes());
    let mut out = String::new();
    for (p, c) in dag.edges() {
        out.push_str(&format!("{} -> {}\n", names[p], names[c]));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Parses `parent -> child` lines against a fixed node-name list. Blank
/// lines and `#` comments are ignored.
pub fn read_dag_file(path: &Path, names: &[String]) -> Result<Dag, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut dag = Dag::new(names.len())?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| DataError::Malformed {
            path: path.display().to_string(),
            line: lineno + 1,
            msg,
        };
        let (p, c) = line
            .split_once("->")
            .ok_or_else(|| bad("expected `parent -> child`".to_string()))?;
        let resolve = |name: &str| {
            names
                .iter()
                .position(|n| n == name.trim())
                .ok_or_else(|| bad(format!("unknown node {:?}", name.trim())))
        };
        dag.add_edge(resolve(p)?, resolve(c)?)?;
    }
    Ok(dag)
}

/// One JSON object per line.
pub fn write_traces_jsonl(path: &Path, traces: &[EpisodeTrace]) -> Result<(), Error> {
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    for t in traces {
        let line = serde_json::to_string(t).expect("traces are serializable");
        writeln!(f, "{line}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Rows of (step, mean, stderr) under the fixed experiment-curve header.
pub fn write_curve_csv(path: &Path, rows: &[(usize, f64, f64)]) -> Result<(), Error> {
    let mut out = String::from("step,metric_mean,metric_stderr\n");
    for &(step, mean, se) in rows {
        out.push_str(&format!("{step},{mean:.6},{se:.6}\n"));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gating_demo_dag;
    use approx::assert_relative_eq;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("featacq-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let rows = nalgebra::DMatrix::from_row_slice(3, 2, &[0.5, 1.25, -2.0, 3.5, 0.0, 9.0]);
        let ds = Dataset::new(
            rows,
            Some(vec![0, 1, 0]),
            TaskKind::Classification { num_classes: 2 },
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let p = tmp("roundtrip.csv");
        write_csv(&p, &ds).unwrap();
        let (back, stats) = load_csv(&p, TargetSpec::Label("label".into()), false).unwrap();
        assert!(stats.is_none());
        assert_eq!(back.rows, ds.rows);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.feature_names, ds.feature_names);
    }

    #[test]
    fn headerless_files_get_synthetic_names() {
        let p = tmp("noheader.csv");
        std::fs::write(&p, "1.0,2.0\n3.0,4.0\n").unwrap();
        let (ds, _) = load_csv(&p, TargetSpec::LastColumn, false).unwrap();
        assert_eq!(ds.feature_names, vec!["c0", "c1"]);
        assert_eq!(ds.task, TaskKind::Regression { target_index: 1 });
    }

    #[test]
    fn normalization_rescales_to_unit_range() {
        let p = tmp("norm.csv");
        std::fs::write(&p, "x,y\n0.0,10.0\n5.0,20.0\n10.0,30.0\n").unwrap();
        let (ds, stats) = load_csv(&p, TargetSpec::LastColumn, true).unwrap();
        assert!(stats.is_some());
        for c in 0..2 {
            assert_relative_eq!(ds.rows.column(c).min(), 0.0);
            assert_relative_eq!(ds.rows.column(c).max(), 1.0);
        }
    }

    #[test]
    fn parse_errors_name_row_and_column() {
        let p = tmp("bad.csv");
        std::fs::write(&p, "a,b\n1.0,2.0\n1.0,oops\n").unwrap();
        match load_csv(&p, TargetSpec::LastColumn, false) {
            Err(Error::Data(DataError::ParseError { row: 2, col: 2, text })) => {
                assert_eq!(text, "oops");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let p = tmp("ragged.csv");
        std::fs::write(&p, "a,b\n1.0,2.0\n3.0\n").unwrap();
        assert!(matches!(
            load_csv(&p, TargetSpec::LastColumn, false),
            Err(Error::Data(DataError::RaggedRows { row: 2, got: 1, expected: 2 }))
        ));
    }

    #[test]
    fn fractional_labels_are_rejected() {
        let p = tmp("fraclabel.csv");
        std::fs::write(&p, "a,label\n1.0,0.5\n").unwrap();
        assert!(matches!(
            load_csv(&p, TargetSpec::Label("label".into()), false),
            Err(Error::Data(DataError::BadLabel(_)))
        ));
    }

    #[test]
    fn dag_file_round_trip() {
        let (dag, names) = gating_demo_dag();
        let p = tmp("demo.dag");
        write_dag_file(&p, &dag, &names).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("y -> x1"));
        assert!(text.contains("x2 -> x4"));
        let back = read_dag_file(&p, &names).unwrap();
        assert_eq!(back.edges(), dag.edges());
    }

    #[test]
    fn dag_file_rejects_unknown_nodes() {
        let p = tmp("unknown.dag");
        std::fs::write(&p, "y -> nosuch\n").unwrap();
        let (_, names) = gating_demo_dag();
        assert!(matches!(
            read_dag_file(&p, &names),
            Err(Error::Data(DataError::Malformed { line: 1, .. }))
        ));
    }

    #[test]
    fn curve_csv_has_fixed_header_and_precision() {
        let p = tmp("curve.csv");
        write_curve_csv(&p, &[(0, 0.5, 0.01), (1, 0.75, 0.005)]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "step,metric_mean,metric_stderr\n0,0.500000,0.010000\n1,0.750000,0.005000\n"
        );
    }
}
