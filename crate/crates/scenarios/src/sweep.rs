//! Parallel evaluation of a scenario grid. Points are independent; results
//! are keyed by grid index, so the table does not depend on the worker count
//! or on completion order.

use crate::runners::{data_columns, run_point, PointData};
use crate::spec::{GridPoint, ScenarioSpec};
use crate::summary::summarize;
use crate::table::{Cell, Table};
use crate::ScenarioError;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub point: GridPoint,
    pub outcome: Result<PointData, String>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub table: Table,
    pub summary: Option<Table>,
    pub points: usize,
    pub failed: usize,
    pub workers: usize,
    pub wall_time_s: f64,
    pub config_hash: String,
}

impl ScenarioResult {
    pub fn all_failed(&self) -> bool {
        self.points > 0 && self.failed == self.points
    }
}

/// SHA-256 of the canonical JSON form of the spec, without the output
/// location, which does not affect the numbers.
pub fn config_hash(spec: &ScenarioSpec) -> String {
    let mut v = serde_json::to_value(spec).expect("spec serialises");
    if let Some(m) = v.as_object_mut() {
        m.remove("output");
    }
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

fn evaluate(spec: &ScenarioSpec, point: &GridPoint, inner: Option<&[f64]>) -> Result<PointData, String> {
    let params = spec.params_at(point)?;
    // a panic in one point must not take the sweep down
    catch_unwind(AssertUnwindSafe(|| run_point(spec, &params, inner))).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(format!("internal error: {msg}"))
    })
}

/// Evaluate every grid point of `spec` on a pool of `workers` threads.
pub fn run(spec: &ScenarioSpec, workers: usize) -> Result<ScenarioResult, ScenarioError> {
    spec.check().map_err(ScenarioError::Config)?;
    let points = spec.grid_points().map_err(ScenarioError::Config)?;
    let inner = spec.inner_grid().map_err(ScenarioError::Config)?;
    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ScenarioError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let records: Vec<PointRecord> = pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let outcome = evaluate(spec, &point, inner.as_deref());
                PointRecord { point, outcome }
            })
            .collect()
    });
    let wall_time_s = start.elapsed().as_secs_f64();
    let table = build_table(spec, &records, inner.as_deref());
    let summary = summarize(spec, &records, inner.as_deref());
    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    Ok(ScenarioResult {
        spec: spec.clone(),
        table,
        summary,
        points: records.len(),
        failed,
        workers,
        wall_time_s,
        config_hash: config_hash(spec),
    })
}

/// Columns: index, outer coordinates, inner coordinate, results, status,
/// message. A result column named like a grid axis is left out.
pub fn build_table(spec: &ScenarioSpec, records: &[PointRecord], inner: Option<&[f64]>) -> Table {
    let axes: Vec<String> = spec.outer_axes().iter().map(|a| a.var.clone()).collect();
    let inner_name = spec.scenario.inner_axis().filter(|_| inner.is_some());
    let data = data_columns(spec.scenario);
    let keep: Vec<bool> = data
        .iter()
        .map(|c| !axes.iter().any(|a| a == c) && Some(*c) != inner_name)
        .collect();
    let mut columns = vec!["index".to_string()];
    columns.extend(axes.iter().cloned());
    columns.extend(inner_name.map(String::from));
    columns.extend(data.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c.to_string()));
    columns.extend(["status".to_string(), "message".to_string()]);
    let mut t = Table::new(columns);
    let n_inner = inner.map_or(1, |g| g.len());
    for r in records {
        for j in 0..n_inner {
            let mut row = vec![Cell::Int(r.point.index as i64)];
            row.extend(r.point.coords.iter().map(|(_, v)| Cell::Num(*v)));
            if let Some(g) = inner {
                row.push(Cell::Num(g[j]));
            }
            match &r.outcome {
                Ok(d) => {
                    row.extend(d.rows[j].iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c.clone()));
                    row.push(Cell::text("ok"));
                    row.push(d.note.clone().map_or(Cell::Empty, Cell::Text));
                }
                Err(e) => {
                    row.extend(keep.iter().filter(|k| **k).map(|_| Cell::Empty));
                    row.push(Cell::text("failed"));
                    row.push(Cell::text(e.clone()));
                }
            }
            t.rows.push(row);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;
    use crate::spec::{Axis, Scenario};

    #[test]
    fn failed_point_keeps_its_rows() {
        let mut spec = preset(Scenario::MaserMap);
        spec.scan = vec![Axis::list("n_atoms", &[1e5]), Axis::list("w", &[0.1, -1.0, 1.0])];
        let r = run(&spec, 2).unwrap();
        assert_eq!((r.points, r.failed), (3, 1));
        let status = r.table.column("status").unwrap();
        let msg = r.table.column("message").unwrap();
        assert_eq!(r.table.rows[1][status], Cell::text("failed"));
        assert!(r.table.rows[1][msg].render().contains("w"));
        assert_eq!(r.table.rows[2][status], Cell::text("ok"));
        assert!(!r.all_failed());
    }

    #[test]
    fn axis_named_column_is_not_duplicated() {
        let mut spec = preset(Scenario::TransmissionScan);
        spec.scan = vec![Axis::list("delta_m", &[0.0, 1.0])];
        let r = run(&spec, 1).unwrap();
        let n = r.table.columns.iter().filter(|c| *c == "delta_m").count();
        assert_eq!(n, 1);
        assert!(r.table.column("delta_a").is_some());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = preset(Scenario::Cooling);
        let mut b = a.clone();
        b.output.dir = "/elsewhere".into();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.system.g = 41.0;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
