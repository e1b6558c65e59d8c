//! Writing a result as `<prefix>.csv`, `<prefix>_summary.csv` and the
//! `<prefix>.json` sidecar, which holds everything needed to re-run it.

use crate::sweep::ScenarioResult;
use crate::ScenarioError;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub table: PathBuf,
    pub summary: Option<PathBuf>,
    pub sidecar: PathBuf,
}

pub fn sidecar_json(r: &ScenarioResult, table_file: &str, summary_file: Option<&str>) -> serde_json::Value {
    let spec = &r.spec;
    json!({
        "scenario": spec.scenario.name(),
        "version": VERSION,
        "config_sha256": r.config_hash,
        "engine": spec.engine.kind.name(),
        "tolerances": {
            "rel_tol": spec.engine.rel_tol,
            "abs_tol": spec.engine.abs_tol,
            "residual_tol": spec.engine.residual_tol,
        },
        "spec": spec,
        "columns": r.table.columns,
        "rows": r.table.rows.len(),
        "points": r.points,
        "failed_points": r.failed,
        "workers": r.workers,
        "wall_time_s": r.wall_time_s,
        "files": { "table": table_file, "summary": summary_file },
        "summary": r.summary,
    })
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> ScenarioError + '_ {
    move |e| ScenarioError::Io(format!("{}: {e}", path.display()))
}

/// Write the three files into `dir`, creating it if needed.
pub fn write(r: &ScenarioResult, dir: &Path) -> Result<Written, ScenarioError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let prefix = r.spec.prefix();
    let table = dir.join(format!("{prefix}.csv"));
    let file = fs::File::create(&table).map_err(io(&table))?;
    r.table
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", table.display())))?;
    let summary = match &r.summary {
        Some(s) => {
            let path = dir.join(format!("{prefix}_summary.csv"));
            let file = fs::File::create(&path).map_err(io(&path))?;
            s.write_csv(std::io::BufWriter::new(file))
                .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
            Some(path)
        }
        None => None,
    };
    let name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned());
    let sidecar = dir.join(format!("{prefix}.json"));
    let meta = sidecar_json(r, &name(&table).unwrap_or_default(), summary.as_deref().and_then(name).as_deref());
    let text = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    fs::write(&sidecar, text + "\n").map_err(io(&sidecar))?;
    Ok(Written {
        table,
        summary,
        sidecar,
    })
}
