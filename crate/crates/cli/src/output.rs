//! Report emission: `report.json`, `loss.csv`, and `cells.csv` under the
//! output directory. Reports deliberately contain no wall-clock fields, so
//! rerunning the embedded config reproduces them bit for bit.

use crate::CliError;
use jfrft::bench::{CellRecord, RuntimeRecord};
use serde::Serialize;
use serde_json::json;
use std::path::Path;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Writes `report.json`: the command name, the full resolved config, and the
/// result, as one pretty-printed object.
pub fn write_report<C: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    result: &R,
) -> Result<(), CliError> {
    let report = json!({
        "command": command,
        "config": config,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(format!("report serialization failed: {e}")))?;
    write_text(&dir.join("report.json"), &format!("{text}\n"))
}

/// Writes `loss.csv` with 1-based epoch numbers.
pub fn write_loss_csv(dir: &Path, curve: &[f64]) -> Result<(), CliError> {
    let mut text = String::from("epoch,loss\n");
    for (i, loss) in curve.iter().enumerate() {
        text.push_str(&format!("{},{loss:e}\n", i + 1));
    }
    write_text(&dir.join("loss.csv"), &text)
}

/// Writes `cells.csv`, one grid cell per row in lattice order.
pub fn write_cells_csv(dir: &Path, cells: &[CellRecord]) -> Result<(), CliError> {
    let mut text = String::from("alpha,beta,snr_db,error\n");
    for cell in cells {
        let snr = cell.snr_db.map(|v| format!("{v}")).unwrap_or_default();
        let err = cell.error.as_deref().unwrap_or("");
        text.push_str(&format!(
            "{},{},{snr},{}\n",
            cell.alpha,
            cell.beta,
            err.replace(',', ";")
        ));
    }
    write_text(&dir.join("cells.csv"), &text)
}

/// Writes `cells.csv` for the runtime benchmark, one measurement per row.
pub fn write_runtime_csv(dir: &Path, records: &[RuntimeRecord]) -> Result<(), CliError> {
    let mut text = String::from("method,n,t,total_time_s,per_epoch_s,cells,epochs_run,snr_db\n");
    for r in records {
        let per_epoch = r.per_epoch_s.map(|v| format!("{v}")).unwrap_or_default();
        let cells = r.cells.map(|v| v.to_string()).unwrap_or_default();
        let epochs = r.epochs_run.map(|v| v.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{per_epoch},{cells},{epochs},{}\n",
            r.method, r.n, r.t, r.total_time_s, r.snr_db
        ));
    }
    write_text(&dir.join("cells.csv"), &text)
}
