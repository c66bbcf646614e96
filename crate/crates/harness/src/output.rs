use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use surface_fv::DiagnosticRecord;

use crate::experiment::ConvergenceRow;
use crate::HarnessError;

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header `level,h,tau,l1_error,wall_s`.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<(), HarnessError> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["level", "h", "tau", "l1_error", "wall_s"])?;
        w.flush()?;
        return Ok(());
    }
    write_csv(path, rows)
}

/// Header `step,time,mass,min,max,tv,max_entropy_residual,cfl_number`.
pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticRecord]) -> Result<(), HarnessError> {
    write_csv(path, records)
}

pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
