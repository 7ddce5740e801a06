//! CSV tables and the JSON run manifest. Floats are written in Rust's shortest
//! round-trip form, so identical runs produce identical files.

use super::experiment::{GapLog, StiffnessRow};
use super::{HarnessError, Shape, TwinConfig};
use crate::twin_control::{DeviationReport, TimedPosition};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Time-aligned demonstrator and executor tip positions.
pub fn write_trajectories(path: &Path, demo: &[TimedPosition], exec: &[TimedPosition]) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "t,demo_x,demo_y,demo_z,exec_x,exec_y,exec_z")?;
    for (d, e) in demo.iter().zip(exec) {
        writeln!(w, "{},{},{},{},{},{},{}", d.t, d.p[0], d.p[1], d.p[2], e.p[0], e.p[1], e.p[2])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per shape: x, y, z deviation in percent at three significant digits.
/// Axes without demonstrator motion are marked with their unit.
pub fn write_deviation_table(path: &Path, rows: &[(Shape, DeviationReport)]) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "shape,x,y,z")?;
    for (shape, report) in rows {
        let cells: Vec<String> = report
            .axes
            .iter()
            .zip(report.formatted())
            .map(|(axis, v)| if axis.is_percent() { v } else { format!("{v} m") })
            .collect();
        writeln!(w, "{shape},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stiffness_table(path: &Path, rows: &[StiffnessRow]) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "profile,theta_1,theta_2,theta_3,phi_1,phi_2,phi_3,tip_x,tip_y,tip_z,tip_displacement,converged")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.profile,
            r.thetas[0],
            r.thetas[1],
            r.thetas[2],
            r.phis[0],
            r.phis[1],
            r.phis[2],
            r.tip[0],
            r.tip[1],
            r.tip[2],
            r.tip_displacement,
            r.converged
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gap_log(path: &Path, log: &GapLog) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "t,phase,profile,demo_x,demo_y,demo_z,exec_x,exec_y,exec_z")?;
    for s in &log.samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            s.t,
            s.phase.name(),
            s.profile,
            s.demo_tip[0],
            s.demo_tip[1],
            s.demo_tip[2],
            s.exec_tip[0],
            s.exec_tip[1],
            s.exec_tip[2]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// What was run, with which configuration, and where the outputs went.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: TwinConfig,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, manifest).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
