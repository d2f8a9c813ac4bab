//! CSV output of trajectories.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::Trajectory;

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t",
    "xi",
    "w",
    "V",
    "U",
    "E",
    "W_energy",
    "mass",
    "vx_l2",
    "spill_margin",
    "f",
    "K_bar",
];

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("csv output: {e}"))
}

/// One row per output instant.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(io_err)?;
    for ((t, tank), d) in traj.times.iter().zip(&traj.tanks).zip(&traj.diagnostics) {
        let row = [
            *t,
            tank.xi,
            tank.w,
            d.v,
            d.u,
            d.e,
            d.w_energy,
            d.mass,
            d.vx_l2,
            d.spill_margin,
            d.f,
            d.k_bar,
        ];
        w.write_record(row.iter().map(|x| format!("{x:e}")))
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes `fields_<index>.csv` with columns `x,h,v` for each kept snapshot,
/// returning the number of files written.
pub fn write_fields(traj: &Trajectory, dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    for (i, s) in traj.states.iter().enumerate() {
        let mut w =
            csv::Writer::from_path(dir.join(format!("fields_{i:05}.csv"))).map_err(io_err)?;
        w.write_record(["x", "h", "v"]).map_err(io_err)?;
        for (j, (h, v)) in s.h().iter().zip(s.v()).enumerate() {
            let x = traj.grid.x(j);
            w.write_record([format!("{x:e}"), format!("{h:e}"), format!("{v:e}")])
                .map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    Ok(traj.states.len())
}
