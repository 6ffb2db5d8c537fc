//! `latcode count-points`: exact |Z^n ∩ B(s, r)| with the two-sided
//! grid-in-sphere bounds per probe, flagging any violation.

use latcode::rng::{label, Substream};
use latcode::{count_integer_points_in_ball, grid_sphere_bounds};
use rand::Rng;

use crate::config::CountPointsConfig;
use crate::csvw::{Cell, CsvTable};
use crate::error::{CliError, CliResult};

const HEADERS: [&str; 7] = [
    "n",
    "center_index",
    "radius",
    "count",
    "lower_bound",
    "upper_bound",
    "violation",
];

pub fn run(cfg: &CountPointsConfig) -> CliResult<Vec<u8>> {
    if cfg.radii.is_empty() {
        return Err(CliError::Config("radii must be non-empty".into()));
    }
    let mut probes: Vec<Vec<f64>> = Vec::new();
    if !cfg.centers.is_empty() {
        probes.extend(cfg.centers.iter().cloned());
    } else {
        if cfg.dims.is_empty() || cfg.num_centers == 0 {
            return Err(CliError::Config(
                "either centers or (dims, num_centers) must be given".into(),
            ));
        }
        let stream = Substream::new(cfg.seed, label::CENTER);
        for &n in &cfg.dims {
            for ci in 0..cfg.num_centers {
                let mut rng = stream.rng((n as u64) << 32 | ci);
                probes.push(
                    (0..n)
                        .map(|_| cfg.center_half_width * 2.0 * (rng.random::<f64>() - 0.5))
                        .collect(),
                );
            }
        }
    }

    let mut table = CsvTable::new(&HEADERS);
    for (idx, s) in probes.iter().enumerate() {
        for &r in &cfg.radii {
            let count = count_integer_points_in_ball(s, r, cfg.budget)?;
            let (lo, hi) = grid_sphere_bounds(s.len(), r);
            let violation = (count as f64) < lo || (count as f64) > hi;
            table.row(&[
                Cell::U64(s.len() as u64),
                Cell::U64(idx as u64),
                Cell::F64(r),
                Cell::U64(count),
                Cell::F64(lo),
                Cell::F64(hi),
                Cell::Bool(violation),
            ]);
        }
    }
    Ok(table.into_bytes())
}
