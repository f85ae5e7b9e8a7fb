//! Training data from the analytic circular orbit.
//!
//! Row `n` of the inputs is `[x, y, vx, vy, h, 1]` at `t_n = t_start + n*h`
//! and row `n` of the targets is the state at `t_{n+1}`. Every row restarts
//! from the analytic state, so the data never carries integration error.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::twobody::{analytic_state, State4};

const STEP_COUNT_TOLERANCE: f64 = 1e-9;

pub const INPUTS_FILE: &str = "inputs.csv";
pub const TARGETS_FILE: &str = "targets.csv";
const INPUT_HEADER: [&str; 6] = ["x", "y", "vx", "vy", "h", "one"];
const TARGET_HEADER: [&str; 4] = ["x", "y", "vx", "vy"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    t_start: f64,
    t_end: f64,
    h: f64,
    steps: usize,
}

impl GridSpec {
    pub fn new(t_start: f64, t_end: f64, h: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && h.is_finite()) {
            return Err(Error::InvalidGrid("bounds and steplength must be finite".into()));
        }
        if !(t_end > t_start) {
            return Err(Error::InvalidGrid(format!("t_end {t_end} must exceed t_start {t_start}")));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("steplength {h} must be positive")));
        }
        let ratio = (t_end - t_start) / h;
        let steps = ratio.round();
        if (ratio - steps).abs() > STEP_COUNT_TOLERANCE || steps < 1.0 {
            return Err(Error::NonIntegerStepCount { ratio });
        }
        Ok(Self {
            t_start,
            t_end,
            h,
            steps: steps as usize,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of steps `N = (t_end - t_start)/h`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_start + n as f64 * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<[f64; 6]>,
    targets: Vec<[f64; 4]>,
    grid: GridSpec,
}

pub fn generate(grid: GridSpec) -> Dataset {
    let h = grid.h();
    let (inputs, targets) = (0..grid.steps())
        .map(|n| {
            let s = analytic_state(grid.time(n));
            let next = analytic_state(grid.time(n + 1));
            ([s.x, s.y, s.vx, s.vy, h, 1.0], next.to_array())
        })
        .unzip();
    Dataset { inputs, targets, grid }
}

impl Dataset {
    pub fn inputs(&self) -> &[[f64; 6]] {
        &self.inputs
    }

    pub fn targets(&self) -> &[[f64; 4]] {
        &self.targets
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    /// Starting state of row `n`.
    pub fn state(&self, n: usize) -> State4 {
        let r = &self.inputs[n];
        State4::new(r[0], r[1], r[2], r[3])
    }

    /// Writes `inputs.csv` and `targets.csv` into `dir`, creating it if needed.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join(INPUTS_FILE), &INPUT_HEADER, self.inputs.iter().map(|r| &r[..]))?;
        write_rows(&dir.join(TARGETS_FILE), &TARGET_HEADER, self.targets.iter().map(|r| &r[..]))?;
        Ok(())
    }

    /// Reads a dataset written by [`Dataset::write_csv`]. The grid is rebuilt
    /// from the rows: `h` from the constant column and `t_start` from the
    /// polar angle of the first position.
    pub fn read_csv(dir: &Path) -> Result<Self> {
        let inputs: Vec<[f64; 6]> = read_rows(&dir.join(INPUTS_FILE), &INPUT_HEADER)?;
        let targets: Vec<[f64; 4]> = read_rows(&dir.join(TARGETS_FILE), &TARGET_HEADER)?;
        if inputs.is_empty() {
            return Err(Error::MalformedDataset("no rows".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::MalformedDataset(format!(
                "{} input rows but {} target rows",
                inputs.len(),
                targets.len()
            )));
        }
        let h = inputs[0][4];
        if let Some(n) = inputs.iter().position(|r| r[4] != h || r[5] != 1.0) {
            return Err(Error::MalformedDataset(format!(
                "row {n}: steplength and dummy columns must be constant"
            )));
        }
        let t_start = inputs[0][1].atan2(inputs[0][0]);
        let grid = GridSpec {
            t_start,
            t_end: t_start + inputs.len() as f64 * h,
            h,
            steps: inputs.len(),
        };
        Ok(Self { inputs, targets, grid })
    }
}

fn write_rows<'a>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<const W: usize>(path: &Path, header: &[&str; W]) -> Result<Vec<[f64; W]>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header[..] {
        return Err(Error::MalformedDataset(format!(
            "{}: expected header {}, found {}",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let mut row = [0.0; W];
            if rec.len() != W {
                return Err(Error::MalformedDataset(format!("{}: row {i} has {} fields", path.display(), rec.len())));
            }
            for (slot, field) in row.iter_mut().zip(rec.iter()) {
                *slot = field.trim().parse().map_err(|_| {
                    Error::MalformedDataset(format!("{}: row {i}: bad number {field:?}", path.display()))
                })?;
            }
            Ok(row)
        })
        .collect()
}

/// Writes a trajectory as `t,x,y,vx,vy` rows.
pub fn write_trajectory(path: &Path, t0: f64, h: f64, traj: &[State4]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    writeln!(f, "t,x,y,vx,vy")?;
    for (i, s) in traj.iter().enumerate() {
        let t = t0 + i as f64 * h;
        writeln!(
            f,
            "{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(s.vx),
            fmt_f64(s.vy)
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn paper_grid_has_256_rows() {
        let grid = GridSpec::new(0.0, 2.0 * PI, PI / 128.0).unwrap();
        assert_eq!(grid.steps(), 256);
        let ds = generate(grid);
        assert_eq!(ds.len(), 256);
        assert_eq!(ds.targets().len(), 256);
        let h = PI / 128.0;
        assert_eq!(ds.inputs()[0], [1.0, 0.0, -0.0, 1.0, h, 1.0]);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cli_spelled_grid_is_accepted() {
        let grid = GridSpec::new(0.0, 6.283185307179586, 0.02454369260617026).unwrap();
        assert_eq!(grid.steps(), 256);
    }

    #[test]
    fn non_integer_step_count() {
        let err = GridSpec::new(0.0, 1.0, 0.3).unwrap_err();
        assert!(matches!(err, Error::NonIntegerStepCount { .. }), "{err}");
    }

    #[test]
    fn invalid_grids() {
        assert!(matches!(GridSpec::new(1.0, 1.0, 0.1), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(0.0, 1.0, 0.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(0.0, 1.0, -0.5), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(0.0, f64::INFINITY, 0.5), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_is_contiguous() {
        let ds = generate(GridSpec::new(0.5, 0.5 + 200.0 * PI, PI / 64.0).unwrap());
        for n in 0..ds.len() - 1 {
            let next = &ds.inputs()[n + 1];
            for j in 0..4 {
                assert!((ds.targets()[n][j] - next[j]).abs() < 1e-14);
            }
        }
        assert!(ds.inputs().iter().all(|r| r[4] == ds.h() && r[5] == 1.0));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate(GridSpec::new(0.0, 2.0 * PI, PI / 16.0).unwrap());
        ds.write_csv(dir.path()).unwrap();
        let back = Dataset::read_csv(dir.path()).unwrap();
        assert_eq!(back.inputs(), ds.inputs());
        assert_eq!(back.targets(), ds.targets());
        assert_eq!(back.grid().steps(), 32);
        assert_eq!(back.h(), ds.h());
    }

    #[test]
    fn csv_header_checked() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(INPUTS_FILE), "a,b\n1,2\n").unwrap();
        std::fs::write(dir.path().join(TARGETS_FILE), "x,y,vx,vy\n1,2,3,4\n").unwrap();
        assert!(matches!(Dataset::read_csv(dir.path()), Err(Error::MalformedDataset(_))));
    }
}
