//! Work-precision benchmark on the circular orbit.
//!
//! Each `(method, N)` cell integrates from `(1, 0, 0, 1)` at `t = 0` to
//! `t_end` with `N` fixed steps and records the maximum deviation from the
//! analytic solution. Cost is counted in right-hand-side evaluations,
//! `2*N` for a two-stage method.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;
use crate::fmt_f64;
use crate::rational::Rational;
use crate::rk2::{integrate_max_error, Tableau2};
use crate::twobody::State4;

pub const STAGES: u64 = 2;
pub const DEFAULT_T_END: f64 = 1000.0;
pub const DEFAULT_STEP_COUNTS: [usize; 6] = [4000, 8000, 16000, 32000, 64000, 128000];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTableau {
    pub name: String,
    pub tableau: Tableau2<Rational>,
}

impl NamedTableau {
    pub fn new(name: impl Into<String>, tableau: Tableau2<Rational>) -> Self {
        Self {
            name: name.into(),
            tableau,
        }
    }
}

/// The tuned 11/26 method and the three classical methods it is compared with.
pub fn builtin_tableaus() -> Vec<NamedTableau> {
    vec![
        NamedTableau::new("new", Tableau2::tuned()),
        NamedTableau::new("heun", Tableau2::heun()),
        NamedTableau::new("midpoint", Tableau2::midpoint()),
        NamedTableau::new("two-thirds", Tableau2::two_thirds()),
    ]
}

pub fn builtin(name: &str) -> Option<NamedTableau> {
    builtin_tableaus().into_iter().find(|t| t.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: String,
    pub steps: usize,
    pub function_evaluations: u64,
    /// NaN when the integration failed.
    pub max_abs_error: f64,
    pub accuracy_digits: f64,
    pub failure: Option<String>,
}

impl BenchRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Runs one cell.
pub fn bench_cell(method: &NamedTableau, t_end: f64, steps: usize) -> BenchRecord {
    let t = method.tableau.to_f64();
    let s0 = State4::new(1.0, 0.0, 0.0, 1.0);
    let (max_abs_error, failure) = match integrate_max_error(&t, s0, 0.0, t_end, steps) {
        Ok(e) => (e, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    BenchRecord {
        method: method.name.clone(),
        steps,
        function_evaluations: STAGES * steps as u64,
        max_abs_error,
        accuracy_digits: -max_abs_error.log10(),
        failure,
    }
}

/// All `(method, N)` cells, in parallel. Output is ordered by method (in the
/// order given) and then by the order of `step_counts`.
pub fn run_benchmark(tableaus: &[NamedTableau], t_end: f64, step_counts: &[usize]) -> Vec<BenchRecord> {
    let cells: Vec<(&NamedTableau, usize)> = tableaus
        .iter()
        .flat_map(|t| step_counts.iter().map(move |&n| (t, n)))
        .collect();
    cells.par_iter().map(|&(t, n)| bench_cell(t, t_end, n)).collect()
}

/// `method,N,fe,max_abs_err,digits`; failed cells carry `NaN`.
pub fn write_csv(records: &[BenchRecord], w: impl Write) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "method,N,fe,max_abs_err,digits")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.method,
            r.steps,
            r.function_evaluations,
            fmt_f64(r.max_abs_error),
            fmt_f64(r.accuracy_digits)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Wide table for plotting accuracy against cost: one `fe` column, then one
/// `digits` column per method. Empty cells where a method lacks that cost.
pub fn write_plot_data(records: &[BenchRecord], w: impl Write) -> Result<()> {
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut fes: Vec<u64> = records.iter().map(|r| r.function_evaluations).collect();
    fes.sort_unstable();
    fes.dedup();

    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "fe,{}", methods.join(","))?;
    for fe in fes {
        let cols: Vec<String> = methods
            .iter()
            .map(|m| {
                records
                    .iter()
                    .find(|r| r.method == *m && r.function_evaluations == fe)
                    .map(|r| fmt_f64(r.accuracy_digits))
                    .unwrap_or_default()
            })
            .collect();
        writeln!(w, "{fe},{}", cols.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_files(records: &[BenchRecord], csv_path: &Path, plot_path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(csv_path)?)?;
    write_plot_data(records, std::fs::File::create(plot_path)?)?;
    Ok(())
}

/// Empirical order `ln(err_i/err_{i+1}) / ln(N_{i+1}/N_i)` between consecutive
/// records of one method.
pub fn convergence_orders(records: &[BenchRecord], method: &str) -> Vec<f64> {
    let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.method == method).collect();
    rs.windows(2)
        .map(|w| (w[0].max_abs_error / w[1].max_abs_error).ln() / (w[1].steps as f64 / w[0].steps as f64).ln())
        .collect()
}
