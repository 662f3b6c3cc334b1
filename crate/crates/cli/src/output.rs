//! CSV and JSON artifacts. Every file is written to a temporary sibling and
//! renamed into place, so readers never see a half-written file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use optexec::grid::{Grid2D, Region, ValueField};
use optexec::impulse::ImpulsePolicy;
use optexec::singular::SingularPolicy;

use crate::error::CliError;

pub const VALUE_HEADER_IMPULSE: &str = "x,p,V,region,zeta_star";
pub const VALUE_HEADER_SINGULAR: &str = "x,p,V,region";
pub const REGIONS_HEADER: &str = "x,p,region";
pub const FREE_BOUNDARY_HEADER: &str = "x,p_star";
pub const SWEEP_HEADER: &str = "parameter_value,V_at_probe,iterations,residual,status";

/// Nine significant digits, as `Display` for `{:.8e}`.
pub fn num(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(format!("renaming to {}", path.display()), e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Per-node policy columns shared by both solvers.
pub enum PolicyView<'a> {
    Impulse(&'a ImpulsePolicy<f64>),
    Singular(&'a SingularPolicy<f64>),
}

impl PolicyView<'_> {
    fn region(&self, i: usize, j: usize) -> Region {
        match self {
            PolicyView::Impulse(p) => p.region(i, j),
            PolicyView::Singular(p) => p.region(i, j),
        }
    }
}

pub fn value_csv(grid: &Grid2D<f64>, value: &ValueField<f64>, policy: &PolicyView) -> String {
    let header = match policy {
        PolicyView::Impulse(_) => VALUE_HEADER_IMPULSE,
        PolicyView::Singular(_) => VALUE_HEADER_SINGULAR,
    };
    let mut out = String::with_capacity(grid.len() * 64);
    out.push_str(header);
    out.push('\n');
    for i in 0..=grid.nx() {
        for j in 0..=grid.np() {
            let _ = write!(
                out,
                "{},{},{},{}",
                num(grid.x(i)),
                num(grid.p(j)),
                num(value.get(i, j)),
                policy.region(i, j).as_str()
            );
            if let PolicyView::Impulse(p) = policy {
                let _ = write!(out, ",{}", num(p.zeta(i, j)));
            }
            out.push('\n');
        }
    }
    out
}

pub fn regions_csv(grid: &Grid2D<f64>, policy: &PolicyView) -> String {
    let mut out = String::with_capacity(grid.len() * 40);
    out.push_str(REGIONS_HEADER);
    out.push('\n');
    for i in 0..=grid.nx() {
        for j in 0..=grid.np() {
            let _ = writeln!(out, "{},{},{}", num(grid.x(i)), num(grid.p(j)), policy.region(i, j).as_str());
        }
    }
    out
}

pub fn free_boundary_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from(FREE_BOUNDARY_HEADER);
    out.push('\n');
    for &(x, p) in points {
        let _ = writeln!(out, "{},{}", num(x), num(p));
    }
    out
}
