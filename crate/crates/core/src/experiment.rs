//! Convergence experiment: sweep entry phases and ε values, compare the
//! O(ε^{3/2}) prediction against the reference integrator, and fit the
//! observed error order.
//!
//! For every cell (ε, φ₋) one reference trajectory is integrated across the
//! window and one prediction is assembled; the per-ε error columns are
//!
//! ```text
//! E_I(ε)       = max over φ₋ of |I₊^num − I₊|
//! E_φ(ε)       = max over φ₋ of |φ₊^num − φ₊|        (unwrapped angles)
//! E_I^cl(ε)    = max over φ₋ of |I₊^num − I₊^classical|
//! ```
//!
//! and the headline numbers are least-squares slopes of ln E against ln ε.
//! Cells are independent; the sweep is parallel over cells with a serial,
//! order-fixed reduction, so the output is bit-identical for any thread
//! count.

use crate::error::{Error, Result};
use crate::model::HarmonicModel;
use crate::odesim::{self, SimConfig, StepPolicy};
use crate::predictor::{predict_crossing, PredictionInputs};
use rayon::prelude::*;
use std::f64::consts::PI;

/// The ε ladder of the reference experiment.
pub const FULL_EPS_GRID: [f64; 11] = [
    0.02, 0.015, 0.01, 0.007, 0.005, 0.003, 0.002, 0.0015, 0.001, 0.0007, 0.0005,
];

/// Desk-scale ladder for quick runs.
pub const FAST_EPS_GRID: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Number of entry phases, equally spaced over one turn.
    pub n_phi: usize,
    /// Strictly positive, strictly descending.
    pub eps_values: Vec<f64>,
    pub i_minus: f64,
    pub window: (f64, f64),
    pub step: StepPolicy,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepConfig {
    /// 48 phases × 11 ε values, the configuration behind the quoted slopes.
    pub fn full_grid() -> Self {
        SweepConfig {
            n_phi: 48,
            eps_values: FULL_EPS_GRID.to_vec(),
            i_minus: 1.0,
            window: (0.0, 2.0),
            step: StepPolicy::default(),
            threads: None,
        }
    }

    /// 8 phases × 4 ε values.
    pub fn fast_grid() -> Self {
        SweepConfig {
            n_phi: 8,
            eps_values: FAST_EPS_GRID.to_vec(),
            ..Self::full_grid()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_phi < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 phases (got {})",
                self.n_phi
            )));
        }
        if self.eps_values.is_empty() {
            return Err(Error::InvalidArgument("empty eps list".into()));
        }
        for pair in self.eps_values.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(Error::InvalidArgument(format!(
                    "eps values must strictly descend (got {} then {})",
                    pair[0], pair[1]
                )));
            }
        }
        if !self.eps_values.iter().all(|&e| e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidArgument("eps values must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("zero worker threads".into()));
        }
        Ok(())
    }

    /// φ_j = 2πj/n, j = 0..n.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.n_phi)
            .map(|j| 2.0 * PI * j as f64 / self.n_phi as f64)
            .collect()
    }
}

/// One (ε, φ₋) cell: reference endpoint and the predictions it grades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRecord {
    pub eps: f64,
    pub phi_minus: f64,
    pub i_plus_num: f64,
    pub phi_plus_num: f64,
    pub i_plus_theor: f64,
    pub phi_plus_theor: f64,
    pub i_plus_classical: f64,
}

impl CellRecord {
    pub fn err_i(&self) -> f64 {
        (self.i_plus_num - self.i_plus_theor).abs()
    }

    pub fn err_phi(&self) -> f64 {
        (self.phi_plus_num - self.phi_plus_theor).abs()
    }

    pub fn err_classical(&self) -> f64 {
        (self.i_plus_num - self.i_plus_classical).abs()
    }
}

/// Max-over-phase errors at one ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub eps: f64,
    pub e_i: f64,
    pub e_phi: f64,
    pub e_classical: f64,
}

/// Ordinary least squares of ln E on ln ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// ε-major, phase-minor, both in config order.
    pub cells: Vec<CellRecord>,
    pub rows: Vec<ErrorRow>,
    pub fit_i: Option<SlopeFit>,
    pub fit_phi: Option<SlopeFit>,
    pub fit_classical: Option<SlopeFit>,
    /// Set when any error column hit zero and its fit was skipped.
    pub degenerate: bool,
}

/// OLS fit of ln E against ln ε for points (ε, E).
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    for &(eps, e) in points {
        if !(eps > 0.0) || !(e > 0.0) {
            return Err(Error::DegenerateFit(format!(
                "nonpositive point (eps = {eps}, E = {e})"
            )));
        }
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(eps, e)| (eps.ln(), e.ln())).collect();
    let n = xy.len() as f64;
    let x_bar = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let y_bar = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let s_xx: f64 = xy.iter().map(|p| (p.0 - x_bar).powi(2)).sum();
    let s_xy: f64 = xy.iter().map(|p| (p.0 - x_bar) * (p.1 - y_bar)).sum();
    if s_xx == 0.0 {
        return Err(Error::DegenerateFit("all eps values coincide".into()));
    }
    let slope = s_xy / s_xx;
    let intercept = y_bar - slope * x_bar;
    let ss_res: f64 = xy
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let ss_tot: f64 = xy.iter().map(|p| (p.1 - y_bar).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

fn run_one_cell(
    model: &HarmonicModel,
    cfg: &SweepConfig,
    geom: crate::model::ResonanceGeometry,
    eps: f64,
    phi_minus: f64,
) -> Result<CellRecord> {
    let sim = SimConfig::new(eps, cfg.i_minus, phi_minus, cfg.window)
        .with_step(cfg.step)
        .with_sampling(vec![cfg.window.1]);
    let samples = odesim::integrate(model, &sim)?;
    let end = samples.last().expect("sampling is nonempty");
    let inputs = PredictionInputs::new(model, eps, cfg.i_minus, phi_minus, geom)?;
    let report = predict_crossing(&inputs)?;
    Ok(CellRecord {
        eps,
        phi_minus,
        i_plus_num: end.i,
        phi_plus_num: end.phi,
        i_plus_theor: report.i_plus,
        phi_plus_theor: report.phi_plus,
        i_plus_classical: report.i_plus_classical,
    })
}

/// Runs every cell, collecting completed records (in cell order) and the
/// failures, each tagged with its cell coordinates. Lets a caller write out
/// whatever completed before reporting a failure.
pub fn run_cells(
    model: &HarmonicModel,
    cfg: &SweepConfig,
) -> Result<(Vec<CellRecord>, Vec<Error>)> {
    cfg.validate()?;
    let geom = crate::model::find_resonance(model, cfg.window)?;
    let phases = cfg.phases();
    let jobs: Vec<(f64, f64)> = cfg
        .eps_values
        .iter()
        .flat_map(|&eps| phases.iter().map(move |&phi| (eps, phi)))
        .collect();

    let worker = |&(eps, phi): &(f64, f64)| {
        run_one_cell(model, cfg, geom, eps, phi).map_err(|e| Error::SweepCell {
            eps,
            phi,
            source: Box::new(e),
        })
    };
    let results: Vec<std::result::Result<CellRecord, Error>> = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?
            .install(|| jobs.par_iter().map(worker).collect()),
        None => jobs.par_iter().map(worker).collect(),
    };

    let mut cells = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(cell) => cells.push(cell),
            Err(e) => failures.push(e),
        }
    }
    Ok((cells, failures))
}

/// Reduces a complete cell population to per-ε maxima and slope fits.
/// A zero error column skips its fit and flags the table degenerate.
pub fn tabulate(cfg: &SweepConfig, cells: Vec<CellRecord>) -> Result<ConvergenceTable> {
    let expected = cfg.eps_values.len() * cfg.n_phi;
    if cells.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {expected} cells, got {}",
            cells.len()
        )));
    }
    let rows: Vec<ErrorRow> = cells
        .chunks(cfg.n_phi)
        .map(|chunk| ErrorRow {
            eps: chunk[0].eps,
            e_i: chunk.iter().map(CellRecord::err_i).fold(0.0, f64::max),
            e_phi: chunk.iter().map(CellRecord::err_phi).fold(0.0, f64::max),
            e_classical: chunk
                .iter()
                .map(CellRecord::err_classical)
                .fold(0.0, f64::max),
        })
        .collect();

    let fit_of = |pick: fn(&ErrorRow) -> f64| -> Option<SlopeFit> {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, pick(r))).collect();
        fit_slope(&pts).ok()
    };
    let fit_i = fit_of(|r| r.e_i);
    let fit_phi = fit_of(|r| r.e_phi);
    let fit_classical = fit_of(|r| r.e_classical);
    let degenerate = fit_i.is_none() || fit_phi.is_none() || fit_classical.is_none();

    Ok(ConvergenceTable {
        cells,
        rows,
        fit_i,
        fit_phi,
        fit_classical,
        degenerate,
    })
}

/// The whole experiment: run every cell, fail on the first cell error,
/// otherwise reduce and fit.
pub fn run_sweep(model: &HarmonicModel, cfg: &SweepConfig) -> Result<ConvergenceTable> {
    let (cells, failures) = run_cells(model, cfg)?;
    if let Some(err) = failures.into_iter().next() {
        return Err(err);
    }
    tabulate(cfg, cells)
}

/// CSV rendering of a cell population, complete or partial.
pub fn cells_csv(cells: &[CellRecord]) -> String {
    let mut s = String::from(
        "eps,phi_minus,i_plus_num,phi_plus_num,i_plus_theor,phi_plus_theor,\
         i_plus_classical,err_i,err_phi,err_classical\n",
    );
    for c in cells {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            c.eps,
            c.phi_minus,
            c.i_plus_num,
            c.phi_plus_num,
            c.i_plus_theor,
            c.phi_plus_theor,
            c.i_plus_classical,
            c.err_i(),
            c.err_phi(),
            c.err_classical(),
        ));
    }
    s
}

impl ConvergenceTable {
    pub fn cells_csv(&self) -> String {
        cells_csv(&self.cells)
    }

    pub fn errors_csv(&self) -> String {
        let mut s = String::from("eps,e_i,e_phi,e_classical\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.eps, r.e_i, r.e_phi, r.e_classical
            ));
        }
        s
    }

    pub fn fit_report(&self) -> String {
        let mut s = String::new();
        for (name, fit) in [
            ("E_I        ", &self.fit_i),
            ("E_phi      ", &self.fit_phi),
            ("E_I_classic", &self.fit_classical),
        ] {
            match fit {
                Some(f) => s.push_str(&format!(
                    "{name}: slope {:.6}  intercept {:.6}  r2 {:.8}\n",
                    f.slope, f.intercept, f.r_squared
                )),
                None => s.push_str(&format!("{name}: fit skipped (zero error column)\n")),
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{benchmark_model, zero_perturbation};

    #[test]
    fn exact_power_law_fits_exactly() {
        let points: Vec<(f64, f64)> = (1..=5)
            .map(|k| {
                let x = -(k as f64);
                (x.exp(), (1.5 * x + 2.0).exp())
            })
            .collect();
        let fit = fit_slope(&points).unwrap();
        assert!((fit.slope - 1.5).abs() <= 1e-12);
        assert!((fit.intercept - 2.0).abs() <= 1e-12);
        assert!((fit.r_squared - 1.0).abs() <= 1e-12);
    }

    // Three points with the normal equations solved by hand:
    // (x, y) = (0, 1), (1, 3), (2, 4) gives slope 3/2, intercept 7/6,
    // r2 = 27/28.
    #[test]
    fn three_point_fit_matches_hand_solution() {
        let points = vec![
            (1.0_f64, 1.0_f64.exp()),
            (1.0_f64.exp(), 3.0_f64.exp()),
            (2.0_f64.exp(), 4.0_f64.exp()),
        ];
        let fit = fit_slope(&points).unwrap();
        assert!((fit.slope - 1.5).abs() <= 1e-12);
        assert!((fit.intercept - 7.0 / 6.0).abs() <= 1e-12);
        assert!((fit.r_squared - 27.0 / 28.0).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(matches!(
            fit_slope(&[(0.01, 1.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_slope(&[(0.01, 1.0), (0.005, 0.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_slope(&[(0.01, 1.0), (0.01, 2.0)]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn config_validation_catches_bad_grids() {
        let mut cfg = SweepConfig::fast_grid();
        cfg.n_phi = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::fast_grid();
        cfg.eps_values = vec![0.01, 0.02];
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::fast_grid();
        cfg.eps_values.clear();
        assert!(cfg.validate().is_err());
        assert!(SweepConfig::full_grid().validate().is_ok());
    }

    #[test]
    fn zero_perturbation_sweep_is_degenerate() {
        let m = zero_perturbation();
        let mut cfg = SweepConfig::fast_grid();
        cfg.n_phi = 2;
        cfg.eps_values = vec![0.02, 0.01];
        let table = run_sweep(&m, &cfg).unwrap();
        assert!(table.degenerate);
        assert!(table.fit_i.is_none());
        for r in &table.rows {
            assert_eq!(r.e_i, 0.0);
            assert_eq!(r.e_classical, 0.0);
            assert!(r.e_phi <= 1e-11, "angle error {} at eps {}", r.e_phi, r.eps);
        }
    }

    #[test]
    fn reduced_grid_reproduces_the_error_orders() {
        let m = benchmark_model();
        let table = run_sweep(&m, &SweepConfig::fast_grid()).unwrap();
        let fit_i = table.fit_i.unwrap();
        let fit_classical = table.fit_classical.unwrap();
        assert!(
            (1.35..=1.75).contains(&fit_i.slope),
            "action error slope {:.4} outside [1.35, 1.75]",
            fit_i.slope
        );
        assert!(
            fit_classical.slope < fit_i.slope,
            "baseline slope {:.4} not below {:.4}",
            fit_classical.slope,
            fit_i.slope
        );
        let inversions = table
            .rows
            .windows(2)
            .filter(|w| w[1].e_i > w[0].e_i)
            .count();
        assert!(inversions <= 1, "{inversions} inversions in E_I trend");
    }

    #[test]
    fn sweep_output_is_thread_count_invariant() {
        let m = benchmark_model();
        let mut cfg = SweepConfig::fast_grid();
        cfg.n_phi = 4;
        cfg.eps_values = vec![0.02, 0.01];
        cfg.threads = Some(1);
        let serial = run_sweep(&m, &cfg).unwrap();
        cfg.threads = Some(4);
        let parallel = run_sweep(&m, &cfg).unwrap();
        assert_eq!(serial.cells.len(), parallel.cells.len());
        for (a, b) in serial.cells.iter().zip(&parallel.cells) {
            assert_eq!(a.i_plus_num.to_bits(), b.i_plus_num.to_bits());
            assert_eq!(a.phi_plus_num.to_bits(), b.phi_plus_num.to_bits());
            assert_eq!(a.i_plus_theor.to_bits(), b.i_plus_theor.to_bits());
        }
        assert_eq!(
            serial.fit_i.unwrap().slope.to_bits(),
            parallel.fit_i.unwrap().slope.to_bits()
        );
    }

    #[test]
    fn csv_renderings_have_consistent_shape() {
        let m = benchmark_model();
        let mut cfg = SweepConfig::fast_grid();
        cfg.n_phi = 2;
        cfg.eps_values = vec![0.02, 0.01];
        let table = run_sweep(&m, &cfg).unwrap();
        let cells = table.cells_csv();
        let mut lines = cells.lines();
        let header_cols = lines.next().unwrap().split(',').count();
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), table.cells.len());
        assert!(body.iter().all(|l| l.split(',').count() == header_cols));
        assert_eq!(table.errors_csv().lines().count(), table.rows.len() + 1);
        assert_eq!(table.fit_report().lines().count(), 3);
    }
}
