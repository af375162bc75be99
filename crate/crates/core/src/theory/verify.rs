use serde::{Deserialize, Serialize};

use super::{
    approximation_band, beta_exact_in, correction_constant, correction_interval, corrected_exact, epsilon_bound,
    TheoryParams,
};
use crate::error::{Error, Result};

/// Cartesian parameter grid. For `|Y|` classes, `p` takes `p_steps` evenly
/// spaced values in `(1/|Y|, 1]` and `q` takes `q_steps` values `k/(q_steps·|Y|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryGrid {
    pub num_classes: Vec<usize>,
    pub h: Vec<f64>,
    pub p_steps: usize,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub q_steps: usize,
}

impl Default for TheoryGrid {
    fn default() -> Self {
        TheoryGrid {
            num_classes: vec![2, 3, 5, 10, 50, 100],
            h: (1..=10).map(|k| k as f64 / 10.0).collect(),
            p_steps: 5,
            gamma: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            epsilon: vec![0.0, 0.05, 0.1, 0.2, 0.3],
            q_steps: 10,
        }
    }
}

impl TheoryGrid {
    pub fn p_values(&self, num_classes: usize) -> Vec<f64> {
        let base = 1.0 / num_classes as f64;
        (1..=self.p_steps).map(|k| (base + (1.0 - base) * k as f64 / self.p_steps as f64).min(1.0)).collect()
    }

    pub fn q_values(&self, num_classes: usize) -> Vec<f64> {
        (0..self.q_steps).map(|k| k as f64 / (self.q_steps * num_classes) as f64).collect()
    }

    pub fn cells(&self) -> Vec<TheoryParams> {
        let mut out = Vec::new();
        for &y in &self.num_classes {
            for &h in &self.h {
                for p in self.p_values(y) {
                    for &gamma in &self.gamma {
                        for &epsilon in &self.epsilon {
                            for q in self.q_values(y) {
                                out.push(TheoryParams { num_classes: y, h, p, q, gamma, epsilon, degree: 0 });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub num_classes: usize,
    pub h: f64,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub q: f64,
    pub exact: bool,
    pub interval: bool,
    /// Distance from `q` to the interval's lower end.
    pub boundary_distance: f64,
    pub band: f64,
}

impl CellRow {
    pub fn agrees(&self) -> bool {
        self.exact == self.interval
    }

    /// A disagreement farther from the boundary than the approximation allows.
    pub fn violates_band(&self) -> bool {
        !self.agrees() && self.boundary_distance > self.band + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub rows: Vec<CellRow>,
    pub agreement_rate: f64,
    /// Agreement restricted to cells with at least 50 classes.
    pub large_class_agreement: f64,
    pub band_violations: usize,
}

impl TheoremReport {
    pub const LARGE_CLASS_THRESHOLD: f64 = 0.999;

    pub fn passed(&self) -> bool {
        self.band_violations == 0 && self.large_class_agreement >= Self::LARGE_CLASS_THRESHOLD
    }

    pub fn disagreements(&self) -> impl Iterator<Item = &CellRow> {
        self.rows.iter().filter(|r| !r.agrees())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("num_classes,h,p,gamma,epsilon,q,exact,interval,boundary_distance,band\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.num_classes, r.h, r.p, r.gamma, r.epsilon, r.q, r.exact, r.interval, r.boundary_distance, r.band
            ));
        }
        out
    }
}

/// Exact verdict `β > β′`; near-ties are settled in rational arithmetic.
fn exact_verdict(tp: &TheoryParams) -> bool {
    let (b, bw) = beta_exact_in::<f64>(tp);
    if (b - bw).abs() > 1e-12 {
        b > bw
    } else {
        corrected_exact(tp).expect("grid cells are valid")
    }
}

pub fn verify_theorem(grid: &TheoryGrid) -> Result<TheoremReport> {
    verify_theorem_with(grid, exact_verdict)
}

/// Compares `verdict` with interval membership on every grid cell.
pub fn verify_theorem_with(grid: &TheoryGrid, verdict: impl Fn(&TheoryParams) -> bool) -> Result<TheoremReport> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::InvalidParameter("empty theory grid".into()));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for tp in &cells {
        tp.validate()?;
        let interval = correction_interval(tp.num_classes, tp.h, tp.p, tp.gamma, tp.epsilon)?;
        rows.push(CellRow {
            num_classes: tp.num_classes,
            h: tp.h,
            p: tp.p,
            gamma: tp.gamma,
            epsilon: tp.epsilon,
            q: tp.q,
            exact: verdict(tp),
            interval: interval.contains(tp.q),
            boundary_distance: (tp.q - interval.lo).abs(),
            band: approximation_band(tp.num_classes, tp.gamma),
        });
    }
    let rate = |rs: &[&CellRow]| {
        if rs.is_empty() {
            1.0
        } else {
            rs.iter().filter(|r| r.agrees()).count() as f64 / rs.len() as f64
        }
    };
    let all: Vec<&CellRow> = rows.iter().collect();
    let large: Vec<&CellRow> = rows.iter().filter(|r| r.num_classes >= 50).collect();
    let agreement_rate = rate(&all);
    let large_class_agreement = rate(&large);
    let band_violations = rows.iter().filter(|r| r.violates_band()).count();
    Ok(TheoremReport { rows, agreement_rate, large_class_agreement, band_violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    /// `(|Y|, h, p, γ)` lines with a positive correction constant.
    pub lines: usize,
    /// Lines on which the lower end never decreases as the error ratio grows.
    pub monotone_lines: usize,
    /// Lines skipped because the correction constant is not positive.
    pub skipped_lines: usize,
    /// Whether the error-ratio bound increases strictly along `h`, per class count.
    pub bound_increasing: bool,
}

impl EpsilonScan {
    pub fn passed(&self) -> bool {
        self.lines > 0 && self.monotone_lines == self.lines && self.bound_increasing
    }
}

/// Sweeps the error ratio over `[0, 1)` in `steps` increments for every
/// `(|Y|, h, p, γ)` of the grid, and the bound over a fine `h` grid.
pub fn epsilon_scan(grid: &TheoryGrid, steps: usize) -> Result<EpsilonScan> {
    let mut scan = EpsilonScan { lines: 0, monotone_lines: 0, skipped_lines: 0, bound_increasing: true };
    let eps: Vec<f64> = (0..steps).map(|k| k as f64 / steps as f64).collect();
    for &y in &grid.num_classes {
        for &h in &grid.h {
            for p in grid.p_values(y) {
                if correction_constant(y, h, p) <= 0.0 {
                    scan.skipped_lines += grid.gamma.len();
                    continue;
                }
                for &gamma in &grid.gamma {
                    scan.lines += 1;
                    let mut prev = f64::NEG_INFINITY;
                    let mut monotone = true;
                    for &e in &eps {
                        let lo = correction_interval(y, h, p, gamma, e)?.lo;
                        monotone &= lo >= prev;
                        prev = lo;
                    }
                    scan.monotone_lines += usize::from(monotone);
                }
            }
        }
        let base = 1.0 / y as f64;
        let hs: Vec<f64> = (1..=1000).map(|k| base + (1.0 - base) * k as f64 / 1000.0).collect();
        let bounds = hs.iter().map(|&h| epsilon_bound(h, y)).collect::<Result<Vec<_>>>()?;
        scan.bound_increasing &= bounds.windows(2).all(|w| w[1] > w[0]);
    }
    Ok(scan)
}
