//! Closed-form analysis of when one lazy propagation step flips a wrongly
//! predicted node back to its true class, plus checks of that analysis.

mod simulate;
mod verify;

pub use simulate::{frontier_scan, simulate_correction, simulate_on_graph, FrontierCell, FrontierGrid, Trial};
pub use verify::{epsilon_scan, verify_theorem, verify_theorem_with, CellRow, EpsilonScan, TheoremReport, TheoryGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Field;
use crate::Rational;

/// Setting of the analysis: a `d`-regular graph where a fraction `h` of every
/// node's neighbors share its class, a teacher that puts mass `p` on the
/// predicted class, one node `v*` whose true class gets only `q`, and a
/// fraction `epsilon` of the other nodes predicted wrongly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub num_classes: usize,
    pub h: f64,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Only used by the simulation.
    pub degree: usize,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let y = self.num_classes as f64;
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} out of range in {self:?}")));
        if self.num_classes < 2 {
            return bad("num_classes");
        }
        if !(0.0..=1.0).contains(&self.h) {
            return bad("h");
        }
        if !(self.p > 1.0 / y && self.p <= 1.0) {
            return bad("p");
        }
        if !(self.q >= 0.0 && self.q < 1.0 / y) {
            return bad("q");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma");
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad("epsilon");
        }
        Ok(())
    }
}

/// Mass on the true class and on each wrong class of `v*` after one step,
/// evaluated in any field. Parameters are converted exactly when `F` is rational.
pub fn beta_exact_in<F: Field>(tp: &TheoryParams) -> (F, F) {
    let one = F::one();
    let y = F::from_usize(tp.num_classes);
    let y1 = y.clone() - one.clone();
    let y2 = y - F::from_usize(2);
    let h = F::from_f64(tp.h);
    let p = F::from_f64(tp.p);
    let q = F::from_f64(tp.q);
    let g = F::from_f64(tp.gamma);
    let e = F::from_f64(tp.epsilon);
    let stay = one.clone() - g.clone();
    let miss_p = one.clone() - p.clone();
    let other = one.clone() - h.clone();
    // Mass a wrong class receives from a neighbor whose true class it is not.
    let leak = e.clone() * p.clone() / y1.clone()
        + (y1.clone() - e.clone()) * miss_p.clone() / (y1.clone() * y1.clone());

    let beta = stay.clone() * q.clone()
        + g.clone() * h.clone() * ((one.clone() - e.clone()) * p.clone() + e.clone() * miss_p.clone() / y1.clone())
        + g.clone() * other.clone() * leak.clone();
    let beta_wrong = stay * (one.clone() - q) / y1.clone()
        + g.clone() * h * leak.clone()
        + g.clone() * other.clone() / y1.clone() * (e.clone() * miss_p / y1.clone() + (one - e) * p)
        + g * other * y2 / y1 * leak;
    (beta, beta_wrong)
}

/// `(β, β′)` in double precision.
pub fn beta_exact(tp: &TheoryParams) -> Result<(f64, f64)> {
    tp.validate()?;
    Ok(beta_exact_in::<f64>(tp))
}

/// Whether `v*` is corrected, decided in exact rational arithmetic.
pub fn corrected_exact(tp: &TheoryParams) -> Result<bool> {
    tp.validate()?;
    let (b, bw) = beta_exact_in::<Rational>(tp);
    Ok(b > bw)
}

/// The approximate constant `(1 + 1/|Y|)hp − (h + p)/|Y|`.
pub fn correction_constant(num_classes: usize, h: f64, p: f64) -> f64 {
    let y = num_classes as f64;
    (1.0 + 1.0 / y) * h * p - (h + p) / y
}

/// Closed interval of `q` for which the approximate analysis predicts a correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionInterval {
    pub lo: f64,
    pub hi: f64,
    /// Lower end before clamping at zero.
    pub threshold: f64,
}

impl CorrectionInterval {
    pub fn contains(&self, q: f64) -> bool {
        self.lo <= q && q <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }
}

/// `[max(0, 1/|Y| − γ/(1−γ)·(C − b(ε))), 1/|Y|]` with `b(ε) = (C + hp/|Y|)ε`.
pub fn correction_interval(num_classes: usize, h: f64, p: f64, gamma: f64, epsilon: f64) -> Result<CorrectionInterval> {
    if num_classes < 2 {
        return Err(Error::InvalidParameter("at least two classes are needed".into()));
    }
    if !(gamma >= 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1)")));
    }
    let y = num_classes as f64;
    let c = correction_constant(num_classes, h, p);
    let shrink = (c + h * p / y) * epsilon;
    let threshold = 1.0 / y - gamma / (1.0 - gamma) * (c - shrink);
    Ok(CorrectionInterval { lo: threshold.max(0.0), hi: 1.0 / y, threshold })
}

/// Largest error ratio for which the interval can be non-empty:
/// `(|Y|h − 1) / ((|Y| + 1)h − 1)`.
pub fn epsilon_bound(h: f64, num_classes: usize) -> Result<f64> {
    let y = num_classes as f64;
    if num_classes < 2 || !(h > 1.0 / y && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("h = {h} must lie in (1/{num_classes}, 1]")));
    }
    Ok((y * h - 1.0) / ((y + 1.0) * h - 1.0))
}

/// Largest possible gap between the exact threshold and the approximate one,
/// `γ/(1−γ) · 2(|Y|+1) / (|Y|(|Y|−1)²)`.
pub fn approximation_band(num_classes: usize, gamma: f64) -> f64 {
    let y = num_classes as f64;
    gamma / (1.0 - gamma) * 2.0 * (y + 1.0) / (y * (y - 1.0) * (y - 1.0))
}
