use rand::seq::index::sample;

use super::{Grads, Parameters};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

const STEP: f64 = 1e-5;
const DENOM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coordinates: usize,
}

/// Compares `analytic` against central differences of `loss` at up to
/// `max_coords` parameter coordinates (all of them if fewer exist).
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<T, P, F>(params: &mut P, analytic: &Grads<T>, max_coords: usize, seed: u64, mut loss: F) -> GradCheckReport
where
    T: Scalar,
    P: Parameters<T>,
    F: FnMut(&P) -> f64,
{
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    assert_eq!(sizes.len(), analytic.len(), "one gradient per parameter tensor");
    let total: usize = sizes.iter().sum();
    let picks: Vec<usize> = if total <= max_coords {
        (0..total).collect()
    } else {
        let mut rng = stream_rng(seed, Stream::Simulation);
        let mut v = sample(&mut rng, total, max_coords).into_vec();
        v.sort_unstable();
        v
    };
    let mut worst = 0.0f64;
    for &flat in &picks {
        let (mut tensor, mut offset) = (0, flat);
        while offset >= sizes[tensor] {
            offset -= sizes[tensor];
            tensor += 1;
        }
        let original = nth(params, tensor, offset);
        set(params, tensor, offset, original + T::lit(STEP));
        let up = loss(params);
        set(params, tensor, offset, original - T::lit(STEP));
        let down = loss(params);
        set(params, tensor, offset, original);
        let numeric = (up - down) / (2.0 * STEP);
        let a = analytic[tensor].iter().nth(offset).copied().unwrap().as_f64();
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOM_FLOOR);
        worst = worst.max(rel);
    }
    GradCheckReport { max_rel_error: worst, coordinates: picks.len() }
}

fn nth<T: Scalar, P: Parameters<T>>(p: &P, tensor: usize, offset: usize) -> T {
    *p.tensors()[tensor].iter().nth(offset).unwrap()
}

fn set<T: Scalar, P: Parameters<T>>(p: &mut P, tensor: usize, offset: usize, value: T) {
    *p.tensors_mut()[tensor].iter_mut().nth(offset).unwrap() = value;
}
