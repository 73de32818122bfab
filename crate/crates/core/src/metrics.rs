//! Error measures between estimated and true source sets.

use nalgebra::DMatrix;

use crate::array::{wrap_distance, SourceSet};
use crate::assignment::min_cost_assignment;

fn sq_wrap(a: (f64, f64), b: (f64, f64)) -> f64 {
    wrap_distance(a.0, b.0).powi(2) + wrap_distance(a.1, b.1).powi(2)
}

fn points(s: &SourceSet) -> Vec<(f64, f64)> {
    s.iter().map(|s| (s.f_x, s.f_y)).collect()
}

/// Bijection from `truth` to `est` minimizing total squared wrap distance;
/// entry `k` is the estimate matched to true source `k`. Needs
/// `truth.len() <= est.len()`.
pub fn match_to_truth(est: &SourceSet, truth: &SourceSet) -> Vec<usize> {
    let (e, t) = (points(est), points(truth));
    let cost = DMatrix::from_fn(t.len(), e.len(), |i, j| sq_wrap(t[i], e[j]));
    min_cost_assignment(&cost)
}

/// Largest per-axis wrap error over optimally matched pairs; infinite when
/// the counts differ.
pub fn max_pair_error(est: &SourceSet, truth: &SourceSet) -> f64 {
    if est.len() != truth.len() {
        return f64::INFINITY;
    }
    let m = match_to_truth(est, truth);
    truth
        .iter()
        .zip(&m)
        .map(|(t, &j)| {
            let e = &est.sources[j];
            wrap_distance(t.f_x, e.f_x).max(wrap_distance(t.f_y, e.f_y))
        })
        .fold(0.0, f64::max)
}

/// Mean of the squared wrap errors over both axes and all matched sources.
/// `None` when the counts differ or the sets are empty.
pub fn mean_squared_error(est: &SourceSet, truth: &SourceSet) -> Option<f64> {
    if est.len() != truth.len() || truth.is_empty() {
        return None;
    }
    let m = match_to_truth(est, truth);
    let (e, t) = (points(est), points(truth));
    let total: f64 = t.iter().zip(&m).map(|(tp, &j)| sq_wrap(*tp, e[j])).sum();
    Some(total / (2 * t.len()) as f64)
}

/// Hausdorff distance between two point sets on the torus, with the
/// Euclidean norm of the per-axis wrap distances.
pub fn hausdorff(a: &SourceSet, b: &SourceSet) -> f64 {
    let (pa, pb) = (points(a), points(b));
    if pa.is_empty() && pb.is_empty() {
        return 0.0;
    }
    if pa.is_empty() || pb.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        from.iter()
            .map(|p| to.iter().map(|q| sq_wrap(*p, *q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
            .sqrt()
    };
    directed(&pa, &pb).max(directed(&pb, &pa))
}
