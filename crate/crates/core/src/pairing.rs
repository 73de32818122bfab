//! Matching independently recovered x- and y-frequencies into 2D sources.
//!
//! With `X̂ = A_N D A_Mᴴ` and the x-side factor known, `pinv(A_N) X̂` has rows
//! proportional to `a_M(f_y)ᴴ` for the partner of each x-frequency. Each row
//! is correlated against the candidate y-steering vectors and the best
//! bijection is kept.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_matrix, steering_vector, Source, SourceSet};
use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMat};

/// Paired sources, sorted by `f_x`, with the normalized match score of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedEstimate {
    pub pairs: SourceSet,
    pub match_scores: Vec<f64>,
}

/// Pairs `fx[k]` (with power `dx_powers[k]`) to one of `fy`.
///
/// Scores lie in `[0, 1]`: the normalized correlation between the k-th row
/// of `D⁻¹ pinv(A_N) X̂` and `a_M(f_y)`. Amplitudes are rescaled by
/// `sqrt(N/M)`, which maps the split-trace power of the decoupled program
/// back to `|s_k|`; their phase comes from the winning correlation.
pub fn pair_angles(x_hat: &ComplexMat, fx: &[f64], dx_powers: &[f64], fy: &[f64]) -> Result<PairedEstimate> {
    let k = fx.len();
    if dx_powers.len() != k || fy.len() != k {
        return Err(Error::InvalidInput(format!(
            "pairing needs equal counts, got {k} x-frequencies, {} powers, {} y-frequencies",
            dx_powers.len(),
            fy.len()
        )));
    }
    if k == 0 {
        return Ok(PairedEstimate { pairs: SourceSet::default(), match_scores: vec![] });
    }
    if let Some(p) = dx_powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidInput(format!("x-side powers must be positive, got {p}")));
    }
    let (n, m) = x_hat.shape();
    let a_x = steering_matrix(n, fx);
    let (pinv_x, rank) = linalg::pinv(&a_x, 1e-10);
    if rank < k {
        return Err(Error::RankDeficient { requested: k, detected: rank });
    }
    let rows = pinv_x * x_hat;
    let a_y: Vec<_> = fy.iter().map(|&f| steering_vector(m, f)).collect();
    let norm_a = (m as f64).sqrt();

    // corr[(j, l)] = Σ_m rows[j, m] a_M(f_y,l)[m]; its conjugate is ⟨a_M, v_j⟩
    let mut corr = ComplexMat::zeros(k, k);
    let mut scores = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let row_norm = rows.row(j).norm();
        for (l, a) in a_y.iter().enumerate() {
            let c: Complex64 = rows.row(j).iter().zip(a.iter()).map(|(r, s)| r * s).sum();
            corr[(j, l)] = c;
            scores[(j, l)] = if row_norm > 0.0 { c.norm() / (row_norm * norm_a) } else { 0.0 };
        }
    }
    let candidates: Vec<(usize, usize, f64)> = (0..k)
        .flat_map(|j| (0..k).map(move |l| (j, l)))
        .map(|(j, l)| (j, l, scores[(j, l)]))
        .collect();
    let matched = resolve_collisions(&candidates);

    let gain = (n as f64 / m as f64).sqrt();
    let mut out: Vec<(Source, f64)> = matched
        .into_iter()
        .map(|(j, l)| {
            let c = corr[(j, l)];
            let phase = if c.norm() > 0.0 { c / c.norm() } else { Complex64::ONE };
            (Source::new(fx[j], fy[l], phase * (gain * dx_powers[j])), scores[(j, l)])
        })
        .collect();
    out.sort_by(|a, b| a.0.f_x.total_cmp(&b.0.f_x).then(a.0.f_y.total_cmp(&b.0.f_y)));
    let (pairs, match_scores): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok(PairedEstimate { pairs: SourceSet::new(pairs), match_scores })
}

/// Turns scored `(row, col, score)` candidates into a one-to-one matching.
///
/// Every row first claims its best column. If the claims already form a
/// bijection they are returned unchanged. Otherwise each contested column
/// goes to its highest-scoring claimant and the losers, strongest first,
/// take their best still-unclaimed column. Should a loser run out of
/// options, the whole problem is handed to an optimal assignment on
/// `1 - score`. Output is sorted by row.
pub fn resolve_collisions(candidates: &[(usize, usize, f64)]) -> Vec<(usize, usize)> {
    let mut rows: Vec<usize> = candidates.iter().map(|c| c.0).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut cols: Vec<usize> = candidates.iter().map(|c| c.1).collect();
    cols.sort_unstable();
    cols.dedup();

    let best_of = |r: usize, taken: &dyn Fn(usize) -> bool| {
        candidates
            .iter()
            .filter(|c| c.0 == r && !taken(c.1))
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.1.cmp(&a.1)))
            .map(|c| (c.1, c.2))
    };
    let claims: Vec<(usize, usize, f64)> = rows
        .iter()
        .filter_map(|&r| best_of(r, &|_| false).map(|(c, s)| (r, c, s)))
        .collect();

    let mut winner: Vec<Option<(usize, f64)>> = vec![None; cols.len()];
    let col_idx = |c: usize| cols.binary_search(&c).expect("column present");
    for &(r, c, s) in &claims {
        let slot = &mut winner[col_idx(c)];
        if slot.map_or(true, |(wr, ws)| s > ws || (s == ws && r < wr)) {
            *slot = Some((r, s));
        }
    }
    let mut assigned: Vec<(usize, usize)> = claims
        .iter()
        .filter(|(r, c, _)| winner[col_idx(*c)].map(|w| w.0) == Some(*r))
        .map(|&(r, c, _)| (r, c))
        .collect();
    if assigned.len() < claims.len() {
        let mut losers: Vec<(usize, usize, f64)> = claims
            .iter()
            .copied()
            .filter(|(r, _, _)| !assigned.iter().any(|a| a.0 == *r))
            .collect();
        losers.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        for (r, _, _) in losers {
            let taken: Vec<usize> = assigned.iter().map(|a| a.1).collect();
            match best_of(r, &|c| taken.contains(&c)) {
                Some((c, _)) => assigned.push((r, c)),
                None => return optimal_fallback(candidates, &rows, &cols),
            }
        }
    }
    assigned.sort_unstable();
    assigned
}

fn optimal_fallback(candidates: &[(usize, usize, f64)], rows: &[usize], cols: &[usize]) -> Vec<(usize, usize)> {
    const FORBIDDEN: f64 = 1e9;
    let transpose = rows.len() > cols.len();
    let (nr, nc) = if transpose { (cols.len(), rows.len()) } else { (rows.len(), cols.len()) };
    let mut cost = DMatrix::from_element(nr, nc, FORBIDDEN);
    for &(r, c, s) in candidates {
        let (ri, ci) = (rows.binary_search(&r).unwrap(), cols.binary_search(&c).unwrap());
        let (a, b) = if transpose { (ci, ri) } else { (ri, ci) };
        cost[(a, b)] = cost[(a, b)].min(1.0 - s);
    }
    let assign = min_cost_assignment(&cost);
    let mut out: Vec<(usize, usize)> = assign
        .into_iter()
        .enumerate()
        .filter(|&(a, b)| cost[(a, b)] < FORBIDDEN)
        .map(|(a, b)| if transpose { (rows[b], cols[a]) } else { (rows[a], cols[b]) })
        .collect();
    out.sort_unstable();
    out
}
