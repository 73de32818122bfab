use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use num_complex::Complex64;

use super::SolverSettings;
use crate::error::Result;
use crate::linalg::{fro, hermitian_eigen_faer};

/// Structured side of the splitting: the affine/Toeplitz-constrained block
/// `Φ` that must equal the PSD variable `S`.
pub(crate) trait Structure {
    fn dim(&self) -> usize;
    /// Replaces the state with `argmin f(Φ) + ρ/2 ‖Φ − B‖²_F`.
    fn update(&mut self, b: MatRef<'_, Complex64>, rho: f64);
    fn write(&self, phi: MatMut<'_, Complex64>);
    /// Adds `delta · I` to the materialized block.
    fn shift_diagonal(&mut self, delta: f64);
}

/// Residual balancing runs every `ADAPT_EVERY` iterations and at most
/// `MAX_ADAPTATIONS` times. A penalty that keeps moving can trap the
/// iteration in a cycle; once it freezes, plain ADMM convergence applies.
const ADAPT_EVERY: usize = 25;
const MAX_ADAPTATIONS: usize = 40;

pub(crate) struct Outcome {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Multiplier of `S = Φ`; PSD at every iterate.
    pub dual: Mat<Complex64>,
}

/// Writes the positive part of Hermitian `g` into `out`.
pub(crate) fn psd_split(g: MatRef<'_, Complex64>, mut out: MatMut<'_, Complex64>) -> Result<()> {
    let m = g.nrows();
    let evd = hermitian_eigen_faer(g)?;
    let positive = evd.values.iter().filter(|&&v| v > 0.0).count();
    // rebuild from whichever side of the spectrum is smaller
    let (cols, from_negative): (Vec<usize>, bool) = if positive <= m / 2 {
        ((m - positive..m).collect(), false)
    } else {
        ((0..m - positive).collect(), true)
    };
    let k = cols.len();
    let mut w = Mat::<Complex64>::zeros(m, k);
    let mut u = Mat::<Complex64>::zeros(m, k);
    for (c, &j) in cols.iter().enumerate() {
        let lam = evd.values[j];
        for i in 0..m {
            let z = evd.vectors[(i, j)];
            u[(i, c)] = z;
            w[(i, c)] = z * lam;
        }
    }
    if from_negative {
        out.copy_from(g);
        if k > 0 {
            matmul(out.as_mut(), Accum::Add, w.as_ref(), u.adjoint(), -Complex64::ONE, Par::Seq);
        }
    } else if k > 0 {
        matmul(out.as_mut(), Accum::Replace, w.as_ref(), u.adjoint(), Complex64::ONE, Par::Seq);
    } else {
        out.fill(Complex64::ZERO);
    }
    Ok(())
}

/// Runs the splitting iteration on `st`. With `warm` the structure's current
/// state seeds the PSD variable.
pub(crate) fn solve<S: Structure>(st: &mut S, settings: &SolverSettings, warm: bool) -> Result<Outcome> {
    let m = st.dim();
    let mut phi = Mat::<Complex64>::zeros(m, m);
    let mut s = Mat::<Complex64>::zeros(m, m);
    let mut s_next = Mat::<Complex64>::zeros(m, m);
    let mut lam = Mat::<Complex64>::zeros(m, m);
    let mut buf = Mat::<Complex64>::zeros(m, m);
    if warm {
        st.write(s.as_mut());
    }
    let mut rho = settings.penalty_rho;
    let mut adaptations = 0;
    let scale = m as f64;
    let mut outcome = Outcome {
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        converged: false,
        dual: Mat::zeros(m, m),
    };

    for it in 1..=settings.max_iters {
        // structured step against S + Λ/ρ
        let inv = 1.0 / rho;
        for j in 0..m {
            for i in 0..m {
                buf[(i, j)] = s[(i, j)] + lam[(i, j)] * inv;
            }
        }
        st.update(buf.as_ref(), rho);
        st.write(phi.as_mut());

        // cone step on Φ − Λ/ρ
        for j in 0..m {
            for i in 0..m {
                buf[(i, j)] = phi[(i, j)] - lam[(i, j)] * inv;
            }
        }
        psd_split(buf.as_ref(), s_next.as_mut())?;

        let mut r2 = 0.0;
        let mut d2 = 0.0;
        for j in 0..m {
            for i in 0..m {
                let sn = s_next[(i, j)];
                lam[(i, j)] = (sn - buf[(i, j)]) * rho;
                r2 += (sn - phi[(i, j)]).norm_sqr();
                d2 += (sn - s[(i, j)]).norm_sqr();
            }
        }
        std::mem::swap(&mut s, &mut s_next);
        let r = r2.sqrt();
        let d = rho * d2.sqrt();

        let eps_pri = scale * settings.abs_tol + settings.rel_tol * fro(s.as_ref()).max(fro(phi.as_ref()));
        let eps_dual = scale * settings.abs_tol + settings.rel_tol * fro(lam.as_ref());
        outcome.iterations = it;
        outcome.primal_residual = r;
        outcome.dual_residual = d;
        if settings.verbose && it % 500 == 0 {
            log::info!("iter {it}: r = {r:.3e} (eps {eps_pri:.1e}), s = {d:.3e} (eps {eps_dual:.1e}), rho = {rho:.3e}");
        }
        if r <= eps_pri && d <= eps_dual {
            outcome.converged = true;
            break;
        }
        if it % ADAPT_EVERY == 0 && adaptations < MAX_ADAPTATIONS {
            if r > 10.0 * d {
                rho *= 2.0;
                adaptations += 1;
            } else if d > 10.0 * r {
                rho /= 2.0;
                adaptations += 1;
            }
        }
    }
    if !outcome.converged {
        log::warn!(
            "splitting solver stopped at max_iters = {} with residuals ({:.3e}, {:.3e})",
            settings.max_iters,
            outcome.primal_residual,
            outcome.dual_residual
        );
    }
    outcome.dual = lam;
    Ok(outcome)
}

/// Shifts the structure so that its block is PSD; returns the shift.
pub(crate) fn restore_feasibility<S: Structure>(st: &mut S) -> Result<f64> {
    let m = st.dim();
    let mut phi = Mat::<Complex64>::zeros(m, m);
    st.write(phi.as_mut());
    let lmin = super::min_eigenvalue(phi.as_ref())?;
    if lmin < 0.0 {
        st.shift_diagonal(-lmin);
        Ok(-lmin)
    } else {
        Ok(0.0)
    }
}
