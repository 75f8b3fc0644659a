//! Lanczos approximation of `e^{−iHt}ψ` with adaptive step halving.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qubit_ops::SparseOperator;

/// Steps shorter than this mean the Krylov space is hopelessly small.
const MIN_STEP: f64 = 1e-12;
const MAX_SUBSTEPS: usize = 1 << 20;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

enum StepOutcome {
    Accepted(Vec<Complex64>),
    Rejected { error: f64 },
}

/// One Lanczos step of length `dt` from the unit vector `psi`.
fn lanczos_step(
    h: &SparseOperator,
    psi: &[Complex64],
    dt: f64,
    krylov_dim: usize,
    tol: f64,
    h_scale: f64,
) -> StepOutcome {
    let dim = psi.len();
    let m_max = krylov_dim.min(dim);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max);
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    basis.push(psi.to_vec());
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut residual_beta = 0.0;
    let breakdown = 1e-13 * h_scale.max(1.0);

    for j in 0..m_max {
        h.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalization, applied twice.
        for _ in 0..2 {
            for v in &basis {
                let proj = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= proj * vi;
                }
            }
        }
        let b = norm(&w);
        if b < breakdown {
            residual_beta = 0.0;
            break;
        }
        if j + 1 == m_max {
            residual_beta = b;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    // y = Q e^{−iΘ dt} Qᵀ e₁
    let y: Vec<Complex64> = (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
                    phase * eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)]
                })
                .sum()
        })
        .collect();
    let error = residual_beta * y[m - 1].norm();
    if error > tol {
        return StepOutcome::Rejected { error };
    }
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (v, &coef) in basis.iter().zip(&y) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o += coef * vi;
        }
    }
    // Unitary up to truncation; renormalize away the residual drift.
    let n = norm(&out);
    for o in &mut out {
        *o /= n;
    }
    StepOutcome::Accepted(out)
}

/// `e^{−iHt}ψ` for unit `psi`, subdividing `t` until every substep meets `tol`.
pub fn krylov_expm_apply(
    h: &SparseOperator,
    psi: &[Complex64],
    t: f64,
    krylov_dim: usize,
    tol: f64,
) -> Result<Vec<Complex64>> {
    if krylov_dim < 2 {
        return Err(Error::param("krylov_dim", "must be at least 2"));
    }
    let mut state = psi.to_vec();
    if t == 0.0 {
        return Ok(state);
    }
    let h_scale = h.norm_bound();
    let sign = t.signum();
    let mut remaining = t.abs();
    // Start near the step size a Krylov space of this size resolves comfortably.
    let mut step = if h_scale > 0.0 {
        remaining.min(0.5 * krylov_dim as f64 / h_scale)
    } else {
        remaining
    };
    let mut substeps = 0;
    while remaining > 0.0 {
        let dt = step.min(remaining);
        match lanczos_step(h, &state, sign * dt, krylov_dim, tol, h_scale) {
            StepOutcome::Accepted(next) => {
                state = next;
                remaining -= dt;
                if remaining < 1e-15 * t.abs() {
                    remaining = 0.0;
                }
            }
            StepOutcome::Rejected { error } => {
                step = dt / 2.0;
                if step < MIN_STEP {
                    return Err(Error::numerical(
                        "Krylov propagation",
                        format!(
                            "residual {error:.3e} above tolerance {tol:.1e} even at step {dt:.3e}; \
                             retry with a larger Krylov dimension than {krylov_dim}"
                        ),
                    ));
                }
            }
        }
        substeps += 1;
        if substeps > MAX_SUBSTEPS {
            return Err(Error::numerical("Krylov propagation", "too many substeps"));
        }
    }
    Ok(state)
}
