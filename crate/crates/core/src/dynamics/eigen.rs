//! Dense Hermitian eigendecomposition and ground-state selection.

use faer::{c64, Mat, Side};
use num_complex::Complex64;

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::qubit_ops::SparseOperator;

/// Largest register the dense eigensolver accepts.
pub const MAX_DENSE_QUBITS: usize = 13;

/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Full ascending spectrum, optionally with eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<StateVector>>,
}

impl SpectralData {
    /// Distinct levels and their multiplicities.
    pub fn degeneracies(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        let mut start = 0.0;
        for &e in &self.eigenvalues {
            match out.last_mut() {
                Some((_, count)) if e - start <= tol => *count += 1,
                _ => {
                    start = e;
                    out.push((e, 1));
                }
            }
        }
        out
    }
}

enum Basis {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// operator. Real symmetric operators take the real solver.
pub struct Eigensystem {
    values: Vec<f64>,
    basis: Basis,
}

impl Eigensystem {
    pub fn compute(h: &SparseOperator) -> Result<Self> {
        if h.n_qubits() > MAX_DENSE_QUBITS {
            return Err(Error::Capacity(format!(
                "dense eigensolver holds at most 2^{MAX_DENSE_QUBITS} states, got 2^{}; \
                 use Krylov propagation, which needs no full spectrum",
                h.n_qubits()
            )));
        }
        let dim = h.dim();
        if h.is_real() {
            let mut m = Mat::<f64>::zeros(dim, dim);
            for (r, c, v) in h.entries() {
                m[(r, c)] = v.re;
            }
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::numerical("dense eigensolver", format!("{e:?}")))?;
            let values: Vec<f64> = evd.S().column_vector().iter().copied().collect();
            Self::sorted(values, Basis::Real(evd.U().to_owned()))
        } else {
            let mut m = Mat::<c64>::zeros(dim, dim);
            for (r, c, v) in h.entries() {
                m[(r, c)] = v;
            }
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::numerical("dense eigensolver", format!("{e:?}")))?;
            let values: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
            Self::sorted(values, Basis::Complex(evd.U().to_owned()))
        }
    }

    fn sorted(values: Vec<f64>, basis: Basis) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("dense eigensolver", "non-finite eigenvalue"));
        }
        if values.windows(2).all(|w| w[0] <= w[1]) {
            return Ok(Eigensystem { values, basis });
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let values = order.iter().map(|&k| values[k]).collect();
        let basis = match basis {
            Basis::Real(u) => Basis::Real(Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, order[j])])),
            Basis::Complex(u) => Basis::Complex(Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, order[j])])),
        };
        Ok(Eigensystem { values, basis })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `⟨b|v_k⟩`
    #[inline]
    pub fn component(&self, b: usize, k: usize) -> Complex64 {
        match &self.basis {
            Basis::Real(u) => Complex64::new(u[(b, k)], 0.0),
            Basis::Complex(u) => u[(b, k)],
        }
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|b| self.component(b, k)).collect()
    }

    /// Expansion coefficients `⟨v_k|ψ⟩` for every eigenvector.
    pub fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        assert_eq!(psi.len(), dim);
        match &self.basis {
            Basis::Real(u) => {
                let rhs = Mat::<f64>::from_fn(dim, 2, |i, j| if j == 0 { psi[i].re } else { psi[i].im });
                let out = u.transpose() * &rhs;
                (0..dim).map(|k| Complex64::new(out[(k, 0)], out[(k, 1)])).collect()
            }
            Basis::Complex(u) => {
                let rhs = Mat::<c64>::from_fn(dim, 1, |i, _| psi[i]);
                let out = u.adjoint() * &rhs;
                (0..dim).map(|k| out[(k, 0)]).collect()
            }
        }
    }

    /// `Σ_{k ∈ range} coeffs[k] · v_k`
    pub fn combine(&self, range: std::ops::Range<usize>, coeffs: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for k in range {
            let ck = coeffs[k];
            if ck == Complex64::new(0.0, 0.0) {
                continue;
            }
            match &self.basis {
                Basis::Real(u) => {
                    for (b, o) in u.col(k).iter().zip(out.iter_mut()) {
                        *o += ck * *b;
                    }
                }
                Basis::Complex(u) => {
                    for (b, o) in u.col(k).iter().zip(out.iter_mut()) {
                        *o += ck * *b;
                    }
                }
            }
        }
        out
    }

    /// Index ranges of eigenvalue clusters, each spanning at most `tol`.
    pub fn clusters(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.values.len() {
            if k == self.values.len() || self.values[k] - self.values[start] > tol {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Deterministic representative of the lowest eigenspace.
    ///
    /// Among all unit vectors in the ground space, picks the projection of
    /// the basis state `|b⟩` that admits the largest amplitude (largest
    /// `‖P|b⟩‖`), with ties going to the smallest `b`. The choice depends only
    /// on the ground-space projector, not on the solver's basis inside it.
    pub fn ground_state(&self) -> Result<(f64, StateVector)> {
        let ground = self
            .clusters(DEGENERACY_TOL)
            .into_iter()
            .next()
            .ok_or_else(|| Error::numerical("ground state", "empty spectrum"))?;
        let energy = self.values[ground.start];
        let dim = self.dim();
        let weights: Vec<f64> = (0..dim)
            .map(|b| ground.clone().map(|k| self.component(b, k).norm_sqr()).sum())
            .collect();
        let best = weights.iter().copied().fold(0.0, f64::max);
        let pivot = weights
            .iter()
            .position(|&w| w >= best - 1e-12)
            .expect("maximum is attained");
        let coeffs: Vec<Complex64> = (0..dim)
            .map(|k| {
                if ground.contains(&k) {
                    self.component(pivot, k).conj()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let state = StateVector::new(self.combine(ground, &coeffs))?;
        Ok((energy, state))
    }
}

/// Full ascending spectrum of `h`.
pub fn spectrum(h: &SparseOperator, want_vectors: bool) -> Result<SpectralData> {
    let eig = Eigensystem::compute(h)?;
    let eigenvectors = if want_vectors {
        Some(
            (0..eig.dim())
                .map(|k| StateVector::new(eig.vector(k)))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(SpectralData {
        eigenvalues: eig.values,
        eigenvectors,
    })
}

/// Lowest eigenvalue and its canonical eigenvector (see
/// [`Eigensystem::ground_state`] for the degenerate case).
pub fn ground_state(h: &SparseOperator) -> Result<(f64, StateVector)> {
    Eigensystem::compute(h)?.ground_state()
}
