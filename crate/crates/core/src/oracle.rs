//! Brute-force references: dense matrix exponentials and classical x-basis
//! enumeration. Slow on purpose and built without the sparse assembly or
//! eigensolver paths they are used to check.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{SpectralData, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonians::{AtaConvention, HamiltonianSpec};
use crate::qubit_ops::{PauliAxis, PauliTerm, SparseOperator};

/// Oracle capacity gate for dense matrices.
pub const MAX_ORACLE_QUBITS: usize = 8;

/// Classical enumeration limit.
pub const MAX_ENUMERATION_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Full `2^N × 2^N` Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

fn check_capacity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORACLE_QUBITS {
        return Err(Error::Capacity(format!(
            "oracle matrices hold 1..={MAX_ORACLE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

fn pauli_matrix(axis: Option<PauliAxis>) -> DMatrix<Complex64> {
    match axis {
        None => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        Some(PauliAxis::X) => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Some(PauliAxis::Y) => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Some(PauliAxis::Z) => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

impl DenseOperator {
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::param("matrix", format!("expected {dim}×{dim}")));
        }
        let skew = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if skew > 1e-12 {
            return Err(Error::param("matrix", format!("not Hermitian (deviation {skew:.3e})")));
        }
        Ok(DenseOperator { n_qubits, matrix })
    }

    /// Sum of Pauli strings, each formed as an explicit Kronecker product
    /// with site 1 as the leftmost factor.
    pub fn from_terms(terms: &[PauliTerm], n_qubits: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut total = DMatrix::<Complex64>::zeros(dim, dim);
        for term in terms {
            let mut m = DMatrix::from_element(1, 1, ONE);
            for site in 1..=n_qubits {
                let axis = term.factors().iter().find(|(s, _)| *s == site).map(|&(_, a)| a);
                m = m.kronecker(&pauli_matrix(axis));
            }
            if term.factors().iter().any(|&(s, _)| s > n_qubits) {
                return Err(Error::param("site", format!("term acts outside {n_qubits} qubits")));
            }
            total += m * Complex64::new(term.coefficient(), 0.0);
        }
        Self::new(n_qubits, total)
    }

    pub fn from_sparse(op: &SparseOperator) -> Result<Self> {
        check_capacity(op.n_qubits())?;
        let dim = op.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (r, c, v) in op.entries() {
            m[(r, c)] = v;
        }
        Self::new(op.n_qubits(), m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_deviation(&self, other: &DenseOperator) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `e^{−iHt}ψ` by full eigendecomposition of the dense matrix.
pub fn dense_expm_apply(h: &DenseOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    let dim = h.matrix.nrows();
    if psi.dim() != dim {
        return Err(Error::param(
            "state",
            format!("expected dimension {dim}, got {}", psi.dim()),
        ));
    }
    let eig = h.matrix.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let v = DMatrix::from_column_slice(dim, 1, psi.amplitudes());
    let mut coeffs = u.adjoint() * v;
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
    }
    let out = u * coeffs;
    StateVector::new(out.iter().copied().collect())
}

/// The `σˣσˣ` bonds of a pure-`σˣ` family: `(weight, site_a, site_b)`.
fn x_bonds(spec: &HamiltonianSpec, n: usize, convention: AtaConvention) -> Result<Vec<(f64, usize, usize)>> {
    let (j, range) = match *spec {
        HamiltonianSpec::IsingNN { j } => (j, 1),
        HamiltonianSpec::IsingATA { j, range } => {
            let full = if n.is_multiple_of(2) { n / 2 } else { (n - 1) / 2 };
            (j, range.unwrap_or(full))
        }
        _ => {
            return Err(Error::param(
                "family",
                format!("{} is not built from σˣσˣ couplings alone", spec.family()),
            ))
        }
    };
    if n < 3 {
        return Err(Error::param("N", format!("ring of {n} sites has no distinct bonds")));
    }
    let mut bonds = Vec::new();
    for k in 1..=range {
        let weight = j / 2f64.powi(k as i32 - 1);
        for a in 1..=n {
            // The antipodal bond (a, a + N/2) is the same bond as (a + N/2, a).
            if convention == AtaConvention::SingleCount && 2 * k == n && a > n / 2 {
                continue;
            }
            let b = (a + k - 1) % n + 1;
            bonds.push((weight, a, b));
        }
    }
    Ok(bonds)
}

/// Exact spectrum of a pure-`σˣ` Hamiltonian from the classical energies of
/// all x-basis configurations.
pub fn xbasis_enumeration(spec: &HamiltonianSpec, n: usize) -> Result<SpectralData> {
    xbasis_enumeration_with(spec, n, AtaConvention::SingleCount)
}

pub fn xbasis_enumeration_with(spec: &HamiltonianSpec, n: usize, convention: AtaConvention) -> Result<SpectralData> {
    if n > MAX_ENUMERATION_QUBITS {
        return Err(Error::Capacity(format!(
            "enumeration limited to {MAX_ENUMERATION_QUBITS} qubits, got {n}"
        )));
    }
    let bonds = x_bonds(spec, n, convention)?;
    let mut energies: Vec<f64> = (0u32..1 << n)
        .map(|config| {
            let s = |site: usize| if config >> (site - 1) & 1 == 0 { 1.0 } else { -1.0 };
            bonds.iter().map(|&(w, a, b)| w * s(a) * s(b)).sum()
        })
        .collect();
    energies.sort_by(f64::total_cmp);
    Ok(SpectralData {
        eigenvalues: energies,
        eigenvectors: None,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn close(a: &StateVector, b: &StateVector) -> bool {
        a.overlap_deficit(b) < 1e-12
    }

    #[test]
    fn field_eigenstate_keeps_its_form() {
        let z = DenseOperator::from_terms(&[PauliTerm::single(1, PauliAxis::Z, 1.0).unwrap()], 1).unwrap();
        let up = StateVector::all_up(1).unwrap();
        for t in [0.1, 2.0, 17.3] {
            let out = dense_expm_apply(&z, &up, t).unwrap();
            assert_eq!(out.amplitudes()[1], ZERO);
            assert!((out.amplitudes()[0] - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn full_rabi_period_returns_the_state() {
        let x = DenseOperator::from_terms(&[PauliTerm::single(1, PauliAxis::X, 1.0).unwrap()], 1).unwrap();
        let up = StateVector::all_up(1).unwrap();
        let out = dense_expm_apply(&x, &up, PI).unwrap();
        assert!(close(&out, &up));
        assert!((out.amplitudes()[0] - ONE).norm() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kronecker_ordering_matches_the_basis_convention() {
        // σᶻ on site 1 reads the most significant bit.
        let z1 = DenseOperator::from_terms(&[PauliTerm::single(1, PauliAxis::Z, 1.0).unwrap()], 2).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z1.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn capacity_gate() {
        let term = PauliTerm::single(1, PauliAxis::Z, 1.0).unwrap();
        assert!(matches!(DenseOperator::from_terms(&[term], 9), Err(Error::Capacity(_))));
    }

    #[test]
    fn ising_triangle_spectrum() {
        let s = xbasis_enumeration(&HamiltonianSpec::ising_nn(1.0), 3).unwrap();
        let mut expected = vec![-1.0; 6];
        expected.extend([3.0, 3.0]);
        assert_eq!(s.eigenvalues, expected);
    }

    #[test]
    fn ising_square_minimum() {
        let s = xbasis_enumeration(&HamiltonianSpec::ising_nn(1.0), 4).unwrap();
        assert_eq!(s.eigenvalues[0], -4.0);
    }

    #[test]
    fn antipodal_bonds_counted_once() {
        // N=4, K=2: four NN bonds of weight 1 plus (1,3),(2,4) of weight 1/2.
        let bonds = x_bonds(&HamiltonianSpec::ising_ata(1.0), 4, AtaConvention::SingleCount).unwrap();
        let far: Vec<_> = bonds.iter().filter(|b| b.0 == 0.5).map(|b| (b.1, b.2)).collect();
        assert_eq!(far, vec![(1, 3), (2, 4)]);
        let s = xbasis_enumeration(&HamiltonianSpec::ising_ata(1.0), 4).unwrap();
        // All aligned: 4 + 2·0.5.
        assert_eq!(*s.eigenvalues.last().unwrap(), 5.0);
        let literal = x_bonds(&HamiltonianSpec::ising_ata(1.0), 4, AtaConvention::Literal).unwrap();
        assert_eq!(literal.len(), 8);
    }

    #[test]
    fn non_x_families_are_rejected() {
        assert!(xbasis_enumeration(&HamiltonianSpec::xy_nn(1.0, 0.5), 4).is_err());
        assert!(xbasis_enumeration(&HamiltonianSpec::field_z(1.0), 4).is_err());
    }
}
