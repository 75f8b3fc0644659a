use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes at or below this magnitude are skipped when fixing the phase.
const PHASE_PIVOT_EPS: f64 = 1e-10;

/// A normalized pure state on `N` qubits in canonical phase: the first
/// amplitude with non-negligible magnitude is real and positive.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Normalizes and phase-fixes `amps`, whose length must be a power of two.
    pub fn new(mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(Error::param(
                "amplitudes",
                format!("length {} is not 2^N with N >= 1", amps.len()),
            ));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::param("amplitudes", "state has zero or non-finite norm"));
        }
        let pivot = amps
            .iter()
            .find(|a| a.norm() > PHASE_PIVOT_EPS * norm)
            .copied()
            .expect("nonzero norm implies a pivot");
        let rotate = pivot.conj() / (pivot.norm() * norm);
        for a in &mut amps {
            *a *= rotate;
        }
        Ok(StateVector { amps })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::qubit_ops::MAX_QUBITS {
            return Err(Error::param("N", format!("unsupported register size {n_qubits}")));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::param("index", format!("{index} outside dimension {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amps })
    }

    /// Every spin down: the last basis index.
    pub fn all_down(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, (1usize << n_qubits) - 1)
    }

    pub fn all_up(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `1 − |⟨self|other⟩|²`, zero iff the states agree up to phase.
    pub fn overlap_deficit(&self, other: &StateVector) -> f64 {
        1.0 - self.inner(other).norm_sqr()
    }

    /// `index re im` per amplitude.
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for (i, a) in self.amps.iter().enumerate() {
            writeln!(out, "{i} {:e} {:e}", a.re, a.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_normalizes_and_fixes_phase() {
        let s = StateVector::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, -3.0)]).unwrap();
        assert_eq!(s.amplitudes()[1], Complex64::new(1.0, 0.0));
        let t = StateVector::new(vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]).unwrap();
        assert!((t.amplitudes()[0] - Complex64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((t.amplitudes()[1] - Complex64::new(0.0, -(0.5f64.sqrt()))).norm() < 1e-15);
        assert!((t.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rounding_noise_does_not_pick_the_phase() {
        let s = StateVector::new(vec![Complex64::new(1e-17, 0.0), Complex64::new(0.0, -1.0)]).unwrap();
        assert!((s.amplitudes()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_lengths_and_zero() {
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(StateVector::new(vec![Complex64::new(0.0, 0.0); 4]).is_err());
        assert!(StateVector::basis(2, 4).is_err());
    }

    #[test]
    fn all_down_is_last_index() {
        let s = StateVector::all_down(3).unwrap();
        assert_eq!(s.amplitudes()[7], Complex64::new(1.0, 0.0));
        assert_eq!(s.n_qubits(), 3);
    }
}
