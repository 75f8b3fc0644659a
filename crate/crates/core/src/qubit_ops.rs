//! Pauli operators on an `N`-qubit register, stored as sparse Hermitian
//! matrices.
//!
//! Basis convention: the computational basis is indexed by bitstrings. A bit
//! value of 0 is spin up (σᶻ = +1) and qubit 1 is the most significant bit,
//! so the all-down state is the last basis index.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the sparse builders accept.
pub const MAX_QUBITS: usize = 24;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    /// Whether the operator flips the qubit it acts on.
    #[inline]
    pub fn flips(self) -> bool {
        !matches!(self, PauliAxis::Z)
    }

    /// Matrix element picked up when acting on a qubit whose bit is `bit`.
    #[inline]
    fn phase(self, bit: usize) -> Complex64 {
        match (self, bit) {
            (PauliAxis::X, _) => Complex64::new(1.0, 0.0),
            (PauliAxis::Y, 0) => Complex64::new(0.0, 1.0),
            (PauliAxis::Y, _) => Complex64::new(0.0, -1.0),
            (PauliAxis::Z, 0) => Complex64::new(1.0, 0.0),
            (PauliAxis::Z, _) => Complex64::new(-1.0, 0.0),
        }
    }
}

/// A real-weighted product of Pauli factors on distinct sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    factors: Vec<(usize, PauliAxis)>,
    coefficient: f64,
}

impl PauliTerm {
    /// Sites are 1-based. Factors are kept sorted by site.
    pub fn new(factors: impl IntoIterator<Item = (usize, PauliAxis)>, coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::param("coefficient", format!("{coefficient} is not finite")));
        }
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|&(site, _)| site);
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::param(
                "site",
                format!("site {} appears twice in one term", w[0].0),
            ));
        }
        if factors.iter().any(|&(site, _)| site == 0) {
            return Err(Error::param("site", "sites are 1-based"));
        }
        Ok(PauliTerm { factors, coefficient })
    }

    pub fn single(site: usize, axis: PauliAxis, coefficient: f64) -> Result<Self> {
        Self::new([(site, axis)], coefficient)
    }

    pub fn pair(a: usize, b: usize, axis: PauliAxis, coefficient: f64) -> Result<Self> {
        Self::new([(a, axis), (b, axis)], coefficient)
    }

    pub fn factors(&self) -> &[(usize, PauliAxis)] {
        &self.factors
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PauliTerm {
            factors: self.factors.clone(),
            coefficient: self.coefficient * factor,
        }
    }

    fn max_site(&self) -> usize {
        self.factors.last().map_or(0, |&(s, _)| s)
    }

    /// Bit mask of the qubits this term flips.
    fn flip_mask(&self, n: usize) -> usize {
        self.factors
            .iter()
            .filter(|(_, a)| a.flips())
            .fold(0, |m, &(site, _)| m | bit_of(n, site))
    }

    /// Matrix element ⟨column ^ mask| term |column⟩.
    fn element(&self, n: usize, column: usize) -> Complex64 {
        self.factors
            .iter()
            .fold(Complex64::new(self.coefficient, 0.0), |acc, &(site, axis)| {
                let bit = usize::from(column & bit_of(n, site) != 0);
                acc * axis.phase(bit)
            })
    }
}

#[inline]
fn bit_of(n: usize, site: usize) -> usize {
    1 << (n - site)
}

fn check_register(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("N", "register must hold at least one qubit"));
    }
    if n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits exceeds the sparse builder limit of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Hermitian operator on `2^N` amplitudes in compressed-row storage.
///
/// Entries within a row are sorted by column and explicit zeros are never
/// stored, so two equal operators have identical storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    n_qubits: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        Ok(SparseOperator {
            n_qubits,
            row_ptr: vec![0; (1 << n_qubits) + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(SparseOperator {
            n_qubits,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![Complex64::new(1.0, 0.0); dim],
        })
    }

    /// Builds an operator from `(row, column, value)` triplets. Duplicates are
    /// summed; the result must be Hermitian within `1e-12`.
    pub fn from_entries(n_qubits: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut merged: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::param(
                    "entry",
                    format!("index ({r}, {c}) outside dimension {dim}"),
                ));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::param("entry", format!("non-finite value at ({r}, {c})")));
            }
            *merged.entry((r, c)).or_default() += v;
        }
        let op = Self::from_sorted(n_qubits, merged.into_iter().map(|((r, c), v)| (r, c, v)));
        if !op.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::param("entries", "operator is not Hermitian"));
        }
        Ok(op)
    }

    /// Entries must arrive sorted by (row, column) without duplicates.
    fn from_sorted(n_qubits: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let dim = 1usize << n_qubits;
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (r, c, v) in entries {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            n_qubits,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// All stored entries in (row, column) order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = self · x`.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for (r, out) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *out = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn scaled(&self, factor: f64) -> SparseOperator {
        Self::from_sorted(self.n_qubits, self.entries().map(|(r, c, v)| (r, c, v * factor)))
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_same_shape(other)?;
        let mut out = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.dim() {
            let mut a = self.row(r).peekable();
            let mut b = other.row(r).peekable();
            loop {
                match (a.peek(), b.peek()) {
                    (Some(&(ca, va)), Some(&(cb, vb))) => {
                        if ca == cb {
                            out.push((r, ca, va + vb));
                            a.next();
                            b.next();
                        } else if ca < cb {
                            out.push((r, ca, va));
                            a.next();
                        } else {
                            out.push((r, cb, vb));
                            b.next();
                        }
                    }
                    (Some(&(c, v)), None) | (None, Some(&(c, v))) => {
                        out.push((r, c, v));
                        a.next();
                        b.next();
                    }
                    (None, None) => break,
                }
            }
        }
        Ok(Self::from_sorted(self.n_qubits, out))
    }

    fn check_same_shape(&self, other: &SparseOperator) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::param(
                "operator",
                format!("dimension mismatch: 2^{} vs 2^{}", self.n_qubits, other.n_qubits),
            ));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries()
            .all(|(r, c, v)| (v - self.get(c, r).conj()).norm() <= tol)
    }

    /// True when every stored entry has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    /// Relabels basis states: entry `(r, c)` moves to `(perm(r), perm(c))`.
    /// `perm` must be a bijection on `0..dim`.
    pub fn permuted(&self, perm: impl Fn(usize) -> usize) -> SparseOperator {
        let mut moved: Vec<_> = self.entries().map(|(r, c, v)| (perm(r), perm(c), v)).collect();
        moved.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.n_qubits, moved)
    }

    /// Conjugation by the one-site cyclic shift, site `j` → `j + 1` (mod N).
    pub fn translated(&self) -> SparseOperator {
        let n = self.n_qubits;
        // Site j sits at bit n - j; shifting sites right rotates bits right.
        self.permuted(|idx| ((idx >> 1) | ((idx & 1) << (n - 1))) & ((1 << n) - 1))
    }

    /// Writes one line per stored entry, `row col re im`, sorted by (row, col).
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut line = String::new();
        for (r, c, v) in self.entries() {
            line.clear();
            let _ = writeln!(line, "{r} {c} {:e} {:e}", v.re, v.im);
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Reads the format produced by [`SparseOperator::write_dump`].
    pub fn read_dump(n_qubits: usize, input: impl BufRead) -> Result<SparseOperator> {
        let mut entries = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("operator dump", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::param("dump", format!("line {}: expected `row col re im`", lineno + 1));
            if fields.len() != 4 {
                return Err(bad());
            }
            let r = fields[0].parse().map_err(|_| bad())?;
            let c = fields[1].parse().map_err(|_| bad())?;
            let re = fields[2].parse().map_err(|_| bad())?;
            let im = fields[3].parse().map_err(|_| bad())?;
            entries.push((r, c, Complex64::new(re, im)));
        }
        Self::from_entries(n_qubits, entries)
    }
}

/// The Pauli `axis` on site `j` (1-based), identity elsewhere.
pub fn pauli_site(n: usize, j: usize, axis: PauliAxis) -> Result<SparseOperator> {
    assemble(&[PauliTerm::single(j, axis, 1.0)?], n)
}

/// Σ coefficient · (tensor product of factors) over `terms`.
pub fn assemble(terms: &[PauliTerm], n: usize) -> Result<SparseOperator> {
    check_register(n)?;
    if let Some(t) = terms.iter().find(|t| t.max_site() > n) {
        return Err(Error::param(
            "site",
            format!("site {} outside register of {n} qubits", t.max_site()),
        ));
    }
    let dim = 1usize << n;

    // Terms sharing a flip mask share a sparsity pattern: accumulate each
    // mask's column values densely, then emit rows in column order.
    let mut by_mask: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    for term in terms {
        let column_vals = by_mask
            .entry(term.flip_mask(n))
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
        for (c, slot) in column_vals.iter_mut().enumerate() {
            *slot += term.element(n, c);
        }
    }

    let masks: Vec<(usize, &Vec<Complex64>)> = by_mask.iter().map(|(&m, v)| (m, v)).collect();
    let mut row_buf: Vec<(usize, Complex64)> = Vec::with_capacity(masks.len());
    let mut entries = Vec::with_capacity(dim * masks.len());
    for r in 0..dim {
        row_buf.clear();
        row_buf.extend(masks.iter().map(|&(m, vals)| (r ^ m, vals[r ^ m])));
        row_buf.sort_unstable_by_key(|&(c, _)| c);
        entries.extend(row_buf.iter().map(|&(c, v)| (r, c, v)));
    }
    Ok(SparseOperator::from_sorted(n, entries))
}

/// Frobenius norm of `AB − BA`.
pub fn commutator_norm(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    a.check_same_shape(b)?;
    let dim = a.dim();
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    let mut touched = vec![false; dim];
    let mut touched_list = Vec::new();
    let mut total = 0.0;
    for r in 0..dim {
        let mut accumulate = |lhs: &SparseOperator, rhs: &SparseOperator, sign: f64| {
            for (k, lv) in lhs.row(r) {
                for (c, rv) in rhs.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        touched_list.push(c);
                    }
                    acc[c] += lv * rv * sign;
                }
            }
        };
        accumulate(a, b, 1.0);
        accumulate(b, a, -1.0);
        for &c in &touched_list {
            total += acc[c].norm_sqr();
            acc[c] = Complex64::new(0.0, 0.0);
            touched[c] = false;
        }
        touched_list.clear();
    }
    Ok(total.sqrt())
}
