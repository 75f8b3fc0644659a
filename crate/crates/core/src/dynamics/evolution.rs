use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{Eigensystem, DEGENERACY_TOL};
use super::krylov::krylov_expm_apply;
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::hamiltonians::{ProtocolPhase, ProtocolSpec};
use crate::metrics::TimeGrid;
use crate::qubit_ops::SparseOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendKind {
    DenseEigen,
    KrylovLanczos,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorBackend {
    pub kind: BackendKind,
    /// Krylov subspace size (Krylov backend only).
    pub krylov_dim: usize,
    /// Per-step error target (Krylov backend only).
    pub tolerance: f64,
}

impl Default for PropagatorBackend {
    fn default() -> Self {
        PropagatorBackend {
            kind: BackendKind::DenseEigen,
            krylov_dim: 30,
            tolerance: 1e-10,
        }
    }
}

impl PropagatorBackend {
    pub fn dense() -> Self {
        Self::default()
    }

    pub fn krylov(krylov_dim: usize, tolerance: f64) -> Result<Self> {
        let b = PropagatorBackend {
            kind: BackendKind::KrylovLanczos,
            krylov_dim,
            tolerance,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.krylov_dim < 2 {
            return Err(Error::param("krylov_dim", format!("{} < 2", self.krylov_dim)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::param(
                "tolerance",
                format!("{} must be positive", self.tolerance),
            ));
        }
        Ok(())
    }
}

fn check_dims(h: &SparseOperator, psi: &StateVector) -> Result<()> {
    if h.dim() != psi.dim() {
        return Err(Error::param(
            "state",
            format!("operator dimension {} vs state dimension {}", h.dim(), psi.dim()),
        ));
    }
    Ok(())
}

/// `⟨ψ|H|ψ⟩`
pub fn expectation(h: &SparseOperator, psi: &StateVector) -> Result<f64> {
    check_dims(h, psi)?;
    let amps = psi.amplitudes();
    let value: Complex64 = h.apply(amps).iter().zip(amps).map(|(hv, a)| a.conj() * hv).sum();
    if value.im.abs() > 1e-10 * (1.0 + h.norm_bound()) {
        return Err(Error::numerical(
            "expectation",
            format!("imaginary residue {:.3e}; operator is not Hermitian", value.im),
        ));
    }
    Ok(value.re)
}

/// `e^{−iHt}ψ`, returned in canonical phase.
pub fn propagate(h: &SparseOperator, psi: &StateVector, t: f64, backend: &PropagatorBackend) -> Result<StateVector> {
    check_dims(h, psi)?;
    if !t.is_finite() {
        return Err(Error::param("t", "time must be finite"));
    }
    backend.validate()?;
    match backend.kind {
        BackendKind::DenseEigen => {
            let eig = Eigensystem::compute(h)?;
            SpectralSampler::new(&eig, psi, None)?.state(t)
        }
        BackendKind::KrylovLanczos => StateVector::new(krylov_expm_apply(
            h,
            psi.amplitudes(),
            t,
            backend.krylov_dim,
            backend.tolerance,
        )?),
    }
}

/// Above this many populated levels the observable is evaluated through
/// the state rather than a precomputed level-pair matrix.
const MAX_GRAM_LEVELS: usize = 512;

/// Exact evolution of one state under one time-independent Hamiltonian.
///
/// The initial state is split into its projections onto each distinct
/// energy level; unpopulated levels are dropped. Any time is then evaluated
/// in O(levels²) for a fixed observable, independent of the grid.
pub struct SpectralSampler {
    energies: Vec<f64>,
    components: Vec<Vec<Complex64>>,
    /// `⟨u_k|A|u_l⟩`, row-major.
    gram: Option<Vec<Complex64>>,
    observable: Option<SparseOperator>,
}

impl SpectralSampler {
    pub fn new(eig: &Eigensystem, psi: &StateVector, observable: Option<&SparseOperator>) -> Result<Self> {
        if eig.dim() != psi.dim() {
            return Err(Error::param("state", "state and eigensystem dimensions differ"));
        }
        let coeffs = eig.coefficients(psi.amplitudes());
        let mut energies = Vec::new();
        let mut components = Vec::new();
        for level in eig.clusters(DEGENERACY_TOL) {
            let weight: f64 = level.clone().map(|k| coeffs[k].norm_sqr()).sum();
            if weight < 1e-28 {
                continue;
            }
            let e = level.clone().map(|k| eig.values()[k]).sum::<f64>() / level.len() as f64;
            energies.push(e);
            components.push(eig.combine(level, &coeffs));
        }
        let gram = match observable {
            Some(a) if components.len() <= MAX_GRAM_LEVELS => {
                let applied: Vec<Vec<Complex64>> = components.iter().map(|u| a.apply(u)).collect();
                let k = components.len();
                let mut g = vec![Complex64::new(0.0, 0.0); k * k];
                for (i, ui) in components.iter().enumerate() {
                    for (j, aj) in applied.iter().enumerate() {
                        g[i * k + j] = ui.iter().zip(aj).map(|(x, y)| x.conj() * y).sum();
                    }
                }
                Some(g)
            }
            _ => None,
        };
        Ok(SpectralSampler {
            energies,
            components,
            gram,
            observable: observable.cloned(),
        })
    }

    /// Number of populated levels.
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect()
    }

    fn raw_state(&self, t: f64) -> Vec<Complex64> {
        let dim = self.components.first().map_or(0, Vec::len);
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (a, u) in self.phases(t).iter().zip(&self.components) {
            for (o, x) in out.iter_mut().zip(u) {
                *o += a * x;
            }
        }
        out
    }

    pub fn state(&self, t: f64) -> Result<StateVector> {
        StateVector::new(self.raw_state(t))
    }

    /// Expectation of the observable given at construction.
    pub fn observe(&self, t: f64) -> Result<f64> {
        let a = self
            .observable
            .as_ref()
            .ok_or_else(|| Error::param("observable", "sampler was built without one"))?;
        match &self.gram {
            Some(g) => {
                let ph = self.phases(t);
                let k = ph.len();
                let mut total = Complex64::new(0.0, 0.0);
                for i in 0..k {
                    let row = &g[i * k..(i + 1) * k];
                    let inner: Complex64 = row.iter().zip(&ph).map(|(gij, pj)| gij * pj).sum();
                    total += ph[i].conj() * inner;
                }
                Ok(total.re)
            }
            None => expectation(a, &StateVector::new(self.raw_state(t))?),
        }
    }
}

/// Budget for retained states (checkpoints and optional traces), in bytes.
pub const STATE_MEMORY_BUDGET: usize = 512 << 20;

/// Sequential Krylov evolution that keeps checkpoints so later queries can
/// restart from the nearest earlier time.
struct KrylovSampler {
    h: SparseOperator,
    observable: SparseOperator,
    checkpoints: Vec<(f64, StateVector)>,
    max_checkpoints: usize,
    backend: PropagatorBackend,
}

impl KrylovSampler {
    fn new(h: SparseOperator, observable: SparseOperator, start: StateVector, backend: PropagatorBackend) -> Self {
        let per_state = start.dim() * std::mem::size_of::<Complex64>();
        KrylovSampler {
            h,
            observable,
            checkpoints: vec![(0.0, start)],
            max_checkpoints: (STATE_MEMORY_BUDGET / per_state).max(2),
            backend,
        }
    }

    fn state(&mut self, t: f64) -> Result<StateVector> {
        let idx = self.checkpoints.partition_point(|(tc, _)| *tc <= t) - 1;
        let (tc, from) = &self.checkpoints[idx];
        if *tc == t {
            return Ok(from.clone());
        }
        let out = propagate(&self.h, from, t - tc, &self.backend)?;
        if self.checkpoints.len() < self.max_checkpoints {
            self.checkpoints.insert(idx + 1, (t, out.clone()));
        } else if idx + 1 == self.checkpoints.len() {
            // Budget spent: keep only the leading edge moving forward.
            *self.checkpoints.last_mut().expect("nonempty") = (t, out.clone());
        }
        Ok(out)
    }

    fn observe(&mut self, t: f64) -> Result<f64> {
        let s = self.state(t)?;
        expectation(&self.observable, &s)
    }
}

enum Segment {
    Spectral(SpectralSampler),
    Krylov(KrylovSampler),
}

impl Segment {
    fn observe(&mut self, t: f64) -> Result<f64> {
        match self {
            Segment::Spectral(s) => s.observe(t),
            Segment::Krylov(k) => k.observe(t),
        }
    }

    fn state(&mut self, t: f64) -> Result<StateVector> {
        match self {
            Segment::Spectral(s) => s.state(t),
            Segment::Krylov(k) => k.state(t),
        }
    }
}

/// The charging protocol started from the battery ground state. Evaluates
/// `⟨H_B⟩` and the state at arbitrary non-negative times.
pub struct ProtocolEvolution {
    battery: SparseOperator,
    ground_energy: f64,
    initial: StateVector,
    t_on: Option<f64>,
    backend: PropagatorBackend,
    battery_eig: Option<Eigensystem>,
    charging: Segment,
    after: Option<Segment>,
}

impl ProtocolEvolution {
    pub fn new(p: &ProtocolSpec, backend: &PropagatorBackend) -> Result<Self> {
        p.validate()?;
        backend.validate()?;
        let battery = p.hamiltonian(ProtocolPhase::BeforeCharging)?;
        let battery_eig = Eigensystem::compute(&battery)?;
        let (ground_energy, initial) = battery_eig.ground_state()?;
        let charging_h = p.hamiltonian(ProtocolPhase::Charging)?;
        let charging = match backend.kind {
            BackendKind::DenseEigen => {
                let eig = Eigensystem::compute(&charging_h)?;
                Segment::Spectral(SpectralSampler::new(&eig, &initial, Some(&battery))?)
            }
            BackendKind::KrylovLanczos => Segment::Krylov(KrylovSampler::new(
                charging_h,
                battery.clone(),
                initial.clone(),
                *backend,
            )),
        };
        let t_on = p.t_on.end();
        Ok(ProtocolEvolution {
            battery,
            ground_energy,
            initial,
            t_on,
            backend: *backend,
            battery_eig: t_on.map(|_| battery_eig),
            charging,
            after: None,
        })
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    pub fn battery_operator(&self) -> &SparseOperator {
        &self.battery
    }

    fn after_segment(&mut self) -> Result<&mut Segment> {
        if self.after.is_none() {
            let t_on = self.t_on.expect("after segment requires a finite window");
            let start = self.charging.state(t_on)?;
            let seg = match self.backend.kind {
                BackendKind::DenseEigen => {
                    let eig = self.battery_eig.as_ref().expect("kept when the window is finite");
                    Segment::Spectral(SpectralSampler::new(eig, &start, Some(&self.battery))?)
                }
                BackendKind::KrylovLanczos => Segment::Krylov(KrylovSampler::new(
                    self.battery.clone(),
                    self.battery.clone(),
                    start,
                    self.backend,
                )),
            };
            self.after = Some(seg);
        }
        Ok(self.after.as_mut().expect("just set"))
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param("t", format!("{t} must be finite and non-negative")));
        }
        Ok(())
    }

    /// `⟨H_B⟩` at time `t ≥ 0`.
    pub fn battery_energy(&mut self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == 0.0 {
            return Ok(self.ground_energy);
        }
        match self.t_on {
            Some(t_on) if t > t_on => self.after_segment()?.observe(t - t_on),
            _ => self.charging.observe(t),
        }
    }

    pub fn state(&mut self, t: f64) -> Result<StateVector> {
        Self::check_time(t)?;
        match self.t_on {
            Some(t_on) if t > t_on => self.after_segment()?.state(t - t_on),
            _ => self.charging.state(t),
        }
    }

    /// `⟨H_B⟩(t) − ⟨H_B⟩(0)`.
    pub fn stored_energy(&mut self, t: f64) -> Result<f64> {
        Ok(self.battery_energy(t)? - self.ground_energy)
    }
}

/// Battery energy sampled along a grid, optionally with the states.
#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub times: Vec<f64>,
    pub battery_energy: Vec<f64>,
    pub states: Option<Vec<StateVector>>,
}

/// Evolves the protocol from the battery ground state and samples `⟨H_B⟩`
/// at every grid time. Retaining states is refused beyond the memory budget.
pub fn evolve_protocol(
    p: &ProtocolSpec,
    grid: &TimeGrid,
    backend: &PropagatorBackend,
    retain_states: bool,
) -> Result<ProtocolTrace> {
    let times = grid.times();
    if retain_states {
        let bytes = times.len() * (1usize << p.n) * std::mem::size_of::<Complex64>();
        if bytes > STATE_MEMORY_BUDGET {
            return Err(Error::Capacity(format!(
                "retaining {} states of 2^{} amplitudes needs {bytes} bytes",
                times.len(),
                p.n
            )));
        }
    }
    let mut evo = ProtocolEvolution::new(p, backend)?;
    let mut energies = Vec::with_capacity(times.len());
    let mut states = retain_states.then(Vec::new);
    for &t in &times {
        energies.push(evo.battery_energy(t)?);
        if let Some(s) = states.as_mut() {
            s.push(evo.state(t)?);
        }
    }
    Ok(ProtocolTrace {
        times,
        battery_energy: energies,
        states,
    })
}
