//! The five Hamiltonian families on a periodic chain and the piecewise
//! charging protocol built from them.
//!
//! Sites are 1-based and periodic: site `N + k` is site `k`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit_ops::{assemble, PauliAxis, PauliTerm, SparseOperator};

/// Smallest ring for which nearest-neighbour bonds are all distinct.
pub const MIN_INTERACTING_SITES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    FieldZ,
    IsingNN,
    IsingATA,
    XYNN,
    XYATA,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::FieldZ,
        Family::IsingNN,
        Family::IsingATA,
        Family::XYNN,
        Family::XYATA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::FieldZ => "FieldZ",
            Family::IsingNN => "IsingNN",
            Family::IsingATA => "IsingATA",
            Family::XYNN => "XYNN",
            Family::XYATA => "XYATA",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name().eq_ignore_ascii_case(s))
    }

    pub fn is_interacting(self) -> bool {
        self != Family::FieldZ
    }

    pub fn is_all_to_all(self) -> bool {
        matches!(self, Family::IsingATA | Family::XYATA)
    }

    pub fn is_xy(self) -> bool {
        matches!(self, Family::XYNN | Family::XYATA)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the antipodal distance `k = N/2` is summed for even `N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtaConvention {
    /// Every unordered pair appears exactly once.
    #[default]
    SingleCount,
    /// `Σ_{j=1..N} Σ_{k=1..K}` taken literally; antipodal pairs appear twice.
    Literal,
}

/// One of the five model families plus its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum HamiltonianSpec {
    /// `h Σ_j σᶻ_j`
    FieldZ { h: f64 },
    /// `J Σ_j σˣ_j σˣ_{j+1}`
    IsingNN {
        #[serde(rename = "J")]
        j: f64,
    },
    /// `J Σ_j Σ_{k≤K} 2^{-(k-1)} σˣ_j σˣ_{j+k}`; `range = None` derives `K` from `N`.
    IsingATA {
        #[serde(rename = "J")]
        j: f64,
        #[serde(rename = "K")]
        range: Option<usize>,
    },
    /// `J[(1+γ) Σ_j σˣ_j σˣ_{j+1} + (1−γ) Σ_j σʸ_j σʸ_{j+1}]`
    XYNN {
        #[serde(rename = "J")]
        j: f64,
        gamma: f64,
    },
    /// The XY coupling with `2^{-(k-1)}` decay up to range `K`.
    XYATA {
        #[serde(rename = "J")]
        j: f64,
        gamma: f64,
        #[serde(rename = "K")]
        range: Option<usize>,
    },
}

impl HamiltonianSpec {
    pub fn field_z(h: f64) -> Self {
        HamiltonianSpec::FieldZ { h }
    }

    pub fn ising_nn(j: f64) -> Self {
        HamiltonianSpec::IsingNN { j }
    }

    pub fn ising_ata(j: f64) -> Self {
        HamiltonianSpec::IsingATA { j, range: None }
    }

    pub fn xy_nn(j: f64, gamma: f64) -> Self {
        HamiltonianSpec::XYNN { j, gamma }
    }

    pub fn xy_ata(j: f64, gamma: f64) -> Self {
        HamiltonianSpec::XYATA { j, gamma, range: None }
    }

    /// Builds a spec from loosely-typed fields, as read from a config file.
    pub fn from_fields(
        family: Family,
        h: Option<f64>,
        j: Option<f64>,
        gamma: Option<f64>,
        range: Option<usize>,
    ) -> Result<Self> {
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| Error::param(name, format!("required for family {family}")))
        };
        let forbid = |present: bool, name: &'static str| {
            if present {
                Err(Error::param(name, format!("not used by family {family}")))
            } else {
                Ok(())
            }
        };
        if !family.is_xy() {
            forbid(gamma.is_some(), "gamma")?;
        }
        if !family.is_all_to_all() {
            forbid(range.is_some(), "K")?;
        }
        if family.is_interacting() {
            forbid(h.is_some(), "h")?;
        } else {
            forbid(j.is_some(), "J")?;
        }
        let spec = match family {
            Family::FieldZ => HamiltonianSpec::FieldZ { h: need(h, "h")? },
            // J defaults to 1 for every interacting family.
            Family::IsingNN => HamiltonianSpec::IsingNN { j: j.unwrap_or(1.0) },
            Family::IsingATA => HamiltonianSpec::IsingATA {
                j: j.unwrap_or(1.0),
                range,
            },
            Family::XYNN => HamiltonianSpec::XYNN {
                j: j.unwrap_or(1.0),
                gamma: need(gamma, "gamma")?,
            },
            Family::XYATA => HamiltonianSpec::XYATA {
                j: j.unwrap_or(1.0),
                gamma: need(gamma, "gamma")?,
                range,
            },
        };
        spec.check_values()?;
        Ok(spec)
    }

    pub fn family(&self) -> Family {
        match self {
            HamiltonianSpec::FieldZ { .. } => Family::FieldZ,
            HamiltonianSpec::IsingNN { .. } => Family::IsingNN,
            HamiltonianSpec::IsingATA { .. } => Family::IsingATA,
            HamiltonianSpec::XYNN { .. } => Family::XYNN,
            HamiltonianSpec::XYATA { .. } => Family::XYATA,
        }
    }

    /// The overall energy scale: `h` for the field, `J` otherwise.
    pub fn strength(&self) -> f64 {
        match *self {
            HamiltonianSpec::FieldZ { h } => h,
            HamiltonianSpec::IsingNN { j }
            | HamiltonianSpec::IsingATA { j, .. }
            | HamiltonianSpec::XYNN { j, .. }
            | HamiltonianSpec::XYATA { j, .. } => j,
        }
    }

    /// Same family with `h` (or `J`) replaced.
    pub fn with_strength(&self, value: f64) -> Self {
        let mut out = *self;
        match &mut out {
            HamiltonianSpec::FieldZ { h } => *h = value,
            HamiltonianSpec::IsingNN { j }
            | HamiltonianSpec::IsingATA { j, .. }
            | HamiltonianSpec::XYNN { j, .. }
            | HamiltonianSpec::XYATA { j, .. } => *j = value,
        }
        out
    }

    /// Multiplies `h` (or `J`) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.with_strength(self.strength() * factor)
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            HamiltonianSpec::XYNN { gamma, .. } | HamiltonianSpec::XYATA { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// Explicit range override, if any.
    pub fn range(&self) -> Option<usize> {
        match *self {
            HamiltonianSpec::IsingATA { range, .. } | HamiltonianSpec::XYATA { range, .. } => range,
            _ => None,
        }
    }

    /// Same spec with the range override cleared (or set).
    pub fn with_range(&self, k: Option<usize>) -> Self {
        let mut out = *self;
        match &mut out {
            HamiltonianSpec::IsingATA { range, .. } | HamiltonianSpec::XYATA { range, .. } => *range = k,
            _ => {}
        }
        out
    }

    fn check_values(&self) -> Result<()> {
        let s = self.strength();
        if !s.is_finite() {
            let name = if self.family().is_interacting() { "J" } else { "h" };
            return Err(Error::param(name, format!("{s} is not finite")));
        }
        if let Some(g) = self.gamma() {
            if !(-1.0..=1.0).contains(&g) {
                return Err(Error::param("gamma", format!("{g} outside [-1, 1]")));
            }
        }
        if self.range() == Some(0) {
            return Err(Error::param("K", "range must be positive"));
        }
        Ok(())
    }

    /// Checks the spec against a register size.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_values()?;
        if n == 0 {
            return Err(Error::param("N", "register must hold at least one qubit"));
        }
        if self.family().is_interacting() && n < MIN_INTERACTING_SITES {
            return Err(Error::param(
                "N",
                format!("{} needs N >= {MIN_INTERACTING_SITES}, got {n}", self.family()),
            ));
        }
        if let Some(k) = self.range() {
            let max = interaction_range(n)?;
            if k > max {
                return Err(Error::param("K", format!("range {k} exceeds {max} for N = {n}")));
            }
        }
        Ok(())
    }

    /// The range actually used on a ring of `n` sites (1 for NN families).
    pub fn effective_range(&self, n: usize) -> Result<usize> {
        match self.family() {
            Family::FieldZ => Ok(0),
            Family::IsingNN | Family::XYNN => Ok(1),
            Family::IsingATA | Family::XYATA => match self.range() {
                Some(k) => Ok(k),
                None => interaction_range(n),
            },
        }
    }

    /// The Pauli-string expansion of this Hamiltonian on `n` sites.
    pub fn pauli_terms(&self, n: usize, convention: AtaConvention) -> Result<Vec<PauliTerm>> {
        self.validate(n)?;
        let mut terms = Vec::new();
        if let HamiltonianSpec::FieldZ { h } = *self {
            for site in 1..=n {
                terms.push(PauliTerm::single(site, PauliAxis::Z, h)?);
            }
            return Ok(terms);
        }
        let strength = self.strength();
        let couplings: Vec<(PauliAxis, f64)> = match self.gamma() {
            None => vec![(PauliAxis::X, 1.0)],
            Some(g) => vec![(PauliAxis::X, 1.0 + g), (PauliAxis::Y, 1.0 - g)],
        };
        for (k, a, b) in ring_pairs(n, self.effective_range(n)?, convention) {
            let decay = 0.5f64.powi(k as i32 - 1);
            for &(axis, weight) in &couplings {
                terms.push(PauliTerm::pair(a, b, axis, strength * decay * weight)?);
            }
        }
        Ok(terms)
    }
}

/// `(distance, site_a, site_b)` for every bond up to ring distance `range`.
///
/// Under [`AtaConvention::SingleCount`] the antipodal distance `N/2` on an
/// even ring is visited for `j = 1..N/2` only, so each pair occurs once.
pub fn ring_pairs(n: usize, range: usize, convention: AtaConvention) -> Vec<(usize, usize, usize)> {
    let mut pairs = Vec::new();
    for k in 1..=range {
        let starts = if convention == AtaConvention::SingleCount && 2 * k == n {
            n / 2
        } else {
            n
        };
        for j in 1..=starts {
            pairs.push((k, j, (j - 1 + k) % n + 1));
        }
    }
    pairs
}

/// Interaction range `K` that includes every pair once on a ring of `n`.
pub fn interaction_range(n: usize) -> Result<usize> {
    if n < MIN_INTERACTING_SITES {
        return Err(Error::param(
            "N",
            format!("interaction range needs N >= {MIN_INTERACTING_SITES}, got {n}"),
        ));
    }
    Ok(if n % 2 == 1 { (n - 1) / 2 } else { n / 2 })
}

/// The matrix of `spec` on `n` sites, with single-counted antipodal pairs.
pub fn build(spec: &HamiltonianSpec, n: usize) -> Result<SparseOperator> {
    build_with(spec, n, AtaConvention::SingleCount)
}

pub fn build_with(spec: &HamiltonianSpec, n: usize, convention: AtaConvention) -> Result<SparseOperator> {
    assemble(&spec.pauli_terms(n, convention)?, n)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaRange {
    /// `λ ∈ [0, 1]`
    #[default]
    Canonical,
    /// `λ ∈ [0, 5]`
    Extended,
}

impl LambdaRange {
    pub fn upper(self) -> f64 {
        match self {
            LambdaRange::Canonical => 1.0,
            LambdaRange::Extended => 5.0,
        }
    }
}

/// When the charger is switched off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargingWindow {
    /// Charger stays on for the whole run.
    #[default]
    AlwaysOn,
    /// Charger switched off at this time.
    Until(f64),
}

impl ChargingWindow {
    /// End of the charging segment, `None` when always on.
    pub fn end(self) -> Option<f64> {
        match self {
            ChargingWindow::AlwaysOn => None,
            ChargingWindow::Until(t) => Some(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolPhase {
    BeforeCharging,
    Charging,
    AfterCharging,
}

/// Battery, charger, countereffect strength and charging window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub battery: HamiltonianSpec,
    pub charger: HamiltonianSpec,
    pub lambda: f64,
    pub t_on: ChargingWindow,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda_range: LambdaRange,
    pub ata_convention: AtaConvention,
}

impl ProtocolSpec {
    /// Canonical-range protocol at `λ = 0` with the charger always on.
    pub fn new(battery: HamiltonianSpec, charger: HamiltonianSpec, n: usize) -> Self {
        ProtocolSpec {
            battery,
            charger,
            lambda: 0.0,
            t_on: ChargingWindow::AlwaysOn,
            n,
            lambda_range: LambdaRange::Canonical,
            ata_convention: AtaConvention::SingleCount,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_t_on(mut self, t_on: ChargingWindow) -> Self {
        self.t_on = t_on;
        self
    }

    pub fn extended(mut self) -> Self {
        self.lambda_range = LambdaRange::Extended;
        self
    }

    pub fn with_convention(mut self, convention: AtaConvention) -> Self {
        self.ata_convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.battery.validate(self.n)?;
        self.charger.validate(self.n)?;
        let upper = self.lambda_range.upper();
        if !(self.lambda.is_finite() && (0.0..=upper).contains(&self.lambda)) {
            let hint = match self.lambda_range {
                LambdaRange::Canonical => " (enable the extended range for values above 1)",
                LambdaRange::Extended => "",
            };
            return Err(Error::param(
                "lambda",
                format!("{} outside [0, {upper}]{hint}", self.lambda),
            ));
        }
        if let ChargingWindow::Until(t) = self.t_on {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::param("t_on", format!("{t} must be positive")));
            }
        }
        Ok(())
    }

    pub fn battery_operator(&self) -> Result<SparseOperator> {
        build_with(&self.battery, self.n, self.ata_convention)
    }

    /// The generator of the dynamics in `phase`.
    ///
    /// During charging the battery enters as `(1 − λ)·H_B`, realised by
    /// scaling its strength (`h` or `J`) before building.
    pub fn hamiltonian(&self, phase: ProtocolPhase) -> Result<SparseOperator> {
        self.validate()?;
        match phase {
            ProtocolPhase::BeforeCharging | ProtocolPhase::AfterCharging => self.battery_operator(),
            ProtocolPhase::Charging => {
                let damped = self.battery.scaled(1.0 - self.lambda);
                let mut terms = damped.pauli_terms(self.n, self.ata_convention)?;
                terms.extend(self.charger.pauli_terms(self.n, self.ata_convention)?);
                assemble(&terms, self.n)
            }
        }
    }
}

/// Free-function form of [`ProtocolSpec::hamiltonian`].
pub fn protocol_hamiltonian(p: &ProtocolSpec, phase: ProtocolPhase) -> Result<SparseOperator> {
    p.hamiltonian(phase)
}
