//! Named experiment bindings, one per figure panel.

use std::path::PathBuf;

use super::config::{ExperimentConfig, OutputSpec, SweepSpec, DEFAULT_OUTPUT_DIR};
use crate::dynamics::PropagatorBackend;
use crate::hamiltonians::{HamiltonianSpec, ProtocolSpec};
use crate::metrics::{SweepParameter, TimeGrid};

const GAMMA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Sweep {
    Lambda(&'static [f64]),
    LambdaSteps { stop: f64, step: f64 },
    N(&'static [usize]),
    J(&'static [f64]),
}

/// A named, fixed experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FigurePreset {
    pub name: &'static str,
    /// Figure panel reproduced by this preset.
    pub panel: &'static str,
    battery: HamiltonianSpec,
    charger: HamiltonianSpec,
    n: usize,
    lambda: f64,
    extended: bool,
    sweep: Sweep,
    series: bool,
}

const CANONICAL_LAMBDAS: &[f64] = &[0.0, 0.25, 0.5, 0.75, 1.0];
const WITH_AND_WITHOUT: &[f64] = &[0.0, 1.0];
const COUPLINGS: &[f64] = &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const ODD_SIZES: &[usize] = &[3, 5, 7, 9, 11];
const EVEN_SIZES: &[usize] = &[4, 6, 8, 10, 12];
const ALL_SIZES: &[usize] = &[4, 5, 6, 7, 8, 9, 10, 11, 12];

const FIELD: HamiltonianSpec = HamiltonianSpec::FieldZ { h: 1.0 };
const ISING_NN: HamiltonianSpec = HamiltonianSpec::IsingNN { j: 1.0 };
const ISING_ATA: HamiltonianSpec = HamiltonianSpec::IsingATA { j: 1.0, range: None };
const XY_NN: HamiltonianSpec = HamiltonianSpec::XYNN { j: 1.0, gamma: GAMMA };
const XY_ATA: HamiltonianSpec = HamiltonianSpec::XYATA {
    j: 1.0,
    gamma: GAMMA,
    range: None,
};

#[allow(clippy::too_many_arguments)]
const fn preset(
    name: &'static str,
    panel: &'static str,
    battery: HamiltonianSpec,
    charger: HamiltonianSpec,
    n: usize,
    lambda: f64,
    sweep: Sweep,
    series: bool,
) -> FigurePreset {
    FigurePreset {
        name,
        panel,
        battery,
        charger,
        n,
        lambda,
        extended: false,
        sweep,
        series,
    }
}

const fn extended(mut p: FigurePreset) -> FigurePreset {
    p.extended = true;
    p
}

/// Every preset, in listing order.
pub const PRESETS: [FigurePreset; 21] = [
    preset(
        "fig2a",
        "2(a)",
        FIELD,
        ISING_ATA,
        10,
        0.0,
        Sweep::Lambda(CANONICAL_LAMBDAS),
        true,
    ),
    preset(
        "fig2b",
        "2(b)",
        FIELD,
        ISING_ATA,
        10,
        0.0,
        Sweep::Lambda(CANONICAL_LAMBDAS),
        true,
    ),
    preset("fig2c1", "2(c1)", FIELD, ISING_ATA, 10, 1.0, Sweep::N(ODD_SIZES), true),
    preset("fig2c2", "2(c2)", FIELD, ISING_ATA, 10, 1.0, Sweep::N(EVEN_SIZES), true),
    preset("fig2d", "2(d)", FIELD, ISING_ATA, 10, 1.0, Sweep::N(ALL_SIZES), true),
    preset(
        "fig3a",
        "3(a)",
        FIELD,
        ISING_ATA,
        10,
        0.0,
        Sweep::Lambda(CANONICAL_LAMBDAS),
        false,
    ),
    preset(
        "fig3b",
        "3(b)",
        FIELD,
        ISING_ATA,
        10,
        0.0,
        Sweep::Lambda(CANONICAL_LAMBDAS),
        false,
    ),
    preset("fig3c", "3(c)", FIELD, ISING_ATA, 10, 1.0, Sweep::N(ALL_SIZES), false),
    preset("fig3d", "3(d)", FIELD, ISING_ATA, 10, 1.0, Sweep::N(ALL_SIZES), false),
    preset(
        "fig4a",
        "4(a)",
        ISING_NN,
        FIELD,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset(
        "fig4b",
        "4(b)",
        ISING_NN,
        FIELD,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset(
        "fig4c",
        "4(c)",
        XY_NN,
        FIELD,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset(
        "fig4d",
        "4(d)",
        XY_NN,
        FIELD,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset("fig5a", "5(a)", ISING_NN, FIELD, 12, 0.0, Sweep::J(COUPLINGS), true),
    preset("fig5b", "5(b)", ISING_NN, FIELD, 12, 0.0, Sweep::J(COUPLINGS), true),
    preset(
        "fig6a",
        "6(a)",
        ISING_NN,
        XY_NN,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset(
        "fig6b",
        "6(b)",
        ISING_NN,
        XY_NN,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset(
        "fig6c",
        "6(c)",
        XY_NN,
        ISING_NN,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    preset(
        "fig6d",
        "6(d)",
        XY_NN,
        ISING_NN,
        12,
        0.0,
        Sweep::Lambda(WITH_AND_WITHOUT),
        true,
    ),
    extended(preset(
        "fig7a",
        "7(a)",
        FIELD,
        ISING_ATA,
        10,
        0.0,
        Sweep::LambdaSteps { stop: 5.0, step: 0.1 },
        false,
    )),
    extended(preset(
        "fig7b",
        "7(b)",
        FIELD,
        XY_ATA,
        10,
        0.0,
        Sweep::LambdaSteps { stop: 5.0, step: 0.1 },
        false,
    )),
];

pub fn find(name: &str) -> Option<&'static FigurePreset> {
    PRESETS.iter().find(|p| p.name == name)
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_spec(spec: &HamiltonianSpec) -> String {
    match spec.gamma() {
        Some(g) => format!("{}(gamma={g})", spec.family()),
        None => spec.family().to_string(),
    }
}

impl FigurePreset {
    fn sweep_spec(&self) -> SweepSpec {
        let (parameter, values) = match self.sweep {
            Sweep::Lambda(v) => (SweepParameter::Lambda, v.to_vec()),
            Sweep::LambdaSteps { stop, step } => {
                let count = (stop / step).round() as usize;
                // i/10 rather than i·0.1 keeps the values exactly representable in print.
                let per_unit = (1.0 / step).round();
                (
                    SweepParameter::Lambda,
                    (0..=count).map(|i| i as f64 / per_unit).collect(),
                )
            }
            Sweep::N(v) => (SweepParameter::N, v.iter().map(|&n| n as f64).collect()),
            Sweep::J(v) => (SweepParameter::J, v.to_vec()),
        };
        SweepSpec { parameter, values }
    }

    /// The resolved experiment this preset stands for.
    pub fn config(&self) -> ExperimentConfig {
        let mut protocol = ProtocolSpec::new(self.battery, self.charger, self.n).with_lambda(self.lambda);
        if self.extended {
            protocol = protocol.extended();
        }
        ExperimentConfig {
            preset: Some(self.name.to_string()),
            protocol,
            grid: TimeGrid::default(),
            backend: PropagatorBackend::default(),
            sweep: Some(self.sweep_spec()),
            output: OutputSpec {
                dir: PathBuf::from(DEFAULT_OUTPUT_DIR).join(self.name),
                series: self.series,
            },
            seed: 0,
        }
    }

    /// One-line parameter summary, e.g.
    /// `battery=IsingNN charger=FieldZ lambda=0 sweep=J values=...`.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "battery={} charger={}",
            fmt_spec(&self.battery),
            fmt_spec(&self.charger)
        );
        let fixed_n = !matches!(self.sweep, Sweep::N(_));
        let fixed_lambda = !matches!(self.sweep, Sweep::Lambda(_) | Sweep::LambdaSteps { .. });
        if fixed_lambda {
            s += &format!(" lambda={}", fmt_num(self.lambda));
        }
        match self.sweep {
            Sweep::Lambda(v) => s += &format!(" sweep=lambda values={}", fmt_list(v)),
            Sweep::LambdaSteps { stop, step } => s += &format!(" sweep=lambda values=0:{step}:{stop}"),
            Sweep::N(v) => {
                let parity = if v.iter().all(|n| n % 2 == 1) {
                    " (odd)"
                } else if v.iter().all(|n| n % 2 == 0) {
                    " (even)"
                } else {
                    ""
                };
                s += &format!(" sweep=N values={}{parity}", fmt_list(v));
            }
            Sweep::J(v) => s += &format!(" sweep=J values={}", fmt_list(v)),
        }
        if fixed_n {
            s += &format!(" N={}", self.n);
        }
        if self.extended {
            s += " extended_lambda";
        }
        s
    }
}

/// A row of the preset listing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresetRow {
    pub name: &'static str,
    pub summary: String,
    pub panel: &'static str,
}

/// Every preset with its parameters and figure panel, in a fixed order.
pub fn list_presets() -> Vec<PresetRow> {
    PRESETS
        .iter()
        .map(|p| PresetRow {
            name: p.name,
            summary: p.summary(),
            panel: p.panel,
        })
        .collect()
}
