//! Stored energy, average charging power, their maxima, and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PropagatorBackend, ProtocolEvolution};
use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianSpec, ProtocolSpec};

/// Uniform sampling of `[0, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub end: f64,
    pub step: f64,
    /// Subdivision used when refining a maximum; 1 disables refinement.
    pub refinement_factor: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            end: 100.0,
            step: 0.05,
            refinement_factor: 10,
        }
    }
}

impl TimeGrid {
    pub fn new(end: f64, step: f64, refinement_factor: usize) -> Result<Self> {
        let g = TimeGrid {
            end,
            step,
            refinement_factor,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.end.is_finite() && self.end > 0.0) {
            return Err(Error::param("end", format!("{} must be positive", self.end)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::param("step", format!("{} must be positive", self.step)));
        }
        if self.refinement_factor < 1 {
            return Err(Error::param("refinement_factor", "must be at least 1"));
        }
        let intervals = self.end / self.step;
        if (intervals - intervals.round()).abs() > 1e-9 * intervals.max(1.0) {
            return Err(Error::param(
                "step",
                format!("{} does not divide the end time {}", self.step, self.end),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.end / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        let last = self.len() - 1;
        (0..=last)
            .map(|i| if i == last { self.end } else { i as f64 * self.step })
            .collect()
    }
}

/// `ΔE(t)` and `P(t) = ΔE(t)/t` on a grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub power: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Energy,
    Power,
}

/// Average power up to `t`; zero at `t = 0` where `ΔE = O(t²)`.
#[inline]
fn average_power(delta_e: f64, t: f64) -> f64 {
    if t > 0.0 {
        delta_e / t
    } else {
        0.0
    }
}

/// Fills `power[i] = delta_e[i] / times[i]`, with `power[0] = 0`.
pub fn power_series(ts: &TimeSeries) -> TimeSeries {
    TimeSeries {
        times: ts.times.clone(),
        delta_e: ts.delta_e.clone(),
        power: ts
            .times
            .iter()
            .zip(&ts.delta_e)
            .map(|(&t, &e)| average_power(e, t))
            .collect(),
    }
}

/// Grid maximum of the chosen quantity; ties go to the earliest time.
pub fn max_over_time(ts: &TimeSeries, which: Quantity) -> Result<(f64, f64)> {
    let values = match which {
        Quantity::Energy => &ts.delta_e,
        Quantity::Power => &ts.power,
    };
    if values.is_empty() || values.len() != ts.times.len() {
        return Err(Error::param("series", "empty or ragged time series"));
    }
    let (i, v) = argmax_first(values.iter().copied());
    Ok((ts.times[i], v))
}

fn argmax_first(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// A refined maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub value: f64,
    /// The maximum sits on the last grid time; the grid may be too short.
    pub at_boundary: bool,
}

/// One protocol evaluated on a grid, able to resample between grid points.
pub struct ChargingRun {
    evolution: ProtocolEvolution,
    grid: TimeGrid,
    series: TimeSeries,
}

impl ChargingRun {
    pub fn new(p: &ProtocolSpec, grid: &TimeGrid, backend: &PropagatorBackend) -> Result<Self> {
        grid.validate()?;
        let mut evolution = ProtocolEvolution::new(p, backend)?;
        let times = grid.times();
        let delta_e = times
            .iter()
            .map(|&t| evolution.stored_energy(t))
            .collect::<Result<Vec<_>>>()?;
        let series = power_series(&TimeSeries {
            times,
            delta_e,
            power: Vec::new(),
        });
        Ok(ChargingRun {
            evolution,
            grid: *grid,
            series,
        })
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn into_series(self) -> TimeSeries {
        self.series
    }

    pub fn evolution(&mut self) -> &mut ProtocolEvolution {
        &mut self.evolution
    }

    /// Grid maximum, then a `refinement_factor`-times finer scan of the two
    /// neighbouring intervals. Ties go to the earliest time.
    pub fn peak(&mut self, which: Quantity) -> Result<Peak> {
        let (t_grid, v_grid) = max_over_time(&self.series, which)?;
        let mut best = (t_grid, v_grid);
        let factor = self.grid.refinement_factor;
        if factor > 1 {
            let times = &self.series.times;
            let i = times.iter().position(|&t| t == t_grid).expect("grid time");
            let lo = times[i.saturating_sub(1)];
            let hi = times[(i + 1).min(times.len() - 1)];
            let fine = self.grid.step / factor as f64;
            let count = ((hi - lo) / fine).round() as usize;
            let mut candidates = Vec::with_capacity(count + 1);
            for q in 0..=count {
                let t = if q == count { hi } else { lo + q as f64 * fine };
                let e = self.evolution.stored_energy(t)?;
                let v = match which {
                    Quantity::Energy => e,
                    Quantity::Power => average_power(e, t),
                };
                candidates.push((t, v));
            }
            for (t, v) in candidates {
                if v > best.1 || (v == best.1 && t < best.0) {
                    best = (t, v);
                }
            }
        }
        Ok(Peak {
            t: best.0,
            value: best.1,
            at_boundary: best.0 >= self.grid.end,
        })
    }

    pub fn record(&mut self, parameter: SweepParameter, value: f64) -> Result<SweepRecord> {
        let e = self.peak(Quantity::Energy)?;
        let p = self.peak(Quantity::Power)?;
        Ok(SweepRecord {
            parameter,
            value,
            delta_e_max: e.value,
            t_at_e_max: e.t,
            p_max: p.value,
            t_at_p_max: p.t,
            boundary_max: e.at_boundary || p.at_boundary,
        })
    }
}

/// `ΔE` and `P` of the protocol on the grid.
pub fn stored_energy_series(p: &ProtocolSpec, grid: &TimeGrid, backend: &PropagatorBackend) -> Result<TimeSeries> {
    Ok(ChargingRun::new(p, grid, backend)?.into_series())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "J")]
    J,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::N => "N",
            SweepParameter::J => "J",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lambda" => Some(SweepParameter::Lambda),
            "N" => Some(SweepParameter::N),
            "J" => Some(SweepParameter::J),
            _ => None,
        }
    }

    /// `base` with this parameter set to `value`.
    ///
    /// A `J` sweep acts on the battery when it is interacting, otherwise on
    /// the charger. An `N` sweep re-derives the all-to-all range.
    pub fn apply(self, base: &ProtocolSpec, value: f64) -> Result<ProtocolSpec> {
        let mut p = *base;
        match self {
            SweepParameter::Lambda => p.lambda = value,
            SweepParameter::N => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::param("N", format!("{value} is not a positive integer")));
                }
                p.n = value as usize;
                p.battery = p.battery.with_range(None);
                p.charger = p.charger.with_range(None);
            }
            SweepParameter::J => {
                let target: &mut HamiltonianSpec = if p.battery.family().is_interacting() {
                    &mut p.battery
                } else if p.charger.family().is_interacting() {
                    &mut p.charger
                } else {
                    return Err(Error::param("J", "neither battery nor charger has a coupling"));
                };
                *target = target.with_strength(value);
            }
        }
        p.validate()?;
        Ok(p)
    }
}

/// Maxima of one sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub parameter: SweepParameter,
    pub value: f64,
    pub delta_e_max: f64,
    pub t_at_e_max: f64,
    pub p_max: f64,
    pub t_at_p_max: f64,
    pub boundary_max: bool,
}

#[derive(Debug)]
pub struct SweepFailure {
    pub value: f64,
    pub error: Error,
}

/// Records for the points that succeeded, in input order, and the first
/// failing point if any.
#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub series: Vec<TimeSeries>,
    pub failure: Option<SweepFailure>,
}

impl SweepOutcome {
    pub fn into_result(self) -> Result<Vec<SweepRecord>> {
        match self.failure {
            Some(f) => Err(f.error),
            None => Ok(self.records),
        }
    }
}

/// Evaluates every point independently (in parallel) and merges in input order.
pub fn sweep(
    base: &ProtocolSpec,
    parameter: SweepParameter,
    values: &[f64],
    grid: &TimeGrid,
    backend: &PropagatorBackend,
    keep_series: bool,
) -> SweepOutcome {
    let results: Vec<Result<(SweepRecord, Option<TimeSeries>)>> = values
        .par_iter()
        .map(|&v| {
            let p = parameter.apply(base, v)?;
            let mut run = ChargingRun::new(&p, grid, backend)?;
            let record = run.record(parameter, v)?;
            Ok((record, keep_series.then(|| run.into_series())))
        })
        .collect();
    let mut outcome = SweepOutcome {
        records: Vec::new(),
        series: Vec::new(),
        failure: None,
    };
    for (&v, r) in values.iter().zip(results) {
        match r {
            Ok((rec, s)) => {
                outcome.records.push(rec);
                outcome.series.extend(s);
            }
            Err(error) if outcome.failure.is_none() => outcome.failure = Some(SweepFailure { value: v, error }),
            Err(_) => {}
        }
    }
    outcome
}

pub fn sweep_lambda(
    base: &ProtocolSpec,
    lambdas: &[f64],
    grid: &TimeGrid,
    backend: &PropagatorBackend,
) -> Result<Vec<SweepRecord>> {
    sweep(base, SweepParameter::Lambda, lambdas, grid, backend, false).into_result()
}

pub fn sweep_size(
    base: &ProtocolSpec,
    sizes: &[usize],
    grid: &TimeGrid,
    backend: &PropagatorBackend,
) -> Result<Vec<SweepRecord>> {
    let values: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    sweep(base, SweepParameter::N, &values, grid, backend, false).into_result()
}

/// Per-`J` records and the fit of `P_max` against `log₁₀ J`.
pub fn sweep_coupling(
    base: &ProtocolSpec,
    j_values: &[f64],
    grid: &TimeGrid,
    backend: &PropagatorBackend,
) -> Result<(Vec<SweepRecord>, LinearFit)> {
    if let Some(&bad) = j_values.iter().find(|&&j| j.is_nan() || j <= 0.0) {
        return Err(Error::param("J", format!("{bad} has no logarithm")));
    }
    let records = sweep(base, SweepParameter::J, j_values, grid, backend, false).into_result()?;
    let fit = log10_fit(&records)?;
    Ok((records, fit))
}

/// Least-squares fit of `p_max` against `log₁₀(value)`.
pub fn log10_fit(records: &[SweepRecord]) -> Result<LinearFit> {
    let xs: Vec<f64> = records.iter().map(|r| r.value.log10()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.p_max).collect();
    linear_fit(&xs, &ys)
}

/// `y ≈ slope·x + intercept` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
}

/// The fit of `P_max` against `log₁₀ J`.
pub type LogFit = LinearFit;

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::param("fit", "x and y lengths differ"));
    }
    if xs.len() < 3 {
        return Err(Error::param(
            "fit",
            format!("needs at least 3 points, got {}", xs.len()),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::param("fit", "all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// One battery/charger pairing with and without the countereffect.
#[derive(Clone, Debug)]
pub struct PairingOutcome {
    pub without: TimeSeries,
    pub with: TimeSeries,
    pub without_record: SweepRecord,
    pub with_record: SweepRecord,
}

/// Runs `λ = 0` and `λ = 1` for the given pairing on `n` sites.
pub fn run_pairing(
    battery: HamiltonianSpec,
    charger: HamiltonianSpec,
    n: usize,
    grid: &TimeGrid,
    backend: &PropagatorBackend,
) -> Result<PairingOutcome> {
    let base = ProtocolSpec::new(battery, charger, n);
    let outcome = sweep(&base, SweepParameter::Lambda, &[0.0, 1.0], grid, backend, true);
    if let Some(f) = outcome.failure {
        return Err(f.error);
    }
    let mut series = outcome.series.into_iter();
    let mut records = outcome.records.into_iter();
    Ok(PairingOutcome {
        without: series.next().expect("two points"),
        with: series.next().expect("two points"),
        without_record: records.next().expect("two points"),
        with_record: records.next().expect("two points"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(times: &[f64], delta_e: &[f64]) -> TimeSeries {
        power_series(&TimeSeries {
            times: times.to_vec(),
            delta_e: delta_e.to_vec(),
            power: Vec::new(),
        })
    }

    #[test]
    fn grid_times() {
        let g = TimeGrid::new(1.0, 0.25, 1).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(TimeGrid::default().len(), 2001);
        assert!(TimeGrid::new(1.0, 0.3, 1).is_err());
        assert!(TimeGrid::new(-1.0, 0.1, 1).is_err());
        assert!(TimeGrid::new(1.0, 0.1, 0).is_err());
    }

    #[test]
    fn power_of_linear_energy_is_constant() {
        let ts = synthetic(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.5, 5.0, 7.5]);
        assert_eq!(ts.power, vec![0.0, 2.5, 2.5, 2.5]);
        let ts = synthetic(&[0.0, 2.0], &[0.0, 6.0]);
        assert_eq!(ts.power[1], 3.0);
        let ts = synthetic(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]);
        assert_eq!(ts.power, vec![0.0; 3]);
    }

    #[test]
    fn grid_maximum_with_ties() {
        let ts = synthetic(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 3.0, 2.0]);
        assert_eq!(max_over_time(&ts, Quantity::Energy).unwrap(), (2.0, 3.0));
        let zero = synthetic(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]);
        assert_eq!(max_over_time(&zero, Quantity::Energy).unwrap(), (0.0, 0.0));
        assert_eq!(max_over_time(&zero, Quantity::Power).unwrap(), (0.0, 0.0));
        assert!(max_over_time(&TimeSeries::default(), Quantity::Energy).is_err());
    }

    #[test]
    fn exact_line_recovery() {
        let js = [0.1f64, 1.0, 10.0];
        let xs: Vec<f64> = js.iter().map(|j| j.log10()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 5.0 * x + 2.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 5.0).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&xs[..2], &ys[..2]).is_err());
    }

    #[test]
    fn fit_json_uses_short_names() {
        let fit = LinearFit {
            slope: 1.0,
            intercept: 2.0,
            r_squared: 0.5,
        };
        let json = serde_json::to_value(fit).unwrap();
        assert_eq!(json, serde_json::json!({"slope": 1.0, "intercept": 2.0, "r2": 0.5}));
    }

    #[test]
    fn sweep_parameter_application() {
        let base = ProtocolSpec::new(HamiltonianSpec::ising_nn(1.0), HamiltonianSpec::field_z(1.0), 6);
        let p = SweepParameter::J.apply(&base, 2.0).unwrap();
        assert_eq!(p.battery, HamiltonianSpec::ising_nn(2.0));
        assert!(SweepParameter::N.apply(&base, 2.0).is_err());
        assert!(SweepParameter::N.apply(&base, 6.5).is_err());
        assert!(SweepParameter::Lambda.apply(&base, 1.2).is_err());
        let ata = ProtocolSpec::new(
            HamiltonianSpec::field_z(1.0),
            HamiltonianSpec::IsingATA { j: 1.0, range: Some(2) },
            6,
        );
        let p = SweepParameter::N.apply(&ata, 9.0).unwrap();
        assert_eq!(p.charger.range(), None);
        let field_only = ProtocolSpec::new(HamiltonianSpec::field_z(1.0), HamiltonianSpec::field_z(0.0), 4);
        assert!(SweepParameter::J.apply(&field_only, 1.0).is_err());
    }

    #[test]
    fn undriven_sweep_stores_nothing() {
        let base = ProtocolSpec::new(HamiltonianSpec::field_z(1.0), HamiltonianSpec::field_z(0.0), 4);
        let grid = TimeGrid::new(5.0, 0.5, 2).unwrap();
        let recs = sweep_lambda(&base, &[0.0], &grid, &PropagatorBackend::dense()).unwrap();
        assert!(recs[0].delta_e_max.abs() < 1e-12);
    }

    #[test]
    fn sweep_reports_failing_point_and_keeps_the_rest() {
        let base = ProtocolSpec::new(HamiltonianSpec::field_z(1.0), HamiltonianSpec::ising_nn(1.0), 4);
        let grid = TimeGrid::new(2.0, 0.5, 1).unwrap();
        let out = sweep(
            &base,
            SweepParameter::Lambda,
            &[0.0, 3.0, 1.0],
            &grid,
            &PropagatorBackend::dense(),
            false,
        );
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.failure.as_ref().unwrap().value, 3.0);
    }

    #[test]
    fn coupling_sweep_needs_positive_couplings() {
        let base = ProtocolSpec::new(HamiltonianSpec::ising_nn(1.0), HamiltonianSpec::field_z(1.0), 4);
        let grid = TimeGrid::new(2.0, 0.5, 1).unwrap();
        assert!(sweep_coupling(&base, &[0.0, 1.0, 2.0], &grid, &PropagatorBackend::dense()).is_err());
        assert!(sweep_coupling(&base, &[1.0, 2.0], &grid, &PropagatorBackend::dense()).is_err());
    }

    #[test]
    fn identical_battery_and_charger_at_full_countereffect_store_nothing() {
        let spec = HamiltonianSpec::ising_nn(1.0);
        let grid = TimeGrid::new(10.0, 0.1, 1).unwrap();
        let out = run_pairing(spec, spec, 6, &grid, &PropagatorBackend::dense()).unwrap();
        for e in &out.with.delta_e {
            assert!(e.abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_never_lowers_the_maximum() {
        let p = ProtocolSpec::new(HamiltonianSpec::field_z(1.0), HamiltonianSpec::ising_ata(1.0), 6).with_lambda(0.6);
        let grid = TimeGrid::new(10.0, 0.2, 10).unwrap();
        let mut run = ChargingRun::new(&p, &grid, &PropagatorBackend::dense()).unwrap();
        for q in [Quantity::Energy, Quantity::Power] {
            let (_, coarse) = max_over_time(run.series(), q).unwrap();
            let peak = run.peak(q).unwrap();
            assert!(peak.value >= coarse - 1e-12);
        }
    }
}
