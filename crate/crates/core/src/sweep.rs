//! Two-dimensional parameter sweeps of time-averaged measures.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, SystemConfig, Topology};
use crate::simulation::{simulate, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Mechanical detuning; sets `right.omega_m = left.omega_m + delta`.
    Delta,
    /// Hopping in units of `left.kappa` (bidirectional only).
    LambdaOverKappa,
    /// Transmission efficiency (unidirectional only).
    Eta,
    /// Thermal occupation of both baths.
    NTh,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Delta => "delta",
            SweepParameter::LambdaOverKappa => "lambda_over_kappa",
            SweepParameter::Eta => "eta",
            SweepParameter::NTh => "n_th",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "delta" => Ok(SweepParameter::Delta),
            "lambda_over_kappa" => Ok(SweepParameter::LambdaOverKappa),
            "eta" => Ok(SweepParameter::Eta),
            "n_th" => Ok(SweepParameter::NTh),
            other => Err(Error::Sweep(format!("unknown parameter `{other}`"))),
        }
    }

    fn check_topology(&self, topology: &Topology) -> Result<()> {
        match (self, topology) {
            (SweepParameter::LambdaOverKappa, Topology::Unidirectional { .. }) => Err(
                Error::Sweep("lambda_over_kappa not applicable to a unidirectional base".into()),
            ),
            (SweepParameter::Eta, Topology::Bidirectional { .. }) => Err(Error::Sweep(
                "eta not applicable to a bidirectional base".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Writes `value` into `config`.
    ///
    /// A detuning change moves `right.delta0` along with `right.omega_m`
    /// when the base keeps them equal.
    pub fn apply(&self, config: &mut SystemConfig, value: f64) {
        match self {
            SweepParameter::Delta => {
                let tracks = config.right.delta0 == config.right.omega_m;
                config.right.omega_m = config.left.omega_m + value;
                if tracks {
                    config.right.delta0 = config.right.omega_m;
                }
            }
            SweepParameter::LambdaOverKappa => {
                if let Topology::Bidirectional { lambda } = &mut config.topology {
                    *lambda = value * config.left.kappa;
                }
            }
            SweepParameter::Eta => {
                if let Topology::Unidirectional { eta, .. } = &mut config.topology {
                    *eta = value;
                }
            }
            SweepParameter::NTh => config.bath.n_th = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(parameter: SweepParameter, min: f64, max: f64, count: usize) -> Self {
        Self {
            parameter,
            min,
            max,
            count,
        }
    }

    /// Uniform grid including both ends.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.max
                } else {
                    self.min + k as f64 * step
                }
            })
            .collect()
    }

    fn check(&self, label: &str) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Sweep(format!("{label}: count must be >= 2")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::Sweep(format!("{label}: need finite min < max")));
        }
        Ok(())
    }
}

/// Grid layout as stored in a sweep file; the base config comes separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub axis1: Axis,
    pub axis2: Axis,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub axis1: Axis,
    pub axis2: Axis,
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn new(base: SystemConfig, axes: SweepAxes) -> Self {
        Self {
            base,
            axis1: axes.axis1,
            axis2: axes.axis2,
            workers: axes.workers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.base).into_result()?;
        self.axis1.check("axis1")?;
        self.axis2.check("axis2")?;
        if self.axis1.parameter == self.axis2.parameter {
            return Err(Error::Sweep("both axes sweep the same parameter".into()));
        }
        self.axis1.parameter.check_topology(&self.base.topology)?;
        self.axis2.parameter.check_topology(&self.base.topology)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: (usize, usize),
    pub axis1_value: f64,
    pub axis2_value: f64,
    pub config: SystemConfig,
}

/// Row-major grid (axis1 outer) of fully validated configurations.
pub fn expand(spec: &SweepSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    let (v1, v2) = (spec.axis1.values(), spec.axis2.values());
    let mut points = Vec::with_capacity(v1.len() * v2.len());
    for (i, &a) in v1.iter().enumerate() {
        for (j, &b) in v2.iter().enumerate() {
            let mut config = spec.base;
            spec.axis1.parameter.apply(&mut config, a);
            spec.axis2.parameter.apply(&mut config, b);
            validate(&config).into_result().map_err(|e| {
                Error::Sweep(format!(
                    "grid point ({}={a}, {}={b}): {e}",
                    spec.axis1.parameter.name(),
                    spec.axis2.parameter.name()
                ))
            })?;
            points.push(GridPoint {
                index: (i, j),
                axis1_value: a,
                axis2_value: b,
                config,
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub axis1_value: f64,
    pub axis2_value: f64,
    pub mean_sp: f64,
    pub mean_dg: f64,
    pub mean_en: f64,
    pub converged: bool,
    pub physical: bool,
    pub runtime_seconds: f64,
}

impl SweepRecord {
    /// Record for a point whose run failed; measures are NaN.
    pub fn failed(axis1_value: f64, axis2_value: f64, runtime_seconds: f64) -> Self {
        Self {
            axis1_value,
            axis2_value,
            mean_sp: f64::NAN,
            mean_dg: f64::NAN,
            mean_en: f64::NAN,
            converged: false,
            physical: false,
            runtime_seconds,
        }
    }

    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Sp => self.mean_sp,
            Measure::Dg => self.mean_dg,
            Measure::En => self.mean_en,
        }
    }
}

/// Runs one grid point; failures become flagged records.
pub fn run_point(point: &GridPoint) -> SweepRecord {
    let started = Instant::now();
    match simulate(&point.config) {
        Ok(sim) => {
            let s = RunSummary::from(&sim);
            SweepRecord {
                axis1_value: point.axis1_value,
                axis2_value: point.axis2_value,
                mean_sp: s.mean_sp,
                mean_dg: s.mean_dg,
                mean_en: s.mean_en,
                converged: s.converged,
                physical: s.physical,
                runtime_seconds: started.elapsed().as_secs_f64(),
            }
        }
        Err(_) => SweepRecord::failed(
            point.axis1_value,
            point.axis2_value,
            started.elapsed().as_secs_f64(),
        ),
    }
}

/// Evaluates every grid point, possibly in parallel. Output order is the
/// row-major grid order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    let points = expand(spec)?;
    let run = || points.par_iter().map(run_point).collect::<Vec<_>>();
    match spec.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Sweep(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

pub const CSV_HEADER: &str =
    "axis1_name,axis1_value,axis2_name,axis2_value,mean_Sp,mean_DG,mean_EN,converged,physical";

/// Sweep table; runtimes are left out so identical runs give identical bytes.
pub fn records_to_csv(spec: &SweepSpec, records: &[SweepRecord]) -> String {
    let (n1, n2) = (spec.axis1.parameter.name(), spec.axis2.parameter.name());
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{n1},{},{n2},{},{},{},{},{},{}",
            r.axis1_value, r.axis2_value, r.mean_sp, r.mean_dg, r.mean_en, r.converged, r.physical
        );
    }
    out
}

/// A sweep table read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis1_name: String,
    pub axis2_name: String,
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    pub fn axis1_values(&self) -> Vec<f64> {
        distinct(self.records.iter().map(|r| r.axis1_value))
    }

    pub fn axis2_values(&self) -> Vec<f64> {
        distinct(self.records.iter().map(|r| r.axis2_value))
    }

    /// Record at grid position `(i, j)` of the distinct axis values.
    pub fn at(&self, a1: f64, a2: f64) -> Option<&SweepRecord> {
        self.records
            .iter()
            .find(|r| r.axis1_value == a1 && r.axis2_value == a2)
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Parses a sweep CSV; errors carry the 1-based line number.
pub fn parse_csv(text: &str) -> Result<SweepTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Sweep("line 1: missing or wrong header".into())),
    }
    let mut names: Option<(String, String)> = None;
    let mut records = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Sweep(format!("line {lineno}: {what}"));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return Err(bad(&format!("expected 9 fields, found {}", f.len())));
        }
        let num = |k: usize| {
            f[k].parse::<f64>()
                .map_err(|_| bad(&format!("bad number `{}`", f[k])))
        };
        let flag = |k: usize| {
            f[k].parse::<bool>()
                .map_err(|_| bad(&format!("bad flag `{}`", f[k])))
        };
        let pair = (f[0].to_string(), f[2].to_string());
        match &names {
            None => names = Some(pair),
            Some(n) if *n != pair => return Err(bad("axis names change mid-file")),
            _ => {}
        }
        records.push(SweepRecord {
            axis1_value: num(1)?,
            axis2_value: num(3)?,
            mean_sp: num(4)?,
            mean_dg: num(5)?,
            mean_en: num(6)?,
            converged: flag(7)?,
            physical: flag(8)?,
            runtime_seconds: f64::NAN,
        });
    }
    let (axis1_name, axis2_name) = names.ok_or_else(|| Error::Sweep("no data rows".into()))?;
    Ok(SweepTable {
        axis1_name,
        axis2_name,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    Sp,
    Dg,
    En,
}

impl Measure {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "Sp" => Ok(Measure::Sp),
            "DG" => Ok(Measure::Dg),
            "EN" => Ok(Measure::En),
            other => Err(Error::Sweep(format!(
                "unknown measure `{other}` (Sp, DG, EN)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Measure::Sp => "Sp",
            Measure::Dg => "DG",
            Measure::En => "EN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub axis1_value: f64,
    pub axis2_value: f64,
}

/// Min and max of one measure over the finite grid entries.
pub fn extrema(records: &[SweepRecord], m: Measure) -> Option<(Extremum, Extremum)> {
    let finite: Vec<_> = records
        .iter()
        .filter(|r| r.measure(m).is_finite())
        .collect();
    let pick = |r: &&SweepRecord| Extremum {
        value: r.measure(m),
        axis1_value: r.axis1_value,
        axis2_value: r.axis2_value,
    };
    let lo = finite
        .iter()
        .min_by(|a, b| a.measure(m).total_cmp(&b.measure(m)))?;
    let hi = finite
        .iter()
        .max_by(|a, b| a.measure(m).total_cmp(&b.measure(m)))?;
    Some((pick(lo), pick(hi)))
}

/// Human-readable min/max summary of each measure.
pub fn summary(spec_names: (&str, &str), records: &[SweepRecord]) -> String {
    let mut out = String::new();
    let (n1, n2) = spec_names;
    for m in [Measure::Sp, Measure::Dg, Measure::En] {
        match extrema(records, m) {
            Some((lo, hi)) => {
                let _ = writeln!(
                    out,
                    "{:<2} min {:.6e} at ({n1}={}, {n2}={})  max {:.6e} at ({n1}={}, {n2}={})",
                    m.label(),
                    lo.value,
                    lo.axis1_value,
                    lo.axis2_value,
                    hi.value,
                    hi.axis1_value,
                    hi.axis2_value
                );
            }
            None => {
                let _ = writeln!(out, "{:<2} no finite values", m.label());
            }
        }
    }
    let failed = records.iter().filter(|r| r.mean_sp.is_nan()).count();
    let unconverged = records.iter().filter(|r| !r.converged).count();
    let unphysical = records.iter().filter(|r| !r.physical).count();
    let _ = writeln!(
        out,
        "{} points: {failed} failed, {unconverged} not converged, {unphysical} unphysical",
        records.len()
    );
    out
}
