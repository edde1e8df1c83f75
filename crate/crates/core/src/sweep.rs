//! Parameter sweeps over the RIS size, the BS array size or a common
//! impairment level, and their CSV persistence.
//!
//! CSV layout (UTF-8, LF): comment lines starting with `#` carry the
//! scenario hash, seed and angles, followed by one header row and one row per
//! (value, arm) with the columns of [`COLUMNS`]. `user_rates` holds the
//! per-user analytic rates separated by `;`. Monte-Carlo and timing columns
//! are empty when not requested.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytic::RateModel;
use crate::channel::rng_for;
use crate::config::{exact_sqrt, Angles, PhaseVector, ScenarioGeometry, SystemConfig};
use crate::error::{Error, Result};
use crate::ga::{fitness, optimize_seeded, refine, GaConfig, Objective};
use crate::mc::{HwiTreatment, McEstimate, MonteCarlo, RateMode};
use crate::scenario::Scenario;

pub const COLUMNS: [&str; 12] = [
    "var",
    "value",
    "arm",
    "objective",
    "seed",
    "sum_rate",
    "min_rate",
    "user_rates",
    "mc_sum_rate",
    "mc_std_error",
    "mc_tolerance",
    "wall_time_s",
];

/// Allowed |analytic - MC| per user, in bits/s/Hz.
pub const MC_TOLERANCE_PER_USER: f64 = 0.1;

/// Grid density and sweep cap of the optional local refinement.
const REFINE_LEVELS: usize = 64;
const REFINE_SWEEPS: usize = 200;

/// RNG stream for random-phase baselines.
const RANDOM_PHASE_STREAM: u64 = 0x72616e64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// RIS element count N.
    Elements,
    /// BS antenna count M.
    Antennas,
    /// Common level of k_r, k_u and k_b.
    Hwi,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Elements => "N",
            SweepVar::Antennas => "M",
            SweepVar::Hwi => "k_hwi",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" | "elements" => Ok(SweepVar::Elements),
            "M" | "m" | "antennas" => Ok(SweepVar::Antennas),
            "k_hwi" | "hwi" => Ok(SweepVar::Hwi),
            _ => Err(Error::InvalidConfig(format!("unknown sweep variable `{s}` (expected N|M|k_hwi)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub values: Vec<f64>,
    pub objective: Objective,
    /// GA-optimize phases; otherwise a seeded random phase vector is used.
    /// The impairment sweep always optimizes.
    pub optimize: bool,
    /// Polish GA results with coordinate-wise local search.
    pub refine: bool,
    /// Monte-Carlo validation draws per row.
    pub mc_samples: Option<usize>,
    pub seed: u64,
    /// Record wall time per row; leaves output non-reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub var: String,
    pub value: f64,
    pub arm: String,
    pub objective: String,
    pub seed: u64,
    pub sum_rate: f64,
    pub min_rate: f64,
    pub user_rates: Vec<f64>,
    pub mc: Option<McEstimate>,
    pub mc_tolerance: Option<f64>,
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario_hash: String,
    pub seed: u64,
    pub angles: Angles,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows of one arm, in sweep order.
    pub fn arm(&self, arm: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.arm == arm).collect()
    }
}

fn check_values(var: SweepVar, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    for &v in values {
        match var {
            SweepVar::Elements | SweepVar::Antennas => {
                let square = v >= 1.0 && v.fract() == 0.0 && exact_sqrt(v as usize).is_some();
                if !square {
                    return Err(Error::Dimension(format!("{} = {v} is not a perfect square", var.name())));
                }
            }
            SweepVar::Hwi => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidConfig(format!("impairment level {v} outside [0, 1]")));
                }
            }
        }
    }
    Ok(())
}

struct Arm {
    name: &'static str,
    config: SystemConfig,
    geometry: ScenarioGeometry,
    phases: PhaseVector,
}

struct Point<'a> {
    spec: &'a SweepSpec,
    ga: GaConfig,
}

impl Point<'_> {
    fn random_phases(&self, n: usize) -> PhaseVector {
        PhaseVector::random(n, &mut rng_for(self.spec.seed, RANDOM_PHASE_STREAM))
    }

    fn optimized(&self, config: &SystemConfig, geometry: &ScenarioGeometry) -> Result<PhaseVector> {
        self.optimized_from(config, geometry, &[])
    }

    /// GA (seeded with `initial`), then optional refinement.
    fn optimized_from(&self, config: &SystemConfig, geometry: &ScenarioGeometry, initial: &[PhaseVector]) -> Result<PhaseVector> {
        let model = RateModel::new(config, geometry)?;
        let objective = self.spec.objective;
        let f = |p: &PhaseVector| fitness(objective, &model, p);
        let best = optimize_seeded(config.elements, &self.ga, initial, f)?.best;
        if !self.spec.refine {
            return Ok(best);
        }
        let (levels, on_grid) = match self.ga.phase_grid {
            Some(g) => (g, true),
            None => (REFINE_LEVELS, false),
        };
        Ok(refine(&best, levels, on_grid, REFINE_SWEEPS, f)?.0)
    }

    fn arms(&self, value: f64, scenario: &Scenario) -> Result<Vec<Arm>> {
        let mut config = scenario.config.clone();
        let geometry = scenario.geometry.clone();
        let mut arms = Vec::new();
        match self.spec.var {
            SweepVar::Elements | SweepVar::Antennas => {
                if self.spec.var == SweepVar::Elements {
                    config.elements = value as usize;
                } else {
                    config.antennas = value as usize;
                }
                let no_direct = ScenarioGeometry { direct_gain: vec![0.0; config.users], ..geometry.clone() };
                let variants: Vec<(&str, &str, ScenarioGeometry)> = if self.spec.var == SweepVar::Antennas {
                    vec![("optimized/direct", "random/direct", geometry), ("optimized/no-direct", "random/no-direct", no_direct)]
                } else {
                    vec![("optimized", "random", geometry)]
                };
                for (opt_name, rand_name, geom) in variants {
                    if self.spec.optimize {
                        let phases = self.optimized(&config, &geom)?;
                        arms.push(Arm { name: opt_name, config: config.clone(), geometry: geom.clone(), phases });
                    }
                    let phases = self.random_phases(config.elements);
                    arms.push(Arm { name: rand_name, config: config.clone(), geometry: geom, phases });
                }
            }
            SweepVar::Hwi => {
                let impaired = config.with_impairments(value);
                let ideal = config.with_impairments(0.0);
                let ignorant = self.optimized(&ideal, &geometry)?;
                // The aware design starts from the ignorant one, so it can
                // only match or improve on it.
                let aware = self.optimized_from(&impaired, &geometry, std::slice::from_ref(&ignorant))?;
                arms.push(Arm { name: "aware", config: impaired.clone(), geometry: geometry.clone(), phases: aware });
                arms.push(Arm { name: "ignorant", config: impaired, geometry, phases: ignorant });
            }
        }
        Ok(arms)
    }

    fn rows(&self, value: f64, scenario: &Scenario) -> Result<Vec<SweepRow>> {
        let start = Instant::now();
        let arms = self.arms(value, scenario)?;
        let mut rows = Vec::with_capacity(arms.len());
        for arm in arms {
            let b = RateModel::new(&arm.config, &arm.geometry)?.breakdown(&arm.phases)?;
            let mc = match self.spec.mc_samples {
                Some(n) => Some(
                    MonteCarlo::new(&arm.geometry, &arm.config)?
                        .ergodic_rates(&arm.phases, n, self.spec.seed, RateMode::Instantaneous, HwiTreatment::Conditional)?
                        .sum,
                ),
                None => None,
            };
            rows.push(SweepRow {
                var: self.spec.var.name().to_string(),
                value,
                arm: arm.name.to_string(),
                objective: self.spec.objective.name().to_string(),
                seed: self.spec.seed,
                sum_rate: b.sum_rate(),
                min_rate: b.min_rate(),
                user_rates: b.rates(),
                mc,
                mc_tolerance: mc.map(|_| MC_TOLERANCE_PER_USER * arm.config.users as f64),
                wall_time: None,
            });
        }
        if self.spec.timing {
            let elapsed = start.elapsed().as_secs_f64();
            rows.iter_mut().for_each(|r| r.wall_time = Some(elapsed));
        }
        Ok(rows)
    }
}

/// Runs every sweep point (in parallel) and returns rows sorted by value.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<SweepResult> {
    check_values(spec.var, &spec.values)?;
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    let point = Point { spec, ga: GaConfig { seed: spec.seed, ..scenario.ga.clone() } };
    let rows: Vec<Vec<SweepRow>> = values.par_iter().map(|&v| point.rows(v, scenario)).collect::<Result<_>>()?;
    Ok(SweepResult {
        scenario_hash: scenario.hash(),
        seed: spec.seed,
        angles: scenario.geometry.angles.clone(),
        rows: rows.into_iter().flatten().collect(),
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders the CSV document.
pub fn render(result: &SweepResult) -> Result<String> {
    let a = &result.angles;
    let mut out = String::new();
    let _ = writeln!(out, "# rismimo sweep");
    let _ = writeln!(out, "# scenario_sha256={}", result.scenario_hash);
    let _ = writeln!(out, "# seed={}", result.seed);
    let _ = writeln!(out, "# user_azimuth={}", join(&a.user_azimuth));
    let _ = writeln!(out, "# user_elevation={}", join(&a.user_elevation));
    let _ = writeln!(out, "# bs_angles={};{}", a.bs_azimuth, a.bs_elevation);
    let _ = writeln!(out, "# ris_angles={};{}", a.ris_azimuth, a.ris_elevation);

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidConfig(format!("CSV encoding failed: {e}"));
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in &result.rows {
        w.write_record([
            r.var.clone(),
            r.value.to_string(),
            r.arm.clone(),
            r.objective.clone(),
            r.seed.to_string(),
            r.sum_rate.to_string(),
            r.min_rate.to_string(),
            join(&r.user_rates),
            opt(r.mc.map(|m| m.mean)),
            opt(r.mc.map(|m| m.std_error)),
            opt(r.mc_tolerance),
            opt(r.wall_time),
        ])
        .map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::InvalidConfig(format!("CSV encoding failed: {e}")))?;
    out.push_str(&String::from_utf8(body).expect("CSV output is UTF-8"));
    Ok(out)
}

/// Writes the CSV document to `path`.
pub fn emit(result: &SweepResult, path: &Path) -> Result<()> {
    let text = render(result)?;
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec[i].parse().map_err(|_| parse_err(line, format!("bad `{}` value `{}`", COLUMNS[i], &rec[i])))
}

fn opt_field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<Option<f64>> {
    if rec[i].is_empty() {
        Ok(None)
    } else {
        field(rec, i, line).map(Some)
    }
}

/// Reads rows back from a document produced by [`render`].
pub fn parse_rows(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(parse_err(1, "unexpected column layout"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let user_rates = rec[7]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| parse_err(line, format!("bad user rate `{s}`"))))
            .collect::<Result<_>>()?;
        let mean = opt_field(&rec, 8, line)?;
        let std_error = opt_field(&rec, 9, line)?;
        rows.push(SweepRow {
            var: rec[0].to_string(),
            value: field(&rec, 1, line)?,
            arm: rec[2].to_string(),
            objective: rec[3].to_string(),
            seed: field(&rec, 4, line)?,
            sum_rate: field(&rec, 5, line)?,
            min_rate: field(&rec, 6, line)?,
            user_rates,
            mc: mean.zip(std_error).map(|(mean, std_error)| McEstimate { mean, std_error, n_samples: 0 }),
            mc_tolerance: opt_field(&rec, 10, line)?,
            wall_time: opt_field(&rec, 11, line)?,
        });
    }
    Ok(rows)
}
