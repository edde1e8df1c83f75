//! `rismimo` command-line driver.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rismimo::channel::rng_for;
use rismimo::ga::{ga_optimize, refine, fitness, Objective};
use rismimo::mc::HwiTreatment;
use rismimo::scenario::{build_scenario_with, Scale, Scenario, ScenarioFile};
use rismimo::sweep::{emit, render, run_sweep, SweepSpec, SweepVar};
use rismimo::{asymptotic_rate, Error, Moment, MonteCarlo, PhaseVector, RateMode, RateModel};

#[derive(Parser)]
#[command(name = "rismimo", version, about = "RIS-aided massive MIMO uplink under hardware impairments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for random angles, phases, GA and Monte-Carlo draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo draws (overrides the scenario file and scale default).
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Use full-size defaults (M=50, N=25, K=4) for omitted keys.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Goal {
    Sum,
    Min,
}

impl From<Goal> for Objective {
    fn from(g: Goal) -> Self {
        match g {
            Goal::Sum => Objective::Sum,
            Goal::Min => Objective::Min,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Var {
    #[value(name = "N")]
    N,
    #[value(name = "M")]
    M,
    #[value(name = "k_hwi")]
    KHwi,
}

#[derive(Subcommand)]
enum Command {
    /// Check every closed-form moment and the rate against Monte Carlo.
    Validate {
        /// Largest accepted |z| for moment comparisons.
        #[arg(long, default_value_t = 3.0)]
        z_limit: f64,
        /// Optional bound on |analytic - instantaneous MC| per user.
        #[arg(long)]
        rate_tolerance: Option<f64>,
    },
    /// Sweep N, M or the common impairment level and write CSV rows.
    Sweep {
        #[arg(long, value_enum)]
        var: Var,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value = "sum")]
        objective: Goal,
        /// Use seeded random phases instead of GA optimization (N and M sweeps).
        #[arg(long)]
        random: bool,
        /// Polish GA results with coordinate-wise local search.
        #[arg(long)]
        refine: bool,
        /// Add Monte-Carlo validation columns.
        #[arg(long)]
        mc: bool,
        /// Fill the wall-time column (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Optimize RIS phases and report per-user rates; --out receives the GA trace.
    Optimize {
        #[arg(long, value_enum, default_value = "sum")]
        objective: Goal,
        /// Generation budget (default 100 N).
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        refine: bool,
    },
    /// Finite-M rates with p/M power scaling against the large-array limit.
    Asymptotic {
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
        antennas: Vec<usize>,
        /// Total transmit power per user, dBm.
        #[arg(long, default_value_t = 30.0)]
        total_power_dbm: f64,
    },
}

enum Failure {
    Validation(String),
    Config(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<(), Failure>;

fn load(global: &Global) -> Result<Scenario, Error> {
    let file = match &global.scenario {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::default(),
    };
    let scale = if global.paper_scale { Scale::Paper } else { Scale::Desk };
    let mut s = build_scenario_with(&file, scale, global.seed)?;
    if let Some(n) = global.mc_samples {
        s.mc_samples = n;
    }
    Ok(s)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn validate(global: &Global, z_limit: f64, rate_tolerance: Option<f64>) -> Outcome {
    let s = load(global)?;
    let phases = PhaseVector::random(s.config.elements, &mut rng_for(global.seed, 77));
    let model = RateModel::new(&s.config, &s.geometry)?;
    let mc = MonteCarlo::new(&s.geometry, &s.config)?;
    let users = s.config.users;
    let mut failures = Vec::new();
    let mut report = String::from("moment,user,analytic,mc_mean,mc_std_error,z\n");

    let mut array = Vec::new();
    let mut antenna = Vec::new();
    for k in 0..users {
        array.push((Moment::Signal, k, model.signal(&phases, k)?));
        array.push((Moment::Noise, k, model.noise(&phases, k)?));
        antenna.push((Moment::Fourth, k, model.fourth_moment_per_antenna(&phases, k)?));
        for i in (0..users).filter(|&i| i != k) {
            array.push((Moment::Interference(i), k, model.interference(&phases, k, i)?));
            antenna.push((Moment::Cross(i), k, model.cross_moment(&phases, k, i)?));
        }
    }
    for (cases, n) in [(array, s.mc_samples), (antenna, 10 * s.mc_samples)] {
        let requests: Vec<(Moment, usize)> = cases.iter().map(|&(w, k, _)| (w, k)).collect();
        let estimates = mc.moments(&requests, &phases, n, global.seed)?;
        for ((which, k, analytic), e) in cases.iter().zip(estimates) {
            let z = e.z_score(*analytic);
            report.push_str(&format!("{which},{k},{analytic:e},{:e},{:e},{z:.3}\n", e.mean, e.std_error));
            if z >= z_limit {
                failures.push(format!("{which} user {k}: z = {z:.2}"));
            }
        }
    }

    let rates = model.breakdown(&phases)?.rates();
    let inst = mc.ergodic_rates(&phases, s.mc_samples, global.seed, RateMode::Instantaneous, HwiTreatment::Conditional)?;
    let ratio = mc.ergodic_rates(&phases, s.mc_samples, global.seed, RateMode::MomentRatio, HwiTreatment::Conditional)?;
    for (k, &a) in rates.iter().enumerate() {
        let (e, r) = (inst.users[k], ratio.users[k]);
        report.push_str(&format!("rate-instantaneous,{k},{a},{},{},{:.3}\n", e.mean, e.std_error, e.z_score(a)));
        report.push_str(&format!("rate-moment-ratio,{k},{a},{},{},{:.3}\n", r.mean, r.std_error, r.z_score(a)));
        if r.z_score(a) >= z_limit {
            failures.push(format!("moment-ratio rate user {k}: z = {:.2}", r.z_score(a)));
        }
        if let Some(tol) = rate_tolerance {
            if (a - e.mean).abs() > tol {
                failures.push(format!("instantaneous rate user {k}: |diff| = {:.4}", (a - e.mean).abs()));
            }
        }
    }
    write_out(global.out.as_deref(), &report)?;
    if failures.is_empty() {
        eprintln!("validation passed");
        Ok(())
    } else {
        Err(Failure::Validation(failures.join("; ")))
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep(global: &Global, var: Var, values: Vec<f64>, objective: Goal, random: bool, refine: bool, mc: bool, timing: bool) -> Outcome {
    let s = load(global)?;
    let spec = SweepSpec {
        var: match var {
            Var::N => SweepVar::Elements,
            Var::M => SweepVar::Antennas,
            Var::KHwi => SweepVar::Hwi,
        },
        values,
        objective: objective.into(),
        optimize: !random,
        refine,
        mc_samples: mc.then_some(s.mc_samples),
        seed: global.seed,
        timing,
    };
    let result = run_sweep(&s, &spec)?;
    match &global.out {
        Some(path) => emit(&result, path)?,
        None => write_out(None, &render(&result)?)?,
    }
    Ok(())
}

fn optimize(global: &Global, objective: Goal, generations: Option<usize>, polish: bool) -> Outcome {
    let s = load(global)?;
    let objective = Objective::from(objective);
    let model = RateModel::new(&s.config, &s.geometry)?;
    let mut ga = s.ga.clone();
    ga.seed = global.seed;
    if generations.is_some() {
        ga.max_iters = generations;
    }
    let out = ga_optimize(objective, &model, &ga)?;
    let mut best = out.best.clone();
    if polish {
        let (levels, on_grid) = ga.phase_grid.map_or((64, false), |g| (g, true));
        best = refine(&best, levels, on_grid, 200, |p| fitness(objective, &model, p))?.0;
    }
    let b = model.breakdown(&best)?;
    eprintln!("objective {}: {:.6}", objective.name(), fitness(objective, &model, &best)?);
    for (k, r) in b.rates().iter().enumerate() {
        eprintln!("user {k}: {r:.6} bits/s/Hz");
    }
    let shown: Vec<String> = best.as_slice().iter().map(|t| format!("{t:.6}")).collect();
    eprintln!("phases: {}", shown.join(","));

    let mut trace = format!("# scenario_sha256={}\n# seed={}\ngeneration,best,mean\n", s.hash(), global.seed);
    for (g, (b, m)) in out.trace.best.iter().zip(&out.trace.mean).enumerate() {
        trace.push_str(&format!("{g},{b},{m}\n"));
    }
    if let Some(path) = &global.out {
        write_out(Some(path), &trace)?;
    }
    Ok(())
}

fn asymptotic(global: &Global, antennas: Vec<usize>, total_power_dbm: f64) -> Outcome {
    let s = load(global)?;
    let mut geometry = s.geometry.clone();
    geometry.ris_bs_rician = 0.0;
    geometry.user_ris_rician = vec![0.0; s.config.users];
    let total = rismimo::scenario::dbm_to_watts(total_power_dbm);
    let phases = PhaseVector::random(s.config.elements, &mut rng_for(global.seed, 77));
    let mut text = format!("# scenario_sha256={}\n# seed={}\nM,user,rate,limit,gap\n", s.hash(), global.seed);
    for m in antennas {
        let mut config = s.config.clone();
        config.antennas = m;
        config.powers = vec![total / m as f64; config.users];
        let model = RateModel::new(&config, &geometry)?;
        for k in 0..config.users {
            let rate = model.rate(&phases, k)?;
            let limit = asymptotic_rate(&geometry, &config, k, total)?;
            text.push_str(&format!("{m},{k},{rate},{limit},{}\n", rate - limit));
        }
    }
    write_out(global.out.as_deref(), &text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let outcome = match cli.command {
        Command::Validate { z_limit, rate_tolerance } => validate(g, z_limit, rate_tolerance),
        Command::Sweep { var, values, objective, random, refine, mc, timing } => {
            sweep(g, var, values, objective, random, refine, mc, timing)
        }
        Command::Optimize { objective, generations, refine } => optimize(g, objective, generations, refine),
        Command::Asymptotic { antennas, total_power_dbm } => asymptotic(g, antennas, total_power_dbm),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
