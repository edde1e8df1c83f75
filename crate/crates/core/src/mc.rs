//! Monte-Carlo estimates of every moment and of the ergodic rate.
//!
//! Samples are split into fixed-size chunks; chunk `c` draws from substream
//! `c` of the seeded generator, so results do not depend on the number of
//! worker threads. Chunk statistics are merged in chunk order.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic::compose_rate;
use crate::channel::{complex_gaussian, effective_channel, rng_for, ChannelSampler, SimRng};
use crate::config::{PhaseVector, ScenarioGeometry, SystemConfig};
use crate::error::{Error, Result};

/// Samples per substream.
pub const CHUNK: usize = 500;
pub const MIN_SAMPLES: usize = 1000;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard deviation of the mean.
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// `|mean - reference| / std_error`; infinite when the error is zero and
    /// the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.mean - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Streaming mean/variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pooled combination of two partial results.
    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn estimate(&self) -> McEstimate {
        let var = if self.count > 1 { self.m2 / (self.count - 1) as f64 } else { 0.0 };
        McEstimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.count as f64).sqrt(),
            n_samples: self.count,
        }
    }
}

/// Which moment to estimate for user `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    /// `|g_k|^4`
    Signal,
    /// `|g_k|^2`
    Noise,
    /// `|g_k^H g_i|^2`
    Interference(usize),
    /// per-antenna `|g_{i,m}|^2 |g_{k,m}|^2`
    Cross(usize),
    /// per-antenna `|g_{k,m}|^4`
    Fourth,
}

impl Moment {
    /// Whether the moment is defined per BS antenna.
    pub fn is_per_antenna(self) -> bool {
        matches!(self, Moment::Cross(_) | Moment::Fourth)
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moment::Signal => write!(f, "signal"),
            Moment::Noise => write!(f, "noise"),
            Moment::Interference(i) => write!(f, "interf:{i}"),
            Moment::Cross(i) => write!(f, "cross:{i}"),
            Moment::Fourth => write!(f, "fourth"),
        }
    }
}

impl FromStr for Moment {
    type Err = Error;

    /// Accepts `signal`, `noise`, `fourth`, `interf:<i>`, `cross:<i>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown moment selector `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.trim().parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        match (name.trim(), arg) {
            ("signal", None) => Ok(Moment::Signal),
            ("noise", None) => Ok(Moment::Noise),
            ("fourth", None) => Ok(Moment::Fourth),
            ("interf", Some(i)) => Ok(Moment::Interference(i)),
            ("cross", Some(i)) => Ok(Moment::Cross(i)),
            _ => Err(bad()),
        }
    }
}

/// How the ergodic rate is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Average of `log2(1 + SINR)` over channel draws.
    Instantaneous,
    /// Ratio of Monte-Carlo moments plugged into the closed-form composition.
    MomentRatio,
}

impl FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instantaneous" => Ok(RateMode::Instantaneous),
            "moment-ratio" => Ok(RateMode::MomentRatio),
            _ => Err(Error::Domain(format!("unknown rate mode `{s}`"))),
        }
    }
}

/// Treatment of transceiver distortion in instantaneous mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HwiTreatment {
    /// Distortion power conditioned on the channel draw.
    #[default]
    Conditional,
    /// Explicit draws of symbols and distortion noise, averaged per channel
    /// draw. Kept for auditing the conditional form.
    Sampled { draws: usize },
}

/// Per-user rate estimates plus the sum rate, all from the same draws.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimates {
    pub users: Vec<McEstimate>,
    pub sum: McEstimate,
}

/// Monte-Carlo oracle for one scenario.
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    sampler: ChannelSampler,
}

fn chunks(n_samples: usize) -> Vec<(u64, usize)> {
    (0..n_samples.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(n_samples - c * CHUNK)))
        .collect()
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    Ok(())
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

impl MonteCarlo {
    pub fn new(geometry: &ScenarioGeometry, config: &SystemConfig) -> Result<Self> {
        Ok(Self { sampler: ChannelSampler::new(geometry, config)? })
    }

    pub fn config(&self) -> &SystemConfig {
        self.sampler.config()
    }

    fn check_phases(&self, phases: &PhaseVector) -> Result<()> {
        if phases.len() != self.config().elements {
            return Err(Error::Dimension(format!(
                "{} phases for {} RIS elements",
                phases.len(),
                self.config().elements
            )));
        }
        Ok(())
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.config().users {
            return Err(Error::Domain(format!("user {k} out of range")));
        }
        Ok(())
    }

    /// Sample mean of the selected moment over fresh realizations.
    pub fn moment(
        &self,
        which: Moment,
        k: usize,
        phases: &PhaseVector,
        n_samples: usize,
        seed: u64,
    ) -> Result<McEstimate> {
        Ok(self.moments(&[(which, k)], phases, n_samples, seed)?[0])
    }

    /// Several moments `(which, k)` estimated from the same draws. All
    /// requests must be either whole-array or per-antenna moments.
    pub fn moments(
        &self,
        requests: &[(Moment, usize)],
        phases: &PhaseVector,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<McEstimate>> {
        check_samples(n_samples)?;
        self.check_phases(phases)?;
        for &(which, k) in requests {
            self.check_user(k)?;
            if let Moment::Interference(i) | Moment::Cross(i) = which {
                self.check_user(i)?;
                if i == k {
                    return Err(Error::Domain("interferer index equals user index".into()));
                }
            }
        }
        let per_antenna = requests.first().is_some_and(|(w, _)| w.is_per_antenna());
        if requests.iter().any(|(w, _)| w.is_per_antenna() != per_antenna) {
            return Err(Error::Domain("cannot mix per-antenna and whole-array moments in one batch".into()));
        }
        let parts: Vec<Vec<Accumulator>> = chunks(n_samples)
            .into_par_iter()
            .map(|(stream, count)| {
                let mut rng = rng_for(seed, stream);
                let mut acc = vec![Accumulator::default(); requests.len()];
                for _ in 0..count {
                    if per_antenna {
                        let g = self.sampler.sample_antenna(0, &mut rng).gains(phases);
                        for (a, &(which, k)) in acc.iter_mut().zip(requests) {
                            a.push(match which {
                                Moment::Cross(i) => g[i].norm_sqr() * g[k].norm_sqr(),
                                _ => g[k].norm_sqr().powi(2),
                            });
                        }
                    } else {
                        let r = self.sampler.sample(&mut rng);
                        let g = effective_channel(&r, phases).expect("dimensions checked");
                        for (a, &(which, k)) in acc.iter_mut().zip(requests) {
                            a.push(match which {
                                Moment::Signal => norm_sqr(&g[k]).powi(2),
                                Moment::Noise => norm_sqr(&g[k]),
                                Moment::Interference(i) => inner(&g[k], &g[i]).norm_sqr(),
                                _ => unreachable!("per-antenna moments filtered above"),
                            });
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![Accumulator::default(); requests.len()];
        for p in &parts {
            total.iter_mut().zip(p).for_each(|(t, p)| t.merge(p));
        }
        Ok(total.iter().map(Accumulator::estimate).collect())
    }

    /// Ergodic rates of all users and their sum.
    pub fn ergodic_rates(
        &self,
        phases: &PhaseVector,
        n_samples: usize,
        seed: u64,
        mode: RateMode,
        hwi: HwiTreatment,
    ) -> Result<RateEstimates> {
        check_samples(n_samples)?;
        self.check_phases(phases)?;
        match mode {
            RateMode::Instantaneous => self.instantaneous(phases, n_samples, seed, hwi),
            RateMode::MomentRatio => self.moment_ratio(phases, n_samples, seed),
        }
    }

    fn instantaneous(
        &self,
        phases: &PhaseVector,
        n_samples: usize,
        seed: u64,
        hwi: HwiTreatment,
    ) -> Result<RateEstimates> {
        let users = self.config().users;
        let parts: Vec<Vec<Accumulator>> = chunks(n_samples)
            .into_par_iter()
            .map(|(stream, count)| {
                let mut rng = rng_for(seed, stream);
                let mut acc = vec![Accumulator::default(); users + 1];
                for _ in 0..count {
                    let r = self.sampler.sample(&mut rng);
                    let g = effective_channel(&r, phases).expect("dimensions checked");
                    let rates = self.instantaneous_rates(&g, hwi, &mut rng);
                    for (a, v) in acc.iter_mut().zip(&rates) {
                        a.push(*v);
                    }
                    acc[users].push(rates.iter().sum());
                }
                acc
            })
            .collect();
        let mut total = vec![Accumulator::default(); users + 1];
        for p in &parts {
            total.iter_mut().zip(p).for_each(|(t, p)| t.merge(p));
        }
        let sum = total[users].estimate();
        Ok(RateEstimates { users: total[..users].iter().map(Accumulator::estimate).collect(), sum })
    }

    fn instantaneous_rates(&self, g: &[Vec<Complex64>], hwi: HwiTreatment, rng: &mut SimRng) -> Vec<f64> {
        let cfg = self.config();
        let (users, antennas) = (cfg.users, cfg.antennas);
        let p = &cfg.powers;
        let (ku, kb) = (cfg.tx_impairment, cfg.rx_impairment);
        let gram: Vec<Vec<Complex64>> =
            (0..users).map(|k| (0..users).map(|i| inner(&g[k], &g[i])).collect()).collect();
        (0..users)
            .map(|k| {
                let norm = gram[k][k].re;
                let signal = p[k] * norm * norm;
                let interf: f64 = (0..users).filter(|&i| i != k).map(|i| p[i] * gram[k][i].norm_sqr()).sum();
                let distortion = match hwi {
                    HwiTreatment::Conditional => {
                        let tx: f64 = (0..users).map(|i| p[i] * gram[k][i].norm_sqr()).sum();
                        let rx: f64 = (0..antennas)
                            .map(|m| {
                                let gk = g[k][m].norm_sqr();
                                (0..users).map(|i| p[i] * g[i][m].norm_sqr()).sum::<f64>() * gk
                            })
                            .sum();
                        ku * tx + (1.0 + ku) * kb * rx
                    }
                    HwiTreatment::Sampled { draws } => self.sampled_distortion(g, &gram[k], k, draws, rng),
                };
                (1.0 + signal / (interf + distortion + cfg.noise_power * norm)).log2()
            })
            .collect()
    }

    fn sampled_distortion(
        &self,
        g: &[Vec<Complex64>],
        gram_k: &[Complex64],
        k: usize,
        draws: usize,
        rng: &mut SimRng,
    ) -> f64 {
        let cfg = self.config();
        let (ku, kb) = (cfg.tx_impairment, cfg.rx_impairment);
        let draws = draws.max(1);
        let mut acc = 0.0;
        for _ in 0..draws {
            let mut out = Complex64::new(0.0, 0.0);
            let mut inputs = Vec::with_capacity(cfg.users);
            for (i, p) in cfg.powers.iter().enumerate() {
                let x = complex_gaussian(rng);
                let zt = (ku * p).sqrt() * complex_gaussian(rng);
                out += gram_k[i] * zt;
                inputs.push(p.sqrt() * x + zt);
            }
            for m in 0..cfg.antennas {
                let var: f64 = (0..cfg.users).map(|i| (g[i][m] * inputs[i]).norm_sqr()).sum::<f64>() * kb;
                let zr = var.sqrt() * complex_gaussian(rng);
                out += g[k][m].conj() * zr;
            }
            acc += out.norm_sqr();
        }
        acc / draws as f64
    }

    fn moment_ratio(&self, phases: &PhaseVector, n_samples: usize, seed: u64) -> Result<RateEstimates> {
        let cfg = self.config().clone();
        let users = cfg.users;
        // Per chunk: signal, noise, fourth per user; interference and cross per pair.
        let parts: Vec<(usize, MomentSums)> = chunks(n_samples)
            .into_par_iter()
            .map(|(stream, count)| {
                let mut rng = rng_for(seed, stream);
                let mut sums = MomentSums::new(users);
                for _ in 0..count {
                    let r = self.sampler.sample(&mut rng);
                    let g = effective_channel(&r, phases).expect("dimensions checked");
                    sums.add(&g);
                }
                (count, sums)
            })
            .collect();
        let mut total = MomentSums::new(users);
        for (_, s) in &parts {
            total.merge(s);
        }
        let overall = total.rates(&cfg, n_samples);
        let batches: Vec<(f64, Vec<f64>)> =
            parts.iter().map(|(c, s)| (*c as f64 / n_samples as f64, s.rates(&cfg, *c))).collect();
        let b = batches.len() as f64;
        let spread = |pick: &dyn Fn(&[f64]) -> f64, center: f64| {
            let v: f64 = batches.iter().map(|(w, r)| (w * (pick(r) - center)).powi(2)).sum();
            (v * b / (b - 1.0).max(1.0)).sqrt()
        };
        let estimate = |pick: &dyn Fn(&[f64]) -> f64| {
            let mean = pick(&overall);
            McEstimate { mean, std_error: spread(pick, mean), n_samples }
        };
        let per_user = (0..users).map(|k| estimate(&|r: &[f64]| r[k])).collect();
        let sum = estimate(&|r: &[f64]| r.iter().sum());
        Ok(RateEstimates { users: per_user, sum })
    }
}

/// Running sums of every moment needed by the rate composition.
#[derive(Debug, Clone)]
struct MomentSums {
    signal: Vec<f64>,
    noise: Vec<f64>,
    fourth: Vec<f64>,
    interference: Vec<Vec<f64>>,
    cross: Vec<Vec<f64>>,
}

impl MomentSums {
    fn new(users: usize) -> Self {
        Self {
            signal: vec![0.0; users],
            noise: vec![0.0; users],
            fourth: vec![0.0; users],
            interference: vec![vec![0.0; users]; users],
            cross: vec![vec![0.0; users]; users],
        }
    }

    fn add(&mut self, g: &[Vec<Complex64>]) {
        let users = g.len();
        let antennas = g[0].len() as f64;
        for k in 0..users {
            let nk = norm_sqr(&g[k]);
            self.signal[k] += nk * nk;
            self.noise[k] += nk;
            self.fourth[k] += g[k].iter().map(|x| x.norm_sqr().powi(2)).sum::<f64>() / antennas;
            for i in 0..users {
                if i != k {
                    self.interference[k][i] += inner(&g[k], &g[i]).norm_sqr();
                    self.cross[k][i] +=
                        g[k].iter().zip(&g[i]).map(|(a, b)| a.norm_sqr() * b.norm_sqr()).sum::<f64>() / antennas;
                }
            }
        }
    }

    fn merge(&mut self, other: &MomentSums) {
        let add = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.signal, &other.signal);
        add(&mut self.noise, &other.noise);
        add(&mut self.fourth, &other.fourth);
        for (a, b) in self.interference.iter_mut().zip(&other.interference) {
            add(a, b);
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            add(a, b);
        }
    }

    fn rates(&self, cfg: &SystemConfig, count: usize) -> Vec<f64> {
        let n = count as f64;
        let m = cfg.antennas as f64;
        let p = &cfg.powers;
        (0..cfg.users)
            .map(|k| {
                let signal = self.signal[k] / n;
                let noise = self.noise[k] / n;
                let interference: Vec<f64> = self.interference[k].iter().map(|v| v / n).collect();
                let coherent: f64 = (0..cfg.users)
                    .map(|i| if i == k { p[k] * signal } else { p[i] * interference[i] })
                    .sum();
                let per_antenna: f64 = (0..cfg.users)
                    .map(|i| if i == k { p[k] * m * self.fourth[k] / n } else { p[i] * m * self.cross[k][i] / n })
                    .sum();
                let hwi = cfg.tx_impairment * coherent + (1.0 + cfg.tx_impairment) * cfg.rx_impairment * per_antenna;
                compose_rate(p, cfg.noise_power, k, signal, &interference, hwi, noise)
            })
            .collect()
    }
}

/// Monte-Carlo estimate of one moment; see [`MonteCarlo::moment`].
pub fn estimate_moment(
    which: Moment,
    k: usize,
    phases: &PhaseVector,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    MonteCarlo::new(geometry, config)?.moment(which, k, phases, n_samples, seed)
}

/// Monte-Carlo ergodic rate of user `k` with conditional distortion power.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ergodic_rate(
    k: usize,
    phases: &PhaseVector,
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    n_samples: usize,
    seed: u64,
    mode: RateMode,
) -> Result<McEstimate> {
    let mc = MonteCarlo::new(geometry, config)?;
    mc.check_user(k)?;
    Ok(mc.ergodic_rates(phases, n_samples, seed, mode, HwiTreatment::Conditional)?.users[k])
}
