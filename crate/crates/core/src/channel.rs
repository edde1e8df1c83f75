//! Array responses, LoS components and random channel draws.
//!
//! Planar-array responses are flattened row-major: element `(m, n)` of a
//! `sqrt(Z) x sqrt(Z)` array lands at index `m * sqrt(Z) + n`.
//!
//! Random draws use ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`; independent substreams are selected with
//! `set_stream`. Within one realization the draw order is: NLoS RIS-BS
//! entries (row-major), NLoS user-RIS vectors (user by user), direct-link
//! vectors (user by user), then RIS phase errors.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{array_shape, exact_sqrt, rician_split, PhaseVector, ScenarioGeometry, SystemConfig};
use crate::error::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// Generator for `(seed, stream)`; distinct streams are independent.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric `CN(0, 1)` draw (real and imaginary variance 1/2).
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Square planar array response for `z` elements.
pub fn steering_vector(z: usize, azimuth: f64, elevation: f64, spacing: f64) -> Result<Vec<Complex64>> {
    let side = exact_sqrt(z)
        .filter(|&s| s > 0)
        .ok_or_else(|| Error::Dimension(format!("array size {z} is not a positive perfect square")))?;
    planar_response(side, side, azimuth, elevation, spacing)
}

/// Rectangular planar array response, row-major.
pub fn planar_response(rows: usize, cols: usize, azimuth: f64, elevation: f64, spacing: f64) -> Result<Vec<Complex64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("planar array needs at least one element".into()));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidConfig("element spacing must be positive".into()));
    }
    let u = azimuth.sin() * elevation.sin();
    let w = elevation.cos();
    let mut out = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        for n in 0..cols {
            let phase = TAU * spacing * (m as f64 * u + n as f64 * w);
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    Ok(out)
}

/// Deterministic LoS components.
#[derive(Debug, Clone)]
pub struct LosChannels {
    /// BS-side response of the RIS-BS link (length M).
    pub bs_response: Vec<Complex64>,
    /// RIS-side response of the RIS-BS link (length N).
    pub ris_response: Vec<Complex64>,
    /// Rank-one RIS-BS LoS matrix, `bs_response * ris_response^H`.
    pub ris_bs: CMatrix,
    /// Per-user LoS vectors at the RIS.
    pub users: Vec<Vec<Complex64>>,
}

pub fn los_channels(geometry: &ScenarioGeometry, config: &SystemConfig) -> Result<LosChannels> {
    config.validate()?;
    geometry.validate(config.users)?;
    let a = &geometry.angles;
    let (rows, cols) = array_shape(config.antennas);
    let bs_response = planar_response(rows, cols, a.bs_azimuth, a.bs_elevation, config.spacing)?;
    let (rows, cols) = array_shape(config.elements);
    let ris_response = planar_response(rows, cols, a.ris_azimuth, a.ris_elevation, config.spacing)?;
    let ris_bs = CMatrix::from_fn(config.antennas, config.elements, |m, n| {
        bs_response[m] * ris_response[n].conj()
    });
    let users = a
        .user_azimuth
        .iter()
        .zip(&a.user_elevation)
        .map(|(&az, &el)| planar_response(rows, cols, az, el, config.spacing))
        .collect::<Result<Vec<_>>>()?;
    Ok(LosChannels { bs_response, ris_response, ris_bs, users })
}

/// One draw of all random channel quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// RIS-BS channel, M x N.
    pub ris_bs: CMatrix,
    /// User-RIS channels, K vectors of length N.
    pub user_ris: Vec<Vec<Complex64>>,
    /// Direct user-BS channels, K vectors of length M.
    pub direct: Vec<Vec<Complex64>>,
    /// RIS phase errors, each in `[-k pi, k pi]`.
    pub phase_noise: Vec<f64>,
}

/// Single BS-antenna slice of a realization: enough to evaluate `g_{k,m}`.
#[derive(Debug, Clone)]
pub struct AntennaDraw {
    pub ris_bs_row: Vec<Complex64>,
    pub user_ris: Vec<Vec<Complex64>>,
    pub direct: Vec<Complex64>,
    pub phase_noise: Vec<f64>,
}

impl AntennaDraw {
    /// Effective scalar gain of every user at this antenna.
    pub fn gains(&self, phases: &PhaseVector) -> Vec<Complex64> {
        let reflect = reflection(phases.as_slice(), &self.phase_noise);
        self.user_ris
            .iter()
            .zip(&self.direct)
            .map(|(h, d)| {
                d + self
                    .ris_bs_row
                    .iter()
                    .zip(h)
                    .zip(&reflect)
                    .map(|((r, h), e)| r * e * h)
                    .sum::<Complex64>()
            })
            .collect()
    }
}

fn reflection(phases: &[f64], noise: &[f64]) -> Vec<Complex64> {
    phases
        .iter()
        .zip(noise)
        .map(|(t, e)| Complex64::from_polar(1.0, t + e))
        .collect()
}

/// Reusable sampler with precomputed LoS parts.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    config: SystemConfig,
    los: LosChannels,
    ris_bs_amp: f64,
    ris_bs_los: f64,
    ris_bs_nlos: f64,
    user_amp: Vec<f64>,
    user_los: Vec<f64>,
    user_nlos: Vec<f64>,
    direct_amp: Vec<f64>,
}

impl ChannelSampler {
    pub fn new(geometry: &ScenarioGeometry, config: &SystemConfig) -> Result<Self> {
        let los = los_channels(geometry, config)?;
        let (l, n) = rician_split(geometry.ris_bs_rician);
        let (user_los, user_nlos) = geometry
            .user_ris_rician
            .iter()
            .map(|&e| {
                let (l, n) = rician_split(e);
                (l.sqrt(), n.sqrt())
            })
            .unzip();
        Ok(Self {
            config: config.clone(),
            los,
            ris_bs_amp: geometry.ris_bs_gain.sqrt(),
            ris_bs_los: l.sqrt(),
            ris_bs_nlos: n.sqrt(),
            user_amp: geometry.user_ris_gain.iter().map(|g| g.sqrt()).collect(),
            user_los,
            user_nlos,
            direct_amp: geometry.direct_gain.iter().map(|g| g.sqrt()).collect(),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn los(&self) -> &LosChannels {
        &self.los
    }

    fn ris_bs_entry<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Complex64 {
        let nlos = complex_gaussian(rng);
        self.ris_bs_amp * (self.ris_bs_los * self.los.ris_bs.get(m, n) + self.ris_bs_nlos * nlos)
    }

    fn user_vectors<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<Complex64>> {
        (0..self.config.users)
            .map(|k| {
                let (amp, l, n) = (self.user_amp[k], self.user_los[k], self.user_nlos[k]);
                self.los.users[k]
                    .iter()
                    .map(|bar| amp * (l * bar + n * complex_gaussian(rng)))
                    .collect()
            })
            .collect()
    }

    fn phase_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let half_width = self.config.ris_phase_noise * PI;
        (0..self.config.elements)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * half_width)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let (m, n) = (self.config.antennas, self.config.elements);
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            for c in 0..n {
                data.push(self.ris_bs_entry(r, c, rng));
            }
        }
        let ris_bs = CMatrix { rows: m, cols: n, data };
        let user_ris = self.user_vectors(rng);
        let direct = self
            .direct_amp
            .iter()
            .map(|amp| (0..m).map(|_| amp * complex_gaussian(rng)).collect())
            .collect();
        let phase_noise = self.phase_noise(rng);
        ChannelRealization { ris_bs, user_ris, direct, phase_noise }
    }

    /// Draws only what antenna `m` observes; same distribution as row `m` of
    /// [`ChannelSampler::sample`].
    pub fn sample_antenna<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> AntennaDraw {
        let ris_bs_row = (0..self.config.elements).map(|c| self.ris_bs_entry(m, c, rng)).collect();
        let user_ris = self.user_vectors(rng);
        let direct = self.direct_amp.iter().map(|amp| amp * complex_gaussian(rng)).collect();
        let phase_noise = self.phase_noise(rng);
        AntennaDraw { ris_bs_row, user_ris, direct, phase_noise }
    }
}

/// Draws one realization, deterministic in `seed`.
pub fn sample_realization(
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    seed: u64,
) -> Result<ChannelRealization> {
    let sampler = ChannelSampler::new(geometry, config)?;
    Ok(sampler.sample(&mut rng_for(seed, 0)))
}

/// Per-user cascaded channels `g_k = d_k + H diag(e^{j(theta + noise)}) h_k`.
pub fn effective_channel(realization: &ChannelRealization, phases: &PhaseVector) -> Result<Vec<Vec<Complex64>>> {
    let n = realization.ris_bs.cols();
    if phases.len() != n || realization.phase_noise.len() != n {
        return Err(Error::Dimension(format!(
            "{} phases / {} phase errors for {n} RIS elements",
            phases.len(),
            realization.phase_noise.len()
        )));
    }
    if realization.user_ris.len() != realization.direct.len() {
        return Err(Error::Dimension("user-RIS and direct-link user counts differ".into()));
    }
    let reflect = reflection(phases.as_slice(), &realization.phase_noise);
    realization
        .user_ris
        .iter()
        .zip(&realization.direct)
        .map(|(h, d)| {
            if h.len() != n || d.len() != realization.ris_bs.rows() {
                return Err(Error::Dimension("user channel length mismatch".into()));
            }
            let scaled: Vec<Complex64> = h.iter().zip(&reflect).map(|(h, e)| h * e).collect();
            let mut g = realization.ris_bs.mul_vec(&scaled);
            g.iter_mut().zip(d).for_each(|(g, d)| *g += d);
            Ok(g)
        })
        .collect()
}
