//! Closed-form moments and the approximate ergodic rate under MRC.
//!
//! The rate of user `k` is
//!
//! ```text
//! R_k = log2(1 + p_k S_k / (sum_{i != k} p_i I_ki + W_k + sigma^2 N_k))
//! ```
//!
//! with `S_k = E|g_k|^4`, `I_ki = E|g_k^H g_i|^2`, `N_k = E|g_k|^2` and the
//! distortion power `W_k`. Every expectation is evaluated exactly, including
//! phase-noise statistics up to fourth order (see [`crate::phase_noise`]).
//!
//! Derivation outline: conditioned on the RIS-BS channel `H` and the phase
//! errors, `g_k` is complex Gaussian with mean `s_k H u_k` and covariance
//! `xi_k I + t_k H H^H`, where `u_k` is the user LoS vector rotated by the
//! (noisy) RIS phases, `s_k^2 = mu_k eps_k / (eps_k + 1)` and
//! `t_k = mu_k / (eps_k + 1)`. Users are conditionally independent. Gaussian
//! quadratic-form identities reduce each moment to low-order moments of the
//! Rician matrix `H`, which in turn depend on the phases only through
//! `F_k = a_N^H diag(e^{j(theta + noise)}) hbar_k`.
//!
//! Compared with the usual printed closed form this implementation
//! * uses the exact `E|F_k|^4` and `E|F_k|^2 |F_i|^2` instead of `c_k^2` and
//!   `c_k c_i`,
//! * keeps the direct-link term `xi_k^2 M (M + 1)` outside the RIS factor,
//! * uses `Re{E[F_k F_i^*] hbar_k^H hbar_i}` for the LoS cross-coupling, whose
//!   incoherent part is `(1 - sinc^2) |hbar_k^H hbar_i|^2` rather than
//!   `(1 - sinc^2) N`.
//!
//! All of these agree with the printed form in the ideal-hardware cases
//! covered by the unit tests and are checked against the Monte-Carlo oracle.

use num_complex::Complex64;

use crate::channel::{los_channels, LosChannels};
use crate::config::{rician_split, PhaseVector, ScenarioGeometry, SystemConfig};
use crate::error::{Error, Result};
use crate::phase_noise::{Factor, PhaseNoiseStats};

/// Per-user moment terms and the resulting rate.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRate {
    pub signal: f64,
    /// Entry `i` holds `E|g_k^H g_i|^2`; the entry at `k` itself is zero.
    pub interference: Vec<f64>,
    pub noise: f64,
    pub hwi: f64,
    /// bits/s/Hz
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub users: Vec<UserRate>,
}

impl RateBreakdown {
    pub fn rates(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.rate).collect()
    }

    pub fn sum_rate(&self) -> f64 {
        self.users.iter().map(|u| u.rate).sum()
    }

    pub fn min_rate(&self) -> f64 {
        self.users.iter().map(|u| u.rate).fold(f64::INFINITY, f64::min)
    }
}

/// Phase-dependent constants shared by all moment terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    /// `nu mu_k / ((rho + 1)(eps_k + 1))`
    pub coupling: Vec<f64>,
    /// `a_N^H Theta hbar_k`
    pub reflection: Vec<Complex64>,
    /// `sinc^2 |f_k|^2 + (1 - sinc^2) N`, i.e. `E|F_k|^2`
    pub alignment: Vec<f64>,
}

/// Scenario with precomputed LoS data; evaluates moments for any phases.
#[derive(Debug, Clone)]
pub struct RateModel {
    config: SystemConfig,
    geometry: ScenarioGeometry,
    los: LosChannels,
    noise: PhaseNoiseStats,
    /// `[k][i] = hbar_i^H hbar_k`
    los_gram: Vec<Vec<Complex64>>,
    ris_los_power: f64,
    ris_nlos_power: f64,
    user_los_power: Vec<f64>,
    user_nlos_power: Vec<f64>,
}

impl RateModel {
    pub fn new(config: &SystemConfig, geometry: &ScenarioGeometry) -> Result<Self> {
        Self::with_los(config, geometry, los_channels(geometry, config)?)
    }

    /// Uses caller-supplied LoS components instead of the planar-array
    /// responses implied by the angles. Entries must have unit magnitude.
    pub fn with_los(config: &SystemConfig, geometry: &ScenarioGeometry, los: LosChannels) -> Result<Self> {
        config.validate()?;
        geometry.validate(config.users)?;
        let (m, n) = (config.antennas, config.elements);
        let shapes_ok = los.bs_response.len() == m
            && los.ris_response.len() == n
            && los.users.len() == config.users
            && los.users.iter().all(|h| h.len() == n);
        if !shapes_ok {
            return Err(Error::Dimension("LoS components do not match the configuration".into()));
        }
        let unit = |v: &Complex64| (v.norm() - 1.0).abs() < 1e-9;
        if !(los.bs_response.iter().all(unit) && los.ris_response.iter().all(unit) && los.users.iter().flatten().all(unit)) {
            return Err(Error::InvalidConfig("LoS entries must have unit magnitude".into()));
        }
        let los_gram = los
            .users
            .iter()
            .map(|hk| {
                los.users
                    .iter()
                    .map(|hi| hi.iter().zip(hk).map(|(a, b)| a.conj() * b).sum())
                    .collect()
            })
            .collect();
        let (l, n) = rician_split(geometry.ris_bs_rician);
        let (user_los_power, user_nlos_power) = geometry
            .user_ris_gain
            .iter()
            .zip(&geometry.user_ris_rician)
            .map(|(&mu, &eps)| {
                let (l, n) = rician_split(eps);
                (mu * l, mu * n)
            })
            .unzip();
        Ok(Self {
            config: config.clone(),
            geometry: geometry.clone(),
            los,
            noise: PhaseNoiseStats::new(config.ris_phase_noise),
            los_gram,
            ris_los_power: geometry.ris_bs_gain * l,
            ris_nlos_power: geometry.ris_bs_gain * n,
            user_los_power,
            user_nlos_power,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ScenarioGeometry {
        &self.geometry
    }

    pub fn los(&self) -> &LosChannels {
        &self.los
    }

    fn evaluate(&self, phases: &PhaseVector) -> Result<Evaluation<'_>> {
        if phases.len() != self.config.elements {
            return Err(Error::Dimension(format!(
                "{} phases for {} RIS elements",
                phases.len(),
                self.config.elements
            )));
        }
        Ok(Evaluation::new(self, phases))
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.config.users {
            return Err(Error::Domain(format!("user {k} out of range (K = {})", self.config.users)));
        }
        Ok(())
    }

    fn check_pair(&self, k: usize, i: usize) -> Result<()> {
        self.check_user(k)?;
        self.check_user(i)?;
        if k == i {
            return Err(Error::Domain("interferer index equals user index".into()));
        }
        Ok(())
    }

    /// `f_k(Theta) = a_N^H diag(e^{j theta}) hbar_k`, with `a_N` the RIS-side
    /// response of the RIS-BS LoS matrix.
    pub fn reflection_gain(&self, phases: &PhaseVector, k: usize) -> Result<Complex64> {
        self.check_user(k)?;
        Ok(self.evaluate(phases)?.stats.reflection[k])
    }

    pub fn derived_constants(&self, phases: &PhaseVector) -> Result<DerivedConstants> {
        let ev = self.evaluate(phases)?;
        let coupling = (0..self.config.users).map(|k| ev.coupling(k)).collect();
        Ok(DerivedConstants {
            coupling,
            reflection: ev.stats.reflection.clone(),
            alignment: ev.stats.alignment.clone(),
        })
    }

    /// `E|g_k|^4`
    pub fn signal(&self, phases: &PhaseVector, k: usize) -> Result<f64> {
        self.check_user(k)?;
        Ok(self.evaluate(phases)?.signal(k))
    }

    /// `E|g_k^H g_i|^2`, `i != k`
    pub fn interference(&self, phases: &PhaseVector, k: usize, i: usize) -> Result<f64> {
        self.check_pair(k, i)?;
        Ok(self.evaluate(phases)?.interference(k, i))
    }

    /// `E|g_k|^2`
    pub fn noise(&self, phases: &PhaseVector, k: usize) -> Result<f64> {
        self.check_user(k)?;
        Ok(self.evaluate(phases)?.noise(k))
    }

    /// Per-antenna `E[|g_{i,m}|^2 |g_{k,m}|^2]`, `i != k`; independent of `m`.
    pub fn cross_moment(&self, phases: &PhaseVector, k: usize, i: usize) -> Result<f64> {
        self.check_pair(k, i)?;
        Ok(self.evaluate(phases)?.cross(k, i))
    }

    /// Per-antenna `E|g_{k,m}|^4`; independent of `m`.
    pub fn fourth_moment_per_antenna(&self, phases: &PhaseVector, k: usize) -> Result<f64> {
        self.check_user(k)?;
        Ok(self.evaluate(phases)?.fourth(k))
    }

    /// Distortion power at the MRC output of user `k`.
    pub fn hwi(&self, phases: &PhaseVector, k: usize) -> Result<f64> {
        self.check_user(k)?;
        Ok(self.evaluate(phases)?.hwi(k))
    }

    pub fn rate(&self, phases: &PhaseVector, k: usize) -> Result<f64> {
        self.check_user(k)?;
        Ok(self.evaluate(phases)?.user(k).rate)
    }

    /// All moment terms and rates for one phase configuration.
    pub fn breakdown(&self, phases: &PhaseVector) -> Result<RateBreakdown> {
        let ev = self.evaluate(phases)?;
        Ok(RateBreakdown { users: (0..self.config.users).map(|k| ev.user(k)).collect() })
    }

    /// Large-array limit of the rate when every user transmits
    /// `total_power / M`. Requires pure NLoS links.
    pub fn asymptotic_rate(&self, k: usize, total_power: f64) -> Result<f64> {
        asymptotic_rate(&self.geometry, &self.config, k, total_power)
    }
}

/// Limit of the rate of user `k` for `p_k = total_power / M`, `M -> inf`,
/// with all Rician factors zero.
pub fn asymptotic_rate(
    geometry: &ScenarioGeometry,
    config: &SystemConfig,
    k: usize,
    total_power: f64,
) -> Result<f64> {
    geometry.validate(config.users)?;
    if k >= config.users {
        return Err(Error::Domain(format!("user {k} out of range (K = {})", config.users)));
    }
    if geometry.ris_bs_rician != 0.0 || geometry.user_ris_rician.iter().any(|&e| e != 0.0) {
        return Err(Error::Precondition("power-scaling limit requires zero Rician factors".into()));
    }
    let n = config.elements as f64;
    let nu = geometry.ris_bs_gain;
    let mu_k = geometry.user_ris_gain[k];
    let xi_k = geometry.direct_gain[k];
    let a1 = nu * mu_k * n * (nu * mu_k * n + nu * mu_k + 2.0 * xi_k) + xi_k * xi_k;
    let a3 = nu * mu_k * n + xi_k;
    let a2_sum: f64 = (0..config.users)
        .filter(|&i| i != k)
        .map(|i| nu * nu * mu_k * geometry.user_ris_gain[i] * n)
        .sum();
    let ku = config.tx_impairment;
    let denom = total_power * (1.0 + ku) * a2_sum + total_power * ku * a1 + a3 * config.noise_power;
    Ok((1.0 + total_power * a1 / denom).log2())
}

/// Phase-dependent statistics of `F_k`.
struct PhaseStats {
    reflection: Vec<Complex64>,
    /// `E|F_k|^2`
    alignment: Vec<f64>,
    /// `E|F_k|^4`
    alignment_sq: Vec<f64>,
    /// `E[|F_k|^2 |F_i|^2]`
    joint_alignment: Vec<Vec<f64>>,
    /// `Re{E[F_k F_i^*] conj(hbar_i^H hbar_k)}`
    los_coupling: Vec<Vec<f64>>,
}

impl PhaseStats {
    fn new(model: &RateModel, phases: &PhaseVector) -> Self {
        let users = model.config.users;
        let n = model.config.elements as f64;
        let weights: Vec<Vec<Complex64>> = model
            .los
            .users
            .iter()
            .map(|hbar| {
                model
                    .los
                    .ris_response
                    .iter()
                    .zip(hbar)
                    .zip(phases.as_slice())
                    .map(|((a, h), &t)| a.conj() * h * Complex64::from_polar(1.0, t))
                    .collect()
            })
            .collect();
        let reflection: Vec<Complex64> = weights.iter().map(|w| w.iter().sum()).collect();
        let coh = model.noise.coherence();
        let alignment: Vec<f64> = reflection.iter().map(|f| coh * f.norm_sqr() + (1.0 - coh) * n).collect();
        let alignment_sq = weights
            .iter()
            .map(|w| {
                let f = [Factor::plain(w), Factor::conj(w), Factor::plain(w), Factor::conj(w)];
                model.noise.moment(&f).re
            })
            .collect();
        let mut joint_alignment = vec![vec![0.0; users]; users];
        let mut los_coupling = vec![vec![0.0; users]; users];
        for k in 0..users {
            for i in (k + 1)..users {
                let (wk, wi) = (&weights[k], &weights[i]);
                let joint = model
                    .noise
                    .moment(&[Factor::plain(wk), Factor::conj(wk), Factor::plain(wi), Factor::conj(wi)])
                    .re;
                let mixed = model.noise.moment(&[Factor::plain(wk), Factor::conj(wi)]);
                let coupling = (mixed * model.los_gram[k][i].conj()).re;
                joint_alignment[k][i] = joint;
                joint_alignment[i][k] = joint;
                los_coupling[k][i] = coupling;
                los_coupling[i][k] = coupling;
            }
        }
        Self { reflection, alignment, alignment_sq, joint_alignment, los_coupling }
    }
}

/// Moments for one phase configuration.
struct Evaluation<'m> {
    model: &'m RateModel,
    stats: PhaseStats,
}

impl<'m> Evaluation<'m> {
    fn new(model: &'m RateModel, phases: &PhaseVector) -> Self {
        Self { model, stats: PhaseStats::new(model, phases) }
    }

    fn dims(&self) -> (f64, f64) {
        (self.model.config.antennas as f64, self.model.config.elements as f64)
    }

    fn coupling(&self, k: usize) -> f64 {
        self.model.ris_nlos_power * self.model.user_nlos_power[k]
    }

    // Moments of x_k = H u_k and W = H H^H over H and the phase errors.
    // lam2 / sig2 are the LoS / NLoS powers of each RIS-BS entry.

    fn vec_power(&self, k: usize) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        lam2 * m * self.stats.alignment[k] + sig2 * m * n
    }

    fn vec_power_sq(&self, k: usize) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let c = self.stats.alignment[k];
        lam2 * lam2 * m * m * self.stats.alignment_sq[k]
            + 2.0 * lam2 * sig2 * m * m * n * c
            + sig2 * sig2 * n * n * m * m
            + sig2 * sig2 * n * n * m
            + 2.0 * lam2 * sig2 * n * m * c
    }

    /// `E[|x_k|^2 tr W]`
    fn vec_power_trace(&self, k: usize) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let c = self.stats.alignment[k];
        sig2 * sig2 * (n * n * m * m + n * m)
            + lam2 * sig2 * m * m * n * c
            + lam2 * sig2 * m * m * n * n
            + 2.0 * lam2 * sig2 * m * c
            + lam2 * lam2 * m * m * n * c
    }

    /// `E[x_k^H W x_k]`
    fn vec_gram_quad(&self, k: usize) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let c = self.stats.alignment[k];
        (lam2 * lam2 * m * m * n + lam2 * sig2 * m * (2.0 * m + n)) * c
            + (lam2 * sig2 * m * n + sig2 * sig2 * m * (m + n)) * n
    }

    /// `E|x_k^H x_i|^2`
    fn vec_cross(&self, k: usize, i: usize) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let s = &self.stats;
        lam2 * lam2 * m * m * s.joint_alignment[k][i]
            + 2.0 * lam2 * sig2 * m * m * s.los_coupling[k][i]
            + lam2 * sig2 * m * n * (s.alignment[k] + s.alignment[i])
            + sig2 * sig2 * (m * m * self.model.los_gram[k][i].norm_sqr() + m * n * n)
    }

    fn trace(&self) -> f64 {
        let (m, n) = self.dims();
        (self.model.ris_los_power + self.model.ris_nlos_power) * m * n
    }

    /// `E[(tr W)^2]`
    fn trace_sq(&self) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let t = (lam2 + sig2) * m * n;
        t * t + sig2 * sig2 * m * n + 2.0 * sig2 * lam2 * m * n
    }

    /// `E[tr W^2]`
    fn trace_of_sq(&self) -> f64 {
        let (m, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        (lam2 * lam2 * m * m * n + lam2 * sig2 * m * (2.0 * m + n)) * n
            + n * (sig2 * lam2 * m * n + sig2 * sig2 * m * (m + n))
    }

    // Per-antenna counterparts: y_k = [H u_k]_m, q = [W]_mm.

    fn row_power(&self, k: usize) -> f64 {
        let (_, n) = self.dims();
        self.model.ris_los_power * self.stats.alignment[k] + self.model.ris_nlos_power * n
    }

    fn row_power_sq(&self, k: usize) -> f64 {
        let (_, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        lam2 * lam2 * self.stats.alignment_sq[k]
            + 4.0 * lam2 * sig2 * n * self.stats.alignment[k]
            + 2.0 * sig2 * sig2 * n * n
    }

    fn row_norm(&self) -> f64 {
        let (_, n) = self.dims();
        (self.model.ris_los_power + self.model.ris_nlos_power) * n
    }

    fn row_norm_sq(&self) -> f64 {
        let (_, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let q = (lam2 + sig2) * n;
        q * q + sig2 * sig2 * n + 2.0 * sig2 * lam2 * n
    }

    /// `E[|y_k|^2 q]`
    fn row_power_norm(&self, k: usize) -> f64 {
        let (_, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let c = self.stats.alignment[k];
        sig2 * sig2 * (n * n + n) + lam2 * sig2 * (n * c + n * n + 2.0 * c) + lam2 * lam2 * n * c
    }

    /// `E[|y_k|^2 |y_i|^2]`
    fn row_cross(&self, k: usize, i: usize) -> f64 {
        let (_, n) = self.dims();
        let (lam2, sig2) = (self.model.ris_los_power, self.model.ris_nlos_power);
        let s = &self.stats;
        sig2 * sig2 * (n * n + self.model.los_gram[k][i].norm_sqr())
            + lam2 * sig2 * n * (s.alignment[k] + s.alignment[i])
            + 2.0 * lam2 * sig2 * s.los_coupling[k][i]
            + lam2 * lam2 * s.joint_alignment[k][i]
    }

    fn user_terms(&self, k: usize) -> (f64, f64, f64) {
        (
            self.model.user_los_power[k],
            self.model.user_nlos_power[k],
            self.model.geometry.direct_gain[k],
        )
    }

    fn noise(&self, k: usize) -> f64 {
        let (m, _) = self.dims();
        let (s2, t, xi) = self.user_terms(k);
        s2 * self.vec_power(k) + m * xi + t * self.trace()
    }

    fn signal(&self, k: usize) -> f64 {
        let (m, _) = self.dims();
        let (s2, t, xi) = self.user_terms(k);
        s2 * s2 * self.vec_power_sq(k)
            + 2.0 * s2 * (m + 1.0) * xi * self.vec_power(k)
            + 2.0 * s2 * t * (self.vec_power_trace(k) + self.vec_gram_quad(k))
            + xi * xi * m * (m + 1.0)
            + 2.0 * xi * t * (m + 1.0) * self.trace()
            + t * t * (self.trace_sq() + self.trace_of_sq())
    }

    fn interference(&self, k: usize, i: usize) -> f64 {
        let (m, _) = self.dims();
        let (sk, tk, xk) = self.user_terms(k);
        let (si, ti, xi) = self.user_terms(i);
        sk * si * self.vec_cross(k, i)
            + si * (xk * self.vec_power(i) + tk * self.vec_gram_quad(i))
            + sk * (xi * self.vec_power(k) + ti * self.vec_gram_quad(k))
            + m * xk * xi
            + (xk * ti + xi * tk) * self.trace()
            + tk * ti * self.trace_of_sq()
    }

    fn fourth(&self, k: usize) -> f64 {
        let (s2, t, xi) = self.user_terms(k);
        s2 * s2 * self.row_power_sq(k)
            + 4.0 * s2 * xi * self.row_power(k)
            + 4.0 * s2 * t * self.row_power_norm(k)
            + 2.0 * xi * xi
            + 4.0 * xi * t * self.row_norm()
            + 2.0 * t * t * self.row_norm_sq()
    }

    fn cross(&self, k: usize, i: usize) -> f64 {
        let (sk, tk, xk) = self.user_terms(k);
        let (si, ti, xi) = self.user_terms(i);
        sk * si * self.row_cross(k, i)
            + sk * (xi * self.row_power(k) + ti * self.row_power_norm(k))
            + si * (xk * self.row_power(i) + tk * self.row_power_norm(i))
            + xk * xi
            + (xk * ti + xi * tk) * self.row_norm()
            + tk * ti * self.row_norm_sq()
    }

    fn hwi_parts(&self, k: usize, signal: f64, interference: &[f64]) -> f64 {
        let cfg = &self.model.config;
        let (m, _) = self.dims();
        let p = &cfg.powers;
        let ku = cfg.tx_impairment;
        let kb = cfg.rx_impairment;
        let coherent: f64 = (0..cfg.users)
            .filter(|&i| i != k)
            .map(|i| p[i] * interference[i])
            .sum::<f64>()
            + p[k] * signal;
        let per_antenna = if kb == 0.0 {
            0.0
        } else {
            p[k] * m * self.fourth(k)
                + (0..cfg.users).filter(|&i| i != k).map(|i| p[i] * m * self.cross(k, i)).sum::<f64>()
        };
        ku * coherent + (1.0 + ku) * kb * per_antenna
    }

    fn hwi(&self, k: usize) -> f64 {
        let signal = self.signal(k);
        let interference = self.interference_row(k);
        self.hwi_parts(k, signal, &interference)
    }

    fn interference_row(&self, k: usize) -> Vec<f64> {
        (0..self.model.config.users)
            .map(|i| if i == k { 0.0 } else { self.interference(k, i) })
            .collect()
    }

    fn user(&self, k: usize) -> UserRate {
        let cfg = &self.model.config;
        let signal = self.signal(k);
        let interference = self.interference_row(k);
        let noise = self.noise(k);
        let hwi = self.hwi_parts(k, signal, &interference);
        let rate = compose_rate(&cfg.powers, cfg.noise_power, k, signal, &interference, hwi, noise);
        UserRate { signal, interference, noise, hwi, rate }
    }
}

/// `log2(1 + p_k S / (sum_{i != k} p_i I_i + W + sigma^2 N))`
pub fn compose_rate(
    powers: &[f64],
    noise_power: f64,
    k: usize,
    signal: f64,
    interference: &[f64],
    hwi: f64,
    noise: f64,
) -> f64 {
    let interf: f64 = interference
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(i, v)| powers[i] * v)
        .sum();
    (1.0 + powers[k] * signal / (interf + hwi + noise_power * noise)).log2()
}
