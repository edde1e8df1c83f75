//! Scalar system parameters, scenario geometry and the phase-shift design
//! variable.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Returns `Some(r)` when `z == r * r`.
pub fn exact_sqrt(z: usize) -> Option<usize> {
    let r = (z as f64).sqrt().round() as usize;
    (r * r == z).then_some(r)
}

/// `(rows, cols)` of the planar layout for `z` elements: the largest divisor
/// not above `sqrt(z)` gives the rows.
pub fn array_shape(z: usize) -> (usize, usize) {
    let rows = (1..=z).take_while(|r| r * r <= z).filter(|r| z.is_multiple_of(*r)).last().unwrap_or(1);
    (rows, z / rows.max(1))
}

/// All scalar parameters of the uplink system. Powers are linear watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count. A perfect square gives a square planar array;
    /// other counts use the most square rectangular layout, see
    /// [`array_shape`].
    pub antennas: usize,
    /// RIS element count, laid out like the BS array.
    pub elements: usize,
    /// Single-antenna user count.
    pub users: usize,
    /// Per-user transmit power, length `users`.
    pub powers: Vec<f64>,
    pub noise_power: f64,
    /// RIS phase-noise severity; phase errors are uniform on `[-k pi, k pi]`.
    pub ris_phase_noise: f64,
    /// Transmitter distortion severity.
    pub tx_impairment: f64,
    /// Receiver distortion severity.
    pub rx_impairment: f64,
    /// Element spacing over wavelength, shared by both arrays.
    pub spacing: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.elements == 0 || self.users == 0 {
            return Err(Error::InvalidConfig(
                "antenna, element and user counts must be positive".into(),
            ));
        }
        if self.powers.len() != self.users {
            return Err(Error::Dimension(format!(
                "{} transmit powers for {} users",
                self.powers.len(),
                self.users
            )));
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidConfig("transmit powers must be positive".into()));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::InvalidConfig("noise power must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.ris_phase_noise) {
            return Err(Error::InvalidConfig("RIS phase-noise severity must lie in [0, 1]".into()));
        }
        for (name, v) in [("transmit", self.tx_impairment), ("receive", self.rx_impairment)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} impairment severity must be nonnegative"
                )));
            }
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidConfig("element spacing must be positive".into()));
        }
        Ok(())
    }

    /// Copy with all three impairment severities set to `level`.
    pub fn with_impairments(&self, level: f64) -> Self {
        Self {
            ris_phase_noise: level,
            tx_impairment: level,
            rx_impairment: level,
            ..self.clone()
        }
    }
}

/// Azimuth/elevation angles (radians) of every LoS component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    /// Per-user arrival azimuth at the RIS.
    pub user_azimuth: Vec<f64>,
    /// Per-user arrival elevation at the RIS.
    pub user_elevation: Vec<f64>,
    /// RIS-to-BS angles seen by the BS array.
    pub bs_azimuth: f64,
    pub bs_elevation: f64,
    /// RIS-to-BS angles seen by the RIS array.
    pub ris_azimuth: f64,
    pub ris_elevation: f64,
}

/// Large-scale fading, Rician factors and angles.
///
/// Rician factors may be `f64::INFINITY`, which selects the pure-LoS limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    /// RIS-BS large-scale coefficient.
    pub ris_bs_gain: f64,
    /// User-RIS large-scale coefficients.
    pub user_ris_gain: Vec<f64>,
    /// User-BS (direct link) large-scale coefficients.
    pub direct_gain: Vec<f64>,
    /// RIS-BS Rician factor.
    pub ris_bs_rician: f64,
    /// User-RIS Rician factors.
    pub user_ris_rician: Vec<f64>,
    pub angles: Angles,
}

impl ScenarioGeometry {
    pub fn users(&self) -> usize {
        self.user_ris_gain.len()
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        let lens = [
            ("user-RIS gains", self.user_ris_gain.len()),
            ("direct-link gains", self.direct_gain.len()),
            ("user Rician factors", self.user_ris_rician.len()),
            ("user azimuths", self.angles.user_azimuth.len()),
            ("user elevations", self.angles.user_elevation.len()),
        ];
        for (name, len) in lens {
            if len != users {
                return Err(Error::Dimension(format!("{len} {name} for {users} users")));
            }
        }
        let gains = std::iter::once(self.ris_bs_gain)
            .chain(self.user_ris_gain.iter().copied())
            .chain(self.direct_gain.iter().copied());
        for g in gains {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidConfig(format!("large-scale coefficient {g} is invalid")));
            }
        }
        for r in std::iter::once(self.ris_bs_rician).chain(self.user_ris_rician.iter().copied()) {
            if r.is_nan() || r < 0.0 {
                return Err(Error::InvalidConfig(format!("Rician factor {r} is invalid")));
            }
        }
        let a = &self.angles;
        let all_finite = a
            .user_azimuth
            .iter()
            .chain(&a.user_elevation)
            .chain([&a.bs_azimuth, &a.bs_elevation, &a.ris_azimuth, &a.ris_elevation])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidConfig("angles must be finite".into()));
        }
        Ok(())
    }
}

/// Splits unit power into `(LoS, NLoS)` fractions for a Rician factor.
pub fn rician_split(factor: f64) -> (f64, f64) {
    if factor.is_infinite() {
        (1.0, 0.0)
    } else {
        (factor / (factor + 1.0), 1.0 / (factor + 1.0))
    }
}

/// RIS phase shifts, each in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if let Some(bad) = phases.iter().find(|t| !(0.0..TAU).contains(*t)) {
            return Err(Error::Domain(format!("phase {bad} outside [0, 2pi)")));
        }
        Ok(Self(phases))
    }

    /// Maps arbitrary finite angles into `[0, 2 pi)`.
    pub fn wrapped(phases: impl IntoIterator<Item = f64>) -> Self {
        Self(phases.into_iter().map(wrap_phase).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn wrap_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn array_shapes() {
        assert_eq!(array_shape(16), (4, 4));
        assert_eq!(array_shape(50), (5, 10));
        assert_eq!(array_shape(7), (1, 7));
        assert_eq!(array_shape(1), (1, 1));
    }

    use super::*;

    #[test]
    fn exact_sqrt_detects_squares() {
        assert_eq!(exact_sqrt(1), Some(1));
        assert_eq!(exact_sqrt(16), Some(4));
        assert_eq!(exact_sqrt(4096), Some(64));
        assert_eq!(exact_sqrt(50), None);
    }

    #[test]
    fn wrapping_stays_in_range() {
        for t in [-1e-300, -TAU, TAU, 3.0 * TAU + 0.5, -0.1] {
            let w = wrap_phase(t);
            assert!((0.0..TAU).contains(&w), "{t} -> {w}");
        }
        assert!(PhaseVector::new(vec![TAU]).is_err());
        assert!(PhaseVector::new(vec![-0.1]).is_err());
    }

    #[test]
    fn rician_split_handles_limits() {
        assert_eq!(rician_split(0.0), (0.0, 1.0));
        assert_eq!(rician_split(f64::INFINITY), (1.0, 0.0));
        let (l, n) = rician_split(10.0);
        assert!((l + n - 1.0).abs() < 1e-15);
    }
}
