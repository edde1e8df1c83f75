//! Scenario files: a sectioned TOML document resolved into a system
//! configuration, geometry and GA settings.
//!
//! ```toml
//! [system]
//! antennas = 16
//! elements = 16
//! users = 2
//! power_dbm = 30.0            # or powers_dbm = [30.0, 27.0]
//! noise_dbm = -104.0
//! impairment = 0.08           # k_r = k_u = k_b unless set individually
//!
//! [geometry]
//! ris_bs_distance = 1000.0
//! user_ris_distance = 20.0     # scalar or per-user list
//! user_bs_distances = [988.0, 980.0]
//! ris_bs_rician = 10.0
//! user_ris_rician = 1.0
//!
//! [geometry.angles]
//! mode = "random"              # or "explicit" with the angle lists below
//!
//! [path_loss]
//! reference = 1e-3
//! ris_bs_exponent = 2.5
//!
//! [ga]
//! elites = 4
//! ```
//!
//! Omitted keys take either the full-size defaults ([`Scale::Paper`]) or the
//! reduced desk defaults ([`Scale::Desk`]).

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::rng_for;
use crate::config::{Angles, ScenarioGeometry, SystemConfig};
use crate::error::{Error, Result};
use crate::ga::GaConfig;

/// RNG stream reserved for random angle draws.
const ANGLE_STREAM: u64 = 0x616e676c;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Default set for omitted keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    /// M = 16, N = 16, K = 2, 2e4 Monte-Carlo draws.
    #[default]
    Desk,
    /// M = 50, N = 25, K = 4.
    Paper,
}

impl Scale {
    fn antennas(self) -> usize {
        match self {
            Scale::Desk => 16,
            Scale::Paper => 50,
        }
    }

    fn elements(self) -> usize {
        match self {
            Scale::Desk => 16,
            Scale::Paper => 25,
        }
    }

    fn user_bs_distances(self) -> Vec<f64> {
        match self {
            Scale::Desk => vec![988.0, 980.0],
            Scale::Paper => vec![988.0, 980.0, 980.0, 988.0],
        }
    }

    pub fn mc_samples(self) -> usize {
        match self {
            Scale::Desk => 20_000,
            Scale::Paper => 100_000,
        }
    }
}

/// A scalar applied to every user or an explicit per-user list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    All(f64),
    Each(Vec<f64>),
}

impl PerUser {
    fn expand(&self, users: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            PerUser::All(v) => Ok(vec![*v; users]),
            PerUser::Each(v) if v.len() == users => Ok(v.clone()),
            PerUser::Each(v) => Err(Error::InvalidConfig(format!("{} {name} entries for {users} users", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: Option<usize>,
    pub elements: Option<usize>,
    pub users: Option<usize>,
    pub power_dbm: Option<f64>,
    pub powers_dbm: Option<Vec<f64>>,
    pub noise_dbm: Option<f64>,
    pub impairment: Option<f64>,
    pub ris_phase_noise: Option<f64>,
    pub tx_impairment: Option<f64>,
    pub rx_impairment: Option<f64>,
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleMode {
    #[default]
    Random,
    Explicit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleSection {
    pub mode: AngleMode,
    /// Seed for random angles; the run seed is used when absent.
    pub seed: Option<u64>,
    pub user_azimuth: Option<Vec<f64>>,
    pub user_elevation: Option<Vec<f64>>,
    pub bs_azimuth: Option<f64>,
    pub bs_elevation: Option<f64>,
    pub ris_azimuth: Option<f64>,
    pub ris_elevation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub ris_bs_distance: Option<f64>,
    pub user_ris_distance: Option<PerUser>,
    pub user_bs_distances: Option<Vec<f64>>,
    pub ris_bs_rician: Option<f64>,
    pub user_ris_rician: Option<PerUser>,
    pub angles: AngleSection,
}

/// Large-scale coefficient `reference * distance^-exponent` per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLoss {
    pub reference: f64,
    pub ris_bs_exponent: f64,
    pub user_ris_exponent: f64,
    pub direct_exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self { reference: 1e-3, ris_bs_exponent: 2.5, user_ris_exponent: 2.0, direct_exponent: 4.0 }
    }
}

impl PathLoss {
    pub fn gain(reference: f64, distance: f64, exponent: f64) -> f64 {
        reference * distance.powf(-exponent)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    pub geometry: GeometrySection,
    pub path_loss: PathLoss,
    pub ga: GaConfig,
    pub mc_samples: Option<usize>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub geometry: ScenarioGeometry,
    pub ga: GaConfig,
    pub mc_samples: usize,
    pub path_loss: PathLoss,
    /// Distances the large-scale coefficients were derived from.
    pub ris_bs_distance: f64,
    pub user_ris_distances: Vec<f64>,
    pub user_bs_distances: Vec<f64>,
}

fn positive(values: &[f64], name: &str) -> Result<()> {
    if values.iter().all(|d| d.is_finite() && *d > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive")))
    }
}

fn random_angles(users: usize, seed: u64) -> Angles {
    let mut rng = rng_for(seed, ANGLE_STREAM);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(0.0..=TAU)).collect() };
    let user_azimuth = draw(users);
    let user_elevation = draw(users);
    let link = draw(4);
    Angles {
        user_azimuth,
        user_elevation,
        bs_azimuth: link[0],
        bs_elevation: link[1],
        ris_azimuth: link[2],
        ris_elevation: link[3],
    }
}

fn explicit_angles(a: &AngleSection) -> Result<Angles> {
    let missing = |name: &str| Error::InvalidConfig(format!("explicit angles need `{name}`"));
    Ok(Angles {
        user_azimuth: a.user_azimuth.clone().ok_or_else(|| missing("user_azimuth"))?,
        user_elevation: a.user_elevation.clone().ok_or_else(|| missing("user_elevation"))?,
        bs_azimuth: a.bs_azimuth.ok_or_else(|| missing("bs_azimuth"))?,
        bs_elevation: a.bs_elevation.ok_or_else(|| missing("bs_elevation"))?,
        ris_azimuth: a.ris_azimuth.ok_or_else(|| missing("ris_azimuth"))?,
        ris_elevation: a.ris_elevation.ok_or_else(|| missing("ris_elevation"))?,
    })
}

/// Resolves a scenario file with the given defaults; `seed` drives random
/// angles unless the file pins its own angle seed.
pub fn build_scenario_with(file: &ScenarioFile, scale: Scale, seed: u64) -> Result<Scenario> {
    let s = &file.system;
    let g = &file.geometry;
    let user_bs_distances = g.user_bs_distances.clone().unwrap_or_else(|| scale.user_bs_distances());
    let users = s.users.unwrap_or(user_bs_distances.len());
    if users != user_bs_distances.len() {
        return Err(Error::InvalidConfig(format!(
            "{users} users but {} user-BS distances",
            user_bs_distances.len()
        )));
    }
    let powers_dbm = match (&s.powers_dbm, s.power_dbm) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig("give either `power_dbm` or `powers_dbm`, not both".into()))
        }
        (Some(p), None) => PerUser::Each(p.clone()),
        (None, p) => PerUser::All(p.unwrap_or(30.0)),
    };
    let level = s.impairment.unwrap_or(0.08);
    let config = SystemConfig {
        antennas: s.antennas.unwrap_or(scale.antennas()),
        elements: s.elements.unwrap_or(scale.elements()),
        users,
        powers: powers_dbm.expand(users, "transmit power")?.into_iter().map(dbm_to_watts).collect(),
        noise_power: dbm_to_watts(s.noise_dbm.unwrap_or(-104.0)),
        ris_phase_noise: s.ris_phase_noise.unwrap_or(level),
        tx_impairment: s.tx_impairment.unwrap_or(level),
        rx_impairment: s.rx_impairment.unwrap_or(level),
        spacing: s.spacing.unwrap_or(0.5),
    };
    config.validate()?;

    let ris_bs_distance = g.ris_bs_distance.unwrap_or(1000.0);
    let user_ris_distances = g.user_ris_distance.clone().unwrap_or(PerUser::All(20.0)).expand(users, "user-RIS distance")?;
    positive(&[ris_bs_distance], "RIS-BS distance")?;
    positive(&user_ris_distances, "user-RIS distances")?;
    positive(&user_bs_distances, "user-BS distances")?;

    let pl = &file.path_loss;
    let angles = match g.angles.mode {
        AngleMode::Random => random_angles(users, g.angles.seed.unwrap_or(seed)),
        AngleMode::Explicit => explicit_angles(&g.angles)?,
    };
    let geometry = ScenarioGeometry {
        ris_bs_gain: PathLoss::gain(pl.reference, ris_bs_distance, pl.ris_bs_exponent),
        user_ris_gain: user_ris_distances.iter().map(|&d| PathLoss::gain(pl.reference, d, pl.user_ris_exponent)).collect(),
        direct_gain: user_bs_distances.iter().map(|&d| PathLoss::gain(pl.reference, d, pl.direct_exponent)).collect(),
        ris_bs_rician: g.ris_bs_rician.unwrap_or(10.0),
        user_ris_rician: g.user_ris_rician.clone().unwrap_or(PerUser::All(1.0)).expand(users, "user Rician factor")?,
        angles,
    };
    geometry.validate(users)?;
    file.ga.validate()?;

    Ok(Scenario {
        config,
        geometry,
        ga: file.ga.clone(),
        mc_samples: file.mc_samples.unwrap_or(scale.mc_samples()),
        path_loss: pl.clone(),
        ris_bs_distance,
        user_ris_distances,
        user_bs_distances,
    })
}

/// Resolves a scenario file with the full-size defaults.
pub fn build_scenario(file: &ScenarioFile, seed: u64) -> Result<Scenario> {
    build_scenario_with(file, Scale::Paper, seed)
}

impl Scenario {
    /// SHA-256 over a canonical rendering of every resolved value.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "{:?}|{:?}|{:?}|{}|{:?}|{:?}|{:?}|{:?}",
            self.config,
            self.geometry,
            self.ga,
            self.mc_samples,
            self.path_loss,
            self.ris_bs_distance,
            self.user_ris_distances,
            self.user_bs_distances
        );
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(-104.0) - 10f64.powf(-13.4)).abs() < 1e-28);
        for dbm in [-104.0, 30.0, 0.0, 17.5] {
            assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() < 1e-12);
        }
    }

    #[test]
    fn defaults_follow_path_loss_rules() {
        let s = build_scenario(&ScenarioFile::default(), 0).unwrap();
        assert_eq!((s.config.antennas, s.config.elements, s.config.users), (50, 25, 4));
        assert!(s.geometry.user_ris_gain.iter().all(|&mu| (mu - 2.5e-6).abs() < 1e-20));
        assert!((s.geometry.ris_bs_gain - 1e-3 * 1000f64.powf(-2.5)).abs() < 1e-25);
        assert_eq!(s.geometry.direct_gain[0], 1e-3 * 988f64.powi(-4));
        assert_eq!(s.geometry.direct_gain[1], 1e-3 * 980f64.powi(-4));
        assert_eq!(s.config.tx_impairment, 0.08);
        assert_eq!(s.config.powers, vec![1.0; 4]);
        assert_eq!(s.geometry.ris_bs_rician, 10.0);
        assert_eq!(s.geometry.user_ris_rician, vec![1.0; 4]);
    }

    #[test]
    fn desk_scale_defaults() {
        let s = build_scenario_with(&ScenarioFile::default(), Scale::Desk, 0).unwrap();
        assert_eq!((s.config.antennas, s.config.elements, s.config.users), (16, 16, 2));
        assert_eq!(s.mc_samples, 20_000);
    }

    #[test]
    fn random_angles_are_seeded_and_in_range() {
        let a = build_scenario(&ScenarioFile::default(), 3).unwrap();
        let b = build_scenario(&ScenarioFile::default(), 3).unwrap();
        let c = build_scenario(&ScenarioFile::default(), 4).unwrap();
        assert_eq!(a.geometry.angles, b.geometry.angles);
        assert_ne!(a.geometry.angles, c.geometry.angles);
        assert!(a.geometry.angles.user_azimuth.iter().all(|t| (0.0..=TAU).contains(t)));
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "[system]\nantennas = 16\nelements = \"many\"\n";
        match ScenarioFile::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match ScenarioFile::parse("[system]\n\n\nbogus = 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn user_count_must_match_distances() {
        let file = ScenarioFile::parse("[system]\nusers = 3\n[geometry]\nuser_bs_distances = [1.0, 2.0]\n").unwrap();
        assert!(matches!(build_scenario(&file, 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn explicit_angles_and_lists() {
        let text = r#"
[system]
antennas = 4
elements = 9
powers_dbm = [30.0, 20.0]
[geometry]
user_bs_distances = [100.0, 200.0]
user_ris_rician = [0.0, 2.0]
[geometry.angles]
mode = "explicit"
user_azimuth = [0.1, 0.2]
user_elevation = [0.3, 0.4]
bs_azimuth = 0.5
bs_elevation = 0.6
ris_azimuth = 0.7
ris_elevation = 0.8
[ga]
elites = 2
max_iters = 10
"#;
        let s = build_scenario(&ScenarioFile::parse(text).unwrap(), 0).unwrap();
        assert_eq!(s.config.powers, vec![1.0, 0.1]);
        assert_eq!(s.geometry.angles.ris_elevation, 0.8);
        assert_eq!(s.geometry.user_ris_rician, vec![0.0, 2.0]);
        assert_eq!(s.ga.elites, 2);
        assert_eq!(s.ga.max_iters, Some(10));
    }

    #[test]
    fn incomplete_explicit_angles_rejected() {
        let file = ScenarioFile::parse("[geometry.angles]\nmode = \"explicit\"\n").unwrap();
        assert!(build_scenario(&file, 0).is_err());
    }
}
