//! Closed-form special cases, degeneracies and structural properties of the
//! analytic rate.

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rismimo::analytic::compose_rate;
use rismimo::channel::{planar_response, CMatrix, LosChannels};
use rismimo::config::array_shape;
use rismimo::{asymptotic_rate, Angles, Error, PhaseVector, RateModel, ScenarioGeometry, SystemConfig};

fn config(antennas: usize, elements: usize, users: usize) -> SystemConfig {
    SystemConfig {
        antennas,
        elements,
        users,
        powers: (0..users).map(|k| 0.5 + 0.25 * k as f64).collect(),
        noise_power: 0.3,
        ris_phase_noise: 0.1,
        tx_impairment: 0.05,
        rx_impairment: 0.07,
        spacing: 0.5,
    }
}

fn geometry(users: usize) -> ScenarioGeometry {
    ScenarioGeometry {
        ris_bs_gain: 1.7,
        user_ris_gain: (0..users).map(|k| 0.9 + 0.3 * k as f64).collect(),
        direct_gain: (0..users).map(|k| 0.4 + 0.1 * k as f64).collect(),
        ris_bs_rician: 2.0,
        user_ris_rician: (0..users).map(|k| 0.5 + k as f64).collect(),
        angles: Angles {
            user_azimuth: (0..users).map(|k| 0.2 + 1.9 * k as f64).collect(),
            user_elevation: (0..users).map(|k| 0.8 + 0.5 * k as f64).collect(),
            bs_azimuth: 1.4,
            bs_elevation: 0.6,
            ris_azimuth: 3.3,
            ris_elevation: 2.1,
        },
    }
}

fn nlos(mut g: ScenarioGeometry) -> ScenarioGeometry {
    g.ris_bs_rician = 0.0;
    g.user_ris_rician = vec![0.0; g.users()];
    g
}

fn phases(n: usize, offset: f64) -> PhaseVector {
    PhaseVector::wrapped((0..n).map(|j| offset + 0.37 * j as f64))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn coherent_phases(model: &RateModel, k: usize) -> PhaseVector {
    let los = model.los();
    PhaseVector::wrapped(los.ris_response.iter().zip(&los.users[k]).map(|(a, h)| a.arg() - h.arg()))
}

#[test]
fn reflection_gain_single_element_has_unit_magnitude() {
    let model = RateModel::new(&config(4, 1, 2), &geometry(2)).unwrap();
    let f = model.reflection_gain(&PhaseVector::new(vec![1.2]).unwrap(), 0).unwrap();
    assert!((f.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn coherent_alignment_gives_full_gain() {
    let model = RateModel::new(&config(4, 16, 2), &geometry(2)).unwrap();
    let f = model.reflection_gain(&coherent_phases(&model, 1), 1).unwrap();
    assert!((f.norm() - 16.0).abs() < 1e-10);
}

#[test]
fn reflection_gain_matches_direct_sum() {
    let cfg = config(4, 16, 2);
    let g = geometry(2);
    let model = RateModel::new(&cfg, &g).unwrap();
    let p = phases(16, 0.9);
    let a = planar_response(4, 4, g.angles.ris_azimuth, g.angles.ris_elevation, 0.5).unwrap();
    let h = planar_response(4, 4, g.angles.user_azimuth[0], g.angles.user_elevation[0], 0.5).unwrap();
    let mut direct = Complex64::new(0.0, 0.0);
    for n in 0..16 {
        direct += a[n].conj() * Complex64::from_polar(1.0, p.as_slice()[n]) * h[n];
    }
    assert!((model.reflection_gain(&p, 0).unwrap() - direct).norm() < 1e-12);
}

#[test]
fn alignment_constant_limits() {
    let mut cfg = config(4, 9, 2);
    let g = geometry(2);
    let p = phases(9, 0.1);
    cfg.ris_phase_noise = 1.0;
    let d = RateModel::new(&cfg, &g).unwrap().derived_constants(&p).unwrap();
    assert!(d.alignment.iter().all(|&c| (c - 9.0).abs() < 1e-12));
    cfg.ris_phase_noise = 0.0;
    let d = RateModel::new(&cfg, &g).unwrap().derived_constants(&p).unwrap();
    for (c, f) in d.alignment.iter().zip(&d.reflection) {
        assert_eq!(*c, f.norm_sqr());
        assert!(f.norm_sqr() <= 81.0 + 1e-9);
    }
    let expected = g.ris_bs_gain * g.user_ris_gain[1] / ((g.ris_bs_rician + 1.0) * (g.user_ris_rician[1] + 1.0));
    assert!(close(d.coupling[1], expected, 1e-15));
}

#[test]
fn nlos_signal_without_direct_link() {
    let (m, n) = (9.0, 4.0);
    let cfg = config(9, 4, 2);
    let mut g = nlos(geometry(2));
    g.direct_gain = vec![0.0; 2];
    let model = RateModel::new(&cfg, &g).unwrap();
    let a = g.ris_bs_gain * g.user_ris_gain[0];
    let expected = a * a * (m * m * n * n + m * n * n + m * n * (m + 1.0));
    assert!(close(model.signal(&phases(4, 0.0), 0).unwrap(), expected, 1e-12));
}

#[test]
fn nlos_interference_noise_and_cross_terms() {
    let (m, n) = (4.0, 9.0);
    let cfg = config(4, 9, 2);
    let g = nlos(geometry(2));
    let model = RateModel::new(&cfg, &g).unwrap();
    let p = phases(9, 0.4);
    let ak = g.ris_bs_gain * g.user_ris_gain[0];
    let ai = g.ris_bs_gain * g.user_ris_gain[1];
    let (xk, xi) = (g.direct_gain[0], g.direct_gain[1]);
    let interf = m * n * n * ak * ai + m * m * n * ak * ai + m * (ai * xk * n + ak * xi * n + xi * xk);
    assert!(close(model.interference(&p, 0, 1).unwrap(), interf, 1e-12));
    assert!(close(model.noise(&p, 0).unwrap(), m * (ak * n + xk), 1e-12));

    let mut no_direct = g.clone();
    no_direct.direct_gain = vec![0.0; 2];
    let model = RateModel::new(&cfg, &no_direct).unwrap();
    assert!(close(model.cross_moment(&p, 0, 1).unwrap(), ak * ai * n * (n + 1.0), 1e-12));
}

#[test]
fn coherent_noise_moment() {
    let mut cfg = config(4, 9, 2);
    cfg.ris_phase_noise = 0.0;
    let mut g = geometry(2);
    g.direct_gain = vec![0.0; 2];
    let model = RateModel::new(&cfg, &g).unwrap();
    let (rho, eps, n, m) = (g.ris_bs_rician, g.user_ris_rician[0], 9.0, 4.0);
    let a = g.ris_bs_gain * g.user_ris_gain[0] / ((rho + 1.0) * (eps + 1.0));
    let expected = m * a * (rho * eps * n * n + n * (rho + eps + 1.0));
    assert!(close(model.noise(&coherent_phases(&model, 0), 0).unwrap(), expected, 1e-12));
}

#[test]
fn fourth_moment_of_direct_link_only() {
    let cfg = config(4, 4, 2);
    let mut g = geometry(2);
    g.user_ris_gain = vec![0.0; 2];
    let model = RateModel::new(&cfg, &g).unwrap();
    let xi = g.direct_gain[1];
    assert!(close(model.fourth_moment_per_antenna(&phases(4, 0.0), 1).unwrap(), 2.0 * xi * xi, 1e-14));
}

#[test]
fn interferer_equal_to_user_is_a_domain_error() {
    let model = RateModel::new(&config(4, 4, 2), &geometry(2)).unwrap();
    assert!(matches!(model.interference(&phases(4, 0.0), 1, 1), Err(Error::Domain(_))));
    assert!(matches!(model.cross_moment(&phases(4, 0.0), 0, 0), Err(Error::Domain(_))));
}

#[test]
fn hwi_degeneracies() {
    let g = geometry(3);
    let p = phases(4, 0.3);
    let mut cfg = config(4, 4, 3);
    cfg.tx_impairment = 0.0;
    cfg.rx_impairment = 0.0;
    let b = RateModel::new(&cfg, &g).unwrap().breakdown(&p).unwrap();
    assert!(b.users.iter().all(|u| u.hwi == 0.0));

    cfg.tx_impairment = 0.11;
    let b = RateModel::new(&cfg, &g).unwrap().breakdown(&p).unwrap();
    for (k, u) in b.users.iter().enumerate() {
        let interf: f64 = u.interference.iter().zip(&cfg.powers).map(|(i, p)| i * p).sum();
        let expected = 0.11 * (interf + cfg.powers[k] * u.signal);
        assert!(close(u.hwi, expected, 1e-12));
    }
}

#[test]
fn full_phase_noise_removes_phase_dependence() {
    let mut cfg = config(4, 9, 2);
    cfg.ris_phase_noise = 1.0;
    let model = RateModel::new(&cfg, &geometry(2)).unwrap();
    let a = model.breakdown(&phases(9, 0.0)).unwrap();
    let b = model.breakdown(&phases(9, 2.0)).unwrap();
    for (x, y) in a.users.iter().zip(&b.users) {
        assert!(close(x.rate, y.rate, 1e-12));
        assert!(close(x.hwi, y.hwi, 1e-12));
    }
}

#[test]
fn vanishing_power_gives_vanishing_rate() {
    let mut cfg = config(4, 4, 2);
    let model = RateModel::new(&cfg, &geometry(2)).unwrap();
    let base = model.rate(&phases(4, 0.0), 0).unwrap();
    cfg.powers[0] = 1e-12;
    let r = RateModel::new(&cfg, &geometry(2)).unwrap().rate(&phases(4, 0.0), 0).unwrap();
    assert!(r < 1e-9 && r > 0.0 && base > 1e3 * r);
}

#[test]
fn single_user_ideal_closed_form() {
    let (m, n) = (16.0, 9.0);
    let mut cfg = config(16, 9, 1).with_impairments(0.0);
    cfg.powers = vec![2.0];
    let mut g = nlos(geometry(1));
    g.direct_gain = vec![0.0];
    let a = g.ris_bs_gain * g.user_ris_gain[0];
    let expected = (1.0 + 2.0 * a * a * (m * m * n * n + m * n * n + m * n * (m + 1.0)) / (cfg.noise_power * m * a * n)).log2();
    let r = RateModel::new(&cfg, &g).unwrap().rate(&phases(9, 0.0), 0).unwrap();
    assert!(close(r, expected, 1e-12));
}

#[test]
fn asymptotic_rate_special_cases() {
    let mut cfg = config(4, 9, 1);
    cfg.tx_impairment = 0.0;
    let g = nlos(geometry(1));
    let (nu, mu, xi, n, p) = (g.ris_bs_gain, g.user_ris_gain[0], g.direct_gain[0], 9.0, 0.8);
    let a1 = nu * mu * n * (nu * mu * n + nu * mu + 2.0 * xi) + xi * xi;
    let a3 = nu * mu * n + xi;
    let expected = (1.0 + p * a1 / (a3 * cfg.noise_power)).log2();
    assert!(close(asymptotic_rate(&g, &cfg, 0, p).unwrap(), expected, 1e-14));

    let mut one = g.clone();
    one.direct_gain = vec![0.0];
    let mut cfg1 = config(4, 1, 1);
    cfg1.tx_impairment = 0.0;
    let expected = (1.0 + p * nu * mu * (nu * mu + nu * mu) / (nu * mu * cfg1.noise_power)).log2();
    assert!(close(asymptotic_rate(&one, &cfg1, 0, p).unwrap(), expected, 1e-14));

    assert!(matches!(asymptotic_rate(&geometry(1), &cfg, 0, p), Err(Error::Precondition(_))));
}

#[test]
fn composition_matches_breakdown() {
    let cfg = config(4, 4, 3);
    let b = RateModel::new(&cfg, &geometry(3)).unwrap().breakdown(&phases(4, 1.0)).unwrap();
    for (k, u) in b.users.iter().enumerate() {
        let r = compose_rate(&cfg.powers, cfg.noise_power, k, u.signal, &u.interference, u.hwi, u.noise);
        assert_eq!(r, u.rate);
        assert_eq!(u.interference[k], 0.0);
    }
    assert!(b.min_rate() <= b.sum_rate() / 3.0);
}

#[test]
fn user_relabeling_permutes_rates() {
    let cfg = config(4, 4, 2);
    let g = geometry(2);
    let swap = |v: &Vec<f64>| vec![v[1], v[0]];
    let mut cfg2 = cfg.clone();
    cfg2.powers = swap(&cfg.powers);
    let mut g2 = g.clone();
    g2.user_ris_gain = swap(&g.user_ris_gain);
    g2.direct_gain = swap(&g.direct_gain);
    g2.user_ris_rician = swap(&g.user_ris_rician);
    g2.angles.user_azimuth = swap(&g.angles.user_azimuth);
    g2.angles.user_elevation = swap(&g.angles.user_elevation);
    let p = phases(4, 0.5);
    let a = RateModel::new(&cfg, &g).unwrap().breakdown(&p).unwrap().rates();
    let b = RateModel::new(&cfg2, &g2).unwrap().breakdown(&p).unwrap().rates();
    assert!(close(a[0], b[1], 1e-12) && close(a[1], b[0], 1e-12));
}

fn scenario_strategy() -> impl Strategy<Value = (SystemConfig, ScenarioGeometry, Vec<f64>)> {
    (
        prop::sample::select(vec![1usize, 4, 9, 16]),
        prop::sample::select(vec![1usize, 2, 4, 9]),
        1usize..4,
        0.0..1.0f64,
        0.0..0.3f64,
        0.0..0.3f64,
        (0.0..20.0f64, 0.0..20.0f64, 0.0..2.0f64, 1e-3..1.0f64),
        prop::collection::vec(0.0..TAU, 9),
        prop::collection::vec(0.0..TAU, 6),
    )
        .prop_map(|(m, n, k, kr, ku, kb, (rho, eps, xi, sigma), ph, ang)| {
            let mut cfg = config(m, n, k);
            cfg.ris_phase_noise = kr;
            cfg.tx_impairment = ku;
            cfg.rx_impairment = kb;
            cfg.noise_power = sigma;
            let mut g = geometry(k);
            g.ris_bs_rician = rho;
            g.user_ris_rician = (0..k).map(|i| eps * (1.0 + i as f64)).collect();
            g.direct_gain = vec![xi; k];
            g.angles.bs_azimuth = ang[0];
            g.angles.ris_azimuth = ang[1];
            g.angles.ris_elevation = ang[2];
            g.angles.user_azimuth = (0..k).map(|i| ang[3 + i]).collect();
            (cfg, g, ph[..n].to_vec())
        })
}

fn permuted_model(model: &RateModel, perm: &[usize]) -> RateModel {
    let los = model.los();
    let ris_response: Vec<Complex64> = perm.iter().map(|&j| los.ris_response[j]).collect();
    let users = los.users.iter().map(|h| perm.iter().map(|&j| h[j]).collect()).collect();
    let bs_response = los.bs_response.clone();
    let ris_bs = CMatrix::from_fn(bs_response.len(), ris_response.len(), |m, n| bs_response[m] * ris_response[n].conj());
    let permuted = LosChannels { bs_response, ris_response, ris_bs, users };
    RateModel::with_los(model.config(), model.geometry(), permuted).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_nonnegative_and_rates_finite((cfg, g, ph) in scenario_strategy()) {
        let b = RateModel::new(&cfg, &g).unwrap().breakdown(&PhaseVector::wrapped(ph)).unwrap();
        for u in &b.users {
            prop_assert!(u.signal >= 0.0 && u.noise >= 0.0 && u.hwi >= 0.0);
            prop_assert!(u.interference.iter().all(|&i| i >= 0.0));
            prop_assert!(u.rate.is_finite() && u.rate > 0.0);
        }
    }

    #[test]
    fn element_permutation_invariance((cfg, g, ph) in scenario_strategy(), shift in 0usize..9) {
        let model = RateModel::new(&cfg, &g).unwrap();
        let n = cfg.elements;
        let perm: Vec<usize> = (0..n).rev().map(|j| (j + shift) % n).collect();
        let p = PhaseVector::wrapped(ph.clone());
        let q = PhaseVector::wrapped(perm.iter().map(|&j| ph[j]));
        let a = model.breakdown(&p).unwrap();
        let b = permuted_model(&model, &perm).breakdown(&q).unwrap();
        for (x, y) in a.users.iter().zip(&b.users) {
            prop_assert!(close(x.signal, y.signal, 1e-9));
            prop_assert!(close(x.hwi, y.hwi, 1e-9));
            prop_assert!(close(x.rate, y.rate, 1e-9));
        }
    }

    #[test]
    fn rate_nonincreasing_in_impairments_and_noise(
        (cfg, g, ph) in scenario_strategy(),
        dku in 0.0..0.2f64,
        dkb in 0.0..0.2f64,
        scale in 1.0..10.0f64,
    ) {
        let p = PhaseVector::wrapped(ph);
        let base = RateModel::new(&cfg, &g).unwrap().breakdown(&p).unwrap().rates();
        let mut worse = vec![cfg.clone(), cfg.clone(), cfg.clone()];
        worse[0].tx_impairment += dku;
        worse[1].rx_impairment += dkb;
        worse[2].noise_power *= scale;
        for c in worse {
            let r = RateModel::new(&c, &g).unwrap().breakdown(&p).unwrap().rates();
            for (a, b) in base.iter().zip(&r) {
                prop_assert!(*b <= *a * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn reflection_gain_bounded((cfg, g, ph) in scenario_strategy()) {
        let d = RateModel::new(&cfg, &g).unwrap().derived_constants(&PhaseVector::wrapped(ph)).unwrap();
        let n = cfg.elements as f64;
        for (f, c) in d.reflection.iter().zip(&d.alignment) {
            prop_assert!(f.norm_sqr() <= n * n * (1.0 + 1e-12));
            prop_assert!(*c >= 0.0 && *c <= n.max(n * n) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn rectangular_arrays_follow_shape() {
    assert_eq!(array_shape(2), (1, 2));
    let model = RateModel::new(&config(50, 2, 2), &geometry(2)).unwrap();
    assert_eq!(model.los().bs_response.len(), 50);
    assert_eq!(model.los().ris_response.len(), 2);
}
