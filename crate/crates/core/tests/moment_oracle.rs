//! Closed-form moments against the Monte-Carlo oracle on small scenarios.

use rismimo::{Angles, Moment, MonteCarlo, PhaseVector, RateModel, ScenarioGeometry, SystemConfig};

fn scenario(antennas: usize, elements: usize, users: usize, k_r: f64) -> (SystemConfig, ScenarioGeometry) {
    let config = SystemConfig {
        antennas,
        elements,
        users,
        powers: (0..users).map(|k| 1.0 + 0.3 * k as f64).collect(),
        noise_power: 0.5,
        ris_phase_noise: k_r,
        tx_impairment: 0.1,
        rx_impairment: 0.1,
        spacing: 0.5,
    };
    let geometry = ScenarioGeometry {
        ris_bs_gain: 1.3,
        user_ris_gain: (0..users).map(|k| 0.8 + 0.4 * k as f64).collect(),
        direct_gain: (0..users).map(|k| 0.5 + 0.2 * k as f64).collect(),
        ris_bs_rician: 2.5,
        user_ris_rician: (0..users).map(|k| 1.0 + k as f64).collect(),
        angles: Angles {
            user_azimuth: (0..users).map(|k| 0.3 + 1.7 * k as f64).collect(),
            user_elevation: (0..users).map(|k| 0.9 + 0.6 * k as f64).collect(),
            bs_azimuth: 2.1,
            bs_elevation: 1.2,
            ris_azimuth: 5.0,
            ris_elevation: 0.4,
        },
    };
    (config, geometry)
}

fn check_all(config: &SystemConfig, geometry: &ScenarioGeometry, phases: &PhaseVector, n: usize, seed: u64) -> f64 {
    let model = RateModel::new(config, geometry).unwrap();
    let mc = MonteCarlo::new(geometry, config).unwrap();
    let mut worst: f64 = 0.0;
    let (k, i) = (0, 1);
    let cases = [
        (Moment::Noise, model.noise(phases, k).unwrap()),
        (Moment::Signal, model.signal(phases, k).unwrap()),
        (Moment::Interference(i), model.interference(phases, k, i).unwrap()),
        (Moment::Fourth, model.fourth_moment_per_antenna(phases, k).unwrap()),
        (Moment::Cross(i), model.cross_moment(phases, k, i).unwrap()),
    ];
    for (which, analytic) in cases {
        let est = mc.moment(which, k, phases, n, seed).unwrap();
        let z = est.z_score(analytic);
        println!("{which:>10}: analytic {analytic:.6e} mc {:.6e} ± {:.2e} z={z:.2}", est.mean, est.std_error);
        worst = worst.max(z);
    }
    worst
}

#[test]
fn small_scenarios_agree_with_monte_carlo() {
    for (m, n, k_r, seed) in [(4, 4, 0.0, 1), (4, 4, 0.3, 2), (9, 4, 1.0, 3), (1, 1, 0.2, 4), (4, 9, 0.08, 5)] {
        let (config, geometry) = scenario(m, n, 2, k_r);
        let phases = PhaseVector::wrapped((0..n).map(|j| 0.7 * j as f64 + 0.2));
        println!("M={m} N={n} k_r={k_r}");
        let worst = check_all(&config, &geometry, &phases, 400_000, seed);
        assert!(worst < 4.0, "worst z-score {worst}");
    }
}
