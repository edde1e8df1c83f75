//! Exact low-order statistics of sums of phase-noise-perturbed phasors.
//!
//! For independent per-element errors `e_n ~ U[-k pi, k pi]`, quantities of
//! the form `F = sum_n w_n exp(j e_n)` are sums of independent terms, so their
//! joint cumulants are sums of per-element cumulants. Mixed moments up to
//! fourth order follow from the moment/cumulant partition formula.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

/// Unnormalized sinc, `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// One factor of a mixed moment: `sum_n w_n exp(j e_n)`, optionally conjugated.
#[derive(Debug, Clone, Copy)]
pub struct Factor<'a> {
    pub weights: &'a [Complex64],
    pub conjugate: bool,
}

impl<'a> Factor<'a> {
    pub fn plain(weights: &'a [Complex64]) -> Self {
        Self { weights, conjugate: false }
    }

    pub fn conj(weights: &'a [Complex64]) -> Self {
        Self { weights, conjugate: true }
    }
}

type Partition = Vec<Vec<usize>>;

fn partitions_of(n: usize) -> Vec<Partition> {
    fn extend(i: usize, n: usize, current: &mut Partition, out: &mut Vec<Partition>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for b in 0..current.len() {
            current[b].push(i);
            extend(i + 1, n, current, out);
            current[b].pop();
        }
        current.push(vec![i]);
        extend(i + 1, n, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    extend(0, n, &mut Vec::new(), &mut out);
    out
}

/// All set partitions of `{0, .., n-1}` for `n <= 4`.
fn partitions(n: usize) -> &'static [Partition] {
    static TABLE: OnceLock<Vec<Vec<Partition>>> = OnceLock::new();
    &TABLE.get_or_init(|| (0..=4).map(partitions_of).collect())[n]
}

const MAX_ORDER: usize = 4;

/// Phase-noise statistics for a given severity.
#[derive(Debug, Clone)]
pub struct PhaseNoiseStats {
    severity: f64,
    /// `E[exp(j l e)]` for `l = 0..=4`.
    characteristic: [f64; MAX_ORDER + 1],
    /// Joint cumulant of `p` copies of `exp(j e)` and `q` of `exp(-j e)`.
    cumulants: [[f64; MAX_ORDER + 1]; MAX_ORDER + 1],
}

impl PhaseNoiseStats {
    pub fn new(severity: f64) -> Self {
        let mut characteristic = [0.0; MAX_ORDER + 1];
        for (l, c) in characteristic.iter_mut().enumerate() {
            *c = sinc(l as f64 * severity * PI);
        }
        let mut cumulants = [[0.0; MAX_ORDER + 1]; MAX_ORDER + 1];
        for p in 0..=MAX_ORDER {
            for q in 0..=(MAX_ORDER - p) {
                if p + q == 0 {
                    continue;
                }
                let signs: Vec<bool> = std::iter::repeat_n(false, p).chain(std::iter::repeat_n(true, q)).collect();
                cumulants[p][q] = cumulant_from_moments(&signs, &characteristic);
            }
        }
        Self { severity, characteristic, cumulants }
    }

    pub fn severity(&self) -> f64 {
        self.severity
    }

    /// `E[exp(j l e)]`; real and even in `l`.
    pub fn characteristic(&self, order: i64) -> f64 {
        self.characteristic[order.unsigned_abs() as usize]
    }

    /// `sinc^2(k pi)`, the squared mean phasor.
    pub fn coherence(&self) -> f64 {
        self.characteristic[1] * self.characteristic[1]
    }

    /// Exact `E[prod_j F_j]` for up to four factors sharing the same errors.
    pub fn moment(&self, factors: &[Factor<'_>]) -> Complex64 {
        assert!(factors.len() <= MAX_ORDER, "at most four factors supported");
        let n = factors.first().map_or(0, |f| f.weights.len());
        debug_assert!(factors.iter().all(|f| f.weights.len() == n));
        let mut total = Complex64::new(0.0, 0.0);
        for partition in partitions(factors.len()) {
            let mut term = Complex64::new(1.0, 0.0);
            for block in partition {
                let q = block.iter().filter(|&&j| factors[j].conjugate).count();
                let kappa = self.cumulants[block.len() - q][q];
                if kappa == 0.0 {
                    term = Complex64::new(0.0, 0.0);
                    break;
                }
                let sum: Complex64 = (0..n)
                    .map(|idx| {
                        block.iter().fold(Complex64::new(1.0, 0.0), |acc, &j| {
                            let w = factors[j].weights[idx];
                            acc * if factors[j].conjugate { w.conj() } else { w }
                        })
                    })
                    .sum();
                term *= sum * kappa;
            }
            total += term;
        }
        total
    }
}

fn cumulant_from_moments(signs: &[bool], characteristic: &[f64; MAX_ORDER + 1]) -> f64 {
    let raw = |block: &[usize]| {
        let net: i64 = block.iter().map(|&j| if signs[j] { -1 } else { 1 }).sum();
        characteristic[net.unsigned_abs() as usize]
    };
    partitions(signs.len())
        .iter()
        .map(|p| {
            let b = p.len();
            let coef = (1..b).product::<usize>() as f64 * if b % 2 == 1 { 1.0 } else { -1.0 };
            coef * p.iter().map(|block| raw(block)).product::<f64>()
        })
        .sum()
}
