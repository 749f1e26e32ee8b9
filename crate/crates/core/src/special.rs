//! Zeta functions and lattice power-law trigonometric sums.
//!
//! The power tails of an increment law are `A k^{-beta}` for `k >= start`, so every
//! functional of a tail (mass, moments, characteristic function) reduces to Hurwitz
//! zeta values or to the periodic zeta function `sum_k k^{-beta} e^{ik theta}`.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `B_{2j} / (2j)!` for j = 1..=10.
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Hurwitz zeta `sum_{k>=0} (q+k)^{-s}` by Euler-Maclaurin summation.
///
/// Valid as the analytic continuation for any real `s != 1` that is not very negative
/// (`s > -1` is used here); `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(q > 0.0);
    if s == 1.0 {
        return f64::INFINITY;
    }
    const N: usize = 12;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    let mut rising = s;
    let mut apow = a.powf(-s - 1.0);
    let inv_a2 = 1.0 / (a * a);
    for (j, c) in BERNOULLI_OVER_FACT.iter().enumerate() {
        sum += c * rising * apow;
        let j = j as f64 + 1.0;
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
        apow *= inv_a2;
    }
    sum
}

/// Riemann zeta on the real line (pole at 1).
pub fn zeta(s: f64) -> f64 {
    if s == 1.0 {
        return f64::INFINITY;
    }
    if s >= -0.5 {
        return hurwitz_zeta(s, 1.0);
    }
    // trivial zeros
    if s == s.round() && (s as i64) % 2 == 0 {
        return 0.0;
    }
    let t = 1.0 - s;
    2f64.powf(s) * PI.powf(s - 1.0) * (0.5 * PI * s).sin() * gamma(t) * zeta(t)
}

/// `sin(x) - x` without cancellation near zero.
pub fn sin_minus_id(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term = -x * x2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-30 * x.abs().max(1e-300) {
            term *= -x2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
            sum += term;
            k += 1.0;
            if k > 30.0 {
                break;
            }
        }
        sum
    } else {
        x.sin() - x
    }
}

/// `1 - cos(x)` without cancellation near zero.
#[inline]
pub fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

const TRIG_TERMS: usize = 72;

/// Periodic zeta sums for a fixed exponent `beta > 2`:
///
/// * `cos_deficit(theta) = sum_{k>=1} k^{-beta} (1 - cos k theta)`
/// * `sin_deficit(theta) = sum_{k>=1} k^{-beta} (sin k theta - k theta)`
///
/// evaluated for `0 <= theta <= pi` from the expansion of the polylogarithm about
/// `theta = 0`, which keeps full relative accuracy as `theta -> 0`.
#[derive(Debug, Clone)]
pub struct PowerTrigSums {
    beta: f64,
    integer: Option<u32>,
    zetas: Vec<f64>,
    gamma_lead: f64,
}

impl PowerTrigSums {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 2.0, "beta must exceed 2");
        let rounded = beta.round();
        let integer = if (beta - rounded).abs() < 1e-12 {
            Some(rounded as u32)
        } else {
            None
        };
        let beta = if integer.is_some() { rounded } else { beta };
        let zetas = (0..TRIG_TERMS)
            .map(|n| {
                let s = beta - n as f64;
                if (s - 1.0).abs() < 1e-12 {
                    0.0
                } else {
                    zeta(s)
                }
            })
            .collect();
        let gamma_lead = if integer.is_some() { 0.0 } else { gamma(1.0 - beta) };
        PowerTrigSums {
            beta,
            integer,
            zetas,
            gamma_lead,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Returns `(cos_deficit, sin_deficit)` over `k >= 1`.
    pub fn full(&self, theta: f64) -> (f64, f64) {
        if theta == 0.0 {
            return (0.0, 0.0);
        }
        debug_assert!(theta > 0.0 && theta <= PI + 1e-12);
        let (mut re, mut im) = match self.integer {
            None => {
                let lead = self.gamma_lead * theta.powf(self.beta - 1.0);
                (
                    lead * (0.5 * PI * self.beta).sin(),
                    lead * (0.5 * PI * self.beta).cos(),
                )
            }
            Some(m) => {
                let m1 = (m - 1) as i32;
                let harmonic: f64 = (1..m).map(|j| 1.0 / j as f64).sum();
                let fact: f64 = (1..m).map(|j| j as f64).product();
                let ipow = Complex64::new(0.0, 1.0).powi(m1) * theta.powi(m1) / fact;
                let t = ipow * Complex64::new(harmonic - theta.ln(), 0.5 * PI);
                (t.re, t.im)
            }
        };
        let skip = self.integer.map(|m| (m - 1) as usize);
        let mut pow = theta; // theta^n / n!
        for n in 2..TRIG_TERMS {
            pow *= theta / n as f64;
            if Some(n) == skip {
                continue;
            }
            let term = self.zetas[n] * pow;
            match n % 4 {
                0 => re += term,
                1 => im += term,
                2 => re -= term,
                _ => im -= term,
            }
            if pow.abs() * self.zetas[n].abs().max(1.0) < 1e-40 {
                break;
            }
        }
        (-re, im)
    }

    /// Same sums restricted to `k >= start`.
    pub fn from_start(&self, start: u64, theta: f64) -> (f64, f64) {
        let (mut c, mut s) = self.full(theta);
        for k in 1..start {
            let kf = k as f64;
            let w = kf.powf(-self.beta);
            c -= w * one_minus_cos(kf * theta);
            s -= w * sin_minus_id(kf * theta);
        }
        (c, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riemann_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(0.0) + 0.5).abs() < 1e-14);
        assert!((zeta(-1.0) + 1.0 / 12.0).abs() < 1e-13);
        assert!((zeta(-3.0) - 1.0 / 120.0).abs() < 1e-13);
        assert_eq!(zeta(-4.0), 0.0);
        assert!((zeta(0.5) + 1.4603545088095868).abs() < 1e-13);
        assert!((zeta(1.5) - 2.612375348685488).abs() < 1e-13);
    }

    #[test]
    fn hurwitz_matches_partial_sum() {
        let direct: f64 = (0..5).map(|k| (3.0 + k as f64).powf(-2.5)).sum();
        let diff = hurwitz_zeta(2.5, 3.0) - hurwitz_zeta(2.5, 8.0);
        assert!((diff - direct).abs() < 1e-15);
    }

    fn brute(beta: f64, start: u64, theta: f64) -> (f64, f64) {
        // Pair terms so the partial sums of the oscillatory series settle, then add
        // the Euler-Maclaurin tail of the non-oscillating part.
        let n = 2_000_000u64;
        let mut c = 0.0;
        let mut s = 0.0;
        for k in start..n {
            let kf = k as f64;
            let w = kf.powf(-beta);
            c += w * one_minus_cos(kf * theta);
            s += w * sin_minus_id(kf * theta);
        }
        let zt = hurwitz_zeta(beta, n as f64);
        let zt1 = hurwitz_zeta(beta - 1.0, n as f64);
        (c + zt, s - theta * zt1)
    }

    #[test]
    fn trig_sums_against_direct_summation() {
        for &beta in &[2.5, 2.8, 3.0] {
            let sums = PowerTrigSums::new(beta);
            for &theta in &[0.3, 1.0, 2.5, PI] {
                let (c, s) = sums.from_start(2, theta);
                let (bc, bs) = brute(beta, 2, theta);
                assert!((c - bc).abs() < 1e-9, "beta {beta} theta {theta}: {c} vs {bc}");
                assert!((s - bs).abs() < 1e-9, "beta {beta} theta {theta}: {s} vs {bs}");
            }
        }
    }

    #[test]
    fn small_angle_keeps_relative_accuracy() {
        let sums = PowerTrigSums::new(2.5);
        let theta = 1e-8;
        let (c, _) = sums.full(theta);
        // leading term -Gamma(-1.5) sin(1.25 pi) theta^{1.5}
        let lead = -gamma(-1.5) * (1.25 * PI).sin() * theta.powf(1.5);
        assert!(c > 0.0);
        assert!((c / lead - 1.0).abs() < 1e-3);
    }
}
