//! Ladder heights, renewal sequences and renewal functions.
//!
//! With `l(k) = sum_{n>=1} p^n(k) / n` (the Fourier coefficients of
//! `-log(1 - phi)`), the Wiener-Hopf factorisation gives
//!
//! * `1 - E z^Z = exp(-sum_{k>=1} l(k) z^k)` for the strict ascending height,
//! * `1 - E z^{-Zhat} = exp(-sum_{k>=1} l(-k) z^k)` for the strict descending one,
//! * `c = exp(-l(0))`,
//!
//! so every ladder quantity is a power series exponential of the coefficients.

use crate::error::{Result, WalkError};
use crate::increment::{IncrementLaw, Side};
use crate::quadrature::Spectrum;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Expectation {
    Finite { value: f64, err: f64 },
    Infinite,
}

impl Expectation {
    pub fn value(&self) -> f64 {
        match *self {
            Expectation::Finite { value, .. } => value,
            Expectation::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Expectation::Finite { .. })
    }

    pub fn err(&self) -> f64 {
        match *self {
            Expectation::Finite { err, .. } => err,
            Expectation::Infinite => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderTables {
    /// Tables cover `0..=window`.
    pub window: usize,
    /// `l(k)` for `k = -window..=window`.
    pub coeffs: Vec<f64>,
    pub coeff_err: f64,
    /// `P[Z = k]`, index `k` (entry 0 is 0).
    pub z_pmf: Vec<f64>,
    /// `P[Z > n]`.
    pub z_tail: Vec<f64>,
    /// `P[Zhat = -k]`, index `k`.
    pub hat_z_pmf: Vec<f64>,
    /// `P[Zhat < -n]`.
    pub hat_z_tail: Vec<f64>,
    pub v: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub c: f64,
    pub c_err: f64,
    pub ez: Expectation,
    /// Expectation of `|Zhat|`.
    pub e_abs_hat_z: Expectation,
    /// `P[Z > window]` and `P[Zhat < -window]`.
    pub residual_up: f64,
    pub residual_down: f64,
    /// Largest gap between `v_minus` from the exponential formula and from the
    /// renewal recursion driven by the `Zhat` law.
    pub renewal_gap: f64,
}

/// Coefficients of `exp(sum_k b_k z^k)` (with `b_0` ignored) up to `z^n`.
pub fn exp_series(b: &[f64], n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    let kb: Vec<f64> = (0..=n).map(|k| k as f64 * b.get(k).copied().unwrap_or(0.0)).collect();
    for m in 1..=n {
        let mut s = 0.0;
        for k in 1..=m {
            s += kb[k] * e[m - k];
        }
        e[m] = s / m as f64;
    }
    e
}

/// `l(k)` for `|k| <= kmax` and a common error bound.
pub fn ladder_coefficients(sp: &Spectrum, kmax: usize) -> (Vec<f64>, f64) {
    let hs = sp.harmonic_sums(kmax, false, |_, u, w| (u.hypot(w).ln(), (-w).atan2(u)));
    let mut out = vec![0.0; 2 * kmax + 1];
    let mut err: f64 = 0.0;
    for k in 0..=kmax {
        out[kmax + k] = -(hs.even[k] + hs.odd[k]) / PI;
        out[kmax - k] = -(hs.even[k] - hs.odd[k]) / PI;
        err = err.max((hs.even_err[k] + hs.odd_err[k]) / PI);
    }
    (out, err)
}

/// Whether `E Z` (`Up`) or `E|Zhat|` (`Down`) is finite, from the tail exponents:
/// `E Z < inf` iff `sum_x P[X = x] x^2 / m_-(x)` converges, and `m_-(x)` grows like
/// `x^{2 - alpha_l}` for a left tail of index `alpha_l < 2` and stays bounded
/// otherwise (logarithmically at index 2).
pub fn ladder_mean_finite(law: &IncrementLaw, dir: Direction) -> bool {
    let (near, far) = match dir {
        Direction::Up => (law.right_tail().alpha(), law.left_tail().alpha()),
        Direction::Down => (law.left_tail().alpha(), law.right_tail().alpha()),
    };
    let a_near = near.unwrap_or(f64::INFINITY);
    let a_far = far.unwrap_or(f64::INFINITY);
    a_near + (2.0 - a_far).max(0.0) > 2.0
}

/// Head sum of a nonnegative sequence and an extrapolated remainder, `None` if the
/// local power decay is too slow to be summable.
fn extrapolated_sum(seq: &[f64]) -> (f64, Option<f64>) {
    let head: f64 = seq.iter().sum();
    let k = seq.len() - 1;
    let last = seq[k];
    let half = seq[k / 2];
    if last <= 1e-13 {
        // at roundoff level: the sequence has effectively terminated
        return (head, Some(last * k as f64));
    }
    if half <= last {
        return (head, None);
    }
    let d = (half / last).log2();
    if d <= 1.0 + 1e-3 {
        return (head, None);
    }
    (head, Some(last * k as f64 / (d - 1.0)))
}

/// Decay exponent `d` of `P[Z > n] ~ n^-d` when the near-side step tail is a
/// power law: the renewal function of the far side grows like `n^e` with
/// `e = alpha_far - 1` for a heavy far tail and `e = 1` otherwise, and
/// `P[Z > n] ~ sum_y f(y) P[X = n + y]` gives `d = alpha_near - e`.
fn analytic_tail_decay(law: &IncrementLaw, dir: Direction) -> Option<f64> {
    let (near, far) = match dir {
        Direction::Up => (law.right_tail(), law.left_tail()),
        Direction::Down => (law.left_tail(), law.right_tail()),
    };
    let e = match far.alpha() {
        Some(a) if a < 2.0 => a - 1.0,
        _ => 1.0,
    };
    near.alpha().map(|a| a - e)
}

fn expectation(law: &IncrementLaw, dir: Direction, tail: &[f64], rel_err: f64) -> Expectation {
    if !ladder_mean_finite(law, dir) {
        return Expectation::Infinite;
    }
    let k = tail.len() - 1;
    match (extrapolated_sum(tail), analytic_tail_decay(law, dir)) {
        ((head, Some(local)), Some(d)) if d > 1.0 && tail[k] > 1e-13 => {
            // the local slope converges slowly; the analytic exponent fixes it
            let rem = tail[k] * k as f64 / (d - 1.0);
            Expectation::Finite {
                value: head + rem,
                err: 0.25 * rem + 0.5 * (rem - local).abs() + rel_err * (head + rem),
            }
        }
        ((head, Some(rem)), _) => Expectation::Finite {
            value: head + rem,
            err: 0.5 * rem + rel_err * (head + rem),
        },
        ((head, None), _) => Expectation::Finite {
            value: head,
            err: f64::INFINITY,
        },
    }
}

pub fn ladder_tables(law: &IncrementLaw, window: usize) -> Result<LadderTables> {
    let sp = Spectrum::new(law, window);
    Ok(ladder_from_spectrum(law, &sp, window))
}

pub fn ladder_from_spectrum(law: &IncrementLaw, sp: &Spectrum, window: usize) -> LadderTables {
    let k = window;
    let (coeffs, coeff_err) = ladder_coefficients(sp, k);
    let up: Vec<f64> = (0..=k).map(|j| coeffs[k + j]).collect();
    let down: Vec<f64> = (0..=k).map(|j| coeffs[k - j]).collect();
    let neg = |b: &[f64]| -> Vec<f64> { b.iter().map(|x| -x).collect() };
    // 1/k - l(k): the series of sum_n P[Z > n] z^n
    let tail_coef = |b: &[f64]| -> Vec<f64> {
        b.iter()
            .enumerate()
            .map(|(j, &x)| if j == 0 { 0.0 } else { 1.0 / j as f64 - x })
            .collect()
    };

    let one_minus_f = exp_series(&neg(&up), k);
    let z_pmf: Vec<f64> = one_minus_f.iter().enumerate().map(|(j, &e)| if j == 0 { 0.0 } else { -e }).collect();
    let z_tail: Vec<f64> = exp_series(&tail_coef(&up), k).iter().map(|x| x.max(0.0)).collect();
    let v = exp_series(&up, k);

    let one_minus_g = exp_series(&neg(&down), k);
    let hat_z_pmf: Vec<f64> = one_minus_g.iter().enumerate().map(|(j, &e)| if j == 0 { 0.0 } else { -e }).collect();
    let hat_z_tail: Vec<f64> = exp_series(&tail_coef(&down), k).iter().map(|x| x.max(0.0)).collect();
    let c = (-coeffs[k]).exp();
    let v_minus: Vec<f64> = exp_series(&down, k).iter().map(|x| x / c).collect();

    // renewal equation v^-(x) = delta(0,x)/c + sum_y P[-Zhat = y] v^-(x - y)
    let mut rn = vec![0.0; k + 1];
    rn[0] = 1.0 / c;
    for x in 1..=k {
        let mut s = 0.0;
        for y in 1..=x {
            s += hat_z_pmf[y] * rn[x - y];
        }
        rn[x] = s;
    }
    let renewal_gap = rn
        .iter()
        .zip(&v_minus)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let rel_err = coeff_err * (k as f64 + 1.0);
    let ez = expectation(law, Direction::Up, &z_tail, rel_err);
    let e_abs_hat_z = expectation(law, Direction::Down, &hat_z_tail, rel_err);
    LadderTables {
        window: k,
        residual_up: z_tail[k],
        residual_down: hat_z_tail[k],
        coeffs,
        coeff_err,
        z_pmf,
        z_tail,
        hat_z_pmf,
        hat_z_tail,
        v,
        v_minus,
        c,
        c_err: c * coeff_err,
        ez,
        e_abs_hat_z,
        renewal_gap,
    }
}

/// Ladder height law on one side, enlarging the window until the unaccounted
/// mass `P[Z > K]` drops below `eps` or the window reaches `cap`.
pub fn entrance_law(law: &IncrementLaw, dir: Direction, eps: f64, cap: usize) -> Result<(Vec<f64>, f64)> {
    let mut k = 512;
    loop {
        let t = ladder_tables(law, k)?;
        let (pmf, residual) = match dir {
            Direction::Up => (t.z_pmf, t.residual_up),
            Direction::Down => (t.hat_z_pmf, t.residual_down),
        };
        if residual <= eps {
            return Ok((pmf, residual));
        }
        if 2 * k > cap {
            return Err(WalkError::WindowExceeded { cap });
        }
        k *= 2;
    }
}

impl LadderTables {
    /// `f_r(x) = v^-(0) + ... + v^-(x-1)` for `x >= 1` and `P[Z > -x]` for `x <= 0`.
    pub fn f_r(&self, x: i64) -> f64 {
        if x <= 0 {
            let n = x.unsigned_abs() as usize;
            if n > self.window {
                0.0
            } else {
                self.z_tail[n]
            }
        } else {
            let n = x as usize;
            assert!(n <= self.window + 1, "f_r({x}) beyond window");
            self.v_minus[..n].iter().sum()
        }
    }

    /// `f_r(0..=window+1)` as a table.
    pub fn f_r_table(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.window + 2);
        out.push(1.0);
        let mut s = 0.0;
        for &v in &self.v_minus {
            s += v;
            out.push(s);
        }
        out
    }

    /// `f_l(x) = (v(0) + ... + v(x-1)) / c` for `x >= 1`.
    pub fn f_l(&self, x: usize) -> f64 {
        assert!(x >= 1 && x <= self.window + 1);
        self.v[..x].iter().sum::<f64>() / self.c
    }

    /// `U_as(x) = 1 + sum_k P[Z_1 + ... + Z_k <= x]`.
    pub fn u_as(&self, x: usize) -> f64 {
        self.v[..=x].iter().sum()
    }

    /// `V_as = U_as / P[Z' > 0]` with `P[Z' > 0] = c`.
    pub fn v_as(&self, x: usize) -> f64 {
        self.u_as(x) / self.c
    }

    /// `2 c E|Zhat| E Z`, which equals the variance.
    pub fn spitzer_product(&self) -> f64 {
        2.0 * self.c * self.e_abs_hat_z.value() * self.ez.value()
    }

    /// `min v(x+y) - v(x) v(y)` over `x + y <= limit`.
    pub fn supermultiplicativity_slack(&self, limit: usize) -> f64 {
        let l = limit.min(self.window);
        let mut worst = f64::INFINITY;
        for x in 0..=l {
            for y in 0..=(l - x) {
                worst = worst.min(self.v[x + y] - self.v[x] * self.v[y]);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residual {
    pub max: f64,
    pub bound: f64,
}

impl Residual {
    fn push(&mut self, r: f64, b: f64) {
        self.max = self.max.max(r);
        self.bound = self.bound.max(b);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderIdentityReport {
    /// `P[Z = k] = sum_y v^-(y) p(k + y)`.
    pub sharp: Residual,
    /// `P[Z > x] = sum_{y>=1} f_r(y) p(x + y)`.
    pub f_z: Residual,
    /// `P[Zhat < -t] = v^-(0) sum_y v(y) P[X < -t - y]`.
    pub hat_z: Residual,
    /// `sum_{y>=1} f_r(y) P[X >= y] = E Z`.
    pub eq_ez: Residual,
    /// `f_r(x) = sum_{y>=1} f_r(y) p(y - x)` for `x >= 1`.
    pub harmonic: Residual,
}

/// Sum of `f_r(y) q(y)` over `y > window` given the tail masses of `q`, using
/// subadditivity `f_r(y) <= (1 + y / K) f_r(K)`.
fn f_r_tail_bound(fr_k: f64, k: usize, mass: f64, first_moment: f64) -> f64 {
    fr_k * (mass + first_moment / k as f64)
}

/// Residuals of the identities linking `Z`, `Zhat`, `v`, `v^-` and `f_r`, over
/// arguments up to `limit`.
pub fn identity_suite_ladder(law: &IncrementLaw, t: &LadderTables, limit: usize) -> LadderIdentityReport {
    let k = t.window;
    let kk = k as i64;
    let limit = limit.min(k / 2);
    let fr = t.f_r_table();
    let fr_k = fr[k];
    let tol = 1e-12 + 10.0 * t.coeff_err * (k as f64);
    let zero = Residual { max: 0.0, bound: 0.0 };
    let mut rep = LadderIdentityReport {
        sharp: zero,
        f_z: zero,
        hat_z: zero,
        eq_ez: zero,
        harmonic: zero,
    };
    let vmax = 1.0 / t.c;
    for x in 1..=limit as i64 {
        let mut s = 0.0;
        for y in 0..=kk {
            s += t.v_minus[y as usize] * law.pmf(x + y);
        }
        let b = vmax * law.prob_at_least(x + kk + 1) + tol;
        rep.sharp.push((s - t.z_pmf[x as usize]).abs(), b);
    }
    for x in 0..=limit as i64 {
        let mut s = 0.0;
        for y in 1..=kk {
            s += fr[y as usize] * law.pmf(x + y);
        }
        let from = x + kk + 1;
        let rt = law.right_tail();
        let b = f_r_tail_bound(
            fr_k,
            k,
            rt.mass_from(from) + 0.0,
            rt.first_moment_from(from) - x as f64 * rt.mass_from(from),
        ) + tol * fr_k;
        let b = if law.max_up().is_some_and(|m| m < from) { tol * fr_k } else { b };
        rep.f_z.push((s - t.z_tail[x as usize]).abs(), b);
    }
    // v(y) -> 1/EZ, so the sum beyond the window is (1/EZ) times a left excess
    let v_inf = if t.ez.is_finite() { 1.0 / t.ez.value() } else { 0.0 };
    let v_dev = t.v[k / 2..=k].iter().map(|&v| (v - v_inf).abs()).fold(0.0, f64::max);
    for s_t in 0..=limit as u64 {
        let mut s = 0.0;
        for y in 0..=k as u64 {
            s += t.v[y as usize] * law.tail_prob((s_t + y) as f64, Side::Left);
        }
        let beyond = law.excess(s_t + k as u64 + 1, Side::Left);
        s += v_inf * beyond;
        s *= t.v_minus[0];
        let b = t.v_minus[0] * (v_dev + t.ez.err() * v_inf * v_inf) * beyond + tol;
        rep.hat_z.push((s - t.hat_z_tail[s_t as usize]).abs(), b);
    }
    if let Expectation::Finite { value, err } = t.ez {
        let mut s = 0.0;
        for y in 1..=kk {
            s += fr[y as usize] * law.prob_at_least(y);
        }
        // sum_{y>K} f_r(y) P[X >= y] <= f_r(K) sum_{y>K} (1 + y/K) P[X >= y]
        let ex = law.excess(k as u64, Side::Right);
        let second = tail_second_excess(law, k as u64);
        let b = fr_k * (ex + second / k as f64) + err + tol * fr_k;
        rep.eq_ez.push((s - value).abs(), b);
    }
    for x in 1..=limit as i64 {
        let mut s = 0.0;
        for y in 1..=kk {
            s += fr[y as usize] * law.pmf(y - x);
        }
        let from = kk + 1 - x;
        let rt = law.right_tail();
        let b = if law.max_up().is_some_and(|m| m < from) {
            tol * fr_k
        } else {
            f_r_tail_bound(
                fr_k,
                k,
                rt.mass_from(from),
                rt.first_moment_from(from) + x as f64 * rt.mass_from(from),
            ) + tol * fr_k
        };
        rep.harmonic.push((s - fr[x as usize]).abs(), b);
    }
    rep
}

/// `sum_{y > k} y P[X >= y]`, infinite when the right tail index is at most 2.
fn tail_second_excess(law: &IncrementLaw, k: u64) -> f64 {
    match law.right_tail() {
        crate::TailModel::None => {
            let hi = law.max_up().unwrap_or(0).max(0) as u64;
            ((k + 1)..=hi).map(|y| y as f64 * law.prob_at_least(y as i64)).sum()
        }
        crate::TailModel::Power { alpha, amplitude, .. } => {
            if alpha <= 2.0 {
                f64::INFINITY
            } else {
                // P[X >= y] <= A y^{-alpha} (alpha^{-1} + y^{-1})
                let a = amplitude * (1.0 / alpha + 1.0 / (k + 1) as f64);
                a * crate::special::hurwitz_zeta(alpha - 1.0, (k + 1) as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TailModel;
    use std::collections::BTreeMap;

    fn law(pairs: &[(i64, f64)]) -> IncrementLaw {
        IncrementLaw::build(&pairs.iter().cloned().collect(), TailModel::None, TailModel::None).unwrap()
    }

    #[test]
    fn exp_series_of_log() {
        // exp(-log(1 - z)) = 1 / (1 - z)
        let b: Vec<f64> = (0..20).map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 }).collect();
        let e = exp_series(&b, 19);
        assert!(e.iter().all(|x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn simple_walk_tables() {
        let t = ladder_tables(&law(&[(-1, 0.5), (1, 0.5)]), 256).unwrap();
        assert!((t.c - 0.5).abs() < 1e-12);
        assert!((t.z_pmf[1] - 1.0).abs() < 1e-12);
        assert!(t.z_pmf[2..].iter().all(|p| p.abs() < 1e-12));
        assert!((t.hat_z_pmf[1] - 1.0).abs() < 1e-12);
        assert!(t.v.iter().all(|x| (x - 1.0).abs() < 1e-11));
        assert!(t.v_minus.iter().all(|x| (x - 2.0).abs() < 1e-11));
        assert!((t.f_r(3) - 6.0).abs() < 1e-10);
        assert_eq!(t.f_r(0), 1.0);
        assert!(t.f_r(-1).abs() < 1e-12);
        assert!((t.f_l(4) - 8.0).abs() < 1e-10);
        assert!((t.u_as(5) - 6.0).abs() < 1e-10);
        assert!((t.v_as(5) - 12.0).abs() < 1e-9);
        assert!((t.ez.value() - 1.0).abs() < 1e-10);
        assert!((t.e_abs_hat_z.value() - 1.0).abs() < 1e-10);
        assert!((t.spitzer_product() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identities_hold_for_asymmetric_law() {
        let l = law(&[(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)]);
        let t = ladder_tables(&l, 1024).unwrap();
        let rep = identity_suite_ladder(&l, &t, 64);
        for r in [rep.sharp, rep.f_z, rep.hat_z, rep.eq_ez, rep.harmonic] {
            assert!(r.max <= r.bound, "{rep:?}");
        }
        assert!(t.renewal_gap < 1e-11);
        assert!((t.spitzer_product() - l.moments().sigma2).abs() < 1e-9);
        assert!(t.supermultiplicativity_slack(100) > -1e-12);
        let total: f64 = t.z_pmf.iter().sum();
        assert!((total + t.residual_up - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_left_tail_has_infinite_descending_mean() {
        let l = IncrementLaw::balanced_tail(&BTreeMap::from([(1, 0.9), (2, 0.1)]), Side::Left, 1.5, 1)
            .unwrap();
        assert!(ladder_mean_finite(&l, Direction::Up));
        assert!(!ladder_mean_finite(&l, Direction::Down));
        let t = ladder_tables(&l, 1024).unwrap();
        assert!(t.ez.is_finite());
        assert_eq!(t.e_abs_hat_z, Expectation::Infinite);
        let rep = identity_suite_ladder(&l, &t, 64);
        for r in [rep.sharp, rep.f_z, rep.hat_z, rep.eq_ez, rep.harmonic] {
            assert!(r.max <= r.bound, "{rep:?}");
        }
    }
}
