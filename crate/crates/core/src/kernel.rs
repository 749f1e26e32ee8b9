//! n-step laws, the potential kernel `a(x)` and the constant `c`.

use crate::error::{Result, WalkError};
use crate::increment::IncrementLaw;
use crate::quadrature::Spectrum;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// `p^n` on `[-window, window]`.
#[derive(Debug, Clone, Serialize)]
pub struct NStepTable {
    pub window: usize,
    pub probs: Vec<f64>,
    /// Mass of `p^n` outside the window (nonnegative up to roundoff).
    pub escaped: f64,
}

impl NStepTable {
    pub fn get(&self, x: i64) -> f64 {
        let i = x + self.window as i64;
        if i < 0 || i as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[i as usize]
        }
    }
}

/// Iterated convolution restricted to the window; paths leaving the window are
/// dropped, so the table is a lower bound and `escaped` bounds what is missing.
pub fn nstep_pmf(law: &IncrementLaw, n: usize, window: usize, cap: f64) -> Result<NStepTable> {
    if n == 0 {
        return Err(WalkError::OutOfRange("n must be at least 1".into()));
    }
    let w = window as i64;
    let len = 2 * window + 1;
    let steps: Vec<(i64, f64)> = (-2 * w..=2 * w)
        .map(|k| (k, law.pmf(k)))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let mut cur = vec![0.0; len];
    cur[window] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; len];
        for (i, &m) in cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let x = i as i64 - w;
            for &(k, p) in &steps {
                let y = x + k;
                if y.abs() <= w {
                    next[(y + w) as usize] += m * p;
                }
            }
        }
        cur = next;
    }
    let escaped = (1.0 - cur.iter().sum::<f64>()).max(0.0);
    if escaped > cap {
        return Err(WalkError::WindowTooSmall { escaped, cap });
    }
    Ok(NStepTable {
        window,
        probs: cur,
        escaped,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialTable {
    pub window: usize,
    /// `a(x)` for `x = -window..=window`.
    pub a: Vec<f64>,
    pub err: Vec<f64>,
    /// `f64::INFINITY` when the variance is infinite.
    pub sigma2: f64,
    /// 1/2 for finite variance, 1 otherwise.
    pub big_a: f64,
    /// Largest gap to the partial-sum estimate over the checked points.
    pub cross_check_gap: f64,
}

impl PotentialTable {
    fn idx(&self, x: i64) -> usize {
        assert!(
            x.unsigned_abs() as usize <= self.window,
            "x = {x} outside window {}",
            self.window
        );
        (x + self.window as i64) as usize
    }

    pub fn a(&self, x: i64) -> f64 {
        self.a[self.idx(x)]
    }

    pub fn err(&self, x: i64) -> f64 {
        self.err[self.idx(x)]
    }

    pub fn max_err(&self) -> f64 {
        self.err.iter().cloned().fold(0.0, f64::max)
    }

    pub fn a_dagger(&self, x: i64) -> f64 {
        self.a(x) + if x == 0 { 1.0 } else { 0.0 }
    }

    pub fn abar(&self, x: i64) -> f64 {
        0.5 * (self.a(x) + self.a(-x))
    }

    /// `(a(W) - a(W-1), a(-W) - a(-W+1))` at the window edge.
    pub fn edge_increments(&self) -> (f64, f64) {
        let w = self.window as i64;
        (self.a(w) - self.a(w - 1), self.a(-w) - self.a(-w + 1))
    }

    /// Largest violation of `a(x+y) <= a(x) + a(y)` beyond the error bars, over
    /// `|x|, |y|, |x+y| <= limit`.
    pub fn subadditivity_violation(&self, limit: usize) -> f64 {
        let l = limit.min(self.window) as i64;
        let mut worst: f64 = 0.0;
        for x in -l..=l {
            for y in -l..=l {
                let s = x + y;
                if s.abs() > l {
                    continue;
                }
                let slack = self.err(x) + self.err(y) + self.err(s);
                worst = worst.max(self.a(s) - self.a(x) - self.a(y) - slack);
            }
        }
        worst
    }
}

/// `a(x) = (1/pi) int_0^pi [(1 - cos x t) u + sin(x t) w] / (u^2 + w^2) dt` where
/// `1 - phi(t) = u - i w`; the real part is absolutely integrable, so no
/// regularisation is needed.
pub fn potential_from_spectrum(law: &IncrementLaw, sp: &Spectrum, window: usize) -> PotentialTable {
    assert!(window <= sp.kmax());
    let hs = sp.harmonic_sums(window, true, |_, u, w| {
        let r = u.hypot(w);
        ((u / r) / r, (w / r) / r)
    });
    let n = 2 * window + 1;
    let mut a = vec![0.0; n];
    let mut err = vec![0.0; n];
    let (rem, rem_err) = if sp.grid.log_case {
        log_case_remainder(law, &sp.grid, &hs.odd_deep)
    } else {
        (0.0, 0.0)
    };
    for k in 1..=window {
        let mut odd_err = hs.odd_err[k];
        if sp.grid.log_case {
            // the closed-form remainder replaces the geometric tail estimate
            odd_err -= hs.odd_deep[k].abs() * sp.grid.remainder_factor;
            odd_err += k as f64 * rem_err;
        }
        let e = (hs.even_err[k] + odd_err.max(0.0)) / PI;
        let odd = hs.odd[k] + k as f64 * rem;
        a[window + k] = (hs.even[k] + odd) / PI;
        a[window - k] = (hs.even[k] - odd) / PI;
        err[window + k] = e;
        err[window - k] = e;
    }
    let m = law.moments();
    PotentialTable {
        window,
        a,
        err,
        sigma2: m.sigma2,
        big_a: if m.finite_variance() { 0.5 } else { 1.0 },
        cross_check_gap: 0.0,
    }
}

/// Per-unit-`x` value and error of `int_0^{theta_min} sin(x t) w / |1 - phi|^2` when
/// the tail index is exactly 2. There `u = t^2 (a log(1/t) + b)` and `w = c t^2`
/// up to relative `O(t)`, so the integrand is `x c / (t ((a log(1/t) + b)^2 + c^2))`
/// and integrates to an arctangent. The same closed form over the deepest
/// panels, set against their quadrature, gives the error.
fn log_case_remainder(law: &IncrementLaw, grid: &crate::quadrature::FourierGrid, odd_deep: &[f64]) -> (f64, f64) {
    let t0 = grid.theta_min;
    let t1 = grid.deep_top;
    let scaled = |t: f64| {
        let (u, w) = law.deficit(t);
        (u / (t * t), w / (t * t))
    };
    let (s0, c0) = scaled(t0);
    let (s1, c1) = scaled(t1);
    let slope = (s0 - s1) / (t1 / t0).ln();
    let c = 0.5 * (c0 + c1);
    let prim = |s: f64| (s / c).atan() / slope;
    let full = (c.signum() * 0.5 * PI) / slope - prim(s0);
    let deep_model = prim(s0) - prim(s1);
    // quadrature of the deep panels per unit x, from the smallest harmonic
    let deep_numeric = odd_deep.get(1).copied().unwrap_or(0.0);
    let gap = (deep_numeric - deep_model).abs();
    let err = gap * (1.0 + full.abs() / deep_model.abs().max(1e-300)) + 1e-12 * full.abs() + (c1 - c0).abs() * full.abs() / c.abs();
    (full, err)
}

/// Potential kernel on `[-window, window]` with entries accurate to `tol`,
/// cross-checked against extrapolated partial sums at a few small `x`.
pub fn potential_kernel(law: &IncrementLaw, window: usize, tol: f64) -> Result<PotentialTable> {
    let sp = Spectrum::new(law, window.max(64));
    let mut table = potential_from_spectrum(law, &sp, window);
    if table.max_err() > tol {
        return Err(WalkError::NoConvergence(format!(
            "potential kernel error estimate {:.3e} exceeds tol {tol:.1e}",
            table.max_err()
        )));
    }
    let m = law.moments();
    let log_case = !m.finite_variance() && law.tail_index() >= 2.0;
    if !log_case {
        let xs: Vec<i64> = [1i64, -1, 2, -2, 5, -5]
            .into_iter()
            .filter(|x| x.unsigned_abs() as usize <= window)
            .collect();
        let check = partial_sum_potential(law, &xs);
        let mut gap: f64 = 0.0;
        for (x, (est, est_err)) in xs.iter().zip(check) {
            let d = (table.a(*x) - est).abs();
            gap = gap.max(d);
            if d > 10.0 * est_err + table.err(*x) + 1e-7 * (1.0 + est.abs()) {
                return Err(WalkError::NoConvergence(format!(
                    "a({x}): Fourier {:.10} vs partial sums {est:.10} (+- {est_err:.1e})",
                    table.a(*x)
                )));
            }
        }
        table.cross_check_gap = gap;
    }
    Ok(table)
}

/// Partial sums `sum_{n<N} [p^n(0) - p^n(-x)]`, evaluated exactly on the
/// periodised lattice `Z / M`, averaged over `N` and `N + 1` against parity
/// oscillation and extrapolated in `N` through the two leading decay exponents
/// of the local limit expansion. Returns `(value, error)`.
///
/// With tail index exactly 2 and infinite variance the corrections decay only
/// logarithmically; every entry is then `(NaN, inf)`.
pub fn partial_sum_potential(law: &IncrementLaw, xs: &[i64]) -> Vec<(f64, f64)> {
    const M: usize = 1 << 17;
    if !law.moments().finite_variance() && law.tail_index() >= 2.0 {
        return vec![(f64::NAN, f64::INFINITY); xs.len()];
    }
    let ns = [1u32 << 9, 1 << 11, 1 << 13, 1 << 15];
    let alpha = law.tail_index();
    let gammas = if law.moments().finite_variance() {
        [0.5, 1.0]
    } else {
        [2.0 / alpha - 1.0, 3.0 / alpha - 1.0]
    };
    let mut sums = vec![[0.0f64; 4]; xs.len()];
    for j in 1..M {
        let theta = 2.0 * PI * j as f64 / M as f64;
        let phi = law.char_fn(theta);
        let one_minus = {
            let t = if theta > PI { 2.0 * PI - theta } else { theta };
            let (u, w) = law.deficit(t);
            Complex64::new(u, if theta > PI { w } else { -w })
        };
        for (slot, &n) in ns.iter().enumerate() {
            let phin = phi.powu(n);
            // mean of (1 - phi^N) and (1 - phi^{N+1})
            let s = (1.0 - 0.5 * phin * (1.0 + phi)) / one_minus;
            for (i, &x) in xs.iter().enumerate() {
                let xt = x as f64 * theta;
                let factor = Complex64::new(1.0 - xt.cos(), -xt.sin());
                sums[i][slot] += (factor * s).re;
            }
        }
    }
    let eliminate = |c: &[f64], g: f64| -> Vec<f64> {
        let r = 4f64.powf(g);
        c.windows(2).map(|p| (r * p[1] - p[0]) / (r - 1.0)).collect()
    };
    sums.iter()
        .map(|c| {
            let c: Vec<f64> = c.iter().map(|v| v / M as f64).collect();
            let e = eliminate(&c, gammas[0]);
            let f = eliminate(&e, gammas[1]);
            (f[1], (f[1] - f[0]).abs())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantC {
    pub c: f64,
    pub err: f64,
    /// Value from the series `exp(-sum p^k(0) / k)`.
    pub series: f64,
    pub series_err: f64,
}

/// `log c = (1/pi) int_0^pi log|1 - phi|`.
pub fn constant_c_from_spectrum(sp: &Spectrum) -> (f64, f64) {
    let (v, e) = sp.integrate(|_, u, w| u.hypot(w).ln());
    let c = (v / PI).exp();
    (c, c * e / PI)
}

pub fn constant_c(law: &IncrementLaw, tol: f64) -> Result<ConstantC> {
    let sp = Spectrum::new(law, 64);
    let (c, err) = constant_c_from_spectrum(&sp);
    let (series, series_err) = constant_c_series(law);
    if err > tol {
        return Err(WalkError::NoConvergence(format!(
            "c error estimate {err:.2e} exceeds tol {tol:.1e}"
        )));
    }
    if (series - c).abs() > 10.0 * series_err + err + 1e-9 {
        return Err(WalkError::NoConvergence(format!(
            "c: integral {c:.12} vs series {series:.12} (+- {series_err:.1e})"
        )));
    }
    Ok(ConstantC {
        c,
        err,
        series,
        series_err,
    })
}

/// `exp(-sum_{k<=K} p^k(0)/k)` with the tail `sum_{k>K}` estimated from the local
/// decay of `p^k(0) ~ C k^{-1/alpha}`.
pub fn constant_c_series(law: &IncrementLaw) -> (f64, f64) {
    const M: usize = 1 << 14;
    const K: usize = 4096;
    let mut p0 = vec![0.0; K + 2];
    for j in 0..M {
        let theta = 2.0 * PI * j as f64 / M as f64;
        let phi = law.char_fn(theta);
        let mut pow = Complex64::new(1.0, 0.0);
        for slot in p0.iter_mut().skip(1) {
            pow *= phi;
            *slot += pow.re;
        }
    }
    for v in p0.iter_mut() {
        *v /= M as f64;
    }
    let head: f64 = (1..=K).map(|k| p0[k] / k as f64).sum();
    // average over two consecutive steps to smooth periodic laws
    let local = |k: usize| 0.5 * (p0[k] + p0[k + 1]);
    let alpha = law.tail_index();
    let decay = ((local(K / 2) / local(K)).ln() / 2f64.ln()).max(1e-3);
    let tail = local(K) / decay;
    let tail_alt = local(K) * alpha;
    let est = head + tail;
    ((-est).exp(), (-est).exp() * ((tail - tail_alt).abs() + 1e-12))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarmonicityReport {
    pub max_residual: f64,
    pub bound: f64,
    pub worst_x: i64,
}

/// `max |sum_y p(y-x) a(y) - a(x) - delta(0,x)|` over `|x| <= interior`, with a
/// bound from the table errors and `a(y) <= |y| max(a(1), a(-1))` beyond the window.
pub fn check_harmonicity(law: &IncrementLaw, table: &PotentialTable, interior: usize) -> HarmonicityReport {
    let w = table.window as i64;
    let interior = interior.min(table.window) as i64;
    let amax = table.a(1).max(table.a(-1)) + table.err(1);
    let mut report = HarmonicityReport {
        max_residual: 0.0,
        bound: 0.0,
        worst_x: 0,
    };
    for x in -interior..=interior {
        let mut s = 0.0;
        let mut b = table.err(x);
        for y in -w..=w {
            let p = law.pmf(y - x);
            if p > 0.0 {
                s += p * table.a(y);
                b += p * table.err(y);
            }
        }
        // jumps landing beyond the window
        let up = (w - x + 1).max(1);
        let down = (w + x + 1).max(1);
        let beyond = law.right_tail().first_moment_from(up)
            + x as f64 * law.right_tail().mass_from(up)
            + law.left_tail().first_moment_from(down)
            - x as f64 * law.left_tail().mass_from(down);
        b += amax * beyond.max(0.0) + 1e-13 * (1.0 + s.abs());
        let delta = if x == 0 { 1.0 } else { 0.0 };
        let r = (s - table.a(x) - delta).abs();
        if r > report.max_residual {
            report.max_residual = r;
            report.worst_x = x;
        }
        report.bound = report.bound.max(b);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Side, TailModel};
    use std::collections::BTreeMap;

    fn law(pairs: &[(i64, f64)]) -> IncrementLaw {
        IncrementLaw::build(&pairs.iter().cloned().collect(), TailModel::None, TailModel::None).unwrap()
    }

    #[test]
    fn nstep_matches_enumeration() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let t = nstep_pmf(&srw, 2, 5, 1e-12).unwrap();
        assert_eq!(t.get(0), 0.5);
        assert_eq!(t.get(2), 0.25);
        assert_eq!(nstep_pmf(&srw, 3, 5, 1e-12).unwrap().get(0), 0.0);
        // asymmetric three-point law, all 3^4 paths
        let steps = [(-2i64, 0.2), (-1, 0.2), (1, 0.6)];
        let l = law(&steps);
        let t = nstep_pmf(&l, 4, 8, 1e-12).unwrap();
        let mut brute = BTreeMap::new();
        for a in steps {
            for b in steps {
                for c in steps {
                    for d in steps {
                        *brute.entry(a.0 + b.0 + c.0 + d.0).or_insert(0.0) += a.1 * b.1 * c.1 * d.1;
                    }
                }
            }
        }
        for (x, p) in brute {
            assert!((t.get(x) - p).abs() < 1e-16);
        }
        assert!(matches!(
            nstep_pmf(&l, 10, 3, 1e-6),
            Err(WalkError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn simple_walk_kernel_is_abs() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let t = potential_kernel(&srw, 200, 1e-8).unwrap();
        for x in -200..=200i64 {
            assert!((t.a(x) - x.abs() as f64).abs() < 1e-9, "a({x}) = {}", t.a(x));
        }
        assert_eq!(t.a(0), 0.0);
        assert_eq!(t.a_dagger(0), 1.0);
        let h = check_harmonicity(&srw, &t, 150);
        assert!(h.max_residual < 1e-9);
        assert!(t.cross_check_gap < 1e-4, "{}", t.cross_check_gap);
    }

    #[test]
    fn left_continuous_kernel_is_linear_on_right() {
        let l = law(&[(-1, 2.0 / 3.0), (2, 1.0 / 3.0)]);
        let t = potential_kernel(&l, 100, 1e-8).unwrap();
        for x in 1..=100i64 {
            assert!((t.a(x) - x as f64 / 2.0).abs() < 1e-9, "a({x}) = {}", t.a(x));
        }
        // reflection is right-continuous: a(-x) = x / 2
        let r = potential_kernel(&l.reflect(), 100, 1e-8).unwrap();
        for x in 1..=100i64 {
            assert!((r.a(-x) - t.a(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn heavy_left_kernel_is_harmonic() {
        let l = IncrementLaw::balanced_tail(&BTreeMap::from([(1, 0.8), (2, 0.2)]), Side::Left, 1.5, 1)
            .unwrap();
        let t = potential_kernel(&l, 256, 1e-6).unwrap();
        let h = check_harmonicity(&l, &t, 20);
        assert!(h.max_residual <= h.bound, "{h:?}");
        assert!(t.subadditivity_violation(64) <= 0.0);
        assert!((1..=256).all(|x| t.a(x) > 0.0 && t.a(-x) > 0.0));
    }

    #[test]
    fn constant_c_simple_walk() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let c = constant_c(&srw, 1e-10).unwrap();
        assert!((c.c - 0.5).abs() < 1e-12);
        // closed-form series: sum_k C(2k,k) 4^-k / (2k) = log 2
        let mut term = 1.0;
        let mut s = 0.0;
        for k in 1..200_000 {
            term *= (2 * k - 1) as f64 / (2 * k) as f64;
            s += term / (2 * k) as f64;
        }
        assert!(((-s).exp() - 0.5).abs() < 1e-3);
    }
}
