//! Green functions of the walk killed on a half line and hitting distributions.
//!
//! `g(x, y)` below is the Green function of the walk killed on `(-inf, 0]`, with
//! the time-zero visit counted also when `x <= 0`, so that
//! `g(x, y) = delta(x, y) + sum_{z >= 1} p(z - x) g(z, y)` for every `x`.

use crate::increment::{IncrementLaw, Side};
use crate::kernel::PotentialTable;
use crate::ladder::{Expectation, LadderTables};
use crate::{Estimate, Result, WalkError};
use serde::Serialize;

/// Green function and hitting distributions of `(-inf, 0]`.
pub struct HalfLine<'a> {
    pub law: &'a IncrementLaw,
    pub tables: &'a LadderTables,
    fr: Vec<f64>,
    /// `g(x, z)` for `z` beyond the table is `f_r(x) v_tail` within `f_r(x) v_tail_err`.
    v_tail: f64,
    v_tail_err: f64,
}

/// `sum_{y' <= 0} p(y' - z) phi(y')` for `z = 1..=K`, with `phi` tabulated on
/// `[-depth, 0]` and replaced by `far` below.
struct LowFunctional {
    depth: i64,
    psi: Vec<f64>,
    psi_err: Vec<f64>,
    /// `sum_{z > K} psi(z)` and its error.
    beyond: f64,
    beyond_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HittingPmf {
    pub x: i64,
    /// `H^x(y)` for `y = 0, -1, ..., -(len-1)`.
    pub pmf: Vec<f64>,
    /// Mass below the tabulated range.
    pub tail_mass: f64,
    pub err: f64,
}

impl HittingPmf {
    pub fn get(&self, y: i64) -> f64 {
        let i = (-y) as usize;
        self.pmf.get(i).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum::<f64>() + self.tail_mass
    }
}

impl<'a> HalfLine<'a> {
    pub fn new(law: &'a IncrementLaw, tables: &'a LadderTables) -> Self {
        let k = tables.window;
        let v_tail = tables.v[k];
        let v_tail_err = 2.0 * (tables.v[k] - tables.v[k / 2]).abs() + 1e-12;
        HalfLine {
            law,
            tables,
            fr: tables.f_r_table(),
            v_tail,
            v_tail_err,
        }
    }

    pub fn window(&self) -> usize {
        self.tables.window
    }

    /// `f_r(x)` for `x <= window + 1`.
    pub fn f_r(&self, x: i64) -> f64 {
        if x <= 0 {
            self.tables.f_r(x)
        } else {
            self.fr[x as usize]
        }
    }

    /// `sum_{z=1}^{x ^ y} v^-(x-z) v(y-z)` for `x, y >= 1`.
    pub fn g_positive(&self, x: usize, y: usize) -> f64 {
        let t = self.tables;
        assert!(x >= 1 && y >= 1 && x <= t.window + 1 && y <= t.window + 1);
        (1..=x.min(y)).map(|z| t.v_minus[x - z] * t.v[y - z]).sum()
    }

    /// `g(x, y)` for all integers, with an error bound from truncating the
    /// first-step sum when `x <= 0 < y`.
    pub fn g(&self, x: i64, y: i64) -> Estimate {
        if y <= 0 {
            return Estimate::exact(if x == y { 1.0 } else { 0.0 });
        }
        if x >= 1 {
            return Estimate::exact(self.g_positive(x as usize, y as usize));
        }
        let wmax = (self.window() / 2) as i64;
        let mut s = 0.0;
        for w in 1..=wmax {
            let p = self.law.pmf(w - x);
            if p > 0.0 {
                s += p * self.g_positive(w as usize, y as usize);
            }
        }
        // g(w, y) <= f_r(min(w, y)) <= f_r(y)
        let err = self.f_r(y) * self.law.prob_at_least(wmax + 1 - x);
        Estimate::new(s, err)
    }

    /// Green function of the walk killed on `[0, inf)` for `x, y <= -1`,
    /// from the ladder tables directly.
    pub fn g_upper(&self, x: i64, y: i64) -> f64 {
        assert!(x <= -1 && y <= -1);
        let (ax, ay) = (x.unsigned_abs() as usize, y.unsigned_abs() as usize);
        let t = self.tables;
        (1..=ax.min(ay)).map(|z| t.v[ax - z] * t.v_minus[ay - z]).sum()
    }

    /// `lim_{y -> inf} g(x, y) = f_r(x) / E Z`, zero when `E Z` is infinite.
    pub fn g_limit(&self, x: i64) -> Estimate {
        match self.tables.ez {
            Expectation::Finite { value, err } => {
                let f = self.f_r(x);
                Estimate::new(f / value, f * err / (value * value))
            }
            Expectation::Infinite => Estimate::exact(0.0),
        }
    }

    fn low_functional(&self, depth: i64, phi: &dyn Fn(i64) -> f64, phi_err: &dyn Fn(i64) -> f64, far: Estimate) -> LowFunctional {
        let k = self.window() as i64;
        let law = self.law;
        let reach = law.max_down().map(|m| m.min(depth + k + 1)).unwrap_or(depth + k + 1);
        let phis: Vec<f64> = (0..=depth).map(|j| phi(-j)).collect();
        let phi_errs: Vec<f64> = (0..=depth).map(|j| phi_err(-j)).collect();
        let pm: Vec<f64> = (0..=reach + 1).map(|j| law.pmf(-j)).collect();
        let mut psi = vec![0.0; k as usize + 1];
        let mut psi_err = vec![0.0; k as usize + 1];
        for z in 1..=k {
            // y' = z - j for jumps -j with j in [z, z + depth]
            let mut s = 0.0;
            let mut e = 0.0;
            let top = (z + depth).min(reach);
            for j in z..=top {
                let p = pm[j as usize];
                if p > 0.0 {
                    let i = (j - z) as usize;
                    s += p * phis[i];
                    e += p * phi_errs[i];
                }
            }
            let below = law.prob_at_most(-(z + depth + 1));
            s += far.value * below;
            e += far.err * below;
            psi[z as usize] = s;
            psi_err[z as usize] = e;
        }
        // sum over z > K of psi(z)
        let mut beyond = 0.0;
        let mut beyond_err = 0.0;
        for j in 0..=depth {
            let m = law.prob_at_most(-j - k - 1);
            beyond += phis[j as usize] * m;
            beyond_err += phi_errs[j as usize] * m;
        }
        let ex = law.excess((k + depth + 1) as u64, Side::Left);
        beyond += far.value * ex;
        beyond_err += far.err * ex;
        LowFunctional {
            depth,
            psi,
            psi_err,
            beyond,
            beyond_err,
        }
    }

    fn apply_positive(&self, x: usize, lf: &LowFunctional) -> Estimate {
        let k = self.window();
        let mut s = 0.0;
        let mut e = 0.0;
        for z in 1..=k {
            let psi = lf.psi[z];
            if psi == 0.0 && lf.psi_err[z] == 0.0 {
                continue;
            }
            let g = self.g_positive(x, z);
            s += g * psi;
            e += g * lf.psi_err[z];
        }
        let fx = self.f_r(x as i64);
        s += fx * self.v_tail * lf.beyond;
        e += fx * (self.v_tail_err * lf.beyond + self.v_tail * lf.beyond_err);
        e += 1e-13 * s.abs();
        Estimate::new(s, e)
    }

    /// `H^x{phi} = E_x[phi(S_T)]`, `phi` tabulated on `[-depth, 0]` and equal to
    /// `far` (within its error) below.
    pub fn hitting_functional(
        &self,
        x: i64,
        depth: i64,
        phi: &dyn Fn(i64) -> f64,
        phi_err: &dyn Fn(i64) -> f64,
        far: Estimate,
    ) -> Estimate {
        let lf = self.low_functional(depth, phi, phi_err, far);
        self.hitting_with(x, &lf, phi, phi_err, far)
    }

    fn hitting_with(
        &self,
        x: i64,
        lf: &LowFunctional,
        phi: &dyn Fn(i64) -> f64,
        phi_err: &dyn Fn(i64) -> f64,
        far: Estimate,
    ) -> Estimate {
        if x >= 1 {
            return self.apply_positive(x as usize, lf);
        }
        // first step from x <= 0
        let mut s = 0.0;
        let mut e = 0.0;
        for yp in -lf.depth..=0 {
            let p = self.law.pmf(yp - x);
            s += p * phi(yp);
            e += p * phi_err(yp);
        }
        let below = self.law.prob_at_most(-lf.depth - 1 - x);
        s += far.value * below;
        e += far.err * below;
        let wmax = (self.window() / 2) as i64;
        for w in 1..=wmax {
            let p = self.law.pmf(w - x);
            if p > 0.0 {
                let h = self.apply_positive(w as usize, lf);
                s += p * h.value;
                e += p * h.err;
            }
        }
        // H^w{phi} <= sup|phi| on the tabulated range and beyond
        let sup = (0..=lf.depth).map(|j| phi(-j).abs()).fold(far.value.abs(), f64::max);
        e += sup * self.law.prob_at_least(wmax + 1 - x);
        Estimate::new(s, e)
    }

    /// `H^x(y)` for `y` in `[-depth, 0]`, `x >= 1`.
    pub fn hitting_dist_low(&self, x: i64, depth: i64) -> Result<HittingPmf> {
        if x < 1 || x as usize > self.window() {
            return Err(WalkError::OutOfRange(format!("x = {x} outside [1, {}]", self.window())));
        }
        let k = self.window() as i64;
        let fx = self.f_r(x);
        let gs: Vec<f64> = (0..=k).map(|z| if z == 0 { 0.0 } else { self.g_positive(x as usize, z as usize) }).collect();
        let mut pmf = vec![0.0; depth as usize + 1];
        let mut err: f64 = 0.0;
        for (i, slot) in pmf.iter_mut().enumerate() {
            let y = -(i as i64);
            let mut s = 0.0;
            let reach = self.law.max_down().map(|m| m - i as i64).unwrap_or(k).min(k);
            for z in 1..=reach {
                s += gs[z as usize] * self.law.pmf(y - z);
            }
            let beyond = self.law.prob_at_most(y - k - 1);
            s += fx * self.v_tail * beyond;
            err += fx * self.v_tail_err * beyond;
            *slot = s;
        }
        // total mass below -depth: sum_z g(x,z) P[X <= -depth - 1 - z]
        let mut tail_mass = 0.0;
        for z in 1..=k {
            tail_mass += gs[z as usize] * self.law.prob_at_most(-depth - 1 - z);
        }
        let ex = self.law.excess((k + depth + 1) as u64, Side::Left);
        tail_mass += fx * self.v_tail * ex;
        err += fx * self.v_tail_err * ex;
        Ok(HittingPmf {
            x,
            pmf,
            tail_mass,
            err,
        })
    }

    /// `H^{-inf}_{[0,inf)}(y)` two ways: `(1/EZ) sum_w f_r(w) p(y + w)` and
    /// `P[Z > y] / EZ`.
    pub fn limit_hitting_minus_inf(&self, y: usize) -> Result<(Estimate, f64)> {
        let ez = match self.tables.ez {
            Expectation::Finite { value, .. } => value,
            Expectation::Infinite => {
                return Err(WalkError::NotApplicable(
                    "the limit vanishes identically when E Z is infinite".into(),
                ))
            }
        };
        let k = self.window() as i64;
        let y = y as i64;
        let mut s = 0.0;
        for w in 1..=k {
            s += self.fr[w as usize] * self.law.pmf(y + w);
        }
        let rt = self.law.right_tail();
        let from = y + k + 1;
        let err = if self.law.max_up().is_some_and(|m| m < from) {
            0.0
        } else {
            self.fr[k as usize]
                * (rt.mass_from(from) + (rt.first_moment_from(from) - y as f64 * rt.mass_from(from)) / k as f64)
        };
        let direct = self.tables.z_tail[y as usize] / ez;
        Ok((Estimate::new(s / ez, err / ez + 1e-12), direct))
    }

    /// `H^x_{[0,inf)}(y)` for `x <= -1 < 0 < y`.
    pub fn hitting_upper(&self, x: i64, y: i64) -> f64 {
        let k = self.window() as i64;
        let reach = self.law.max_up().map(|m| (m - y).min(k)).unwrap_or(k);
        (1..=reach).map(|j| self.g_upper(x, -j) * self.law.pmf(y + j)).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub x: i64,
    pub y: i64,
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl IdentityCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs.value - self.rhs.value).abs()
    }

    pub fn bound(&self) -> f64 {
        self.lhs.err + self.rhs.err
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.residual() <= self.bound() + slack
    }
}

/// Checks `a(x-y) - H^x{a(. - y)} + g(x, y) = A g(x, inf)` for each `(x, y)`.
pub fn verify_half_line_potential(hl: &HalfLine, pt: &PotentialTable, pairs: &[(i64, i64)]) -> Vec<IdentityCheck> {
    let mut by_y: std::collections::BTreeMap<i64, Vec<i64>> = Default::default();
    for &(x, y) in pairs {
        by_y.entry(y).or_default().push(x);
    }
    let mut out = Vec::new();
    for (y, xs) in by_y {
        let depth = pt.window as i64 - y.abs();
        let phi = |yp: i64| pt.a(yp - y);
        let phi_err = |yp: i64| pt.err(yp - y);
        let edge = pt.a(-depth - y);
        let mid = pt.a(-depth / 2 - y);
        let far = Estimate::new(edge, (edge - mid).abs() + pt.err(-depth - y));
        let lf = hl.low_functional(depth, &phi, &phi_err, far);
        for x in xs {
            let h = hl.hitting_with(x, &lf, &phi, &phi_err, far);
            let g = hl.g(x, y);
            let lhs = Estimate::new(
                pt.a(x - y) - h.value + g.value,
                pt.err(x - y) + h.err + g.err,
            );
            let gl = hl.g_limit(x);
            let rhs = Estimate::new(pt.big_a * gl.value, pt.big_a * gl.err);
            out.push(IdentityCheck { x, y, lhs, rhs });
        }
    }
    out
}

/// `a^dagger(x) - H^x{a}` against `A f_r(x) / E Z` (zero when `E Z` is infinite).
pub fn verify_entrance_potential(hl: &HalfLine, pt: &PotentialTable, xs: &[i64]) -> Vec<IdentityCheck> {
    let pairs: Vec<(i64, i64)> = xs.iter().map(|&x| (x, 0)).collect();
    verify_half_line_potential(hl, pt, &pairs)
}

/// `H^x{a}` for `x >= 1` with far-field handling as in [`verify_half_line_potential`].
pub fn hitting_of_a(hl: &HalfLine, pt: &PotentialTable, x: i64) -> Estimate {
    let depth = pt.window as i64;
    let edge = pt.a(-depth);
    let far = Estimate::new(edge, (edge - pt.a(-depth / 2)).abs() + pt.err(-depth));
    hl.hitting_functional(x, depth, &|y| pt.a(y), &|y| pt.err(y), far)
}

/// [`hitting_of_a`] for many positive starts sharing one far-field functional.
pub fn hitting_of_a_many(hl: &HalfLine, pt: &PotentialTable, xs: &[i64]) -> Vec<Estimate> {
    let depth = pt.window as i64;
    let edge = pt.a(-depth);
    let far = Estimate::new(edge, (edge - pt.a(-depth / 2)).abs() + pt.err(-depth));
    let phi = |y: i64| pt.a(y);
    let phi_err = |y: i64| pt.err(y);
    let lf = hl.low_functional(depth, &phi, &phi_err, far);
    xs.iter().map(|&x| hl.hitting_with(x, &lf, &phi, &phi_err, far)).collect()
}

/// `g_{{0}}(x, y) = delta(0,x) + a(x) + a(-y) - a(x - y)`.
pub fn green_origin(pt: &PotentialTable, x: i64, y: i64) -> Estimate {
    let d = if x == 0 { 1.0 } else { 0.0 };
    Estimate::new(
        d + pt.a(x) + pt.a(-y) - pt.a(x - y),
        pt.err(x) + pt.err(-y) + pt.err(x - y),
    )
}
