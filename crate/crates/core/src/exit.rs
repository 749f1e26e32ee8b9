//! Two-sided exit problems: direct linear solves for the killed chain and the
//! ladder-based formulas they are compared against.

use crate::green::HalfLine;
use crate::increment::IncrementLaw;
use crate::kernel::PotentialTable;
use crate::ladder::LadderTables;
use crate::{Estimate, Result, WalkError};
use serde::Serialize;

/// Largest number of stored band entries for a single factorization.
const MAX_BAND_ENTRIES: usize = 40_000_000;

/// Band matrix with row-major storage of columns `i - lo ..= i + up`.
#[derive(Clone)]
struct Band {
    n: usize,
    lo: usize,
    up: usize,
    data: Vec<f64>,
}

impl Band {
    fn width(&self) -> usize {
        self.lo + self.up + 1
    }

    fn cols(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        i.saturating_sub(self.lo)..=(i + self.up).min(self.n - 1)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j + self.lo - i]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let w = self.width();
        &mut self.data[i * w + j + self.lo - i]
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.cols(i).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }

    /// In-place LU without pivoting; fill-in stays inside the band.
    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let piv = self.at(k, k);
            if !(piv.abs() > 0.0) || !piv.is_finite() {
                return Err(WalkError::SolveFailure(format!("zero or non-finite pivot at row {k}")));
            }
            let rmax = (k + self.lo).min(n - 1);
            let cmax = (k + self.up).min(n - 1);
            for i in k + 1..=rmax {
                let l = self.at(i, k) / piv;
                if l == 0.0 {
                    continue;
                }
                *self.at_mut(i, k) = l;
                for j in k + 1..=cmax {
                    let u = self.at(k, j);
                    *self.at_mut(i, j) -= l * u;
                }
            }
        }
        Ok(())
    }

    fn lu_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (i.saturating_sub(self.lo)..i).map(|j| self.at(i, j) * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..=(i + self.up).min(n - 1)).map(|j| self.at(i, j) * y[j]).sum();
            y[i] = (y[i] - s) / self.at(i, i);
        }
        y
    }
}

/// The walk on `[lo, hi]` minus `holes`, killed on leaving that set.
struct KilledChain<'a> {
    law: &'a IncrementLaw,
    states: Vec<i64>,
    lo: i64,
    hi: i64,
    holes: Vec<i64>,
    matrix: Band,
    lu: Band,
    /// `max_x E_x[lifetime]`, which bounds the inverse in the sup norm.
    inv_norm: f64,
}

impl<'a> KilledChain<'a> {
    fn new(law: &'a IncrementLaw, lo: i64, hi: i64, holes: &[i64]) -> Result<Self> {
        let states: Vec<i64> = (lo..=hi).filter(|x| !holes.contains(x)).collect();
        let n = states.len();
        if n == 0 {
            return Err(WalkError::OutOfRange("empty state set".into()));
        }
        let span = (hi - lo) as usize;
        let up = law.max_up().map_or(n - 1, |m| (m as usize).min(span)).min(n - 1);
        let dn = law.max_down().map_or(n - 1, |m| (m as usize).min(span)).min(n - 1);
        let width = up + dn + 1;
        if n.saturating_mul(width) > MAX_BAND_ENTRIES {
            return Err(WalkError::WindowExceeded { cap: MAX_BAND_ENTRIES / width });
        }
        let mut matrix = Band {
            n,
            lo: dn,
            up,
            data: vec![0.0; n * width],
        };
        for i in 0..n {
            for j in matrix.cols(i) {
                let d = if i == j { 1.0 } else { 0.0 };
                *matrix.at_mut(i, j) = d - law.pmf(states[j] - states[i]);
            }
        }
        let mut lu = matrix.clone();
        lu.factor()?;
        let mut chain = KilledChain {
            law,
            states,
            lo,
            hi,
            holes: holes.to_vec(),
            matrix,
            lu,
            inv_norm: 0.0,
        };
        let (t, _) = chain.solve_raw(&vec![1.0; n]);
        chain.inv_norm = 1.01 * t.iter().cloned().fold(0.0, f64::max);
        Ok(chain)
    }

    fn index(&self, x: i64) -> Option<usize> {
        self.states.binary_search(&x).ok()
    }

    /// Solve with one step of iterative refinement; returns the residual norm.
    fn solve_raw(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let mut x = self.lu.lu_solve(b);
        let ax = self.matrix.mul(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let d = self.lu.lu_solve(&r);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        let ax = self.matrix.mul(&x);
        let res = b.iter().zip(&ax).map(|(b, a)| (b - a).abs()).fold(0.0, f64::max);
        (x, res)
    }

    /// Solution with a sup-norm error bound.
    fn solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let (x, res) = self.solve_raw(b);
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (x, self.inv_norm * res + 1e-15 * scale)
    }

    fn below_mass(&self) -> Vec<f64> {
        self.states.iter().map(|&x| self.law.prob_at_most(self.lo - 1 - x)).collect()
    }

    fn above_mass(&self) -> Vec<f64> {
        self.states.iter().map(|&x| self.law.prob_at_least(self.hi + 1 - x)).collect()
    }

    /// One-step entry into absorbing holes weighted by `values`.
    fn hole_mass(&self, values: &[f64]) -> Vec<f64> {
        self.states
            .iter()
            .map(|&x| {
                self.holes
                    .iter()
                    .zip(values)
                    .map(|(&h, &v)| v * self.law.pmf(h - x))
                    .sum()
            })
            .collect()
    }
}

/// `P_x[sigma_[N,inf) < T]` for `0 < x < N`, with `T` the entrance time of `(-inf, 0]`.
#[derive(Debug, Clone, Serialize)]
pub struct ExitSolution {
    pub n: i64,
    /// Value at `x` stored at index `x - 1`.
    pub prob: Vec<f64>,
    /// Certified sup-norm error.
    pub err: f64,
    pub residual: f64,
}

impl ExitSolution {
    pub fn get(&self, x: i64) -> Estimate {
        assert!(x >= 1 && x < self.n, "x = {x} outside (0, {})", self.n);
        Estimate::new(self.prob[(x - 1) as usize], self.err)
    }

    /// `[lo, hi]` clipped to `[0, 1]`.
    pub fn bracket(&self, x: i64) -> (f64, f64) {
        let e = self.get(x);
        ((e.value - e.err).max(0.0), (e.value + e.err).min(1.0))
    }
}

/// Exit of `(0, N)` through the top. Jumps out of the interval are summed in
/// closed form, so heavy tails need no window widening.
pub fn exit_upper(law: &IncrementLaw, n: i64) -> Result<ExitSolution> {
    if n < 2 {
        return Err(WalkError::OutOfRange(format!("N = {n} < 2")));
    }
    let chain = KilledChain::new(law, 1, n - 1, &[])?;
    let b = chain.above_mass();
    let (_, residual) = chain.solve_raw(&b);
    let (prob, err) = chain.solve(&b);
    Ok(ExitSolution { n, prob, err, residual })
}

/// `P_x[sigma_N < T] = g(x, N) / g(N, N)`.
pub fn exit_point(hl: &HalfLine, x: i64, n: i64) -> Estimate {
    assert!(x >= 1 && n >= 1);
    let num = hl.g_positive(x as usize, n as usize);
    let den = hl.g_positive(n as usize, n as usize);
    let v = num / den;
    let steps = (x.min(n) + n) as f64;
    Estimate::new(v, v * steps * (hl.tables.coeff_err + 1e-15) + 1e-14)
}

/// Two-sided bounds plus a self-consistent far-field estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Estimate with the far states valued like the outermost kept state.
    pub estimate: f64,
    pub solver_err: f64,
}

impl Bracket {
    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lo - self.solver_err - slack && v <= self.hi + self.solver_err + slack
    }
}

/// Direct solve for `P_x[sigma_N < T]` on `1..=N+margin` minus `{N}`. Leaving
/// through the top is scored 0 for `lo` and 1 for `hi`.
pub fn exit_point_solve(law: &IncrementLaw, n: i64, margin: i64, xs: &[i64]) -> Result<Vec<Bracket>> {
    let top = n + margin;
    let chain = KilledChain::new(law, 1, top, &[n])?;
    let (base, e1) = chain.solve(&chain.hole_mass(&[1.0]));
    let (esc, e2) = chain.solve(&chain.above_mass());
    let last = chain.index(top).ok_or_else(|| WalkError::OutOfRange("point outside the solve window".into()))?;
    let theta = (base[last] / (1.0 - esc[last])).clamp(0.0, 1.0);
    xs.iter()
        .map(|&x| {
            if x == n {
                return Ok(Bracket { lo: 1.0, hi: 1.0, estimate: 1.0, solver_err: 0.0 });
            }
            let i = chain.index(x).ok_or_else(|| WalkError::OutOfRange("point outside the solve window".into()))?;
            Ok(Bracket {
                lo: base[i],
                hi: base[i] + esc[i],
                estimate: base[i] + theta * esc[i],
                solver_err: e1 + e2,
            })
        })
        .collect()
}

/// `P_x[sigma_N < sigma_0] = (a(x) + a(-N) - a(x - N)) / (2 abar(N))`.
pub fn avoid_origin(pt: &PotentialTable, x: i64, n: i64) -> Estimate {
    assert!(x != 0 && n != 0);
    let num = pt.a(x) + pt.a(-n) - pt.a(x - n);
    let den = 2.0 * pt.abar(n);
    let num_err = pt.err(x) + pt.err(-n) + pt.err(x - n);
    let den_err = pt.err(n) + pt.err(-n);
    let v = num / den;
    Estimate::new(v, (num_err + v.abs() * den_err) / den)
}

/// Direct solve for `P_x[sigma_N < sigma_0]` on `[-margin, N + margin]`, with
/// escapes on either side scored 0 for `lo` and 1 for `hi`.
pub fn avoid_origin_solve(law: &IncrementLaw, n: i64, margin: i64, xs: &[i64]) -> Result<Vec<Bracket>> {
    assert!(n >= 1);
    let (bot, top) = (-margin, n + margin);
    let chain = KilledChain::new(law, bot, top, &[0, n])?;
    let (base, e0) = chain.solve(&chain.hole_mass(&[0.0, 1.0]));
    let (dn, e1) = chain.solve(&chain.below_mass());
    let (up, e2) = chain.solve(&chain.above_mass());
    let (ib, it) = (
        chain.index(bot).ok_or_else(|| WalkError::OutOfRange("point outside the solve window".into()))?,
        chain.index(top).ok_or_else(|| WalkError::OutOfRange("point outside the solve window".into()))?,
    );
    // theta_- = h(bot), theta_+ = h(top)
    let (a11, a12, a21, a22) = (1.0 - dn[ib], -up[ib], -dn[it], 1.0 - up[it]);
    let det = a11 * a22 - a12 * a21;
    let tm = ((base[ib] * a22 - a12 * base[it]) / det).clamp(0.0, 1.0);
    let tp = ((a11 * base[it] - a21 * base[ib]) / det).clamp(0.0, 1.0);
    xs.iter()
        .map(|&x| {
            if x == n {
                return Ok(Bracket { lo: 1.0, hi: 1.0, estimate: 1.0, solver_err: 0.0 });
            }
            if x == 0 {
                return Ok(Bracket { lo: 0.0, hi: 0.0, estimate: 0.0, solver_err: 0.0 });
            }
            let i = chain.index(x).ok_or_else(|| WalkError::OutOfRange("point outside the solve window".into()))?;
            Ok(Bracket {
                lo: base[i],
                hi: base[i] + dn[i] + up[i],
                estimate: base[i] + tm * dn[i] + tp * up[i],
                solver_err: e0 + e1 + e2,
            })
        })
        .collect()
}

/// Outcome of one part of the exit diagnostics.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PartStatus {
    Evaluated,
    PreconditionUnmet { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct PointExitRow {
    pub n: i64,
    /// `sup_x |P_x[sigma_[N,inf) < T] / P_x[sigma_N < T] - 1|` over `0 < x < N`.
    pub dev_exit_vs_point: Option<f64>,
    /// `P_x[sigma_N < T] / P_x[sigma_N < sigma_0]` per tracked `x`.
    pub point_vs_avoid: Vec<(i64, f64)>,
    /// Largest distance of those ratios to their predicted limits.
    pub dev_point_vs_avoid: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointExitReport {
    pub exit_vs_point_status: PartStatus,
    pub point_vs_avoid_status: PartStatus,
    /// Limit of the second ratio per tracked `x`. With finite variance it
    /// carries the drift terms `x / sigma^2` and `E_x[S_T] / sigma^2`.
    pub limits: Vec<(i64, f64)>,
    /// `1 - H^x{a} / a(x)` (zero when `E Z` is infinite), which is the limit
    /// only when the variance is infinite.
    pub naive_limits: Vec<(i64, f64)>,
    pub rows: Vec<PointExitRow>,
}

impl PointExitReport {
    pub fn last(&self) -> Option<&PointExitRow> {
        self.rows.last()
    }
}

/// Ratios of exit and hitting probabilities over a ladder of `N`, against
/// their limits. `xs` are the fixed starting points tracked for the second ratio.
pub fn point_exit_diagnostics(
    law: &IncrementLaw,
    tables: &LadderTables,
    pt: &PotentialTable,
    ns: &[i64],
    xs: &[i64],
) -> Result<PointExitReport> {
    let hl = HalfLine::new(law, tables);
    let exit_vs_point_status = if tables.ez.is_finite() || tables.e_abs_hat_z.is_finite() {
        PartStatus::Evaluated
    } else {
        PartStatus::PreconditionUnmet {
            reason: "both ladder height means are infinite".into(),
        }
    };
    let point_vs_avoid_status = if law.is_left_continuous() {
        PartStatus::PreconditionUnmet {
            reason: "walk is left-continuous".into(),
        }
    } else {
        PartStatus::Evaluated
    };
    let sigma2 = law.moments().sigma2;
    let (limits, naive_limits): (Vec<(i64, f64)>, Vec<(i64, f64)>) = if matches!(point_vs_avoid_status, PartStatus::Evaluated) {
        xs.iter()
            .map(|&x| {
                if !tables.ez.is_finite() {
                    return ((x, 0.0), (x, 0.0));
                }
                let ha = crate::green::hitting_of_a(&hl, pt, x).value;
                let naive = 1.0 - ha / pt.a(x);
                let lim = if sigma2.is_finite() {
                    // a(-N) - a(x-N) -> x / sigma^2 and likewise under H^x
                    let es = mean_entrance_position(&hl, x);
                    1.0 - (ha + es / sigma2) / (pt.a(x) + x as f64 / sigma2)
                } else {
                    naive
                };
                ((x, lim), (x, naive))
            })
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };
    let mut rows = Vec::new();
    for &n in ns {
        if n as usize > tables.window || n as usize + 1 > pt.window {
            return Err(WalkError::OutOfRange(format!("N = {n} beyond table windows")));
        }
        let dev_i = if matches!(exit_vs_point_status, PartStatus::Evaluated) {
            let sol = exit_upper(law, n)?;
            let mut worst: f64 = 0.0;
            for x in 1..n {
                let p = exit_point(&hl, x, n).value;
                worst = worst.max((sol.get(x).value / p - 1.0).abs());
            }
            Some(worst)
        } else {
            None
        };
        let point_vs_avoid: Vec<(i64, f64)> = xs
            .iter()
            .filter(|&&x| x < n)
            .map(|&x| (x, exit_point(&hl, x, n).value / avoid_origin(pt, x, n).value))
            .collect();
        let dev_ii = if limits.is_empty() {
            None
        } else {
            Some(
                point_vs_avoid
                    .iter()
                    .zip(&limits)
                    .map(|(&(_, r), &(_, l))| (r - l).abs())
                    .fold(0.0, f64::max),
            )
        };
        rows.push(PointExitRow {
            n,
            dev_exit_vs_point: dev_i,
            point_vs_avoid,
            dev_point_vs_avoid: dev_ii,
        });
    }
    Ok(PointExitReport {
        exit_vs_point_status,
        point_vs_avoid_status,
        limits,
        naive_limits,
        rows,
    })
}

/// `E_x[S_T]` for `x >= 1`, for laws with finite variance.
pub fn mean_entrance_position(hl: &HalfLine, x: i64) -> f64 {
    let depth = hl.window() as i64;
    hl.hitting_functional(x, depth, &|y| y as f64, &|_| 0.0, Estimate::new(-(depth as f64), depth as f64))
        .value
}

/// Ladder approximants of the exit probabilities of `(0, N)` from `x`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitApprox {
    /// `f_r(x) / f_r(N)` and its complement, when `E Z` is finite.
    pub up: Option<f64>,
    pub down: Option<f64>,
    /// `(f_l(N) - f_l(N-x)) / f_l(N)` and `f_l(N-x) / f_l(N)`, when `E|Zhat|` is finite.
    pub dual_up: Option<f64>,
    pub dual_down: Option<f64>,
}

pub fn ladder_exit_approx(tables: &LadderTables, x: i64, n: i64) -> Result<ExitApprox> {
    if !(x >= 1 && x < n) || n as usize > tables.window {
        return Err(WalkError::OutOfRange(format!("N = {n} beyond table windows")));
    }
    let primal = tables.ez.is_finite();
    let dual = tables.e_abs_hat_z.is_finite();
    if !primal && !dual {
        return Err(WalkError::NotApplicable("both ladder height means are infinite".into()));
    }
    let (up, down) = if primal {
        let r = tables.f_r(x) / tables.f_r(n);
        (Some(r), Some(1.0 - r))
    } else {
        (None, None)
    };
    let (dual_up, dual_down) = if dual {
        let fl = tables.f_l(n as usize);
        let r = tables.f_l((n - x) as usize) / fl;
        (Some(1.0 - r), Some(r))
    } else {
        (None, None)
    };
    Ok(ExitApprox {
        up,
        down,
        dual_up,
        dual_down,
    })
}

/// `sup_x |P_x[sigma_[N,inf) < T] f_r(N) / f_r(x) - 1|` for each `N`.
pub fn ladder_exit_monitor(law: &IncrementLaw, tables: &LadderTables, ns: &[i64]) -> Result<Vec<(i64, f64)>> {
    if !tables.ez.is_finite() {
        return Err(WalkError::NotApplicable("both ladder height means are infinite".into()));
    }
    let fr = tables.f_r_table();
    ns.iter()
        .map(|&n| {
            if n as usize > tables.window {
                return Err(WalkError::OutOfRange(format!("N = {n} beyond table windows")));
            }
            let sol = exit_upper(law, n)?;
            let worst = (1..n)
                .map(|x| (sol.get(x).value * fr[n as usize] / fr[x as usize] - 1.0).abs())
                .fold(0.0, f64::max);
            Ok((n, worst))
        })
        .collect()
}

/// Markov bound on `P_x[S_sigma > N', sigma < T]` with `sigma = sigma_[N,inf)`,
/// using the lower end of the exit bracket.
pub fn overshoot_tail(tables: &LadderTables, sol: &ExitSolution, x: i64, n_prime: i64) -> f64 {
    let n = sol.n;
    assert!(x >= 1 && x < n && n < n_prime);
    let (fx, fnn, fnp) = (tables.f_r(x), tables.f_r(n), tables.f_r(n_prime));
    let (lo, _) = sol.bracket(x);
    (fx - fnn * lo).max(0.0) / (fnp - fnn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::potential_kernel;
    use crate::ladder::ladder_tables;
    use std::collections::BTreeMap;

    fn law(pairs: &[(i64, f64)]) -> IncrementLaw {
        let core: BTreeMap<i64, f64> = pairs.iter().cloned().collect();
        IncrementLaw::build(&core, crate::TailModel::None, crate::TailModel::None).unwrap()
    }

    #[test]
    fn srw_exit_is_linear() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let sol = exit_upper(&srw, 10).unwrap();
        for x in 1..10 {
            assert!((sol.get(x).value - x as f64 / 10.0).abs() < 1e-13);
        }
        assert!(sol.err < 1e-12);
        let t = ladder_tables(&srw, 64).unwrap();
        let hl = HalfLine::new(&srw, &t);
        assert!((exit_point(&hl, 5, 10).value - 0.5).abs() < 1e-12);
        let b = overshoot_tail(&t, &sol, 3, 20);
        assert!(b < 1e-10);
    }

    #[test]
    fn srw_avoid_origin() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let pt = potential_kernel(&srw, 64, 1e-8).unwrap();
        for x in 1..12 {
            assert!(avoid_origin(&pt, x, 12).agrees_with(x as f64 / 12.0, 1e-9));
        }
        assert!(avoid_origin(&pt, 12, 12).agrees_with(1.0, 1e-9));
    }

    #[test]
    fn point_hit_matches_green_ratio() {
        let l = law(&[(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)]);
        let t = ladder_tables(&l, 512).unwrap();
        let hl = HalfLine::new(&l, &t);
        let xs: Vec<i64> = (1..20).collect();
        let br = exit_point_solve(&l, 20, 400, &xs).unwrap();
        let up = exit_upper(&l, 20).unwrap();
        for (&x, b) in xs.iter().zip(&br) {
            let g = exit_point(&hl, x, 20).value;
            assert!(b.contains(g, 1e-9), "x={x} g={g} {b:?}");
            assert!((b.estimate - g).abs() < 1e-6, "x={x} g={g} {b:?}");
            assert!(g <= up.get(x).value + 1e-12);
        }
    }

    #[test]
    fn avoid_origin_matches_solve() {
        let l = law(&[(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)]);
        let pt = potential_kernel(&l, 512, 1e-8).unwrap();
        let xs = [-5, -1, 1, 4, 9, 15];
        let br = avoid_origin_solve(&l, 10, 200, &xs).unwrap();
        for (&x, b) in xs.iter().zip(&br) {
            let f = avoid_origin(&pt, x, 10);
            assert!(b.contains(f.value, f.err), "x={x} {f:?} {b:?}");
            assert!((b.estimate - f.value).abs() < 1e-6 + f.err, "x={x} {f:?} {b:?}");
        }
    }

    #[test]
    fn dual_on_reflection_matches_primal() {
        let l = law(&[(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)]);
        let r = l.reflect();
        let t = ladder_tables(&l, 256).unwrap();
        let tr = ladder_tables(&r, 256).unwrap();
        for (x, n) in [(3, 12), (1, 40), (30, 40)] {
            let a = ladder_exit_approx(&t, x, n).unwrap();
            let b = ladder_exit_approx(&tr, n - x, n).unwrap();
            assert!((a.up.unwrap() - b.dual_down.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn srw_ladder_exit_approx() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let t = ladder_tables(&srw, 64).unwrap();
        let a = ladder_exit_approx(&t, 3, 12).unwrap();
        assert!((a.up.unwrap() - 0.25).abs() < 1e-12);
        assert!((a.down.unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn srw_point_vs_avoid_excluded() {
        let srw = law(&[(-1, 0.5), (1, 0.5)]);
        let t = ladder_tables(&srw, 64).unwrap();
        let pt = potential_kernel(&srw, 64, 1e-8).unwrap();
        let rep = point_exit_diagnostics(&srw, &t, &pt, &[8, 16, 32], &[1, 2]).unwrap();
        assert!(matches!(rep.point_vs_avoid_status, PartStatus::PreconditionUnmet { .. }));
        for row in &rep.rows {
            assert!(row.dev_exit_vs_point.unwrap() < 1e-10);
            for &(_, r) in &row.point_vs_avoid {
                assert!((r - 1.0).abs() < 1e-9);
            }
        }
    }
}
