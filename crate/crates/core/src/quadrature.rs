//! Composite Gauss-Legendre rules on `[0, pi]` for Fourier integrals of a walk.
//!
//! The integrands used here are smooth on `(0, pi]` and singular (at worst like an
//! integrable power or logarithm) at `theta = 0`. Panels of width `h` cover
//! `[h, pi]` finely enough that `k h <= 6` for every harmonic `k <= kmax`, and
//! `[0, h]` is split geometrically towards the origin.

use crate::increment::IncrementLaw;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const FINE_POINTS: usize = 24;
const COARSE_POINTS: usize = 16;
/// Graded panels counted as "deepest" for the remainder estimate at the origin.
const DEEP_PANELS: usize = 8;

#[derive(Debug, Clone)]
pub struct Rule {
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
}

/// Fine and coarse composite rules over the same panels.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    pub fine: Rule,
    pub coarse: Rule,
    /// Fine nodes with index below this lie in the deepest graded panels.
    pub deep_count: usize,
    pub theta_min: f64,
    pub kmax: usize,
    /// Multiplier turning the deep-panel contribution into a remainder estimate.
    pub remainder_factor: f64,
    /// Tail index exactly 2 with infinite variance: the grid starts at
    /// `theta_min` and `[0, theta_min]` is left to the caller.
    pub log_case: bool,
    /// Upper end of the deepest panels.
    pub deep_top: f64,
}

impl FourierGrid {
    /// `alpha` is the smallest tail index (2 for finite variance); a tail index of
    /// exactly 2 with infinite variance gives only logarithmic decay at the origin.
    pub fn new(kmax: usize, alpha: f64, finite_variance: bool) -> Self {
        let kmax = kmax.max(8);
        let n_uniform = ((PI * kmax as f64 / 6.0).ceil() as usize).max(16);
        let h = PI / n_uniform as f64;
        let log_case = !finite_variance && alpha >= 2.0;
        let (theta_min, remainder_factor) = if finite_variance {
            // integrand bounded near 0: panel contributions halve
            (h * 2f64.powi(-60), 1.0 / 255.0)
        } else if alpha < 2.0 {
            let t = (1e-15 / kmax as f64).powf(1.0 / (2.0 - alpha)).max(1e-140);
            let r = 2f64.powf(-(2.0 - alpha) * DEEP_PANELS as f64);
            (t, 2.0 * r / (1.0 - r))
        } else {
            // integrands other than the odd part of the potential are bounded
            // times logs near 0, so panel contributions still halve
            (1e-140, 1.0 / 255.0)
        };
        let mut panels = Vec::new();
        if !log_case {
            panels.push((0.0, theta_min));
        }
        let mut graded = Vec::new();
        let mut b = h;
        while b > theta_min {
            let a = (0.5 * b).max(theta_min);
            graded.push((a, b));
            b = a;
        }
        graded.reverse();
        let deep_panels = (DEEP_PANELS + 1).min(graded.len() + if log_case { 0 } else { 1 });
        panels.extend(graded);
        let deep_top = panels[deep_panels - 1].1;
        for j in 1..n_uniform {
            panels.push((j as f64 * h, (j + 1) as f64 * h));
        }
        let build = |n: usize| {
            let (x, w) = gauss_legendre(n);
            let mut rule = Rule {
                theta: Vec::with_capacity(panels.len() * n),
                weight: Vec::with_capacity(panels.len() * n),
            };
            for &(a, b) in &panels {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (b + a);
                for i in 0..n {
                    rule.theta.push(mid + half * x[i]);
                    rule.weight.push(half * w[i]);
                }
            }
            rule
        };
        FourierGrid {
            fine: build(FINE_POINTS),
            coarse: build(COARSE_POINTS),
            deep_count: deep_panels * FINE_POINTS,
            theta_min,
            kmax,
            remainder_factor,
            log_case,
            deep_top,
        }
    }

    /// `int_0^pi f` with an error estimate.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let sum = |r: &Rule| -> (f64, f64, f64) {
            let mut s = 0.0;
            let mut abs = 0.0;
            let mut deep = 0.0;
            for (i, (&t, &w)) in r.theta.iter().zip(&r.weight).enumerate() {
                let v = w * f(t);
                s += v;
                abs += v.abs();
                if i < self.deep_count {
                    deep += v;
                }
            }
            (s, abs, deep)
        };
        let (fine, abs, deep) = sum(&self.fine);
        let (coarse, _, _) = sum(&self.coarse);
        let err = (fine - coarse).abs() + deep.abs() * self.remainder_factor + 1e-15 * abs;
        (fine, err)
    }
}

/// Cached values of `1 - phi` at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: FourierGrid,
    /// `(u, w)` with `1 - phi = u - i w` at the fine nodes.
    pub fine: Vec<(f64, f64)>,
    pub coarse: Vec<(f64, f64)>,
}

/// Trigonometric moments `sum_nodes weight * (alpha * E_k + beta * O_k)` for
/// `k = 0..=kmax`, where `(E_k, O_k)` is `(1 - cos k theta, sin k theta)` in
/// potential mode and `(cos k theta, sin k theta)` otherwise.
#[derive(Debug, Clone)]
pub struct HarmonicSums {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
    pub even_err: Vec<f64>,
    pub odd_err: Vec<f64>,
    /// Contribution of the deepest panels to `odd`.
    pub odd_deep: Vec<f64>,
}

impl Spectrum {
    pub fn new(law: &IncrementLaw, kmax: usize) -> Self {
        let m = law.moments();
        let grid = FourierGrid::new(kmax, law.tail_index(), m.finite_variance());
        let fine = grid.fine.theta.iter().map(|&t| law.deficit(t)).collect();
        let coarse = grid.coarse.theta.iter().map(|&t| law.deficit(t)).collect();
        Spectrum { grid, fine, coarse }
    }

    pub fn kmax(&self) -> usize {
        self.grid.kmax
    }

    /// `int_0^pi f(theta, u, w) dtheta` with an error estimate.
    pub fn integrate(&self, f: impl Fn(f64, f64, f64) -> f64) -> (f64, f64) {
        let eval = |rule: &Rule, vals: &[(f64, f64)], deep_count: usize| {
            let mut s = 0.0;
            let mut abs = 0.0;
            let mut deep = 0.0;
            for i in 0..rule.theta.len() {
                let (u, w) = vals[i];
                let v = rule.weight[i] * f(rule.theta[i], u, w);
                s += v;
                abs += v.abs();
                if i < deep_count {
                    deep += v;
                }
            }
            (s, abs, deep)
        };
        let (fine, abs, deep) = eval(&self.grid.fine, &self.fine, self.grid.deep_count);
        let (coarse, _, _) = eval(&self.grid.coarse, &self.coarse, 0);
        let err = (fine - coarse).abs() + deep.abs() * self.grid.remainder_factor + 1e-15 * abs;
        (fine, err)
    }

    pub fn harmonic_sums(
        &self,
        kmax: usize,
        potential_mode: bool,
        f: impl Fn(f64, f64, f64) -> (f64, f64),
    ) -> HarmonicSums {
        let fine = sweep(
            &self.grid.fine,
            &self.fine,
            kmax,
            potential_mode,
            self.grid.deep_count,
            &f,
        );
        let coarse = sweep(&self.grid.coarse, &self.coarse, kmax, potential_mode, 0, &f);
        let r = self.grid.remainder_factor;
        let err = |k: usize, which: usize| {
            (fine.sums[which][k] - coarse.sums[which][k]).abs()
                + fine.deep[which][k].abs() * r
                + 1e-15 * fine.abs[which][k]
        };
        HarmonicSums {
            even_err: (0..=kmax).map(|k| err(k, 0)).collect(),
            odd_err: (0..=kmax).map(|k| err(k, 1)).collect(),
            even: fine.sums[0].clone(),
            odd: fine.sums[1].clone(),
            odd_deep: fine.deep[1].clone(),
        }
    }
}

struct SweepOut {
    sums: [Vec<f64>; 2],
    abs: [Vec<f64>; 2],
    deep: [Vec<f64>; 2],
}

fn sweep(
    rule: &Rule,
    vals: &[(f64, f64)],
    kmax: usize,
    potential_mode: bool,
    deep_count: usize,
    f: &impl Fn(f64, f64, f64) -> (f64, f64),
) -> SweepOut {
    let n = kmax + 1;
    let mut out = SweepOut {
        sums: [vec![0.0; n], vec![0.0; n]],
        abs: [vec![0.0; n], vec![0.0; n]],
        deep: [vec![0.0; n], vec![0.0; n]],
    };
    for i in 0..rule.theta.len() {
        let theta = rule.theta[i];
        let (u, w) = vals[i];
        let (alpha, beta) = f(theta, u, w);
        let (alpha, beta) = (alpha * rule.weight[i], beta * rule.weight[i]);
        let half = 0.5 * theta;
        let (sh, ch) = half.sin_cos();
        // (s, c) = (sin, cos) of k * theta / 2, refreshed periodically
        let (mut s, mut c) = (0.0f64, 1.0f64);
        let is_deep = i < deep_count;
        for k in 0..n {
            if k % 64 == 0 && k > 0 {
                let (a, b) = (k as f64 * half).sin_cos();
                s = a;
                c = b;
            }
            let even = if potential_mode {
                2.0 * s * s
            } else {
                (c - s) * (c + s)
            };
            let odd = 2.0 * s * c;
            let te = alpha * even;
            let to = beta * odd;
            out.sums[0][k] += te;
            out.sums[1][k] += to;
            out.abs[0][k] += te.abs();
            out.abs[1][k] += to.abs();
            if is_deep {
                out.deep[0][k] += te;
                out.deep[1][k] += to;
            }
            let ns = s * ch + c * sh;
            c = c * ch - s * sh;
            s = ns;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(16);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let m30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn grid_integrates_log_singularity() {
        let g = FourierGrid::new(100, 2.0, true);
        // int_0^pi log(theta) = pi log pi - pi
        let (v, e) = g.integrate(|t| t.ln());
        assert!((v - (PI * PI.ln() - PI)).abs() < 1e-13, "{v}");
        assert!(e < 1e-12);
        // int_0^pi cos(100 t)^2 = pi / 2
        let (v, _) = g.integrate(|t| (100.0 * t).cos().powi(2));
        assert!((v - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn sweep_matches_direct_trig() {
        let law = IncrementLaw::build(
            &std::collections::BTreeMap::from([(-1, 0.5), (1, 0.5)]),
            crate::TailModel::None,
            crate::TailModel::None,
        )
        .unwrap();
        let sp = Spectrum::new(&law, 200);
        let hs = sp.harmonic_sums(200, false, |t, _, _| (t, t * t));
        for &k in &[0usize, 1, 63, 64, 65, 199] {
            let (e, _) = sp.grid.integrate(|t| t * (k as f64 * t).cos());
            let (o, _) = sp.grid.integrate(|t| t * t * (k as f64 * t).sin());
            assert!((hs.even[k] - e).abs() < 1e-11, "k {k}");
            assert!((hs.odd[k] - o).abs() < 1e-11, "k {k}");
        }
        let hp = sp.harmonic_sums(50, true, |_, _, _| (1.0, 0.0));
        // int_0^pi (1 - cos k t) = pi for k >= 1
        assert!((hp.even[37] - PI).abs() < 1e-12);
    }
}
