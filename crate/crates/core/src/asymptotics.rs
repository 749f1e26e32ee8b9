//! Spitzer sums, tail-index estimation, boundedness criteria for `a(-x)` and
//! the renewal product `u_x G(x)` for slowly varying `G`.

use crate::green::HalfLine;
use crate::increment::{IncrementLaw, Side, TailModel};
use crate::kernel::PotentialTable;
use crate::ladder::LadderTables;
use crate::quadrature::{Rule, Spectrum};
use crate::special::gamma;
use crate::{Result, WalkError};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Spitzer sums

#[derive(Debug, Clone, Serialize)]
pub struct SpitzerTrajectory {
    /// `[lo, hi]` for `P[S_k > 0]`, index `k - 1`.
    pub p_pos: Vec<(f64, f64)>,
    /// `[lo, hi]` for `(1/n) sum_{k<=n} P[S_k > 0]`, index `n - 1`.
    pub average: Vec<(f64, f64)>,
}

impl SpitzerTrajectory {
    pub fn at(&self, n: usize) -> (f64, f64) {
        self.average[n - 1]
    }
}

struct PowerSums {
    /// `sum w cot(theta/2) Im phi^k` and `sum w Re phi^k`.
    odd: Vec<f64>,
    even: Vec<f64>,
    abs: Vec<f64>,
}

fn power_sums(rule: &Rule, vals: &[(f64, f64)], n: usize) -> PowerSums {
    let mut odd = vec![0.0; n + 1];
    let mut even = vec![0.0; n + 1];
    let mut abs = vec![0.0; n + 1];
    for (i, (&t, &w)) in rule.theta.iter().zip(&rule.weight).enumerate() {
        let (u, im) = vals[i];
        let phi = Complex64::new(1.0 - u, im);
        let wc = w / (0.5 * t).tan();
        let mut z = Complex64::new(1.0, 0.0);
        for k in 1..=n {
            z *= phi;
            let a = wc * z.im;
            let b = w * z.re;
            odd[k] += a;
            even[k] += b;
            abs[k] += a.abs() + b.abs();
            if z.norm_sqr() < 1e-40 {
                break;
            }
        }
    }
    PowerSums { odd, even, abs }
}

/// `P[S_k > 0]` for `k <= n_max` from
/// `P[S_k > 0] - P[S_k < 0] = (1/pi) int_0^pi cot(theta/2) Im phi^k` and
/// `P[S_k = 0] = (1/pi) int_0^pi Re phi^k`, with quadrature brackets.
pub fn spitzer_sum(law: &IncrementLaw, n_max: usize) -> Result<SpitzerTrajectory> {
    if n_max == 0 {
        return Err(WalkError::OutOfRange("n_max must be at least 1".into()));
    }
    let sp = Spectrum::new(law, n_max.max(64));
    let fine = power_sums(&sp.grid.fine, &sp.fine, n_max);
    let coarse = power_sums(&sp.grid.coarse, &sp.coarse, n_max);
    let mut p_pos = Vec::with_capacity(n_max);
    let mut average = Vec::with_capacity(n_max);
    let (mut slo, mut shi) = (0.0, 0.0);
    for k in 1..=n_max {
        let d = fine.odd[k] / PI;
        let r = fine.even[k] / PI;
        let err = ((fine.odd[k] - coarse.odd[k]).abs()
            + (fine.even[k] - coarse.even[k]).abs()
            + 1e-14 * fine.abs[k]
            + 1e-15)
            / PI;
        let p = 0.5 * (1.0 - r + d);
        let lo = (p - 0.5 * err).max(0.0);
        let hi = (p + 0.5 * err).min(1.0);
        p_pos.push((lo, hi));
        slo += lo;
        shi += hi;
        average.push((slo / k as f64, shi / k as f64));
    }
    Ok(SpitzerTrajectory { p_pos, average })
}

// ---------------------------------------------------------------------------
// Tail index

/// Which regularly varying quantity the samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    /// `f_r(x) ~ x^(alpha - 1) L(x) Gamma(3-alpha)^-1 Gamma(alpha)^-1 E Z`.
    FR,
    /// `m_-(x) ~ x^(2 - alpha) / L(x)`.
    MMinus,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaEstimate {
    pub source: AlphaSource,
    pub alpha_hat: f64,
    /// Range of the filtered local estimates used.
    pub band: (f64, f64),
    /// Median-filtered local estimates per dyadic block `(x, alpha)`.
    pub local: Vec<(f64, f64)>,
    /// Implied slowly varying part `(x, L(x))`.
    pub l_samples: Vec<(f64, f64)>,
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// Local log-slopes of `(x, y)` samples on a dyadic grid, median filtered over
/// three neighbours; the estimate is the median of the upper half.
pub fn estimate_alpha_from(samples: &[(f64, f64)], source: AlphaSource, ez: f64) -> Result<AlphaEstimate> {
    if samples.len() < 4 {
        return Err(WalkError::OutOfRange("need at least four dyadic samples".into()));
    }
    let to_alpha = |s: f64| match source {
        AlphaSource::FR => 1.0 + s,
        AlphaSource::MMinus => 2.0 - s,
    };
    let raw: Vec<(f64, f64)> = samples
        .windows(2)
        .map(|p| {
            let s = (p[1].1 / p[0].1).ln() / (p[1].0 / p[0].0).ln();
            ((p[0].0 * p[1].0).sqrt(), to_alpha(s))
        })
        .collect();
    let local: Vec<(f64, f64)> = (0..raw.len())
        .map(|i| {
            let a = raw[i.saturating_sub(1)].1;
            let c = raw[(i + 1).min(raw.len() - 1)].1;
            (raw[i].0, median3(a, raw[i].1, c))
        })
        .collect();
    let mut upper: Vec<f64> = local[local.len() / 2..].iter().map(|p| p.1).collect();
    upper.sort_by(f64::total_cmp);
    let alpha_hat = upper[upper.len() / 2];
    let band = (upper[0], upper[upper.len() - 1]);
    let l_samples = samples
        .iter()
        .map(|&(x, y)| {
            let l = match source {
                AlphaSource::MMinus => x.powf(2.0 - alpha_hat) / y,
                AlphaSource::FR => y * gamma(3.0 - alpha_hat) * gamma(alpha_hat) / (ez * x.powf(alpha_hat - 1.0)),
            };
            (x, l)
        })
        .collect();
    Ok(AlphaEstimate {
        source,
        alpha_hat,
        band,
        local,
        l_samples,
    })
}

/// Tail index from `m_-` on `x = 2^j <= xmax` or from the `f_r` table.
pub fn estimate_alpha(law: &IncrementLaw, tables: &LadderTables, source: AlphaSource, xmax: usize) -> Result<AlphaEstimate> {
    if law.moments().finite_variance() {
        return Err(WalkError::NotInRegime("finite variance: alpha = 2".into()));
    }
    let ez = match tables.ez {
        crate::ladder::Expectation::Finite { value, .. } => value,
        crate::ladder::Expectation::Infinite => {
            return Err(WalkError::NotInRegime("E Z is infinite".into()));
        }
    };
    let samples: Vec<(f64, f64)> = match source {
        AlphaSource::MMinus => {
            let m = law.m_minus_table(xmax);
            dyadic(xmax).map(|x| (x as f64, m[x])).collect()
        }
        AlphaSource::FR => {
            let fr = tables.f_r_table();
            dyadic(xmax.min(tables.window)).map(|x| (x as f64, fr[x])).collect()
        }
    };
    estimate_alpha_from(&samples, source, ez)
}

fn dyadic(xmax: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS).map(|j| 1usize << j).take_while(move |&x| x <= xmax)
}

// ---------------------------------------------------------------------------
// Convergence verdicts from tail exponents

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Infinite,
    Indeterminate,
}

/// Terms behave like `z^exponent (log z)^log_exponent`; `None` when they vanish
/// beyond a finite point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub exponent: Option<f64>,
    pub log_exponent: f64,
}

impl Rate {
    pub fn verdict(&self) -> Verdict {
        match self.exponent {
            None => Verdict::Finite,
            Some(e) if e < -1.0 - 1e-12 => Verdict::Finite,
            Some(e) if e > -1.0 + 1e-12 => Verdict::Infinite,
            Some(_) if self.log_exponent < -1.0 => Verdict::Finite,
            Some(_) => Verdict::Infinite,
        }
    }
}

/// `z / m_-(z) ~ z^e (log z)^l`.
pub fn fr_growth(law: &IncrementLaw) -> (f64, f64) {
    match law.left_tail() {
        TailModel::Power { alpha, .. } if alpha < 2.0 => (alpha - 1.0, 0.0),
        TailModel::Power { alpha, .. } if alpha == 2.0 => (1.0, -1.0),
        _ => (1.0, 0.0),
    }
}

/// `P[X > t] ~ t^-alpha_r`, `None` for bounded support above.
fn right_decay(law: &IncrementLaw) -> Option<f64> {
    law.right_tail().alpha()
}

/// Rate of `P[X > z] (z / m_-(z))^2`, shared by the integral criterion and all
/// three boundedness series.
pub fn boundedness_rate(law: &IncrementLaw) -> Rate {
    let (e, l) = fr_growth(law);
    Rate {
        exponent: right_decay(law).map(|ar| 2.0 * e - ar),
        log_exponent: 2.0 * l,
    }
}

/// Rate of `a(z) P[X > z] ~ (z / m_-(z)) P[X > z]`, whose summability is
/// equivalent to `E Z < inf`.
pub fn ez_rate(law: &IncrementLaw) -> Rate {
    let (e, l) = fr_growth(law);
    Rate {
        exponent: right_decay(law).map(|ar| e - ar),
        log_exponent: l,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionValue {
    pub partial: f64,
    pub upper: f64,
    /// Analytic extrapolation of the remainder, when finite.
    pub tail: Option<f64>,
    pub rate: Rate,
    pub verdict: Verdict,
}

/// `int_1^upper t^2 / m_-(t)^2 P[X > t] dt` with the remainder extrapolated from
/// the tail exponents.
pub fn boundedness_integral(law: &IncrementLaw, upper: f64) -> CriterionValue {
    let rate = boundedness_rate(law);
    let verdict = rate.verdict();
    if upper <= 1.0 {
        return CriterionValue {
            partial: 0.0,
            upper,
            tail: None,
            rate,
            verdict,
        };
    }
    let n = upper.floor() as usize;
    let m = law.m_minus_table(n + 1);
    // P[X > t] is constant on [j, j+1); m_- is piecewise quadratic
    let f = |t: f64| {
        let j = t.floor() as usize;
        let fr = t - j as f64;
        let mm = m[j] + (m[j + 1] - m[j]) * fr + 0.5 * law.tail_prob(j as f64, Side::Left) * fr * (1.0 - fr);
        t * t / (mm * mm) * law.tail_prob(j as f64, Side::Right)
    };
    let (x, w) = crate::quadrature::gauss_legendre(8);
    let mut s = 0.0;
    let mut j = 1usize;
    while (j as f64) < upper {
        let b = ((j + 1) as f64).min(upper);
        let (a, h) = (j as f64, 0.5 * (b - j as f64));
        for i in 0..x.len() {
            s += h * w[i] * f(a + h * (1.0 + x[i]));
        }
        j += 1;
    }
    let tail = match (rate.exponent, verdict) {
        (None, _) => Some(0.0),
        (Some(e), Verdict::Finite) if e < -1.0 => {
            let t = upper.floor().max(1.0);
            Some(f(t - 0.5) * t / (-1.0 - e))
        }
        _ => None,
    };
    CriterionValue {
        partial: s,
        upper,
        tail,
        rate,
        verdict,
    }
}

// ---------------------------------------------------------------------------
// Boundedness of a(-x)

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    /// `(z, partial sum up to z)` on a dyadic grid for each of the three series.
    pub series_i: Vec<(usize, f64)>,
    pub series_ii: Vec<(usize, f64)>,
    /// `sup` over the sampled `x < 0` of the third series.
    pub series_iii: Vec<(i64, f64)>,
    pub verdict: Verdict,
    /// `a(-x)` at dyadic `x` up to the potential window.
    pub a_negative: Vec<(usize, f64)>,
    /// Ratio of successive dyadic increments of `a(-x)` at the edge.
    pub increment_ratio: f64,
    pub observed_bounded: bool,
}

/// The three series characterising boundedness of `a` on the negative axis,
/// compared with the computed `a(-x)`.
pub fn boundedness_sums(law: &IncrementLaw, tables: &LadderTables, pt: &PotentialTable) -> Result<BoundednessReport> {
    let m = law.moments();
    if m.finite_variance() || !tables.ez.is_finite() {
        return Err(WalkError::NotInRegime(
            "requires infinite variance and finite E Z".into(),
        ));
    }
    let k = tables.window;
    let fr = tables.f_r_table();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut series_i = Vec::new();
    let mut series_ii = Vec::new();
    for z in 1..=k {
        s1 += law.prob_at_least(z as i64 + 1) * fr[z] * fr[z];
        s2 += tables.z_tail[z] * fr[z];
        if z.is_power_of_two() {
            series_i.push((z, s1));
            series_ii.push((z, s2));
        }
    }
    let hl = HalfLine::new(law, tables);
    let reach = k.min(pt.window) / 2;
    let series_iii = dyadic(reach)
        .map(|x| {
            let x = -(x as i64);
            let s: f64 = (1..=reach as i64).map(|z| hl.hitting_upper(x, z) * fr[z as usize]).sum();
            (x, s)
        })
        .collect();
    let a_negative: Vec<(usize, f64)> = dyadic(pt.window).map(|x| (x, pt.a(-(x as i64)))).collect();
    let n = a_negative.len();
    let (increment_ratio, last_increment) = if n >= 3 {
        let d1 = a_negative[n - 1].1 - a_negative[n - 2].1;
        (d1 / (a_negative[n - 2].1 - a_negative[n - 3].1), d1)
    } else {
        (f64::NAN, f64::NAN)
    };
    // increments at the level of the table error count as a plateau
    let noise = 10.0 * pt.max_err() + 1e-9 * (1.0 + a_negative[n - 1].1.abs());
    Ok(BoundednessReport {
        series_i,
        series_ii,
        series_iii,
        verdict: boundedness_rate(law).verdict(),
        a_negative,
        increment_ratio,
        observed_bounded: increment_ratio.abs() < 1.0 || last_increment.abs() <= noise,
    })
}

/// `lim a(-x)`: `sum_y a(y) P[Z > y] / E Z` when bounded, `None` when infinite.
pub fn a_negative_limit(law: &IncrementLaw, tables: &LadderTables, pt: &PotentialTable) -> Option<f64> {
    let ez = match tables.ez {
        crate::ladder::Expectation::Finite { value, .. } => value,
        crate::ladder::Expectation::Infinite => return None,
    };
    if law.moments().finite_variance() || boundedness_rate(law).verdict() != Verdict::Finite {
        return None;
    }
    let k = tables.window.min(pt.window);
    Some((1..=k).map(|y| pt.a(y as i64) * tables.z_tail[y]).sum::<f64>() / ez)
}

// ---------------------------------------------------------------------------
// Checks on the potential kernel for heavy left tails

#[derive(Debug, Clone, Serialize)]
pub struct HeavyLeftReport {
    /// `a(x) m_-(x) / x` at dyadic `x` up to the window.
    pub a_m_ratio: Vec<(usize, f64)>,
    /// `(1/a(-x)) sum_z P[z < Z <= z + x] a(z)` at dyadic `x`, to compare with `E Z`.
    pub double_ratio: Vec<(usize, f64)>,
    pub ez: f64,
    /// `a(-x)` divided by the double sum in the comparability statement.
    pub comparability: Vec<(usize, f64)>,
    /// `max / min` of the comparability ratios.
    pub comparability_spread: f64,
}

pub fn heavy_left_checks(law: &IncrementLaw, tables: &LadderTables, pt: &PotentialTable) -> Result<HeavyLeftReport> {
    if law.moments().finite_variance() {
        return Err(WalkError::NotInRegime("finite variance".into()));
    }
    let ez = match tables.ez {
        crate::ladder::Expectation::Finite { value, .. } => value,
        crate::ladder::Expectation::Infinite => return Err(WalkError::NotInRegime("E Z is infinite".into())),
    };
    let w = pt.window.min(tables.window);
    let mm = law.m_minus_table(w);
    let a_m_ratio = dyadic(w).map(|x| (x, pt.a(x as i64) * mm[x] / x as f64)).collect();
    let zt = &tables.z_tail;
    // the sum over z is cut at w - x, so keep x well inside the window
    let double_ratio = dyadic(w / 8)
        .map(|x| {
            let s: f64 = (1..=w - x).map(|z| (zt[z] - zt[z + x]) * pt.a(z as i64)).sum();
            (x, s / pt.a(-(x as i64)))
        })
        .collect();

    // inner sums sum_z p(w + z) (z / m_-(z))^2 over z <= zc plus an integral tail
    let zc = 1usize << 16;
    let mz = law.m_minus_table(zc);
    let q: Vec<f64> = (0..=zc).map(|z| if z == 0 { 0.0 } else { let r = z as f64 / mz[z]; r * r }).collect();
    let (e, _) = fr_growth(law);
    let decay = right_decay(law);
    let xmax = w / 2;
    let mut comparability = Vec::new();
    let mut acc = 0.0;
    for wv in 1..=xmax {
        let reach = law.max_up().map_or(zc as i64, |m| (m - wv as i64).clamp(0, zc as i64)) as usize;
        let mut s: f64 = (1..=reach).map(|z| law.pmf((wv + z) as i64) * q[z]).sum();
        if let (Some(ar), true) = (decay, reach == zc) {
            let expo = 2.0 * e - 1.0 - ar;
            if expo < -1.0 {
                s += law.pmf((wv + zc) as i64) * q[zc] * zc as f64 / (-1.0 - expo);
            }
        }
        acc += s;
        if wv.is_power_of_two() {
            comparability.push((wv, pt.a(-(wv as i64)) / acc));
        }
    }
    let (lo, hi) = comparability
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, r)| (lo.min(r), hi.max(r)));
    Ok(HeavyLeftReport {
        a_m_ratio,
        double_ratio,
        ez,
        comparability,
        comparability_spread: hi / lo,
    })
}

/// Partial sums `sum_{x <= X} [a(x) + a(-x)] P[X > x]` at dyadic `X`, with the
/// exponent verdict for their convergence.
pub fn two_sided_potential_sums(law: &IncrementLaw, pt: &PotentialTable) -> (Vec<(usize, f64)>, Verdict) {
    let mut s = 0.0;
    let mut out = Vec::new();
    for x in 1..=pt.window {
        s += (pt.a(x as i64) + pt.a(-(x as i64))) * law.prob_at_least(x as i64 + 1);
        if x.is_power_of_two() {
            out.push((x, s));
        }
    }
    (out, ez_rate(law).verdict())
}

// ---------------------------------------------------------------------------
// Tail relations

#[derive(Debug, Clone, Serialize)]
pub struct TailRelationReport {
    pub alpha: f64,
    /// `P[X < -x] x^alpha L(x) / ((2-alpha)(alpha-1))`, or for `alpha = 2`
    /// `E[X^2; -x <= X < 0] L(x) / 2`, at dyadic `x`.
    pub law_ratio: Vec<(f64, f64)>,
    /// `P[-Zhat > x] c E Z x^(alpha-1) L(x) / (2-alpha)` at dyadic `x`; absent for `alpha = 2`.
    pub ladder_ratio: Vec<(f64, f64)>,
    /// True when the constant `(2-alpha)(alpha-1)` vanishes and the ratios above are
    /// reported unnormalised (they should tend to zero).
    pub degenerate: bool,
}

/// Compares the left tail of `X` and of `-Zhat` with the forms implied by the
/// estimated index and slowly varying part. `l_samples` are `(x, L(x))` pairs.
pub fn tail_relations(
    law: &IncrementLaw,
    tables: &LadderTables,
    alpha: f64,
    l_samples: &[(f64, f64)],
) -> Result<TailRelationReport> {
    let ez = match tables.ez {
        crate::ladder::Expectation::Finite { value, .. } => value,
        crate::ladder::Expectation::Infinite => return Err(WalkError::NotInRegime("E Z is infinite".into())),
    };
    if law.moments().finite_variance() || !(alpha > 1.0 && alpha <= 2.0) {
        return Err(WalkError::NotInRegime("requires 1 < alpha <= 2 and infinite variance".into()));
    }
    let factor = (2.0 - alpha) * (alpha - 1.0);
    let degenerate = factor.abs() < 1e-9;
    let mut law_ratio = Vec::new();
    let mut ladder_ratio = Vec::new();
    for &(x, l) in l_samples {
        if x < 1.0 {
            continue;
        }
        if (alpha - 2.0).abs() < 1e-9 {
            let n = x as i64;
            let g: f64 = (1..=n).map(|k| (k * k) as f64 * law.pmf(-k)).sum();
            law_ratio.push((x, g * l / 2.0));
        } else {
            let p = law.tail_prob(x, Side::Left) * x.powf(alpha) * l;
            law_ratio.push((x, if degenerate { p } else { p / factor }));
            let n = x as usize;
            if n <= tables.window {
                let r = tables.hat_z_tail[n] * tables.c * ez * x.powf(alpha - 1.0) * l;
                ladder_ratio.push((x, if degenerate { r } else { r / (2.0 - alpha) }));
            }
        }
    }
    Ok(TailRelationReport {
        alpha,
        law_ratio,
        ladder_ratio,
        degenerate,
    })
}

// ---------------------------------------------------------------------------
// Renewal sequences with slowly varying truncated mean

#[derive(Debug, Clone, Serialize)]
pub struct RenewalCheck {
    /// `(x, u_x, G(x), u_x G(x))` at dyadic `x` and at `xmax`.
    pub samples: Vec<(usize, f64, f64, f64)>,
}

impl RenewalCheck {
    pub fn last_product(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.3)
    }
}

/// `u_x = sum_n P[T_n = x]` by the renewal recursion and
/// `G(x) = int_0^x P[T_1 > s] ds` for a lattice `T_1` with pmf `f` on `0..`.
pub fn renewal_product_check(f: &[f64], xmax: usize) -> Result<RenewalCheck> {
    if f.len() <= xmax {
        return Err(WalkError::OutOfRange(format!("pmf must cover 0..={xmax}")));
    }
    let f0 = f[0];
    if !(f0 < 1.0) {
        return Err(WalkError::PreconditionUnmet("T_1 is identically zero".into()));
    }
    let mut u = vec![0.0; xmax + 1];
    u[0] = 1.0 / (1.0 - f0);
    for x in 1..=xmax {
        // sum_{k=1}^x f_k u_{x-k}
        let s: f64 = f[1..=x].iter().zip(u[..x].iter().rev()).map(|(a, b)| a * b).sum();
        u[x] = s / (1.0 - f0);
    }
    // P[T_1 > s] is constant on [j, j+1)
    let mut g = vec![0.0; xmax + 1];
    let mut cdf = 0.0;
    for j in 0..xmax {
        cdf += f[j];
        g[j + 1] = g[j] + (1.0 - cdf).max(0.0);
    }
    let mut samples: Vec<(usize, f64, f64, f64)> = dyadic(xmax).map(|x| (x, u[x], g[x], u[x] * g[x])).collect();
    if !xmax.is_power_of_two() {
        samples.push((xmax, u[xmax], g[xmax], u[xmax] * g[xmax]));
    }
    Ok(RenewalCheck { samples })
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub finite_variance: bool,
    pub ez_finite: bool,
    pub alpha_hat: f64,
    pub alpha_band: (f64, f64),
    pub alpha_from_fr: Option<f64>,
    pub l_samples: Vec<(f64, f64)>,
    /// `(n, [lo, hi])` of the Spitzer average at dyadic `n`.
    pub spitzer: Vec<(usize, (f64, f64))>,
    pub boundedness_integral: Option<CriterionValue>,
    pub boundedness_verdict: Option<Verdict>,
    /// `lim a(-x)`; `None` stands for an infinite limit.
    pub a_neg_limit: Option<f64>,
    pub regular_variation_fr: Option<bool>,
    pub regular_variation_m: Option<bool>,
    pub spitzer_converging: bool,
}

/// Tail index, Spitzer trajectory and boundedness criteria for a law.
pub fn classify(law: &IncrementLaw, tables: &LadderTables, pt: &PotentialTable, n_spitzer: usize) -> Result<ClassificationReport> {
    let fv = law.moments().finite_variance();
    let ez_finite = tables.ez.is_finite();
    let traj = spitzer_sum(law, n_spitzer)?;
    let spitzer: Vec<(usize, (f64, f64))> = dyadic(n_spitzer).map(|n| (n, traj.at(n))).collect();
    let mid = |p: (f64, f64)| 0.5 * (p.0 + p.1);
    let spitzer_converging = spitzer.len() >= 3 && {
        let k = spitzer.len();
        let d1 = (mid(spitzer[k - 1].1) - mid(spitzer[k - 2].1)).abs();
        let d0 = (mid(spitzer[k - 2].1) - mid(spitzer[k - 3].1)).abs();
        d1 <= d0 + 1e-9 && d1 < 0.02
    };
    let band_ok = |e: &AlphaEstimate| e.band.1 - e.band.0 < 0.1;
    if fv || !ez_finite {
        return Ok(ClassificationReport {
            finite_variance: fv,
            ez_finite,
            alpha_hat: if fv { 2.0 } else { law.tail_index() },
            alpha_band: if fv { (2.0, 2.0) } else { (1.0, 2.0) },
            alpha_from_fr: None,
            l_samples: Vec::new(),
            spitzer,
            boundedness_integral: None,
            boundedness_verdict: None,
            a_neg_limit: None,
            regular_variation_fr: None,
            regular_variation_m: None,
            spitzer_converging,
        });
    }
    let em = estimate_alpha(law, tables, AlphaSource::MMinus, 1 << 16)?;
    let ef = estimate_alpha(law, tables, AlphaSource::FR, tables.window)?;
    let boundedness_integral = boundedness_integral(law, 1e4);
    let c2 = boundedness_sums(law, tables, pt)?;
    Ok(ClassificationReport {
        finite_variance: fv,
        ez_finite,
        alpha_hat: em.alpha_hat,
        alpha_band: em.band,
        alpha_from_fr: Some(ef.alpha_hat),
        regular_variation_fr: Some(band_ok(&ef)),
        regular_variation_m: Some(band_ok(&em)),
        l_samples: em.l_samples,
        spitzer,
        boundedness_integral: Some(boundedness_integral),
        boundedness_verdict: Some(c2.verdict),
        a_neg_limit: a_negative_limit(law, tables, pt),
        spitzer_converging,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn srw() -> IncrementLaw {
        let core: BTreeMap<i64, f64> = [(-1, 0.5), (1, 0.5)].into_iter().collect();
        IncrementLaw::build(&core, TailModel::None, TailModel::None).unwrap()
    }

    #[test]
    fn srw_spitzer_matches_symmetry() {
        let t = spitzer_sum(&srw(), 64).unwrap();
        // P[S_k > 0] = (1 - p^k(0)) / 2 with p^k(0) = C(k, k/2) 2^-k for even k
        let mut pk0 = 1.0;
        for k in 1..=64usize {
            let exact = if k % 2 == 1 {
                0.5
            } else {
                pk0 *= (k - 1) as f64 / k as f64;
                0.5 * (1.0 - pk0)
            };
            let (lo, hi) = t.p_pos[k - 1];
            assert!(lo - 1e-12 <= exact && exact <= hi + 1e-12, "k={k} {lo} {hi} {exact}");
            assert!(hi - lo < 1e-10);
        }
    }

    #[test]
    fn first_step_is_exact() {
        let core: BTreeMap<i64, f64> = [(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)].into_iter().collect();
        let l = IncrementLaw::build(&core, TailModel::None, TailModel::None).unwrap();
        let t = spitzer_sum(&l, 4).unwrap();
        let (lo, hi) = t.p_pos[0];
        assert!(lo - 1e-13 <= 0.5 && 0.5 <= hi + 1e-13);
    }

    #[test]
    fn renewal_geometric_and_degenerate() {
        let xmax = 2000;
        let one: Vec<f64> = (0..=xmax).map(|k| if k == 1 { 1.0 } else { 0.0 }).collect();
        let r = renewal_product_check(&one, xmax).unwrap();
        assert!(r.samples.iter().all(|s| (s.3 - 1.0).abs() < 1e-14));
        let q: f64 = 0.3;
        let geo: Vec<f64> = (0..=xmax).map(|k| if k == 0 { 0.0 } else { (1.0 - q) * q.powi(k as i32 - 1) }).collect();
        let r = renewal_product_check(&geo, xmax).unwrap();
        assert!((r.last_product() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn boundedness_integral_verdicts() {
        let light = IncrementLaw::balanced_tail(&[(1, 0.9), (2, 0.1)].into_iter().collect(), Side::Left, 1.5, 1).unwrap();
        let c = boundedness_integral(&light, 1e3);
        assert_eq!(c.verdict, Verdict::Finite);
        assert_eq!(c.tail, Some(0.0));
        assert_eq!(boundedness_integral(&light, 1.0).partial, 0.0);
        let diverging = Rate {
            exponent: Some(2.0 * 0.5 - 1.8),
            log_exponent: 0.0,
        };
        assert_eq!(diverging.verdict(), Verdict::Infinite);
        let boundary = Rate {
            exponent: Some(-1.0),
            log_exponent: -2.0,
        };
        assert_eq!(boundary.verdict(), Verdict::Finite);
    }

    #[test]
    fn alpha_from_constructed_tail() {
        let l = IncrementLaw::balanced_tail(&[(1, 0.9), (2, 0.1)].into_iter().collect(), Side::Left, 1.5, 1).unwrap();
        let m = l.m_minus_table(1 << 16);
        let samples: Vec<(f64, f64)> = dyadic(1 << 16).map(|x| (x as f64, m[x])).collect();
        let e = estimate_alpha_from(&samples, AlphaSource::MMinus, 1.0).unwrap();
        assert!((e.alpha_hat - 1.5).abs() < 0.05, "{e:?}");
    }
}
