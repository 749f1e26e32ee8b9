//! Increment laws: a finite core pmf plus optional exact power-law tails.

use crate::error::{Result, WalkError};
use crate::special::{hurwitz_zeta, one_minus_cos, sin_minus_id, PowerTrigSums};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// `P[±X = x] = amplitude * x^(-1-alpha)` for `x >= start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TailModel {
    None,
    Power { alpha: f64, amplitude: f64, start: u64 },
}

impl TailModel {
    pub fn power(alpha: f64, amplitude: f64, start: u64) -> Self {
        TailModel::Power {
            alpha,
            amplitude,
            start,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            TailModel::None => None,
            TailModel::Power { alpha, .. } => Some(alpha),
        }
    }

    fn validate(&self, side: &'static str) -> Result<()> {
        if let TailModel::Power {
            alpha,
            amplitude,
            start,
        } = *self
        {
            if !(alpha > 1.0) || !alpha.is_finite() {
                return Err(WalkError::InvalidTail(format!(
                    "{side} alpha = {alpha} must exceed 1"
                )));
            }
            if !(amplitude > 0.0) || !amplitude.is_finite() {
                return Err(WalkError::InvalidTail(format!(
                    "{side} amplitude = {amplitude} must be positive"
                )));
            }
            if start == 0 {
                return Err(WalkError::InvalidTail(format!("{side} start must be >= 1")));
            }
        }
        Ok(())
    }

    /// `sum_{x >= max(k, start)} amplitude x^{-1-alpha}`.
    pub fn mass_from(&self, k: i64) -> f64 {
        match *self {
            TailModel::None => 0.0,
            TailModel::Power {
                alpha,
                amplitude,
                start,
            } => {
                let from = (k.max(start as i64)) as f64;
                amplitude * hurwitz_zeta(1.0 + alpha, from)
            }
        }
    }

    /// `sum_{x >= max(k, start)} x * amplitude x^{-1-alpha}`.
    pub fn first_moment_from(&self, k: i64) -> f64 {
        match *self {
            TailModel::None => 0.0,
            TailModel::Power {
                alpha,
                amplitude,
                start,
            } => {
                let from = (k.max(start as i64)) as f64;
                amplitude * hurwitz_zeta(alpha, from)
            }
        }
    }

    /// Second moment of the tail; infinite when alpha <= 2.
    pub fn second_moment(&self) -> f64 {
        match *self {
            TailModel::None => 0.0,
            TailModel::Power {
                alpha,
                amplitude,
                start,
            } => {
                if alpha <= 2.0 {
                    f64::INFINITY
                } else {
                    amplitude * hurwitz_zeta(alpha - 1.0, start as f64)
                }
            }
        }
    }

    fn value(&self, x: u64) -> f64 {
        match *self {
            TailModel::Power {
                alpha,
                amplitude,
                start,
            } if x >= start => amplitude * (x as f64).powf(-1.0 - alpha),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    /// `f64::INFINITY` when a power tail has alpha <= 2.
    pub sigma2: f64,
    pub ex_plus: f64,
    pub ex_minus: f64,
}

impl MomentSummary {
    pub fn finite_variance(&self) -> bool {
        self.sigma2.is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LawTolerances {
    pub mass: f64,
    pub mean: f64,
}

impl Default for LawTolerances {
    fn default() -> Self {
        LawTolerances {
            mass: 1e-12,
            mean: 1e-10,
        }
    }
}

/// Law of the step `X`. Immutable once built.
#[derive(Debug, Clone)]
pub struct IncrementLaw {
    core_lo: i64,
    core: Vec<f64>,
    left: TailModel,
    right: TailModel,
    left_trig: Option<PowerTrigSums>,
    right_trig: Option<PowerTrigSums>,
    moments: MomentSummary,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl IncrementLaw {
    pub fn build(core: &BTreeMap<i64, f64>, left: TailModel, right: TailModel) -> Result<Self> {
        Self::build_with(core, left, right, LawTolerances::default())
    }

    pub fn build_with(
        core: &BTreeMap<i64, f64>,
        left: TailModel,
        right: TailModel,
        tol: LawTolerances,
    ) -> Result<Self> {
        for (&site, &value) in core {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(WalkError::NegativeMass { site, value });
            }
        }
        left.validate("left")?;
        right.validate("right")?;
        let lo = core.keys().next().copied().unwrap_or(0).min(0);
        let hi = core.keys().next_back().copied().unwrap_or(0).max(0);
        if let TailModel::Power { start, .. } = right {
            if (start as i64) <= hi {
                return Err(WalkError::TailOverlap {
                    side: "right",
                    start,
                });
            }
        }
        if let TailModel::Power { start, .. } = left {
            if -(start as i64) >= lo {
                return Err(WalkError::TailOverlap {
                    side: "left",
                    start,
                });
            }
        }
        let mut dense = vec![0.0; (hi - lo + 1) as usize];
        for (&site, &value) in core {
            dense[(site - lo) as usize] = value;
        }

        // the walk lives on the subgroup generated by the support
        let mut support: Vec<i64> = core
            .iter()
            .filter(|(_, &v)| v > 0.0)
            .map(|(&k, _)| k)
            .collect();
        if let TailModel::Power { start, .. } = right {
            support.push(start as i64);
            support.push(start as i64 + 1);
        }
        if let TailModel::Power { start, .. } = left {
            support.push(-(start as i64));
            support.push(-(start as i64) - 1);
        }
        let g = support
            .iter()
            .fold(0u64, |g, &x| gcd(g, x.unsigned_abs()));
        if g != 1 {
            return Err(WalkError::Reducible { gcd: g });
        }

        let mut mass = 0.0;
        let mut ex_plus = 0.0;
        let mut ex_minus = 0.0;
        let mut second = 0.0;
        for (i, &p) in dense.iter().enumerate() {
            let k = lo + i as i64;
            mass += p;
            if k > 0 {
                ex_plus += k as f64 * p;
            } else {
                ex_minus -= k as f64 * p;
            }
            second += (k * k) as f64 * p;
        }
        mass += left.mass_from(1) + right.mass_from(1);
        ex_plus += right.first_moment_from(1);
        ex_minus += left.first_moment_from(1);
        second += left.second_moment() + right.second_moment();
        if (mass - 1.0).abs() > tol.mass {
            return Err(WalkError::MassNotOne {
                mass,
                tol: tol.mass,
            });
        }
        let mean = ex_plus - ex_minus;
        if mean.abs() > tol.mean {
            return Err(WalkError::MeanNotZero {
                mean,
                tol: tol.mean,
            });
        }
        let trig = |t: &TailModel| t.alpha().map(|a| PowerTrigSums::new(1.0 + a));
        Ok(IncrementLaw {
            core_lo: lo,
            core: dense,
            left,
            right,
            left_trig: trig(&left),
            right_trig: trig(&right),
            moments: MomentSummary {
                mean,
                sigma2: second,
                ex_plus,
                ex_minus,
            },
        })
    }

    /// Builds a law whose core has the given relative weights and whose `side`
    /// tail is a power law with exponent `alpha` from `start`; the core scale and the
    /// tail amplitude are the unique pair giving unit mass and zero mean.
    pub fn balanced_tail(
        core_shape: &BTreeMap<i64, f64>,
        side: Side,
        alpha: f64,
        start: u64,
    ) -> Result<Self> {
        let w0: f64 = core_shape.values().sum();
        let w1: f64 = core_shape.iter().map(|(&k, &w)| k as f64 * w).sum();
        let z_mass = hurwitz_zeta(1.0 + alpha, start as f64);
        let z_mean = hurwitz_zeta(alpha, start as f64);
        // s*w0 + A*z_mass = 1 ; s*w1 -/+ A*z_mean = 0
        let sign = match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
        };
        let det = w0 * sign * z_mean - z_mass * w1;
        let s = sign * z_mean / det;
        let amplitude = -w1 / det;
        if !(s > 0.0 && amplitude > 0.0) {
            return Err(WalkError::InvalidTail(
                "core shape cannot balance a tail on that side".into(),
            ));
        }
        let core: BTreeMap<i64, f64> = core_shape.iter().map(|(&k, &w)| (k, s * w)).collect();
        let tail = TailModel::power(alpha, amplitude, start);
        match side {
            Side::Left => Self::build(&core, tail, TailModel::None),
            Side::Right => Self::build(&core, TailModel::None, tail),
        }
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> Self {
        let core: BTreeMap<i64, f64> = self.core_entries().map(|(k, p)| (-k, p)).collect();
        let tol = LawTolerances {
            mass: 1e-9,
            mean: 1e-9,
        };
        Self::build_with(&core, self.right, self.left, tol).expect("reflection of a valid law")
    }

    pub fn core_entries(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.core
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (self.core_lo + i as i64, p))
    }

    pub fn core_range(&self) -> (i64, i64) {
        (self.core_lo, self.core_lo + self.core.len() as i64 - 1)
    }

    pub fn left_tail(&self) -> TailModel {
        self.left
    }

    pub fn right_tail(&self) -> TailModel {
        self.right
    }

    pub fn moments(&self) -> MomentSummary {
        self.moments
    }

    /// Largest upward jump, `None` if unbounded.
    pub fn max_up(&self) -> Option<i64> {
        match self.right {
            TailModel::None => self.core_entries().map(|(k, _)| k).max(),
            _ => None,
        }
    }

    /// Largest downward jump magnitude, `None` if unbounded.
    pub fn max_down(&self) -> Option<i64> {
        match self.left {
            TailModel::None => self.core_entries().map(|(k, _)| -k).max(),
            _ => None,
        }
    }

    pub fn is_left_continuous(&self) -> bool {
        self.max_down().is_some_and(|m| m <= 1)
    }

    pub fn is_right_continuous(&self) -> bool {
        self.max_up().is_some_and(|m| m <= 1)
    }

    pub fn pmf(&self, x: i64) -> f64 {
        let i = x - self.core_lo;
        if i >= 0 && (i as usize) < self.core.len() {
            return self.core[i as usize];
        }
        if x > 0 {
            self.right.value(x as u64)
        } else {
            self.left.value(x.unsigned_abs())
        }
    }

    /// `P[X >= k]` for any integer `k`.
    pub fn prob_at_least(&self, k: i64) -> f64 {
        if k <= self.core_lo {
            // complement keeps accuracy when the answer is near one
            return 1.0 - self.prob_at_most(k - 1);
        }
        let mut s = 0.0;
        let (_, hi) = self.core_range();
        for x in k..=hi {
            s += self.pmf(x);
        }
        s + self.right.mass_from(k.max(1))
    }

    /// `P[X <= k]` for any integer `k`.
    pub fn prob_at_most(&self, k: i64) -> f64 {
        let (lo, hi) = self.core_range();
        if k >= hi {
            return 1.0 - self.prob_at_least(k + 1);
        }
        let mut s = 0.0;
        for x in lo..=k {
            s += self.pmf(x);
        }
        s + self.left.mass_from((-k).max(1))
    }

    /// `P[X > t]` (right) or `P[X < -t]` (left) for real `t >= 0`.
    pub fn tail_prob(&self, t: f64, side: Side) -> f64 {
        let k = t.floor() as i64 + 1;
        match side {
            Side::Right => self.prob_at_least(k),
            Side::Left => self.prob_at_most(-k),
        }
    }

    /// `E[(X_- - j)_+]` (left) or `E[(X_+ - j)_+]` (right) for integer `j >= 0`.
    pub fn excess(&self, j: u64, side: Side) -> f64 {
        let (lo, hi) = self.core_range();
        let (tail, reach) = match side {
            Side::Left => (&self.left, (-lo).max(0) as u64),
            Side::Right => (&self.right, hi.max(0) as u64),
        };
        let mut s = 0.0;
        for k in (j + 1)..=reach {
            let x = match side {
                Side::Left => -(k as i64),
                Side::Right => k as i64,
            };
            s += (k - j) as f64 * self.pmf(x);
        }
        let from = (j + 1) as i64;
        s + tail.first_moment_from(from) - j as f64 * tail.mass_from(from)
    }

    fn m_side(&self, x: f64, side: Side) -> f64 {
        assert!(x >= 0.0);
        let n = x.floor() as u64;
        let f = x - n as f64;
        let mut sum = 0.0;
        for j in 0..n {
            sum += self.excess(j, side) - 0.5 * self.tail_prob(j as f64, side);
        }
        sum + self.excess(n, side) * f - 0.5 * self.tail_prob(n as f64, side) * f * f
    }

    /// `m_-(x) = int_0^x dy int_y^inf P[X < -u] du`.
    pub fn m_minus(&self, x: f64) -> f64 {
        self.m_side(x, Side::Left)
    }

    pub fn m_plus(&self, x: f64) -> f64 {
        self.m_side(x, Side::Right)
    }

    pub fn m(&self, x: f64) -> f64 {
        self.m_minus(x) + self.m_plus(x)
    }

    /// `m_-(0), m_-(1), ..., m_-(n)`.
    pub fn m_minus_table(&self, n: usize) -> Vec<f64> {
        self.m_table(n, Side::Left)
    }

    pub fn m_plus_table(&self, n: usize) -> Vec<f64> {
        self.m_table(n, Side::Right)
    }

    fn m_table(&self, n: usize, side: Side) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for j in 0..n as u64 {
            acc += self.excess(j, side) - 0.5 * self.tail_prob(j as f64, side);
            out.push(acc);
        }
        out
    }

    /// `(1 - Re phi(theta), sum_x p(x) (sin(x theta) - x theta))` for `theta` in
    /// `[0, pi]`; the second entry equals `Im phi(theta)` for a centred law.
    pub fn deficit(&self, theta: f64) -> (f64, f64) {
        let mut u = 0.0;
        let mut w = 0.0;
        for (k, p) in self.core_entries() {
            let x = k as f64 * theta;
            u += p * one_minus_cos(x);
            w += p * sin_minus_id(x);
        }
        if let (TailModel::Power { amplitude, start, .. }, Some(t)) = (self.right, &self.right_trig) {
            let (c, s) = t.from_start(start, theta);
            u += amplitude * c;
            w += amplitude * s;
        }
        if let (TailModel::Power { amplitude, start, .. }, Some(t)) = (self.left, &self.left_trig) {
            let (c, s) = t.from_start(start, theta);
            u += amplitude * c;
            w -= amplitude * s;
        }
        (u, w)
    }

    /// Characteristic function `E[e^{i theta X}]`.
    pub fn char_fn(&self, theta: f64) -> Complex64 {
        let mut t = theta.rem_euclid(2.0 * PI);
        if t > PI {
            t -= 2.0 * PI;
        }
        let (u, w) = self.deficit(t.abs());
        let im = w + t.abs() * self.moments.mean;
        Complex64::new(1.0 - u, if t < 0.0 { -im } else { im })
    }

    /// Smallest tail index present (2 stands for "finite variance").
    pub fn tail_index(&self) -> f64 {
        let a = [self.left.alpha(), self.right.alpha()]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min);
        a.min(2.0)
    }
}

// ---------------------------------------------------------------------------
// JSON law files

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawSpec {
    pub core: BTreeMap<String, serde_json::Value>,
    #[serde(default = "none_tail")]
    pub left_tail: TailModel,
    #[serde(default = "none_tail")]
    pub right_tail: TailModel,
}

fn none_tail() -> TailModel {
    TailModel::None
}

impl LawSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        // serde's message already carries the line and column
        serde_json::from_str(text).map_err(|e| WalkError::Parse(e.to_string()))
    }

    pub fn to_law(&self) -> Result<IncrementLaw> {
        let mut core = BTreeMap::new();
        for (key, value) in &self.core {
            let site: i64 = key
                .trim()
                .parse()
                .map_err(|_| WalkError::Parse(format!("core key {key:?} is not an integer")))?;
            let p = match value {
                serde_json::Value::String(s) => s.trim().parse::<f64>().ok(),
                serde_json::Value::Number(n) => n.as_f64(),
                _ => None,
            }
            .ok_or_else(|| WalkError::Parse(format!("core value at {key} is not a decimal")))?;
            core.insert(site, p);
        }
        IncrementLaw::build(&core, self.left_tail, self.right_tail)
    }

    pub fn from_law(law: &IncrementLaw) -> Self {
        LawSpec {
            core: law
                .core_entries()
                .map(|(k, p)| (k.to_string(), serde_json::Value::String(format!("{p:.17}"))))
                .collect(),
            left_tail: law.left,
            right_tail: law.right,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw() -> IncrementLaw {
        IncrementLaw::build(&BTreeMap::from([(-1, 0.5), (1, 0.5)]), TailModel::None, TailModel::None)
            .unwrap()
    }

    fn heavy() -> IncrementLaw {
        IncrementLaw::balanced_tail(&BTreeMap::from([(1, 1.0)]), Side::Left, 1.5, 1).unwrap()
    }

    #[test]
    fn srw_basics() {
        let law = srw();
        assert_eq!(law.pmf(1), 0.5);
        assert_eq!(law.pmf(0), 0.0);
        assert_eq!(law.tail_prob(0.5, Side::Left), 0.5);
        assert_eq!(law.tail_prob(1.0, Side::Left), 0.0);
        assert!((law.m_minus(1.0) - 0.25).abs() < 1e-15);
        assert!((law.m(50.0) - 0.5).abs() < 1e-15);
        assert_eq!(law.m_minus(0.0), 0.0);
        assert!((law.moments().sigma2 - 1.0).abs() < 1e-15);
        let t = 0.7;
        assert!((law.char_fn(t) - Complex64::new(t.cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn build_errors() {
        let e = IncrementLaw::build(
            &BTreeMap::from([(-1, 0.7), (1, 0.3)]),
            TailModel::None,
            TailModel::None,
        );
        assert!(matches!(e, Err(WalkError::MeanNotZero { .. })));
        let e = IncrementLaw::build(
            &BTreeMap::from([(-2, 0.5), (2, 0.5)]),
            TailModel::None,
            TailModel::None,
        );
        assert!(matches!(e, Err(WalkError::Reducible { gcd: 2 })));
        let e = IncrementLaw::build(
            &BTreeMap::from([(-1, 0.5), (1, 0.4)]),
            TailModel::None,
            TailModel::None,
        );
        assert!(matches!(e, Err(WalkError::MassNotOne { .. })));
        let e = IncrementLaw::build(
            &BTreeMap::from([(-2, 0.2), (1, 0.4)]),
            TailModel::power(1.5, 0.1, 2),
            TailModel::None,
        );
        assert!(matches!(e, Err(WalkError::TailOverlap { side: "left", .. })));
        let e = IncrementLaw::build(
            &BTreeMap::from([(1, 0.4)]),
            TailModel::power(0.9, 0.1, 1),
            TailModel::None,
        );
        assert!(matches!(e, Err(WalkError::InvalidTail(_))));
    }

    #[test]
    fn balanced_heavy_law_by_direct_summation() {
        let law = heavy();
        assert!(!law.moments().finite_variance());
        let TailModel::Power { amplitude, start, .. } = law.left_tail() else {
            panic!()
        };
        assert_eq!(law.pmf(-(start as i64)), amplitude * (start as f64).powf(-2.5));
        // direct partial sums with integral remainder bounds
        let n = 200_000i64;
        let mut mass = law.pmf(1);
        let mut mean = law.pmf(1);
        for k in 1..=n {
            mass += law.pmf(-k);
            mean -= k as f64 * law.pmf(-k);
        }
        let nf = n as f64;
        // int_{n+1/2}^inf x^{-2.5} and x^{-1.5}
        mass += amplitude * (nf + 0.5).powf(-1.5) / 1.5;
        mean -= amplitude * (nf + 0.5).powf(-0.5) / 0.5;
        assert!((mass - 1.0).abs() < 1e-12, "{mass}");
        assert!(mean.abs() < 1e-9, "{mean}");
    }

    #[test]
    fn heavy_tail_prob_matches_partial_sum() {
        let law = heavy();
        let t = 1000.0;
        let TailModel::Power { amplitude, .. } = law.left_tail() else {
            panic!()
        };
        let n = 5_000_000u64;
        let mut s: f64 = (1001..n).map(|k| (k as f64).powf(-2.5)).sum();
        s += (n as f64 - 0.5).powf(-1.5) / 1.5;
        assert!((law.tail_prob(t, Side::Left) - amplitude * s).abs() < 1e-10);
    }

    #[test]
    fn char_fn_at_pi_matches_direct_sum() {
        let law = heavy();
        let phi = law.char_fn(PI);
        // alternating series: average two consecutive partial sums
        let n = 1_000_000i64;
        let mut s = -law.pmf(1);
        let mut prev = 0.0;
        for k in 1..=n {
            prev = s;
            s += law.pmf(-k) * if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        let est = 0.5 * (s + prev);
        assert!((phi.re - est).abs() < 1e-10, "{} vs {}", phi.re, est);
        assert!(phi.im.abs() < 1e-12);
        assert!((law.char_fn(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let spec = LawSpec::from_json_str(
            r#"{"core": {"-1": "0.5", "1": "0.5"}, "left_tail": {"kind":"none"}, "right_tail": {"kind":"none"}}"#,
        )
        .unwrap();
        let law = spec.to_law().unwrap();
        assert_eq!(law.pmf(-1), 0.5);
        let err = LawSpec::from_json_str("{\"core\": {\"-1\": }").unwrap_err();
        assert!(matches!(err, WalkError::Parse(ref m) if m.contains("line 1")));
        let h = heavy();
        let again = LawSpec::from_law(&h).to_law().unwrap();
        assert!((again.pmf(-7) - h.pmf(-7)).abs() < 1e-16);
    }
}
