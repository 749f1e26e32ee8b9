//! Seeded path simulation and the walk conditioned to avoid the origin.
//!
//! Every path `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so any
//! split of the index range reproduces the same per-path outcomes.

use crate::error::{Result, WalkError};
use crate::increment::{IncrementLaw, TailModel};
use crate::green::{hitting_of_a_many, HalfLine};
use crate::kernel::PotentialTable;
use crate::ladder::LadderTables;
use crate::Estimate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::ops::Range;
use std::str::FromStr;

pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

const TAIL_TABLE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub censored: u64,
    /// Range of the statistic when censored paths take their worst values.
    pub lower: f64,
    pub upper: f64,
}

impl MCEstimate {
    /// True when `target` lies within `k` standard errors of the censoring band.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        let slack = k * self.stderr + 1e-15;
        target >= self.lower - slack && target <= self.upper + slack
    }

    /// Two-sample z-score against an exact value with its own error bar.
    pub fn z_score(&self, exact: Estimate) -> f64 {
        let gap = (self.mean - exact.value).abs() - exact.err;
        if gap <= 0.0 {
            0.0
        } else {
            gap / self.stderr.max(1e-300)
        }
    }
}

fn rng_for(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Uniform on `(0, 1]`.
fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Exact inverse-CDF sampler for one power tail restricted to `k >= k0`.
#[derive(Debug, Clone)]
struct TailSampler {
    alpha: f64,
    amplitude: f64,
    k0: u64,
    /// `G(k) = P[tail >= k]` (unnormalised) for `k = k0..=TAIL_TABLE`.
    g: Vec<f64>,
    model: TailModel,
}

impl TailSampler {
    fn new(model: TailModel, k0: u64) -> Option<Self> {
        let TailModel::Power {
            alpha, amplitude, ..
        } = model
        else {
            return None;
        };
        let mass = model.mass_from(k0 as i64);
        if mass <= 0.0 {
            return None;
        }
        let top = TAIL_TABLE.max(k0);
        let mut g = vec![0.0; (top - k0 + 1) as usize];
        let mut acc = model.mass_from(top as i64);
        for k in (k0..=top).rev() {
            if k < top {
                acc += amplitude * (k as f64).powf(-1.0 - alpha);
            }
            g[(k - k0) as usize] = acc;
        }
        Some(TailSampler {
            alpha,
            amplitude,
            k0,
            g,
            model,
        })
    }

    fn mass(&self) -> f64 {
        self.g[0]
    }

    fn big_g(&self, k: u64) -> f64 {
        if k < self.k0 + self.g.len() as u64 {
            self.g[(k - self.k0) as usize]
        } else {
            self.model.mass_from(k as i64)
        }
    }

    /// Largest `k` with `G(k) >= v`, for `0 < v <= G(k0)`.
    fn invert(&self, v: f64) -> u64 {
        let top = self.k0 + self.g.len() as u64 - 1;
        if v > self.g[self.g.len() - 1] {
            // g is decreasing; count entries >= v
            let n = self.g.partition_point(|&x| x >= v);
            return self.k0 + n as u64 - 1;
        }
        // G(k) ~ amp (k - 1/2)^-alpha / alpha far out
        let guess = 0.5 + (self.alpha * v / self.amplitude).powf(-1.0 / self.alpha);
        let mut k = (guess.floor() as u64).clamp(top, u64::MAX / 4);
        let mut step = 1u64;
        let (mut lo, mut hi);
        if self.big_g(k) >= v {
            lo = k;
            loop {
                let next = k.saturating_add(step);
                if self.big_g(next) < v {
                    hi = next;
                    break;
                }
                k = next;
                lo = k;
                step *= 2;
            }
        } else {
            hi = k;
            loop {
                let next = k.saturating_sub(step).max(top);
                if self.big_g(next) >= v {
                    lo = next;
                    break;
                }
                k = next;
                hi = k;
                step *= 2;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.big_g(mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        self.invert(open_uniform(rng) * self.mass())
    }
}

/// Exact sampler for the step law.
#[derive(Debug, Clone)]
pub struct StepSampler {
    core_lo: i64,
    /// Cumulative core weights, normalised to the total mass.
    core_cdf: Vec<f64>,
    core_mass: f64,
    right: Option<TailSampler>,
    right_mass: f64,
    left: Option<TailSampler>,
}

impl StepSampler {
    pub fn new(law: &IncrementLaw) -> Self {
        let (lo, hi) = law.core_range();
        let mut cdf = Vec::with_capacity((hi - lo + 1) as usize);
        let mut s = 0.0;
        for x in lo..=hi {
            s += law.pmf(x);
            cdf.push(s);
        }
        let right = TailSampler::new(law.right_tail(), (hi + 1).max(1) as u64);
        let left = TailSampler::new(law.left_tail(), (-lo + 1).max(1) as u64);
        let right_mass = right.as_ref().map_or(0.0, |t| t.mass());
        let left_mass = left.as_ref().map_or(0.0, |t| t.mass());
        let total = s + right_mass + left_mass;
        for c in &mut cdf {
            *c /= total;
        }
        StepSampler {
            core_lo: lo,
            core_cdf: cdf,
            core_mass: s / total,
            right,
            right_mass: right_mass / total,
            left,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> i64 {
        let u = rng.random::<f64>();
        if u < self.core_mass {
            let i = self.core_cdf.partition_point(|&c| c <= u);
            return self.core_lo + i.min(self.core_cdf.len() - 1) as i64;
        }
        if u < self.core_mass + self.right_mass {
            if let Some(t) = &self.right {
                return t.sample(rng) as i64;
            }
        }
        match &self.left {
            Some(t) => -(t.sample(rng) as i64),
            None => self.core_lo + self.core_cdf.len() as i64 - 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    /// First `n >= 1` with `S_n <= level`.
    EnterBelow { level: i64 },
    /// First `n >= 1` with `S_n >= level`.
    EnterAbove { level: i64 },
    /// First `n >= 1` with `S_n = point`.
    HitPoint { point: i64 },
    /// First `n >= 0` with `S_n` outside the open interval `(lo, hi)`.
    ExitInterval { lo: i64, hi: i64 },
    FixedHorizon { steps: u64 },
}

/// Parses `below:L`, `above:L`, `hit:P`, `exit:LO:HI` and `horizon:N`.
impl FromStr for StoppingRule {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            WalkError::Parse(format!(
                "rule {s:?}: expected below:L, above:L, hit:P, exit:LO:HI or horizon:N"
            ))
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let int = |i: usize| -> Result<i64> { parts[i].trim().parse().map_err(|_| bad()) };
        match (parts[0], parts.len()) {
            ("below", 2) => Ok(StoppingRule::EnterBelow { level: int(1)? }),
            ("above", 2) => Ok(StoppingRule::EnterAbove { level: int(1)? }),
            ("hit", 2) => Ok(StoppingRule::HitPoint { point: int(1)? }),
            ("exit", 3) => Ok(StoppingRule::ExitInterval { lo: int(1)?, hi: int(2)? }),
            ("horizon", 2) => {
                let steps = u64::try_from(int(1)?).map_err(|_| bad())?;
                Ok(StoppingRule::FixedHorizon { steps })
            }
            _ => Err(bad()),
        }
    }
}

impl StoppingRule {
    fn stops(&self, pos: i64, n: u64) -> bool {
        match *self {
            StoppingRule::EnterBelow { level } => n >= 1 && pos <= level,
            StoppingRule::EnterAbove { level } => n >= 1 && pos >= level,
            StoppingRule::HitPoint { point } => n >= 1 && pos == point,
            StoppingRule::ExitInterval { lo, hi } => pos <= lo || pos >= hi,
            StoppingRule::FixedHorizon { steps } => n >= steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathOutcome {
    /// Position at the stopping time, or at the cap when censored.
    pub position: i64,
    pub steps: u64,
    pub censored: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationConfig {
    pub start: i64,
    pub rule: StoppingRule,
    pub n_paths: u64,
    pub seed: u64,
    pub step_cap: u64,
    /// Count visits to sites in this range before the stopping time.
    pub track: Option<(i64, i64)>,
}

impl SimulationConfig {
    pub fn new(start: i64, rule: StoppingRule, n_paths: u64, seed: u64) -> Self {
        SimulationConfig {
            start,
            rule,
            n_paths,
            seed,
            step_cap: DEFAULT_STEP_CAP,
            track: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Occupation {
    pub lo: i64,
    /// Per site: sum over paths of the visit count, and of its square.
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathBatch {
    pub seed: u64,
    pub outcomes: Vec<PathOutcome>,
    pub occupation: Option<Occupation>,
}

/// Counts per position of the stopped walk.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalPmf {
    pub lo: i64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
    pub censored: u64,
    pub n: u64,
}

impl EmpiricalPmf {
    pub fn freq(&self, y: i64) -> f64 {
        let i = y - self.lo;
        if i < 0 || i as usize >= self.counts.len() {
            return 0.0;
        }
        self.counts[i as usize] as f64 / self.n as f64
    }

    /// Total-variation distance to `exact` on the tabulated range plus one
    /// overflow bin, and the matching standard-error scale
    /// `(1/2) sum sqrt(p (1 - p) / n)`. Censored paths may end anywhere, so the
    /// distance is the smallest one over all placements of the censored mass;
    /// since the frequencies and the censored share add to one, that minimum is
    /// the total excess `sum max(f - p, 0)`.
    pub fn tv_against(&self, exact: impl Fn(i64) -> f64) -> (f64, f64) {
        let n = self.n as f64;
        let mut excess = 0.0;
        let mut scale = 0.0;
        let mut inside = 0.0;
        for (i, &k) in self.counts.iter().enumerate() {
            let p = exact(self.lo + i as i64).clamp(0.0, 1.0);
            inside += p;
            excess += (k as f64 / n - p).max(0.0);
            scale += (p * (1.0 - p) / n).sqrt();
        }
        let rest = (1.0 - inside).clamp(0.0, 1.0);
        excess += ((self.below + self.above) as f64 / n - rest).max(0.0);
        scale += (rest * (1.0 - rest) / n).sqrt();
        (excess, 0.5 * scale)
    }
}

fn sample_std(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let mean = sum / n;
    ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0)).sqrt()
}

impl PathBatch {
    pub fn n_paths(&self) -> u64 {
        self.outcomes.len() as u64
    }

    pub fn censored(&self) -> u64 {
        self.outcomes.iter().filter(|o| o.censored).count() as u64
    }

    /// Frequency of `event` among stopped paths; censored paths widen the band.
    pub fn probability(&self, event: impl Fn(&PathOutcome) -> bool) -> MCEstimate {
        let n = self.n_paths() as f64;
        let hits = self
            .outcomes
            .iter()
            .filter(|o| !o.censored && event(o))
            .count() as f64;
        let cens = self.censored();
        let p = hits / n;
        MCEstimate {
            mean: p,
            stderr: sample_std(hits, hits, n) / n.sqrt(),
            n_paths: self.n_paths(),
            seed: self.seed,
            censored: cens,
            lower: p,
            upper: (hits + cens as f64) / n,
        }
    }

    /// Mean of `f` over stopped paths; the band is unbounded when any path is censored.
    pub fn mean_of(&self, f: impl Fn(&PathOutcome) -> f64) -> MCEstimate {
        let (mut s, mut s2, mut m) = (0.0, 0.0, 0.0);
        for o in self.outcomes.iter().filter(|o| !o.censored) {
            let v = f(o);
            s += v;
            s2 += v * v;
            m += 1.0;
        }
        let mean = if m > 0.0 { s / m } else { f64::NAN };
        let cens = self.censored();
        let (lower, upper) = if cens > 0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (mean, mean)
        };
        MCEstimate {
            mean,
            stderr: sample_std(s, s2, m) / m.max(1.0).sqrt(),
            n_paths: self.n_paths(),
            seed: self.seed,
            censored: cens,
            lower,
            upper,
        }
    }

    pub fn histogram(&self, lo: i64, hi: i64) -> EmpiricalPmf {
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        let (mut below, mut above, mut cens) = (0, 0, 0);
        for o in &self.outcomes {
            if o.censored {
                cens += 1;
            } else if o.position < lo {
                below += 1;
            } else if o.position > hi {
                above += 1;
            } else {
                counts[(o.position - lo) as usize] += 1;
            }
        }
        EmpiricalPmf {
            lo,
            counts,
            below,
            above,
            censored: cens,
            n: self.n_paths(),
        }
    }

    /// Mean number of visits to `y` before the stopping time.
    pub fn occupation(&self, y: i64) -> Option<MCEstimate> {
        let occ = self.occupation.as_ref()?;
        let i = y - occ.lo;
        if i < 0 || i as usize >= occ.sum.len() {
            return None;
        }
        let n = self.n_paths() as f64;
        let (s, s2) = (occ.sum[i as usize], occ.sum_sq[i as usize]);
        let cens = self.censored();
        Some(MCEstimate {
            mean: s / n,
            stderr: sample_std(s, s2, n) / n.sqrt(),
            n_paths: self.n_paths(),
            seed: self.seed,
            censored: cens,
            lower: s / n,
            upper: if cens > 0 { f64::INFINITY } else { s / n },
        })
    }

    /// Concatenate batches simulated over consecutive path ranges.
    pub fn merge(parts: Vec<PathBatch>) -> PathBatch {
        let seed = parts.first().map_or(0, |p| p.seed);
        let mut outcomes = Vec::new();
        let mut occupation: Option<Occupation> = None;
        for p in parts {
            outcomes.extend(p.outcomes);
            if let Some(o) = p.occupation {
                match occupation.as_mut() {
                    None => occupation = Some(o),
                    Some(acc) => {
                        for i in 0..acc.sum.len() {
                            acc.sum[i] += o.sum[i];
                            acc.sum_sq[i] += o.sum_sq[i];
                        }
                    }
                }
            }
        }
        PathBatch {
            seed,
            outcomes,
            occupation,
        }
    }
}

fn validate(cfg: &SimulationConfig) -> Result<()> {
    if let StoppingRule::ExitInterval { lo, hi } = cfg.rule {
        if !(lo < cfg.start && cfg.start < hi) {
            return Err(WalkError::PreconditionUnmet(format!(
                "start {} not inside ({lo}, {hi})",
                cfg.start
            )));
        }
    }
    if let Some((lo, hi)) = cfg.track {
        if lo > hi {
            return Err(WalkError::PreconditionUnmet("empty tracking range".into()));
        }
    }
    Ok(())
}

/// Simulate paths `range` of the stream family for `cfg`.
pub fn sample_paths_range(
    law: &IncrementLaw,
    cfg: &SimulationConfig,
    range: Range<u64>,
) -> Result<PathBatch> {
    validate(cfg)?;
    let sampler = StepSampler::new(law);
    let mut occupation = cfg.track.map(|(lo, hi)| Occupation {
        lo,
        sum: vec![0.0; (hi - lo + 1) as usize],
        sum_sq: vec![0.0; (hi - lo + 1) as usize],
    });
    let mut visits: Vec<u32> = occupation.as_ref().map_or(Vec::new(), |o| vec![0; o.sum.len()]);
    let mut touched: Vec<usize> = Vec::new();
    let mut outcomes = Vec::with_capacity((range.end - range.start) as usize);
    for path in range {
        let mut rng = rng_for(cfg.seed, path);
        let mut pos = cfg.start;
        let mut n = 0u64;
        let mut censored = false;
        loop {
            if cfg.rule.stops(pos, n) {
                break;
            }
            if n >= cfg.step_cap {
                censored = true;
                break;
            }
            if let Some(occ) = occupation.as_ref() {
                let i = pos - occ.lo;
                if i >= 0 && (i as usize) < visits.len() {
                    if visits[i as usize] == 0 {
                        touched.push(i as usize);
                    }
                    visits[i as usize] += 1;
                }
            }
            pos += sampler.sample(&mut rng);
            n += 1;
        }
        if let Some(occ) = occupation.as_mut() {
            for &i in &touched {
                let v = visits[i] as f64;
                occ.sum[i] += v;
                occ.sum_sq[i] += v * v;
                visits[i] = 0;
            }
            touched.clear();
        }
        outcomes.push(PathOutcome {
            position: pos,
            steps: n,
            censored,
        });
    }
    Ok(PathBatch {
        seed: cfg.seed,
        outcomes,
        occupation,
    })
}

pub fn sample_paths(law: &IncrementLaw, cfg: &SimulationConfig) -> Result<PathBatch> {
    sample_paths_range(law, cfg, 0..cfg.n_paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedWalkState {
    pub position: i64,
    pub a_value: f64,
}

/// One-step law `p(y - x) a(y) / a(x)` on the potential window, built per
/// visited site.
struct Row {
    y_lo: i64,
    cdf: Vec<f64>,
    /// Index range of the core reach around `x`, searched first.
    near: (usize, usize),
}

impl Row {
    fn find(&self, u: f64) -> usize {
        let (a, b) = self.near;
        let below = if a == 0 { 0.0 } else { self.cdf[a - 1] };
        if u >= below && b < self.cdf.len() && u < self.cdf[b] {
            return a + self.cdf[a..=b].partition_point(|&c| c <= u);
        }
        self.cdf.partition_point(|&c| c <= u)
    }
}

pub struct ConditionedSampler<'a> {
    law: &'a IncrementLaw,
    table: &'a PotentialTable,
    /// Indexed by `x + window`.
    rows: Vec<Option<Row>>,
    finite_support: Option<(i64, i64)>,
    /// Largest excess of a row sum over one seen so far.
    pub max_row_excess: f64,
}

impl<'a> ConditionedSampler<'a> {
    pub fn new(law: &'a IncrementLaw, table: &'a PotentialTable) -> Result<Self> {
        if (1..=2).any(|x| table.a(x) <= 0.0 || table.a(-x) <= 0.0) {
            return Err(WalkError::PreconditionUnmet(
                "a vanishes off the origin; the conditioned walk is undefined".into(),
            ));
        }
        let finite_support = match (law.left_tail(), law.right_tail()) {
            (TailModel::None, TailModel::None) => Some(law.core_range()),
            _ => None,
        };
        Ok(ConditionedSampler {
            law,
            table,
            rows: (0..=2 * table.window).map(|_| None).collect(),
            finite_support,
            max_row_excess: 0.0,
        })
    }

    pub fn state(&self, x: i64) -> Result<ConditionedWalkState> {
        if x == 0 {
            return Err(WalkError::PreconditionUnmet("the origin is not a state".into()));
        }
        if x.unsigned_abs() as usize > self.table.window {
            return Err(WalkError::WindowExceeded {
                cap: self.table.window,
            });
        }
        Ok(ConditionedWalkState {
            position: x,
            a_value: self.table.a(x),
        })
    }

    fn row(&mut self, x: i64) -> &Row {
        let w = self.table.window as i64;
        let slot = (x + w) as usize;
        if self.rows[slot].is_none() {
            let (lo, hi) = match self.finite_support {
                Some((l, h)) => ((x + l).max(-w), (x + h).min(w)),
                None => (-w, w),
            };
            let ax = self.table.a(x);
            let mut cdf = Vec::with_capacity((hi - lo + 1).max(0) as usize);
            let mut s = 0.0;
            for y in lo..=hi {
                if y != 0 {
                    s += self.law.pmf(y - x) * self.table.a(y) / ax;
                }
                cdf.push(s);
            }
            let tol = 10.0 * self.table.max_err() / ax + 1e-12;
            self.max_row_excess = self.max_row_excess.max(s - 1.0);
            debug_assert!(s <= 1.0 + tol, "row sum {s} at {x}");
            if s > 1.0 {
                for c in &mut cdf {
                    *c /= s;
                }
            }
            let (cl, ch) = self.law.core_range();
            let last = cdf.len().saturating_sub(1) as i64;
            let near = (
                (x + cl - lo).clamp(0, last) as usize,
                (x + ch - lo).clamp(0, last) as usize,
            );
            self.rows[slot] = Some(Row { y_lo: lo, cdf, near });
        }
        self.rows[slot].as_ref().unwrap()
    }

    /// One step; the mass outside the window ends the path with `WindowExceeded`.
    pub fn conditioned_step<R: Rng>(
        &mut self,
        state: ConditionedWalkState,
        rng: &mut R,
    ) -> Result<ConditionedWalkState> {
        let u = rng.random::<f64>();
        let cap = self.table.window;
        let row = self.row(state.position);
        let i = row.find(u);
        if i >= row.cdf.len() {
            return Err(WalkError::WindowExceeded { cap });
        }
        let y = row.y_lo + i as i64;
        debug_assert!(y != 0);
        Ok(ConditionedWalkState {
            position: y,
            a_value: self.table.a(y),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionedEnd {
    Horizon,
    /// Entered the negative half-line.
    Negative,
    /// Jumped out of the potential window; the sign says which side.
    WindowExit { right: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedPath {
    pub end: ConditionedEnd,
    pub position: i64,
    pub steps: u64,
    pub min: i64,
    pub max: i64,
    pub hit_origin: bool,
}

/// Run conditioned paths from `x` for at most `horizon` steps. With
/// `stop_negative` a path from `x > 0` stops on entering `(-inf, 0)`.
pub fn conditioned_paths(
    sampler: &mut ConditionedSampler,
    x: i64,
    n_paths: u64,
    horizon: u64,
    seed: u64,
    stop_negative: bool,
) -> Result<Vec<ConditionedPath>> {
    let start = sampler.state(x)?;
    let mut out = Vec::with_capacity(n_paths as usize);
    for path in 0..n_paths {
        let mut rng = rng_for(seed, path);
        let mut st = start;
        let mut rec = ConditionedPath {
            end: ConditionedEnd::Horizon,
            position: x,
            steps: 0,
            min: x,
            max: x,
            hit_origin: false,
        };
        while rec.steps < horizon {
            if stop_negative && st.position < 0 {
                rec.end = ConditionedEnd::Negative;
                break;
            }
            match sampler.conditioned_step(st, &mut rng) {
                Ok(next) => st = next,
                Err(WalkError::WindowExceeded { .. }) => {
                    // which side: redraw is not allowed, so use the row split
                    let right = window_exit_right(sampler, st.position);
                    rec.end = ConditionedEnd::WindowExit { right };
                    rec.steps += 1;
                    break;
                }
                Err(e) => return Err(e),
            }
            rec.steps += 1;
            rec.hit_origin |= st.position == 0;
            rec.min = rec.min.min(st.position);
            rec.max = rec.max.max(st.position);
        }
        if stop_negative && rec.end == ConditionedEnd::Horizon && st.position < 0 {
            rec.end = ConditionedEnd::Negative;
        }
        rec.position = st.position;
        out.push(rec);
    }
    Ok(out)
}

/// Side of the out-of-window mass for a row: right when the right tail
/// carries at least as much weight beyond the window as the left.
fn window_exit_right(sampler: &ConditionedSampler, x: i64) -> bool {
    let w = sampler.table.window as i64;
    let right = sampler.law.prob_at_least(w + 1 - x);
    let left = sampler.law.prob_at_most(-w - 1 - x);
    right >= left
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionedHitReport {
    pub x: i64,
    pub horizon: u64,
    /// Frequency of entering `(-inf, 0)` within the horizon; undecided paths
    /// widen the band.
    pub raw: MCEstimate,
    /// Each undecided path at `y` scored by its remaining entry probability
    /// `H^y{a} / a(y)` from the hitting law of the half-line; `lower`/`upper`
    /// cover paths beyond the hitting tables.
    pub completed: MCEstimate,
    /// Deterministic error of the completion scores, averaged over paths.
    pub completion_err: f64,
    pub prediction: Estimate,
    pub undecided: u64,
    pub hit_origin: u64,
}

impl ConditionedHitReport {
    /// Prediction within `k` standard errors of the completed estimate.
    pub fn agrees(&self, k: f64) -> bool {
        let slack = self.prediction.err + self.completion_err;
        let c = &self.completed;
        self.prediction.value >= c.lower - k * c.stderr - slack
            && self.prediction.value <= c.upper + k * c.stderr + slack
    }
}

/// Conditioned walk from `x > 0`: frequency of ever entering the negative
/// half-line against `1 - A f_r(x) / (EZ a(x))`.
pub fn conditioned_t_finite(
    law: &IncrementLaw,
    potential: &PotentialTable,
    tables: &LadderTables,
    x: i64,
    n_paths: u64,
    horizon: u64,
    seed: u64,
) -> Result<ConditionedHitReport> {
    if x <= 0 {
        return Err(WalkError::PreconditionUnmet("start must be positive".into()));
    }
    if !tables.ez.is_finite() {
        return Err(WalkError::NotInRegime("E Z is infinite".into()));
    }
    let ez = tables.ez.value();
    let a = potential.a(x);
    let fr = tables.f_r(x);
    let pred = 1.0 - potential.big_a * fr / (ez * a);
    let rel = tables.ez.err() / ez + potential.err(x) / a;
    let prediction = Estimate::new(pred, (1.0 - pred).abs() * rel + 1e-12);

    let mut sampler = ConditionedSampler::new(law, potential)?;
    let paths = conditioned_paths(&mut sampler, x, n_paths, horizon, seed, true)?;

    // remaining entry probability for undecided paths
    let hl = HalfLine::new(law, tables);
    let reach = (hl.window() as i64).min(potential.window as i64);
    let mut ys: Vec<i64> = paths
        .iter()
        .filter(|p| p.end == ConditionedEnd::Horizon && p.position <= reach)
        .map(|p| p.position)
        .collect();
    ys.push(reach);
    ys.sort_unstable();
    ys.dedup();
    let scores: HashMap<i64, Estimate> = ys
        .iter()
        .zip(hitting_of_a_many(&hl, potential, &ys))
        .map(|(&y, h)| {
            let ay = potential.a(y);
            (y, Estimate::new(h.value / ay, h.err / ay + h.value * potential.err(y) / (ay * ay)))
        })
        .collect();
    let edge = scores[&reach].value;

    let n = n_paths as f64;
    let (mut hits, mut undecided, mut origin, mut beyond) = (0u64, 0u64, 0u64, 0u64);
    let (mut s, mut s2, mut err) = (0.0, 0.0, 0.0);
    for p in &paths {
        origin += p.hit_origin as u64;
        let v = match p.end {
            ConditionedEnd::Negative | ConditionedEnd::WindowExit { right: false } => {
                hits += 1;
                1.0
            }
            ConditionedEnd::Horizon if p.position <= reach => {
                undecided += 1;
                let e = scores[&p.position];
                err += e.err;
                e.value
            }
            _ => {
                undecided += 1;
                beyond += 1;
                0.0
            }
        };
        s += v;
        s2 += v * v;
    }
    let h = hits as f64;
    let raw = MCEstimate {
        mean: h / n,
        stderr: sample_std(h, h, n) / n.sqrt(),
        n_paths,
        seed,
        censored: undecided,
        lower: h / n,
        upper: (h + undecided as f64) / n,
    };
    // entry probability decreases to the right, so the edge score bounds paths beyond
    let completed = MCEstimate {
        mean: s / n,
        stderr: sample_std(s, s2, n) / n.sqrt(),
        n_paths,
        seed,
        censored: beyond,
        lower: s / n,
        upper: (s + beyond as f64 * edge) / n,
    };
    Ok(ConditionedHitReport {
        x,
        horizon,
        raw,
        completed,
        completion_err: err / n,
        prediction,
        undecided,
        hit_origin: origin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransienceBranch {
    /// Finite variance: `P[S -> +inf] = (a(x) + x / sigma^2) / (2 a(x))`.
    TwoSided,
    /// Infinite variance with `EZ < inf`: drift to `+inf`.
    Positive,
    /// Infinite variance with `E|Zhat| < inf`: drift to `-inf`.
    Negative,
    /// Both ladder means infinite: the walk oscillates.
    Oscillating,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransienceReport {
    pub x: i64,
    pub horizon: u64,
    pub threshold: i64,
    pub branch: TransienceBranch,
    /// Positive-side frequency, or for the oscillating branch the frequency
    /// of paths reaching both `+threshold` and `-threshold`.
    pub estimate: MCEstimate,
    pub prediction: Option<f64>,
    pub hit_origin: u64,
}

pub fn transience_direction(
    law: &IncrementLaw,
    potential: &PotentialTable,
    tables: &LadderTables,
    x: i64,
    n_paths: u64,
    horizon: u64,
    threshold: i64,
    seed: u64,
) -> Result<TransienceReport> {
    let sigma2 = potential.sigma2;
    let (branch, prediction) = if sigma2.is_finite() {
        let pred = (potential.a_dagger(x) + x as f64 / sigma2) / (2.0 * potential.a(x));
        (TransienceBranch::TwoSided, Some(pred))
    } else if tables.ez.is_finite() {
        (TransienceBranch::Positive, Some(1.0))
    } else if tables.e_abs_hat_z.is_finite() {
        (TransienceBranch::Negative, Some(0.0))
    } else {
        (TransienceBranch::Oscillating, Some(1.0))
    };
    let mut sampler = ConditionedSampler::new(law, potential)?;
    let paths = conditioned_paths(&mut sampler, x, n_paths, horizon, seed, false)?;
    let n = n_paths as f64;
    let (mut hits, mut undecided, mut origin) = (0u64, 0u64, 0u64);
    for p in &paths {
        origin += p.hit_origin as u64;
        let (plus, minus) = match p.end {
            ConditionedEnd::WindowExit { right } => (right, !right),
            _ => (p.position >= threshold, p.position <= -threshold),
        };
        let hit = match branch {
            TransienceBranch::Oscillating => p.max >= threshold && p.min <= -threshold,
            _ => plus,
        };
        if hit {
            hits += 1;
        } else if branch != TransienceBranch::Oscillating && !minus {
            undecided += 1;
        }
    }
    let h = hits as f64;
    Ok(TransienceReport {
        x,
        horizon,
        threshold,
        branch,
        estimate: MCEstimate {
            mean: h / n,
            stderr: sample_std(h, h, n) / n.sqrt(),
            n_paths,
            seed,
            censored: undecided,
            lower: h / n,
            upper: (h + undecided as f64) / n,
        },
        prediction,
        hit_origin: origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::kernel::potential_kernel;

    #[test]
    fn srw_gamblers_ruin() {
        let law = corpus::srw();
        let cfg = SimulationConfig::new(5, StoppingRule::ExitInterval { lo: 0, hi: 10 }, 20_000, 7);
        let b = sample_paths(&law, &cfg).unwrap();
        let up = b.probability(|o| o.position >= 10);
        assert!(up.covers(0.5, 3.0), "{up:?}");
        assert_eq!(up.censored, 0);
    }

    #[test]
    fn srw_enters_at_zero() {
        let law = corpus::srw();
        let cfg = SimulationConfig::new(1, StoppingRule::EnterBelow { level: 0 }, 2000, 3);
        let b = sample_paths(&law, &cfg).unwrap();
        assert!(b.outcomes.iter().all(|o| o.censored || o.position == 0));
    }

    #[test]
    fn split_runs_are_bit_identical() {
        let law = corpus::heavy15();
        let mut cfg = SimulationConfig::new(3, StoppingRule::EnterBelow { level: 0 }, 3000, 11);
        cfg.step_cap = 20_000;
        cfg.track = Some((1, 20));
        let whole = sample_paths(&law, &cfg).unwrap();
        let parts = vec![
            sample_paths_range(&law, &cfg, 0..1234).unwrap(),
            sample_paths_range(&law, &cfg, 1234..3000).unwrap(),
        ];
        let merged = PathBatch::merge(parts);
        assert_eq!(whole.outcomes, merged.outcomes);
        let a = whole.occupation.unwrap();
        let b = merged.occupation.unwrap();
        for i in 0..a.sum.len() {
            assert_eq!(a.sum[i].to_bits(), b.sum[i].to_bits());
        }
    }

    #[test]
    fn tail_sampler_matches_pmf() {
        let law = corpus::heavy15();
        let s = StepSampler::new(&law);
        let mut rng = rng_for(5, 0);
        let n = 200_000;
        let mut counts = HashMap::new();
        let mut far = 0u64;
        for _ in 0..n {
            let x = s.sample(&mut rng);
            if x < -5000 {
                far += 1;
            }
            *counts.entry(x).or_insert(0u64) += 1;
        }
        for x in [-40, -7, -2, -1, 1, 2] {
            let p = law.pmf(x);
            let f = *counts.get(&x).unwrap_or(&0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() < 4.0 * se + 1e-12, "x={x} f={f} p={p}");
        }
        let p = law.prob_at_most(-5001);
        let f = far as f64 / n as f64;
        assert!((f - p).abs() < 4.0 * (p / n as f64).sqrt() + 1e-12, "{f} {p}");
    }

    #[test]
    fn tail_inversion_is_exact_far_out() {
        let t = TailSampler::new(TailModel::power(1.5, 0.3, 2), 3).unwrap();
        for &k in &[5000u64, 123_456, 9_876_543] {
            let v = t.big_g(k);
            assert_eq!(t.invert(v), k);
            let v2 = 0.5 * (t.big_g(k) + t.big_g(k + 1));
            assert_eq!(t.invert(v2), k);
        }
    }

    #[test]
    fn srw_conditioned_steps() {
        let law = corpus::srw();
        let table = potential_kernel(&law, 64, 1e-10).unwrap();
        let mut s = ConditionedSampler::new(&law, &table).unwrap();
        for x in [1i64, 2, 5, -3] {
            let row = s.row(x);
            let up_index = (x + 1 - row.y_lo) as usize;
            let p_up = row.cdf[up_index] - row.cdf[up_index - 1];
            let xa = x.abs() as f64;
            let expect = if x > 0 { (xa + 1.0) / (2.0 * xa) } else { (xa - 1.0) / (2.0 * xa) };
            assert!((p_up - expect).abs() < 1e-9, "x={x}");
            assert!((row.cdf.last().unwrap() - 1.0).abs() < 1e-9);
        }
        let paths = conditioned_paths(&mut s, 1, 2000, 50, 9, false).unwrap();
        assert!(paths.iter().all(|p| !p.hit_origin && p.min >= 1));
    }

    #[test]
    fn srw_transience_and_hit() {
        let law = corpus::srw();
        let table = potential_kernel(&law, 1024, 1e-10).unwrap();
        let tables = crate::ladder::ladder_tables(&law, 256).unwrap();
        let r = transience_direction(&law, &table, &tables, 4, 200, 1000, 1, 1).unwrap();
        assert!((r.prediction.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(r.estimate.mean, 1.0);
        let r = transience_direction(&law, &table, &tables, -4, 200, 1000, 1, 1).unwrap();
        assert!(r.prediction.unwrap().abs() < 1e-9);
        assert_eq!(r.estimate.mean, 0.0);
        let h = conditioned_t_finite(&law, &table, &tables, 3, 200, 1000, 2).unwrap();
        assert!(h.prediction.value.abs() < 1e-8);
        assert_eq!(h.raw.mean, 0.0);
        assert!(h.agrees(3.0));
    }
}
