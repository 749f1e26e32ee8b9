//! Identity suites with per-row residuals and budgets, plus fault injection for
//! negative controls.

use crate::error::{Result, WalkError};
use crate::exit::{avoid_origin, avoid_origin_solve, exit_point, exit_point_solve, exit_upper};
use crate::green::{verify_half_line_potential, HalfLine};
use crate::increment::IncrementLaw;
use crate::kernel::{potential_kernel, PotentialTable};
use crate::ladder::{identity_suite_ladder, ladder_tables, LadderTables};
use serde::Serialize;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    /// `a(x-y) - H^x{a(. - y)} + g(x, y) = A g(x, inf)` on a grid.
    HalfLine,
    /// `a(x) - H^x{a} = A f_r(x) / EZ`.
    Entrance,
    /// Ladder height and renewal identities.
    Ladder,
    Exit,
    All,
}

impl FromStr for Suite {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-line" | "eqPS" | "eqps" => Ok(Suite::HalfLine),
            "entrance" | "corollary1" => Ok(Suite::Entrance),
            "ladder" | "ladder-identities" => Ok(Suite::Ladder),
            "exit" => Ok(Suite::Exit),
            "all" => Ok(Suite::All),
            _ => Err(WalkError::Parse(format!(
                "unknown suite {s:?}; expected half-line, entrance, ladder, exit or all"
            ))),
        }
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Deliberate corruption of a table, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Fault {
    /// Add `delta` to `a(x)`.
    Potential { x: i64, delta: f64 },
    /// Add `delta` to `v^-(k)`, which shifts `f_r` beyond `k`.
    Ladder { k: usize, delta: f64 },
}

/// Parses `potential:X:DELTA` and `ladder:K:DELTA`.
impl FromStr for Fault {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || WalkError::Parse(format!("fault {s:?}: expected potential:X:DELTA or ladder:K:DELTA"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let delta: f64 = parts[2].parse().map_err(|_| bad())?;
        if !delta.is_finite() {
            return Err(bad());
        }
        match parts[0] {
            "potential" => Ok(Fault::Potential { x: parts[1].parse().map_err(|_| bad())?, delta }),
            "ladder" => Ok(Fault::Ladder { k: parts[1].parse().map_err(|_| bad())?, delta }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub identity: String,
    pub x: Option<i64>,
    pub y: Option<i64>,
    pub residual: f64,
    pub budget: f64,
}

impl ResidualRow {
    pub fn passed(&self) -> bool {
        self.residual <= self.budget
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub potential_window: usize,
    pub ladder_window: usize,
    /// Budget added to each row's certified truncation bound.
    pub tol: f64,
    pub xs: Vec<i64>,
    pub ys: Vec<i64>,
    pub exit_ns: Vec<i64>,
    pub ladder_limit: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            potential_window: 2048,
            ladder_window: 2048,
            tol: 1e-6,
            xs: vec![-20, -5, -1, 0, 1, 2, 5, 10, 20, 50],
            ys: vec![-10, -3, 0, 1, 3, 10],
            exit_ns: vec![16, 64],
            ladder_limit: 1000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<ResidualRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(ResidualRow::passed)
    }

    /// Names of the identities with at least one failing row, in first-seen order.
    pub fn violated(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in self.rows.iter().filter(|r| !r.passed()) {
            if !out.contains(&r.identity) {
                out.push(r.identity.clone());
            }
        }
        out
    }

    pub fn max_residual(&self, identity: &str) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.identity == identity)
            .map(|r| r.residual)
            .reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("identity,x,y,residual,budget\n");
        let opt = |v: Option<i64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{:e},{:e}\n",
                r.identity,
                opt(r.x),
                opt(r.y),
                r.residual,
                r.budget
            ));
        }
        s
    }
}

fn apply_fault(fault: Option<Fault>, pt: Option<&mut PotentialTable>, lt: &mut LadderTables) {
    match fault {
        Some(Fault::Potential { x, delta }) => {
            if let Some(pt) = pt {
                let i = (x + pt.window as i64) as usize;
                pt.a[i] += delta;
            }
        }
        Some(Fault::Ladder { k, delta }) => {
            lt.v_minus[k] += delta;
        }
        None => {}
    }
}

fn row(identity: &str, x: Option<i64>, y: Option<i64>, residual: f64, budget: f64) -> ResidualRow {
    ResidualRow {
        identity: identity.to_string(),
        x,
        y,
        residual,
        budget,
    }
}

/// Run `suite` on `law`. The potential table is only built when a selected
/// identity needs it.
pub fn run_suite(law: &IncrementLaw, suite: Suite, cfg: &VerifyConfig) -> Result<VerifyReport> {
    if !(cfg.tol > 0.0) {
        return Err(WalkError::PreconditionUnmet("tolerance must be positive".into()));
    }
    let mut lt = ladder_tables(law, cfg.ladder_window)?;
    let needs_pt = suite.includes(Suite::HalfLine) || suite.includes(Suite::Entrance) || suite.includes(Suite::Exit);
    let mut pt = if needs_pt {
        Some(potential_kernel(law, cfg.potential_window, 1e-10)?)
    } else {
        None
    };
    apply_fault(cfg.fault, pt.as_mut(), &mut lt);
    let hl = HalfLine::new(law, &lt);
    let mut rows = Vec::new();

    if suite.includes(Suite::HalfLine) {
        let pt = pt.as_ref().unwrap();
        let pairs: Vec<(i64, i64)> = cfg
            .xs
            .iter()
            .flat_map(|&x| cfg.ys.iter().map(move |&y| (x, y)))
            .collect();
        let checks = verify_half_line_potential(&hl, pt, &pairs);
        for c in &checks {
            rows.push(row("half-line-potential", Some(c.x), Some(c.y), c.residual(), c.bound() + cfg.tol));
        }
        // left side must not depend on y
        for &x in &cfg.xs {
            let lhs: Vec<_> = checks.iter().filter(|c| c.x == x).map(|c| c.lhs).collect();
            if let Some(first) = lhs.first() {
                let (mut spread, mut bound) = (0.0f64, 0.0f64);
                for l in &lhs {
                    spread = spread.max((l.value - first.value).abs());
                    bound = bound.max(l.err + first.err);
                }
                rows.push(row("half-line-potential-y-independence", Some(x), None, spread, bound + cfg.tol));
            }
        }
    }

    if suite.includes(Suite::Entrance) {
        let xs: Vec<(i64, i64)> = cfg.xs.iter().map(|&x| (x, 0)).collect();
        for c in verify_half_line_potential(&hl, pt.as_ref().unwrap(), &xs) {
            rows.push(row("entrance-potential", Some(c.x), None, c.residual(), c.bound() + cfg.tol));
        }
    }

    if suite.includes(Suite::Ladder) {
        let rep = identity_suite_ladder(law, &lt, cfg.ladder_limit);
        let lim = Some(cfg.ladder_limit.min(lt.window / 2) as i64);
        for (name, r) in [
            ("ladder-height-pmf", rep.sharp),
            ("ladder-height-tail", rep.f_z),
            ("descending-height-tail", rep.hat_z),
            ("renewal-harmonic", rep.harmonic),
        ] {
            rows.push(row(name, lim, None, r.max, r.bound + cfg.tol));
        }
        if lt.ez.is_finite() {
            rows.push(row("renewal-mean", None, None, rep.eq_ez.max, rep.eq_ez.bound + cfg.tol));
        }
        let sigma2 = law.moments().sigma2;
        if sigma2.is_finite() {
            let rel = (lt.spitzer_product() - sigma2).abs() / sigma2;
            let b = lt.ez.err() / lt.ez.value() + lt.e_abs_hat_z.err() / lt.e_abs_hat_z.value()
                + lt.c_err / lt.c;
            rows.push(row("ladder-variance", None, None, rel, b + cfg.tol));
        }
    }

    if suite.includes(Suite::Exit) {
        let pt = pt.as_ref().unwrap();
        for &n in &cfg.exit_ns {
            let sol = exit_upper(law, n)?;
            rows.push(row("exit-solver", None, Some(n), sol.err, cfg.tol));
            let mut drop = 0.0f64;
            for x in 1..n - 1 {
                drop = drop.max(sol.prob[(x - 1) as usize] - sol.prob[x as usize]);
            }
            rows.push(row("exit-monotone", None, Some(n), drop.max(0.0), 2.0 * sol.err + cfg.tol));

            let xs: Vec<i64> = [1, n / 4, n / 2, n - 1].into_iter().filter(|&x| x >= 1).collect();
            if (n as usize) <= lt.window / 2 {
                let br = exit_point_solve(law, n, 4 * n, &xs)?;
                for (&x, b) in xs.iter().zip(&br) {
                    let g = exit_point(&hl, x, n);
                    let gap = (b.lo - g.value).max(g.value - b.hi).max(0.0);
                    rows.push(row("exit-point", Some(x), Some(n), gap, g.err + b.solver_err + cfg.tol));
                }
            }
            if (n as usize) * 4 < pt.window {
                let br = avoid_origin_solve(law, n, 4 * n, &xs)?;
                for (&x, b) in xs.iter().zip(&br) {
                    let g = avoid_origin(pt, x, n);
                    let gap = (b.lo - g.value).max(g.value - b.hi).max(0.0);
                    rows.push(row("avoid-origin", Some(x), Some(n), gap, g.err + b.solver_err + cfg.tol));
                }
            }
        }
    }

    Ok(VerifyReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn small() -> VerifyConfig {
        VerifyConfig {
            potential_window: 256,
            ladder_window: 256,
            tol: 1e-10,
            xs: vec![-5, 0, 1, 3, 7],
            ys: vec![-2, 0, 4],
            exit_ns: vec![10],
            ladder_limit: 100,
            fault: None,
        }
    }

    #[test]
    fn srw_all_suites_pass() {
        let rep = run_suite(&corpus::srw(), Suite::All, &small()).unwrap();
        assert!(rep.passed(), "{:?}", rep.violated());
        assert!(rep.rows.iter().all(|r| r.residual <= 1e-10), "{}", rep.to_csv());
    }

    #[test]
    fn potential_fault_is_named() {
        let mut cfg = small();
        cfg.fault = Some(Fault::Potential { x: 3, delta: 1e-3 });
        let rep = run_suite(&corpus::srw(), Suite::HalfLine, &cfg).unwrap();
        assert!(!rep.passed());
        assert!(rep.violated().contains(&"half-line-potential".to_string()));
    }

    #[test]
    fn ladder_fault_is_named() {
        let mut cfg = small();
        cfg.fault = Some(Fault::Ladder { k: 2, delta: 1e-3 });
        let rep = run_suite(&corpus::srw(), Suite::Ladder, &cfg).unwrap();
        assert!(!rep.passed());
        assert!(!rep.violated().is_empty());
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("eqPS".parse::<Suite>().unwrap(), Suite::HalfLine);
        assert_eq!("ladder-identities".parse::<Suite>().unwrap(), Suite::Ladder);
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!("ladder:3:1e-4".parse::<Fault>().unwrap(), Fault::Ladder { k: 3, delta: 1e-4 });
        assert!("potential:x:1".parse::<Fault>().is_err());
    }
}
