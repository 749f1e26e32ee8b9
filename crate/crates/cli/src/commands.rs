use crate::output::{emit, to_csv, write_meta, Row};
use crate::Common;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use walkpot::asymptotics::classify as classify_law;
use walkpot::exit::{exit_upper, ladder_exit_approx};
use walkpot::green::{green_origin, hitting_of_a_many, HalfLine};
use walkpot::kernel::{constant_c, potential_kernel, PotentialTable};
use walkpot::ladder::{ladder_tables, LadderTables};
use walkpot::montecarlo::{sample_paths, SimulationConfig, StoppingRule};
use walkpot::verify::{run_suite, Fault, Suite, VerifyConfig};
use walkpot::{corpus, IncrementLaw, LawSpec, TailModel, WalkError};

const KERNEL_TOL: f64 = 1e-10;
const SPITZER_N: usize = 4096;

#[derive(Debug)]
pub enum CliError {
    /// Identities whose residual exceeded the budget.
    Verification(Vec<String>),
    Input(String),
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type Res = Result<(), CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn load_law(c: &Common) -> Result<(IncrementLaw, LawSpec), CliError> {
    let path = c.law.as_deref().ok_or_else(|| input("--law is required"))?;
    let law = if let Some(name) = path.strip_prefix("corpus:") {
        corpus::by_name(name).ok_or_else(|| {
            let names: Vec<_> = corpus::all().into_iter().map(|(n, _)| n).collect();
            input(format!("unknown corpus law {name:?}; known: {}", names.join(", ")))
        })?
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{path}: {e}")))?;
        let spec = LawSpec::from_json_str(&text).map_err(|e| input(format!("{path}: {e}")))?;
        spec.to_law().map_err(|e| input(format!("{path}: {e}")))?
    };
    let spec = LawSpec::from_law(&law);
    Ok((law, spec))
}

fn validate(c: &Common) -> Res {
    if !(c.tol > 0.0) || !c.tol.is_finite() {
        return Err(input("--tol must be positive"));
    }
    if c.xmax < 1 {
        return Err(input("--xmax must be at least 1"));
    }
    if c.window < 16 {
        return Err(input("--window must be at least 16"));
    }
    if c.xmax as usize > c.window / 2 {
        return Err(input(format!("--xmax {} exceeds half the window {}", c.xmax, c.window)));
    }
    if c.n_ladder.is_empty() || c.n_ladder[0] < 2 || c.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(input("--N-ladder must be strictly increasing integers >= 2"));
    }
    if c.paths == 0 {
        return Err(input("--paths must be positive"));
    }
    Ok(())
}

fn meta(c: &Common, spec: &LawSpec, extra: Value) -> Value {
    let mut m = json!({
        "law": spec,
        "xmax": c.xmax,
        "tol": c.tol,
        "window": c.window,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut m, extra) {
        m.extend(e);
    }
    m
}

fn finish(c: &Common, command: &str, rows: &[Row], m: Value) -> Res {
    emit(c.out.as_deref(), &format!("{command}.csv"), &to_csv(rows))?;
    write_meta(c.out.as_deref(), command, m)?;
    Ok(())
}

fn num_or_inf(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

fn heavy(t: TailModel) -> bool {
    t.alpha().is_some_and(|a| a <= 2.0)
}

pub fn describe(c: &Common) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let m = law.moments();
    let lt = ladder_tables(&law, c.window)?;
    let regime = match (heavy(law.left_tail()), heavy(law.right_tail())) {
        (false, false) => "finite-variance",
        (true, false) => "heavy-left",
        (false, true) => "heavy-right",
        (true, true) => "heavy-both",
    };
    let cc = constant_c(&law, 1e-8).ok();
    let doc = json!({
        "sigma2": num_or_inf(m.sigma2),
        "EZ": num_or_inf(lt.ez.value()),
        "E_abs_hatZ": num_or_inf(lt.e_abs_hat_z.value()),
        "A": if m.finite_variance() { 0.5 } else { 1.0 },
        "c": cc.map(|x| x.c),
        "E_X_plus": m.ex_plus,
        "alpha_left": law.left_tail().alpha(),
        "alpha_right": law.right_tail().alpha(),
        "regime": regime,
        "law": spec,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| input(e.to_string()))? + "\n";
    emit(c.out.as_deref(), "describe.json", &text)?;
    Ok(())
}

pub fn verify(c: &Common, suite: &str, fault: Option<&str>) -> Res {
    validate(c)?;
    let suite: Suite = suite.parse()?;
    let (law, spec) = load_law(c)?;
    let fault = fault.map(str::parse::<Fault>).transpose()?;
    let cfg = VerifyConfig {
        potential_window: c.window,
        ladder_window: c.window,
        tol: c.tol,
        exit_ns: c.n_ladder.iter().copied().filter(|&n| (n as usize) <= c.window / 2).collect(),
        fault,
        ..VerifyConfig::default()
    };
    let rep = run_suite(&law, suite, &cfg)?;
    emit(c.out.as_deref(), "verify.csv", &rep.to_csv())?;
    write_meta(
        c.out.as_deref(),
        "verify",
        meta(c, &spec, json!({ "suite": format!("{suite:?}"), "passed": rep.passed() })),
    )?;
    if rep.passed() {
        Ok(())
    } else {
        Err(CliError::Verification(rep.violated()))
    }
}

fn tables(c: &Common, law: &IncrementLaw) -> Result<(PotentialTable, LadderTables), CliError> {
    Ok((potential_kernel(law, c.window, KERNEL_TOL)?, ladder_tables(law, c.window)?))
}

pub fn kernel(c: &Common) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let pt = potential_kernel(&law, c.window, KERNEL_TOL)?;
    let mut rows = vec![Row::scalar("A", pt.big_a, None)];
    if pt.sigma2.is_finite() {
        rows.push(Row::scalar("sigma2", pt.sigma2, None));
    }
    if let Ok(cc) = constant_c(&law, 1e-8) {
        rows.push(Row::scalar("c", cc.c, Some(cc.err)));
    }
    for x in -c.xmax..=c.xmax {
        rows.push(Row::at("a", x, pt.a(x), Some(pt.err(x))));
    }
    finish(c, "kernel", &rows, meta(c, &spec, json!({})))
}

pub fn ladder(c: &Common) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let lt = ladder_tables(&law, c.window)?;
    let mut rows = Vec::new();
    if lt.ez.is_finite() {
        rows.push(Row::scalar("EZ", lt.ez.value(), Some(lt.ez.err())));
    }
    if lt.e_abs_hat_z.is_finite() {
        rows.push(Row::scalar("E_abs_hatZ", lt.e_abs_hat_z.value(), Some(lt.e_abs_hat_z.err())));
    }
    rows.push(Row::scalar("c", lt.c, Some(lt.c_err)));
    let xmax = c.xmax as usize;
    for (name, table) in [("z_pmf", &lt.z_pmf), ("hat_z_pmf", &lt.hat_z_pmf), ("v", &lt.v), ("v_minus", &lt.v_minus)] {
        for (k, &p) in table.iter().enumerate().take(xmax + 1) {
            rows.push(Row::at(name, k as i64, p, None));
        }
    }
    for x in 1..=c.xmax {
        rows.push(Row::at("f_r", x, lt.f_r(x), None));
    }
    for x in 1..=xmax {
        rows.push(Row::at("f_l", x as i64, lt.f_l(x), None));
    }
    finish(c, "ladder", &rows, meta(c, &spec, json!({})))
}

pub fn green(c: &Common) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let (pt, lt) = tables(c, &law)?;
    let hl = HalfLine::new(&law, &lt);
    let mut rows = Vec::new();
    for x in 1..=c.xmax {
        for y in 1..=c.xmax {
            let g = hl.g(x, y);
            rows.push(Row::at("g_half_line", x, g.value, Some(g.err)).with_y(y));
        }
    }
    let xs: Vec<i64> = (1..=c.xmax).collect();
    for (&x, h) in xs.iter().zip(hitting_of_a_many(&hl, &pt, &xs)) {
        rows.push(Row::at("hitting_of_a", x, h.value, Some(h.err)));
    }
    for x in -c.xmax..=c.xmax {
        for y in -c.xmax..=c.xmax {
            let g = green_origin(&pt, x, y);
            rows.push(Row::at("g_origin", x, g.value, Some(g.err)).with_y(y));
        }
    }
    finish(c, "green", &rows, meta(c, &spec, json!({})))
}

pub fn exit(c: &Common) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let lt = ladder_tables(&law, c.window)?;
    let mut rows = Vec::new();
    for &n in &c.n_ladder {
        let sol = exit_upper(&law, n)?;
        for x in 1..n {
            let e = sol.get(x);
            rows.push(Row::at("p_exit_up", x, e.value, Some(e.err)).with_n(n));
            if let Ok(a) = ladder_exit_approx(&lt, x, n) {
                if let Some(u) = a.up {
                    rows.push(Row::at("p_exit_up_ladder", x, u, None).with_n(n));
                }
                if let Some(u) = a.dual_up {
                    rows.push(Row::at("p_exit_up_dual_ladder", x, u, None).with_n(n));
                }
            }
        }
    }
    finish(c, "exit", &rows, meta(c, &spec, json!({ "N": c.n_ladder })))
}

pub fn classify(c: &Common) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let (pt, lt) = tables(c, &law)?;
    let rep = classify_law(&law, &lt, &pt, SPITZER_N)?;
    let last = rep.spitzer.last().map(|&(_, (lo, hi))| 0.5 * (lo + hi));
    let mut doc = serde_json::to_value(&rep).map_err(|e| input(e.to_string()))?;
    if let Value::Object(m) = &mut doc {
        m.insert("spitzer_limit".into(), json!(last));
        m.insert("law".into(), json!(spec));
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| input(e.to_string()))? + "\n";
    emit(c.out.as_deref(), "classify.json", &text)?;
    if c.out.is_some() {
        let mut rows = Vec::new();
        for &(n, (lo, hi)) in &rep.spitzer {
            rows.push(Row::at("spitzer_average", n as i64, 0.5 * (lo + hi), Some(0.5 * (hi - lo))));
        }
        for &(x, l) in &rep.l_samples {
            rows.push(Row::at("slowly_varying_l", x.round() as i64, l, None));
        }
        finish(c, "classify", &rows, meta(c, &spec, json!({ "spitzer_n": SPITZER_N })))?;
    }
    Ok(())
}

fn parse_track(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || input(format!("track {s:?}: expected LO:HI with LO <= HI"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (i64, i64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    if lo > hi || hi - lo > 100_000 {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub fn simulate(c: &Common, start: i64, rule: &str, step_cap: Option<u64>, track: Option<&str>) -> Res {
    validate(c)?;
    let (law, spec) = load_law(c)?;
    let rule_v: StoppingRule = rule.parse()?;
    let mut cfg = SimulationConfig::new(start, rule_v, c.paths, c.seed);
    if let Some(cap) = step_cap {
        cfg.step_cap = cap;
    }
    cfg.track = track.map(parse_track).transpose()?;
    let batch = sample_paths(&law, &cfg)?;

    let mut rows = vec![
        Row::scalar("paths", batch.n_paths() as f64, None),
        Row::scalar("censored", batch.censored() as f64, None),
    ];
    let pos = batch.mean_of(|o| o.position as f64);
    rows.push(Row::scalar("mean_end", pos.mean, Some(pos.stderr)));
    let steps = batch.mean_of(|o| o.steps as f64);
    rows.push(Row::scalar("mean_steps", steps.mean, Some(steps.stderr)));
    if let StoppingRule::ExitInterval { hi, .. } = rule_v {
        let p = batch.probability(|o| o.position >= hi);
        rows.push(Row::scalar("p_exit_up", p.mean, Some(p.stderr)));
    }
    let mut ends: BTreeMap<i64, u64> = BTreeMap::new();
    for o in batch.outcomes.iter().filter(|o| !o.censored) {
        *ends.entry(o.position).or_default() += 1;
    }
    let n = batch.n_paths() as f64;
    for (&y, &k) in ends.iter().filter(|(y, _)| y.abs() <= c.xmax.max(start.abs() + c.xmax)) {
        let f = k as f64 / n;
        rows.push(Row::at("end_freq", y, f, Some((f * (1.0 - f) / n).sqrt())));
    }
    if let Some((lo, hi)) = cfg.track {
        for y in lo..=hi {
            if let Some(e) = batch.occupation(y) {
                rows.push(Row::at("occupation", y, e.mean, Some(e.stderr)));
            }
        }
    }
    let m = meta(
        c,
        &spec,
        json!({ "start": start, "rule": rule, "paths": c.paths, "seed": c.seed, "step_cap": cfg.step_cap }),
    );
    finish(c, "simulate", &rows, m)
}
