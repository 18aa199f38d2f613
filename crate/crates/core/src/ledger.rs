//! The verification ledger: every checked statement as a named claim with a
//! recorded expectation, run in parallel and reported in registry order.
//!
//! A claim whose expectation is `false` is a probe of a printed formula that
//! does not hold; it passes when the check fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::catalog;
use crate::exact::{CScalar, QuadExt};
use crate::flow::{self, IntegratorConfig, PathSpec};
use crate::geometry::{analyze_singular, holomorphy_check, local_index, ratio_condition, recover_field, AccessiblePoint, Chart, ChartView, SingularPoint};
use crate::mpoly::parse;
use crate::series::{dominant_balances, kowalevski, laurent_extend, scalar_balances, series_residual, FreeValue};
use crate::solve::SolveOptions;
use crate::transforms::{self, BtMode, Check};

pub const SCHEMA: &str = "chazy-ledger/1";

type Runner = Arc<dyn Fn(u64) -> Result<Check, String> + Send + Sync>;

#[derive(Clone)]
pub struct Claim {
    pub id: String,
    pub group: &'static str,
    pub statement: String,
    /// Whether the statement is expected to hold.
    pub expect: bool,
    run: Runner,
}

impl std::fmt::Debug for Claim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Claim").field("id", &self.id).field("group", &self.group).field("expect", &self.expect).finish()
    }
}

impl Claim {
    pub fn new(id: impl Into<String>, group: &'static str, statement: impl Into<String>, expect: bool, run: impl Fn(u64) -> Result<Check, String> + Send + Sync + 'static) -> Claim {
        Claim { id: id.into(), group, statement: statement.into(), expect, run: Arc::new(run) }
    }

    /// Runs the check, turning errors and panics into a failed check.
    pub fn check(&self, seed: u64) -> Check {
        match catch_unwind(AssertUnwindSafe(|| (self.run)(seed))) {
            Ok(Ok(c)) => c,
            Ok(Err(e)) => Check::fail(&self.id, "error", e),
            Err(p) => {
                let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into());
                Check::fail(&self.id, "panic", msg)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LedgerEntry {
    pub id: String,
    pub group: &'static str,
    pub statement: String,
    pub expect: bool,
    /// Outcome of the check; `None` when skipped.
    pub holds: Option<bool>,
    pub status: Status,
    pub detail: String,
    pub witness: Option<String>,
    pub elapsed_ms: f64,
}

impl LedgerEntry {
    pub fn to_json(&self, timings: bool) -> Value {
        let mut v = json!({
            "claim_id": self.id,
            "group": self.group,
            "statement": self.statement,
            "expected": self.expect,
            "holds": self.holds,
            "status": self.status.as_str(),
            "detail": self.detail,
        });
        if let Some(w) = &self.witness {
            v["witness"] = json!(w);
        }
        if timings {
            v["elapsed_ms"] = json!(self.elapsed_ms);
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct LedgerReport {
    pub seed: u64,
    pub entries: Vec<LedgerEntry>,
}

impl LedgerReport {
    pub fn count(&self, s: Status) -> usize {
        self.entries.iter().filter(|e| e.status == s).count()
    }

    pub fn all_pass(&self) -> bool {
        self.count(Status::Fail) == 0
    }

    pub fn get(&self, id: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Canonical JSON; elapsed times only when `timings` is set, so that
    /// equal seeds give byte-identical output.
    pub fn to_json(&self, timings: bool) -> Value {
        json!({
            "schema": SCHEMA,
            "seed": self.seed,
            "summary": {"pass": self.count(Status::Pass), "fail": self.count(Status::Fail), "skipped": self.count(Status::Skipped)},
            "claims": self.entries.iter().map(|e| e.to_json(timings)).collect::<Vec<_>>(),
        })
    }

    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let tag = match e.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let probe = if e.expect { "" } else { " (expected to fail)" };
            out.push_str(&format!("{tag} {}{probe}: {}\n", e.id, e.detail));
            if e.status == Status::Fail {
                if let Some(w) = &e.witness {
                    out.push_str(&format!("     witness: {w}\n"));
                }
            }
        }
        out.push_str(&format!("{} pass, {} fail, {} skipped\n", self.count(Status::Pass), self.count(Status::Fail), self.count(Status::Skipped)));
        out
    }
}

/// Runs the claims whose id or group matches `filter` (all when `None`); the rest are skipped.
pub fn run(claims: &[Claim], seed: u64, filter: Option<&(dyn Fn(&Claim) -> bool + Sync)>) -> LedgerReport {
    let entries = claims
        .par_iter()
        .map(|c| {
            if filter.is_some_and(|f| !f(c)) {
                return LedgerEntry {
                    id: c.id.clone(),
                    group: c.group,
                    statement: c.statement.clone(),
                    expect: c.expect,
                    holds: None,
                    status: Status::Skipped,
                    detail: "not selected".into(),
                    witness: None,
                    elapsed_ms: 0.0,
                };
            }
            let start = Instant::now();
            let chk = c.check(seed);
            let status = if chk.ok == c.expect { Status::Pass } else { Status::Fail };
            LedgerEntry {
                id: c.id.clone(),
                group: c.group,
                statement: c.statement.clone(),
                expect: c.expect,
                holds: Some(chk.ok),
                status,
                detail: chk.detail,
                witness: chk.witness,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect();
    LedgerReport { seed, entries }
}

pub fn run_all(seed: u64) -> LedgerReport {
    run(&claims(), seed, None)
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn q(n: i64) -> QuadExt {
    QuadExt::int(n)
}

fn verdict(id: &str, ok: bool, detail: impl Into<String>, witness: impl Into<String>) -> Check {
    if ok {
        Check::pass(id, detail)
    } else {
        Check::fail(id, detail, witness)
    }
}

// ---------------------------------------------------------------------------
// Singularity and series claims.

/// Halphen parameters `(alpha, beta, gamma)` for the integer-index family `(l, m, n)`.
pub fn halphen_lmn(l: i64, m: i64, n: i64) -> [QuadExt; 3] {
    let inv = |k: i64| QuadExt::frac(1, k * k);
    let eighth = QuadExt::frac(1, 8);
    let f = |a: QuadExt, b: QuadExt, c: QuadExt| &(&(&(&a + &b) + &c) - &q(1)) * &eighth;
    [f(inv(l), inv(m), -&inv(n)), f(inv(l), -&inv(m), inv(n)), f(-&inv(l), inv(m), inv(n))]
}

fn points(name: &str, bind: &[(&str, QuadExt)]) -> Result<Vec<SingularPoint>, String> {
    let s = catalog::get_system(name, bind).map_err(e)?;
    analyze_singular(&s, &SolveOptions::default()).map_err(e)
}

fn count_check(id: &str, name: &str, bind: &[(&str, QuadExt)], want: usize) -> Result<Check, String> {
    let pts = points(name, bind)?;
    Ok(verdict(id, pts.len() == want, format!("{} accessible points (want {want})", pts.len()), pts.len().to_string()))
}

/// Rows of the local-index table of the Chazy III system, up to scale.
pub const III_INDEX_TABLE: [(&str, [i64; 3]); 5] = [("P1", [-1, 3, 2]), ("P2", [2, 1, 1]), ("P3", [1, 2, 1]), ("P5", [0, 12, -12]), ("P6", [3, 1, -2])];

fn iii_singular(id: &str) -> Result<Check, String> {
    let pts = points("chazy.III.system", &[])?;
    if pts.len() != 6 {
        return Ok(Check::fail(id, "wrong number of accessible points", pts.len().to_string()));
    }
    for (row, want) in III_INDEX_TABLE {
        let hit = pts.iter().any(|p| p.index.as_ref().is_some_and(|i| i.matches_up_to_scale(&want.map(q))));
        if !hit {
            return Ok(Check::fail(id, format!("no point with local index {want:?} ({row})"), format!("{want:?}")));
        }
    }
    Ok(Check::pass(id, "6 accessible points; local indices match the table rows up to scale"))
}

fn ex1_ratios(id: &str) -> Result<Check, String> {
    let s = catalog::get_system("example.ex1.system", &[]).map_err(e)?;
    let u1 = &crate::geometry::projective_charts(&s).map_err(e)?[0];
    let v = ChartView::new(&s, u1).map_err(e)?;
    let idx = local_index(&v, &AccessiblePoint::exact("U1", &[q(0), q(0), q(0)])).map_err(e)?;
    let s3 = QuadExt::sqrt_of(-3);
    let want = [q(1), &q(3) - &s3, &q(3) + &s3];
    let ratios: Vec<QuadExt> = idx.ratios.iter().flatten().filter_map(|r| r.exact().cloned()).collect();
    let mut ok = ratios.len() == 3 && !ratio_condition(&idx);
    for w in &want {
        ok &= ratios.contains(w);
    }
    Ok(verdict(id, ok, "ratios (1, 3 - sqrt(-3), 3 + sqrt(-3)); the integer-ratio condition fails", format!("{ratios:?}")))
}

fn ex2_ratio(id: &str) -> Result<Check, String> {
    // a = -4/(N^2 - 36) with N = 3.
    let n = 3;
    let a = QuadExt::frac(-4, n * n - 36);
    let s = catalog::get_system("example.ex2.system", &[("a", a)]).map_err(e)?;
    let c = Chart::new(&s, "P", &["p", "q", "r"], &[], &["x - 3/2", "y/z - 1/2", "1/z"], &[("x", "p + 3/2"), ("z", "1/r"), ("y", "(q + 1/2)/r")], Some("r")).map_err(e)?;
    let v = ChartView::new(&s, &c).map_err(e)?;
    let idx = local_index(&v, &AccessiblePoint::exact("P", &[q(0), q(0), q(0)])).map_err(e)?;
    Ok(verdict(id, ratio_condition(&idx), "a = 4/27: ratios (1, 3, 1) are integers", format!("{:?}", idx.ratios)))
}

fn laurent_coefficients(id: &str) -> Result<Check, String> {
    let s = catalog::get_system("chazy.III.system", &[]).map_err(e)?;
    let b = dominant_balances(&s, 6, &q(0)).map_err(e)?.into_iter().find(|b| b.leading == vec![q(0), q(-2), q(-1)]).ok_or("balance (0, -2, -1) not found")?;
    let sol = laurent_extend(&s, &b, &q(0), &[FreeValue::new(0, 2, q(1))], 6).map_err(e)?;
    let got = [sol.coeff(1, 2), sol.coeff(1, 5), sol.coeff(2, 5)];
    let want = [Some(QuadExt::frac(17, 5)), Some(QuadExt::frac(-44, 175)), Some(QuadExt::frac(172, 35))];
    let zero = series_residual(&sol, &s).map_err(e)?.exact_zero;
    Ok(verdict(id, got == want && zero, "y_2 = 17/5, y_5 = -44/175, z_5 = 172/35 at a_3 = 1", format!("{got:?}")))
}

fn free_counts(id: &str) -> Result<Check, String> {
    let s = catalog::get_system("chazy.III.system", &[]).map_err(e)?;
    let mut got = Vec::new();
    for lead in [[-1, 0, 0], [0, -1, 0], [0, 0, -1], [0, -2, -1]] {
        let b = dominant_balances(&s, 6, &q(0)).map_err(e)?.into_iter().find(|b| b.leading == lead.map(q).to_vec()).ok_or("balance not found")?;
        kowalevski(&s, &b, &q(0)).map_err(e)?;
        got.push(laurent_extend(&s, &b, &q(0), &[], 8).map_err(e)?.free_count());
    }
    Ok(verdict(id, got == [0, 2, 2, 1], "free parameters (0, 2, 2, 1) per balance", format!("{got:?}")))
}

fn v_residues(id: &str) -> Result<Check, String> {
    let ode = catalog::get_scalar("chazy.III.v", &[]).map_err(e)?;
    let mut res: Vec<String> = scalar_balances(&ode, 3).map_err(e)?.into_iter().filter(|b| b.pole_order == 1).map(|b| b.residue.to_string()).collect();
    res.sort();
    let mut want = vec!["-1".to_string(), "-2".to_string(), "1".to_string()];
    want.sort();
    Ok(verdict(id, res == want, "simple-pole residues {-1, -2, 1}", format!("{res:?}")))
}

// ---------------------------------------------------------------------------
// Numeric claims.

pub const DRIFT_RTOL: f64 = 1e-10;
pub const DRIFT_BOUND: f64 = 1e-8;
pub const ENDPOINT_TOL: f64 = 1e-9;
pub const POLE_TOL: f64 = 1e-4;
pub const ORDER_RATIO: f64 = 12.0;

fn order_claim(id: &str) -> Result<Check, String> {
    let r = flow::order_study(&[8, 16, 32, 64]).map_err(e)?;
    let ratios: Vec<f64> = r.windows(2).map(|w| w[0].error4 / w[1].error4).collect();
    let ok = ratios.iter().all(|&x| x >= ORDER_RATIO);
    Ok(verdict(id, ok, format!("step halving divides the fourth-order error by {ratios:.1?}"), format!("{ratios:?}")))
}

fn drift_claim(id: &str, sys: &str, integral: &str, seed: u64) -> Result<Check, String> {
    let (d, i0) = flow::drift_study(sys, integral, seed, DRIFT_RTOL).map_err(e)?;
    let rel = d / i0.max(f64::MIN_POSITIVE);
    Ok(verdict(id, rel <= DRIFT_BOUND, format!("relative drift {rel:.2e} at rtol {DRIFT_RTOL:e}"), format!("{rel:e}")))
}

fn dh_endpoint(id: &str) -> Result<Check, String> {
    let s = catalog::get_system("darboux-halphen", &[]).map_err(e)?;
    let one = CScalar::new(1.0, 0.0);
    let tr = flow::integrate(&s, &[], &[one; 3], &PathSpec::real(0.0, 1.0).map_err(e)?, &IntegratorConfig::default()).map_err(e)?;
    let err = tr.last().state.iter().map(|z| (z - CScalar::new(0.5, 0.0)).norm()).fold(0.0, f64::max);
    Ok(verdict(id, err <= ENDPOINT_TOL && tr.pole.is_none(), format!("|x(1) - 1/2| = {err:.2e}"), format!("{err:e}")))
}

fn dh_pole(id: &str) -> Result<Check, String> {
    let s = catalog::get_system("darboux-halphen", &[]).map_err(e)?;
    let ic = [CScalar::new(-1.0, 0.0); 3];
    let tr = flow::integrate(&s, &[], &ic, &PathSpec::real(0.0, 2.0).map_err(e)?, &IntegratorConfig::default()).map_err(e)?;
    let Some(p) = tr.pole else { return Ok(Check::fail(id, "no pole flag", "none")) };
    let err = (p.estimate - CScalar::new(1.0, 0.0)).norm();
    Ok(verdict(id, err <= POLE_TOL, format!("pole flagged at {:.6} (t0 = 1)", p.estimate.re), format!("{err:e}")))
}

// ---------------------------------------------------------------------------
// Registry.

/// Claim-id prefix for a catalog system name.
fn short_name(sys: &str) -> &str {
    match sys {
        "six-param.system" | "six-param.hamiltonian" => "six-param",
        "three-param.system" => "three-param",
        "chazy.XI3.system" => "xi3",
        "pii.system" => "pii",
        other => other,
    }
}

pub fn claims() -> Vec<Claim> {
    let mut v = vec![
        Claim::new("iii.accessible-points", "singular", "the Chazy III system has six accessible points with the tabulated local indices", true, |_| iii_singular("iii.accessible-points")),
        Claim::new("three-param.accessible-points", "singular", "the three-parameter system has seven accessible points", true, |_| count_check("three-param.accessible-points", "three-param.system", &[], 7)),
        Claim::new("halphen.accessible-points", "singular", "the classical Halphen system with (l, m, n) = (1, 1, 1) has seven accessible points", true, |_| {
            let [a, b, c] = halphen_lmn(1, 1, 1);
            count_check("halphen.accessible-points", "halphen.classic", &[("alpha", a), ("beta", b), ("gamma", c)], 7)
        }),
        Claim::new("halphen4.accessible-points", "singular", "the four-variable Halphen system with all m_i = 1 has fifteen accessible points", true, |_| {
            let z = QuadExt::zero();
            let bind: Vec<(&str, QuadExt)> = ["alpha", "beta", "chi", "delta", "epsilon", "gamma"].iter().map(|n| (*n, z.clone())).collect();
            count_check("halphen4.accessible-points", "halphen.four", &bind, 15)
        }),
        Claim::new("ex1.ratio-condition", "singular", "the first example fails the integer-ratio condition", true, |_| ex1_ratios("ex1.ratio-condition")),
        Claim::new("ex2.ratio-condition", "singular", "the second example with N = 3 satisfies the integer-ratio condition", true, |_| ex2_ratio("ex2.ratio-condition")),
        Claim::new("iii.laurent-coefficients", "series", "Laurent coefficients of the (0, -2, -1) balance", true, |_| laurent_coefficients("iii.laurent-coefficients")),
        Claim::new("iii.free-parameters", "series", "free parameters per balance of the Chazy III system", true, |_| free_counts("iii.free-parameters")),
        Claim::new("iii.v-residues", "series", "residues of the rational third-order equation for v", true, |_| v_residues("iii.v-residues")),
    ];

    for spec in transforms::map_specs() {
        let name = spec.name;
        v.push(Claim::new(name, "maps", spec.claim, spec.holds, move |_| {
            let m = transforms::get_map(name).map_err(e)?;
            transforms::pushforward_check(&m).map_err(e)
        }));
        if !spec.inverse.is_empty() {
            let id = format!("{name}.round-trip");
            v.push(Claim::new(id, "maps", format!("{name} composed with its inverse is the identity"), true, move |_| {
                let m = transforms::get_map(name).map_err(e)?;
                transforms::round_trip_check(&m).map_err(e)
            }));
        }
        if name.ends_with(".g0") || name.ends_with(".g1") {
            let id = format!("{name}.series");
            v.push(Claim::new(id, "maps", format!("{name} checked on Taylor series"), spec.holds, move |seed| {
                let m = transforms::get_map(name).map_err(e)?;
                transforms::bt_check(&m, BtMode::Series, seed).map_err(e)
            }));
        }
    }

    for r in transforms::relation_specs() {
        let name = r.name;
        v.push(Claim::new(name, "relations", r.claim, r.holds, move |_| transforms::relation_check(transforms::get_relation(name).map_err(e)?).map_err(e)));
    }

    for name in transforms::SUITES {
        let id = format!("{name}.charts");
        let statement = transforms::chart_suite(name).map(|s| s.claim).unwrap_or_default();
        v.push(Claim::new(id, "charts", statement, true, move |_| transforms::suite_check(&transforms::chart_suite(name).map_err(e)?).map_err(e)));
    }
    v.push(Claim::new("chazy-i.mutated-rule", "charts", "the Chazy I chart is polynomial only under the coefficient relations", false, |_| {
        let suite = transforms::chart_suite("chazy-i").map_err(e)?;
        let r = holomorphy_check(&transforms::chazy_i_mutated().map_err(e)?, &suite.charts).map_err(e)?;
        Ok(verdict("chazy-i.mutated-rule", r.iter().all(|r| r.polynomial), "chart field with A1' = 6 A0^2 + 1", "non-polynomial"))
    }));
    v.push(Claim::new("chazy-x.recovered-field", "charts", "the Chazy X system is the unique weighted field polynomial in its charts", true, |_| {
        let suite = transforms::chart_suite("chazy-x").map_err(e)?;
        let s = &suite.systems[0];
        let basis = recover_field(s, &[1, 2, 3], &[("alpha", 2)], &[2, 3, 4], &suite.charts).map_err(e)?;
        if basis.len() != 1 {
            return Ok(Check::fail("chazy-x.recovered-field", "solution space is not one-dimensional", basis.len().to_string()));
        }
        let k = s.field[0].try_div(&basis[0][0]).map_err(e)?.tidy();
        let ok = k.to_poly().is_some_and(|p| p.is_constant()) && basis[0].iter().zip(&s.field).all(|(g, f)| g.try_mul(&k).is_ok_and(|g| g.equals(f)));
        Ok(verdict("chazy-x.recovered-field", ok, "one-dimensional solution space spanned by the Chazy X field", k.to_string()))
    }));

    for (sys, i) in transforms::FIRST_INTEGRALS {
        let id = format!("{}.first-integral", short_name(sys));
        v.push(Claim::new(id, "structure", format!("{i} is a first integral of {sys}"), true, move |_| {
            let s = catalog::get_system(sys, &[]).map_err(e)?;
            transforms::first_integral_check(&s, &parse(&s.vars, i).map_err(e)?).map_err(e)
        }));
    }
    for (sys, h) in transforms::HAMILTONIANS {
        let id = format!("{}.hamiltonian", short_name(sys));
        v.push(Claim::new(id, "structure", format!("{sys} is Hamiltonian"), true, move |_| {
            let s = catalog::get_system(sys, &[]).map_err(e)?;
            transforms::hamiltonian_check(&s, &parse(&s.vars, h).map_err(e)?).map_err(e)
        }));
    }
    for (id, pf) in [("ix.compatibility", "chazy.IX.pde"), ("ix.compatibility-transformed", "chazy.IX.pde-transformed")] {
        v.push(Claim::new(id, "structure", format!("the t and s flows of {pf} commute"), true, move |_| Ok(transforms::compatibility_check(&catalog::get_pfaffian(pf, &[]).map_err(e)?))));
    }
    v.push(Claim::new("ix.pde-identity", "structure", "u_ttt - u_s = 54 u^2 u_t + 9 u_t^2 + 9/2 u u_tt", true, |_| transforms::jet_pde_identity().map_err(e)));
    for el in transforms::elimination_specs() {
        let name = el.name;
        v.push(Claim::new(name, "structure", el.claim, true, move |seed| transforms::elimination_check(transforms::get_elimination(name).map_err(e)?, 3, 8, seed).map_err(e)));
    }

    for a in flow::ansatz_fixtures() {
        let name = a.name.clone();
        v.push(Claim::new(a.name.clone(), "solutions", a.claim.clone(), a.holds, move |seed| flow::ansatz_check(&flow::get_ansatz(&name).ok_or("unknown solution")?, seed).map_err(e)));
    }
    v.push(Claim::new("viii.riccati", "solutions", "the special solution reduces to a Riccati equation linearized by x = -X'/X", true, |_| flow::riccati_check("1").map_err(e)));

    v.push(Claim::new("flow.order", "numerics", "fixed-step order study on x' = x^2", true, |_| order_claim("flow.order")));
    v.push(Claim::new("flow.drift-six", "numerics", "first-integral drift of the six-parameter system", true, |seed| {
        drift_claim("flow.drift-six", transforms::FIRST_INTEGRALS[0].0, transforms::FIRST_INTEGRALS[0].1, seed)
    }));
    v.push(Claim::new("flow.drift-xi3", "numerics", "first-integral drift of the Chazy XI (N = 3) system", true, |seed| {
        drift_claim("flow.drift-xi3", transforms::FIRST_INTEGRALS[2].0, transforms::FIRST_INTEGRALS[2].1, seed)
    }));
    v.push(Claim::new("flow.dh-endpoint", "numerics", "Darboux-Halphen x = y = z = 1/(t + 1) reaches 1/2 at t = 1", true, |_| dh_endpoint("flow.dh-endpoint")));
    v.push(Claim::new("flow.dh-pole", "numerics", "the pole of x = y = z = 1/(t - 1) is located", true, |_| dh_pole("flow.dh-pole")));
    v
}

pub fn claim_ids() -> Vec<String> {
    claims().into_iter().map(|c| c.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_ids_are_unique() {
        let ids = claim_ids();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        assert!(ids.len() > 100);
    }

    #[test]
    fn halphen_integer_family() {
        assert_eq!(halphen_lmn(1, 1, 1), [q(0), q(0), q(0)]);
        // l = 2: alpha = beta = (1/4 - 1)/8, gamma = (-1/4 + 1)/8.
        let [a, b, c] = halphen_lmn(2, 1, 1);
        assert_eq!((a.clone(), b, c), (QuadExt::frac(-3, 32), QuadExt::frac(-3, 32), QuadExt::frac(3, 32)));
    }

    #[test]
    fn filter_skips_and_errors_fail() {
        let cs = vec![
            Claim::new("a", "g", "ok", true, |_| Ok(Check::pass("a", "fine"))),
            Claim::new("b", "g", "error", true, |_| Err("boom".into())),
            Claim::new("c", "h", "panics", true, |_| panic!("bad")),
            Claim::new("d", "h", "probe", false, |_| Ok(Check::fail("d", "printed form fails", "w"))),
        ];
        let all = run(&cs, 0, None);
        let st: Vec<Status> = all.entries.iter().map(|e| e.status).collect();
        assert_eq!(st, [Status::Pass, Status::Fail, Status::Fail, Status::Pass]);
        let only_h = |c: &Claim| c.group == "h";
        let r = run(&cs, 0, Some(&only_h));
        assert_eq!(r.entries[0].status, Status::Skipped);
        assert_eq!(r.count(Status::Skipped), 2);
        assert_eq!(r.to_json(false)["summary"]["skipped"], 2);
    }

    #[test]
    fn json_is_deterministic_without_timings() {
        let cs: Vec<Claim> = claims().into_iter().filter(|c| c.group == "relations").collect();
        let a = serde_json::to_string(&run(&cs, 3, None).to_json(false)).unwrap();
        let b = serde_json::to_string(&run(&cs, 3, None).to_json(false)).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("elapsed_ms"));
    }
}
