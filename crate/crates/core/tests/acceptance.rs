//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 4 and 6 each contain one printed statement that does not hold
//! (the g1 action with -2+sqrt(3), and pi^4 = 1 for the Weyl pi); those lines
//! print FAIL and the test pins the failing set to exactly {4, 6}.

use std::collections::BTreeSet;

use chazy_core::catalog;
use chazy_core::exact::{CScalar, QuadExt};
use chazy_core::flow::{self, IntegratorConfig, PathSpec};
use chazy_core::geometry::analyze_singular;
use chazy_core::ledger::{self, halphen_lmn, Claim};
use chazy_core::series::{dominant_balances, laurent_extend, scalar_balances, FreeValue};
use chazy_core::solve::SolveOptions;

const ORDER_RATIO_MIN: f64 = 12.0;
const DRIFT_REL_MAX: f64 = 1e-8;
const DRIFT_RTOL: f64 = 1e-10;
const ENDPOINT_TOL: f64 = 1e-9;
const NUMERIC_RESIDUAL_MAX: f64 = 1e-10;

fn q(n: i64) -> QuadExt {
    QuadExt::int(n)
}

struct Outcome {
    ok: bool,
    note: String,
}

fn outcome(ok: bool, note: impl Into<String>) -> Outcome {
    Outcome { ok, note: note.into() }
}

fn count(name: &str, bind: &[(&str, QuadExt)]) -> usize {
    let s = catalog::get_system(name, bind).unwrap();
    analyze_singular(&s, &SolveOptions::default()).unwrap().len()
}

fn singularity_tables() -> Outcome {
    let s = catalog::get_system("chazy.III.system", &[]).unwrap();
    let pts = analyze_singular(&s, &SolveOptions::default()).unwrap();
    let rows: [[i64; 3]; 5] = [[-1, 3, 2], [2, 1, 1], [1, 2, 1], [0, 12, -12], [3, 1, -2]];
    let rows_ok = rows.iter().all(|r| pts.iter().any(|p| p.index.as_ref().is_some_and(|i| i.matches_up_to_scale(&r.map(q)))));
    let [a, b, c] = halphen_lmn(1, 1, 1);
    let counts = [
        pts.len(),
        count("three-param.system", &[]),
        count("halphen.classic", &[("alpha", a), ("beta", b), ("gamma", c)]),
        count("halphen.four", &["alpha", "beta", "chi", "delta", "epsilon", "gamma"].map(|n| (n, q(0)))),
    ];
    outcome(rows_ok && counts == [6, 7, 7, 15], format!("point counts {counts:?}, table rows matched: {rows_ok}"))
}

fn claims_hold(ids: &[&str], seed: u64) -> Outcome {
    let all = ledger::claims();
    let picked: Vec<Claim> = ids.iter().map(|id| all.iter().find(|c| c.id == *id).unwrap_or_else(|| panic!("unknown claim {id}")).clone()).collect();
    let failing: Vec<&str> = picked.iter().filter(|c| !c.check(seed).ok).map(|c| c.id.as_str()).collect();
    outcome(failing.is_empty(), if failing.is_empty() { format!("{} claims hold", ids.len()) } else { format!("not holding: {failing:?}") })
}

fn non_integrable_detection() -> Outcome {
    claims_hold(&["ex1.ratio-condition", "ex2.ratio-condition"], 0)
}

fn laurent_regression() -> Outcome {
    let s = catalog::get_system("chazy.III.system", &[]).unwrap();
    let bals = dominant_balances(&s, 6, &q(0)).unwrap();
    let find = |lead: [i64; 3]| bals.iter().find(|b| b.leading == lead.map(q).to_vec()).unwrap().clone();
    let sol = laurent_extend(&s, &find([0, -2, -1]), &q(0), &[FreeValue::new(0, 2, q(1))], 6).unwrap();
    let coeffs_ok = sol.coeff(1, 2) == Some(QuadExt::frac(17, 5)) && sol.coeff(1, 5) == Some(QuadExt::frac(-44, 175)) && sol.coeff(2, 5) == Some(QuadExt::frac(172, 35));
    let frees: Vec<usize> = [[-1, 0, 0], [0, -1, 0], [0, 0, -1], [0, -2, -1]].iter().map(|l| laurent_extend(&s, &find(*l), &q(0), &[], 8).unwrap().free_count()).collect();
    let ode = catalog::get_scalar("chazy.III.v", &[]).unwrap();
    let res: BTreeSet<String> = scalar_balances(&ode, 3).unwrap().iter().filter(|b| b.pole_order == 1).map(|b| b.residue.to_string()).collect();
    let want: BTreeSet<String> = ["-1", "-2", "1"].map(String::from).into();
    outcome(coeffs_ok && frees == [0, 2, 2, 1] && res == want, format!("coefficients exact: {coeffs_ok}, free counts {frees:?}, residues {res:?}"))
}

fn transformation_ledger() -> Outcome {
    claims_hold(
        &[
            "iii.to-system", "iii.to-xyz", "ix.phi0", "ix.s0", "ix.phi1", "ix.pi", "ix.s1", "ix.phi2", "ix.g0", "ix.g1", "ix.square-g0", "ix.square-g1",
            "x.phi0", "x.s0", "x.phi1", "x.pi", "x.s1", "x.phi2", "x.g0", "x.g1", "x.square-g0", "x.square-g1",
            // The printed g1 action alpha -> (-2+sqrt(3)) alpha.
            "x.g1-printed-action",
            "viii.phi0", "viii.s0", "viii.s1", "viii.phi", "viii.pi", "viii.pi-word", "viii.s0-auto", "viii.s1-auto",
            "dh.to-chazy-iii", "ix.pde-to-jet.t", "ix.pde-to-jet.s",
        ],
        0,
    )
    .and(claims_fail(&["viii.s0-auto-symbolic", "viii.s1-auto-symbolic"]))
}

fn claims_fail(ids: &[&str]) -> Outcome {
    let all = ledger::claims();
    let holding: Vec<&str> = ids.iter().copied().filter(|id| all.iter().find(|c| c.id == *id).unwrap().check(0).ok).collect();
    outcome(holding.is_empty(), format!("failure probes holding: {holding:?}"))
}

impl Outcome {
    fn and(self, other: Outcome) -> Outcome {
        outcome(self.ok && other.ok, format!("{}; {}", self.note, other.note))
    }
}

fn holomorphy_charts() -> Outcome {
    claims_hold(
        &["chazy-iii.charts", "chazy-ix.charts", "chazy-x.charts", "chazy-x.recovered-field", "chazy-i.charts", "chazy-viii.charts", "six-param.charts", "three-param.charts", "chazy-xi3.charts", "a2-weyl.charts"],
        0,
    )
    .and(claims_fail(&["chazy-i.mutated-rule"]))
}

fn conservation_structure() -> Outcome {
    claims_hold(
        &[
            "six-param.first-integral", "three-param.first-integral", "xi3.first-integral", "pii.hamiltonian", "six-param.hamiltonian",
            "ix.compatibility", "ix.compatibility-transformed", "weyl.w0-squared", "weyl.w1-squared", "weyl.w2-squared",
            // The printed pi^4 = 1 for the Weyl pi.
            "weyl.pi-fourth",
            "dh.pi-cubed",
        ],
        0,
    )
}

fn closed_form_solutions() -> Outcome {
    let ids = [
        "iii.tanh", "x.rational-zero", "x.rational", "viii.rational", "xi3.rational-1", "xi3.rational-2", "halphen.rational", "halphen4.rational", "dh.rational-1",
        "ix.travelling-wave", "x.tan", "x.tanh", "iii.ssss1", "six.reduction", "xi3.autopiv",
    ];
    let mut worst = 0.0f64;
    for name in ["ix.travelling-wave", "x.tan", "x.tanh"] {
        if let Ok(flow::AnsatzResidual::Numeric { max, scale }) = flow::ansatz_residual(&flow::get_ansatz(name).unwrap(), 0) {
            worst = worst.max(max / scale.max(1.0));
        } else {
            return outcome(false, format!("{name} did not give a numeric residual"));
        }
    }
    claims_hold(&ids, 0).and(outcome(worst <= NUMERIC_RESIDUAL_MAX, format!("worst numeric residual {worst:.1e}")))
}

fn numerics() -> Outcome {
    let r = flow::order_study(&[8, 16, 32, 64]).unwrap();
    let ratios: Vec<f64> = r.windows(2).map(|w| w[0].error4 / w[1].error4).collect();
    let order_ok = ratios.iter().all(|&x| x >= ORDER_RATIO_MIN);

    let mut drift = 0.0f64;
    for (sys, i) in [chazy_core::transforms::FIRST_INTEGRALS[0], chazy_core::transforms::FIRST_INTEGRALS[2]] {
        for seed in 0..4 {
            let (d, i0) = flow::drift_study(sys, i, seed, DRIFT_RTOL).unwrap();
            drift = drift.max(d / i0);
        }
    }

    let dh = catalog::get_system("darboux-halphen", &[]).unwrap();
    let tr = flow::integrate(&dh, &[], &[CScalar::new(1.0, 0.0); 3], &PathSpec::real(0.0, 1.0).unwrap(), &IntegratorConfig::default()).unwrap();
    let end = tr.last().state.iter().map(|z| (z - CScalar::new(0.5, 0.0)).norm()).fold(0.0, f64::max);

    outcome(
        order_ok && drift <= DRIFT_REL_MAX && end <= ENDPOINT_TOL,
        format!("order ratios {ratios:.1?}, relative drift {drift:.1e}, endpoint error {end:.1e}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("singularity tables", singularity_tables),
        ("non-integrable detection", non_integrable_detection),
        ("Laurent regression", laurent_regression),
        ("transformation ledger", transformation_ledger),
        ("holomorphy and charts", holomorphy_charts),
        ("conservation and structure", conservation_structure),
        ("closed-form solutions", closed_form_solutions),
        ("numerics", numerics),
    ];
    let mut failing = BTreeSet::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("{} criterion {} ({name}): {}", if o.ok { "PASS" } else { "FAIL" }, k + 1, o.note);
        if !o.ok {
            failing.insert(k + 1);
        }
    }
    assert_eq!(failing, BTreeSet::from([4, 6]));
}
