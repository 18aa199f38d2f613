//! Invariants checked pointwise at random rational points.

use std::sync::OnceLock;

use proptest::prelude::*;

use chazy_core::catalog;
use chazy_core::exact::{CScalar, QuadExt};
use chazy_core::flow::{self, IntegratorConfig, PathSpec};
use chazy_core::ledger;
use chazy_core::series::{dominant_balances, laurent_extend, series_residual, FreeValue};
use chazy_core::transforms::{self, BiMap, Composite};

fn maps() -> &'static Vec<BiMap> {
    static M: OnceLock<Vec<BiMap>> = OnceLock::new();
    M.get_or_init(|| transforms::map_names().into_iter().map(|n| transforms::get_map(n).unwrap()).collect())
}

fn rationals() -> impl Strategy<Value = Vec<QuadExt>> {
    prop::collection::vec((-9i64..=9, 1i64..=5).prop_map(|(n, d)| QuadExt::frac(n, d)), 16)
}

/// Source point: every variable of the source table gets a value.
fn source_point(m: &BiMap, vals: &[QuadExt]) -> Vec<QuadExt> {
    (0..m.source.vars().len()).map(|i| vals[i % vals.len()].clone()).collect()
}

/// Image of a source point in the target table: state from `forward`,
/// parameters from the action, time unchanged.
fn image(m: &BiMap, x: &[QuadExt]) -> Option<Vec<QuadExt>> {
    let tv = m.target.vars();
    let mut y = vec![QuadExt::zero(); tv.len()];
    for (&i, f) in m.target.system.state.iter().zip(&m.forward) {
        y[i] = f.eval(x).ok()?;
    }
    for (name, f) in &m.action {
        y[tv.idx(name)] = f.eval(x).ok()?;
    }
    if let (Some(ts), Some(tt)) = (m.source.system.time, m.target.system.time) {
        y[tt] = x[ts].clone();
    }
    Some(y)
}

/// Composable pairs with a parameter action, excluding the costly
/// compositions of two large prolonged maps.
fn composable_pairs() -> &'static Vec<(&'static BiMap, &'static BiMap, Composite)> {
    static P: OnceLock<Vec<(&'static BiMap, &'static BiMap, Composite)>> = OnceLock::new();
    P.get_or_init(|| {
        let mut out = Vec::new();
        for a in maps() {
            for b in maps() {
                if b.source.name == a.target.name && b.source.param_names() == a.target.param_names() && !a.action.is_empty() && a.size() + b.size() <= 100 {
                    out.push((a, b, transforms::compose_word(&[a.clone(), b.clone()]).unwrap()));
                }
            }
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn inverses_undo_their_maps(k in 0usize..1000, vals in rationals()) {
        let with_inverse: Vec<&BiMap> = maps().iter().filter(|m| m.inverse.is_some() && m.time_scale.is_none()).collect();
        let m = with_inverse[k % with_inverse.len()];
        let x = source_point(m, &vals);
        let y = image(m, &x);
        prop_assume!(y.is_some());
        let y = y.unwrap();
        for (&i, g) in m.source.system.state.iter().zip(m.inverse.as_ref().unwrap()) {
            let back = g.eval(&y);
            prop_assume!(back.is_ok());
            prop_assert_eq!(back.unwrap(), x[i].clone(), "{} component {}", m.name, i);
        }
    }

    #[test]
    fn parameter_actions_compose(k in 0usize..1000, vals in rationals()) {
        let (a, b, c) = &composable_pairs()[k % composable_pairs().len()];
        let x = source_point(a, &vals);
        let y = image(a, &x);
        prop_assume!(y.is_some());
        let y = y.unwrap();
        for (name, f) in &c.params {
            let direct = f.eval(&x);
            let stepwise = b.action.iter().find(|(n, _)| n == name).unwrap().1.eval(&y);
            prop_assume!(direct.is_ok() && stepwise.is_ok());
            prop_assert_eq!(direct.unwrap(), stepwise.unwrap(), "{} then {}: {}", a.name, b.name, name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn laurent_family_solves_the_system(n in -20i64..=20, d in 1i64..=7) {
        let s = catalog::get_system("chazy.III.system", &[]).unwrap();
        let t0 = QuadExt::frac(n, d);
        let b = dominant_balances(&s, 6, &t0).unwrap().into_iter().find(|b| b.leading == [0, -2, -1].map(QuadExt::int).to_vec()).unwrap();
        let sol = laurent_extend(&s, &b, &t0, &[FreeValue::new(0, 2, QuadExt::frac(d, 3))], 7).unwrap();
        prop_assert_eq!(sol.free_count(), 1);
        prop_assert!(series_residual(&sol, &s).unwrap().exact_zero);
    }

    #[test]
    fn conjugate_paths_give_conjugate_trajectories(x in -0.9f64..0.9, y in -0.9f64..0.9, z in -0.9f64..0.9) {
        let s = catalog::get_system("darboux-halphen", &[]).unwrap();
        let ic = [CScalar::new(x, 0.0), CScalar::new(y, 0.0), CScalar::new(z, 0.0)];
        let p = PathSpec::new(vec![CScalar::new(0.0, 0.0), CScalar::new(0.3, 0.4), CScalar::new(0.6, 0.0)]).unwrap();
        let cfg = IntegratorConfig::default();
        let a = flow::integrate(&s, &[], &ic, &p, &cfg).unwrap();
        let b = flow::integrate(&s, &[], &ic, &p.conj(), &cfg).unwrap();
        for (u, v) in a.last().state.iter().zip(&b.last().state) {
            prop_assert!((u.conj() - v).norm() <= 1e-12 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn ledger_is_deterministic_per_seed(seed in 0u64..1_000_000) {
        let cs: Vec<_> = ledger::claims().into_iter().filter(|c| c.group == "solutions").collect();
        let a = ledger::run(&cs, seed, None).to_json(false);
        let b = ledger::run(&cs, seed, None).to_json(false);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a["summary"]["fail"].as_u64(), Some(0));
    }
}
