use criterion::{black_box, criterion_group, criterion_main, Criterion};

use chazy_core::catalog;
use chazy_core::exact::{CScalar, QuadExt};
use chazy_core::flow::{self, IntegratorConfig, PathSpec};
use chazy_core::geometry::analyze_singular;
use chazy_core::ledger;
use chazy_core::series::{dominant_balances, laurent_extend, FreeValue};
use chazy_core::solve::SolveOptions;
use chazy_core::transforms::{self, BtMode};

fn singular(c: &mut Criterion) {
    let s = catalog::get_system("chazy.III.system", &[]).unwrap();
    c.bench_function("analyze_singular/chazy-iii", |b| b.iter(|| analyze_singular(black_box(&s), &SolveOptions::default()).unwrap()));
}

fn laurent(c: &mut Criterion) {
    let s = catalog::get_system("chazy.III.system", &[]).unwrap();
    let t0 = QuadExt::zero();
    let bal = dominant_balances(&s, 6, &t0).unwrap().into_iter().find(|b| b.leading == [0, -2, -1].map(QuadExt::int).to_vec()).unwrap();
    c.bench_function("laurent_extend/chazy-iii-12", |b| b.iter(|| laurent_extend(&s, black_box(&bal), &t0, &[FreeValue::new(0, 2, QuadExt::int(1))], 12).unwrap()));
}

fn maps(c: &mut Criterion) {
    let g0 = transforms::get_map("ix.g0").unwrap();
    let mut g = c.benchmark_group("backlund");
    g.sample_size(10);
    g.bench_function("ix.g0/exact", |b| b.iter(|| transforms::bt_check(black_box(&g0), BtMode::ExactJet, 0).unwrap()));
    g.bench_function("ix.g0/series", |b| b.iter(|| transforms::bt_check(black_box(&g0), BtMode::Series, 0).unwrap()));
    g.finish();
    let w = transforms::get_relation("weyl.pi-cubed").unwrap();
    c.bench_function("relation/weyl.pi-cubed", |b| b.iter(|| transforms::relation_check(black_box(w)).unwrap()));
}

fn integrate(c: &mut Criterion) {
    let s = catalog::get_system("darboux-halphen", &[]).unwrap();
    let path = PathSpec::real(0.0, 1.0).unwrap();
    let ic = [CScalar::new(1.0, 0.0); 3];
    c.bench_function("integrate/darboux-halphen", |b| b.iter(|| flow::integrate(&s, &[], black_box(&ic), &path, &IntegratorConfig::default()).unwrap()));
}

fn full_ledger(c: &mut Criterion) {
    let mut g = c.benchmark_group("ledger");
    g.sample_size(10);
    g.bench_function("all", |b| b.iter(|| ledger::run_all(black_box(0))));
    g.finish();
}

criterion_group!(benches, singular, laurent, maps, integrate, full_ledger);
criterion_main!(benches);
