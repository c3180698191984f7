use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stickychase::chase::classic_chase;
use stickychase::classes::{classify, SelectionFunction};
use stickychase::magic::{magicd_plus, DefaultSips};
use stickychase::qa::{qchase, schqa};
use stickychase_bench::{large_random, magic_family, magic_query, sticky_chain, sticky_chain_query, tc_chain};

fn query_chase(c: &mut Criterion) {
    let mut g = c.benchmark_group("query_chase");
    let q = sticky_chain_query();
    for n in [10, 50, 200] {
        let p = sticky_chain(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| schqa(p, &q, &SelectionFunction::Bottom, false).unwrap())
        });
    }
    g.finish();
}

fn classic(c: &mut Criterion) {
    let mut g = c.benchmark_group("classic_chase");
    for n in [10, 30, 60] {
        let p = tc_chain(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| classic_chase(p, 100_000)));
    }
    g.finish();
}

fn classification(c: &mut Criterion) {
    let mut g = c.benchmark_group("classify");
    g.sample_size(10);
    for n in [100, 500, 1500] {
        let p = large_random(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| classify(&p.rules)));
    }
    g.finish();
}

fn magic(c: &mut Criterion) {
    let mut g = c.benchmark_group("magic");
    let q = magic_query();
    for n in [10, 50, 200] {
        let p = magic_family(n);
        g.bench_with_input(BenchmarkId::new("rewrite", n), &p, |b, p| {
            b.iter(|| magicd_plus(p, &q, &DefaultSips).unwrap())
        });
        let (m, _) = magicd_plus(&p, &q, &DefaultSips).unwrap();
        g.bench_with_input(BenchmarkId::new("rewritten_chase", n), &m, |b, m| {
            b.iter(|| qchase(&m.program, &m.query, &SelectionFunction::Exists).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("direct_chase", n), &p, |b, p| {
            b.iter(|| qchase(p, &q, &SelectionFunction::Exists).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, query_chase, classic, classification, magic);
criterion_main!(benches);
