use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use pfperiods_bench::prepared;
use pfperiods_core::recognition::default_height_bound;
use pfperiods_core::*;
use rug::Rational;

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("series");
    g.sample_size(10);
    for (n, k) in [(1u32, 1000usize), (4, 500), (12, 300)] {
        let op = build_operator(i64::from(n)).unwrap();
        g.bench_with_input(BenchmarkId::new(format!("n{n}"), k), &k, |b, &k| b.iter(|| frobenius_series(&op, k).unwrap()));
    }
    g.finish();
}

fn monodromy(c: &mut Criterion) {
    let mut g = c.benchmark_group("monodromy");
    g.sample_size(10);
    for (n, d) in [(1u32, 100u32), (4, 50)] {
        let (op, sol, ctx, spec) = prepared(n, d);
        g.bench_function(format!("n{n}-D{d}"), |b| b.iter(|| loop_monodromy(&op, &sol, &spec, &ctx).unwrap()));
    }
    g.finish();
}

fn recognition(c: &mut Criterion) {
    let mut g = c.benchmark_group("recognition");
    let ctx = PrecisionContext::new(100);
    let h = default_height_bound();
    // -420 ζ(3)/(2πi)^3 + 7/3 in the weight-3 basis of n = 4
    let target = ZetaExpr::term(Monomial::zeta(3), Rational::from(-420)).add(&ZetaExpr::constant(Rational::from((7, 3))));
    let x = Measured::of_expr(&target, 4, &ctx);
    let basis = build_weight_basis(4, 3, &ctx);
    g.bench_function("weight3-n4-D100", |b| b.iter(|| recognize_in_basis(black_box(&x), &basis, &ctx, &h).unwrap()));
    let q = Measured::of_expr(&ZetaExpr::constant(Rational::from((785982560, 3))), 12, &ctx);
    g.bench_function("rational-D100", |b| b.iter(|| recognize_rational(black_box(&q), &ctx, &h)));
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    let op = build_operator(6).unwrap();
    let sol = frobenius_series(&op, 50).unwrap();
    let cfg = PipelineConfig::new(60);
    g.bench_function("n6-D60", |b| {
        b.iter(|| {
            let mut s = sol.clone();
            run_pipeline(&op, &mut s, &cfg).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, series, monodromy, recognition, pipeline);
criterion_main!(benches);
