use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use tracenorm::census::{run_census, CensusOptions};
use tracenorm::linearized::is_normal;
use tracenorm::polyq::factor;
use tracenorm::{build_context, FieldSpec, PolyQ};

fn field_mul(c: &mut Criterion) {
    let ctx = build_context(&FieldSpec::new(2, 1, 15)).unwrap();
    let a = ctx.decode(12345).unwrap();
    let b = ctx.decode(22222).unwrap();
    c.bench_function("mul F_2^15", |bench| bench.iter(|| ctx.mul(black_box(&a), black_box(&b))));
    let ctx = build_context(&FieldSpec::new(5, 2, 4)).unwrap();
    let a = ctx.decode(123456).unwrap();
    let b = ctx.decode(54321).unwrap();
    c.bench_function("mul F_25^4", |bench| bench.iter(|| ctx.mul(black_box(&a), black_box(&b))));
}

fn factoring(c: &mut Criterion) {
    let ctx = build_context(&FieldSpec::new(3, 1, 2)).unwrap();
    for m in [60usize, 210] {
        let f = PolyQ::x_pow_minus_one(&ctx.base, m);
        c.bench_function(&format!("factor x^{m}-1 over F_3"), |bench| {
            bench.iter_batched(|| f.clone(), |f| factor(&ctx, &f).unwrap(), BatchSize::SmallInput)
        });
    }
}

fn normality(c: &mut Criterion) {
    let ctx = build_context(&FieldSpec::new(2, 1, 12)).unwrap();
    let b = ctx.decode(1234).unwrap();
    c.bench_function("is_normal F_2^12", |bench| bench.iter(|| is_normal(&ctx, black_box(&b), 12).unwrap()));
}

fn census(c: &mut Criterion) {
    let ctx = build_context(&FieldSpec::new(2, 1, 15)).unwrap();
    let opts = CensusOptions::default();
    let mut g = c.benchmark_group("census");
    g.sample_size(10);
    g.bench_function("F_2^15 d=3,5", |bench| bench.iter(|| run_census(&ctx, &[3, 5], &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, field_mul, factoring, normality, census);
criterion_main!(benches);
