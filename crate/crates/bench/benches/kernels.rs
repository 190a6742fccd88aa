use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use polyreg_bench::{denoising_problem, mri_problem};
use polyreg_core::geometry::{approximate_ball, extreme_points, facets_from_vertices, l1_linf_witness, synthesis_norm, BallTarget};
use polyreg_core::operators::{project_l1_ball, prox_linf, soft_threshold};
use polyreg_core::rng::SeededRng;
use polyreg_core::{solve, Algorithm, Image, SolverConfig, TightFrame};

fn geometry(c: &mut Criterion) {
    let mut g = c.benchmark_group("geometry");
    for d in [4, 8] {
        let (_, v) = l1_linf_witness(d).unwrap();
        let x = SeededRng::new(1).normal_vec(d);
        g.bench_with_input(BenchmarkId::new("synthesis_norm_witness", d), &d, |b, _| {
            b.iter(|| synthesis_norm(&v, black_box(&x)).unwrap())
        });
    }
    let ball = approximate_ball(3, 64, BallTarget::L2, 0).unwrap();
    g.bench_function("extreme_points_d3_n64", |b| b.iter(|| extreme_points(black_box(&ball), 1e-9).unwrap()));
    g.bench_function("facets_d3_n64", |b| b.iter(|| facets_from_vertices(black_box(&ball)).unwrap()));
    g.finish();
}

fn prox(c: &mut Criterion) {
    let mut g = c.benchmark_group("prox");
    let z = SeededRng::new(2).normal_vec(4096);
    let t = vec![0.5; 4096];
    g.bench_function("soft_threshold_4096", |b| b.iter(|| soft_threshold(black_box(&z), &t, 1.0).unwrap()));
    g.bench_function("project_l1_ball_4096", |b| b.iter(|| project_l1_ball(black_box(&z), 10.0).unwrap()));
    g.bench_function("prox_linf_4096", |b| b.iter(|| prox_linf(black_box(&z), 10.0).unwrap()));
    g.finish();
}

fn frames(c: &mut Criterion) {
    let mut g = c.benchmark_group("frame");
    let s = Image::new(128, 128, SeededRng::new(3).normal_vec(128 * 128)).unwrap();
    for name in ["haar2", "dct3"] {
        let f = TightFrame::preset(name).unwrap();
        g.bench_function(format!("analyze_synthesize_{name}_128"), |b| {
            b.iter(|| f.synthesize(&f.analyze(black_box(&s))).unwrap())
        });
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solvers");
    g.sample_size(10);
    let p = denoising_problem(64, 0.1).unwrap();
    for alg in [Algorithm::Drs, Algorithm::Pdhg, Algorithm::Fista] {
        let cfg = SolverConfig::new(alg, 1e-5, 5000);
        g.bench_function(format!("denoise_64_{alg:?}").to_lowercase(), |b| b.iter(|| solve(&p, &cfg).unwrap()));
    }
    let (p, _) = mri_problem(64, 30, 1e-3).unwrap();
    let cfg = SolverConfig::new(Algorithm::Drs, 1e-5, 20_000);
    g.bench_function("mri_64_radial30_drs", |b| b.iter(|| solve(&p, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, geometry, prox, frames, solvers);
criterion_main!(benches);
