//! `polyreg selftest`: invariant suite with a JSON pass/fail report.

use crate::config::{resolve, OutDir};
use crate::error::{CliError, CliResult};
use crate::recon::load_frame;
use crate::Globals;
use clap::Args;
use nalgebra::DMatrix;
use polyreg_core::geometry::{
    approximate_ball, extreme_points, facets_from_vertices, l1_linf_witness, measure_equivalence, polygon_epsilon,
    weighted_l1_norm, zonotope_gauge, AnalysisNorm, BallTarget, FacetMatrix, LpNorm, Norm, RegularizationOperator,
    SynthesisNorm, VertexDictionary, WeightedL1Norm, ZonotopeGauge,
};
use polyreg_core::lp::{self, LpStatus, SimplexOptions};
use polyreg_core::models::{make_mask, MaskSpec};
use polyreg_core::operators::{huber_prox, huber_value, project_l1_ball, prox_linf, soft_threshold, ChannelStack};
use polyreg_core::rng::SeededRng;
use polyreg_core::solvers::{check_optimality, drs_solve, fista_range_restricted, pdhg_analysis};
use polyreg_core::{Algorithm, ForwardModel, Image, Problem, SeparablePotential, SolverConfig, TightFrame};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Serialize, Debug)]
pub struct SelftestArgs {
    /// Check this frame (preset name or JSON file) instead of the presets
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    frame: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    pub seed: u64,
    pub frame: Option<String>,
}

/// `Ok(detail)` on success, `Err(reason)` naming the violated invariant.
type GroupResult = Result<String, String>;

struct Ctx {
    seed: u64,
    frames: Result<Vec<(String, TightFrame)>, String>,
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn verdict(ok: bool, detail: String) -> GroupResult {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn norm_axioms(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 1);
    let d = 3;
    let g = DMatrix::from_fn(d, 6, |_, _| rng.normal());
    let l = DMatrix::from_fn(5, d, |_, _| rng.normal());
    let norms: Vec<(&str, Box<dyn Norm>)> = vec![
        ("analysis", Box::new(AnalysisNorm(FacetMatrix::new(g.clone()).map_err(fail)?))),
        ("synthesis", Box::new(SynthesisNorm(VertexDictionary::new(g).map_err(fail)?))),
        ("weighted-l1", Box::new(WeightedL1Norm(RegularizationOperator::new(l.clone()).map_err(fail)?))),
        ("zonotope", Box::new(ZonotopeGauge(RegularizationOperator::new(l).map_err(fail)?))),
    ];
    let mut worst = 0.0f64;
    for (name, n) in &norms {
        if n.eval(&[0.0; 3]).map_err(fail)? != 0.0 {
            return Err(format!("{name}: nonzero value at the origin"));
        }
        for _ in 0..50 {
            let x = rng.normal_vec(d);
            let y = rng.normal_vec(d);
            let a = rng.uniform_range(-3.0, 3.0);
            let nx = n.eval(&x).map_err(fail)?;
            let ny = n.eval(&y).map_err(fail)?;
            if nx.is_nan() || nx <= 0.0 {
                return Err(format!("{name}: value {nx} at nonzero {x:?}"));
            }
            let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
            let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
            let homog = (n.eval(&ax).map_err(fail)? - a.abs() * nx).abs() / (1.0 + nx);
            let tri = n.eval(&xy).map_err(fail)? - nx - ny;
            worst = worst.max(homog).max(tri / (1.0 + nx + ny));
        }
    }
    verdict(worst <= 1e-9, format!("worst homogeneity/triangle violation {worst:.2e}"))
}

fn l1_linf_identities(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 2);
    let mut worst = 0.0f64;
    for d in 2..=5 {
        let (f, v) = l1_linf_witness(d).map_err(fail)?;
        let (an, sy) = (AnalysisNorm(f), SynthesisNorm(v));
        for _ in 0..50 {
            let x = rng.normal_vec(d);
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            let linf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.max((an.eval(&x).map_err(fail)? - l1).abs());
            worst = worst.max((sy.eval(&x).map_err(fail)? - linf).abs());
        }
    }
    verdict(worst <= 1e-9, format!("max deviation {worst:.2e} for d = 2..5"))
}

fn gauge_duality(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 3);
    let mut worst = 0.0f64;
    for d in [2, 3] {
        let g = VertexDictionary::new(DMatrix::from_fn(d, 6, |_, _| rng.normal())).map_err(fail)?;
        let v = extreme_points(&g, 1e-9).map_err(fail)?;
        let f = AnalysisNorm(facets_from_vertices(&v).map_err(fail)?);
        let s = SynthesisNorm(v);
        for _ in 0..100 {
            let x = rng.normal_vec(d);
            let (a, b) = (s.eval(&x).map_err(fail)?, f.eval(&x).map_err(fail)?);
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    verdict(worst <= 1e-8, format!("synthesis vs analysis of the facets: max rel gap {worst:.2e}"))
}

fn reduction(_: &Ctx) -> GroupResult {
    let g = VertexDictionary::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).map_err(fail)?;
    let r = extreme_points(&g, 1e-9).map_err(fail)?;
    verdict(r.len() == 2, format!("{{e1, e2, (0.5, 0.5)}} reduces to {} columns", r.len()))
}

fn zonotope_duality(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 4);
    let (mut excess, mut gap) = (0.0f64, 0.0f64);
    let mut made = 0;
    while made < 50 {
        let d = 1 + rng.below(3);
        let n = d + rng.below(4);
        let Ok(l) = RegularizationOperator::new(DMatrix::from_fn(n, d, |_, _| rng.normal())) else { continue };
        if l.rank() < d {
            continue;
        }
        made += 1;
        let x = rng.normal_vec(d);
        let y = rng.normal_vec(d);
        let lx_norm = weighted_l1_norm(&l, &x).map_err(fail)?;
        excess = excess.max(dot(&x, &y) - lx_norm * zonotope_gauge(&l, &y).map_err(fail)?);
        let lx: Vec<f64> = (0..n).map(|i| dot(&l.row(i), &x)).collect();
        let ystar: Vec<f64> = (0..d).map(|j| (0..n).map(|i| l.matrix()[(i, j)] * lx[i].signum()).sum()).collect();
        let bound = lx_norm * zonotope_gauge(&l, &ystar).map_err(fail)?;
        gap = gap.max((dot(&x, &ystar) - bound).abs() / bound.abs().max(1.0));
    }
    verdict(
        excess <= 1e-9 && gap <= 1e-8,
        format!("Hölder excess {excess:.2e}, sign-witness gap {gap:.2e}"),
    )
}

fn polygon_approximation(c: &Ctx) -> GroupResult {
    let v = approximate_ball(2, 64, BallTarget::L2, c.seed).map_err(fail)?;
    let l2 = LpNorm::new(2, 2.0).map_err(fail)?;
    let rep = measure_equivalence(&SynthesisNorm(v), &l2, 20_000, c.seed).map_err(fail)?;
    let exact = polygon_epsilon(64);
    let rel = (rep.epsilon - exact).abs() / exact;
    verdict(rel <= 0.1, format!("ε(64) = {:.4e} vs analytic {exact:.4e}", rep.epsilon))
}

fn frames(c: &Ctx) -> Result<&[(String, TightFrame)], String> {
    c.frames.as_deref().map_err(|e| e.clone())
}

fn parseval(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 5);
    let mut worst = 0.0f64;
    let list = frames(c)?;
    for (name, f) in list {
        let defect = f.orthogonality_defect();
        if defect > 1e-10 {
            return Err(format!("Parseval invariant violated for {name}: ‖UᵀU − I‖_max = {defect:.2e}"));
        }
        for _ in 0..5 {
            let s = Image::new(16, 16, rng.normal_vec(256)).map_err(fail)?;
            let back = f.synthesize(&f.analyze(&s)).map_err(fail)?;
            worst = worst.max(dist(&back.data, &s.data) / dot(&s.data, &s.data).sqrt());
        }
    }
    let names: Vec<&str> = list.iter().map(|(n, _)| n.as_str()).collect();
    verdict(
        worst <= 1e-10,
        format!("Parseval identity: max ‖TTᵀs − s‖/‖s‖ = {worst:.2e} for {}", names.join(", ")),
    )
}

fn range_projection(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 6);
    let mut worst = 0.0f64;
    for (_, f) in frames(c)? {
        let n = f.n_chan();
        let z = ChannelStack::from_vec(n, 16, 16, rng.normal_vec(n * 256)).map_err(fail)?;
        let w = ChannelStack::from_vec(n, 16, 16, rng.normal_vec(n * 256)).map_err(fail)?;
        let pz = f.range_projection(&z).map_err(fail)?;
        let ppz = f.range_projection(&pz).map_err(fail)?;
        let pw = f.range_projection(&w).map_err(fail)?;
        let nz2 = dot(&z.data, &z.data);
        worst = worst.max(dist(&pz.data, &ppz.data) / nz2.sqrt());
        worst = worst.max((dot(&pz.data, &w.data) - dot(&z.data, &pw.data)).abs() / nz2);
    }
    verdict(worst <= 1e-10, format!("idempotence and symmetry defect {worst:.2e}"))
}

/// Minimizer of `cost` over a square grid: a coarse pass at 1e-2 on `[-4, 4]^d`,
/// then 1e-4 within ±0.02.
fn grid_argmin(d: usize, cost: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let search = |center: &[f64], half: f64, step: f64| -> Vec<f64> {
        let k = (2.0 * half / step).round() as usize;
        let mut best = (f64::INFINITY, center.to_vec());
        let mut idx = vec![0usize; d];
        loop {
            let z: Vec<f64> = idx.iter().zip(center).map(|(&i, c)| c - half + i as f64 * step).collect();
            let v = cost(&z);
            if v < best.0 {
                best = (v, z);
            }
            let mut j = 0;
            while j < d {
                idx[j] += 1;
                if idx[j] <= k {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == d {
                return best.1;
            }
        }
    };
    let coarse = search(&vec![0.0; d], 4.0, 1e-2);
    search(&coarse, 0.02, 1e-4)
}

fn prox_oracles(_: &Ctx) -> GroupResult {
    let sq = |x: &[f64], z: &[f64]| 0.5 * dist(x, z).powi(2);
    let mut worst = 0.0f64;
    for x in [-2.5, -0.3, 0.7, 3.1] {
        let st = soft_threshold(&[x], &[1.0], 0.8).map_err(fail)?[0];
        worst = worst.max((st - grid_argmin(1, &|z| sq(&[x], z) + 0.8 * z[0].abs())[0]).abs());
        let hp = huber_prox(x, 0.7, 0.3);
        worst = worst.max((hp - grid_argmin(1, &|z| sq(&[x], z) + 0.7 * huber_value(z[0], 0.3))[0]).abs());
    }
    for x in [[1.5, -0.4], [-2.0, 2.2], [0.3, 0.1]] {
        let pl = prox_linf(&x, 0.9).map_err(fail)?;
        let linf = |z: &[f64]| z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(dist(&pl, &grid_argmin(2, &|z| sq(&x, z) + 0.9 * linf(z))));
        let pb = project_l1_ball(&x, 1.0).map_err(fail)?;
        let ball = |z: &[f64]| if z[0].abs() + z[1].abs() <= 1.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(dist(&pb, &grid_argmin(2, &|z| sq(&x, z) + ball(z))));
    }
    verdict(worst <= 1e-3, format!("max distance to grid minimizer {worst:.2e}"))
}

fn huber_gradient(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 7);
    let (mu, lam) = (0.2, 0.7);
    let pot = SeparablePotential::huber(vec![lam], mu).map_err(fail)?;
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 40 {
        let v = rng.uniform_range(-2.0, 2.0);
        if (v.abs() - mu).abs() < 1e-3 {
            continue;
        }
        tested += 1;
        let stack = |x: f64| ChannelStack::from_vec(1, 1, 1, vec![x]);
        let g = pot.grad(&stack(v).map_err(fail)?).map_err(fail)?.data[0];
        let h = 1e-6;
        let fp = pot.value(&stack(v + h).map_err(fail)?).map_err(fail)?;
        let fm = pot.value(&stack(v - h).map_err(fail)?).map_err(fail)?;
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((g - fd).abs() / g.abs().max(1e-3));
    }
    verdict(worst <= 1e-5, format!("max relative finite-difference error {worst:.2e}"))
}

fn fourier_operator(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 8);
    let mask = make_mask(&MaskSpec::Random { density: 0.4 }, 16, 16, c.seed).map_err(fail)?;
    let m = ForwardModel::masked_dft(mask);
    let s = rng.normal_vec(256);
    let u = rng.normal_vec(m.meas_len());
    let lhs = dot(&m.apply(&s).map_err(fail)?, &u);
    let rhs = dot(&s, &m.adjoint(&u).map_err(fail)?);
    let adj = (lhs - rhs).abs() / lhs.abs().max(1.0);
    let full = ForwardModel::masked_dft(polyreg_core::SamplingMask::full(16, 16));
    let back = full.adjoint(&full.apply(&s).map_err(fail)?).map_err(fail)?;
    let inv = dist(&back, &s) / dot(&s, &s).sqrt();
    verdict(
        adj <= 1e-10 && inv <= 1e-12,
        format!("adjoint mismatch {adj:.2e}, full-mask inversion error {inv:.2e}"),
    )
}

fn scalar_fixed_point(_: &Ctx) -> GroupResult {
    let problem = |lam: f64| {
        Problem::new(
            ForwardModel::identity(1, 1),
            vec![3.0],
            TightFrame::identity(),
            SeparablePotential::weighted_l1(vec![1.0])?,
            lam,
        )
    };
    let cfg = SolverConfig::new(Algorithm::Drs, 1e-12, 10_000);
    let (s1, _) = drs_solve(&problem(1.0).map_err(fail)?, &cfg).map_err(fail)?;
    let (s0, _) = drs_solve(&problem(0.0).map_err(fail)?, &cfg).map_err(fail)?;
    let (a, b) = (s1.data[0], s0.data[0]);
    verdict(
        (a - 2.0).abs() <= 1e-6 && (b - 3.0).abs() <= 1e-9,
        format!("y = 3: λ = 1 gives {a}, λ = 0 gives {b}"),
    )
}

fn solver_agreement(c: &Ctx) -> GroupResult {
    let mut rng = SeededRng::new(c.seed ^ 9);
    let noisy = Image::new(8, 8, rng.normal_vec(64)).map_err(fail)?;
    let pot = SeparablePotential::detail_l1(4, 1.0).map_err(fail)?;
    let p = Problem::denoising(&noisy, TightFrame::haar2(), pot, 0.3).map_err(fail)?;
    let cfg = |a| SolverConfig { max_iter: 100_000, ..SolverConfig::new(a, 1e-10, 100_000) };
    let (sd, rd) = drs_solve(&p, &cfg(Algorithm::Drs)).map_err(fail)?;
    let (_, rp) = pdhg_analysis(&p, &cfg(Algorithm::Pdhg)).map_err(fail)?;
    let (_, rf) = fista_range_restricted(&p, &cfg(Algorithm::Fista)).map_err(fail)?;
    let objs = [rd.final_objective, rp.final_objective, rf.final_objective];
    let hi = objs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = objs.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (hi - lo) / hi.abs().max(1e-300);
    let opt = check_optimality(&p, &sd.data).map_err(fail)?;
    verdict(
        spread <= 1e-5 && opt <= 1e-4 * (1.0 + hi.abs()),
        format!("DRS/PDHG/FISTA objective spread {spread:.2e}, optimality residual {opt:.2e}"),
    )
}

fn lp_simplex(_: &Ctx) -> GroupResult {
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let opts = SimplexOptions::default();
    let sol = lp::solve(&a, &[1.0], &[1.0, 2.0], &opts);
    let infeasible = lp::solve(&a, &[-1.0], &[1.0, 2.0], &opts);
    verdict(
        sol.status == LpStatus::Optimal
            && (sol.objective - 1.0).abs() <= 1e-12
            && infeasible.status == LpStatus::Infeasible,
        format!("optimum {:?} at {:?}; negative rhs gives {:?}", sol.objective, sol.x, infeasible.status),
    )
}

type Group = (&'static str, fn(&Ctx) -> GroupResult);

const GROUPS: &[Group] = &[
    ("norm_axioms", norm_axioms),
    ("l1_linf_identities", l1_linf_identities),
    ("gauge_duality", gauge_duality),
    ("extreme_point_reduction", reduction),
    ("zonotope_duality", zonotope_duality),
    ("polygon_approximation", polygon_approximation),
    ("parseval_frame", parseval),
    ("range_projection", range_projection),
    ("prox_oracles", prox_oracles),
    ("huber_gradient", huber_gradient),
    ("fourier_operator", fourier_operator),
    ("scalar_fixed_point", scalar_fixed_point),
    ("solver_agreement", solver_agreement),
    ("lp_simplex", lp_simplex),
];

pub fn run(g: &Globals, args: &SelftestArgs) -> CliResult<()> {
    let cfg: SelftestConfig = resolve("selftest", g.config.as_deref(), Value::Object(g.flags(args)?))?;
    let out = OutDir::create(&g.out_dir())?;
    out.write_resolved("selftest", &cfg)?;
    let frames = match &cfg.frame {
        Some(name) => load_frame(name).map(|f| vec![(name.clone(), f)]).map_err(|e| e.to_string()),
        None => Ok(["identity", "haar2", "dct3"]
            .iter()
            .map(|n| (n.to_string(), TightFrame::preset(n).expect("built-in preset")))
            .collect()),
    };
    let ctx = Ctx { seed: cfg.seed, frames };

    let mut report = Vec::new();
    let mut failed = Vec::new();
    for (name, check) in GROUPS {
        let (passed, detail) = match check(&ctx) {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            failed.push(format!("{name} ({detail})"));
        }
        report.push(json!({ "name": name, "passed": passed, "detail": detail }));
    }
    out.write_json(
        "metrics.json",
        &json!({ "passed": failed.is_empty(), "groups": report, "failed": failed.len() }),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Selftest(failed.join("; ")))
    }
}
