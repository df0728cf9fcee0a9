//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slopt::critical::{
    continuation_to_one, hamiltonian_residual, symmetry_defect, u_equation_residual, CriticalSolution, PstarPath,
};
use slopt::maximizer::{
    dirac_transfer_probe, locate_r_star, perturbation_probe, verify_profile, MaximizerSolver, Structure,
    StructureChoice, VerifyTolerances,
};
use slopt::mde::mde_dirichlet_eigen;
use slopt::newton::NewtonOptions;
use slopt::sturm_liouville::{dirichlet_eigen, eigen_sum, rayleigh_sum};
use slopt::{LpNorm, PiecewisePotential, RadonMeasure, SampledFunction, UnitGrid};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn grid() -> UnitGrid {
    UnitGrid::default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:.2?}, limit {limit:?}"))
}

fn free_spectrum() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for m in 1..=4 {
        let lambda = dirichlet_eigen(&PiecewisePotential::zero(), m, grid()).map_err(|e| e.to_string())?.lambda;
        worst = worst.max((lambda - (m * m) as f64 * PI * PI).abs());
    }
    within(start.elapsed(), Duration::from_secs(1), "free spectrum")?;
    ensure(worst < 1e-6, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.2e} in {:.2?}", start.elapsed()))
}

fn constant_shift() -> Outcome {
    let mut worst = 0.0_f64;
    for c in [1.0, 5.0, 20.0] {
        let q = PiecewisePotential::constant(-c).map_err(|e| e.to_string())?;
        for m in 1..=3 {
            let lambda = dirichlet_eigen(&q, m, grid()).map_err(|e| e.to_string())?.lambda;
            worst = worst.max((lambda - ((m * m) as f64 * PI * PI + c)).abs());
        }
    }
    ensure(worst < 1e-6, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.2e}"))
}

fn mde_atom() -> Outcome {
    // Root of sin s + (5/s) sin^2(s/2) on (pi, 2 pi) by plain bisection.
    let f = |s: f64| s.sin() + 5.0 / s * (0.5 * s).sin().powi(2);
    let (mut lo, mut hi) = (PI + 1e-9, 2.0 * PI - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f(lo) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let mu = RadonMeasure::dirac(0.5, -5.0).map_err(|e| e.to_string())?;
    let lambda = mde_dirichlet_eigen(&mu, 1, grid()).map_err(|e| e.to_string())?.lambda;
    let err = (lambda - s * s).abs();
    ensure(err < 1e-5, || format!("lambda_1 = {lambda}, expected {}", s * s))?;

    // Largest jump of (lambda_1, lambda_2) between neighbouring atom positions.
    let sweep = |count: usize| -> Result<f64, String> {
        let mut vals = Vec::new();
        for i in 1..count {
            let mu = RadonMeasure::dirac(i as f64 / count as f64, -5.0).map_err(|e| e.to_string())?;
            let l1 = mde_dirichlet_eigen(&mu, 1, grid()).map_err(|e| e.to_string())?.lambda;
            let l2 = mde_dirichlet_eigen(&mu, 2, grid()).map_err(|e| e.to_string())?.lambda;
            vals.push((l1, l2));
        }
        Ok(vals
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).abs().max((w[1].1 - w[0].1).abs()))
            .fold(0.0, f64::max))
    };
    let (coarse, fine) = (sweep(16)?, sweep(64)?);
    ensure(fine < 0.35 * coarse, || format!("position sweep jumps {coarse} -> {fine}"))?;
    Ok(format!("error {err:.2e}; position jumps {coarse:.3} -> {fine:.3}"))
}

fn critical_point_report(sol: &CriticalSolution) -> Result<(), String> {
    let (p, r) = (sol.p, sol.r);
    let tag = format!("p = {p}, r = {r}");
    ensure(sol.max_residual() < 1e-9, || format!("{tag}: residual {:e}", sol.max_residual()))?;
    let h = hamiltonian_residual(sol);
    ensure(h < 1e-6, || format!("{tag}: Hamiltonian residual {h:e}"))?;
    let ueq = u_equation_residual(sol);
    ensure(ueq < 1e-3, || format!("{tag}: u-equation residual {ueq:e}"))?;
    let norm = sol.q.lp_norm(p).map_err(|e| e.to_string())?;
    ensure((norm - r).abs() < 1e-7, || format!("{tag}: norm {norm}"))?;
    let es = eigen_sum(&PiecewisePotential::sampled(sol.q.clone()), grid()).map_err(|e| e.to_string())?;
    let rel = ((es - sol.objective()) / sol.objective()).abs();
    ensure(rel < 1e-4, || format!("{tag}: eigen_sum relative gap {rel:e}"))
}

fn critical_identities() -> Outcome {
    let opts = NewtonOptions::default();
    let mut slowest = Duration::ZERO;
    for r in [1.0, 5.0] {
        let start = Instant::now();
        let mut path = PstarPath::start(r, grid(), &opts).map_err(|e| e.to_string())?;
        for p in [2.0, 1.5, 15.0 / 14.0] {
            let sol = path.advance_to(p).map_err(|e| format!("p = {p}, r = {r}: {e}"))?;
            critical_point_report(sol)?;
            let elapsed = start.elapsed();
            within(elapsed, Duration::from_secs(30), &format!("p = {p}, r = {r}"))?;
            slowest = slowest.max(elapsed);
        }
    }
    Ok(format!("6 points, slowest {slowest:.2?}"))
}

fn small_exponent_structure() -> Outcome {
    let opts = NewtonOptions::default();
    let mut path = PstarPath::start(5.0, grid(), &opts).map_err(|e| e.to_string())?;
    let sol = path.advance_to(15.0 / 14.0).map_err(|e| e.to_string())?;
    let q = sol.q.values();
    ensure(q.iter().all(|v| *v <= 0.0), || "q takes positive values".into())?;
    let sym = symmetry_defect(&sol.q);
    ensure(sym < 1e-4, || format!("symmetry defect {sym:e}"))?;
    let minima: Vec<usize> = (1..q.len() - 1).filter(|&k| q[k] < q[k - 1] && q[k] <= q[k + 1]).collect();
    ensure(minima.len() == 2, || format!("{} local minima", minima.len()))?;
    let (left, right) = (grid().node(minima[0]), grid().node(minima[1]));
    ensure(left < 0.5 && right > 0.5, || format!("minima at {left}, {right}"))?;
    let plateau = q[grid().cells() / 2].abs() / sol.q.max_abs();
    ensure(plateau < 5e-2, || format!("plateau at {plateau:.3} of the peak"))?;
    Ok(format!("bumps at {left:.3} and {right:.3}, plateau {plateau:.3} of peak, symmetry {sym:.1e}"))
}

fn continuation_trend() -> Outcome {
    let schedule = [2.0, 5.0 / 3.0, 1.5, 4.0 / 3.0, 1.25, 1.2, 15.0 / 14.0];
    let run = continuation_to_one(5.0, &schedule, grid(), &NewtonOptions::default()).map_err(|e| e.to_string())?;
    if let Some(e) = run.failure {
        return Err(format!("continuation stopped: {e}"));
    }
    ensure(run.steps.len() == schedule.len(), || "missing continuation steps".into())?;
    for w in run.steps.windows(2) {
        ensure(w[1].objective >= w[0].objective - 1e-9, || {
            format!("M_p not monotone in p between p = {} and p = {}", w[0].p, w[1].p)
        })?;
        ensure((w[1].u_max - 1.0).abs() <= (w[0].u_max - 1.0).abs(), || {
            format!("sup(y^2 + z^2) moves away from 1 at p = {}", w[1].p)
        })?;
    }
    let last = run.steps.last().unwrap();
    ensure(last.u_max > 0.95, || format!("final sup {}", last.u_max))?;
    Ok(format!(
        "M from {:.4} to {:.4}, sup(y^2 + z^2) from {:.4} to {:.4}",
        run.steps[0].objective, last.objective, run.steps[0].u_max, last.u_max
    ))
}

fn maximizer_suite() -> Outcome {
    let mut solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    let mut parts = Vec::new();
    for (r, expected) in [(5.0, Structure::TwoBumpSymmetric), (20.0, Structure::OneBump)] {
        let start = Instant::now();
        let p = solver.assemble(r, StructureChoice::Auto, None).map_err(|e| format!("r = {r}: {e}"))?;
        let rep = verify_profile(&p, &VerifyTolerances::default()).map_err(|e| e.to_string())?;
        within(start.elapsed(), Duration::from_secs(60), &format!("r = {r}"))?;
        ensure(rep.passed, || format!("r = {r}: failed {:?}", rep.failures()))?;
        ensure(p.objective > 5.0 * PI * PI + 2.0 * r, || format!("r = {r}: objective {}", p.objective))?;
        ensure(p.structure == expected, || format!("r = {r}: {} structure", p.structure.label()))?;
        parts.push(format!("r = {r}: {} objective {:.6} in {:.2?}", p.structure.label(), p.objective, start.elapsed()));
    }
    Ok(parts.join("; "))
}

fn transition_point() -> Outcome {
    let start = Instant::now();
    let mut solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    let r_star = locate_r_star(&mut solver, 10.0, 20.0, 1e-3).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(600), "transition search")?;
    let target = 15.5292;
    ensure((r_star - target).abs() < 0.1, || {
        format!("r* = {r_star:.6}, expected {target} +- 0.1 (off by {:.4})", r_star - target)
    })?;
    Ok(format!("r* = {r_star:.6} in {:.2?}", start.elapsed()))
}

fn optimality_probes() -> Outcome {
    let mut solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    let p = solver.assemble(5.0, StructureChoice::Auto, None).map_err(|e| e.to_string())?;
    let dirac = dirac_transfer_probe(&p, 0.1, 6).map_err(|e| e.to_string())?;
    ensure(dirac.all_decrease(), || format!("an atom transfer raised the sum: {:?}", dirac.sums))?;
    let pert = perturbation_probe(&p, 1e-2, 20, 0).map_err(|e| e.to_string())?;
    ensure(pert.increases.len() == 20, || "fewer than 20 perturbations".into())?;
    ensure(pert.max_increase() <= 1e-5, || format!("max increase {:e}", pert.max_increase()))?;
    let es = eigen_sum(&p.potential, grid()).map_err(|e| e.to_string())?;
    let rel = ((es - p.objective) / p.objective).abs();
    ensure(rel < 1e-4, || format!("eigen_sum relative gap {rel:e}"))?;
    Ok(format!(
        "{} transfers all decrease; max perturbation gain {:.2e}; eigen_sum gap {rel:.1e}",
        dirac.positions.len(),
        pert.max_increase()
    ))
}

fn random_potential(rng: &mut ChaCha8Rng) -> PiecewisePotential {
    let mut cuts: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..0.95)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut edges = vec![0.0];
    for c in cuts {
        if c - edges.last().unwrap() > 0.02 {
            edges.push(c);
        }
    }
    edges.push(1.0);
    let values: Vec<f64> = (1..edges.len()).map(|_| rng.gen_range(-40.0..0.0)).collect();
    PiecewisePotential::steps(&edges, &values).unwrap()
}

fn orthogonalize(u: &SampledFunction, v: &SampledFunction) -> SampledFunction {
    let c = u.inner(v).unwrap() / u.inner(u).unwrap();
    v.zip_with(u, |b, a| b - c * a).unwrap()
}

fn ky_fan() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = grid();
    let (mut worst_eq, mut worst_gap) = (0.0_f64, f64::INFINITY);
    let mut pairs = 0;
    for i in 0..10 {
        let q = random_potential(&mut rng);
        let e1 = dirichlet_eigen(&q, 1, g).map_err(|e| e.to_string())?;
        let e2 = dirichlet_eigen(&q, 2, g).map_err(|e| e.to_string())?;
        let best = e1.lambda + e2.lambda;
        let at = rayleigh_sum(&e1.phi, &orthogonalize(&e1.phi, &e2.phi), &q).map_err(|e| e.to_string())?;
        let rel = ((at - best) / best).abs();
        ensure(rel < 1e-4, || format!("potential {i}: rayleigh {at} vs eigen sum {best}"))?;
        worst_eq = worst_eq.max(rel);
        for _ in 0..5 {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = SampledFunction::from_fn(g, |t| {
                (PI * t).sin() + c[0] * (2.0 * PI * t).sin() + c[1] * (3.0 * PI * t).sin() + c[2] * t * t * (1.0 - t)
            })
            .unwrap();
            let v = SampledFunction::from_fn(g, |t| {
                (2.0 * PI * t).sin() + c[3] * (PI * t).sin() + c[4] * (4.0 * PI * t).sin() + c[5] * t * (1.0 - t).powi(2)
            })
            .unwrap();
            let trial = rayleigh_sum(&u, &orthogonalize(&u, &v), &q).map_err(|e| e.to_string())?;
            let gap = (trial - best) / best.abs();
            ensure(gap >= -1e-4, || format!("potential {i}: trial pair {trial} below {best}"))?;
            worst_gap = worst_gap.min(gap);
            pairs += 1;
        }
    }
    ensure(pairs == 50, || format!("{pairs} trial pairs"))?;
    Ok(format!("eigenpair agreement {worst_eq:.1e}; smallest trial excess {worst_gap:.2e} over {pairs} pairs"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("free spectrum", free_spectrum),
        ("constant shift", constant_shift),
        ("measure atom", mde_atom),
        ("critical identities", critical_identities),
        ("small exponent structure", small_exponent_structure),
        ("continuation trend", continuation_trend),
        ("maximizer verification", maximizer_suite),
        ("transition point", transition_point),
        ("optimality probes", optimality_probes),
        ("Ky Fan", ky_fan),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
