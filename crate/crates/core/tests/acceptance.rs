//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use hermite_wave::ansatz::{assemble_system, build_ansatz, compute_balance, group_by_z, hermite_derivative, hermite_rewrite};
use hermite_wave::cli::{derive_all, main_with, RunConfig};
use hermite_wave::closure::{closure_formula, hermite_residual, ClosureKind};
use hermite_wave::expr::poly::is_zero_rational;
use hermite_wave::expr::{collect, eval, CollectMode, Expr, MonomialKey, Symbol};
use hermite_wave::parser::{parse_equation, parse_expr, Context, Scope};
use hermite_wave::reduce::{apply_wave_transform, ReducedOde, TravelingWaveFrame};
use hermite_wave::specfun::{hermite_jet, kummer_m, kummer_u};
use hermite_wave::verify::{
    find_locus, fidelity_report, ode_residual, ode_residual_expr, Catalog, Classification, FidelityOptions, ZEval,
};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

mod common;
use common::{initial_values, integrate_hermite};

type Outcome = Result<String, String>;

fn ode(s: &str) -> Expr {
    parse_expr(s, &Scope::open(Context::Ode)).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    is_zero_rational(&(a.clone() - b.clone()))
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn kg(n: i64) -> ReducedOde {
    let mut m = parse_equation("u_tt - a^2*u_xx + alpha*u - beta*u^n = 0", &["a", "alpha", "beta", "n"]).unwrap();
    m.n = Some(n);
    apply_wave_transform(&m, &TravelingWaveFrame::default()).unwrap()
}

fn bbm() -> ReducedOde {
    let m = parse_equation("u_t + u_x + a*u^2*u_x + u_xxx = 0", &["a"]).unwrap();
    apply_wave_transform(&m, &TravelingWaveFrame::with_sigma(1)).unwrap()
}

fn reduction() -> Outcome {
    let t = Instant::now();
    for n in [2, 3, 5] {
        let r = kg(n);
        let expected = ode(&format!("mu^2*(c^2 - a^2)*u'' + alpha*u - beta*u^{n}"));
        ensure(r.lhs == expected, format!("n = {n}: got {}", r.lhs))?;
    }
    ensure(t.elapsed() < Duration::from_secs(1), "slower than 1 s")?;
    Ok(format!("n = 2, 3, 5 exact in {:?}", t.elapsed()))
}

fn balance() -> Outcome {
    let t = Instant::now();
    let (k, b) = (compute_balance(&kg(2)), compute_balance(&bbm()));
    ensure(k == Ok(2), format!("Klein-Gordon n = 2: {k:?}"))?;
    ensure(b == Ok(1), format!("BBM: {b:?}"))?;
    ensure(t.elapsed() < Duration::from_secs(1), "slower than 1 s")?;
    Ok("N = 2 (Klein-Gordon), N = 1 (BBM)".into())
}

fn rewrite() -> Outcome {
    let r = hermite_rewrite(&hermite_derivative(3));
    let expected = ode("(4*zeta^2 + lambda + 2)*z' + 2*lambda*zeta*z");
    ensure(same(&r, &expected), format!("z''' -> {r}"))?;
    let scaled = collect(&(Expr::sym("mu").powi(3) * r), CollectMode::Paper).map_err(|e| e.to_string())?;
    let dz = scaled.get(&MonomialKey::new(0, 1, 0)).cloned().unwrap_or_else(Expr::zero);
    ensure(
        same(&dz, &ode("mu^3*lambda + 2*mu^3 + 4*mu^3*zeta^2")),
        format!("z' coefficient {dz}"),
    )?;
    Ok("z''' = (4 zeta^2 + lambda + 2) z' + 2 lambda zeta z".into())
}

fn branches() -> Outcome {
    let catalog = Catalog::builtin();
    let file = derive_all(&RunConfig::default(), &catalog).map_err(|e| e.to_string())?;
    let run = |model: &str, case: ClosureKind| {
        file.runs
            .iter()
            .find(|r| r.model.name.as_deref() == Some(model) && r.case == case)
            .ok_or_else(|| format!("no {model} {case} run"))
    };
    let kg = run("klein-gordon", ClosureKind::Constant)?;
    let zero = |b: &hermite_wave::verify::DerivedBranch, k: &str| b.assignments.get(k).map(String::as_str) == Some("0");
    let case1 = kg
        .branches
        .iter()
        .find(|b| zero(b, "g0") && zero(b, "g1") && !b.assignments.contains_key("g2"))
        .ok_or("Klein-Gordon {g0 = 0, g1 = 0, g2 free} not derived")?;
    let expected = ode("-a*g0*g1*(A*sin(zeta) + B*cos(zeta))/(mu^2*zeta)");
    let bbm = run("bbm", ClosureKind::Trig)?;
    let lam = bbm
        .branches
        .iter()
        .find(|b| b.assignments.get("lambda").is_some_and(|v| same(&ode(v), &expected)))
        .ok_or("BBM lambda branch not derived")?;
    Ok(format!("{} and {}", case1.id, lam.id))
}

fn coverage() -> Outcome {
    let t = Instant::now();
    let catalog = Catalog::builtin();
    let file = derive_all(&RunConfig::default(), &catalog).map_err(|e| e.to_string())?;
    let report = fidelity_report(&file.runs, &catalog, &FidelityOptions::default()).map_err(|e| e.to_string())?;
    let rows = |m: &str| report.entries.iter().filter(|e| e.model == m).count();
    let (k, b) = (rows("klein-gordon"), rows("bbm"));
    ensure(k == 14 && b == 3, format!("{k} Klein-Gordon and {b} BBM rows"))?;
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for e in &report.entries {
        *tally.entry(e.classification.to_string()).or_default() += 1;
    }
    ensure(t.elapsed() < Duration::from_secs(60), format!("took {:?}", t.elapsed()))?;
    Ok(format!("14 + 3 rows {tally:?} in {:.1?}", t.elapsed()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn special_functions() -> Outcome {
    let m1 = kummer_m(1.0, 2.0, 1.0).map_err(|e| e.to_string())?;
    ensure(rel(m1, std::f64::consts::E - 1.0) < 1e-10, format!("M(1,2,1) = {m1}"))?;
    // sqrt(pi) erf(1) / 2
    let target = 0.746_824_132_812_427;
    let m2 = kummer_m(0.5, 1.5, -1.0).map_err(|e| e.to_string())?;
    ensure(rel(m2, target) < 1e-10, format!("M(1/2,3/2,-1) = {m2}"))?;
    let u = kummer_u(0.5, 1.5, 4.0).map_err(|e| e.to_string())?;
    ensure((u - 0.5).abs() < 1e-9, format!("U(1/2,3/2,4) = {u}"))?;
    let mut worst = 0.0f64;
    for ia in 0..=20 {
        let a = -2.0 + 0.25 * ia as f64 + 0.01;
        for b in [0.5, 1.5, 2.5] {
            for ix in 0..=20 {
                let x = -10.0 + ix as f64;
                let m = |a| kummer_m(a, b, x).map_err(|e| e.to_string());
                let r = (b - a) * m(a - 1.0)? + (2.0 * a - b + x) * m(a)? - a * m(a + 1.0)?;
                worst = worst.max(r.abs() / m(a)?.abs().max(1.0));
            }
        }
    }
    ensure(worst < 1e-9, format!("contiguous relation residual {worst:e}"))?;
    Ok(format!("closed forms within 1e-10, contiguous residual {worst:.1e}"))
}

fn zeta_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn true_solution() -> Outcome {
    let grid = zeta_grid(0.1, 3.0, 291);
    let mut worst = 0.0f64;
    let mut drift = 0.0f64;
    for lambda in [-2.0, -1.0, 0.6, 2.0] {
        let (c1, c2) = (1.0, 2.0);
        let z = ZEval::WithDerivatives(Box::new(move |zeta| {
            let j = hermite_jet(lambda, c1, c2, zeta).map_err(|e| e.to_string())?;
            Ok([j.z, j.dz, j.d2z])
        }));
        let r = ode_residual(&z, &|_| Ok(lambda), &grid).map_err(|e| e.to_string())?;
        ensure(r.max_abs < 1e-8, format!("lambda {lambda}: residual {:e}", r.max_abs))?;
        worst = worst.max(r.max_abs);
        let (z0, dz0) = initial_values(lambda, c1, c2);
        for &zeta in grid.iter().step_by(10) {
            let ours = hermite_jet(lambda, c1, c2, zeta).map_err(|e| e.to_string())?.z;
            let reference = integrate_hermite(lambda, z0, dz0, zeta);
            drift = drift.max((ours - reference).abs() / reference.abs().max(1.0));
        }
    }
    ensure(drift < 1e-9, format!("integrator disagrees by {drift:e}"))?;
    Ok(format!("max residual {worst:.1e}, integrator agreement {drift:.1e}"))
}

fn inconsistency() -> Outcome {
    let case = closure_formula(ClosureKind::Constant, &Expr::sym("lambda")).map_err(|e| e.to_string())?;
    let env = |zeta: f64| -> Result<BTreeMap<String, f64>, String> {
        Ok([("lambda", 0.6), ("C1", 0.0), ("C2", 1.0), ("h", 0.0), ("zeta", zeta)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect())
    };
    let residual = hermite_residual(&case.z, &Expr::sym("lambda"));
    let at1 = eval(&residual, &env(1.0)?).map_err(|e| e.to_string())?;
    let l: f64 = 0.6;
    let closed = -2.0 * l.sqrt() * l.sqrt().exp();
    ensure(rel(at1, closed) < 1e-6, format!("residual at zeta = 1 is {at1}, expected {closed}"))?;
    let report = ode_residual_expr(&case.z, &Expr::sym("lambda"), env, &zeta_grid(0.1, 3.0, 100))
        .map_err(|e| e.to_string())?;
    ensure(
        report.classification == Classification::Inconsistent,
        format!("classified {}", report.classification),
    )?;
    let particular = case.particular_part();
    let locus = find_locus(&hermite_residual(&particular, &Expr::sym("lambda")), &[Symbol::new("lambda")]);
    let Some((_, value)) = &locus else {
        return Err("no locus found for the particular part".into());
    };
    ensure(same(value, &Expr::int(-2)), format!("locus lambda = {value}"))?;
    let env2 = |zeta: f64| -> Result<BTreeMap<String, f64>, String> {
        Ok([("lambda", -2.0), ("h", 1.0), ("zeta", zeta)].iter().map(|(k, v)| (k.to_string(), *v)).collect())
    };
    let at_locus = ode_residual_expr(&particular, &Expr::sym("lambda"), env2, &zeta_grid(0.1, 3.0, 100))
        .map_err(|e| e.to_string())?;
    ensure(at_locus.max_abs < 1e-10, format!("residual at lambda = -2: {:e}", at_locus.max_abs))?;
    Ok(format!("r(1) = {at1:.6}, inconsistent; lambda = -2 residual {:.1e}", at_locus.max_abs))
}

fn discrepancy() -> Outcome {
    let r = kg(3);
    let sys = assemble_system(&r, &build_ansatz(2).map_err(|e| e.to_string())?, CollectMode::Paper)
        .map_err(|e| e.to_string())?;
    let by_z = group_by_z(&sys.recombine()).map_err(|e| e.to_string())?;
    let coeff = |k| by_z.get(&k).cloned().unwrap_or_else(Expr::zero);
    ensure(same(&coeff(5), &ode("-3*beta*g1*g2^2")), format!("z^5: {}", coeff(5)))?;
    ensure(same(&coeff(6), &ode("-beta*g2^3")), format!("z^6: {}", coeff(6)))?;
    let catalog = Catalog::builtin();
    let file = derive_all(&RunConfig::default(), &catalog).map_err(|e| e.to_string())?;
    let report = fidelity_report(&file.runs, &catalog, &FidelityOptions::default()).map_err(|e| e.to_string())?;
    for k in [5, 6] {
        let named = report.discrepancies.iter().any(|d| {
            d.model == "klein-gordon" && d.kind == "absent-from-printed" && d.equation.starts_with(&format!("z^{k}:"))
        });
        ensure(named, format!("z^{k} not named in the report"))?;
    }
    Ok("z^5: -3 beta g1 g2^2, z^6: -beta g2^3, both reported".into())
}

fn determinism() -> Outcome {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().to_string_lossy().into_owned();
        let code = main_with(["hermite-wave", "report", "--out", &out]);
        ensure(code == 0 || code == 3, format!("report exited {code}"))?;
        let read = |f: &str| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string());
        outputs.push((read("branches.json")?, read("fidelity.json")?));
    }
    ensure(outputs[0].0 == outputs[1].0, "branches.json differs between runs")?;
    ensure(outputs[0].1 == outputs[1].1, "fidelity.json differs between runs")?;
    Ok(format!("{} + {} bytes identical", outputs[0].0.len(), outputs[0].1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("reduction", reduction),
        ("balance", balance),
        ("hermite rewrite", rewrite),
        ("branch reproduction", branches),
        ("report coverage", coverage),
        ("special functions", special_functions),
        ("true-solution verification", true_solution),
        ("inconsistency detection", inconsistency),
        ("missing z^5, z^6 equations", discrepancy),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
