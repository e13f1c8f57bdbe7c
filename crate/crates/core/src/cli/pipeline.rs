//! The derive, verify and sample steps behind the subcommands.

use super::config::RunConfig;
use super::CliError;
use crate::ansatz::{assemble_system, build_ansatz, compute_balance, group_by_z};
use crate::closure::{apply_closure, closure_formula, ClosureKind};
use crate::expr::{CollectMode, Expr, Symbol};
use crate::parser::{parse_equation_file, parse_expr, Context, ModelSpec, Scope};
use crate::reduce::{apply_wave_transform, FrameInfo, TravelingWaveFrame};
use crate::solve::{branch_solve, SolveOptions};
use crate::verify::{
    default_bindings, fidelity_report, sample_u, Candidate, Catalog, Classification, DerivedBranch, DerivedRun,
    FidelityOptions, FidelityReport, MatchStatus, PdeProblem, ResidualReport,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Contents of `branches.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchesFile {
    pub runs: Vec<DerivedRun>,
}

pub const ALL_CASES: [ClosureKind; 3] = [ClosureKind::Constant, ClosureKind::Kummer, ClosureKind::Trig];

pub fn load_catalog(cfg: &RunConfig) -> Result<Catalog, CliError> {
    match &cfg.catalog {
        Some(p) => Catalog::load(p).map_err(|e| CliError::Input(e.to_string())),
        None => Ok(Catalog::builtin()),
    }
}

pub fn read_model(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut m = parse_equation_file(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if m.name.is_none() {
        m.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Ok(m)
}

/// Settings for one derive run.
pub struct DeriveSpec<'a> {
    pub model: &'a ModelSpec,
    pub sigma: i8,
    pub case: ClosureKind,
    pub mode: CollectMode,
    pub order: Option<usize>,
    pub unknowns: Option<Vec<String>>,
    pub scenario: Option<String>,
    pub solve: SolveOptions,
}

/// parse → reduce → balance → ansatz → assemble → closure → solve.
pub fn derive_run(spec: &DeriveSpec) -> Result<DerivedRun, CliError> {
    let input = |e: &dyn std::fmt::Display| CliError::Input(e.to_string());
    let frame = TravelingWaveFrame::with_sigma(spec.sigma);
    let reduced = apply_wave_transform(spec.model, &frame).map_err(|e| input(&e))?;
    let order = match spec.order {
        Some(n) => n,
        None => compute_balance(&reduced).map_err(|e| input(&e))?,
    };
    let ansatz = build_ansatz(order).map_err(|e| input(&e))?;
    let sys = assemble_system(&reduced, &ansatz, spec.mode).map_err(|e| input(&e))?;
    let system = group_by_z(&sys.source)
        .map_err(|e| input(&e))?
        .into_iter()
        .map(|(k, e)| (k, e.to_string()))
        .collect();
    let closure = closure_formula(spec.case, &Expr::sym("lambda")).map_err(|e| input(&e))?;
    let closed = apply_closure(&sys, &closure).map_err(|e| input(&e))?;
    let unknowns: Vec<String> = match &spec.unknowns {
        Some(u) => u.clone(),
        None => ansatz.coeffs.iter().map(|s| s.as_str().to_string()).collect(),
    };
    let syms: Vec<Symbol> = unknowns.iter().map(|u| Symbol::new(u)).collect();
    let eqs: Vec<Expr> = closed.equations.iter().map(|(_, e)| e.clone()).collect();
    let res = branch_solve(&eqs, &syms, &spec.solve);
    let name = spec.model.name.clone().unwrap_or_else(|| "model".into());
    let branches = res
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| DerivedBranch {
            id: format!("{name}/{}/{}/{}", spec.case, spec.mode, i + 1),
            case: spec.case,
            mode: spec.mode.to_string(),
            assignments: b
                .assignments
                .iter()
                .map(|(k, v)| (k.as_str().to_string(), v.to_string()))
                .collect(),
            free: b.free.iter().map(|s| s.as_str().to_string()).collect(),
            conditions: b.conditions.iter().map(|e| e.to_string()).collect(),
            unresolved: b.unresolved.iter().map(|e| e.to_string()).collect(),
            provenance: b.provenance.clone(),
        })
        .collect();
    Ok(DerivedRun {
        scenario: spec.scenario.clone(),
        model: spec.model.to_file(),
        frame: FrameInfo::from(&frame),
        case: spec.case,
        mode: spec.mode.to_string(),
        order,
        unknowns,
        incomplete: res.incomplete,
        pruned: res.pruned.len(),
        system,
        branches,
    })
}

/// Every requested case for one model; catalog settings fill in what the
/// config leaves open.
fn derive_model(model: &ModelSpec, catalog: &Catalog, cfg: &RunConfig) -> Result<Vec<DerivedRun>, CliError> {
    let name = model.name.clone().unwrap_or_default();
    let cm = catalog.model(&name);
    let cases: Vec<ClosureKind> = if cfg.cases.is_empty() { ALL_CASES.to_vec() } else { cfg.cases.clone() };
    let mut runs = Vec::new();
    for case in cases {
        let scenario = catalog
            .scenarios
            .iter()
            .find(|s| s.model == name && s.case == case);
        let spec = DeriveSpec {
            model,
            sigma: cfg.sigma.or(cm.map(|m| m.sigma)).unwrap_or(-1),
            case,
            mode: cfg.mode,
            order: cfg.order.or(cm.and_then(|m| m.order)),
            unknowns: cfg.unknowns.clone().or(scenario.map(|s| s.unknowns.clone())),
            scenario: scenario
                .filter(|_| cfg.mode == CollectMode::Paper)
                .map(|s| s.locator.clone()),
            solve: SolveOptions {
                max_branches: cfg.max_branches,
                probe_seed: cfg.seed,
                ..SolveOptions::default()
            },
        };
        runs.push(derive_run(&spec)?);
    }
    Ok(runs)
}

/// Runs for the configured equation, or for every catalog model.
pub fn derive_all(cfg: &RunConfig, catalog: &Catalog) -> Result<BranchesFile, CliError> {
    let models = match &cfg.equation {
        Some(p) => vec![read_model(p)?],
        None => catalog
            .models
            .iter()
            .map(|m| catalog.load_model(m).map_err(|e| CliError::Input(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let mut runs = Vec::new();
    for m in &models {
        runs.extend(derive_model(m, catalog, cfg)?);
    }
    Ok(BranchesFile { runs })
}

pub fn read_branches(path: &Path) -> Result<BranchesFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(BranchesFile::default());
    }
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed {}: {e}", path.display())))
}

pub fn verify(branches: &BranchesFile, catalog: &Catalog, cfg: &RunConfig) -> Result<FidelityReport, CliError> {
    let opts = FidelityOptions {
        grid: cfg.grid.clone(),
        overrides: cfg.bindings.clone(),
        method: cfg.method,
        probe_seed: cfg.seed,
    };
    fidelity_report(&branches.runs, catalog, &opts).map_err(|e| CliError::Input(e.to_string()))
}

fn residual_cell(r: &ResidualReport) -> String {
    if r.points == 0 || !r.max_abs.is_finite() {
        return "-".into();
    }
    format!("{:.3e}/{:.1e}", r.max_abs, r.scale)
}

fn match_cell(m: &MatchStatus) -> String {
    match m {
        MatchStatus::Matched { branch } => format!("matched {branch}"),
        MatchStatus::Partial { branch, differ, .. } => format!("partial {branch} (differs: {})", differ.join(",")),
        MatchStatus::Unmatched => "unmatched".into(),
        MatchStatus::NotDerived => "not derived".into(),
    }
}

/// Plain-text table of the report.
pub fn summary(report: &FidelityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<26} {:<22} {:<22} {:<20} match",
        "row", "ode max/scale", "pde max/scale", "classification"
    );
    for e in &report.entries {
        let _ = writeln!(
            s,
            "{:<26} {:<22} {:<22} {:<20} {}",
            e.locator,
            residual_cell(&e.ode),
            residual_cell(&e.pde),
            e.classification.to_string(),
            match_cell(&e.matched)
        );
    }
    if !report.derived.is_empty() {
        let _ = writeln!(s, "\n{:<30} {:<22} {:<22} classification", "derived branch", "ode max/scale", "pde max/scale");
        for d in &report.derived {
            let _ = writeln!(
                s,
                "{:<30} {:<22} {:<22} {}",
                d.branch,
                residual_cell(&d.ode),
                residual_cell(&d.pde),
                d.classification
            );
        }
    }
    if !report.counts.is_empty() {
        let _ = writeln!(s);
        for c in &report.counts {
            let claimed = c.claimed.map_or("-".to_string(), |n| n.to_string());
            let _ = writeln!(
                s,
                "{}: {} catalog rows, {} claimed, {} derived branches",
                c.model, c.catalog_rows, claimed, c.derived_branches
            );
        }
    }
    if !report.discrepancies.is_empty() {
        let _ = writeln!(s);
        for d in &report.discrepancies {
            let _ = writeln!(s, "{} {}: {}", d.model, d.kind, d.equation);
        }
    }
    s
}

/// Whether any derived branch could not be evaluated on the grid.
pub fn domain_failure(report: &FidelityReport) -> bool {
    report.derived.iter().any(|d| d.pde.classification == Classification::OutOfDomain)
}

/// u over the grid as CSV rows `x,t,u`, 17 significant digits.
pub fn sample(cfg: &RunConfig, catalog: &Catalog) -> Result<(String, usize), CliError> {
    let (model, sigma, order, case, assignments, roots, defaults) = if let Some(loc) = &cfg.entry {
        let e = catalog
            .entries
            .iter()
            .find(|e| &e.locator == loc)
            .ok_or_else(|| CliError::Input(format!("no catalog row `{loc}`")))?;
        let cm = catalog.model(&e.model).expect("validated");
        let model = catalog.load_model(cm).map_err(|e| CliError::Input(e.to_string()))?;
        let order = match cm.order {
            Some(n) => n,
            None => balance(&model, cm.sigma)?,
        };
        let a = e.parsed_assignments().map_err(|e| CliError::Input(e.to_string()))?;
        let r = e.parsed_roots().map_err(|e| CliError::Input(e.to_string()))?;
        (model, cm.sigma, order, e.case, a, r, cm.defaults.clone())
    } else if let Some(id) = &cfg.branch {
        let file = read_branches(&cfg.branches_path())?;
        let (run, b) = file
            .runs
            .iter()
            .flat_map(|r| r.branches.iter().map(move |b| (r, b)))
            .find(|(_, b)| &b.id == id)
            .ok_or_else(|| CliError::Input(format!("no branch `{id}` in {}", cfg.branches_path().display())))?;
        let model = run.model.to_model().map_err(|e| CliError::Input(e.to_string()))?;
        let mut a = BTreeMap::new();
        for (k, v) in &b.assignments {
            let e = parse_expr(v, &Scope::open(Context::Ode))
                .map_err(|e| CliError::Input(format!("branch {id}, `{k}`: {e}")))?;
            a.insert(Symbol::new(k), e);
        }
        let name = run.model.name.clone().unwrap_or_default();
        let defaults = catalog.model(&name).map(|m| m.defaults.clone()).unwrap_or_default();
        (model, run.frame.sigma, run.order, run.case, a, BTreeMap::new(), defaults)
    } else {
        return Err(CliError::Input("sample needs --branch ID or --entry LOCATOR".into()));
    };
    let mut bindings = default_bindings();
    bindings.extend(model.bindings.clone());
    bindings.extend(defaults);
    bindings.extend(cfg.bindings.clone());
    let frame = TravelingWaveFrame::with_sigma(sigma);
    let closure = closure_formula(case, &Expr::sym("lambda")).map_err(|e| CliError::Input(e.to_string()))?;
    let mut assignments = assignments;
    assignments.retain(|k, v| v.as_sym() != Some(k));
    let cand = Candidate { assignments, roots };
    let prob = PdeProblem {
        model: &model,
        frame: &frame,
        closure: &closure,
        order,
        bindings: &bindings,
        method: cfg.method,
    };
    let nodes = cfg.grid.nodes();
    let values = sample_u(&cand, &prob, &nodes).map_err(|e| CliError::Input(e.to_string()))?;
    let failures = values.iter().filter(|v| !matches!(v, Ok(u) if u.is_finite())).count();
    if failures * 10 > nodes.len() {
        let first = values
            .iter()
            .find_map(|v| v.as_ref().err().cloned())
            .unwrap_or_else(|| "non-finite value".into());
        return Err(CliError::Domain(format!(
            "u could not be evaluated at {failures} of {} grid points (first: {first})",
            nodes.len()
        )));
    }
    let mut csv = String::from("x,t,u\n");
    for ((x, t), u) in nodes.iter().zip(&values) {
        let u = match u {
            Ok(v) => format!("{v:.16e}"),
            Err(_) => "NaN".into(),
        };
        let _ = writeln!(csv, "{x:.16e},{t:.16e},{u}");
    }
    Ok((csv, failures))
}

fn balance(model: &ModelSpec, sigma: i8) -> Result<usize, CliError> {
    let r = apply_wave_transform(model, &TravelingWaveFrame::with_sigma(sigma))
        .map_err(|e| CliError::Input(e.to_string()))?;
    compute_balance(&r).map_err(|e| CliError::Input(e.to_string()))
}
