//! Comparison of derived branches with the catalog, with residuals for
//! every catalog row.

use super::catalog::{Catalog, CatalogError};
use super::residual::{ode_residual_on_nodes, pde_residual, Candidate, DerivativeMethod, PdeProblem};
use super::{classify, find_locus, Classification, Grid2d, ResidualReport, VerifyError};
use crate::ansatz::compute_balance;
use crate::closure::{closure_formula, hermite_residual, ClosureCase, ClosureKind};
use crate::expr::poly::equal_up_to_scale;
use crate::expr::{substitute_symbols, Expr, Symbol};
use crate::parser::{parse_expr, Context, EquationFile, ModelSpec, Scope};
use crate::reduce::{apply_wave_transform, FrameInfo, TravelingWaveFrame};
use crate::solve::{clear_denominators, is_zero_expr};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One branch as written to `branches.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedBranch {
    pub id: String,
    pub case: ClosureKind,
    pub mode: String,
    pub assignments: BTreeMap<String, String>,
    pub free: Vec<String>,
    #[serde(default)]
    pub conditions: Vec<String>,
    #[serde(default)]
    pub unresolved: Vec<String>,
    #[serde(default)]
    pub provenance: Vec<String>,
}

/// One derive run: model, frame, closure case and the branches found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedRun {
    #[serde(default)]
    pub scenario: Option<String>,
    pub model: EquationFile,
    pub frame: FrameInfo,
    pub case: ClosureKind,
    pub mode: String,
    pub order: usize,
    pub unknowns: Vec<String>,
    pub incomplete: bool,
    #[serde(default)]
    pub pruned: usize,
    /// Coefficient of each power of z (z' kept inside) before the closure.
    #[serde(default)]
    pub system: BTreeMap<u32, String>,
    pub branches: Vec<DerivedBranch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MatchStatus {
    Matched { branch: String },
    Partial { branch: String, agree: Vec<String>, differ: Vec<String> },
    Unmatched,
    /// No derive run covers this scenario.
    NotDerived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEntry {
    pub locator: String,
    pub model: String,
    pub case: ClosureKind,
    pub transcription: BTreeMap<String, String>,
    #[serde(default)]
    pub roots: BTreeMap<String, String>,
    pub matched: MatchStatus,
    pub ode: ResidualReport,
    pub pde: ResidualReport,
    /// Classification of the PDE residual.
    pub classification: Classification,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCount {
    pub model: String,
    pub catalog_rows: usize,
    pub derived_branches: usize,
    pub claimed: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub model: String,
    pub kind: String,
    pub equation: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub entries: Vec<FidelityEntry>,
    pub derived: Vec<BranchCheck>,
    pub counts: Vec<ModelCount>,
    pub discrepancies: Vec<Discrepancy>,
}

#[derive(Debug, thiserror::Error)]
pub enum FidelityError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("{locator}: {source}")]
    Verify { locator: String, source: VerifyError },
}

pub struct FidelityOptions {
    pub grid: Grid2d,
    /// Applied on top of the catalog defaults.
    pub overrides: BTreeMap<String, f64>,
    pub method: DerivativeMethod,
    pub probe_seed: u64,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        FidelityOptions {
            grid: Grid2d::default(),
            overrides: BTreeMap::new(),
            method: DerivativeMethod::Jets,
            probe_seed: 7,
        }
    }
}

/// Values used for symbols a branch leaves free.
pub fn default_bindings() -> BTreeMap<String, f64> {
    [
        ("a", 1.0),
        ("alpha", 1.0),
        ("beta", 1.0),
        ("c", 0.8),
        ("mu", 0.1),
        ("lambda", 0.6),
        ("h", 2.0),
        ("C1", 1.0),
        ("C2", 2.0),
        ("A", 1.0),
        ("B", 1.0),
        ("g0", 1.0),
        ("g1", 1.0),
        ("g2", 1.0),
        ("g3", 1.0),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect()
}

fn dsl(s: &str) -> Option<Expr> {
    parse_expr(s, &Scope::open(Context::Ode)).ok()
}

/// Equations of the derived z-grouped system missing from the printed
/// one, and printed equations with no derived counterpart.
pub fn system_discrepancies(model: &str, printed: &[Expr], derived: &BTreeMap<u32, Expr>) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    for (k, d) in derived {
        if !printed.iter().any(|p| equal_up_to_scale(p, d)) {
            out.push(Discrepancy {
                model: model.to_string(),
                kind: "absent-from-printed".into(),
                equation: format!("z^{k}: {d} = 0"),
                detail: format!("coefficient of z^{k} is not among the printed equations"),
            });
        }
    }
    for p in printed {
        if !derived.values().any(|d| equal_up_to_scale(p, d)) {
            out.push(Discrepancy {
                model: model.to_string(),
                kind: "printed-not-derived".into(),
                equation: format!("{p} = 0"),
                detail: "no derived coefficient equation equals it up to a constant factor".into(),
            });
        }
    }
    out
}

fn same(a: &Expr, b: &Expr, seed: u64) -> bool {
    is_zero_expr(&clear_denominators(&(a.clone() - b.clone())), seed)
}

fn compare(
    cat: &BTreeMap<Symbol, Expr>,
    unknowns: &[String],
    b: &DerivedBranch,
    seed: u64,
) -> (Vec<String>, Vec<String>) {
    let (mut agree, mut differ) = (Vec::new(), Vec::new());
    for u in unknowns {
        let c = cat.get(&Symbol::new(u));
        let d = b.assignments.get(u).and_then(|s| dsl(s));
        let ok = match (c, d) {
            (None, None) => true,
            (Some(x), Some(y)) => same(x, &y, seed),
            _ => false,
        };
        if ok {
            agree.push(u.clone());
        } else {
            differ.push(u.clone());
        }
    }
    (agree, differ)
}

fn match_entry(
    cat: &BTreeMap<Symbol, Expr>,
    runs: &[&DerivedRun],
    seed: u64,
) -> MatchStatus {
    if runs.is_empty() {
        return MatchStatus::NotDerived;
    }
    let mut best: Option<(String, Vec<String>, Vec<String>)> = None;
    for run in runs {
        for b in &run.branches {
            let (agree, differ) = compare(cat, &run.unknowns, b, seed);
            if differ.is_empty() {
                return MatchStatus::Matched { branch: b.id.clone() };
            }
            let better = best.as_ref().is_none_or(|(_, a, _)| agree.len() > a.len());
            if !agree.is_empty() && better {
                best = Some((b.id.clone(), agree, differ));
            }
        }
    }
    match best {
        Some((branch, agree, differ)) => MatchStatus::Partial { branch, agree, differ },
        None => MatchStatus::Unmatched,
    }
}

fn model_for(catalog: &Catalog, name: &str, runs: &[DerivedRun]) -> Result<ModelSpec, CatalogError> {
    if let Some(run) = runs.iter().find(|r| r.model.name.as_deref() == Some(name)) {
        if let Ok(m) = run.model.to_model() {
            return Ok(m);
        }
    }
    let cm = catalog.model(name).ok_or_else(|| CatalogError::Entry {
        locator: name.to_string(),
        msg: "unknown model".into(),
    })?;
    catalog.load_model(cm)
}

fn residual_or_domain(
    locator: &str,
    target: &str,
    grid: &Grid2d,
    r: Result<ResidualReport, VerifyError>,
) -> Result<ResidualReport, FidelityError> {
    match r {
        Ok(r) => Ok(r),
        Err(VerifyError::Unbound(names)) => Err(FidelityError::Verify {
            locator: locator.to_string(),
            source: VerifyError::Unbound(names),
        }),
        Err(e) => Ok(ResidualReport::out_of_domain(target, &grid.to_string(), e.to_string())),
    }
}

/// Everything a residual check needs besides the branch itself.
struct Setup {
    model: ModelSpec,
    frame: TravelingWaveFrame,
    closure: ClosureCase,
    order: usize,
    bindings: BTreeMap<String, f64>,
}

impl Setup {
    fn new(
        locator: &str,
        model: ModelSpec,
        sigma: i8,
        order: Option<usize>,
        case: ClosureKind,
        defaults: &BTreeMap<String, f64>,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Setup, FidelityError> {
        let frame = TravelingWaveFrame::with_sigma(sigma);
        let order = match order {
            Some(n) => n,
            None => apply_wave_transform(&model, &frame)
                .ok()
                .and_then(|r| compute_balance(&r).ok())
                .unwrap_or(1),
        };
        let closure = closure_formula(case, &Expr::sym("lambda")).map_err(|err| CatalogError::Entry {
            locator: locator.to_string(),
            msg: err.to_string(),
        })?;
        let mut bindings = default_bindings();
        bindings.extend(model.bindings.iter().map(|(k, v)| (k.clone(), *v)));
        bindings.extend(defaults.iter().map(|(k, v)| (k.clone(), *v)));
        bindings.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(Setup {
            model,
            frame,
            closure,
            order,
            bindings,
        })
    }

    /// Hermite residual at the nodes (with a lambda locus when one
    /// exists) and the PDE residual.
    fn check(
        &self,
        locator: &str,
        assignments: &BTreeMap<Symbol, Expr>,
        roots: BTreeMap<Symbol, Expr>,
        opts: &FidelityOptions,
    ) -> Result<(ResidualReport, ResidualReport), FidelityError> {
        let mut assignments = assignments.clone();
        assignments.retain(|k, v| v.as_sym() != Some(k));
        let cand = Candidate {
            assignments: assignments.clone(),
            roots,
        };
        let prob = PdeProblem {
            model: &self.model,
            frame: &self.frame,
            closure: &self.closure,
            order: self.order,
            bindings: &self.bindings,
            method: opts.method,
        };
        let mut ode = residual_or_domain(locator, "hermite", &opts.grid, ode_residual_on_nodes(&cand, &prob, &opts.grid))?;
        if matches!(ode.classification, Classification::Inconsistent | Classification::Unresolved) {
            let z = substitute_symbols(&self.closure.z, &assignments);
            let lambda = assignments
                .get(&Symbol::new("lambda"))
                .cloned()
                .unwrap_or_else(|| Expr::sym("lambda"));
            if let Some((s, v)) = find_locus(&hermite_residual(&z, &lambda), &[Symbol::new("lambda")]) {
                ode.locus = Some(format!("{s} = {v}"));
                ode.classification = classify(ode.max_abs, ode.scale, true, ode.failures, ode.points);
            }
        }
        let pde = residual_or_domain(locator, "pde", &opts.grid, pde_residual(&cand, &prob, &opts.grid))?;
        Ok((ode, pde))
    }
}

fn parse_branch(run: &DerivedRun, b: &DerivedBranch) -> Result<BTreeMap<Symbol, Expr>, FidelityError> {
    b.assignments
        .iter()
        .map(|(k, v)| {
            dsl(v).map(|e| (Symbol::new(k), e)).ok_or_else(|| {
                FidelityError::from(CatalogError::Entry {
                    locator: b.id.clone(),
                    msg: format!("`{k}` in a run of {}: cannot parse `{v}`", run_name(run)),
                })
            })
        })
        .collect()
}

fn run_name(run: &DerivedRun) -> String {
    run.model.name.clone().unwrap_or_else(|| "model".into())
}

/// Residual checks for one derived branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCheck {
    pub branch: String,
    pub model: String,
    pub case: ClosureKind,
    pub mode: String,
    pub ode: ResidualReport,
    pub pde: ResidualReport,
    pub classification: Classification,
}

/// Residual reports and match status for every catalog row of the models
/// the runs cover, plus checks of the derived branches themselves.
pub fn fidelity_report(
    runs: &[DerivedRun],
    catalog: &Catalog,
    opts: &FidelityOptions,
) -> Result<FidelityReport, FidelityError> {
    let covered: Vec<String> = catalog
        .models
        .iter()
        .filter(|m| runs.iter().any(|r| r.model.name.as_deref() == Some(m.name.as_str())))
        .map(|m| m.name.clone())
        .collect();
    let mut entries = Vec::new();
    let mut setups: BTreeMap<(String, ClosureKind), Setup> = BTreeMap::new();
    for e in catalog.entries.iter().filter(|e| covered.contains(&e.model)) {
        let cm = catalog.model(&e.model).expect("validated");
        let key = (e.model.clone(), e.case);
        if !setups.contains_key(&key) {
            let model = model_for(catalog, &e.model, runs)?;
            let setup = Setup::new(&e.locator, model, cm.sigma, cm.order, e.case, &cm.defaults, &opts.overrides)?;
            setups.insert(key.clone(), setup);
        }
        let setup = &setups[&key];
        let assignments = e.parsed_assignments()?;
        let (ode, pde) = setup.check(&e.locator, &assignments, e.parsed_roots()?, opts)?;
        let scenario_runs: Vec<&DerivedRun> = runs
            .iter()
            .filter(|r| r.scenario.as_deref() == Some(e.scenario.as_str()))
            .collect();
        let mut cat = assignments.clone();
        cat.retain(|k, v| v.as_sym() != Some(k));
        let matched = match_entry(&cat, &scenario_runs, opts.probe_seed);
        let mut notes = e.notes.clone();
        if let Some(run) = scenario_runs.first() {
            let outside: Vec<&str> = e
                .assignments
                .keys()
                .filter(|k| !run.unknowns.contains(k))
                .map(|k| k.as_str())
                .collect();
            if !outside.is_empty() {
                notes.push(format!("assigns symbols outside the solved unknowns: {}", outside.join(", ")));
            }
        }
        let classification = pde.classification;
        entries.push(FidelityEntry {
            locator: e.locator.clone(),
            model: e.model.clone(),
            case: e.case,
            transcription: e.assignments.clone(),
            roots: e.roots.clone(),
            matched,
            ode,
            pde,
            classification,
            notes,
        });
    }
    let mut derived = Vec::new();
    for run in runs {
        let name = run_name(run);
        let model = run.model.to_model().map_err(|err| CatalogError::Entry {
            locator: name.clone(),
            msg: err.to_string(),
        })?;
        let empty = BTreeMap::new();
        let defaults = catalog.model(&name).map_or(&empty, |m| &m.defaults);
        let setup = Setup::new(&name, model, run.frame.sigma, Some(run.order), run.case, defaults, &opts.overrides)?;
        for b in &run.branches {
            let assignments = parse_branch(run, b)?;
            let (ode, pde) = setup.check(&b.id, &assignments, BTreeMap::new(), opts)?;
            derived.push(BranchCheck {
                branch: b.id.clone(),
                model: name.clone(),
                case: run.case,
                mode: run.mode.clone(),
                classification: pde.classification,
                ode,
                pde,
            });
        }
    }
    let mut counts = Vec::new();
    let mut discrepancies = Vec::new();
    for cm in catalog.models.iter().filter(|m| covered.contains(&m.name)) {
        let model_runs = || runs.iter().filter(|r| r.model.name.as_deref() == Some(cm.name.as_str()));
        counts.push(ModelCount {
            model: cm.name.clone(),
            catalog_rows: catalog.entries_for(&cm.name).count(),
            derived_branches: model_runs().map(|r| r.branches.len()).sum(),
            claimed: cm.claimed_branches,
        });
        let run = model_runs().find(|r| r.mode == "paper" && !r.system.is_empty());
        if let (Some(run), false) = (run, cm.printed_system.is_empty()) {
            let derived: BTreeMap<u32, Expr> = run
                .system
                .iter()
                .filter_map(|(k, s)| dsl(s).map(|e| (*k, e)))
                .collect();
            discrepancies.extend(system_discrepancies(&cm.name, &catalog.printed_system(cm), &derived));
        }
    }
    Ok(FidelityReport {
        entries,
        derived,
        counts,
        discrepancies,
    })
}
