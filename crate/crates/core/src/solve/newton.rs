//! Damped Newton refinement for systems the symbolic solver leaves open.

use crate::expr::{differentiate, eval, EvalError, Expr, Symbol};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the residual.
    pub tol: f64,
    /// Random perturbations tried when the Jacobian is singular.
    pub retries: usize,
    /// Random starting points tried after the seed.
    pub starts: usize,
    pub seed: u64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 100,
            tol: 1e-10,
            retries: 3,
            starts: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NewtonError {
    #[error("Newton iteration did not converge (best residual {best:.3e})")]
    Divergence { best: f64 },
    #[error("system has no unknowns")]
    Empty,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

struct System<'a> {
    eqs: &'a [Expr],
    jac: Vec<Vec<Expr>>,
    unknowns: &'a [Symbol],
    bindings: &'a BTreeMap<String, f64>,
}

impl System<'_> {
    fn env<'b>(&'b self, x: &'b [f64]) -> impl Fn(&str) -> Option<f64> + 'b {
        move |name: &str| {
            if let Some(i) = self.unknowns.iter().position(|u| u.as_str() == name) {
                return Some(x[i]);
            }
            self.bindings.get(name).copied()
        }
    }

    fn residual(&self, x: &[f64]) -> Result<DVector<f64>, EvalError> {
        let env = self.env(x);
        let v: Result<Vec<f64>, _> = self.eqs.iter().map(|e| eval(e, &env)).collect();
        Ok(DVector::from_vec(v?))
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let env = self.env(x);
        let mut m = DMatrix::zeros(self.eqs.len(), self.unknowns.len());
        for (i, row) in self.jac.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                m[(i, j)] = eval(d, &env)?;
            }
        }
        Ok(m)
    }
}

fn norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

/// Solve `eqs = 0` for `unknowns` numerically, other symbols taken from
/// `bindings`. Overdetermined systems use Gauss-Newton steps.
pub fn newton_refine(
    eqs: &[Expr],
    unknowns: &[Symbol],
    bindings: &BTreeMap<String, f64>,
    start: Option<&BTreeMap<Symbol, f64>>,
    opts: &NewtonOptions,
) -> Result<BTreeMap<Symbol, f64>, NewtonError> {
    if unknowns.is_empty() {
        return Err(NewtonError::Empty);
    }
    let sys = System {
        eqs,
        jac: eqs
            .iter()
            .map(|e| unknowns.iter().map(|u| differentiate(e, u.as_str())).collect())
            .collect(),
        unknowns,
        bindings,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(s) = start {
        starts.push(unknowns.iter().map(|u| s.get(u).copied().unwrap_or(0.5)).collect());
    }
    for _ in 0..opts.starts {
        starts.push(unknowns.iter().map(|_| rng.gen_range(-2.0..2.0)).collect());
    }
    let mut best = f64::INFINITY;
    for x0 in starts {
        match run(&sys, x0, opts, &mut rng) {
            Ok(x) => return Ok(unknowns.iter().cloned().zip(x).collect()),
            Err(r) => best = best.min(r),
        }
    }
    Err(NewtonError::Divergence { best })
}

/// One Newton run; on failure returns the smallest residual norm seen.
fn run(sys: &System, mut x: Vec<f64>, opts: &NewtonOptions, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, f64> {
    let mut retries = 0;
    let mut best = f64::INFINITY;
    let Ok(mut f) = sys.residual(&x) else {
        return Err(best);
    };
    for _ in 0..opts.max_iter {
        let fnorm = norm(&f);
        best = best.min(fnorm);
        if fnorm < opts.tol {
            return Ok(x);
        }
        let Ok(j) = sys.jacobian(&x) else {
            return Err(best);
        };
        let step = if j.nrows() == j.ncols() {
            j.clone().lu().solve(&(-&f))
        } else {
            let jt = j.transpose();
            (&jt * &j).lu().solve(&(-(&jt * &f)))
        };
        let step = match step {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                if retries >= opts.retries {
                    return Err(best);
                }
                retries += 1;
                for v in x.iter_mut() {
                    *v += rng.gen_range(-1e-3..1e-3);
                }
                match sys.residual(&x) {
                    Ok(nf) => f = nf,
                    Err(_) => return Err(best),
                }
                continue;
            }
        };
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
            if let Ok(nf) = sys.residual(&trial) {
                if norm(&nf) < fnorm || alpha < 1e-6 {
                    x = trial;
                    f = nf;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(best);
            }
        }
    }
    let fnorm = norm(&f);
    if fnorm < opts.tol {
        Ok(x)
    } else {
        Err(best.min(fnorm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    #[test]
    fn square_root_of_two() {
        let eqs = vec![s("x").powi(2) - Expr::int(2)];
        let u = vec![Symbol::new("x")];
        let start: BTreeMap<Symbol, f64> = [(Symbol::new("x"), 1.0)].into_iter().collect();
        let r = newton_refine(&eqs, &u, &BTreeMap::new(), Some(&start), &NewtonOptions::default()).unwrap();
        assert!((r[&Symbol::new("x")] - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn linear_system_with_parameter() {
        let eqs = vec![s("x") + s("y") - s("p"), s("x") - s("y")];
        let u = vec![Symbol::new("x"), Symbol::new("y")];
        let b: BTreeMap<String, f64> = [("p".to_string(), 3.0)].into_iter().collect();
        let r = newton_refine(&eqs, &u, &b, None, &NewtonOptions::default()).unwrap();
        assert!((r[&Symbol::new("x")] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn no_real_solution_diverges() {
        let eqs = vec![s("x").powi(2) + Expr::one()];
        let u = vec![Symbol::new("x")];
        let opts = NewtonOptions {
            starts: 4,
            ..NewtonOptions::default()
        };
        assert!(matches!(
            newton_refine(&eqs, &u, &BTreeMap::new(), None, &opts),
            Err(NewtonError::Divergence { .. })
        ));
    }
}
