//! Confluent hypergeometric functions M(a, b, x) and U(a, b, x).

use super::gamma::{gamma, is_nonpositive_integer, rgamma};
use super::SpecFunError;

const MAX_TERMS: usize = 10_000;
const TERM_TOL: f64 = 1e-17;
/// Beyond this cancellation ratio the direct series is considered
/// ill-conditioned and the Kummer transform is tried.
const CONDITION_LIMIT: f64 = 1e3;
/// U switches from the connection formula to its asymptotic series here.
const U_ASYMPTOTIC_FROM: f64 = 18.0;

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_b(b: f64) -> Result<(), SpecFunError> {
    if is_nonpositive_integer(b) {
        return Err(SpecFunError::Domain(format!(
            "second Kummer parameter b = {b} is a nonpositive integer"
        )));
    }
    if !b.is_finite() {
        return Err(SpecFunError::Domain(format!("b = {b} is not finite")));
    }
    Ok(())
}

/// Direct power series Σ (a)_k/(b)_k x^k/k!. Returns the value and the
/// cancellation ratio Σ|t_k| / |Σ t_k|.
pub fn kummer_m_series(a: f64, b: f64, x: f64) -> Result<(f64, f64), SpecFunError> {
    check_b(b)?;
    let mut acc = Compensated::default();
    let mut abs_sum = 0.0;
    let mut term = 1.0;
    for k in 0..MAX_TERMS {
        acc.add(term);
        abs_sum += term.abs();
        let kf = k as f64;
        let ratio = (a + kf) / (b + kf) * x / (kf + 1.0);
        let next = term * ratio;
        if next == 0.0 {
            let v = acc.value();
            return Ok((v, cond(abs_sum, v)));
        }
        // Only stop once the terms are shrinking.
        let shrinking = ratio.abs() < 1.0;
        let v = acc.value();
        if shrinking && next.abs() <= TERM_TOL * v.abs() {
            acc.add(next);
            let v = acc.value();
            return Ok((v, cond(abs_sum + next.abs(), v)));
        }
        if !next.is_finite() {
            return Err(SpecFunError::NonConvergence(format!(
                "M({a}, {b}, {x}) series overflowed"
            )));
        }
        term = next;
    }
    Err(SpecFunError::NonConvergence(format!(
        "M({a}, {b}, {x}) did not converge in {MAX_TERMS} terms"
    )))
}

fn cond(abs_sum: f64, v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        abs_sum / v.abs()
    }
}

/// Kummer's confluent hypergeometric function M(a, b, x).
pub fn kummer_m(a: f64, b: f64, x: f64) -> Result<f64, SpecFunError> {
    check_b(b)?;
    if !(a.is_finite() && x.is_finite()) {
        return Err(SpecFunError::Domain(format!("M({a}, {b}, {x}) has non-finite input")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < -30.0 {
        let (v, _) = kummer_m_series(b - a, b, -x)?;
        return Ok(x.exp() * v);
    }
    let (v, c) = kummer_m_series(a, b, x)?;
    if x < 0.0 && c > CONDITION_LIMIT {
        let (w, c2) = kummer_m_series(b - a, b, -x)?;
        if c2 < c {
            return Ok(x.exp() * w);
        }
    }
    Ok(v)
}

/// Asymptotic series x^{-a} Σ (a)_k (a-b+1)_k / k! (-1/x)^k. Exact when
/// it terminates. Returns `None` when it stalls before reaching tolerance.
fn kummer_u_asymptotic(a: f64, b: f64, x: f64, tol: f64) -> Option<f64> {
    let c = a - b + 1.0;
    let mut acc = Compensated::default();
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..MAX_TERMS {
        acc.add(term);
        let kf = k as f64;
        let next = term * (a + kf) * (c + kf) / (kf + 1.0) * (-1.0 / x);
        if next == 0.0 {
            return Some(x.powf(-a) * acc.value());
        }
        if next.abs() <= tol * acc.value().abs() {
            acc.add(next);
            return Some(x.powf(-a) * acc.value());
        }
        if next.abs() > last && k > 2 {
            return None;
        }
        last = next.abs();
        term = next;
    }
    None
}

/// Tricomi's confluent hypergeometric function U(a, b, x) for x > 0 and
/// non-integer b.
pub fn kummer_u(a: f64, b: f64, x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain(format!("U requires x > 0, got {x}")));
    }
    if b.fract() == 0.0 {
        return Err(SpecFunError::Domain(format!(
            "U via the connection formula needs non-integer b, got {b}"
        )));
    }
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(SpecFunError::Domain(format!("U({a}, {b}, {x}) has non-finite input")));
    }
    // Polynomial cases: the asymptotic series terminates and is exact.
    if is_nonpositive_integer(a) || is_nonpositive_integer(a - b + 1.0) {
        if let Some(v) = kummer_u_asymptotic(a, b, x, 0.0) {
            return Ok(v);
        }
    }
    if x >= U_ASYMPTOTIC_FROM {
        if let Some(v) = kummer_u_asymptotic(a, b, x, TERM_TOL) {
            return Ok(v);
        }
        if x > 50.0 {
            return Err(SpecFunError::NonConvergence(format!(
                "U({a}, {b}, {x}): asymptotic series stalled"
            )));
        }
    }
    let c1 = gamma(1.0 - b) * rgamma(a - b + 1.0);
    let c2 = gamma(b - 1.0) * rgamma(a);
    let mut total = 0.0;
    if c1 != 0.0 {
        total += c1 * kummer_m(a, b, x)?;
    }
    if c2 != 0.0 {
        total += c2 * x.powf(1.0 - b) * kummer_m(a - b + 1.0, 2.0 - b, x)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_at_origin() {
        for (a, b) in [(0.3, 1.5), (-2.0, 0.5), (4.0, 7.25)] {
            assert_eq!(kummer_m(a, b, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn m_closed_form_exp() {
        // M(1, 2, x) = (e^x - 1)/x
        let v = kummer_m(1.0, 2.0, 1.0).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        // M(a, a, x) = e^x
        let v = kummer_m(2.5, 2.5, -7.0).unwrap();
        assert!(((v - (-7.0f64).exp()) / v).abs() < 1e-12);
    }

    #[test]
    fn m_rejects_nonpositive_integer_b() {
        assert!(matches!(kummer_m(1.0, -2.0, 0.5), Err(SpecFunError::Domain(_))));
    }

    #[test]
    fn m_large_negative_uses_transform() {
        // M(1, 2, x) = (e^x - 1)/x at x = -40
        let x = -40.0f64;
        let v = kummer_m(1.0, 2.0, x).unwrap();
        let expected = (x.exp() - 1.0) / x;
        assert!(((v - expected) / expected).abs() < 1e-13);
    }

    #[test]
    fn u_power_identity() {
        // U(a, a+1, x) = x^{-a}
        let v = kummer_u(0.5, 1.5, 4.0).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        let v = kummer_u(0.3, 1.3, 2.2).unwrap();
        assert!((v - 2.2f64.powf(-0.3)).abs() < 1e-12);
    }

    #[test]
    fn u_domain() {
        assert!(kummer_u(1.0, 2.0, 1.0).is_err());
        assert!(kummer_u(1.0, 1.5, 0.0).is_err());
        assert!(kummer_u(1.0, 1.5, -1.0).is_err());
    }

    #[test]
    fn u_terminating_polynomial() {
        // U(0, b, x) = 1, U(-1, b, x) = x - b
        assert_eq!(kummer_u(0.0, 1.5, 3.0).unwrap(), 1.0);
        assert!((kummer_u(-1.0, 1.5, 3.0).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn u_large_argument() {
        let v = kummer_u(0.5, 1.5, 1e4).unwrap();
        assert!((v * 100.0 - 1.0).abs() < 1e-6);
    }
}
