//! Real solutions of z'' = 2 zeta z' + lambda z.
//!
//! Substituting x = zeta^2 turns the equation into Kummer's equation, giving
//! the odd solution zeta*M(a, 3/2, zeta^2) and the companion
//! zeta*U(a, 3/2, zeta^2) (zeta > 0), with a = 1/2 + lambda/4. When a is a
//! nonpositive integer the U companion collapses onto the odd solution and
//! the even solution M(lambda/4, 1/2, zeta^2) takes its place.

use super::gamma::{is_nonpositive_integer, pochhammer};
use super::kummer::{kummer_m, kummer_u};
use super::SpecFunError;

/// Value and first two derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteJet {
    pub z: f64,
    pub dz: f64,
    pub d2z: f64,
}

impl HermiteJet {
    fn scale(self, c: f64) -> Self {
        HermiteJet {
            z: c * self.z,
            dz: c * self.dz,
            d2z: c * self.d2z,
        }
    }

    fn add(self, o: Self) -> Self {
        HermiteJet {
            z: self.z + o.z,
            dz: self.dz + o.dz,
            d2z: self.d2z + o.d2z,
        }
    }

    /// z'' - 2 zeta z' - lambda z.
    pub fn residual(&self, lambda: f64, zeta: f64) -> f64 {
        self.d2z - 2.0 * zeta * self.dz - lambda * self.z
    }
}

fn odd_param(lambda: f64) -> f64 {
    0.5 + lambda / 4.0
}

/// True when lambda = -2 - 4k, where the U companion degenerates.
pub fn is_degenerate_lambda(lambda: f64) -> bool {
    is_nonpositive_integer(odd_param(lambda))
}

/// F(x), F'(x), F''(x) for F = M(a, b, .) or U(a, b, .).
fn kummer_derivs(u: bool, a: f64, b: f64, x: f64) -> Result<[f64; 3], SpecFunError> {
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let kf = k as f64;
        *slot = if u {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let coef = sign * pochhammer(a, k);
            if coef == 0.0 {
                0.0
            } else {
                coef * kummer_u(a + kf, b + kf, x)?
            }
        } else {
            let coef = pochhammer(a, k) / pochhammer(b, k);
            if coef == 0.0 {
                0.0
            } else {
                coef * kummer_m(a + kf, b + kf, x)?
            }
        };
    }
    Ok(out)
}

/// g(zeta) = F(zeta^2) and its first two zeta-derivatives.
fn squared_arg(f: [f64; 3], zeta: f64) -> HermiteJet {
    HermiteJet {
        z: f[0],
        dz: 2.0 * zeta * f[1],
        d2z: 2.0 * f[1] + 4.0 * zeta * zeta * f[2],
    }
}

/// zeta * g(zeta) from the jet of g.
fn times_zeta(g: HermiteJet, zeta: f64) -> HermiteJet {
    HermiteJet {
        z: zeta * g.z,
        dz: g.z + zeta * g.dz,
        d2z: 2.0 * g.dz + zeta * g.d2z,
    }
}

fn odd_m(lambda: f64, zeta: f64) -> Result<HermiteJet, SpecFunError> {
    let f = kummer_derivs(false, odd_param(lambda), 1.5, zeta * zeta)?;
    Ok(times_zeta(squared_arg(f, zeta), zeta))
}

fn odd_u(lambda: f64, zeta: f64) -> Result<HermiteJet, SpecFunError> {
    if !(zeta > 0.0) {
        return Err(SpecFunError::Domain(format!(
            "the U-based solution needs zeta > 0, got {zeta}"
        )));
    }
    let f = kummer_derivs(true, odd_param(lambda), 1.5, zeta * zeta)?;
    Ok(times_zeta(squared_arg(f, zeta), zeta))
}

/// Even solution M(lambda/4, 1/2, zeta^2) with its derivatives.
pub fn hermite_even(lambda: f64, zeta: f64) -> Result<HermiteJet, SpecFunError> {
    let f = kummer_derivs(false, lambda / 4.0, 0.5, zeta * zeta)?;
    Ok(squared_arg(f, zeta))
}

/// C1*zeta*M(a, 3/2, zeta^2) + C2*zeta*U(a, 3/2, zeta^2), a = 1/2 + lambda/4,
/// with the C2 part replaced by the even solution at degenerate lambda.
pub fn hermite_jet(lambda: f64, c1: f64, c2: f64, zeta: f64) -> Result<HermiteJet, SpecFunError> {
    let mut acc = HermiteJet {
        z: 0.0,
        dz: 0.0,
        d2z: 0.0,
    };
    if c1 != 0.0 {
        acc = acc.add(odd_m(lambda, zeta)?.scale(c1));
    }
    if c2 != 0.0 {
        let second = if is_degenerate_lambda(lambda) {
            hermite_even(lambda, zeta)?
        } else {
            odd_u(lambda, zeta)?
        };
        acc = acc.add(second.scale(c2));
    }
    Ok(acc)
}

pub fn hermite_z(lambda: f64, c1: f64, c2: f64, zeta: f64) -> Result<f64, SpecFunError> {
    hermite_jet(lambda, c1, c2, zeta).map(|j| j.z)
}

pub fn hermite_z_prime(lambda: f64, c1: f64, c2: f64, zeta: f64) -> Result<f64, SpecFunError> {
    hermite_jet(lambda, c1, c2, zeta).map(|j| j.dz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_solution_at_origin() {
        for lambda in [-3.0, 0.6, 5.0] {
            let j = hermite_jet(lambda, 1.0, 0.0, 0.0).unwrap();
            assert_eq!(j.z, 0.0);
            assert_eq!(j.dz, 1.0);
        }
    }

    #[test]
    fn even_solution_at_origin() {
        let lambda = 0.6;
        let j = hermite_even(lambda, 0.0).unwrap();
        assert_eq!(j.z, 1.0);
        assert_eq!(j.dz, 0.0);
        assert!((j.d2z - lambda).abs() < 1e-15);
    }

    #[test]
    fn u_component_rejects_nonpositive_zeta() {
        assert!(hermite_z(0.6, 0.0, 1.0, 0.0).is_err());
        assert!(hermite_z(0.6, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn analytic_jet_satisfies_equation() {
        for lambda in [-2.0, -1.0, 0.6, 2.0] {
            for &zeta in &[0.1, 0.7, 1.5, 3.0] {
                let j = hermite_jet(lambda, 1.0, 1.0, zeta).unwrap();
                let scale = j.d2z.abs().max((2.0 * zeta * j.dz).abs()).max((lambda * j.z).abs());
                assert!(j.residual(lambda, zeta).abs() < 1e-10 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn degenerate_lambda_routes_to_even_basis() {
        assert!(is_degenerate_lambda(-2.0));
        assert!(is_degenerate_lambda(-6.0));
        assert!(!is_degenerate_lambda(-1.0));
        let a = hermite_jet(-2.0, 0.0, 1.0, 0.5).unwrap();
        let b = hermite_even(-2.0, 0.5).unwrap();
        assert_eq!(a, b);
    }
}
