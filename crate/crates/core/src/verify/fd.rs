//! Central finite-difference stencils in one and two variables.

/// Five-point stencil weights and the power of `h` they divide by.
fn stencil(order: usize) -> ([f64; 5], i32) {
    match order {
        0 => ([0.0, 0.0, 1.0, 0.0, 0.0], 0),
        1 => ([1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0], 1),
        2 => ([-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0], 2),
        3 => ([-0.5, 1.0, 0.0, -1.0, 0.5], 3),
        4 => ([1.0, -4.0, 6.0, -4.0, 1.0], 4),
        _ => panic!("no stencil for derivative order {order}"),
    }
}

/// k-th derivative of `f` at `x` from the five points x + j*h, j = -2..2.
pub fn central<E>(f: &dyn Fn(f64) -> Result<f64, E>, x: f64, h: f64, k: usize) -> Result<f64, E> {
    let (w, p) = stencil(k);
    let mut acc = 0.0;
    for (j, wj) in w.iter().enumerate() {
        if *wj != 0.0 {
            acc += wj * f(x + (j as f64 - 2.0) * h)?;
        }
    }
    Ok(acc / h.powi(p))
}

/// d^(i+j) f / dx^i dt^j by nesting the one-dimensional stencils.
pub fn mixed<E>(
    f: &dyn Fn(f64, f64) -> Result<f64, E>,
    x: f64,
    t: f64,
    h: f64,
    i: usize,
    j: usize,
) -> Result<f64, E> {
    let inner = |xx: f64| central(&|tt: f64| f(xx, tt), t, h, j);
    central(&inner, x, h, i)
}

/// Step used for ODE residuals at `zeta`.
pub fn ode_step(zeta: f64) -> f64 {
    (1e-6 * zeta.abs()).max(1e-5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(f: fn(f64) -> f64) -> impl Fn(f64) -> Result<f64, ()> {
        move |x| Ok(f(x))
    }

    #[test]
    fn reproduces_sin_and_exp() {
        let h = 1e-3;
        for x in [0.1, 0.7, 1.3, 2.9] {
            let s = ok(f64::sin);
            let e = ok(f64::exp);
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            assert!(rel(central(&s, x, h, 1).unwrap(), x.cos()) < 1e-9);
            assert!(rel(central(&s, x, h, 2).unwrap(), -x.sin()) < 1e-9);
            assert!(rel(central(&e, x, h, 1).unwrap(), x.exp()) < 1e-9);
            assert!(rel(central(&e, x, h, 2).unwrap(), x.exp()) < 1e-9);
        }
    }

    #[test]
    fn mixed_partial() {
        let f = |x: f64, t: f64| -> Result<f64, ()> { Ok((x * t).sin()) };
        let (x, t) = (0.4, 0.9);
        let d = mixed(&f, x, t, 1e-3, 1, 1).unwrap();
        let exact = (x * t).cos() - x * t * (x * t).sin();
        assert!((d - exact).abs() < 1e-8);
    }
}
