//! Shared reference integrator.

use hermite_wave::specfun::is_degenerate_lambda;
use statrs::function::gamma::gamma as ref_gamma;

/// Adaptive Dormand-Prince 5(4) integration of y' = f(t, y) from t0 to t1.
pub fn dopri<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    rtol: f64,
) -> [f64; N] {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let (mut t, mut y) = (t0, y0);
    let mut h = (t1 - t0) / 100.0;
    while t < t1 {
        h = h.min(t1 - t);
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let (mut d5, mut d4) = (0.0, 0.0);
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let sc = rtol * (1e-30 + y[i].abs().max(y5[i].abs()));
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    y
}

/// Solution of z'' = 2 zeta z' + lambda z from z(0), z'(0).
pub fn integrate_hermite(lambda: f64, z0: f64, dz0: f64, zeta: f64) -> f64 {
    if zeta == 0.0 {
        return z0;
    }
    dopri(
        |t, y: &[f64; 2]| [y[1], 2.0 * t * y[1] + lambda * y[0]],
        0.0,
        [z0, dz0],
        zeta,
        1e-13,
    )[0]
}

/// Initial values of C1*zeta*M(a,3/2,zeta^2) + C2*(second solution) at 0.
/// zeta*U(a,3/2,zeta^2) = G(1/2)/G(a) * even + G(-1/2)/G(a-1/2) * odd.
pub fn initial_values(lambda: f64, c1: f64, c2: f64) -> (f64, f64) {
    let a = 0.5 + lambda / 4.0;
    if is_degenerate_lambda(lambda) {
        return (c2, c1);
    }
    let even = ref_gamma(0.5) / ref_gamma(a);
    let odd = ref_gamma(-0.5) / ref_gamma(a - 0.5);
    (c2 * even, c1 + c2 * odd)
}
