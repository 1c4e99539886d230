//! Adaptive Dormand-Prince 5(4) integrator for real vector systems.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    /// Sum of the accepted local error estimates (max norm).
    pub error_estimate: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

/// Integrates `y' = f(x, y)` from `x0` to `x1 > x0`.
pub fn integrate_dp45<F>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: &[f64],
    rtol: f64,
    atol: f64,
    h0: f64,
) -> Result<(Vec<f64>, OdeStats), String>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(x1 > x0) {
        return Err(format!("empty interval [{x0}, {x1}]"));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut stats = OdeStats {
        steps: 0,
        rejected: 0,
        error_estimate: 0.0,
    };
    let mut x = x0;
    let mut h = h0.min(x1 - x0);
    f(x, &y, &mut k[0]);
    while x < x1 {
        if stats.steps + stats.rejected > MAX_STEPS {
            return Err("step limit reached".into());
        }
        let last = x + h >= x1;
        if last {
            h = x1 - x;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s);
            f(x + C[s] * h, &tmp, &mut tail[0]);
        }
        // tmp now holds the fifth-order solution (stage 7 evaluates there)
        let mut err: f64 = 0.0;
        let mut err_abs: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let e = (h * e).abs();
            let scale = atol + rtol * y[i].abs().max(tmp[i].abs());
            err = err.max(e / scale);
            err_abs = err_abs.max(e);
        }
        if !err.is_finite() {
            return Err("non-finite values".into());
        }
        if err <= 1.0 {
            x = if last { x1 } else { x + h };
            y.copy_from_slice(&tmp);
            k.swap(0, 6);
            stats.steps += 1;
            stats.error_estimate += err_abs;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * (1.0 + x.abs()) {
            return Err(format!("step size underflow at x = {x}"));
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let (y, stats) = integrate_dp45(|_, y, dy| dy[0] = y[0], 0.0, 1.0, &[1.0], 1e-12, 1e-14, 0.1).unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-10);
        assert!(stats.steps > 0);
        let (y, _) = integrate_dp45(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            10.0,
            &[1.0, 0.0],
            1e-11,
            1e-13,
            0.1,
        )
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8 && (y[1] + 10f64.sin()).abs() < 1e-8);
        assert!(integrate_dp45(|_, _, _| {}, 1.0, 0.0, &[0.0], 1e-8, 1e-8, 0.1).is_err());
    }
}
