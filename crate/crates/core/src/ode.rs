//! Adaptive Dormand–Prince 5(4) integration for small ODE systems.

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
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
// fifth-order weights equal the last row of A (FSAL)
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

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at each
/// of the ascending `outputs` (all `>= t0`). Steps are shortened to land on
/// every output time exactly.
pub fn dopri5<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    tol: Tolerance,
) -> Vec<[f64; N]> {
    let mut t = t0;
    let mut y = y0;
    let mut results = Vec::with_capacity(outputs.len());
    let span = outputs.last().map_or(0.0, |last| (last - t0).abs());
    let mut h = if span > 0.0 { span * 1e-4 } else { 1e-6 };
    let h_min = span * 1e-15;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);

    for &target in outputs {
        debug_assert!(target >= t, "outputs must be ascending");
        while t < target {
            let last_leg = target - t <= h;
            let step = if last_leg { target - t } else { h };
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    *yi += step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = f(t + C[s] * step, &ys);
            }
            let mut y5 = y;
            let mut err: f64 = 0.0;
            for i in 0..N {
                let incr5: f64 = (0..7).map(|s| B5[s] * k[s][i]).sum();
                let incr4: f64 = (0..7).map(|s| B4[s] * k[s][i]).sum();
                y5[i] = y[i] + step * incr5;
                let scale = tol.absolute + tol.relative * y[i].abs().max(y5[i].abs());
                err = err.max((step * (incr5 - incr4)).abs() / scale);
            }
            if err <= 1.0 || step <= h_min {
                t = if last_leg { target } else { t + step };
                y = y5;
                k[0] = k[6];
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !last_leg || err > 1.0 {
                h = (step * factor).max(h_min);
            }
        }
        results.push(y);
    }
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let out = dopri5(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            &[0.5, 1.0, 3.0],
            Tolerance {
                relative: 1e-12,
                absolute: 1e-14,
            },
        );
        for (t, y) in [0.5f64, 1.0, 3.0].iter().zip(&out) {
            assert!((y[0] - (-t).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn harmonic_oscillator_conserves_phase() {
        let w = 7.0;
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.37).collect();
        let out = dopri5(
            |_, y: &[f64; 2]| [y[1], -w * w * y[0]],
            0.0,
            [1.0, 0.0],
            &times,
            Tolerance {
                relative: 1e-12,
                absolute: 1e-14,
            },
        );
        for (t, y) in times.iter().zip(&out) {
            assert!((y[0] - (w * t).cos()).abs() < 1e-9, "t={t}: {}", y[0]);
        }
    }

    #[test]
    fn output_at_start_returns_initial_state() {
        let out = dopri5(|_, _y: &[f64; 1]| [1.0], 2.0, [3.0], &[2.0, 4.0], Tolerance { relative: 1e-10, absolute: 1e-12 });
        assert_eq!(out[0], [3.0]);
        assert!((out[1][0] - 5.0).abs() < 1e-12);
    }
}
