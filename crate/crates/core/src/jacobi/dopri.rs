//! Adaptive Dormand–Prince 5(4) stepping for a two-dimensional system.

pub(crate) type State = [f64; 2];

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Fourth-order embedded weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum StepFailure {
    /// The right-hand side could not be evaluated at this abscissa.
    Rhs(f64),
    /// Step size collapsed below the floating point resolution at this abscissa.
    Underflow(f64),
    TooManySteps,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, meeting the mixed
/// absolute/relative local error bound `tol` on every accepted step.
/// `h` carries the step size between calls.
pub(crate) fn integrate<F>(
    f: &F,
    t0: f64,
    t1: f64,
    y0: State,
    tol: f64,
    h: &mut f64,
) -> Result<State, StepFailure>
where
    F: Fn(f64, State) -> Option<State>,
{
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut y = y0;
    if *h <= 0.0 {
        *h = ((t1 - t0).abs() / 16.0).max(1e-6);
    }
    for _ in 0..MAX_STEPS {
        let rest = (t1 - t).abs();
        if rest <= 1e-14 * (1.0 + t1.abs()) {
            return Ok(y);
        }
        let step = h.min(rest);
        let (y_new, err) = trial(f, t, y, dir * step)?;
        let scale = |i: usize| tol * (1.0 + y[i].abs().max(y_new[i].abs()));
        let ratio = (0..2)
            .map(|i| err[i].abs() / scale(i))
            .fold(0.0_f64, f64::max);
        if ratio <= 1.0 {
            t += dir * step;
            y = y_new;
            if step == rest {
                t = t1;
            }
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        *h = step * factor;
        if *h < 1e-14 * (1.0 + t.abs()) {
            return Err(StepFailure::Underflow(t));
        }
    }
    Err(StepFailure::TooManySteps)
}

fn trial<F>(f: &F, t: f64, y: State, h: f64) -> Result<(State, State), StepFailure>
where
    F: Fn(f64, State) -> Option<State>,
{
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..2 {
                ys[i] += h * A[s][j] * kj[i];
            }
        }
        let ts = t + C[s] * h;
        k[s] = f(ts, ys).ok_or(StepFailure::Rhs(ts))?;
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for (s, ks) in k.iter().enumerate() {
        for i in 0..2 {
            y5[i] += h * B5[s] * ks[i];
            err[i] += h * (B5[s] - B4[s]) * ks[i];
        }
    }
    Ok((y5, err))
}
