//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! The right-hand side and an optional state guard may fail; a failed step is
//! retried with a smaller step and the run stops once the step underflows,
//! reporting why. Requested output times are hit exactly (the step is
//! clipped to land on them) and every accepted step keeps the coefficients of
//! the method's 4th-order continuous extension for dense output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// First trial step; chosen from the span when `None`.
    pub h_init: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..OdeOptions::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 200_000,
            h_init: None,
        }
    }
}

/// Why an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Completed,
    /// The guard or the right-hand side reported leaving the domain.
    DomainEdge,
    /// The right-hand side reported a singularity, or the step budget ran out.
    Singular,
}

#[derive(Debug, Clone, Copy)]
pub struct Knot<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
    /// Continuous-extension coefficients of the step that ended here,
    /// relative to the previous knot (zero for the initial point).
    cont: [[f64; N]; 4],
}

#[derive(Debug, Clone)]
pub struct OdeRun<const N: usize> {
    /// Accepted steps in integration order, starting with the initial point.
    pub knots: Vec<Knot<N>>,
    /// Values at the requested output times that were reached, in order.
    pub outputs: Vec<[f64; N]>,
    pub stop: Stop,
    pub message: Option<String>,
}

impl<const N: usize> OdeRun<N> {
    pub fn t_last(&self) -> f64 {
        self.knots.last().map(|k| k.t).unwrap_or(f64::NAN)
    }

    pub fn y_last(&self) -> [f64; N] {
        self.knots.last().map(|k| k.y).unwrap_or([f64::NAN; N])
    }

    pub fn completed(&self) -> bool {
        self.stop == Stop::Completed
    }

    /// Dense output between accepted steps; `None` outside the integrated
    /// range.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let first = self.knots.first()?;
        if self.knots.len() == 1 {
            return (t == first.t).then_some(first.y);
        }
        let forward = self.knots[1].t > first.t;
        let key = |k: &Knot<N>| if forward { k.t } else { -k.t };
        let tk = if forward { t } else { -t };
        let last = self.knots.last()?;
        if tk < key(first) || tk > key(last) {
            return None;
        }
        let i = self
            .knots
            .partition_point(|k| key(k) <= tk)
            .clamp(1, self.knots.len() - 1);
        let (a, b) = (&self.knots[i - 1], &self.knots[i]);
        let s = (t - a.t) / (b.t - a.t);
        let s1 = 1.0 - s;
        let [r2, r3, r4, r5] = &b.cont;
        let mut out = [0.0; N];
        for j in 0..N {
            out[j] = a.y[j] + s * (r2[j] + s1 * (r3[j] + s * (r4[j] + s1 * r5[j])));
        }
        Some(out)
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Weights of the continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

// Difference between the 5th and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo<const N: usize>(y: &[f64; N], h: f64, coef: &[f64], ks: &[[f64; N]]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in coef.iter().zip(ks) {
        if *c != 0.0 {
            for j in 0..N {
                out[j] += h * c * k[j];
            }
        }
    }
    out
}

fn classify(e: &Error) -> Stop {
    match e {
        Error::Singularity(_) => Stop::Singular,
        _ => Stop::DomainEdge,
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `outputs` must be ordered in the direction of integration and lie
/// between `t0` and `t_end`. `guard` is checked at every accepted point.
pub fn integrate<const N: usize, R, G>(
    mut rhs: R,
    mut guard: G,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    outputs: &[f64],
    opts: &OdeOptions,
) -> OdeRun<N>
where
    R: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> Result<()>,
{
    let mut run = OdeRun {
        knots: Vec::new(),
        outputs: Vec::with_capacity(outputs.len()),
        stop: Stop::Completed,
        message: None,
    };
    let start = guard(t0, &y0).and_then(|_| rhs(t0, &y0));
    let dy0 = match start {
        Ok(d) => d,
        Err(e) => {
            run.stop = classify(&e);
            run.message = Some(e.to_string());
            run.knots.push(Knot {
                t: t0,
                y: y0,
                dy: [f64::NAN; N],
                cont: [[0.0; N]; 4],
            });
            return run;
        }
    };
    run.knots.push(Knot {
        t: t0,
        y: y0,
        dy: dy0,
        cont: [[0.0; N]; 4],
    });
    let span = t_end - t0;
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] == t0 {
        run.outputs.push(y0);
        next_out += 1;
    }
    if span == 0.0 {
        return run;
    }
    let dir = span.signum();
    let h_min = 1e-13 * span.abs().max(t0.abs());
    let mut h = opts.h_init.unwrap_or(span.abs() * 1e-2).abs().min(span.abs()) * dir;
    let (mut t, mut y, mut k1) = (t0, y0, dy0);
    let mut last_failure: Option<Error> = None;
    let mut steps = 0usize;

    while (t_end - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            run.stop = Stop::Singular;
            run.message = Some(format!("step budget of {} exhausted at t = {t}", opts.max_steps));
            return run;
        }
        steps += 1;
        let target = if next_out < outputs.len() {
            outputs[next_out]
        } else {
            t_end
        };
        let landing = (target - t) * dir <= h.abs() * 1.0000001;
        let h_try = if landing { target - t } else { h };

        let attempt = dopri_step(&mut rhs, &mut guard, t, &y, &k1, h_try, opts);
        match attempt {
            Ok((y_new, ks, err)) if err <= 1.0 => {
                let cont = continuation(&y, &y_new, &ks, h_try);
                t = if landing { target } else { t + h_try };
                y = y_new;
                k1 = ks[6];
                run.knots.push(Knot { t, y, dy: k1, cont });
                while next_out < outputs.len() && (outputs[next_out] - t) * dir <= 0.0 {
                    run.outputs.push(y);
                    next_out += 1;
                }
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                let grow = if last_failure.is_some() { grow.min(1.0) } else { grow };
                last_failure = None;
                // Keep the controller's step when landing shortened this one.
                let base = if landing { h.abs().max(h_try.abs()) } else { h_try.abs() };
                h = base * grow * dir;
            }
            Ok((_, _, err)) => {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            Err(e) => {
                h = h_try * 0.25;
                last_failure = Some(e);
            }
        }
        if h.abs() < h_min {
            let e = last_failure.unwrap_or_else(|| Error::Singularity(format!("step size underflow at t = {t}")));
            run.stop = classify(&e);
            run.message = Some(format!("stopped at t = {t}: {e}"));
            return run;
        }
    }
    run
}

type StepResult<const N: usize> = Result<([f64; N], [[f64; N]; 7], f64)>;

fn continuation<const N: usize>(y: &[f64; N], y_new: &[f64; N], ks: &[[f64; N]; 7], h: f64) -> [[f64; N]; 4] {
    let mut c = [[0.0; N]; 4];
    for j in 0..N {
        let diff = y_new[j] - y[j];
        let bspl = h * ks[0][j] - diff;
        c[0][j] = diff;
        c[1][j] = bspl;
        c[2][j] = diff - h * ks[6][j] - bspl;
        c[3][j] = h * D.iter().zip(ks).map(|(d, k)| d * k[j]).sum::<f64>();
    }
    c
}

fn dopri_step<const N: usize, R, G>(
    rhs: &mut R,
    guard: &mut G,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &OdeOptions,
) -> StepResult<N>
where
    R: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> Result<()>,
{
    let mut ks = [[0.0; N]; 7];
    ks[0] = *k1;
    ks[1] = rhs(t + C[1] * h, &combo(y, h, &A2, &ks[..1]))?;
    ks[2] = rhs(t + C[2] * h, &combo(y, h, &A3, &ks[..2]))?;
    ks[3] = rhs(t + C[3] * h, &combo(y, h, &A4, &ks[..3]))?;
    ks[4] = rhs(t + C[4] * h, &combo(y, h, &A5, &ks[..4]))?;
    ks[5] = rhs(t + C[5] * h, &combo(y, h, &A6, &ks[..5]))?;
    let y_new = combo(y, h, &B, &ks[..6]);
    if y_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singularity(format!("non-finite state near t = {t}")));
    }
    guard(t + h, &y_new)?;
    ks[6] = rhs(t + h, &y_new)?;
    let mut acc = 0.0;
    for j in 0..N {
        let mut e = 0.0;
        for (c, k) in E.iter().zip(&ks) {
            e += c * k[j];
        }
        let sc = opts.atol + opts.rtol * y[j].abs().max(y_new[j].abs());
        acc += (h * e / sc).powi(2);
    }
    Ok((y_new, ks, (acc / N as f64).sqrt()))
}
