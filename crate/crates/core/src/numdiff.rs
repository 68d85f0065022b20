//! Finite-difference stencils and sample grids.

use std::ops::{Add, Mul, Sub};

use crate::error::Result;

/// Five-point central first derivative.
pub fn d1_5pt<T, G>(mut g: G, x: f64, h: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    G: FnMut(f64) -> Result<T>,
{
    let (m2, m1, p1, p2) = (g(x - 2.0 * h)?, g(x - h)?, g(x + h)?, g(x + 2.0 * h)?);
    Ok(((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * h)))
}

/// Five-point central second derivative.
pub fn d2_5pt<T, G>(mut g: G, x: f64, h: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    G: FnMut(f64) -> Result<T>,
{
    let (m2, m1, c, p1, p2) = (g(x - 2.0 * h)?, g(x - h)?, g(x)?, g(x + h)?, g(x + 2.0 * h)?);
    Ok(((p1 + m1) * 16.0 - (p2 + m2) - c * 30.0) * (1.0 / (12.0 * h * h)))
}

/// Runs `estimate` at steps `h0, h0/2, h0/4, ...` (at most `halvings + 1`
/// of them), extrapolating each neighbouring pair for a method of error
/// order `order`. Returns the extrapolated value closest, in `norm`, to its
/// predecessor; halving stops once successive values drift apart by more
/// than twice the best gap seen, where rounding has taken over. Leading
/// steps at which `estimate` fails are skipped.
pub fn settle_steps<T, G, N>(mut estimate: G, h0: f64, halvings: usize, order: i32, norm: N) -> Result<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    G: FnMut(f64) -> Result<T>,
    N: Fn(T) -> f64,
{
    let fac = 1.0 / (2f64.powi(order) - 1.0);
    let mut h = h0;
    let mut first = estimate(h);
    let mut tries = halvings;
    while first.is_err() && tries > 0 {
        h *= 0.5;
        tries -= 1;
        first = estimate(h);
    }
    let mut raw = first?;
    let mut ext: Option<T> = None;
    let mut best: Option<(f64, T)> = None;
    for _ in 0..tries {
        h *= 0.5;
        let next = match estimate(h) {
            Ok(v) => v,
            Err(_) => break,
        };
        let e = next + (next - raw) * fac;
        raw = next;
        let Some(prev) = ext.replace(e) else { continue };
        let gap = norm(e - prev);
        match best {
            Some((g, _)) if gap >= g => {
                if gap > 2.0 * g {
                    break;
                }
            }
            _ => best = Some((gap, e)),
        }
    }
    Ok(best.map(|b| b.1).or(ext).unwrap_or(raw))
}

/// `n` evenly spaced points from `lo` to `hi`, both endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn central(g: &mut impl FnMut(f64) -> f64, x: f64, h: f64, order: u32) -> f64 {
    match order {
        1 => (g(x + h) - g(x - h)) / (2.0 * h),
        2 => (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h),
        _ => (g(x + 2.0 * h) - 2.0 * g(x + h) + 2.0 * g(x - h) - g(x - 2.0 * h)) / (2.0 * h * h * h),
    }
}

/// Derivative of order 1, 2 or 3 by Richardson extrapolation of central
/// differences (Ridders' tableau). Returns the estimate and its error.
pub fn ridders(mut g: impl FnMut(f64) -> f64, x: f64, h0: f64, order: u32) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    let order = order.clamp(1, 3);
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = central(&mut g, x, h, order);
    let mut best = (a[0][0], f64::INFINITY);
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = central(&mut g, x, h, order);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let err = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if err <= best.1 {
                best = (a[j][i], err);
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * best.1 {
            break;
        }
    }
    best
}
