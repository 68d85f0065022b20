//! Barycentric Chebyshev interpolation of jets on an interval.
//!
//! Solved profiles are stored as adjacent pieces with a break at `t = 0`, so
//! the initial jet is reproduced exactly; pieces shrink where the profile is
//! sharp.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::polar_norm::{NormJet, Profile};

/// Chebyshev points of the second kind on `[lo, hi]`, ordered from `lo`.
/// The endpoints are returned exactly.
pub fn cheb_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..=n)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == n {
                hi
            } else {
                mid - half * (PI * j as f64 / n as f64).cos()
            }
        })
        .collect()
}

/// Interpolant of `K`-component samples on Chebyshev nodes.
#[derive(Debug, Clone)]
pub struct ChebInterp<const K: usize> {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<[f64; K]>,
}

impl<const K: usize> ChebInterp<K> {
    /// `values[j]` belongs to `cheb_nodes(lo, hi, n)[j]`.
    pub fn new(lo: f64, hi: f64, values: Vec<[f64; K]>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation("interpolant needs at least two nodes".into()));
        }
        let n = values.len() - 1;
        let nodes = cheb_nodes(lo, hi, n);
        let weights = (0..=n)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Ok(ChebInterp { nodes, weights, values })
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn eval(&self, x: f64) -> [f64; K] {
        let mut num = [0.0; K];
        let mut den = 0.0;
        for ((&xj, &wj), vj) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let d = x - xj;
            if d == 0.0 {
                return *vj;
            }
            let c = wj / d;
            den += c;
            for k in 0..K {
                num[k] += c * vj[k];
            }
        }
        num.map(|v| v / den)
    }
}

/// Samples `K` components at `cheb_nodes(lo, hi, 2n)` and returns the
/// interpolant of the smallest `n` (doubling from `n_start` to `n_max`) whose
/// degree-`n` version reproduces the odd nodes to within `tol` relative to
/// each component's magnitude. The final interpolant uses all `2n + 1`
/// samples. Fails if `n_max` is reached without convergence.
pub fn adaptive<const K: usize, S>(
    lo: f64,
    hi: f64,
    n_start: usize,
    n_max: usize,
    tol: f64,
    mut sample: S,
) -> Result<ChebInterp<K>>
where
    S: FnMut(&[f64]) -> Result<Vec<[f64; K]>>,
{
    let mut n = n_start.max(2);
    loop {
        let nodes = cheb_nodes(lo, hi, 2 * n);
        let values = sample(&nodes)?;
        if values.len() != nodes.len() {
            return Err(Error::Singularity(format!(
                "sampler returned {} of {} node values on [{lo}, {hi}]",
                values.len(),
                nodes.len()
            )));
        }
        let coarse: Vec<[f64; K]> = values.iter().step_by(2).copied().collect();
        let coarse = ChebInterp::new(lo, hi, coarse)?;
        let mut scale = [0.0f64; K];
        for v in &values {
            for k in 0..K {
                scale[k] = scale[k].max(v[k].abs());
            }
        }
        // Components far below the largest one are held to the largest
        // one's scale, so rounding noise in a vanishing component passes.
        let floor = 1e-6 * scale.iter().fold(0.0f64, |a, &b| a.max(b));
        for v in scale.iter_mut() {
            *v = v.max(floor);
        }
        let mut worst = 0.0f64;
        for j in (1..2 * n).step_by(2) {
            let p = coarse.eval(nodes[j]);
            for k in 0..K {
                worst = worst.max((p[k] - values[j][k]).abs() / scale[k].max(1e-300));
            }
        }
        if worst <= tol {
            return ChebInterp::new(lo, hi, values);
        }
        if n >= n_max {
            return Err(Error::Singularity(format!(
                "Chebyshev fit on [{lo}, {hi}] did not converge: relative error {worst:e} with {} nodes",
                2 * n + 1
            )));
        }
        n *= 2;
    }
}

/// Covers the segment from `near` to `far` with interpolants from `fit`,
/// bisecting every piece that fails. Pieces are fitted in order of distance
/// from `near`; the first failure on a piece narrower than `min_width` ends
/// the cover there.
///
/// Returns the pieces ordered by position, the end of the cover and the
/// error that ended it early, if any.
pub fn cover<const K: usize, F>(
    near: f64,
    far: f64,
    min_width: f64,
    mut fit: F,
) -> (Vec<ChebInterp<K>>, f64, Option<Error>)
where
    F: FnMut(f64, f64) -> Result<ChebInterp<K>>,
{
    let mut pieces = Vec::new();
    // Stack of (near end, far end), the nearest piece on top.
    let mut todo = vec![(near, far)];
    while let Some((a, b)) = todo.pop() {
        match fit(a.min(b), a.max(b)) {
            Ok(c) => pieces.push(c),
            Err(e) => {
                if (b - a).abs() <= min_width {
                    pieces.sort_by(|p: &ChebInterp<K>, q| p.lo().total_cmp(&q.lo()));
                    return (pieces, a, Some(e));
                }
                let mid = 0.5 * (a + b);
                todo.push((mid, b));
                todo.push((a, mid));
            }
        }
    }
    pieces.sort_by(|p, q| p.lo().total_cmp(&q.lo()));
    (pieces, far, None)
}

/// A profile stored as Chebyshev interpolants of `(f, f', f'', f''')` on
/// adjacent intervals.
#[derive(Debug, Clone)]
pub struct PiecewiseJetProfile {
    pieces: Vec<ChebInterp<4>>,
}

impl PiecewiseJetProfile {
    /// `pieces` must be adjacent once ordered.
    pub fn new(mut pieces: Vec<ChebInterp<4>>) -> Result<Self> {
        pieces.sort_by(|p, q| p.lo().total_cmp(&q.lo()));
        for w in pieces.windows(2) {
            if w[0].hi() != w[1].lo() {
                return Err(Error::Domain(format!(
                    "profile pieces [{}, {}] and [{}, {}] are not adjacent",
                    w[0].lo(),
                    w[0].hi(),
                    w[1].lo(),
                    w[1].hi()
                )));
            }
        }
        Ok(PiecewiseJetProfile { pieces })
    }

    pub fn pieces(&self) -> &[ChebInterp<4>] {
        &self.pieces
    }
}

impl Profile for PiecewiseJetProfile {
    fn jet(&self, t: f64) -> Result<NormJet> {
        let i = self.pieces.partition_point(|p| p.hi() < t);
        let piece = self
            .pieces
            .get(i)
            .filter(|p| p.lo() <= t)
            .ok_or_else(|| Error::Domain(format!("no profile data at t = {t}")))?;
        let [f, df, d2f, d3f] = piece.eval(t);
        NormJet::new(t, f, df, d2f, d3f)
    }
}
