//! Oracles shared by the integration tests.
#![allow(dead_code)]

// Left-invariant Riemannian metric with orthonormal e1, e2 and
// [e1, e2] = e2. Levi-Civita connection by the Koszul formula
// ∇_X Y = ½([X,Y] - ad*_X Y - ad*_Y X), <ad*_X Y, Z> = <Y, [X,Z]>.
pub mod koszul {
    pub type V = [f64; 2];

    pub fn bracket(x: V, y: V) -> V {
        let det = x[0] * y[1] - x[1] * y[0];
        [0.0, det]
    }

    fn dot(x: V, y: V) -> f64 {
        x[0] * y[0] + x[1] * y[1]
    }

    fn ad_star(x: V, y: V) -> V {
        let e = [[1.0, 0.0], [0.0, 1.0]];
        [dot(y, bracket(x, e[0])), dot(y, bracket(x, e[1]))]
    }

    pub fn nabla(x: V, y: V) -> V {
        let b = bracket(x, y);
        let p = ad_star(x, y);
        let q = ad_star(y, x);
        [0.5 * (b[0] - p[0] - q[0]), 0.5 * (b[1] - p[1] - q[1])]
    }

    /// R(X, Y) Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z.
    pub fn riemann(x: V, y: V, z: V) -> V {
        let a = nabla(x, nabla(y, z));
        let b = nabla(y, nabla(x, z));
        let c = nabla(bracket(x, y), z);
        [a[0] - b[0] - c[0], a[1] - b[1] - c[1]]
    }

    pub fn sectional(x: V, y: V) -> f64 {
        let r = riemann(x, y, y);
        let area = dot(x, x) * dot(y, y) - dot(x, y).powi(2);
        dot(r, x) / area
    }
}
