//! Orthonormal modal (Dubiner-type) basis of `P_n` on the unit tetrahedron.
//!
//! The collapsed-coordinate construction is rewritten with homogeneous Jacobi
//! polynomials `Q_m(X, Y) = Y^m P_m(X / Y)` so that every basis function is
//! evaluated as a plain polynomial, without the coordinate singularities of
//! the collapsed map. Gradients come out of forward-mode differentiation.

use std::ops::{Add, Mul, Sub};

use super::quadrature::volume_quadrature;

/// A value carrying its gradient with respect to `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual {
    pub const fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 3] }
    }

    pub(crate) fn affine(c0: f64, c: [f64; 3], p: &[f64; 3]) -> Self {
        Self {
            v: c0 + c[0] * p[0] + c[1] * p[1] + c[2] * p[2],
            d: c,
        }
    }

    fn scale(self, s: f64) -> Self {
        Self {
            v: self.v * s,
            d: [self.d[0] * s, self.d[1] * s, self.d[2] * s],
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, s: f64) -> Dual {
        self.scale(s)
    }
}

/// `Q_0..=Q_n` of the homogeneous Jacobi family `P^{(alpha, 0)}`.
fn homogeneous_jacobi(n: usize, alpha: f64, x: Dual, y: Dual) -> Vec<Dual> {
    let mut q = Vec::with_capacity(n + 1);
    q.push(Dual::constant(1.0));
    if n == 0 {
        return q;
    }
    q.push((y * alpha + x * (alpha + 2.0)) * 0.5);
    let y2 = y * y;
    for m in 2..=n {
        let m = m as f64;
        let s = 2.0 * m + alpha;
        let c_lin = (s - 1.0) * s * (s - 2.0);
        let c_const = (s - 1.0) * alpha * alpha;
        let c_prev = 2.0 * (m + alpha - 1.0) * (m - 1.0) * s;
        let denom = 2.0 * m * (m + alpha) * (s - 2.0);
        let i = q.len();
        let next = ((x * c_lin + y * c_const) * q[i - 1] - y2 * q[i - 2] * c_prev) * (1.0 / denom);
        q.push(next);
    }
    q
}

#[derive(Debug, Clone)]
pub struct ModalBasis {
    degree: usize,
    indices: Vec<(usize, usize, usize)>,
    inv_norms: Vec<f64>,
}

impl ModalBasis {
    pub fn new(degree: usize) -> Self {
        let mut indices = Vec::new();
        for i in 0..=degree {
            for j in 0..=degree - i {
                for k in 0..=degree - i - j {
                    indices.push((i, j, k));
                }
            }
        }
        let mut basis = Self {
            degree,
            inv_norms: vec![1.0; indices.len()],
            indices,
        };
        let rule = volume_quadrature(2 * degree).expect("degree within quadrature tables");
        let mut norms = vec![0.0; basis.len()];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            for (n, v) in norms.iter_mut().zip(basis.eval_dual(p)) {
                *n += w * v.v * v.v;
            }
        }
        basis.inv_norms = norms.iter().map(|n| 1.0 / n.sqrt()).collect();
        basis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub(crate) fn eval_dual(&self, p: &[f64; 3]) -> Vec<Dual> {
        let n = self.degree;
        let x1 = Dual::affine(-1.0, [2.0, 1.0, 1.0], p);
        let y1 = Dual::affine(1.0, [0.0, -1.0, -1.0], p);
        let x2 = Dual::affine(-1.0, [0.0, 2.0, 1.0], p);
        let y2 = Dual::affine(1.0, [0.0, 0.0, -1.0], p);
        let x3 = Dual::affine(-1.0, [0.0, 0.0, 2.0], p);
        let one = Dual::constant(1.0);

        let qa = homogeneous_jacobi(n, 0.0, x1, y1);
        let qb: Vec<Vec<Dual>> = (0..=n)
            .map(|i| homogeneous_jacobi(n - i, (2 * i + 1) as f64, x2, y2))
            .collect();
        let mut qc: Vec<Vec<Dual>> = Vec::with_capacity((n + 1) * (n + 1));
        for s in 0..=n {
            qc.push(homogeneous_jacobi(n - s, (2 * s + 2) as f64, x3, one));
        }
        self.indices
            .iter()
            .zip(&self.inv_norms)
            .map(|(&(i, j, k), s)| qa[i] * qb[i][j] * qc[i + j][k] * *s)
            .collect()
    }

    pub fn eval(&self, p: &[f64; 3]) -> Vec<f64> {
        self.eval_dual(p).iter().map(|d| d.v).collect()
    }

    /// Values and reference gradients of every mode at `p`.
    pub fn eval_with_grad(&self, p: &[f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
        self.eval_dual(p).iter().map(|d| (d.v, d.d)).unzip()
    }
}
