//! Collapsed-coordinate (Stroud conical product) quadrature on the unit
//! simplices.
//!
//! The unit tetrahedron is `{x, y, z >= 0, x + y + z <= 1}` (measure 1/6) and
//! the unit triangle is `{x, y >= 0, x + y <= 1}` (measure 1/2). Rules are
//! built from Gauss-Jacobi rules on `[0, 1]` through the Duffy map, so every
//! weight is positive and every point lies strictly inside the simplex.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Highest exactness degree served by [`volume_quadrature`] and
/// [`face_quadrature`].
pub const MAX_QUADRATURE_DEGREE: usize = 30;

#[derive(Debug, Clone)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

pub type TetRule = QuadratureRule<3>;
pub type TriangleRule = QuadratureRule<2>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; D]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight
/// `(1 - x)^alpha (1 + x)^beta`, via the Golub-Welsch eigenvalue problem.
pub(crate) fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
        jac[(i, i)] = if denom.abs() < 1e-300 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / denom
        };
        if i + 1 < n {
            let k = k + 1.0;
            let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
            let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Lobatto-Legendre points on `[-1, 1]`, ascending (`p + 1` points).
pub(crate) fn gauss_lobatto_legendre(p: usize) -> Vec<f64> {
    let mut x = vec![-1.0];
    if p >= 2 {
        let (interior, _) = gauss_jacobi(p - 1, 1.0, 1.0);
        x.extend(interior);
    }
    x.push(1.0);
    x
}

// Only called with small integer or half-integer arguments.
fn gamma(x: f64) -> f64 {
    if (x - x.round()).abs() < 1e-14 && x > 0.0 {
        (1..x.round() as u64).map(|k| k as f64).product()
    } else {
        // Lanczos approximation, g = 7.
        const G: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1 - u)^alpha`.
fn unit_interval_rule(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(n, alpha, 0.0);
    let scale = 2f64.powf(alpha + 1.0);
    (
        x.iter().map(|xi| 0.5 * (1.0 + xi)).collect(),
        w.iter().map(|wi| wi / scale).collect(),
    )
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_QUADRATURE_DEGREE {
        return Err(Error::UnsupportedDegree {
            what: "quadrature",
            degree,
            min: 0,
            max: MAX_QUADRATURE_DEGREE,
        });
    }
    Ok(())
}

/// Rule on the unit tetrahedron exact for all polynomials of total degree
/// `<= degree`.
pub fn volume_quadrature(degree: usize) -> Result<TetRule> {
    check_degree(degree)?;
    let n = degree / 2 + 1;
    let (u, wu) = unit_interval_rule(n, 0.0);
    let (v, wv) = unit_interval_rule(n, 1.0);
    let (w, ww) = unit_interval_rule(n, 2.0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (wk, zk) in ww.iter().zip(&w) {
        for (wj, yj) in wv.iter().zip(&v) {
            for (wi, xi) in wu.iter().zip(&u) {
                let z = *zk;
                let y = yj * (1.0 - z);
                let x = xi * (1.0 - yj) * (1.0 - z);
                points.push([x, y, z]);
                weights.push(wi * wj * wk);
            }
        }
    }
    Ok(TetRule {
        points,
        weights,
        degree,
    })
}

/// Rule on the unit triangle exact for all polynomials of total degree
/// `<= degree`.
pub fn face_quadrature(degree: usize) -> Result<TriangleRule> {
    check_degree(degree)?;
    let n = degree / 2 + 1;
    let (u, wu) = unit_interval_rule(n, 0.0);
    let (v, wv) = unit_interval_rule(n, 1.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (wj, yj) in wv.iter().zip(&v) {
        for (wi, xi) in wu.iter().zip(&u) {
            points.push([xi * (1.0 - yj), *yj]);
            weights.push(wi * wj);
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}
