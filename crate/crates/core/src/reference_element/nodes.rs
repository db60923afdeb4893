//! Warp-and-blend interpolation nodes on the tetrahedron.
//!
//! The construction works on the equilateral tetrahedron: equispaced
//! barycentric lattice points are displaced along each face by a blended
//! one-dimensional warp that moves equispaced points towards
//! Gauss-Lobatto-Legendre points. The result is mapped back to the unit
//! tetrahedron.

use nalgebra::{Matrix3, Vector3};

use super::quadrature::gauss_lobatto_legendre;

/// Optimized blending parameters, indexed by degree - 1.
const ALPHA_OPT: [f64; 15] = [
    0.0, 0.0, 0.0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577, 1.1603, 1.10153, 0.6080, 0.4523,
    0.8856, 0.8717, 0.9655,
];

const TOL: f64 = 1e-10;

/// Warp factor for a 1D interpolant from equispaced to GLL points.
fn eval_warp(p: usize, gll: &[f64], r: f64) -> f64 {
    let xeq: Vec<f64> = (0..=p).map(|i| -1.0 + 2.0 * i as f64 / p as f64).collect();
    let mut warp = 0.0;
    for i in 0..=p {
        let mut d = gll[i] - xeq[i];
        for j in 0..=p {
            if i != j {
                d *= (r - xeq[j]) / (xeq[i] - xeq[j]);
            }
        }
        warp += d;
    }
    // Divide out the edge-vanishing factor (1 - r^2) of the blend.
    let zerof = if r.abs() < 1.0 - TOL { 1.0 - r * r } else { 1.0 };
    if r.abs() < 1.0 - TOL {
        warp / zerof
    } else {
        0.0
    }
}

/// In-face displacement of a point with face barycentrics `(l1, l2, l3)`,
/// expressed in the equilateral triangle frame.
fn eval_shift(p: usize, alpha: f64, gll: &[f64], l1: f64, l2: f64, l3: f64) -> (f64, f64) {
    let blend1 = 4.0 * l2 * l3;
    let blend2 = 4.0 * l1 * l3;
    let blend3 = 4.0 * l1 * l2;
    let warp1 = blend1 * eval_warp(p, gll, l3 - l2) * (1.0 + (alpha * l1).powi(2));
    let warp2 = blend2 * eval_warp(p, gll, l1 - l3) * (1.0 + (alpha * l2).powi(2));
    let warp3 = blend3 * eval_warp(p, gll, l2 - l1) * (1.0 + (alpha * l3).powi(2));
    let (c2, s2) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let (c4, s4) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());
    (warp1 + c2 * warp2 + c4 * warp3, s2 * warp2 + s4 * warp3)
}

/// Warp-and-blend nodes of degree `degree` on the unit tetrahedron.
pub fn warp_blend_nodes(degree: usize) -> Vec<[f64; 3]> {
    assert!(degree >= 1);
    let n = degree;
    let alpha = if n <= ALPHA_OPT.len() { ALPHA_OPT[n - 1] } else { 1.0 };
    let gll = gauss_lobatto_legendre(n);

    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let v1 = Vector3::new(-1.0, -1.0 / s3, -1.0 / s6);
    let v2 = Vector3::new(1.0, -1.0 / s3, -1.0 / s6);
    let v3 = Vector3::new(0.0, 2.0 / s3, -1.0 / s6);
    let v4 = Vector3::new(0.0, 0.0, 3.0 / s6);

    let t1 = [
        (v2 - v1).normalize(),
        (v2 - v1).normalize(),
        (v3 - v2).normalize(),
        (v3 - v1).normalize(),
    ];
    let t2 = [
        (v3 - 0.5 * (v1 + v2)).normalize(),
        (v4 - 0.5 * (v1 + v2)).normalize(),
        (v4 - 0.5 * (v2 + v3)).normalize(),
        (v4 - 0.5 * (v1 + v3)).normalize(),
    ];

    // Inverse of the affine map from unit-tet barycentrics to the equilateral tet.
    let frame = Matrix3::from_columns(&[v2 - v1, v3 - v1, v4 - v1]);
    let frame_inv = frame.try_inverse().expect("equilateral frame is invertible");

    let mut nodes = Vec::with_capacity((n + 1) * (n + 2) * (n + 3) / 6);
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                // Unit-tet coordinates (x, y, z) = (c, b, a) / n.
                let x = c as f64 / n as f64;
                let y = b as f64 / n as f64;
                let z = a as f64 / n as f64;
                // Barycentrics paired with v1..v4.
                let bary = [1.0 - x - y - z, x, y, z];
                let (l_v1, l_v2, l_v3, l_v4) = (bary[0], bary[1], bary[2], bary[3]);
                let xyz = l_v1 * v1 + l_v2 * v2 + l_v3 * v3 + l_v4 * v4;

                // Face f is the face opposite the vertex whose barycentric is `la`.
                let (l1, l2, l3, l4) = (l_v4, l_v3, l_v1, l_v2);
                let faces = [
                    (l1, l2, l3, l4),
                    (l2, l1, l3, l4),
                    (l3, l1, l4, l2),
                    (l4, l1, l3, l2),
                ];
                let mut shift = Vector3::zeros();
                for (f, &(la, lb, lc, ld)) in faces.iter().enumerate() {
                    let (w1, w2) = eval_shift(n, alpha, &gll, lb, lc, ld);
                    let mut blend = lb * lc * ld;
                    let denom = (lb + 0.5 * la) * (lc + 0.5 * la) * (ld + 0.5 * la);
                    if denom > TOL {
                        blend = (1.0 + (alpha * la).powi(2)) * blend / denom;
                    }
                    shift += (blend * w1) * t1[f] + (blend * w2) * t2[f];
                    let on_face = la < TOL
                        && ((lb > TOL) as u8 + (lc > TOL) as u8 + (ld > TOL) as u8) < 3;
                    if on_face {
                        shift = w1 * t1[f] + w2 * t2[f];
                    }
                }
                let warped = xyz + shift;
                let local = frame_inv * (warped - v1);
                nodes.push([local[0], local[1], local[2]]);
            }
        }
    }
    nodes
}
