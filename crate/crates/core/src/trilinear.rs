//! The triality cubic `P(X, Y, Z) = Re((X Y) Z)` on `R^24`, its quaternionic
//! restriction on `R^12`, and the 4x4 blocks `M_s`, `L_s` of its Hessian.
//!
//! Coordinates of `R^24` are `X_0..X_7, Y_0..Y_7, Z_0..Z_7`.

use nalgebra::{DMatrix, Matrix4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::octonion::{Octonion, Quaternion};
use crate::rng::{gaussian_vec, unit_vector};

/// `(i, j, k, sign)`: the monomial `sign * X_i Y_j Z_k` of the expanded form.
pub const EXPANDED_TERMS: [(u8, u8, u8, i8); 64] = [
    (0, 0, 0, 1), (0, 1, 1, -1), (0, 2, 2, -1), (0, 3, 3, -1),
    (0, 4, 4, -1), (0, 5, 5, -1), (0, 6, 6, -1), (0, 7, 7, -1),
    (1, 0, 1, -1), (1, 1, 0, -1), (1, 2, 4, -1), (1, 3, 7, -1),
    (1, 4, 2, 1), (1, 5, 6, -1), (1, 6, 5, 1), (1, 7, 3, 1),
    (2, 0, 2, -1), (2, 1, 4, 1), (2, 2, 0, -1), (2, 3, 5, -1),
    (2, 4, 1, -1), (2, 5, 3, 1), (2, 6, 7, -1), (2, 7, 6, 1),
    (3, 0, 3, -1), (3, 1, 7, 1), (3, 2, 5, 1), (3, 3, 0, -1),
    (3, 4, 6, -1), (3, 5, 2, -1), (3, 6, 4, 1), (3, 7, 1, -1),
    (4, 0, 4, -1), (4, 1, 2, -1), (4, 2, 1, 1), (4, 3, 6, 1),
    (4, 4, 0, -1), (4, 5, 7, -1), (4, 6, 3, -1), (4, 7, 5, 1),
    (5, 0, 5, -1), (5, 1, 6, 1), (5, 2, 3, -1), (5, 3, 2, 1),
    (5, 4, 7, 1), (5, 5, 0, -1), (5, 6, 1, -1), (5, 7, 4, -1),
    (6, 0, 6, -1), (6, 1, 5, -1), (6, 2, 7, 1), (6, 3, 4, -1),
    (6, 4, 3, 1), (6, 5, 1, 1), (6, 6, 0, -1), (6, 7, 2, -1),
    (7, 0, 7, -1), (7, 1, 3, -1), (7, 2, 6, -1), (7, 3, 1, 1),
    (7, 4, 5, -1), (7, 5, 4, 1), (7, 6, 2, 1), (7, 7, 0, -1),
];

/// Positions in `R^24` of the coordinates `X_q, Y_q, Z_q` with `q` in `{0, 1, 2, 4}`.
pub const QUATERNIONIC_COORDS: [usize; 12] = [0, 1, 2, 4, 8, 9, 10, 12, 16, 17, 18, 20];

/// The ordering `{X_0, X_1, X_2, X_4, Y_.., Z_.., X_5, X_6, X_3, X_7, Y_.., Z_..}`
/// in which the Hessian at a quaternionic point is block diagonal.
pub const BLOCK_ORDER: [usize; 24] = [
    0, 1, 2, 4, 8, 9, 10, 12, 16, 17, 18, 20, 5, 6, 3, 7, 13, 14, 11, 15, 21, 22, 19, 23,
];

/// A point `V = (X, Y, Z)` of `R^24`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TriplePoint {
    #[serde(rename = "X")]
    pub x: [f64; 8],
    #[serde(rename = "Y")]
    pub y: [f64; 8],
    #[serde(rename = "Z")]
    pub z: [f64; 8],
}

impl TriplePoint {
    pub fn new(x: [f64; 8], y: [f64; 8], z: [f64; 8]) -> Self {
        TriplePoint { x, y, z }
    }

    pub fn from_octonions(x: Octonion, y: Octonion, z: Octonion) -> Self {
        TriplePoint::new(x.0, y.0, z.0)
    }

    pub fn from_quaternions(x: Quaternion, y: Quaternion, z: Quaternion) -> Self {
        TriplePoint::from_octonions(x.embed(), y.embed(), z.embed())
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 24 {
            return Err(Error::dims(24, v.len()));
        }
        let mut p = TriplePoint::default();
        p.x.copy_from_slice(&v[..8]);
        p.y.copy_from_slice(&v[8..16]);
        p.z.copy_from_slice(&v[16..]);
        Ok(p)
    }

    /// `(1, 1, 1) / sqrt(3)`: the three real units, normalized.
    pub fn unit_real_triple() -> Self {
        let c = 1.0 / 3f64.sqrt();
        let mut e = [0.0; 8];
        e[0] = c;
        TriplePoint::new(e, e, e)
    }

    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_slice(&unit_vector(rng, 24)).expect("24 coordinates")
    }

    /// Gaussian point, not normalized.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_slice(&gaussian_vec(rng, 24)).expect("24 coordinates")
    }

    pub fn to_array(&self) -> [f64; 24] {
        let mut v = [0.0; 24];
        v[..8].copy_from_slice(&self.x);
        v[8..16].copy_from_slice(&self.y);
        v[16..].copy_from_slice(&self.z);
        v
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.to_array().to_vec()
    }

    pub fn octonions(&self) -> (Octonion, Octonion, Octonion) {
        (Octonion(self.x), Octonion(self.y), Octonion(self.z))
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        TriplePoint::new(self.x.map(|t| t * c), self.y.map(|t| t * c), self.z.map(|t| t * c))
    }

    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm())
    }
}

/// `P(V)` from the 64-term expansion.
pub fn eval_p24(v: &TriplePoint) -> f64 {
    EXPANDED_TERMS
        .iter()
        .map(|&(i, j, k, s)| f64::from(s) * v.x[i as usize] * v.y[j as usize] * v.z[k as usize])
        .sum()
}

/// `Re((X Y) Z)` through octonion multiplication.
pub fn eval_p24_octonion(v: &TriplePoint) -> f64 {
    let (x, y, z) = v.octonions();
    ((x * y) * z).re()
}

/// `Re(X (Y Z))`.
pub fn eval_p24_right(v: &TriplePoint) -> f64 {
    let (x, y, z) = v.octonions();
    (x * (y * z)).re()
}

pub fn grad_p24(v: &TriplePoint) -> [f64; 24] {
    let mut g = [0.0; 24];
    for &(i, j, k, s) in &EXPANDED_TERMS {
        let (i, j, k, s) = (i as usize, j as usize, k as usize, f64::from(s));
        g[i] += s * v.y[j] * v.z[k];
        g[8 + j] += s * v.x[i] * v.z[k];
        g[16 + k] += s * v.x[i] * v.y[j];
    }
    g
}

pub fn hess_p24(v: &TriplePoint) -> SymMatrix {
    let mut h = DMatrix::zeros(24, 24);
    for &(i, j, k, s) in &EXPANDED_TERMS {
        let (i, j, k, s) = (i as usize, j as usize, k as usize, f64::from(s));
        let (xi, yj, zk) = (i, 8 + j, 16 + k);
        h[(xi, yj)] += s * v.z[k];
        h[(yj, xi)] += s * v.z[k];
        h[(xi, zk)] += s * v.y[j];
        h[(zk, xi)] += s * v.y[j];
        h[(yj, zk)] += s * v.x[i];
        h[(zk, yj)] += s * v.x[i];
    }
    SymMatrix::symmetrized(h)
}

/// `m = |X| |Y| |Z|` and `W = P(V)`.
pub fn invariants_mw(v: &TriplePoint) -> (f64, f64) {
    let n = |a: &[f64; 8]| a.iter().map(|t| t * t).sum::<f64>().sqrt();
    (n(&v.x) * n(&v.y) * n(&v.z), eval_p24(v))
}

/// `Re(q1 q2 q3)`.
pub fn eval_p12(q1: &Quaternion, q2: &Quaternion, q3: &Quaternion) -> f64 {
    (*q1 * *q2 * *q3).re()
}

fn split12(v: &[f64]) -> (Quaternion, Quaternion, Quaternion) {
    let q = |o: usize| Quaternion([v[o], v[o + 1], v[o + 2], v[o + 3]]);
    (q(0), q(4), q(8))
}

/// `P_12` at a point of `R^12 = H^3`.
pub fn eval_p12_vec(v: &[f64]) -> f64 {
    let (a, b, c) = split12(v);
    eval_p12(&a, &b, &c)
}

/// Hessian of `P_12`, assembled from the quaternion structure constants:
/// the `(q1_i, q2_j)` entry is `Re(e_i e_j q3)` and so on.
pub fn hess_p12(v: &[f64]) -> SymMatrix {
    let (a, b, c) = split12(v);
    let e = Quaternion::basis;
    let mut h = DMatrix::zeros(12, 12);
    for i in 0..4 {
        for j in 0..4 {
            let xy = eval_p12(&e(i), &e(j), &c);
            let xz = eval_p12(&e(i), &b, &e(j));
            let yz = eval_p12(&a, &e(i), &e(j));
            h[(i, 4 + j)] = xy;
            h[(4 + j, i)] = xy;
            h[(i, 8 + j)] = xz;
            h[(8 + j, i)] = xz;
            h[(4 + i, 8 + j)] = yz;
            h[(8 + j, 4 + i)] = yz;
        }
    }
    SymMatrix::symmetrized(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockPattern {
    M,
    L,
}

/// `M_s` or `L_s` for `s = (s_0, s_1, s_2, s_3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMatrix4 {
    pub pattern: BlockPattern,
    pub s: [f64; 4],
    pub matrix: Matrix4<f64>,
}

pub fn build_block(s: [f64; 4], pattern: BlockPattern) -> BlockMatrix4 {
    let [s0, s1, s2, s3] = s;
    #[rustfmt::skip]
    let matrix = match pattern {
        BlockPattern::M => Matrix4::new(
             s0, -s1, -s2, -s3,
            -s1, -s0, -s3,  s2,
            -s2,  s3, -s0, -s1,
            -s3, -s2,  s1, -s0,
        ),
        BlockPattern::L => Matrix4::new(
            -s0, -s1,  s2, -s3,
             s1, -s0, -s3, -s2,
            -s2,  s3, -s0, -s1,
             s3,  s2,  s1, -s0,
        ),
    };
    BlockMatrix4 { pattern, s, matrix }
}

impl BlockMatrix4 {
    pub fn norm_s(&self) -> f64 {
        self.s.iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    /// The orthogonal factor `O_s = M_s / |s|` (resp. `O'_s`).
    pub fn orthogonal_part(&self) -> Matrix4<f64> {
        self.matrix / self.norm_s()
    }

    /// `N_s = O_s + O_s^T` (resp. `N'_s`).
    pub fn symmetric_part(&self) -> Matrix4<f64> {
        let o = self.orthogonal_part();
        o + o.transpose()
    }
}

/// The 12x12 Hessian block at a quaternionic point:
/// `[[0, B_z, B_y^T], [B_z^T, 0, B_x], [B_y, B_x^T, 0]]` with `B` the `M` or `L` pattern.
///
/// Note the transposed top-right corner: placing `B_y` there instead gives a
/// matrix with the wrong spectrum.
pub fn block_hessian(x: [f64; 4], y: [f64; 4], z: [f64; 4], pattern: BlockPattern) -> DMatrix<f64> {
    let bx = build_block(x, pattern).matrix;
    let by = build_block(y, pattern).matrix;
    let bz = build_block(z, pattern).matrix;
    let mut h = DMatrix::zeros(12, 12);
    let mut put = |r: usize, c: usize, b: &Matrix4<f64>| {
        h.view_mut((4 * r, 4 * c), (4, 4)).copy_from(b);
    };
    put(0, 1, &bz);
    put(1, 0, &bz.transpose());
    put(0, 2, &by.transpose());
    put(2, 0, &by);
    put(1, 2, &bx);
    put(2, 1, &bx.transpose());
    h
}

/// Quaternionic coordinates `(s_0, s_1, s_2, s_4)` of an octonion coefficient vector.
pub fn quaternion_part(o: &[f64; 8]) -> [f64; 4] {
    [o[0], o[1], o[2], o[4]]
}

/// A cubic form `sum c * x_i x_j x_k` on `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicForm {
    pub n: usize,
    pub terms: Vec<(usize, usize, usize, f64)>,
}

impl CubicForm {
    pub fn new(n: usize, terms: Vec<(usize, usize, usize, f64)>) -> Result<Self> {
        for &(i, j, k, _) in &terms {
            let top = i.max(j).max(k);
            if top >= n {
                return Err(Error::dims(n, top + 1));
            }
        }
        Ok(CubicForm { n, terms })
    }

    pub fn p24() -> Self {
        let terms = EXPANDED_TERMS
            .iter()
            .map(|&(i, j, k, s)| (i as usize, 8 + j as usize, 16 + k as usize, f64::from(s)))
            .collect();
        CubicForm { n: 24, terms }
    }

    pub fn p12() -> Self {
        let e = Quaternion::basis;
        let mut terms = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let c = eval_p12(&e(i), &e(j), &e(k));
                    if c != 0.0 {
                        terms.push((i, 4 + j, 8 + k, c));
                    }
                }
            }
        }
        CubicForm { n: 12, terms }
    }

    /// All monomials `x_i x_j x_k` with `i <= j <= k` and Gaussian coefficients.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    terms.push((i, j, k, crate::rng::gaussian(rng)));
                }
            }
        }
        CubicForm { n, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.3 == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, j, k, c)| c * x[i] * x[j] * x[k]).sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for &(i, j, k, c) in &self.terms {
            g[i] += c * x[j] * x[k];
            g[j] += c * x[i] * x[k];
            g[k] += c * x[i] * x[j];
        }
        g
    }

    /// `D^2 P(x)`; equal to the matrix of the quadratic form `sum_i x_i dP/dx_i`
    /// up to the factor 2 in `x^T D^2P(x) x = 6 P(x)`.
    pub fn hess(&self, x: &[f64]) -> SymMatrix {
        let mut h = DMatrix::zeros(self.n, self.n);
        for &(i, j, k, c) in &self.terms {
            for (a, b, o) in [(i, j, k), (i, k, j), (j, k, i)] {
                h[(a, b)] += c * x[o];
                h[(b, a)] += c * x[o];
            }
        }
        SymMatrix::symmetrized(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn e(i: usize) -> [f64; 8] {
        Octonion::basis(i).0
    }

    #[test]
    fn expanded_table_matches_octonion_products_termwise() {
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    let v = TriplePoint::new(e(i), e(j), e(k));
                    assert_eq!(eval_p24(&v), eval_p24_octonion(&v), "X{i} Y{j} Z{k}");
                }
            }
        }
    }

    #[test]
    fn table_has_one_term_per_xy_pair() {
        let mut seen = [[false; 8]; 8];
        for &(i, j, _, _) in &EXPANDED_TERMS {
            assert!(!seen[i as usize][j as usize]);
            seen[i as usize][j as usize] = true;
        }
    }

    #[test]
    fn sample_values() {
        let one = e(0);
        assert_eq!(eval_p24(&TriplePoint::new(one, one, one)), 1.0);
        assert_eq!(eval_p24(&TriplePoint::new(e(1), e(2), e(4))), -1.0);
        let mut rng = stream(3, "p24-samples", 0);
        let mut v = TriplePoint::random(&mut rng);
        v.y = [0.0; 8];
        assert_eq!(eval_p24(&v), 0.0);
        assert_eq!(invariants_mw(&v), (0.0, 0.0));
        let g = grad_p24(&TriplePoint::new(one, one, one));
        assert_eq!(g[0], 1.0);
    }

    #[test]
    fn invariants_at_reference_points() {
        let c = 1.0 / (3.0 * 3f64.sqrt());
        let (m, w) = invariants_mw(&TriplePoint::unit_real_triple());
        assert!((m - c).abs() < 1e-15 && (w - c).abs() < 1e-15);
        let v = TriplePoint::new(e(1), e(2), e(4)).scale(1.0 / 3f64.sqrt());
        let (m, w) = invariants_mw(&v);
        assert!((m - c).abs() < 1e-15 && (w + c).abs() < 1e-15);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let mut rng = stream(4, "p24-fd", 0);
        let h = 1e-4;
        for _ in 0..20 {
            let v = TriplePoint::random_unit(&mut rng);
            let hess = hess_p24(&v);
            let base = v.to_vec();
            for a in 0..24 {
                for b in 0..24 {
                    let f = |da: f64, db: f64| {
                        let mut p = base.clone();
                        p[a] += da;
                        p[b] += db;
                        eval_p24(&TriplePoint::from_slice(&p).unwrap())
                    };
                    let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                    assert!((fd - hess.get(a, b)).abs() < 1e-6, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream(5, "p24-grad-fd", 0);
        let h = 1e-5;
        for _ in 0..200 {
            let v = TriplePoint::random_unit(&mut rng);
            let g = grad_p24(&v);
            let base = v.to_vec();
            for a in 0..24 {
                let mut p = base.clone();
                p[a] += h;
                let fp = eval_p24(&TriplePoint::from_slice(&p).unwrap());
                p[a] -= 2.0 * h;
                let fm = eval_p24(&TriplePoint::from_slice(&p).unwrap());
                assert!(((fp - fm) / (2.0 * h) - g[a]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn hessian_is_traceless_with_zero_diagonal_blocks() {
        let mut rng = stream(6, "p24-trace", 0);
        for _ in 0..100 {
            let h = hess_p24(&TriplePoint::random(&mut rng));
            assert_eq!(h.trace(), 0.0);
            for b in 0..3 {
                for i in 0..8 {
                    for j in 0..8 {
                        assert_eq!(h.get(8 * b + i, 8 * b + j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn block_form_at_quaternionic_points() {
        let mut rng = stream(7, "block-form", 0);
        for _ in 0..200 {
            let v12 = gaussian_vec(&mut rng, 12);
            let (a, b, c) = split12(&v12);
            let v = TriplePoint::from_quaternions(a, b, c);
            let h = hess_p24(&v).principal(&BLOCK_ORDER);
            let (x, y, z) = (a.0, b.0, c.0);
            let h0 = block_hessian(x, y, z, BlockPattern::M);
            let h1 = block_hessian(x, y, z, BlockPattern::L);
            for r in 0..24 {
                for col in 0..24 {
                    let expect = match (r < 12, col < 12) {
                        (true, true) => h0[(r, col)],
                        (false, false) => h1[(r - 12, col - 12)],
                        _ => 0.0,
                    };
                    assert!((h.get(r, col) - expect).abs() < 1e-14, "{r} {col}");
                }
            }
        }
    }

    #[test]
    fn untransposed_corner_has_the_wrong_spectrum() {
        let (x, y, z) = ([0.3, 0.2, -0.5, 0.1], [0.4, -0.1, 0.2, 0.6], [-0.2, 0.5, 0.1, 0.3]);
        let good = block_hessian(x, y, z, BlockPattern::M);
        let mut bad = good.clone();
        let by = build_block(y, BlockPattern::M).matrix;
        bad.view_mut((0, 8), (4, 4)).copy_from(&by);
        bad.view_mut((8, 0), (4, 4)).copy_from(&by.transpose());
        let v = TriplePoint::from_quaternions(Quaternion(x), Quaternion(y), Quaternion(z));
        let truth = hess_p24(&v).principal(&QUATERNIONIC_COORDS).eigenvalues();
        let s_good = SymMatrix::new(good).unwrap().eigenvalues();
        let s_bad = SymMatrix::new(bad).unwrap().eigenvalues();
        assert!(truth.max_abs_diff(&s_good) < 1e-13);
        assert!(truth.max_abs_diff(&s_bad) > 1e-3);
    }

    #[test]
    fn p12_hessian_is_the_quaternionic_principal_submatrix() {
        let mut rng = stream(8, "p12-hess", 0);
        for _ in 0..200 {
            let v12 = gaussian_vec(&mut rng, 12);
            let (a, b, c) = split12(&v12);
            let h24 = hess_p24(&TriplePoint::from_quaternions(a, b, c)).principal(&QUATERNIONIC_COORDS);
            let h12 = hess_p12(&v12);
            assert!((h24.as_matrix() - h12.as_matrix()).amax() < 1e-14);
            let form = CubicForm::p12();
            assert!((form.eval(&v12) - eval_p12_vec(&v12)).abs() < 1e-13);
            assert!((form.hess(&v12).as_matrix() - h12.as_matrix()).amax() < 1e-13);
        }
    }

    #[test]
    fn block_examples() {
        let m = build_block([1.0, 0.0, 0.0, 0.0], BlockPattern::M).matrix;
        assert_eq!(m.row(0), Matrix4::identity().row(0));
        assert_eq!(m * m.transpose(), Matrix4::identity());
    }

    #[test]
    fn cubic_form_p24_agrees_with_direct_evaluation() {
        let mut rng = stream(9, "cubic-form", 0);
        let form = CubicForm::p24();
        for _ in 0..100 {
            let v = TriplePoint::random(&mut rng);
            let x = v.to_vec();
            assert!((form.eval(&x) - eval_p24(&v)).abs() < 1e-12);
            let g = grad_p24(&v);
            assert!(form.grad(&x).iter().zip(g).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!((form.hess(&x).as_matrix() - hess_p24(&v).as_matrix()).amax() < 1e-12);
        }
        assert!(CubicForm::new(3, vec![(0, 1, 3, 1.0)]).is_err());
    }

    #[test]
    fn triple_point_json_shape() {
        let v = TriplePoint::new(e(0), e(1), e(2));
        let s = serde_json::to_value(v).unwrap();
        assert_eq!(s["X"][0], 1.0);
        assert_eq!(s["Z"][2], 1.0);
        let back: TriplePoint = serde_json::from_value(s).unwrap();
        assert_eq!(back, v);
    }

    fn point() -> impl Strategy<Value = TriplePoint> {
        prop::collection::vec(-2.0f64..2.0, 24).prop_map(|v| TriplePoint::from_slice(&v).unwrap())
    }

    proptest! {
        #[test]
        fn dual_path_identity(v in point()) {
            let (m, _) = invariants_mw(&v);
            let scale = 1.0 + m;
            prop_assert!((eval_p24(&v) - eval_p24_octonion(&v)).abs() <= 1e-13 * scale);
            prop_assert!((eval_p24(&v) - eval_p24_right(&v)).abs() <= 1e-13 * scale);
        }

        #[test]
        fn euler_identity(v in point()) {
            let g = grad_p24(&v);
            let dot: f64 = g.iter().zip(v.to_array()).map(|(a, b)| a * b).sum();
            prop_assert!((dot - 3.0 * eval_p24(&v)).abs() <= 1e-12 * (1.0 + v.norm().powi(3)));
        }

        #[test]
        fn hessian_is_linear_in_the_point(v in point(), w in point(), t in -3.0f64..3.0) {
            let sum = TriplePoint::from_slice(
                &v.to_array().iter().zip(w.to_array()).map(|(a, b)| a + t * b).collect::<Vec<_>>(),
            ).unwrap();
            let lhs = hess_p24(&sum);
            let rhs = &hess_p24(&v) + &hess_p24(&w).scale(t);
            prop_assert!((lhs.as_matrix() - rhs.as_matrix()).amax() < 1e-12);
        }

        #[test]
        fn invariant_bounds_on_the_sphere(v in point()) {
            prop_assume!(v.norm() > 1e-3);
            let (m, w) = invariants_mw(&v.normalized());
            let cap = 1.0 / (3.0 * 3f64.sqrt());
            prop_assert!(w.abs() <= m + 1e-14);
            prop_assert!(m <= cap + 1e-14);
        }

        #[test]
        fn block_orthogonality_and_determinants(s in prop::array::uniform4(-3.0f64..3.0)) {
            let n2: f64 = s.iter().map(|t| t * t).sum();
            for (pat, sign) in [(BlockPattern::M, -1.0), (BlockPattern::L, 1.0)] {
                let b = build_block(s, pat).matrix;
                let err = (b * b.transpose() - Matrix4::identity() * n2).amax();
                prop_assert!(err <= 1e-12 * (1.0 + n2));
                let err = (b.transpose() * b - Matrix4::identity() * n2).amax();
                prop_assert!(err <= 1e-12 * (1.0 + n2));
                prop_assert!((b.determinant() - sign * n2 * n2).abs() <= 1e-10 * (1.0 + n2 * n2));
            }
        }
    }
}
