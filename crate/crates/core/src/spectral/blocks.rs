//! Algebraic identities of the 4x4 Hessian blocks `M_s`, `L_s`.

use nalgebra::{DMatrix, Matrix4};

use crate::certificate::{run_samples, AuditConfig, Certificate, Tally};
use crate::linalg::{Spectrum, SymMatrix};
use crate::octonion::Quaternion;
use crate::rng::{gaussian_vec, stream};
use crate::trilinear::{build_block, eval_p12, BlockPattern};

/// Coefficients of `det(T I - A)`, leading coefficient first (Faddeev-LeVerrier).
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &id * coeffs[k - 1];
        let am = a * &m;
        coeffs.push(-am.trace() / k as f64);
    }
    coeffs
}

/// Product of polynomials given leading coefficient first.
pub fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Largest coefficient difference, relative to `max(1, max |expected|)`.
pub fn coeff_residual(got: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(got.len(), expected.len());
    let scale = expected.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    got.iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

fn dm(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

fn norm2(s: &[f64; 4]) -> f64 {
    s.iter().map(|t| t * t).sum()
}

/// Residuals of properties 1-5 for one triple `(r, s, t)`, keyed by property.
pub fn block_residuals(r: [f64; 4], s: [f64; 4], t: [f64; 4]) -> [(&'static str, f64); 5] {
    let n2 = norm2(&s);
    let s0 = s[0] / n2.sqrt();
    let (ms, ls) = (build_block(s, BlockPattern::M), build_block(s, BlockPattern::L));
    let id = Matrix4::<f64>::identity();

    let mut p1: f64 = 0.0;
    for b in [&ms.matrix, &ls.matrix] {
        p1 = p1.max((b * b.transpose() - id * n2).amax() / n2.max(1.0));
        p1 = p1.max((b.transpose() * b - id * n2).amax() / n2.max(1.0));
    }

    let n4 = n2 * n2;
    let p2 = [
        (ms.matrix.determinant() + n4).abs() / n4.max(1.0),
        (ls.matrix.determinant() - n4).abs() / n4.max(1.0),
        (ms.orthogonal_part().determinant() + 1.0).abs(),
        (ls.orthogonal_part().determinant() - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let quad = [1.0, 2.0 * s[0], n2];
    let quad_unit = [1.0, 2.0 * s0, 1.0];
    let p3 = [
        coeff_residual(&char_poly(&dm(&ms.matrix)), &poly_mul(&[1.0, 0.0, -n2], &quad)),
        coeff_residual(&char_poly(&dm(&ls.matrix)), &poly_mul(&quad, &quad)),
        coeff_residual(&char_poly(&dm(&ms.orthogonal_part())), &poly_mul(&[1.0, 0.0, -1.0], &quad_unit)),
        coeff_residual(&char_poly(&dm(&ls.orthogonal_part())), &poly_mul(&quad_unit, &quad_unit)),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let sp = |m: Matrix4<f64>| SymMatrix::symmetrized(dm(&m)).eigenvalues();
    let want_n = Spectrum::from_unsorted(vec![2.0, -2.0, -2.0 * s0, -2.0 * s0]);
    let want_np = Spectrum::from_unsorted(vec![-2.0 * s0; 4]);
    let p4 = sp(ms.symmetric_part())
        .max_abs_diff(&want_n)
        .max(sp(ls.symmetric_part()).max_abs_diff(&want_np));

    let big_r2 = norm2(&r) * n2 * norm2(&t);
    let p = eval_p12(&Quaternion(r), &Quaternion(s), &Quaternion(t));
    let factor = [1.0, 2.0 * p, big_r2];
    let prod = |pat| {
        let [a, b, c] = [r, s, t].map(|q| build_block(q, pat).matrix);
        dm(&(a * b * c))
    };
    let p5 = coeff_residual(&char_poly(&prod(BlockPattern::M)), &poly_mul(&[1.0, 0.0, -big_r2], &factor))
        .max(coeff_residual(&char_poly(&prod(BlockPattern::L)), &poly_mul(&factor, &factor)));

    [("property1", p1), ("property2", p2), ("property3", p3), ("property4", p4), ("property5", p5)]
}

fn draw(rng: &mut crate::rng::SampleRng) -> [f64; 4] {
    let v = gaussian_vec(rng, 4);
    [v[0], v[1], v[2], v[3]]
}

/// Properties 1-5 of the blocks on Gaussian `r, s, t`; all residuals `<= 1e-9`.
pub fn block_property_audit(samples: u64, seed: u64) -> Certificate {
    block_property_audit_with(&AuditConfig::new(samples, seed))
}

pub fn block_property_audit_with(cfg: &AuditConfig) -> Certificate {
    let tol = cfg.tol(1e-9);
    let tally = run_samples(cfg.samples, |i, t: &mut Tally| {
        let mut rng = stream(cfg.seed, "block-properties", i);
        let (r, s, u) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        t.evaluated += 1;
        let mut worst: f64 = 0.0;
        for (key, res) in block_residuals(r, s, u) {
            t.observe_max(key, res, i);
            worst = worst.max(if res.is_nan() { f64::INFINITY } else { res });
        }
        t.observe_max("residual", worst, i);
    });
    Certificate::from_tally("block_properties", cfg.seed, tol, &tally)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_of_known_matrices() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(char_poly(&a), vec![1.0, -4.0, 3.0]);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(char_poly(&id), vec![1.0, -3.0, 3.0, -1.0]);
        assert_eq!(poly_mul(&[1.0, -1.0], &[1.0, 1.0]), vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn identity_quaternion_examples() {
        let one = [1.0, 0.0, 0.0, 0.0];
        let ms = build_block(one, BlockPattern::M);
        let n = SymMatrix::symmetrized(dm(&ms.symmetric_part())).eigenvalues();
        assert_eq!(n.values(), &[2.0, -2.0, -2.0, -2.0]);
        let prod = dm(&(ms.matrix * ms.matrix * ms.matrix));
        assert_eq!(char_poly(&prod), poly_mul(&[1.0, 0.0, -1.0], &[1.0, 2.0, 1.0]));
        for (_, r) in block_residuals(one, one, one) {
            assert!(r < 1e-14);
        }
    }

    #[test]
    fn l_pattern_char_poly_is_a_square() {
        let s = [0.3, -1.2, 0.7, 2.0];
        let n2 = norm2(&s);
        let quad = [1.0, 2.0 * s[0], n2];
        let got = char_poly(&dm(&build_block(s, BlockPattern::L).matrix));
        assert!(coeff_residual(&got, &poly_mul(&quad, &quad)) < 1e-13);
    }

    #[test]
    fn audit_passes_and_is_seeded() {
        let a = block_property_audit(2000, 17);
        assert!(a.pass, "{}", a.summary());
        assert_eq!(a, block_property_audit(2000, 17));
    }
}
