//! Closed-form Hessian spectra of the triality cubic, and checkers for the
//! Weyl and interlacing inequalities.

pub mod blocks;
pub mod jacobi;

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::certificate::{run_samples, AuditConfig, Certificate};
use crate::error::{Error, Result};
use crate::linalg::{Spectrum, SymMatrix};
use crate::rng::{gaussian, haar_orthogonal, stream, unit_vector};
use crate::trilinear::{eval_p12_vec, hess_p12, hess_p24, invariants_mw, TriplePoint};

pub use jacobi::{sym_eigen, sym_eigen_vectors};

/// `1 / (3 sqrt 3)`: the maximum of `m` (and of `|W|`) on the unit sphere.
pub const CUBIC_BOUND: f64 = 0.19245008972987526;

/// The roots of `T^3 - T + 2c = 0`, descending.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicRoots(pub [f64; 3]);

impl CubicRoots {
    pub fn residual(&self, c: f64) -> f64 {
        self.0
            .iter()
            .map(|r| (r * r * r - r + 2.0 * c).abs())
            .fold(0.0, f64::max)
    }
}

/// Trigonometric solution of `T^3 - T + 2c = 0`:
/// `T = (2/sqrt 3) cos((arccos(3 sqrt(3) c) + (2k + 1) pi) / 3)`.
///
/// Values of `|c|` up to `1e-9` past the bound are clamped onto it.
pub fn solve_depressed_cubic(c: f64) -> Result<CubicRoots> {
    if c.is_nan() || c.abs() > CUBIC_BOUND + 1e-9 {
        return Err(Error::Domain(format!(
            "T^3 - T + 2c has a complex pair for c = {c}"
        )));
    }
    let beta = (3.0 * 3f64.sqrt() * c).clamp(-1.0, 1.0).acos();
    let k = 2.0 / 3f64.sqrt();
    let mut r = [0, 1, 2].map(|j| k * ((beta + PI * f64::from(2 * j + 1)) / 3.0).cos());
    r.sort_by(|a, b| b.total_cmp(a));
    Ok(CubicRoots(r))
}

fn check_unit(v: &TriplePoint) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("point is not on the unit sphere (|V| = {n})")));
    }
    Ok(())
}

/// Spectrum of `D^2 P_24(V)` at a unit point from the factorization
/// `(T^3 - T + 2m)(T^3 - T - 2m)(T^3 - T + 2W)^6`.
pub fn closed_form_spectrum(v: &TriplePoint) -> Result<Spectrum> {
    check_unit(v)?;
    let (m, w) = invariants_mw(v);
    closed_form_from_invariants(m, w, 6)
}

/// Spectrum of `D^2 P_12` at a unit point of `R^12`:
/// `(T^3 - T + 2m)(T^3 - T - 2m)(T^3 - T + 2W)^2`.
pub fn closed_form_spectrum_p12(v: &[f64]) -> Result<Spectrum> {
    if v.len() != 12 {
        return Err(Error::dims(12, v.len()));
    }
    let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("point is not on the unit sphere (|v| = {n})")));
    }
    let norm4 = |o: usize| v[o..o + 4].iter().map(|t| t * t).sum::<f64>().sqrt();
    let m = norm4(0) * norm4(4) * norm4(8);
    closed_form_from_invariants(m, eval_p12_vec(v), 2)
}

fn closed_form_from_invariants(m: f64, w: f64, w_mult: usize) -> Result<Spectrum> {
    let mut vals = Vec::with_capacity(6 + 3 * w_mult);
    vals.extend(solve_depressed_cubic(m)?.0);
    vals.extend(solve_depressed_cubic(-m)?.0);
    let mu = solve_depressed_cubic(w)?.0;
    for _ in 0..w_mult {
        vals.extend(mu);
    }
    Ok(Spectrum::from_unsorted(vals))
}

/// The 24 eigenvalues in the positional form
/// `lambda_1 = (2/sqrt 3) cos(alpha/3)`, `lambda_2..7 = mu_1`, `lambda_8 = l_1`,
/// `lambda_9 = l_2`, `lambda_10..15 = mu_2`, `lambda_16 = -l_2`,
/// `lambda_17 = -l_1`, `lambda_18..23 = mu_3`, `lambda_24 = -lambda_1`,
/// with `alpha = arccos(3 sqrt(3) m)`.
pub fn positional_spectrum(m: f64, w: f64) -> Result<Vec<f64>> {
    if !(0.0..=CUBIC_BOUND + 1e-9).contains(&m) {
        return Err(Error::Domain(format!("m = {m} outside [0, 1/(3 sqrt 3)]")));
    }
    let k = 2.0 / 3f64.sqrt();
    let alpha = (3.0 * 3f64.sqrt() * m).min(1.0).acos();
    let top = k * (alpha / 3.0).cos();
    let (c1, c5) = (k * ((alpha + PI) / 3.0).cos(), k * ((alpha + 5.0 * PI) / 3.0).cos());
    let (l1, l2) = (c1.max(c5), c1.min(c5));
    let [mu1, mu2, mu3] = solve_depressed_cubic(w)?.0;
    let mut out = vec![top];
    out.extend([mu1; 6]);
    out.extend([l1, l2]);
    out.extend([mu2; 6]);
    out.extend([-l2, -l1]);
    out.extend([mu3; 6]);
    out.push(-top);
    Ok(out)
}

/// Does the descending spectrum match [`positional_spectrum`] entrywise?
pub fn layout_holds(s: &Spectrum, m: f64, w: f64, tol: f64) -> Result<bool> {
    if s.len() != 24 {
        return Err(Error::dims(24, s.len()));
    }
    let want = positional_spectrum(m, w)?;
    Ok(s.values().iter().zip(&want).all(|(a, b)| (a - b).abs() <= tol))
}

/// `2 lambda_3 >= lambda_1` and `2 lambda_{n-2} <= lambda_n`, within `tol`.
pub fn remark_inequalities_hold(s: &Spectrum, tol: f64) -> bool {
    let n = s.len();
    n >= 3 && 2.0 * s.lambda(3) >= s.lambda(1) - tol && 2.0 * s.lambda(n - 2) <= s.lambda(n) + tol
}

/// For `Lambda = spec(A - B)`: `Lambda_1 >= max_i(lambda_i - lambda'_i)` and
/// `Lambda_n <= min_i(lambda_i - lambda'_i)`, with tolerance
/// `1e-10 (|A|_F + |B|_F)`.
pub fn weyl_gap_check(a: &SymMatrix, b: &SymMatrix) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::dims(a.dim(), b.dim()));
    }
    let la = sym_eigen(a)?;
    let lb = sym_eigen(b)?;
    let gap = sym_eigen(&(a - b))?;
    let tol = 1e-10 * (a.frobenius() + b.frobenius());
    let diffs = la.values().iter().zip(lb.values()).map(|(x, y)| x - y);
    let (lo, hi) = diffs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Ok(gap.max() >= hi - tol && gap.min() <= lo + tol)
}

/// `lambda_i >= lambda'_i >= lambda_{i+k}` for a restriction of codimension
/// `k = full.len() - restricted.len() >= 1`, within `1e-10 max(1, |lambda|_inf)`.
pub fn interlacing_check(full: &Spectrum, restricted: &Spectrum) -> Result<bool> {
    let (n, m) = (full.len(), restricted.len());
    if m == 0 || m >= n {
        return Err(Error::dims(n.saturating_sub(1), m));
    }
    let k = n - m;
    let scale = full.values().iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let tol = 1e-10 * scale;
    Ok((1..=m).all(|i| {
        let r = restricted.lambda(i);
        full.lambda(i) >= r - tol && r >= full.lambda(i + k) - tol
    }))
}

/// Closed form against Jacobi on random unit points of `R^24`.
pub fn factorization_audit(cfg: &AuditConfig) -> Certificate {
    let tol = cfg.tol(1e-9);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "factorization", i);
        let v = TriplePoint::random_unit(&mut rng);
        let (m, w) = invariants_mw(&v);
        let (Ok(closed), Ok(numeric)) = (closed_form_spectrum(&v), sym_eigen(&hess_p24(&v))) else {
            t.violate(i);
            return;
        };
        t.evaluated += 1;
        t.observe("residual", closed.max_abs_diff(&numeric), i);
        t.observe("harmonic_sum", numeric.sum().abs(), i);
        t.check(numeric.sum().abs() <= 1e-10 * 24.0, i);
        t.check(matches!(layout_holds(&numeric, m, w, 1e-8), Ok(true)), i);
    });
    Certificate::from_tally("factorization", cfg.seed, tol, &tally)
}

/// The two eigenvalue inequalities for `D^2 P_24` and `D^2 P_12` at random unit points.
pub fn remark_audit(cfg: &AuditConfig) -> Certificate {
    let tol = cfg.tol(1e-10);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "eigenvalue-inequalities", i);
        let v = TriplePoint::random_unit(&mut rng);
        let s24 = hess_p24(&v).eigenvalues();
        let v12 = unit_vector(&mut rng, 12);
        let s12 = hess_p12(&v12).eigenvalues();
        t.evaluated += 1;
        for (s, key_top, key_bottom) in [(&s24, "slack24_top", "slack24_bottom"), (&s12, "slack12_top", "slack12_bottom")] {
            let n = s.len();
            t.observe_min(key_top, 2.0 * s.lambda(3) - s.lambda(1), i);
            t.observe_min(key_bottom, s.lambda(n) - 2.0 * s.lambda(n - 2), i);
            t.check(remark_inequalities_hold(s, tol), i);
        }
    });
    Certificate::from_tally("eigenvalue_inequalities", cfg.seed, tol, &tally)
}

fn random_symmetric(rng: &mut crate::rng::SampleRng, n: usize) -> SymMatrix {
    let scale = 10f64.powf(crate::rng::uniform(rng, -2.0, 2.0));
    SymMatrix::symmetrized(DMatrix::from_fn(n, n, |_, _| scale * gaussian(rng)))
}

/// Random symmetric pairs of size `2..=24`; any failure is a bug.
pub fn weyl_audit(cfg: &AuditConfig) -> Certificate {
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "weyl", i);
        let n = 2 + (i % 23) as usize;
        let a = random_symmetric(&mut rng, n);
        let b = if i % 50 == 0 { SymMatrix::zeros(n) } else { random_symmetric(&mut rng, n) };
        t.evaluated += 1;
        t.check(matches!(weyl_gap_check(&a, &b), Ok(true)), i);
    });
    Certificate::from_tally("weyl", cfg.seed, 0.0, &tally)
}

/// Random matrices compressed to random subspaces of codimension 1..=3.
pub fn interlacing_audit(cfg: &AuditConfig) -> Certificate {
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "interlacing", i);
        let n = 2 + (i % 23) as usize;
        let k = 1 + (i / 23 % 3) as usize;
        let k = k.min(n - 1);
        let a = random_symmetric(&mut rng, n);
        let q = haar_orthogonal(&mut rng, n);
        let basis = q.rows(0, n - k).into_owned();
        let restricted = a.compress(&basis).expect("dimensions agree");
        let (Ok(full), Ok(part)) = (sym_eigen(&a), sym_eigen(&restricted)) else {
            t.violate(i);
            return;
        };
        t.evaluated += 1;
        t.check(matches!(interlacing_check(&full, &part), Ok(true)), i);
    });
    Certificate::from_tally("interlacing", cfg.seed, 0.0, &tally)
}
