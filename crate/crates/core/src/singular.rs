//! The homogeneous functions `w(x) = P(x) / |x|^delta`, their Hessians,
//! restrictions to subspaces, and the eigenvalue-ratio certifications.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{run_samples, AuditConfig, Certificate};
use crate::error::{Error, Result};
use crate::linalg::{Spectrum, SymMatrix};
use crate::rng::{haar_orthogonal, stream, uniform, unit_vector};
use crate::spectral::{solve_depressed_cubic, sym_eigen, CUBIC_BOUND};
use crate::trilinear::{eval_p24, grad_p24, hess_p24, invariants_mw, CubicForm, TriplePoint};

/// Exponent `delta` in `[1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Delta(f64);

impl Delta {
    pub fn new(delta: f64) -> Result<Self> {
        if (1.0..2.0).contains(&delta) {
            Ok(Delta(delta))
        } else {
            Err(Error::Config(format!("delta must lie in [1, 2), got {delta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `(2 - delta) / (4 + delta)`, the constant of the scalar root inequality.
    pub fn epsilon_scalar(self) -> f64 {
        (2.0 - self.0) / (4.0 + self.0)
    }

    /// `min{(2 - delta) / (4 + delta), 1/20}`.
    pub fn epsilon(self) -> f64 {
        self.epsilon_scalar().min(1.0 / 20.0)
    }
}

/// `P(V) / |V|^delta`; the origin is a [`Error::SingularPoint`].
pub fn eval_w(v: &TriplePoint, delta: f64) -> Result<f64> {
    let r = v.norm();
    if r == 0.0 {
        return Err(Error::SingularPoint { norm: r });
    }
    Ok(eval_p24(v) / r.powf(delta))
}

/// The continuous extension: `(0, true)` at the origin, `(w(V), false)` elsewhere.
pub fn eval_w_continuous(v: &TriplePoint, delta: f64) -> (f64, bool) {
    match eval_w(v, delta) {
        Ok(w) => (w, false),
        Err(_) => (0.0, true),
    }
}

/// `D^2 w` with `r = |V|`:
/// `r^-d D^2P - d r^(-d-2) (grad P v^T + v grad P^T) - d P r^(-d-2) I + d (d+2) P r^(-d-4) v v^T`.
pub fn hess_w(v: &TriplePoint, delta: f64) -> Result<SymMatrix> {
    let r = v.norm();
    if r < 1e-8 {
        return Err(Error::SingularPoint { norm: r });
    }
    let x = v.to_array();
    let g = grad_p24(v);
    let p = eval_p24(v);
    let r2 = r * r;
    let a = r.powf(-delta);
    let b = delta * a / r2;
    let c = delta * (delta + 2.0) * p * a / (r2 * r2);
    let mut h = hess_p24(v).into_matrix() * a;
    for i in 0..24 {
        for j in 0..24 {
            h[(i, j)] += c * x[i] * x[j] - b * (g[i] * x[j] + x[i] * g[j]);
        }
        h[(i, i)] -= b * p;
    }
    Ok(SymMatrix::symmetrized(h))
}

/// A `k`-dimensional subspace of `R^24` given by orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct SubspaceFile {
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        for r in rows {
            if r.len() != 24 {
                return Err(Error::dims(24, r.len()));
            }
        }
        if k == 0 || k > 24 {
            return Err(Error::Domain(format!("subspace dimension {k} not in 1..=24")));
        }
        let basis = DMatrix::from_fn(k, 24, |i, j| rows[i][j]);
        Self::from_matrix(basis, "file")
    }

    fn from_matrix(basis: DMatrix<f64>, label: &str) -> Result<Self> {
        let k = basis.nrows();
        let err = (&basis * basis.transpose() - DMatrix::<f64>::identity(k, k)).amax();
        if err > 1e-12 {
            return Err(Error::NotOrthonormal(err));
        }
        Ok(Subspace {
            basis,
            label: label.to_string(),
        })
    }

    /// `span{e_1, ..., e_k}`: the first `k` coordinates.
    pub fn coordinate(k: usize) -> Self {
        Subspace {
            basis: DMatrix::from_fn(k, 24, |i, j| if i == j { 1.0 } else { 0.0 }),
            label: format!("coordinate-{k}"),
        }
    }

    /// The default 21-dimensional subspace (last three coordinates dropped).
    pub fn default21() -> Self {
        Self::coordinate(21)
    }

    /// Haar-random `k`-dimensional subspace.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let q = haar_orthogonal(rng, 24);
        Subspace {
            basis: q.transpose().rows(0, k).into_owned(),
            label: format!("random-{k}"),
        }
    }

    pub fn random_seeded(k: usize, seed: u64, index: u64) -> Self {
        let mut s = Self::random(k, &mut stream(seed, "subspace", index));
        s.label = format!("random-{k}-seed{seed}-{index}");
        s
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `B^T c` for coordinates `c` within the subspace.
    pub fn embed(&self, coords: &[f64]) -> Result<TriplePoint> {
        if coords.len() != self.dim() {
            return Err(Error::dims(self.dim(), coords.len()));
        }
        let v = self.basis.transpose() * DVector::from_column_slice(coords);
        TriplePoint::from_slice(v.as_slice())
    }

    /// Coordinates of the orthogonal projection of `v`.
    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        (&self.basis * DVector::from_column_slice(v)).as_slice().to_vec()
    }

    /// Uniform point on the unit sphere of the subspace.
    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> TriplePoint {
        self.embed(&unit_vector(rng, self.dim())).expect("matching dimension")
    }

    /// The subspace of vectors in `self` orthogonal to every vector in `vs`.
    pub fn orthogonal_within(&self, vs: &[&[f64]]) -> Result<Subspace> {
        let k = self.dim();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        let mut kept = Vec::new();
        let candidates = vs
            .iter()
            .map(|v| DVector::from_vec(self.coords(v)))
            .chain((0..k).map(|i| DVector::from_fn(k, |j, _| if i == j { 1.0 } else { 0.0 })));
        for (idx, mut c) in candidates.enumerate() {
            for _ in 0..2 {
                for q in &cols {
                    let d = q.dot(&c);
                    c -= q * d;
                }
            }
            let n = c.norm();
            if n > 1e-8 {
                cols.push(c / n);
                if idx >= vs.len() {
                    kept.push(cols.len() - 1);
                }
            }
        }
        let inner = DMatrix::from_fn(kept.len(), k, |r, c| cols[kept[r]][c]);
        let mut s = Self::from_matrix(inner * &self.basis, "derived")?;
        s.label = format!("{}-perp{}", self.label, vs.len());
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SubspaceFile =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        let mut s = Self::from_rows(&file.basis)?;
        s.label = path.display().to_string();
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let basis = (0..self.dim())
            .map(|i| self.basis.row(i).iter().copied().collect())
            .collect();
        serde_json::to_string(&SubspaceFile { basis }).expect("plain numbers")
    }
}

/// `B A B^T`.
pub fn restrict(a: &SymMatrix, h: &Subspace) -> Result<SymMatrix> {
    a.compress(h.basis())
}

/// `mu_i(delta) = (roots of T^3 - T + 2W) - delta W`, descending.
pub fn mu_roots(w: f64, delta: f64) -> Result<[f64; 3]> {
    Ok(solve_depressed_cubic(w)?.0.map(|r| r - delta * w))
}

/// `T^3 + 3 W d T^2 + (3 W^2 d^2 - 1) T + W (2 - d) + W^3 d^3`, whose roots are [`mu_roots`].
pub fn shifted_cubic(t: f64, w: f64, delta: f64) -> f64 {
    let wd = w * delta;
    t * t * t + 3.0 * wd * t * t + (3.0 * wd * wd - 1.0) * t + w * (2.0 - delta) + wd * wd * wd
}

fn ratio_excess(ratio: f64, eps: f64) -> f64 {
    if ratio.is_nan() {
        return f64::INFINITY;
    }
    (eps - ratio).max(ratio - 1.0 / eps).max(0.0)
}

/// Scalar root inequality: for random `W, W_bar` and `K = |b|^-delta`, the
/// componentwise differences `mu_i - K mu_bar_i` have
/// `mu_+ / (-mu_-) in [eps, 1/eps]`, `eps = (2 - delta)/(4 + delta)`.
pub fn certify_lemma41(delta: Delta, cfg: &AuditConfig) -> Result<Certificate> {
    let d = delta.value();
    let eps = delta.epsilon_scalar();
    let tol = cfg.tol(1e-9);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "scalar-roots", i);
        let w = uniform(&mut rng, -CUBIC_BOUND, CUBIC_BOUND);
        let mut w_bar = uniform(&mut rng, -CUBIC_BOUND, CUBIC_BOUND);
        let mut k = uniform(&mut rng, 1.0, 10.0).powf(-d);
        if i % 8 == 0 {
            k = 1.0;
        }
        if i % 16 == 3 || i % 64 == 0 {
            w_bar = w;
        }
        if (k - 1.0).abs() + (w_bar - w).abs() <= 1e-12 {
            t.skipped += 1;
            return;
        }
        let (Ok(mu), Ok(mu_bar)) = (mu_roots(w, d), mu_roots(w_bar, d)) else {
            t.violate(i);
            return;
        };
        let diffs = [0, 1, 2].map(|j| mu[j] - k * mu_bar[j]);
        let plus = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let minus = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        t.evaluated += 1;
        t.observe_max("mu_minus", minus, i);
        t.check(minus < 0.0, i);
        let ratio = plus / -minus;
        t.observe("ratio", ratio, i);
        t.observe_max("residual", ratio_excess(ratio, eps), i);
    });
    Ok(Certificate::from_tally(format!("scalar_roots_delta{d}"), cfg.seed, tol, &tally)
        .with_meta("delta", d)
        .with_meta("epsilon", eps)
        .with_meta("k_range", "|b|^-delta, |b| in [1, 10]; K = 1 every 8th sample"))
}

/// The matrix `M(a) - O^T M(b) O` with `M(u)` the restricted Hessian of `w`.
pub fn ratio_matrix(a: &TriplePoint, b: &TriplePoint, o: &DMatrix<f64>, h: &Subspace, delta: f64) -> Result<SymMatrix> {
    let ma = restrict(&hess_w(a, delta)?, h)?;
    let mb = restrict(&hess_w(b, delta)?, h)?;
    Ok(&ma - &mb.conjugate_by(o))
}

/// Eigenvalue-ratio bound for restricted Hessians: for random `a` on the unit
/// sphere of `H'`, `b` in `H'` with `|b|` in `[1, 10]` and Haar `O`, the
/// extreme eigenvalues of `M(a) - O^T M(b) O` satisfy
/// `Lambda_1 > 0 > Lambda_k` and `Lambda_1 / -Lambda_k in [eps, 1/eps]`.
pub fn certify_prop41(delta: Delta, h: &Subspace, cfg: &AuditConfig) -> Result<Certificate> {
    let d = delta.value();
    let eps = delta.epsilon();
    let k = h.dim();
    let tol = cfg.tol(1e-9);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "restricted-ratio", i);
        let a = h.random_unit(&mut rng);
        let radius = if i % 8 == 0 { 1.0 } else { uniform(&mut rng, 1.0, 10.0) };
        let b = h.random_unit(&mut rng).scale(radius);
        let o = haar_orthogonal(&mut rng, k);
        let Ok(m) = ratio_matrix(&a, &b, &o, h, d) else {
            t.violate(i);
            return;
        };
        if m.frobenius() < 1e-10 {
            t.skipped += 1;
            return;
        }
        let s = m.eigenvalues();
        t.evaluated += 1;
        t.check(s.max() > 0.0 && s.min() < 0.0, i);
        let ratio = s.max() / -s.min();
        t.observe("ratio", ratio, i);
        t.observe_max("residual", ratio_excess(ratio, eps), i);
    });
    Ok(Certificate::from_tally(format!("restricted_ratio_delta{d}"), cfg.seed, tol, &tally)
        .with_meta("delta", d)
        .with_meta("epsilon", eps)
        .with_meta("subspace", h.label())
        .with_meta("eigensolver", "nalgebra symmetric QR"))
}

/// `restrict(hess_w(a), a^perp)` against `restrict(hess_P(a) - delta P(a) I, a^perp)`
/// at random unit points.
pub fn tangential_audit(delta: Delta, cfg: &AuditConfig) -> Certificate {
    let d = delta.value();
    let tol = cfg.tol(1e-10);
    let full = Subspace::coordinate(24);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "tangential", i);
        let a = TriplePoint::random_unit(&mut rng);
        let res = (|| -> Result<f64> {
            let h = full.orthogonal_within(&[&a.to_vec()])?;
            let lhs = restrict(&hess_w(&a, d)?, &h)?;
            let shifted = &hess_p24(&a) - &SymMatrix::identity(24).scale(d * eval_p24(&a));
            let rhs = restrict(&shifted, &h)?;
            Ok((lhs.as_matrix() - rhs.as_matrix()).amax())
        })();
        match res {
            Ok(r) => {
                t.evaluated += 1;
                t.observe_max("residual", r, i);
            }
            Err(_) => t.violate(i),
        }
    });
    Certificate::from_tally(format!("tangential_delta{d}"), cfg.seed, tol, &tally).with_meta("delta", d)
}

/// On `H_19 = H' ∩ a^perp ∩ b^perp`, the 2nd, 10th and 18th eigenvalues of the
/// restricted Hessian of `w` at unit `a` equal `mu_1(delta), mu_2(delta), mu_3(delta)`.
pub fn nineteen_plane_audit(delta: Delta, h: &Subspace, cfg: &AuditConfig) -> Certificate {
    let d = delta.value();
    let tol = cfg.tol(1e-8);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "nineteen-plane", i);
        let a = h.random_unit(&mut rng);
        let b = h.random_unit(&mut rng);
        let res = (|| -> Result<f64> {
            let h19 = h.orthogonal_within(&[&a.to_vec(), &b.to_vec()])?;
            if h19.dim() != 19 {
                return Err(Error::dims(19, h19.dim()));
            }
            let s = restrict(&hess_w(&a, d)?, &h19)?.eigenvalues();
            let mu = mu_roots(eval_p24(&a), d)?;
            let pos = [2, 10, 18];
            Ok((0..3).map(|j| (s.lambda(pos[j]) - mu[j]).abs()).fold(0.0, f64::max))
        })();
        match res {
            Ok(r) => {
                t.evaluated += 1;
                t.observe_max("residual", r, i);
            }
            Err(_) => t.violate(i),
        }
    });
    Certificate::from_tally(format!("nineteen_plane_delta{d}"), cfg.seed, tol, &tally)
        .with_meta("delta", d)
        .with_meta("subspace", h.label())
}

/// A pair `(u, -u)` in `H'` with `|u| = radius` on which `w` takes both signs.
pub fn sign_change_witness<R: Rng + ?Sized>(
    delta: f64,
    h: &Subspace,
    radius: f64,
    rng: &mut R,
) -> Option<(TriplePoint, TriplePoint)> {
    for _ in 0..1000 {
        let u = h.random_unit(rng).scale(radius);
        let wu = eval_w(&u, delta).ok()?;
        let wm = eval_w(&u.scale(-1.0), delta).ok()?;
        if wu > 0.0 && wm < 0.0 {
            return Some((u, u.scale(-1.0)));
        }
        if wu < 0.0 && wm > 0.0 {
            return Some((u.scale(-1.0), u));
        }
    }
    None
}

/// Sign-change witnesses at radii `10^0 .. 10^-(samples-1)`.
pub fn sign_change_audit(delta: Delta, h: &Subspace, cfg: &AuditConfig) -> Certificate {
    let d = delta.value();
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "sign-change", i);
        let radius = 10f64.powi(-(i as i32));
        t.evaluated += 1;
        match sign_change_witness(d, h, radius, &mut rng) {
            Some((p, _)) => t.observe_min("radius", p.norm(), i),
            None => t.violate(i),
        }
    });
    Certificate::from_tally(format!("sign_change_delta{d}"), cfg.seed, 0.0, &tally).with_meta("delta", d)
}

/// Outcome of maximizing a cubic on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalHessian {
    /// The maximizer found.
    pub d: Vec<f64>,
    pub value: f64,
    /// Tangential gradient norm at `d`.
    pub stationarity: f64,
    /// Descending spectrum of `D^2P(d)`, i.e. of the form `sum_i d_i dP/dx_i` up to a factor 2.
    pub spectrum: Spectrum,
    /// `lambda_1 >= 2 lambda_2` at `d` and `2 lambda_{n-1} >= lambda_n` at `-d`.
    pub holds: bool,
    /// The second inequality evaluated at `d` itself.
    pub second_at_same_d: bool,
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    x.iter_mut().for_each(|t| *t /= n);
}

fn tangential_gradient(form: &CubicForm, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let g = form.grad(x);
    let radial: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    let gt: Vec<f64> = g.iter().zip(x).map(|(a, b)| a - radial * b).collect();
    let norm = gt.iter().map(|t| t * t).sum::<f64>().sqrt();
    (g, gt, norm)
}

/// Armijo-projected gradient ascent, then shifted power iterations
/// `x <- (grad P(x) + alpha x) / |..|` once function values stop resolving
/// the increments.
fn ascend(form: &CubicForm, mut x: Vec<f64>) -> (Vec<f64>, f64, f64) {
    let mut fx = form.eval(&x);
    let mut step = 1.0;
    'armijo: for _ in 0..20_000 {
        let (_, gt, gnorm) = tangential_gradient(form, &x);
        if gnorm <= 1e-10 {
            return (x, fx, gnorm);
        }
        step *= 2.0;
        loop {
            let mut y: Vec<f64> = x.iter().zip(&gt).map(|(a, b)| a + step * b).collect();
            normalize(&mut y);
            let fy = form.eval(&y);
            if fy >= fx + 1e-4 * step * gnorm * gnorm {
                x = y;
                fx = fy;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break 'armijo;
            }
        }
    }
    let alpha = form.hess(&x).eigenvalues().values().iter().fold(0.0f64, |a, v| a.max(v.abs()))
        + 3.0 * fx.abs()
        + 1e-3;
    let mut gnorm = f64::INFINITY;
    for _ in 0..20_000 {
        let (g, _, gn) = tangential_gradient(form, &x);
        gnorm = gn;
        if gnorm <= 1e-10 {
            break;
        }
        let mut y: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a + alpha * b).collect();
        normalize(&mut y);
        x = y;
    }
    (x.clone(), form.eval(&x), gnorm)
}

/// Maximizes `P` over the unit sphere from `restarts` random starts and
/// examines the spectrum of `D^2 P` at the best maximizer `d`.
pub fn prop32_audit(form: &CubicForm, restarts: usize, seed: u64) -> Result<DirectionalHessian> {
    if form.is_zero() {
        return Err(Error::ZeroForm);
    }
    let n = form.n;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = stream(seed, "sphere-maximizer", r as u64);
        let (x, fx, g) = ascend(form, unit_vector(&mut rng, n));
        if best.as_ref().is_none_or(|b| fx > b.1) {
            best = Some((x, fx, g));
        }
    }
    let (d, value, stationarity) = best.expect("at least one restart");
    let spectrum = sym_eigen(&form.hess(&d))?;
    let tol = 1e-8;
    let first = spectrum.lambda(1) >= 2.0 * spectrum.lambda(2) - tol;
    let neg = Spectrum::from_unsorted(spectrum.values().iter().map(|x| -x).collect());
    let second = |s: &Spectrum| 2.0 * s.lambda(n - 1) >= s.lambda(n) - tol;
    Ok(DirectionalHessian {
        holds: first && second(&neg),
        second_at_same_d: second(&spectrum),
        d,
        value,
        stationarity,
        spectrum,
    })
}

/// Directional-Hessian check for the triality cubic and for random cubics.
pub fn directional_hessian_audit(cfg: &AuditConfig) -> Certificate {
    let tally = run_samples(cfg.samples, |i, t| {
        let form = if i == 0 {
            CubicForm::p24()
        } else {
            let n = 2 + (i % 5) as usize;
            CubicForm::random(n, &mut stream(cfg.seed, "random-cubic", i))
        };
        match prop32_audit(&form, 50, cfg.seed ^ i) {
            Ok(out) => {
                t.evaluated += 1;
                t.check(out.holds, i);
                t.observe_max("stationarity", out.stationarity, i);
                let s = &out.spectrum;
                t.observe_min("top_gap", s.lambda(1) - 2.0 * s.lambda(2), i);
                if i == 0 {
                    let (m, w) = invariants_mw(&TriplePoint::from_slice(&out.d).expect("24"));
                    t.observe_max("residual", (CUBIC_BOUND - w).abs().max((m - w).abs()), i);
                }
            }
            Err(_) => t.violate(i),
        }
    });
    Certificate::from_tally("directional_hessian", cfg.seed, cfg.tol(1e-8), &tally)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::interlacing_check;
    use proptest::prelude::*;

    const S3: f64 = 1.7320508075688772;

    #[test]
    fn delta_range_and_epsilon() {
        assert!(Delta::new(0.99).is_err());
        assert!(Delta::new(2.0).is_err());
        let one = Delta::new(1.0).unwrap();
        assert!((one.epsilon_scalar() - 0.2).abs() < 1e-16);
        assert_eq!(one.epsilon(), 1.0 / 20.0);
        let d = Delta::new(1.99).unwrap();
        assert!((d.epsilon() - 0.01 / 5.99).abs() < 1e-16);
    }

    #[test]
    fn w_values() {
        let one = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let v = TriplePoint::new(one, one, one);
        assert!((eval_w(&v, 1.0).unwrap() - 1.0 / S3).abs() < 1e-15);
        assert!(matches!(eval_w(&TriplePoint::default(), 1.5), Err(Error::SingularPoint { .. })));
        assert_eq!(eval_w_continuous(&TriplePoint::default(), 1.5), (0.0, true));
        assert!(hess_w(&v.scale(1e-9), 1.0).is_err());
    }

    #[test]
    fn hess_w_reduces_to_hess_p_at_zero_exponent() {
        let mut rng = stream(41, "hess-w-zero", 0);
        let v = TriplePoint::random(&mut rng);
        let diff = hess_w(&v, 0.0).unwrap().as_matrix() - hess_p24(&v).as_matrix();
        assert!(diff.amax() < 1e-13);
    }

    #[test]
    fn hess_w_matches_finite_differences() {
        let h = 1e-4;
        for i in 0..10 {
            let mut rng = stream(42, "hess-w-fd", i);
            let v = TriplePoint::random_unit(&mut rng);
            let delta = 1.0 + 0.1 * i as f64;
            let hw = hess_w(&v, delta).unwrap();
            let base = v.to_vec();
            let f = |p: &[f64]| eval_w(&TriplePoint::from_slice(p).unwrap(), delta).unwrap();
            for a in 0..24 {
                for b in a..24 {
                    let mut p = base.clone();
                    let mut at = |da: f64, db: f64| {
                        p.copy_from_slice(&base);
                        p[a] += da;
                        p[b] += db;
                        f(&p)
                    };
                    let fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                    assert!((fd - hw.get(a, b)).abs() < 1e-6, "{a} {b}: {fd} vs {}", hw.get(a, b));
                }
            }
        }
    }

    #[test]
    fn subspace_construction() {
        let c = Subspace::coordinate(21);
        let a = SymMatrix::identity(24);
        assert_eq!(restrict(&a, &c).unwrap(), SymMatrix::identity(21));
        let mut rng = stream(43, "subspace", 0);
        let r = Subspace::random(21, &mut rng);
        assert!((restrict(&a, &r).unwrap().as_matrix() - DMatrix::<f64>::identity(21, 21)).amax() < 1e-13);
        let m = hess_p24(&TriplePoint::random(&mut rng));
        assert_eq!(restrict(&m, &c).unwrap(), m.principal(&(0..21).collect::<Vec<_>>()));
        let bad = vec![vec![1.0; 24]];
        assert!(matches!(Subspace::from_rows(&bad), Err(Error::NotOrthonormal(_))));
        let back = Subspace::from_rows(&serde_json::from_str::<SubspaceFile>(&r.to_json()).unwrap().basis).unwrap();
        assert!((back.basis() - r.basis()).amax() == 0.0);
    }

    #[test]
    fn orthogonal_complement_within() {
        let mut rng = stream(44, "perp", 0);
        let h = Subspace::random(21, &mut rng);
        let a = h.random_unit(&mut rng).to_vec();
        let b = unit_vector(&mut rng, 24);
        let p = h.orthogonal_within(&[&a, &b]).unwrap();
        assert_eq!(p.dim(), 19);
        let ca = p.coords(&a);
        assert!(ca.iter().all(|x| x.abs() < 1e-13));
        assert!(p.coords(&b).iter().all(|x| x.abs() < 1e-13));
        let inside = p.basis() * h.basis().transpose();
        let norms = inside.row_iter().map(|r| r.norm());
        assert!(norms.into_iter().all(|n| (n - 1.0).abs() < 1e-12));
    }

    #[test]
    fn restriction_interlaces() {
        for i in 0..500 {
            let mut rng = stream(45, "restrict-interlace", i);
            let h = Subspace::random(19 + 2 * (i % 3) as usize, &mut rng);
            let a = hess_w(&TriplePoint::random(&mut rng), 1.5).unwrap();
            let full = sym_eigen(&a).unwrap();
            let part = sym_eigen(&restrict(&a, &h).unwrap()).unwrap();
            assert!(interlacing_check(&full, &part).unwrap());
        }
    }

    #[test]
    fn mu_root_values() {
        let r = mu_roots(0.0, 1.3).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1].abs() < 1e-15 && (r[2] + 1.0).abs() < 1e-15);
        for d in [1.0, 1.5, 1.99] {
            let w = CUBIC_BOUND;
            let r = mu_roots(w, d).unwrap();
            let want = [1.0 / S3 - d * w, 1.0 / S3 - d * w, -2.0 / S3 - d * w];
            for j in 0..3 {
                assert!((r[j] - want[j]).abs() < 1e-7);
            }
        }
        assert!(mu_roots(0.3, 1.0).is_err());
    }

    #[test]
    fn odd_hessian_pair_doubles() {
        let mut rng = stream(46, "odd-pair", 0);
        let h = Subspace::default21();
        let a = h.random_unit(&mut rng);
        let o = DMatrix::<f64>::identity(21, 21);
        let m = ratio_matrix(&a, &a.scale(-1.0), &o, &h, 1.0).unwrap();
        let twice = restrict(&hess_w(&a, 1.0).unwrap(), &h).unwrap().scale(2.0);
        assert!((m.as_matrix() - twice.as_matrix()).amax() < 1e-13);
        let s = m.eigenvalues();
        let ratio = s.max() / -s.min();
        assert!(ratio.is_finite() && ratio >= 1.0 / 20.0 && ratio <= 20.0);
    }

    #[test]
    fn scalar_lemma_small_run() {
        for d in [1.0, 1.5, 1.99] {
            let c = certify_lemma41(Delta::new(d).unwrap(), &AuditConfig::new(20_000, 3)).unwrap();
            assert!(c.pass, "{}", c.summary());
            assert!(c.skipped > 0);
        }
    }

    #[test]
    fn restricted_ratio_small_run() {
        let h = Subspace::default21();
        for d in [1.0, 1.5, 1.99] {
            let c = certify_prop41(Delta::new(d).unwrap(), &h, &AuditConfig::new(500, 4)).unwrap();
            assert!(c.pass, "{}", c.summary());
        }
    }

    #[test]
    fn tangential_and_nineteen_plane() {
        let cfg = AuditConfig::new(300, 5);
        let h = Subspace::random_seeded(21, 5, 0);
        for d in [1.0, 1.5, 1.99] {
            let delta = Delta::new(d).unwrap();
            let c = tangential_audit(delta, &cfg);
            assert!(c.pass, "{}", c.summary());
            let c = nineteen_plane_audit(delta, &h, &cfg);
            assert!(c.pass, "{}", c.summary());
        }
    }

    #[test]
    fn sign_changes_near_origin() {
        let c = sign_change_audit(Delta::new(1.2).unwrap(), &Subspace::default21(), &AuditConfig::new(12, 6));
        assert!(c.pass, "{}", c.summary());
    }

    #[test]
    fn directional_hessian_single_variable_cube() {
        let form = CubicForm::new(3, vec![(0, 0, 0, 1.0)]).unwrap();
        let out = prop32_audit(&form, 5, 1).unwrap();
        assert!((out.d[0] - 1.0).abs() < 1e-9);
        assert!(out.holds);
        assert!(out.spectrum.lambda(1) > 0.0 && out.spectrum.lambda(2).abs() < 1e-8);
        assert!(matches!(prop32_audit(&CubicForm::new(2, vec![]).unwrap(), 1, 1), Err(Error::ZeroForm)));
    }

    #[test]
    fn directional_hessian_of_the_triality_cubic_is_the_equality_case() {
        let out = prop32_audit(&CubicForm::p24(), 20, 7).unwrap();
        assert!(out.holds);
        assert!(out.stationarity <= 1e-10);
        assert!((out.value - CUBIC_BOUND).abs() < 1e-12);
        let s = &out.spectrum;
        assert!((s.lambda(1) - 2.0 / S3).abs() < 1e-8);
        assert!((s.lambda(2) - 1.0 / S3).abs() < 1e-8);
        assert!(!out.second_at_same_d);
    }

    #[test]
    fn directional_hessian_random_cubics() {
        let c = directional_hessian_audit(&AuditConfig::new(20, 8));
        assert!(c.pass, "{}", c.summary());
    }

    fn point() -> impl Strategy<Value = TriplePoint> {
        prop::collection::vec(-1.0f64..1.0, 24)
            .prop_map(|v| TriplePoint::from_slice(&v).unwrap())
            .prop_filter("away from origin", |p| p.norm() > 1e-2)
    }

    proptest! {
        #[test]
        fn w_is_homogeneous_and_odd(v in point(), t in 0.01f64..100.0, d in 1.0f64..2.0) {
            let w = eval_w(&v, d).unwrap();
            let scale = 1.0 + w.abs() * t.powf(3.0 - d);
            prop_assert!((eval_w(&v.scale(t), d).unwrap() - t.powf(3.0 - d) * w).abs() <= 1e-12 * scale);
            prop_assert_eq!(eval_w(&v.scale(-1.0), d).unwrap(), -w);
        }

        #[test]
        fn hess_w_is_homogeneous(v in point(), t in 0.1f64..10.0, d in 1.0f64..2.0) {
            let a = hess_w(&v.scale(t), d).unwrap();
            let b = hess_w(&v, d).unwrap().scale(t.powf(1.0 - d));
            prop_assert!((a.as_matrix() - b.as_matrix()).amax() <= 1e-11 * (1.0 + b.max_abs()));
        }

        #[test]
        fn shifted_roots_solve_the_expanded_cubic(w in -CUBIC_BOUND..CUBIC_BOUND, d in 1.0f64..2.0) {
            let mu = mu_roots(w, d).unwrap();
            for m in mu {
                prop_assert!(shifted_cubic(m, w, d).abs() <= 1e-12);
            }
            let neg = mu_roots(-w, d).unwrap();
            prop_assert!((neg[0] + mu[2]).abs() <= 1e-12);
            prop_assert!((neg[1] + mu[1]).abs() <= 1e-12);
        }

        #[test]
        fn tangential_identity(v in point(), d in 1.0f64..2.0) {
            let a = v.normalized();
            let h = Subspace::coordinate(24).orthogonal_within(&[&a.to_vec()]).unwrap();
            let lhs = restrict(&hess_w(&a, d).unwrap(), &h).unwrap();
            let shifted = &hess_p24(&a) - &SymMatrix::identity(24).scale(d * eval_p24(&a));
            let rhs = restrict(&shifted, &h).unwrap();
            prop_assert!((lhs.as_matrix() - rhs.as_matrix()).amax() <= 1e-10);
        }
    }
}
