//! Strictly hyperbolic pencils, positive forms orthogonal to them, and a
//! sampled check of the sup-inf representation of `D^2 w`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificate::{run_samples, AuditConfig, Certificate};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng::{gaussian, haar_orthogonal, stream, uniform, unit_vector, SampleRng};
use crate::singular::{hess_w, restrict, Delta, Subspace};

const MAX_RESTARTS: usize = 200;
const MAX_ITERS: usize = 500;

/// Two quadratic forms of the same dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pencil {
    #[serde(rename = "F1")]
    pub f1: SymMatrix,
    #[serde(rename = "F2")]
    pub f2: SymMatrix,
}

impl Pencil {
    pub fn new(f1: SymMatrix, f2: SymMatrix) -> Result<Self> {
        if f1.dim() != f2.dim() {
            return Err(Error::dims(f1.dim(), f2.dim()));
        }
        Ok(Pencil { f1, f2 })
    }

    pub fn dim(&self) -> usize {
        self.f1.dim()
    }

    /// `cos(theta) F1 + sin(theta) F2`.
    pub fn combination(&self, theta: f64) -> SymMatrix {
        &self.f1.scale(theta.cos()) + &self.f2.scale(theta.sin())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: Pencil = serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        Pencil::new(p.f1, p.f2)
    }
}

/// Outcome of a grid sweep over `theta in [0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// `lambda_1 > margin` and `lambda_n < -margin` at every grid point.
    pub certified: bool,
    /// `lambda_1 > 0 > lambda_n` at every grid point.
    pub signs: bool,
    /// Largest `max(-lambda_1/lambda_n, -lambda_n/lambda_1)` seen.
    pub m_est: f64,
    /// `(|F1|_2 + |F2|_2) h / 2`, the eigenvalue movement between grid points.
    pub margin: f64,
    /// Grid angle with the smallest `min(lambda_1, -lambda_n)`.
    pub worst_theta: f64,
}

/// Eigenvalues of the combination move at most `|F1|_2 + |F2|_2` per unit
/// of `theta` (Weyl), so a grid pass with that margin certifies every angle.
/// Angles in `[pi, 2 pi)` give the negated forms and need no separate check.
pub fn sweep(p: &Pencil, grid: usize) -> Result<Sweep> {
    if grid < 8 {
        return Err(Error::Config(format!("hyperbolicity grid must be at least 8, got {grid}")));
    }
    let spec_norm = |a: &SymMatrix| {
        let s = a.eigenvalues();
        s.max().abs().max(s.min().abs())
    };
    let h = std::f64::consts::PI / grid as f64;
    let margin = 0.5 * h * (spec_norm(&p.f1) + spec_norm(&p.f2));
    let mut out = Sweep {
        certified: true,
        signs: true,
        m_est: 0.0,
        margin,
        worst_theta: 0.0,
    };
    let mut worst = f64::INFINITY;
    for k in 0..grid {
        let theta = k as f64 * h;
        let s = p.combination(theta).eigenvalues();
        let (top, bottom) = (s.max(), s.min());
        let gap = top.min(-bottom);
        if gap < worst {
            worst = gap;
            out.worst_theta = theta;
        }
        out.signs &= top > 0.0 && bottom < 0.0;
        out.certified &= top > margin && bottom < -margin;
        let ratio = (-top / bottom).max(-bottom / top);
        out.m_est = out.m_est.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
    }
    if !out.signs {
        out.m_est = f64::INFINITY;
    }
    Ok(out)
}

/// `(certified, M_est)` from [`sweep`].
pub fn hyperbolicity_certificate(p: &Pencil, grid: usize) -> Result<(bool, f64)> {
    sweep(p, grid).map(|s| (s.certified, s.m_est))
}

/// Sweeps with grids `64, 128, ..., 4096` until the margin is met.
fn certify_adaptive(p: &Pencil) -> Result<Sweep> {
    let mut grid = 64;
    loop {
        let s = sweep(p, grid)?;
        if s.certified || !s.signs || grid >= 4096 {
            return Ok(s);
        }
        grid *= 2;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveWitness {
    #[serde(rename = "Q")]
    pub q: SymMatrix,
    /// `lambda_max(Q) / lambda_min(Q)`.
    pub ellipticity: f64,
    /// The point with `F1'(a2) = 0`, `F2(a2) = -a`; absent when `Q = I`.
    pub a2: Option<Vec<f64>>,
    /// `|Tr(F1 Q)|`, `|Tr(F2 Q)|` for the pencil as given.
    pub residuals: [f64; 2],
}

fn quad(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}

/// Moves `x` onto `{x^T A x = 0, |x| = 1}` by Newton steps along `A x`.
fn project(a: &DMatrix<f64>, x: &DVector<f64>) -> Option<DVector<f64>> {
    let mut x = x.normalize();
    for _ in 0..50 {
        let g = quad(a, &x);
        if g.abs() <= 1e-15 {
            return Some(x);
        }
        let ax = a * &x;
        let n2 = ax.norm_squared();
        if n2 < 1e-24 {
            return None;
        }
        x -= &ax * (g / (2.0 * n2));
        x = x.normalize();
    }
    (quad(a, &x).abs() <= 1e-13).then_some(x)
}

/// Projected gradient descent for `min x^T B x` on `{x^T A x = 0} ∩ S^{n-1}`
/// from one random start, with Armijo backtracking.
fn descend(a: &DMatrix<f64>, b: &DMatrix<f64>, rng: &mut SampleRng) -> Option<(DVector<f64>, f64)> {
    let n = a.nrows();
    let mut x = project(a, &DVector::from_vec(unit_vector(rng, n)))?;
    let mut fx = quad(b, &x);
    let scale = b.norm().max(1e-300);
    for _ in 0..MAX_ITERS {
        let g = b * &x * 2.0;
        // Tangent space: orthogonal to x and to A x.
        let mut d = -&g;
        let n1 = x.clone();
        d -= &n1 * n1.dot(&d);
        let mut n2 = a * &x;
        n2 -= &n1 * n1.dot(&n2);
        if n2.norm() > 1e-14 {
            let n2 = n2.normalize();
            d -= &n2 * n2.dot(&d);
        }
        let dn2 = d.norm_squared();
        if dn2.sqrt() < 1e-12 * scale {
            break;
        }
        let mut step = 1.0 / scale;
        let mut moved = false;
        while step > 1e-14 / scale {
            if let Some(y) = project(a, &(&x + &d * step)) {
                let fy = quad(b, &y);
                if fy <= fx - 1e-4 * step * dn2 {
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Some((x, fx))
}

/// A positive definite `Q` with `Tr(F1 Q) = Tr(F2 Q) = 0`.
///
/// Both forms are normalized, `F1` is replaced by a traceless element of the
/// span and `F2` is signed so `m = Tr F2 >= 0`. For `m = 0` the identity
/// works; otherwise a point `a2` with `F1'(a2) = 0`, `F2(a2) = -a < 0` gives
/// `Q = a2 a2^T + (a/m) I`.
pub fn orthogonal_positive_witness(p: &Pencil) -> Result<PositiveWitness> {
    let s = certify_adaptive(p)?;
    if !s.certified {
        return Err(Error::NotHyperbolic { theta: s.worst_theta });
    }
    let n = p.dim();
    let (n1, n2) = (p.f1.frobenius(), p.f2.frobenius());
    let (g1, g2) = (p.f1.scale(1.0 / n1), p.f2.scale(1.0 / n2));
    let (t1, t2) = (g1.trace(), g2.trace());
    let tiny = 1e-14 * n as f64;
    let (f1, mut f2) = if t1.abs() <= tiny {
        (g1, g2)
    } else if t2.abs() <= tiny {
        (g2, g1)
    } else {
        (&g1.scale(t2) - &g2.scale(t1), g2)
    };
    if f2.trace() < 0.0 {
        f2 = f2.scale(-1.0);
    }
    let m = f2.trace();

    let (q, a2) = if m <= tiny {
        (SymMatrix::identity(n), None)
    } else {
        let (a, b) = (f1.as_matrix(), f2.as_matrix());
        let mut best: Option<(DVector<f64>, f64)> = None;
        let mut restarts = 0;
        for r in 0..MAX_RESTARTS {
            restarts = r + 1;
            let mut rng = stream(0, "positive-witness", r as u64);
            if let Some((x, fx)) = descend(a, b, &mut rng) {
                if best.as_ref().is_none_or(|(_, v)| fx < *v) {
                    best = Some((x, fx));
                }
                if fx < -1e-6 {
                    break;
                }
            }
        }
        match best {
            Some((x, fx)) if fx < 0.0 => {
                let a = -fx;
                let v: Vec<f64> = x.iter().copied().collect();
                let q = &SymMatrix::outer(&v) + &SymMatrix::identity(n).scale(a / m);
                (q, Some(v))
            }
            other => {
                return Err(Error::SearchFailure {
                    restarts,
                    best: other.map_or(f64::NAN, |(_, v)| v),
                })
            }
        }
    };

    let spectrum = q.eigenvalues();
    let ellipticity = spectrum.max() / spectrum.min();
    let residuals = [p.f1.trace_product(&q).abs(), p.f2.trace_product(&q).abs()];
    let scale = n1.max(n2) * q.frobenius();
    if residuals.iter().any(|r| !(*r <= 1e-8 * scale)) || !q.is_positive_definite() {
        return Err(Error::SearchFailure {
            restarts: 0,
            best: residuals[0].max(residuals[1]) / scale,
        });
    }
    Ok(PositiveWitness {
        q,
        ellipticity,
        a2,
        residuals,
    })
}

/// `O diag(d) O^T` pairs with mixed-sign `d`, redrawn until the pencil
/// certifies on a 256-point grid.
pub fn random_hyperbolic_pencil(n: usize, rng: &mut SampleRng) -> Pencil {
    assert!(n >= 2, "pencils need n >= 2");
    let form = |rng: &mut SampleRng| {
        let pos = 1 + (uniform(rng, 0.0, 1.0) * (n - 1) as f64) as usize % (n - 1);
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let v = uniform(rng, 0.2, 2.0);
                if i < pos { v } else { -v }
            })
            .collect();
        SymMatrix::diagonal(&d).conjugate_by(&haar_orthogonal(rng, n).transpose())
    };
    loop {
        let p = Pencil {
            f1: form(rng),
            f2: form(rng),
        };
        if sweep(&p, 256).map(|s| s.certified).unwrap_or(false) {
            return p;
        }
    }
}

/// Restricted Hessians of `w` at two random points of `H'`.
pub fn hessian_pencil(delta: f64, h: &Subspace, rng: &mut SampleRng) -> Result<Pencil> {
    let x = h.random_unit(rng).scale(uniform(rng, 0.5, 2.0));
    let y = h.random_unit(rng).scale(uniform(rng, 0.5, 2.0));
    Pencil::new(restrict(&hess_w(&x, delta)?, h)?, restrict(&hess_w(&y, delta)?, h)?)
}

/// Hyperbolicity of `cfg.samples` restricted Hessian pencils; every pencil
/// must certify with `M_est <= 1/eps(delta) + 1e-9`.
pub fn pencil_audit(delta: Delta, h: &Subspace, grid: usize, cfg: &AuditConfig) -> Result<Certificate> {
    if grid < 8 {
        return Err(Error::Config(format!("hyperbolicity grid must be at least 8, got {grid}")));
    }
    let bound = 1.0 / delta.epsilon() + cfg.tol(1e-9);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "hessian-pencils", i);
        let Ok(p) = hessian_pencil(delta.value(), h, &mut rng) else {
            t.violate(i);
            return;
        };
        match sweep(&p, grid) {
            Ok(s) => {
                t.evaluated += 1;
                t.observe_max("m_est", s.m_est, i);
                t.observe_min("margin_ratio", 1.0 / s.margin.max(1e-300), i);
                t.check(s.signs && s.m_est <= bound, i);
            }
            Err(_) => t.violate(i),
        }
    });
    Ok(Certificate::from_tally(format!("pencils_delta{}", delta.value()), cfg.seed, 0.0, &tally)
        .with_meta("grid", grid)
        .with_meta("m_bound", bound))
}

/// Witnesses for `cfg.samples` random hyperbolic pencils (`n` cycling through
/// 2, 3, 5, 21) and `cfg.samples` restricted Hessian pencils. Residuals are
/// relative to `|F| |Q|`.
pub fn witness_audit(delta: Delta, h: &Subspace, cfg: &AuditConfig) -> Certificate {
    let tol = cfg.tol(1e-8);
    let dims = [2, 3, 5, 21];
    let tally = run_samples(2 * cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "witnesses", i);
        let p = if i < cfg.samples {
            random_hyperbolic_pencil(dims[(i % 4) as usize], &mut rng)
        } else {
            match hessian_pencil(delta.value(), h, &mut rng) {
                Ok(p) => p,
                Err(_) => {
                    t.violate(i);
                    return;
                }
            }
        };
        match orthogonal_positive_witness(&p) {
            Ok(w) => {
                t.evaluated += 1;
                let scale = p.f1.frobenius().max(p.f2.frobenius()) * w.q.frobenius();
                t.observe_max("residual", w.residuals[0].max(w.residuals[1]) / scale, i);
                t.observe_max("ellipticity", w.ellipticity, i);
                t.observe_min("lambda_min", w.q.eigenvalues().min(), i);
                t.check(w.q.is_positive_definite(), i);
            }
            Err(_) => t.violate(i),
        }
    });
    Certificate::from_tally(format!("witnesses_delta{}", delta.value()), cfg.seed, tol, &tally)
        .with_meta("search_failures", tally.violations)
}

/// Unit-trace positive definite `a` with `Tr(a b) >= 0`: a random positive
/// matrix, pushed onto the half-space along `b+` when needed.
fn sample_dual<R: rand::Rng + ?Sized>(b: &SymMatrix, b_plus: &SymMatrix, rng: &mut R) -> SymMatrix {
    let n = b.dim();
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let mut a = SymMatrix::symmetrized(&g * g.transpose() + DMatrix::identity(n, n) * 1e-3);
    let t = a.trace_product(b);
    if t < 0.0 {
        a = &a + &b_plus.scale(-t / b_plus.trace_product(b));
    }
    a.scale(1.0 / a.trace())
}

/// Near-boundary elements of `b*`: `alpha v_1 v_1^T + beta v_n v_n^T` with
/// `alpha lambda_1 + beta lambda_n = 0`, plus `eta (I + c v_1 v_1^T)` where
/// `c >= 0` keeps `Tr(a b) >= 0` when `Tr b < 0`.
fn boundary_dual(b: &SymMatrix, eta: f64) -> SymMatrix {
    let (s, v) = b.eigen();
    let n = b.dim();
    let (l1, ln) = (s.max(), s.min());
    let col = |k: usize| v.column(k).iter().copied().collect::<Vec<_>>();
    let (alpha, beta) = (-ln, l1);
    let c = (-b.trace() / l1).max(0.0);
    let top = SymMatrix::outer(&col(0));
    let a = &(&top.scale(alpha) + &SymMatrix::outer(&col(n - 1)).scale(beta))
        + &(&SymMatrix::identity(n) + &top.scale(c)).scale(eta * (alpha + beta));
    a.scale(1.0 / a.trace())
}

fn positive_part(b: &SymMatrix) -> SymMatrix {
    let (s, v) = b.eigen();
    let n = b.dim();
    let mut out = SymMatrix::zeros(n);
    for (k, &l) in s.values().iter().enumerate() {
        if l > 0.0 {
            let c: Vec<f64> = v.column(k).iter().copied().collect();
            out = &out + &SymMatrix::outer(&c).scale(l);
        }
    }
    out
}

/// Sizes for [`supinf_audit`].
#[derive(Clone, Copy, Debug)]
pub struct SupInfPlan {
    pub n_b: usize,
    pub n_a: usize,
    pub test_points: u64,
}

/// Sampled check of `sup_b inf_{a in b*} Tr(a D^2 w(x)) = 0`.
///
/// At each test point `x`, with `D = D^2 w(x)` restricted to `H'`:
/// (i) for `b = D^2 w(x/|x|)` the sampled infimum over `b*` is `>= -tol`
/// and the near-boundary elements bring it within `tol` of 0;
/// (ii) for each `b_0` in a sampled family, a witness `a` from
/// [`orthogonal_positive_witness`] has `Tr(a b_0) ~ 0 ~ Tr(a D)`, so the
/// infimum over `b_0*` is `<= tol`. The reported sup-inf is the largest of
/// these infimum estimates.
pub fn supinf_audit(delta: Delta, h: &Subspace, plan: SupInfPlan, cfg: &AuditConfig) -> Result<Certificate> {
    if plan.n_b == 0 || plan.n_a == 0 || plan.test_points == 0 {
        return Err(Error::Config("supinf sizes must be positive".into()));
    }
    let d = delta.value();
    let tol = cfg.tol(1e-8);
    let family = (0..plan.n_b as u64)
        .map(|k| {
            let mut rng = stream(cfg.seed, "supinf-family", k);
            restrict(&hess_w(&h.random_unit(&mut rng), d)?, h)
        })
        .collect::<Result<Vec<_>>>()?;
    let duals: Vec<SymMatrix> = family.iter().map(positive_part).collect();

    let tally = run_samples(plan.test_points, |i, t| {
        let mut rng = stream(cfg.seed, "supinf-points", i);
        let r = uniform(&mut rng, 0.5, 2.0);
        let u = h.random_unit(&mut rng);
        let (Ok(hx), Ok(hu)) = (hess_w(&u.scale(r), d), hess_w(&u, d)) else {
            t.violate(i);
            return;
        };
        let (Ok(dx), Ok(b)) = (restrict(&hx, h), restrict(&hu, h)) else {
            t.violate(i);
            return;
        };
        let scale = dx.frobenius();
        t.evaluated += 1;

        // (i) b = D^2 w(x/|x|).
        let b_plus = positive_part(&b);
        let mut inf_own = f64::INFINITY;
        for k in 0..plan.n_a {
            let a = if k % 4 == 0 {
                boundary_dual(&b, 10f64.powi(-(((k / 4) % 12) as i32)))
            } else {
                sample_dual(&b, &b_plus, &mut rng)
            };
            inf_own = inf_own.min(a.trace_product(&dx) / scale);
        }
        t.observe_min("inf_own", inf_own, i);
        t.check(inf_own >= -tol && inf_own <= tol, i);

        // (ii) other b_0 in the family.
        let mut sup_inf = inf_own;
        for (k, (b0, b0_plus)) in family.iter().zip(&duals).enumerate() {
            let witness = Pencil::new(b0.clone(), dx.clone()).and_then(|p| orthogonal_positive_witness(&p));
            let Ok(w) = witness else {
                t.violate(i);
                return;
            };
            let a = w.q.scale(1.0 / w.q.trace());
            let own = a.trace_product(b0) / b0.frobenius();
            let mut inf = a.trace_product(&dx) / scale;
            t.observe_max("witness_residual", own.abs().max(inf.abs()), i);
            for _ in 0..plan.n_a / plan.n_b.max(1) {
                inf = inf.min(sample_dual(b0, b0_plus, &mut rng).trace_product(&dx) / scale);
            }
            t.observe_max("max_inf_other", inf, (i << 20) | k as u64);
            sup_inf = sup_inf.max(inf);
            t.check(inf <= tol && own.abs() <= tol, i);
        }
        t.observe_max("residual", sup_inf.abs(), i);
    });
    Ok(
        Certificate::from_tally(format!("supinf_delta{d}"), cfg.seed, tol, &tally)
            .with_meta("n_b", plan.n_b)
            .with_meta("n_a", plan.n_a)
            .with_meta("dual_cone", "closed half-space Tr(a b) >= 0"),
    )
}
