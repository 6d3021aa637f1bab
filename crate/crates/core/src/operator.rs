//! A uniformly elliptic eigenvalue function `f` vanishing on sampled Hessian
//! spectra, built from a cone gauge and a Lipschitz extension.
//!
//! The cone is `K = {x : sum_{x_i > 0} x_i >= lambda^2 sum_{x_i < 0} |x_i|}`,
//! the dual of the ratio-bounded positive cone
//! `{v > 0 : max v / min v <= lambda^2}`. Coordinates on `R^n` are
//! `s = x_1 + ... + x_n` and Helmert coordinates `z` on the complement of
//! the all-ones vector, so `x = sum_k z_k v_k + (s / n) 1`.
//!
//! With `psi(u) = min(u, lambda^2 u)` and `t*(y)` the root of
//! `sum_i psi(y_i + t) = 0`, the gauge is `e(z) = n t*(x(z, 0))` and
//! `s - g~(z) = max_w h(x - p_w)` with `h(y) = -n t*(y)`.
//! Inputs are sorted descending before evaluation in place of summing over
//! all permutations.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certificate::{run_samples, AuditConfig, Certificate};
use crate::error::{Error, Result};
use crate::rng::{gaussian, stream, uniform};
use crate::singular::{hess_w, restrict, Delta, Subspace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    /// `lambda`; eigenvalue ratios inside the primal cone are bounded by `lambda^2`.
    pub aspect: f64,
    pub n: usize,
}

impl ConeParams {
    pub fn new(aspect: f64, n: usize) -> Result<Self> {
        if !(aspect >= 1.0) || !aspect.is_finite() || n < 2 {
            return Err(Error::Config(format!("invalid cone: aspect {aspect}, n {n}")));
        }
        Ok(ConeParams { aspect, n })
    }

    /// `1.01 / eps(delta)` on `R^21`.
    pub fn for_delta(delta: Delta) -> Self {
        ConeParams {
            aspect: 1.01 / delta.epsilon(),
            n: 21,
        }
    }

    pub fn lambda2(&self) -> f64 {
        self.aspect * self.aspect
    }

    /// Bounds `[a, b]` on the difference quotients `(h(y + mu e_i) - h(y)) / mu`.
    pub fn slope_bounds(&self) -> (f64, f64) {
        let (n, l2) = (self.n as f64, self.lambda2());
        (n / (1.0 + (n - 1.0) * l2), n * l2 / (l2 + n - 1.0))
    }

    /// The ellipticity constant `C_0 = max(1/a, b)`.
    pub fn ellipticity(&self) -> f64 {
        let (a, b) = self.slope_bounds();
        (1.0 / a).max(b)
    }

    /// Upper bound `(n-1)/lambda^2` on `t*` per unit of range (see [`gauge_root`]).
    fn kappa(&self) -> f64 {
        (self.n as f64 - 1.0) / self.lambda2()
    }
}

/// `x` lies in the cone `K`: `sum_{x_i >= 0} x_i >= lambda^2 sum_{x_i < 0} |x_i|`.
pub fn dual_cone_member(x: &[f64], cone: &ConeParams) -> bool {
    let (pos, neg) = x.iter().fold((0.0, 0.0), |(p, q), &v| if v >= 0.0 { (p + v, q) } else { (p, q - v) });
    pos >= cone.lambda2() * neg
}

/// The root `t*` of `sum_i psi(y_i + t) = 0`, exactly: `psi` is piecewise
/// linear, so after sorting, the root lies on the segment where the top `k`
/// shifted entries are nonnegative.
pub fn gauge_root(y: &[f64], lambda2: f64) -> f64 {
    let mut v = y.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    gauge_root_sorted(&v, lambda2)
}

fn gauge_root_sorted(v: &[f64], lambda2: f64) -> f64 {
    let n = v.len();
    let total: f64 = v.iter().sum();
    let mut top = 0.0;
    for k in 0..=n {
        let t = -(top + lambda2 * (total - top)) / (k as f64 + lambda2 * (n - k) as f64);
        let upper_ok = k == 0 || v[k - 1] + t >= 0.0;
        let lower_ok = k == n || v[k] + t <= 0.0;
        if upper_ok && lower_ok {
            return t;
        }
        if k < n {
            top += v[k];
        }
    }
    // Rounding can leave every segment test marginally failing; the last
    // candidate is then within rounding of the root.
    -total / n as f64
}

/// `h(y) = -n t*(y)`.
pub fn h_value(y: &[f64], cone: &ConeParams) -> f64 {
    -(y.len() as f64) * gauge_root(y, cone.lambda2())
}

/// Orthonormal basis of the complement of `(1, ..., 1)`:
/// `v_k = (1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))` with `k` leading ones.
pub fn helmert_row(n: usize, k: usize) -> Vec<f64> {
    let c = 1.0 / ((k * (k + 1)) as f64).sqrt();
    (0..n)
        .map(|i| match i.cmp(&k) {
            std::cmp::Ordering::Less => c,
            std::cmp::Ordering::Equal => -(k as f64) * c,
            std::cmp::Ordering::Greater => 0.0,
        })
        .collect()
}

/// `x -> (z, s)`.
pub fn to_zs(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let z = (1..n)
        .map(|k| helmert_row(n, k).iter().zip(x).map(|(a, b)| a * b).sum())
        .collect();
    (z, x.iter().sum())
}

/// `(z, s) -> x`.
pub fn from_zs(z: &[f64], s: f64) -> Vec<f64> {
    let n = z.len() + 1;
    let mut x = vec![s / n as f64; n];
    for (k, zk) in z.iter().enumerate() {
        for (xi, vi) in x.iter_mut().zip(helmert_row(n, k + 1)) {
            *xi += zk * vi;
        }
    }
    x
}

/// `e(z) = inf{c : (z, c) in K}`.
pub fn cone_gauge(z: &[f64], cone: &ConeParams) -> f64 {
    if z.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let n = z.len() + 1;
    n as f64 * gauge_root(&from_zs(z, 0.0), cone.lambda2())
}

/// [`cone_gauge`] by bisection on membership, with a geometrically grown
/// bracket and tolerance `1e-10 (1 + |z|)`.
pub fn cone_gauge_bisection(z: &[f64], cone: &ConeParams) -> f64 {
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let member = |c: f64| dual_cone_member(&from_zs(z, c), cone);
    let mut hi = norm.max(1e-300);
    while !member(hi) {
        hi *= 2.0;
    }
    let mut lo = -norm.max(1e-300);
    while member(lo) {
        lo *= 2.0;
    }
    let tol = 1e-10 * (1.0 + norm);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if member(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub delta: f64,
    pub subspace: String,
    pub samples: u64,
    pub seed: u64,
    pub cone: ConeParams,
}

#[derive(Serialize, Deserialize)]
struct Header {
    header: TableMeta,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    z: Vec<f64>,
    s: f64,
}

/// Sorted Hessian spectra `p_w` with their sums, plus for every coordinate
/// `j` the entries ordered by `key_j(p) = S(p) + (lambda^2 - 1) p_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTable {
    pub meta: TableMeta,
    points: Vec<Vec<f64>>,
    sums: Vec<f64>,
    orders: Vec<Vec<u32>>,
    keys: Vec<Vec<f64>>,
}

impl OperatorTable {
    pub fn from_points(meta: TableMeta, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = meta.cone.n;
        let mut pts = Vec::with_capacity(points.len());
        for mut p in points {
            if p.len() != n {
                return Err(Error::dims(n, p.len()));
            }
            p.sort_by(|a, b| b.total_cmp(a));
            pts.push(p);
        }
        let sums: Vec<f64> = pts.iter().map(|p| p.iter().sum()).collect();
        let l2 = meta.cone.lambda2();
        let (orders, keys) = (0..n)
            .map(|j| {
                let key = |k: usize| sums[k] + (l2 - 1.0) * pts[k][j];
                let mut order: Vec<u32> = (0..pts.len() as u32).collect();
                order.sort_by(|&a, &b| key(a as usize).total_cmp(&key(b as usize)));
                let keys = order.iter().map(|&k| key(k as usize)).collect();
                (order, keys)
            })
            .unzip();
        Ok(OperatorTable {
            meta,
            points: pts,
            sums,
            orders,
            keys,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cone(&self) -> &ConeParams {
        &self.meta.cone
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Pairs `(a, b)` drawn from the table with `a - b` in `K` or `-K`.
    pub fn cone_violations(&self, pairs: u64, seed: u64) -> u64 {
        let m = self.len() as u64;
        if m < 2 {
            return 0;
        }
        let tally = run_samples(pairs, |i, t| {
            let mut rng = stream(seed, "cone-pairs", i);
            let a = (uniform(&mut rng, 0.0, 1.0) * m as f64) as usize % m as usize;
            let mut b = (uniform(&mut rng, 0.0, 1.0) * (m - 1) as f64) as usize % (m - 1) as usize;
            if b >= a {
                b += 1;
            }
            let d: Vec<f64> = self.points[a].iter().zip(&self.points[b]).map(|(x, y)| x - y).collect();
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            t.check(!dual_cone_member(&d, self.cone()) && !dual_cone_member(&neg, self.cone()), i);
        });
        tally.violations
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let header = serde_json::to_string(&Header { header: self.meta.clone() }).map_err(|e| Error::json("table header", e))?;
        writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
        for p in &self.points {
            let (z, s) = to_zs(p);
            let line = serde_json::to_string(&Entry { z, s }).map_err(|e| Error::json("table entry", e))?;
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{}: empty table file", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| Error::json("table header", e))?;
        let mut points = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Entry = serde_json::from_str(&line).map_err(|e| Error::json(format!("table line {}", k + 2), e))?;
            if e.z.len() + 1 != header.header.cone.n {
                return Err(Error::dims(header.header.cone.n - 1, e.z.len()));
            }
            points.push(from_zs(&e.z, e.s));
        }
        Self::from_points(header.header, points)
    }

    /// Concatenates tables built for the same `delta` and cone.
    pub fn merge(tables: Vec<OperatorTable>) -> Result<Self> {
        let mut it = tables.into_iter();
        let first = it.next().ok_or(Error::EmptyTable)?;
        let mut meta = first.meta.clone();
        let mut points = first.points;
        for t in it {
            if t.meta.cone != meta.cone || t.meta.delta != meta.delta {
                return Err(Error::Config("cannot merge tables with different delta or cone".into()));
            }
            meta.samples += t.meta.samples;
            if t.meta.subspace != meta.subspace {
                meta.subspace = format!("{}+{}", meta.subspace, t.meta.subspace);
            }
            points.extend(t.points);
        }
        Self::from_points(meta, points)
    }
}

/// Sorted spectrum of the restricted Hessian of `w` at `u`.
pub fn restricted_spectrum(u: &crate::trilinear::TriplePoint, delta: f64, h: &Subspace) -> Result<Vec<f64>> {
    Ok(restrict(&hess_w(u, delta)?, h)?.eigenvalues().into_values())
}

/// Samples `n_samples` unit points of `H'`, stores their sorted restricted
/// spectra and checks the cone condition on `pairs` random pairs.
pub fn build_table(
    delta: Delta,
    h: &Subspace,
    n_samples: u64,
    seed: u64,
    cone: ConeParams,
    pairs: u64,
) -> Result<OperatorTable> {
    if h.dim() != cone.n {
        return Err(Error::dims(cone.n, h.dim()));
    }
    let d = delta.value();
    let points: Vec<Result<Vec<f64>>> = {
        use rayon::prelude::*;
        (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, "operator-table", i);
                restricted_spectrum(&h.random_unit(&mut rng), d, h)
            })
            .collect()
    };
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let meta = TableMeta {
        delta: d,
        subspace: h.label().to_string(),
        samples: n_samples,
        seed,
        cone,
    };
    let table = OperatorTable::from_points(meta, points)?;
    let violations = table.cone_violations(pairs, seed);
    if violations > 0 {
        return Err(Error::ConeViolation {
            violations: violations as usize,
            pairs: pairs as usize,
        });
    }
    Ok(table)
}

/// Lower bound `n min y` and upper bound `n (min y + kappa range y)` on `h(y)`.
fn h_bounds(y: &[f64], cone: &ConeParams) -> (f64, f64) {
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let n = y.len() as f64;
    (n * lo, n * (lo + cone.kappa() * (hi - lo)))
}

/// Coordinates screened in O(1) before the full bound in [`eval_f`].
const SCREEN: [usize; 5] = [20, 0, 10, 4, 16];

/// `f(x) = s - g~(z)` at the sorted copy of `x`.
///
/// Linear scan with early exit. `psi(u) <= c u` for `c` in `{1, lambda^2}`,
/// so weighting coordinate `j` by `lambda^2` and the rest by 1 gives
/// `h(x - p) <= w (key_j(x) - key_j(p))` with `w = n / (lambda^2 + n - 1)`.
/// The scan runs through the entries in ascending `key_j` for the `j` that
/// leaves the fewest candidates and stops once that bound drops below the
/// running maximum.
pub fn eval_f(x: &[f64], table: &OperatorTable) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let cone = table.cone();
    let n = cone.n;
    if x.len() != n {
        return Err(Error::dims(n, x.len()));
    }
    let mut xs = x.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    let sx: f64 = xs.iter().sum();
    let (nf, l2) = (n as f64, cone.lambda2());
    let w = nf / (l2 + nf - 1.0);
    let key_x: Vec<f64> = xs.iter().map(|&v| sx + (l2 - 1.0) * v).collect();
    let bound = |k: usize, j: usize| w * (key_x[j] - table.sums[k] - (l2 - 1.0) * table.points[k][j]);

    let mut y = vec![0.0; n];
    let mut exact = |k: usize, best: f64| -> f64 {
        let p = &table.points[k];
        for ((yi, a), b) in y.iter_mut().zip(&xs).zip(p) {
            *yi = a - b;
        }
        let (lo, hi) = h_bounds(&y, cone);
        if hi <= best {
            return best;
        }
        let v = -nf * gauge_root(&y, l2);
        best.max(v.max(lo))
    };

    // Seed with the entries nearest to x in the first and last key orders.
    let mut best = f64::NEG_INFINITY;
    for j in [0, n - 1] {
        let mid = table.keys[j].partition_point(|&kv| kv < key_x[j]);
        for r in mid.saturating_sub(16)..(mid + 16).min(table.len()) {
            best = exact(table.orders[j][r] as usize, best);
        }
    }

    let limit = |j: usize| table.keys[j].partition_point(|&kv| w * (key_x[j] - kv) > best);
    let j = (0..n).min_by_key(|&j| limit(j)).expect("n >= 2");
    let (order, keys) = (&table.orders[j], &table.keys[j]);
    for (r, &k) in order.iter().enumerate() {
        if w * (key_x[j] - keys[r]) <= best {
            break;
        }
        let k = k as usize;
        if SCREEN.iter().any(|&c| bound(k, c * (n - 1) / 20) <= best) {
            continue;
        }
        best = exact(k, best);
    }
    Ok(best)
}

/// `n min_w |x - p_w|_inf`: a bound on `|f(x)|` for `x` on the sampled graph.
pub fn density_bound(x: &[f64], table: &OperatorTable) -> f64 {
    let mut xs = x.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    let d = table
        .points
        .iter()
        .map(|p| xs.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    table.cone().n as f64 * d
}

/// Residual and ellipticity audit of `f`.
///
/// * `cfg.samples` table entries (evenly strided) must have `|f| <= 1e-12`;
/// * `fresh` new unit points of `H'` must have `|f| <=` their density bound;
///   the largest residual is reported against `fresh_tolerance`;
/// * `probes` difference quotients `(f(x + mu e_i) - f(x)) / mu` must lie in
///   `[1/C_0, C_0]` up to `1e-9`.
pub struct OperatorAudit {
    pub table_points: u64,
    pub fresh: u64,
    pub fresh_tolerance: f64,
    pub probes: u64,
}

pub fn audit_operator(
    table: &OperatorTable,
    delta: Delta,
    h: &Subspace,
    plan: &OperatorAudit,
    cfg: &AuditConfig,
) -> Result<Certificate> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let d = delta.value();
    let cone = *table.cone();
    let c0 = cone.ellipticity();
    let table_tol = cfg.tol(1e-12);
    let slack = cfg.tol(1e-9);
    let m = table.len() as u64;

    let stride = (m / plan.table_points.max(1)).max(1);
    let on_table = run_samples(plan.table_points.min(m), |i, t| {
        let p = &table.points[(i * stride) as usize];
        match eval_f(p, table) {
            Ok(v) => {
                t.evaluated += 1;
                t.observe_max("residual", v.abs(), i);
            }
            Err(_) => t.violate(i),
        }
    });

    let fresh = run_samples(plan.fresh, |i, t| {
        let mut rng = stream(cfg.seed, "operator-fresh", i);
        let u = h.random_unit(&mut rng);
        let Ok(x) = restricted_spectrum(&u, d, h) else {
            t.violate(i);
            return;
        };
        let (Ok(v), bound) = (eval_f(&x, table), density_bound(&x, table)) else {
            t.violate(i);
            return;
        };
        t.evaluated += 1;
        t.observe_max("fresh_residual", v.abs(), i);
        t.observe_max("density_bound", bound, i);
        t.check(v.abs() <= bound + table_tol, i);
    });

    let probes = run_samples(plan.probes, |i, t| {
        let mut rng = stream(cfg.seed, "operator-probe", i);
        let base = &table.points[(uniform(&mut rng, 0.0, 1.0) * m as f64) as usize % m as usize];
        let x: Vec<f64> = base.iter().map(|v| v + 0.01 * gaussian(&mut rng)).collect();
        let k = (uniform(&mut rng, 0.0, 1.0) * cone.n as f64) as usize % cone.n;
        let mu = 1.0 - uniform(&mut rng, 0.0, 1.0);
        let mut xp = x.clone();
        xp[k] += mu;
        let (Ok(f0), Ok(f1)) = (eval_f(&x, table), eval_f(&xp, table)) else {
            t.violate(i);
            return;
        };
        let q = (f1 - f0) / mu;
        t.evaluated += 1;
        t.observe("quotient", q, i);
        t.check(q >= 1.0 / c0 - slack && q <= c0 + slack, i);
    });

    let mut cert = Certificate::from_tally(format!("operator_delta{d}"), cfg.seed, table_tol, &on_table);
    let fresh_max = fresh.max_of("fresh_residual").unwrap_or(f64::NAN);
    cert.samples += fresh.evaluated + probes.evaluated;
    cert.violations += fresh.violations + probes.violations;
    for (k, v) in [
        ("max_fresh_residual", fresh_max),
        ("max_density_bound", fresh.max_of("density_bound").unwrap_or(f64::NAN)),
        ("min_quotient", probes.min_of("quotient").unwrap_or(f64::NAN)),
        ("max_quotient", probes.max_of("quotient").unwrap_or(f64::NAN)),
        ("ellipticity_c0", c0),
        ("fresh_tolerance", plan.fresh_tolerance),
    ] {
        cert.extremes.insert(k.into(), v);
    }
    cert.pass = cert.pass && fresh.violations == 0 && probes.violations == 0 && fresh.evaluated == plan.fresh
        && probes.evaluated == plan.probes;
    let cert = cert
        .with_meta("delta", d)
        .with_meta("table_entries", m)
        .with_meta("aspect", cone.aspect)
        .with_meta("fresh_within_tolerance", fresh_max <= plan.fresh_tolerance)
        .with_meta("symmetrization", "inputs sorted descending instead of summing over permutations");
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cone(n: usize) -> ConeParams {
        ConeParams::new(20.2, n).unwrap()
    }

    fn meta(n: usize) -> TableMeta {
        TableMeta {
            delta: 1.0,
            subspace: "test".into(),
            samples: 0,
            seed: 0,
            cone: cone(n),
        }
    }

    #[test]
    fn membership_examples() {
        let c = cone(5);
        assert!(dual_cone_member(&[1.0; 5], &c));
        assert!(!dual_cone_member(&[0.0, 0.0, 0.0, 0.0, -1.0], &c));
        assert!(dual_cone_member(&[c.lambda2(), -1.0, 0.0, 0.0, 0.0], &c));
        assert!(!dual_cone_member(&[c.lambda2() * 0.999, -1.0, 0.0, 0.0, 0.0], &c));
        assert!(ConeParams::new(0.5, 3).is_err());
    }

    #[test]
    fn membership_matches_extreme_ray_minimum() {
        let c = ConeParams::new(2.0, 4).unwrap();
        let mut rng = stream(51, "extreme-rays", 0);
        for _ in 0..2000 {
            let x: Vec<f64> = (0..4).map(|_| gaussian(&mut rng)).collect();
            let min = (0..16u32)
                .map(|mask| {
                    (0..4)
                        .map(|i| x[i] * if mask >> i & 1 == 1 { c.aspect } else { 1.0 / c.aspect })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(dual_cone_member(&x, &c), min >= 0.0);
        }
    }

    #[test]
    fn helmert_round_trip() {
        let x: Vec<f64> = (0..21).map(|i| (i as f64 * 0.37).sin()).collect();
        let (z, s) = to_zs(&x);
        assert_eq!(z.len(), 20);
        assert!((s - x.iter().sum::<f64>()).abs() < 1e-15);
        let back = from_zs(&z, s);
        assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-14));
        for k in 1..21 {
            let r = helmert_row(21, k);
            assert!(r.iter().sum::<f64>().abs() < 1e-14);
            assert!((r.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gauge_agrees_with_bisection() {
        let c = cone(21);
        for i in 0..300 {
            let mut rng = stream(52, "gauge-bisect", i);
            let z: Vec<f64> = (0..20).map(|_| gaussian(&mut rng)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let exact = cone_gauge(&z, &c);
            let bis = cone_gauge_bisection(&z, &c);
            assert!((exact - bis).abs() <= 2e-10 * (1.0 + norm), "{exact} {bis}");
            let x = from_zs(&z, exact);
            let (pos, neg) = x.iter().fold((0.0, 0.0), |(p, q), &v| if v >= 0.0 { (p + v, q) } else { (p, q - v) });
            assert!((pos - c.lambda2() * neg).abs() < 1e-10 * (1.0 + pos));
        }
        assert_eq!(cone_gauge(&[0.0; 20], &c), 0.0);
    }

    #[test]
    fn slopes_and_ellipticity() {
        let c = cone(21);
        let (a, b) = c.slope_bounds();
        assert!((1.0 / a - (1.0 + 20.0 * 20.2 * 20.2) / 21.0).abs() < 1e-12);
        assert!(b < 21.0 && b > 20.0);
        assert!((c.ellipticity() - 1.0 / a).abs() < 1e-12);
    }

    fn small_table(n: usize, count: usize, seed: u64) -> OperatorTable {
        let mut rng = stream(seed, "small-table", 0);
        let pts = (0..count).map(|_| (0..n).map(|_| gaussian(&mut rng)).collect()).collect();
        OperatorTable::from_points(meta(n), pts).unwrap()
    }

    fn brute_f(x: &[f64], table: &OperatorTable) -> f64 {
        let mut xs = x.to_vec();
        xs.sort_by(|a, b| b.total_cmp(a));
        table
            .points()
            .iter()
            .map(|p| {
                let y: Vec<f64> = xs.iter().zip(p).map(|(a, b)| a - b).collect();
                h_value(&y, table.cone())
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn pruned_evaluation_matches_brute_force() {
        let t = small_table(21, 400, 53);
        let mut rng = stream(53, "pruned", 1);
        for _ in 0..300 {
            let x: Vec<f64> = (0..21).map(|_| gaussian(&mut rng)).collect();
            assert!((eval_f(&x, &t).unwrap() - brute_f(&x, &t)).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_of_a_cone_lipschitz_set_is_the_zero_set() {
        // Spectra of restricted Hessians satisfy the cone condition.
        let h = Subspace::default21();
        let delta = Delta::new(1.0).unwrap();
        let t = build_table(delta, &h, 300, 54, ConeParams::for_delta(delta), 5000).unwrap();
        for p in t.points() {
            assert!(eval_f(p, &t).unwrap().abs() <= 1e-12);
        }
        let p = &t.points()[7];
        for mu in [1e-3, 0.5, 1.0] {
            let shifted: Vec<f64> = p.iter().map(|v| v + mu).collect();
            let f = eval_f(&shifted, &t).unwrap();
            assert!(f >= mu / t.cone().ellipticity());
            assert!((f - 21.0 * mu).abs() < 1e-12);
        }
        let mut rev = p.clone();
        rev.reverse();
        assert_eq!(eval_f(&rev, &t).unwrap(), eval_f(p, &t).unwrap());
    }

    #[test]
    fn single_entry_table() {
        let t = small_table(21, 1, 55);
        assert_eq!(t.cone_violations(100, 1), 0);
        assert_eq!(eval_f(&t.points()[0].clone(), &t).unwrap(), 0.0);
        let empty = OperatorTable::from_points(meta(21), vec![]).unwrap();
        assert!(matches!(eval_f(&[0.0; 21], &empty), Err(Error::EmptyTable)));
    }

    #[test]
    fn cone_violations_are_detected() {
        let base = vec![0.0; 21];
        let above: Vec<f64> = base.iter().map(|v| v + 1.0).collect();
        let t = OperatorTable::from_points(meta(21), vec![base, above]).unwrap();
        assert!(t.cone_violations(10, 1) > 0);
    }

    #[test]
    fn table_file_round_trip_and_merge() {
        let dir = tempfile::tempdir().unwrap();
        let h = Subspace::default21();
        let delta = Delta::new(1.0).unwrap();
        let a = build_table(delta, &h, 50, 1, ConeParams::for_delta(delta), 500).unwrap();
        let b = build_table(delta, &h, 40, 2, ConeParams::for_delta(delta), 500).unwrap();
        let path = dir.path().join("t.jsonl");
        a.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().starts_with("{\"header\""));
        assert!(text.lines().nth(1).unwrap().starts_with("{\"z\":["));
        let back = OperatorTable::read(&path).unwrap();
        assert_eq!(back.len(), 50);
        for (p, q) in back.points().iter().zip(a.points()) {
            assert!(p.iter().zip(q).all(|(x, y)| (x - y).abs() < 1e-13));
        }
        for p in back.points() {
            assert!(eval_f(p, &back).unwrap().abs() <= 1e-12);
        }
        let merged = OperatorTable::merge(vec![a, b]).unwrap();
        assert_eq!(merged.len(), 90);
        assert_eq!(merged.meta.samples, 90);
        assert_eq!(merged.cone_violations(2000, 3), 0);
    }

    #[test]
    fn small_audit() {
        let h = Subspace::default21();
        let delta = Delta::new(1.0).unwrap();
        let t = build_table(delta, &h, 2000, 5, ConeParams::for_delta(delta), 2000).unwrap();
        let plan = OperatorAudit {
            table_points: 200,
            fresh: 20,
            fresh_tolerance: 1e-2,
            probes: 500,
        };
        let c = audit_operator(&t, delta, &h, &plan, &AuditConfig::new(1, 6)).unwrap();
        assert!(c.pass, "{}", c.summary());
        assert!(c.extreme("max_fresh_residual").unwrap() <= c.extreme("max_density_bound").unwrap());
    }

    fn vec21() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 21)
    }

    proptest! {
        #[test]
        fn gauge_is_homogeneous_and_subadditive(a in vec21(), b in vec21(), t in 0.01f64..50.0) {
            let c = cone(21);
            let (za, _) = to_zs(&a);
            let (zb, _) = to_zs(&b);
            let ea = cone_gauge(&za, &c);
            let scaled: Vec<f64> = za.iter().map(|v| v * t).collect();
            prop_assert!((cone_gauge(&scaled, &c) - t * ea).abs() <= 1e-9 * (1.0 + (t * ea).abs()));
            let sum: Vec<f64> = za.iter().zip(&zb).map(|(x, y)| x + y).collect();
            prop_assert!(cone_gauge(&sum, &c) <= ea + cone_gauge(&zb, &c) + 1e-9);
        }

        #[test]
        fn gauge_is_lipschitz(a in vec21(), b in vec21()) {
            let c = cone(21);
            let (za, _) = to_zs(&a);
            let (zb, _) = to_zs(&b);
            let dist = za.iter().zip(&zb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let diff = (cone_gauge(&za, &c) - cone_gauge(&zb, &c)).abs();
            prop_assert!(diff <= c.lambda2() * (21f64).sqrt() * dist + 1e-12);
        }

        #[test]
        fn f_is_permutation_invariant_and_monotone(x in vec21(), bump in prop::collection::vec(0.0f64..1.0, 21), seed in 0u64..1000) {
            let t = small_table(21, 60, 56);
            let mut perm = x.clone();
            let mut rng = stream(seed, "perm", 0);
            for i in (1..21).rev() {
                let j = (uniform(&mut rng, 0.0, 1.0) * (i + 1) as f64) as usize % (i + 1);
                perm.swap(i, j);
            }
            let f = eval_f(&x, &t).unwrap();
            prop_assert_eq!(eval_f(&perm, &t).unwrap(), f);
            let up: Vec<f64> = x.iter().zip(&bump).map(|(a, b)| a + b).collect();
            prop_assert!(eval_f(&up, &t).unwrap() >= f - 1e-12);
        }

        #[test]
        fn difference_quotients_are_bounded(x in vec21(), k in 0usize..21, mu in 1e-3f64..1.0) {
            let t = small_table(21, 60, 57);
            let mut xp = x.clone();
            xp[k] += mu;
            let q = (eval_f(&xp, &t).unwrap() - eval_f(&x, &t).unwrap()) / mu;
            let c0 = t.cone().ellipticity();
            prop_assert!(q >= 1.0 / c0 - 1e-9 && q <= c0 + 1e-9);
        }
    }
}
