//! Command-line audits and the combined `full-check` pipeline.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::certificate::{
    run_samples, write_combined_report, write_extremes_csv, write_report, AuditConfig, Certificate, Report,
};
use crate::error::{Error, Result};
use crate::isaacs::{orthogonal_positive_witness, pencil_audit, supinf_audit, witness_audit, Pencil, SupInfPlan};
use crate::octonion::Octonion;
use crate::operator::{audit_operator, build_table, ConeParams, OperatorAudit, OperatorTable};
use crate::rng::{gaussian_vec, stream};
use crate::singular::{certify_lemma41, certify_prop41, tangential_audit, Delta, Subspace};
use crate::spectral::blocks::block_property_audit_with;
use crate::spectral::{closed_form_spectrum, factorization_audit, remark_audit, sym_eigen};
use crate::trilinear::{eval_p24, eval_p24_octonion, eval_p24_right, hess_p24, TriplePoint};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const SEED_ENV: &str = "OCTOVISC_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    AuditBlocks,
    CertifyProp41,
    CertifyLemma41,
    BuildOperator,
    AuditOperator,
    IsaacsWitness,
    SupinfAudit,
    FullCheck,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "octovisc", version, about = "Seeded audits of octonionic cubic forms and singular Hessian solutions")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Falls back to $OCTOVISC_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-command default when omitted.
    #[arg(long)]
    pub samples: Option<u64>,
    /// `default`, `random` or a JSON file of orthonormal rows.
    #[arg(long, default_value = "default")]
    pub subspace: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-sample extremes as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// `unit-real-triple`, `random` or a JSON file `{"X": [...], "Y": [...], "Z": [...]}`.
    #[arg(long, default_value = "unit-real-triple")]
    pub point: String,
    /// Operator table (JSON lines), written by build-operator and read by audit-operator.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Pencil file `{"F1": rows, "F2": rows}`.
    #[arg(long)]
    pub pencil: Option<PathBuf>,
    /// Tables merged by build-operator instead of sampling.
    #[arg(long, num_args = 1..)]
    pub merge: Vec<PathBuf>,
}

impl RunConfig {
    pub fn seed(&self) -> Result<u64> {
        match (self.seed, std::env::var(SEED_ENV)) {
            (Some(s), _) => Ok(s),
            (None, Ok(v)) => v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not a u64"))),
            (None, Err(_)) => Ok(0),
        }
    }

    fn samples_or(&self, default: u64) -> u64 {
        self.samples.unwrap_or(default)
    }

    fn validate(&self) -> Result<()> {
        if self.samples == Some(0) {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if !(self.tolerance_scale > 0.0) || !self.tolerance_scale.is_finite() {
            return Err(Error::Config(format!("tolerance scale must be positive, got {}", self.tolerance_scale)));
        }
        Delta::new(self.delta)?;
        Ok(())
    }

    fn audit(&self, samples: u64) -> Result<AuditConfig> {
        Ok(AuditConfig {
            samples,
            seed: self.seed()?,
            tolerance_scale: self.tolerance_scale,
        })
    }

    fn subspace(&self) -> Result<Subspace> {
        match self.subspace.as_str() {
            "default" => Ok(Subspace::default21()),
            "random" => Ok(Subspace::random_seeded(21, self.seed()?, 0)),
            path => Subspace::read(Path::new(path)),
        }
    }

    fn point(&self) -> Result<TriplePoint> {
        match self.point.as_str() {
            "unit-real-triple" => Ok(TriplePoint::unit_real_triple()),
            "random" => Ok(TriplePoint::random_unit(&mut stream(self.seed()?, "cli-point", 0))),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::json(path.to_string(), e))
            }
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Json { .. } => EXIT_IO,
        _ => EXIT_FAIL,
    }
}

/// Runs one command, writes its report and prints a one-line summary.
pub fn run(cfg: &RunConfig) -> i32 {
    let outcome = cfg.validate().and_then(|_| {
        if cfg.threads == 0 {
            dispatch(cfg)
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                .install(|| dispatch(cfg))
        }
    });
    match outcome {
        Ok(pass) => if pass { EXIT_PASS } else { EXIT_FAIL },
        Err(e) => {
            eprintln!("octovisc: {e}");
            exit_code(&e)
        }
    }
}

fn emit(cfg: &RunConfig, cert: &Certificate) -> Result<bool> {
    println!("{}", cert.summary());
    if let Some(path) = &cfg.out {
        write_report(cert, path)?;
    }
    if let Some(path) = &cfg.csv {
        write_extremes_csv(cert, path)?;
    }
    Ok(cert.pass)
}

fn dispatch(cfg: &RunConfig) -> Result<bool> {
    let delta = Delta::new(cfg.delta)?;
    let seed = cfg.seed()?;
    match cfg.command {
        Command::Spectrum => {
            let v = cfg.point()?;
            let numeric = sym_eigen(&hess_p24(&v))?;
            let scale = v.norm();
            if scale == 0.0 {
                return Err(Error::SingularPoint { norm: 0.0 });
            }
            let closed = closed_form_spectrum(&v.normalized())?;
            let groups: Vec<String> = numeric
                .buckets(1e-8 * scale.max(1.0))
                .iter()
                .map(|(value, count)| format!("{value:.12} x{count}"))
                .collect();
            println!("spectrum: {}", groups.join(", "));
            let mut cert = Certificate::new("spectrum", seed, cfg.tol(1e-9));
            cert.samples = 1;
            let closed_scaled: Vec<f64> = closed.values().iter().map(|x| x * scale).collect();
            cert.worst_residual = numeric.max_abs_diff(&crate::linalg::Spectrum::from_unsorted(closed_scaled));
            cert.pass = cert.worst_residual <= cert.tolerance;
            for (k, x) in numeric.values().iter().enumerate() {
                cert.extremes.insert(format!("lambda{:02}", k + 1), *x);
            }
            emit(cfg, &cert)
        }
        Command::AuditBlocks => emit(cfg, &block_property_audit_with(&cfg.audit(cfg.samples_or(10_000))?)),
        Command::CertifyProp41 => {
            let h = cfg.subspace()?;
            emit(cfg, &certify_prop41(delta, &h, &cfg.audit(cfg.samples_or(100_000))?)?)
        }
        Command::CertifyLemma41 => emit(cfg, &certify_lemma41(delta, &cfg.audit(cfg.samples_or(1_000_000))?)?),
        Command::BuildOperator => {
            let path = cfg
                .table
                .as_ref()
                .ok_or_else(|| Error::Config("build-operator needs --table".into()))?;
            let (table, pairs) = if cfg.merge.is_empty() {
                let h = cfg.subspace()?;
                let n = cfg.samples_or(100_000);
                let pairs = 10_000;
                (build_table(delta, &h, n, seed, ConeParams::for_delta(delta), pairs)?, pairs)
            } else {
                let tables = cfg.merge.iter().map(|p| OperatorTable::read(p)).collect::<Result<Vec<_>>>()?;
                let merged = OperatorTable::merge(tables)?;
                let pairs = 10_000;
                let bad = merged.cone_violations(pairs, seed);
                if bad > 0 {
                    return Err(Error::ConeViolation {
                        violations: bad as usize,
                        pairs: pairs as usize,
                    });
                }
                (merged, pairs)
            };
            table.write(path)?;
            let mut cert = Certificate::new(format!("operator_table_delta{}", cfg.delta), seed, 0.0);
            cert.samples = table.len() as u64;
            cert.pass = !table.is_empty();
            let cert = cert
                .with_meta("pairs_checked", pairs)
                .with_meta("cone_violations", 0)
                .with_meta("aspect", table.cone().aspect)
                .with_meta("table", path.display());
            emit(cfg, &cert)
        }
        Command::AuditOperator => {
            let path = cfg
                .table
                .as_ref()
                .ok_or_else(|| Error::Config("audit-operator needs --table".into()))?;
            let table = OperatorTable::read(path)?;
            let delta = Delta::new(table.meta.delta)?;
            let probes = cfg.samples_or(100_000);
            let plan = OperatorAudit {
                table_points: 1000,
                fresh: probes.min(1000),
                fresh_tolerance: 1e-2,
                probes,
            };
            emit(cfg, &audit_operator(&table, delta, &cfg.subspace()?, &plan, &cfg.audit(1)?)?)
        }
        Command::IsaacsWitness => {
            let pencil = match &cfg.pencil {
                Some(p) => Pencil::read(p)?,
                None => crate::isaacs::hessian_pencil(cfg.delta, &cfg.subspace()?, &mut stream(seed, "cli-pencil", 0))?,
            };
            let w = orthogonal_positive_witness(&pencil)?;
            let scale = pencil.f1.frobenius().max(pencil.f2.frobenius()) * w.q.frobenius();
            let mut cert = Certificate::new("isaacs_witness", seed, cfg.tol(1e-8));
            cert.samples = 1;
            cert.worst_residual = w.residuals[0].max(w.residuals[1]) / scale;
            cert.pass = cert.worst_residual <= cert.tolerance && w.q.is_positive_definite();
            cert.extremes.insert("ellipticity".into(), w.ellipticity);
            cert.extremes.insert("lambda_min".into(), w.q.eigenvalues().min());
            let witness = serde_json::to_string(&w).map_err(|e| Error::json("witness", e))?;
            emit(cfg, &cert.with_meta("witness", witness))
        }
        Command::SupinfAudit => {
            let plan = SupInfPlan {
                n_b: 100,
                n_a: 1000,
                test_points: cfg.samples_or(100),
            };
            emit(cfg, &supinf_audit(delta, &cfg.subspace()?, plan, &cfg.audit(1)?)?)
        }
        Command::FullCheck => {
            let report = full_check(&cfg.subspace()?, cfg.samples_or(1000), seed, cfg.tolerance_scale)?;
            for s in &report.sections {
                println!("{}", s.summary());
            }
            println!("{} full-check: {} sections", if report.pass { "PASS" } else { "FAIL" }, report.sections.len());
            if let Some(path) = &cfg.out {
                write_combined_report(&report, path)?;
            }
            Ok(report.pass)
        }
    }
}

impl RunConfig {
    fn tol(&self, base: f64) -> f64 {
        base * self.tolerance_scale
    }
}

/// `|ab| = |a||b|`, alternativity and `Re((ab)c) = Re(a(bc))` on Gaussian
/// octonions, relative to the product of norms.
pub fn octonion_axiom_audit(cfg: &AuditConfig) -> Certificate {
    let tol = cfg.tol(1e-12);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "octonion-axioms", i);
        let mut draw = || Octonion::from_slice(&gaussian_vec(&mut rng, 8));
        let (a, b, c) = (draw(), draw(), draw());
        let (na, nb, nc) = (a.norm(), b.norm(), c.norm());
        let norm = ((a * b).norm() - na * nb).abs() / (na * nb);
        let alt = (((a * a) * b - a * (a * b)).norm() + ((a * b) * b - a * (b * b)).norm()) / (na * na * nb);
        let weak = ((a * b) * c).re() - (a * (b * c)).re();
        let weak = weak.abs() / (na * nb * nc);
        t.evaluated += 1;
        t.observe_max("norm_multiplicative", norm, i);
        t.observe_max("alternative", alt, i);
        t.observe_max("weak_associative", weak, i);
        t.observe_max("residual", norm.max(alt).max(weak), i);
    });
    Certificate::from_tally("octonion_axioms", cfg.seed, tol, &tally)
}

/// The 64-term table against `Re((XY)Z)` and `Re(X(YZ))` at Gaussian points,
/// relative to `|X||Y||Z|`.
pub fn dual_path_audit(cfg: &AuditConfig) -> Certificate {
    let tol = cfg.tol(1e-12);
    let tally = run_samples(cfg.samples, |i, t| {
        let mut rng = stream(cfg.seed, "dual-path", i);
        let v = TriplePoint::random(&mut rng);
        let (x, y, z) = v.octonions();
        let scale = x.norm() * y.norm() * z.norm();
        let table = eval_p24(&v);
        let left = eval_p24_octonion(&v);
        let right = eval_p24_right(&v);
        t.evaluated += 1;
        t.observe_max("residual", (table - left).abs().max((table - right).abs()) / scale, i);
    });
    Certificate::from_tally("dual_path", cfg.seed, tol, &tally)
}

/// Every audit in sequence, sized from `samples`; failures do not stop later
/// sections.
pub fn full_check(h: &Subspace, samples: u64, seed: u64, tolerance_scale: f64) -> Result<Report> {
    let cfg = |n: u64| AuditConfig {
        samples: n.max(1),
        seed,
        tolerance_scale,
    };
    let deltas = [1.0, 1.5, 1.99].map(|d| Delta::new(d).expect("valid delta"));
    let mut sections = vec![
        octonion_axiom_audit(&cfg(samples)),
        dual_path_audit(&cfg(10 * samples)),
        block_property_audit_with(&cfg(samples)),
        factorization_audit(&cfg(samples)),
        remark_audit(&cfg(samples)),
    ];
    for d in deltas {
        sections.push(tangential_audit(d, &cfg(samples)));
    }
    for d in deltas {
        sections.push(certify_lemma41(d, &cfg(10 * samples))?);
    }
    for d in deltas {
        sections.push(certify_prop41(d, h, &cfg(samples))?);
    }

    let d1 = deltas[0];
    let pairs = 10_000.min(samples * samples);
    let operator = match build_table(d1, h, samples, seed, ConeParams::for_delta(d1), pairs) {
        Ok(table) => {
            let plan = OperatorAudit {
                table_points: samples.min(1000),
                fresh: (samples / 10).clamp(1, 100),
                fresh_tolerance: 1e-2,
                probes: samples,
            };
            audit_operator(&table, d1, h, &plan, &cfg(1))?.with_meta("cone_pairs", pairs)
        }
        Err(e @ Error::ConeViolation { .. }) => {
            Certificate::new("operator_delta1", seed, 0.0).with_meta("error", e)
        }
        Err(e) => return Err(e),
    };
    sections.push(operator);

    sections.push(pencil_audit(d1, h, 256, &cfg(samples / 10))?);
    sections.push(witness_audit(d1, h, &cfg(samples / 10)));
    let plan = SupInfPlan {
        n_b: 10,
        n_a: 100,
        test_points: (samples / 100).max(2),
    };
    sections.push(supinf_audit(d1, h, plan, &cfg(1))?);
    Ok(Report::new("full_check", seed, sections))
}
