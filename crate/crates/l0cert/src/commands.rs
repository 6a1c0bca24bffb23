//! The five commands: `gen`, `certify`, `solve`, `verify`, `sweep`.
//!
//! Each command takes a parsed [`Config`] plus the CLI overrides and returns
//! a [`CmdOutput`]: a [`RunReport`] (also written as `report.csv` into the
//! output directory) and a flag saying whether the certificate turned out not
//! to apply, which the CLI maps to exit code 4.
//!
//! # Pipeline
//!
//! `certify` computes the curvature certificate and the λ₀ interval;
//! `solve` runs the forward–backward solver; `verify` re-runs certification
//! and cross-checks every evaluated λ₀ against exhaustive enumeration;
//! `sweep` runs the full certify → solve → verify pipeline over a seeded
//! grid of instances.
//!
//! # λ₀ selection
//!
//! Commands that evaluate λ₀ values take them from `[verify] lambda0_list`
//! (or `[sweep] lambda0_list` for sweeps) when given.  Otherwise they pick
//! five values equispaced **strictly inside** the certified interval,
//! `Λ̲ + j·(Λ̄−Λ̲)/6` for `j = 1..5` — the certificate then promises oracle
//! recovery at every one of them.  An empty interval with no explicit list
//! leaves nothing to evaluate: the run is reported as skipped.
//!
//! # Theory-violation protocol
//!
//! A λ₀ strictly inside a nonempty certified interval must make the true
//! support the unique brute-force optimum with the restricted solve as its
//! optimizer.  If enumeration ever disagrees, the harness writes the full
//! instance (operator, measurements, truth, background) plus a note with the
//! seed and λ₀ into `violation-trial<t>/` under the output directory and
//! aborts with exit code 3: that outcome would falsify the implementation —
//! or the mathematics — and must never be averaged away.  Merely failing to
//! certify (empty interval, λ₀ outside) is exit 4 territory: the theory is
//! silent there, not wrong.
//!
//! # What can go wrong
//!
//! - Certification requires a truth: generated instances carry one, file
//!   problems need `[truth] x_star`.
//! - `verify` on N > 24 trips the enumeration guard — deliberately.
//!   Exhaustive checking at that size would silently take days.
//! - A Poisson instance whose counts are all zero has no usable curvature
//!   data; its certificate is vacuous and its trials are skipped, not failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use bregman_l0::prelude::*;
use rayon::prelude::*;

use crate::config::Config;
use crate::instance::{gen_instance, FidelityKind, Instance};
use crate::io;
use crate::report::{ReportRow, RunReport};
use crate::rng::derive_stream_seed;
use crate::{Error, Result};

/// Tolerance for "the brute-force optimum equals the restricted solve":
/// largest coordinate deviation.  Both sides solve the same strictly convex
/// restricted problem, so only accumulated solver error separates them.
const ORACLE_MATCH_TOL: f64 = 1e-8;

/// How many interior λ₀ values are picked automatically from a certified
/// interval (at `j/(AUTO_LAMBDA_COUNT+1)` fractions for `j = 1..=count`).
const AUTO_LAMBDA_COUNT: usize = 5;

/// CLI-level overrides, shared by every command.
#[derive(Clone, Debug)]
pub struct Invocation {
    /// `--seed`: overrides the config's instance seed.
    pub seed: Option<u64>,
    /// `--out`: output directory for reports, generated files, dumps.
    pub out: PathBuf,
}

/// A command's result: the report (already written to disk) and whether the
/// run ended in "certificate not applicable".
#[derive(Debug)]
pub struct CmdOutput {
    pub report: RunReport,
    pub not_applicable: bool,
}

/// A problem ready to work on: data, optional truth, and the seed that made
/// it (0 for file problems).
struct Loaded {
    a: Matrix,
    y: Vec<f64>,
    background: Vec<f64>,
    fidelity: FidelityKind,
    seed: u64,
    truth: Option<Truth>,
}

struct Truth {
    x_star: Vec<f64>,
    sigma_star: Support,
    eps: Vec<f64>,
}

impl Truth {
    fn eps_inf(&self) -> f64 {
        self.eps.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }
}

impl From<Instance> for Loaded {
    fn from(inst: Instance) -> Self {
        Loaded {
            truth: Some(Truth {
                x_star: inst.x_star,
                sigma_star: inst.sigma_star,
                eps: inst.eps,
            }),
            a: inst.a,
            y: inst.y,
            background: inst.background,
            fidelity: inst.fidelity,
            seed: inst.seed,
        }
    }
}

fn load(cfg: &Config, inv: &Invocation) -> Result<Loaded> {
    if let Some(section) = &cfg.instance {
        let seed = inv.seed.or(section.seed).unwrap_or(0);
        let inst = gen_instance(&section.to_spec(seed, 1.0, None))?;
        return Ok(inst.into());
    }
    let Some(p) = &cfg.problem else {
        return Err(Error::Config(
            "this command needs a problem: provide [problem] or [instance]".into(),
        ));
    };
    let a = io::read_matrix(&cfg.resolve(&p.matrix))?;
    let y = io::read_vector(&cfg.resolve(&p.y))?;
    if y.len() != a.rows() {
        return Err(Error::Config(format!(
            "y has {} entries but the operator has {} rows",
            y.len(),
            a.rows()
        )));
    }
    let background = match (&p.b, p.fidelity) {
        (Some(path), FidelityKind::Kl) => {
            let b = io::read_vector(&cfg.resolve(path))?;
            if b.len() != a.rows() {
                return Err(Error::Config(format!(
                    "b has {} entries but the operator has {} rows",
                    b.len(),
                    a.rows()
                )));
            }
            b
        }
        _ => Vec::new(),
    };
    let truth = match &cfg.truth {
        None => None,
        Some(path) => {
            let x_star = io::read_vector(&cfg.resolve(path))?;
            if x_star.len() != a.cols() {
                return Err(Error::Config(format!(
                    "x_star has {} entries but the operator has {} columns",
                    x_star.len(),
                    a.cols()
                )));
            }
            let sigma_star = Support::of_vector(&x_star);
            let mut clean = a.matvec(&x_star);
            for (c, b) in clean.iter_mut().zip(background.iter()) {
                *c += *b;
            }
            let eps: Vec<f64> = y.iter().zip(clean.iter()).map(|(yi, ci)| yi - ci).collect();
            Some(Truth { x_star, sigma_star, eps })
        }
    };
    Ok(Loaded {
        a,
        y,
        background,
        fidelity: p.fidelity,
        seed: inv.seed.unwrap_or(0),
        truth,
    })
}

/// Build the relaxed problem at a given λ₀, honoring `[relaxation]`
/// overrides.  Overrides are validated against the calibration the
/// majorization argument needs; see the config module docs.
fn build_problem(loaded: &Loaded, cfg: &Config, lambda0: f64) -> Result<Problem> {
    let safety = cfg.relaxation.safety;
    match loaded.fidelity {
        FidelityKind::LeastSquares => match cfg.relaxation.gamma {
            None => Ok(Problem::least_squares(
                loaded.a.clone(),
                loaded.y.clone(),
                lambda0,
                safety,
            )?),
            Some(gamma) => {
                let f = Fidelity::least_squares(loaded.y.clone()).map_err(Error::Core)?;
                let floor = cc_calibrate_quadratic(&f, &loaded.a, 1.0).map_err(Error::Core)?;
                if gamma < floor {
                    return Err(Error::Config(format!(
                        "gamma = {gamma} is below the curvature-domination floor {floor}; \
                         the relaxation would no longer be exact"
                    )));
                }
                let n = loaded.a.cols();
                let mut gens = Vec::with_capacity(n);
                for _ in 0..n {
                    gens.push(
                        BregmanGenerator::quadratic(gamma, ConstraintSet::Reals)
                            .map_err(Error::Core)?,
                    );
                }
                Ok(Problem::new(loaded.a.clone(), f, gens, lambda0)?)
            }
        },
        FidelityKind::Kl => match cfg.relaxation.xi {
            None => Ok(Problem::kl(
                loaded.a.clone(),
                loaded.y.clone(),
                loaded.background.clone(),
                lambda0,
                safety,
            )?),
            Some(xi) => {
                let f = Fidelity::gen_kl(loaded.y.clone(), loaded.background.clone())
                    .map_err(Error::Core)?;
                let (xi0, cs, gammas) = cc_calibrate_kl(&f, &loaded.a, safety).map_err(Error::Core)?;
                if xi > xi0 {
                    return Err(Error::Config(format!(
                        "xi = {xi} exceeds the smallest background value {xi0}; \
                         the majorization argument needs xi ≤ min b"
                    )));
                }
                // Shrinking ξ tightens the curvature bound by exactly ξ₀/ξ;
                // scaling the calibrated γᵢ by that factor stays at or above
                // the true calibration (the γ floor only ever overshoots).
                let mut gens = Vec::with_capacity(cs.len());
                for (c, g) in cs.iter().zip(gammas.iter()) {
                    gens.push(
                        BregmanGenerator::smoothed_kl(g * xi0 / xi, *c, xi).map_err(Error::Core)?,
                    );
                }
                Ok(Problem::new(loaded.a.clone(), f, gens, lambda0)?)
            }
        },
    }
}

/// A λ₀ at which the problem is representable, used to carry λ₀-independent
/// work (certificates, intervals).  Explicit λ₀ lists anchor at their first
/// entry; otherwise least squares anchors at 1 and KL at a value kept small
/// enough that the smoothed-KL threshold `α` stays inside f64 range.
fn anchor_lambda(loaded: &Loaded, cfg: &Config, explicit: Option<&[f64]>) -> Result<f64> {
    if let Some(list) = explicit {
        if let Some(&first) = list.first() {
            return Ok(first);
        }
    }
    match loaded.fidelity {
        FidelityKind::LeastSquares => Ok(1.0),
        FidelityKind::Kl => {
            let f = Fidelity::gen_kl(loaded.y.clone(), loaded.background.clone())
                .map_err(Error::Core)?;
            let (xi0, _, gammas) =
                cc_calibrate_kl(&f, &loaded.a, cfg.relaxation.safety).map_err(Error::Core)?;
            let gamma_min = gammas.iter().copied().fold(f64::INFINITY, f64::min);
            // α overflows once λ₀/(γξ) nears 700; 300 leaves a wide margin.
            // The γ·ξ product is invariant under the ξ override, so the
            // anchor works for overridden problems too.
            Ok((300.0 * gamma_min * xi0).min(1.0))
        }
    }
}

/// λ₀-independent certification work for one instance.
struct Certified {
    cert: BrscCertificate,
    interval: LambdaInterval,
    route: &'static str,
    notes: Vec<String>,
}

fn empty_interval() -> LambdaInterval {
    LambdaInterval { lower: f64::INFINITY, upper: 0.0 }
}

fn certify_setting(p: &Problem, loaded: &Loaded, cfg: &Config) -> Result<Certified> {
    let Some(certify) = &cfg.certify else {
        return Err(Error::Config("certification needs a [certify] section with K".into()));
    };
    let Some(truth) = &loaded.truth else {
        return Err(Error::Config(
            "certification needs a truth: use a generated [instance] or provide [truth] x_star"
                .into(),
        ));
    };
    let k = certify.k;
    let mut notes = Vec::new();
    match loaded.fidelity {
        FidelityKind::LeastSquares => {
            let cert = brsc_ls(p, k)?;
            let delta = cert.lrip_delta.unwrap_or(1.0);
            if cert.c_k <= 0.0 {
                notes.push(format!(
                    "restricted-isometry constant {delta} leaves no curvature margin; interval is empty"
                ));
                return Ok(Certified { cert, interval: empty_interval(), route: "ls", notes });
            }
            match interval_ls(p, &truth.x_star, delta, k) {
                Ok(interval) => Ok(Certified { cert, interval, route: "ls-tight", notes }),
                Err(bregman_l0::Error::InvalidParameter(why)) => {
                    // The tight bound needs unit curvature and subunit column
                    // norms; outside that regime fall back to the generic
                    // ball-separation interval.
                    notes.push(format!("tight least-squares interval unavailable ({why}); using the generic interval"));
                    let interval = interval_l2(p, &truth.x_star, cert.c_k, k)?;
                    Ok(Certified { cert, interval, route: "l2-generic", notes })
                }
                Err(e) => Err(e.into()),
            }
        }
        FidelityKind::Kl => {
            let q = match certify.q {
                Some(q) => q,
                None => {
                    // Box bound: double the largest truth magnitude, so the
                    // certificate speaks about a region comfortably
                    // containing the signals of interest.
                    2.0 * truth.x_star.iter().fold(1.0f64, |acc, x| acc.max(x.abs()))
                }
            };
            let cert = match brsc_kl_constructive(p, k, q) {
                Ok(cert) => cert,
                Err(bregman_l0::Error::NotApplicable(why)) => {
                    notes.push(format!("constructive certificate unavailable: {why}"));
                    BrscCertificate {
                        k,
                        c_k: 0.0,
                        c_k_tilde: 0.0,
                        lrip_delta: None,
                        provenance: BrscProvenance::KlConstructive,
                    }
                }
                Err(e) => return Err(e.into()),
            };
            if cert.c_k_tilde <= 0.0 {
                notes.push("curvature constant is zero; interval is empty".into());
                return Ok(Certified { cert, interval: empty_interval(), route: "kl", notes });
            }
            let (interval, work) =
                interval_kl(p, &truth.x_star, truth.eps_inf(), cert.c_k_tilde, k)?;
            notes.push(format!(
                "KL interval regime {:?}, misfit bound {}",
                work.regime, work.f_bound
            ));
            Ok(Certified { cert, interval, route: "kl", notes })
        }
    }
}

/// The λ₀ values to evaluate: the explicit list, or interior points of the
/// interval, or nothing.
fn lambda_values(explicit: Option<&[f64]>, interval: &LambdaInterval) -> Vec<f64> {
    if let Some(list) = explicit {
        return list.to_vec();
    }
    if !interval.is_nonempty() {
        return Vec::new();
    }
    let span = interval.upper - interval.lower;
    (1..=AUTO_LAMBDA_COUNT)
        .map(|j| interval.lower + span * j as f64 / (AUTO_LAMBDA_COUNT + 1) as f64)
        .collect()
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|source| Error::Io { path: out.to_path_buf(), source })
}

fn write_report(out: &Path, report: &RunReport) -> Result<()> {
    ensure_out_dir(out)?;
    let path = out.join("report.csv");
    std::fs::write(&path, report.to_csv()).map_err(|source| Error::Io { path, source })
}

/// `gen`: write the seeded instance as plain files into the output
/// directory.
pub fn cmd_gen(cfg: &Config, inv: &Invocation) -> Result<CmdOutput> {
    let Some(section) = &cfg.instance else {
        return Err(Error::Config("gen needs an [instance] section".into()));
    };
    let seed = inv.seed.or(section.seed).unwrap_or(0);
    let inst = gen_instance(&section.to_spec(seed, 1.0, None))?;
    ensure_out_dir(&inv.out)?;
    io::write_matrix(&inv.out.join("matrix.csv"), &inst.a)?;
    io::write_vector(&inv.out.join("x_star.csv"), &inst.x_star)?;
    io::write_vector(&inv.out.join("y.csv"), &inst.y)?;
    io::write_vector(&inv.out.join("y_clean.csv"), &inst.y_clean)?;
    io::write_vector(&inv.out.join("eps.csv"), &inst.eps)?;
    if !inst.background.is_empty() {
        io::write_vector(&inv.out.join("b.csv"), &inst.background)?;
    }
    let meta = format!(
        "seed = {}\nsupport = {}\neps_norm = {}\neps_inf = {}\nmin_amplitude = {}\n",
        inst.seed,
        inst.sigma_star
            .indices()
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        inst.eps_norm(),
        inst.eps_inf(),
        inst.min_amplitude(),
    );
    let meta_path = inv.out.join("instance.txt");
    std::fs::write(&meta_path, meta).map_err(|source| Error::Io { path: meta_path, source })?;
    let mut report = RunReport::default();
    report.notes.push(format!(
        "instance written to {} (seed {seed}, support size {})",
        inv.out.display(),
        inst.sigma_star.len()
    ));
    Ok(CmdOutput { report, not_applicable: false })
}

/// `certify`: compute the certificate and interval, evaluate the chosen λ₀
/// values, and report condition diagnostics.
pub fn cmd_certify(cfg: &Config, inv: &Invocation) -> Result<CmdOutput> {
    let started = Instant::now();
    let loaded = load(cfg, inv)?;
    let explicit = cfg.verify.as_ref().and_then(|v| v.lambda0_list.as_deref());
    let anchor = anchor_lambda(&loaded, cfg, explicit)?;
    let p = build_problem(&loaded, cfg, anchor)?;
    let certified = certify_setting(&p, &loaded, cfg)?;
    let mut report = RunReport::default();
    report.notes.extend(certified.notes.iter().cloned());
    report.notes.push(format!(
        "route {}: c_k = {}, c_k_tilde = {}, interval [{}, {}]",
        certified.route,
        certified.cert.c_k,
        certified.cert.c_k_tilde,
        certified.interval.lower,
        certified.interval.upper
    ));
    let lambdas = lambda_values(explicit, &certified.interval);
    if lambdas.is_empty() {
        report.notes.push("interval is empty and no lambda0_list was given; nothing to evaluate".into());
    }
    let truth = loaded.truth.as_ref().expect("certify_setting required a truth");
    for &lambda0 in &lambdas {
        let p_l = p.with_lambda0(lambda0)?;
        if report.conditions.is_empty() {
            match global_optimality_check(&p_l, &truth.x_star, &certified.cert) {
                Ok(check) => {
                    report.notes.push(format!(
                        "global-optimality conditions at lambda0 = {lambda0}: certified = {}",
                        check.certified
                    ));
                    report.conditions = check.conditions;
                }
                Err(bregman_l0::Error::NotApplicable(why))
                | Err(bregman_l0::Error::InvalidParameter(why)) => {
                    report
                        .notes
                        .push(format!("global-optimality conditions unavailable: {why}"));
                }
                Err(e) => return Err(e.into()),
            }
        }
        report.rows.push(ReportRow {
            trial: 0,
            seed: loaded.seed,
            lambda0,
            certified: certified.interval.contains(lambda0),
            interval: Some(certified.interval),
            bf_support: None,
            bf_objective: None,
            oracle_match: None,
            solver_objective: None,
            solver_critical: None,
        });
    }
    report.timings.push(("certify".into(), started.elapsed().as_secs_f64()));
    write_report(&inv.out, &report)?;
    let not_applicable = !certified.interval.is_nonempty();
    Ok(CmdOutput { report, not_applicable })
}

/// `solve`: run the forward–backward solver at each requested λ₀.
pub fn cmd_solve(cfg: &Config, inv: &Invocation) -> Result<CmdOutput> {
    let started = Instant::now();
    let loaded = load(cfg, inv)?;
    let Some(lambdas) = cfg.verify.as_ref().and_then(|v| v.lambda0_list.clone()) else {
        return Err(Error::Config("solve needs [verify] lambda0_list".into()));
    };
    let opts = SolveOptions { tol: cfg.solver.tol, max_iter: cfg.solver.max_iter };
    let p = build_problem(&loaded, cfg, lambdas[0])?;
    let mut report = RunReport::default();
    for &lambda0 in &lambdas {
        let p_l = p.with_lambda0(lambda0)?;
        let x0 = vec![0.0; p_l.n()];
        let run = prox_gradient(&p_l, &x0, &opts)?;
        let crit = p_l.is_critical(&run.x, cfg.solver.tol)?;
        report.rows.push(ReportRow {
            trial: 0,
            seed: loaded.seed,
            lambda0,
            certified: false,
            interval: None,
            bf_support: None,
            bf_objective: None,
            oracle_match: None,
            solver_objective: Some(run.objective),
            solver_critical: Some(run.converged && crit.is_critical),
        });
        report.notes.push(format!(
            "lambda0 = {lambda0}: objective {}, {} iterations, converged = {}, critical = {}",
            run.objective, run.iterations, run.converged, crit.is_critical
        ));
    }
    report.timings.push(("solve".into(), started.elapsed().as_secs_f64()));
    write_report(&inv.out, &report)?;
    Ok(CmdOutput { report, not_applicable: false })
}

/// Result of brute-force-checking one λ₀ against the certificate's promise.
struct BfVerdict {
    support: Support,
    objective: f64,
    oracle_match: bool,
}

fn bf_check(p_l: &Problem, truth: &Truth, k_max: usize) -> Result<BfVerdict> {
    let bf = brute_force_l0(p_l, k_max)?;
    let oracle = oracle_solve(p_l, &truth.sigma_star)?;
    let unique = bf.ties.len() == 1 && bf.best_support == truth.sigma_star;
    let max_dev = bf
        .x_best
        .iter()
        .zip(oracle.x.iter())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(BfVerdict {
        support: bf.best_support,
        objective: bf.j0_value,
        oracle_match: unique && max_dev <= ORACLE_MATCH_TOL,
    })
}

/// Write a reproducer for a theory violation and return the error.
fn theory_violation(
    out: &Path,
    loaded: &Loaded,
    trial: usize,
    lambda0: f64,
    interval: &LambdaInterval,
    verdict: &BfVerdict,
) -> Error {
    let dir = out.join(format!("violation-trial{trial}"));
    let dump = (|| -> Result<()> {
        ensure_out_dir(&dir)?;
        io::write_matrix(&dir.join("matrix.csv"), &loaded.a)?;
        io::write_vector(&dir.join("y.csv"), &loaded.y)?;
        if !loaded.background.is_empty() {
            io::write_vector(&dir.join("b.csv"), &loaded.background)?;
        }
        if let Some(truth) = &loaded.truth {
            io::write_vector(&dir.join("x_star.csv"), &truth.x_star)?;
        }
        let note = format!(
            "seed = {}\nlambda0 = {}\ninterval = [{}, {}]\nbf_support = {}\nbf_objective = {}\n",
            loaded.seed,
            lambda0,
            interval.lower,
            interval.upper,
            verdict
                .support
                .indices()
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            verdict.objective,
        );
        let p = dir.join("violation.txt");
        std::fs::write(&p, note).map_err(|source| Error::Io { path: p, source })
    })();
    if let Err(e) = dump {
        return e;
    }
    Error::TheoryViolated(format!(
        "lambda0 = {lambda0} lies in the certified interval [{}, {}] but brute force \
         found a different optimum; reproducer written to {}",
        interval.lower,
        interval.upper,
        dir.display()
    ))
}

/// `verify`: certify, then cross-check each λ₀ against brute force.
pub fn cmd_verify(cfg: &Config, inv: &Invocation) -> Result<CmdOutput> {
    let started = Instant::now();
    let loaded = load(cfg, inv)?;
    let Some(vsec) = &cfg.verify else {
        return Err(Error::Config("verify needs a [verify] section with k_max".into()));
    };
    let Some(k_max) = vsec.k_max else {
        return Err(Error::Config("verify needs [verify] k_max".into()));
    };
    let explicit = vsec.lambda0_list.as_deref();
    let anchor = anchor_lambda(&loaded, cfg, explicit)?;
    let p = build_problem(&loaded, cfg, anchor)?;
    let certified = certify_setting(&p, &loaded, cfg)?;
    let truth = loaded.truth.as_ref().expect("certify_setting required a truth");
    let mut report = RunReport::default();
    report.notes.extend(certified.notes.iter().cloned());
    let lambdas = lambda_values(explicit, &certified.interval);
    if lambdas.is_empty() {
        report.notes.push("certificate not applicable (empty interval); verification skipped".into());
        report.timings.push(("verify".into(), started.elapsed().as_secs_f64()));
        write_report(&inv.out, &report)?;
        return Ok(CmdOutput { report, not_applicable: true });
    }
    for &lambda0 in &lambdas {
        let p_l = p.with_lambda0(lambda0)?;
        let verdict = bf_check(&p_l, truth, k_max)?;
        let is_certified = certified.interval.contains(lambda0);
        report.rows.push(ReportRow {
            trial: 0,
            seed: loaded.seed,
            lambda0,
            certified: is_certified,
            interval: Some(certified.interval),
            bf_support: Some(verdict.support.clone()),
            bf_objective: Some(verdict.objective),
            oracle_match: Some(verdict.oracle_match),
            solver_objective: None,
            solver_critical: None,
        });
        if is_certified && !verdict.oracle_match {
            write_report(&inv.out, &report)?;
            return Err(theory_violation(
                &inv.out,
                &loaded,
                0,
                lambda0,
                &certified.interval,
                &verdict,
            ));
        }
    }
    report.timings.push(("verify".into(), started.elapsed().as_secs_f64()));
    write_report(&inv.out, &report)?;
    Ok(CmdOutput { report, not_applicable: false })
}

/// One sweep cell: a generated instance at a grid point, fully processed.
struct CellSpec {
    cell: usize,
    seed: u64,
    sigma: Option<f64>,
    amp_scale: f64,
}

fn sweep_cell(
    cfg: &Config,
    cell: &CellSpec,
    k_max: Option<usize>,
    lambdas_explicit: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<(Vec<ReportRow>, bool, Vec<String>)> {
    let section = cfg.instance.as_ref().expect("sweep validated [instance]");
    let spec = section.to_spec(cell.seed, cell.amp_scale, cell.sigma);
    let loaded: Loaded = gen_instance(&spec)?.into();
    let anchor = anchor_lambda(&loaded, cfg, lambdas_explicit)?;
    let p = build_problem(&loaded, cfg, anchor)?;
    let certified = certify_setting(&p, &loaded, cfg)?;
    let truth = loaded.truth.as_ref().expect("generated instances carry a truth");
    let lambdas = lambda_values(lambdas_explicit, &certified.interval);
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    if lambdas.is_empty() {
        return Ok((rows, true, notes));
    }
    for &lambda0 in &lambdas {
        let p_l = p.with_lambda0(lambda0)?;
        let x0 = vec![0.0; p_l.n()];
        let run = prox_gradient(&p_l, &x0, opts)?;
        let crit = p_l.is_critical(&run.x, opts.tol)?;
        let verdict = match k_max {
            Some(k_max) => Some(bf_check(&p_l, truth, k_max)?),
            None => None,
        };
        let is_certified = certified.interval.contains(lambda0);
        if let Some(v) = &verdict {
            if is_certified && !v.oracle_match {
                notes.push(format!(
                    "cell {} seed {} lambda0 {}: certified but brute force disagrees",
                    cell.cell, cell.seed, lambda0
                ));
            }
        }
        rows.push(ReportRow {
            trial: cell.cell,
            seed: cell.seed,
            lambda0,
            certified: is_certified,
            interval: Some(certified.interval),
            bf_support: verdict.as_ref().map(|v| v.support.clone()),
            bf_objective: verdict.as_ref().map(|v| v.objective),
            oracle_match: verdict.as_ref().map(|v| v.oracle_match),
            solver_objective: Some(run.objective),
            solver_critical: Some(run.converged && crit.is_critical),
        });
    }
    Ok((rows, false, notes))
}

/// `sweep`: the full pipeline over a seeded grid of instances, in parallel,
/// with deterministic per-cell streams and ordered output.
pub fn cmd_sweep(cfg: &Config, inv: &Invocation) -> Result<CmdOutput> {
    let started = Instant::now();
    let Some(sweep) = &cfg.sweep else {
        return Err(Error::Config("sweep needs a [sweep] section".into()));
    };
    let Some(section) = &cfg.instance else {
        return Err(Error::Config("sweep generates instances; provide [instance]".into()));
    };
    if cfg.certify.is_none() {
        return Err(Error::Config("sweep needs a [certify] section with K".into()));
    }
    use crate::instance::NoiseSpec;
    let sigma_grid: Vec<Option<f64>> = match (&sweep.sigma_list, section.noise) {
        (Some(list), NoiseSpec::Gaussian { .. }) => list.iter().map(|&s| Some(s)).collect(),
        (Some(_), NoiseSpec::Poisson) => {
            return Err(Error::Config(
                "sigma_list applies to gaussian noise; poisson noise has no sigma".into(),
            ))
        }
        (None, _) => vec![None],
    };
    let amp_grid: Vec<f64> = sweep.amp_scale_list.clone().unwrap_or_else(|| vec![1.0]);
    let lambdas_explicit = sweep
        .lambda0_list
        .as_deref()
        .or_else(|| cfg.verify.as_ref().and_then(|v| v.lambda0_list.as_deref()));
    let k_max = cfg.verify.as_ref().and_then(|v| v.k_max);
    let master = inv.seed.or(section.seed).unwrap_or(0);
    let opts = SolveOptions { tol: cfg.solver.tol, max_iter: cfg.solver.max_iter };

    // Cells in row order (trial-major, then σ, then amplitude); the cell
    // index doubles as the RNG stream index, so scheduling cannot matter.
    let mut cells = Vec::new();
    for _trial in 0..sweep.trials {
        for sigma in &sigma_grid {
            for amp in &amp_grid {
                let cell = cells.len();
                cells.push(CellSpec {
                    cell,
                    seed: derive_stream_seed(master, cell as u64),
                    sigma: *sigma,
                    amp_scale: *amp,
                });
            }
        }
    }

    let outcomes: Vec<Result<(Vec<ReportRow>, bool, Vec<String>)>> = cells
        .par_iter()
        .map(|cell| sweep_cell(cfg, cell, k_max, lambdas_explicit, &opts))
        .collect();

    let mut report = RunReport::default();
    let mut skipped = 0usize;
    let mut violation: Option<(usize, f64)> = None;
    for outcome in outcomes {
        let (rows, was_skipped, notes) = outcome?;
        if was_skipped {
            skipped += 1;
        }
        for note in &notes {
            report.notes.push(note.clone());
        }
        if violation.is_none() {
            if let Some(row) = rows.iter().find(|r| {
                r.certified && r.oracle_match == Some(false)
            }) {
                violation = Some((row.trial, row.lambda0));
            }
        }
        report.rows.extend(rows);
    }
    report.notes.push(format!(
        "{} cells evaluated, {} skipped (certificate not applicable)",
        cells.len() - skipped,
        skipped
    ));

    // Grid sidecar: maps the report's trial column back to grid coordinates.
    ensure_out_dir(&inv.out)?;
    let mut grid = String::from("cell,seed,repetition,sigma,amp_scale\n");
    let cells_per_trial = sigma_grid.len() * amp_grid.len();
    for c in &cells {
        use std::fmt::Write as _;
        let _ = writeln!(
            grid,
            "{},{},{},{},{}",
            c.cell,
            c.seed,
            c.cell / cells_per_trial,
            c.sigma.map(|s| s.to_string()).unwrap_or_default(),
            c.amp_scale
        );
    }
    let grid_path = inv.out.join("sweep_grid.csv");
    std::fs::write(&grid_path, grid)
        .map_err(|source| Error::Io { path: grid_path, source })?;

    report.timings.push(("sweep".into(), started.elapsed().as_secs_f64()));
    write_report(&inv.out, &report)?;

    if let Some((cell, lambda0)) = violation {
        // Rebuild the offending instance for the reproducer dump.
        let bad = &cells[cell];
        let spec = section.to_spec(bad.seed, bad.amp_scale, bad.sigma);
        let loaded: Loaded = gen_instance(&spec)?.into();
        let anchor = anchor_lambda(&loaded, cfg, lambdas_explicit)?;
        let p = build_problem(&loaded, cfg, anchor)?;
        let certified = certify_setting(&p, &loaded, cfg)?;
        let truth = loaded.truth.as_ref().expect("generated instances carry a truth");
        let p_l = p.with_lambda0(lambda0)?;
        let verdict = bf_check(&p_l, truth, k_max.expect("violation implies bf ran"))?;
        return Err(theory_violation(&inv.out, &loaded, cell, lambda0, &certified.interval, &verdict));
    }
    let not_applicable = skipped == cells.len();
    Ok(CmdOutput { report, not_applicable })
}
