//! Sectioned key=value configuration files.
//!
//! A run is described by a UTF-8 text file of `[section]` headers and
//! `key = value` lines.  Full-line comments start with `#` or `;`.  Unknown
//! sections, unknown keys, and duplicate keys are hard errors: a typo that
//! silently fell back to a default would invalidate an experiment without
//! anyone noticing.
//!
//! # Sections and keys
//!
//! | Section | Keys | Meaning |
//! |---------|------|---------|
//! | `[problem]` | `fidelity` (`ls`\|`kl`), `matrix`, `y`, `b` | a concrete problem from files (`b`: KL background vector) |
//! | `[instance]` | `fidelity`, `n`, `m`, `k_star`, `amp_min`, `amp_max`, `noise` (`gaussian`\|`poisson`), `sigma`, `background`, `col_norm`, `seed` | a generated problem (see [`crate::instance`]) |
//! | `[truth]` | `x_star` | path to the true signal; enables oracle checks for file problems |
//! | `[relaxation]` | `psi` (`l2`\|`kl`), `gamma`, `xi`, `safety` | generator family and calibration |
//! | `[certify]` | `K`, `Q` | sparse-difference budget and (KL) amplitude box bound |
//! | `[solver]` | `tol`, `max_iter` | forward–backward stopping parameters |
//! | `[verify]` | `k_max`, `lambda0_list` | brute-force budget and the λ₀ values to test |
//! | `[sweep]` | `trials`, `sigma_list`, `amp_scale_list`, `lambda0_list` | grid dimensions for `sweep` |
//!
//! `[problem]` and `[instance]` are mutually exclusive; commands that need a
//! problem require exactly one of them.  Relative paths are resolved against
//! the directory containing the config file.
//!
//! Generator parameters are calibrated from the data by default.  Explicit
//! overrides are validated, not trusted: `gamma` (quadratic family) must not
//! fall below the curvature-domination floor, and `xi` (KL family) must not
//! exceed the smallest background value — both requirements come from the
//! majorization argument that makes the relaxation exact, so violating them
//! is a configuration error, not a preference.
//!
//! # What can go wrong
//!
//! - Lists (`lambda0_list`, `sigma_list`, …) are comma-separated; an empty
//!   list is an error — every list key exists to enumerate work.
//! - `psi` must match the fidelity (`ls`↔`l2`, `kl`↔`kl`); the pairing is
//!   what the exactness theory covers, so a mismatch is rejected here with a
//!   clearer message than the mathematical layer would give.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::instance::{FidelityKind, InstanceSpec, MatrixEnsemble, NoiseSpec};
use crate::{Error, Result};

/// Generator family named in `[relaxation] psi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiFamily {
    /// Quadratic generator (pairs with the least-squares fidelity).
    L2,
    /// Smoothed-KL generator (pairs with the generalized-KL fidelity).
    Kl,
}

impl PsiFamily {
    /// The family the exactness theory pairs with a fidelity.
    pub fn for_fidelity(f: FidelityKind) -> PsiFamily {
        match f {
            FidelityKind::LeastSquares => PsiFamily::L2,
            FidelityKind::Kl => PsiFamily::Kl,
        }
    }
}

/// `[problem]`: a concrete problem loaded from files.
#[derive(Clone, Debug)]
pub struct ProblemSection {
    pub fidelity: FidelityKind,
    pub matrix: PathBuf,
    pub y: PathBuf,
    pub b: Option<PathBuf>,
}

/// `[instance]`: a generated problem.  Mirrors [`InstanceSpec`] minus the
/// operator source (generated instances always use the Gaussian ensemble).
#[derive(Clone, Debug)]
pub struct InstanceSection {
    pub fidelity: FidelityKind,
    pub n: usize,
    pub m: usize,
    pub k_star: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub noise: NoiseSpec,
    pub background: f64,
    pub col_norm: Option<f64>,
    pub seed: Option<u64>,
}

impl InstanceSection {
    /// Concretize into a generator spec with the given seed and amplitude
    /// scaling (sweeps scale both ends of the range).
    pub fn to_spec(&self, seed: u64, amp_scale: f64, sigma_override: Option<f64>) -> InstanceSpec {
        let noise = match (self.noise, sigma_override) {
            (NoiseSpec::Gaussian { .. }, Some(s)) => NoiseSpec::Gaussian { sigma: s },
            (other, _) => other,
        };
        InstanceSpec {
            n: self.n,
            m: self.m,
            k_star: self.k_star,
            fidelity: self.fidelity,
            amplitude: (self.amp_min * amp_scale, self.amp_max * amp_scale),
            noise,
            background: self.background,
            ensemble: MatrixEnsemble::GaussianIid,
            col_norm: self.col_norm,
            seed,
        }
    }
}

/// `[relaxation]`.
#[derive(Clone, Debug)]
pub struct RelaxationSection {
    pub psi: Option<PsiFamily>,
    pub gamma: Option<f64>,
    pub xi: Option<f64>,
    pub safety: f64,
}

impl Default for RelaxationSection {
    fn default() -> Self {
        RelaxationSection {
            psi: None,
            gamma: None,
            xi: None,
            safety: bregman_l0::DEFAULT_CC_SAFETY,
        }
    }
}

/// `[certify]`.
#[derive(Clone, Debug)]
pub struct CertifySection {
    /// Sparse-difference budget `K`.
    pub k: usize,
    /// Amplitude box bound `Q` for the constructive KL constant.  Defaults
    /// to twice the largest truth magnitude when a truth is available.
    pub q: Option<f64>,
}

/// `[solver]`.
#[derive(Clone, Copy, Debug)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = bregman_l0::prelude::SolveOptions::default();
        SolverSection { tol: d.tol, max_iter: d.max_iter }
    }
}

/// `[verify]`.
#[derive(Clone, Debug)]
pub struct VerifySection {
    /// Brute-force support-size budget; required by `verify`, optional for
    /// `sweep` (which skips brute force without it).
    pub k_max: Option<usize>,
    pub lambda0_list: Option<Vec<f64>>,
}

/// `[sweep]`.
#[derive(Clone, Debug)]
pub struct SweepSection {
    pub trials: usize,
    pub sigma_list: Option<Vec<f64>>,
    pub amp_scale_list: Option<Vec<f64>>,
    pub lambda0_list: Option<Vec<f64>>,
}

/// A fully parsed configuration file.
#[derive(Clone, Debug, Default)]
pub struct Config {
    /// Directory of the config file; relative paths resolve against it.
    pub dir: PathBuf,
    pub problem: Option<ProblemSection>,
    pub instance: Option<InstanceSection>,
    /// Path to the true signal (`[truth] x_star`).
    pub truth: Option<PathBuf>,
    pub relaxation: RelaxationSection,
    pub certify: Option<CertifySection>,
    pub solver: SolverSection,
    pub verify: Option<VerifySection>,
    pub sweep: Option<SweepSection>,
}

impl Config {
    /// Parse a config file from disk.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Config::parse(&text, dir)
    }

    /// Resolve a configured path against the config directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    /// Parse config text.  `dir` is the directory relative paths resolve
    /// against.
    pub fn parse(text: &str, dir: PathBuf) -> Result<Config> {
        let mut cfg = Config { dir, ..Config::default() };
        let mut section = String::new();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        // Raw key-value store per section; typed extraction happens below so
        // that "unknown key" checks see every key exactly once.
        let mut pairs: Vec<(String, String, String, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {line_no}: unterminated section header `{line}`")))?;
                section = name.trim().to_string();
                const SECTIONS: [&str; 7] =
                    ["problem", "instance", "truth", "relaxation", "certify", "solver", "verify"];
                if !SECTIONS.contains(&section.as_str()) && section != "sweep" {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown section [{section}]"
                    )));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`"))
            })?;
            if section.is_empty() {
                return Err(Error::Config(format!(
                    "line {line_no}: key before any [section] header"
                )));
            }
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !seen.insert((section.clone(), key.clone())) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key `{key}` in [{section}]"
                )));
            }
            pairs.push((section.clone(), key, value, line_no));
        }

        for (section, key, value, line_no) in pairs {
            cfg.apply(&section, &key, &value, line_no)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str, line_no: usize) -> Result<()> {
        let unknown = || -> Result<()> {
            Err(Error::Config(format!("line {line_no}: unknown key `{key}` in [{section}]")))
        };
        match section {
            "problem" => {
                let p = self.problem.get_or_insert_with(|| ProblemSection {
                    fidelity: FidelityKind::LeastSquares,
                    matrix: PathBuf::new(),
                    y: PathBuf::new(),
                    b: None,
                });
                match key {
                    "fidelity" => p.fidelity = parse_fidelity(value, line_no)?,
                    "matrix" => p.matrix = PathBuf::from(value),
                    "y" => p.y = PathBuf::from(value),
                    "b" => p.b = Some(PathBuf::from(value)),
                    _ => return unknown(),
                }
            }
            "instance" => {
                let s = self.instance.get_or_insert_with(|| InstanceSection {
                    fidelity: FidelityKind::LeastSquares,
                    n: 0,
                    m: 0,
                    k_star: 0,
                    amp_min: 0.0,
                    amp_max: 0.0,
                    noise: NoiseSpec::Gaussian { sigma: 0.0 },
                    background: 0.0,
                    col_norm: None,
                    seed: None,
                });
                match key {
                    "fidelity" => s.fidelity = parse_fidelity(value, line_no)?,
                    "n" => s.n = parse_num(value, line_no)?,
                    "m" => s.m = parse_num(value, line_no)?,
                    "k_star" => s.k_star = parse_num(value, line_no)?,
                    "amp_min" => s.amp_min = parse_float(value, line_no)?,
                    "amp_max" => s.amp_max = parse_float(value, line_no)?,
                    "noise" => {
                        s.noise = match value {
                            "gaussian" => NoiseSpec::Gaussian {
                                sigma: match s.noise {
                                    NoiseSpec::Gaussian { sigma } => sigma,
                                    _ => 0.0,
                                },
                            },
                            "poisson" => NoiseSpec::Poisson,
                            other => {
                                return Err(Error::Config(format!(
                                    "line {line_no}: noise must be `gaussian` or `poisson`, got `{other}`"
                                )))
                            }
                        }
                    }
                    "sigma" => {
                        let sigma = parse_float(value, line_no)?;
                        s.noise = NoiseSpec::Gaussian { sigma };
                    }
                    "background" => s.background = parse_float(value, line_no)?,
                    "col_norm" => s.col_norm = Some(parse_float(value, line_no)?),
                    "seed" => s.seed = Some(parse_num::<u64>(value, line_no)?),
                    _ => return unknown(),
                }
            }
            "truth" => match key {
                "x_star" => self.truth = Some(PathBuf::from(value)),
                _ => return unknown(),
            },
            "relaxation" => match key {
                "psi" => {
                    self.relaxation.psi = Some(match value {
                        "l2" => PsiFamily::L2,
                        "kl" => PsiFamily::Kl,
                        other => {
                            return Err(Error::Config(format!(
                                "line {line_no}: psi must be `l2` or `kl`, got `{other}`"
                            )))
                        }
                    })
                }
                "gamma" => self.relaxation.gamma = Some(parse_float(value, line_no)?),
                "xi" => self.relaxation.xi = Some(parse_float(value, line_no)?),
                "safety" => self.relaxation.safety = parse_float(value, line_no)?,
                _ => return unknown(),
            },
            "certify" => {
                let c = self.certify.get_or_insert(CertifySection { k: 0, q: None });
                match key {
                    "K" => c.k = parse_num(value, line_no)?,
                    "Q" => c.q = Some(parse_float(value, line_no)?),
                    _ => return unknown(),
                }
            }
            "solver" => match key {
                "tol" => self.solver.tol = parse_float(value, line_no)?,
                "max_iter" => self.solver.max_iter = parse_num(value, line_no)?,
                _ => return unknown(),
            },
            "verify" => {
                let v =
                    self.verify.get_or_insert(VerifySection { k_max: None, lambda0_list: None });
                match key {
                    "k_max" => v.k_max = Some(parse_num(value, line_no)?),
                    "lambda0_list" => v.lambda0_list = Some(parse_list(value, line_no)?),
                    _ => return unknown(),
                }
            }
            "sweep" => {
                let s = self.sweep.get_or_insert(SweepSection {
                    trials: 0,
                    sigma_list: None,
                    amp_scale_list: None,
                    lambda0_list: None,
                });
                match key {
                    "trials" => s.trials = parse_num(value, line_no)?,
                    "sigma_list" => s.sigma_list = Some(parse_list(value, line_no)?),
                    "amp_scale_list" => s.amp_scale_list = Some(parse_list(value, line_no)?),
                    "lambda0_list" => s.lambda0_list = Some(parse_list(value, line_no)?),
                    _ => return unknown(),
                }
            }
            _ => unreachable!("section names validated at header parse"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.problem.is_some() && self.instance.is_some() {
            return Err(Error::Config(
                "[problem] and [instance] are mutually exclusive; keep one".into(),
            ));
        }
        if let Some(p) = &self.problem {
            if p.matrix.as_os_str().is_empty() || p.y.as_os_str().is_empty() {
                return Err(Error::Config("[problem] needs both `matrix` and `y`".into()));
            }
            if p.fidelity == FidelityKind::Kl && p.b.is_none() {
                return Err(Error::Config("[problem] fidelity = kl needs a background `b`".into()));
            }
            if p.fidelity == FidelityKind::LeastSquares && p.b.is_some() {
                return Err(Error::Config(
                    "[problem] fidelity = ls does not take a background `b`".into(),
                ));
            }
        }
        if let Some(s) = &self.instance {
            if s.n == 0 || s.m == 0 {
                return Err(Error::Config("[instance] needs positive `n` and `m`".into()));
            }
            if !(s.amp_min > 0.0 && s.amp_min <= s.amp_max) {
                return Err(Error::Config(
                    "[instance] needs 0 < amp_min ≤ amp_max".into(),
                ));
            }
            if let Some(t) = s.col_norm {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::Config(format!(
                        "[instance] col_norm must be positive and finite, got {t}"
                    )));
                }
            }
        }
        let fid = self.fidelity_kind();
        if let (Some(psi), Some(f)) = (self.relaxation.psi, fid) {
            if psi != PsiFamily::for_fidelity(f) {
                return Err(Error::Config(format!(
                    "psi = {} does not pair with fidelity = {}: the exactness theory pairs ls↔l2 and kl↔kl",
                    match psi {
                        PsiFamily::L2 => "l2",
                        PsiFamily::Kl => "kl",
                    },
                    match f {
                        FidelityKind::LeastSquares => "ls",
                        FidelityKind::Kl => "kl",
                    }
                )));
            }
        }
        if let Some(g) = self.relaxation.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
            if matches!(self.relaxation.psi, Some(PsiFamily::Kl))
                || fid == Some(FidelityKind::Kl)
            {
                return Err(Error::Config(
                    "explicit gamma applies to the quadratic family only; KL curvatures are per-coordinate and data-calibrated (tune `safety` or `xi`)"
                        .into(),
                ));
            }
        }
        if let Some(xi) = self.relaxation.xi {
            if !(xi.is_finite() && xi > 0.0) {
                return Err(Error::Config(format!("xi must be positive, got {xi}")));
            }
            if matches!(self.relaxation.psi, Some(PsiFamily::L2))
                || fid == Some(FidelityKind::LeastSquares)
            {
                return Err(Error::Config(
                    "explicit xi applies to the KL family only".into(),
                ));
            }
        }
        if !(self.relaxation.safety.is_finite() && self.relaxation.safety >= 1.0) {
            return Err(Error::Config(format!(
                "safety must be ≥ 1, got {}",
                self.relaxation.safety
            )));
        }
        if let Some(c) = &self.certify {
            if c.k == 0 {
                return Err(Error::Config("[certify] K must be ≥ 1".into()));
            }
        }
        if let Some(v) = &self.verify {
            if v.k_max == Some(0) {
                return Err(Error::Config("[verify] k_max must be ≥ 1".into()));
            }
            if let Some(l) = &v.lambda0_list {
                if l.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                    return Err(Error::Config("lambda0_list entries must be positive".into()));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.trials == 0 {
                return Err(Error::Config("[sweep] trials must be ≥ 1".into()));
            }
        }
        Ok(())
    }

    /// The fidelity the config describes, from whichever problem source is
    /// present.
    pub fn fidelity_kind(&self) -> Option<FidelityKind> {
        self.problem
            .as_ref()
            .map(|p| p.fidelity)
            .or_else(|| self.instance.as_ref().map(|s| s.fidelity))
    }
}

fn parse_fidelity(value: &str, line_no: usize) -> Result<FidelityKind> {
    match value {
        "ls" => Ok(FidelityKind::LeastSquares),
        "kl" => Ok(FidelityKind::Kl),
        other => Err(Error::Config(format!(
            "line {line_no}: fidelity must be `ls` or `kl`, got `{other}`"
        ))),
    }
}

fn parse_float(value: &str, line_no: usize) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("line {line_no}: cannot parse `{value}` as a number")))
}

fn parse_num<T: std::str::FromStr>(value: &str, line_no: usize) -> Result<T> {
    value.parse::<T>().map_err(|_| {
        Error::Config(format!("line {line_no}: cannot parse `{value}` as an integer"))
    })
}

fn parse_list(value: &str, line_no: usize) -> Result<Vec<f64>> {
    let items: Result<Vec<f64>> =
        value.split(',').map(|tok| parse_float(tok.trim(), line_no)).collect();
    let items = items?;
    if items.is_empty() {
        return Err(Error::Config(format!("line {line_no}: empty list")));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_rejected() {
        let text = "[solver]\ntol = 1e-8\nstep = 0.5\n";
        let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
        assert!(err.to_string().contains("unknown key `step`"));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = "[solver]\ntol = 1e-8\ntol = 1e-6\n";
        let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
        assert!(err.to_string().contains("duplicate key"));
    }

    #[test]
    fn psi_fidelity_mismatch_is_rejected() {
        let text = "[problem]\nfidelity = ls\nmatrix = a.csv\ny = y.csv\n[relaxation]\npsi = kl\n";
        let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
        assert!(err.to_string().contains("does not pair"));
    }
}
