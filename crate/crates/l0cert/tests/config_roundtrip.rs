//! Configuration parsing: every documented section and key, strictness, and
//! path resolution.

use std::path::PathBuf;

use l0cert::config::{Config, PsiFamily};
use l0cert::instance::{FidelityKind, NoiseSpec};

const FULL: &str = r#"
# A file-based least-squares run.
[problem]
fidelity = ls
matrix = data/matrix.csv
y = data/y.csv

[truth]
x_star = data/x_star.csv

[relaxation]
psi = l2
safety = 1.25

[certify]
K = 4

[solver]
tol = 1e-9
max_iter = 20000

[verify]
k_max = 4
lambda0_list = 0.1, 0.2, 0.5
"#;

#[test]
fn full_config_parses_with_every_documented_key() {
    let cfg = Config::parse(FULL, PathBuf::from("/base")).unwrap();
    let p = cfg.problem.as_ref().unwrap();
    assert_eq!(p.fidelity, FidelityKind::LeastSquares);
    assert_eq!(cfg.resolve(&p.matrix), PathBuf::from("/base/data/matrix.csv"));
    assert_eq!(cfg.truth.as_deref(), Some(std::path::Path::new("data/x_star.csv")));
    assert_eq!(cfg.relaxation.psi, Some(PsiFamily::L2));
    assert_eq!(cfg.relaxation.safety, 1.25);
    assert_eq!(cfg.certify.as_ref().unwrap().k, 4);
    assert_eq!(cfg.solver.tol, 1e-9);
    assert_eq!(cfg.solver.max_iter, 20000);
    let v = cfg.verify.as_ref().unwrap();
    assert_eq!(v.k_max, Some(4));
    assert_eq!(v.lambda0_list.as_deref(), Some(&[0.1, 0.2, 0.5][..]));
}

#[test]
fn instance_and_sweep_sections_parse() {
    let text = r#"
[instance]
fidelity = kl
n = 6
m = 6
k_star = 1
amp_min = 50
amp_max = 100
noise = poisson
background = 1.0
seed = 42

[relaxation]
safety = 1.1

[certify]
K = 2
Q = 250

[sweep]
trials = 10
amp_scale_list = 0.5, 1.0, 2.0
"#;
    let cfg = Config::parse(text, PathBuf::from(".")).unwrap();
    let s = cfg.instance.as_ref().unwrap();
    assert_eq!(s.fidelity, FidelityKind::Kl);
    assert_eq!((s.n, s.m, s.k_star), (6, 6, 1));
    assert_eq!(s.noise, NoiseSpec::Poisson);
    assert_eq!(s.seed, Some(42));
    assert_eq!(cfg.certify.as_ref().unwrap().q, Some(250.0));
    let sw = cfg.sweep.as_ref().unwrap();
    assert_eq!(sw.trials, 10);
    assert_eq!(sw.amp_scale_list.as_deref(), Some(&[0.5, 1.0, 2.0][..]));
}

#[test]
fn sigma_key_sets_gaussian_noise() {
    let text = "[instance]\nfidelity = ls\nn = 4\nm = 3\nk_star = 1\namp_min = 1\namp_max = 2\nsigma = 0.25\n";
    let cfg = Config::parse(text, PathBuf::from(".")).unwrap();
    assert_eq!(
        cfg.instance.as_ref().unwrap().noise,
        NoiseSpec::Gaussian { sigma: 0.25 }
    );
}

#[test]
fn unknown_section_is_rejected() {
    let err = Config::parse("[solvers]\ntol = 1\n", PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("unknown section"));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn key_outside_any_section_is_rejected() {
    let err = Config::parse("tol = 1\n", PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("before any [section]"));
}

#[test]
fn both_problem_sources_together_are_rejected() {
    let text = "[problem]\nfidelity = ls\nmatrix = a.csv\ny = y.csv\n[instance]\nfidelity = ls\nn = 2\nm = 2\nk_star = 1\namp_min = 1\namp_max = 1\n";
    let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("mutually exclusive"));
}

#[test]
fn kl_problem_without_background_is_rejected() {
    let text = "[problem]\nfidelity = kl\nmatrix = a.csv\ny = y.csv\n";
    let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("background"));
}

#[test]
fn gamma_override_on_kl_is_rejected() {
    let text = "[problem]\nfidelity = kl\nmatrix = a.csv\ny = y.csv\nb = b.csv\n[relaxation]\ngamma = 2.0\n";
    let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("quadratic family"));
}

#[test]
fn xi_override_on_ls_is_rejected() {
    let text = "[problem]\nfidelity = ls\nmatrix = a.csv\ny = y.csv\n[relaxation]\nxi = 0.5\n";
    let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("KL family"));
}

#[test]
fn subunit_safety_is_rejected() {
    let text = "[relaxation]\nsafety = 0.9\n";
    let err = Config::parse(text, PathBuf::from(".")).unwrap_err();
    assert!(err.to_string().contains("safety"));
}

#[test]
fn absolute_paths_resolve_unchanged() {
    let cfg = Config::parse("", PathBuf::from("/base")).unwrap();
    assert_eq!(
        cfg.resolve(std::path::Path::new("/abs/file.csv")),
        PathBuf::from("/abs/file.csv")
    );
}
