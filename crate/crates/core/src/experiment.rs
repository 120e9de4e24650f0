//! Convergence studies against a dense direct oracle.
//!
//! [`run_experiment`] assembles a model problem, builds the hierarchy, solves
//! it once densely and then runs the nested AMG eigensolver for each sweep
//! count `P`. Errors go to a CSV file with header `P,j,lambda,lambda_dir,abs_err`
//! and a metadata sidecar `<out>.meta`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::amg::{build_hierarchy, Hierarchy, SetupParams};
use crate::correction::{amg_eigensolve, CorrectionParams, Sweeps};
use crate::eig::{generalized_eig, refine_values, DenseSymPair, EigenpairSet};
use crate::error::{Error, Result};
use crate::fem::{discretize, load_mesh, structured_mesh, DiscreteProblem, ProblemSpec, TriMesh};
use crate::solve::SolveParams;
use crate::sparse::{write_matrix_market, CsrMatrix};

/// Largest pair the dense oracle accepts.
pub const ORACLE_DIM_LIMIT: usize = 6000;

/// Reported errors are clamped from below so log plots stay finite.
pub const ERROR_FLOOR: f64 = 1e-14;

pub const CSV_HEADER: &str = "P,j,lambda,lambda_dir,abs_err";

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Structured(usize),
    File(PathBuf),
}

impl std::fmt::Display for MeshSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Structured(n) => write!(f, "structured {n}"),
            Self::File(p) => write!(f, "file {}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub mesh: MeshSource,
    pub q: usize,
    pub theta: f64,
    /// AMG iterations per correction step.
    pub m: usize,
    /// CG steps before and after the coarse correction.
    pub smooth: usize,
    pub p_list: Vec<usize>,
    /// Start level, 1-based with 1 the finest.
    pub n1: Option<usize>,
    pub max_coarse: usize,
    pub out: PathBuf,
    pub dump_hierarchy: Option<PathBuf>,
    pub raw: bool,
}

impl ExperimentConfig {
    pub fn new(mesh: MeshSource, out: impl Into<PathBuf>) -> Self {
        Self {
            problem: ProblemSpec::laplace(),
            mesh,
            q: 13,
            theta: 0.25,
            m: 2,
            smooth: 2,
            p_list: (1..=6).collect(),
            n1: None,
            max_coarse: SetupParams::default().max_coarse_dim,
            out: out.into(),
            dump_hierarchy: None,
            raw: false,
        }
    }

    pub fn setup_params(&self) -> SetupParams {
        SetupParams {
            theta: self.theta,
            max_coarse_dim: self.max_coarse,
            ..SetupParams::default()
        }
    }

    pub fn correction_params(&self, p: usize) -> CorrectionParams {
        CorrectionParams {
            q: self.q,
            m: self.m,
            sweeps: Sweeps::Uniform(p),
            start_level: self.n1.map(|n| n - 1),
            solve: SolveParams {
                pre_smooth_steps: self.smooth,
                post_smooth_steps: self.smooth,
                ..SolveParams::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be at least 1".into()));
        }
        if self.p_list.is_empty() || self.p_list.contains(&0) {
            return Err(Error::InvalidParameter(
                "P values must be at least 1".into(),
            ));
        }
        if self.n1 == Some(0) {
            return Err(Error::InvalidParameter("n1 is 1-based".into()));
        }
        if let MeshSource::Structured(0) = self.mesh {
            return Err(Error::InvalidParameter(
                "structured mesh needs n >= 1".into(),
            ));
        }
        self.setup_params().validate()
    }
}

/// The `q` smallest pairs of `(A, M)` by the dense solver, with eigenvalues
/// recomputed as compensated Rayleigh quotients.
pub fn direct_oracle(a: &CsrMatrix, m: &CsrMatrix, q: usize) -> Result<EigenpairSet> {
    if a.nrows() > ORACLE_DIM_LIMIT {
        return Err(Error::TooLarge {
            dim: a.nrows(),
            limit: ORACLE_DIM_LIMIT,
        });
    }
    let mut set = generalized_eig(&DenseSymPair::from_sparse(a, m)?, q)?;
    refine_values(a, m, &mut set)?;
    Ok(set)
}

/// Oracle results keyed by mesh content, problem and `q`.
#[derive(Debug, Default)]
pub struct OracleCache {
    entries: HashMap<(u64, String, usize), EigenpairSet>,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get_or_compute(
        &mut self,
        mesh: &TriMesh,
        problem: &ProblemSpec,
        pair: &DiscreteProblem,
        q: usize,
    ) -> Result<&EigenpairSet> {
        let key = (mesh.content_hash(), format!("{problem:?}"), q);
        if !self.entries.contains_key(&key) {
            let set = direct_oracle(&pair.a, &pair.m, q)?;
            self.entries.insert(key.clone(), set);
        }
        Ok(&self.entries[&key])
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub p: usize,
    /// 1-based eigenvalue index.
    pub j: usize,
    pub lambda: f64,
    pub lambda_dir: f64,
}

impl ErrorRow {
    pub fn raw_error(&self) -> f64 {
        (self.lambda - self.lambda_dir).abs()
    }

    pub fn error(&self) -> f64 {
        self.raw_error().max(ERROR_FLOOR)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ErrorRow>,
    pub level_dims: Vec<usize>,
    /// 0-based start level actually used.
    pub start_level: usize,
    pub oracle: Vec<f64>,
    pub reoriented: usize,
    pub setup_seconds: f64,
    pub oracle_seconds: f64,
    pub solve_seconds: Vec<f64>,
}

impl ExperimentReport {
    /// Errors `e_j(P)` for 1-based `j`, in `P` order.
    pub fn errors_for(&self, j: usize) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.j == j)
            .map(|r| (r.p, r.raw_error()))
            .collect()
    }
}

pub fn build_mesh(source: &MeshSource) -> Result<(TriMesh, usize)> {
    match source {
        MeshSource::Structured(n) => Ok((structured_mesh(*n), 0)),
        MeshSource::File(p) => {
            let loaded = load_mesh(p)?;
            Ok((loaded.mesh, loaded.reoriented))
        }
    }
}

pub fn csv_text(rows: &[ErrorRow], raw: bool) -> String {
    let mut s = String::from(CSV_HEADER);
    if raw {
        s.push_str(",abs_err_raw");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{},{},{:e},{:e},{:e}",
            r.p,
            r.j,
            r.lambda,
            r.lambda_dir,
            r.error()
        );
        if raw {
            let _ = write!(s, ",{:e}", r.raw_error());
        }
        s.push('\n');
    }
    s
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn meta_text(cfg: &ExperimentConfig, report: &ExperimentReport) -> String {
    let dims: Vec<String> = report.level_dims.iter().map(|d| d.to_string()).collect();
    let mut s = format!(
        "N_Dof=[{}] and n_1={}\n",
        dims.join(", "),
        report.start_level + 1
    );
    let _ = writeln!(s, "problem={}", cfg.problem.kind);
    let _ = writeln!(s, "mesh={}", cfg.mesh);
    let _ = writeln!(
        s,
        "q={} theta={} m={} smooth={} max_coarse={}",
        cfg.q, cfg.theta, cfg.m, cfg.smooth, cfg.max_coarse
    );
    let _ = writeln!(s, "reoriented_triangles={}", report.reoriented);
    let _ = writeln!(s, "setup_seconds={:.3}", report.setup_seconds);
    let _ = writeln!(s, "oracle_seconds={:.3}", report.oracle_seconds);
    for (p, t) in cfg.p_list.iter().zip(&report.solve_seconds) {
        let _ = writeln!(s, "solve_seconds[P={p}]={t:.3}");
    }
    s
}

fn dump_hierarchy(h: &Hierarchy, dir: &Path, created: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, level) in h.levels().iter().enumerate() {
        for (name, mat) in [("A", &level.a), ("M", &level.m)] {
            let path = dir.join(format!("level{k}_{name}.mtx"));
            created.push(path.clone());
            write_matrix_market(mat, &path)?;
        }
    }
    for (k, p) in h.prolongations().iter().enumerate() {
        let path = dir.join(format!("prolongation{k}.mtx"));
        created.push(path.clone());
        write_matrix_market(p, &path)?;
    }
    Ok(())
}

/// Runs the study in memory without writing files.
pub fn compute_experiment(
    cfg: &ExperimentConfig,
    cache: &mut OracleCache,
) -> Result<(ExperimentReport, Hierarchy)> {
    cfg.validate()?;
    let (mesh, reoriented) = build_mesh(&cfg.mesh)?;
    let pair = discretize(&mesh, &cfg.problem)?;

    let t = Instant::now();
    let h = build_hierarchy(&pair.a, &pair.m, &cfg.setup_params())?;
    let setup_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let oracle = cache
        .get_or_compute(&mesh, &cfg.problem, &pair, cfg.q)?
        .values
        .clone();
    let oracle_seconds = t.elapsed().as_secs_f64();

    let mut rows = Vec::with_capacity(cfg.p_list.len() * cfg.q);
    let mut solve_seconds = Vec::with_capacity(cfg.p_list.len());
    let mut start_level = 0;
    for &p in &cfg.p_list {
        let t = Instant::now();
        let out = amg_eigensolve(&h, &cfg.correction_params(p))?;
        solve_seconds.push(t.elapsed().as_secs_f64());
        start_level = out.start_level;
        for (j, (&lambda, &lambda_dir)) in out.pairs.values.iter().zip(&oracle).enumerate() {
            rows.push(ErrorRow {
                p,
                j: j + 1,
                lambda,
                lambda_dir,
            });
        }
    }
    rows.sort_by_key(|r| (r.p, r.j));
    let report = ExperimentReport {
        rows,
        level_dims: h.dims(),
        start_level,
        oracle,
        reoriented,
        setup_seconds,
        oracle_seconds,
        solve_seconds,
    };
    Ok((report, h))
}

/// Runs the study and writes the CSV, the sidecar and the optional
/// hierarchy dump. Files written before a failure are removed.
pub fn run_experiment(cfg: &ExperimentConfig, cache: &mut OracleCache) -> Result<ExperimentReport> {
    let mut created = Vec::new();
    let result = write_outputs(cfg, cache, &mut created);
    if result.is_err() {
        for path in &created {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn write_outputs(
    cfg: &ExperimentConfig,
    cache: &mut OracleCache,
    created: &mut Vec<PathBuf>,
) -> Result<ExperimentReport> {
    let (report, h) = compute_experiment(cfg, cache)?;
    if let Some(dir) = &cfg.dump_hierarchy {
        dump_hierarchy(&h, dir, created)?;
    }
    created.push(cfg.out.clone());
    fs::write(&cfg.out, csv_text(&report.rows, cfg.raw))?;
    let meta = meta_path(&cfg.out);
    created.push(meta.clone());
    fs::write(&meta, meta_text(cfg, &report))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            q: 4,
            p_list: vec![1, 2],
            max_coarse: 10,
            ..ExperimentConfig::new(MeshSource::Structured(8), dir.join("out.csv"))
        }
    }

    #[test]
    fn oracle_matches_dense_solver() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 6.0)]).unwrap();
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let o = direct_oracle(&a, &m, 2).unwrap();
        let d = generalized_eig(&DenseSymPair::from_sparse(&a, &m).unwrap(), 2).unwrap();
        for (x, y) in o.values.iter().zip(&d.values) {
            assert!((x - y).abs() <= 1e-15 * y);
        }
        assert_eq!(o.vectors, d.vectors);
    }

    #[test]
    fn oracle_refuses_huge_pairs() {
        let n = ORACLE_DIM_LIMIT + 1;
        let id = CsrMatrix::identity(n);
        assert!(matches!(
            direct_oracle(&id, &id, 1),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn csv_is_consistent_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            raw: true,
            ..small_config(dir.path())
        };
        let mut cache = OracleCache::new();
        let report = run_experiment(&cfg, &mut cache).unwrap();
        let first = fs::read_to_string(&cfg.out).unwrap();
        run_experiment(&cfg, &mut cache).unwrap();
        assert_eq!(first, fs::read_to_string(&cfg.out).unwrap());
        assert_eq!(cache.len(), 1);

        let mut lines = first.lines();
        assert_eq!(
            lines.next().unwrap(),
            "P,j,lambda,lambda_dir,abs_err,abs_err_raw"
        );
        let mut count = 0;
        for line in lines {
            let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(f[5], (f[2] - f[3]).abs());
            assert_eq!(f[4], f[5].max(ERROR_FLOOR));
            count += 1;
        }
        assert_eq!(count, 8);
        assert_eq!(report.rows.len(), 8);

        let meta = fs::read_to_string(meta_path(&cfg.out)).unwrap();
        let dims: Vec<String> = report.level_dims.iter().map(|d| d.to_string()).collect();
        assert!(meta.starts_with(&format!("N_Dof=[{}] and n_1=", dims.join(", "))));
    }

    #[test]
    fn failures_leave_no_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            q: 100,
            ..small_config(dir.path())
        };
        assert!(run_experiment(&cfg, &mut OracleCache::new()).is_err());
        assert!(!cfg.out.exists());
        assert!(!meta_path(&cfg.out).exists());
    }

    #[test]
    fn hierarchy_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            dump_hierarchy: Some(dir.path().join("h")),
            ..small_config(dir.path())
        };
        let report = run_experiment(&cfg, &mut OracleCache::new()).unwrap();
        let a0 = crate::sparse::read_matrix_market(dir.path().join("h/level0_A.mtx")).unwrap();
        assert_eq!(a0.nrows(), report.level_dims[0]);
        assert!(dir.path().join("h/prolongation0.mtx").exists());
    }
}
