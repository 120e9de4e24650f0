use std::path::PathBuf;
use std::process::ExitCode;

use amg_eig::experiment::{run_experiment, ExperimentConfig, MeshSource, OracleCache};
use amg_eig::fem::{ProblemKind, ProblemSpec};
use clap::{ArgGroup, Parser};

/// Convergence study of the AMG eigensolver against a dense oracle.
#[derive(Debug, Parser)]
#[command(name = "amg-eig", version)]
#[command(group(ArgGroup::new("source").required(true).args(["structured", "mesh"])))]
struct Cli {
    /// laplace or coulomb
    #[arg(long, default_value = "laplace")]
    problem: ProblemKind,
    /// Structured mesh with N cells per side
    #[arg(long, value_name = "N")]
    structured: Option<usize>,
    /// Mesh file
    #[arg(long, value_name = "PATH")]
    mesh: Option<PathBuf>,
    /// Number of smallest eigenpairs
    #[arg(long, default_value_t = 13)]
    q: usize,
    /// Strength threshold
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    /// AMG iterations per correction step
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// CG pre- and post-smoothing steps
    #[arg(long, default_value_t = 2)]
    smooth: usize,
    /// Sweep counts, e.g. `1,2,4` or `1..6`
    #[arg(long = "P", value_name = "LIST", default_value = "1..6", value_parser = parse_p_list)]
    p_list: PList,
    /// Start level, 1-based (1 is the finest)
    #[arg(long)]
    n1: Option<usize>,
    /// Stop coarsening at this many unknowns
    #[arg(long, default_value_t = 500)]
    max_coarse: usize,
    /// Output CSV
    #[arg(long, default_value = "convergence.csv")]
    out: PathBuf,
    /// Write every level as Matrix Market files into DIR
    #[arg(long, value_name = "DIR")]
    dump_hierarchy: Option<PathBuf>,
    /// Add the unclamped error column
    #[arg(long)]
    raw: bool,
}

#[derive(Debug, Clone)]
struct PList(Vec<usize>);

fn parse_p_list(s: &str) -> Result<PList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a
            .trim()
            .parse()
            .map_err(|e| format!("bad range start: {e}"))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|e| format!("bad range end: {e}"))?;
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(PList((a..=b).collect()));
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|e| format!("bad P value `{x}`: {e}"))
        })
        .collect::<Result<_, _>>()
        .map(PList)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mesh = match (cli.structured, cli.mesh) {
        (Some(n), _) => MeshSource::Structured(n),
        (None, Some(p)) => MeshSource::File(p),
        (None, None) => unreachable!("clap enforces a mesh source"),
    };
    let cfg = ExperimentConfig {
        problem: ProblemSpec {
            kind: cli.problem,
            ..ProblemSpec::default()
        },
        mesh,
        q: cli.q,
        theta: cli.theta,
        m: cli.m,
        smooth: cli.smooth,
        p_list: cli.p_list.0,
        n1: cli.n1,
        max_coarse: cli.max_coarse,
        out: cli.out,
        dump_hierarchy: cli.dump_hierarchy,
        raw: cli.raw,
    };
    match run_experiment(&cfg, &mut OracleCache::new()) {
        Ok(report) => {
            if report.reoriented > 0 {
                eprintln!(
                    "warning: reoriented {} clockwise triangles",
                    report.reoriented
                );
            }
            let dims: Vec<String> = report.level_dims.iter().map(|d| d.to_string()).collect();
            println!(
                "N_Dof=[{}] and n_1={}; wrote {}",
                dims.join(", "),
                report.start_level + 1,
                cfg.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
