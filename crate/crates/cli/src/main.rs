//! `skew-siep`: command-line front end.
//!
//! Exit codes: 0 success, 1 rejected input (not NEB, invalid spectrum, bad
//! graph), 2 numerical failure, 3 unreadable or malformed files. Failures
//! print a JSON diagnostic on stderr. Vertex labels are 1-based.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tracing::info;
use tracing_subscriber::filter::LevelFilter;

use skew_siep::construct::{verify_construction, verify_matrix, Tolerances};
use skew_siep::eig::skew_eigenvalues;
use skew_siep::fuzz::{exhaustive, fuzz, FuzzConfig};
use skew_siep::graph::find_spanning_neb_tree;
use skew_siep::io::{
    certificate_json, diagnostic, graph_json, matrix_csv, matrix_json, parse_chords, parse_graph, parse_matrix,
    parse_spectrum, parse_tree, report_json, InputError,
};
use skew_siep::jacobian::{is_nonsingular, jacobian_f, SINGULAR_TOLERANCE};
use skew_siep::{construct, extend, is_neb, Error, HomotopyConfig, SkewMatrix, Tree};

#[derive(Parser)]
#[command(name = "skew-siep", version, about = "Skew-symmetric matrices on trees with prescribed spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct TolArgs {
    /// Eigenvalue tolerance, relative to max(1, |lambda_n|).
    #[arg(long, default_value_t = 1e-8)]
    eigen_tol: f64,
    /// Ratio identity tolerance.
    #[arg(long, default_value_t = 1e-7)]
    identity_tol: f64,
    /// Strict interlacing margin for the Duarte test, relative.
    #[arg(long, default_value_t = 1e-8)]
    duarte_tol: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Result<Tolerances, Failure> {
        for (name, x) in [
            ("--eigen-tol", self.eigen_tol),
            ("--identity-tol", self.identity_tol),
            ("--duarte-tol", self.duarte_tol),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Failure::Usage(format!("{name} must be positive")));
            }
        }
        Ok(Tolerances {
            eigen: self.eigen_tol,
            identity: self.identity_tol,
            duarte: self.duarte_tol,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test whether a tree is NEB at a vertex, or find a spanning NEB tree.
    NebCheck {
        #[arg(long)]
        tree: PathBuf,
        /// Vertex to test; all vertices when omitted.
        #[arg(long)]
        vertex: Option<usize>,
        /// Treat the input as a connected graph and search for a spanning
        /// tree that is NEB at some vertex.
        #[arg(long)]
        spanning: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a matrix on a tree with the given spectra.
    Construct {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Add chords to a constructed matrix while keeping both spectra.
    Extend {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        vertex: usize,
        /// JSON list of pairs; [i, j] sets entry a_ij to epsilon.
        #[arg(long)]
        chords: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 1e-12)]
        newton_tol: f64,
        #[arg(long, default_value_t = 50)]
        max_newton_iters: usize,
        #[arg(long, default_value_t = 8)]
        backtrack: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Eigenvalue tolerance for the post-extension check, relative.
        #[arg(long, default_value_t = 1e-8)]
        eigen_tol: f64,
    },
    /// Check a matrix against prescribed spectra.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        /// When given and equal to the matrix graph, also run the ratio
        /// identity and Duarte checks.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Print the Jacobian of the trace map at a tree matrix.
    Jacobian {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        vertex: usize,
        #[arg(long, default_value_t = SINGULAR_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded randomized checks of the whole pipeline.
    Fuzz {
        #[arg(long, default_value_t = 9)]
        n_max: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Classify every tree shape up to n_max instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    Usage(String),
    /// The command ran but its checks failed; carries the report.
    Checks(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Domain(e) => Failure::Core(e),
            InputError::Syntax(s) => Failure::Io(s),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_domain_rejection() => 1,
            Failure::Usage(_) => 1,
            Failure::Core(_) | Failure::Checks(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn diagnostic(&self) -> Value {
        match self {
            Failure::Core(e) => diagnostic(e),
            Failure::Io(m) => json!({ "error": "io", "message": m }),
            Failure::Usage(m) => json!({ "error": "usage", "message": m }),
            Failure::Checks(report) => json!({ "error": "checks_failed", "message": "verification failed", "detail": report }),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(out: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    write_out(out, &text)
}

fn vertex(label: usize, n: usize) -> CliResult<usize> {
    if label == 0 || label > n {
        return Err(Error::InvalidVertex { vertex: label, n }.into());
    }
    Ok(label - 1)
}

fn write_matrix(out: Option<&Path>, format: Format, a: &SkewMatrix, report: Value) -> CliResult<()> {
    match format {
        Format::Json => write_json(out, &matrix_json(a, Some(report))),
        Format::Csv => write_out(out, &matrix_csv(a)),
    }
}

fn load_tree_for(path: &Path, a: &SkewMatrix) -> CliResult<Tree> {
    let t = parse_tree(&read(path)?)?;
    if t.n() != a.n() {
        return Err(Error::SizeMismatch(format!("tree has {} vertices, matrix has order {}", t.n(), a.n())).into());
    }
    Ok(t)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::NebCheck {
            tree,
            vertex: v,
            spanning,
            out,
        } => {
            let text = read(&tree)?;
            if spanning {
                let g = parse_graph(&text)?;
                let found = find_spanning_neb_tree(&g)?;
                let value = match &found {
                    Some((t, w)) => json!({ "found": true, "vertex": w + 1, "tree": graph_json(t.graph()) }),
                    None => json!({ "found": false, "reason": "matching number below floor(n/2)" }),
                };
                write_json(out.as_deref(), &value)?;
                return match found {
                    Some(_) => Ok(()),
                    None => Err(Error::InvalidGraph("no spanning tree is NEB at any vertex".into()).into()),
                };
            }
            let t = parse_tree(&text)?;
            match v {
                Some(label) => {
                    let cert = is_neb(&t, vertex(label, t.n())?)?;
                    write_json(out.as_deref(), &certificate_json(&cert))?;
                    if !cert.verdict {
                        return Err(Error::NotNeb(Box::new(cert)).into());
                    }
                }
                None => {
                    let all = (0..t.n())
                        .map(|w| is_neb(&t, w).map(|c| certificate_json(&c)))
                        .collect::<Result<Vec<_>, _>>()?;
                    write_json(out.as_deref(), &json!({ "n": t.n(), "vertices": all }))?;
                }
            }
            Ok(())
        }
        Command::Construct {
            tree,
            vertex: v,
            spectrum,
            out,
            format,
            tol,
        } => {
            let tol = tol.tolerances()?;
            let t = parse_tree(&read(&tree)?)?;
            let spec = parse_spectrum(&read(&spectrum)?)?;
            let v = vertex(v, t.n())?;
            let mut report = construct(&t, v, &spec)?;
            let summary = verify_construction(&report, &t, v, &spec, &tol)?;
            info!(passed = summary.passed, lambda_deviation = summary.lambda_deviation, "constructed");
            let passed = summary.passed;
            report.verification = Some(summary);
            let value = report_json(&report);
            write_matrix(out.as_deref(), format, &report.matrix, value.clone())?;
            if !passed {
                return Err(Failure::Checks(value["verification"].clone()));
            }
            Ok(())
        }
        Command::Extend {
            matrix,
            tree,
            vertex: v,
            chords,
            epsilon,
            steps,
            newton_tol,
            max_newton_iters,
            backtrack,
            out,
            format,
            eigen_tol,
        } => {
            let (a, _) = parse_matrix(&read(&matrix)?)?;
            let t = load_tree_for(&tree, &a)?;
            let v = vertex(v, t.n())?;
            let chords = parse_chords(&chords)?;
            let cfg = HomotopyConfig {
                epsilon_target: epsilon,
                chord_targets: None,
                steps,
                newton_tol,
                max_newton_iters,
                backtrack,
            };
            let ext = extend(&a, &t, v, &chords, &cfg)?;
            let before = (skew_eigenvalues(&a)?, skew_eigenvalues(&a.delete(v))?);
            let lam = skew_eigenvalues(&ext.matrix)?.deviation(&before.0.imag_parts);
            let mu = skew_eigenvalues(&ext.matrix.delete(v))?.deviation(&before.1.imag_parts);
            let tolerance = eigen_tol * before.0.max_abs().max(1.0);
            let passed = lam <= tolerance && mu <= tolerance;
            let value = json!({
                "vertex": v + 1,
                "chords": ext.chords.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>(),
                "epsilon": epsilon,
                "steps_taken": ext.steps_taken,
                "step_halvings": ext.step_halvings,
                "newton_iterations": ext.newton_iterations,
                "final_residual": ext.final_residual,
                "max_step_norm": ext.max_step_norm,
                "warnings": ext.warnings,
                "lambda_deviation": lam,
                "mu_deviation": mu,
                "eigen_tolerance": tolerance,
                "passed": passed,
            });
            write_matrix(out.as_deref(), format, &ext.matrix, value.clone())?;
            if !passed {
                return Err(Failure::Checks(value));
            }
            Ok(())
        }
        Command::Verify {
            matrix,
            tree,
            vertex: v,
            spectrum,
            out,
            tol,
        } => {
            let tol = tol.tolerances()?;
            let (a, _) = parse_matrix(&read(&matrix)?)?;
            let spec = parse_spectrum(&read(&spectrum)?)?;
            spec.validate().map_err(Error::from)?;
            if spec.n() != a.n() {
                return Err(Error::SizeMismatch(format!("spectrum of order {} for a matrix of order {}", spec.n(), a.n())).into());
            }
            let v = vertex(v, a.n())?;
            let tree = tree.map(|p| load_tree_for(&p, &a)).transpose()?;
            let value = match tree {
                Some(t) if a.check_pattern(t.graph()).is_ok() => {
                    let s = verify_matrix(&a, &t, v, &spec, &tol)?;
                    serde_json::to_value(s).expect("summary serializes")
                }
                _ => {
                    let lam = skew_eigenvalues(&a)?.deviation(&spec.lambdas);
                    let mu = skew_eigenvalues(&a.delete(v))?.deviation(&spec.mus);
                    let tolerance = tol.eigen * spec.scale();
                    json!({
                        "lambda_deviation": lam,
                        "mu_deviation": mu,
                        "eigen_tolerance": tolerance,
                        "passed": lam <= tolerance && mu <= tolerance,
                    })
                }
            };
            write_json(out.as_deref(), &value)?;
            if value["passed"] != json!(true) {
                return Err(Failure::Checks(value));
            }
            Ok(())
        }
        Command::Jacobian {
            matrix,
            tree,
            vertex: v,
            tol,
            out,
        } => {
            let (a, _) = parse_matrix(&read(&matrix)?)?;
            let t = load_tree_for(&tree, &a)?;
            let v = vertex(v, t.n())?;
            let j = jacobian_f(&a, &t, v)?;
            let verdict = is_nonsingular(&j, tol);
            let value = json!({
                "edges": t.edges().iter().map(|&(i, k)| [i + 1, k + 1]).collect::<Vec<_>>(),
                "jacobian": j.rows(),
                "abs_det": verdict.abs_det,
                "min_pivot": verdict.min_pivot,
                "nonsingular": verdict.nonsingular,
            });
            write_json(out.as_deref(), &value)
        }
        Command::Fuzz {
            n_max,
            trials,
            seed,
            exhaustive: full,
            epsilon,
            out,
        } => {
            if full {
                let r = exhaustive(n_max, seed)?;
                let ok = r.inconsistent == 0 && r.shapes.iter().flat_map(|s| &s.constructed).all(|c| c.unwrap_or(true));
                let value = serde_json::to_value(&r).expect("report serializes");
                write_json(out.as_deref(), &value)?;
                return if ok { Ok(()) } else { Err(Failure::Checks(json!({ "inconsistent": r.inconsistent }))) };
            }
            let cfg = FuzzConfig {
                n_max,
                trials,
                seed,
                extend_epsilon: epsilon,
                ..Default::default()
            };
            let r = fuzz(&cfg)?;
            let value = serde_json::to_value(&r).expect("report serializes");
            write_json(out.as_deref(), &value)?;
            if r.violation_count() > 0 {
                return Err(Failure::Checks(json!({ "violations": r.violations })));
            }
            Ok(())
        }
    }
}

fn init_logging() {
    let level = match std::env::var("SKEW_SIEP_LOG").as_deref() {
        Ok("debug") => LevelFilter::DEBUG,
        Ok("info") => LevelFilter::INFO,
        _ => LevelFilter::OFF,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.diagnostic());
            ExitCode::from(f.exit_code())
        }
    }
}
