//! `melonforge`: batch front end for GM bubble recognition, decompositions,
//! Feynman graph enumeration, the large-N covariance and matrix-model checks.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numeric non-convergence,
//! 64 usage error, 74 I/O error.

mod input;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use melonforge::dot;
use melonforge::feynman::{gmax_count, par_fold, Ensemble, EnumerateOptions, FeynmanGraph};
use melonforge::gluing::decompose;
use melonforge::gm::recognize_gm_with;
use melonforge::large_n::{covariance_series, solve_covariance, universality_crosscheck, CovarianceError, Interaction};
use melonforge::matrix_model::{
    determinant_lemma_check, eta_exponents, expand_log_interaction, log_expansion_check, saddle_point_with,
    MatrixModelError, TreeModel, WRelation,
};
use melonforge::{recognize_gm, Bubble};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use input::{load, load_bubble, load_tree, Document};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NonConvergence(String),
    /// A report was produced but its check failed.
    #[error("check failed")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Io { .. } => 74,
            CliError::Invalid(_) | CliError::CheckFailed(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<MatrixModelError> for CliError {
    fn from(e: MatrixModelError) -> Self {
        match e {
            MatrixModelError::NoConvergence { .. } | MatrixModelError::GradientTooLarge { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<CovarianceError> for CliError {
    fn from(e: CovarianceError) -> Self {
        match e {
            CovarianceError::NoConvergence { .. } | CovarianceError::OutsideBranch { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
    Dot,
}

#[derive(Debug, Parser)]
#[command(name = "melonforge", version, about = "Generalized melonic bubbles and their large-N combinatorics")]
struct Cli {
    /// Output format; not every subcommand supports every format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate any supported JSON document (bubble, certificate, gluing, tree, map, Feynman graph).
    Validate { input: PathBuf },
    /// Recognize a GM bubble and print its certificate.
    Recognize {
        input: PathBuf,
        /// Remove bidipoles in a random order drawn from this seed instead of the first-found order.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Decompose a GM bubble into a tree gluing of quartic bubbles.
    Decompose { input: PathBuf },
    /// Plane tree of a GM bubble or of a tree gluing.
    Tree { input: PathBuf },
    /// Scaling exponent s of a GM bubble.
    Scaling { input: PathBuf },
    /// Histogram of the large-N degree over all Feynman graphs of an ensemble.
    Enumerate(EnsembleArgs),
    /// Maximal large-N degree and the number of graphs reaching it.
    Gmax(EnsembleArgs),
    /// Large-N covariance: numeric root or formal series.
    Covariance {
        /// Bubble size of each interaction (repeatable).
        #[arg(long = "V", required = true)]
        v: Vec<usize>,
        /// Coupling of each interaction, in the order of --V.
        #[arg(long = "t")]
        t: Vec<f64>,
        /// Print the formal series instead of a numeric value.
        #[arg(long)]
        series: bool,
        #[arg(long, default_value_t = 8)]
        order: u32,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
    },
    /// Compare enumerated dominant 2-point graphs with the covariance series.
    Crosscheck {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 10)]
        cap: usize,
    },
    /// Random check of the corner block-determinant identity.
    VerifyDeterminant {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Rescaling exponents of the half-edges, checked exactly.
    Eta {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Saddle point of the rescaled potential.
    Saddle {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Relation::VertexSum)]
        relation: Relation,
    },
    /// Cyclic word expansion of the log interaction.
    ExpandLog {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Also compare against a dense log-determinant on random 2×2 matrices.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Graphviz DOT rendering of any supported document.
    ExportDot { input: PathBuf },
}

#[derive(Debug, clap::Args)]
struct EnsembleArgs {
    /// Bubble file, optionally followed by `:count` (repeatable). Interaction ids follow the order given.
    #[arg(long = "bubble", required = true)]
    bubbles: Vec<String>,
    /// Include disconnected graphs.
    #[arg(long)]
    all: bool,
    /// Maximal number of white vertices.
    #[arg(long, default_value_t = 10)]
    cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Relation {
    VertexSum,
    Unweighted,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn unsupported(format: Format, cmd: &str) -> CliError {
    CliError::Usage(format!("--format {format:?} is not supported by {cmd}").to_lowercase())
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(s) = std::env::var("MELONFORGE_THREADS") {
        let n: usize = s
            .parse()
            .map_err(|_| CliError::Usage(format!("MELONFORGE_THREADS must be a positive integer, got {s:?}")))?;
        if n == 0 {
            return Err(CliError::Usage("MELONFORGE_THREADS must be positive".into()));
        }
        // a pool may already exist when embedded; that is not an error here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn validate(path: &Path, format: Format) -> Result<String, CliError> {
    if format != Format::Json {
        return Err(unsupported(format, "validate"));
    }
    let doc = load(path)?;
    let details = match &doc {
        Document::Bubble(b) => {
            let cert = recognize_gm(b);
            json!({"d": b.d(), "V": b.vertex_count(), "gm": cert.is_some(),
                   "totally_unbalanced": cert.as_ref().map(|c| c.is_totally_unbalanced())})
        }
        Document::Certificate(c) => {
            let b = c.replay().map_err(|e| CliError::Invalid(e.to_string()))?;
            c.verify(&b).map_err(|e| CliError::Invalid(e.to_string()))?;
            json!({"d": c.d, "V": b.vertex_count()})
        }
        Document::Gluing(g) => {
            let b = g.boundary().map_err(|e| CliError::Invalid(e.to_string()))?;
            json!({"d": g.d(), "quartics": g.quartics().len(), "tree": g.is_tree_gluing(), "boundary_V": b.vertex_count()})
        }
        Document::Tree(t) => json!({"d": t.d(), "edges": t.edges().len(), "V": t.bubble_vertex_count()}),
        Document::Map(m) => json!({"d": m.d(), "vertices": m.vertex_count(), "edges": m.edge_count(),
                                   "genus": m.genus(), "delta": m.delta()}),
        Document::Feynman(g) => json!({"d": g.d(), "connected": g.is_connected(), "cycles": g.cycle_counts()}),
    };
    Ok(to_json(&json!({"kind": doc.kind(), "valid": true, "details": details})))
}

fn recognize(path: &Path, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let b = load_bubble(path)?;
    let cert = match seed {
        None => recognize_gm(&b),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            recognize_gm_with(&b, |found| rng.gen_range(0..found.len()))
        }
    }
    .ok_or_else(|| CliError::Invalid("bubble is not generalized melonic".into()))?;
    match format {
        Format::Json => Ok(to_json(&cert)),
        Format::Tsv => {
            let mut s = String::from("C\tcount\n");
            for (c, n) in &cert.multiset {
                let _ = writeln!(s, "{}\t{n}", c.to_vec().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            }
            Ok(s)
        }
        Format::Dot => Err(unsupported(format, "recognize")),
    }
}

fn certified(path: &Path) -> Result<(Bubble, melonforge::GmCertificate), CliError> {
    let b = load_bubble(path)?;
    let cert = recognize_gm(&b).ok_or_else(|| CliError::Invalid("bubble is not generalized melonic".into()))?;
    Ok((b, cert))
}

fn decompose_cmd(path: &Path, format: Format) -> Result<String, CliError> {
    let (b, cert) = certified(path)?;
    let g = decompose(&b, &cert).map_err(|e| CliError::Invalid(e.to_string()))?;
    match format {
        Format::Json => Ok(to_json(&g)),
        Format::Dot => Ok(dot::gluing_dot(&g)),
        Format::Tsv => Err(unsupported(format, "decompose")),
    }
}

fn tree_cmd(path: &Path, format: Format) -> Result<String, CliError> {
    let t = load_tree(path)?;
    match format {
        Format::Json => Ok(to_json(&t)),
        Format::Dot => Ok(dot::tree_dot(&t)),
        Format::Tsv => Err(unsupported(format, "tree")),
    }
}

fn scaling_cmd(path: &Path, format: Format) -> Result<String, CliError> {
    let (b, cert) = certified(path)?;
    let s = cert.scaling_coefficient();
    match format {
        Format::Json => Ok(to_json(&json!({"d": b.d(), "V": b.vertex_count(), "s": s.to_string()}))),
        Format::Tsv => Ok(format!("s\n{s}\n")),
        Format::Dot => Err(unsupported(format, "scaling")),
    }
}

/// Ensemble from `path[:count]` specs and the scaling exponent of each interaction.
fn ensemble(specs: &[String]) -> Result<(Arc<Ensemble>, BTreeMap<usize, Rational64>), CliError> {
    let mut counts = Vec::new();
    let mut scalings = BTreeMap::new();
    for (r, spec) in specs.iter().enumerate() {
        let (file, count) = match spec.rsplit_once(':') {
            Some((f, c)) if !c.is_empty() && c.chars().all(|ch| ch.is_ascii_digit()) => {
                (f, c.parse::<usize>().map_err(|_| CliError::Usage(format!("bad count in {spec:?}")))?)
            }
            _ => (spec.as_str(), 1),
        };
        let (b, cert) = certified(Path::new(file))?;
        scalings.insert(r, cert.scaling_coefficient());
        counts.push((b, count));
    }
    let ens = Ensemble::from_counts(&counts).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok((Arc::new(ens), scalings))
}

fn enumerate_cmd(args: &EnsembleArgs, format: Format) -> Result<String, CliError> {
    let (ens, scalings) = ensemble(&args.bubbles)?;
    let opts = EnumerateOptions { connected_only: !args.all, cap: args.cap };
    let word = ens.coupling_word();
    let offset: Rational64 = word.iter().map(|(r, &b)| scalings[r] * Rational64::from_integer(b as i64)).sum();
    let hist = par_fold(
        &ens,
        opts,
        BTreeMap::<usize, u64>::new,
        |mut acc, g: &FeynmanGraph| {
            *acc.entry(g.total_cycles()).or_insert(0) += 1;
            acc
        },
        |mut a, b| {
            for (k, n) in b {
                *a.entry(k).or_insert(0) += n;
            }
            a
        },
    )
    .map_err(|e| CliError::Invalid(e.to_string()))?;
    let b_vec: Vec<usize> = (0..args.bubbles.len()).map(|r| word.get(&r).copied().unwrap_or(0)).collect();
    let rows: Vec<(Rational64, u64)> =
        hist.into_iter().rev().map(|(l, n)| (Rational64::from_integer(l as i64) + offset, n)).collect();
    match format {
        Format::Json => Ok(to_json(&json!({
            "b": b_vec,
            "rows": rows.iter().map(|(d, n)| json!({"delta": d.to_string(), "count": n})).collect::<Vec<_>>(),
        }))),
        Format::Tsv => {
            let b = b_vec.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            let mut s = String::from("b\tdelta\tcount\n");
            for (d, n) in rows {
                let _ = writeln!(s, "{b}\t{d}\t{n}");
            }
            Ok(s)
        }
        Format::Dot => Err(unsupported(format, "enumerate")),
    }
}

fn gmax_cmd(args: &EnsembleArgs, format: Format) -> Result<String, CliError> {
    let (ens, scalings) = ensemble(&args.bubbles)?;
    let opts = EnumerateOptions { connected_only: !args.all, cap: args.cap };
    let (dmax, count) = gmax_count(&ens, opts, &scalings)
        .map_err(|e| CliError::Invalid(e.to_string()))?
        .ok_or_else(|| CliError::Invalid("the ensemble has no graphs".into()))?;
    match format {
        Format::Json => Ok(to_json(&json!({"delta_max": dmax.to_string(), "count": count}))),
        Format::Tsv => Ok(format!("delta_max\tcount\n{dmax}\t{count}\n")),
        Format::Dot => Err(unsupported(format, "gmax")),
    }
}

fn covariance_cmd(
    v: &[usize],
    t: &[f64],
    series: bool,
    order: u32,
    tol: f64,
    format: Format,
) -> Result<String, CliError> {
    if format == Format::Dot {
        return Err(unsupported(format, "covariance"));
    }
    if series {
        let s = covariance_series(v, order)?;
        return match format {
            Format::Json => Ok(to_json(&s)),
            _ => {
                let mut out = String::from("exponents\tcoefficient\n");
                for (e, c) in s.terms() {
                    let _ = writeln!(out, "{}\t{c}", e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
                }
                Ok(out)
            }
        };
    }
    if t.len() != v.len() {
        return Err(CliError::Usage(format!("{} couplings given for {} interactions", t.len(), v.len())));
    }
    let ints: Vec<Interaction> = v.iter().zip(t).map(|(&v, &t)| Interaction { t, v }).collect();
    let sol = solve_covariance(&ints, tol)?;
    match format {
        Format::Json => Ok(to_json(&sol)),
        _ => Ok(format!("value\tresidual\titerations\n{}\t{:e}\t{}\n", sol.value, sol.residual, sol.iterations)),
    }
}

fn crosscheck_cmd(path: &Path, order: usize, cap: usize, format: Format) -> Result<String, CliError> {
    let b = load_bubble(path)?;
    let r = universality_crosscheck(&b, order, cap)?;
    let out = match format {
        Format::Json => to_json(&r),
        Format::Tsv => {
            let mut s = String::from("k\tcount\tenumerated\tseries\tdelta_max\n");
            for k in 0..=order {
                let _ = writeln!(
                    s,
                    "{k}\t{}\t{}\t{}\t{}",
                    r.dominant_counts[k], r.enumerated[k], r.series[k], r.delta_max[k]
                );
            }
            s
        }
        Format::Dot => return Err(unsupported(format, "crosscheck")),
    };
    if r.passed {
        Ok(out)
    } else {
        Err(CliError::CheckFailed(out))
    }
}

fn determinant_cmd(
    tree: &Path,
    n: usize,
    trials: usize,
    seed: u64,
    tol: f64,
    format: Format,
) -> Result<String, CliError> {
    let t = load_tree(tree)?;
    let r = determinant_lemma_check(&t, n, trials, seed)?;
    let passed = r.max_rel_error <= tol;
    let out = match format {
        Format::Json => to_json(&json!({"report": r, "tolerance": tol, "passed": passed})),
        Format::Tsv => {
            format!("n\ttrials\tmax_rel_error\tpassed\n{}\t{}\t{:e}\t{passed}\n", r.n, r.trials, r.max_rel_error)
        }
        Format::Dot => return Err(unsupported(format, "verify-determinant")),
    };
    if passed {
        Ok(out)
    } else {
        Err(CliError::CheckFailed(out))
    }
}

fn eta_cmd(tree: &Path, format: Format) -> Result<String, CliError> {
    let tm = TreeModel::new(load_tree(tree)?);
    let eta = eta_exponents(&tm);
    eta.check(&tm)?;
    match format {
        Format::Json => {
            Ok(to_json(&json!({"s": tm.s().to_string(), "V": tm.vertex_count(), "eta": eta, "constraints_hold": true})))
        }
        Format::Tsv => {
            let mut s = String::from("halfedge\teta\n");
            for (h, e) in &eta.eta {
                let _ = writeln!(s, "{}\t{e}", h.0);
            }
            Ok(s)
        }
        Format::Dot => Err(unsupported(format, "eta")),
    }
}

fn saddle_cmd(tree: &Path, t: f64, tol: f64, relation: Relation, format: Format) -> Result<String, CliError> {
    let tm = TreeModel::new(load_tree(tree)?);
    let relation = match relation {
        Relation::VertexSum => WRelation::VertexSum,
        Relation::Unweighted => WRelation::Unweighted,
    };
    let sol = saddle_point_with(&tm, t, tol, relation)?;
    match format {
        Format::Json => Ok(to_json(&sol)),
        Format::Tsv => {
            let mut s = format!("W\t{}\ngradient_norm\t{:e}\nhalfedge\ty\n", sol.w, sol.gradient_norm);
            for (h, y) in &sol.y {
                let _ = writeln!(s, "{}\t{y}", h.0);
            }
            Ok(s)
        }
        Format::Dot => Err(unsupported(format, "saddle")),
    }
}

#[allow(clippy::too_many_arguments)]
fn expand_log_cmd(
    tree: &Path,
    order: usize,
    check: bool,
    radius: f64,
    trials: usize,
    seed: u64,
    format: Format,
) -> Result<String, CliError> {
    let tm = TreeModel::new(load_tree(tree)?);
    let terms = expand_log_interaction(&tm, order)?;
    let report = if check { Some(log_expansion_check(&tm, order, radius, trials, seed)?) } else { None };
    let out = match format {
        Format::Json => to_json(&json!({"order": order, "terms": terms, "check": report})),
        Format::Tsv => {
            let mut s = String::from("word\tmultiplicity\ttrace_factor\tcoefficient\tepsilon_sign\tcoupling_power\n");
            for t in &terms {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    t.letters, t.multiplicity, t.trace_factor, t.coefficient, t.epsilon_sign, t.coupling_power
                );
            }
            s
        }
        Format::Dot => return Err(unsupported(format, "expand-log")),
    };
    match report {
        Some(r) if !r.passed => Err(CliError::CheckFailed(out)),
        _ => Ok(out),
    }
}

fn export_dot(path: &Path) -> Result<String, CliError> {
    Ok(match load(path)? {
        Document::Bubble(b) => dot::bubble_dot(&b),
        Document::Certificate(c) => dot::bubble_dot(&c.replay().map_err(|e| CliError::Invalid(e.to_string()))?),
        Document::Gluing(g) => dot::gluing_dot(&g),
        Document::Tree(t) => dot::tree_dot(&t),
        Document::Map(m) => dot::map_dot(&m),
        Document::Feynman(g) => dot::feynman_dot(&g),
    })
}

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads()?;
    let f = cli.format;
    match &cli.command {
        Command::Validate { input } => validate(input, f),
        Command::Recognize { input, seed } => recognize(input, *seed, f),
        Command::Decompose { input } => decompose_cmd(input, f),
        Command::Tree { input } => tree_cmd(input, f),
        Command::Scaling { input } => scaling_cmd(input, f),
        Command::Enumerate(args) => enumerate_cmd(args, f),
        Command::Gmax(args) => gmax_cmd(args, f),
        Command::Covariance { v, t, series, order, tol } => covariance_cmd(v, t, *series, *order, *tol, f),
        Command::Crosscheck { input, order, cap } => crosscheck_cmd(input, *order, *cap, f),
        Command::VerifyDeterminant { tree, n, trials, seed, tol } => determinant_cmd(tree, *n, *trials, *seed, *tol, f),
        Command::Eta { tree } => eta_cmd(tree, f),
        Command::Saddle { tree, t, tol, relation } => saddle_cmd(tree, *t, *tol, *relation, f),
        Command::ExpandLog { tree, order, check, radius, trials, seed } => {
            expand_log_cmd(tree, *order, *check, *radius, *trials, *seed, f)
        }
        Command::ExportDot { input } => {
            if f == Format::Tsv {
                return Err(unsupported(f, "export-dot"));
            }
            export_dot(input)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::CheckFailed(report)) => {
            print!("{report}");
            eprintln!("melonforge: check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("melonforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
