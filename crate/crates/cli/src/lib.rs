//! Command-line front end. Every command emits one JSON document; exit
//! status is 0 when every check passes, 1 when a check fails (the report
//! carries a witness), and 2 on usage, input or capacity errors.

pub mod codec;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use orthopoly_core::approx_id::{verify_theorem_pipeline, PipelineOptions, SequenceKind};
use orthopoly_core::finite_rank::{build_biorthogonal_system, embed, FiniteRankOperator, RankOneOperator};
use orthopoly_core::matrix::ComplexMatrix;
use orthopoly_core::multilinear::{HomogeneousPolynomial, MAX_DEGREE, MAX_ORDER};
use orthopoly_core::ncpoly::{
    sum_over_permutations, verify_identity, verify_polarization_symbolic, verify_r14, DegreeLimit, IdentityKind,
    IntPoly, MAX_N_ENV,
};
use orthopoly_core::{random, Error, Real, Verdict};
use serde_json::{json, Value};

use codec::{dmatrix_json, matrix_json, vector_json, CodecError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "orthopoly",
    version,
    about = "Verification suites for orthogonally additive polynomials on matrix and finite-rank operator algebras",
    after_help = "Exit status: 0 pass, 1 mathematical failure (report has a witness), 2 usage/input/capacity error.\n\
                  Default tolerances: verdict 1e-8, stabilization 1e-10, identity 1e-9, rank 1e-10.\n\
                  ORTHOPOLY_MAX_N overrides the symbolic degree cap (default 7)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact permutation-sum identities, last-letter stratification and
    /// symbolic polarization in the free algebra.
    VerifyIdentities(IdentitiesArgs),
    /// Additivity, derived-form identity, recovery and uniqueness of the
    /// representing map for one polynomial.
    VerifyRepresentation(RepresentationArgs),
    /// Biorthogonal system and matrix-subalgebra embedding for a list of
    /// finite-rank operators.
    Embed(EmbedArgs),
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Random samples per check.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Verdict tolerance (default 1e-8; 1e-9 for embed).
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON input file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print a human-readable summary of the report instead of JSON.
    #[arg(long)]
    pub pretty: bool,
    /// Add wall-clock timings (breaks byte-for-byte reproducibility).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct IdentitiesArgs {
    /// Largest n to check.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Include every word and coefficient of both sides.
    #[arg(long)]
    pub dump: bool,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Instance {
    /// `S -> Phi(S^n)` with a seeded random `Phi: M_d -> M_k`.
    RandomCanonical,
    /// `S -> S^n` on `M_d`.
    Power,
    /// `S -> (tr S)^2`, which is not orthogonally additive.
    TraceSquare,
    /// The zero polynomial `M_d -> M_k`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SequenceChoice {
    Truncation,
    NestedRandom,
}

#[derive(Debug, Clone, Args)]
pub struct RepresentationArgs {
    /// Degree of the built-in instance.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Codomain order of the built-in instance.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Operators act on C^d.
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// Built-in instance, used when no --input is given.
    #[arg(long, value_enum, default_value_t = Instance::RandomCanonical)]
    pub instance: Instance,
    /// Approximate identity used for the limits.
    #[arg(long, value_enum, default_value_t = SequenceChoice::Truncation)]
    pub ai: SequenceChoice,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    /// Expected ambient dimension; checked against the input.
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    pub config: RunConfig,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Codec(CodecError),
    Io { path: PathBuf, source: std::io::Error },
    Usage(String),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Core(e) => error_kind(e),
            Failure::Codec(CodecError::Syntax(_)) => "parse",
            Failure::Codec(CodecError::Shape(_)) => "input",
            Failure::Codec(CodecError::Core(e)) => error_kind(e),
            Failure::Io { .. } => "io",
            Failure::Usage(_) => "usage",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Codec(e) => e.to_string(),
            Failure::Io { path, source } => format!("{}: {source}", path.display()),
            Failure::Usage(m) => m.clone(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        Failure::Codec(e)
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Dimension { .. } => "dimension",
        Error::Arity { .. } => "arity",
        Error::Numeric(_) => "numeric",
        Error::Capacity { .. } => "capacity",
        Error::DegenerateInput(_) => "degenerate-input",
        Error::Precondition(_) => "precondition",
        Error::Generation(_) => "generation",
        Error::Alphabet { .. } => "alphabet",
        Error::Convergence { .. } => "convergence",
        Error::NotRepresentable { .. } => "not-representable",
        Error::Invalid(_) => "invalid",
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let (name, config) = match &cli.command {
        Command::VerifyIdentities(a) => ("verify-identities", &a.config),
        Command::VerifyRepresentation(a) => ("verify-representation", &a.config),
        Command::Embed(a) => ("embed", &a.config),
    };
    let started = Instant::now();
    let result = validate(config).and_then(|_| match &cli.command {
        Command::VerifyIdentities(a) => cmd_verify_identities(a),
        Command::VerifyRepresentation(a) => cmd_verify_representation(a),
        Command::Embed(a) => cmd_embed(a),
    });
    let (code, mut report, stderr) = match result {
        Ok((verdict, report)) => {
            let code = if verdict.passed() { EXIT_PASS } else { EXIT_FAIL };
            (code, report, String::new())
        }
        Err(failure) => {
            let message = failure.message();
            let report = json!({
                "command": name,
                "error": {"kind": failure.kind(), "message": message},
            });
            (EXIT_ERROR, report, format!("orthopoly {name}: {message}\n"))
        }
    };
    if config.timing {
        report["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
    }
    let text = format!("{}\n", serde_json::to_string(&report).expect("reports are plain JSON"));
    let mut outcome = Outcome {
        code,
        stdout: if config.pretty {
            summarize(&report)
        } else {
            text.clone()
        },
        stderr,
    };
    if let Some(path) = &config.output {
        if let Err(e) = std::fs::write(path, &text) {
            outcome
                .stderr
                .push_str(&format!("orthopoly {name}: {}: {e}\n", path.display()));
            outcome.code = EXIT_ERROR;
        }
    }
    outcome
}

fn validate(config: &RunConfig) -> Result<(), Failure> {
    if config.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    if let Some(tol) = config.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::Usage("--tol must be a positive number".into()));
        }
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|source| Failure::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn identity_record(
    kind: IdentityKind,
    n: usize,
    limit: &DegreeLimit,
    dump: bool,
    timing: bool,
) -> Result<(bool, Value), Failure> {
    let started = Instant::now();
    let check = verify_identity(kind, n, limit)?;
    let mut record = serde_json::to_value(&check).expect("plain data");
    if dump {
        record["lhs"] = terms_json(&sum_over_permutations(n, kind.lhs(), limit)?);
        record["rhs"] = terms_json(&sum_over_permutations(n, kind.rhs(), limit)?);
    }
    if timing {
        record["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
    }
    Ok((check.equal, record))
}

fn terms_json(p: &IntPoly) -> Value {
    Value::Array(p.term_strings().into_iter().map(|(w, c)| json!([w, c])).collect())
}

fn cmd_verify_identities(args: &IdentitiesArgs) -> Result<(Verdict, Value), Failure> {
    if args.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let limit = DegreeLimit::from_env()?;
    limit.check(args.n)?;
    let timing = args.config.timing;
    let mut records = Vec::new();
    let mut all_equal = true;
    for n in 2..=args.n {
        for kind in IdentityKind::ALL {
            let (equal, record) = identity_record(kind, n, &limit, args.dump, timing)?;
            all_equal &= equal;
            records.push(record);
        }
        let started = Instant::now();
        let check = verify_r14(n, &limit)?;
        all_equal &= check.equal;
        let mut record = serde_json::to_value(&check).expect("plain data");
        record["identity"] = json!("r14");
        if timing {
            record["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
        }
        records.push(record);
    }
    for n in 1..=args.n.min(4) {
        let started = Instant::now();
        let check = verify_polarization_symbolic(n, &limit)?;
        all_equal &= check.equal;
        let mut record = serde_json::to_value(&check).expect("plain data");
        record["identity"] = json!("polarization");
        if timing {
            record["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
        }
        records.push(record);
    }
    let verdict = Verdict::from_pass(all_equal);
    Ok((
        verdict,
        json!({
            "command": "verify-identities",
            "n": args.n,
            "cap": limit.max_n,
            "cap_env": MAX_N_ENV,
            "records": records,
            "verdict": verdict,
        }),
    ))
}

fn build_instance(args: &RepresentationArgs) -> Result<(HomogeneousPolynomial<f64>, Value), Failure> {
    if let Some(path) = &args.config.input {
        let p = codec::parse_polynomial(&read_input(path)?)?;
        let description = json!({
            "source": "input",
            "kind": p.kind().name(),
            "degree": p.degree(),
            "dim": p.domain_dim(),
            "codomain_dim": p.codomain_dim(),
        });
        return Ok((p, description));
    }
    for (flag, value) in [("--n", args.n), ("--k", args.k), ("--d", args.d)] {
        if value == 0 {
            return Err(Failure::Usage(format!("{flag} must be at least 1")));
        }
    }
    let (n, d, k) = (args.n, args.d, args.k);
    if k > MAX_ORDER {
        return Err(Error::Capacity {
            what: "codomain order",
            requested: k,
            limit: MAX_ORDER,
        }
        .into());
    }
    let p = match args.instance {
        Instance::RandomCanonical => {
            let mut rng = random::rng(args.config.seed);
            HomogeneousPolynomial::canonical(n, random::linear_map(&mut rng, d, k))?
        }
        Instance::Power => HomogeneousPolynomial::power(n, d)?,
        Instance::TraceSquare => HomogeneousPolynomial::trace_power(2, d)?,
        Instance::Zero => HomogeneousPolynomial::zero(n, d, k)?,
    };
    let source = match args.instance {
        Instance::RandomCanonical => "random-canonical",
        Instance::Power => "power",
        Instance::TraceSquare => "trace-square",
        Instance::Zero => "zero",
    };
    let description = json!({
        "source": source,
        "kind": p.kind().name(),
        "degree": p.degree(),
        "dim": p.domain_dim(),
        "codomain_dim": p.codomain_dim(),
    });
    Ok((p, description))
}

fn cmd_verify_representation(args: &RepresentationArgs) -> Result<(Verdict, Value), Failure> {
    let (p, instance) = build_instance(args)?;
    if p.degree() > MAX_DEGREE {
        return Err(Error::Capacity {
            what: "polynomial degree",
            requested: p.degree(),
            limit: MAX_DEGREE,
        }
        .into());
    }
    let sequence = match args.ai {
        SequenceChoice::Truncation => SequenceKind::Truncation,
        SequenceChoice::NestedRandom => SequenceKind::NestedRandom { seed: args.config.seed },
    };
    let options = PipelineOptions {
        samples: args.config.samples,
        seed: args.config.seed,
        tol: args.config.tol.unwrap_or(f64::verdict_tol()),
        stabilization_tol: f64::stabilization_tol(),
        sequence,
    };
    let report = verify_theorem_pipeline(&p, &options)?;
    let stages: Vec<Value> = report
        .stages
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "residual": s.residual,
                "pass": s.pass,
                "witness": s.witness.as_ref().map(|w| json!([matrix_json(w.a()), matrix_json(w.b())])),
            })
        })
        .collect();
    Ok((
        report.verdict,
        json!({
            "command": "verify-representation",
            "instance": instance,
            "options": {
                "samples": options.samples,
                "seed": options.seed,
                "tol": options.tol,
                "stabilization_tol": options.stabilization_tol,
                "sequence": options.sequence,
            },
            "stages": stages,
            "max_residual": report.max_residual(),
            "verdict": report.verdict,
        }),
    ))
}

fn cmd_embed(args: &EmbedArgs) -> Result<(Verdict, Value), Failure> {
    let path = args
        .config
        .input
        .as_ref()
        .ok_or_else(|| Failure::Usage("embed needs --input <operators.json>".into()))?;
    let operators = codec::parse_operators(&read_input(path)?)?;
    let d = operators[0].dim();
    if let Some(bad) = operators.iter().find(|op| op.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            found: bad.dim(),
        }
        .into());
    }
    if let Some(expected) = args.d {
        if expected != d {
            return Err(Error::Dimension { expected, found: d }.into());
        }
    }
    let terms: Vec<RankOneOperator<f64>> = operators.iter().flat_map(|op| op.terms().iter().cloned()).collect();
    if terms.is_empty() {
        return Err(Error::DegenerateInput("operators have no rank-one terms".into()).into());
    }
    let system = build_biorthogonal_system(&terms, f64::rank_tol())?;
    let embedding = embed(&system);
    let tol = args.config.tol.unwrap_or(f64::identity_tol());

    let biorthogonality = system.biorthogonality_residual();
    let containment = system.containment_residual(&terms);
    let round_trip = embedding.round_trip_residual()?;
    let mut operator_containment = 0.0f64;
    let mut multiplicativity = 0.0f64;
    let images: Vec<ComplexMatrix<f64>> = operators
        .iter()
        .map(|op| embedding.forward(op.matrix()))
        .collect::<orthopoly_core::Result<_>>()?;
    for op in &operators {
        operator_containment = operator_containment.max(embedding.containment_residual(op.matrix())?);
    }
    for (a, fa) in operators.iter().zip(&images) {
        for (b, fb) in operators.iter().zip(&images) {
            let product = embedding.forward(&(a.matrix() * b.matrix()))?;
            multiplicativity = multiplicativity.max(product.relative_distance(&(fa * fb)));
        }
    }
    let unit = embedding.backward(&ComplexMatrix::identity(system.k()))?;
    let unit_residual = operators
        .iter()
        .map(|op| local_unit_residual(op, &unit))
        .fold(0.0f64, f64::max);

    let diagnostics = json!({
        "biorthogonality": biorthogonality,
        "containment": containment,
        "round_trip": round_trip,
        "operator_containment": operator_containment,
        "multiplicativity": multiplicativity,
        "local_unit": unit_residual,
    });
    let worst = [
        biorthogonality,
        containment,
        round_trip,
        operator_containment,
        multiplicativity,
        unit_residual,
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    let verdict = Verdict::from_pass(worst <= tol);
    Ok((
        verdict,
        json!({
            "command": "embed",
            "dim": d,
            "operators": operators.len(),
            "rank_one_terms": terms.len(),
            "k": system.k(),
            "y": system.ys().iter().map(vector_json).collect::<Vec<_>>(),
            "g": system.gs().iter().map(vector_json).collect::<Vec<_>>(),
            "images": images.iter().map(|m| dmatrix_json(m.as_dmatrix())).collect::<Vec<_>>(),
            "local_unit": matrix_json(unit.matrix()),
            "tol": tol,
            "diagnostics": diagnostics,
            "verdict": verdict,
        }),
    ))
}

/// `max(|TS - T|, |ST - T|) / (1 + |T|)`.
fn local_unit_residual(t: &FiniteRankOperator<f64>, s: &FiniteRankOperator<f64>) -> f64 {
    let t = t.matrix();
    let ts = t * s.matrix();
    let st = s.matrix() * t;
    let scale = 1.0 + t.norm();
    ((&ts - t).norm() / scale).max((&st - t).norm() / scale)
}

/// Plain-text rendering of a report: top-level scalars as `key: value`,
/// arrays of records one per line.
pub fn summarize(report: &Value) -> String {
    let mut out = String::new();
    let Some(map) = report.as_object() else {
        return format!("{report}\n");
    };
    for (key, value) in map {
        match value {
            Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
                let _ = writeln!(out, "{key}:");
                for item in items {
                    let _ = writeln!(out, "  {}", inline(item));
                }
            }
            Value::Object(_) => {
                let _ = writeln!(out, "{key}: {}", inline(value));
            }
            Value::Array(items) => {
                let _ = writeln!(out, "{key}: [{} entries]", items.len());
            }
            _ => {
                let _ = writeln!(out, "{key}: {}", scalar(value));
            }
        }
    }
    out
}

fn inline(value: &Value) -> String {
    match value {
        Value::Object(map) => map
            .iter()
            .filter(|(_, v)| !matches!(v, Value::Array(_)))
            .map(|(k, v)| match v {
                Value::Object(_) => format!("{k}={{{}}}", inline(v)),
                _ => format!("{k}={}", scalar(v)),
            })
            .collect::<Vec<_>>()
            .join(" "),
        _ => scalar(value),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}
