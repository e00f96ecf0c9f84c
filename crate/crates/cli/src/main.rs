//! Command-line front door: reads and writes the JSON POVM format, runs the
//! decision procedures, and emits self-contained certificate reports.
//!
//! Exit codes: 0 when the queried property holds and every emitted
//! certificate verified, 1 when the property fails (the report carries the
//! refuting certificate), 2 for input errors such as malformed documents or
//! violated preconditions.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use povmtk::convexity::{
    self, CstarCertificate, Equivalence, ZhouOutcome, DEFAULT_WORD_CAP,
};
use povmtk::error::PovmError;
use povmtk::json as documents;
use povmtk::matrix;
use povmtk::povm::FinitePovm;
use povmtk::tolerance::Tolerance;
use povmtk::{dilation, generators, ucp};

#[derive(Parser)]
#[command(name = "povmtk", version, about = "POVM toolkit: dilations, commutants, and C*-extreme certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// One scalar applied to all three tolerance fields (eps_eq, eps_psd,
    /// eps_rank).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for randomized witness searches and generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Skip the round-trip re-verification of emitted certificates.
    #[arg(long, global = true)]
    no_verify: bool,
}

#[derive(Args)]
struct InputArg {
    /// POVM document; `-` or omitted reads stdin.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    /// First POVM document; `-` or omitted reads stdin.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Second POVM document.
    #[arg(long = "in2")]
    input2: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a POVM document: positivity, normalization, projection
    /// valuedness.
    Check(InputArg),
    /// Minimal Naimark dilation of a normalized POVM.
    Dilate(InputArg),
    /// Classical extreme-point test with a commutant witness on failure.
    Extreme(InputArg),
    /// C*-extreme test; non-spectral inputs receive a proper decomposition
    /// certificate.
    Cstar(InputArg),
    /// Radon-Nikodym derivative of `--in` with respect to `--in2`.
    Rn(PairArgs),
    /// Zhou criterion: invertible S with `--in2 = S* (--in) S`, or a
    /// refutation word.
    Zhou(PairArgs),
    /// Spectral probe: the dominated POVM built from f_{r,s} on mu(E).
    Probe(ProbeArgs),
    /// Krein-Milman decomposition over dirac spectral measures.
    Km(InputArg),
    /// Choi matrix of the induced UCP map and its positivity.
    Choi(InputArg),
    /// Unitary equivalence of two POVMs over the same outcomes.
    Equiv(PairArgs),
    /// Measure isomorphism of two POVMs.
    Iso(PairArgs),
    /// Generate a POVM document.
    Gen(GenArgs),
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Comma-separated outcome labels forming the subset E.
    #[arg(long)]
    subset: String,
    /// Left end of the probe window; defaults from the spectrum of mu(E).
    #[arg(long)]
    r: Option<f64>,
    /// Right end of the probe window.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    /// One of: random, pvm, trine, toeplitz.
    #[arg(long)]
    kind: String,
    /// Hilbert-space dimension (random, pvm).
    #[arg(long)]
    dim: Option<usize>,
    /// Number of outcomes (random, pvm).
    #[arg(long)]
    n: Option<usize>,
    /// Truncation size (toeplitz).
    #[arg(long)]
    m: Option<usize>,
    /// Number of equal arcs (toeplitz).
    #[arg(long)]
    arcs: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<PovmError> for Failure {
    fn from(err: PovmError) -> Self {
        Failure { code: 2, message: err.to_string() }
    }
}

fn read_source(path: &Option<PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", p.display()))),
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Failure::input(format!("cannot read stdin: {e}")))?;
            Ok(buf)
        }
    }
}

fn read_povm(path: &Option<PathBuf>) -> Result<FinitePovm, Failure> {
    let text = read_source(path)?;
    documents::parse_povm(&text).map_err(Failure::from)
}

fn read_povm_file(path: &Path) -> Result<FinitePovm, Failure> {
    read_povm(&Some(path.to_path_buf()))
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, payload)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

struct Report {
    verdicts: serde_json::Value,
    certificate: serde_json::Value,
    exit_code: u8,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let tol = match cli.tol {
        Some(eps) => match Tolerance::uniform(eps) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("{}", json!({ "error": e.to_string(), "exit_code": 2 }));
                return ExitCode::from(2);
            }
        },
        None => Tolerance::default(),
    };
    match run(&cli, &tol) {
        Ok(Some(report)) => {
            let full = json!({
                "command": argv.join(" "),
                "tolerance": tol,
                "verdicts": report.verdicts,
                "certificate": report.certificate,
                "exit_code": report.exit_code,
            });
            let payload = serde_json::to_string_pretty(&full).expect("report serializes");
            if let Err(f) = emit(&cli.out, &payload) {
                eprintln!("{}", json!({ "error": f.message, "exit_code": f.code }));
                return ExitCode::from(f.code);
            }
            ExitCode::from(report.exit_code)
        }
        // Raw-document commands (gen, probe) have already written output.
        Ok(None) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli, tol: &Tolerance) -> Result<Option<Report>, Failure> {
    let verify = !cli.no_verify;
    match &cli.command {
        Command::Check(args) => {
            let p = read_povm(&args.input)?;
            let report = p.validate(tol);
            let is_pvm = report.psd_ok && p.is_pvm(tol);
            let ok = report.psd_ok && report.normalized;
            Ok(Some(Report {
                verdicts: json!({
                    "psd_ok": report.psd_ok,
                    "normalized": report.normalized,
                    "subnormalized": report.subnormalized,
                    "is_pvm": is_pvm,
                    "total": documents::matrix_to_data(&report.total),
                }),
                certificate: serde_json::Value::Null,
                exit_code: if ok { 0 } else { 1 },
            }))
        }
        Command::Dilate(args) => {
            let p = read_povm(&args.input)?;
            let dil = dilation::naimark_dilate(&p, tol)?;
            let doc = documents::dilation_to_document(&dil);
            if verify {
                let round = documents::parse_dilation(&serde_json::to_string(&doc).unwrap())?;
                round.verify(tol)?;
            }
            Ok(Some(Report {
                verdicts: json!({
                    "dilation_dim": dil.dilation_dim(),
                    "blocks": doc.blocks,
                }),
                certificate: serde_json::to_value(&doc).unwrap(),
                exit_code: 0,
            }))
        }
        Command::Extreme(args) => {
            let p = read_povm(&args.input)?;
            let report = convexity::extreme_test(&p, tol)?;
            let certificate = match &report.witness {
                Some(d) => {
                    if verify {
                        let compressed = report.dilation.compress(d);
                        if matrix::max_abs(&compressed) > 10.0 * tol.eps_eq {
                            return Err(Failure::from(PovmError::CertificateInvalid(
                                "extreme witness compression".into(),
                            )));
                        }
                    }
                    json!({
                        "witness": documents::matrix_to_data(d),
                        "dilation": documents::dilation_to_document(&report.dilation),
                    })
                }
                None => serde_json::Value::Null,
            };
            Ok(Some(Report {
                verdicts: json!({ "extreme": report.extreme }),
                certificate,
                exit_code: if report.extreme { 0 } else { 1 },
            }))
        }
        Command::Cstar(args) => {
            let p = read_povm(&args.input)?;
            let report = convexity::cstar_extreme_test(&p, tol, cli.seed)?;
            let certificate = documents::cstar_certificate_to_document(&report.certificate);
            if verify {
                if let CstarCertificate::Decomposition { combination, .. } = &report.certificate {
                    let round = documents::parse_combination(
                        &documents::combination_to_json(combination),
                        tol,
                    )?;
                    let back = convexity::combine(&round, tol)?;
                    for (a, b) in back.effects().iter().zip(p.effects()) {
                        if !matrix::approx_eq(a, b, 100.0 * tol.eps_eq) {
                            return Err(Failure::from(PovmError::CertificateInvalid(
                                "decomposition does not recombine".into(),
                            )));
                        }
                    }
                }
            }
            Ok(Some(Report {
                verdicts: json!({
                    "cstar_extreme": report.cstar_extreme,
                    "is_pvm": p.is_pvm(tol),
                }),
                certificate: serde_json::to_value(&certificate).unwrap(),
                exit_code: if report.cstar_extreme { 0 } else { 1 },
            }))
        }
        Command::Rn(args) => {
            let nu = read_povm(&args.input)?;
            let mu = read_povm_file(&args.input2)?;
            match convexity::radon_nikodym(&nu, &mu, tol) {
                Ok(derivative) => {
                    let doc = documents::derivative_to_document(&derivative);
                    if verify {
                        documents::parse_derivative(&serde_json::to_string(&doc).unwrap())?;
                    }
                    Ok(Some(Report {
                        verdicts: json!({ "dominated": true }),
                        certificate: serde_json::to_value(&doc).unwrap(),
                        exit_code: 0,
                    }))
                }
                Err(PovmError::NotDominated(label, reason)) => Ok(Some(Report {
                    verdicts: json!({
                        "dominated": false,
                        "violating_outcome": label,
                        "reason": reason,
                    }),
                    certificate: serde_json::Value::Null,
                    exit_code: 1,
                })),
                Err(e) => Err(Failure::from(e)),
            }
        }
        Command::Zhou(args) => {
            let mu = read_povm(&args.input)?;
            let nu = read_povm_file(&args.input2)?;
            match convexity::zhou_test(&mu, &nu, tol, DEFAULT_WORD_CAP)? {
                ZhouOutcome::Exists { s } => Ok(Some(Report {
                    verdicts: json!({ "exists_s": true }),
                    certificate: json!({ "S": documents::matrix_to_data(&s) }),
                    exit_code: 0,
                })),
                ZhouOutcome::Refuted { word, traces } => Ok(Some(Report {
                    verdicts: json!({ "exists_s": false }),
                    certificate: json!({
                        "word": word,
                        "traces": [[traces.0.re, traces.0.im], [traces.1.re, traces.1.im]],
                    }),
                    exit_code: 1,
                })),
            }
        }
        Command::Probe(args) => {
            let p = read_povm(&args.input)?;
            let subset: Vec<String> = args
                .subset
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if subset.is_empty() {
                return Err(Failure::input("--subset must name at least one outcome"));
            }
            let (r, s) = match (args.r, args.s) {
                (Some(r), Some(s)) => (r, s),
                (None, None) => convexity::choose_probe_params(&p, &subset, tol)?,
                _ => return Err(Failure::input("--r and --s must be given together")),
            };
            let nu = convexity::spectral_probe(&p, &subset, r, s, tol)?;
            emit(&cli.out, &documents::povm_to_json(&nu))?;
            Ok(None)
        }
        Command::Km(args) => {
            let p = read_povm(&args.input)?;
            let combination = convexity::krein_milman_decompose(&p, tol)?;
            let doc = documents::combination_to_document(&combination);
            if verify {
                let round =
                    documents::parse_combination(&serde_json::to_string(&doc).unwrap(), tol)?;
                let back = convexity::combine(&round, tol)?;
                for (a, b) in back.effects().iter().zip(p.effects()) {
                    if !matrix::approx_eq(a, b, 100.0 * tol.eps_eq) {
                        return Err(Failure::from(PovmError::CertificateInvalid(
                            "Krein-Milman terms do not recombine".into(),
                        )));
                    }
                }
            }
            Ok(Some(Report {
                verdicts: json!({
                    "terms": combination.terms.len(),
                    "proper": combination.proper,
                }),
                certificate: serde_json::to_value(&doc).unwrap(),
                exit_code: 0,
            }))
        }
        Command::Choi(args) => {
            let p = read_povm(&args.input)?;
            let u = ucp::ucp_from_povm(&p, tol)?;
            let choi = u.choi();
            let is_cp = u.is_cp(tol)?;
            let is_hom = u.is_homomorphism(tol)?;
            Ok(Some(Report {
                verdicts: json!({ "is_cp": is_cp, "is_homomorphism": is_hom }),
                certificate: json!({ "choi": documents::matrix_to_data(&choi) }),
                exit_code: if is_cp { 0 } else { 1 },
            }))
        }
        Command::Equiv(args) => {
            let p1 = read_povm(&args.input)?;
            let p2 = read_povm_file(&args.input2)?;
            let cert = convexity::unitary_equivalent(&p1, &p2, tol, DEFAULT_WORD_CAP)?;
            if verify {
                if let Equivalence::Equivalent { unitary } = &cert.verdict {
                    for (a, b) in p1.effects().iter().zip(p2.effects()) {
                        let conj = unitary.adjoint() * a * unitary;
                        if !matrix::approx_eq(&conj, b, 100.0 * tol.eps_eq) {
                            return Err(Failure::from(PovmError::CertificateInvalid(
                                "equivalence unitary".into(),
                            )));
                        }
                    }
                }
            }
            let doc = documents::equivalence_to_document(&cert);
            let verdict = doc.verdict.clone();
            Ok(Some(Report {
                verdicts: json!({ "verdict": verdict }),
                certificate: serde_json::to_value(&doc).unwrap(),
                exit_code: if cert.is_equivalent() { 0 } else { 1 },
            }))
        }
        Command::Iso(args) => {
            let p1 = read_povm(&args.input)?;
            let p2 = read_povm_file(&args.input2)?;
            match p1.measure_isomorphic(&p2, tol) {
                Some(witness) => Ok(Some(Report {
                    verdicts: json!({ "isomorphic": true }),
                    certificate: json!({ "pairs": witness.pairs }),
                    exit_code: 0,
                })),
                None => Ok(Some(Report {
                    verdicts: json!({ "isomorphic": false }),
                    certificate: serde_json::Value::Null,
                    exit_code: 1,
                })),
            }
        }
        Command::Gen(args) => {
            let p = match args.kind.as_str() {
                "random" => {
                    let d = args.dim.ok_or_else(|| Failure::input("--dim required"))?;
                    let n = args.n.ok_or_else(|| Failure::input("--n required"))?;
                    if d == 0 || n == 0 {
                        return Err(Failure::input("--dim and --n must be positive"));
                    }
                    generators::random_povm(d, n, cli.seed)
                }
                "pvm" => {
                    let d = args.dim.ok_or_else(|| Failure::input("--dim required"))?;
                    let n = args.n.ok_or_else(|| Failure::input("--n required"))?;
                    if d == 0 || n == 0 {
                        return Err(Failure::input("--dim and --n must be positive"));
                    }
                    generators::random_pvm(d, n, cli.seed)
                }
                "trine" => generators::trine_povm(),
                "toeplitz" => {
                    let m = args.m.ok_or_else(|| Failure::input("--m required"))?;
                    let arcs = args.arcs.ok_or_else(|| Failure::input("--arcs required"))?;
                    if arcs == 0 {
                        return Err(Failure::input("--arcs must be positive"));
                    }
                    generators::toeplitz_povm(m, &generators::equal_arcs(arcs))?
                }
                other => {
                    return Err(Failure::input(format!(
                        "unknown kind `{other}`; expected random|pvm|trine|toeplitz"
                    )))
                }
            };
            emit(&cli.out, &documents::povm_to_json(&p))?;
            Ok(None)
        }
    }
}
