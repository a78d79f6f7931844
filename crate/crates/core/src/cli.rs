//! Command-line front end. Every command emits one JSON report; the exit
//! code is 0 when all checks pass, 1 when some check fails, 2 on usage
//! errors and 3 when a computation aborts (resource caps included).

use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::hsd::{
    compare_explicit_generic, explicit_hsd, kernel_basis, polyharmonic_order, verify_corollary,
    verify_factorization_numeric, verify_identities, verify_induction_dims,
};
use crate::opalgebra::{
    canonical_path_operator, certificate_is_sound, expand_laplace_power, normal_form, vanish_outside_box,
    verify_path_independence,
};
use crate::repthy::{pad, rank_for, simplicial_harmonic_basis, simplicial_monogenic_basis, weyl_dim, DEFAULT_CAP};
use crate::weights::{
    count_paths, dominant_below, dominant_weights, enumerate_paths, in_box, weight_box, Direction, Weight,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hsdfactor", version, about = "Exact factorization of Laplace powers through higher spin Dirac operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Weight entries, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<i64>>,
    /// Pad weights with zeros to this rank.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Odd dimension of the underlying Euclidean space.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long)]
    pub power: Option<usize>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub json: Option<std::path::PathBuf>,
    /// Cap on enumerated paths.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// The box B(μ).
    Box(Common),
    /// Dominant paths from ν (default zero) up to μ.
    Paths {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        nu: Option<Vec<i64>>,
    },
    /// Factorization certificate for Δ_μ^p.
    Factorize(Common),
    /// Dimensions of S_λ by Weyl's formula and by explicit realization.
    Dims(Common),
    /// Kernel of the explicit HSD operator on one x-degree.
    Kernel(Common),
    /// Verification suites.
    Verify {
        suite: Suite,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        nu: Option<Vec<i64>>,
        /// Sweep all dominant μ with entries up to this bound (path, box).
        #[arg(long)]
        max_entry: Option<i64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Path,
    Box,
    Theorem,
    Induction,
    Corollary,
}

#[derive(Serialize, Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub command: String,
    pub parameters: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_ms: u128,
}

enum Failure {
    Usage(String),
    Abort(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidDimension(_) | Error::RankMismatch(..) | Error::NotDominant(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Abort(other),
        }
    }
}

type Outcome = std::result::Result<(Value, Value, Vec<Check>), Failure>;

fn check(name: impl Into<String>, pass: bool) -> Check {
    Check { name: name.into(), pass }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn weight_arg(entries: &Option<Vec<i64>>, flag: &str, rank: Option<usize>) -> std::result::Result<Weight, Failure> {
    let entries = entries.clone().ok_or_else(|| Failure::Usage(format!("--{flag} is required")))?;
    if entries.is_empty() {
        return Err(Failure::Usage(format!("--{flag} must not be empty")));
    }
    let w = Weight::new(entries);
    let w = match rank {
        Some(n) => pad(&w, n).map_err(|_| Failure::Usage(format!("--{flag} is longer than --rank {n}")))?,
        None => w,
    };
    if !w.is_dominant() {
        return Err(Failure::Usage(format!("--{flag} {w} is not dominant")));
    }
    Ok(w)
}

fn required(value: Option<usize>, flag: &str) -> std::result::Result<usize, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn with_rank_of_m(w: &Weight, m: usize) -> std::result::Result<Weight, Failure> {
    let n = rank_for(m).map_err(|_| Failure::Usage(format!("--m {m} must be odd and at least 3")))?;
    pad(w, n).map_err(|_| Failure::Usage(format!("--mu {w} has rank above {n} for --m {m}")))
}

fn run_box(c: &Common) -> Outcome {
    let mu = weight_arg(&c.mu, "mu", c.rank)?;
    let b = weight_box(&mu)?;
    Ok((json!({ "mu": mu }), json!({ "count": b.len(), "box": b }), Vec::new()))
}

fn run_paths(c: &Common, nu: &Option<Vec<i64>>) -> Outcome {
    let mu = weight_arg(&c.mu, "mu", c.rank)?;
    let nu = match nu {
        Some(_) => weight_arg(nu, "nu", Some(mu.rank()))?,
        None => Weight::zero(mu.rank()),
    };
    let total = count_paths(&nu, &mu)?;
    let e = enumerate_paths(&nu, &mu, c.cap)?;
    let checks = vec![check("enumeration_complete", !e.truncated)];
    Ok((
        json!({ "mu": mu, "nu": nu, "cap": c.cap }),
        json!({ "count": total.to_string(), "truncated": e.truncated, "paths": e.paths.iter().map(|p| &p.changes).collect::<Vec<_>>() }),
        checks,
    ))
}

fn run_factorize(c: &Common) -> Outcome {
    let mu = weight_arg(&c.mu, "mu", c.rank)?;
    let p = required(c.power, "power")?;
    let cert = expand_laplace_power(&mu, p)?;
    let sound = certificate_is_sound(&cert)?;
    let support_in_box = cert.support().iter().all(|l| in_box(&mu, l));
    let checks = vec![check("reexpansion_reproduces_laplace_power", sound), check("support_in_box", support_in_box)];
    Ok((json!({ "mu": mu, "power": p }), to_value(&cert), checks))
}

fn run_dims(c: &Common) -> Outcome {
    let lambda = with_rank_of_m(&weight_arg(&c.mu, "mu", c.rank)?, c.m)?;
    let weyl = weyl_dim(&lambda.shifted(), c.m)?;
    let mono = simplicial_monogenic_basis(&lambda, c.m, DEFAULT_CAP)?;
    let harm = simplicial_harmonic_basis(&lambda, c.m, DEFAULT_CAP)?;
    let weyl_v = weyl_dim(&lambda, c.m)?;
    let checks = vec![
        check("monogenic_matches_weyl", mono.dim() as u128 == weyl),
        check("harmonic_fibre_matches_weyl", harm.dim() as u128 == weyl_v * (1u128 << rank_for(c.m)?)),
    ];
    Ok((
        json!({ "lambda": lambda, "m": c.m }),
        json!({ "weyl_dim_spin": weyl.to_string(), "simplicial_monogenic_dim": mono.dim(), "weyl_dim_vector": weyl_v.to_string(), "harmonic_tensor_spinor_dim": harm.dim() }),
        checks,
    ))
}

fn run_kernel(c: &Common) -> Outcome {
    let lambda = with_rank_of_m(&weight_arg(&c.mu, "mu", c.rank)?, c.m)?;
    let h = required(c.degree, "degree")?;
    let op = explicit_hsd(&lambda, c.m)?;
    let basis = kernel_basis(&op, h)?;
    let orders = basis.iter().map(polyharmonic_order).collect::<crate::error::Result<Vec<_>>>()?;
    let bound = lambda.first() as usize + 1;
    let checks = vec![check("polyharmonic_bound", orders.iter().all(|o| o.is_some_and(|p| p <= bound)))];
    Ok((
        json!({ "lambda": lambda, "m": c.m, "degree": h }),
        json!({ "kernel_dim": basis.len(), "fibre_dim": op.fibre_in.len(), "polyharmonic_orders": orders, "bound": bound }),
        checks,
    ))
}

fn sweep_weights(c: &Common, max_entry: Option<i64>) -> std::result::Result<Vec<Weight>, Failure> {
    match (&c.mu, max_entry) {
        (Some(_), _) => Ok(vec![weight_arg(&c.mu, "mu", c.rank)?]),
        (None, Some(e)) => {
            let rank = c.rank.ok_or_else(|| Failure::Usage("--max-entry needs --rank".into()))?;
            Ok(dominant_weights(rank, e))
        }
        (None, None) => Err(Failure::Usage("--mu or --rank with --max-entry is required".into())),
    }
}

fn verify_path(c: &Common, nu: &Option<Vec<i64>>, max_entry: Option<i64>) -> Outcome {
    let mus = sweep_weights(c, max_entry)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for mu in &mus {
        let nus = match nu {
            Some(_) => vec![weight_arg(nu, "nu", Some(mu.rank()))?],
            None => dominant_below(mu),
        };
        for nu in nus {
            let r = verify_path_independence(&nu, mu, c.cap)?;
            checks.push(check(format!("path_independence {nu} -> {mu}"), r.pass));
            rows.push(json!({ "lower": nu, "upper": mu, "paths": r.path_count, "truncated": r.truncated,
                "forward": r.forward.first().map(|f| &f.normal_form), "reverse": r.reverse.first().map(|f| &f.normal_form) }));
        }
    }
    Ok((json!({ "mu": c.mu, "rank": c.rank, "max_entry": max_entry }), json!({ "pairs": rows }), checks))
}

fn verify_box(c: &Common, max_entry: Option<i64>) -> Outcome {
    let mus = sweep_weights(c, max_entry)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for mu in &mus {
        for lambda in dominant_below(mu) {
            if in_box(mu, &lambda) {
                let up = normal_form(&canonical_path_operator(&lambda, mu, Direction::Forward)?);
                let down = normal_form(&canonical_path_operator(&lambda, mu, Direction::Reverse)?);
                let pass = !up.is_zero() && !down.is_zero();
                checks.push(check(format!("nonzero_inside {lambda} in B({mu})"), pass));
                rows.push(json!({ "mu": mu, "lambda": lambda, "in_box": true, "forward_zero": up.is_zero(), "reverse_zero": down.is_zero() }));
            } else {
                let t = vanish_outside_box(mu, &lambda)?;
                let pass = t.forward_zero && t.reverse_zero && t.corner_vanishes;
                checks.push(check(format!("zero_outside {lambda} not in B({mu})"), pass));
                rows.push(json!({ "mu": mu, "lambda": lambda, "in_box": false, "forward_zero": t.forward_zero,
                    "reverse_zero": t.reverse_zero, "reroute_index": t.reroute.index }));
            }
        }
    }
    Ok((json!({ "mu": c.mu, "rank": c.rank, "max_entry": max_entry }), json!({ "pairs": rows }), checks))
}

fn verify_identities_cmd(c: &Common) -> Outcome {
    let lambda = with_rank_of_m(&weight_arg(&c.mu, "mu", c.rank)?, c.m)?;
    let degree = c.degree.unwrap_or(3);
    let r = verify_identities(&lambda, c.m, degree)?;
    let mut checks: Vec<Check> = r
        .checks
        .iter()
        .map(|k| check(format!("identity{} {} <- {} degree {}", k.identity, k.target, k.source, k.degree), k.pass))
        .collect();
    checks.push(check("far_blocks_vanish", r.far_blocks_vanish));
    let depth = lambda.entries.iter().filter(|e| **e != 0).count();
    if depth <= 2 {
        let a = compare_explicit_generic(&lambda, c.m, degree)?;
        checks.push(check("explicit_matches_projector_construction", a.pass));
        return Ok((json!({ "lambda": lambda, "m": c.m, "degree": degree }), json!({ "identities": r, "agreement": a }), checks));
    }
    Ok((json!({ "lambda": lambda, "m": c.m, "degree": degree }), json!({ "identities": r }), checks))
}

fn verify_theorem(c: &Common) -> Outcome {
    let mu = weight_arg(&c.mu, "mu", c.rank)?;
    let p = required(c.power, "power")?;
    let degree = c.degree.unwrap_or(2 * p);
    let r = verify_factorization_numeric(&mu, p, c.m, degree)?;
    let mut checks = vec![check("normalization_solvable", r.solvable)];
    checks.extend(r.degrees.iter().map(|(h, ok)| check(format!("factorization degree {h}"), *ok)));
    Ok((json!({ "mu": mu, "m": c.m, "power": p, "degree": degree }), to_value(&r), checks))
}

fn verify_induction(c: &Common) -> Outcome {
    let k = c.mu.as_ref().and_then(|v| v.first().copied()).unwrap_or(1);
    if k < 0 {
        return Err(Failure::Usage("--mu must be a non-negative k".into()));
    }
    let max_h = c.degree.unwrap_or(3);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for h in 0..=max_h as u32 {
        let r = verify_induction_dims(k as u32, h, c.m)?;
        checks.push(check(format!("dims k={k} h={h}"), r.dims_pass));
        checks.push(check(format!("inversion k={k} h={h}"), r.inversion_pass));
        rows.push(r);
    }
    Ok((json!({ "k": k, "m": c.m, "max_degree": max_h }), json!({ "degrees": rows }), checks))
}

fn verify_corollary_cmd(c: &Common) -> Outcome {
    let lambda = with_rank_of_m(&weight_arg(&c.mu, "mu", c.rank)?, c.m)?;
    let degree = c.degree.unwrap_or(3);
    let r = verify_corollary(&lambda, c.m, degree)?;
    let checks = vec![check("polyharmonic_bound", r.bound_holds), check("bound_attained", r.sharp)];
    Ok((json!({ "lambda": lambda, "m": c.m, "degree": degree }), to_value(&r), checks))
}

fn dispatch(cmd: &Command) -> (String, &Common, Outcome) {
    match cmd {
        Command::Box(c) => ("box".into(), c, run_box(c)),
        Command::Paths { common, nu } => ("paths".into(), common, run_paths(common, nu)),
        Command::Factorize(c) => ("factorize".into(), c, run_factorize(c)),
        Command::Dims(c) => ("dims".into(), c, run_dims(c)),
        Command::Kernel(c) => ("kernel".into(), c, run_kernel(c)),
        Command::Verify { suite, common, nu, max_entry } => {
            let out = match suite {
                Suite::Identities => verify_identities_cmd(common),
                Suite::Path => verify_path(common, nu, *max_entry),
                Suite::Box => verify_box(common, *max_entry),
                Suite::Theorem => verify_theorem(common),
                Suite::Induction => verify_induction(common),
                Suite::Corollary => verify_corollary_cmd(common),
            };
            let name = suite.to_possible_value().expect("named").get_name().to_string();
            (format!("verify {name}"), common, out)
        }
    }
}

/// Runs a parsed command and returns the report (absent on failure) with
/// the exit code.
pub fn execute(cli: &Cli) -> (Option<Report>, i32, Option<String>) {
    let start = Instant::now();
    let (command, _, outcome) = dispatch(&cli.command);
    match outcome {
        Ok((parameters, results, checks)) => {
            let pass = checks.iter().all(|c| c.pass);
            let report = Report { command, parameters, results, checks, pass, wall_time_ms: start.elapsed().as_millis() };
            (Some(report), if pass { EXIT_PASS } else { EXIT_FAIL }, None)
        }
        Err(Failure::Usage(msg)) => (None, EXIT_USAGE, Some(format!("usage error: {msg}"))),
        Err(Failure::Abort(e)) => {
            let kind = if matches!(e, Error::ResourceCap { .. }) { "resource cap" } else { "computation aborted" };
            (None, EXIT_ABORT, Some(format!("{kind}: {e}")))
        }
    }
}

/// Entry point shared by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let (report, code, message) = execute(&cli);
    if let Some(msg) = message {
        eprintln!("{msg}");
    }
    if let Some(report) = report {
        let text = serde_json::to_string_pretty(&report).expect("reports serialize");
        let target = match &cli.command {
            Command::Box(c) | Command::Factorize(c) | Command::Dims(c) | Command::Kernel(c) => &c.json,
            Command::Paths { common, .. } | Command::Verify { common, .. } => &common.json,
        };
        match target {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text + "\n") {
                    eprintln!("cannot write {}: {e}", path.display());
                    return EXIT_USAGE;
                }
                eprintln!("{}: {}", report.command, if report.pass { "pass" } else { "FAIL" });
            }
            None => {
                let mut out = std::io::stdout().lock();
                let _ = writeln!(out, "{text}");
            }
        }
    }
    code
}
