//! Command-line front end. Every run writes exactly one JSON report.
//!
//! Exit status: 0 on success, 1 on an input error, 2 when a construction or
//! check fails verification.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::crossnorm::{cross_norm_value, decomposition_cost, DiagonalScaling};
use crate::decomp::{
    bell_example2, bell_phase_point, bell_stabiliser, equal_norm_check, theorem1_decompose, theorem2_decompose,
    theorem2_weights, IsometryMatrix, SeparableDecomposition,
};
use crate::error::Error;
use crate::feasibility::{deletion_minimality, StateSpace};
use crate::lhv::{born_deviation, born_probability, build_lhv, lhv_probability, povm_scan, PovmFamily, BORN_TOLERANCE};
use crate::linalg::random::{random_positive, rng};
use crate::linalg::state::{
    bell_state, max_entangled, maximally_mixed, random_density, random_pure_state, two_qubit_schmidt_state,
    BipartiteState, Povm,
};
use crate::schmidt::{operator_schmidt_of, reconstruct, OperatorSchmidt};
use crate::theorem3::{
    build_maps, build_w_basis, check_condition_a, check_condition_b, construct_t, default_reference_basis,
    theorem3_decompose, transported_cost,
};
use crate::tolerance::{Tolerances, INFEASIBLE_MARGIN};

/// Largest local dimension accepted from the command line.
const MAX_DIM: usize = 8;

#[derive(Parser, Debug)]
#[command(name = "sepdecomp", version, about = "Smallest generalised separable decompositions and LHV models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed for every randomised stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Generic tolerance for identities and orthogonality [default: 1e-9].
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Hermiticity tolerance [default: 1e-9].
    #[arg(long, global = true)]
    pub herm: Option<f64>,
    /// Trace tolerance [default: 1e-9].
    #[arg(long, global = true)]
    pub trace: Option<f64>,
    /// Allowed negative eigenvalue magnitude [default: 1e-9].
    #[arg(long, global = true)]
    pub psd: Option<f64>,
    /// Relative SVD reconstruction tolerance [default: 1e-12].
    #[arg(long, global = true)]
    pub svd: Option<f64>,
    /// Relative decomposition reconstruction tolerance [default: 1e-9].
    #[arg(long, global = true)]
    pub recon: Option<f64>,
    /// Schmidt coefficients at or below this are dropped [default: 1e-10].
    #[arg(long = "rank-cutoff", global = true)]
    pub rank_cutoff: Option<f64>,
    /// Largest residual accepted as feasible [default: 1e-8].
    #[arg(long, global = true)]
    pub feas: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Operator-Schmidt decomposition of a state.
    Schmidt(StateArgs),
    /// Cross-norm value and its attainment for several scalings R.
    Crossnorm(CrossnormArgs),
    /// Build a decomposition with Theorem 1, 2 or 3.
    Decompose(BuildArgs),
    /// Check that no generator can be deleted from a decomposition's spaces.
    VerifyMinimal(SourceArgs),
    /// Check conditions (A) and (B).
    Conditions(ConditionsArgs),
    /// Build and validate a local hidden variable model.
    Lhv(LhvArgs),
    /// Attempt LHV models over a family of POVM pairs.
    Scan(ScanArgs),
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    /// bell | max-entangled:d | random:seed:dA:dB | random-pure:seed:dA:dB |
    /// schmidt:theta | maximally-mixed:dA:dB | path to a state JSON file
    #[arg(long)]
    pub state: String,
}

#[derive(Args, Debug, Clone)]
pub struct CrossnormArgs {
    /// State spec, as for `schmidt`.
    #[arg(long)]
    pub state: String,
    /// Extra scalings beyond identity, sqrtS and seed:<seed>.
    #[arg(long = "R")]
    pub r: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct BuildArgs {
    /// State spec, as for `schmidt`.
    #[arg(long)]
    pub state: Option<String>,
    /// Construction to use: 1, 2 or 3.
    #[arg(long, default_value_t = 2)]
    pub theorem: u8,
    /// identity | seed:N[:cols] | real-seed:N | phase-point | dft[:cols] | path
    #[arg(long, default_value = "identity")]
    pub unitary: String,
    /// identity | sqrtS | uniform:x | seed:N | path
    #[arg(long = "R", default_value = "identity")]
    pub r: String,
    /// Scale c, or a comma-separated list of cₖ for Theorem 1.
    #[arg(long)]
    pub c: Option<String>,
    /// Comma-separated weights pₖ for Theorem 1.
    #[arg(long)]
    pub p: Option<String>,
    /// Seeded rotation of T for Theorem 3.
    #[arg(long = "rotation-seed")]
    pub rotation_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// stabiliser | example2 | phase-point | path; otherwise built from --state.
    #[arg(long)]
    pub decomposition: Option<String>,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ConditionsArgs {
    /// State spec, as for `schmidt`.
    #[arg(long)]
    pub state: String,
    /// Sampled pure states for the direct condition-B check.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long = "rotation-seed")]
    pub rotation_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct LhvArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// trivial[:d] | x | y | z | bloch:nx,ny,nz | magic:c | magic-transposed:c | computational:d | path
    #[arg(long = "povm-a", default_value = "z")]
    pub povm_a: String,
    #[arg(long = "povm-b", default_value = "z")]
    pub povm_b: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    Pauli,
    Random,
    Magic,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value = "pauli")]
    pub family: FamilyArg,
    /// Random pairs, or magic grid steps.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub id: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Claim {
    fn at_most(id: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { id: id.into(), value, tolerance, pass: value <= tolerance }
    }

    fn at_least(id: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { id: id.into(), value, tolerance: bound, pass: value >= bound }
    }

    fn holds(id: impl Into<String>, ok: bool) -> Self {
        Self { id: id.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 0.0, pass: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
struct ErrorReport {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    message: String,
}

#[derive(Clone, Debug, Serialize)]
struct Report {
    command: &'static str,
    seed: u64,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    claims: Vec<Claim>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorReport>,
}

/// Finished run: exit status and the serialised report.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    pub out: Option<PathBuf>,
}

enum Failure {
    Input { field: String, message: String },
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn input(field: &str, message: impl Into<String>) -> Failure {
    Failure::Input { field: field.to_string(), message: message.into() }
}

/// Wraps a library error raised while interpreting a flag.
fn at<T>(field: &str, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Error::ConditionFailed { .. } | Error::Reconstruction(_) | Error::Positivity { .. } | Error::BornMismatch(_) => {
            Failure::Lib(e)
        }
        other => input(field, other.to_string()),
    })
}

fn classify(e: &Error) -> (i32, &'static str) {
    match e {
        Error::ConditionFailed { .. }
        | Error::Reconstruction(_)
        | Error::Positivity { .. }
        | Error::BornMismatch(_)
        | Error::NotHermitisable
        | Error::SvdNonConvergence
        | Error::IterationCap(_) => (2, "verification"),
        _ => (1, "input"),
    }
}

struct Section {
    result: Value,
    claims: Vec<Claim>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialise")
}

fn parse_num<T: FromStr>(s: &str, field: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| input(field, format!("cannot parse `{s}`: {e}")))
}

fn parse_dim(s: &str, field: &str) -> CliResult<usize> {
    let d: usize = parse_num(s, field)?;
    if d == 0 || d > MAX_DIM {
        return Err(input(field, format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    Ok(d)
}

fn parse_list(s: &str, field: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|x| parse_num(x, field)).collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str, field: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| input(field, format!("cannot read `{path}`: {e}")))?;
    serde_json::from_str(&text).map_err(|e| input(field, format!("`{path}`: {e}")))
}

fn tolerances(g: &GlobalArgs) -> CliResult<Tolerances> {
    let mut t = Tolerances::default();
    let overrides = [
        ("--eps", g.eps, &mut t.eps),
        ("--herm", g.herm, &mut t.herm),
        ("--trace", g.trace, &mut t.trace),
        ("--psd", g.psd, &mut t.psd),
        ("--svd", g.svd, &mut t.svd),
        ("--recon", g.recon, &mut t.recon),
        ("--rank-cutoff", g.rank_cutoff, &mut t.rank_cutoff),
        ("--feas", g.feas, &mut t.feas),
    ];
    for (flag, value, slot) in overrides {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(input(flag, format!("tolerance must be finite and positive, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(t)
}

fn parse_state(spec: &str, tol: &Tolerances) -> CliResult<BipartiteState> {
    const F: &str = "--state";
    let parts: Vec<&str> = spec.split(':').collect();
    let state = match parts.as_slice() {
        ["bell"] => bell_state(),
        ["max-entangled", d] => max_entangled(parse_dim(d, F)?),
        ["random", seed, da, db] => random_density(parse_num(seed, F)?, parse_dim(da, F)?, parse_dim(db, F)?),
        ["random-pure", seed, da, db] => random_pure_state(parse_num(seed, F)?, parse_dim(da, F)?, parse_dim(db, F)?),
        ["schmidt", theta] => two_qubit_schmidt_state(parse_num(theta, F)?),
        ["maximally-mixed", da, db] => maximally_mixed(parse_dim(da, F)?, parse_dim(db, F)?),
        _ => {
            let s: BipartiteState = read_json(spec, F)?;
            let (da, db) = s.dims();
            if da > MAX_DIM || db > MAX_DIM {
                return Err(input(F, format!("local dimensions {da}x{db} exceed {MAX_DIM}")));
            }
            s
        }
    };
    // Re-validate under the run's tolerances.
    at(F, BipartiteState::with_tolerances(state.d_a(), state.d_b(), state.rho().clone(), tol, true))
}

fn schmidt_of(state: &BipartiteState, tol: &Tolerances) -> CliResult<OperatorSchmidt> {
    at("--state", operator_schmidt_of(state.rho(), state.d_a(), state.d_b(), tol.rank_cutoff, tol))
}

fn parse_unitary(spec: &str, d: usize, tol: &Tolerances) -> CliResult<IsometryMatrix> {
    const F: &str = "--unitary";
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["identity"] => Ok(IsometryMatrix::identity(d)),
        ["seed", n] => at(F, IsometryMatrix::haar(d, d, parse_num(n, F)?)),
        ["seed", n, cols] => at(F, IsometryMatrix::haar(d, parse_num(cols, F)?, parse_num(n, F)?)),
        ["real-seed", n] => Ok(IsometryMatrix::real_haar(d, parse_num(n, F)?)),
        ["phase-point"] => Ok(IsometryMatrix::bell_phase_point()),
        ["dft"] => at(F, IsometryMatrix::dft_rows(d, d)),
        ["dft", cols] => at(F, IsometryMatrix::dft_rows(d, parse_num(cols, F)?)),
        _ => {
            let m = read_json(spec, F)?;
            at(F, IsometryMatrix::with_tolerance(m, tol.eps))
        }
    }
}

fn parse_scaling(spec: &str, os: &OperatorSchmidt) -> CliResult<DiagonalScaling> {
    const F: &str = "--R";
    let d = os.rank();
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["identity"] => Ok(DiagonalScaling::identity(d)),
        ["sqrtS"] => at(F, DiagonalScaling::sqrt_s(os)),
        ["uniform", x] => at(F, DiagonalScaling::uniform(d, parse_num(x, F)?)),
        ["seed", n] => at(F, DiagonalScaling::new(random_positive(d, 3.0, &mut rng(parse_num(n, F)?)))),
        _ => {
            let r: Vec<f64> = read_json(spec, F)?;
            at(F, DiagonalScaling::new(r))
        }
    }
}

fn parse_povm(spec: &str, field: &str, tol: &Tolerances) -> CliResult<Povm> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["trivial"] => Ok(Povm::trivial(2)),
        ["trivial", d] => Ok(Povm::trivial(parse_dim(d, field)?)),
        ["x"] => Ok(Povm::pauli(1)),
        ["y"] => Ok(Povm::pauli(2)),
        ["z"] => Ok(Povm::pauli(3)),
        ["computational", d] => {
            let d = parse_dim(d, field)?;
            let effects = (0..d)
                .map(|k| {
                    let mut diag = vec![0.0; d];
                    diag[k] = 1.0;
                    crate::linalg::matrix::ComplexMatrix::real_diag(&diag)
                })
                .collect();
            Ok(Povm { dim: d, effects })
        }
        ["bloch", n] => {
            let v = parse_list(n, field)?;
            let n: [f64; 3] = v.try_into().map_err(|_| input(field, "bloch needs three components"))?;
            let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (len - 1.0).abs() > tol.eps {
                return Err(input(field, format!("Bloch vector has length {len}, expected 1")));
            }
            Ok(Povm::qubit_projective(n))
        }
        ["magic", c] => at(field, Povm::qubit_two_outcome(parse_num(c, field)?, crate::lhv::MAGIC_BLOCH)),
        ["magic-transposed", c] => {
            at(field, Povm::qubit_two_outcome(parse_num(c, field)?, crate::lhv::MAGIC_BLOCH)).map(|p| p.transposed())
        }
        _ => {
            let p: Povm = read_json(spec, field)?;
            at(field, Povm::with_tolerances(p.dim, p.effects, tol))
        }
    }
}

/// max |tr M − 1|.
fn max_trace_deviation<'a>(ops: impl Iterator<Item = &'a crate::linalg::matrix::ComplexMatrix>) -> f64 {
    ops.map(|m| (m.trace() - 1.0).norm()).fold(0.0, f64::max)
}

struct Built {
    os: OperatorSchmidt,
    dec: SeparableDecomposition,
    result: Value,
    claims: Vec<Claim>,
}

fn build(args: &BuildArgs, seed: u64, tol: &Tolerances) -> CliResult<(BipartiteState, Built)> {
    let spec = args.state.as_deref().ok_or_else(|| input("--state", "a state is required"))?;
    let state = parse_state(spec, tol)?;
    let os = schmidt_of(&state, tol)?;
    let lambda = os.lambda_total;
    let built = match args.theorem {
        1 | 2 => {
            let r = parse_scaling(&args.r, &os)?;
            let u = parse_unitary(&args.unitary, os.rank(), tol)?;
            let n = u.cols();
            let dec = if args.theorem == 1 {
                let p = match &args.p {
                    Some(s) => parse_list(s, "--p")?,
                    None => vec![1.0 / n as f64; n],
                };
                let c = match &args.c {
                    Some(s) => {
                        let v = parse_list(s, "--c")?;
                        if v.len() == 1 {
                            vec![v[0]; n]
                        } else {
                            v
                        }
                    }
                    None => vec![1.0; n],
                };
                at("--p", theorem1_decompose(&os, &r, &u, &p, &c))?
            } else {
                if args.p.is_some() {
                    return Err(input("--p", "Theorem 2 fixes the weights; drop --p"));
                }
                let c = match &args.c {
                    Some(s) => parse_num(s, "--c")?,
                    None => 1.0,
                };
                at("--unitary", theorem2_decompose(&os, &r, &u, c))?
            };
            let cost = at("--R", decomposition_cost(&dec, &r))?;
            let mut claims = vec![
                Claim::at_most("reconstruction_residual", dec.relative_residual(state.rho()), tol.recon),
                Claim::at_most("cost_equals_cross_norm", (cost - lambda).abs(), tol.eps * lambda.max(1.0)),
            ];
            let mut result = json!({ "theorem": args.theorem, "lambda_total": lambda, "cost": cost });
            if args.theorem == 2 {
                let eq = at("--R", equal_norm_check(&dec, &r, Some(&os), tol))?;
                let weights = theorem2_weights(&os, &u);
                let wdev = weights.iter().zip(&dec.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                claims.push(Claim::holds("equal_norms", eq.pass));
                claims.push(Claim::at_most("weights_match", wdev, 1e-12));
                claims.push(Claim::at_most("doubly_stochastic", u.doubly_stochastic_residual(), 1e-10));
                result["equal_norms"] = to_value(&eq);
            }
            Built { os, dec, result, claims }
        }
        3 => {
            let a = at("--state", check_condition_a(&os, tol))?;
            let b = at("--state", check_condition_b(&os, 0, seed, tol))?;
            let ta = construct_t(&a, args.rotation_seed)?;
            let maps = at("--state", build_maps(&os, &default_reference_basis(os.d_a)))?;
            let w = build_w_basis(&maps, &ta)?;
            let dec = theorem3_decompose(&maps, &w, tol)?;
            let cost = transported_cost(&maps, &dec)?;
            let d = maps.dim() as f64;
            let claims = vec![
                Claim::holds("condition_b", b.pass),
                Claim::at_most("local_unit_trace", max_trace_deviation(dec.a.iter().chain(&dec.b)), tol.eps),
                Claim::at_most("w_orthogonality", w.orthogonality_residual(), tol.eps),
                Claim::at_most("reconstruction_residual", dec.relative_residual(state.rho()), tol.recon),
                Claim::at_most("transported_cost_equals_d", (cost - d).abs(), tol.eps),
            ];
            let result = json!({
                "theorem": 3,
                "lambda_total": lambda,
                "cost": cost,
                "condition_b": to_value(&b),
                "alignment": to_value(&ta),
                "W": to_value(&w),
            });
            Built { os, dec, result, claims }
        }
        t => return Err(input("--theorem", format!("expected 1, 2 or 3, got {t}"))),
    };
    Ok((state, built))
}

/// Decomposition and the state it represents.
fn source(args: &SourceArgs, seed: u64, tol: &Tolerances) -> CliResult<(BipartiteState, SeparableDecomposition)> {
    const F: &str = "--decomposition";
    let dec = match args.decomposition.as_deref() {
        None => return build(&args.build, seed, tol).map(|(s, b)| (s, b.dec)),
        Some("stabiliser") => bell_stabiliser(),
        Some("example2") => bell_example2(),
        Some("phase-point") => bell_phase_point(),
        Some(path) => {
            // Accept a bare decomposition or a `decompose` report.
            let v: Value = read_json(path, F)?;
            let inner = v.get("result").and_then(|r| r.get("decomposition")).cloned().unwrap_or(v);
            let dec: SeparableDecomposition =
                serde_json::from_value(inner).map_err(|e| input(F, format!("`{path}`: {e}")))?;
            at(F, dec.validate())?;
            dec
        }
    };
    let state = match &args.build.state {
        Some(spec) => parse_state(spec, tol)?,
        None => at(F, BipartiteState::operator(dec.d_a, dec.d_b, dec.reconstruct()))?,
    };
    if state.dims() != dec.local_dims() {
        return Err(input("--state", "state and decomposition dimensions differ"));
    }
    Ok((state, dec))
}

fn cmd_schmidt(a: &StateArgs, tol: &Tolerances) -> CliResult<Section> {
    let state = parse_state(&a.state, tol)?;
    let os = schmidt_of(&state, tol)?;
    let residual = reconstruct(&os).distance(state.rho()) / state.rho().norm();
    let claims = vec![
        Claim::at_most("reconstruction_residual", residual, tol.recon),
        Claim::at_most("orthonormality_residual", os.orthonormality_residual(), tol.eps),
    ];
    Ok(Section { result: to_value(&os), claims })
}

fn cmd_crossnorm(a: &CrossnormArgs, seed: u64, tol: &Tolerances) -> CliResult<Section> {
    let state = parse_state(&a.state, tol)?;
    let os = schmidt_of(&state, tol)?;
    let lambda = os.lambda_total;
    let labels: Vec<String> =
        ["identity".to_string(), "sqrtS".to_string(), format!("seed:{seed}")].into_iter().chain(a.r.iter().cloned()).collect();
    let u = IsometryMatrix::identity(os.rank());
    let mut rows = Vec::new();
    let mut claims = Vec::new();
    for label in labels {
        let r = parse_scaling(&label, &os)?;
        let value = at("--R", cross_norm_value(&os, &r))?;
        let dec = at("--R", theorem2_decompose(&os, &r, &u, 1.0))?;
        let cost = at("--R", decomposition_cost(&dec, &r))?;
        let deviation = (cost - lambda).abs();
        claims.push(Claim::at_most(format!("attained[{label}]"), deviation, tol.eps * lambda.max(1.0)));
        rows.push(json!({ "label": label, "R": to_value(&r), "cross_norm": value, "attained_cost": cost, "deviation": deviation }));
    }
    let result = json!({
        "s": os.s,
        "lambda_total": lambda,
        "ccnr_entangled": lambda > 1.0 + tol.eps,
        "scalings": rows,
    });
    Ok(Section { result, claims })
}

fn cmd_decompose(a: &BuildArgs, seed: u64, tol: &Tolerances) -> CliResult<Section> {
    let (_, b) = build(a, seed, tol)?;
    let mut result = b.result;
    result["rank"] = json!(b.os.rank());
    result["decomposition"] = to_value(&b.dec);
    Ok(Section { result, claims: b.claims })
}

fn cmd_verify_minimal(a: &SourceArgs, seed: u64, tol: &Tolerances) -> CliResult<Section> {
    let (state, dec) = source(a, seed, tol)?;
    let (va, vb) = StateSpace::pair_from_decomposition(&dec);
    let report = deletion_minimality(&state, &va, &vb, tol)?;
    let claims = vec![
        Claim::at_most("base_feasible", report.base.residual, tol.feas),
        Claim::holds("all_deletions_infeasible", report.pass),
        Claim::at_least("min_deletion_residual", report.min_deletion_residual, INFEASIBLE_MARGIN),
    ];
    Ok(Section { result: to_value(&report), claims })
}

fn cmd_conditions(a: &ConditionsArgs, seed: u64, tol: &Tolerances) -> CliResult<Section> {
    let state = parse_state(&a.state, tol)?;
    let os = schmidt_of(&state, tol)?;
    let ca = at("--state", check_condition_a(&os, tol))?;
    let cb = at("--state", check_condition_b(&os, a.samples, seed, tol))?;
    let mut claims = vec![
        Claim::holds("condition_a", ca.pass),
        Claim::holds("condition_b", cb.pass),
        Claim::holds("sampled_bound_consistent", !cb.pass || cb.sampled_pass),
    ];
    let mut result = json!({ "condition_a": to_value(&ca), "condition_b": to_value(&cb) });
    if ca.pass {
        let ta = construct_t(&ca, a.rotation_seed)?;
        let maps = at("--state", build_maps(&os, &default_reference_basis(os.d_a)))?;
        let w = build_w_basis(&maps, &ta)?;
        let mut mapped = Vec::with_capacity(2 * w.len());
        for wk in &w.ops {
            mapped.push(maps.apply_e(wk)?);
            mapped.push(maps.apply_f(&wk.transpose())?);
        }
        claims.push(Claim::at_most("local_unit_trace", max_trace_deviation(mapped.iter()), tol.eps));
        claims.push(Claim::at_most("w_orthogonality", w.orthogonality_residual(), tol.eps));
        result["alignment"] = to_value(&ta);
    }
    Ok(Section { result, claims })
}

fn cmd_lhv(a: &LhvArgs, seed: u64, tol: &Tolerances) -> CliResult<Section> {
    let (state, dec) = source(&a.source, seed, tol)?;
    let pa = parse_povm(&a.povm_a, "--povm-a", tol)?;
    let pb = parse_povm(&a.povm_b, "--povm-b", tol)?;
    if (pa.dim, pb.dim) != dec.local_dims() {
        return Err(input("--povm-a", format!("POVMs act on {}x{}, decomposition on {}x{}", pa.dim, pb.dim, dec.d_a, dec.d_b)));
    }
    let model = build_lhv(&dec, &pa, &pb, tol)?;
    let dev = at("--state", born_deviation(&model, &state, &pa, &pb))?;
    let table = |f: &dyn Fn(usize, usize) -> crate::Result<f64>| -> CliResult<Vec<Vec<f64>>> {
        (0..pa.len()).map(|k| (0..pb.len()).map(|l| Ok(f(k, l)?)).collect()).collect()
    };
    let lhv_table = table(&|k, l| lhv_probability(&model, k, l))?;
    let born_table = table(&|k, l| born_probability(&state, &pa, &pb, k, l))?;
    let claims = vec![Claim::at_most("born_agreement", dev, BORN_TOLERANCE)];
    let result = json!({ "model": to_value(&model), "lhv": lhv_table, "born": born_table, "max_deviation": dev });
    Ok(Section { result, claims })
}

fn cmd_scan(a: &ScanArgs, seed: u64, tol: &Tolerances) -> CliResult<Section> {
    let (_, dec) = source(&a.source, seed, tol)?;
    let (family, budget) = match a.family {
        FamilyArg::Pauli => (PovmFamily::Pauli, 0),
        FamilyArg::Random => (PovmFamily::Random, a.budget.unwrap_or(32)),
        FamilyArg::Magic => (PovmFamily::Magic, a.budget.unwrap_or(20)),
    };
    let report = at("--family", povm_scan(&dec, family, seed, budget, tol))?;
    let worst = report.rows.iter().filter_map(|r| r.max_born_deviation).fold(0.0, f64::max);
    let claims = vec![Claim::at_most("born_agreement", worst, BORN_TOLERANCE)];
    Ok(Section { result: to_value(&report), claims })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Schmidt(_) => "schmidt",
        Command::Crossnorm(_) => "crossnorm",
        Command::Decompose(_) => "decompose",
        Command::VerifyMinimal(_) => "verify-minimal",
        Command::Conditions(_) => "conditions",
        Command::Lhv(_) => "lhv",
        Command::Scan(_) => "scan",
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Outcome {
    let seed = cli.global.seed;
    let command = command_name(&cli.command);
    let (tol, section) = match tolerances(&cli.global) {
        Ok(tol) => {
            let s = match &cli.command {
                Command::Schmidt(a) => cmd_schmidt(a, &tol),
                Command::Crossnorm(a) => cmd_crossnorm(a, seed, &tol),
                Command::Decompose(a) => cmd_decompose(a, seed, &tol),
                Command::VerifyMinimal(a) => cmd_verify_minimal(a, seed, &tol),
                Command::Conditions(a) => cmd_conditions(a, seed, &tol),
                Command::Lhv(a) => cmd_lhv(a, seed, &tol),
                Command::Scan(a) => cmd_scan(a, seed, &tol),
            };
            (tol, s)
        }
        Err(f) => (Tolerances::default(), Err(f)),
    };
    let (code, report) = match section {
        Ok(s) => {
            let pass = s.claims.iter().all(|c| c.pass);
            let report = Report { command, seed, tolerances: tol, result: Some(s.result), claims: s.claims, pass, error: None };
            (if pass { 0 } else { 2 }, report)
        }
        Err(f) => {
            let (code, error) = match f {
                Failure::Input { field, message } => (1, ErrorReport { kind: "input", field: Some(field), message }),
                Failure::Lib(e) => {
                    let (code, kind) = classify(&e);
                    (code, ErrorReport { kind, field: None, message: e.to_string() })
                }
            };
            (code, Report { command, seed, tolerances: tol, result: None, claims: Vec::new(), pass: false, error: Some(error) })
        }
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    Outcome { code, report: text, out: cli.global.out.clone() }
}

/// Parses arguments, runs the command, writes the report and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = execute(&cli);
    let written = match &outcome.out {
        Some(path) => fs::write(path, &outcome.report).map_err(|e| format!("cannot write `{}`: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.report.as_bytes()).map_err(|e| e.to_string())
        }
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return 1;
    }
    if outcome.code != 0 {
        if let Ok(v) = serde_json::from_str::<Value>(&outcome.report) {
            if let Some(m) = v.pointer("/error/message").and_then(Value::as_str) {
                let field = v.pointer("/error/field").and_then(Value::as_str).map(|f| format!("{f}: ")).unwrap_or_default();
                eprintln!("error: {field}{m}");
            } else {
                eprintln!("verification failed");
            }
        }
    }
    outcome.code
}
