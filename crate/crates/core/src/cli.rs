//! Command-line front end: JSON problem configs in, deterministic JSON/CSV
//! reports out.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 input error,
//! 3 resource guard.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::berezin::{berezin_report, constrained_kernel, radial_transform};
use crate::error::{Error, Result};
use crate::fixtures::{random_model_compression, random_strict_point};
use crate::fock::TruncationGrid;
use crate::linalg::{ampliate, identity, spectral_norm, subspace_distance, CMat, C64};
use crate::modeltheory::{beurling_criterion, beurling_search, characteristic_function, coincidence_check, dilate, factorize_psd, pure_model, unitary_equivalence, wold_decompose, FactorizeOutcome};
use crate::ncalg::{DomainSpec, PolyJson, PositiveRegularPolynomial};
use crate::operator::{MatrixJson, TripletMatrix};
use crate::polydomain::{check_membership, OperatorTuple, Purity, Tolerances, TupleJson};
use crate::rkhs::{gram_matrix, kernel_tail_bound, kernel_value, truncated_kernel, verify_eigen, ScalarPoint};
use crate::variety::{build_ideal_subspace, symmetric_basis_on, verify_model, IdealJson, IdealKind, IdealSpec, VarietyModel};

pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

#[derive(Debug, Parser)]
#[command(name = "ncvariety", version, about = "Truncated Fock-space models for noncommutative varieties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Degree caps per block, overriding the config, e.g. "3,2".
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Radius for radial Berezin transforms.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Worker threads for fixture batches.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for the report and exported matrices.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Include wall-clock time, which makes reports non-reproducible.
    #[arg(long, global = true)]
    pub runtime: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Membership and purity of the configured tuple.
    CheckDomain,
    /// Build N_Q and the compressed model; export with --out.
    BuildModel,
    /// Berezin kernel identities for the configured tuple.
    Berezin,
    /// Reproducing-kernel Gram matrices and eigenvector residuals at points.
    KernelEval,
    /// Invariant-subspace criterion and factorization.
    Beurling,
    /// Characteristic function and pure model.
    CharFn,
    /// Dilation with boundary part.
    Dilate,
    /// Wold decomposition of the configured tuple.
    Wold,
    /// Coincidence of the characteristic functions of two tuples.
    Coincide,
    /// Every invariant on the configured model plus seeded fixtures.
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckDomain => "check-domain",
            Command::BuildModel => "build-model",
            Command::Berezin => "berezin",
            Command::KernelEval => "kernel-eval",
            Command::Beurling => "beurling",
            Command::CharFn => "char-fn",
            Command::Dilate => "dilate",
            Command::Wold => "wold",
            Command::Coincide => "coincide",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Either a named preset or explicit defining polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DomainConfig {
    /// ball | polyball | polydisc | drury-arveson | hardy-sobolev | bergman-disc
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<PolyJson>>,
}

impl DomainConfig {
    pub fn to_spec(&self) -> Result<DomainSpec> {
        let first = |v: &[usize], what: &str| v.first().copied().ok_or_else(|| Error::Input(format!("domain.{what} is required for this preset")));
        match self.preset.as_deref() {
            Some("ball") => Ok(DomainSpec::ball(first(&self.n, "n")?, self.m.first().copied().unwrap_or(1))),
            Some("polyball") => DomainSpec::new(self.n.clone(), self.m.clone(), self.n.iter().map(|&n| PositiveRegularPolynomial::linear(n)).collect()),
            Some("polydisc") => Ok(DomainSpec::polydisc(self.k.ok_or_else(|| Error::Input("domain.k is required for polydisc".into()))?)),
            Some("drury-arveson") => Ok(DomainSpec::drury_arveson(first(&self.n, "n")?)),
            Some("hardy-sobolev") => Ok(DomainSpec::hardy_sobolev(first(&self.n, "n")?, self.k.unwrap_or(1))),
            Some("bergman-disc") => Ok(DomainSpec::bergman_disc()),
            Some(other) => Err(Error::Input(format!("domain.preset: unknown preset {other:?}"))),
            None => {
                let q = self.q.as_ref().ok_or_else(|| Error::Input("domain.q is required without a preset".into()))?;
                if q.len() != self.n.len() {
                    return Err(Error::Input(format!("domain.q has {} polynomials for {} blocks", q.len(), self.n.len())));
                }
                let polys = q.iter().zip(&self.n).map(|(p, &n)| PositiveRegularPolynomial::from_json(p, n)).collect::<Result<Vec<_>>>()?;
                DomainSpec::new(self.n.clone(), self.m.clone(), polys)
            }
        }
    }
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<IdealJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple: Option<TupleJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuples: Vec<TupleJson>,
    /// Orthonormal columns in N⊗ℂ^h, in N coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<MatrixJson>,
    /// Each point lists (re, im) pairs for every letter, block after block.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
    /// Number of seeded random fixtures in verify-all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<usize>,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
        for (name, v) in [("psdTol", cfg.tolerances.psd), ("commTol", cfg.tolerances.comm), ("rankTol", cfg.tolerances.rank)] {
            if !(v > 0.0) {
                return Err(Error::Input(format!("config: tolerances.{name} must be positive")));
            }
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    AtMost,
    AtLeast,
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, relation: Relation::AtMost, passed: value <= tolerance }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, tolerance: bound, relation: Relation::AtLeast, passed: value >= bound }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, relation: Relation::Holds, passed: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, Value>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "tolerance", "relation", "passed"]).expect("in-memory write");
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "atMost",
                Relation::AtLeast => "atLeast",
                Relation::Holds => "holds",
            };
            w.write_record([c.name.clone(), c.value.to_string(), c.tolerance.to_string(), rel.to_string(), c.passed.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// A file to write next to the report.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
}

/// Run state shared by the subcommands.
struct Ctx {
    cfg: ProblemConfig,
    spec: DomainSpec,
    tol: Tolerances,
    r: Option<f64>,
    format: Format,
    jobs: usize,
    checks: Vec<Check>,
    data: BTreeMap<String, Value>,
    artifacts: Vec<Artifact>,
}

impl Ctx {
    fn grid(&self) -> Result<TruncationGrid> {
        let caps = self.cfg.grid.clone().ok_or_else(|| Error::Input("a truncation grid is required (config.grid or --grid)".into()))?;
        if caps.len() != self.spec.k() {
            return Err(Error::Input(format!("grid has {} caps for {} blocks", caps.len(), self.spec.k())));
        }
        Ok(TruncationGrid::new(caps))
    }

    fn ideal(&self) -> Result<IdealSpec> {
        match &self.cfg.ideal {
            Some(j) => IdealSpec::from_json(j, &self.spec.n),
            None => Ok(IdealSpec::zero()),
        }
    }

    fn model(&self) -> Result<VarietyModel> {
        let grid = self.grid()?;
        let dim = grid.dimension(&self.spec.n);
        if dim > self.cfg.dimension_cap {
            return Err(Error::ResourceCap { dim, cap: self.cfg.dimension_cap });
        }
        build_ideal_subspace(&self.spec, &grid, &self.ideal()?)
    }

    fn tuple_from(&self, j: &TupleJson) -> Result<OperatorTuple> {
        let t = OperatorTuple::from_json(j, self.tol.comm)?;
        if !t.matches(&self.spec) {
            return Err(Error::Input(format!("tuple block sizes {:?} do not match the domain {:?}", t.n(), self.spec.n)));
        }
        Ok(t)
    }

    fn tuple(&self) -> Result<OperatorTuple> {
        let j = self.cfg.tuple.as_ref().ok_or_else(|| Error::Input("config.tuple is required".into()))?;
        self.tuple_from(j)
    }

    fn points(&self) -> Result<Vec<ScalarPoint>> {
        let total: usize = self.spec.n.iter().sum();
        self.cfg
            .points
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                if p.len() != total {
                    return Err(Error::Input(format!("points[{idx}] has {} coordinates, expected {total}", p.len())));
                }
                let mut it = p.iter().map(|&[re, im]| C64::new(re, im));
                let lambda = self.spec.n.iter().map(|&n| it.by_ref().take(n).collect()).collect();
                ScalarPoint::new(&self.spec, lambda)
            })
            .collect()
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn put(&mut self, key: &str, v: Value) {
        self.data.insert(key.to_string(), v);
    }

    fn export(&mut self, name: &str, m: &CMat) -> Result<()> {
        let t = TripletMatrix::from_matrix(m);
        let (file, bytes) = match self.format {
            Format::Json => (format!("{name}.json"), serde_json::to_vec_pretty(&t)?),
            Format::Csv => {
                let mut buf = Vec::new();
                t.write_csv(&mut buf).map_err(|e| Error::Numerical(e.to_string()))?;
                (format!("{name}.csv"), buf)
            }
        };
        self.artifacts.push(Artifact { name: file, bytes });
        self.data.entry("exports".into()).or_insert_with(|| json!([])).as_array_mut().expect("exports is an array").push(json!({ "name": name, "rows": m.nrows(), "cols": m.ncols() }));
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new().num_threads(self.jobs.max(1)).build().map_err(|e| Error::Input(e.to_string()))
    }
}

fn membership_checks(ctx: &mut Ctx, prefix: &str, t: &OperatorTuple) -> crate::polydomain::MembershipReport {
    let rep = check_membership(&ctx.spec, t, &ctx.tol);
    for e in &rep.min_eigen {
        let p: Vec<String> = e.p.iter().map(usize::to_string).collect();
        ctx.check(Check::at_least(format!("{prefix}minEigen[{}]", p.join(",")), e.min_eigen, -ctx.tol.psd * (1.0 + e.norm)));
    }
    ctx.check(Check::at_most(format!("{prefix}commutatorDefect"), rep.commutator_defect, ctx.tol.comm));
    rep
}

fn cmd_check_domain(ctx: &mut Ctx) -> Result<()> {
    let t = ctx.tuple()?;
    let rep = membership_checks(ctx, "", &t);
    ctx.put("membership", serde_json::to_value(&rep)?);
    ctx.put("defectRank", json!(rep.defect_rank));
    Ok(())
}

fn model_checks(ctx: &mut Ctx, model: &VarietyModel) {
    let rep = verify_model(model, &ctx.tol);
    ctx.check(Check::at_most("model.orthonormality", rep.orthonormality, 1e-10));
    ctx.check(Check::at_most("model.coInvariance", rep.co_invariance, 1e-10));
    ctx.check(Check::at_most("model.defectIdentity", rep.defect_identity, 1e-10));
    let gen = rep.generator_residuals.iter().fold(0.0_f64, |a, &b| a.max(b));
    ctx.check(Check::at_most("model.generatorResidual", gen, 1e-10));
    ctx.check(Check::holds("model.membership", rep.membership.is_member));
    ctx.check(Check::holds("model.pure", rep.membership.is_pure == Purity::Pure));
    ctx.put("model", json!({
        "ambientDimension": model.w.dim(),
        "dimN": model.dim(),
        "vacuumInN": model.vacuum_in_n,
        "leakage": model.leakage,
        "defectRank": rep.membership.defect_rank,
    }));
}

fn cmd_build_model(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    model_checks(ctx, &model);
    let manifest = model.w.basis.manifest();
    ctx.artifacts.push(Artifact { name: "manifest.json".into(), bytes: serde_json::to_vec_pretty(&manifest)? });
    ctx.export("basis_n", &model.basis_n)?;
    for (i, block) in model.s.iter().enumerate() {
        for (j, s) in block.iter().enumerate() {
            ctx.export(&format!("s_{}_{}", i + 1, j + 1), s)?;
        }
    }
    Ok(())
}

fn cmd_berezin(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let t = ctx.tuple()?;
    let rep = berezin_report(&model, &t, 3, &ctx.tol)?;
    let exact = rep.truncation_residual == 0.0;
    ctx.check(Check::at_most("kernelNorm", rep.kernel_norm, 1.0 + 1e-10));
    if exact {
        ctx.check(Check::at_most("isometryDefect", rep.isometry_defect, 1e-10));
        ctx.check(Check::at_most("intertwining", rep.intertwining, 1e-10));
        ctx.check(Check::at_most("reconstruction", rep.reconstruction, 1e-10));
        ctx.check(Check::at_most("rangeDefect", rep.range_defect, 1e-10));
    }
    ctx.put("berezin", serde_json::to_value(&rep)?);
    let data = constrained_kernel(&model, &t, &ctx.tol)?;
    ctx.export("kernel", &data.k)?;
    if let Some(r) = ctx.r {
        let mut table = Vec::new();
        let mut worst = 0.0_f64;
        for (i, block) in model.s.iter().enumerate() {
            for (j, s) in block.iter().enumerate() {
                let b = radial_transform(&model, &t, s, r, &ctx.tol)?;
                let err = spectral_norm(&(&b - &t.blocks[i][j] * C64::new(r, 0.0)));
                worst = worst.max(err);
                table.push(json!({ "block": i + 1, "letter": j + 1, "residual": err }));
            }
        }
        if exact {
            ctx.check(Check::at_most("radialTransform", worst, 1e-10));
        }
        ctx.put("radial", json!({ "r": r, "generators": table }));
    }
    Ok(())
}

fn point_json(p: &ScalarPoint) -> Value {
    json!(p.lambda.iter().map(|b| b.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn kernel_checks(ctx: &mut Ctx, model: &VarietyModel, pts: &[ScalarPoint]) -> Result<()> {
    let strict: Vec<ScalarPoint> = pts.iter().filter(|p| p.strict).cloned().collect();
    if strict.is_empty() {
        return Ok(());
    }
    let gram = gram_matrix(&ctx.spec, &strict, ctx.tol.psd)?;
    ctx.check(Check::holds("gram.psd", gram.psd));
    ctx.put("gramMinEigen", json!(gram.min_eigen));
    ctx.export("gram", &gram.matrix)?;
    let mut eig_worst = 0.0_f64;
    let mut tail_worst = f64::NEG_INFINITY;
    let mut table = Vec::new();
    for p in &strict {
        match verify_eigen(model, p) {
            Ok(res) => {
                let dev = res.iter().fold(0.0_f64, |a, r| a.max((r.residual - r.closed_form).abs()));
                eig_worst = eig_worst.max(dev);
                table.push(json!({ "point": point_json(p), "eigenResidual": res, "inVariety": true }));
            }
            Err(_) => table.push(json!({ "point": point_json(p), "inVariety": false })),
        }
    }
    let on: Vec<&ScalarPoint> = strict.iter().filter(|p| verify_eigen(model, p).is_ok()).collect();
    let caps = &model.grid().caps;
    for a in &on {
        for b in &on {
            let err = (truncated_kernel(model, b, a)? - kernel_value(&ctx.spec, b, a)?).norm();
            let bound = kernel_tail_bound(&ctx.spec, caps, b, a)?;
            tail_worst = tail_worst.max(err - bound);
        }
    }
    ctx.check(Check::at_most("eigen.closedFormDeviation", eig_worst, 1e-12));
    if !on.is_empty() && ctx.ideal()?.generators.is_empty() {
        ctx.check(Check::at_most("kernel.excessOverTailBound", tail_worst, 1e-12));
    }
    ctx.put("points", json!(table));
    Ok(())
}

fn cmd_kernel_eval(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let pts = ctx.points()?;
    if pts.is_empty() {
        return Err(Error::Input("config.points is empty".into()));
    }
    let flags: Vec<bool> = pts.iter().map(|p| p.strict).collect();
    ctx.put("strict", json!(flags));
    kernel_checks(ctx, &model, &pts)
}

fn cmd_beurling(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let subspaces: Vec<CMat> = match &ctx.cfg.subspace {
        Some(mj) => vec![mj.to_matrix().map_err(Error::Input)?],
        None => {
            let found = beurling_search(&model, 10, ctx.cfg.seed, &ctx.tol)?;
            ctx.put("searchViolations", json!(found.len()));
            let mut v: Vec<CMat> = found.into_iter().map(|(m, _)| m).collect();
            v.push(identity(model.dim()));
            v
        }
    };
    let mut results = Vec::new();
    for (idx, m) in subspaces.iter().enumerate() {
        let rep = beurling_criterion(&model, m, &ctx.tol)?;
        let g = m * m.adjoint();
        match factorize_psd(&model, &g, &ctx.tol)? {
            FactorizeOutcome::Factor(f) => {
                ctx.check(Check::holds(format!("subspace[{idx}].criterionAgrees"), rep.satisfied));
                ctx.check(Check::at_most(format!("subspace[{idx}].factorDefect"), f.factor_defect, 1e-8));
                ctx.check(Check::at_most(format!("subspace[{idx}].intertwining"), f.gamma.intertwining_residual, 1e-9));
                results.push(json!({ "criterion": rep, "factorDefect": f.factor_defect, "inputSlots": f.gamma.input_slots, "condition": f.condition }));
            }
            FactorizeOutcome::Refused(bad) => {
                ctx.check(Check::holds(format!("subspace[{idx}].criterionAgrees"), !rep.satisfied));
                ctx.check(Check::at_least(format!("subspace[{idx}].refusalMargin"), -bad.min_eigen, ctx.tol.psd * (1.0 + bad.norm)));
                results.push(json!({ "criterion": rep, "refused": bad }));
            }
        }
    }
    ctx.put("subspaces", json!(results));
    Ok(())
}

fn char_fn_checks(ctx: &mut Ctx, model: &VarietyModel, t: &OperatorTuple, prefix: &str) -> Result<Option<crate::modeltheory::MultiAnalyticOp>> {
    let data = characteristic_function(model, t, &ctx.tol)?;
    if !data.exists {
        let bad = data.violation.as_ref().expect("refusal carries its violation");
        ctx.put(&format!("{prefix}charFn"), json!({ "exists": false, "violation": bad }));
        return Ok(None);
    }
    let theta = data.theta.clone().expect("existing characteristic function");
    ctx.check(Check::at_most(format!("{prefix}identityDefect"), data.identity_defect, 1e-9));
    ctx.check(Check::at_most(format!("{prefix}thetaIntertwining"), theta.intertwining_residual, 1e-9));
    let pure = check_membership(&ctx.spec, t, &ctx.tol).is_pure == Purity::Pure;
    let exact = data.kernel.truncation_residual == 0.0;
    let mut info = json!({
        "exists": true,
        "defectDimension": data.kernel.rd,
        "thetaInputSlots": theta.input_slots,
        "idempotencyDefect": theta.idempotency_defect(),
        "truncationResidual": data.kernel.truncation_residual,
        "pure": pure,
    });
    if pure && exact {
        ctx.check(Check::at_most(format!("{prefix}thetaInner"), theta.idempotency_defect(), 1e-8));
        let pm = pure_model(model, t, &data)?;
        ctx.check(Check::at_most(format!("{prefix}pureModelEquivalence"), pm.equivalence_residual.max(pm.unitary_defect), 1e-9));
        info["pureModelDimension"] = json!(pm.h_basis.ncols());
    }
    ctx.put(&format!("{prefix}charFn"), info);
    Ok(Some(theta))
}

fn cmd_char_fn(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let t = ctx.tuple()?;
    if let Some(theta) = char_fn_checks(ctx, &model, &t, "")? {
        ctx.export("theta", &theta.m)?;
    }
    Ok(())
}

fn dilation_checks(ctx: &mut Ctx, model: &VarietyModel, t: &OperatorTuple, prefix: &str) -> Result<()> {
    let dd = dilate(model, t, &ctx.tol)?;
    let rank = check_membership(&ctx.spec, t, &ctx.tol).defect_rank;
    ctx.check(Check::holds(format!("{prefix}dilationIndexIsDefectRank"), dd.dilation_index == rank));
    ctx.check(Check::at_most(format!("{prefix}isometryDefect"), dd.isometry_defect, 1e-10));
    ctx.check(Check::at_most(format!("{prefix}coInvariance"), dd.co_invariance, 1e-9));
    ctx.check(Check::at_most(format!("{prefix}reconstruction"), dd.reconstruction, 1e-9));
    let kernel_exact = constrained_kernel(model, t, &ctx.tol)?.truncation_residual == 0.0;
    if kernel_exact {
        ctx.check(Check::at_most(format!("{prefix}boundaryCondition"), dd.boundary_residual, 1e-9));
    }
    if let Some(minimal) = dd.minimal {
        ctx.check(Check::holds(format!("{prefix}minimal"), minimal));
    }
    ctx.put(&format!("{prefix}dilation"), json!({
        "dilationIndex": dd.dilation_index,
        "modelDimension": dd.model_dim,
        "boundaryDimension": dd.boundary.as_ref().map_or(0, |u| u.dim),
        "boundaryResidual": dd.boundary_residual,
        "kernelExact": kernel_exact,
    }));
    Ok(())
}

fn cmd_dilate(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let t = ctx.tuple()?;
    dilation_checks(ctx, &model, &t, "")
}

fn cmd_wold(ctx: &mut Ctx) -> Result<()> {
    let v = ctx.tuple()?;
    let rep = wold_decompose(&ctx.spec, &v, &ctx.tol)?;
    let rank = check_membership(&ctx.spec, &v, &ctx.tol).defect_rank;
    ctx.check(Check::holds("multiplicityIsDefectRank", rep.multiplicity == rank));
    ctx.check(Check::at_most("reducing", rep.reducing_residual, 1e-9));
    ctx.put("wold", json!({
        "multiplicity": rep.multiplicity,
        "k0Dimension": rep.k0.ncols(),
        "degenerateResidual": rep.degenerate_residual,
    }));
    Ok(())
}

fn cmd_coincide(ctx: &mut Ctx) -> Result<()> {
    if ctx.cfg.tuples.len() != 2 {
        return Err(Error::Input("config.tuples must hold exactly two tuples".into()));
    }
    let model = ctx.model()?;
    let a = ctx.tuple_from(&ctx.cfg.tuples[0].clone())?;
    let b = ctx.tuple_from(&ctx.cfg.tuples[1].clone())?;
    let ta = char_fn_checks(ctx, &model, &a, "first.")?;
    let tb = char_fn_checks(ctx, &model, &b, "second.")?;
    let (Some(ta), Some(tb)) = (ta, tb) else {
        return Err(Error::Input("both tuples need characteristic functions".into()));
    };
    let res = coincidence_check(model.dim(), &ta, &tb, ctx.cfg.seed);
    let equivalent = unitary_equivalence(&a, &b, ctx.cfg.seed).is_some();
    ctx.check(Check::holds("coincidenceMatchesEquivalence", res.coincide == equivalent));
    ctx.put("coincidence", json!({
        "coincide": res.coincide,
        "residual": res.residual,
        "reason": res.reason,
        "unitarilyEquivalent": equivalent,
    }));
    Ok(())
}

/// Checks for one seeded fixture, collected separately so batches can run in
/// parallel and merge in order.
fn fixture_checks(spec: &DomainSpec, tol: &Tolerances, model: &VarietyModel, seed: u64, idx: usize) -> Result<(Vec<Check>, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
    let t = random_model_compression(&mut rng, model, 2);
    let mut sub = Ctx {
        cfg: ProblemConfig {
            domain: DomainConfig { preset: None, n: vec![], m: vec![], k: None, q: None },
            grid: None,
            ideal: None,
            tuple: None,
            tuples: vec![],
            subspace: None,
            points: vec![],
            tolerances: *tol,
            seed,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            fixtures: None,
        },
        spec: spec.clone(),
        tol: *tol,
        r: None,
        format: Format::Json,
        jobs: 1,
        checks: vec![],
        data: BTreeMap::new(),
        artifacts: vec![],
    };
    let prefix = format!("fixture[{idx}].");
    let rep = berezin_report(model, &t, 3, tol)?;
    sub.check(Check::at_most(format!("{prefix}berezin.intertwining"), rep.intertwining, 1e-10));
    sub.check(Check::at_most(format!("{prefix}berezin.isometryDefect"), rep.isometry_defect, 1e-10));
    sub.check(Check::at_most(format!("{prefix}berezin.reconstruction"), rep.reconstruction, 1e-10));
    sub.check(Check::at_most(format!("{prefix}berezin.rangeDefect"), rep.range_defect, 1e-10));
    char_fn_checks(&mut sub, model, &t, &prefix)?;
    dilation_checks(&mut sub, model, &t, &prefix)?;
    Ok((sub.checks, json!({ "dimension": t.dim, "defectRank": rep.rd })))
}

fn cmd_verify_all(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    model_checks(ctx, &model);
    let ideal = ctx.ideal()?;
    if ideal.kind == IdealKind::CommutantQc {
        let sym = symmetric_basis_on(&model.w);
        let cols: Vec<crate::linalg::CVec> = sym.iter().map(|s| s.vector.clone()).collect();
        let span = crate::linalg::orthonormalize_columns(&cols, 1e-12);
        ctx.check(Check::at_most("symmetricSpan", subspace_distance(&span, &model.basis_n), 1e-10));
    }
    let count = ctx.cfg.fixtures.unwrap_or(10);
    let seed = ctx.cfg.seed;
    let (spec, tol) = (ctx.spec.clone(), ctx.tol);
    let results: Vec<Result<(Vec<Check>, Value)>> = ctx.pool()?.install(|| (0..count).into_par_iter().map(|i| fixture_checks(&spec, &tol, &model, seed, i)).collect());
    let mut summaries = Vec::new();
    for r in results {
        let (checks, summary) = r?;
        ctx.checks.extend(checks);
        summaries.push(summary);
    }
    ctx.put("fixtures", json!(summaries));
    let mut pts = ctx.points()?;
    if pts.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pts = (0..8).map(|_| ScalarPoint::new(&ctx.spec, random_strict_point(&mut rng, &ctx.spec, 0.8))).collect::<Result<_>>()?;
    }
    kernel_checks(ctx, &model, &pts)?;
    let s2 = OperatorTuple { blocks: model.s.iter().map(|b| b.iter().map(|s| ampliate(s, 2)).collect()).collect(), dim: 2 * model.dim() };
    let wold = wold_decompose(&ctx.spec, &s2, &ctx.tol)?;
    ctx.check(Check::holds("wold.multiplicity", wold.multiplicity == 2));
    ctx.check(Check::at_most("wold.reducing", wold.reducing_residual, 1e-9));
    Ok(())
}

fn hash_config(command: Command, cfg: &ProblemConfig, r: Option<f64>) -> Result<String> {
    let canonical = serde_json::to_vec(&json!({ "command": command.name(), "config": cfg, "r": r }))?;
    Ok(Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs one subcommand on a parsed config. Flag overrides are applied first.
pub fn run(cli: &Cli, mut cfg: ProblemConfig) -> Result<Outcome> {
    let start = Instant::now();
    if let Some(g) = &cli.grid {
        cfg.grid = Some(TruncationGrid::parse(g)?.caps);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.r {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Input(format!("--r must lie in [0, 1], got {r}")));
        }
    }
    let spec = cfg.domain.to_spec()?;
    let config_hash = hash_config(cli.command, &cfg, cli.r)?;
    let tol = cfg.tolerances;
    let mut ctx = Ctx { cfg, spec, tol, r: cli.r, format: cli.format, jobs: cli.jobs, checks: vec![], data: BTreeMap::new(), artifacts: vec![] };
    match cli.command {
        Command::CheckDomain => cmd_check_domain(&mut ctx)?,
        Command::BuildModel => cmd_build_model(&mut ctx)?,
        Command::Berezin => cmd_berezin(&mut ctx)?,
        Command::KernelEval => cmd_kernel_eval(&mut ctx)?,
        Command::Beurling => cmd_beurling(&mut ctx)?,
        Command::CharFn => cmd_char_fn(&mut ctx)?,
        Command::Dilate => cmd_dilate(&mut ctx)?,
        Command::Wold => cmd_wold(&mut ctx)?,
        Command::Coincide => cmd_coincide(&mut ctx)?,
        Command::VerifyAll => cmd_verify_all(&mut ctx)?,
    }
    let passed = ctx.checks.iter().all(|c| c.passed);
    let report = Report {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash,
        seed: ctx.cfg.seed,
        tolerances: ctx.tol,
        checks: ctx.checks,
        data: ctx.data,
        passed,
        runtime_ms: cli.runtime.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    Ok(Outcome { report, artifacts: ctx.artifacts })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ResourceCap { .. } => 3,
        Error::NotPsd { .. } | Error::Numerical(_) => 1,
        _ => 2,
    }
}

fn write_outputs(cli: &Cli, out: &Outcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (name, body) = match cli.format {
        Format::Json => ("report.json", serde_json::to_vec_pretty(&out.report)?),
        Format::Csv => ("report.csv", out.report.to_csv().into_bytes()),
    };
    std::fs::write(dir.join(name), body)?;
    for a in &out.artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

/// Parses arguments, runs, writes output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return 2;
            }
        },
        None => {
            eprintln!("error: --config is required");
            return 2;
        }
    };
    let outcome = ProblemConfig::parse(&text).and_then(|cfg| run(&cli, cfg));
    match outcome {
        Ok(out) => {
            let written = match &cli.out {
                Some(dir) => write_outputs(&cli, &out, dir),
                None => {
                    let body = match cli.format {
                        Format::Json => serde_json::to_string_pretty(&out.report).map_err(Error::from),
                        Format::Csv => Ok(out.report.to_csv()),
                    };
                    body.map(|b| println!("{b}"))
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if out.report.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
