//! Certificate-emitting command front end.
//!
//! Every run gathers its input files into one canonical JSON value, runs the
//! command on that value alone and prints a [`Certificate`]. Because the
//! computation only sees `inputs`, a certificate can be replayed from itself.
//! The worker count is deliberately not part of the inputs.
//!
//! Exit codes: 0 verified / found / no SE obstruction, 1 refuted / nothing
//! found within budget / SE refuted, 2 usage or input error.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ckrep::{
    build_representation, ck_relations_report, dump, rse_equations_report, twist_representation,
    vertex_projection_report, Angle, CkError,
};
use crate::equiv::{
    all_pass, chain_to_cse, compose_cse, cse_checks, derived_identity_checks, se_checks,
    sse_step_to_cse, Check, CseWitness, ElementaryStep, EquivError, SeWitness, SseChain,
};
use crate::invariants::{se_obstruction_report, Verdict};
use crate::matrix::NonnegMatrix;
use crate::search::{
    search_compatible_iso, search_elementary, search_se_witness, search_sse_chain, BudgetOverrides,
    Outcome, ProgressSink, SearchBudget, SearchError, SearchOptions, SearchReport,
};

pub const TOOL_VERSION: &str = concat!("shiftequiv ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "shiftequiv",
    version,
    about = "Shift equivalence witnesses, searches and invariants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file `{ "A": matrix, "B": matrix }`.
    #[arg(long)]
    pub pair: Option<PathBuf>,
    /// Witness file; `compose-cse` takes it twice.
    #[arg(long)]
    pub witness: Vec<PathBuf>,
    /// Partial search budget; missing fields use the defaults for the pair.
    #[arg(long)]
    pub budget: Option<PathBuf>,
    /// Truncation depth for the representation commands.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the certificate here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Twist angle `P/Q` for `rep-twist` (the root of unity `exp(2πi P/Q)`).
    #[arg(long)]
    pub twist: Option<String>,
    /// Certificate file for `replay`.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check an SE witness `{m, R, S}` for a pair.
    VerifySe(Flags),
    /// Check a CSE bundle.
    VerifyCse(Flags),
    /// Check the identities implied by compatibility.
    DerivedIdentities(Flags),
    /// Lag-one CSE from an elementary step `{R, S}`.
    SseToCse(Flags),
    /// Compose two CSE bundles.
    ComposeCse(Flags),
    /// Fold an SSE chain `{start, steps}` into one CSE.
    ChainToCse(Flags),
    /// Look for a single factorization `A = RS`, `B = SR`.
    SearchElementary(Flags),
    /// Look for a chain of elementary steps from A to B.
    SearchSse(Flags),
    /// Look for an SE witness of bounded lag.
    SearchSe(Flags),
    /// Complete an SE witness to a CSE.
    SearchCse(Flags),
    /// SE / SSE obstruction report.
    Invariants(Flags),
    /// Dump the truncated representation of a CSE bundle.
    RepBuild(Flags),
    /// Check the Cuntz–Krieger relations and RSE equations.
    RepVerify(Flags),
    /// Check the relations after twisting by a root of unity.
    RepTwist(Flags),
    /// Re-run a certificate and compare.
    Replay(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifySe(_) => "verify-se",
            Command::VerifyCse(_) => "verify-cse",
            Command::DerivedIdentities(_) => "derived-identities",
            Command::SseToCse(_) => "sse-to-cse",
            Command::ComposeCse(_) => "compose-cse",
            Command::ChainToCse(_) => "chain-to-cse",
            Command::SearchElementary(_) => "search-elementary",
            Command::SearchSse(_) => "search-sse",
            Command::SearchSe(_) => "search-se",
            Command::SearchCse(_) => "search-cse",
            Command::Invariants(_) => "invariants",
            Command::RepBuild(_) => "rep-build",
            Command::RepVerify(_) => "rep-verify",
            Command::RepTwist(_) => "rep-twist",
            Command::Replay(_) => "replay",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::VerifySe(f)
            | Command::VerifyCse(f)
            | Command::DerivedIdentities(f)
            | Command::SseToCse(f)
            | Command::ComposeCse(f)
            | Command::ChainToCse(f)
            | Command::SearchElementary(f)
            | Command::SearchSse(f)
            | Command::SearchSe(f)
            | Command::SearchCse(f)
            | Command::Invariants(f)
            | Command::RepBuild(f)
            | Command::RepVerify(f)
            | Command::RepTwist(f)
            | Command::Replay(f) => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub command: String,
    pub inputs: Value,
    pub result: Value,
    pub checks: Vec<(String, bool)>,
    pub tool_version: String,
    pub seed: u64,
}

impl Certificate {
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Pair {
    #[serde(rename = "A")]
    a: NonnegMatrix,
    #[serde(rename = "B")]
    b: NonnegMatrix,
}

/// Usage or input problem: exit 2.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type Res<T> = Result<T, InputError>;

fn input_err<T>(msg: impl Into<String>) -> Res<T> {
    Err(InputError(msg.into()))
}

struct Run {
    code: i32,
    result: Value,
    checks: Vec<Check>,
}

impl Run {
    fn new(ok: bool, result: Value, checks: Vec<Check>) -> Run {
        Run {
            code: if ok { 0 } else { 1 },
            result,
            checks,
        }
    }
}

fn check(name: &str, pass: bool) -> Check {
    Check {
        name: name.into(),
        pass,
    }
}

fn read_json(role: &str, path: &FsPath) -> Res<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError(format!("{role}: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| InputError(format!("{role}: malformed JSON in {}: {e}", path.display())))
}

/// Typed parse that names the offending field on failure.
fn typed<T: DeserializeOwned>(role: &str, v: &Value) -> Res<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            InputError(format!("{role}: {}", e.inner()))
        } else {
            InputError(format!("{role}: field `{path}`: {}", e.inner()))
        }
    })
}

fn canonical<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn bundle(role: &str, v: &Value) -> Res<(NonnegMatrix, NonnegMatrix, CseWitness)> {
    CseWitness::from_bundle(v).map_err(|e| InputError(format!("{role}: {e}")))
}

fn require<'a>(what: &str, p: &'a Option<PathBuf>) -> Res<&'a PathBuf> {
    p.as_ref()
        .ok_or_else(|| InputError(format!("missing --{what}")))
}

fn one_witness(f: &Flags) -> Res<&PathBuf> {
    match f.witness.as_slice() {
        [w] => Ok(w),
        [] => input_err("missing --witness"),
        _ => input_err("expected exactly one --witness"),
    }
}

/// Reads the files named by the flags into the canonical inputs value.
fn gather(cmd: &Command) -> Res<Value> {
    let f = cmd.flags();
    let mut inputs = serde_json::Map::new();
    let name = cmd.name();
    let wants_pair = matches!(
        cmd,
        Command::VerifySe(_)
            | Command::SseToCse(_)
            | Command::SearchElementary(_)
            | Command::SearchSse(_)
            | Command::SearchSe(_)
            | Command::SearchCse(_)
            | Command::Invariants(_)
    );
    let mut pair = None;
    if wants_pair {
        let p: Pair = typed("pair", &read_json("pair", require("pair", &f.pair)?)?)?;
        inputs.insert("pair".into(), canonical(&p));
        pair = Some(p);
    }
    match cmd {
        Command::VerifySe(_) | Command::SearchCse(_) => {
            let w: SeWitness = typed("witness", &read_json("witness", one_witness(f)?)?)?;
            inputs.insert("witness".into(), canonical(&w));
        }
        Command::SseToCse(_) => {
            let w: ElementaryStep = typed("witness", &read_json("witness", one_witness(f)?)?)?;
            inputs.insert("witness".into(), canonical(&w));
        }
        Command::ChainToCse(_) => {
            let w: SseChain = typed("witness", &read_json("witness", one_witness(f)?)?)?;
            inputs.insert("witness".into(), canonical(&w));
        }
        Command::VerifyCse(_)
        | Command::DerivedIdentities(_)
        | Command::RepBuild(_)
        | Command::RepVerify(_)
        | Command::RepTwist(_) => {
            let (a, b, w) = bundle("witness", &read_json("witness", one_witness(f)?)?)?;
            inputs.insert("witness".into(), w.to_bundle(&a, &b));
        }
        Command::ComposeCse(_) => {
            let [w1, w2] = f.witness.as_slice() else {
                return input_err("compose-cse needs --witness twice");
            };
            let (a, b, x) = bundle("first witness", &read_json("first witness", w1)?)?;
            let (b2, c, y) = bundle("second witness", &read_json("second witness", w2)?)?;
            inputs.insert(
                "witness".into(),
                json!([x.to_bundle(&a, &b), y.to_bundle(&b2, &c)]),
            );
        }
        _ => {}
    }
    let mut seed = f.seed.unwrap_or(0);
    if let Some(p) = &pair {
        if name.starts_with("search-") {
            let overrides: BudgetOverrides = match &f.budget {
                Some(path) => typed("budget", &read_json("budget", path)?)?,
                None => BudgetOverrides::default(),
            };
            let mut budget = overrides.apply(SearchBudget::default_for(&p.a, &p.b));
            if let Some(s) = f.seed {
                budget.seed = s;
            }
            seed = budget.seed;
            inputs.insert("budget".into(), canonical(&budget));
        }
    }
    if name.starts_with("rep-") {
        if let Some(d) = f.depth {
            inputs.insert("depth".into(), json!(d));
        }
    }
    if let Command::RepTwist(_) = cmd {
        let z: Angle = f
            .twist
            .as_deref()
            .ok_or_else(|| InputError("missing --twist".into()))?
            .parse()
            .map_err(|e| InputError(format!("twist: {e}")))?;
        inputs.insert("twist".into(), json!(z.to_string()));
    }
    inputs.insert("seed".into(), json!(seed));
    Ok(Value::Object(inputs))
}

fn field<T: DeserializeOwned>(inputs: &Value, name: &str) -> Res<T> {
    let v = inputs
        .get(name)
        .ok_or_else(|| InputError(format!("inputs: missing field `{name}`")))?;
    typed(&format!("inputs.{name}"), v)
}

fn input_bundle(inputs: &Value) -> Res<(NonnegMatrix, NonnegMatrix, CseWitness)> {
    let v = inputs
        .get("witness")
        .ok_or_else(|| InputError("inputs: missing field `witness`".into()))?;
    bundle("witness", v)
}

/// Equivalence errors split into refutations and malformed input.
fn refuted(e: EquivError) -> Res<Run> {
    match e {
        EquivError::InvalidUnderlyingSe
        | EquivError::InvalidWitness
        | EquivError::NotElementary(_)
        | EquivError::MiddleMismatch
        | EquivError::BrokenChain(_) => Ok(Run::new(
            false,
            json!({ "refuted": e.to_string() }),
            vec![check(&e.to_string(), false)],
        )),
        other => input_err(other.to_string()),
    }
}

/// The certificate checks for a CSE: all CSE checks plus derived identities.
fn cse_certificate_checks(a: &NonnegMatrix, b: &NonnegMatrix, c: &CseWitness) -> Res<Vec<Check>> {
    let mut out = cse_checks(a, b, c).map_err(|e| InputError(e.to_string()))?;
    if all_pass(&out) {
        out.extend(derived_identity_checks(a, b, c).map_err(|e| InputError(e.to_string()))?);
    }
    Ok(out)
}

fn search_run<T>(
    res: Result<SearchReport<T>, SearchError>,
    on_found: impl FnOnce(&T) -> Res<(Value, Vec<Check>)>,
) -> Res<Run> {
    match res {
        Ok(SearchReport {
            outcome: Outcome::Found(t),
            nodes,
        }) => {
            let (witness, checks) = on_found(&t)?;
            let ok = all_pass(&checks);
            let result = json!({ "found": true, "witness": witness, "nodes": nodes });
            Ok(Run::new(ok, result, checks))
        }
        Ok(SearchReport {
            outcome: Outcome::Exhausted { bound_dominates },
            nodes,
        }) => Ok(Run::new(
            false,
            json!({ "found": false, "exhausted": true, "bound_dominates": bound_dominates, "nodes": nodes }),
            Vec::new(),
        )),
        Err(SearchError::BudgetExceeded { limit }) => Ok(Run::new(
            false,
            json!({ "found": false, "exhausted": false, "budget_exceeded": true, "node_limit": limit }),
            Vec::new(),
        )),
        Err(SearchError::Equiv(e)) => refuted(e),
        Err(e) => input_err(e.to_string()),
    }
}

fn default_depth(c: &CseWitness) -> usize {
    6.max(2 * c.lag())
}

fn ck_err(e: CkError) -> Res<Run> {
    match e {
        CkError::InvalidWitness => refuted(EquivError::InvalidWitness),
        CkError::Equiv(e) => refuted(e),
        other => input_err(other.to_string()),
    }
}

fn rep_reports(rep: &crate::ckrep::Representation, c: &CseWitness) -> (Value, Vec<Check>) {
    let margin = c.lag();
    let ck = ck_relations_report(rep, margin);
    let rse = rse_equations_report(rep, c, margin);
    let vp = vertex_projection_report(rep, margin);
    let checks = vec![
        check("Cuntz-Krieger relations", ck.holds),
        check("RSE equations", rse.holds),
        check("vertex projections agree", vp.holds),
    ];
    let result = json!({
        "depth": rep.depth,
        "margin": margin,
        "basis_size": rep.basis.len(),
        "ck_relations": ck,
        "rse_equations": rse,
        "vertex_projections": vp,
    });
    (result, checks)
}

/// Runs `command` on a canonical inputs value.
fn run(command: &str, inputs: &Value, workers: usize, progress: Option<ProgressSink>) -> Res<Run> {
    let opts = SearchOptions { workers, progress };
    let pair = || field::<Pair>(inputs, "pair");
    let budget = || field::<SearchBudget>(inputs, "budget");
    match command {
        "verify-se" => {
            let p = pair()?;
            let w: SeWitness = field(inputs, "witness")?;
            let checks = se_checks(&p.a, &p.b, &w).map_err(|e| InputError(e.to_string()))?;
            let ok = checks.iter().take(4).all(|c| c.pass);
            Ok(Run::new(ok, json!(ok), checks))
        }
        "verify-cse" => {
            let (a, b, c) = input_bundle(inputs)?;
            match cse_checks(&a, &b, &c) {
                Ok(checks) => {
                    let ok = all_pass(&checks);
                    Ok(Run::new(ok, json!(ok), checks))
                }
                Err(e) => refuted(e),
            }
        }
        "derived-identities" => {
            let (a, b, c) = input_bundle(inputs)?;
            match derived_identity_checks(&a, &b, &c) {
                Ok(checks) => {
                    let ok = all_pass(&checks);
                    Ok(Run::new(ok, json!(ok), checks))
                }
                Err(e) => refuted(e),
            }
        }
        "sse-to-cse" => {
            let p = pair()?;
            let step: ElementaryStep = field(inputs, "witness")?;
            match sse_step_to_cse(&p.a, &p.b, &step) {
                Ok(c) => {
                    let checks = cse_certificate_checks(&p.a, &p.b, &c)?;
                    Ok(Run::new(all_pass(&checks), c.to_bundle(&p.a, &p.b), checks))
                }
                Err(e) => refuted(e),
            }
        }
        "compose-cse" => {
            let ws = inputs
                .get("witness")
                .and_then(Value::as_array)
                .ok_or_else(|| {
                    InputError("inputs: `witness` must be a list of two bundles".into())
                })?;
            let [w1, w2] = ws.as_slice() else {
                return input_err("inputs: `witness` must be a list of two bundles");
            };
            let (a, b, x) = bundle("first witness", w1)?;
            let (b2, c, y) = bundle("second witness", w2)?;
            if b != b2 {
                return refuted(EquivError::MiddleMismatch);
            }
            match compose_cse(&a, &b, &c, &x, &y) {
                Ok(z) => {
                    let checks = cse_certificate_checks(&a, &c, &z)?;
                    Ok(Run::new(all_pass(&checks), z.to_bundle(&a, &c), checks))
                }
                Err(e) => refuted(e),
            }
        }
        "chain-to-cse" => {
            let chain: SseChain = field(inputs, "witness")?;
            let end = match chain.validate() {
                Ok(end) => end,
                Err(e) => return refuted(e),
            };
            match chain_to_cse(&chain, &end) {
                Ok(z) => {
                    let checks = cse_certificate_checks(&chain.start, &end, &z)?;
                    Ok(Run::new(
                        all_pass(&checks),
                        z.to_bundle(&chain.start, &end),
                        checks,
                    ))
                }
                Err(e) => refuted(e),
            }
        }
        "search-elementary" => {
            let p = pair()?;
            search_run(search_elementary(&p.a, &p.b, &budget()?, &opts), |step| {
                let c = sse_step_to_cse(&p.a, &p.b, step).map_err(|e| InputError(e.to_string()))?;
                let mut checks = vec![
                    check("A = RS", step.source().ok().as_ref() == Some(&p.a)),
                    check("B = SR", step.target().ok().as_ref() == Some(&p.b)),
                ];
                checks.extend(cse_certificate_checks(&p.a, &p.b, &c)?);
                Ok((canonical(step), checks))
            })
        }
        "search-sse" => {
            let p = pair()?;
            search_run(search_sse_chain(&p.a, &p.b, &budget()?, &opts), |chain| {
                let end = chain.validate().ok();
                let mut checks = vec![
                    check("chain composes", end.is_some()),
                    check("chain ends at B", end.as_ref() == Some(&p.b)),
                ];
                if let Some(end) = end {
                    let c = chain_to_cse(chain, &end).map_err(|e| InputError(e.to_string()))?;
                    checks.extend(cse_certificate_checks(&chain.start, &end, &c)?);
                }
                Ok((canonical(chain), checks))
            })
        }
        "search-se" => {
            let p = pair()?;
            search_run(search_se_witness(&p.a, &p.b, &budget()?, &opts), |w| {
                let checks = se_checks(&p.a, &p.b, w).map_err(|e| InputError(e.to_string()))?;
                Ok((canonical(w), checks.into_iter().take(4).collect()))
            })
        }
        "search-cse" => {
            let p = pair()?;
            let w: SeWitness = field(inputs, "witness")?;
            search_run(
                search_compatible_iso(&p.a, &p.b, &w, &budget()?, &opts),
                |c| {
                    Ok((
                        c.to_bundle(&p.a, &p.b),
                        cse_certificate_checks(&p.a, &p.b, c)?,
                    ))
                },
            )
        }
        "invariants" => {
            let p = pair()?;
            let report = se_obstruction_report(&p.a, &p.b)?;
            let (ia, ib) = (&report.a, &report.b);
            let checks = vec![
                check(
                    "characteristic polynomial away from zero",
                    ia.char_poly_away_from_zero == ib.char_poly_away_from_zero,
                ),
                check(
                    "eventual rank",
                    ia.dimension.eventual_rank == ib.dimension.eventual_rank,
                ),
                check(
                    "dimension actions conjugate (bounded search)",
                    report.conjugacy.is_some(),
                ),
                check(
                    "Bowen-Franks group",
                    ia.bowen_franks.same_group(&ib.bowen_franks),
                ),
                check(
                    "sign of det(I - A)",
                    ia.bowen_franks.det_sign == ib.bowen_franks.det_sign,
                ),
            ];
            let ok = report.verdict != Verdict::NotSE;
            Ok(Run::new(ok, canonical(&report), checks))
        }
        "rep-build" | "rep-verify" | "rep-twist" => {
            let (a, b, c) = input_bundle(inputs)?;
            let depth = match inputs.get("depth") {
                Some(_) => field::<usize>(inputs, "depth")?,
                None => default_depth(&c),
            };
            let rep = match build_representation(&a, &b, &c, depth) {
                Ok(r) => r,
                Err(e) => return ck_err(e),
            };
            match command {
                "rep-build" => {
                    let checks = vec![check("witness verifies as CSE", true)];
                    Ok(Run::new(true, dump(&rep), checks))
                }
                "rep-verify" => {
                    let (result, checks) = rep_reports(&rep, &c);
                    Ok(Run::new(all_pass(&checks), result, checks))
                }
                _ => {
                    let z: String = field(inputs, "twist")?;
                    let z: Angle = z
                        .parse()
                        .map_err(|e| InputError(format!("inputs.twist: {e}")))?;
                    let twisted = twist_representation(&rep, z);
                    let (mut result, checks) = rep_reports(&twisted, &c);
                    result["twist"] = json!(z.to_string());
                    result["representation"] = dump(&twisted);
                    Ok(Run::new(all_pass(&checks), result, checks))
                }
            }
        }
        other => input_err(format!("unknown command `{other}`")),
    }
}

fn certify(command: &str, inputs: Value, run: Run) -> (i32, Certificate) {
    let seed = inputs.get("seed").and_then(Value::as_u64).unwrap_or(0);
    let cert = Certificate {
        command: command.to_string(),
        inputs,
        result: run.result,
        checks: run.checks.into_iter().map(|c| (c.name, c.pass)).collect(),
        tool_version: TOOL_VERSION.to_string(),
        seed,
    };
    (run.code, cert)
}

/// Re-executes `cert` and compares result and checks byte for byte.
pub fn certificate_roundtrip(cert: &Certificate, workers: usize) -> Result<bool, String> {
    let run = run(&cert.command, &cert.inputs, workers, None).map_err(|e| e.0)?;
    let (_, again) = certify(&cert.command, cert.inputs.clone(), run);
    Ok(
        serde_json::to_string(&again.result).ok() == serde_json::to_string(&cert.result).ok()
            && again.checks == cert.checks
            && again.seed == cert.seed,
    )
}

fn replay(f: &Flags, stderr: &mut String) -> Res<(i32, Certificate)> {
    let cert: Certificate = typed(
        "certificate",
        &read_json("certificate", require("certificate", &f.certificate)?)?,
    )?;
    let version_mismatch = cert.tool_version != TOOL_VERSION;
    if version_mismatch {
        stderr.push_str(&format!(
            "warning: VersionMismatch: certificate from {}, running {TOOL_VERSION}\n",
            cert.tool_version
        ));
    }
    let matches = certificate_roundtrip(&cert, f.workers).map_err(InputError)?;
    let inputs = json!({ "certificate": canonical(&cert), "seed": cert.seed });
    let result = json!({ "matches": matches, "version_mismatch": version_mismatch });
    Ok(certify(
        "replay",
        inputs,
        Run::new(
            matches,
            result,
            vec![check("certificate reproduced", matches)],
        ),
    ))
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code with the text for standard output and error.
pub fn execute<I, T>(argv: I, progress: Option<ProgressSink>) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Execution {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Execution {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let mut stderr = String::new();
    let flags = cli.command.flags();
    let outcome = if let Command::Replay(f) = &cli.command {
        replay(f, &mut stderr)
    } else {
        gather(&cli.command).and_then(|inputs| {
            let r = run(cli.command.name(), &inputs, flags.workers, progress)?;
            Ok(certify(cli.command.name(), inputs, r))
        })
    };
    let (code, cert) = match outcome {
        Ok(x) => x,
        Err(InputError(msg)) => {
            stderr.push_str(&format!("error: {msg}\n"));
            return Execution {
                code: 2,
                stdout: String::new(),
                stderr,
            };
        }
    };
    let text = cert.render();
    match &flags.out {
        Some(path) => match fs::write(path, &text) {
            Ok(()) => Execution {
                code,
                stdout: String::new(),
                stderr,
            },
            Err(e) => {
                stderr.push_str(&format!("error: cannot write {}: {e}\n", path.display()));
                Execution {
                    code: 2,
                    stdout: String::new(),
                    stderr,
                }
            }
        },
        None => Execution {
            code,
            stdout: text,
            stderr,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn write(dir: &Path, name: &str, v: &Value) -> String {
        let p = dir.join(name);
        fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn matrix(rows: &[&[u64]]) -> Value {
        canonical(&NonnegMatrix::from_rows(rows))
    }

    #[test]
    fn verify_se_and_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
        let b = NonnegMatrix::from_rows(&[[2u64]]);
        let pair = write(dir.path(), "pair.json", &json!({ "A": a, "B": b }));
        let w = json!({ "m": 1, "R": matrix(&[&[1], &[1]]), "S": matrix(&[&[1, 1]]) });
        let wit = write(dir.path(), "w.json", &w);
        let ex = execute(
            [
                "shiftequiv",
                "verify-se",
                "--pair",
                &pair,
                "--witness",
                &wit,
            ],
            None,
        );
        assert_eq!(ex.code, 0, "{}", ex.stderr);
        let cert: Certificate = serde_json::from_str(&ex.stdout).unwrap();
        assert_eq!(cert.result, json!(true));
        assert!(certificate_roundtrip(&cert, 1).unwrap());

        let mut bad = cert.clone();
        bad.result = json!(false);
        assert!(!certificate_roundtrip(&bad, 1).unwrap());

        let broken = write(
            dir.path(),
            "b.json",
            &json!({ "A": a, "B": { "rows": ["0"], "cols": ["0"], "entries": [["x"]] } }),
        );
        let ex = execute(
            [
                "shiftequiv",
                "verify-se",
                "--pair",
                &broken,
                "--witness",
                &wit,
            ],
            None,
        );
        assert_eq!(ex.code, 2);
        assert!(ex.stderr.contains("B"), "{}", ex.stderr);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(execute(["shiftequiv", "verify-se"], None).code, 2);
        assert_eq!(execute(["shiftequiv", "frobnicate"], None).code, 2);
        assert_eq!(execute(["shiftequiv", "--help"], None).code, 0);
    }
}
