//! `polysep` command line. Exit status: 0 separated/member/verified,
//! 1 inconclusive/nonmember/verification failed, 2 input error, 3 budget exhausted.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::error::Error;
use crate::finite::{closure, group_exponent_f};
use crate::io::{matrix_json, parse_ring_shorthand, residue_matrix_json, InputError, ProblemFile, WitnessReport};
use crate::levels::{alpha_level, congruence_level_m, mu_level, nu_level, LevelCertificate, NuChoice, NuTarget};
use crate::separator::{separate, verify_witness, Verdict, BUDGET_EXHAUSTED};
use crate::subgroup::{Bounds, Membership, SubgroupData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "polysep", version, about = "Separate elements from triangular matrix groups by congruence quotients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct BoundFlags {
    #[arg(long)]
    search_level: Option<u64>,
    #[arg(long)]
    closure_budget: Option<usize>,
    #[arg(long)]
    lattice_iterations: Option<usize>,
    #[arg(long)]
    unit_log_bound: Option<u64>,
}

impl BoundFlags {
    fn apply(&self, b: &mut Bounds) {
        if let Some(v) = self.search_level {
            b.search_level = v;
        }
        if let Some(v) = self.closure_budget {
            b.closure_budget = v;
        }
        if let Some(v) = self.lattice_iterations {
            b.lattice_iterations = v;
        }
        if let Some(v) = self.unit_log_bound {
            b.unit_log_bound = v;
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline and emit a witness report.
    Separate {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundFlags,
    },
    /// Print the α, μ, ν, f and M certificates for exponent r.
    Levels {
        file: PathBuf,
        #[arg(long)]
        r: u64,
        /// minimal, conservative, or a fixed level.
        #[arg(long, default_value = "minimal")]
        nu: String,
        #[command(flatten)]
        bounds: BoundFlags,
    },
    /// Exponent of T_n(B/rB).
    Exponent {
        #[arg(long)]
        ring: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        level: u64,
        #[arg(long)]
        closure_budget: Option<usize>,
    },
    /// Size of the image of S at a level.
    Closure {
        file: PathBuf,
        #[arg(long)]
        level: u64,
        #[arg(long)]
        elements: bool,
        #[command(flatten)]
        bounds: BoundFlags,
    },
    /// Decide x ∈ S and print a word.
    Membership {
        file: PathBuf,
        #[command(flatten)]
        bounds: BoundFlags,
    },
    /// Replay a witness report against its problem.
    Verify {
        report: PathBuf,
        file: PathBuf,
        #[command(flatten)]
        bounds: BoundFlags,
    },
}

/// Outcome of one invocation: exit status and text for standard output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    fn ok(status: i32, stdout: String) -> Self {
        CommandOutput { status, stdout, stderr: String::new() }
    }

    fn fail(status: i32, stderr: String) -> Self {
        CommandOutput { status, stdout: String::new(), stderr }
    }
}

enum Failure {
    Input(String),
    Budget(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_budget() {
            Failure::Budget(format!("{BUDGET_EXHAUSTED}: {e}"))
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = std::result::Result<CommandOutput, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path, flags: &BoundFlags) -> std::result::Result<ProblemFile, Failure> {
    let mut p = ProblemFile::parse(&read(path)?, &path.display().to_string())?;
    flags.apply(&mut p.bounds);
    if p.n > p.bounds.max_dimension {
        return Err(Failure::Input(format!("field `n`: {} exceeds the supported dimension {}", p.n, p.bounds.max_dimension)));
    }
    Ok(p)
}

fn subgroup(p: &ProblemFile) -> std::result::Result<SubgroupData<BigInt>, Failure> {
    Ok(SubgroupData::new(&p.spec, p.n, p.subgroup_generators.clone(), &p.bounds)?)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_command<I, S>(argv: I) -> CommandOutput
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            return if status == EXIT_OK {
                CommandOutput::ok(status, e.to_string())
            } else {
                CommandOutput::fail(status, e.to_string())
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => out,
        Err(Failure::Input(msg)) => CommandOutput::fail(EXIT_INPUT, format!("error: {msg}\n")),
        Err(Failure::Budget(msg)) => CommandOutput::fail(EXIT_BUDGET, format!("error: {msg}\n")),
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Separate { file, out, bounds } => cmd_separate(&file, out.as_deref(), &bounds),
        Command::Levels { file, r, nu, bounds } => cmd_levels(&file, r, &nu, &bounds),
        Command::Exponent { ring, n, level, closure_budget } => {
            let spec = parse_ring_shorthand(&ring).ok_or_else(|| Failure::Input(format!("unknown ring `{ring}`")))?;
            let budget = closure_budget.unwrap_or(Bounds::default().closure_budget);
            let f = group_exponent_f(&spec, n, level, budget)?;
            Ok(CommandOutput::ok(EXIT_OK, format!("{f}\n")))
        }
        Command::Closure { file, level, elements, bounds } => {
            let p = load(&file, &bounds)?;
            let c = closure(&p.spec.ring, p.n, &p.subgroup_generators, level, p.bounds.closure_budget)?;
            let mut v = json!({ "level": level, "size": c.order() });
            if elements {
                v["elements"] = Value::Array(c.elements().iter().map(|a| residue_matrix_json(&c, a)).collect());
            }
            Ok(CommandOutput::ok(EXIT_OK, pretty(&v)))
        }
        Command::Membership { file, bounds } => {
            let p = load(&file, &bounds)?;
            let x = p.require_x()?;
            let s = subgroup(&p)?;
            Ok(match s.membership(x)? {
                Membership::Member(w) => CommandOutput::ok(EXIT_OK, pretty(&json!({ "member": true, "word": w }))),
                Membership::NonMember(reason) => {
                    CommandOutput::ok(EXIT_NEGATIVE, pretty(&json!({ "member": false, "reason": reason })))
                }
            })
        }
        Command::Verify { report, file, bounds } => {
            let p = load(&file, &bounds)?;
            let x = p.require_x()?;
            let rep = WitnessReport::parse(&read(&report)?, &report.display().to_string())?;
            let s = subgroup(&p)?;
            let ok = verify_witness(&rep.to_witness(), &s, x, p.bounds.closure_budget);
            let status = if ok { EXIT_OK } else { EXIT_NEGATIVE };
            Ok(CommandOutput::ok(status, pretty(&json!({ "verified": ok, "verdict": rep.verdict }))))
        }
    }
}

fn cmd_separate(file: &Path, out: Option<&Path>, flags: &BoundFlags) -> Outcome {
    let start = Instant::now();
    let p = load(file, flags)?;
    let x = p.require_x()?;
    let s = subgroup(&p)?;
    let w = separate(&s, x, &p.bounds)?;
    let report = WitnessReport::from_witness(&w, &p.bounds, start.elapsed().as_millis() as u64);
    let status = match w.verdict {
        Verdict::Separated | Verdict::Member => EXIT_OK,
        Verdict::Inconclusive if report.diagnostics.iter().any(|d| d == BUDGET_EXHAUSTED) => EXIT_BUDGET,
        Verdict::Inconclusive => EXIT_NEGATIVE,
    };
    let text = report.to_json() + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            Ok(CommandOutput::ok(status, format!("{}\n", json!({ "verdict": w.verdict, "report": path.display().to_string() }))))
        }
        None => Ok(CommandOutput::ok(status, text)),
    }
}

fn parse_nu_choice(s: &str) -> std::result::Result<NuChoice, Failure> {
    match s {
        "minimal" => Ok(NuChoice::Minimal),
        "conservative" => Ok(NuChoice::Conservative),
        v => v.parse().map(NuChoice::Fixed).map_err(|_| Failure::Input(format!("--nu: `{v}` is not minimal, conservative or a level"))),
    }
}

fn cmd_levels(file: &Path, r: u64, nu: &str, flags: &BoundFlags) -> Outcome {
    let p = load(file, flags)?;
    let choice = parse_nu_choice(nu)?;
    if !p.spec.ring.is_coprime_level(r) || r == 0 {
        return Err(Error::LevelNotCoprime { level: r, modulus: p.spec.modulus() }.into());
    }
    let s = subgroup(&p)?;
    let b = &p.bounds;
    let mut budget_hit = None;
    let mut record = |res: crate::Result<LevelCertificate>| -> Value {
        match res {
            Ok(c) => serde_json::to_value(c).expect("certificate serializes"),
            Err(e) => {
                if e.is_budget() && budget_hit.is_none() {
                    budget_hit = Some(e.to_string());
                }
                json!({ "error": e.to_string() })
            }
        }
    };
    let alpha = record(alpha_level(&p.spec, r, b.search_level));
    let mu = record(mu_level(&p.spec, p.n, s.delta_lattice(), r, b.search_level));
    let nu = record(s.kernel().and_then(|k| nu_level(&p.spec, NuTarget::Generated(k), r, b.search_level, choice, b.closure_budget)));
    let m = record(congruence_level_m(&s, r, choice));
    let f = m.get("components").and_then(|c| c.get("f")).cloned().unwrap_or(Value::Null);
    let v = json!({
        "r": r,
        "generators": s.generators().iter().map(matrix_json).collect::<Vec<_>>(),
        "alpha": alpha,
        "mu": mu,
        "nu": nu,
        "f": f,
        "M": m,
    });
    match budget_hit {
        Some(e) => Ok(CommandOutput { status: EXIT_BUDGET, stdout: pretty(&v), stderr: format!("error: {BUDGET_EXHAUSTED}: {e}\n") }),
        None => Ok(CommandOutput::ok(EXIT_OK, pretty(&v))),
    }
}
