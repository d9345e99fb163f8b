//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asp::{
    compile_direct, compile_lav, compile_transitive, parse_program, shift_disjunctions, unfold_choice, Program,
};
use crate::error::Error;
use crate::lang::{classify_dec, parse_query, parse_system, System};
use crate::oracle::{OracleOptions, SolutionSet};
use crate::query::{self, Method};
use crate::relational::{Instance, PeerId};
use crate::solver::answer_sets;

#[derive(Parser, Debug)]
#[command(name = "peerdx", version, about = "Peer-to-peer data exchange: solutions, answers and repair programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a system, check trust and classify its constraints.
    Validate { system: PathBuf },
    /// List a peer's solutions.
    Solutions(Run),
    /// Peer-consistent answers to a query.
    Answer {
        #[command(flatten)]
        run: Run,
        /// File holding one query, e.g. `Q(x,y) := R1(x,y)`.
        #[arg(long)]
        query: PathBuf,
        /// Compare the oracle with the program route.
        #[arg(long)]
        both: bool,
    },
    /// Print a peer's repair program.
    Compile {
        #[command(flatten)]
        run: Run,
        /// Replace choice goals by chosen/diffchoice rules.
        #[arg(long)]
        unfold_choice: bool,
        /// Shift disjunctions into normal rules (head-cycle-free programs only).
        #[arg(long, requires = "unfold_choice")]
        shift_hcf: bool,
    },
    /// Answer sets of a program file.
    Solve { program: PathBuf },
    /// Compare oracle solutions with the program route, for one peer or all.
    Check {
        system: PathBuf,
        #[arg(long)]
        peer: Option<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Asp)]
        method: MethodArg,
        #[arg(long)]
        max_new_atoms: Option<usize>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Args, Debug)]
pub struct Run {
    pub system: PathBuf,
    #[arg(long)]
    pub peer: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Oracle)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = Mode::Direct)]
    pub mode: Mode,
    /// Cap on atoms inserted along one repair path.
    #[arg(long)]
    pub max_new_atoms: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Oracle,
    Asp,
    Lav,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Direct,
    Transitive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Inconsistent,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecSummary {
    pub owner: String,
    pub class: String,
    pub constraint: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decs: Option<Vec<DecSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solutions: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    /// Solutions found by only one route of a comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only_oracle: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only_program: Option<Vec<String>>,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(status: Status) -> Self {
        Report {
            status,
            message: None,
            decs: None,
            solutions: None,
            answers: None,
            models: None,
            program: None,
            only_oracle: None,
            only_program: None,
            warnings: Vec::new(),
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.program {
            out.push_str(p);
            for w in &self.warnings {
                let _ = writeln!(out, "% warning: {w}");
            }
            return out;
        }
        let status = match self.status {
            Status::Ok => "ok",
            Status::Inconsistent => "inconsistent",
            Status::Error => "error",
        };
        let _ = writeln!(out, "status: {status}");
        if let Some(m) = &self.message {
            let _ = writeln!(out, "message: {m}");
        }
        for d in self.decs.iter().flatten() {
            let _ = writeln!(out, "{} [{}]: {}", d.owner, d.class, d.constraint);
        }
        let sets = |out: &mut String, label: &str, rows: &Option<Vec<Vec<String>>>| {
            if let Some(rows) = rows {
                let _ = writeln!(out, "{label}: {}", rows.len());
                for r in rows {
                    let _ = writeln!(out, "{{{}}}", r.join(", "));
                }
            }
        };
        sets(&mut out, "solutions", &self.solutions);
        if let Some(rows) = &self.answers {
            let _ = writeln!(out, "answers: {}", rows.len());
            for r in rows {
                let _ = writeln!(out, "({})", r.join(","));
            }
        }
        sets(&mut out, "models", &self.models);
        for (label, rows) in [("only oracle", &self.only_oracle), ("only program", &self.only_program)] {
            for r in rows.iter().flatten() {
                let _ = writeln!(out, "{label}: {r}");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Exit code and rendered report of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

enum Failure {
    Input(String),
    Unsupported(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Unsupported(_) | Error::NotHcf(_) | Error::NotFullInclusion(_) | Error::SearchCapExceeded { .. } => {
                Failure::Unsupported(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<System, Failure> {
    Ok(parse_system(&read(path)?)?)
}

fn instance_rows(sols: &[Instance]) -> Vec<Vec<String>> {
    sols.iter()
        .map(|s| s.atoms().iter().map(ToString::to_string).collect())
        .collect()
}

fn options(max_new_atoms: Option<usize>, threads: usize) -> OracleOptions {
    OracleOptions {
        max_new_atoms,
        threads,
        ..OracleOptions::default()
    }
}

fn method_of(run: &Run) -> Result<Method, Failure> {
    Ok(match (run.method, run.mode) {
        (MethodArg::Oracle, Mode::Direct) => Method::Oracle,
        (MethodArg::Asp, Mode::Direct) => Method::Asp,
        (MethodArg::Lav, Mode::Direct) => Method::Lav,
        (MethodArg::Asp, Mode::Transitive) => Method::Transitive,
        (m, Mode::Transitive) => {
            return Err(Failure::Unsupported(format!(
                "transitive mode needs the asp method, not {}",
                m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
            )))
        }
    })
}

fn program_for(system: &System, peer: &PeerId, method: MethodArg, mode: Mode) -> Result<Program, Failure> {
    Ok(match (method, mode) {
        (MethodArg::Lav, Mode::Direct) => compile_lav(system, peer)?,
        (MethodArg::Lav, Mode::Transitive) => {
            return Err(Failure::Unsupported("transitive mode needs the asp method, not lav".into()))
        }
        (_, Mode::Direct) => compile_direct(system, peer)?,
        (_, Mode::Transitive) => compile_transitive(system, peer)?,
    })
}

fn solution_report(sols: SolutionSet) -> Report {
    let mut r = Report::new(if sols.is_empty() { Status::Inconsistent } else { Status::Ok });
    r.solutions = Some(instance_rows(&sols.solutions));
    r.warnings = sols.warnings;
    r
}

fn execute(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Validate { system } => {
            let s = load(system)?;
            for p in s.peers().keys() {
                crate::trust::neighborhood(&s, p)?;
            }
            let mut r = Report::new(Status::Ok);
            let mut decs = Vec::new();
            for c in s.decs().iter().chain(s.peers().values().flat_map(|p| &p.ics)) {
                let owner = match &c.owner {
                    crate::lang::ast::ConstraintOwner::Dec { from, to } => format!("dec {from} -> {to}"),
                    _ => "ic".to_string(),
                };
                decs.push(DecSummary {
                    owner,
                    class: classify_dec(c).to_string(),
                    constraint: c.to_string(),
                });
            }
            r.message = Some(format!(
                "{} peers, {} decs, {} trust triples",
                s.peers().len(),
                s.decs().len(),
                s.trust().len()
            ));
            r.decs = Some(decs);
            Ok(r)
        }
        Command::Solutions(run) => {
            let s = load(&run.system)?;
            let peer = PeerId::new(run.peer.as_str());
            let sols = query::solutions(&s, &peer, method_of(run)?, &options(run.max_new_atoms, run.threads))?;
            Ok(solution_report(sols))
        }
        Command::Answer { run, query: qpath, both } => {
            let s = load(&run.system)?;
            let peer = PeerId::new(run.peer.as_str());
            let q = parse_query(read(qpath)?.trim())?;
            let opts = options(run.max_new_atoms, run.threads);
            let method = method_of(run)?;
            let a = query::peer_consistent_answers(&s, &peer, &q, method, &opts)?;
            let rows = |t: &query::TupleSet| -> Vec<Vec<String>> {
                t.rows
                    .iter()
                    .map(|r| r.iter().map(|c| c.to_string()).collect())
                    .collect()
            };
            let mut r = Report::new(if a.inconsistent { Status::Inconsistent } else { Status::Ok });
            r.answers = Some(rows(&a.answers));
            r.warnings = a.warnings;
            if *both {
                let other_method = if method == Method::Oracle { Method::Asp } else { Method::Oracle };
                let b = query::peer_consistent_answers(&s, &peer, &q, other_method, &opts)?;
                if b.answers != a.answers || b.inconsistent != a.inconsistent {
                    r.status = Status::Error;
                    r.message = Some(format!("routes disagree: {} vs {}", a.answers, b.answers));
                }
            }
            Ok(r)
        }
        Command::Compile {
            run,
            unfold_choice: unfold,
            shift_hcf,
        } => {
            let s = load(&run.system)?;
            let peer = PeerId::new(run.peer.as_str());
            let mut p = program_for(&s, &peer, run.method, run.mode)?;
            if *unfold {
                p = unfold_choice(&p);
            }
            if *shift_hcf {
                p = shift_disjunctions(&p)?;
            }
            let mut r = Report::new(Status::Ok);
            r.program = Some(p.to_string());
            r.warnings = p.warnings;
            Ok(r)
        }
        Command::Solve { program } => {
            let p = parse_program(&read(program)?)?;
            let models = answer_sets(&unfold_choice(&p))?;
            let mut r = Report::new(if models.is_empty() { Status::Inconsistent } else { Status::Ok });
            r.models = Some(models.iter().map(|m| m.strings()).collect());
            Ok(r)
        }
        Command::Check {
            system,
            peer,
            method,
            max_new_atoms,
            threads,
        } => {
            let s = load(system)?;
            let peers: Vec<PeerId> = match peer {
                Some(p) => vec![PeerId::new(p.as_str())],
                None => s.peers().keys().cloned().collect(),
            };
            let route = match method {
                MethodArg::Lav => Method::Lav,
                _ => Method::Asp,
            };
            let opts = options(*max_new_atoms, *threads);
            let mut r = Report::new(Status::Ok);
            let mut only_oracle = Vec::new();
            let mut only_program = Vec::new();
            let mut lines = Vec::new();
            for p in &peers {
                let o = query::solutions(&s, p, Method::Oracle, &opts)?;
                let a = query::solutions(&s, p, route, &opts)?;
                for x in &o.solutions {
                    if !a.solutions.contains(x) {
                        only_oracle.push(format!("{p} {x}"));
                    }
                }
                for x in &a.solutions {
                    if !o.solutions.contains(x) {
                        only_program.push(format!("{p} {x}"));
                    }
                }
                lines.push(format!("{p}={}", o.solutions.len()));
                r.warnings.extend(o.warnings);
            }
            r.warnings.dedup();
            let equal = only_oracle.is_empty() && only_program.is_empty();
            r.message = Some(format!(
                "{}; {}",
                if equal { "equal" } else { "unequal" },
                lines.join(", ")
            ));
            if !equal {
                r.status = Status::Error;
                r.only_oracle = Some(only_oracle);
                r.only_program = Some(only_program);
            }
            Ok(r)
        }
    }
}

/// Runs one invocation on already-split arguments (without the program name).
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("peerdx")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return Outcome {
                code,
                stdout: e.to_string(),
            };
        }
    };
    let (report, code) = match execute(&cli) {
        Ok(r) => {
            let code = match r.status {
                Status::Ok => 0,
                Status::Inconsistent | Status::Error => 1,
            };
            (r, code)
        }
        Err(f) => {
            let (msg, code) = match f {
                Failure::Input(m) => (m, 2),
                Failure::Unsupported(m) => (m, 3),
            };
            let mut r = Report::new(Status::Error);
            r.message = Some(msg);
            (r, code)
        }
    };
    let stdout = match cli.format {
        Format::Text => report.render_text(),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    Outcome { code, stdout }
}
