//! Command-line front end.

use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};

use crate::canon::{canonical_form, Level};
use crate::equivalence::{
    bcong_with, beq_with, derivable_equal, isc_equal, sc_equal, Interpretation, Relation, VerdictReport,
};
use crate::extract::extract_term;
use crate::syntax::{parse, print, Alphabet, Term};
use crate::verify::{completeness_experiment, soundness_experiment, CompletenessConfig, SoundnessConfig};

#[derive(Debug, Parser)]
#[command(name = "pga", version, about = "Instruction sequences: canonical forms, threads and equivalences")]
struct Cli {
    /// Basic instructions: plain symbols or Boolean register instructions `f.p/q`.
    #[arg(long, value_enum, default_value_t = AlphabetArg::Generic, global = true)]
    alphabet: AlphabetArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlphabetArg {
    Generic,
    Br,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a term (or every line of a file) and print it back.
    Fmt {
        #[arg(allow_hyphen_values = true)]
        input: String,
    },
    /// Print a canonical form.
    Canon {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,
        /// Also print the rewrite steps, one `AXIOM @ position` per line.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
        #[arg(allow_hyphen_values = true)]
        term: String,
    },
    /// Print the thread a term produces.
    Extract {
        #[arg(long, value_enum, default_value_t = ExtractFormat::Text)]
        format: ExtractFormat,
        #[arg(allow_hyphen_values = true)]
        term: String,
    },
    /// Decide an equivalence between two terms.
    Eq {
        #[arg(long, value_enum)]
        relation: RelationArg,
        #[arg(long)]
        json: bool,
        /// Treat an unknown derivability verdict as failure.
        #[arg(long)]
        strict: bool,
        #[arg(allow_hyphen_values = true)]
        t1: String,
        #[arg(allow_hyphen_values = true)]
        t2: String,
    },
    /// Run a soundness or completeness experiment.
    Verify {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long, default_value_t = 4)]
        jump_bound: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per axiom (soundness) or random cross-group pairs
        /// (completeness beyond the full cross product).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExtractFormat {
    Text,
    Dot,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelationArg {
    Isc,
    Sc,
    Beq,
    Bcong,
    Derive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Soundness,
    Completeness,
}

/// Error that maps to exit code 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code: 0 for success, equality or a passing experiment, 1 for
/// inequality, a failing experiment or (with `--strict`) an unknown
/// verdict, 2 for usage and internal errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let (alphabet, interp) = match cli.alphabet {
        AlphabetArg::Generic => (Alphabet::any(), Interpretation::Generic),
        AlphabetArg::Br => (Alphabet::any_bool_reg(), Interpretation::BoolReg),
    };
    let term = |text: &str| -> Result<Term, Failure> { parse(text, &alphabet).map_err(|e| Failure(format!("{text}: {e}"))) };
    match cli.command {
        Command::Fmt { input } => {
            let path = Path::new(&input);
            if path.is_file() {
                let text = std::fs::read_to_string(path)?;
                for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
                    writeln!(out, "{}", print(&term(line)?))?;
                }
            } else {
                writeln!(out, "{}", print(&term(&input)?))?;
            }
            Ok(0)
        }
        Command::Canon { level, trace, json, term: text } => {
            let level = match level {
                1 => Level::First,
                2 => Level::Second,
                _ => Level::Third,
            };
            let (seq, steps) = canonical_form(&term(&text)?, level, interp.normalizer())?;
            if json {
                let value = serde_json::json!({ "form": seq, "trace": steps });
                writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
            } else {
                writeln!(out, "{seq}")?;
                if trace {
                    write!(out, "{}", steps.to_text())?;
                }
            }
            Ok(0)
        }
        Command::Extract { format, term: text } => {
            let thread = extract_term(&term(&text)?);
            match format {
                ExtractFormat::Text => write!(out, "{thread}")?,
                ExtractFormat::Dot => write!(out, "{}", thread.to_dot("thread"))?,
                ExtractFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&thread)?)?,
            }
            Ok(0)
        }
        Command::Eq {
            relation,
            json,
            strict,
            t1,
            t2,
        } => {
            let (t1, t2) = (term(&t1)?, term(&t2)?);
            let sem = interp.semantics();
            let report = match relation {
                RelationArg::Isc => VerdictReport::boolean(Relation::Isc, isc_equal(&t1, &t2)),
                RelationArg::Sc => VerdictReport::boolean(Relation::Sc, sc_equal(&t1, &t2)),
                RelationArg::Beq => VerdictReport::boolean(Relation::Beq, beq_with(&t1, &t2, sem)),
                RelationArg::Bcong => VerdictReport::congruence(bcong_with(&t1, &t2, sem)),
                RelationArg::Derive => VerdictReport::derivability(derivable_equal(&t1, &t2, interp)?),
            };
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                write!(out, "{}", report.verdict)?;
                if let Some(w) = report.witness {
                    write!(out, " (context l={}, n={}; differs at depth {})", w.l, w.n, w.depth)?;
                }
                writeln!(out)?;
                if let Some(trace) = &report.trace {
                    for (side, steps) in [("left", &trace.left), ("right", &trace.right)] {
                        for step in steps.steps() {
                            writeln!(out, "  {side}: {step}")?;
                        }
                    }
                }
            }
            if report.is_unknown() {
                writeln!(
                    err,
                    "warning: canonical forms differ but no context separates the terms; derivability is undecided"
                )?;
                return Ok(if strict { 1 } else { 0 });
            }
            Ok(if report.is_equal() { 0 } else { 1 })
        }
        Command::Verify {
            experiment,
            max_len,
            jump_bound,
            seed,
            samples,
            json,
        } => match experiment {
            Experiment::Soundness => {
                let config = SoundnessConfig {
                    interp,
                    samples: samples.unwrap_or(100),
                    seed,
                };
                let report = soundness_experiment(&config);
                if json {
                    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
                } else {
                    write!(out, "{}", report.to_text())?;
                }
                Ok(if report.failures() == 0 { 0 } else { 1 })
            }
            Experiment::Completeness => {
                let mut config = CompletenessConfig {
                    interp,
                    max_len,
                    jump_bound,
                    seed,
                    ..Default::default()
                };
                if let Some(s) = samples {
                    config.samples = s;
                }
                let report = completeness_experiment(&config)?;
                if json {
                    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
                } else {
                    write!(out, "{}", report.to_text())?;
                }
                Ok(if report.passed() { 0 } else { 1 })
            }
        },
    }
}
