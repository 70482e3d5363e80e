//! The `wroca` command line.
//!
//! Exit codes: 0 success, 1 negative answer (violations, a witness, not a
//! pumping), 2 usage, I/O, parse or mismatch errors, 3 unknown symbol,
//! 4 budget exceeded, 5 unfolding too large.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::json;

use wroca::equiv::{check_equivalence, EquivError, EquivOptions, Evidence, Mode, Outcome};
use wroca::format::{self, Loaded, StatsJson, VerdictJson};
use wroca::testkit::{self, GeneratorConfig};
use wroca::unfold::{compute_bounds_with, BoundPolynomials, UnfoldError, DEFAULT_STATE_CAP};
use wroca::{Alphabet, Configuration, Dwroca, FieldSpec, PumpingIntervals, UnfoldBound, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNKNOWN_SYMBOL: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_TOO_LARGE: i32 = 5;

/// Environment variable overriding the unfolding state cap.
pub const STATE_CAP_VAR: &str = "WROCA_STATE_CAP";

#[derive(Parser, Debug)]
#[command(name = "wroca", version, about = "Weighted one-counter automata: runs, unfoldings and equivalence")]
pub struct Cli {
    /// Output format. JSON is stable; human output is not.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Unfold and compare with the basis worklist.
    Pipeline,
    /// Enumerate every word up to --max-len.
    Oracle,
}

#[derive(Args, Debug, Clone)]
struct WordArgs {
    /// Comma-separated symbols.
    #[arg(conflicts_with = "empty", required_unless_present = "empty")]
    word: Option<String>,
    /// Read WORD as a sequence of one-character symbols.
    #[arg(long)]
    letters: bool,
    /// Use the empty word.
    #[arg(long)]
    empty: bool,
}

#[derive(Args, Debug, Clone)]
struct PolynomialArgs {
    /// Coefficient of P1(K) = c * K^e.
    #[arg(long, default_value_t = BoundPolynomials::default().p1_coefficient)]
    p1_coeff: u64,
    /// Exponent of P1.
    #[arg(long, default_value_t = BoundPolynomials::default().p1_exponent)]
    p1_exp: u32,
    /// Coefficient of P2(K) = c * K^e.
    #[arg(long, default_value_t = BoundPolynomials::default().p2_coefficient)]
    p2_coeff: u64,
    /// Exponent of P2.
    #[arg(long, default_value_t = BoundPolynomials::default().p2_exponent)]
    p2_exp: u32,
}

impl PolynomialArgs {
    fn polynomials(&self) -> BoundPolynomials {
        BoundPolynomials {
            p1_coefficient: self.p1_coeff,
            p1_exponent: self.p1_exp,
            p2_coefficient: self.p2_coeff,
            p2_exponent: self.p2_exp,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an automaton file for invariant violations.
    Validate { file: PathBuf },
    /// Print the acceptance weight of a word.
    Eval {
        file: PathBuf,
        #[command(flatten)]
        word: WordArgs,
    },
    /// Decide whether two automata assign the same weight to every word.
    Equiv {
        file1: PathBuf,
        file2: PathBuf,
        /// Counter bound M; below P0(K) the verdict is only bounded.
        #[arg(long, conflicts_with = "max_len")]
        bound: Option<BigUint>,
        #[arg(long, value_enum, default_value_t = Method::Pipeline)]
        method: Method,
        /// Longest word the oracle enumerates.
        #[arg(long)]
        max_len: Option<usize>,
        /// Maximum number of words explored by the pipeline.
        #[arg(long, default_value_t = wroca::equiv::DEFAULT_BUDGET)]
        budget: usize,
        #[command(flatten)]
        polynomials: PolynomialArgs,
    },
    /// Write the M-unfolding of an automaton as a weighted automaton.
    Unfold {
        file: PathBuf,
        #[arg(long)]
        bound: BigUint,
        /// Output file; standard output if absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the polynomial bounds for K = |A1| + |A2|.
    Bounds {
        #[arg(long, conflicts_with = "files", required_unless_present = "files")]
        k: Option<u64>,
        /// Two automaton files whose sizes give K.
        #[arg(num_args = 2, value_names = ["FILE1", "FILE2"])]
        files: Vec<PathBuf>,
        #[command(flatten)]
        polynomials: PolynomialArgs,
    },
    /// Generate a random valid automaton.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_states: usize,
        #[arg(long, default_value_t = 3)]
        max_states: usize,
        #[arg(long, default_value_t = 2)]
        symbols: usize,
        /// "rational" or "gf:P".
        #[arg(long, default_value = "rational", value_parser = parse_field)]
        field: FieldSpec,
        #[arg(long, default_value_t = 0.75)]
        density: f64,
        #[arg(long, default_value_t = 0.3)]
        zero_final: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check whether removing intervals from a word is a pumping.
    Pumpcheck {
        file: PathBuf,
        #[command(flatten)]
        word: WordArgs,
        /// Inclusive interval START:END; repeatable.
        #[arg(short, long = "interval", value_parser = parse_interval)]
        intervals: Vec<(usize, usize)>,
        /// Start state (default: the initial state).
        #[arg(long)]
        state: Option<String>,
        /// Start counter value.
        #[arg(long, default_value_t = 0)]
        counter: u64,
    },
}

fn parse_field(text: &str) -> Result<FieldSpec, String> {
    match text {
        "rational" | "Q" => Ok(FieldSpec::Rational),
        _ => {
            let p = text
                .strip_prefix("gf:")
                .ok_or_else(|| format!("expected \"rational\" or \"gf:P\", got {text:?}"))?;
            let p: u64 = p.parse().map_err(|e| format!("{e}"))?;
            FieldSpec::prime(p).map_err(|e| e.to_string())
        }
    }
}

fn parse_interval(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text.split_once(':').ok_or("expected START:END")?;
    let a = a.parse().map_err(|e| format!("{e}"))?;
    let b = b.parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

/// A failure that ends the command with a given exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn error(message: impl Into<String>) -> Self {
        Failure::new(EXIT_ERROR, message)
    }
}

type CmdResult = Result<i32, Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    format: Format,
}

impl Io<'_> {
    fn line(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", text.as_ref());
    }

    fn json(&mut self, value: &impl serde::Serialize) {
        let text = serde_json::to_string_pretty(value).expect("serialisable");
        self.line(text);
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let mut io = Io { out, format: cli.format };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, io: &mut Io) -> CmdResult {
    match command {
        Command::Validate { file } => cmd_validate(&file, io),
        Command::Eval { file, word } => cmd_eval(&file, &word, io),
        Command::Equiv {
            file1,
            file2,
            bound,
            method,
            max_len,
            budget,
            polynomials,
        } => {
            if method == Method::Pipeline && max_len.is_some() {
                return Err(Failure::error("--max-len applies to --method oracle"));
            }
            if method == Method::Oracle && bound.is_some() {
                return Err(Failure::error("--bound applies to --method pipeline"));
            }
            let a1 = load_valid(&file1)?;
            let a2 = load_valid(&file2)?;
            match method {
                Method::Pipeline => {
                    let options = EquivOptions {
                        bound_override: bound,
                        budget,
                        polynomials: polynomials.polynomials(),
                    };
                    cmd_equiv(&a1, &a2, &options, io)
                }
                Method::Oracle => cmd_oracle(&a1, &a2, max_len.unwrap_or(12), io),
            }
        }
        Command::Unfold { file, bound, out } => cmd_unfold(&file, bound, out.as_deref(), io),
        Command::Bounds { k, files, polynomials } => cmd_bounds(k, &files, &polynomials.polynomials(), io),
        Command::Random {
            seed,
            min_states,
            max_states,
            symbols,
            field,
            density,
            zero_final,
            out,
        } => {
            if min_states == 0 || min_states > max_states || symbols == 0 {
                return Err(Failure::error("need 1 <= --min-states <= --max-states and --symbols >= 1"));
            }
            if !(0.0..=1.0).contains(&density) || !(0.0..=1.0).contains(&zero_final) {
                return Err(Failure::error("probabilities must lie in [0, 1]"));
            }
            let cfg = GeneratorConfig {
                seed,
                states: min_states..=max_states,
                alphabet_size: symbols..=symbols,
                field,
                weight_pool: None,
                density,
                zero_final_prob: zero_final,
            };
            let a = testkit::generate(&cfg);
            write_json(&format::automaton_to_json(&a), out.as_deref(), io)?;
            Ok(EXIT_OK)
        }
        Command::Pumpcheck {
            file,
            word,
            intervals,
            state,
            counter,
        } => cmd_pumpcheck(&file, &word, intervals, state.as_deref(), counter, io),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::error(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    format::automaton_from_json(&read(path)?).map_err(|e| Failure::error(format!("{}: {e}", path.display())))
}

fn load_valid(path: &Path) -> Result<Dwroca, Failure> {
    let loaded = load(path)?;
    let violations = loaded.all_violations();
    if let Some(v) = violations.first() {
        return Err(Failure::error(format!(
            "{}: invalid automaton ({} violation(s), first: {v})",
            path.display(),
            violations.len()
        )));
    }
    Ok(loaded.automaton)
}

fn parse_word(alphabet: &Alphabet, args: &WordArgs) -> Result<Word, Failure> {
    let parts: Vec<String> = match (&args.word, args.empty) {
        (_, true) | (None, _) => Vec::new(),
        (Some(w), false) if args.letters => w.chars().map(String::from).collect(),
        (Some(w), false) => w.split(',').map(str::to_string).collect(),
    };
    alphabet
        .parse_word(&parts)
        .map_err(|e| Failure::new(EXIT_UNKNOWN_SYMBOL, e.to_string()))
}

fn write_json(value: &impl serde::Serialize, path: Option<&Path>, io: &mut Io) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let text = serde_json::to_string_pretty(value).expect("serialisable") + "\n";
            fs::write(p, text).map_err(|e| Failure::error(format!("{}: {e}", p.display())))
        }
        None => {
            io.json(value);
            Ok(())
        }
    }
}

fn cmd_validate(file: &Path, io: &mut Io) -> CmdResult {
    let violations = load(file)?.all_violations();
    match io.format {
        Format::Json => io.json(&json!({
            "valid": violations.is_empty(),
            "violations": violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })),
        Format::Human if violations.is_empty() => io.line("OK"),
        Format::Human => {
            for v in &violations {
                io.line(format!("violation: {v}"));
            }
        }
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_eval(file: &Path, word: &WordArgs, io: &mut Io) -> CmdResult {
    let a = load_valid(file)?;
    let w = parse_word(a.alphabet(), word)?;
    let weight = a.accept_weight(&w).expect("word checked against the alphabet");
    match io.format {
        Format::Json => io.json(&json!({
            "word": a.alphabet().names(&w),
            "defined": weight.is_some(),
            "weight": weight.clone().unwrap_or_else(|| a.field().zero()).to_string(),
        })),
        Format::Human => match weight {
            Some(x) => io.line(x.to_string()),
            None => io.line("undefined -> 0"),
        },
    }
    Ok(EXIT_OK)
}

fn render_word(alphabet: &Alphabet, word: &[usize]) -> String {
    if word.is_empty() {
        "ε".to_string()
    } else {
        alphabet.render(word)
    }
}

fn cmd_equiv(a1: &Dwroca, a2: &Dwroca, options: &EquivOptions, io: &mut Io) -> CmdResult {
    let verdict = match check_equivalence(a1, a2, options) {
        Ok(v) => v,
        Err(EquivError::ResourceBudgetExceeded { explored }) => {
            if io.format == Format::Json {
                io.json(&json!({"outcome": "budget_exceeded", "explored": explored}));
            }
            return Err(Failure::new(
                EXIT_BUDGET,
                format!("gave up after exploring {explored} words (raise --budget or set --bound)"),
            ));
        }
        Err(e) => return Err(Failure::error(e.to_string())),
    };
    let alphabet = a1.alphabet();
    match io.format {
        Format::Json => io.json(&format::verdict_to_json(&verdict, alphabet)),
        Format::Human => match (&verdict.witness, &verdict.mode) {
            (Some(w), _) => io.line(format!(
                "not equivalent: witness {} gives {} vs {}",
                render_word(alphabet, &w.word),
                w.left,
                w.right
            )),
            (None, Mode::Theoretical) => io.line(format!("equivalent (theoretical, by {})", verdict.evidence)),
            (None, Mode::BoundedBy(m)) if verdict.evidence == Evidence::Saturation => {
                io.line(format!("equivalent up to counter bound {m} (saturated)"))
            }
            (None, Mode::BoundedBy(m)) => io.line(format!("no witness of length <= {m} (bounded)")),
        },
    }
    Ok(match verdict.outcome {
        Outcome::Equivalent => EXIT_OK,
        Outcome::NotEquivalent => EXIT_NEGATIVE,
    })
}

fn cmd_oracle(a1: &Dwroca, a2: &Dwroca, max_len: usize, io: &mut Io) -> CmdResult {
    let result = testkit::brute_force_witness(a1, a2, max_len, testkit::DEFAULT_ORACLE_BUDGET)
        .map_err(|e| Failure::error(e.to_string()))?;
    let alphabet = a1.alphabet();
    let weights = result.shortest_witness.as_ref().map(|w| {
        (
            a1.weight_or_zero(w).expect("valid word"),
            a2.weight_or_zero(w).expect("valid word"),
        )
    });
    let checked: u64 = result.agreement_table.iter().sum();
    match io.format {
        Format::Json => io.json(&VerdictJson {
            outcome: if result.shortest_witness.is_some() {
                "not_equivalent"
            } else {
                "equivalent"
            },
            witness: result.shortest_witness.as_ref().map(|w| alphabet.render(w)),
            witness_symbols: result.shortest_witness.as_ref().map(|w| alphabet.names(w)),
            f1: weights.as_ref().map(|(x, _)| x.to_string()),
            f2: weights.as_ref().map(|(_, y)| y.to_string()),
            mode: "bounded",
            bound: max_len.to_string(),
            evidence: "enumeration".into(),
            stats: StatsJson {
                explored: checked as usize,
                basis_size: 0,
                max_row: 0,
                max_length: result.agreement_table.len().saturating_sub(1),
            },
        }),
        Format::Human => match (&result.shortest_witness, &weights) {
            (Some(w), Some((x, y))) => io.line(format!(
                "not equivalent: witness {} gives {x} vs {y}",
                render_word(alphabet, w)
            )),
            _ => io.line(format!("no witness of length <= {max_len} (bounded)")),
        },
    }
    Ok(if result.shortest_witness.is_some() {
        EXIT_NEGATIVE
    } else {
        EXIT_OK
    })
}

fn state_cap() -> Result<u64, Failure> {
    match std::env::var(STATE_CAP_VAR) {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::error(format!("{STATE_CAP_VAR} must be a natural number, got {v:?}"))),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn cmd_unfold(file: &Path, bound: BigUint, out: Option<&Path>, io: &mut Io) -> CmdResult {
    let a = load_valid(file)?;
    let cap = state_cap()?;
    let b = wroca::unfold(&a, &UnfoldBound::new(bound), cap).map_err(|e| match e {
        UnfoldError::BoundTooLarge { .. } => Failure::new(EXIT_TOO_LARGE, e.to_string()),
    })?;
    write_json(&format::dwa_to_json(&b), out, io)?;
    if let (Some(path), Format::Human) = (out, io.format) {
        io.line(format!("wrote {} states to {}", b.size(), path.display()));
    }
    Ok(EXIT_OK)
}

fn cmd_bounds(k: Option<u64>, files: &[PathBuf], polys: &BoundPolynomials, io: &mut Io) -> CmdResult {
    let (s1, s2) = match (k, files) {
        (Some(0), _) => return Err(Failure::error("K must be at least 1")),
        (Some(k), _) => (k as usize - 1, 1),
        (None, [f1, f2]) => (load(f1)?.automaton.size(), load(f2)?.automaton.size()),
        _ => return Err(Failure::error("give --k or two files")),
    };
    let r = compute_bounds_with(polys, s1, s2);
    match io.format {
        Format::Json => io.json(&format::bounds_to_json(&r)),
        Format::Human => {
            io.line(format!("K  = {}", r.k));
            io.line(format!("P1 = {}", r.p1));
            io.line(format!("P2 = {}", r.p2));
            io.line(format!("P3 = {}", r.p3));
            io.line(format!("P0 = {}", r.p0));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_pumpcheck(
    file: &Path,
    word: &WordArgs,
    intervals: Vec<(usize, usize)>,
    state: Option<&str>,
    counter: u64,
    io: &mut Io,
) -> CmdResult {
    let a = load_valid(file)?;
    let w = parse_word(a.alphabet(), word)?;
    let intervals = PumpingIntervals::new(intervals).map_err(|e| Failure::error(e.to_string()))?;
    let state = match state {
        Some(name) => a
            .state_index(name)
            .ok_or_else(|| Failure::error(format!("unknown state {name:?}")))?,
        None => a.initial_state(),
    };
    let c = Configuration::new(state, counter, a.initial_weight().clone());
    let ok = a
        .check_pumping(&c, &w, &intervals)
        .map_err(|e| Failure::error(e.to_string()))?;
    match io.format {
        Format::Json => io.json(&json!({ "pumping": ok })),
        Format::Human => io.line(if ok { "pumping" } else { "not a pumping" }),
    }
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}
