//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the exit code: 0 for a true verdict, 1 for a false one, 2 for
//! input or usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::equilibrium::{enumerate_sse_with, is_sse, SearchLimits, SseViolation, DEFAULT_MAX_PROFILES};
use crate::error::{Error, Result};
use crate::game::{validate_game, check_perfect_recall, expected_utilities, GameTree, PlayerId, StrategyProfile};
use crate::io::{game_to_json, load_game, load_strategy, save_game, strategy_to_json, to_text};
use crate::protocols::coloring::{build_three_coloring, Graph};
use crate::protocols::mip::{toy_clause_variable_mip, toy_lottery_mip, Cnf};
use crate::protocols::mrip::{build_mrip_simulation, MripSpec};
use crate::protocols::nexp::build_nexp_protocol;
use crate::protocols::pnexp::{build_pnexp_protocol, OracleMachine};
use crate::protocols::ProtocolGame;
use crate::pruning::{prune_nature, verify_pruning};
use crate::rational::{fmt_rational, parse_rational, Rational};
use crate::subforms::find_dominant_sse_with;
use crate::utility_gap::{answer_bit_distribution, verify_utility_gap};

pub const DEFAULT_MAX_NODES: usize = 100_000;

#[derive(Parser, Debug)]
#[command(name = "ncrip", version, about = "Build and analyze rational-proof protocols as extensive-form games")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Write the report (or built game) here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_PROFILES)]
    max_profiles: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Protocol {
    /// Instance: edge list.
    ThreeColoring,
    /// Instance: DIMACS CNF, or `--lottery K` without an instance.
    Nexp,
    /// Instance: machine description (JSON).
    Pnexp,
    /// Instance: MRIP description (JSON).
    Mrip,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a protocol game and write it as a game file.
    Build {
        #[arg(value_enum)]
        protocol: Protocol,
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        /// Use the lottery MIP with soundness 1/K instead of a CNF.
        #[arg(long)]
        lottery: Option<usize>,
        #[arg(long, default_value_t = crate::protocols::coloring::DEFAULT_VERTEX_CAP)]
        vertex_cap: usize,
        /// Also write the honest strategy profile here.
        #[arg(long)]
        strategy_out: Option<PathBuf>,
    },
    /// Check game invariants and perfect recall.
    Validate { game: PathBuf },
    /// Check whether a profile is a strong sequential equilibrium.
    CheckSse { game: PathBuf, strategy: PathBuf },
    /// List every pure SSE.
    EnumerateSse { game: PathBuf },
    /// Find the first dominant SSE in canonical order.
    FindDominant { game: PathBuf },
    /// Measure the utility gap over all profiles.
    CheckGap {
        game: PathBuf,
        #[arg(long)]
        alpha: String,
        /// Reference profile; defaults to the dominant SSE.
        #[arg(long)]
        strategy: Option<PathBuf>,
        /// Correct answer bit; defaults to the reference profile's bit.
        #[arg(long)]
        correct_bit: Option<u8>,
    },
    /// Shrink Nature supports around one prover's payments.
    Prune {
        game: PathBuf,
        #[arg(long)]
        alpha: u64,
        #[arg(long)]
        prover: String,
        #[arg(long)]
        strategy: Option<PathBuf>,
        /// Write the pruned game here.
        #[arg(long)]
        pruned: Option<PathBuf>,
    },
}

struct Report {
    ok: bool,
    value: Value,
    text: String,
}

fn r(x: &Rational) -> Value {
    Value::String(fmt_rational(x))
}

fn rs(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(r).collect())
}

fn join(xs: &[Rational]) -> String {
    xs.iter().map(fmt_rational).collect::<Vec<_>>().join(", ")
}

fn profile_line(game: &GameTree, s: &StrategyProfile) -> String {
    s.to_labels(game).iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("; ")
}

impl Global {
    fn limits(&self) -> SearchLimits {
        SearchLimits { max_profiles: self.max_profiles, jobs: self.jobs.max(1) }
    }

    fn game(&self, path: &Path) -> Result<GameTree> {
        let (game, _) = load_game(path)?;
        if game.nodes().len() > self.max_nodes {
            return Err(Error::TooManyNodes { nodes: game.nodes().len(), cap: self.max_nodes });
        }
        Ok(game)
    }

    fn dominant(&self, game: &GameTree) -> Result<StrategyProfile> {
        find_dominant_sse_with(game, self.limits(), true)?.ok_or_else(|| Error::Instance("the game has no dominant SSE".into()))
    }
}

fn build(global: &Global, protocol: Protocol, instance: Option<&Path>, repetitions: usize, lottery: Option<usize>, vertex_cap: usize) -> Result<ProtocolGame> {
    let need = || instance.ok_or_else(|| Error::Instance("this protocol needs an instance file".into()));
    let built = match protocol {
        Protocol::ThreeColoring => build_three_coloring(&Graph::load(need()?)?, vertex_cap)?,
        Protocol::Nexp => {
            let mip = match lottery {
                Some(k) => toy_lottery_mip(k)?,
                None => toy_clause_variable_mip(&Cnf::load(need()?)?, repetitions)?,
            };
            build_nexp_protocol(&mip)?
        }
        Protocol::Pnexp => build_pnexp_protocol(&OracleMachine::load(need()?)?)?,
        Protocol::Mrip => build_mrip_simulation(&MripSpec::load(need()?)?)?,
    };
    if built.game.nodes().len() > global.max_nodes {
        return Err(Error::TooManyNodes { nodes: built.game.nodes().len(), cap: global.max_nodes });
    }
    Ok(built)
}

fn violation_json(v: &SseViolation) -> Value {
    json!({
        "set": v.set,
        "reachable": v.reachable,
        "history": v.history,
        "belief": v.belief.as_deref().map(rs),
        "current": v.current,
        "better": v.better,
        "delta": r(&v.delta),
    })
}

fn execute(cli: &Cli) -> Result<Report> {
    let g = &cli.global;
    match &cli.command {
        Command::Build { protocol, instance, repetitions, lottery, vertex_cap, strategy_out } => {
            let built = build(g, *protocol, instance.as_deref(), *repetitions, *lottery, *vertex_cap)?;
            if let Some(p) = strategy_out {
                std::fs::write(p, to_text(&strategy_to_json(&built.game, &built.honest)))?;
            }
            // The game file itself is the report.
            let value = game_to_json(&built.game, None);
            let text = to_text(&value);
            Ok(Report { ok: true, value, text })
        }
        Command::Validate { game } => {
            let game = g.game(game)?;
            let mut found: Vec<Value> = Vec::new();
            let mut text = String::new();
            for v in validate_game(&game).iter().chain(check_perfect_recall(&game).iter()) {
                found.push(json!({"history": v.history, "message": v.message}));
                text.push_str(&format!("violation: {v}\n"));
            }
            let ok = found.is_empty();
            text.insert_str(0, &format!("valid: {}\nperfect recall: {}\n", game.is_valid(), game.has_perfect_recall()));
            Ok(Report { ok, value: json!({"valid": game.is_valid(), "perfect_recall": game.has_perfect_recall(), "violations": found}), text })
        }
        Command::CheckSse { game, strategy } => {
            let game = g.game(game)?;
            let s = load_strategy(strategy, &game)?;
            let cert = is_sse(&game, &s)?;
            let mut text = format!("sse: {}\noperations: {}\n", cert.verdict, cert.operations);
            for v in &cert.violations {
                let at = match (&v.history, &v.belief) {
                    (Some(h), _) => format!("unreachable, history {h}"),
                    (None, Some(b)) => format!("reachable, belief ({})", join(b)),
                    _ => String::new(),
                };
                text.push_str(&format!("violation at {} ({at}): {} -> {} gains {}\n", v.set, v.current, v.better, fmt_rational(&v.delta)));
            }
            let value = json!({"sse": cert.verdict, "operations": cert.operations, "violations": cert.violations.iter().map(violation_json).collect::<Vec<_>>()});
            Ok(Report { ok: cert.verdict, value, text })
        }
        Command::EnumerateSse { game } => {
            let game = g.game(game)?;
            let sses = enumerate_sse_with(&game, g.limits())?;
            let mut text = format!("count: {}\n", sses.len());
            for s in &sses {
                text.push_str(&profile_line(&game, s));
                text.push('\n');
            }
            let value = json!({"count": sses.len(), "profiles": sses.iter().map(|s| strategy_to_json(&game, s)).collect::<Vec<_>>()});
            Ok(Report { ok: true, value, text })
        }
        Command::FindDominant { game } => {
            let game = g.game(game)?;
            match find_dominant_sse_with(&game, g.limits(), true)? {
                None => Ok(Report { ok: false, value: json!({"found": false}), text: "found: false\n".into() }),
                Some(s) => {
                    let bits = answer_bit_distribution(&game, &s)?;
                    let u = expected_utilities(&game, &s)?;
                    let bit = if bits[1] == crate::rational::one() { Value::from(1) } else if bits[0] == crate::rational::one() { Value::from(0) } else { Value::Null };
                    let text = format!(
                        "found: true\nanswer bit: {}\nanswer bit distribution: {}\nutilities: {}\nprofile: {}\n",
                        bit,
                        join(&bits),
                        join(&u),
                        profile_line(&game, &s)
                    );
                    let value = json!({"found": true, "answer_bit": bit, "answer_bit_distribution": rs(&bits), "utilities": rs(&u), "profile": strategy_to_json(&game, &s)});
                    Ok(Report { ok: true, value, text })
                }
            }
        }
        Command::CheckGap { game, alpha, strategy, correct_bit } => {
            let game = g.game(game)?;
            let alpha = parse_rational(alpha)?;
            if alpha <= crate::rational::zero() {
                return Err(Error::Instance("alpha must be positive".into()));
            }
            let s_star = match strategy {
                Some(p) => load_strategy(p, &game)?,
                None => g.dominant(&game)?,
            };
            let bit = match correct_bit {
                Some(b) if *b <= 1 => *b,
                Some(b) => return Err(Error::Instance(format!("correct bit must be 0 or 1, got {b}"))),
                None => {
                    let d = answer_bit_distribution(&game, &s_star)?;
                    if d[1] == crate::rational::one() { 1 } else if d[0] == crate::rational::one() { 0 } else {
                        return Err(Error::Instance("the reference profile's answer is randomized; pass --correct-bit".into()));
                    }
                }
            };
            let rep = verify_utility_gap(&game, &s_star, &alpha, bit, g.max_profiles)?;
            let gap = rep.measured_gap.as_ref().map(r);
            let witness = rep.worst_witness.as_ref().map(|w| json!({"subform": w.subform, "prover": w.prover, "loss": r(&w.loss)}));
            let text = format!(
                "gap holds: {}\nalpha: {}\nprofiles: {}\nwrong-answer profiles: {}\nmeasured gap: {}\n{}",
                rep.holds,
                fmt_rational(&rep.alpha),
                rep.profiles,
                rep.wrong_profiles,
                rep.measured_gap.as_ref().map_or("none".into(), fmt_rational),
                rep.worst_witness.as_ref().map_or(String::new(), |w| format!("worst witness: prover P{} on {} loses {}\n", w.prover, w.subform, fmt_rational(&w.loss))),
            );
            let value = json!({
                "holds": rep.holds,
                "alpha": r(&rep.alpha),
                "correct_bit": bit,
                "profiles": rep.profiles,
                "wrong_profiles": rep.wrong_profiles,
                "measured_gap": gap,
                "worst_profile": rep.worst_profile.as_ref().map(|s| strategy_to_json(&game, s)),
                "worst_witness": witness,
            });
            Ok(Report { ok: rep.holds, value, text })
        }
        Command::Prune { game, alpha, prover, strategy, pruned } => {
            let game = g.game(game)?;
            if *alpha == 0 {
                return Err(Error::Instance("alpha must be positive".into()));
            }
            let prover = PlayerId::parse(prover)?;
            let s = match strategy {
                Some(p) => load_strategy(p, &game)?,
                None => g.dominant(&game)?,
            };
            let (small, maps) = prune_nature(&game, &s, *alpha, prover)?;
            let rep = verify_pruning(&game, &small, &s, *alpha, prover, g.limits())?;
            if let Some(p) = pruned {
                save_game(p, &small, None)?;
            }
            let opt = |b: Option<bool>| b.map_or("unknown (cap reached)".to_string(), |b| b.to_string());
            let mut text = format!(
                "pruning holds: {}\nalpha: {}\nmax support: {} (bound {}, ok {})\ndrift: {} (bound {}, designated P{} ok {})\nreachable sets preserved: {}\ndominant before: {}\ndominant after: {}\n",
                rep.holds(),
                rep.alpha,
                rep.max_support,
                8 * rep.alpha,
                rep.support_ok,
                join(&rep.drift),
                fmt_rational(&rep.drift_bound),
                rep.designated,
                rep.drift_ok,
                rep.reachable_subset,
                opt(rep.dominant_before),
                opt(rep.dominant_after),
            );
            for m in &maps {
                text.push_str(&format!("node {}: {} outcomes kept of {}\n", m.node, m.keepers.len(), m.groups.iter().map(Vec::len).sum::<usize>()));
            }
            let value = json!({
                "holds": rep.holds(),
                "alpha": rep.alpha,
                "designated": rep.designated,
                "max_support": rep.max_support,
                "support_ok": rep.support_ok,
                "drift": rs(&rep.drift),
                "drift_bound": r(&rep.drift_bound),
                "drift_ok": rep.drift_ok,
                "reachable_subset": rep.reachable_subset,
                "dominant_before": rep.dominant_before,
                "dominant_after": rep.dominant_after,
                "interval_maps": maps.iter().map(|m| json!({"node": m.node, "groups": m.groups, "representatives": rs(&m.representatives), "keepers": m.keepers})).collect::<Vec<_>>(),
            });
            Ok(Report { ok: rep.holds(), value, text })
        }
    }
}

/// Runs one invocation, writing the report to `stdout` (or `--out`) and
/// diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{}", e.render()) } else { write!(stderr, "{}", e.render()) };
            return code;
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let is_build = matches!(cli.command, Command::Build { .. });
    let body = match cli.global.format {
        Format::Structured if !is_build => to_text(&json!({"ok": report.ok, "report": report.value})),
        _ => report.text,
    };
    let written = match &cli.global.out {
        Some(p) => std::fs::write(p, body),
        None => stdout.write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    if report.ok {
        0
    } else {
        1
    }
}
