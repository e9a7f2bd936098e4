//! `forensica`: generate, calibrate, validate, trace and play worlds from the terminal.

mod play;

use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forensica_core::calibrate::{calibrate_station, calibrate_village, suggest_nudges};
use forensica_core::config::GenConfig;
use forensica_core::error::{ConfigError, GenerationError, WireError};
use forensica_core::generate::generate;
use forensica_core::rng::WorldSeed;
use forensica_core::station::run_station_sim;
use forensica_core::village::run_village;
use forensica_core::wire::{parse_world, serialize_world, Evidence, Game, GroundTruth, WorldBundle, FILE_EXTENSION};
use serde_json::json;
use thiserror::Error;

pub const TEST_ENV: &str = "FORENSICA_TEST";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("generation failed: {0}")]
    Generation(#[from] GenerationError),
    #[error("{path}: {source}")]
    World { path: String, source: WireError },
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "forensica", version, about = "Forensic exploration worlds: build, inspect and investigate")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON generation config; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one world and write it as a bundle file.
    Generate {
        /// `village` or `station`.
        game: Game,
        /// Decimal or 0x-prefixed hex.
        #[arg(long, value_parser = parse_seed)]
        seed: WorldSeed,
        #[command(flatten)]
        config: ConfigArg,
        /// Output path; defaults to `<game>-<seed>.forensica.json`.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run many seeds and tabulate village endings or station death causes.
    Calibrate {
        /// `village` or `station`.
        game: Game,
        #[arg(long, default_value_t = 500)]
        runs: u32,
        /// Run i uses seed `seed_base + i`.
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[command(flatten)]
        config: ConfigArg,
        /// Hill-climb rounds for suggested coefficient changes (village only).
        #[arg(long)]
        nudge: Option<u32>,
        /// Where to write the tuned config when nudging.
        #[arg(long, requires = "nudge")]
        write_config: Option<PathBuf>,
    },
    /// Explore a world file with text commands read from stdin or a script.
    Play {
        /// A `.forensica.json` world file.
        world: PathBuf,
        /// Read commands from this file instead of stdin.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Unseal the answers (only honoured when FORENSICA_TEST=1).
        #[arg(long)]
        reveal: bool,
    },
    /// Parse and check a world file.
    Validate {
        /// A `.forensica.json` world file.
        world: PathBuf,
    },
    /// Print the simulation log for a seed as JSON lines.
    Trace {
        /// `village` or `station`.
        game: Game,
        /// Decimal or 0x-prefixed hex.
        #[arg(long, value_parser = parse_seed)]
        seed: WorldSeed,
        #[command(flatten)]
        config: ConfigArg,
        /// Write here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn parse_seed(s: &str) -> Result<WorldSeed, String> {
    WorldSeed::parse(s).map_err(|e| e.to_string())
}

fn load_config(arg: &ConfigArg) -> Result<GenConfig, CliError> {
    match &arg.config {
        None => Ok(GenConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            Ok(GenConfig::from_json(&text)?)
        }
    }
}

pub fn load_world(path: &Path) -> Result<WorldBundle, CliError> {
    let bytes = std::fs::read(path)?;
    parse_world(&bytes).map_err(|source| CliError::World { path: path.display().to_string(), source })
}

fn summary(b: &WorldBundle) -> serde_json::Value {
    match (&b.evidence, &b.ground_truth) {
        (Evidence::Village(e), truth) => {
            let mut v = json!({ "buildings": e.buildings.len() });
            if let Some(GroundTruth::Village(t)) = truth {
                v["ending"] = json!(t.history.ending.kind.key());
                v["ticks"] = json!(t.history.tick_count);
            }
            v
        }
        (Evidence::Station(e), truth) => {
            let mut v = json!({ "station": e.name, "rooms": e.rooms.len(), "terminals": e.terminals.len() });
            if let Some(GroundTruth::Station(t)) = truth {
                v["crew"] = json!(t.crew.len());
                v["ticks"] = json!(t.ticks);
            }
            v
        }
    }
}

fn summary_line(b: &WorldBundle) -> String {
    let s = summary(b);
    match b.game {
        Game::Village => format!(
            "village seed {}: ending {} after {} ticks, {} buildings",
            b.seed.0,
            s["ending"].as_str().unwrap_or("sealed"),
            s["ticks"],
            s["buildings"]
        ),
        Game::Station => format!(
            "station seed {} ({}): {} crew, {} rooms, {} terminals",
            b.seed.0,
            s["station"].as_str().unwrap_or_default(),
            s["crew"],
            s["rooms"],
            s["terminals"]
        ),
    }
}

fn game_key(g: Game) -> &'static str {
    match g {
        Game::Village => "village",
        Game::Station => "station",
    }
}

fn emit(out: &mut impl Write, json_mode: bool, value: serde_json::Value, text: impl FnOnce() -> String) -> io::Result<()> {
    if json_mode {
        writeln!(out, "{value}")
    } else {
        writeln!(out, "{}", text())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let json_mode = cli.json;
    match cli.command {
        Command::Generate { game, seed, config, out: path } => {
            let cfg = load_config(&config)?;
            let bundle = generate(game, seed, &cfg)?;
            let path = path.unwrap_or_else(|| PathBuf::from(format!("{}-{}{FILE_EXTENSION}", game_key(game), seed.0)));
            std::fs::write(&path, serialize_world(&bundle))?;
            let value = json!({ "path": path.display().to_string(), "game": game, "seed": seed.0.to_string(), "summary": summary(&bundle) });
            emit(&mut out, json_mode, value, || format!("{} -> {}", summary_line(&bundle), path.display()))?;
        }
        Command::Calibrate { game, runs, seed_base, config, nudge, write_config } => {
            if runs == 0 {
                return Err(CliError::Usage("--runs must be at least 1".into()));
            }
            let cfg = load_config(&config)?;
            match game {
                Game::Village => {
                    let report = calibrate_village(&cfg, runs, seed_base);
                    let mut value = json!({ "game": "village", "report": report });
                    let mut text = format!("{runs} village runs from seed {seed_base}\n");
                    for r in &report.rows {
                        text += &format!("  {:<22} {:>5}  {:.3}\n", r.ending.key(), r.count, r.frequency);
                    }
                    text += &format!("  non-converged {}  mean ticks {:.1}", report.non_converged, report.mean_ticks);
                    if let Some(rounds) = nudge {
                        let (tuned, nudges, tuned_report) = suggest_nudges(&cfg, runs, seed_base, rounds);
                        for n in &nudges {
                            text += &format!("\n  nudge {}: {} -> {}", n.field, n.from, n.to);
                        }
                        if nudges.is_empty() {
                            text += "\n  no nudge improves the balance";
                        }
                        let freqs: Vec<String> = tuned_report.rows.iter().map(|r| format!("{:.3}", r.frequency)).collect();
                        text += &format!("\n  tuned frequencies {}", freqs.join(" "));
                        value["nudges"] = json!(nudges);
                        value["tuned_report"] = json!(tuned_report);
                        if let Some(p) = write_config {
                            std::fs::write(&p, serde_json::to_string_pretty(&tuned).expect("config serializes") + "\n")?;
                            value["tuned_config"] = json!(p.display().to_string());
                        }
                    }
                    emit(&mut out, json_mode, value, || text)?;
                }
                Game::Station => {
                    if nudge.is_some() {
                        return Err(CliError::Usage("--nudge applies to village calibration only".into()));
                    }
                    let report = calibrate_station(&cfg, runs, seed_base);
                    let mut text = format!("{runs} station runs from seed {seed_base}, {} deaths\n", report.deaths);
                    for r in &report.rows {
                        text += &format!("  {:<22} {:>5}  {:.3}\n", r.cause.key(), r.count, r.frequency);
                    }
                    text += &format!("  failed {}  mean ticks {:.1}", report.failed, report.mean_ticks);
                    emit(&mut out, json_mode, json!({ "game": "station", "report": report }), || text)?;
                }
            }
        }
        Command::Validate { world } => {
            let bundle = load_world(&world)?;
            let value = json!({ "ok": true, "game": bundle.game, "seed": bundle.seed.0.to_string(), "sealed": bundle.ground_truth.is_some() });
            emit(&mut out, json_mode, value, || format!("ok: {}", summary_line(&bundle)))?;
        }
        Command::Trace { game, seed, config, out: path } => {
            let cfg = load_config(&config)?;
            let text: String = match game {
                Game::Village => run_village(seed, &cfg)
                    .map_err(GenerationError::from)?
                    .birth_trace
                    .iter()
                    .enumerate()
                    .map(|(tick, d)| json!({ "tick": tick + 1, "births": d.births, "deaths": d.deaths }).to_string() + "\n")
                    .collect(),
                Game::Station => run_station_sim(seed, &cfg)?.trace_jsonl(),
            };
            match path {
                Some(p) => {
                    std::fs::write(&p, &text)?;
                    let lines = text.lines().count();
                    emit(&mut out, json_mode, json!({ "path": p.display().to_string(), "lines": lines }), || format!("{lines} lines -> {}", p.display()))?;
                }
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Play { world, script, reveal } => {
            if reveal && std::env::var(TEST_ENV).as_deref() != Ok("1") {
                return Err(CliError::Usage(format!("--reveal is only available with {TEST_ENV}=1")));
            }
            let bundle = load_world(&world)?;
            let input: Box<dyn BufRead> = match script {
                Some(p) => Box::new(BufReader::new(std::fs::File::open(p)?)),
                None => Box::new(io::stdin().lock()),
            };
            play::run(bundle, input, &mut out, play::Options { json: json_mode, reveal })?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_mode = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json_mode {
                println!("{}", json!({ "error": e.to_string(), "exit_code": e.exit_code() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
