//! Line-oriented play loop. One command per line; `#` starts a comment.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use forensica_core::geom::{Dir, Facing};
use forensica_core::session::{Command, GameSession, ReportEntry, Response, TextKind};
use forensica_core::station::sim::Cause;
use forensica_core::wire::{Evidence, Game, GroundTruth, WorldBundle};
use serde_json::json;

pub struct Options {
    pub json: bool,
    pub reveal: bool,
}

const HELP: &str = "commands: w a s d | move <dir> | face <dx> <dy> | face <dir> | look | inspect <x> <y> | read [<x> <y>] | claim <body> <cause> <name> | draft | report | quit";
const WINDOW: (i32, i32) = (20, 10);

enum Step {
    Session(Command),
    Local(serde_json::Value, String),
    Stop,
}

struct Player {
    session: GameSession,
    draft: BTreeMap<String, ReportEntry>,
    opts: Options,
}

impl Player {
    fn parse(&mut self, line: &str) -> Result<Step, String> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<i32, String> {
            words.get(i).ok_or_else(|| format!("`{}` needs coordinates", words[0]))?.parse::<i32>().map_err(|e| format!("bad number {:?}: {e}", words[i]))
        };
        match words[0] {
            "help" | "?" => Ok(Step::Local(json!({ "help": HELP }), HELP.into())),
            w if words.len() == 1 && Dir::parse(w).is_some() => Ok(Step::Session(Command::Move { dir: Dir::parse(w).expect("checked") })),
            "move" | "go" => {
                let dir = words.get(1).and_then(|w| Dir::parse(w)).ok_or("`move` needs a direction")?;
                Ok(Step::Session(Command::Move { dir }))
            }
            "face" => {
                let (dx, dy) = if words.len() == 2 {
                    let f = Facing::from_dir(Dir::parse(words[1]).ok_or("`face` needs a direction or dx dy")?);
                    (f.dx, f.dy)
                } else {
                    (num(1)?, num(2)?)
                };
                let now = self.session.facing();
                if (now.dx, now.dy) == (dx, dy) {
                    return Ok(Step::Local(json!({ "facing": now }), "The torch is already aimed that way.".into()));
                }
                Ok(Step::Session(Command::Face { dx, dy }))
            }
            "inspect" | "look" if words.len() == 3 => Ok(Step::Session(Command::Inspect { x: num(1)?, y: num(2)? })),
            "look" | "map" => {
                let rows = self.session.ascii_window(WINDOW.0, WINDOW.1);
                let p = self.session.player();
                let head = format!("{} at ({}, {})", self.session.location(), p.x, p.y);
                Ok(Step::Local(json!({ "location": self.session.location(), "player": p, "map": rows }), format!("{head}\n{}", rows.join("\n"))))
            }
            "inspect" => Err("`inspect` needs coordinates".into()),
            "read" if words.len() == 1 => {
                let p = self.session.player();
                let near = match &self.session.bundle().evidence {
                    Evidence::Station(e) => e.terminals.iter().filter(|t| t.position.chebyshev(p) <= 1).map(|t| t.position).min_by_key(|c| (c.y, c.x)),
                    Evidence::Village(_) => None,
                };
                let c = near.ok_or("no terminal within reach")?;
                Ok(Step::Session(Command::Read { x: c.x, y: c.y }))
            }
            "read" => Ok(Step::Session(Command::Read { x: num(1)?, y: num(2)? })),
            "claim" => {
                if words.len() < 4 {
                    return Err("usage: claim <body-id> <cause> <name>".into());
                }
                let cause = Cause::parse(words[2]).ok_or_else(|| format!("unknown cause {:?}; one of {}", words[2], cause_list()))?;
                let name = words[3..].join(" ");
                self.draft.insert(words[1].to_string(), ReportEntry { name: name.clone(), cause });
                Ok(Step::Local(json!({ "claimed": words[1], "name": name, "cause": cause }), format!("noted: {} is {name}, {}", words[1], cause.key())))
            }
            "draft" => {
                let text = if self.draft.is_empty() {
                    "draft is empty".to_string()
                } else {
                    self.draft.iter().map(|(b, e)| format!("{b}: {}, {}", e.name, e.cause.key())).collect::<Vec<_>>().join("\n")
                };
                Ok(Step::Local(json!({ "draft": self.draft }), text))
            }
            "report" | "submit" => Ok(Step::Session(Command::Report { entries: self.draft.clone() })),
            "answers" if self.opts.reveal => {
                let Some(GroundTruth::Station(t)) = &self.session.bundle().ground_truth else {
                    return Err("this world has no station answers".into());
                };
                for (body, crew_id) in &t.bodies {
                    let name = t.crew.iter().find(|c| &c.id == crew_id).map(|c| c.name.clone()).unwrap_or_default();
                    let cause = t.fates.iter().find(|f| &f.crew_id == crew_id).map(|f| f.cause).unwrap_or(Cause::Fire);
                    self.draft.insert(body.clone(), ReportEntry { name, cause });
                }
                Ok(Step::Local(json!({ "draft": self.draft }), format!("draft filled with {} sealed answers", self.draft.len())))
            }
            "sync" => Ok(Step::Session(Command::Sync {})),
            "quit" | "exit" => Ok(Step::Session(Command::Quit {})),
            "stop" => Ok(Step::Stop),
            other => Err(format!("unknown command {other:?}; try `help`")),
        }
    }

    fn render(&self, r: &Response) -> String {
        let mut lines = Vec::new();
        if let Some(loc) = &r.diff.location {
            lines.push(format!("You enter {loc}."));
        }
        for e in &r.narration {
            let prefix = match e.kind {
                TextKind::Bump => "bump: ",
                TextKind::See => "here: ",
                TextKind::Inspect => "",
                TextKind::Notice => "",
            };
            lines.push(format!("{prefix}{}", e.text));
        }
        if let Some(f) = r.diff.facing {
            lines.push(format!("Torch aimed ({}, {}); {} tiles lit.", f.dx, f.dy, self.session.visible().len()));
        }
        if let Some(p) = r.diff.player {
            lines.push(format!("({}, {}), {} new tiles", p.x, p.y, r.diff.revealed.len()));
        }
        if let Some(m) = &r.message {
            lines.push(format!("[{}] {} {}: {}", m.terminal, m.timestamp, m.sender_name, m.body));
            if let Some(reply) = &m.optional_reply {
                lines.push(format!("    {reply}"));
            }
        }
        if let Some(res) = &r.result {
            lines.push(format!("Score: {} / {}", res.score, res.total));
            for b in &res.reveal {
                let claim = b.claimed.as_ref().map_or("no claim".to_string(), |c| format!("claimed {}, {}", c.name, c.cause.key()));
                lines.push(format!("  {} was {}: {} at {} ({claim}){}", b.body_id, b.name, b.cause.key(), b.timestamp, if b.correct { " correct" } else { "" }));
            }
        }
        if let Some(s) = &r.summary {
            lines.push(format!("Explored: {} moves, {} tiles seen, {} things inspected, {} terminals read.", s.moves, s.tiles_seen, s.objects_inspected, s.terminals_read));
        }
        if let Some(v) = &r.view {
            lines.push(format!("{}: {} at ({}, {}), {} tiles known", v.title, v.location, v.player.x, v.player.y, v.tiles.len()));
        }
        if lines.is_empty() {
            lines.push("Nothing happens.".into());
        }
        lines.join("\n")
    }
}

fn cause_list() -> String {
    Cause::ALL.iter().map(|c| c.key()).collect::<Vec<_>>().join(", ")
}

pub fn run(bundle: WorldBundle, input: Box<dyn BufRead + '_>, out: &mut impl Write, opts: Options) -> io::Result<()> {
    let game = bundle.game;
    let mut player = Player { session: GameSession::new(bundle), draft: BTreeMap::new(), opts };
    let json_mode = player.opts.json;
    let intro = player.session.view();
    if json_mode {
        writeln!(out, "{}", json!({ "view": intro }))?;
    } else {
        writeln!(out, "{}", intro.title)?;
        if game == Game::Station {
            writeln!(out, "Find the bodies, read the terminals, then claim each body's name and cause. Causes: {}.", cause_list())?;
        }
        writeln!(out, "{}", player.session.ascii_window(WINDOW.0, WINDOW.1).join("\n"))?;
    }
    for line in input.lines() {
        let line = line?;
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        if !json_mode {
            writeln!(out, "> {line}")?;
        }
        match player.parse(line) {
            Ok(Step::Stop) => break,
            Ok(Step::Local(value, text)) => {
                if json_mode {
                    writeln!(out, "{value}")?;
                } else {
                    writeln!(out, "{text}")?;
                }
            }
            Ok(Step::Session(cmd)) => match player.session.apply(cmd) {
                Ok(r) => {
                    if json_mode {
                        writeln!(out, "{}", json!({ "ok": r }))?;
                    } else {
                        writeln!(out, "{}", player.render(&r))?;
                    }
                    if r.result.is_some() || r.summary.is_some() {
                        break;
                    }
                }
                Err(e) => {
                    if json_mode {
                        writeln!(out, "{}", json!({ "error": e.to_string() }))?;
                    } else {
                        writeln!(out, "error: {e}")?;
                    }
                }
            },
            Err(msg) => {
                if json_mode {
                    writeln!(out, "{}", json!({ "error": msg }))?;
                } else {
                    writeln!(out, "error: {msg}")?;
                }
            }
        }
    }
    Ok(())
}
