//! The playable investigation: movement, bump and hover inspection,
//! torch-lit visibility, terminal reading and the final fate report.
//!
//! Everything a client sees goes through [`SessionView`] and [`Response`];
//! neither carries fates, the body-to-crew mapping or the event log until the
//! report has been submitted.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::content::content;
use crate::error::SessionError;
use crate::evidence::{timestamp, Terminal};
use crate::geom::{Coord, Dir, Facing};
use crate::station::sim::{Cause, MessageKind};
use crate::station::{Area, Station};
use crate::tiles::{ObjectKind, Terrain};
use crate::wire::{Evidence, Game, GroundTruth, StationTruth, WorldBundle};

pub const TORCH_RADIUS: i32 = 9;
pub const VILLAGE_SIGHT_RADIUS: i32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exploring,
    Submitted,
    Quit,
}

/// One claimed identity for a body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEntry {
    pub name: String,
    pub cause: Cause,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Move { dir: Dir },
    Face { dx: i32, dy: i32 },
    Inspect { x: i32, y: i32 },
    Read { x: i32, y: i32 },
    Report { entries: BTreeMap<String, ReportEntry> },
    Quit {},
    Sync {},
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectView {
    pub kind: ObjectKind,
    pub glyph: String,
    pub description: String,
    pub blocking: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_id: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileView {
    pub x: i32,
    pub y: i32,
    pub terrain: Terrain,
    pub glyph: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<ObjectView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageView {
    pub terminal: String,
    pub timestamp: String,
    pub sender_name: String,
    pub kind: MessageKind,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optional_reply: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKind {
    Bump,
    See,
    Inspect,
    Notice,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEvent {
    pub kind: TextKind,
    pub text: String,
}

/// Changes caused by one command. Absent fields did not change.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewDiff {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facing: Option<Facing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub revealed: Vec<TileView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible: Option<Vec<Coord>>,
}

impl ViewDiff {
    pub fn is_empty(&self) -> bool {
        self.player.is_none() && self.facing.is_none() && self.location.is_none() && self.revealed.is_empty() && self.visible.is_none()
    }
}

/// Full client state, sent on creation and on `sync`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub game: Game,
    pub title: String,
    pub width: i32,
    pub height: i32,
    pub player: Coord,
    pub facing: Facing,
    pub location: String,
    pub phase: Phase,
    /// Every tile seen so far.
    pub tiles: Vec<TileView>,
    pub visible: Vec<Coord>,
    pub read_terminals: Vec<String>,
    /// Body ids seen so far, for the report form.
    pub bodies_found: Vec<String>,
    pub causes: Vec<Cause>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyTruth {
    pub body_id: String,
    pub name: String,
    pub cause: Cause,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed: Option<ReportEntry>,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportResult {
    pub score: u32,
    pub total: u32,
    pub reveal: Vec<BodyTruth>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationSummary {
    pub moves: u32,
    pub tiles_seen: usize,
    pub objects_inspected: usize,
    pub terminals_read: usize,
}

/// Player progress, enough to resume on a regenerated world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub player: Coord,
    pub facing: Facing,
    pub discovered: Vec<Coord>,
    pub read_terminals: Vec<String>,
    pub moves: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub narration: Vec<TextEvent>,
    #[serde(default, skip_serializing_if = "ViewDiff::is_empty")]
    pub diff: ViewDiff,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<MessageView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ReportResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<ExplorationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<SessionView>,
}

fn same_name(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    norm(a) == norm(b)
}

/// Number of entries naming the right crew member with the right cause.
pub fn score_report(entries: &BTreeMap<String, ReportEntry>, truth: &StationTruth) -> u32 {
    entries
        .iter()
        .filter(|(body, claim)| {
            let Some(crew_id) = truth.bodies.get(*body) else { return false };
            let crew = truth.crew.iter().find(|c| &c.id == crew_id);
            let fate = truth.fates.iter().find(|f| &f.crew_id == crew_id);
            matches!((crew, fate), (Some(c), Some(f)) if same_name(&c.name, &claim.name) && f.cause == claim.cause)
        })
        .count() as u32
}

#[derive(Clone, Debug)]
pub struct GameSession {
    bundle: WorldBundle,
    station: Option<Station>,
    areas: Vec<Area>,
    player: Coord,
    facing: Facing,
    discovered: BTreeSet<Coord>,
    visible: BTreeSet<Coord>,
    read_terminals: BTreeSet<String>,
    inspected: BTreeSet<Coord>,
    phase: Phase,
    moves: u32,
    result: Option<ReportResult>,
}

impl GameSession {
    pub fn new(bundle: WorldBundle) -> GameSession {
        let station = bundle.station();
        let areas = station.as_ref().map(Station::area_map).unwrap_or_default();
        let player = bundle.world.spawn;
        let facing = match &station {
            Some(s) => {
                let inside = s.entrance().rect.center();
                let (dx, dy) = ((inside.x - player.x).signum(), (inside.y - player.y).signum());
                Facing::new(dx, dy).unwrap_or(Facing { dx: 0, dy: -1 })
            }
            None => Facing { dx: 0, dy: -1 },
        };
        let mut s = GameSession {
            bundle,
            station,
            areas,
            player,
            facing,
            discovered: BTreeSet::new(),
            visible: BTreeSet::new(),
            read_terminals: BTreeSet::new(),
            inspected: BTreeSet::new(),
            phase: Phase::Exploring,
            moves: 0,
            result: None,
        };
        s.refresh();
        s
    }

    /// Restores saved progress; the snapshot must fit this world.
    pub fn resume(bundle: WorldBundle, snap: Snapshot) -> Result<GameSession, SessionError> {
        let mut s = GameSession::new(bundle);
        let w = &s.bundle.world;
        let walkable = |c: Coord| w.in_bounds(c) && w.terrain(c).walkable() && !w.objects_at(c).any(|o| o.blocking);
        if !walkable(snap.player) {
            return Err(SessionError::InvalidCommand(format!("saved position ({}, {}) is not open ground", snap.player.x, snap.player.y)));
        }
        if let Some(c) = snap.discovered.iter().find(|c| !w.in_bounds(**c)) {
            return Err(SessionError::InvalidCommand(format!("saved tile ({}, {}) is outside the world", c.x, c.y)));
        }
        let ids: BTreeSet<&str> = match &s.bundle.evidence {
            Evidence::Station(e) => e.terminals.iter().map(|t| t.id.as_str()).collect(),
            Evidence::Village(_) => BTreeSet::new(),
        };
        if let Some(t) = snap.read_terminals.iter().find(|t| !ids.contains(t.as_str())) {
            return Err(SessionError::InvalidCommand(format!("unknown terminal {t}")));
        }
        s.player = snap.player;
        s.facing = snap.facing;
        s.moves = snap.moves;
        s.discovered.extend(snap.discovered);
        s.read_terminals.extend(snap.read_terminals);
        s.refresh();
        Ok(s)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            player: self.player,
            facing: self.facing,
            discovered: self.discovered.iter().copied().collect(),
            read_terminals: self.read_terminals.iter().cloned().collect(),
            moves: self.moves,
        }
    }

    /// Result of the submitted report, if any.
    pub fn result(&self) -> Option<&ReportResult> {
        self.result.as_ref()
    }

    pub fn game(&self) -> Game {
        self.bundle.game
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn player(&self) -> Coord {
        self.player
    }

    pub fn facing(&self) -> Facing {
        self.facing
    }

    pub fn discovered(&self) -> &BTreeSet<Coord> {
        &self.discovered
    }

    pub fn visible(&self) -> &BTreeSet<Coord> {
        &self.visible
    }

    pub fn bundle(&self) -> &WorldBundle {
        &self.bundle
    }

    /// Places the player directly; used by tests and tools.
    pub fn teleport(&mut self, to: Coord, facing: Facing) {
        self.player = to;
        self.facing = facing;
        self.refresh();
    }

    fn area(&self, c: Coord) -> Area {
        self.areas.get(self.bundle.world.idx(c)).copied().unwrap_or(Area::Structure)
    }

    pub fn location(&self) -> String {
        match &self.station {
            Some(s) => s.location_name(&self.areas, self.player),
            None => "the village".into(),
        }
    }

    /// Tiles lit from the current position and facing.
    pub fn visible_tiles(&self) -> BTreeSet<Coord> {
        let w = &self.bundle.world;
        let p = self.player;
        let mut out = BTreeSet::from([p]);
        if self.station.is_none() {
            let r = VILLAGE_SIGHT_RADIUS;
            for dy in -r..=r {
                for dx in -r..=r {
                    let c = p.offset(dx, dy);
                    if w.in_bounds(c) && dx * dx + dy * dy <= r * r {
                        out.insert(c);
                    }
                }
            }
            return out;
        }
        let here = self.area(p);
        let r = if here == Area::Structure { 2 } else { TORCH_RADIUS };
        for dy in -r..=r {
            for dx in -r..=r {
                let c = p.offset(dx, dy);
                if !w.in_bounds(c) || dx * dx + dy * dy > r * r || !self.facing.within_half_right_angle(dx, dy) {
                    continue;
                }
                let a = self.area(c);
                if a == here || c.around().any(|n| w.in_bounds(n) && self.area(n) == here) {
                    out.insert(c);
                }
            }
        }
        out
    }

    fn refresh(&mut self) -> (Vec<TileView>, bool) {
        let lit = self.visible_tiles();
        let changed = lit != self.visible;
        let mut revealed = Vec::new();
        for c in &lit {
            if self.discovered.insert(*c) {
                revealed.push(self.tile_view(*c));
            }
        }
        self.visible = lit;
        (revealed, changed)
    }

    fn tile_view(&self, c: Coord) -> TileView {
        let w = &self.bundle.world;
        let glyphs = &content().glyphs;
        let terrain = w.terrain(c);
        TileView {
            x: c.x,
            y: c.y,
            terrain,
            glyph: glyphs.terrain(terrain).to_string(),
            objects: w
                .objects_at(c)
                .map(|o| ObjectView {
                    kind: o.kind,
                    glyph: glyphs.object(o.kind).to_string(),
                    description: o.description.clone(),
                    blocking: o.blocking,
                    body_id: o.body_id.clone(),
                })
                .collect(),
        }
    }

    fn terrain_text(&self, t: Terrain) -> String {
        self.bundle.terrain_text.get(t.name()).cloned().unwrap_or_else(|| format!("Some {}.", t.name().replace('_', " ")))
    }

    fn describe_tile(&self, c: Coord, kind: TextKind) -> Vec<TextEvent> {
        let w = &self.bundle.world;
        let mut out: Vec<TextEvent> = w.objects_at(c).map(|o| TextEvent { kind: kind.clone(), text: o.description.clone() }).collect();
        if out.is_empty() || !w.terrain(c).walkable() {
            out.push(TextEvent { kind, text: self.terrain_text(w.terrain(c)) });
        }
        out
    }

    pub fn view(&self) -> SessionView {
        let world = &self.bundle.world;
        let title = match &self.bundle.evidence {
            Evidence::Station(e) => e.name.clone(),
            Evidence::Village(_) => "The ruined village".into(),
        };
        let bodies_found = world
            .entities
            .iter()
            .filter(|o| o.kind == ObjectKind::Body && self.discovered.contains(&o.position))
            .filter_map(|o| o.body_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        SessionView {
            game: self.bundle.game,
            title,
            width: world.width,
            height: world.height,
            player: self.player,
            facing: self.facing,
            location: self.location(),
            phase: self.phase,
            tiles: self.discovered.iter().map(|c| self.tile_view(*c)).collect(),
            visible: self.visible.iter().copied().collect(),
            read_terminals: self.read_terminals.iter().cloned().collect(),
            bodies_found,
            causes: if self.station.is_some() { Cause::ALL.to_vec() } else { Vec::new() },
        }
    }

    fn ensure_active(&self) -> Result<(), SessionError> {
        match self.phase {
            Phase::Exploring => Ok(()),
            Phase::Submitted => Err(SessionError::IllegalState("report already submitted".into())),
            Phase::Quit => Err(SessionError::IllegalState("session has ended".into())),
        }
    }

    fn diff_after(&mut self, old_player: Coord, old_facing: Facing) -> ViewDiff {
        let old_location = self.location_at(old_player);
        let (revealed, changed) = self.refresh();
        let location = self.location();
        ViewDiff {
            player: (self.player != old_player).then_some(self.player),
            facing: (self.facing != old_facing).then_some(self.facing),
            location: (location != old_location).then_some(location),
            revealed,
            visible: changed.then(|| self.visible.iter().copied().collect()),
        }
    }

    fn location_at(&self, c: Coord) -> String {
        match &self.station {
            Some(s) => s.location_name(&self.areas, c),
            None => "the village".into(),
        }
    }

    pub fn apply(&mut self, cmd: Command) -> Result<Response, SessionError> {
        match cmd {
            Command::Sync {} => Ok(Response { view: Some(self.view()), ..Response::default() }),
            Command::Move { dir } => {
                self.ensure_active()?;
                Ok(self.step(dir))
            }
            Command::Face { dx, dy } => {
                self.ensure_active()?;
                let f = Facing::new(dx, dy).ok_or_else(|| SessionError::InvalidCommand(format!("facing ({dx}, {dy}) is not a compass direction")))?;
                let (p, old) = (self.player, self.facing);
                self.facing = f;
                Ok(Response { diff: self.diff_after(p, old), ..Response::default() })
            }
            Command::Inspect { x, y } => {
                let c = Coord { x, y };
                if !self.visible.contains(&c) {
                    return Err(SessionError::NotVisible { x, y });
                }
                self.inspected.insert(c);
                Ok(Response { narration: self.describe_tile(c, TextKind::Inspect), ..Response::default() })
            }
            Command::Read { x, y } => {
                let c = Coord { x, y };
                let terminal = self.terminal_at(c).ok_or(SessionError::NoTerminal { x, y })?.clone();
                if terminal.position.chebyshev(self.player) > 1 {
                    return Err(SessionError::OutOfReach { x, y });
                }
                self.read_terminals.insert(terminal.id.clone());
                let m = terminal.message;
                Ok(Response {
                    message: Some(MessageView {
                        terminal: terminal.id,
                        timestamp: m.timestamp,
                        sender_name: m.sender_name,
                        kind: m.kind,
                        body: m.body,
                        optional_reply: m.optional_reply,
                    }),
                    ..Response::default()
                })
            }
            Command::Report { entries } => self.submit(entries),
            Command::Quit {} => {
                self.ensure_active()?;
                self.phase = Phase::Quit;
                Ok(Response { summary: Some(self.summary()), ..Response::default() })
            }
        }
    }

    fn terminal_at(&self, c: Coord) -> Option<&Terminal> {
        match &self.bundle.evidence {
            Evidence::Station(e) => e.terminals.iter().find(|t| t.position == c),
            Evidence::Village(_) => None,
        }
    }

    fn step(&mut self, dir: Dir) -> Response {
        let (dx, dy) = dir.delta();
        let to = self.player.offset(dx, dy);
        let w = &self.bundle.world;
        if !w.in_bounds(to) {
            return Response { narration: vec![TextEvent { kind: TextKind::Notice, text: "You can't go any further that way.".into() }], ..Response::default() };
        }
        let blocker = w.objects_at(to).find(|o| o.blocking);
        if let Some(o) = blocker {
            self.inspected.insert(to);
            return Response { narration: vec![TextEvent { kind: TextKind::Bump, text: o.description.clone() }], ..Response::default() };
        }
        if !w.terrain(to).walkable() {
            let narration = self.describe_tile(to, TextKind::Bump);
            self.inspected.insert(to);
            return Response { narration, ..Response::default() };
        }
        let (p, f) = (self.player, self.facing);
        self.player = to;
        self.moves += 1;
        let narration = if self.bundle.world.objects_at(to).next().is_some() { self.describe_tile(to, TextKind::See) } else { Vec::new() };
        Response { narration, diff: self.diff_after(p, f), ..Response::default() }
    }

    fn submit(&mut self, entries: BTreeMap<String, ReportEntry>) -> Result<Response, SessionError> {
        let truth = match &self.bundle.ground_truth {
            Some(GroundTruth::Station(t)) => t,
            Some(GroundTruth::Village(_)) => return Err(SessionError::IllegalState("village sessions end with quit, not a report".into())),
            None => return Err(SessionError::IllegalState("this world has no sealed answers to score against".into())),
        };
        self.ensure_active()?;
        if let Some(unknown) = entries.keys().find(|k| !truth.bodies.contains_key(*k)) {
            return Err(SessionError::InvalidCommand(format!("unknown body id {unknown}")));
        }
        let start = match &self.bundle.evidence {
            Evidence::Station(e) => e.start_minute,
            Evidence::Village(_) => 0,
        };
        let score = score_report(&entries, truth);
        let reveal = truth
            .bodies
            .iter()
            .map(|(body, crew_id)| {
                let crew = truth.crew.iter().find(|c| &c.id == crew_id).expect("validated bundle");
                let fate = truth.fates.iter().find(|f| &f.crew_id == crew_id).expect("validated bundle");
                let claimed = entries.get(body).cloned();
                let correct = claimed.as_ref().is_some_and(|c| same_name(&c.name, &crew.name) && c.cause == fate.cause);
                BodyTruth { body_id: body.clone(), name: crew.name.clone(), cause: fate.cause, timestamp: timestamp(start, fate.turn), claimed, correct }
            })
            .collect();
        let result = ReportResult { score, total: truth.crew.len() as u32, reveal };
        self.phase = Phase::Submitted;
        self.result = Some(result.clone());
        Ok(Response { result: Some(result), ..Response::default() })
    }

    pub fn summary(&self) -> ExplorationSummary {
        ExplorationSummary {
            moves: self.moves,
            tiles_seen: self.discovered.len(),
            objects_inspected: self.inspected.len(),
            terminals_read: self.read_terminals.len(),
        }
    }

    /// Glyph window centred on the player: discovered tiles only, `@` for the player.
    pub fn ascii_window(&self, half_w: i32, half_h: i32) -> Vec<String> {
        let w = &self.bundle.world;
        let glyphs = &content().glyphs;
        let mut rows = Vec::new();
        for y in self.player.y - half_h..=self.player.y + half_h {
            let mut row = String::new();
            for x in self.player.x - half_w..=self.player.x + half_w {
                let c = Coord { x, y };
                let ch = if c == self.player {
                    glyphs.player.clone()
                } else if !w.in_bounds(c) || !self.discovered.contains(&c) {
                    glyphs.unseen.clone()
                } else if let Some(o) = w.objects_at(c).last() {
                    glyphs.object(o.kind).to_string()
                } else {
                    glyphs.terrain(w.terrain(c)).to_string()
                };
                row.push_str(&ch);
            }
            rows.push(row.trim_end().to_string());
        }
        rows
    }
}

/// JSON keys that must never reach a client before the report is in.
pub const SEALED_KEYS: &[&str] = &["ground_truth", "fates", "fate", "cause", "crew_id", "crew", "bodies", "events", "history", "bindings", "ending", "sender", "turn"];

/// Every sealed key found anywhere in a JSON value.
pub fn sealed_keys_in(v: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(v: &serde_json::Value, out: &mut Vec<String>) {
        match v {
            serde_json::Value::Object(m) => {
                for (k, child) in m {
                    if SEALED_KEYS.contains(&k.as_str()) {
                        out.push(k.clone());
                    }
                    walk(child, out);
                }
            }
            serde_json::Value::Array(a) => a.iter().for_each(|c| walk(c, out)),
            _ => {}
        }
    }
    walk(v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GenConfig;
    use crate::generate::generate;
    use crate::rng::WorldSeed;
    use crate::station::RoomKind;

    fn station(seed: u64) -> GameSession {
        GameSession::new(generate(Game::Station, WorldSeed(seed), &GenConfig::default()).unwrap())
    }

    fn village(seed: u64) -> GameSession {
        GameSession::new(generate(Game::Village, WorldSeed(seed), &GenConfig::default()).unwrap())
    }

    fn truth(s: &GameSession) -> StationTruth {
        match s.bundle().ground_truth.clone() {
            Some(GroundTruth::Station(t)) => t,
            _ => panic!("station truth"),
        }
    }

    #[test]
    fn bump_plaque_reads_inscription() {
        let mut s = village(1);
        let r = s.apply(Command::Move { dir: Dir::North }).unwrap();
        assert_eq!(r.narration[0].kind, TextKind::Bump);
        assert!(r.narration[0].text.contains("plaque"));
        assert!(r.diff.is_empty());
    }

    #[test]
    fn moving_onto_open_ground_moves_one_tile() {
        let mut s = village(2);
        let before = s.player();
        s.apply(Command::Move { dir: Dir::South }).unwrap();
        assert_eq!(before.manhattan(s.player()), 1);
    }

    #[test]
    fn bumping_a_wall_keeps_position() {
        let mut s = station(3);
        let st = s.bundle().station().unwrap();
        let room = st.room(RoomKind::MessHall).unwrap();
        let spot = room.rect.tiles().find(|c| c.x == room.rect.x && st.grid.objects_at(*c).next().is_none()).unwrap();
        s.teleport(spot, Facing { dx: 1, dy: 0 });
        let r = s.apply(Command::Move { dir: Dir::West }).unwrap();
        assert_eq!(s.player(), spot);
        assert!(r.diff.is_empty());
        assert_eq!(r.narration[0].kind, TextKind::Bump);
    }

    #[test]
    fn torch_is_bounded_by_the_room() {
        let mut s = station(4);
        let st = s.bundle().station().unwrap();
        let a = st.room(RoomKind::MessHall).unwrap();
        let b = st.room(RoomKind::Residences).unwrap();
        s.teleport(a.rect.center(), Facing { dx: 1, dy: 0 });
        for f in Facing::all() {
            s.apply(Command::Face { dx: f.dx, dy: f.dy }).unwrap();
            assert!(s.visible().iter().all(|c| !b.rect.contains(*c)));
        }
    }

    #[test]
    fn full_sweep_lights_the_whole_room() {
        let mut s = station(5);
        let st = s.bundle().station().unwrap();
        for room in &st.rooms {
            s.teleport(room.rect.center(), Facing { dx: 1, dy: 0 });
            let mut union = BTreeSet::new();
            for f in Facing::all() {
                s.apply(Command::Face { dx: f.dx, dy: f.dy }).unwrap();
                union.extend(s.visible().iter().copied());
            }
            assert!(room.rect.tiles().all(|c| union.contains(&c)), "{}", room.name);
        }
    }

    #[test]
    fn reversing_facing_drops_the_cone_behind() {
        let mut s = station(6);
        let st = s.bundle().station().unwrap();
        let room = st.room(RoomKind::MessHall).unwrap();
        s.teleport(room.rect.center(), Facing { dx: 1, dy: 0 });
        let east = s.visible().clone();
        s.apply(Command::Face { dx: -1, dy: 0 }).unwrap();
        let west = s.visible().clone();
        assert!(east.iter().filter(|c| c.x > s.player().x).all(|c| !west.contains(c)));
    }

    #[test]
    fn terminals_read_only_within_reach() {
        let mut s = station(7);
        let t = match &s.bundle().evidence {
            Evidence::Station(e) => e.terminals[0].clone(),
            _ => unreachable!(),
        };
        let far = s.player();
        if far.chebyshev(t.position) > 1 {
            assert_eq!(s.apply(Command::Read { x: t.position.x, y: t.position.y }), Err(SessionError::OutOfReach { x: t.position.x, y: t.position.y }));
        }
        s.teleport(t.position, Facing { dx: 1, dy: 0 });
        let a = s.apply(Command::Read { x: t.position.x, y: t.position.y }).unwrap().message.unwrap();
        let b = s.apply(Command::Read { x: t.position.x, y: t.position.y }).unwrap().message.unwrap();
        assert_eq!(a, b);
        assert_eq!(a.timestamp, t.message.timestamp);
        assert_eq!(a.sender_name, t.message.sender_name);
    }

    #[test]
    fn scoring() {
        let mut s = station(8);
        let t = truth(&s);
        let perfect: BTreeMap<String, ReportEntry> = t
            .bodies
            .iter()
            .map(|(b, c)| {
                let crew = t.crew.iter().find(|m| &m.id == c).unwrap();
                let fate = t.fates.iter().find(|f| &f.crew_id == c).unwrap();
                (b.clone(), ReportEntry { name: crew.name.clone(), cause: fate.cause })
            })
            .collect();
        assert_eq!(score_report(&perfect, &t), t.crew.len() as u32);
        assert_eq!(score_report(&BTreeMap::new(), &t), 0);
        let mut swapped = perfect.clone();
        let keys: Vec<String> = swapped.keys().take(2).cloned().collect();
        let n0 = swapped[&keys[0]].name.clone();
        let n1 = swapped[&keys[1]].name.clone();
        swapped.get_mut(&keys[0]).unwrap().name = n1;
        swapped.get_mut(&keys[1]).unwrap().name = n0;
        assert_eq!(score_report(&swapped, &t), t.crew.len() as u32 - 2);

        let r = s.apply(Command::Report { entries: perfect.clone() }).unwrap().result.unwrap();
        assert_eq!(r.score, t.crew.len() as u32);
        assert!(matches!(s.apply(Command::Report { entries: perfect }), Err(SessionError::IllegalState(_))));
        assert!(matches!(s.apply(Command::Move { dir: Dir::North }), Err(SessionError::IllegalState(_))));
    }

    #[test]
    fn views_carry_no_sealed_fields_before_submission() {
        let mut s = station(9);
        let mut payloads = vec![serde_json::to_value(s.view()).unwrap()];
        for d in [Dir::North, Dir::West, Dir::North, Dir::North, Dir::East, Dir::North] {
            payloads.push(serde_json::to_value(s.apply(Command::Move { dir: d }).unwrap()).unwrap());
        }
        payloads.push(serde_json::to_value(s.apply(Command::Sync {}).unwrap()).unwrap());
        for p in &payloads {
            assert!(sealed_keys_in(p).is_empty(), "{p}");
            assert!(!p.to_string().contains("crew-"));
        }
        let after = serde_json::to_value(s.apply(Command::Report { entries: BTreeMap::new() }).unwrap()).unwrap();
        assert!(!sealed_keys_in(&after).is_empty());
    }

    #[test]
    fn discovery_only_grows() {
        let mut s = village(10);
        let mut prev = s.discovered().clone();
        for d in [Dir::South, Dir::South, Dir::East, Dir::East, Dir::North, Dir::West] {
            s.apply(Command::Move { dir: d }).unwrap();
            assert!(prev.is_subset(s.discovered()));
            prev = s.discovered().clone();
        }
    }

    #[test]
    fn village_quit_summarises() {
        let mut s = village(11);
        s.apply(Command::Move { dir: Dir::South }).unwrap();
        let r = s.apply(Command::Quit {}).unwrap();
        let sum = r.summary.unwrap();
        assert_eq!(sum.moves, 1);
        assert!(sum.tiles_seen > 0);
        assert!(matches!(s.apply(Command::Report { entries: BTreeMap::new() }), Err(SessionError::IllegalState(_))));
    }

    #[test]
    fn snapshot_resumes_on_a_regenerated_world() {
        let mut s = station(12);
        for d in [Dir::East, Dir::East, Dir::South, Dir::East] {
            s.apply(Command::Move { dir: d }).unwrap();
        }
        let snap = s.snapshot();
        let again = GameSession::resume(generate(Game::Station, WorldSeed(12), &GenConfig::default()).unwrap(), snap.clone()).unwrap();
        assert_eq!(again.view(), s.view());
        let mut bad = snap;
        bad.player = Coord { x: -1, y: 0 };
        assert!(GameSession::resume(s.bundle().clone(), bad).is_err());
    }

    #[test]
    fn commands_parse_from_protocol_json() {
        let c: Command = serde_json::from_str(r#"{"cmd":"move","dir":"north"}"#).unwrap();
        assert_eq!(c, Command::Move { dir: Dir::North });
        let c: Command = serde_json::from_str(r#"{"cmd":"report","entries":{"body-1":{"name":"Ada","cause":"fire"}}}"#).unwrap();
        assert!(matches!(c, Command::Report { .. }));
        assert!(serde_json::from_str::<Command>(r#"{"cmd":"fly"}"#).is_err());
    }
}
