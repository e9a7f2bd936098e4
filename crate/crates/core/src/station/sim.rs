//! Turn-based catastrophe simulation.
//!
//! A tick runs every living crew member in id order, then the anomaly, then
//! the dynamics (fire spread, burnout, barrel explosions, fire deaths), then
//! radio delivery, periodic check-ins and act transitions.
//!
//! All randomness comes from the single `station.sim` stream. Draws happen in
//! tick order: crew work wandering and flight choices, anomaly hint choice and
//! self-ignition, one draw per (burning tile, flammable neighbour) pair in
//! coordinate order, one burnout draw per burning tile, then reply chances for
//! transmitted messages, the check-in sender, and endgame choices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{EndgamePolicy, GenConfig, SimConfig};
use crate::content::content;
use crate::error::{GenerationError, SimError};
use crate::geom::Coord;
use crate::rng::{stage, RandomStream, WorldSeed};
use crate::tiles::{ObjectKind, PlacedObject, Terrain};

use super::build::{build_station, BuiltStation};
use super::path::astar;
use super::sight::can_see;
use super::{Area, CrewMember, Profession, RoomKind, Station};

pub const STREAM: &str = "station.sim";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    BurnedByAnomaly,
    Fire,
    Exposure,
    Explosion,
}

impl Cause {
    pub const ALL: [Cause; 4] = [Cause::BurnedByAnomaly, Cause::Fire, Cause::Exposure, Cause::Explosion];

    pub fn key(self) -> &'static str {
        match self {
            Cause::BurnedByAnomaly => "burned_by_anomaly",
            Cause::Fire => "fire",
            Cause::Exposure => "exposure",
            Cause::Explosion => "explosion",
        }
    }

    pub fn parse(s: &str) -> Option<Cause> {
        Cause::ALL.into_iter().find(|c| c.key() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FateRecord {
    pub crew_id: String,
    pub cause: Cause,
    pub turn: u32,
    pub position: Coord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Act {
    Opening,
    Panic,
    Climax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Work,
    Investigate,
    Shelter,
    MeetUp,
    Flee,
    Confront,
    FleeOutside,
}

impl PlanKind {
    pub fn urgency(self) -> u8 {
        match self {
            PlanKind::Work => 0,
            PlanKind::Investigate | PlanKind::Shelter => 2,
            PlanKind::MeetUp => 3,
            PlanKind::Flee => 4,
            PlanKind::Confront | PlanKind::FleeOutside => 5,
        }
    }

    fn intention(self) -> Option<Topic> {
        match self {
            PlanKind::Work => None,
            PlanKind::Investigate => Some(Topic::Investigate),
            PlanKind::Shelter => Some(Topic::Shelter),
            PlanKind::MeetUp => Some(Topic::MeetUp),
            PlanKind::Flee => Some(Topic::Flee),
            PlanKind::Confront => Some(Topic::Confront),
            PlanKind::FleeOutside => Some(Topic::FleeOutside),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub kind: PlanKind,
    pub goal: Option<Coord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Knowledge {
    pub anomaly_known: bool,
    pub known_deaths: BTreeSet<String>,
    pub dangers: BTreeSet<Area>,
    /// Keys of events already reported or queued, so each is radioed once.
    pub reported: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Scream,
    Gunshot,
    Explosion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Noise {
    pub turn: u32,
    pub position: Coord,
    pub kind: NoiseKind,
    pub source: Option<String>,
}

/// Something a crew member noticed this turn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "percept")]
pub enum Percept {
    AnomalySeen { at: Coord },
    BodySeen { victim: String, at: Coord },
    ToldOfAnomaly { area: Area },
    Noise { kind: NoiseKind, at: Coord },
    FireSeen { at: Coord },
    ToldOfDeath { victim: String, at: Coord },
}

impl Percept {
    pub fn severity(&self) -> u8 {
        match self {
            Percept::AnomalySeen { .. } => 5,
            Percept::BodySeen { .. } | Percept::ToldOfAnomaly { .. } => 4,
            Percept::Noise { .. } => 3,
            Percept::FireSeen { .. } | Percept::ToldOfDeath { .. } => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Report,
    Intention,
    Update,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Anomaly,
    Body,
    Fire,
    Noise,
    Explosion,
    Gunshot,
    Shelter,
    MeetUp,
    Flee,
    Investigate,
    Confront,
    FleeOutside,
    Query,
    Location,
    Checkin,
}

impl Topic {
    pub fn kind(self) -> MessageKind {
        match self {
            Topic::Anomaly | Topic::Body | Topic::Fire | Topic::Noise | Topic::Explosion | Topic::Gunshot => MessageKind::Report,
            Topic::Shelter | Topic::MeetUp | Topic::Flee | Topic::Investigate | Topic::Confront | Topic::FleeOutside => {
                MessageKind::Intention
            }
            Topic::Query | Topic::Location | Topic::Checkin => MessageKind::Update,
        }
    }

    /// Grammar symbol the message body is rendered from.
    pub fn symbol(self) -> &'static str {
        match self {
            Topic::Anomaly => "report_anomaly",
            Topic::Body => "report_body",
            Topic::Fire => "report_fire",
            Topic::Noise => "report_noise",
            Topic::Explosion => "report_explosion",
            Topic::Gunshot => "report_gunshot",
            Topic::Shelter => "intention_shelter",
            Topic::MeetUp => "intention_meetup",
            Topic::Flee => "intention_run",
            Topic::Investigate => "intention_investigate",
            Topic::Confront => "intention_confront",
            Topic::FleeOutside => "intention_flee",
            Topic::Query => "update_query",
            Topic::Location => "update_location",
            Topic::Checkin => "update_checkin",
        }
    }
}

/// A second crew member's answer attached to a message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub sender: String,
    pub place: String,
}

/// Raw radio traffic; text is rendered later by the evidence stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadioMessage {
    pub index: usize,
    pub sender: String,
    pub turn: u32,
    pub kind: MessageKind,
    pub topic: Topic,
    /// Location the message is about: where the event was, or where the sender is heading.
    pub room: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub victim: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<Reply>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrewAgent {
    pub member: CrewMember,
    pub position: Coord,
    pub alive: bool,
    pub panic: f64,
    pub act: Act,
    pub plan: Plan,
    pub knowledge: Knowledge,
    pub turns_outside: u32,
    pub fate: Option<FateRecord>,
    pub armed: bool,
    /// Report waiting to be radioed, with the turn it was queued.
    pub pending_report: Option<(u32, Box<RadioMessage>)>,
    pub inbox: Vec<Percept>,
    pub heard_upto: usize,
    pub saw_anomaly: bool,
    pub announced_arrival: bool,
    pub last_heard: u32,
    #[serde(skip)]
    path: Vec<Coord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyAgent {
    pub position: Coord,
    pub target: Option<String>,
    pub turns_since_seen: u32,
    pub waypoint: Option<Coord>,
    pub idle_turns: u32,
    /// Crew id of whoever shot it this tick.
    pub shot_by: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicKind {
    Fire,
    FuelBarrel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicObject {
    pub kind: DynamicKind,
    pub position: Coord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum EventKind {
    Moved { from: Coord, to: Coord },
    Killed { victim: String, cause: Cause, at: Coord },
    Ignited { at: Coord },
    BurnedOut { at: Coord },
    Exploded { at: Coord },
    WallDestroyed { at: Coord },
    Shot { at: Coord },
    Noise { noise: NoiseKind, at: Coord },
    Radio { index: usize },
    RadioLost { topic: Topic },
    PlanChanged { plan: PlanKind, goal: Option<Coord> },
    Armed,
    ActChanged { act: Act },
    ClimaxBegan { alive: usize },
    Retargeted { target: Option<String> },
    Hinted { waypoint: Coord },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub seq: u64,
    pub turn: u32,
    pub actor: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub station: Station,
    pub areas: Vec<Area>,
    pub turn: u32,
    pub crew: Vec<CrewAgent>,
    pub anomaly: AnomalyAgent,
    pub fires: BTreeSet<Coord>,
    pub barrels: BTreeSet<Coord>,
    pub event_log: Vec<SimEvent>,
    pub message_log: Vec<RadioMessage>,
    pub noises: Vec<Noise>,
    pub climax_triggered: bool,
    pub config: SimConfig,
    stream: RandomStream,
    seq: u64,
    outbox: Vec<RadioMessage>,
    blocked: Vec<bool>,
}

fn flammable(t: Terrain) -> bool {
    matches!(t, Terrain::Floor | Terrain::Doorway)
}

const ANOMALY: &str = "anomaly";
const WORLD: &str = "world";

impl SimState {
    pub fn new(built: BuiltStation, config: &SimConfig, stream: RandomStream) -> SimState {
        let station = built.station;
        let areas = station.area_map();
        let blocked = station.grid.blocking_mask();
        let barrels = station.grid.entities.iter().filter(|o| o.kind == ObjectKind::FuelBarrel).map(|o| o.position).collect();
        let crew = built
            .crew
            .into_iter()
            .map(|member| CrewAgent {
                position: member.start_position,
                member,
                alive: true,
                panic: 0.0,
                act: Act::Opening,
                plan: Plan { kind: PlanKind::Work, goal: None },
                knowledge: Knowledge::default(),
                turns_outside: 0,
                fate: None,
                armed: false,
                pending_report: None,
                inbox: Vec::new(),
                heard_upto: 0,
                saw_anomaly: false,
                announced_arrival: false,
                last_heard: 0,
                path: Vec::new(),
            })
            .map(|mut a| {
                a.armed = a.member.profession == Profession::SecurityOfficer;
                a
            })
            .collect();
        SimState {
            station,
            areas,
            turn: 0,
            crew,
            anomaly: AnomalyAgent {
                position: built.anomaly.position,
                target: None,
                turns_since_seen: 0,
                waypoint: None,
                idle_turns: 0,
                shot_by: None,
            },
            fires: BTreeSet::new(),
            barrels,
            event_log: Vec::new(),
            message_log: Vec::new(),
            noises: Vec::new(),
            climax_triggered: false,
            config: config.clone(),
            stream,
            seq: 0,
            outbox: Vec::new(),
            blocked,
        }
    }

    /// Builds the station for `seed` and sets up turn 0, ready to step.
    pub fn for_seed(seed: WorldSeed, config: &GenConfig) -> Result<SimState, GenerationError> {
        config.sim.validate()?;
        let built = build_station(seed, config)?;
        Ok(SimState::new(built, &config.sim, stage(seed, STREAM)))
    }

    pub fn alive_count(&self) -> usize {
        self.crew.iter().filter(|c| c.alive).count()
    }

    pub fn is_finished(&self) -> bool {
        self.alive_count() == 0
    }

    /// Current fires and intact fuel barrels.
    pub fn dynamics(&self) -> Vec<DynamicObject> {
        let fires = self.fires.iter().map(|p| DynamicObject { kind: DynamicKind::Fire, position: *p });
        let barrels = self.barrels.iter().map(|p| DynamicObject { kind: DynamicKind::FuelBarrel, position: *p });
        fires.chain(barrels).collect()
    }

    pub fn fates(&self) -> Vec<FateRecord> {
        self.crew.iter().filter_map(|c| c.fate.clone()).collect()
    }

    fn log(&mut self, actor: &str, kind: EventKind) {
        self.event_log.push(SimEvent { seq: self.seq, turn: self.turn, actor: actor.to_string(), kind });
        self.seq += 1;
    }

    fn area(&self, c: Coord) -> Area {
        self.areas[self.station.grid.idx(c)]
    }

    fn place(&self, c: Coord) -> String {
        self.station.location_name(&self.areas, c)
    }

    fn sees(&self, from: Coord, to: Coord) -> bool {
        can_see(&self.station.grid, &self.areas, from, to, self.config.sight_radius)
    }

    fn open(&self, c: Coord) -> bool {
        let g = &self.station.grid;
        g.in_bounds(c) && g.terrain(c).walkable() && !self.blocked[g.idx(c)]
    }

    fn crew_passable(&self, c: Coord, outside_ok: bool) -> bool {
        self.open(c) && !self.fires.contains(&c) && (outside_ok || self.station.grid.terrain(c) != Terrain::Snow)
    }

    fn emit_noise(&mut self, actor: &str, kind: NoiseKind, at: Coord, source: Option<String>) {
        self.noises.push(Noise { turn: self.turn, position: at, kind, source });
        self.log(actor, EventKind::Noise { noise: kind, at });
    }

    fn kill(&mut self, i: usize, cause: Cause) {
        let at = self.crew[i].position;
        let id = self.crew[i].member.id.clone();
        let c = &mut self.crew[i];
        c.alive = false;
        c.path.clear();
        c.fate = Some(FateRecord { crew_id: id.clone(), cause, turn: self.turn, position: at });
        let actor = if cause == Cause::BurnedByAnomaly { ANOMALY } else { WORLD };
        self.log(actor, EventKind::Killed { victim: id.clone(), cause, at });
        self.emit_noise(&id, NoiseKind::Scream, at, Some(id.clone()));
    }

    fn ignite(&mut self, actor: &str, c: Coord) {
        let g = &self.station.grid;
        if g.in_bounds(c) && flammable(g.terrain(c)) && self.fires.insert(c) {
            self.log(actor, EventKind::Ignited { at: c });
        }
    }

    /// Free interior tile of a room nearest its centre.
    fn room_spot(&self, room: usize) -> Coord {
        let r = &self.station.rooms[room];
        let center = r.rect.center();
        r.rect
            .tiles()
            .filter(|c| self.open(*c))
            .min_by_key(|c| (c.dist2(center), c.y, c.x))
            .unwrap_or(center)
    }

    fn room_of_kind(&self, kind: RoomKind) -> usize {
        self.station.room(kind).map(|r| r.id).expect("every station has one room of each kind")
    }

    /// Meeting room: the first of a fixed preference list not known to be dangerous.
    fn meeting_room(&self, i: usize) -> usize {
        let dangers = &self.crew[i].knowledge.dangers;
        [RoomKind::MessHall, RoomKind::Residences, RoomKind::Entrance, RoomKind::SecurityOffice]
            .into_iter()
            .map(|k| self.room_of_kind(k))
            .find(|r| !dangers.contains(&Area::Room(*r)))
            .unwrap_or_else(|| self.room_of_kind(RoomKind::MessHall))
    }

    /// Nearest room, by walking distance, that is neither dangerous nor the current area.
    fn shelter_room(&self, i: usize) -> usize {
        let me = &self.crew[i];
        let here = self.area(me.position);
        let dist = self.walk_distances(me.position);
        let g = &self.station.grid;
        self.station
            .rooms
            .iter()
            .filter(|r| Area::Room(r.id) != here && !me.knowledge.dangers.contains(&Area::Room(r.id)))
            .min_by_key(|r| (dist[g.idx(self.room_spot(r.id))], r.id))
            .map(|r| r.id)
            .unwrap_or_else(|| self.meeting_room(i))
    }

    /// Room whose centre is furthest from `threat` by walking distance.
    fn flight_room(&self, i: usize, threat: Coord) -> usize {
        let dist = self.walk_distances(threat);
        let g = &self.station.grid;
        let here = self.area(self.crew[i].position);
        self.station
            .rooms
            .iter()
            .filter(|r| Area::Room(r.id) != here)
            .max_by_key(|r| {
                let d = dist[g.idx(self.room_spot(r.id))];
                (if d == u32::MAX { 0 } else { d }, std::cmp::Reverse(r.id))
            })
            .map(|r| r.id)
            .unwrap_or_else(|| self.meeting_room(i))
    }

    fn walk_distances(&self, from: Coord) -> Vec<u32> {
        let g = &self.station.grid;
        let mask: Vec<bool> = (0..g.tiles.len()).map(|k| {
            let c = g.coord_of(k);
            self.open(c) && g.terrain(c) != Terrain::Snow
        }).collect();
        g.distances(from, &mask)
    }

    /// Snow tile just outside the exterior door.
    fn outside_tile(&self) -> Coord {
        let door = self.station.entrance_door;
        door.orthogonal()
            .find(|c| self.station.grid.get(*c) == Some(Terrain::Snow))
            .unwrap_or(door)
    }
}

impl SimState {
    fn perceive(&mut self, i: usize) -> Vec<Percept> {
        let me = self.crew[i].position;
        let mut out = Vec::new();
        if self.sees(me, self.anomaly.position) {
            out.push(Percept::AnomalySeen { at: self.anomaly.position });
        }
        for j in 0..self.crew.len() {
            let other = &self.crew[j];
            if j != i && !other.alive && !self.crew[i].knowledge.known_deaths.contains(&other.member.id) && self.sees(me, other.position) {
                out.push(Percept::BodySeen { victim: other.member.id.clone(), at: other.position });
            }
        }
        let fire = self
            .fires
            .iter()
            .filter(|f| !self.crew[i].knowledge.dangers.contains(&self.area(**f)) && self.sees(me, **f))
            .min_by_key(|f| (f.dist2(me), f.y, f.x))
            .copied();
        if let Some(at) = fire {
            out.push(Percept::FireSeen { at });
        }
        let r2 = i64::from(self.config.hearing_radius).pow(2);
        let id = self.crew[i].member.id.clone();
        for n in &self.noises[self.crew[i].heard_upto..] {
            if n.source.as_deref() != Some(id.as_str()) && n.position.dist2(me) <= r2 {
                out.push(Percept::Noise { kind: n.kind, at: n.position });
            }
        }
        self.crew[i].heard_upto = self.noises.len();
        out.append(&mut self.crew[i].inbox);
        out
    }

    fn queue_report(&mut self, i: usize, key: String, topic: Topic, at: Coord, victim: Option<String>) {
        if !self.crew[i].knowledge.reported.insert(key) {
            return;
        }
        let severity = |t: Topic| match t {
            Topic::Anomaly => 5,
            Topic::Body => 4,
            Topic::Fire => 2,
            _ => 3,
        };
        let replace = match &self.crew[i].pending_report {
            Some((_, m)) => severity(topic) > severity(m.topic),
            None => true,
        };
        if replace {
            let msg = RadioMessage {
                index: 0,
                sender: self.crew[i].member.id.clone(),
                turn: self.turn,
                kind: MessageKind::Report,
                topic,
                room: Some(self.place(at)),
                victim,
                target: None,
                reply: None,
            };
            self.crew[i].pending_report = Some((self.turn, Box::new(msg)));
        }
    }

    fn absorb(&mut self, i: usize, percepts: &[Percept]) {
        let cfg = self.config.clone();
        let mut saw = false;
        for p in percepts {
            match p {
                Percept::AnomalySeen { at } => {
                    saw = true;
                    let area = self.area(*at);
                    let k = &mut self.crew[i].knowledge;
                    k.anomaly_known = true;
                    k.dangers.insert(area);
                    if !self.crew[i].saw_anomaly {
                        self.crew[i].panic += cfg.panic_anomaly;
                    }
                    self.queue_report(i, format!("anomaly:{area:?}"), Topic::Anomaly, *at, None);
                }
                Percept::BodySeen { victim, at } => {
                    self.crew[i].knowledge.known_deaths.insert(victim.clone());
                    self.crew[i].panic += cfg.panic_body;
                    self.queue_report(i, format!("body:{victim}"), Topic::Body, *at, Some(victim.clone()));
                }
                Percept::ToldOfAnomaly { area } => {
                    let k = &mut self.crew[i].knowledge;
                    k.anomaly_known = true;
                    k.dangers.insert(*area);
                    self.crew[i].panic += cfg.panic_told_anomaly;
                }
                Percept::Noise { kind, at } => {
                    self.crew[i].panic += cfg.panic_noise;
                    let topic = match kind {
                        NoiseKind::Scream => Topic::Noise,
                        NoiseKind::Gunshot => Topic::Gunshot,
                        NoiseKind::Explosion => Topic::Explosion,
                    };
                    let area = self.area(*at);
                    self.queue_report(i, format!("noise:{kind:?}:{area:?}:{}", self.turn / 10), topic, *at, None);
                }
                Percept::FireSeen { at } => {
                    let area = self.area(*at);
                    self.crew[i].knowledge.dangers.insert(area);
                    self.crew[i].panic += cfg.panic_fire;
                    self.queue_report(i, format!("fire:{area:?}"), Topic::Fire, *at, None);
                }
                Percept::ToldOfDeath { victim, .. } => {
                    if self.crew[i].knowledge.known_deaths.insert(victim.clone()) {
                        self.crew[i].panic += cfg.panic_told_death;
                    }
                }
            }
        }
        self.crew[i].saw_anomaly = saw;
    }

    fn set_plan(&mut self, i: usize, kind: PlanKind, goal: Option<Coord>) {
        let old = self.crew[i].plan;
        let room_changed = match (old.goal, goal) {
            (Some(a), Some(b)) => self.area(a) != self.area(b),
            (a, b) => a.is_some() != b.is_some(),
        };
        self.crew[i].plan = Plan { kind, goal };
        self.crew[i].path.clear();
        if old.kind == kind && !room_changed {
            return;
        }
        self.crew[i].announced_arrival = false;
        let id = self.crew[i].member.id.clone();
        self.log(&id, EventKind::PlanChanged { plan: kind, goal });
        if let Some(topic) = kind.intention() {
            let room = match (kind, goal) {
                (PlanKind::FleeOutside, _) => Some("outside".to_string()),
                (_, Some(g)) => Some(self.place(g)),
                _ => None,
            };
            self.outbox.push(RadioMessage {
                index: 0,
                sender: id,
                turn: self.turn,
                kind: MessageKind::Intention,
                topic,
                room,
                victim: None,
                target: None,
                reply: None,
            });
        }
    }

    fn can_shoot(&self, i: usize) -> bool {
        let me = &self.crew[i];
        let a = self.anomaly.position;
        let r = self.config.explosion_radius + 1;
        me.armed
            && !matches!(me.plan.kind, PlanKind::FleeOutside)
            && self.sees(me.position, a)
            && me.position.dist2(a) >= i64::from(self.config.min_shot_distance).pow(2)
            && !self.barrels.iter().any(|b| b.chebyshev(me.position) <= r)
    }

    fn choose_plan(&mut self, i: usize, percepts: &[Percept]) {
        if self.crew[i].act == Act::Climax {
            return;
        }
        let security = self.crew[i].member.profession == Profession::SecurityOfficer;
        let opening = self.crew[i].act == Act::Opening;
        let urgency = self.crew[i].plan.kind.urgency();
        let best = percepts.iter().max_by_key(|p| p.severity());
        if let Some(p) = best.filter(|p| p.severity() > urgency) {
            let response = match p {
                Percept::AnomalySeen { at } => {
                    if security && self.can_shoot(i) {
                        None
                    } else {
                        let room = self.flight_room(i, *at);
                        Some((PlanKind::Flee, Some(self.room_spot(room))))
                    }
                }
                Percept::BodySeen { .. } | Percept::ToldOfAnomaly { .. } => {
                    let room = self.meeting_room(i);
                    Some((PlanKind::MeetUp, Some(self.room_spot(room))))
                }
                Percept::Noise { at, .. } if security && opening => Some((PlanKind::Investigate, Some(self.nearest_open(*at)))),
                Percept::ToldOfDeath { at, .. } if security && opening => {
                    Some((PlanKind::Investigate, Some(self.nearest_open(*at))))
                }
                Percept::FireSeen { .. } => {
                    let room = self.shelter_room(i);
                    Some((PlanKind::Shelter, Some(self.room_spot(room))))
                }
                _ => None,
            };
            if let Some((kind, goal)) = response {
                self.set_plan(i, kind, goal);
                return;
            }
        }
        let me = &self.crew[i];
        if me.panic >= self.config.shelter_panic && me.plan.kind.urgency() < PlanKind::MeetUp.urgency() {
            let room = self.meeting_room(i);
            self.set_plan(i, PlanKind::MeetUp, Some(self.room_spot(room)));
            return;
        }
        let reached = me.plan.goal.is_none_or(|g| g == me.position);
        match me.plan.kind {
            PlanKind::Work if !opening => {
                let room = self.meeting_room(i);
                self.set_plan(i, PlanKind::MeetUp, Some(self.room_spot(room)));
            }
            PlanKind::Work if reached => {
                if self.stream.chance(self.config.wander_chance) {
                    let goal = self.work_goal(i);
                    self.crew[i].plan.goal = Some(goal);
                    self.crew[i].path.clear();
                }
            }
            PlanKind::Investigate if reached => {
                if opening {
                    self.set_plan(i, PlanKind::Work, None);
                } else {
                    let room = self.meeting_room(i);
                    self.set_plan(i, PlanKind::MeetUp, Some(self.room_spot(room)));
                }
            }
            PlanKind::Flee if reached => {
                let here = self.crew[i].position;
                self.set_plan(i, PlanKind::Shelter, Some(here));
            }
            PlanKind::MeetUp if reached && !me.announced_arrival => {
                self.crew[i].announced_arrival = true;
                let at = self.crew[i].position;
                self.outbox.push(RadioMessage {
                    index: 0,
                    sender: self.crew[i].member.id.clone(),
                    turn: self.turn,
                    kind: MessageKind::Update,
                    topic: Topic::Location,
                    room: Some(self.place(at)),
                    victim: None,
                    target: None,
                    reply: None,
                });
            }
            _ => {}
        }
    }

    fn nearest_open(&self, at: Coord) -> Coord {
        if self.crew_passable(at, false) {
            return at;
        }
        let g = &self.station.grid;
        (0..g.tiles.len())
            .map(|k| g.coord_of(k))
            .filter(|c| self.crew_passable(*c, false) && self.area(*c) != Area::Structure)
            .min_by_key(|c| (c.dist2(at), c.y, c.x))
            .unwrap_or(at)
    }

    fn work_goal(&mut self, i: usize) -> Coord {
        let kinds: &[RoomKind] = match self.crew[i].member.profession {
            Profession::SecurityOfficer => &[RoomKind::SecurityOffice, RoomKind::Entrance, RoomKind::MessHall, RoomKind::Lab1],
            Profession::LogisticsOfficer => &[RoomKind::MessHall, RoomKind::Entrance, RoomKind::Residences],
            Profession::Scientist => &[RoomKind::Lab1, RoomKind::SecondaryLab, RoomKind::MessHall],
        };
        let rooms: Vec<usize> = self.station.rooms.iter().filter(|r| kinds.contains(&r.kind)).map(|r| r.id).collect();
        let room = rooms[self.stream.index(rooms.len())];
        let tiles: Vec<Coord> = self.station.rooms[room].rect.tiles().filter(|c| self.open(*c)).collect();
        if tiles.is_empty() {
            self.room_spot(room)
        } else {
            tiles[self.stream.index(tiles.len())]
        }
    }

    /// One step toward `goal`, reusing the cached path while it stays valid.
    fn step_toward(&mut self, i: usize, goal: Coord, outside_ok: bool) {
        let pos = self.crew[i].position;
        if pos == goal {
            return;
        }
        let valid = self.crew[i].path.last() == Some(&goal)
            && self.crew[i].path.first().is_some_and(|n| self.crew_passable(*n, outside_ok) && n.manhattan(pos) == 1);
        if !valid {
            let (w, h) = (self.station.grid.width, self.station.grid.height);
            let path = astar(w, h, pos, goal, |c| self.crew_passable(c, outside_ok));
            self.crew[i].path = path.unwrap_or_default();
        }
        if self.crew[i].path.is_empty() {
            return;
        }
        let next = self.crew[i].path.remove(0);
        self.crew[i].position = next;
        let id = self.crew[i].member.id.clone();
        self.log(&id, EventKind::Moved { from: pos, to: next });
    }

    fn advance(&mut self, i: usize) {
        let plan = self.crew[i].plan;
        match plan.kind {
            PlanKind::FleeOutside => {
                let pos = self.crew[i].position;
                if self.station.grid.terrain(pos) == Terrain::Snow {
                    let door = self.station.entrance_door;
                    let next = pos
                        .orthogonal()
                        .filter(|c| self.station.grid.get(*c) == Some(Terrain::Snow) && self.open(*c))
                        .max_by_key(|c| (c.manhattan(door), std::cmp::Reverse((c.y, c.x))));
                    if let Some(next) = next.filter(|n| n.manhattan(door) > pos.manhattan(door)) {
                        self.crew[i].position = next;
                        let id = self.crew[i].member.id.clone();
                        self.log(&id, EventKind::Moved { from: pos, to: next });
                    }
                } else {
                    let out = self.outside_tile();
                    self.step_toward(i, out, true);
                }
            }
            PlanKind::Confront => {
                let office = self.room_of_kind(RoomKind::SecurityOffice);
                let pos = self.crew[i].position;
                if !self.crew[i].armed && self.area(pos) == Area::Room(office) {
                    self.crew[i].armed = true;
                    let id = self.crew[i].member.id.clone();
                    self.log(&id, EventKind::Armed);
                }
                let a = self.anomaly.position;
                let goal = if self.crew[i].armed { a } else { self.room_spot(office) };
                let in_range = self.sees(pos, a) && pos.dist2(a) < i64::from(self.config.min_shot_distance).pow(2);
                if self.fire_clearance(pos) <= 2 {
                    self.step_from_fire(i);
                } else if !in_range {
                    let (w, h) = (self.station.grid.width, self.station.grid.height);
                    let next = astar(w, h, pos, goal, |c| c == goal || self.crew_passable(c, false)).and_then(|p| p.first().copied());
                    if let Some(n) = next.filter(|n| *n != a && self.fire_clearance(*n) > 2) {
                        self.crew[i].position = n;
                        self.crew[i].path.clear();
                        let id = self.crew[i].member.id.clone();
                        self.log(&id, EventKind::Moved { from: pos, to: n });
                    }
                }
            }
            _ => {
                if let Some(goal) = plan.goal {
                    self.step_toward(i, goal, false);
                }
            }
        }
    }

    /// Chebyshev distance to the nearest burning tile.
    fn fire_clearance(&self, c: Coord) -> i32 {
        self.fires.iter().map(|f| f.chebyshev(c)).min().unwrap_or(i32::MAX)
    }

    /// Moves to the open indoor neighbour furthest from any fire, if that improves on staying.
    fn step_from_fire(&mut self, i: usize) {
        let pos = self.crew[i].position;
        let best = pos
            .orthogonal()
            .filter(|c| self.crew_passable(*c, false))
            .max_by_key(|c| (self.fire_clearance(*c), std::cmp::Reverse((c.y, c.x))));
        if let Some(next) = best.filter(|n| self.fire_clearance(*n) > self.fire_clearance(pos)) {
            self.crew[i].position = next;
            self.crew[i].path.clear();
            let id = self.crew[i].member.id.clone();
            self.log(&id, EventKind::Moved { from: pos, to: next });
        }
    }

    fn shoot(&mut self, i: usize) {
        let id = self.crew[i].member.id.clone();
        let at = self.anomaly.position;
        self.log(&id, EventKind::Shot { at });
        let pos = self.crew[i].position;
        self.emit_noise(&id, NoiseKind::Gunshot, pos, Some(id.clone()));
        self.anomaly.shot_by = Some(id);
    }

    fn crew_turn(&mut self, i: usize) {
        if !self.crew[i].alive {
            return;
        }
        let percepts = self.perceive(i);
        self.absorb(i, &percepts);
        self.choose_plan(i, &percepts);
        let due = self.crew[i].pending_report.as_ref().is_some_and(|(t, _)| *t < self.turn);
        if due {
            let (_, msg) = self.crew[i].pending_report.take().expect("checked");
            self.outbox.push(*msg);
        } else if self.can_shoot(i)
            && (self.crew[i].plan.kind == PlanKind::Confront || self.crew[i].member.profession == Profession::SecurityOfficer)
        {
            self.shoot(i);
        } else {
            self.advance(i);
        }
        let c = &mut self.crew[i];
        if self.station.grid.terrain(c.position) == Terrain::Snow {
            c.turns_outside += 1;
            if c.turns_outside > self.config.exposure_turns {
                self.kill(i, Cause::Exposure);
                return;
            }
        }
        let c = &mut self.crew[i];
        c.panic = (c.panic - self.config.panic_decay).max(0.0);
    }
}

impl SimState {
    fn crew_index(&self, id: &str) -> Option<usize> {
        self.crew.iter().position(|c| c.member.id == id)
    }

    fn anomaly_passable(&self, c: Coord, goal: Coord) -> bool {
        self.open(c) && (self.station.grid.terrain(c) != Terrain::Snow || c == goal && self.station.is_indoor(c))
    }

    fn hint(&mut self) {
        let alive: Vec<usize> = (0..self.crew.len()).filter(|j| self.crew[*j].alive).collect();
        if alive.is_empty() {
            return;
        }
        let j = alive[self.stream.index(alive.len())];
        let waypoint = self.crew[j].position;
        self.anomaly.waypoint = Some(waypoint);
        self.anomaly.idle_turns = 0;
        self.log(ANOMALY, EventKind::Hinted { waypoint });
    }

    fn set_target(&mut self, target: Option<String>) {
        if self.anomaly.target != target {
            self.anomaly.target = target.clone();
            self.log(ANOMALY, EventKind::Retargeted { target });
        }
    }

    fn anomaly_step(&mut self) {
        let a = self.anomaly.position;
        let Some(w) = self.anomaly.waypoint.filter(|w| *w != a) else { return };
        let (gw, gh) = (self.station.grid.width, self.station.grid.height);
        let next = astar(gw, gh, a, w, |c| self.anomaly_passable(c, w)).and_then(|p| p.first().copied());
        match next {
            Some(next) if !self.crew.iter().any(|c| c.alive && c.position == next) || next == w => {
                self.anomaly.position = next;
                self.log(ANOMALY, EventKind::Moved { from: a, to: next });
            }
            Some(_) => {}
            None => self.anomaly.waypoint = None,
        }
    }

    fn anomaly_turn(&mut self) {
        let a = self.anomaly.position;
        for j in 0..self.crew.len() {
            if self.crew[j].alive && self.crew[j].position.chebyshev(a) <= 1 {
                let at = self.crew[j].position;
                self.kill(j, Cause::BurnedByAnomaly);
                self.ignite(ANOMALY, at);
            }
        }
        if let Some(shooter) = self.anomaly.shot_by.take() {
            let r = self.config.shot_burst_radius;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy <= r * r {
                        self.ignite(ANOMALY, a.offset(dx, dy));
                    }
                }
            }
            if self.crew_index(&shooter).is_some_and(|j| self.crew[j].alive) {
                self.set_target(Some(shooter));
                self.anomaly.turns_since_seen = 0;
            }
        }
        if let Some(t) = self.anomaly.target.clone() {
            let j = self.crew_index(&t).expect("targets are crew ids");
            if !self.crew[j].alive {
                self.set_target(None);
                self.anomaly.waypoint = None;
            } else if self.sees(a, self.crew[j].position) {
                self.anomaly.waypoint = Some(self.crew[j].position);
                self.anomaly.turns_since_seen = 0;
            } else {
                self.anomaly.turns_since_seen += 1;
                if self.anomaly.turns_since_seen > self.config.anomaly_patience {
                    self.set_target(None);
                    self.hint();
                }
            }
        }
        if self.anomaly.target.is_none() {
            let seen = (0..self.crew.len())
                .filter(|j| self.crew[*j].alive && self.sees(a, self.crew[*j].position))
                .min_by_key(|j| (self.crew[*j].position.dist2(a), *j));
            if let Some(j) = seen {
                self.set_target(Some(self.crew[j].member.id.clone()));
                self.anomaly.waypoint = Some(self.crew[j].position);
                self.anomaly.turns_since_seen = 0;
                self.anomaly.idle_turns = 0;
            } else if self.anomaly.waypoint.is_none_or(|w| w == a) {
                self.anomaly.waypoint = None;
                self.anomaly.idle_turns += 1;
                if self.climax_triggered || self.anomaly.idle_turns > self.config.anomaly_patience {
                    self.hint();
                }
            }
        }
        let chasing = self.anomaly.target.is_some() && self.anomaly.turns_since_seen == 0;
        let steps = if chasing && self.stream.chance(self.config.anomaly_lunge) { 2 } else { 1 };
        for _ in 0..steps {
            self.anomaly_step();
        }
        if self.stream.chance(self.config.anomaly_self_ignite) {
            let here = self.anomaly.position;
            self.ignite(ANOMALY, here);
        }
    }

    fn explode(&mut self, at: Coord) {
        let mut queue = vec![at];
        while let Some(b) = queue.pop() {
            if !self.barrels.remove(&b) {
                continue;
            }
            let g = &mut self.station.grid;
            g.entities.retain(|o| !(o.position == b && o.kind == ObjectKind::FuelBarrel));
            self.blocked = self.station.grid.blocking_mask();
            self.log(WORLD, EventKind::Exploded { at: b });
            self.emit_noise(WORLD, NoiseKind::Explosion, b, None);
            let r = self.config.explosion_radius;
            let center_area = self.area(b);
            for dy in -r..=r {
                for dx in -r..=r {
                    let c = b.offset(dx, dy);
                    if dx * dx + dy * dy > r * r || !self.station.grid.in_bounds(c) {
                        continue;
                    }
                    for j in 0..self.crew.len() {
                        if self.crew[j].alive && self.crew[j].position == c {
                            self.kill(j, Cause::Explosion);
                        }
                    }
                    if self.station.grid.terrain(c) == Terrain::Wall {
                        self.station.grid.set(c, Terrain::Rubble);
                        let k = self.station.grid.idx(c);
                        self.areas[k] = center_area;
                        self.log(WORLD, EventKind::WallDestroyed { at: c });
                    }
                    self.ignite(WORLD, c);
                    if self.barrels.contains(&c) {
                        queue.push(c);
                    }
                }
            }
        }
    }

    fn run_dynamics(&mut self) {
        let burning: Vec<Coord> = self.fires.iter().copied().collect();
        let mut spread = BTreeSet::new();
        for f in &burning {
            for n in f.around() {
                let g = &self.station.grid;
                if g.in_bounds(n) && flammable(g.terrain(n)) && !self.fires.contains(&n) && self.stream.chance(self.config.fire_spread) {
                    spread.insert(n);
                }
            }
        }
        for f in &burning {
            if self.stream.chance(self.config.fire_burnout) {
                self.fires.remove(f);
                self.station.grid.set(*f, Terrain::Scorched);
                self.log(WORLD, EventKind::BurnedOut { at: *f });
            }
        }
        for n in spread {
            self.ignite(WORLD, n);
        }
        let lit: Vec<Coord> = self.barrels.iter().copied().filter(|b| self.fires.contains(b)).collect();
        for b in lit {
            self.explode(b);
        }
        for j in 0..self.crew.len() {
            if self.crew[j].alive && self.fires.contains(&self.crew[j].position) {
                self.kill(j, Cause::Fire);
            }
        }
    }

    fn transmit(&mut self, mut msg: RadioMessage) {
        msg.index = self.message_log.len();
        let sender = self.crew_index(&msg.sender).expect("sender is crew");
        self.crew[sender].last_heard = self.turn;
        if let Some(r) = &msg.reply {
            if let Some(j) = self.crew_index(&r.sender) {
                self.crew[j].last_heard = self.turn;
            }
        }
        let at = match msg.topic {
            Topic::Anomaly | Topic::Body => self.event_position(&msg),
            _ => None,
        };
        for j in 0..self.crew.len() {
            if j == sender || !self.crew[j].alive {
                continue;
            }
            match (msg.topic, at) {
                (Topic::Anomaly, Some(p)) => {
                    let area = self.area(p);
                    self.crew[j].knowledge.anomaly_known = true;
                    self.crew[j].inbox.push(Percept::ToldOfAnomaly { area });
                }
                (Topic::Body, Some(p)) => {
                    let victim = msg.victim.clone().expect("body reports name the victim");
                    self.crew[j].inbox.push(Percept::ToldOfDeath { victim, at: p });
                }
                _ => {}
            }
        }
        let id = msg.sender.clone();
        self.log(&id, EventKind::Radio { index: msg.index });
        self.message_log.push(msg);
    }

    /// Where the reported event happened, recovered from the event log.
    fn event_position(&self, msg: &RadioMessage) -> Option<Coord> {
        match msg.topic {
            Topic::Body => {
                let j = self.crew_index(msg.victim.as_deref()?)?;
                self.crew[j].fate.as_ref().map(|f| f.position)
            }
            Topic::Anomaly => {
                let room = msg.room.as_deref()?;
                let area = self.station.rooms.iter().find(|r| r.name == room).map(|r| Area::Room(r.id));
                let area = area.unwrap_or(if room == "the corridor" { Area::Corridor } else { Area::Outside });
                let g = &self.station.grid;
                (0..g.tiles.len()).map(|k| g.coord_of(k)).find(|c| self.area(*c) == area)
            }
            _ => None,
        }
    }

    fn flush_outbox(&mut self) {
        let outbox = std::mem::take(&mut self.outbox);
        for mut msg in outbox {
            let sender = self.crew_index(&msg.sender).expect("sender is crew");
            if !self.crew[sender].alive {
                self.log(&msg.sender.clone(), EventKind::RadioLost { topic: msg.topic });
                continue;
            }
            if matches!(msg.kind, MessageKind::Report | MessageKind::Intention) && self.stream.chance(self.config.update_chance) {
                let others: Vec<usize> = (0..self.crew.len()).filter(|j| *j != sender && self.crew[*j].alive).collect();
                if !others.is_empty() {
                    let j = others[self.stream.index(others.len())];
                    msg.reply = Some(Reply { sender: self.crew[j].member.id.clone(), place: self.place(self.crew[j].position) });
                }
            }
            self.transmit(msg);
        }
    }

    fn checkin(&mut self) {
        let interval = self.config.checkin_interval;
        if interval == 0 || self.turn == 0 || !self.turn.is_multiple_of(interval) {
            return;
        }
        let alive: Vec<usize> = (0..self.crew.len()).filter(|j| self.crew[*j].alive).collect();
        if alive.is_empty() {
            return;
        }
        let s = alive[self.stream.index(alive.len())];
        let me = &self.crew[s];
        let quiet = me.act == Act::Opening && !me.knowledge.anomaly_known;
        let target = (0..self.crew.len())
            .filter(|j| *j != s && !me.knowledge.known_deaths.contains(&self.crew[*j].member.id))
            .min_by_key(|j| (self.crew[*j].last_heard, *j));
        let mut msg = RadioMessage {
            index: 0,
            sender: me.member.id.clone(),
            turn: self.turn,
            kind: MessageKind::Update,
            topic: Topic::Checkin,
            room: Some(self.place(me.position)),
            victim: None,
            target: None,
            reply: None,
        };
        if let (false, Some(t)) = (quiet, target) {
            msg.topic = Topic::Query;
            msg.target = Some(self.crew[t].member.id.clone());
            if self.crew[t].alive {
                msg.reply = Some(Reply { sender: self.crew[t].member.id.clone(), place: self.place(self.crew[t].position) });
            }
        }
        self.transmit(msg);
    }

    fn set_act(&mut self, i: usize, act: Act) {
        if self.crew[i].act < act {
            self.crew[i].act = act;
            let id = self.crew[i].member.id.clone();
            self.log(&id, EventKind::ActChanged { act });
        }
    }

    fn act_transitions(&mut self) {
        for i in 0..self.crew.len() {
            let c = &self.crew[i];
            if c.alive && c.act == Act::Opening && (c.knowledge.anomaly_known || c.panic >= self.config.panic_act_threshold) {
                self.set_act(i, Act::Panic);
            }
        }
        let alive = self.alive_count();
        if self.climax_triggered || alive > 2 {
            return;
        }
        self.climax_triggered = true;
        self.log(WORLD, EventKind::ClimaxBegan { alive });
        for i in 0..self.crew.len() {
            if !self.crew[i].alive {
                continue;
            }
            self.set_act(i, Act::Panic);
            self.set_act(i, Act::Climax);
            let confront = match self.config.endgame {
                EndgamePolicy::AlwaysConfront => true,
                EndgamePolicy::AlwaysFlee => false,
                EndgamePolicy::Random => self.stream.chance(self.config.confront_chance),
            };
            if confront {
                let office = self.room_of_kind(RoomKind::SecurityOffice);
                let spot = self.room_spot(office);
                self.set_plan(i, PlanKind::Confront, Some(spot));
            } else {
                let out = self.outside_tile();
                self.set_plan(i, PlanKind::FleeOutside, Some(out));
            }
        }
        let outbox = std::mem::take(&mut self.outbox);
        for msg in outbox {
            self.transmit(msg);
        }
    }

    /// Runs one full tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        for i in 0..self.crew.len() {
            self.crew_turn(i);
        }
        self.anomaly_turn();
        self.run_dynamics();
        self.flush_outbox();
        self.checkin();
        self.act_transitions();
        self.turn += 1;
        Ok(())
    }

    fn dump(&self) -> String {
        let mut s = format!("turn {} anomaly at {:?} target {:?};", self.turn, self.anomaly.position, self.anomaly.target);
        for c in self.crew.iter().filter(|c| c.alive) {
            let _ = write!(s, " {} at {:?} {:?} {:?} panic {:.0};", c.member.id, c.position, c.act, c.plan.kind, c.panic);
        }
        let _ = write!(s, " fires {}", self.fires.len());
        s
    }

    /// Steps until every crew member is dead or the tick cap is reached.
    pub fn run(&mut self) -> Result<(), SimError> {
        while !self.is_finished() {
            if self.turn >= self.config.tick_cap {
                return Err(SimError::NonConvergence { cap: self.config.tick_cap, alive: self.alive_count(), dump: self.dump() });
            }
            self.step()?;
        }
        Ok(())
    }

    /// The aftermath: anomaly gone, fires reduced to scorch marks, bodies placed.
    pub fn finalize(mut self, text: &mut RandomStream) -> Result<SimOutcome, GenerationError> {
        for f in std::mem::take(&mut self.fires) {
            self.station.grid.set(f, Terrain::Scorched);
        }
        let grammar = &content().station;
        let mut order: Vec<&CrewAgent> = self.crew.iter().collect();
        order.sort_by_key(|c| {
            let p = c.fate.as_ref().map(|f| f.position).unwrap_or(c.position);
            (p.y, p.x, c.member.id.clone())
        });
        let mut bodies = BTreeMap::new();
        let mut objects = Vec::new();
        for (k, c) in order.iter().enumerate() {
            let Some(fate) = &c.fate else { continue };
            let body_id = format!("body-{}", k + 1);
            let look = grammar.expand(&format!("body_{}", c.member.profession.key()), text)?;
            let cause = grammar.expand(&format!("cause_{}", fate.cause.key()), text)?;
            objects.push(PlacedObject {
                position: fate.position,
                kind: ObjectKind::Body,
                description_key: "body".into(),
                description: format!("{look} {cause}"),
                blocking: false,
                leg_count: None,
                body_id: Some(body_id.clone()),
            });
            bodies.insert(body_id, c.member.id.clone());
        }
        self.station.grid.entities.extend(objects);
        let fates = self.fates();
        Ok(SimOutcome {
            crew: self.crew.into_iter().map(|c| c.member).collect(),
            station: self.station,
            fates,
            bodies,
            events: self.event_log,
            messages: self.message_log,
            ticks: self.turn,
        })
    }
}

/// Everything the later stages need from a finished simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub station: Station,
    pub crew: Vec<CrewMember>,
    pub fates: Vec<FateRecord>,
    /// Body id to crew id.
    pub bodies: BTreeMap<String, String>,
    pub events: Vec<SimEvent>,
    pub messages: Vec<RadioMessage>,
    pub ticks: u32,
}

impl SimOutcome {
    /// Event log as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        self.events.iter().map(|e| serde_json::to_string(e).expect("events serialize") + "\n").collect()
    }
}

/// Builds the station for `seed` and runs the catastrophe to completion.
pub fn run_station_sim(seed: WorldSeed, config: &GenConfig) -> Result<SimOutcome, GenerationError> {
    let mut state = SimState::for_seed(seed, config)?;
    state.run()?;
    state.finalize(&mut stage(seed, "station.bodies"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(seed: u64, cfg: &GenConfig) -> SimState {
        let built = build_station(WorldSeed(seed), cfg).unwrap();
        SimState::new(built, &cfg.sim, stage(WorldSeed(seed), STREAM))
    }

    fn open_neighbour(s: &SimState, c: Coord) -> Coord {
        c.around().find(|n| s.crew_passable(*n, false) && s.area(*n) == s.area(c)).unwrap()
    }

    #[test]
    fn adjacent_crew_is_burned_by_anomaly() {
        let mut s = state(1, &GenConfig::default());
        let spot = open_neighbour(&s, s.anomaly.position);
        s.crew[0].position = spot;
        s.anomaly_turn();
        let fate = s.crew[0].fate.clone().unwrap();
        assert_eq!(fate.cause, Cause::BurnedByAnomaly);
        assert!(s.fires.contains(&spot));
    }

    #[test]
    fn six_turns_outside_is_exposure() {
        let mut s = state(2, &GenConfig::default());
        let out = s.outside_tile();
        s.crew[0].position = out;
        s.crew[0].act = Act::Climax;
        s.crew[0].plan = Plan { kind: PlanKind::FleeOutside, goal: Some(out) };
        s.crew[0].turns_outside = 5;
        s.crew_turn(0);
        assert_eq!(s.crew[0].fate.as_ref().map(|f| f.cause), Some(Cause::Exposure));
    }

    #[test]
    fn standing_on_fire_kills() {
        let mut s = state(3, &GenConfig::default());
        let p = s.crew[1].position;
        s.ignite(WORLD, p);
        s.run_dynamics();
        assert_eq!(s.crew[1].fate.as_ref().map(|f| f.cause), Some(Cause::Fire));
    }

    #[test]
    fn target_persists_while_visible() {
        for seed in 0..40 {
            let mut s = state(seed, &GenConfig::default());
            let a = s.anomaly.position;
            let near: Vec<Coord> = a.around().flat_map(|n| n.around()).filter(|c| c.chebyshev(a) == 2 && s.crew_passable(*c, false) && s.sees(a, *c)).collect();
            if near.len() < 2 {
                continue;
            }
            s.crew[0].position = near[0];
            s.crew[1].position = near[near.len() - 1];
            for c in s.crew.iter_mut().skip(2) {
                c.position = s.station.entrance_door;
            }
            s.anomaly.target = Some(s.crew[1].member.id.clone());
            s.anomaly_turn();
            assert_eq!(s.anomaly.target.as_deref(), Some(s.crew[1].member.id.as_str()));
            return;
        }
        panic!("no seed with two visible tiles near the anomaly");
    }

    #[test]
    fn lost_target_gets_a_living_crew_location() {
        let mut s = state(4, &GenConfig::default());
        let hidden = s.crew.iter().position(|c| !s.sees(s.anomaly.position, c.position)).unwrap();
        s.anomaly.target = Some(s.crew[hidden].member.id.clone());
        s.anomaly.turns_since_seen = s.config.anomaly_patience;
        for j in 0..s.crew.len() {
            if s.sees(s.anomaly.position, s.crew[j].position) {
                s.crew[j].position = s.station.entrance_door;
            }
        }
        s.anomaly_turn();
        let hint = s.event_log.iter().find_map(|e| match e.kind {
            EventKind::Hinted { waypoint } => Some(waypoint),
            _ => None,
        });
        let hint = hint.expect("hinted");
        assert!(s.crew.iter().any(|c| c.alive && c.position == hint));
    }

    #[test]
    fn shot_ignites_burst() {
        let mut s = state(5, &GenConfig::default());
        s.anomaly.shot_by = Some(s.crew[0].member.id.clone());
        s.anomaly_turn();
        let a0 = s.event_log.iter().filter(|e| matches!(e.kind, EventKind::Ignited { .. })).count();
        assert!(a0 >= s.config.shot_burst_radius as usize, "{a0}");
    }

    #[test]
    fn fire_sighting_means_shelter_not_alert() {
        let mut s = state(6, &GenConfig::default());
        let i = 1;
        let me = s.crew[i].position;
        let f = open_neighbour(&s, me);
        s.fires.insert(f);
        s.anomaly.position = s.station.entrance_door;
        let percepts = s.perceive(i);
        assert!(percepts.iter().any(|p| matches!(p, Percept::FireSeen { .. })));
        s.absorb(i, &percepts);
        s.choose_plan(i, &percepts);
        assert_eq!(s.crew[i].plan.kind, PlanKind::Shelter);
        assert!(!s.crew[i].knowledge.anomaly_known);
        s.act_transitions();
        assert!(s.crew.iter().all(|c| c.act == Act::Opening));
    }

    #[test]
    fn radioed_sighting_moves_everyone_to_panic() {
        let mut s = state(7, &GenConfig::default());
        let witness = 2;
        let at = s.anomaly.position;
        s.crew[witness].knowledge.anomaly_known = true;
        s.queue_report(witness, "anomaly:test".into(), Topic::Anomaly, at, None);
        let msg = *s.crew[witness].pending_report.take().unwrap().1;
        s.outbox.push(msg);
        s.flush_outbox();
        s.act_transitions();
        assert!(s.crew.iter().filter(|c| c.alive).all(|c| c.act == Act::Panic));
        assert_eq!(s.message_log.len(), 1);
    }

    #[test]
    fn security_investigates_noise_in_opening() {
        let mut s = state(8, &GenConfig::default());
        let sec = s.crew.iter().position(|c| c.member.profession == Profession::SecurityOfficer).unwrap();
        s.anomaly.position = s.station.entrance_door;
        let at = s.crew[sec].position.offset(3, 0);
        s.noises.push(Noise { turn: 0, position: at, kind: NoiseKind::Scream, source: None });
        let percepts = s.perceive(sec);
        s.absorb(sec, &percepts);
        s.choose_plan(sec, &percepts);
        assert_eq!(s.crew[sec].plan.kind, PlanKind::Investigate);
    }

    #[test]
    fn climax_after_drop_to_two() {
        let mut s = state(9, &GenConfig::default());
        let n = s.crew.len();
        for j in 0..n - 3 {
            s.kill(j, Cause::Fire);
        }
        s.act_transitions();
        assert!(!s.climax_triggered);
        s.kill(n - 3, Cause::Fire);
        s.act_transitions();
        assert!(s.climax_triggered);
        let alive: Vec<&CrewAgent> = s.crew.iter().filter(|c| c.alive).collect();
        assert_eq!(alive.len(), 2);
        assert!(alive.iter().all(|c| c.act == Act::Climax && c.plan.kind.urgency() == 5));
    }

    #[test]
    fn confronter_without_fire_is_burned_by_anomaly() {
        let mut cfg = GenConfig::default();
        cfg.sim.endgame = EndgamePolicy::AlwaysConfront;
        cfg.sim.anomaly_self_ignite = 0.0;
        let mut s = state(10, &cfg);
        let n = s.crew.len();
        for j in 0..n - 1 {
            s.kill(j, Cause::Exposure);
        }
        s.fires.clear();
        s.act_transitions();
        let last = n - 1;
        assert_eq!(s.crew[last].plan.kind, PlanKind::Confront);
        s.run().unwrap();
        assert_eq!(s.crew[last].fate.as_ref().map(|f| f.cause), Some(Cause::BurnedByAnomaly));
    }

    #[test]
    fn batch_terminates_with_complete_fates() {
        for seed in 0..150 {
            let o = run_station_sim(WorldSeed(seed), &GenConfig::default()).unwrap();
            assert_eq!(o.fates.len(), o.crew.len());
            let mut ids: Vec<&str> = o.fates.iter().map(|f| f.crew_id.as_str()).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), o.crew.len());
            let bodies = o.station.grid.entities.iter().filter(|e| e.kind == ObjectKind::Body).count();
            assert_eq!(bodies, o.crew.len());
            assert_eq!(o.bodies.len(), o.crew.len());
            assert!(o.messages.iter().all(|m| {
                let f = o.fates.iter().find(|f| f.crew_id == m.sender).unwrap();
                f.turn > m.turn
            }));
        }
    }

    #[test]
    fn crew_never_step_onto_fire_and_acts_are_monotone() {
        for seed in 0..60 {
            let cfg = GenConfig::default();
            let mut s = state(seed, &cfg);
            let mut acts: Vec<Act> = s.crew.iter().map(|c| c.act).collect();
            while !s.is_finished() {
                let before = s.fires.clone();
                let from = s.event_log.len();
                s.step().unwrap();
                for e in &s.event_log[from..] {
                    if let EventKind::Moved { to, .. } = e.kind {
                        if e.actor.starts_with("crew") {
                            assert!(!before.contains(&to), "seed {seed} {e:?}");
                        }
                    }
                }
                for (k, c) in s.crew.iter().enumerate() {
                    assert!(c.act >= acts[k]);
                    acts[k] = c.act;
                }
            }
            let climaxes = s.event_log.iter().filter(|e| matches!(e.kind, EventKind::ClimaxBegan { .. })).count();
            assert_eq!(climaxes, 1);
        }
    }

    #[test]
    fn flee_outside_dies_of_exposure_soon_after_exiting() {
        let mut cfg = GenConfig::default();
        cfg.sim.endgame = EndgamePolicy::AlwaysFlee;
        for seed in 0..100 {
            let o = run_station_sim(WorldSeed(seed), &cfg).unwrap();
            for f in o.fates.iter().filter(|f| f.cause == Cause::Exposure) {
                let exit = o.events.iter().find(|e| {
                    e.actor == f.crew_id
                        && matches!(e.kind, EventKind::Moved { to, .. } if o.station.grid.terrain(to) == Terrain::Snow)
                });
                let exit = exit.expect("exposure needs an exit").turn;
                assert!(f.turn - exit <= 5, "seed {seed}: exit {exit} death {}", f.turn);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn exposure_rule_holds_every_tick(seed in 0u64..5000, flee in any::<bool>()) {
            let mut cfg = GenConfig::default();
            if flee {
                cfg.sim.endgame = EndgamePolicy::AlwaysFlee;
            }
            let mut s = state(seed, &cfg);
            while !s.is_finished() {
                let turn = s.turn;
                s.step().unwrap();
                for c in &s.crew {
                    if c.turns_outside > s.config.exposure_turns {
                        prop_assert!(!c.alive);
                        let f = c.fate.as_ref().unwrap();
                        prop_assert_eq!(f.cause, Cause::Exposure);
                        prop_assert!(f.turn <= turn);
                    }
                }
            }
        }

        #[test]
        fn preset_outside_counter_dies_same_tick(start in 0u32..10) {
            let mut s = state(11, &GenConfig::default());
            let out = s.outside_tile();
            s.crew[0].position = out;
            s.crew[0].act = Act::Climax;
            s.crew[0].plan = Plan { kind: PlanKind::FleeOutside, goal: Some(out) };
            s.crew[0].turns_outside = start;
            s.anomaly.position = s.station.rooms.iter().find(|r| r.kind == RoomKind::Lab1).unwrap().rect.center();
            let turn = s.turn;
            s.step().unwrap();
            let c = &s.crew[0];
            if c.turns_outside > s.config.exposure_turns {
                prop_assert_eq!(c.fate.as_ref().map(|f| (f.cause, f.turn)), Some((Cause::Exposure, turn)));
            } else {
                prop_assert!(c.alive || c.fate.as_ref().unwrap().cause != Cause::Exposure);
            }
        }
    }
}
