//! Turns radio traffic into readable evidence: clock stamps, rendered text,
//! and terminals placed so that depth from the entrance tracks time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::EvidenceConfig;
use crate::content::content;
use crate::error::EvidenceError;
use crate::geom::Coord;
use crate::grammar::{capitalize, render, DynamicContext};
use crate::rng::RandomStream;
use crate::station::sim::{FateRecord, MessageKind, RadioMessage, Topic};
use crate::station::{CrewMember, Station};
use crate::tiles::{ObjectKind, PlacedObject, Terrain};

pub const MINUTES_PER_DAY: u32 = 24 * 60;

/// 12-hour clock text for a minute of the day, wrapping past midnight: `10:51 am`.
pub fn format_clock(minute: u32) -> String {
    let m = minute % MINUTES_PER_DAY;
    let (h24, mm) = (m / 60, m % 60);
    let suffix = if h24 < 12 { "am" } else { "pm" };
    let h12 = match h24 % 12 {
        0 => 12,
        h => h,
    };
    format!("{h12}:{mm:02} {suffix}")
}

/// Parses `h:mm am|pm` back to a minute of the day.
pub fn parse_clock(text: &str) -> Option<u32> {
    let (time, suffix) = text.trim().split_once(' ')?;
    let (h, m) = time.split_once(':')?;
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    if !(1..=12).contains(&h) || m > 59 || m.to_string().len() > 2 {
        return None;
    }
    let base = match suffix {
        "am" => 0,
        "pm" => 12,
        _ => return None,
    };
    Some(((h % 12) + base) * 60 + m)
}

/// One turn is one minute.
pub fn timestamp(start_minute: u32, turn: u32) -> String {
    format_clock(start_minute + turn % MINUTES_PER_DAY)
}

/// A radio message as the player reads it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StampedMessage {
    pub index: usize,
    pub sender: String,
    pub sender_name: String,
    pub turn: u32,
    pub timestamp: String,
    pub kind: MessageKind,
    pub topic: Topic,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optional_reply: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminal {
    pub id: String,
    pub position: Coord,
    /// Walking distance from the entrance door.
    pub depth: u32,
    pub message: StampedMessage,
}

fn fate_turn(fates: &[FateRecord], id: &str) -> Option<u32> {
    fates.iter().find(|f| f.crew_id == id).map(|f| f.turn)
}

/// Stamps and renders every message. Fails if any sender (or replier) was already dead.
pub fn stamp_messages(
    log: &[RadioMessage],
    start_minute: u32,
    crew: &[CrewMember],
    fates: &[FateRecord],
    station_name: &str,
    stream: &mut RandomStream,
) -> Result<Vec<StampedMessage>, EvidenceError> {
    let grammar = &content().station;
    let name_of = |id: &str| crew.iter().find(|c| c.id == id).map(|c| c.name.clone());
    let mut out = Vec::with_capacity(log.len());
    for (index, m) in log.iter().enumerate() {
        let sender_name = name_of(&m.sender).ok_or_else(|| EvidenceError::UnknownSender(m.sender.clone()))?;
        let alive_check = |id: &str| -> Result<(), EvidenceError> {
            match fate_turn(fates, id) {
                Some(death) if death <= m.turn => {
                    Err(EvidenceError::DeadSender { index, sender: id.to_string(), turn: m.turn, death_turn: death })
                }
                _ => Ok(()),
            }
        };
        alive_check(&m.sender)?;
        let mut ctx = DynamicContext::new();
        ctx.bind("STATION", station_name)?;
        ctx.bind("ROOM", m.room.clone().unwrap_or_else(|| "here".into()))?;
        if let Some(v) = &m.victim {
            ctx.bind("VICTIM", name_of(v).ok_or_else(|| EvidenceError::UnknownSender(v.clone()))?)?;
        }
        if let Some(t) = &m.target {
            ctx.bind("TARGET", name_of(t).ok_or_else(|| EvidenceError::UnknownSender(t.clone()))?)?;
        }
        let body = capitalize(&render(grammar, m.topic.symbol(), &ctx, stream)?);
        let optional_reply = match &m.reply {
            Some(r) => {
                alive_check(&r.sender)?;
                let who = name_of(&r.sender).ok_or_else(|| EvidenceError::UnknownSender(r.sender.clone()))?;
                let ctx = ctx.layered([("PLACE", r.place.clone())])?;
                Some(format!("{who}: {}", capitalize(&render(grammar, "update_reply", &ctx, stream)?)))
            }
            None => None,
        };
        out.push(StampedMessage {
            index,
            sender: m.sender.clone(),
            sender_name,
            turn: m.turn,
            timestamp: timestamp(start_minute, m.turn),
            kind: m.kind,
            topic: m.topic,
            body,
            optional_reply,
        });
    }
    Ok(out)
}

/// Lower keeps longer when there are more messages than terminals.
fn keep_rank(m: &StampedMessage) -> u8 {
    match m.topic {
        Topic::Noise | Topic::Gunshot | Topic::Fire | Topic::Explosion => 0,
        Topic::Checkin => 1,
        _ if m.kind == MessageKind::Intention => 2,
        Topic::Anomaly | Topic::Body => 3,
        _ => 4,
    }
}

/// Chooses which messages survive, keeping each sender's last message when possible.
pub fn select_messages(messages: &[StampedMessage], count: usize, stream: &mut RandomStream) -> Vec<StampedMessage> {
    if messages.len() <= count {
        return messages.to_vec();
    }
    let mut last_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, m) in messages.iter().enumerate() {
        last_of.insert(&m.sender, i);
    }
    let protected: BTreeSet<usize> = last_of.values().copied().collect();
    let mut order: Vec<usize> = (0..messages.len()).collect();
    stream.shuffle(&mut order);
    order.sort_by_key(|i| (protected.contains(i), keep_rank(&messages[*i])));
    let dropped: BTreeSet<usize> = order.into_iter().take(messages.len() - count).collect();
    messages.iter().enumerate().filter(|(i, _)| !dropped.contains(i)).map(|(_, m)| m.clone()).collect()
}

/// Floor tiles beside a wall, free of objects, off doorway fronts, reachable from the entrance door.
/// Returns each site with its walking depth.
pub fn terminal_sites(station: &Station) -> Vec<(Coord, u32)> {
    let g = &station.grid;
    let passable = g.passable_mask();
    let dist = g.distances(station.entrance_door, &passable);
    let mut out = Vec::new();
    for (i, &d) in dist.iter().enumerate() {
        let c = g.coord_of(i);
        if !matches!(g.terrain(c), Terrain::Floor | Terrain::Scorched) || d == u32::MAX {
            continue;
        }
        let near = |t: Terrain| c.orthogonal().any(|n| g.get(n) == Some(t));
        if !near(Terrain::Wall) || near(Terrain::Doorway) || near(Terrain::ExteriorDoor) || g.objects_at(c).next().is_some() {
            continue;
        }
        out.push((c, d));
    }
    out
}

/// Terminal count for a station before capping by messages and sites.
pub fn terminal_budget(station: &Station, cfg: &EvidenceConfig) -> usize {
    let floor = station.grid.tiles.iter().filter(|t| matches!(t, Terrain::Floor | Terrain::Scorched)).count();
    ((floor as u32 / cfg.floor_tiles_per_terminal).max(cfg.min_terminals)) as usize
}

/// Places one message per terminal; earlier messages sit nearer the entrance.
/// Terminal objects are added to the station grid.
pub fn place_terminals(
    station: &mut Station,
    messages: &[StampedMessage],
    cfg: &EvidenceConfig,
    stream: &mut RandomStream,
) -> Result<Vec<Terminal>, EvidenceError> {
    let sites = terminal_sites(station);
    if sites.len() < cfg.min_terminal_sites as usize {
        return Err(EvidenceError::TooFewTerminalSites { found: sites.len(), needed: cfg.min_terminal_sites as usize });
    }
    let mut by_depth: BTreeMap<u32, Vec<Coord>> = BTreeMap::new();
    for (c, d) in &sites {
        by_depth.entry(*d).or_default().push(*c);
    }
    let depths: Vec<u32> = by_depth.keys().copied().collect();
    let count = terminal_budget(station, cfg).min(messages.len()).min(depths.len());
    let chosen = select_messages(messages, count, stream);
    let mut ordered = chosen;
    ordered.sort_by_key(|m| (m.turn, m.index));

    // Evenly spaced distinct depths, one site each.
    let picks: Vec<u32> = (0..count)
        .map(|i| if count == 1 { depths[0] } else { depths[i * (depths.len() - 1) / (count - 1)] })
        .collect();
    let grammar = &content().station;
    let mut terminals = Vec::with_capacity(count);
    for (k, (depth, message)) in picks.into_iter().zip(ordered).enumerate() {
        let options = &by_depth[&depth];
        let position = options[stream.index(options.len())];
        let description = render(grammar, "terminal", &DynamicContext::new(), stream)?;
        let id = format!("terminal-{}", k + 1);
        station.grid.entities.push(PlacedObject {
            position,
            kind: ObjectKind::Terminal,
            description_key: "terminal".into(),
            description,
            blocking: false,
            leg_count: None,
            body_id: None,
        });
        terminals.push(Terminal { id, position, depth, message });
    }
    Ok(terminals)
}
