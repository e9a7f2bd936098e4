//! Generation parameters for both games.
//!
//! Every section is `#[serde(default)]`, so a config file only needs the
//! fields it overrides. Unknown fields are rejected so typos surface with the
//! offending path.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T: Copy + PartialOrd + Into<f64>> Range<T> {
    pub const fn new(min: T, max: T) -> Self {
        Range { min, max }
    }

    fn check(&self, field: &str) -> Result<(), ConfigError> {
        if self.min > self.max {
            return Err(ConfigError::InvalidRange { field: field.into(), min: self.min.into(), max: self.max.into() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub village: VillageConfig,
    pub render: RenderConfig,
    pub station: StationConfig,
    pub sim: SimConfig,
    pub evidence: EvidenceConfig,
}

impl GenConfig {
    pub fn from_json(text: &str) -> Result<GenConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: GenConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            field: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.village.validate()?;
        self.render.validate()?;
        self.station.validate()?;
        self.sim.validate()?;
        self.evidence.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn unit(field: &str, v: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ConfigError::InvalidValue { field: field.into(), reason: format!("{v} is not a probability in [0, 1]") });
    }
    Ok(())
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(ConfigError::InvalidValue { field: field.into(), reason: format!("{v} must be finite and >= 0") });
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(ConfigError::InvalidValue { field: field.into(), reason: format!("{v} must be finite and > 0") });
    }
    Ok(())
}

/// One bounded ecosystem variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableConfig {
    pub start: Range<f64>,
    pub min_cap: f64,
    pub max_cap: f64,
    pub max_drift: f64,
}

impl VariableConfig {
    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        self.start.check(&format!("{field}.start"))?;
        Range::new(self.min_cap, self.max_cap).check(&format!("{field}.min_cap"))?;
        if self.start.min < self.min_cap || self.start.max > self.max_cap {
            return Err(ConfigError::InvalidValue {
                field: format!("{field}.start"),
                reason: "start range must lie within [min_cap, max_cap]".into(),
            });
        }
        non_negative(&format!("{field}.max_drift"), self.max_drift)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VillageConfig {
    pub temperature: VariableConfig,
    pub hostile_fauna: VariableConfig,
    pub eco_health: VariableConfig,
    pub population_start: Range<u32>,
    pub working_fraction: f64,
    pub food_start: Range<f64>,
    pub food_capacity: f64,
    /// Damage probability is `damage_chance_base + damage_chance_per_degree * temperature`, clamped to [0, 1].
    pub damage_chance_base: f64,
    pub damage_chance_per_degree: f64,
    pub damage_amount: f64,
    pub eco_recovery: f64,
    /// Expected deaths per tick per unit of fauna density.
    pub kill_rate: f64,
    /// Expected births per unit of food surplus.
    pub birth_rate: f64,
    pub max_births: f64,
    pub ration: f64,
    pub yield_per_person: f64,
    pub ideal_temperature: f64,
    pub temperature_tolerance: f64,
    pub maturation_rate: f64,
    pub sacred_number: Range<u32>,
    pub tick_limit: u32,
}

impl Default for VillageConfig {
    fn default() -> Self {
        VillageConfig {
            temperature: VariableConfig { start: Range::new(14.0, 22.0), min_cap: 0.0, max_cap: 40.0, max_drift: 1.5 },
            hostile_fauna: VariableConfig { start: Range::new(0.05, 0.25), min_cap: 0.0, max_cap: 1.0, max_drift: 0.06 },
            eco_health: VariableConfig { start: Range::new(60.0, 80.0), min_cap: 0.0, max_cap: 100.0, max_drift: 3.0 },
            population_start: Range::new(20, 40),
            working_fraction: 0.6,
            food_start: Range::new(40.0, 80.0),
            food_capacity: 400.0,
            damage_chance_base: -0.2,
            damage_chance_per_degree: 0.03,
            damage_amount: 3.0,
            eco_recovery: 0.8,
            kill_rate: 6.5,
            birth_rate: 0.01,
            max_births: 2.0,
            ration: 1.0,
            yield_per_person: 1.25,
            ideal_temperature: 18.0,
            temperature_tolerance: 16.0,
            maturation_rate: 0.05,
            sacred_number: Range::new(3, 9),
            tick_limit: 10_000,
        }
    }
}

impl VillageConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.temperature.validate("village.temperature")?;
        self.hostile_fauna.validate("village.hostile_fauna")?;
        self.eco_health.validate("village.eco_health")?;
        if self.eco_health.min_cap != 0.0 {
            return Err(ConfigError::InvalidValue {
                field: "village.eco_health.min_cap".into(),
                reason: "ecosystem collapse is defined at 0; min_cap must be 0".into(),
            });
        }
        self.population_start.check("village.population_start")?;
        if self.population_start.min == 0 {
            return Err(ConfigError::InvalidValue {
                field: "village.population_start.min".into(),
                reason: "a village needs at least one person".into(),
            });
        }
        unit("village.working_fraction", self.working_fraction)?;
        self.food_start.check("village.food_start")?;
        positive("village.food_start.min", self.food_start.min)?;
        if self.food_start.max > self.food_capacity {
            return Err(ConfigError::InvalidValue {
                field: "village.food_start.max".into(),
                reason: "starting food exceeds food_capacity".into(),
            });
        }
        if self.damage_amount > self.eco_health.max_drift || self.eco_recovery > self.eco_health.max_drift {
            return Err(ConfigError::InvalidValue {
                field: "village.damage_amount".into(),
                reason: "damage_amount and eco_recovery must not exceed eco_health.max_drift".into(),
            });
        }
        non_negative("village.damage_amount", self.damage_amount)?;
        non_negative("village.eco_recovery", self.eco_recovery)?;
        non_negative("village.kill_rate", self.kill_rate)?;
        non_negative("village.birth_rate", self.birth_rate)?;
        non_negative("village.max_births", self.max_births)?;
        non_negative("village.ration", self.ration)?;
        non_negative("village.yield_per_person", self.yield_per_person)?;
        positive("village.temperature_tolerance", self.temperature_tolerance)?;
        unit("village.maturation_rate", self.maturation_rate)?;
        self.sacred_number.check("village.sacred_number")?;
        if self.sacred_number.min < 3 || self.sacred_number.max > 9 {
            return Err(ConfigError::InvalidValue {
                field: "village.sacred_number".into(),
                reason: "sacred numbers must lie in [3, 9]".into(),
            });
        }
        if self.tick_limit == 0 {
            return Err(ConfigError::InvalidValue { field: "village.tick_limit".into(), reason: "must be > 0".into() });
        }
        Ok(())
    }
}

/// Lake layout used when final ecosystem health (as a fraction of its cap) reaches `min_eco_fraction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaterTier {
    pub min_eco_fraction: f64,
    pub lakes: u32,
    pub lake_tiles: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemRule {
    pub kind: crate::tiles::ObjectKind,
    /// Per-floor-tile probability before simulation conditioning.
    pub chance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub water_table: Vec<WaterTier>,
    pub large_water_min: u32,
    pub fragments: Range<u32>,
    pub fragment_radius: i32,
    pub hall_search_radius: i32,
    pub house_chance: f64,
    pub road_budget: Range<u32>,
    pub branch_chance: f64,
    pub branch_length: Range<u32>,
    pub house_size: Range<u32>,
    pub barn_size: Range<u32>,
    pub field_size: Range<u32>,
    pub farm_chance_base: f64,
    /// Added farm probability per tile of distance from the worship hall.
    pub farm_chance_per_tile: f64,
    pub decay_floor: f64,
    pub decay_slope: f64,
    pub decay_max: f64,
    pub displace_chance: f64,
    pub house_items: Vec<ItemRule>,
    pub barn_items: Vec<ItemRule>,
    pub field_items: Vec<ItemRule>,
    /// Toy chance per house tile is `toy_chance_per_birth_rate * birth_rate * (1 + growth)`.
    pub toy_chance_per_birth_rate: f64,
    pub toy_max_chance: f64,
    pub crop_failure_multiplier: f64,
    pub weed_failure_multiplier: f64,
    pub predator_base: f64,
    pub predator_per_fauna: f64,
    pub perfume_chance: f64,
    pub placement_retries: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        use crate::tiles::ObjectKind as K;
        let rule = |kind, chance| ItemRule { kind, chance };
        RenderConfig {
            water_table: vec![
                WaterTier { min_eco_fraction: 0.0, lakes: 1, lake_tiles: 12 },
                WaterTier { min_eco_fraction: 0.2, lakes: 2, lake_tiles: 20 },
                WaterTier { min_eco_fraction: 0.4, lakes: 2, lake_tiles: 40 },
                WaterTier { min_eco_fraction: 0.6, lakes: 3, lake_tiles: 60 },
                WaterTier { min_eco_fraction: 0.8, lakes: 4, lake_tiles: 90 },
            ],
            large_water_min: 300,
            fragments: Range::new(5, 9),
            fragment_radius: 3,
            hall_search_radius: 15,
            house_chance: 0.35,
            road_budget: Range::new(4, 9),
            branch_chance: 0.08,
            branch_length: Range::new(8, 22),
            house_size: Range::new(5, 7),
            barn_size: Range::new(6, 8),
            field_size: Range::new(6, 9),
            farm_chance_base: -0.15,
            farm_chance_per_tile: 0.022,
            decay_floor: 0.0,
            decay_slope: 0.45,
            decay_max: 0.5,
            displace_chance: 0.3,
            house_items: vec![
                rule(K::Table, 0.05),
                rule(K::Chair, 0.07),
                rule(K::Cutlery, 0.05),
                rule(K::Bed, 0.04),
            ],
            barn_items: vec![rule(K::Hay, 0.12), rule(K::CattleSkeleton, 0.04)],
            field_items: vec![rule(K::Crop, 0.35), rule(K::Weed, 0.06), rule(K::CattleSkeleton, 0.01)],
            toy_chance_per_birth_rate: 4.0,
            toy_max_chance: 0.12,
            crop_failure_multiplier: 0.25,
            weed_failure_multiplier: 4.0,
            predator_base: 0.002,
            predator_per_fauna: 0.03,
            perfume_chance: 0.02,
            placement_retries: 8,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.water_table.is_empty() {
            return Err(ConfigError::InvalidValue { field: "render.water_table".into(), reason: "needs at least one tier".into() });
        }
        if self.water_table[0].min_eco_fraction != 0.0 {
            return Err(ConfigError::InvalidValue {
                field: "render.water_table[0].min_eco_fraction".into(),
                reason: "first tier must start at 0".into(),
            });
        }
        for (i, pair) in self.water_table.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if b.min_eco_fraction <= a.min_eco_fraction || b.lakes * b.lake_tiles < a.lakes * a.lake_tiles {
                return Err(ConfigError::InvalidValue {
                    field: format!("render.water_table[{}]", i + 1),
                    reason: "tiers must have increasing thresholds and non-decreasing total area".into(),
                });
            }
        }
        for (i, t) in self.water_table.iter().enumerate() {
            if t.lakes == 0 || t.lakes > 8 || t.lake_tiles == 0 || t.lake_tiles > 300 {
                return Err(ConfigError::InvalidValue {
                    field: format!("render.water_table[{i}]"),
                    reason: "each tier needs 1..=8 lakes of 1..=300 tiles".into(),
                });
            }
        }
        self.fragments.check("render.fragments")?;
        if self.fragment_radius < 1 || self.fragment_radius > 4 {
            return Err(ConfigError::InvalidValue { field: "render.fragment_radius".into(), reason: "must be in 1..=4".into() });
        }
        unit("render.house_chance", self.house_chance)?;
        self.road_budget.check("render.road_budget")?;
        unit("render.branch_chance", self.branch_chance)?;
        if self.branch_chance == 0.0 {
            return Err(ConfigError::InvalidValue { field: "render.branch_chance".into(), reason: "must be > 0".into() });
        }
        self.branch_length.check("render.branch_length")?;
        for (name, r) in [("house_size", self.house_size), ("barn_size", self.barn_size), ("field_size", self.field_size)] {
            r.check(&format!("render.{name}"))?;
            if r.min < 4 || r.max > 12 {
                return Err(ConfigError::InvalidValue { field: format!("render.{name}"), reason: "sizes must be in 4..=12".into() });
            }
        }
        unit("render.decay_floor", self.decay_floor)?;
        non_negative("render.decay_slope", self.decay_slope)?;
        unit("render.decay_max", self.decay_max)?;
        unit("render.displace_chance", self.displace_chance)?;
        for (name, rules) in [("house_items", &self.house_items), ("barn_items", &self.barn_items), ("field_items", &self.field_items)] {
            for (i, r) in rules.iter().enumerate() {
                unit(&format!("render.{name}[{i}].chance"), r.chance)?;
            }
        }
        non_negative("render.toy_chance_per_birth_rate", self.toy_chance_per_birth_rate)?;
        unit("render.toy_max_chance", self.toy_max_chance)?;
        non_negative("render.crop_failure_multiplier", self.crop_failure_multiplier)?;
        non_negative("render.weed_failure_multiplier", self.weed_failure_multiplier)?;
        unit("render.predator_base", self.predator_base)?;
        non_negative("render.predator_per_fauna", self.predator_per_fauna)?;
        unit("render.perfume_chance", self.perfume_chance)?;
        if self.placement_retries == 0 {
            return Err(ConfigError::InvalidValue { field: "render.placement_retries".into(), reason: "must be > 0".into() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub width: i32,
    pub height: i32,
    pub corridors: Range<u32>,
    pub corridor_length: Range<u32>,
    pub rooms: Range<u32>,
    pub room_size: Range<u32>,
    pub room_attempts: u32,
    pub layout_attempts: u32,
    /// Chance per free floor tile that the scenery pass tries a pattern there.
    pub scenery_density: f64,
    pub crew_size: Range<u32>,
}

impl Default for StationConfig {
    fn default() -> Self {
        StationConfig {
            width: 80,
            height: 64,
            corridors: Range::new(3, 6),
            corridor_length: Range::new(9, 24),
            rooms: Range::new(6, 10),
            room_size: Range::new(4, 9),
            room_attempts: 400,
            layout_attempts: 8,
            scenery_density: 0.18,
            crew_size: Range::new(5, 6),
        }
    }
}

impl StationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width < 48 || self.height < 40 || self.width > 256 || self.height > 256 {
            return Err(ConfigError::InvalidValue {
                field: "station.width".into(),
                reason: "station grid must be between 48x40 and 256x256".into(),
            });
        }
        self.corridors.check("station.corridors")?;
        if self.corridors.min == 0 {
            return Err(ConfigError::InvalidValue { field: "station.corridors.min".into(), reason: "need >= 1 corridor".into() });
        }
        self.corridor_length.check("station.corridor_length")?;
        if self.corridor_length.min < 5 {
            return Err(ConfigError::InvalidValue { field: "station.corridor_length.min".into(), reason: "must be >= 5".into() });
        }
        self.rooms.check("station.rooms")?;
        if self.rooms.min < 5 {
            return Err(ConfigError::InvalidValue {
                field: "station.rooms.min".into(),
                reason: "need >= 5 rooms for the mandatory room types".into(),
            });
        }
        self.room_size.check("station.room_size")?;
        if self.room_size.min < 3 || self.room_size.max > 12 {
            return Err(ConfigError::InvalidValue { field: "station.room_size".into(), reason: "must be within 3..=12".into() });
        }
        if self.room_attempts == 0 || self.layout_attempts == 0 {
            return Err(ConfigError::InvalidValue { field: "station.layout_attempts".into(), reason: "attempt counts must be > 0".into() });
        }
        unit("station.scenery_density", self.scenery_density)?;
        self.crew_size.check("station.crew_size")?;
        if self.crew_size.min < 3 || self.crew_size.max > 15 {
            return Err(ConfigError::InvalidValue { field: "station.crew_size".into(), reason: "crew size must be within 3..=15".into() });
        }
        Ok(())
    }
}

/// How Climax survivors pick their endgame plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndgamePolicy {
    Random,
    AlwaysConfront,
    AlwaysFlee,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub fire_spread: f64,
    pub fire_burnout: f64,
    pub anomaly_patience: u32,
    pub anomaly_self_ignite: f64,
    /// Chance of a second step while chasing a visible target.
    pub anomaly_lunge: f64,
    pub shot_burst_radius: i32,
    /// Crew never shoot when the anomaly is closer than this.
    pub min_shot_distance: i32,
    pub explosion_radius: i32,
    pub sight_radius: i32,
    pub hearing_radius: i32,
    pub exposure_turns: u32,
    pub shelter_panic: f64,
    pub panic_act_threshold: f64,
    pub panic_fire: f64,
    pub panic_body: f64,
    pub panic_anomaly: f64,
    pub panic_noise: f64,
    pub panic_told_death: f64,
    pub panic_told_anomaly: f64,
    pub panic_decay: f64,
    pub update_chance: f64,
    pub checkin_interval: u32,
    pub wander_chance: f64,
    pub endgame: EndgamePolicy,
    pub confront_chance: f64,
    pub tick_cap: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            fire_spread: 0.12,
            fire_burnout: 0.08,
            anomaly_patience: 8,
            anomaly_self_ignite: 0.05,
            anomaly_lunge: 0.25,
            shot_burst_radius: 2,
            min_shot_distance: 4,
            explosion_radius: 2,
            sight_radius: 12,
            hearing_radius: 14,
            exposure_turns: 5,
            shelter_panic: 60.0,
            panic_act_threshold: 90.0,
            panic_fire: 15.0,
            panic_body: 35.0,
            panic_anomaly: 60.0,
            panic_noise: 10.0,
            panic_told_death: 20.0,
            panic_told_anomaly: 30.0,
            panic_decay: 0.5,
            update_chance: 0.3,
            checkin_interval: 20,
            wander_chance: 0.2,
            endgame: EndgamePolicy::Random,
            confront_chance: 0.5,
            tick_cap: 2000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        unit("sim.fire_spread", self.fire_spread)?;
        unit("sim.fire_burnout", self.fire_burnout)?;
        unit("sim.anomaly_self_ignite", self.anomaly_self_ignite)?;
        unit("sim.anomaly_lunge", self.anomaly_lunge)?;
        unit("sim.update_chance", self.update_chance)?;
        unit("sim.wander_chance", self.wander_chance)?;
        unit("sim.confront_chance", self.confront_chance)?;
        for (name, v) in [
            ("shelter_panic", self.shelter_panic),
            ("panic_act_threshold", self.panic_act_threshold),
            ("panic_fire", self.panic_fire),
            ("panic_body", self.panic_body),
            ("panic_anomaly", self.panic_anomaly),
            ("panic_noise", self.panic_noise),
            ("panic_told_death", self.panic_told_death),
            ("panic_told_anomaly", self.panic_told_anomaly),
            ("panic_decay", self.panic_decay),
        ] {
            non_negative(&format!("sim.{name}"), v)?;
        }
        for (name, v) in [
            ("shot_burst_radius", self.shot_burst_radius),
            ("explosion_radius", self.explosion_radius),
            ("sight_radius", self.sight_radius),
            ("hearing_radius", self.hearing_radius),
            ("min_shot_distance", self.min_shot_distance),
        ] {
            if !(0..=32).contains(&v) {
                return Err(ConfigError::InvalidValue { field: format!("sim.{name}"), reason: "must be within 0..=32".into() });
            }
        }
        if self.tick_cap == 0 || self.checkin_interval == 0 {
            return Err(ConfigError::InvalidValue { field: "sim.tick_cap".into(), reason: "tick_cap and checkin_interval must be > 0".into() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvidenceConfig {
    /// Window for the random start time, in minutes after midnight.
    pub start_minute: Range<u32>,
    pub floor_tiles_per_terminal: u32,
    pub min_terminals: u32,
    pub min_terminal_sites: u32,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        EvidenceConfig {
            start_minute: Range::new(7 * 60, 22 * 60),
            floor_tiles_per_terminal: 60,
            min_terminals: 5,
            min_terminal_sites: 3,
        }
    }
}

impl EvidenceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.start_minute.check("evidence.start_minute")?;
        if self.start_minute.max >= 24 * 60 {
            return Err(ConfigError::InvalidValue { field: "evidence.start_minute.max".into(), reason: "must be < 1440".into() });
        }
        if self.floor_tiles_per_terminal == 0 {
            return Err(ConfigError::InvalidValue { field: "evidence.floor_tiles_per_terminal".into(), reason: "must be > 0".into() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        GenConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_config_overrides_defaults() {
        let cfg = GenConfig::from_json(r#"{"village": {"sacred_number": {"min": 7, "max": 7}}}"#).unwrap();
        assert_eq!(cfg.village.sacred_number, Range::new(7, 7));
        assert_eq!(cfg.station, StationConfig::default());
    }

    #[test]
    fn inverted_range_names_field() {
        let err = GenConfig::from_json(r#"{"village": {"population_start": {"min": 9, "max": 3}}}"#).unwrap_err();
        assert_eq!(err.field(), "village.population_start");
    }

    #[test]
    fn unknown_field_names_path() {
        let err = GenConfig::from_json(r#"{"sim": {"fire_sprd": 0.1}}"#).unwrap_err();
        assert!(err.field().starts_with("sim"), "{err}");
    }

    #[test]
    fn digest_tracks_content() {
        let a = GenConfig::default();
        let mut b = GenConfig::default();
        assert_eq!(a.digest(), b.digest());
        b.sim.fire_spread = 0.2;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
