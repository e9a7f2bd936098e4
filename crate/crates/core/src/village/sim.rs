//! The village history loop.
//!
//! Draw order per tick (stream `village.sim`): temperature drift, fauna drift,
//! damage roll, deaths rounding, births rounding, maturation rounding. A tick
//! that ends early stops drawing at that point.

use crate::config::{GenConfig, VariableConfig, VillageConfig};
use crate::error::VillageError;
use crate::rng::{stage, RandomStream, WorldSeed};

use super::{
    Bounded, CultureProfile, EcosystemState, EndingKind, Flower, Material, SocietyState, TickDelta, VillageEnding,
    VillageHistory,
};

pub const STREAM: &str = "village.sim";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Ended(VillageEnding),
}

fn draw_variable(v: &VariableConfig, stream: &mut RandomStream) -> Bounded {
    Bounded {
        value: stream.range_f64(v.start.min, v.start.max),
        min_cap: v.min_cap,
        max_cap: v.max_cap,
        max_drift: v.max_drift,
    }
}

/// Draws the starting ecosystem and society. Draw order: temperature, fauna,
/// eco health, population, food, material, sacred number, flower.
pub fn init_village(stream: &mut RandomStream, config: &GenConfig) -> Result<(EcosystemState, SocietyState), VillageError> {
    config.village.validate()?;
    let v = &config.village;
    let eco = EcosystemState {
        temperature: draw_variable(&v.temperature, stream),
        hostile_fauna: draw_variable(&v.hostile_fauna, stream),
        eco_health: draw_variable(&v.eco_health, stream),
    };
    let population = stream.range_u32(v.population_start.min, v.population_start.max);
    let working_age = ((f64::from(population) * v.working_fraction).round() as u32).min(population);
    let food_store = stream.range_f64(v.food_start.min, v.food_start.max);
    let culture = CultureProfile {
        craft_material: *stream.pick(&Material::ALL),
        sacred_number: stream.range_u32(v.sacred_number.min, v.sacred_number.max),
        cultivated_flower: *stream.pick(&Flower::ALL),
    };
    Ok((eco, SocietyState { population, working_age, food_store, culture }))
}

/// Crop suitability of a temperature: 1 at the ideal, falling quadratically.
pub fn suitability(cfg: &VillageConfig, temperature: f64) -> f64 {
    let d = (temperature - cfg.ideal_temperature) / cfg.temperature_tolerance;
    1.0 - d * d
}

/// One tick on bare state. Returns the tick's births and deaths, and the ending if one was reached.
pub fn step_village(
    eco: &mut EcosystemState,
    society: &mut SocietyState,
    cfg: &VillageConfig,
    stream: &mut RandomStream,
) -> (TickDelta, Option<EndingKind>) {
    let mut delta = TickDelta::default();

    let t = &mut eco.temperature;
    let d = stream.range_f64(-t.max_drift, t.max_drift);
    t.shift(d);
    let f = &mut eco.hostile_fauna;
    let d = stream.range_f64(-f.max_drift, f.max_drift);
    f.shift(d);

    let p_damage = (cfg.damage_chance_base + cfg.damage_chance_per_degree * eco.temperature.value).clamp(0.0, 1.0);
    if stream.chance(p_damage) {
        eco.eco_health.shift(-cfg.damage_amount);
    } else {
        eco.eco_health.shift(cfg.eco_recovery);
    }
    if eco.eco_health.value <= 0.0 {
        eco.eco_health.value = 0.0;
        return (delta, Some(EndingKind::EcosystemCollapse));
    }

    let deaths = stream.stochastic_round(eco.hostile_fauna.value * cfg.kill_rate).min(u64::from(society.population)) as u32;
    if deaths > 0 {
        let working_lost = ((u64::from(deaths) * u64::from(society.working_age)) / u64::from(society.population)) as u32;
        society.population -= deaths;
        society.working_age = society.working_age.saturating_sub(working_lost).min(society.population);
    }
    delta.deaths = deaths;
    if society.population == 0 {
        return (delta, Some(EndingKind::OverrunByPredators));
    }

    let surplus = society.food_store - f64::from(society.population) * cfg.ration;
    let births = stream.stochastic_round((cfg.birth_rate * surplus.max(0.0)).min(cfg.max_births)) as u32;
    society.population += births;
    delta.births = births;
    let juveniles = society.population - society.working_age;
    let matured = stream.stochastic_round(f64::from(juveniles) * cfg.maturation_rate) as u32;
    society.working_age += matured.min(juveniles);

    let per_person = cfg.yield_per_person * suitability(cfg, eco.temperature.value) - cfg.ration;
    society.food_store = (society.food_store + f64::from(society.population) * per_person).min(cfg.food_capacity);
    if society.food_store <= 0.0 {
        society.food_store = 0.0;
        return (delta, Some(EndingKind::Famine));
    }
    (delta, None)
}

/// Stateful wrapper that enforces "no step after the end".
#[derive(Clone, Debug)]
pub struct VillageSim {
    pub eco: EcosystemState,
    pub society: SocietyState,
    pub tick: u32,
    pub initial_population: u32,
    pub trace: Vec<TickDelta>,
    pub ending: Option<VillageEnding>,
    cfg: VillageConfig,
    stream: RandomStream,
}

impl VillageSim {
    pub fn new(seed: WorldSeed, config: &GenConfig) -> Result<VillageSim, VillageError> {
        let mut stream = stage(seed, STREAM);
        let (eco, society) = init_village(&mut stream, config)?;
        Ok(VillageSim::from_state(eco, society, config.village.clone(), stream))
    }

    pub fn from_state(eco: EcosystemState, society: SocietyState, cfg: VillageConfig, stream: RandomStream) -> VillageSim {
        VillageSim { eco, society, tick: 0, initial_population: society.population, trace: Vec::new(), ending: None, cfg, stream }
    }

    pub fn step(&mut self) -> Result<StepOutcome, VillageError> {
        if let Some(e) = self.ending {
            return Err(VillageError::AlreadyEnded(e.kind));
        }
        self.tick += 1;
        let (delta, ended) = step_village(&mut self.eco, &mut self.society, &self.cfg, &mut self.stream);
        self.trace.push(delta);
        Ok(match ended {
            Some(kind) => {
                let e = VillageEnding { kind, tick_of_collapse: self.tick };
                self.ending = Some(e);
                StepOutcome::Ended(e)
            }
            None => StepOutcome::Continue,
        })
    }

    pub fn into_history(self) -> Option<VillageHistory> {
        let ending = self.ending?;
        Some(VillageHistory {
            ending,
            initial_population: self.initial_population,
            final_eco: self.eco,
            final_society: self.society,
            birth_trace: self.trace,
            tick_count: self.tick,
        })
    }
}

pub fn run_village(seed: WorldSeed, config: &GenConfig) -> Result<VillageHistory, VillageError> {
    let mut sim = VillageSim::new(seed, config)?;
    let limit = config.village.tick_limit;
    while sim.tick < limit {
        if let StepOutcome::Ended(_) = sim.step()? {
            return Ok(sim.into_history().expect("ended"));
        }
    }
    Err(VillageError::NonConvergence(limit))
}
