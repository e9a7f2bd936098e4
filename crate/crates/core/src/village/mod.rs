//! Village: abstract history simulation, then rendering into a ruin.

pub mod render;
pub mod sim;

use serde::{Deserialize, Serialize};

pub use render::{render_village, BuildingFootprint, BuildingKind, RenderedVillage};
pub use sim::{init_village, run_village, step_village, StepOutcome, VillageSim};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EndingKind {
    EcosystemCollapse,
    OverrunByPredators,
    Famine,
}

impl EndingKind {
    pub const ALL: [EndingKind; 3] = [EndingKind::EcosystemCollapse, EndingKind::OverrunByPredators, EndingKind::Famine];

    pub fn key(self) -> &'static str {
        match self {
            EndingKind::EcosystemCollapse => "ecosystem_collapse",
            EndingKind::OverrunByPredators => "overrun_by_predators",
            EndingKind::Famine => "famine",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Wood,
    Stone,
    Bone,
    Copper,
    Clay,
}

impl Material {
    pub const ALL: [Material; 5] = [Material::Wood, Material::Stone, Material::Bone, Material::Copper, Material::Clay];

    pub fn word(self) -> &'static str {
        match self {
            Material::Wood => "wood",
            Material::Stone => "stone",
            Material::Bone => "bone",
            Material::Copper => "copper",
            Material::Clay => "clay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flower {
    Poppy,
    Lily,
    Marigold,
    Lotus,
    Iris,
    Jasmine,
}

impl Flower {
    pub const ALL: [Flower; 6] = [Flower::Poppy, Flower::Lily, Flower::Marigold, Flower::Lotus, Flower::Iris, Flower::Jasmine];

    pub fn word(self) -> &'static str {
        match self {
            Flower::Poppy => "poppy",
            Flower::Lily => "lily",
            Flower::Marigold => "marigold",
            Flower::Lotus => "lotus",
            Flower::Iris => "iris",
            Flower::Jasmine => "jasmine",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CultureProfile {
    pub craft_material: Material,
    pub sacred_number: u32,
    pub cultivated_flower: Flower,
}

/// A capped ecosystem variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub value: f64,
    pub min_cap: f64,
    pub max_cap: f64,
    pub max_drift: f64,
}

impl Bounded {
    /// Moves by `delta`, limited to the drift cap and then the value caps.
    pub fn shift(&mut self, delta: f64) {
        let delta = delta.clamp(-self.max_drift, self.max_drift);
        self.value = (self.value + delta).clamp(self.min_cap, self.max_cap);
    }

    /// Position within the caps, 0 at `min_cap` and 1 at `max_cap`.
    pub fn fraction(&self) -> f64 {
        if self.max_cap > self.min_cap {
            ((self.value - self.min_cap) / (self.max_cap - self.min_cap)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcosystemState {
    pub temperature: Bounded,
    pub hostile_fauna: Bounded,
    pub eco_health: Bounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocietyState {
    pub population: u32,
    pub working_age: u32,
    pub food_store: f64,
    pub culture: CultureProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VillageEnding {
    pub kind: EndingKind,
    pub tick_of_collapse: u32,
}

/// Births and deaths in one tick, serialized as `[births, deaths]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct TickDelta {
    pub births: u32,
    pub deaths: u32,
}

impl From<[u32; 2]> for TickDelta {
    fn from(v: [u32; 2]) -> Self {
        TickDelta { births: v[0], deaths: v[1] }
    }
}

impl From<TickDelta> for [u32; 2] {
    fn from(d: TickDelta) -> Self {
        [d.births, d.deaths]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VillageHistory {
    pub ending: VillageEnding,
    pub initial_population: u32,
    pub final_eco: EcosystemState,
    pub final_society: SocietyState,
    pub birth_trace: Vec<TickDelta>,
    pub tick_count: u32,
}

impl VillageHistory {
    pub fn total_births(&self) -> u64 {
        self.birth_trace.iter().map(|d| u64::from(d.births)).sum()
    }

    /// Mean births per tick.
    pub fn birth_rate(&self) -> f64 {
        if self.tick_count == 0 {
            0.0
        } else {
            self.total_births() as f64 / f64::from(self.tick_count)
        }
    }

    /// Relative population change peak-to-start, before the collapse: (peak - initial) / initial.
    pub fn growth(&self) -> f64 {
        let mut pop = i64::from(self.initial_population);
        let mut peak = pop;
        for d in &self.birth_trace {
            pop += i64::from(d.births) - i64::from(d.deaths);
            peak = peak.max(pop);
        }
        if self.initial_population == 0 {
            0.0
        } else {
            (peak - i64::from(self.initial_population)) as f64 / f64::from(self.initial_population)
        }
    }

    pub fn crops_failed(&self) -> bool {
        matches!(self.ending.kind, EndingKind::Famine | EndingKind::EcosystemCollapse)
    }
}
