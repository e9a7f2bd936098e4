//! Ending-balance measurement and parameter nudging for the village model.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GenConfig;
use crate::rng::WorldSeed;
use crate::station::run_station_sim;
use crate::station::sim::Cause;
use crate::village::{run_village, EndingKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndingRow {
    pub ending: EndingKind,
    pub count: u32,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub runs: u32,
    pub seed_base: u64,
    pub rows: Vec<EndingRow>,
    pub non_converged: u32,
    pub mean_ticks: f64,
}

impl CalibrationReport {
    pub fn frequency(&self, kind: EndingKind) -> f64 {
        self.rows.iter().find(|r| r.ending == kind).map_or(0.0, |r| r.frequency)
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.non_converged == 0 && self.rows.iter().all(|r| (lo..=hi).contains(&r.frequency))
    }
}

/// Runs seeds `seed_base .. seed_base + runs` in parallel and tallies endings.
pub fn calibrate_village(config: &GenConfig, runs: u32, seed_base: u64) -> CalibrationReport {
    let results: Vec<Option<(EndingKind, u32)>> = (0..u64::from(runs))
        .into_par_iter()
        .map(|i| {
            run_village(WorldSeed(seed_base.wrapping_add(i)), config)
                .ok()
                .map(|h| (h.ending.kind, h.tick_count))
        })
        .collect();
    let mut counts: BTreeMap<EndingKind, u32> = EndingKind::ALL.iter().map(|k| (*k, 0)).collect();
    let mut ticks = 0u64;
    let mut non_converged = 0;
    for r in &results {
        match r {
            Some((k, t)) => {
                *counts.get_mut(k).expect("all kinds present") += 1;
                ticks += u64::from(*t);
            }
            None => non_converged += 1,
        }
    }
    let done = runs - non_converged;
    let rows = EndingKind::ALL
        .iter()
        .map(|k| EndingRow {
            ending: *k,
            count: counts[k],
            frequency: if runs == 0 { 0.0 } else { f64::from(counts[k]) / f64::from(runs) },
        })
        .collect();
    CalibrationReport {
        runs,
        seed_base,
        rows,
        non_converged,
        mean_ticks: if done == 0 { 0.0 } else { ticks as f64 / f64::from(done) },
    }
}

/// A suggested change to one coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nudge {
    pub field: String,
    pub from: f64,
    pub to: f64,
}

/// Hill-climbs the damage, kill and ration coefficients toward equal ending shares.
/// Each round tries a multiplicative step on each coefficient in both directions
/// and keeps whichever lowers the squared distance from 1/3 shares.
pub fn suggest_nudges(config: &GenConfig, runs: u32, seed_base: u64, rounds: u32) -> (GenConfig, Vec<Nudge>, CalibrationReport) {
    fn loss(r: &CalibrationReport) -> f64 {
        let third = 1.0 / 3.0;
        r.rows.iter().map(|row| (row.frequency - third).powi(2)).sum::<f64>() + f64::from(r.non_converged)
    }
    type Knob = (&'static str, fn(&mut GenConfig) -> &mut f64);
    let knobs: [Knob; 3] = [
        ("village.damage_chance_per_degree", |c| &mut c.village.damage_chance_per_degree),
        ("village.kill_rate", |c| &mut c.village.kill_rate),
        ("village.ration", |c| &mut c.village.ration),
    ];
    let mut best = config.clone();
    let mut best_report = calibrate_village(&best, runs, seed_base);
    let mut step = 0.1;
    for _ in 0..rounds {
        let mut improved = false;
        for (_, knob) in &knobs {
            for factor in [1.0 + step, 1.0 - step] {
                let mut trial = best.clone();
                *knob(&mut trial) *= factor;
                if trial.validate().is_err() {
                    continue;
                }
                let report = calibrate_village(&trial, runs, seed_base);
                if loss(&report) < loss(&best_report) {
                    best = trial;
                    best_report = report;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    let mut nudges = Vec::new();
    let mut original = config.clone();
    let mut tuned = best.clone();
    for (name, knob) in &knobs {
        let (from, to) = (*knob(&mut original), *knob(&mut tuned));
        if from != to {
            nudges.push(Nudge { field: name.to_string(), from, to });
        }
    }
    (best, nudges, best_report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauseRow {
    pub cause: Cause,
    pub count: u32,
    pub frequency: f64,
}

/// Death-cause tallies over many station runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationReport {
    pub runs: u32,
    pub seed_base: u64,
    pub deaths: u32,
    pub rows: Vec<CauseRow>,
    pub failed: u32,
    pub mean_ticks: f64,
}

pub fn calibrate_station(config: &GenConfig, runs: u32, seed_base: u64) -> StationReport {
    let results: Vec<Option<(Vec<Cause>, u32)>> = (0..u64::from(runs))
        .into_par_iter()
        .map(|i| {
            run_station_sim(WorldSeed(seed_base.wrapping_add(i)), config)
                .ok()
                .map(|o| (o.fates.iter().map(|f| f.cause).collect(), o.ticks))
        })
        .collect();
    let mut counts: BTreeMap<Cause, u32> = Cause::ALL.iter().map(|c| (*c, 0)).collect();
    let (mut failed, mut ticks) = (0u32, 0u64);
    for r in &results {
        match r {
            Some((causes, t)) => {
                causes.iter().for_each(|c| *counts.get_mut(c).expect("all causes present") += 1);
                ticks += u64::from(*t);
            }
            None => failed += 1,
        }
    }
    let deaths: u32 = counts.values().sum();
    let rows = Cause::ALL
        .iter()
        .map(|c| CauseRow {
            cause: *c,
            count: counts[c],
            frequency: if deaths == 0 { 0.0 } else { f64::from(counts[c]) / f64::from(deaths) },
        })
        .collect();
    let done = runs - failed;
    StationReport { runs, seed_base, deaths, rows, failed, mean_ticks: if done == 0 { 0.0 } else { ticks as f64 / f64::from(done) } }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_one_ending() {
        let r = calibrate_village(&GenConfig::default(), 1, 0);
        assert_eq!(r.rows.iter().map(|r| r.count).sum::<u32>(), 1);
    }

    #[test]
    fn same_seed_base_same_table() {
        let a = calibrate_village(&GenConfig::default(), 40, 9);
        let b = calibrate_village(&GenConfig::default(), 40, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn station_tally_counts_every_death() {
        let r = calibrate_station(&GenConfig::default(), 6, 0);
        assert_eq!(r.failed, 0);
        assert_eq!(r.rows.iter().map(|r| r.count).sum::<u32>(), r.deaths);
        assert!(r.deaths >= 6 * 4);
    }
}
