//! Authored data shipped with the engine: grammars, engravings, names,
//! scenery patterns and the glyph table.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::GrammarError;
use crate::grammar::Grammar;
use crate::station::scenery::SceneryPattern;
use crate::village::EndingKind;

pub const VILLAGE_GRAMMAR: &str = include_str!("../content/village.json");
pub const STATION_GRAMMAR: &str = include_str!("../content/station.json");
pub const ENGRAVINGS: &str = include_str!("../content/engravings.json");
pub const NAMES: &str = include_str!("../content/names.json");
pub const SCENERY: &str = include_str!("../content/scenery.json");
pub const GLYPHS: &str = include_str!("../content/glyphs.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphTable {
    pub terrain: BTreeMap<String, String>,
    pub objects: BTreeMap<String, String>,
    pub player: String,
    pub unseen: String,
}

impl GlyphTable {
    pub fn terrain(&self, t: crate::tiles::Terrain) -> char {
        self.terrain.get(t.name()).and_then(|s| s.chars().next()).unwrap_or('?')
    }

    pub fn object(&self, k: crate::tiles::ObjectKind) -> char {
        self.objects.get(&k.name()).and_then(|s| s.chars().next()).unwrap_or('?')
    }
}

#[derive(Clone, Debug)]
pub struct Content {
    pub village: Grammar,
    pub station: Grammar,
    pub engravings: BTreeMap<EndingKind, String>,
    pub names: Vec<String>,
    pub scenery: Vec<SceneryPattern>,
    pub glyphs: GlyphTable,
}

fn load_err(file: &str, e: impl ToString) -> GrammarError {
    GrammarError::Load { file: file.into(), reason: e.to_string() }
}

impl Content {
    pub fn load() -> Result<Content, GrammarError> {
        let village = Grammar::from_json("village.json", VILLAGE_GRAMMAR)?;
        let station = Grammar::from_json("station.json", STATION_GRAMMAR)?;
        let raw: BTreeMap<String, String> = serde_json::from_str(ENGRAVINGS).map_err(|e| load_err("engravings.json", e))?;
        let mut engravings = BTreeMap::new();
        for kind in EndingKind::ALL {
            let text = raw
                .get(kind.key())
                .ok_or_else(|| load_err("engravings.json", format!("missing variant for {}", kind.key())))?;
            if text.contains('@') || text.contains('#') {
                return Err(load_err("engravings.json", "engraving text may not contain markers"));
            }
            engravings.insert(kind, text.clone());
        }
        if raw.len() != EndingKind::ALL.len() {
            return Err(load_err("engravings.json", "one variant per ending expected"));
        }
        let names: Vec<String> = serde_json::from_str(NAMES).map_err(|e| load_err("names.json", e))?;
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        if names.len() != 15 || unique.len() != 15 {
            return Err(load_err("names.json", "exactly 15 distinct names required"));
        }
        let scenery: Vec<SceneryPattern> = serde_json::from_str(SCENERY).map_err(|e| load_err("scenery.json", e))?;
        for p in &scenery {
            p.validate().map_err(|e| load_err("scenery.json", e))?;
        }
        let glyphs: GlyphTable = serde_json::from_str(GLYPHS).map_err(|e| load_err("glyphs.json", e))?;
        Ok(Content { village, station, engravings, names, scenery, glyphs })
    }
}

/// The embedded content, loaded once. Embedded data is covered by tests, so a
/// failure here is a build defect.
pub fn content() -> &'static Content {
    static CONTENT: OnceLock<Content> = OnceLock::new();
    CONTENT.get_or_init(|| Content::load().expect("embedded content is valid"))
}

/// The dream engraving for an ending.
pub fn dream_engraving(kind: EndingKind) -> &'static str {
    &content().engravings[&kind]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiles::{ObjectKind, Terrain};

    #[test]
    fn embedded_content_loads() {
        let c = Content::load().unwrap();
        assert_eq!(c.names.len(), 15);
        assert!(!c.scenery.is_empty());
    }

    #[test]
    fn engravings_are_distinct_per_ending() {
        let texts: Vec<&str> = EndingKind::ALL.iter().map(|k| dream_engraving(*k)).collect();
        assert_ne!(texts[0], texts[1]);
        assert_ne!(texts[1], texts[2]);
        assert_ne!(texts[0], texts[2]);
        assert!(dream_engraving(EndingKind::EcosystemCollapse).contains("lush forest"));
    }

    #[test]
    fn every_terrain_and_object_has_a_glyph() {
        let g = &content().glyphs;
        for t in Terrain::ALL {
            assert!(g.terrain.contains_key(t.name()), "{t:?}");
        }
        let kinds: Vec<ObjectKind> = serde_json::from_str(
            r#"["rubble","pew","altar","engraving","statue_fragment","plaque","table","chair","cutlery","toy","perfume","bed",
                "crop","weed","hay","cattle_skeleton","predator_skeleton","desk","station_chair","lab_bench","console",
                "sample_case","fuel_barrel","weapon_rack","locker","bunk","mess_table","bench","crate","terminal","body"]"#,
        )
        .unwrap();
        for k in kinds {
            assert!(g.objects.contains_key(&k.name()), "{k:?}");
        }
    }

    #[test]
    fn every_object_and_terrain_has_a_description() {
        let c = content();
        for sym in ["plaque", "statue_fragment", "pew", "altar", "engraving", "rubble", "table", "chair", "cutlery", "toy",
            "perfume", "bed", "crop", "weed", "hay", "cattle_skeleton", "predator_skeleton"] {
            assert!(c.village.contains(sym), "{sym}");
        }
        for t in ["wall", "fence", "water", "sand", "road", "soil", "floor", "rubble", "doorway"] {
            assert!(c.village.contains(&format!("t_{t}")), "{t}");
        }
        for p in &c.scenery {
            for piece in &p.pieces {
                assert!(c.station.contains(&piece.kind.name()), "{:?}", piece.kind);
            }
        }
        for t in ["wall", "floor", "doorway", "exterior_door", "snow", "rubble", "scorched"] {
            assert!(c.station.contains(&format!("t_{t}")), "{t}");
        }
    }
}
