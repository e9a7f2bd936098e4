//! Two-layer description text.
//!
//! Layer one expands `#symbol#` references from a [`Grammar`], drawing one
//! alternative per reference (depth-first, left to right, one `below(n)` draw
//! each). `@MARKER@` tokens pass through untouched. Layer two, [`substitute`],
//! replaces markers from a [`DynamicContext`] shared by a whole world.
//!
//! Template syntax:
//! - `#name#` expands a symbol, `#name.capitalize#`, `#name.s#`, `#name.a#` apply
//!   modifiers left to right.
//! - `@NAME@` is a dynamic marker; `NAME` is `[A-Z0-9_]+`.
//! - `\#` is a literal `#`, `\\` a literal backslash.

use std::collections::BTreeMap;

use crate::error::GrammarError;
use crate::rng::RandomStream;

pub const MAX_DEPTH: usize = 64;

const MODIFIERS: [&str; 3] = ["capitalize", "s", "a"];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Grammar {
    rules: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, PartialEq, Eq)]
enum Piece<'a> {
    Text(String),
    Symbol { name: &'a str, modifiers: Vec<&'a str> },
}

fn parse_template<'a>(owner: &str, template: &'a str) -> Result<Vec<Piece<'a>>, GrammarError> {
    let malformed = |reason: &str| GrammarError::Malformed { symbol: owner.to_string(), reason: reason.to_string() };
    let mut pieces = Vec::new();
    let mut text = String::new();
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < template.len() {
        match bytes[i] {
            b'\\' => {
                match bytes.get(i + 1) {
                    Some(b'#') => text.push('#'),
                    Some(b'\\') => text.push('\\'),
                    _ => return Err(malformed("backslash must escape `#` or `\\`")),
                }
                i += 2;
            }
            b'#' => {
                let end = template[i + 1..].find('#').ok_or_else(|| malformed("unterminated `#`"))? + i + 1;
                let mut parts = template[i + 1..end].split('.');
                let name = parts.next().unwrap_or_default();
                if name.is_empty() {
                    return Err(malformed("empty symbol reference"));
                }
                let modifiers: Vec<&str> = parts.collect();
                for m in &modifiers {
                    if !MODIFIERS.contains(m) {
                        return Err(GrammarError::UnknownModifier { symbol: name.to_string(), modifier: m.to_string() });
                    }
                }
                if !text.is_empty() {
                    pieces.push(Piece::Text(std::mem::take(&mut text)));
                }
                pieces.push(Piece::Symbol { name, modifiers });
                i = end + 1;
            }
            _ => {
                let ch = template[i..].chars().next().expect("in bounds");
                text.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    if !text.is_empty() {
        pieces.push(Piece::Text(text));
    }
    Ok(pieces)
}

impl Grammar {
    pub fn new() -> Grammar {
        Grammar::default()
    }

    /// Loads a JSON object of `symbol -> [alternative, ...]` and validates it.
    pub fn from_json(file: &str, text: &str) -> Result<Grammar, GrammarError> {
        let rules: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| GrammarError::Load { file: file.into(), reason: e.to_string() })?;
        let g = Grammar { rules };
        g.validate()?;
        Ok(g)
    }

    pub fn insert(&mut self, symbol: impl Into<String>, alternatives: Vec<String>) {
        self.rules.insert(symbol.into(), alternatives);
    }

    /// Adds every rule of `other`, replacing rules with the same symbol.
    pub fn merge(&mut self, other: Grammar) {
        self.rules.extend(other.rules);
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.rules.contains_key(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    /// Checks that every rule is non-empty, parses, and references defined symbols.
    pub fn validate(&self) -> Result<(), GrammarError> {
        for (symbol, alts) in &self.rules {
            if alts.is_empty() {
                return Err(GrammarError::EmptyRule(symbol.clone()));
            }
            for alt in alts {
                for piece in parse_template(symbol, alt)? {
                    if let Piece::Symbol { name, .. } = piece {
                        if !self.rules.contains_key(name) {
                            return Err(GrammarError::MissingRule(name.to_string()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn expand(&self, start: &str, stream: &mut RandomStream) -> Result<String, GrammarError> {
        self.expand_symbol(start, stream, 0)
    }

    fn expand_symbol(&self, symbol: &str, stream: &mut RandomStream, depth: usize) -> Result<String, GrammarError> {
        if depth >= MAX_DEPTH {
            return Err(GrammarError::Recursion { symbol: symbol.to_string(), max: MAX_DEPTH });
        }
        let alts = self.rules.get(symbol).ok_or_else(|| GrammarError::MissingRule(symbol.to_string()))?;
        if alts.is_empty() {
            return Err(GrammarError::EmptyRule(symbol.to_string()));
        }
        let template = &alts[stream.index(alts.len())];
        let mut out = String::new();
        for piece in parse_template(symbol, template)? {
            match piece {
                Piece::Text(t) => out.push_str(&t),
                Piece::Symbol { name, modifiers } => {
                    let mut s = self.expand_symbol(name, stream, depth + 1)?;
                    for m in modifiers {
                        s = apply_modifier(m, &s);
                    }
                    out.push_str(&s);
                }
            }
        }
        Ok(out)
    }
}

fn apply_modifier(modifier: &str, s: &str) -> String {
    match modifier {
        "capitalize" => capitalize(s),
        "s" => pluralize(s),
        "a" => with_article(s),
        _ => s.to_string(),
    }
}

pub fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn pluralize(s: &str) -> String {
    let lower = s.to_ascii_lowercase();
    if ["s", "x", "z", "ch", "sh"].iter().any(|e| lower.ends_with(e)) {
        return format!("{s}es");
    }
    if let Some(stem) = s.strip_suffix('y') {
        if !stem.ends_with(['a', 'e', 'i', 'o', 'u']) {
            return format!("{stem}ies");
        }
    }
    format!("{s}s")
}

fn with_article(s: &str) -> String {
    let vowel = s.chars().next().is_some_and(|c| "aeiouAEIOU".contains(c));
    format!("{} {s}", if vowel { "an" } else { "a" })
}

/// Marker bindings for one world. Values may not contain `@`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DynamicContext {
    bindings: BTreeMap<String, String>,
}

fn valid_marker_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
}

impl DynamicContext {
    pub fn new() -> DynamicContext {
        DynamicContext::default()
    }

    pub fn bind(&mut self, marker: &str, value: impl Into<String>) -> Result<(), GrammarError> {
        let value = value.into();
        if !valid_marker_name(marker) {
            return Err(GrammarError::InvalidBinding { marker: marker.into(), value });
        }
        if value.contains('@') {
            return Err(GrammarError::InvalidBinding { marker: marker.into(), value });
        }
        self.bindings.insert(marker.to_string(), value);
        Ok(())
    }

    /// A copy of this context with extra bindings layered on top.
    pub fn layered<'a>(&self, extra: impl IntoIterator<Item = (&'a str, String)>) -> Result<DynamicContext, GrammarError> {
        let mut ctx = self.clone();
        for (k, v) in extra {
            ctx.bind(k, v)?;
        }
        Ok(ctx)
    }

    pub fn get(&self, marker: &str) -> Option<&str> {
        self.bindings.get(marker).map(String::as_str)
    }

    pub fn bindings(&self) -> &BTreeMap<String, String> {
        &self.bindings
    }
}

/// Replaces every `@NAME@` in `text`. Any other `@` is malformed, so output never contains `@`.
pub fn substitute(text: &str, ctx: &DynamicContext) -> Result<String, GrammarError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('@') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let end = after.find('@').ok_or_else(|| GrammarError::Malformed {
            symbol: "@".into(),
            reason: format!("unterminated marker in {text:?}"),
        })?;
        let name = &after[..end];
        if !valid_marker_name(name) {
            return Err(GrammarError::Malformed { symbol: "@".into(), reason: format!("invalid marker @{name}@") });
        }
        let value = ctx.get(name).ok_or_else(|| GrammarError::MissingBinding(name.to_string()))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Expands `symbol` then substitutes markers.
pub fn render(grammar: &Grammar, symbol: &str, ctx: &DynamicContext, stream: &mut RandomStream) -> Result<String, GrammarError> {
    substitute(&grammar.expand(symbol, stream)?, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, StreamLabel, WorldSeed};
    use proptest::prelude::*;

    fn rng() -> RandomStream {
        derive_stream(WorldSeed(0), &StreamLabel::new("grammar").unwrap())
    }

    fn grammar(rules: &[(&str, &[&str])]) -> Grammar {
        let mut g = Grammar::new();
        for (k, v) in rules {
            g.insert(*k, v.iter().map(|s| s.to_string()).collect());
        }
        g
    }

    #[test]
    fn single_terminal() {
        assert_eq!(grammar(&[("A", &["x"])]).expand("A", &mut rng()).unwrap(), "x");
    }

    #[test]
    fn nested_references() {
        let g = grammar(&[("A", &["#B# #B#"]), ("B", &["y"])]);
        assert_eq!(g.expand("A", &mut rng()).unwrap(), "y y");
    }

    #[test]
    fn markers_survive_expansion() {
        let g = grammar(&[("A", &["made of @MATERIAL@"])]);
        assert_eq!(g.expand("A", &mut rng()).unwrap(), "made of @MATERIAL@");
    }

    #[test]
    fn modifiers_and_escapes() {
        let g = grammar(&[("A", &["#b.a.capitalize#, two #b.s#, #c.s# \\#1 \\\\"]), ("b", &["owl"]), ("c", &["city"])]);
        assert_eq!(g.expand("A", &mut rng()).unwrap(), "An owl, two owls, cities #1 \\");
    }

    #[test]
    fn missing_and_recursive_rules() {
        let g = grammar(&[("A", &["#nope#"])]);
        assert_eq!(g.expand("A", &mut rng()), Err(GrammarError::MissingRule("nope".into())));
        assert_eq!(g.validate(), Err(GrammarError::MissingRule("nope".into())));
        let r = grammar(&[("A", &["a#A#"])]);
        assert!(matches!(r.expand("A", &mut rng()), Err(GrammarError::Recursion { .. })));
        assert_eq!(grammar(&[]).expand("Z", &mut rng()), Err(GrammarError::MissingRule("Z".into())));
    }

    #[test]
    fn unknown_modifier_is_rejected() {
        let g = grammar(&[("A", &["#B.shout#"]), ("B", &["b"])]);
        assert!(matches!(g.validate(), Err(GrammarError::UnknownModifier { .. })));
    }

    #[test]
    fn substitution() {
        let mut ctx = DynamicContext::new();
        ctx.bind("MATERIAL", "bone").unwrap();
        assert_eq!(substitute("made of @MATERIAL@", &ctx).unwrap(), "made of bone");
        assert_eq!(substitute("a @MATERIAL@ cup, a @MATERIAL@ bowl", &ctx).unwrap(), "a bone cup, a bone bowl");
        assert_eq!(substitute("@FLOWER@", &ctx), Err(GrammarError::MissingBinding("FLOWER".into())));
        assert!(ctx.bind("X", "a@b").is_err());
        assert!(substitute("mail@host", &ctx).is_err());
    }

    #[test]
    fn layered_context_overrides() {
        let mut base = DynamicContext::new();
        base.bind("A", "1").unwrap();
        base.bind("B", "2").unwrap();
        let top = base.layered([("B", "3".to_string())]).unwrap();
        assert_eq!(substitute("@A@@B@", &top).unwrap(), "13");
        assert_eq!(substitute("@A@@B@", &base).unwrap(), "12");
    }

    proptest! {
        #[test]
        fn substitute_is_idempotent(words in prop::collection::vec("[a-z ]{0,6}", 0..6), value in "[a-zA-Z ]{0,8}") {
            let mut ctx = DynamicContext::new();
            ctx.bind("M", value).unwrap();
            let text = words.join("@M@");
            let once = substitute(&text, &ctx).unwrap();
            prop_assert_eq!(substitute(&once, &ctx).unwrap(), once);
        }

        #[test]
        fn expansion_is_deterministic(seed in any::<u64>()) {
            let g = grammar(&[("A", &["#B##B#", "#B#"]), ("B", &["x", "y", "z"])]);
            let mut a = derive_stream(WorldSeed(seed), &StreamLabel::new("g").unwrap());
            let mut b = a.clone();
            prop_assert_eq!(g.expand("A", &mut a).unwrap(), g.expand("A", &mut b).unwrap());
        }
    }
}
