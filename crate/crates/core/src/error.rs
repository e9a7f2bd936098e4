use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RngError {
    #[error("invalid stream label {0:?}: must be 1..=64 ASCII bytes")]
    InvalidLabel(String),
    #[error("invalid seed {0:?}: expected decimal or 0x-prefixed hex u64")]
    InvalidSeed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid range at `{field}`: min {min} > max {max}")]
    InvalidRange { field: String, min: f64, max: f64 },
    #[error("invalid value at `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("config parse error at `{field}`: {reason}")]
    Parse { field: String, reason: String },
}

impl ConfigError {
    /// Dotted path of the offending field.
    pub fn field(&self) -> &str {
        match self {
            ConfigError::InvalidRange { field, .. }
            | ConfigError::InvalidValue { field, .. }
            | ConfigError::Parse { field, .. } => field,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("missing rule for symbol `{0}`")]
    MissingRule(String),
    #[error("expansion exceeded depth {max} at symbol `{symbol}`")]
    Recursion { symbol: String, max: usize },
    #[error("unknown modifier `{modifier}` on `{symbol}`")]
    UnknownModifier { symbol: String, modifier: String },
    #[error("malformed template in `{symbol}`: {reason}")]
    Malformed { symbol: String, reason: String },
    #[error("symbol `{0}` has no alternatives")]
    EmptyRule(String),
    #[error("no binding for marker @{0}@")]
    MissingBinding(String),
    #[error("binding for @{marker}@ may not contain '@': {value:?}")]
    InvalidBinding { marker: String, value: String },
    #[error("grammar file {file}: {reason}")]
    Load { file: String, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VillageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step called after the village already ended ({0:?})")]
    AlreadyEnded(crate::village::EndingKind),
    #[error("village simulation did not end within {0} ticks")]
    NonConvergence(u32),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Village(#[from] VillageError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("{stage}: no valid placement after {attempts} attempts")]
    PlacementExhausted { stage: &'static str, attempts: u32 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("station simulation exceeded tick cap {cap} with {alive} crew alive; {dump}")]
    NonConvergence { cap: u32, alive: usize, dump: String },
    #[error("simulation already finished")]
    Finished,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvidenceError {
    #[error("message {index} sent by {sender} on turn {turn}, but sender died on turn {death_turn}")]
    DeadSender { index: usize, sender: String, turn: u32, death_turn: u32 },
    #[error("unknown sender {0}")]
    UnknownSender(String),
    #[error("only {found} valid terminal positions (need at least {needed})")]
    TooFewTerminalSites { found: usize, needed: usize },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("terminal at ({x}, {y}) is out of reach")]
    OutOfReach { x: i32, y: i32 },
    #[error("no terminal at ({x}, {y})")]
    NoTerminal { x: i32, y: i32 },
    #[error("tile ({x}, {y}) is not currently visible")]
    NotVisible { x: i32, y: i32 },
    #[error("illegal in current state: {0}")]
    IllegalState(String),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("parse error at `{path}`: {reason}")]
    Parse { path: String, reason: String },
    #[error("unsupported format_version {found} (supported: {supported})")]
    Version { found: i64, supported: u32 },
    #[error("corrupt world at `{path}`: {reason}")]
    Corrupt { path: String, reason: String },
}

impl WireError {
    pub(crate) fn corrupt(path: impl Into<String>, reason: impl Into<String>) -> Self {
        WireError::Corrupt { path: path.into(), reason: reason.into() }
    }
}
