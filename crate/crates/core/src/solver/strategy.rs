use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;

/// Who orders the values of the current variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Who {
    /// Decreasing unary preference in the 1-completion.
    Dp,
    /// Decreasing unary preference in the 0-completion.
    Dpi,
    /// The user suggests, looking at unary preferences only.
    Lu,
    /// The user suggests, also looking at constraints with bound variables.
    Su,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum What {
    All,
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum When {
    Tree,
    Branch,
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub who: Who,
    pub what: What,
    pub when: When,
}

impl StrategyConfig {
    /// Builds a consistent triple.
    pub fn new(who: Who, what: What, when: When) -> Result<Self, SolveError> {
        let cfg = StrategyConfig { who, what, when };
        cfg.check()?;
        Ok(cfg)
    }

    /// The user only helps with value choice during branch-level
    /// elicitation; tree and node levels are restricted to dp and dpi.
    pub fn is_consistent(&self) -> bool {
        self.when == When::Branch || matches!(self.who, Who::Dp | Who::Dpi)
    }

    pub fn check(&self) -> Result<(), SolveError> {
        if self.is_consistent() {
            Ok(())
        } else {
            Err(SolveError::InconsistentStrategy(self.to_string()))
        }
    }

    /// The sixteen consistent instances.
    pub fn all() -> Vec<StrategyConfig> {
        let mut out = Vec::with_capacity(16);
        for when in [When::Tree, When::Branch, When::Node] {
            for who in [Who::Dp, Who::Dpi, Who::Lu, Who::Su] {
                for what in [What::All, What::Worst] {
                    let cfg = StrategyConfig { who, what, when };
                    if cfg.is_consistent() {
                        out.push(cfg);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Who {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Who::Dp => "DP",
            Who::Dpi => "DPI",
            Who::Lu => "LU",
            Who::Su => "SU",
        })
    }
}

impl fmt::Display for What {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            What::All => "ALL",
            What::Worst => "WORST",
        })
    }
}

impl fmt::Display for When {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            When::Tree => "TREE",
            When::Branch => "BRANCH",
            When::Node => "NODE",
        })
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.who, self.what, self.when)
    }
}

fn bad(kind: &str, s: &str) -> SolveError {
    SolveError::InconsistentStrategy(format!("unknown {kind} {s:?}"))
}

impl FromStr for Who {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dp" => Ok(Who::Dp),
            "dpi" => Ok(Who::Dpi),
            "lu" => Ok(Who::Lu),
            "su" => Ok(Who::Su),
            _ => Err(bad("who", s)),
        }
    }
}

impl FromStr for What {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(What::All),
            "worst" => Ok(What::Worst),
            _ => Err(bad("what", s)),
        }
    }
}

impl FromStr for When {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tree" => Ok(When::Tree),
            "branch" => Ok(When::Branch),
            "node" => Ok(When::Node),
            _ => Err(bad("when", s)),
        }
    }
}

impl FromStr for StrategyConfig {
    type Err = SolveError;

    /// Parses the dotted form, e.g. `DPI.WORST.BRANCH`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        let [who, what, when] = parts[..] else {
            return Err(SolveError::InconsistentStrategy(format!("expected WHO.WHAT.WHEN, found {s:?}")));
        };
        StrategyConfig::new(who.parse()?, what.parse()?, when.parse()?)
    }
}

/// A scheme instance or the random baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Scheme(StrategyConfig),
    /// DPI.RANDOM.TREE: reveal random missing tuples after every pair of
    /// branch and bound runs until the two completions agree.
    Baseline,
}

impl Strategy {
    pub const BASELINE_NAME: &'static str = "DPI.RANDOM.TREE";

    /// The sixteen instances followed by the baseline.
    pub fn all() -> Vec<Strategy> {
        StrategyConfig::all()
            .into_iter()
            .map(Strategy::Scheme)
            .chain(std::iter::once(Strategy::Baseline))
            .collect()
    }

    pub fn config(&self) -> Option<StrategyConfig> {
        match self {
            Strategy::Scheme(cfg) => Some(*cfg),
            Strategy::Baseline => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Scheme(cfg) => cfg.fmt(f),
            Strategy::Baseline => f.write_str(Self::BASELINE_NAME),
        }
    }
}

impl FromStr for Strategy {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case(Self::BASELINE_NAME) {
            Ok(Strategy::Baseline)
        } else {
            s.parse().map(Strategy::Scheme)
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
