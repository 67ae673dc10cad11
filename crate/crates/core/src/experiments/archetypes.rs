//! Generators for the chain, loop, tree and grid model families.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::copulas::{param_domain, CopulaKind};
use crate::error::{CdnError, Result};
use crate::learning::clayton_theta_from_tau;
use crate::model::{CdnModel, CopulaFactor};
use crate::sampling::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Chain,
    Loop,
    Tree,
    Grid,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Chain => "chain",
            Family::Loop => "loop",
            Family::Tree => "tree",
            Family::Grid => "grid",
        }
    }

    /// Smallest supported size parameter.
    pub fn min_n(self) -> usize {
        match self {
            Family::Loop => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CdnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Family::Chain),
            "loop" => Ok(Family::Loop),
            "tree" => Ok(Family::Tree),
            "grid" => Ok(Family::Grid),
            _ => Err(CdnError::InvalidSpec(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamPolicy {
    Fixed(f64),
    /// Clayton via Kendall's τ ~ U(0, 0.5); normal ρ ~ U(0, 1).
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchetypeSpec {
    pub family: Family,
    pub n: usize,
    pub kind: CopulaKind,
    pub params: ParamPolicy,
}

impl ArchetypeSpec {
    pub fn new(family: Family, n: usize, kind: CopulaKind) -> Self {
        Self { family, n, kind, params: ParamPolicy::Random }
    }

    pub fn fixed(mut self, p: f64) -> Self {
        self.params = ParamPolicy::Fixed(p);
        self
    }
}

/// Variable count and edge list of an archetype.
pub fn edges(family: Family, n: usize) -> Result<(usize, Vec<(usize, usize)>)> {
    if n < family.min_n() {
        return Err(CdnError::InvalidSpec(format!("{family} needs n >= {}, got {n}", family.min_n())));
    }
    Ok(match family {
        Family::Chain => (n, (0..n - 1).map(|i| (i, i + 1)).collect()),
        Family::Loop => (n, (0..n).map(|i| (i, (i + 1) % n)).collect()),
        Family::Tree => {
            if n > 20 {
                return Err(CdnError::InvalidSpec(format!("tree with {n} levels is too large")));
            }
            let v = (1usize << n) - 1;
            (v, (1..v).map(|c| ((c - 1) / 2, c)).collect())
        }
        Family::Grid => {
            let mut e = Vec::new();
            for r in 0..n {
                for c in 0..n {
                    let i = r * n + c;
                    if c + 1 < n {
                        e.push((i, i + 1));
                    }
                    if r + 1 < n {
                        e.push((i, i + n));
                    }
                }
            }
            (n * n, e)
        }
    })
}

/// Builds the archetype with standard normal margins.
pub fn generate(spec: &ArchetypeSpec, seed: u64) -> Result<CdnModel> {
    let (nv, es) = edges(spec.family, spec.n)?;
    let dom = param_domain(spec.kind, 2)?;
    let mut rng = rng_from_seed(seed);
    let factors = es
        .into_iter()
        .map(|(a, b)| {
            let p = match spec.params {
                ParamPolicy::Fixed(p) => p,
                ParamPolicy::Random => match spec.kind {
                    CopulaKind::Clayton => clayton_theta_from_tau(rng.random_range(0.0..0.5)).max(1e-6),
                    CopulaKind::NormalPair => rng.random_range(0.0..1.0),
                },
            };
            if !dom.contains(p) {
                return Err(CdnError::InvalidSpec(format!("parameter {p} outside the {} domain", spec.kind.name())));
            }
            Ok(match spec.kind {
                CopulaKind::Clayton => CopulaFactor::clayton(p, vec![a, b]),
                CopulaKind::NormalPair => CopulaFactor::normal_pair(p, a, b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CdnModel::with_standard_margins(nv, factors)
}
