//! CDN model container: variables with margins, copula factors, exponents.

mod evidence;
mod json;

pub use evidence::{reduce, Evidence, Reduced, VarState};
pub use json::{learned_to_json, model_to_json, parse_model, LearnedModelJson, ModelJson, ReportJson};

use serde::{Deserialize, Serialize};

use crate::copulas::{param_domain, CopulaKind};
use crate::error::{CdnError, Result};
use crate::inference::PointArgs;
use crate::margins::{clamp_unit, normal, to_copula_coord, NormalMargin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub margin: NormalMargin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaFactor {
    pub kind: CopulaKind,
    pub param: f64,
    pub scope: Vec<usize>,
}

impl CopulaFactor {
    pub fn clayton(theta: f64, scope: Vec<usize>) -> Self {
        Self { kind: CopulaKind::Clayton, param: theta, scope }
    }

    pub fn normal_pair(rho: f64, a: usize, b: usize) -> Self {
        Self { kind: CopulaKind::NormalPair, param: rho, scope: vec![a, b] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelViolation {
    UnknownVariable { factor: usize, index: usize },
    EmptyScope { factor: usize },
    DuplicateInScope { factor: usize, index: usize },
    ParamOutOfDomain { factor: usize },
    UnsupportedArity { factor: usize, arity: usize },
    OrphanVariable { var: usize },
}

impl std::fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelViolation::UnknownVariable { factor, index } => {
                write!(f, "factor {factor} references unknown variable {index}")
            }
            ModelViolation::EmptyScope { factor } => write!(f, "factor {factor} has an empty scope"),
            ModelViolation::DuplicateInScope { factor, index } => {
                write!(f, "factor {factor} lists variable {index} twice")
            }
            ModelViolation::ParamOutOfDomain { factor } => write!(f, "factor {factor} parameter out of domain"),
            ModelViolation::UnsupportedArity { factor, arity } => {
                write!(f, "factor {factor} has unsupported arity {arity}")
            }
            ModelViolation::OrphanVariable { var } => write!(f, "variable {var} is in no factor"),
        }
    }
}

/// Checks every structural invariant of a variable/factor list.
pub fn validate(n_vars: usize, factors: &[CopulaFactor]) -> std::result::Result<(), Vec<ModelViolation>> {
    let mut out = Vec::new();
    let mut k = vec![0usize; n_vars];
    for (fi, f) in factors.iter().enumerate() {
        if f.scope.is_empty() {
            out.push(ModelViolation::EmptyScope { factor: fi });
        }
        let mut seen = Vec::new();
        for &x in &f.scope {
            if x >= n_vars {
                out.push(ModelViolation::UnknownVariable { factor: fi, index: x });
            } else if seen.contains(&x) {
                out.push(ModelViolation::DuplicateInScope { factor: fi, index: x });
            } else {
                k[x] += 1;
                seen.push(x);
            }
        }
        match param_domain(f.kind, f.scope.len()) {
            Err(_) if !f.scope.is_empty() => {
                out.push(ModelViolation::UnsupportedArity { factor: fi, arity: f.scope.len() })
            }
            Ok(d) if !d.contains(f.param) => out.push(ModelViolation::ParamOutOfDomain { factor: fi }),
            _ => {}
        }
    }
    for (v, &c) in k.iter().enumerate() {
        if c == 0 {
            out.push(ModelViolation::OrphanVariable { var: v });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// A validated copula CDN.
#[derive(Debug, Clone, PartialEq)]
pub struct CdnModel {
    variables: Vec<Variable>,
    factors: Vec<CopulaFactor>,
    k: Vec<usize>,
    d: Vec<f64>,
}

impl CdnModel {
    pub fn new(variables: Vec<Variable>, factors: Vec<CopulaFactor>) -> std::result::Result<Self, Vec<ModelViolation>> {
        validate(variables.len(), &factors)?;
        let mut k = vec![0usize; variables.len()];
        for f in &factors {
            for &x in &f.scope {
                k[x] += 1;
            }
        }
        let d = k.iter().map(|&c| 1.0 / c as f64).collect();
        Ok(Self { variables, factors, k, d })
    }

    /// Like `new`, reporting violations as a `CdnError`.
    pub fn build(variables: Vec<Variable>, factors: Vec<CopulaFactor>) -> Result<Self> {
        Self::new(variables, factors)
            .map_err(|v| CdnError::InvalidModel(v.iter().map(|x| x.to_string()).collect()))
    }

    /// Standard normal margins named X1..Xn.
    pub fn with_standard_margins(n: usize, factors: Vec<CopulaFactor>) -> Result<Self> {
        let vars = (0..n).map(|i| Variable { name: format!("X{}", i + 1), margin: NormalMargin::standard() }).collect();
        Self::build(vars, factors)
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn factors(&self) -> &[CopulaFactor] {
        &self.factors
    }

    pub fn margin(&self, i: usize) -> &NormalMargin {
        &self.variables[i].margin
    }

    /// Number of factors containing each variable.
    pub fn k(&self) -> &[usize] {
        &self.k
    }

    /// Exponent d_i = 1 / k_i.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn scopes(&self) -> Vec<Vec<usize>> {
        self.factors.iter().map(|f| f.scope.clone()).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.param).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Replaces all factor parameters, revalidating domains.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let mut f = self.factors.clone();
        for (x, &p) in f.iter_mut().zip(params) {
            x.param = p;
        }
        validate(self.n_vars(), &f)
            .map_err(|v| CdnError::InvalidModel(v.iter().map(|x| x.to_string()).collect()))?;
        self.factors = f;
        Ok(())
    }

    pub fn set_margins(&mut self, margins: &[NormalMargin]) {
        for (v, m) in self.variables.iter_mut().zip(margins) {
            v.margin = *m;
        }
    }

    /// Neighbours in the undirected factor graph (variables sharing a factor).
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n_vars()];
        for f in &self.factors {
            for &a in &f.scope {
                for &b in &f.scope {
                    if a != b && !nb[a].contains(&b) {
                        nb[a].push(b);
                    }
                }
            }
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        nb
    }

    /// Whether variable `i` needs its probit (is in some normal factor).
    pub fn needs_probit(&self) -> Vec<bool> {
        let mut out = vec![false; self.n_vars()];
        for f in &self.factors {
            if f.kind == CopulaKind::NormalPair {
                for &x in &f.scope {
                    out[x] = true;
                }
            }
        }
        out
    }
}

/// Result of mapping a point into factor arguments.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub args: PointArgs,
    pub u: Vec<f64>,
    /// ln of the chain-rule constant over differentiated variables.
    pub ln_kappa: f64,
}

/// Maps x to u = F(x), v = u^d, w = Φ⁻¹(v); accumulates ln κ over `diff`.
///
/// `x_i = +∞` marginalizes variable i. Finite arguments are clamped to
/// `[1e-15, 1 - 1e-15]` in u.
pub fn transform_point(m: &CdnModel, x: &[f64], diff: &[bool]) -> Result<Transformed> {
    let n = m.n_vars();
    let mut u = vec![1.0; n];
    for i in 0..n {
        if diff[i] && !x[i].is_finite() {
            return Err(CdnError::InvalidMask { mask: i as u32 });
        }
        u[i] = if x[i].is_finite() { clamp_unit(to_copula_coord(m.margin(i), x[i])) } else { to_copula_coord(m.margin(i), x[i]) };
    }
    Ok(transform_u(m, &u, diff, Some(x)))
}

/// Same as `transform_point` starting from copula coordinates u. When `x`
/// is given, ln κ includes the margin densities; otherwise only the
/// power-map term d u^(d-1) (a copula-space density).
pub fn transform_u(m: &CdnModel, u: &[f64], diff: &[bool], x: Option<&[f64]>) -> Transformed {
    let n = m.n_vars();
    let probit = m.needs_probit();
    let mut args = PointArgs::ones(n);
    let mut ln_kappa = 0.0;
    for i in 0..n {
        let d = m.d()[i];
        let v = if u[i] >= 1.0 { 1.0 } else { u[i].powf(d) };
        args.v[i] = v;
        args.w[i] = if probit[i] { normal::probit(v) } else { f64::INFINITY };
        args.diff[i] = diff[i];
        if diff[i] {
            ln_kappa += d.ln() + (d - 1.0) * u[i].ln();
            if let Some(x) = x {
                ln_kappa += m.margin(i).ln_pdf(x[i]);
            }
        }
    }
    Transformed { args, u: u.to_vec(), ln_kappa }
}
