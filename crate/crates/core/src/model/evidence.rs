use super::CdnModel;

/// Role of one variable in a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarState {
    /// Not mentioned by the query; evaluated as marginalized.
    Free,
    /// Argument set to +∞ (copula argument 1).
    Marginalized,
    /// Density at x: argument fixed and differentiated.
    Point(f64),
    /// Cumulative event X ≤ x: argument fixed, not differentiated.
    CumulativeBound(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub states: Vec<VarState>,
}

impl Evidence {
    pub fn free(n: usize) -> Self {
        Self { states: vec![VarState::Free; n] }
    }

    pub fn marginalized(n: usize) -> Self {
        Self { states: vec![VarState::Marginalized; n] }
    }

    /// Joint density at a complete point.
    pub fn point(x: &[f64]) -> Self {
        Self { states: x.iter().map(|&v| VarState::Point(v)).collect() }
    }

    /// Joint CDF at a complete point.
    pub fn bound(x: &[f64]) -> Self {
        Self { states: x.iter().map(|&v| VarState::CumulativeBound(v)).collect() }
    }

    pub fn with(mut self, i: usize, s: VarState) -> Self {
        self.states[i] = s;
        self
    }

    /// Combines two evidence sets; `other` wins where it is not Free.
    pub fn merge(&self, other: &Evidence) -> Evidence {
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| if *b == VarState::Free { *a } else { *b })
            .collect();
        Evidence { states }
    }
}

/// Factor-argument assignment derived from evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduced {
    /// Argument in x-space; +∞ for marginalized and free variables.
    pub x: Vec<f64>,
    pub diff: Vec<bool>,
    /// Free variables, which a caller may still choose to differentiate.
    pub free: Vec<bool>,
}

pub fn reduce(m: &CdnModel, e: &Evidence) -> Reduced {
    let n = m.n_vars();
    let mut r = Reduced { x: vec![f64::INFINITY; n], diff: vec![false; n], free: vec![false; n] };
    for (i, s) in e.states.iter().enumerate().take(n) {
        match *s {
            VarState::Free => r.free[i] = true,
            VarState::Marginalized => {}
            VarState::Point(x) => {
                r.x[i] = x;
                r.diff[i] = true;
            }
            VarState::CumulativeBound(x) => r.x[i] = x,
        }
    }
    r
}

impl Reduced {
    /// Evidence that reduces back to `self`.
    pub fn to_evidence(&self) -> Evidence {
        let states = (0..self.x.len())
            .map(|i| {
                if self.free[i] {
                    VarState::Free
                } else if self.diff[i] {
                    VarState::Point(self.x[i])
                } else if self.x[i].is_finite() {
                    VarState::CumulativeBound(self.x[i])
                } else {
                    VarState::Marginalized
                }
            })
            .collect();
        Evidence { states }
    }
}
