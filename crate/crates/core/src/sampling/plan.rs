//! Greedy sampling order with cached per-variable clique trees.

use std::collections::BTreeSet;

use rand::Rng;

use crate::cliquetree::{build_restricted, CliqueTree};
use crate::error::Result;
use crate::model::CdnModel;

/// What is needed to sample one variable given the ones before it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub var: usize,
    /// Sampled variables the conditional depends on (sorted).
    pub branch: Vec<usize>,
    /// Clique tree over `branch`; `None` when the branch is empty.
    pub tree: Option<CliqueTree>,
    /// Factors containing `var` but nothing from `branch`.
    pub extras: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub n_vars: usize,
    pub steps: Vec<PlanStep>,
    /// Variables treated as already sampled (conditioning set).
    pub observed: Vec<usize>,
}

impl SamplingPlan {
    pub fn order(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.var).collect()
    }

    /// Number of variables each step's tree is built over.
    pub fn tree_sizes(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.branch.len()).collect()
    }
}

/// Connected groups of sampled variables.
struct Branches {
    of: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
}

impl Branches {
    fn new(n: usize) -> Self {
        Self { of: vec![None; n], members: Vec::new() }
    }

    fn adjacent(&self, nb: &[usize]) -> Vec<usize> {
        let s: BTreeSet<usize> = nb.iter().filter_map(|&x| self.of[x]).collect();
        s.into_iter().collect()
    }

    fn weight(&self, nb: &[usize]) -> usize {
        self.adjacent(nb).iter().map(|&b| self.members[b].len()).sum()
    }

    /// Adds `v`, merging its adjacent branches; returns the merged branch
    /// as it was before `v` joined.
    fn add(&mut self, v: usize, nb: &[usize]) -> Vec<usize> {
        let adj = self.adjacent(nb);
        let mut merged: Vec<usize> = adj.iter().flat_map(|&b| std::mem::take(&mut self.members[b])).collect();
        merged.sort_unstable();
        let id = self.members.len();
        let mut with_v = merged.clone();
        with_v.push(v);
        for &x in &with_v {
            self.of[x] = Some(id);
        }
        self.members.push(with_v);
        merged
    }
}

struct Builder<'m> {
    model: &'m CdnModel,
    scopes: Vec<Vec<usize>>,
    nb: Vec<Vec<usize>>,
    branches: Branches,
    steps: Vec<PlanStep>,
}

impl<'m> Builder<'m> {
    fn new(model: &'m CdnModel, active: &[bool]) -> Self {
        let nb = model
            .neighbours()
            .into_iter()
            .enumerate()
            .map(|(i, l)| if active[i] { l.into_iter().filter(|&j| active[j]).collect() } else { Vec::new() })
            .collect();
        Self { model, scopes: model.scopes(), nb, branches: Branches::new(model.n_vars()), steps: Vec::new() }
    }

    fn observe(&mut self, v: usize) {
        let nb = self.nb[v].clone();
        self.branches.add(v, &nb);
    }

    fn push(&mut self, v: usize) -> Result<()> {
        let nb = self.nb[v].clone();
        let branch = self.branches.add(v, &nb);
        let (tree, extras) = if branch.is_empty() {
            let ex = (0..self.scopes.len()).filter(|&f| self.scopes[f].contains(&v)).collect();
            (None, ex)
        } else {
            let t = build_restricted(&self.scopes, Some(&branch))?;
            let ex = (0..self.scopes.len())
                .filter(|&f| self.scopes[f].contains(&v) && !self.scopes[f].iter().any(|x| branch.contains(x)))
                .collect();
            (Some(t), ex)
        };
        self.steps.push(PlanStep { var: v, branch, tree, extras });
        Ok(())
    }

    fn finish(self, observed: Vec<usize>) -> SamplingPlan {
        SamplingPlan { n_vars: self.model.n_vars(), steps: self.steps, observed }
    }
}

/// Greedy order: repeatedly take the to-do variable whose adjacent sampled
/// branches are smallest in total, breaking ties with `rng`.
pub fn make_sampling_cliques<R: Rng>(model: &CdnModel, rng: &mut R) -> Result<SamplingPlan> {
    let n = model.n_vars();
    plan_conditional(model, &[], &(0..n).collect::<Vec<_>>(), rng)
}

/// Plan for sampling `targets` given `observed`; other variables are
/// marginalized and take no part in the order.
pub fn plan_conditional<R: Rng>(
    model: &CdnModel,
    observed: &[usize],
    targets: &[usize],
    rng: &mut R,
) -> Result<SamplingPlan> {
    let n = model.n_vars();
    let mut active = vec![false; n];
    for &v in observed.iter().chain(targets) {
        active[v] = true;
    }
    let mut b = Builder::new(model, &active);
    let mut unused: BTreeSet<usize> = targets.iter().copied().filter(|v| !observed.contains(v)).collect();
    let mut todo: BTreeSet<usize> = BTreeSet::new();
    for &v in observed {
        b.observe(v);
        todo.extend(b.nb[v].iter().copied().filter(|x| unused.contains(x)));
    }
    if observed.is_empty() {
        todo.extend(unused.iter().copied().filter(|&v| b.nb[v].len() <= 1));
    }
    while !unused.is_empty() {
        if todo.is_empty() {
            let pool: Vec<usize> = unused.iter().copied().collect();
            todo.insert(pool[rng.random_range(0..pool.len())]);
        }
        while !todo.is_empty() {
            let mut w_min = usize::MAX;
            let mut best: Vec<usize> = Vec::new();
            for &v in &todo {
                let w = b.branches.weight(&b.nb[v]);
                if w < w_min {
                    w_min = w;
                    best.clear();
                    best.push(v);
                } else if w == w_min {
                    best.push(v);
                }
            }
            let v = if best.len() == 1 { best[0] } else { best[rng.random_range(0..best.len())] };
            todo.remove(&v);
            unused.remove(&v);
            todo.extend(b.nb[v].iter().copied().filter(|x| unused.contains(x)));
            b.push(v)?;
        }
    }
    Ok(b.finish(observed.to_vec()))
}

/// Plan with a caller-chosen order over all variables.
pub fn plan_from_order(model: &CdnModel, order: &[usize]) -> Result<SamplingPlan> {
    let active = vec![true; model.n_vars()];
    let mut b = Builder::new(model, &active);
    for &v in order {
        b.push(v)?;
    }
    Ok(b.finish(Vec::new()))
}
