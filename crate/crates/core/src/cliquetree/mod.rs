//! Clique trees built by simulated min-fill elimination.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{CdnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clique {
    /// Sorted variable indices.
    pub vars: Vec<usize>,
    /// Factors assigned to this clique.
    pub factors: Vec<usize>,
}

/// A clique forest. Cliques are numbered so that every clique precedes
/// its child (the neighbour one step closer to its component root).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliqueTree {
    pub cliques: Vec<Clique>,
    /// Downstream neighbour, `None` for roots.
    pub child: Vec<Option<usize>>,
    pub topo_order: Vec<usize>,
    /// Clique that holds each factor; `None` when the factor lies outside the tree.
    pub factor_clique: Vec<Option<usize>>,
    /// Scopes the tree was built from, restricted to the tree's variables.
    pub scopes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    FamilyPreservation { factor: usize, clique: Option<usize> },
    RunningIntersection { var: usize },
    Topology { clique: usize },
}

impl CliqueTree {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.len()).filter(|&j| self.child[j] == Some(i)).collect();
        if let Some(c) = self.child[i] {
            out.push(c);
        }
        out
    }

    /// Upstream neighbours (those whose child is `i`).
    pub fn parents(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.child[j] == Some(i)).collect()
    }

    pub fn sepset(&self, i: usize, j: usize) -> Vec<usize> {
        let b: BTreeSet<usize> = self.cliques[j].vars.iter().copied().collect();
        self.cliques[i].vars.iter().copied().filter(|v| b.contains(v)).collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.child[i].is_none()).collect()
    }

    /// Root of the component containing clique `i`.
    pub fn root_of(&self, mut i: usize) -> usize {
        while let Some(c) = self.child[i] {
            i = c;
        }
        i
    }

    pub fn variables(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.cliques.iter().flat_map(|c| c.vars.iter().copied()).collect();
        s.into_iter().collect()
    }

    pub fn edge_count(&self) -> usize {
        self.child.iter().filter(|c| c.is_some()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }
}

/// Largest clique size minus one.
pub fn treewidth(t: &CliqueTree) -> usize {
    t.cliques.iter().map(|c| c.vars.len()).max().unwrap_or(1).saturating_sub(1)
}

/// Builds a clique tree over the given factor scopes.
pub fn build_min_fill(scopes: &[Vec<usize>]) -> Result<CliqueTree> {
    build_restricted(scopes, None)
}

/// Builds over scopes intersected with `keep` (all variables when `None`).
/// Factors whose restricted scope is empty are left unassigned.
pub fn build_restricted(scopes: &[Vec<usize>], keep: Option<&[usize]>) -> Result<CliqueTree> {
    let keep_set: Option<BTreeSet<usize>> = keep.map(|k| k.iter().copied().collect());
    let restricted: Vec<Vec<usize>> = scopes
        .iter()
        .map(|s| {
            let mut r: Vec<usize> =
                s.iter().copied().filter(|v| keep_set.as_ref().is_none_or(|k| k.contains(v))).collect();
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    let mut vars: BTreeSet<usize> = restricted.iter().flatten().copied().collect();
    if let Some(k) = &keep_set {
        // isolated kept variables still get a singleton clique
        vars.extend(k.iter().copied());
    }
    if vars.is_empty() {
        return Err(CdnError::EmptyModel);
    }
    let vars: Vec<usize> = vars.into_iter().collect();
    let n_max = *vars.last().unwrap() + 1;
    let mut local = vec![usize::MAX; n_max];
    for (i, &v) in vars.iter().enumerate() {
        local[v] = i;
    }
    let n = vars.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for s in &restricted {
        for &a in s {
            for &b in s {
                if a != b {
                    adj[local[a]].insert(local[b]);
                }
            }
        }
    }

    // simulated elimination
    let mut eliminated = vec![false; n];
    let mut elim_pos = vec![0usize; n];
    let mut raw: Vec<(usize, Vec<usize>)> = Vec::with_capacity(n); // (eliminated var, clique vars)
    for step in 0..n {
        let mut best = usize::MAX;
        let mut best_fill = usize::MAX;
        for v in 0..n {
            if eliminated[v] {
                continue;
            }
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            let mut fill = 0;
            for (a_i, &a) in nb.iter().enumerate() {
                for &b in &nb[a_i + 1..] {
                    if !adj[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            if fill < best_fill {
                best_fill = fill;
                best = v;
            }
        }
        let v = best;
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for (a_i, &a) in nb.iter().enumerate() {
            for &b in &nb[a_i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nb {
            adj[a].remove(&v);
        }
        eliminated[v] = true;
        elim_pos[v] = step;
        let mut c = nb.clone();
        c.push(v);
        c.sort_unstable();
        raw.push((v, c));
    }

    // elimination tree: clique of v links to the clique of the earliest
    // eliminated variable among its other members
    let m = raw.len();
    let mut link: Vec<Option<usize>> = vec![None; m];
    for (ci, (v, c)) in raw.iter().enumerate() {
        link[ci] = c.iter().filter(|&&x| x != *v).map(|&x| elim_pos[x]).min();
    }
    let mut sets: Vec<Vec<usize>> = raw.into_iter().map(|(_, c)| c).collect();
    let mut alive = vec![true; m];
    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for (ci, l) in link.iter().enumerate() {
        if let Some(p) = *l {
            nbrs[ci].insert(p);
            nbrs[p].insert(ci);
        }
    }
    // prune cliques contained in a neighbour
    loop {
        let mut merged = false;
        'outer: for i in 0..m {
            if !alive[i] {
                continue;
            }
            for &j in nbrs[i].iter() {
                if is_subset(&sets[i], &sets[j]) {
                    let others: Vec<usize> = nbrs[i].iter().copied().filter(|&k| k != j).collect();
                    for k in others {
                        nbrs[k].remove(&i);
                        nbrs[k].insert(j);
                        nbrs[j].insert(k);
                    }
                    nbrs[j].remove(&i);
                    nbrs[i].clear();
                    alive[i] = false;
                    sets[i].clear();
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    // root each component at its highest-numbered clique; post-order relabel
    let mut seen = vec![false; m];
    let mut order: Vec<usize> = Vec::new();
    let mut parent_old: Vec<Option<usize>> = vec![None; m];
    for r in (0..m).rev() {
        if !alive[r] || seen[r] {
            continue;
        }
        // iterative post-order DFS
        let mut stack: Vec<(usize, bool)> = vec![(r, false)];
        seen[r] = true;
        while let Some((x, expanded)) = stack.pop() {
            if expanded {
                order.push(x);
                continue;
            }
            stack.push((x, true));
            for &y in nbrs[x].iter().rev() {
                if !seen[y] {
                    seen[y] = true;
                    parent_old[y] = Some(x);
                    stack.push((y, false));
                }
            }
        }
    }
    let mut new_id = vec![usize::MAX; m];
    for (k, &old) in order.iter().enumerate() {
        new_id[old] = k;
    }
    let mut cliques: Vec<Clique> = order
        .iter()
        .map(|&old| Clique { vars: sets[old].iter().map(|&l| vars[l]).collect(), factors: Vec::new() })
        .collect();
    let child: Vec<Option<usize>> = order.iter().map(|&old| parent_old[old].map(|p| new_id[p])).collect();

    let mut factor_clique = vec![None; restricted.len()];
    for (f, s) in restricted.iter().enumerate() {
        if s.is_empty() {
            continue;
        }
        if let Some(ci) = cliques.iter().position(|c| is_subset(s, &c.vars)) {
            factor_clique[f] = Some(ci);
            cliques[ci].factors.push(f);
        }
    }
    let topo_order = (0..cliques.len()).collect();
    Ok(CliqueTree { cliques, child, topo_order, factor_clique, scopes: restricted })
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    // both sorted
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

/// Checks family preservation, running intersection and topological order.
pub fn validate_tree(t: &CliqueTree, scopes: &[Vec<usize>]) -> std::result::Result<(), Vec<TreeViolation>> {
    let mut out = Vec::new();
    if t.child.len() != t.len() {
        return Err(vec![TreeViolation::Topology { clique: t.len().min(t.child.len()) }]);
    }
    for (f, s) in scopes.iter().enumerate() {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        match t.factor_clique.get(f).copied().flatten() {
            Some(c) if c < t.len() && is_subset(&s, &t.cliques[c].vars) && t.cliques[c].factors.contains(&f) => {}
            Some(c) => out.push(TreeViolation::FamilyPreservation { factor: f, clique: Some(c) }),
            None if s.is_empty() => {}
            None => out.push(TreeViolation::FamilyPreservation { factor: f, clique: None }),
        }
    }
    let pos: Vec<usize> = {
        let mut p = vec![usize::MAX; t.len()];
        for (k, &c) in t.topo_order.iter().enumerate() {
            if c < t.len() {
                p[c] = k;
            }
        }
        p
    };
    for i in 0..t.len() {
        match t.child[i] {
            Some(c) if c >= t.len() || pos[i] == usize::MAX || pos[c] == usize::MAX || pos[i] >= pos[c] => {
                out.push(TreeViolation::Topology { clique: i })
            }
            None if pos[i] == usize::MAX => out.push(TreeViolation::Topology { clique: i }),
            _ => {}
        }
    }
    if t.topo_order.len() != t.len() {
        out.push(TreeViolation::Topology { clique: t.len() });
    }
    for v in t.variables() {
        let holders: Vec<usize> = (0..t.len()).filter(|&i| t.cliques[i].vars.contains(&v)).collect();
        // holders form a subtree iff exactly one of them has its child outside the set
        let tops = holders
            .iter()
            .filter(|&&i| match t.child[i] {
                Some(c) => t.cliques.get(c).is_none_or(|k| !k.vars.contains(&v)),
                None => true,
            })
            .count();
        if tops != 1 {
            out.push(TreeViolation::RunningIntersection { var: v });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
