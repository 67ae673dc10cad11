//! Derivative-sum-product message passing over a clique tree.
//!
//! Each clique combines its factors and incoming messages ("terms") with
//! the subset-convolution product rule
//!
//! ```text
//! val(A, l) = Σ_{B ⊆ A ∩ M_l} term_l(B) · val(A \ B, l-1),   val(A, 0) = [A = ∅]
//! ```
//!
//! Entries are computed on demand: a backward sweep over the levels marks
//! exactly the (level, subset) pairs the requested targets depend on, and
//! a forward sweep fills them. No recursion is involved.
//!
//! In discrete mode term partials are backward differences and the rule
//! becomes `Σ_B term(B) · Σ_{E ⊆ B} (-1)^|E| val((A \ B) ∪ E, l-1)`.

use super::factor_cache::FactorCache;
use super::value::Scalar;
use crate::cliquetree::CliqueTree;
use crate::copulas::SignedLog;
use crate::error::{CdnError, Result};
use crate::model::CopulaFactor;

/// Largest clique the bitmask tables support.
pub const MAX_CLIQUE: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Continuous,
    Discrete,
}

/// Factor arguments for every variable at one evaluation point.
#[derive(Debug, Clone, Default)]
pub struct PointArgs {
    /// Copula coordinate v = u^d (1 for marginalized variables).
    pub v: Vec<f64>,
    /// Probit of v (only read by normal factors).
    pub w: Vec<f64>,
    /// Variables differentiated (or differenced).
    pub diff: Vec<bool>,
    /// Lower arguments F(x-1)^d, discrete mode only.
    pub lower_v: Vec<f64>,
}

impl PointArgs {
    /// Everything marginalized.
    pub fn ones(n: usize) -> Self {
        Self { v: vec![1.0; n], w: vec![f64::INFINITY; n], diff: vec![false; n], lower_v: vec![0.0; n] }
    }
}

#[derive(Debug, Clone)]
struct FactorTerm {
    factor: usize,
    /// (clique position, factor slot) for slots inside the clique
    map: Vec<(u8, u8)>,
    mask: u32,
}

#[derive(Debug, Clone)]
struct Link {
    sep_pos: Vec<u8>,
    mask: u32,
    edge_in: usize,
    edge_out: usize,
    nbr: usize,
}

#[derive(Debug, Clone)]
struct CliquePlan {
    vars: Vec<usize>,
    factors: Vec<FactorTerm>,
    links: Vec<Link>,
}

#[derive(Debug, Clone, Copy)]
enum Term {
    Factor { idx: usize, param: bool },
    Msg { link: usize },
}

/// Message-passing engine over one clique tree with its own workspace.
#[derive(Debug, Clone)]
pub struct Engine<V: Scalar> {
    mode: Mode,
    tree: CliqueTree,
    cliques: Vec<CliquePlan>,
    /// factor index -> cache slot in `caches`
    cache_of: Vec<Option<usize>>,
    caches: Vec<FactorCache>,
    /// the factor's global scope, used when loading points
    scopes: Vec<Vec<usize>>,
    msgs: Vec<Vec<V>>,
    msg_ok: Vec<bool>,
    dmask: Vec<u32>,
    // per-clique factor diffable masks (clique coordinates)
    fdiff: Vec<Vec<u32>>,
    val: Vec<Vec<V>>,
    stamp: Vec<Vec<u32>>,
    need: Vec<Vec<u32>>,
    gen: u32,
    terms: Vec<(Term, u32)>,
    reach: Vec<u32>,
    out: Vec<V>,
}

#[inline]
fn compact(mask: u32, pos: &[u8]) -> usize {
    let mut r = 0usize;
    for (t, &p) in pos.iter().enumerate() {
        r |= ((mask >> p & 1) as usize) << t;
    }
    r
}

#[inline]
fn to_slots(mask: u32, map: &[(u8, u8)]) -> u32 {
    let mut r = 0u32;
    for &(p, s) in map {
        r |= (mask >> p & 1) << s;
    }
    r
}

impl<V: Scalar> Engine<V> {
    /// Builds an engine for `tree`; `factors` must be the list the tree's
    /// scopes were taken from.
    pub fn new(tree: &CliqueTree, factors: &[CopulaFactor], mode: Mode) -> Result<Self> {
        let n_cl = tree.len();
        let mut cliques = Vec::with_capacity(n_cl);
        let mut cache_of = vec![None; factors.len()];
        let mut caches = Vec::new();
        for i in 0..n_cl {
            let vars = tree.cliques[i].vars.clone();
            if vars.len() > MAX_CLIQUE {
                return Err(CdnError::InvalidModel(vec![format!(
                    "clique of size {} exceeds the supported {}",
                    vars.len(),
                    MAX_CLIQUE
                )]));
            }
            let pos_of = |x: usize| vars.iter().position(|&y| y == x);
            let mut fterms = Vec::new();
            for &f in &tree.cliques[i].factors {
                let mut map = Vec::new();
                let mut mask = 0u32;
                for (slot, &x) in factors[f].scope.iter().enumerate() {
                    if let Some(p) = pos_of(x) {
                        map.push((p as u8, slot as u8));
                        mask |= 1 << p;
                    }
                }
                cache_of[f] = Some(caches.len());
                caches.push(FactorCache::new(factors[f].kind, factors[f].scope.len()));
                fterms.push(FactorTerm { factor: f, map, mask });
            }
            let mut links = Vec::new();
            for k in tree.neighbors(i) {
                let sep = tree.sepset(i, k);
                let sep_pos: Vec<u8> = sep.iter().map(|&x| pos_of(x).unwrap() as u8).collect();
                let mask = sep_pos.iter().fold(0u32, |m, &p| m | 1 << p);
                let (edge_out, edge_in) = if tree.child[i] == Some(k) { (2 * i, 2 * i + 1) } else { (2 * k + 1, 2 * k) };
                links.push(Link { sep_pos, mask, edge_in, edge_out, nbr: k });
            }
            cliques.push(CliquePlan { vars, factors: fterms, links });
        }
        let mut msgs = vec![Vec::new(); 2 * n_cl];
        for c in &cliques {
            for l in &c.links {
                msgs[l.edge_out] = vec![V::zero(); 1 << l.sep_pos.len()];
            }
        }
        let fdiff = cliques.iter().map(|c| vec![0; c.factors.len()]).collect();
        Ok(Self {
            mode,
            tree: tree.clone(),
            cliques,
            cache_of,
            caches,
            scopes: factors.iter().map(|f| f.scope.clone()).collect(),
            msgs,
            msg_ok: vec![false; 2 * n_cl],
            dmask: vec![0; n_cl],
            fdiff,
            val: Vec::new(),
            stamp: Vec::new(),
            need: Vec::new(),
            gen: 0,
            terms: Vec::new(),
            reach: Vec::new(),
            out: Vec::new(),
        })
    }

    pub fn tree(&self) -> &CliqueTree {
        &self.tree
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Loads factor parameters and a point; invalidates all messages.
    pub fn set_point(&mut self, factors: &[CopulaFactor], p: &PointArgs) {
        for (ci, c) in self.cliques.iter().enumerate() {
            let mut dm = 0u32;
            for (pos, &x) in c.vars.iter().enumerate() {
                if p.diff[x] {
                    dm |= 1 << pos;
                }
            }
            self.dmask[ci] = dm;
            for (k, ft) in c.factors.iter().enumerate() {
                self.fdiff[ci][k] = ft.mask & dm;
                let cache = &mut self.caches[self.cache_of[ft.factor].unwrap()];
                let scope = &self.scopes[ft.factor];
                let param = factors[ft.factor].param;
                match self.mode {
                    Mode::Continuous => cache.reset(param, scope.iter().map(|&x| (p.v[x], p.w[x]))),
                    Mode::Discrete => cache.reset_discrete(
                        param,
                        scope.iter().map(|&x| if p.diff[x] { (p.v[x], p.lower_v[x]) } else { (p.v[x], p.v[x]) }),
                    ),
                }
            }
        }
        self.msg_ok.fill(false);
    }

    fn next_gen(&mut self) {
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            for s in &mut self.stamp {
                s.fill(0);
            }
            self.gen = 1;
        }
    }

    fn term_value(&mut self, ci: usize, term: Term, b: u32) -> V {
        match term {
            Term::Factor { idx, param } => {
                let ft = &self.cliques[ci].factors[idx];
                let slots = to_slots(b, &ft.map);
                let cache = &mut self.caches[self.cache_of[ft.factor].unwrap()];
                V::from_sl(if param { cache.param_partial(slots) } else { cache.value(slots) })
            }
            Term::Msg { link } => {
                let l = &self.cliques[ci].links[link];
                self.msgs[l.edge_in][compact(b, &l.sep_pos)]
            }
        }
    }

    fn term_nonzero(&self, ci: usize, term: Term, b: u32) -> bool {
        match term {
            Term::Factor { idx, .. } => b & !self.fdiff[ci][idx] == 0,
            Term::Msg { link } => {
                let l = &self.cliques[ci].links[link];
                !self.msgs[l.edge_in][compact(b, &l.sep_pos)].is_zero()
            }
        }
    }

    /// Evaluates clique `ci` at every mask in `targets`, leaving the
    /// results in `self.out`. Messages from all neighbours except
    /// `exclude` are multiplied in; `replace` swaps one factor's value
    /// partials for its parameter partials.
    fn eval_clique(&mut self, ci: usize, exclude: Option<usize>, replace: Option<usize>, targets: &[u32]) -> Result<()> {
        let s = self.cliques[ci].vars.len();
        self.terms.clear();
        for (k, ft) in self.cliques[ci].factors.iter().enumerate() {
            self.terms.push((Term::Factor { idx: k, param: replace == Some(ft.factor) }, ft.mask));
        }
        for (k, l) in self.cliques[ci].links.iter().enumerate() {
            if Some(l.nbr) == exclude {
                continue;
            }
            if !self.msg_ok[l.edge_in] {
                return Err(CdnError::ScheduleViolation { from: l.nbr, to: ci });
            }
            self.terms.push((Term::Msg { link: k }, l.mask));
        }
        let nl = self.terms.len();
        self.reach.clear();
        self.reach.push(0);
        for t in 0..nl {
            let r = self.reach[t] | self.terms[t].1;
            self.reach.push(r);
        }
        let size = 1usize << s;
        while self.val.len() <= nl {
            self.val.push(Vec::new());
            self.stamp.push(Vec::new());
            self.need.push(Vec::new());
        }
        for l in 1..=nl {
            if self.val[l].len() < size {
                self.val[l].resize(size, V::zero());
                self.stamp[l].resize(size, 0);
            }
            self.need[l].clear();
        }
        self.next_gen();
        let gen = self.gen;
        let discrete = self.mode == Mode::Discrete;

        // backward sweep: mark what the targets depend on
        if nl > 0 {
            for &a in targets {
                if a & !self.reach[nl] == 0 && self.stamp[nl][a as usize] != gen {
                    self.stamp[nl][a as usize] = gen;
                    self.need[nl].push(a);
                }
            }
        }
        for l in (2..=nl).rev() {
            let (term, m) = self.terms[l - 1];
            let below = self.reach[l - 1];
            let mut k = 0;
            while k < self.need[l].len() {
                let a = self.need[l][k];
                k += 1;
                let x = a & m;
                let mut b = x;
                loop {
                    if self.term_nonzero(ci, term, b) {
                        let rest = a & !b;
                        let mut e = if discrete { b } else { 0 };
                        loop {
                            let c = rest | e;
                            if c & !below == 0 && self.stamp[l - 1][c as usize] != gen {
                                self.stamp[l - 1][c as usize] = gen;
                                self.need[l - 1].push(c);
                            }
                            if !discrete || e == 0 {
                                break;
                            }
                            e = (e - 1) & b;
                        }
                    }
                    if b == 0 {
                        break;
                    }
                    b = (b - 1) & x;
                }
            }
        }

        // forward sweep
        for l in 1..=nl {
            let (term, m) = self.terms[l - 1];
            let below = self.reach[l - 1];
            for k in 0..self.need[l].len() {
                let a = self.need[l][k];
                let x = a & m;
                let mut acc = V::zero();
                let mut b = x;
                loop {
                    if self.term_nonzero(ci, term, b) {
                        let t = self.term_value(ci, term, b);
                        if !t.is_zero() {
                            let rest = a & !b;
                            let mut e = if discrete { b } else { 0 };
                            loop {
                                let c = rest | e;
                                if c & !below == 0 {
                                    let prev = if l == 1 {
                                        if c == 0 {
                                            V::one()
                                        } else {
                                            V::zero()
                                        }
                                    } else if self.stamp[l - 1][c as usize] == gen {
                                        self.val[l - 1][c as usize]
                                    } else {
                                        V::zero()
                                    };
                                    if !prev.is_zero() {
                                        let p = t.mul(prev);
                                        acc = if discrete && e.count_ones() % 2 == 1 { acc.add(p.neg()) } else { acc.add(p) };
                                    }
                                }
                                if !discrete || e == 0 {
                                    break;
                                }
                                e = (e - 1) & b;
                            }
                        }
                    }
                    if b == 0 {
                        break;
                    }
                    b = (b - 1) & x;
                }
                self.val[l][a as usize] = acc;
            }
        }

        self.out.clear();
        for &a in targets {
            let v = if nl == 0 {
                if a == 0 {
                    V::one()
                } else {
                    V::zero()
                }
            } else if a & !self.reach[nl] == 0 && self.stamp[nl][a as usize] == gen {
                self.val[nl][a as usize]
            } else {
                V::zero()
            };
            self.out.push(v);
        }
        Ok(())
    }

    /// Computes the message from clique `i` to its neighbour `j`.
    pub fn compute_message(&mut self, i: usize, j: usize) -> Result<()> {
        let link = self.cliques[i]
            .links
            .iter()
            .position(|l| l.nbr == j)
            .ok_or(CdnError::ScheduleViolation { from: i, to: j })?;
        let (sep_mask, sep_pos, edge_out) = {
            let l = &self.cliques[i].links[link];
            (l.mask, l.sep_pos.clone(), l.edge_out)
        };
        let dm = self.dmask[i];
        let own = dm & !sep_mask;
        let free = sep_mask & dm;
        let mut targets = Vec::with_capacity(1 << free.count_ones());
        let mut a = free;
        loop {
            targets.push(own | a);
            if a == 0 {
                break;
            }
            a = (a - 1) & free;
        }
        self.eval_clique(i, Some(j), None, &targets)?;
        let table = &mut self.msgs[edge_out];
        table.fill(V::zero());
        for (t, &mask) in targets.iter().enumerate() {
            table[compact(mask, &sep_pos)] = self.out[t];
        }
        self.msg_ok[edge_out] = true;
        Ok(())
    }

    /// Message table i -> j, indexed by subsets of the sepset (ascending variable order).
    pub fn message(&self, i: usize, j: usize) -> Option<&[V]> {
        let l = self.cliques[i].links.iter().find(|l| l.nbr == j)?;
        self.msg_ok[l.edge_out].then(|| self.msgs[l.edge_out].as_slice())
    }

    /// Upward pass: every clique sends to its child, in topological order.
    pub fn pass_up(&mut self) -> Result<()> {
        for k in 0..self.tree.topo_order.len() {
            let i = self.tree.topo_order[k];
            if let Some(c) = self.tree.child[i] {
                self.compute_message(i, c)?;
            }
        }
        Ok(())
    }

    /// Downward pass; requires `pass_up` first.
    pub fn pass_down(&mut self) -> Result<()> {
        for k in (0..self.tree.topo_order.len()).rev() {
            let i = self.tree.topo_order[k];
            for p in self.tree.parents(i) {
                self.compute_message(i, p)?;
            }
        }
        Ok(())
    }

    pub fn calibrate(&mut self) -> Result<()> {
        self.pass_up()?;
        self.pass_down()
    }

    pub fn message_count(&self) -> usize {
        self.msg_ok.iter().filter(|&&x| x).count()
    }

    /// Full derivative of the product of the component containing clique
    /// `i`, evaluated at `i` using messages from every neighbour.
    pub fn root_value(&mut self, i: usize, replace: Option<usize>) -> Result<V> {
        let t = [self.dmask[i]];
        self.eval_clique(i, None, replace, &t)?;
        Ok(self.out[0])
    }

    /// Product over forest components of the root values.
    pub fn evaluate(&mut self) -> Result<V> {
        self.pass_up()?;
        let mut acc = V::one();
        for r in self.tree.roots() {
            let v = self.root_value(r, None)?;
            acc = acc.mul(v);
        }
        Ok(acc)
    }

    /// After `calibrate`: derivative of the whole product with factor `f`
    /// replaced by its parameter derivative, divided by the component value.
    /// Returns `None` for factors outside the tree.
    pub fn param_ratio(&mut self, f: usize) -> Result<Option<(V, V)>> {
        let Some(c) = self.tree.factor_clique.get(f).copied().flatten() else { return Ok(None) };
        let root = self.tree.root_of(c);
        let base = self.root_value(root, None)?;
        let num = self.root_value(c, Some(f))?;
        Ok(Some((num, base)))
    }

    /// Whether factor `f` is assigned to some clique of this engine.
    pub fn has_factor(&self, f: usize) -> bool {
        self.cache_of.get(f).copied().flatten().is_some()
    }
}

impl Engine<SignedLog> {
    /// Convenience: `evaluate` returning ln of a positive result.
    pub fn evaluate_ln(&mut self) -> Result<f64> {
        Ok(self.evaluate()?.ln())
    }
}
