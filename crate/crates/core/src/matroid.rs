//! Feasibility structures over small ground sets.
//!
//! Sets of elements are bitmasks ([`ElementSet`]), so ground sets hold at most
//! 64 elements. Explicit families are further limited to 16 elements because
//! their membership table has `2^n` entries.

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

pub type ElementId = usize;

pub const MAX_GROUND: usize = 64;
pub const MAX_EXPLICIT_GROUND: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ElementSet(u64);

impl ElementSet {
    pub const EMPTY: ElementSet = ElementSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ElementSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(i: ElementId) -> Self {
        ElementSet(1u64 << i)
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            ElementSet(u64::MAX)
        } else {
            ElementSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, i: ElementId) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: ElementId) {
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: ElementId) {
        self.0 &= !(1u64 << i);
    }

    pub fn with(self, i: ElementId) -> Self {
        ElementSet(self.0 | 1u64 << i)
    }

    pub fn without(self, i: ElementId) -> Self {
        ElementSet(self.0 & !(1u64 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: Self) -> Self {
        ElementSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        ElementSet(self.0 & o.0)
    }

    pub fn difference(self, o: Self) -> Self {
        ElementSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: Self) -> bool {
        self.0 & o.0 == 0
    }

    pub fn min(self) -> Option<ElementId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Elements in ascending order.
    pub fn iter(self) -> impl Iterator<Item = ElementId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<ElementId> {
        self.iter().collect()
    }

    /// Order on the ascending id sequences; a proper prefix sorts first.
    pub fn lex_cmp(self, o: Self) -> Ordering {
        self.iter().cmp(o.iter())
    }
}

impl FromIterator<ElementId> for ElementSet {
    fn from_iter<I: IntoIterator<Item = ElementId>>(it: I) -> Self {
        let mut s = ElementSet::EMPTY;
        for i in it {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ElementSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<ElementId>::deserialize(d)?;
        if let Some(bad) = v.iter().find(|&&i| i >= MAX_GROUND) {
            return Err(serde::de::Error::custom(format!("element {bad} out of range")));
        }
        Ok(v.into_iter().collect())
    }
}

/// Anything that can pick a maximum-weight feasible set.
///
/// Only strictly positive weights are ever selected. Among optimal sets the
/// one with the lexicographically smallest ascending id sequence wins.
pub trait Feasibility {
    fn ground_size(&self) -> usize;
    fn is_feasible(&self, s: ElementSet) -> bool;
    fn max_weight_set(&self, weights: &[f64], eligible: ElementSet) -> ElementSet;
    /// Best feasible set that contains `i`, or `None` if `{i}` is infeasible.
    fn max_weight_set_containing(
        &self,
        weights: &[f64],
        eligible: ElementSet,
        i: ElementId,
    ) -> Option<ElementSet>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub elements: Vec<ElementId>,
    pub capacity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatroidSpec {
    Uniform { rank: usize, ground: usize },
    Partition { blocks: Vec<Block> },
    Graphic { vertices: usize, edges: Vec<(usize, usize)> },
    Explicit { ground: usize, bases: Vec<Vec<ElementId>> },
}

#[derive(Clone, Debug)]
enum Repr {
    Uniform(usize),
    Partition { masks: Vec<ElementSet>, caps: Vec<usize> },
    Graphic { vertices: usize, edges: Vec<(usize, usize)> },
    Explicit(Vec<ElementSet>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MatroidSpec", into = "MatroidSpec")]
pub struct Matroid {
    spec: MatroidSpec,
    ground: usize,
    repr: Repr,
}

impl PartialEq for Matroid {
    fn eq(&self, o: &Self) -> bool {
        self.spec == o.spec
    }
}

impl TryFrom<MatroidSpec> for Matroid {
    type Error = Error;
    fn try_from(spec: MatroidSpec) -> Result<Self> {
        Matroid::from_spec(spec)
    }
}

impl From<Matroid> for MatroidSpec {
    fn from(m: Matroid) -> Self {
        m.spec
    }
}

fn check_ground(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::Capacity(format!("ground set of {n} elements exceeds {limit}")))
    } else {
        Ok(())
    }
}

impl Matroid {
    pub fn uniform(rank: usize, ground: usize) -> Result<Self> {
        Self::from_spec(MatroidSpec::Uniform { rank, ground })
    }

    /// `blocks` is a list of `(elements, capacity)` that must partition `0..n`.
    pub fn partition(blocks: Vec<(Vec<ElementId>, usize)>) -> Result<Self> {
        let blocks = blocks
            .into_iter()
            .map(|(elements, capacity)| Block { elements, capacity })
            .collect();
        Self::from_spec(MatroidSpec::Partition { blocks })
    }

    /// Element `e` is edge `edges[e]`.
    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::from_spec(MatroidSpec::Graphic { vertices, edges })
    }

    pub fn explicit(ground: usize, bases: Vec<Vec<ElementId>>) -> Result<Self> {
        Self::from_spec(MatroidSpec::Explicit { ground, bases })
    }

    /// Complete graph on `v` vertices, edges listed in `(0,1), (0,2), ..` order.
    pub fn complete_graph(v: usize) -> Result<Self> {
        let edges = (0..v).tuple_combinations().collect();
        Self::graphic(v, edges)
    }

    pub fn from_spec(spec: MatroidSpec) -> Result<Self> {
        let (ground, repr) = match &spec {
            MatroidSpec::Uniform { rank, ground } => {
                check_ground(*ground, MAX_GROUND)?;
                (*ground, Repr::Uniform((*rank).min(*ground)))
            }
            MatroidSpec::Partition { blocks } => {
                let ground: usize = blocks.iter().map(|b| b.elements.len()).sum();
                check_ground(ground, MAX_GROUND)?;
                let mut seen = ElementSet::EMPTY;
                let mut masks = Vec::with_capacity(blocks.len());
                for b in blocks {
                    let mut m = ElementSet::EMPTY;
                    for &e in &b.elements {
                        if e >= ground || seen.contains(e) {
                            return Err(Error::Structure(format!(
                                "partition blocks must cover 0..{ground} exactly once (element {e})"
                            )));
                        }
                        seen.insert(e);
                        m.insert(e);
                    }
                    masks.push(m);
                }
                let caps = blocks.iter().map(|b| b.capacity).collect();
                (ground, Repr::Partition { masks, caps })
            }
            MatroidSpec::Graphic { vertices, edges } => {
                check_ground(edges.len(), MAX_GROUND)?;
                if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= *vertices || v >= *vertices) {
                    return input(format!("edge ({u},{v}) references a missing vertex"));
                }
                (edges.len(), Repr::Graphic { vertices: *vertices, edges: edges.clone() })
            }
            MatroidSpec::Explicit { ground, bases } => {
                check_ground(*ground, MAX_EXPLICIT_GROUND)?;
                let mut sets: Vec<ElementSet> = Vec::new();
                for b in bases {
                    if let Some(e) = b.iter().find(|&&e| e >= *ground) {
                        return input(format!("basis element {e} outside ground set"));
                    }
                    let s: ElementSet = b.iter().copied().collect();
                    if !sets.contains(&s) {
                        sets.push(s);
                    }
                }
                if sets.is_empty() {
                    sets.push(ElementSet::EMPTY);
                }
                let fam = DownwardClosedFamily::from_maximal_sets(*ground, &sets)?;
                if fam.maximal_sets() != {
                    let mut s = sets.clone();
                    s.sort_by_key(|x| x.bits());
                    s
                } {
                    return Err(Error::Structure("listed bases are not an antichain".into()));
                }
                if let Err(v) = check_matroid_axioms(&fam) {
                    return Err(Error::Structure(format!(
                        "bases violate augmentation: {:?} cannot grow from {:?}",
                        v.small, v.large
                    )));
                }
                (*ground, Repr::Explicit(sets))
            }
        };
        Ok(Matroid { spec, ground, repr })
    }

    pub fn spec(&self) -> &MatroidSpec {
        &self.spec
    }

    pub fn ground_size(&self) -> usize {
        self.ground
    }

    pub fn ground(&self) -> ElementSet {
        ElementSet::full(self.ground)
    }

    pub fn rank(&self, s: ElementSet) -> usize {
        let s = s.intersection(self.ground());
        match &self.repr {
            Repr::Uniform(k) => s.len().min(*k),
            Repr::Partition { masks, caps } => masks
                .iter()
                .zip(caps)
                .map(|(m, c)| m.intersection(s).len().min(*c))
                .sum(),
            Repr::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(*vertices);
                s.iter().filter(|&e| uf.union(edges[e].0, edges[e].1)).count()
            }
            Repr::Explicit(bases) => bases.iter().map(|b| b.intersection(s).len()).max().unwrap_or(0),
        }
    }

    pub fn is_independent(&self, s: ElementSet) -> bool {
        if !s.is_subset(self.ground()) {
            return false;
        }
        match &self.repr {
            Repr::Uniform(k) => s.len() <= *k,
            Repr::Partition { masks, caps } => {
                masks.iter().zip(caps).all(|(m, c)| m.intersection(s).len() <= *c)
            }
            Repr::Explicit(bases) => bases.iter().any(|b| s.is_subset(*b)),
            Repr::Graphic { .. } => self.rank(s) == s.len(),
        }
    }

    /// Greedy selection: positive weights only, descending weight, ascending id on ties.
    pub fn max_weight_basis(&self, weights: &[f64]) -> Result<ElementSet> {
        if weights.len() != self.ground {
            return input(format!(
                "weight vector has {} entries, ground set has {}",
                weights.len(),
                self.ground
            ));
        }
        if weights.iter().any(|w| w.is_nan()) {
            return input("NaN weight");
        }
        Ok(self.greedy(weights, self.ground(), ElementSet::EMPTY))
    }

    fn greedy(&self, weights: &[f64], eligible: ElementSet, start: ElementSet) -> ElementSet {
        let mut order: Vec<ElementId> = eligible
            .difference(start)
            .iter()
            .filter(|&e| weights[e] > 0.0)
            .collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        let mut chosen = start;
        for e in order {
            let c = chosen.with(e);
            if self.is_independent(c) {
                chosen = c;
            }
        }
        chosen
    }

    /// `i` is in every basis of `s` (requires `i` in `s`).
    pub fn clinches(&self, s: ElementSet, i: ElementId) -> bool {
        s.contains(i) && self.rank(s) == self.rank(s.without(i)) + 1
    }

    /// Adds a new element (id = old ground size) parallel to `j`.
    pub fn parallel_extension(&self, j: ElementId) -> Result<Matroid> {
        if j >= self.ground {
            return input(format!("element {j} outside ground set"));
        }
        let x = self.ground;
        let spec = match &self.spec {
            MatroidSpec::Uniform { rank, ground } if *rank <= 1 => {
                MatroidSpec::Uniform { rank: *rank, ground: ground + 1 }
            }
            MatroidSpec::Partition { blocks } => {
                let mut blocks = blocks.clone();
                for b in &mut blocks {
                    if b.elements.contains(&j) {
                        b.elements.push(x);
                    }
                }
                MatroidSpec::Partition { blocks }
            }
            MatroidSpec::Graphic { vertices, edges } => {
                let mut edges = edges.clone();
                edges.push(edges[j]);
                MatroidSpec::Graphic { vertices: *vertices, edges }
            }
            _ => {
                check_ground(x + 1, MAX_EXPLICIT_GROUND)?;
                let mut bases = Vec::new();
                for b in self.bases() {
                    bases.push(b.to_vec());
                    if b.contains(j) {
                        bases.push(b.without(j).with(x).to_vec());
                    }
                }
                MatroidSpec::Explicit { ground: x + 1, bases }
            }
        };
        Matroid::from_spec(spec)
    }

    /// Independent sets as an explicit family (needs a ground set of at most 16).
    pub fn to_family(&self) -> Result<DownwardClosedFamily> {
        DownwardClosedFamily::from_maximal_sets(self.ground, &self.bases())
    }

    /// All bases, by brute force for the implicit kinds.
    pub fn bases(&self) -> Vec<ElementSet> {
        if let Repr::Explicit(b) = &self.repr {
            return b.clone();
        }
        let r = self.rank(self.ground());
        (0..self.ground)
            .combinations(r)
            .map(|c| c.into_iter().collect::<ElementSet>())
            .filter(|&s| self.is_independent(s))
            .collect()
    }
}

impl Feasibility for Matroid {
    fn ground_size(&self) -> usize {
        self.ground
    }

    fn is_feasible(&self, s: ElementSet) -> bool {
        self.is_independent(s)
    }

    fn max_weight_set(&self, weights: &[f64], eligible: ElementSet) -> ElementSet {
        self.greedy(weights, eligible, ElementSet::EMPTY)
    }

    fn max_weight_set_containing(
        &self,
        weights: &[f64],
        eligible: ElementSet,
        i: ElementId,
    ) -> Option<ElementSet> {
        let s = ElementSet::singleton(i);
        self.is_independent(s).then(|| self.greedy(weights, eligible, s))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Symmetric exchange: finds `A` in `w_hat` with `|A| = |d|` such that both
/// `(w \ d) + A` and `(w_hat \ A) + d` are independent and keep their sizes.
/// Candidates are tried in lexicographic order.
pub fn basis_exchange_witness(
    m: &Matroid,
    w: ElementSet,
    w_hat: ElementSet,
    d: ElementSet,
) -> Result<ElementSet> {
    if !m.is_independent(w) || !m.is_independent(w_hat) {
        return input("both sets must be independent");
    }
    if w.len() != w_hat.len() {
        return input("sets must have equal size");
    }
    if !d.is_subset(w) {
        return input("d must be a subset of w");
    }
    let keep = w.difference(d);
    for a in w_hat.to_vec().into_iter().combinations(d.len()) {
        let a: ElementSet = a.into_iter().collect();
        let x = keep.union(a);
        let y = w_hat.difference(a).union(d);
        if x.len() == w.len() && y.len() == w.len() && m.is_independent(x) && m.is_independent(y) {
            return Ok(a);
        }
    }
    Err(Error::Structure(format!("no exchange for {d:?} between {w:?} and {w_hat:?}")))
}

/// Lowest `e` in `large \ small` with `small + e` independent.
pub fn augment_one(m: &Matroid, small: ElementSet, large: ElementSet) -> Option<ElementId> {
    large.difference(small).iter().find(|&e| m.is_independent(small.with(e)))
}

/// `D` in `w_hat \ w` with `w + D` independent and `|w + D| = |w_hat|`,
/// grown one lowest-id element at a time.
pub fn augment(m: &Matroid, w: ElementSet, w_hat: ElementSet) -> Result<ElementSet> {
    if !m.is_independent(w) || !m.is_independent(w_hat) {
        return input("both sets must be independent");
    }
    if w.len() >= w_hat.len() {
        return input("w must be smaller than w_hat");
    }
    let mut cur = w;
    while cur.len() < w_hat.len() {
        let e = augment_one(m, cur, w_hat)
            .ok_or_else(|| Error::Structure(format!("{cur:?} cannot be augmented from {w_hat:?}")))?;
        cur.insert(e);
    }
    Ok(cur.difference(w))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub ground: usize,
    pub maximal_sets: Vec<ElementSet>,
}

/// A downward-closed set family stored as a membership table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FamilySpec", into = "FamilySpec")]
pub struct DownwardClosedFamily {
    ground: usize,
    table: Vec<u64>,
}

impl TryFrom<FamilySpec> for DownwardClosedFamily {
    type Error = Error;
    fn try_from(s: FamilySpec) -> Result<Self> {
        DownwardClosedFamily::from_maximal_sets(s.ground, &s.maximal_sets)
    }
}

impl From<DownwardClosedFamily> for FamilySpec {
    fn from(f: DownwardClosedFamily) -> Self {
        FamilySpec { ground: f.ground, maximal_sets: f.maximal_sets() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxiomViolation {
    pub small: ElementSet,
    pub large: ElementSet,
}

impl DownwardClosedFamily {
    pub fn from_maximal_sets(ground: usize, sets: &[ElementSet]) -> Result<Self> {
        check_ground(ground, MAX_EXPLICIT_GROUND)?;
        let mut fam = DownwardClosedFamily { ground, table: vec![0; (1usize << ground).div_ceil(64)] };
        for &s in sets {
            if !s.is_subset(ElementSet::full(ground)) {
                return input(format!("{s:?} outside ground set of {ground}"));
            }
            let mut sub = s.bits();
            loop {
                fam.set(sub);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & s.bits();
            }
        }
        fam.set(0);
        Ok(fam)
    }

    pub fn from_lists(ground: usize, sets: &[&[ElementId]]) -> Result<Self> {
        let sets: Vec<ElementSet> = sets.iter().map(|s| s.iter().copied().collect()).collect();
        Self::from_maximal_sets(ground, &sets)
    }

    /// Table word for ground sets of at most 6 elements.
    pub fn from_word(ground: usize, word: u64) -> Result<Self> {
        if ground > 6 {
            return Err(Error::Capacity("single-word families hold at most 6 elements".into()));
        }
        let fam = DownwardClosedFamily { ground, table: vec![word] };
        for s in fam.members() {
            if s.iter().any(|e| !fam.contains(s.without(e))) {
                return Err(Error::Structure(format!("{s:?} is present but a subset is not")));
            }
        }
        if word & 1 == 0 {
            return Err(Error::Structure("empty set missing".into()));
        }
        Ok(fam)
    }

    fn set(&mut self, mask: u64) {
        self.table[(mask / 64) as usize] |= 1u64 << (mask % 64);
    }

    pub fn ground_size(&self) -> usize {
        self.ground
    }

    pub fn contains(&self, s: ElementSet) -> bool {
        let b = s.bits();
        if b >> self.ground != 0 {
            return false;
        }
        self.table[(b / 64) as usize] >> (b % 64) & 1 == 1
    }

    pub fn members(&self) -> impl Iterator<Item = ElementSet> + '_ {
        (0..1u64 << self.ground).map(ElementSet::from_bits).filter(|&s| self.contains(s))
    }

    pub fn maximal_sets(&self) -> Vec<ElementSet> {
        let full = ElementSet::full(self.ground);
        self.members()
            .filter(|s| full.difference(*s).iter().all(|e| !self.contains(s.with(e))))
            .collect()
    }

    fn best_subset(&self, weights: &[f64], candidates: ElementSet, forced: ElementSet) -> Option<ElementSet> {
        let mut best: Option<(f64, ElementSet)> = None;
        let c = candidates.bits();
        let mut sub = c;
        loop {
            let s = ElementSet::from_bits(sub).union(forced);
            if self.contains(s) {
                let w: f64 = ElementSet::from_bits(sub).iter().map(|e| weights[e]).sum();
                let better = match best {
                    None => true,
                    Some((bw, bs)) => w > bw || (w == bw && s.lex_cmp(bs) == Ordering::Less),
                };
                if better {
                    best = Some((w, s));
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & c;
        }
        best.map(|b| b.1)
    }
}

impl Feasibility for DownwardClosedFamily {
    fn ground_size(&self) -> usize {
        self.ground
    }

    fn is_feasible(&self, s: ElementSet) -> bool {
        self.contains(s)
    }

    fn max_weight_set(&self, weights: &[f64], eligible: ElementSet) -> ElementSet {
        let cand: ElementSet = eligible.iter().filter(|&e| weights[e] > 0.0).collect();
        self.best_subset(weights, cand, ElementSet::EMPTY).unwrap_or_default()
    }

    fn max_weight_set_containing(
        &self,
        weights: &[f64],
        eligible: ElementSet,
        i: ElementId,
    ) -> Option<ElementSet> {
        if !self.contains(ElementSet::singleton(i)) {
            return None;
        }
        let cand: ElementSet = eligible.without(i).iter().filter(|&e| weights[e] > 0.0).collect();
        self.best_subset(weights, cand, ElementSet::singleton(i))
    }
}

/// Checks augmentation for every pair of members whose sizes differ by one.
pub fn check_matroid_axioms(fam: &DownwardClosedFamily) -> std::result::Result<(), AxiomViolation> {
    let mut by_size: Vec<Vec<ElementSet>> = vec![Vec::new(); fam.ground + 2];
    for s in fam.members() {
        by_size[s.len()].push(s);
    }
    let full = ElementSet::full(fam.ground);
    for k in 0..fam.ground {
        for &w in &by_size[k] {
            let ext: ElementSet = full.difference(w).iter().filter(|&e| fam.contains(w.with(e))).collect();
            for &wh in &by_size[k + 1] {
                if wh.difference(w).is_disjoint(ext) {
                    return Err(AxiomViolation { small: w, large: wh });
                }
            }
        }
    }
    Ok(())
}

/// Returns `(x_hat, y)`: disjoint members with `|x_hat| = |y| + 1`, `|y| >= 1`,
/// where `x_hat` is the only maximum-size member inside `x_hat ∪ y`.
///
/// Search order: `|y|` ascending, then `x_hat` by bitmask, then `y` by bitmask.
pub fn non_matroid_witness(fam: &DownwardClosedFamily) -> Result<(ElementSet, ElementSet)> {
    let n = fam.ground;
    if n > 16 {
        return Err(Error::Capacity(format!("witness search is capped at 16 elements, got {n}")));
    }
    if check_matroid_axioms(fam).is_ok() {
        return input("family satisfies the matroid axioms");
    }
    let members: Vec<ElementSet> = fam.members().collect();
    for ysize in 1..n {
        for &x_hat in members.iter().filter(|s| s.len() == ysize + 1) {
            for &y in members.iter().filter(|s| s.len() == ysize) {
                if !x_hat.is_disjoint(y) {
                    continue;
                }
                if unique_max_inside(fam, x_hat, x_hat.union(y)) {
                    return Ok((x_hat, y));
                }
            }
        }
    }
    Err(Error::Structure("non-matroid family without an exchange witness".into()))
}

fn unique_max_inside(fam: &DownwardClosedFamily, x_hat: ElementSet, u: ElementSet) -> bool {
    let k = x_hat.len();
    let ub = u.bits();
    let mut sub = ub;
    loop {
        let s = ElementSet::from_bits(sub);
        if s.len() >= k && s != x_hat && fam.contains(s) {
            return false;
        }
        if sub == 0 {
            return true;
        }
        sub = (sub - 1) & ub;
    }
}
