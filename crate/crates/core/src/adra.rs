//! Ascending deferred-revelation auction for matroids.
//!
//! A virtual price climbs level by level. Bidders quit by revealing their
//! committed bid once its ironed virtual value falls below the price, and
//! bidders who stay active top up their deposits. After quits the ascending
//! clinching auction is simulated on what has been revealed; bidders it
//! promises keep their price for good. Once every active bidder is promised a
//! final level reveals everything and the promised set is allocated.
//!
//! The ledger operator's side (level advances, burns, promises, settlement) is
//! derived from bidder actions by one engine, shared by live runs and replay.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dra::{Fabrication, Honest};
use crate::error::{input, Error, Result};
use crate::ledger::{
    commitment, quantize, to_value, Amount, ConstraintSpec, Entry, Hash32, Ledger, Phase, ProtocolKind, MAX_VALUE,
};
use crate::matroid::{ElementId, ElementSet, Matroid};
use crate::mechanism::SealedOutcome;
use crate::montecarlo::{self, Estimate, Welford};
use crate::valuedist::{max_reserve, VirtualValueProfile};

/// `p -> max(factor * p, floor)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceRule {
    pub factor: f64,
    pub floor: f64,
}

impl Default for PriceRule {
    fn default() -> Self {
        PriceRule { factor: 2.0, floor: 1e-3 }
    }
}

impl PriceRule {
    pub fn new(factor: f64, floor: f64) -> Result<Self> {
        if !(factor > 1.0 && factor.is_finite()) {
            return input(format!("price factor must exceed 1, got {factor}"));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return input(format!("price floor must be positive, got {floor}"));
        }
        Ok(PriceRule { factor, floor })
    }

    pub fn next(&self, p: f64) -> f64 {
        (self.factor * p).max(self.floor)
    }
}

#[derive(Clone, Debug)]
pub struct AdraConfig {
    pub matroid: Matroid,
    pub profiles: Vec<VirtualValueProfile>,
    pub rule: PriceRule,
    pub max_levels: u32,
    /// Simulate every level and stop as soon as all active bidders are promised.
    pub modified: bool,
}

impl AdraConfig {
    pub fn new(matroid: Matroid, profiles: Vec<VirtualValueProfile>) -> Result<Self> {
        if matroid.ground_size() != profiles.len() {
            return input(format!("{} profiles for a ground set of {}", profiles.len(), matroid.ground_size()));
        }
        Ok(AdraConfig { matroid, profiles, rule: PriceRule::default(), max_levels: 200, modified: false })
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.profiles.iter().map(|p| p.sample(rng)).collect()
    }
}

pub fn virtual_price_to_posted(profile: &VirtualValueProfile, p: f64) -> f64 {
    profile.inverse_virtual_value(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Promise {
    pub virtual_price: f64,
    pub price: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mhat {
    /// In the order promises were made; simultaneous ones by ascending id.
    pub promised: Vec<(ElementId, Promise)>,
    pub competing: ElementSet,
}

fn clinch_sweep(
    m: &Matroid,
    profiles: &[VirtualValueProfile],
    comp: &mut ElementSet,
    prom: &mut ElementSet,
    out: &mut Vec<(ElementId, Promise)>,
    x: f64,
) {
    let s = comp.union(*prom);
    let rs = m.rank(s);
    for i in comp.iter() {
        if m.rank(s.without(i)) < rs {
            out.push((i, Promise { virtual_price: x, price: virtual_price_to_posted(&profiles[i], x) }));
            comp.remove(i);
            prom.insert(i);
        }
    }
}

/// Ascending clinching auction in ironed virtual value space, as the price
/// goes to `up_to` with step size going to zero. Revealed bidders drop at
/// their virtual value; `active` ones never drop. Bidders with non-positive
/// virtual value never compete.
pub fn simulate_mhat(
    m: &Matroid,
    profiles: &[VirtualValueProfile],
    revealed: &[(ElementId, f64)],
    active: ElementSet,
    up_to: f64,
) -> Result<Mhat> {
    let n = m.ground_size();
    if profiles.len() < n {
        return input(format!("{} profiles for a ground set of {n}", profiles.len()));
    }
    if !active.is_subset(ElementSet::full(n)) {
        return input(format!("active bidders {active:?} outside the ground set"));
    }
    let mut phi = vec![f64::NAN; n];
    let mut rev = ElementSet::EMPTY;
    for &(i, b) in revealed {
        if i >= n || rev.contains(i) || active.contains(i) {
            return input(format!("bidder {i} revealed twice, active, or outside the ground set"));
        }
        let x = profiles[i].ironed_virtual_value(b);
        if x >= up_to {
            return input(format!("revealed bidder {i} has virtual value {x} not below {up_to}"));
        }
        phi[i] = x;
        rev.insert(i);
    }
    let mut comp = active.union(rev.iter().filter(|&i| phi[i] > 0.0).collect());
    let mut prom = ElementSet::EMPTY;
    let mut out = Vec::new();
    clinch_sweep(m, profiles, &mut comp, &mut prom, &mut out, 0.0);

    let mut events: Vec<f64> = comp.iter().filter(|&i| rev.contains(i)).map(|i| phi[i]).collect();
    events.sort_by(f64::total_cmp);
    events.dedup();
    for x in events {
        let d: ElementSet = comp.iter().filter(|&i| rev.contains(i) && phi[i] == x).collect();
        if d.is_empty() {
            continue;
        }
        comp = comp.difference(d);
        let r = comp.union(prom);
        let base = m.rank(r);
        let mut saved = ElementSet::EMPTY;
        for j in d.iter() {
            if m.rank(r.union(saved).with(j)) == base + saved.len() + 1 {
                saved.insert(j);
            }
        }
        for j in saved.iter() {
            out.push((j, Promise { virtual_price: x, price: profiles[j].lower_inverse(x) }));
        }
        prom = prom.union(saved);
        clinch_sweep(m, profiles, &mut comp, &mut prom, &mut out, x);
    }
    Ok(Mhat { promised: out, competing: comp })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClockOutcome {
    pub allocation: ElementSet,
    /// `(bidder, price)` ascending id.
    pub prices: Vec<(ElementId, f64)>,
    pub steps: u64,
}

/// Ascending clock with step `eps` over `(bidder, value)` pairs. Bidders drop
/// once the price exceeds their value; a simultaneous drop re-admits the
/// lexicographically least feasible subset at the previous price.
pub fn run_clock_auction(m: &Matroid, values: &[(ElementId, f64)], eps: f64) -> Result<ClockOutcome> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input(format!("step must be positive, got {eps}"));
    }
    let n = m.ground_size();
    let mut val = vec![f64::NAN; n];
    let mut comp = ElementSet::EMPTY;
    for &(i, v) in values {
        if i >= n || !v.is_finite() {
            return input(format!("bad participant ({i}, {v})"));
        }
        val[i] = v;
        if v > 0.0 {
            comp.insert(i);
        }
    }
    let vmax = values.iter().map(|p| p.1).fold(0.0, f64::max);
    let guard = (vmax / eps).ceil() as u64 + 16;
    let mut prom = ElementSet::EMPTY;
    let mut price = vec![f64::NAN; n];
    let clinch = |comp: &mut ElementSet, prom: &mut ElementSet, price: &mut Vec<f64>, p: f64| {
        let s = comp.union(*prom);
        let rs = m.rank(s);
        for i in comp.iter() {
            if m.rank(s.without(i)) < rs {
                price[i] = p;
                comp.remove(i);
                prom.insert(i);
            }
        }
    };
    clinch(&mut comp, &mut prom, &mut price, 0.0);
    let mut k = 0u64;
    while !comp.is_empty() {
        k += 1;
        if k > guard {
            return Err(Error::Capacity(format!("clock did not settle within {guard} steps")));
        }
        let p = k as f64 * eps;
        let d: ElementSet = comp.iter().filter(|&i| val[i] < p).collect();
        if d.is_empty() {
            continue;
        }
        comp = comp.difference(d);
        let r = comp.union(prom);
        let base = m.rank(r);
        let mut saved = ElementSet::EMPTY;
        for j in d.iter() {
            if m.rank(r.union(saved).with(j)) == base + saved.len() + 1 {
                saved.insert(j);
                price[j] = (k - 1) as f64 * eps;
            }
        }
        prom = prom.union(saved);
        clinch(&mut comp, &mut prom, &mut price, p);
    }
    Ok(ClockOutcome { allocation: prom, prices: prom.iter().map(|i| (i, price[i])).collect(), steps: k })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BidderStatus {
    Active,
    Quit,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BidderState {
    pub status: BidderStatus,
    pub promise: Option<Promise>,
    pub deposit: Amount,
    pub bid: Option<f64>,
}

/// What the auctioneer sees at the start of a level.
pub struct LevelView<'a> {
    pub level: u32,
    pub price: f64,
    pub is_final: bool,
    pub fakes: ElementSet,
    pub active: ElementSet,
    pub promised: ElementSet,
    pub states: &'a [BidderState],
}

pub trait AdraStrategy {
    fn fabricate(&self, truth: &Matroid, profiles: &[VirtualValueProfile]) -> Result<Fabrication<Matroid>>;
    /// Fakes that stop acting (no reveal, no top-up) from this level on.
    fn aborts(&self, view: &LevelView<'_>) -> ElementSet;
}

impl AdraStrategy for Honest {
    fn fabricate(&self, truth: &Matroid, _: &[VirtualValueProfile]) -> Result<Fabrication<Matroid>> {
        Ok(Fabrication { fakes: Vec::new(), reported: truth.clone(), real_profiles: None })
    }
    fn aborts(&self, _: &LevelView<'_>) -> ElementSet {
        ElementSet::EMPTY
    }
}

/// Fixed fabrication; fake `k` aborts at level `abort_at[k]` if set.
#[derive(Clone, Debug)]
pub struct AbortSchedule {
    pub fabrication: Fabrication<Matroid>,
    pub abort_at: Vec<Option<u32>>,
}

impl AdraStrategy for AbortSchedule {
    fn fabricate(&self, _: &Matroid, _: &[VirtualValueProfile]) -> Result<Fabrication<Matroid>> {
        if self.abort_at.len() != self.fabrication.fakes.len() {
            return input("one abort level per fake");
        }
        Ok(self.fabrication.clone())
    }
    fn aborts(&self, view: &LevelView<'_>) -> ElementSet {
        let first = view.fakes.min().unwrap_or(0);
        view.fakes.iter().filter(|&j| self.abort_at[j - first].is_some_and(|a| view.level >= a)).collect()
    }
}

fn cap_quantize(x: f64) -> Amount {
    quantize(x.min(MAX_VALUE)).unwrap_or(0)
}

struct Engine {
    m: Matroid,
    profiles: Vec<VirtualValueProfile>,
    rule: PriceRule,
    modified: bool,
    digests: Vec<Hash32>,
    states: Vec<BidderState>,
    level: u32,
    price: f64,
    prev: f64,
    required: Amount,
    is_final: bool,
    next_final: bool,
    changed: bool,
    pending_burn: ElementSet,
    aborted_promised: ElementSet,
    promise_log: Vec<(u32, ElementId, Promise)>,
    outcome: Option<SealedOutcome>,
}

impl Engine {
    /// State right after `EndInit`.
    fn from_ledger(l: &Ledger) -> Result<Engine> {
        let Some(ProtocolKind::Adra { factor, floor, modified }) = l.protocol() else {
            return Err(Error::Protocol("ledger does not announce an ascending auction".into()));
        };
        if l.phase() != Phase::Open {
            return Err(Error::Protocol("initialization is incomplete".into()));
        }
        let rule = PriceRule::new(factor, floor)?;
        let m = match l.constraint() {
            Some(ConstraintSpec::Matroid(m)) => m.clone(),
            Some(_) => return Err(Error::Protocol("ascending auction needs a matroid constraint".into())),
            None => return Err(Error::Protocol("no constraint declared".into())),
        };
        let profiles = l.profiles().ok_or_else(|| Error::Protocol("no distributions declared".into()))?.to_vec();
        let commits = l.commitments();
        let n = commits.len();
        if commits.iter().enumerate().any(|(k, c)| c.0 != k) || profiles.len() != n || m.ground_size() != n {
            return Err(Error::Protocol("commitments, profiles and constraint disagree on the bidder set".into()));
        }
        let required = cap_quantize(max_reserve(&profiles));
        let mut states = vec![BidderState { status: BidderStatus::Active, promise: None, deposit: 0, bid: None }; n];
        for (b, a) in l.deposits() {
            states[b].deposit = a;
        }
        let mut pending_burn = ElementSet::EMPTY;
        for (i, s) in states.iter_mut().enumerate() {
            if s.deposit < required {
                s.status = BidderStatus::Aborted;
                pending_burn.insert(i);
            }
        }
        let mut e = Engine {
            m,
            profiles,
            rule,
            modified,
            digests: commits.into_iter().map(|c| c.1).collect(),
            states,
            level: 0,
            price: 0.0,
            prev: 0.0,
            required,
            is_final: false,
            next_final: false,
            changed: !pending_burn.is_empty(),
            pending_burn,
            aborted_promised: ElementSet::EMPTY,
            promise_log: Vec::new(),
            outcome: None,
        };
        e.next_final = e.active().is_empty();
        Ok(e)
    }

    fn with_status(&self, st: BidderStatus) -> ElementSet {
        self.states.iter().enumerate().filter(|(_, s)| s.status == st).map(|(i, _)| i).collect()
    }

    fn active(&self) -> ElementSet {
        self.with_status(BidderStatus::Active)
    }

    fn promised(&self) -> ElementSet {
        self.states.iter().enumerate().filter(|(_, s)| s.promise.is_some()).map(|(i, _)| i).collect()
    }

    fn quit_bids(&self) -> Vec<(ElementId, f64)> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.status == BidderStatus::Quit)
            .map(|(i, s)| (i, s.bid.expect("quit bidders have bids")))
            .collect()
    }

    fn done(&self) -> bool {
        self.outcome.is_some()
    }

    fn open_level(&mut self) -> Entry {
        self.level += 1;
        self.prev = self.price;
        self.price = self.rule.next(self.price);
        self.is_final = self.next_final;
        self.changed = !self.pending_burn.is_empty();
        if !self.is_final {
            let target = self.rule.next(self.rule.next(self.price));
            for i in self.active().iter() {
                self.required = self.required.max(cap_quantize(self.profiles[i].inverse_virtual_value(target)));
            }
        }
        Entry::LevelAdvance { level: self.level, price: self.price, is_final: self.is_final }
    }

    fn abort(&mut self, i: ElementId) {
        let s = &mut self.states[i];
        s.status = BidderStatus::Aborted;
        if s.promise.take().is_some() {
            self.aborted_promised.insert(i);
        }
        self.pending_burn.insert(i);
        self.changed = true;
    }

    fn on_action(&mut self, e: &Entry) -> Result<()> {
        match e {
            Entry::Reveal { bidder, amount, pad } => {
                let i = *bidder;
                if self.states.get(i).map(|s| s.status) != Some(BidderStatus::Active) {
                    return Err(Error::Protocol(format!("bidder {i} is not active")));
                }
                if commitment(i, *amount, pad) != self.digests[i] {
                    self.abort(i);
                    return Ok(());
                }
                let b = to_value(*amount);
                let x = self.profiles[i].ironed_virtual_value(b);
                let lo_ok = self.level == 1 || self.prev <= x;
                let hi_ok = self.is_final || x < self.price;
                if lo_ok && hi_ok {
                    let s = &mut self.states[i];
                    s.status = BidderStatus::Quit;
                    s.bid = Some(b);
                    self.changed = true;
                } else {
                    self.abort(i);
                }
                Ok(())
            }
            Entry::Deposit { bidder, amount } => {
                let i = *bidder;
                if self.states.get(i).map(|s| s.status) != Some(BidderStatus::Active) {
                    return Err(Error::Protocol(format!("bidder {i} is not active")));
                }
                self.states[i].deposit += amount;
                Ok(())
            }
            e => Err(Error::Protocol(format!("{e:?} is not a bidder action"))),
        }
    }

    fn close_level(&mut self) -> Result<Vec<Entry>> {
        let mut out = Vec::new();
        for i in self.active().iter() {
            if self.is_final || self.states[i].deposit < self.required {
                self.abort(i);
            }
        }
        if self.is_final {
            out.push(Entry::EndReveal);
        }
        for i in self.pending_burn.iter() {
            if self.states[i].deposit > 0 {
                out.push(Entry::Burn { bidder: i, amount: self.states[i].deposit });
            }
        }
        self.pending_burn = ElementSet::EMPTY;
        if self.is_final {
            self.settle(&mut out)?;
            return Ok(out);
        }
        if self.changed || self.modified {
            let sim = simulate_mhat(&self.m, &self.profiles, &self.quit_bids(), self.active(), self.price)?;
            for (i, p) in sim.promised {
                if self.states[i].promise.is_none() {
                    self.states[i].promise = Some(p);
                    self.promise_log.push((self.level, i, p));
                    out.push(Entry::Promise { bidder: i, virtual_price: p.virtual_price, price: p.price });
                }
            }
        }
        self.next_final = self.active().is_subset(self.promised());
        Ok(out)
    }

    fn settle(&mut self, out: &mut Vec<Entry>) -> Result<()> {
        let sim = simulate_mhat(&self.m, &self.profiles, &self.quit_bids(), ElementSet::EMPTY, f64::INFINITY)?;
        let mut alloc = ElementSet::EMPTY;
        for &(_, i, _) in &self.promise_log {
            if self.states[i].promise.is_some() {
                alloc.insert(i);
            }
        }
        if !self.m.is_independent(alloc) {
            return Err(Error::Protocol(format!("promised bidders {alloc:?} are not jointly feasible")));
        }
        for (i, p) in sim.promised {
            if self.states[i].promise.is_none() && self.m.is_independent(alloc.with(i)) {
                self.states[i].promise = Some(p);
                self.promise_log.push((self.level, i, p));
                alloc.insert(i);
            }
        }
        let payments: Vec<(ElementId, f64)> =
            alloc.iter().map(|i| (i, self.states[i].promise.expect("allocated bidders are promised").price)).collect();
        let virtual_surplus = alloc
            .iter()
            .map(|i| self.profiles[i].ironed_virtual_value(self.states[i].bid.expect("allocated bidders revealed")))
            .sum();
        out.push(Entry::Allocate { set: alloc });
        for &(bidder, amount) in &payments {
            out.push(Entry::Pay { bidder, amount });
        }
        self.outcome = Some(SealedOutcome { allocation: alloc, payments, virtual_surplus });
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdraResult {
    pub outcome: SealedOutcome,
    pub real: ElementSet,
    pub fakes: ElementSet,
    pub burned: f64,
    pub real_revenue: f64,
    /// Real payments minus burned collateral.
    pub auctioneer_net: f64,
    pub levels_used: u32,
    pub states: Vec<BidderState>,
    /// `(level, bidder, promise)` in the order promises were made.
    pub promise_log: Vec<(u32, ElementId, Promise)>,
    pub aborted_promised: ElementSet,
    #[serde(skip)]
    pub ledger: Ledger,
}

pub fn run_adra<S: AdraStrategy + ?Sized>(cfg: &AdraConfig, strategy: &S, values: &[f64], seed: u64) -> Result<AdraResult> {
    let n = values.len();
    if cfg.matroid.ground_size() != n || cfg.profiles.len() != n {
        return input(format!(
            "{n} values, {} profiles, ground set of {}",
            cfg.profiles.len(),
            cfg.matroid.ground_size()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = Ledger::new();
    l.append(Entry::Announce {
        protocol: ProtocolKind::Adra { factor: cfg.rule.factor, floor: cfg.rule.floor, modified: cfg.modified },
    })?;
    let mut secrets: Vec<(Amount, Hash32)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let a = quantize(v)?;
        let pad = Hash32::random(&mut rng);
        l.append(Entry::Commit { bidder: i, digest: commitment(i, a, &pad) })?;
        secrets.push((a, pad));
    }
    let fab = strategy.fabricate(&cfg.matroid, &cfg.profiles)?;
    let k = fab.fakes.len();
    if fab.reported.ground_size() != n + k {
        return input(format!("reported matroid has {} elements, expected {}", fab.reported.ground_size(), n + k));
    }
    let mut declared = match &fab.real_profiles {
        Some(p) if p.len() == n => p.clone(),
        Some(p) => return input(format!("{} declared real profiles for {n} bidders", p.len())),
        None => cfg.profiles.clone(),
    };
    for (j, fake) in fab.fakes.iter().enumerate() {
        let a = quantize(fake.amount)?;
        let pad = Hash32::random(&mut rng);
        l.append(Entry::Commit { bidder: n + j, digest: commitment(n + j, a, &pad) })?;
        secrets.push((a, pad));
        declared.push(fake.profile.clone());
    }
    let f0 = cap_quantize(max_reserve(&declared));
    for b in 0..n + k {
        l.append(Entry::Deposit { bidder: b, amount: f0 })?;
    }
    l.append(Entry::DeclareConstraint { constraint: ConstraintSpec::Matroid(fab.reported.clone()) })?;
    l.append(Entry::DeclareDistributions { profiles: declared.clone() })?;
    l.append(Entry::EndInit)?;

    let mut e = Engine::from_ledger(&l)?;
    let real = ElementSet::full(n);
    let fakes = ElementSet::full(n + k).difference(real);
    let mut gone = ElementSet::EMPTY;
    while !e.done() {
        if e.level >= cfg.max_levels {
            return Err(Error::Capacity(format!("no settlement within {} levels", cfg.max_levels)));
        }
        l.append(e.open_level())?;
        let view = LevelView {
            level: e.level,
            price: e.price,
            is_final: e.is_final,
            fakes,
            active: e.active(),
            promised: e.promised(),
            states: &e.states,
        };
        gone = gone.union(strategy.aborts(&view).intersection(fakes));
        for i in e.active().difference(gone).iter() {
            let (a, pad) = secrets[i];
            if e.is_final || declared[i].ironed_virtual_value(to_value(a)) < e.price {
                let r = Entry::Reveal { bidder: i, amount: a, pad };
                e.on_action(&r)?;
                l.append(r)?;
            }
        }
        if !e.is_final {
            for i in e.active().difference(gone).iter() {
                let need = e.required.saturating_sub(e.states[i].deposit);
                if need > 0 {
                    let d = Entry::Deposit { bidder: i, amount: need };
                    e.on_action(&d)?;
                    l.append(d)?;
                }
            }
        }
        for d in e.close_level()? {
            l.append(d)?;
        }
    }
    let outcome = e.outcome.clone().expect("settled");
    let won = outcome.allocation.intersection(real);
    if !cfg.matroid.is_independent(won) {
        return Err(Error::Protocol(format!("real winners {won:?} are infeasible under the true matroid")));
    }
    let burned = to_value(l.burned());
    let real_revenue = outcome.revenue_from(real);
    Ok(AdraResult {
        real,
        fakes,
        burned,
        real_revenue,
        auctioneer_net: real_revenue - burned,
        levels_used: e.level,
        states: e.states.clone(),
        promise_log: e.promise_log.clone(),
        aborted_promised: e.aborted_promised,
        outcome,
        ledger: l,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdraSettlement {
    pub outcome: SealedOutcome,
    pub levels: u32,
    pub burned: Amount,
}

fn is_action(e: &Entry) -> bool {
    matches!(e, Entry::Reveal { .. } | Entry::Deposit { .. })
}

/// Re-derives every operator entry from the recorded bidder actions and
/// checks the whole record against it.
pub fn replay_adra(l: &Ledger) -> Result<AdraSettlement> {
    let rec = l.entries();
    let init = rec
        .iter()
        .position(|e| matches!(e, Entry::EndInit))
        .ok_or_else(|| Error::Protocol("incomplete protocol: no end of initialization".into()))?;
    let mut regen = Ledger::new();
    for e in &rec[..=init] {
        regen.append(e.clone())?;
    }
    let mut e = Engine::from_ledger(&regen)?;
    let mut idx = init + 1;
    let mismatch = |k: usize| Error::Protocol(format!("recorded entry {k} differs from the derived protocol"));
    while !e.done() {
        if idx >= rec.len() {
            return Err(Error::Protocol("incomplete protocol: record ends before settlement".into()));
        }
        if e.level >= 10_000 {
            return Err(Error::Capacity("replay exceeded 10000 levels".into()));
        }
        let adv = e.open_level();
        if rec[idx] != adv {
            return Err(mismatch(idx));
        }
        regen.append(adv)?;
        idx += 1;
        while idx < rec.len() && is_action(&rec[idx]) {
            e.on_action(&rec[idx])?;
            regen.append(rec[idx].clone())?;
            idx += 1;
        }
        for d in e.close_level()? {
            match rec.get(idx) {
                Some(r) if *r == d => {}
                Some(_) => return Err(mismatch(idx)),
                None => return Err(Error::Protocol("incomplete protocol: record ends before settlement".into())),
            }
            regen.append(d)?;
            idx += 1;
        }
    }
    if idx != rec.len() {
        return Err(Error::Protocol(format!("{} entries after settlement", rec.len() - idx)));
    }
    Ok(AdraSettlement { outcome: e.outcome.expect("settled"), levels: e.level, burned: regen.burned() })
}

/// `ceil(log_factor(phi_max / floor)) + 2`, with ratios at most 1 counted as 1.
pub fn level_bound(rule: &PriceRule, phi_max: f64) -> u32 {
    let r = phi_max / rule.floor;
    if r <= 1.0 {
        return 2;
    }
    (r.ln() / rule.factor.ln()).ceil() as u32 + 2
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub levels: Estimate,
    pub max_levels: u32,
    /// Trials whose level count exceeded their bound.
    pub violations: u64,
    pub trials: u64,
}

/// Level counts of the honest auction on sampled values.
pub fn expected_levels(cfg: &AdraConfig, trials: u64, seed: u64, workers: usize) -> Result<LevelReport> {
    let (w, max, bad) = montecarlo::run_blocks(
        trials,
        workers,
        || (Welford::default(), 0u32, 0u64),
        |acc, t| {
            let mut rng = montecarlo::trial_rng(seed, t);
            let values = cfg.sample_values(&mut rng);
            let r = run_adra(cfg, &Honest, &values, rng.gen())?;
            let phi_max = r
                .states
                .iter()
                .zip(&cfg.profiles)
                .filter_map(|(s, p)| s.bid.map(|b| p.ironed_virtual_value(b)))
                .fold(f64::NEG_INFINITY, f64::max);
            acc.0.push(r.levels_used as f64);
            acc.1 = acc.1.max(r.levels_used);
            if r.levels_used > level_bound(&cfg.rule, phi_max) {
                acc.2 += 1;
            }
            Ok(())
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1 = a.1.max(b.1);
            a.2 += b.2;
        },
    )?;
    Ok(LevelReport { levels: w.estimate(), max_levels: max, violations: bad, trials })
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceRow {
    pub abort_at: Vec<Option<u32>>,
    pub net: f64,
    pub aborted_promised: ElementSet,
}

/// Auctioneer net for every combination of per-fake abort levels in
/// `1..=max_level` (or never).
pub fn abort_policies(
    cfg: &AdraConfig,
    fabrication: &Fabrication<Matroid>,
    values: &[f64],
    seed: u64,
    max_level: u32,
) -> Result<Vec<DominanceRow>> {
    let k = fabrication.fakes.len();
    let choices: Vec<Option<u32>> = std::iter::once(None).chain((1..=max_level).map(Some)).collect();
    let mut rows = Vec::new();
    for combo in itertools::Itertools::multi_cartesian_product((0..k).map(|_| choices.iter().copied())) {
        let s = AbortSchedule { fabrication: fabrication.clone(), abort_at: combo.clone() };
        let r = run_adra(cfg, &s, values, seed)?;
        rows.push(DominanceRow { abort_at: combo, net: r.auctioneer_net, aborted_promised: r.aborted_promised });
    }
    if k == 0 {
        let r = run_adra(cfg, &Honest, values, seed)?;
        rows.push(DominanceRow { abort_at: Vec::new(), net: r.auctioneer_net, aborted_promised: r.aborted_promised });
    }
    Ok(rows)
}

/// Rows that abort a promised fake yet earn more than the same policy with
/// that fake never aborting.
pub fn undominated_promised_aborts(rows: &[DominanceRow], n_real: usize) -> Vec<&DominanceRow> {
    rows.iter()
        .filter(|r| {
            if r.aborted_promised.is_empty() {
                return false;
            }
            let mut alt = r.abort_at.clone();
            for j in r.aborted_promised.iter() {
                alt[j - n_real] = None;
            }
            let other = rows.iter().find(|o| o.abort_at == alt).expect("full grid");
            r.net.partial_cmp(&other.net) == Some(Ordering::Greater)
        })
        .collect()
}
