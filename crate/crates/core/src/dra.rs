//! Deferred-revelation auction over a public ledger.
//!
//! Real bidders commit to their values, the auctioneer may add committed
//! fake bids and declares the constraint and distributions, every committer
//! deposits collateral, and after the reveal phase the sealed-bid optimal
//! auction runs on the valid reveals. Concealed commitments lose their deposit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::ledger::{commitment, quantize, to_value, Amount, ConstraintSpec, Entry, Hash32, Ledger, ProtocolKind};
use crate::matroid::{DownwardClosedFamily, ElementId, ElementSet, Feasibility, Matroid, MatroidSpec};
use crate::mechanism::{run_sealed, Bid, SealedOutcome};
use crate::montecarlo::{self, Estimate};
use crate::valuedist::{max_reserve, VirtualValueProfile};

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CollateralRule {
    Fixed { f: f64 },
    /// Largest real reserve, or the given public upper bound.
    MaxReserve { upper_bound: Option<f64> },
    /// Enough for α-strongly-regular bidders, sized by the commitment count.
    AlphaRegular { alpha: f64 },
}

#[derive(Clone, Debug)]
pub struct DraConfig {
    pub matroid: Matroid,
    /// Bidder `i` draws from `profiles[i]`.
    pub profiles: Vec<VirtualValueProfile>,
    pub collateral: CollateralRule,
}

impl DraConfig {
    pub fn new(matroid: Matroid, profiles: Vec<VirtualValueProfile>, collateral: CollateralRule) -> Result<Self> {
        if matroid.ground_size() != profiles.len() {
            return input(format!("{} profiles for a ground set of {}", profiles.len(), matroid.ground_size()));
        }
        Ok(DraConfig { matroid, profiles, collateral })
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.profiles.iter().map(|p| p.sample(rng)).collect()
    }
}

impl From<Matroid> for ConstraintSpec {
    fn from(m: Matroid) -> Self {
        ConstraintSpec::Matroid(m)
    }
}

impl From<DownwardClosedFamily> for ConstraintSpec {
    fn from(f: DownwardClosedFamily) -> Self {
        ConstraintSpec::Family(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FakeBid {
    pub amount: f64,
    pub profile: VirtualValueProfile,
}

#[derive(Clone, Debug)]
pub struct Fabrication<C> {
    /// Fake `k` gets id `n + k`.
    pub fakes: Vec<FakeBid>,
    /// Must have ground size `n + fakes.len()`.
    pub reported: C,
    /// Declared real profiles; `None` means the true ones.
    pub real_profiles: Option<Vec<VirtualValueProfile>>,
}

/// What the auctioneer sees when choosing which fakes to conceal.
pub struct RevealView<'a, C> {
    pub real_bids: &'a [Bid],
    pub fake_ids: ElementSet,
    pub fakes: &'a [FakeBid],
    pub reported: &'a C,
    /// Declared profiles, indexed by bidder id.
    pub profiles: &'a [VirtualValueProfile],
    pub collateral: f64,
}

impl<C: Feasibility> RevealView<'_, C> {
    /// Revenue from real bidders if exactly the fakes in `concealed` are withheld.
    pub fn real_revenue_if(&self, concealed: ElementSet) -> Result<f64> {
        let n = self.real_bids.len();
        let mut bids = self.real_bids.to_vec();
        for (k, f) in self.fakes.iter().enumerate() {
            if !concealed.contains(n + k) {
                bids.push(Bid { bidder: n + k, amount: quantized(f.amount)?, profile: n + k });
            }
        }
        let o = run_sealed(self.reported, &bids, self.profiles)?;
        Ok(o.revenue_from(ElementSet::full(n)))
    }
}

/// An auctioneer policy: what to fabricate, and what to conceal at reveal time.
pub trait AuctioneerStrategy<T: ?Sized> {
    type Reported: Feasibility + Clone + Into<ConstraintSpec>;
    fn fabricate(&self, truth: &T, profiles: &[VirtualValueProfile]) -> Result<Fabrication<Self::Reported>>;
    fn conceal(&self, view: &RevealView<'_, Self::Reported>) -> Result<ElementSet>;
}

/// Reports the truth and never fakes.
#[derive(Clone, Copy, Debug, Default)]
pub struct Honest;

impl<T: Feasibility + Clone + Into<ConstraintSpec>> AuctioneerStrategy<T> for Honest {
    type Reported = T;
    fn fabricate(&self, truth: &T, _: &[VirtualValueProfile]) -> Result<Fabrication<T>> {
        Ok(Fabrication { fakes: Vec::new(), reported: truth.clone(), real_profiles: None })
    }
    fn conceal(&self, _: &RevealView<'_, T>) -> Result<ElementSet> {
        Ok(ElementSet::EMPTY)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DraResult {
    pub outcome: SealedOutcome,
    pub real: ElementSet,
    pub fakes: ElementSet,
    pub concealed: ElementSet,
    pub collateral: f64,
    pub burned: f64,
    pub real_revenue: f64,
    /// Real payments minus burned collateral.
    pub auctioneer_net: f64,
    /// Value minus payment for each real bidder (zero when not allocated).
    pub bidder_utilities: Vec<f64>,
    #[serde(skip)]
    pub ledger: Ledger,
}

/// Outcome recomputed from ledger entries alone.
#[derive(Clone, Debug, PartialEq)]
pub struct DraSettlement {
    pub outcome: SealedOutcome,
    pub burned: Vec<(ElementId, Amount)>,
    pub invalid: ElementSet,
}

fn quantized(x: f64) -> Result<f64> {
    Ok(to_value(quantize(x)?))
}

/// Verifies reveals, decides burns and runs the sealed auction. Reads the
/// ledger up to `EndReveal` and ignores any settlement entries already there.
pub fn settle(l: &Ledger) -> Result<DraSettlement> {
    let constraint = l.constraint().ok_or_else(|| Error::Protocol("no constraint declared".into()))?;
    let profiles = l.profiles().ok_or_else(|| Error::Protocol("no distributions declared".into()))?;
    let commits = l.commitments();
    let mut bids = Vec::new();
    let mut valid = ElementSet::EMPTY;
    let mut invalid = ElementSet::EMPTY;
    for e in l.entries() {
        if let Entry::Reveal { bidder, amount, pad } = e {
            let ok = commits.iter().any(|(b, d)| b == bidder && *d == commitment(*bidder, *amount, pad));
            if ok {
                valid.insert(*bidder);
                bids.push(Bid { bidder: *bidder, amount: to_value(*amount), profile: *bidder });
            } else {
                invalid.insert(*bidder);
            }
        }
        if matches!(e, Entry::EndReveal) {
            break;
        }
    }
    if let Some((b, _)) = commits.iter().find(|(b, _)| *b >= profiles.len()) {
        return Err(Error::Protocol(format!("bidder {b} has no declared distribution")));
    }
    let mut burned: Vec<(ElementId, Amount)> =
        l.deposits().into_iter().filter(|&(b, a)| !valid.contains(b) && a > 0).collect();
    burned.sort();
    let outcome = run_sealed(constraint.as_feasibility(), &bids, profiles)?;
    Ok(DraSettlement { outcome, burned, invalid })
}

fn append_settlement(l: &mut Ledger, s: &DraSettlement) -> Result<()> {
    for &(bidder, amount) in &s.burned {
        l.append(Entry::Burn { bidder, amount })?;
    }
    l.append(Entry::Allocate { set: s.outcome.allocation })?;
    for &(bidder, amount) in &s.outcome.payments {
        l.append(Entry::Pay { bidder, amount })?;
    }
    Ok(())
}

/// Largest monopoly reserve.
pub fn collateral_mhr(profiles: &[VirtualValueProfile]) -> Result<f64> {
    if profiles.is_empty() {
        return input("need at least one profile");
    }
    Ok(max_reserve(profiles))
}

/// Collateral per commitment for the given rule.
pub fn collateral_for(rule: &CollateralRule, real_profiles: &[VirtualValueProfile], commitments: usize) -> Result<f64> {
    match rule {
        CollateralRule::Fixed { f } => {
            if !(f.is_finite() && *f >= 0.0) {
                return input(format!("collateral {f} must be finite and non-negative"));
            }
            Ok(*f)
        }
        CollateralRule::MaxReserve { upper_bound } => Ok(upper_bound.unwrap_or_else(|| max_reserve(real_profiles))),
        CollateralRule::AlphaRegular { alpha } => collateral_alpha(real_profiles, *alpha, commitments),
    }
}

pub(crate) fn run_protocol<T, S>(
    truth: &T,
    real_profiles: &[VirtualValueProfile],
    rule: &CollateralRule,
    strategy: &S,
    values: &[f64],
    seed: u64,
) -> Result<DraResult>
where
    T: Feasibility + ?Sized,
    S: AuctioneerStrategy<T>,
{
    let n = values.len();
    if truth.ground_size() != n || real_profiles.len() != n {
        return input(format!(
            "{n} values, {} profiles, ground set of {}",
            real_profiles.len(),
            truth.ground_size()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = Ledger::new();
    l.append(Entry::Announce { protocol: ProtocolKind::Dra })?;

    let mut real_bids = Vec::with_capacity(n);
    let mut pads = Vec::with_capacity(n);
    for (i, &v) in values.iter().enumerate() {
        let a = quantize(v)?;
        let pad = Hash32::random(&mut rng);
        l.append(Entry::Commit { bidder: i, digest: commitment(i, a, &pad) })?;
        real_bids.push(Bid { bidder: i, amount: to_value(a), profile: i });
        pads.push((a, pad));
    }

    let fab = strategy.fabricate(truth, real_profiles)?;
    let k = fab.fakes.len();
    if fab.reported.ground_size() != n + k {
        return input(format!("reported constraint has {} elements, expected {}", fab.reported.ground_size(), n + k));
    }
    let mut declared: Vec<VirtualValueProfile> = match &fab.real_profiles {
        Some(p) if p.len() == n => p.clone(),
        Some(p) => return input(format!("{} declared real profiles for {n} bidders", p.len())),
        None => real_profiles.to_vec(),
    };
    for (j, fake) in fab.fakes.iter().enumerate() {
        let a = quantize(fake.amount)?;
        let pad = Hash32::random(&mut rng);
        l.append(Entry::Commit { bidder: n + j, digest: commitment(n + j, a, &pad) })?;
        pads.push((a, pad));
        declared.push(fake.profile.clone());
    }

    let f = collateral_for(rule, real_profiles, n + k)?;
    let fq = quantize(f)?;
    for b in 0..n + k {
        l.append(Entry::Deposit { bidder: b, amount: fq })?;
    }
    l.append(Entry::DeclareConstraint { constraint: fab.reported.clone().into() })?;
    l.append(Entry::DeclareDistributions { profiles: declared.clone() })?;
    l.append(Entry::EndInit)?;

    for (i, (a, pad)) in pads.iter().take(n).enumerate() {
        l.append(Entry::Reveal { bidder: i, amount: *a, pad: *pad })?;
    }
    let fake_ids = ElementSet::full(n + k).difference(ElementSet::full(n));
    let view = RevealView {
        real_bids: &real_bids,
        fake_ids,
        fakes: &fab.fakes,
        reported: &fab.reported,
        profiles: &declared,
        collateral: to_value(fq),
    };
    let concealed = strategy.conceal(&view)?;
    if !concealed.is_subset(fake_ids) {
        return input(format!("strategy conceals non-fake bids {:?}", concealed.difference(fake_ids)));
    }
    for b in fake_ids.difference(concealed).iter() {
        let (a, pad) = pads[b];
        l.append(Entry::Reveal { bidder: b, amount: a, pad })?;
    }
    l.append(Entry::EndReveal)?;

    let s = settle(&l)?;
    append_settlement(&mut l, &s)?;

    let real = ElementSet::full(n);
    let won = s.outcome.allocation.intersection(real);
    if !truth.is_feasible(won) {
        return Err(Error::Protocol(format!("real winners {won:?} are infeasible under the true constraint")));
    }
    let burned = to_value(s.burned.iter().map(|b| b.1).sum());
    let real_revenue = s.outcome.revenue_from(real);
    let bidder_utilities = (0..n)
        .map(|i| s.outcome.payment(i).map_or(0.0, |p| values[i] - p))
        .collect();
    Ok(DraResult {
        outcome: s.outcome,
        real,
        fakes: fake_ids,
        concealed,
        collateral: to_value(fq),
        burned,
        real_revenue,
        auctioneer_net: real_revenue - burned,
        bidder_utilities,
        ledger: l,
    })
}

/// Runs the protocol for real `values` against `strategy`; `seed` drives the pads.
pub fn run_dra<S>(cfg: &DraConfig, strategy: &S, values: &[f64], seed: u64) -> Result<DraResult>
where
    S: AuctioneerStrategy<Matroid, Reported = Matroid>,
{
    run_protocol(&cfg.matroid, &cfg.profiles, &cfg.collateral, strategy, values, seed)
}

/// Settlement recomputed from a ledger; checks it against the recorded one.
pub fn replay_ledger(l: &Ledger) -> Result<DraSettlement> {
    if !l.entries().iter().any(|e| matches!(e, Entry::EndReveal)) {
        return Err(Error::Protocol("incomplete protocol: reveal phase never closed".into()));
    }
    let s = settle(l)?;
    let mut fresh = Ledger::new();
    for e in l.entries() {
        fresh.append(e.clone())?;
        if matches!(e, Entry::EndReveal) {
            break;
        }
    }
    append_settlement(&mut fresh, &s)?;
    if fresh.entries() != l.entries() {
        return Err(Error::Protocol("recorded settlement differs from recomputed settlement".into()));
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Collateral for α-strongly-regular distributions

/// Left side of the collateral condition at ratio `gamma = f / R`.
pub fn alpha_condition_lhs(alpha: f64, gamma: f64) -> f64 {
    if alpha >= 1.0 {
        return gamma * (1.0 - gamma).exp();
    }
    let p = 1.0 / (1.0 - alpha);
    (gamma.ln() - alpha.ln() - p * ((1.0 - alpha) * gamma + alpha).ln()).exp()
}

/// Smallest `gamma >= 1` meeting the condition for `n` commitments.
pub fn alpha_gamma_root(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return input(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if n == 0 {
        return input("need at least one commitment");
    }
    let target = 1.0 / n as f64;
    let mut hi = 2.0;
    while alpha_condition_lhs(alpha, hi) > target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Capacity("collateral ratio overflow".into()));
        }
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if alpha_condition_lhs(alpha, m) > target {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(hi)
}

/// Closed-form sufficient ratio `(n/α)^((1-α)/α) (1-α)^(-1/α)`, for α < 1.
pub fn alpha_gamma_closed_form(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return input(format!("closed form needs alpha in (0, 1), got {alpha}"));
    }
    Ok((n as f64 / alpha).powf((1.0 - alpha) / alpha) * (1.0 - alpha).powf(-1.0 / alpha))
}

/// Collateral for `n` commitments: the root ratio times the largest reserve.
pub fn collateral_alpha(profiles: &[VirtualValueProfile], alpha: f64, n: usize) -> Result<f64> {
    Ok(alpha_gamma_root(alpha, n)? * max_reserve(profiles))
}

// ---------------------------------------------------------------------------
// Credibility scan

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum Extension {
    /// One fake parallel to real element `j`.
    ParallelTo(ElementId),
    /// Uniform(k, n) grows to Uniform(k, n + 1).
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "stat", content = "of", rename_all = "snake_case")]
pub enum Statistic {
    Max,
    Min,
    Bid(ElementId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ConcealPolicy {
    Never,
    /// Conceal iff the statistic of real bids lies in `[lo, hi)`.
    Interval { stat: Statistic, lo: f64, hi: f64 },
    /// Conceal iff that strictly raises real revenue net of the forfeited deposit.
    ExPostOptimal,
}

/// One fake bid with a fixed amount, the profile of real bidder `profile_of`,
/// a structural extension and a conceal policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanStrategy {
    pub extension: Extension,
    pub fake_bid: f64,
    pub profile_of: ElementId,
    pub policy: ConcealPolicy,
}

impl ScanStrategy {
    pub fn label(&self) -> String {
        let ext = match self.extension {
            Extension::ParallelTo(j) => format!("parallel:{j}"),
            Extension::Uniform => "uniform".to_string(),
        };
        let pol = match self.policy {
            ConcealPolicy::Never => "never".to_string(),
            ConcealPolicy::ExPostOptimal => "expost".to_string(),
            ConcealPolicy::Interval { stat, lo, hi } => {
                let s = match stat {
                    Statistic::Max => "max".to_string(),
                    Statistic::Min => "min".to_string(),
                    Statistic::Bid(j) => format!("bid{j}"),
                };
                format!("{s}[{lo},{hi})")
            }
        };
        format!("{ext};{pol}")
    }
}

impl AuctioneerStrategy<Matroid> for ScanStrategy {
    type Reported = Matroid;

    fn fabricate(&self, truth: &Matroid, profiles: &[VirtualValueProfile]) -> Result<Fabrication<Matroid>> {
        let reported = match self.extension {
            Extension::ParallelTo(j) => truth.parallel_extension(j)?,
            Extension::Uniform => match truth.spec() {
                MatroidSpec::Uniform { rank, ground } => Matroid::uniform(*rank, ground + 1)?,
                _ => return input("uniform extension needs a uniform matroid"),
            },
        };
        let profile = profiles
            .get(self.profile_of)
            .ok_or_else(|| Error::Input(format!("no real bidder {}", self.profile_of)))?
            .clone();
        Ok(Fabrication { fakes: vec![FakeBid { amount: self.fake_bid, profile }], reported, real_profiles: None })
    }

    fn conceal(&self, view: &RevealView<'_, Matroid>) -> Result<ElementSet> {
        let bids = view.real_bids.iter().map(|b| b.amount);
        let hide = match self.policy {
            ConcealPolicy::Never => false,
            ConcealPolicy::Interval { stat, lo, hi } => {
                let x = match stat {
                    Statistic::Max => bids.fold(f64::NEG_INFINITY, f64::max),
                    Statistic::Min => bids.fold(f64::INFINITY, f64::min),
                    Statistic::Bid(j) => view.real_bids.get(j).map_or(f64::NAN, |b| b.amount),
                };
                x >= lo && x < hi
            }
            ConcealPolicy::ExPostOptimal => {
                let shown = view.real_revenue_if(ElementSet::EMPTY)?;
                let hidden = view.real_revenue_if(view.fake_ids)? - view.collateral * view.fake_ids.len() as f64;
                hidden > shown
            }
        };
        Ok(if hide { view.fake_ids } else { ElementSet::EMPTY })
    }
}

/// Which policies to place at every grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Interval `[reserve, fake bid)` on the target's own bid.
    IntervalTarget,
    /// Interval `[reserve, fake bid)` on the highest real bid.
    IntervalMax,
    /// Interval `[reserve, fake bid)` on the lowest real bid.
    IntervalMin,
    ExPost,
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ScanGrid {
    /// Fake bid = fake profile's reserve + offset.
    pub offsets: Vec<f64>,
    /// Real elements to place a parallel fake next to; empty means all.
    #[serde(default)]
    pub targets: Vec<ElementId>,
    pub policies: Vec<PolicyKind>,
    /// Also try the uniform extension when the true matroid is uniform.
    #[serde(default)]
    pub uniform_extension: bool,
}

impl ScanGrid {
    /// Offsets on a 0.05 grid over `(0, 3]`, all real targets, every policy.
    pub fn full() -> Self {
        ScanGrid {
            offsets: (1..=60).map(|k| k as f64 * 0.05).collect(),
            targets: Vec::new(),
            policies: vec![PolicyKind::IntervalTarget, PolicyKind::IntervalMax, PolicyKind::ExPost],
            uniform_extension: true,
        }
    }

    pub fn strategies(&self, cfg: &DraConfig) -> Vec<ScanStrategy> {
        let n = cfg.matroid.ground_size();
        let targets: Vec<ElementId> = if self.targets.is_empty() { (0..n).collect() } else { self.targets.clone() };
        let mut exts: Vec<(Extension, ElementId)> = targets.iter().map(|&j| (Extension::ParallelTo(j), j)).collect();
        if self.uniform_extension && matches!(cfg.matroid.spec(), MatroidSpec::Uniform { .. }) && n > 0 {
            exts.push((Extension::Uniform, 0));
        }
        let mut out = Vec::new();
        for &(extension, j) in &exts {
            let r = cfg.profiles[j].monopoly_reserve();
            for &off in &self.offsets {
                let fake_bid = r + off;
                for &pk in &self.policies {
                    let policy = match pk {
                        PolicyKind::IntervalTarget => match extension {
                            Extension::ParallelTo(j) => {
                                ConcealPolicy::Interval { stat: Statistic::Bid(j), lo: r, hi: fake_bid }
                            }
                            Extension::Uniform => continue,
                        },
                        PolicyKind::IntervalMax => ConcealPolicy::Interval { stat: Statistic::Max, lo: r, hi: fake_bid },
                        PolicyKind::IntervalMin => ConcealPolicy::Interval { stat: Statistic::Min, lo: r, hi: fake_bid },
                        PolicyKind::ExPost => ConcealPolicy::ExPostOptimal,
                    };
                    out.push(ScanStrategy { extension, fake_bid, profile_of: j, policy });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub strategy: ScanStrategy,
    pub net: Estimate,
    /// Paired per-trial difference against the honest run.
    pub excess: Estimate,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub seed: u64,
    pub trials: u64,
    pub collateral: f64,
    pub sigmas: f64,
    pub honest: Estimate,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// Expected auctioneer net for every strategy against honest, with common
/// random numbers. A strategy is flagged when its paired excess is more than
/// `sigmas` standard errors above zero.
pub fn credibility_scan(
    cfg: &DraConfig,
    strategies: &[ScanStrategy],
    trials: u64,
    seed: u64,
    workers: usize,
    sigmas: f64,
) -> Result<ScanReport> {
    let s = strategies.len();
    let w = montecarlo::run_series(trials, workers, 1 + 2 * s, |t, out| {
        let mut rng = montecarlo::trial_rng(seed, t);
        let values = cfg.sample_values(&mut rng);
        let pad_seed: u64 = rng.gen();
        let honest = run_dra(cfg, &Honest, &values, pad_seed)?.auctioneer_net;
        out[0] = honest;
        for (k, st) in strategies.iter().enumerate() {
            let net = run_dra(cfg, st, &values, pad_seed)?.auctioneer_net;
            out[1 + 2 * k] = net;
            out[2 + 2 * k] = net - honest;
        }
        Ok(())
    })?;
    let collateral = collateral_for(&cfg.collateral, &cfg.profiles, cfg.matroid.ground_size() + 1)?;
    let rows = strategies
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let excess = w[2 + 2 * k].estimate();
            ScanRow { strategy: *st, net: w[1 + 2 * k].estimate(), excess, flagged: excess.positive(sigmas) }
        })
        .collect();
    Ok(ScanReport { seed, trials, collateral, sigmas, honest: w[0].estimate(), rows })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> VirtualValueProfile {
        VirtualValueProfile::exponential(1.0).unwrap()
    }

    fn single(f: f64) -> DraConfig {
        DraConfig::new(Matroid::uniform(1, 1).unwrap(), vec![exp1()], CollateralRule::Fixed { f }).unwrap()
    }

    fn lemma_strategy(delta: f64) -> ScanStrategy {
        ScanStrategy {
            extension: Extension::ParallelTo(0),
            fake_bid: 1.0 + delta,
            profile_of: 0,
            policy: ConcealPolicy::Interval { stat: Statistic::Bid(0), lo: 1.0, hi: 1.0 + delta },
        }
    }

    #[test]
    fn honest_matches_sealed_bitwise() {
        let cfg = DraConfig::new(
            Matroid::complete_graph(4).unwrap(),
            vec![exp1(); 6],
            CollateralRule::MaxReserve { upper_bound: None },
        )
        .unwrap();
        for t in 0..200 {
            let mut rng = montecarlo::trial_rng(4, t);
            let values = cfg.sample_values(&mut rng);
            let r = run_dra(&cfg, &Honest, &values, t).unwrap();
            let bids: Vec<Bid> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| Bid { bidder: i, amount: quantized(v).unwrap(), profile: i })
                .collect();
            let o = run_sealed(&cfg.matroid, &bids, &cfg.profiles).unwrap();
            assert_eq!(r.outcome, o);
            assert_eq!(r.burned, 0.0);
            assert_eq!(r.auctioneer_net, o.revenue_from(r.real));
        }
    }

    #[test]
    fn single_bidder_conceal_branch() {
        let cfg = single(0.1);
        let r = run_dra(&cfg, &lemma_strategy(0.1), &[1.05], 1).unwrap();
        assert_eq!(r.concealed, ElementSet::singleton(1));
        assert!((r.auctioneer_net - 0.9).abs() < 1e-12);
        let r = run_dra(&cfg, &lemma_strategy(0.1), &[2.0], 1).unwrap();
        assert!(r.concealed.is_empty());
        assert!((r.auctioneer_net - 1.1).abs() < 1e-12);
        let r = run_dra(&cfg, &lemma_strategy(0.1), &[0.5], 1).unwrap();
        assert_eq!(r.auctioneer_net, 0.0);
    }

    #[test]
    fn conceal_of_real_bid_is_rejected() {
        struct Bad;
        impl AuctioneerStrategy<Matroid> for Bad {
            type Reported = Matroid;
            fn fabricate(&self, t: &Matroid, p: &[VirtualValueProfile]) -> Result<Fabrication<Matroid>> {
                Honest.fabricate(t, p)
            }
            fn conceal(&self, _: &RevealView<'_, Matroid>) -> Result<ElementSet> {
                Ok(ElementSet::singleton(0))
            }
        }
        assert!(run_dra(&single(1.0), &Bad, &[2.0], 0).is_err());
    }

    #[test]
    fn replay_reproduces_settlement() {
        let cfg = single(0.1);
        let r = run_dra(&cfg, &lemma_strategy(0.1), &[1.05], 3).unwrap();
        let mut buf = Vec::new();
        r.ledger.write_jsonl(&mut buf).unwrap();
        let l = Ledger::read_jsonl(&buf[..]).unwrap();
        let s = replay_ledger(&l).unwrap();
        assert_eq!(s.outcome, r.outcome);
        assert_eq!(l.auctioneer_net(r.real), r.auctioneer_net);
    }

    #[test]
    fn tampered_reveal_is_burned() {
        let cfg = single(1.0);
        let r = run_dra(&cfg, &Honest, &[2.0], 3).unwrap();
        let mut l = Ledger::new();
        for e in r.ledger.entries() {
            let e = match e {
                Entry::Reveal { bidder, amount, pad } => Entry::Reveal { bidder: *bidder, amount: amount + 1, pad: *pad },
                Entry::Burn { .. } | Entry::Allocate { .. } | Entry::Pay { .. } => break,
                e => e.clone(),
            };
            l.append(e).unwrap();
        }
        let s = settle(&l).unwrap();
        assert_eq!(s.invalid, ElementSet::singleton(0));
        assert_eq!(s.burned, vec![(0, 1_000_000_000)]);
        assert!(s.outcome.allocation.is_empty());
    }

    #[test]
    fn alpha_solver_known_root() {
        let g = alpha_gamma_root(0.5, 2).unwrap();
        assert!((g - (7.0 + 48f64.sqrt())).abs() < 1e-6);
        let c = alpha_gamma_closed_form(0.5, 2).unwrap();
        assert!((c - 16.0).abs() < 1e-12);
        assert!((alpha_condition_lhs(0.5, 16.0) - 128.0 / 289.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_rule_uses_commitment_count() {
        let p = vec![exp1()];
        assert!(collateral_alpha(&p, 0.5, 3).unwrap() > collateral_alpha(&p, 0.5, 2).unwrap());
        assert!(alpha_gamma_root(0.0, 2).is_err());
    }

    #[test]
    fn scan_grid_shapes() {
        let cfg = DraConfig::new(Matroid::uniform(1, 2).unwrap(), vec![exp1(); 2], CollateralRule::Fixed { f: 1.0 })
            .unwrap();
        let g = ScanGrid { offsets: vec![0.1, 0.5], targets: vec![0], policies: vec![PolicyKind::IntervalTarget, PolicyKind::ExPost], uniform_extension: true };
        let s = g.strategies(&cfg);
        // parallel:0 x 2 offsets x 2 policies + uniform x 2 offsets x expost
        assert_eq!(s.len(), 6);
        assert_eq!(ScanGrid::full().offsets.len(), 60);
    }

    #[test]
    fn scan_flags_cheap_collateral_only() {
        let s = [lemma_strategy(0.1)];
        let r = credibility_scan(&single(0.1), &s, 100_000, 8, 1, 4.0).unwrap();
        assert!(r.any_flagged(), "{:?}", r.rows[0]);
        let r = credibility_scan(&single(1.0), &s, 20_000, 8, 1, 4.0).unwrap();
        assert!(!r.any_flagged());
    }
}
