//! Profitable auctioneer deviations: closed-form revenue gaps for fake-bid
//! attacks on Exp(1) bidders, the executable strategies behind them, attacks
//! through non-matroid constraints, and the private-communication model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dra::{
    run_dra, run_protocol, AuctioneerStrategy, CollateralRule, ConcealPolicy, DraConfig, DraResult, Extension,
    Fabrication, FakeBid, Honest, RevealView, ScanStrategy, Statistic,
};
use crate::error::{input, Result};
use crate::matroid::{non_matroid_witness, DownwardClosedFamily, ElementId, ElementSet, Matroid};
use crate::mechanism::{critical_bid, optimal_allocation, Bid};
use crate::montecarlo::{self, Estimate, Stratum};
use crate::valuedist::VirtualValueProfile;

fn check_gap_args(delta: f64, epsilon: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return input(format!("delta must be positive, got {delta}"));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return input(format!("epsilon must lie in [0, 1), got {epsilon}"));
    }
    Ok(())
}

/// One Exp(1) bidder, fake bid `1 + delta`, collateral `1 - epsilon`.
pub fn gap_single(delta: f64, epsilon: f64) -> Result<f64> {
    check_gap_args(delta, epsilon)?;
    let a = (-(1.0 + delta)).exp();
    Ok(delta * a - (1.0 - epsilon) * ((-1.0f64).exp() - a))
}

/// `k` items and `k` Exp(1) bidders.
pub fn gap_kk(k: u32, delta: f64, epsilon: f64) -> Result<f64> {
    check_gap_args(delta, epsilon)?;
    if k == 0 {
        return input("k must be at least 1");
    }
    let k = k as f64;
    let a = (-k * (1.0 + delta)).exp();
    Ok(k * delta * a - (1.0 - epsilon) * ((-k).exp() - a))
}

/// One item and `n` Exp(1) bidders.
pub fn gap_1n(n: u32, delta: f64, epsilon: f64) -> Result<f64> {
    check_gap_args(delta, epsilon)?;
    if n == 0 {
        return input("n must be at least 1");
    }
    let e1 = 1.0 - (-1.0f64).exp();
    let ed = 1.0 - (-(1.0 + delta)).exp();
    let nf = n as f64;
    Ok(delta * nf * (-(1.0 + delta)).exp() * e1.powi(n as i32 - 1) - (1.0 - epsilon) * (ed.powi(n as i32) - e1.powi(n as i32)))
}

/// Private-communication attack on `k` items and `k` Exp(1) bidders, net of a unit fee.
pub fn private_sep_gain(k: u32, delta: f64) -> Result<f64> {
    check_gap_args(delta, 0.0)?;
    if k == 0 {
        return input("k must be at least 1");
    }
    Ok(k as f64 * delta * (-(1.0 + delta)).exp() - 1.0)
}

/// Expected gain of the creative-constraint attack against one Exp(1) bidder.
pub fn creative_attack_gain(f: f64) -> f64 {
    (-(f + 2.0)).exp()
}

/// Expected gain of the fixed non-matroid attack against one Exp(1) bidder
/// when `x` fakes are concealed.
pub fn fixed_attack_gain(x: usize, f: f64) -> f64 {
    let x = x as f64;
    x * (-(x * (f + 1.0) + 1.0)).exp()
}

/// One fake bid at `fake_bid` (profile of bidder 0), concealed iff `stat` of
/// the real bids lies in `[lo, hi)`.
pub fn conceal_interval_strategy(
    fake_bid: f64,
    lo: f64,
    hi: f64,
    stat: Statistic,
    extension: Extension,
) -> Result<ScanStrategy> {
    if !(lo <= hi && hi <= fake_bid) {
        return input(format!("need lo <= hi <= fake bid, got {lo}, {hi}, {fake_bid}"));
    }
    Ok(ScanStrategy { extension, fake_bid, profile_of: 0, policy: ConcealPolicy::Interval { stat, lo, hi } })
}

/// Exp(1) profiles for one large bidder followed by `n - 1` near-deterministic
/// small bidders at `eta`.
pub fn large_small_profiles(n: usize, eta: f64) -> Result<Vec<VirtualValueProfile>> {
    if n == 0 {
        return input("need at least one bidder");
    }
    let mut v = vec![VirtualValueProfile::exponential(1.0)?];
    for _ in 1..n {
        v.push(VirtualValueProfile::uniform(eta - 1e-9, eta + 1e-9)?);
    }
    Ok(v)
}

/// DRA runner that accepts any downward-closed reported constraint.
pub fn run_dra_relaxed<S>(
    truth: &DownwardClosedFamily,
    profiles: &[VirtualValueProfile],
    collateral: &CollateralRule,
    strategy: &S,
    values: &[f64],
    seed: u64,
) -> Result<DraResult>
where
    S: AuctioneerStrategy<DownwardClosedFamily>,
{
    run_protocol(truth, profiles, collateral, strategy, values, seed)
}

fn exp1() -> VirtualValueProfile {
    VirtualValueProfile::exponential(1.0).expect("valid mean")
}

fn real_bid(view_bids: &[Bid], i: ElementId) -> f64 {
    view_bids.iter().find(|b| b.bidder == i).map_or(f64::NEG_INFINITY, |b| b.amount)
}

/// Reports `{W, W ∪ {x} : W feasible} ∪ {{y}}` with fakes `x`, `y` bidding
/// `f + 2`. When the top real bidder exceeds `f + 2` and every other real bid
/// is below its reserve, `x` is concealed.
#[derive(Clone, Debug)]
pub struct CreativeAttack {
    pub reported: DownwardClosedFamily,
    pub fakes: Vec<FakeBid>,
    pub f: f64,
}

pub fn creative_constraint_attack(base: &DownwardClosedFamily, f: f64) -> Result<CreativeAttack> {
    if !(f >= 0.0 && f.is_finite()) {
        return input(format!("collateral must be non-negative, got {f}"));
    }
    let n = base.ground_size();
    let (x, y) = (n, n + 1);
    let mut sets: Vec<ElementSet> = base.maximal_sets().into_iter().map(|w| w.with(x)).collect();
    sets.push(ElementSet::singleton(y));
    let reported = DownwardClosedFamily::from_maximal_sets(n + 2, &sets)?;
    let fakes = vec![FakeBid { amount: f + 2.0, profile: exp1() }; 2];
    Ok(CreativeAttack { reported, fakes, f })
}

impl AuctioneerStrategy<DownwardClosedFamily> for CreativeAttack {
    type Reported = DownwardClosedFamily;

    fn fabricate(&self, truth: &DownwardClosedFamily, _: &[VirtualValueProfile]) -> Result<Fabrication<Self::Reported>> {
        if truth.ground_size() + 2 != self.reported.ground_size() {
            return input("attack was built for a different ground set");
        }
        Ok(Fabrication { fakes: self.fakes.clone(), reported: self.reported.clone(), real_profiles: None })
    }

    fn conceal(&self, view: &RevealView<'_, DownwardClosedFamily>) -> Result<ElementSet> {
        let bids = view.real_bids;
        let Some(top) = bids.iter().max_by(|a, b| a.amount.total_cmp(&b.amount).then(b.bidder.cmp(&a.bidder))) else {
            return Ok(ElementSet::EMPTY);
        };
        let others_low = bids
            .iter()
            .filter(|b| b.bidder != top.bidder)
            .all(|b| b.amount < view.profiles[b.bidder].monopoly_reserve());
        if others_low && top.amount > self.f + 2.0 {
            Ok(ElementSet::singleton(bids.len()))
        } else {
            Ok(ElementSet::EMPTY)
        }
    }
}

/// Attack through a fixed non-matroid constraint. The constraint is restricted
/// to a witness `(x_hat, y)` and relabelled: the real bidder takes the
/// smallest element of `x_hat` as id 0, the rest of `x_hat` become fakes
/// `1..=|X|`, then `y`. All fakes bid `f + 2`; the `X` fakes are concealed iff
/// the real bid exceeds `|X|(f + 1) + 1`.
#[derive(Clone, Debug)]
pub struct FixedNonMatroidAttack {
    pub witness: (ElementSet, ElementSet),
    pub reported: DownwardClosedFamily,
    pub fakes: Vec<FakeBid>,
    pub x_count: usize,
    pub threshold: f64,
}

pub fn fixed_nonmatroid_attack(family: &DownwardClosedFamily, f: f64) -> Result<FixedNonMatroidAttack> {
    if !(f >= 0.0 && f.is_finite()) {
        return input(format!("collateral must be non-negative, got {f}"));
    }
    let (x_hat, y) = non_matroid_witness(family)?;
    let i = x_hat.min().expect("x_hat is non-empty");
    let order: Vec<ElementId> =
        std::iter::once(i).chain(x_hat.without(i).iter()).chain(y.iter()).collect();
    let u = x_hat.union(y);
    let relabel = |s: ElementSet| -> ElementSet {
        s.iter().map(|e| order.iter().position(|&o| o == e).expect("inside witness")).collect()
    };
    let members: Vec<ElementSet> = family.members().filter(|s| s.is_subset(u)).map(relabel).collect();
    let reported = DownwardClosedFamily::from_maximal_sets(order.len(), &members)?;
    let x_count = x_hat.len() - 1;
    let fakes = vec![FakeBid { amount: f + 2.0, profile: exp1() }; order.len() - 1];
    Ok(FixedNonMatroidAttack {
        witness: (x_hat, y),
        reported,
        fakes,
        x_count,
        threshold: x_count as f64 * (f + 1.0) + 1.0,
    })
}

impl FixedNonMatroidAttack {
    /// The real side: one bidder who can be served alone.
    pub fn truth(&self) -> DownwardClosedFamily {
        DownwardClosedFamily::from_maximal_sets(1, &[ElementSet::singleton(0)]).expect("one element")
    }

    /// Net revenue on the conceal branch.
    pub fn conceal_branch_net(&self) -> f64 {
        self.x_count as f64 + 1.0
    }
}

impl AuctioneerStrategy<DownwardClosedFamily> for FixedNonMatroidAttack {
    type Reported = DownwardClosedFamily;

    fn fabricate(&self, truth: &DownwardClosedFamily, _: &[VirtualValueProfile]) -> Result<Fabrication<Self::Reported>> {
        if truth.ground_size() != 1 {
            return input("fixed non-matroid attack targets a single real bidder");
        }
        Ok(Fabrication { fakes: self.fakes.clone(), reported: self.reported.clone(), real_profiles: None })
    }

    fn conceal(&self, view: &RevealView<'_, DownwardClosedFamily>) -> Result<ElementSet> {
        if real_bid(view.real_bids, 0) > self.threshold {
            Ok((1..=self.x_count).collect())
        } else {
            Ok(ElementSet::EMPTY)
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapEstimate {
    pub honest: Estimate,
    pub strategic: Estimate,
    /// Paired per-trial difference, strategic minus honest.
    pub gap: Estimate,
}

fn paired<S, R>(trials: u64, seed: u64, workers: usize, sample: S, run: R) -> Result<GapEstimate>
where
    S: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
    R: Fn(&[f64], u64) -> Result<(f64, f64)> + Sync,
{
    let w = montecarlo::run_series(trials, workers, 3, |t, out| {
        let mut rng = montecarlo::trial_rng(seed, t);
        let values = sample(&mut rng);
        let (h, s) = run(&values, rng.gen())?;
        out[0] = h;
        out[1] = s;
        out[2] = s - h;
        Ok(())
    })?;
    Ok(GapEstimate { honest: w[0].estimate(), strategic: w[1].estimate(), gap: w[2].estimate() })
}

/// Strategic minus honest net revenue of `strategy` under `cfg`.
pub fn simulate_gap<S>(cfg: &DraConfig, strategy: &S, trials: u64, seed: u64, workers: usize) -> Result<GapEstimate>
where
    S: AuctioneerStrategy<Matroid, Reported = Matroid> + Sync,
{
    paired(trials, seed, workers, |rng| cfg.sample_values(rng), |v, pad| {
        Ok((run_dra(cfg, &Honest, v, pad)?.auctioneer_net, run_dra(cfg, strategy, v, pad)?.auctioneer_net))
    })
}

/// Same as [`simulate_gap`] for a downward-closed true constraint.
pub fn simulate_relaxed_gap<S>(
    truth: &DownwardClosedFamily,
    profiles: &[VirtualValueProfile],
    collateral: &CollateralRule,
    strategy: &S,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<GapEstimate>
where
    S: AuctioneerStrategy<DownwardClosedFamily> + Sync,
{
    paired(
        trials,
        seed,
        workers,
        |rng| profiles.iter().map(|p| p.sample(rng)).collect(),
        |v, pad| {
            let h = run_dra_relaxed(truth, profiles, collateral, &Honest, v, pad)?.auctioneer_net;
            let s = run_dra_relaxed(truth, profiles, collateral, strategy, v, pad)?.auctioneer_net;
            Ok((h, s))
        },
    )
}

fn sample_at_least<R: Rng + ?Sized>(p: &VirtualValueProfile, lo: f64, rng: &mut R) -> f64 {
    let d = p.distribution();
    let c = d.cdf(lo);
    d.quantile(c + rng.gen::<f64>() * (1.0 - c)).max(lo)
}

/// [`simulate_gap`] stratified on whether every real value is at least `lo`;
/// `share` of the trials go to that stratum.
pub fn simulate_gap_stratified<S>(
    cfg: &DraConfig,
    strategy: &S,
    lo: f64,
    share: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Estimate>
where
    S: AuctioneerStrategy<Matroid, Reported = Matroid> + Sync,
{
    if !(share > 0.0 && share < 1.0) {
        return input(format!("stratum share must lie in (0, 1), got {share}"));
    }
    let p_all: f64 = cfg.profiles.iter().map(|p| 1.0 - p.distribution().cdf(lo)).product();
    let strata = [Stratum { probability: p_all, share }, Stratum { probability: 1.0 - p_all, share: 1.0 - share }];
    montecarlo::run_stratified(&strata, trials, workers, |h, t| {
        let mut rng = montecarlo::trial_rng(seed, t);
        let values: Vec<f64> = if h == 0 {
            cfg.profiles.iter().map(|p| sample_at_least(p, lo, &mut rng)).collect()
        } else {
            loop {
                let v = cfg.sample_values(&mut rng);
                if v.iter().any(|&x| x < lo) {
                    break v;
                }
            }
        };
        let pad = rng.gen();
        Ok(run_dra(cfg, strategy, &values, pad)?.auctioneer_net - run_dra(cfg, &Honest, &values, pad)?.auctioneer_net)
    })
}

/// How the fee backing the shared fake identity is charged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeePolicy {
    /// Once per auction whether or not anything is concealed.
    #[default]
    Always,
    /// Only when the fake is concealed from at least one bidder.
    OnConceal,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PrivateKkReport {
    pub k: u32,
    pub delta: f64,
    pub fee: f64,
    pub estimate: GapEstimate,
    pub predicted: f64,
}

/// `k` items, `k` Exp(1) bidders. Bidder `i` privately sees `k - 1` large
/// fakes and one fake at `1 + delta`, hidden from it when its value lies in
/// `[1, 1 + delta)`. `fee` backs the shared fake identity.
pub fn private_kk_simulation(
    k: u32,
    delta: f64,
    fee: f64,
    policy: FeePolicy,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<PrivateKkReport> {
    check_gap_args(delta, 0.0)?;
    if k == 0 || k as usize >= crate::matroid::MAX_GROUND {
        return input(format!("k must lie in 1..{}", crate::matroid::MAX_GROUND));
    }
    let k_us = k as usize;
    let view = Matroid::uniform(k_us, k_us + 1)?;
    let profiles = vec![exp1(); k_us + 1];
    let large = 1e6;
    let fake = 1.0 + delta;
    let pay_in_view = |v: f64, show: bool| -> Result<f64> {
        let mut bids = vec![Bid { bidder: 0, amount: v, profile: 0 }];
        bids.extend((1..k_us).map(|j| Bid { bidder: j, amount: large, profile: j }));
        if show {
            bids.push(Bid { bidder: k_us, amount: fake, profile: k_us });
        }
        if optimal_allocation(&view, &bids, &profiles)?.contains(0) {
            critical_bid(&view, &bids, &profiles, 0)
        } else {
            Ok(0.0)
        }
    };
    let estimate = paired(
        trials,
        seed,
        workers,
        |rng| (0..k).map(|_| profiles[0].sample(rng)).collect(),
        |values, _| {
            let honest: f64 = values.iter().filter(|&&v| v >= 1.0).count() as f64;
            let mut strategic = 0.0;
            let mut hidden = false;
            for &v in values {
                let hide = (1.0..fake).contains(&v);
                hidden |= hide;
                strategic += pay_in_view(v, !hide)?;
            }
            if policy == FeePolicy::Always || hidden {
                strategic -= fee;
            }
            Ok((honest, strategic))
        },
    )?;
    let predicted = k as f64 * delta * (-(1.0 + delta)).exp() - fee;
    Ok(PrivateKkReport { k, delta, fee, estimate, predicted })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignCheck {
    pub delta: f64,
    pub gap: f64,
}

/// First grid point `delta = j * step`, `j = 1..`, up to `max` with a positive single-bidder gap.
pub fn first_positive_delta(epsilon: f64, step: f64, max: f64) -> Result<Option<SignCheck>> {
    let mut j = 1;
    while j as f64 * step <= max + 1e-12 {
        let delta = j as f64 * step;
        let gap = gap_single(delta, epsilon)?;
        if gap > 0.0 {
            return Ok(Some(SignCheck { delta, gap }));
        }
        j += 1;
    }
    Ok(None)
}
