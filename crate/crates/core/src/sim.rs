//! Experiment runner: TOML configs, experiment recipes and CSV output.
//!
//! Every experiment returns its CSV text plus a list of threshold violations;
//! the binary maps those to exit status 2. Rows carry the seed and the range
//! of per-trial substreams they aggregate, so any trial can be rerun alone
//! with `montecarlo::trial_rng(seed, t)`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adra::{
    expected_levels, run_adra, run_clock_auction, simulate_mhat, AdraConfig, PriceRule,
};
use crate::deviations::{
    conceal_interval_strategy, creative_attack_gain, creative_constraint_attack, fixed_attack_gain,
    fixed_nonmatroid_attack, gap_1n, gap_kk, gap_single, private_kk_simulation, private_sep_gain, simulate_gap,
    simulate_gap_stratified, simulate_relaxed_gap, FeePolicy,
};
use crate::dra::{
    alpha_condition_lhs, alpha_gamma_closed_form, alpha_gamma_root, credibility_scan, CollateralRule, DraConfig,
    Extension, Honest, ScanGrid, Statistic,
};
use crate::error::{Error, Result};
use crate::ledger::{quantize, to_value, Ledger, ProtocolKind};
use crate::matroid::{DownwardClosedFamily, ElementSet, Matroid};
use crate::mechanism::{payment_identity_check, run_sealed, Bid};
use crate::montecarlo::{self, Estimate};
use crate::valuedist::{max_reserve, DistSpec, TabulatedCdf, ValueDistribution, VirtualValueProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PaymentIdentity,
    CredibilityScan,
    GapFormulas,
    AdraVsSealed,
    NonmatroidAttack,
    PrivateKk,
    CollateralSolve,
    Levels,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::PaymentIdentity,
        Experiment::CredibilityScan,
        Experiment::GapFormulas,
        Experiment::AdraVsSealed,
        Experiment::NonmatroidAttack,
        Experiment::PrivateKk,
        Experiment::CollateralSolve,
        Experiment::Levels,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PaymentIdentity => "payment-identity",
            Experiment::CredibilityScan => "credibility-scan",
            Experiment::GapFormulas => "gap-formulas",
            Experiment::AdraVsSealed => "adra-vs-sealed",
            Experiment::NonmatroidAttack => "nonmatroid-attack",
            Experiment::PrivateKk => "private-kk",
            Experiment::CollateralSolve => "collateral-solve",
            Experiment::Levels => "levels",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// A distribution given inline or as a two-column `value,cdf` CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistInput {
    Csv { csv: PathBuf },
    Spec(DistSpec),
}

impl DistInput {
    pub fn resolve(&self, base: &Path) -> Result<VirtualValueProfile> {
        match self {
            DistInput::Spec(s) => VirtualValueProfile::try_from(s.clone()),
            DistInput::Csv { csv } => {
                let path = if csv.is_absolute() { csv.clone() } else { base.join(csv) };
                Ok(VirtualValueProfile::new(ValueDistribution::Tabulated(TabulatedCdf::from_csv(&path)?)))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFormula {
    Single,
    Kk,
    OneN,
    Private,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSection {
    #[serde(default = "all_formulas")]
    pub formulas: Vec<GapFormula>,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default = "two")]
    pub k: u32,
    #[serde(default = "two")]
    pub n: u32,
    /// Also estimate each gap by simulation and compare.
    #[serde(default)]
    pub simulate: bool,
}

fn all_formulas() -> Vec<GapFormula> {
    vec![GapFormula::Single, GapFormula::Kk, GapFormula::OneN, GapFormula::Private]
}

fn two() -> u32 {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Creative,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackKind,
    pub f: Vec<f64>,
    /// Non-matroid constraint for the fixed attack; defaults to `{{0,1},{2}}`.
    pub family: Option<DownwardClosedFamily>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivateSection {
    pub k: u32,
    pub delta: f64,
    #[serde(default = "one_f64")]
    pub fee: f64,
    #[serde(default)]
    pub policy: FeePolicy,
}

fn one_f64() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    /// Largest reserve; defaults to that of the configured bidders, else 1.
    pub reserve: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdraSection {
    #[serde(default = "default_factor")]
    pub factor: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub modified: bool,
    #[serde(default = "default_max_levels")]
    pub max_levels: u32,
    /// Instances also checked against the step clock.
    #[serde(default)]
    pub clock_instances: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl Default for AdraSection {
    fn default() -> Self {
        AdraSection {
            factor: default_factor(),
            floor: default_floor(),
            modified: false,
            max_levels: default_max_levels(),
            clock_instances: 0,
            eps: default_eps(),
        }
    }
}

fn default_factor() -> f64 {
    2.0
}
fn default_floor() -> f64 {
    1e-3
}
fn default_max_levels() -> u32 {
    200
}
fn default_eps() -> f64 {
    1e-5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// Standard errors required for any sign or agreement claim.
    #[serde(default = "four")]
    pub sigmas: f64,
    pub matroid: Option<Matroid>,
    /// One distribution per bidder.
    #[serde(default)]
    pub bidders: Vec<DistInput>,
    /// Distribution shared by every bidder when `bidders` is empty.
    pub bidder: Option<DistInput>,
    pub collateral: Option<CollateralRule>,
    pub grid: Option<ScanGrid>,
    /// The scan is expected to flag a strategy (an under-collateralized run).
    #[serde(default)]
    pub expect_flag: bool,
    pub gap: Option<GapSection>,
    pub attack: Option<AttackSection>,
    pub private: Option<PrivateSection>,
    pub solve: Option<SolveSection>,
    pub adra: Option<AdraSection>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn four() -> f64 {
    4.0
}

pub const DEFAULT_TRIALS: u64 = 100_000;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Self::parse(&std::fs::read_to_string(path)?)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1).max(1)
    }

    fn require_matroid(&self) -> Result<&Matroid> {
        self.matroid.as_ref().ok_or_else(|| Error::Config("missing [matroid] section".into()))
    }

    pub fn profiles(&self, n: usize) -> Result<Vec<VirtualValueProfile>> {
        if !self.bidders.is_empty() {
            if self.bidders.len() != n {
                return Err(Error::Config(format!("{} bidders for a ground set of {n}", self.bidders.len())));
            }
            return self.bidders.iter().map(|b| b.resolve(&self.base_dir)).collect();
        }
        let b = self.bidder.as_ref().ok_or_else(|| Error::Config("missing `bidder` or `bidders`".into()))?;
        let p = b.resolve(&self.base_dir)?;
        Ok(vec![p; n])
    }

    fn dra_config(&self) -> Result<DraConfig> {
        let m = self.require_matroid()?.clone();
        let p = self.profiles(m.ground_size())?;
        let rule = self.collateral.clone().unwrap_or(CollateralRule::MaxReserve { upper_bound: None });
        DraConfig::new(m, p, rule)
    }

    fn adra_config(&self) -> Result<AdraConfig> {
        let m = self.require_matroid()?.clone();
        let p = self.profiles(m.ground_size())?;
        let s = self.adra.clone().unwrap_or_default();
        let mut c = AdraConfig::new(m, p)?;
        c.rule = PriceRule::new(s.factor, s.floor)?;
        c.modified = s.modified;
        c.max_levels = s.max_levels;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub violations: Vec<String>,
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Table { w })
    }

    fn row(&mut self, cells: Vec<String>) -> Result<()> {
        self.w.write_record(cells)?;
        Ok(())
    }

    fn finish(self) -> Result<String> {
        let bytes = self.w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn substreams(offset: u64, n: u64) -> String {
    if n == 0 {
        String::new()
    } else {
        format!("{}-{}", offset, offset + n - 1)
    }
}

fn sign(x: f64) -> &'static str {
    if x > 0.0 {
        "+"
    } else if x < 0.0 {
        "-"
    } else {
        "0"
    }
}

pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if let Some(e) = cfg.experiment {
        if e != exp {
            return Err(Error::Config(format!("config is for `{e}`, not `{exp}`")));
        }
    }
    if cfg.trials == Some(0) {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    match exp {
        Experiment::PaymentIdentity => payment_identity(cfg),
        Experiment::CredibilityScan => scan(cfg),
        Experiment::GapFormulas => gaps(cfg),
        Experiment::AdraVsSealed => adra_vs_sealed_exp(cfg),
        Experiment::NonmatroidAttack => nonmatroid(cfg),
        Experiment::PrivateKk => private(cfg),
        Experiment::CollateralSolve => solve(cfg),
        Experiment::Levels => levels(cfg),
    }
}

fn payment_identity(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = cfg.require_matroid()?;
    let p = cfg.profiles(m.ground_size())?;
    let (seed, trials) = (cfg.seed(), cfg.trials());
    let r = payment_identity_check(m, &p, trials, seed, cfg.workers())?;
    let mut t = Table::new(&[
        "seed",
        "substreams",
        "revenue_mean",
        "revenue_se",
        "virtual_surplus_mean",
        "virtual_surplus_se",
        "difference_mean",
        "difference_se",
        "z",
        "holds",
    ])?;
    let holds = r.holds(cfg.sigmas);
    t.row(vec![
        seed.to_string(),
        substreams(0, trials),
        num(r.revenue.mean),
        num(r.revenue.std_err),
        num(r.virtual_surplus.mean),
        num(r.virtual_surplus.std_err),
        num(r.difference.mean),
        num(r.difference.std_err),
        num(r.difference.z(0.0)),
        holds.to_string(),
    ])?;
    let violations =
        if holds { vec![] } else { vec![format!("payment identity off by {} standard errors", r.difference.z(0.0))] };
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

fn scan(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dc = cfg.dra_config()?;
    let grid = cfg.grid.clone().unwrap_or_else(ScanGrid::full);
    let strategies = grid.strategies(&dc);
    let (seed, trials) = (cfg.seed(), cfg.trials());
    let r = credibility_scan(&dc, &strategies, trials, seed, cfg.workers(), cfg.sigmas)?;
    let mut t = Table::new(&[
        "seed",
        "substreams",
        "strategy",
        "fake_bid",
        "collateral",
        "net_mean",
        "net_se",
        "excess_mean",
        "excess_se",
        "z",
        "flagged",
    ])?;
    t.row(vec![
        seed.to_string(),
        substreams(0, trials),
        "honest".into(),
        String::new(),
        num(r.collateral),
        num(r.honest.mean),
        num(r.honest.std_err),
        String::new(),
        String::new(),
        String::new(),
        "false".into(),
    ])?;
    for row in &r.rows {
        t.row(vec![
            seed.to_string(),
            substreams(0, trials),
            row.strategy.label(),
            num(row.strategy.fake_bid),
            num(r.collateral),
            num(row.net.mean),
            num(row.net.std_err),
            num(row.excess.mean),
            num(row.excess.std_err),
            num(row.excess.z(0.0)),
            row.flagged.to_string(),
        ])?;
    }
    let flagged: Vec<String> = r.rows.iter().filter(|x| x.flagged).map(|x| x.strategy.label()).collect();
    let violations = match (cfg.expect_flag, flagged.is_empty()) {
        (false, false) => flagged.into_iter().map(|l| format!("strategy {l} beats honest")).collect(),
        (true, true) => vec!["no strategy beats honest".to_string()],
        _ => vec![],
    };
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

fn exp1() -> VirtualValueProfile {
    VirtualValueProfile::exponential(1.0).expect("valid mean")
}

/// Simulation twin of a gap formula: `(estimate, offset, trials, asserted)`.
fn simulate_formula(
    f: GapFormula,
    g: &GapSection,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<(Estimate, u64, u64, bool)> {
    let fee = 1.0 - g.epsilon;
    let fake = 1.0 + g.delta;
    match f {
        GapFormula::Single => {
            let c = DraConfig::new(Matroid::uniform(1, 1)?, vec![exp1()], CollateralRule::Fixed { f: fee })?;
            let s = conceal_interval_strategy(fake, 1.0, fake, Statistic::Bid(0), Extension::ParallelTo(0))?;
            Ok((simulate_gap(&c, &s, trials, seed, workers)?.gap, 0, trials, true))
        }
        GapFormula::Kk => {
            let k = g.k as usize;
            let c = DraConfig::new(Matroid::uniform(k, k)?, vec![exp1(); k], CollateralRule::Fixed { f: fee })?;
            let s = conceal_interval_strategy(fake, 1.0, fake, Statistic::Min, Extension::Uniform)?;
            let e = simulate_gap_stratified(&c, &s, 1.0, 0.9, trials, seed, workers)?;
            Ok((e, 0, e.n, true))
        }
        GapFormula::OneN => {
            let n = g.n as usize;
            let c = DraConfig::new(Matroid::uniform(1, n)?, vec![exp1(); n], CollateralRule::Fixed { f: fee })?;
            let s = conceal_interval_strategy(fake, 1.0, fake, Statistic::Max, Extension::Uniform)?;
            Ok((simulate_gap(&c, &s, trials, seed, workers)?.gap, 0, trials, g.n == 1))
        }
        GapFormula::Private => {
            let r = private_kk_simulation(g.k, g.delta, 1.0, FeePolicy::Always, trials, seed, workers)?;
            Ok((r.estimate.gap, 0, trials, true))
        }
    }
}

fn gaps(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let g = cfg.gap.clone().ok_or_else(|| Error::Config("missing [gap] section".into()))?;
    let seed = cfg.seed();
    let mut t = Table::new(&[
        "formula", "size", "delta", "epsilon", "gap", "gap_7dp", "sign", "seed", "substreams", "mc_mean", "mc_se", "z",
    ])?;
    let mut violations = Vec::new();
    for &f in &g.formulas {
        let (name, size, value) = match f {
            GapFormula::Single => ("single", 1, gap_single(g.delta, g.epsilon)?),
            GapFormula::Kk => ("kk", g.k, gap_kk(g.k, g.delta, g.epsilon)?),
            GapFormula::OneN => ("1n", g.n, gap_1n(g.n, g.delta, g.epsilon)?),
            GapFormula::Private => ("private", g.k, private_sep_gain(g.k, g.delta)?),
        };
        let mut row = vec![
            name.to_string(),
            size.to_string(),
            num(g.delta),
            num(if f == GapFormula::Private { 0.0 } else { g.epsilon }),
            num(value),
            format!("{value:.7}"),
            sign(value).to_string(),
        ];
        if g.simulate {
            let (e, off, n, asserted) = simulate_formula(f, &g, cfg.trials(), seed, cfg.workers())?;
            if asserted && !e.within(value, cfg.sigmas) {
                violations.push(format!("{name}: simulation is {} standard errors from the formula", e.z(value)));
            }
            row.extend([seed.to_string(), substreams(off, n), num(e.mean), num(e.std_err), num(e.z(value))]);
        } else {
            row.extend(std::iter::repeat_n(String::new(), 5));
        }
        t.row(row)?;
    }
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

/// Random matroid (uniform, partition or graphic) on at most 6 elements with
/// Exp or Uniform bidders.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> Result<(Matroid, Vec<VirtualValueProfile>)> {
    let m = match rng.gen_range(0..3) {
        0 => {
            let n = rng.gen_range(1..=6);
            Matroid::uniform(rng.gen_range(1..=n), n)?
        }
        1 => {
            let n = rng.gen_range(1..=6);
            let mut blocks: Vec<(Vec<usize>, usize)> = Vec::new();
            let mut e = 0;
            while e < n {
                let size = rng.gen_range(1..=(n - e));
                blocks.push(((e..e + size).collect(), rng.gen_range(1..=size)));
                e += size;
            }
            Matroid::partition(blocks)?
        }
        _ => {
            let v = rng.gen_range(2..=4);
            let all: Vec<(usize, usize)> = (0..v).flat_map(|a| (a + 1..v).map(move |b| (a, b))).collect();
            let mut edges: Vec<(usize, usize)> = all.into_iter().filter(|_| rng.gen_bool(0.8)).collect();
            if edges.is_empty() {
                edges.push((0, 1));
            }
            Matroid::graphic(v, edges)?
        }
    };
    let profiles = (0..m.ground_size())
        .map(|_| {
            if rng.gen_bool(0.5) {
                VirtualValueProfile::exponential(rng.gen_range(0.5..2.0))
            } else {
                let lo = rng.gen_range(0.0..1.0);
                VirtualValueProfile::uniform(lo, lo + rng.gen_range(0.5..3.0))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((m, profiles))
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub instances: u64,
    pub allocation_mismatches: u64,
    pub max_payment_diff: f64,
    pub clock_instances: u64,
    pub clock_mismatches: u64,
    pub clock_max_diff: f64,
    pub eps: f64,
}

impl EquivalenceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.allocation_mismatches == 0
            && self.max_payment_diff <= tol
            && self.clock_mismatches == 0
            && self.clock_max_diff <= self.eps + 1e-12
    }
}

fn quantized_values(p: &[VirtualValueProfile], rng: &mut impl Rng) -> Result<Vec<f64>> {
    p.iter().map(|x| Ok(to_value(quantize(x.sample(rng))?))).collect()
}

fn well_separated(phis: &[f64], gap: f64) -> bool {
    let mut v: Vec<f64> = phis.iter().copied().filter(|&x| x > 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[1] - w[0] >= gap)
}

/// Honest ascending auction against the sealed auction on `instances` draws,
/// and the exact simulation against the step clock on the first
/// `clock_instances` of them (values redrawn until positive virtual values are
/// at least `2 eps` apart). With `fixed`, every draw uses that instance.
pub fn adra_vs_sealed(
    instances: u64,
    clock_instances: u64,
    eps: f64,
    seed: u64,
    rule: PriceRule,
    fixed: Option<(&Matroid, &[VirtualValueProfile])>,
) -> Result<EquivalenceReport> {
    let mut rep = EquivalenceReport {
        instances,
        allocation_mismatches: 0,
        max_payment_diff: 0.0,
        clock_instances: clock_instances.min(instances),
        clock_mismatches: 0,
        clock_max_diff: 0.0,
        eps,
    };
    for t in 0..instances {
        let mut rng = montecarlo::trial_rng(seed, t);
        let (m, p) = match fixed {
            Some((m, p)) => (m.clone(), p.to_vec()),
            None => random_instance(&mut rng)?,
        };
        let mut values = quantized_values(&p, &mut rng)?;
        let mut cfg = AdraConfig::new(m.clone(), p.clone())?;
        cfg.rule = rule;
        let a = run_adra(&cfg, &Honest, &values, rng.gen())?;
        let bids: Vec<Bid> = values.iter().enumerate().map(|(i, &v)| Bid { bidder: i, amount: v, profile: i }).collect();
        let s = run_sealed(&m, &bids, &p)?;
        if a.outcome.allocation != s.allocation {
            rep.allocation_mismatches += 1;
        } else {
            for (x, y) in a.outcome.payments.iter().zip(&s.payments) {
                rep.max_payment_diff = rep.max_payment_diff.max((x.1 - y.1).abs());
            }
        }
        if t < clock_instances {
            let mut tries = 0;
            let phis = loop {
                let phis: Vec<f64> = values.iter().zip(&p).map(|(&v, q)| q.ironed_virtual_value(v)).collect();
                if well_separated(&phis, 2.0 * eps) {
                    break phis;
                }
                tries += 1;
                if tries > 1000 {
                    return Err(Error::Input("could not draw well-separated values".into()));
                }
                values = quantized_values(&p, &mut rng)?;
            };
            let revealed: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
            let mh = simulate_mhat(&m, &p, &revealed, ElementSet::EMPTY, f64::INFINITY)?;
            let clock = run_clock_auction(&m, &phis.iter().copied().enumerate().collect::<Vec<_>>(), eps)?;
            let alloc: ElementSet = mh.promised.iter().map(|x| x.0).collect();
            if alloc != clock.allocation {
                rep.clock_mismatches += 1;
            } else {
                for &(i, pr) in &mh.promised {
                    let q = clock.prices.iter().find(|x| x.0 == i).expect("same allocation").1;
                    rep.clock_max_diff = rep.clock_max_diff.max((pr.virtual_price - q).abs());
                }
            }
        }
    }
    Ok(rep)
}

fn adra_vs_sealed_exp(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let s = cfg.adra.clone().unwrap_or_default();
    let rule = PriceRule::new(s.factor, s.floor)?;
    let (seed, trials) = (cfg.seed(), cfg.trials());
    let fixed = match &cfg.matroid {
        Some(m) => Some((m.clone(), cfg.profiles(m.ground_size())?)),
        None => None,
    };
    let r = adra_vs_sealed(
        trials,
        s.clock_instances,
        s.eps,
        seed,
        rule,
        fixed.as_ref().map(|(m, p)| (m, p.as_slice())),
    )?;
    let mut t = Table::new(&[
        "seed",
        "substreams",
        "instances",
        "allocation_mismatches",
        "max_payment_diff",
        "clock_instances",
        "clock_mismatches",
        "clock_max_diff",
        "eps",
        "pass",
    ])?;
    let pass = r.passes(1e-6);
    t.row(vec![
        seed.to_string(),
        substreams(0, trials),
        r.instances.to_string(),
        r.allocation_mismatches.to_string(),
        num(r.max_payment_diff),
        r.clock_instances.to_string(),
        r.clock_mismatches.to_string(),
        num(r.clock_max_diff),
        num(r.eps),
        pass.to_string(),
    ])?;
    let violations = if pass { vec![] } else { vec!["ascending auction differs from sealed auction".into()] };
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

fn nonmatroid(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let a = cfg.attack.clone().ok_or_else(|| Error::Config("missing [attack] section".into()))?;
    let (seed, trials, workers) = (cfg.seed(), cfg.trials(), cfg.workers());
    let p = vec![exp1()];
    let single = DownwardClosedFamily::from_maximal_sets(1, &[ElementSet::singleton(0)])?;
    let mut t = Table::new(&[
        "seed",
        "substreams",
        "attack",
        "f",
        "concealed_fakes",
        "honest_mean",
        "strategic_mean",
        "gap_mean",
        "gap_se",
        "predicted",
        "z",
        "within",
        "positive",
    ])?;
    let mut violations = Vec::new();
    for &f in &a.f {
        let rule = CollateralRule::Fixed { f };
        let (name, x, g, predicted) = match a.kind {
            AttackKind::Creative => {
                let atk = creative_constraint_attack(&single, f)?;
                ("creative", 1, simulate_relaxed_gap(&single, &p, &rule, &atk, trials, seed, workers)?, creative_attack_gain(f))
            }
            AttackKind::Fixed => {
                let fam = match &a.family {
                    Some(fam) => fam.clone(),
                    None => DownwardClosedFamily::from_lists(3, &[&[0, 1], &[2]])?,
                };
                let atk = fixed_nonmatroid_attack(&fam, f)?;
                let truth = atk.truth();
                let g = simulate_relaxed_gap(&truth, &p, &rule, &atk, trials, seed, workers)?;
                ("fixed", atk.x_count, g, fixed_attack_gain(atk.x_count, f))
            }
        };
        let within = g.gap.within(predicted, cfg.sigmas);
        let positive = g.gap.positive(cfg.sigmas);
        if !within {
            violations.push(format!("{name} f={f}: {} standard errors from prediction", g.gap.z(predicted)));
        }
        if !positive {
            violations.push(format!("{name} f={f}: gain not positive at {} sigma", cfg.sigmas));
        }
        t.row(vec![
            seed.to_string(),
            substreams(0, trials),
            name.into(),
            num(f),
            x.to_string(),
            num(g.honest.mean),
            num(g.strategic.mean),
            num(g.gap.mean),
            num(g.gap.std_err),
            num(predicted),
            num(g.gap.z(predicted)),
            within.to_string(),
            positive.to_string(),
        ])?;
    }
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

fn private(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let s = cfg.private.clone().ok_or_else(|| Error::Config("missing [private] section".into()))?;
    let (seed, trials) = (cfg.seed(), cfg.trials());
    let r = private_kk_simulation(s.k, s.delta, s.fee, s.policy, trials, seed, cfg.workers())?;
    let g = r.estimate;
    let within = g.gap.within(r.predicted, cfg.sigmas);
    let mut t = Table::new(&[
        "seed",
        "substreams",
        "k",
        "delta",
        "fee",
        "policy",
        "honest_mean",
        "strategic_mean",
        "gap_mean",
        "gap_se",
        "predicted",
        "z",
        "within",
    ])?;
    t.row(vec![
        seed.to_string(),
        substreams(0, trials),
        s.k.to_string(),
        num(s.delta),
        num(s.fee),
        match s.policy {
            FeePolicy::Always => "always".into(),
            FeePolicy::OnConceal => "on_conceal".into(),
        },
        num(g.honest.mean),
        num(g.strategic.mean),
        num(g.gap.mean),
        num(g.gap.std_err),
        num(r.predicted),
        num(g.gap.z(r.predicted)),
        within.to_string(),
    ])?;
    let violations = if within || s.policy == FeePolicy::OnConceal {
        vec![]
    } else {
        vec![format!("private gap {} standard errors from prediction", g.gap.z(r.predicted))]
    };
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

fn solve(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let s = cfg.solve.clone().unwrap_or(SolveSection { alphas: vec![0.5], ns: vec![2], reserve: None });
    let reserve = match (s.reserve, &cfg.matroid) {
        (Some(r), _) => r,
        (None, Some(m)) => max_reserve(&cfg.profiles(m.ground_size())?),
        (None, None) => 1.0,
    };
    let mut t = Table::new(&[
        "alpha",
        "n",
        "reserve",
        "gamma_root",
        "f_root",
        "lhs_root",
        "gamma_closed",
        "lhs_closed",
        "root_le_closed",
    ])?;
    let mut violations = Vec::new();
    for &alpha in &s.alphas {
        for &n in &s.ns {
            let g = alpha_gamma_root(alpha, n)?;
            let mut row = vec![num(alpha), n.to_string(), num(reserve), num(g), num(g * reserve), num(alpha_condition_lhs(alpha, g))];
            if alpha < 1.0 {
                let c = alpha_gamma_closed_form(alpha, n)?;
                let ok = g <= c;
                if !ok {
                    violations.push(format!("alpha={alpha} n={n}: root {g} above closed form {c}"));
                }
                row.extend([num(c), num(alpha_condition_lhs(alpha, c)), ok.to_string()]);
            } else {
                row.extend([String::new(), String::new(), String::new()]);
            }
            t.row(row)?;
        }
    }
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

fn levels(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ac = cfg.adra_config()?;
    let (seed, trials) = (cfg.seed(), cfg.trials());
    let r = expected_levels(&ac, trials, seed, cfg.workers())?;
    let mut t = Table::new(&["seed", "substreams", "mean_levels", "levels_se", "max_levels", "violations", "pass"])?;
    let pass = r.violations == 0;
    t.row(vec![
        seed.to_string(),
        substreams(0, trials),
        num(r.levels.mean),
        num(r.levels.std_err),
        r.max_levels.to_string(),
        r.violations.to_string(),
        pass.to_string(),
    ])?;
    let violations = if pass { vec![] } else { vec![format!("{} trials exceeded the level bound", r.violations)] };
    Ok(ExperimentOutput { csv: t.finish()?, violations })
}

#[derive(Clone, Debug, Serialize)]
pub struct Replayed {
    pub protocol: ProtocolKind,
    pub allocation: ElementSet,
    pub payments: Vec<(usize, f64)>,
    pub burned: f64,
    pub levels: Option<u32>,
}

/// Re-derives the outcome of a dumped ledger and checks it against the record.
pub fn replay(path: &Path) -> Result<Replayed> {
    replay_ledger(&Ledger::load(path)?)
}

pub fn replay_ledger(l: &Ledger) -> Result<Replayed> {
    let protocol = l.protocol().ok_or_else(|| Error::Protocol("incomplete protocol: no announcement".into()))?;
    match protocol {
        ProtocolKind::Dra => {
            let s = crate::dra::replay_ledger(l)?;
            Ok(Replayed {
                protocol,
                allocation: s.outcome.allocation,
                payments: s.outcome.payments,
                burned: to_value(s.burned.iter().map(|b| b.1).sum()),
                levels: None,
            })
        }
        ProtocolKind::Adra { .. } => {
            let s = crate::adra::replay_adra(l)?;
            Ok(Replayed {
                protocol,
                allocation: s.outcome.allocation,
                payments: s.outcome.payments,
                burned: to_value(s.burned),
                levels: Some(s.levels),
            })
        }
    }
}
