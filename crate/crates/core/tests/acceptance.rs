//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use credauct::adra::{expected_levels, AdraConfig, PriceRule};
use credauct::deviations::{
    conceal_interval_strategy, creative_attack_gain, creative_constraint_attack, fixed_attack_gain,
    fixed_nonmatroid_attack, gap_1n, gap_kk, gap_single, private_sep_gain, simulate_gap, simulate_relaxed_gap,
};
use credauct::dra::{
    alpha_condition_lhs, alpha_gamma_closed_form, alpha_gamma_root, credibility_scan, CollateralRule, DraConfig,
    Extension, PolicyKind, ScanGrid, Statistic,
};
use credauct::matroid::{
    augment, basis_exchange_witness, check_matroid_axioms, non_matroid_witness, DownwardClosedFamily, ElementSet,
    Matroid,
};
use credauct::mechanism::{conceal_monotonicity_check, optimal_allocation, payment_identity_check, Bid};
use credauct::montecarlo::trial_rng;
use credauct::sim::{adra_vs_sealed, run_experiment, Experiment, ExperimentConfig};
use credauct::valuedist::VirtualValueProfile;

const FORMULA_TOL: f64 = 1e-6;
const SIGMAS: f64 = 4.0;
const GAP_TRIALS: u64 = 10_000_000;
const SCAN_TRIALS: u64 = 1_000_000;
const IDENTITY_TRIALS: u64 = 1_000_000;
const LEMMA_INSTANCES: u64 = 1000;
const EQUIV_INSTANCES: u64 = 1000;
const CLOCK_INSTANCES: u64 = 100;
const CLOCK_EPS: f64 = 1e-5;
const PAYMENT_TOL: f64 = 1e-6;
const LEVEL_TRIALS: u64 = 10_000;
const ROOT_TOL: f64 = 1e-6;
const WITNESS_MAX_GROUND: usize = 5;
const DETERMINISM_TRIALS: u64 = 50_000;

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn exp1() -> VirtualValueProfile {
    VirtualValueProfile::exponential(1.0).unwrap()
}

type Outcome = Result<String, String>;

fn criterion_1() -> Outcome {
    let e = f64::exp;
    // Each formula restated directly; the quoted values are rounded evaluations of these.
    let checks = [
        ("gap_single(0.1,0.1)", gap_single(0.1, 0.1), 0.1 * e(-1.1) - 0.9 * (e(-1.0) - e(-1.1)), 0.0017796),
        ("gap_single(0.1,0)", gap_single(0.1, 0.0), 0.1 * e(-1.1) - (e(-1.0) - e(-1.1)), -0.0017212),
        ("gap_kk(2,0.1,0.1)", gap_kk(2, 0.1, 0.1), 0.2 * e(-2.2) - 0.9 * (e(-2.0) - e(-2.2)), 0.0000817),
        (
            "gap_1n(2,0.1,0.1)",
            gap_1n(2, 0.1, 0.1),
            0.2 * e(-1.1) * (1.0 - e(-1.0)) - 0.9 * ((1.0 - e(-1.1)).powi(2) - (1.0 - e(-1.0)).powi(2)),
            0.0011469,
        ),
        ("private_sep_gain(31,0.1)", private_sep_gain(31, 0.1), 3.1 * e(-1.1) - 1.0, 0.0319),
    ];
    let mut notes = Vec::new();
    for (name, got, formula, quoted) in checks {
        let got = got.map_err(|e| e.to_string())?;
        if (got - formula).abs() > FORMULA_TOL || (got - quoted).abs() > FORMULA_TOL {
            return Err(format!("{name} = {got}, formula {formula}, quoted {quoted}"));
        }
        notes.push(format!("{name}={got:.7}"));
    }
    Ok(notes.join(" "))
}

fn criterion_2() -> Outcome {
    let w = workers();
    let mut notes = Vec::new();
    let mut check = |name: &str, est: credauct::montecarlo::Estimate, want: f64| -> Result<(), String> {
        let z = est.z(want);
        notes.push(format!("{name}: {:.6}±{:.6} vs {want:.6} (z {z:.2})", est.mean, est.std_err));
        if est.within(want, SIGMAS) {
            Ok(())
        } else {
            Err(format!("{name} off by {z:.2} standard errors"))
        }
    };

    let cfg = DraConfig::new(Matroid::uniform(1, 1).unwrap(), vec![exp1()], CollateralRule::Fixed { f: 0.9 })
        .map_err(|e| e.to_string())?;
    let s = conceal_interval_strategy(1.1, 1.0, 1.1, Statistic::Bid(0), Extension::ParallelTo(0)).unwrap();
    let g = simulate_gap(&cfg, &s, GAP_TRIALS, 21, w).map_err(|e| e.to_string())?;
    check("single f=0.9", g.gap, gap_single(0.1, 0.1).unwrap())?;

    let single = DownwardClosedFamily::from_lists(1, &[&[0]]).unwrap();
    let rule = CollateralRule::Fixed { f: 1.0 };
    let atk = creative_constraint_attack(&single, 1.0).map_err(|e| e.to_string())?;
    let g = simulate_relaxed_gap(&single, &[exp1()], &rule, &atk, GAP_TRIALS, 22, w).map_err(|e| e.to_string())?;
    check("creative f=1", g.gap, creative_attack_gain(1.0))?;

    let fam = DownwardClosedFamily::from_lists(3, &[&[0, 1], &[2]]).unwrap();
    let atk = fixed_nonmatroid_attack(&fam, 1.0).map_err(|e| e.to_string())?;
    let g = simulate_relaxed_gap(&atk.truth(), &[exp1()], &rule, &atk, GAP_TRIALS, 23, w).map_err(|e| e.to_string())?;
    check("fixed f=1", g.gap, fixed_attack_gain(atk.x_count, 1.0))?;
    Ok(notes.join("; "))
}

fn scan_grid() -> ScanGrid {
    ScanGrid {
        offsets: vec![0.05, 0.1, 0.25, 0.5, 1.0, 3.0],
        targets: vec![0],
        policies: vec![PolicyKind::IntervalTarget, PolicyKind::IntervalMax],
        uniform_extension: true,
    }
}

fn criterion_3() -> Outcome {
    let w = workers();
    let grid = scan_grid();
    let configs: Vec<(&str, Matroid)> = vec![
        ("U(1,1)", Matroid::uniform(1, 1).unwrap()),
        ("U(1,2)", Matroid::uniform(1, 2).unwrap()),
        ("P({0,1}/1,{2}/1)", Matroid::partition(vec![(vec![0, 1], 1), (vec![2], 1)]).unwrap()),
        ("K3", Matroid::complete_graph(3).unwrap()),
    ];
    let mut notes = Vec::new();
    for (k, (name, m)) in configs.into_iter().enumerate() {
        let n = m.ground_size();
        let cfg = DraConfig::new(m, vec![exp1(); n], CollateralRule::MaxReserve { upper_bound: None })
            .map_err(|e| e.to_string())?;
        let strategies = grid.strategies(&cfg);
        let r = credibility_scan(&cfg, &strategies, SCAN_TRIALS, 30 + k as u64, w, SIGMAS).map_err(|e| e.to_string())?;
        if let Some(row) = r.rows.iter().find(|r| r.flagged) {
            return Err(format!(
                "{name}: {} beats honest by {:.6} ± {:.6}",
                row.strategy.label(),
                row.excess.mean,
                row.excess.std_err
            ));
        }
        let top = r.rows.iter().map(|r| r.excess.z(0.0)).fold(f64::NEG_INFINITY, f64::max);
        notes.push(format!("{name}: {} strategies, max z {top:.2}", strategies.len()));
    }
    let cfg = DraConfig::new(Matroid::uniform(1, 1).unwrap(), vec![exp1()], CollateralRule::Fixed { f: 0.9 })
        .map_err(|e| e.to_string())?;
    let r = credibility_scan(&cfg, &grid.strategies(&cfg), SCAN_TRIALS, 39, w, SIGMAS).map_err(|e| e.to_string())?;
    match r.rows.iter().filter(|r| r.flagged).max_by(|a, b| a.excess.mean.total_cmp(&b.excess.mean)) {
        Some(row) => notes.push(format!("f=0.9 flagged {} (+{:.6})", row.strategy.label(), row.excess.mean)),
        None => return Err("f=0.9: no strategy flagged".into()),
    }
    Ok(notes.join("; "))
}

fn criterion_4() -> Outcome {
    let w = workers();
    let bimodal =
        VirtualValueProfile::tabulated(vec![(0.0, 0.0), (1.0, 0.45), (2.0, 0.5), (3.0, 0.55), (4.0, 1.0)]).unwrap();
    let u = VirtualValueProfile::uniform(0.0, 2.0).unwrap();
    let configs: Vec<(&str, Matroid, Vec<VirtualValueProfile>)> = vec![
        ("U(1,1) exp", Matroid::uniform(1, 1).unwrap(), vec![exp1()]),
        ("U(2,4) exp", Matroid::uniform(2, 4).unwrap(), vec![exp1(); 4]),
        (
            "partition mixed",
            Matroid::partition(vec![(vec![0, 1], 1), (vec![2, 3, 4], 2)]).unwrap(),
            vec![exp1(), u.clone(), exp1(), u.clone(), exp1()],
        ),
        ("K4 exp", Matroid::complete_graph(4).unwrap(), vec![exp1(); 6]),
        ("U(1,3) ironed", Matroid::uniform(1, 3).unwrap(), vec![bimodal.clone(), bimodal, u]),
    ];
    let mut notes = Vec::new();
    for (k, (name, m, p)) in configs.into_iter().enumerate() {
        let r = payment_identity_check(&m, &p, IDENTITY_TRIALS, 40 + k as u64, w).map_err(|e| e.to_string())?;
        let z = r.difference.z(0.0);
        if !r.holds(SIGMAS) {
            return Err(format!("{name}: revenue {} vs virtual surplus {} (z {z:.2})", r.revenue.mean, r.virtual_surplus.mean));
        }
        notes.push(format!("{name} z {z:.2}"));
    }
    Ok(notes.join("; "))
}

/// Matroid with an independence oracle written from its definition.
enum Model {
    Uniform(usize, usize),
    Partition(Vec<(Vec<usize>, usize)>),
    Graphic(usize, Vec<(usize, usize)>),
}

impl Model {
    fn random(rng: &mut impl Rng) -> Model {
        match rng.gen_range(0..3) {
            0 => {
                let n = rng.gen_range(1..=10);
                Model::Uniform(rng.gen_range(0..=n), n)
            }
            1 => {
                let n = rng.gen_range(1..=10);
                let b = rng.gen_range(1..=n.min(4));
                let mut blocks: Vec<(Vec<usize>, usize)> = (0..b).map(|_| (Vec::new(), 0)).collect();
                for e in 0..n {
                    blocks[rng.gen_range(0..b)].0.push(e);
                }
                blocks.retain(|x| !x.0.is_empty());
                for x in &mut blocks {
                    x.1 = rng.gen_range(0..=x.0.len());
                }
                Model::Partition(blocks)
            }
            _ => {
                let v = rng.gen_range(2..=5);
                let all: Vec<(usize, usize)> = (0..v).flat_map(|a| (a + 1..v).map(move |b| (a, b))).collect();
                let mut edges: Vec<(usize, usize)> = all.into_iter().filter(|_| rng.gen_bool(0.7)).collect();
                if edges.is_empty() {
                    edges.push((0, 1));
                }
                Model::Graphic(v, edges)
            }
        }
    }

    fn build(&self) -> Matroid {
        match self {
            Model::Uniform(k, n) => Matroid::uniform(*k, *n),
            Model::Partition(b) => Matroid::partition(b.clone()),
            Model::Graphic(v, e) => Matroid::graphic(*v, e.clone()),
        }
        .unwrap()
    }

    fn n(&self) -> usize {
        match self {
            Model::Uniform(_, n) => *n,
            Model::Partition(b) => b.iter().map(|x| x.0.len()).sum(),
            Model::Graphic(_, e) => e.len(),
        }
    }

    fn indep(&self, s: ElementSet) -> bool {
        match self {
            Model::Uniform(k, _) => s.len() <= *k,
            Model::Partition(b) => b.iter().all(|(els, cap)| els.iter().filter(|&&e| s.contains(e)).count() <= *cap),
            Model::Graphic(v, edges) => {
                // A forest has |V| - components edges.
                let mut parent: Vec<usize> = (0..*v).collect();
                fn root(p: &mut [usize], x: usize) -> usize {
                    let mut r = x;
                    while p[r] != r {
                        r = p[r];
                    }
                    r
                }
                for e in s.iter() {
                    let (a, b) = edges[e];
                    let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                    if ra == rb {
                        return false;
                    }
                    parent[ra] = rb;
                }
                true
            }
        }
    }

    fn subsets(s: ElementSet) -> impl Iterator<Item = ElementSet> {
        let b = s.bits();
        (0..=b).filter(move |x| x & !b == 0).map(ElementSet::from_bits)
    }

    fn random_independent(&self, rng: &mut impl Rng, size: usize) -> ElementSet {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.shuffle(rng);
        let mut s = ElementSet::EMPTY;
        for e in order {
            if s.len() == size {
                break;
            }
            if self.indep(s.with(e)) {
                s.insert(e);
            }
        }
        s
    }

    fn rank(&self) -> usize {
        Self::subsets(ElementSet::full(self.n())).filter(|&s| self.indep(s)).map(|s| s.len()).max().unwrap_or(0)
    }

    fn best(&self, w: &[f64], among: ElementSet) -> ElementSet {
        let mut best = (0.0, ElementSet::EMPTY);
        for s in Self::subsets(among).filter(|&s| self.indep(s)) {
            let v: f64 = s.iter().map(|e| w[e]).sum();
            if v > best.0 {
                best = (v, s);
            }
        }
        best.1
    }
}

fn random_subset(rng: &mut impl Rng, n: usize) -> ElementSet {
    ElementSet::from_bits(rng.gen::<u64>()).intersection(ElementSet::full(n))
}

fn criterion_5() -> Outcome {
    let mut counts = [0u64; 4];
    for t in 0..LEMMA_INSTANCES {
        let mut rng = trial_rng(50, t);
        let model = loop {
            let m = Model::random(&mut rng);
            if m.rank() >= 1 {
                break m;
            }
        };
        let m = model.build();
        let n = model.n();
        for s in Model::subsets(ElementSet::full(n)) {
            if m.is_independent(s) != model.indep(s) {
                return Err(format!("instance {t}: independence of {s:?} disagrees"));
            }
        }
        let r = model.rank();

        // Augmentation.
        {
            let big = rng.gen_range(1..=r);
            let w_hat = model.random_independent(&mut rng, big);
            let small = rng.gen_range(0..big);
            let w = model.random_independent(&mut rng, small);
            let d = augment(&m, w, w_hat).map_err(|e| format!("instance {t}: augment: {e}"))?;
            let u = w.union(d);
            if !d.is_subset(w_hat.difference(w)) || !model.indep(u) || u.len() != w_hat.len() {
                return Err(format!("instance {t}: bad augmentation {d:?} for {w:?} from {w_hat:?}"));
            }
            counts[0] += 1;
        }

        // Symmetric exchange, checked against the lexicographically first valid set.
        let size = rng.gen_range(0..=r);
        let w = model.random_independent(&mut rng, size);
        let w_hat = model.random_independent(&mut rng, size);
        let d = random_subset(&mut rng, n).intersection(w);
        let got = basis_exchange_witness(&m, w, w_hat, d).map_err(|e| format!("instance {t}: exchange: {e}"))?;
        let valid = |a: ElementSet| {
            let x = w.difference(d).union(a);
            let y = w_hat.difference(a).union(d);
            a.is_subset(w_hat) && a.len() == d.len() && x.len() == size && y.len() == size && model.indep(x) && model.indep(y)
        };
        let first = Model::subsets(w_hat).filter(|&a| valid(a)).min_by(|a, b| a.lex_cmp(*b));
        if !valid(got) || first != Some(got) {
            return Err(format!("instance {t}: exchange {got:?}, oracle {first:?}"));
        }
        counts[1] += 1;

        // Concealing bids never evicts another winner.
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let p = vec![exp1(); n];
        let bids: Vec<Bid> = values.iter().enumerate().map(|(i, &v)| Bid { bidder: i, amount: v, profile: i }).collect();
        let c = random_subset(&mut rng, n);
        let phi: Vec<f64> = values.iter().map(|v| v - 1.0).collect();
        let full = model.best(&phi, ElementSet::full(n));
        let rest = model.best(&phi, ElementSet::full(n).difference(c));
        let lib = optimal_allocation(&m, &bids, &p).map_err(|e| e.to_string())?;
        let mono = conceal_monotonicity_check(&m, &bids, &p, c).map_err(|e| e.to_string())?;
        if lib != full || !full.difference(c).is_subset(rest) || !mono {
            return Err(format!("instance {t}: concealing {c:?} breaks monotonicity"));
        }
        counts[2] += 1;

        // Rank shortcut against the all-subsets definition.
        let a = random_subset(&mut rng, n);
        for i in a.iter() {
            let brute = Model::subsets(a).filter(|&s| model.indep(s)).all(|s| model.indep(s.with(i)));
            if m.clinches(a, i) != brute {
                return Err(format!("instance {t}: clinch of {i} in {a:?} disagrees"));
            }
        }
        counts[3] += 1;
    }
    Ok(format!(
        "augment {} exchange {} conceal {} clinch {} instances, zero failures",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn criterion_6() -> Outcome {
    let r = adra_vs_sealed(EQUIV_INSTANCES, CLOCK_INSTANCES, CLOCK_EPS, 60, PriceRule::default(), None)
        .map_err(|e| e.to_string())?;
    let note = format!(
        "{} instances: {} allocation mismatches, max payment diff {:.2e}; clock {} instances: {} mismatches, max diff {:.2e}",
        r.instances, r.allocation_mismatches, r.max_payment_diff, r.clock_instances, r.clock_mismatches, r.clock_max_diff
    );
    if r.passes(PAYMENT_TOL) {
        Ok(note)
    } else {
        Err(note)
    }
}

fn criterion_7() -> Outcome {
    let w = workers();
    let u = VirtualValueProfile::uniform(0.5, 4.0).unwrap();
    let configs: Vec<(&str, Matroid, Vec<VirtualValueProfile>)> = vec![
        ("U(1,3) exp", Matroid::uniform(1, 3).unwrap(), vec![exp1(); 3]),
        ("K4 exp", Matroid::complete_graph(4).unwrap(), vec![exp1(); 6]),
        (
            "partition mixed",
            Matroid::partition(vec![(vec![0, 1, 2], 2), (vec![3, 4], 1)]).unwrap(),
            vec![exp1(), u.clone(), VirtualValueProfile::exponential(3.0).unwrap(), u, exp1()],
        ),
    ];
    let mut notes = Vec::new();
    for (k, (name, m, p)) in configs.into_iter().enumerate() {
        let cfg = AdraConfig::new(m, p).map_err(|e| e.to_string())?;
        let r = expected_levels(&cfg, LEVEL_TRIALS, 70 + k as u64, w).map_err(|e| e.to_string())?;
        if r.violations > 0 {
            return Err(format!("{name}: {} of {} trials over the bound", r.violations, r.trials));
        }
        notes.push(format!("{name}: mean {:.2} max {}", r.levels.mean, r.max_levels));
    }
    Ok(notes.join("; "))
}

fn criterion_8() -> Outcome {
    let g = alpha_gamma_root(0.5, 2).map_err(|e| e.to_string())?;
    let want = 7.0 + 48f64.sqrt();
    if (g - want).abs() > ROOT_TOL {
        return Err(format!("root {g}, expected {want}"));
    }
    let c = alpha_gamma_closed_form(0.5, 2).map_err(|e| e.to_string())?;
    let lhs = alpha_condition_lhs(0.5, c);
    if (c - 16.0).abs() > ROOT_TOL || lhs > 0.5 || (lhs - 0.4429).abs() > 5e-5 {
        return Err(format!("closed form {c} with lhs {lhs}"));
    }
    let mut cells = 0;
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for n in [1, 2, 3, 5, 10] {
            let r = alpha_gamma_root(alpha, n).map_err(|e| e.to_string())?;
            let c = alpha_gamma_closed_form(alpha, n).map_err(|e| e.to_string())?;
            if r > c + ROOT_TOL {
                return Err(format!("alpha {alpha} n {n}: root {r} above closed form {c}"));
            }
            cells += 1;
        }
    }
    Ok(format!("root {g:.9}, closed form {c} lhs {lhs:.4}, {cells} grid cells root <= closed form"))
}

/// All down-sets of the subset lattice on `n` elements, as membership words.
fn down_sets(n: usize) -> Vec<u64> {
    fn go(n: usize, s: u64, word: u64, out: &mut Vec<u64>) {
        if s == 1 << n {
            out.push(word);
            return;
        }
        go(n, s + 1, word, out);
        let closed = (0..n).filter(|e| s >> e & 1 == 1).all(|e| word >> (s & !(1 << e)) & 1 == 1);
        if closed {
            go(n, s + 1, word | 1 << s, out);
        }
    }
    let mut out = Vec::new();
    go(n, 1, 1, &mut out);
    out
}

/// Brute-force search for a witness with `|y| >= 1`.
fn has_witness(fam: &DownwardClosedFamily) -> bool {
    let members: Vec<ElementSet> = fam.members().collect();
    members.iter().any(|&x| {
        members.iter().any(|&y| {
            !y.is_empty()
                && x.is_disjoint(y)
                && x.len() == y.len() + 1
                && Model::subsets(x.union(y)).all(|s| s == x || !fam.contains(s) || s.len() < x.len())
        })
    })
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let mut missing = 0;
    let mut first_missing = None;
    for n in 1..=WITNESS_MAX_GROUND {
        let (mut families, mut non, mut found) = (0, 0, 0);
        for word in down_sets(n) {
            let fam = DownwardClosedFamily::from_word(n, word).map_err(|e| e.to_string())?;
            families += 1;
            if check_matroid_axioms(&fam).is_ok() {
                continue;
            }
            non += 1;
            match non_matroid_witness(&fam) {
                Ok((x, y)) => {
                    let u = x.union(y);
                    let ok = fam.contains(x)
                        && fam.contains(y)
                        && !y.is_empty()
                        && x.is_disjoint(y)
                        && x.len() == y.len() + 1
                        && Model::subsets(u).all(|s| s == x || !fam.contains(s) || s.len() < x.len());
                    if !ok {
                        return Err(format!("n={n} word {word:#x}: invalid witness ({x:?}, {y:?})"));
                    }
                    found += 1;
                }
                Err(_) => {
                    // Confirm independently that the search did not just miss one.
                    if has_witness(&fam) {
                        return Err(format!("n={n} word {word:#x}: witness exists but was not found"));
                    }
                    missing += 1;
                    first_missing.get_or_insert(fam.maximal_sets());
                }
            }
        }
        notes.push(format!("n={n}: {found}/{non} non-matroid of {families}"));
    }
    let summary = notes.join(" ");
    match first_missing {
        None => Ok(format!("witnesses found and verified: {summary}")),
        Some(example) => Err(format!(
            "{missing} non-matroid families have no witness with nonempty Y (confirmed by brute force), e.g. maximal sets {example:?}; {summary}"
        )),
    }
}

fn criterion_10() -> Outcome {
    let base = "seed = 5\n[matroid]\nkind = \"uniform\"\nrank = 1\nground = 2\n[bidder]\nkind = \"exponential\"\nmean = 1.0\n";
    let runs: Vec<(Experiment, String)> = vec![
        (Experiment::PaymentIdentity, base.to_string()),
        (
            Experiment::CredibilityScan,
            format!("{base}[grid]\noffsets = [0.1, 0.5]\npolicies = [\"interval_target\", \"ex_post\"]\n"),
        ),
        (Experiment::Levels, base.to_string()),
        (Experiment::NonmatroidAttack, "seed = 5\n[attack]\nkind = \"fixed\"\nf = [1.0]\n".to_string()),
        (Experiment::PrivateKk, "seed = 5\n[private]\nk = 3\ndelta = 0.1\n".to_string()),
        (Experiment::GapFormulas, "seed = 5\n[gap]\ndelta = 0.1\nepsilon = 0.1\nsimulate = true\n".to_string()),
    ];
    for (exp, text) in runs {
        let mut cfg = ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
        cfg.trials = Some(DETERMINISM_TRIALS);
        let mut outputs = Vec::new();
        for w in [1, 2, 8] {
            cfg.workers = Some(w);
            outputs.push(run_experiment(exp, &cfg).map_err(|e| format!("{exp}: {e}"))?.csv);
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            return Err(format!("{exp}: CSV differs across worker counts"));
        }
    }
    Ok("6 experiments byte-identical under 1, 2 and 8 workers".into())
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, f) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(note) => println!("PASS {k:>2} ({secs:.1}s) {note}"),
            Err(note) => {
                failed += 1;
                println!("FAIL {k:>2} ({secs:.1}s) {note}");
            }
        }
    }
    // Red criteria stay visible in the report without aborting the remaining test targets.
    println!("{failed} criteria failed");
}
