//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p macup-core --test acceptance`.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use macup::upgrader::{alphabet_bound, min_mu, rate_gap_bound, UpgradeOptions};
use macup::{
    degrade, gen_random, parse_mac, polar_profile, upgrade, upgrade_with, verify_construction,
    verify_partial_information, verify_upgrade, Mac, RegionPartition,
};

const RATE_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;

const SEEDS_PER_CELL: u64 = 200;
const SHAPES: [(usize, usize); 4] = [(2, 1), (3, 1), (4, 1), (2, 2)];
const OUTPUTS: [usize; 2] = [10, 200];

const BUDGET_REGION_COUNT: Duration = Duration::from_millis(1);
const BUDGET_SWEEP: Duration = Duration::from_secs(1);
const BUDGET_CORPUS: Duration = Duration::from_secs(60);
const BUDGET_POLAR: Duration = Duration::from_secs(10);
const BUDGET_LARGE: Duration = Duration::from_secs(10);
const MAX_SCALING_RATIO: f64 = 15.0;

const CH_M: &str = "MAC
users 2
alphabet 2
outputs 3
prior 0.25 0.25 0.25 0.25
letter s0 1 0 0 0
letter s1 0 1 1 0
letter s2 0 0 0 1
";

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn min_time<T>(repeats: usize, mut f: impl FnMut() -> T) -> (Duration, T) {
    let mut best = Duration::MAX;
    let mut last = None;
    for _ in 0..repeats {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed());
        last = Some(v);
    }
    (best, last.unwrap())
}

fn region_count() -> Outcome {
    let (t, p) = min_time(5, || RegionPartition::build(17.2).unwrap());
    Outcome::new(
        p.regions() == 20 && t < BUDGET_REGION_COUNT,
        format!("mu=17.2 gives M={} (want 20) in {t:?}", p.regions()),
    )
}

fn partition_sweep() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for mu in [5.0, 10.0, 17.2, 100.0, 1000.0, 10000.0] {
        let p = RegionPartition::build(mu).unwrap();
        let report = p.check();
        counts.push(format!("{mu}:{}", p.regions()));
        if !report.pass || p.regions() as f64 > 2.0 * mu {
            failures.extend(
                report
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("mu={mu} {}", c.name)),
            );
        }
    }
    let t = start.elapsed();
    Outcome::new(
        failures.is_empty() && t < BUDGET_SWEEP,
        format!(
            "M per mu [{}], failures {:?}, {t:?}",
            counts.join(" "),
            failures
        ),
    )
}

/// One corpus channel with its fidelity.
struct Case {
    w: Mac,
    mu: f64,
}

fn corpus() -> Vec<Case> {
    let mut cases = Vec::new();
    for (s, &(alphabet, users)) in SHAPES.iter().enumerate() {
        let q = alphabet.pow(users as u32);
        for (o, &n) in OUTPUTS.iter().enumerate() {
            for mu in [min_mu(q), 20.0, 100.0] {
                for i in 0..SEEDS_PER_CELL {
                    let seed = ((s * 2 + o) as u64) << 32 | i;
                    cases.push(Case {
                        w: gen_random(seed, alphabet, users, n).unwrap(),
                        mu,
                    });
                }
            }
        }
    }
    cases
}

struct CorpusOutcomes {
    upgrade: Outcome,
    construction: Outcome,
    sandwich: Outcome,
}

fn corpus_checks() -> CorpusOutcomes {
    let cases = corpus();
    let start = Instant::now();
    let mut results = Vec::with_capacity(cases.len());
    for c in &cases {
        results.push(upgrade(&c.w, c.mu).unwrap());
    }
    let mut bad_gap = 0;
    let mut bad_alphabet = 0;
    let mut bad_residual = 0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_residual = 0.0f64;
    for (c, res) in cases.iter().zip(&results) {
        let q = c.w.inputs();
        let r = verify_upgrade(&c.w, res, c.mu).unwrap();
        let gap = res.upgraded.sum_rate() - c.w.sum_rate();
        if !(gap >= -RATE_TOL && gap <= rate_gap_bound(q, c.mu) + RATE_TOL) {
            bad_gap += 1;
        }
        worst_slack = worst_slack.min(rate_gap_bound(q, c.mu) - gap);
        let letters = res.upgraded.len() as f64;
        if letters > alphabet_bound(q, c.mu) || letters > (res.binning.len() + q) as f64 {
            bad_alphabet += 1;
        }
        let residual = r.check("degradation_residual").unwrap().measured;
        worst_residual = worst_residual.max(residual);
        if residual > RESIDUAL_TOL || !r.pass {
            bad_residual += 1;
        }
    }
    let t = start.elapsed();
    let upgrade_outcome = Outcome::new(
        bad_gap + bad_alphabet + bad_residual == 0 && t < BUDGET_CORPUS,
        format!(
            "{} channels: gap violations {bad_gap}, alphabet violations {bad_alphabet}, \
             residual violations {bad_residual}, least gap slack {worst_slack:.3e}, \
             largest residual {worst_residual:.3e}, {t:?}",
            cases.len()
        ),
    );

    let opts = UpgradeOptions {
        keep_unconsolidated: true,
    };
    let mut violations: Vec<String> = Vec::new();
    for c in &cases {
        let res = upgrade_with(&c.w, c.mu, opts).unwrap();
        let r = verify_construction(&c.w, &res, c.mu).unwrap();
        violations.extend(r.checks.iter().filter(|k| !k.pass).map(|k| k.name.clone()));
    }
    violations.sort();
    violations.dedup();
    let construction = Outcome::new(
        violations.is_empty(),
        format!(
            "{} channels with unconsolidated posteriors checked, failing checks {:?}",
            cases.len(),
            violations
        ),
    );

    let mut bad = 0;
    for (c, res) in cases.iter().zip(&results) {
        let lo = degrade(&c.w, c.mu).unwrap().sum_rate();
        let mid = c.w.sum_rate();
        if !(lo <= mid + RATE_TOL && mid <= res.upgraded.sum_rate() + RATE_TOL) {
            bad += 1;
        }
    }
    let sandwich = Outcome::new(
        bad == 0,
        format!("{} channels, {bad} out of order", cases.len()),
    );
    CorpusOutcomes {
        upgrade: upgrade_outcome,
        construction,
        sandwich,
    }
}

fn partial_information() -> Outcome {
    let subsets: [&[usize]; 4] = [&[], &[0], &[1], &[0, 1]];
    let pairs: Vec<(&[usize], &[usize])> = subsets
        .iter()
        .flat_map(|&a| subsets.iter().map(move |&b| (a, b)))
        .filter(|(a, b)| a.iter().all(|u| !b.contains(u)))
        .collect();
    let mut channels = vec![(parse_mac(CH_M).unwrap(), 17.2)];
    for seed in 0..50u64 {
        let mu = if seed % 2 == 0 { 12.0 } else { 20.0 };
        channels.push((gen_random(0xAB00 + seed, 2, 1 + 1, 40).unwrap(), mu));
    }
    let mut failures = 0;
    let mut checked = 0;
    for (w, mu) in &channels {
        let up = upgrade(w, *mu).unwrap().upgraded;
        for &(a, b) in &pairs {
            checked += 1;
            if !verify_partial_information(w, &up, a, b).unwrap().pass {
                failures += 1;
            }
        }
    }
    Outcome::new(
        failures == 0,
        format!(
            "{} channels x {} disjoint pairs = {checked} checks, {failures} failures",
            channels.len(),
            pairs.len()
        ),
    )
}

fn polar_sandwich() -> Outcome {
    let z0 = 0.5;
    let bec = Mac::single_user_uniform(
        2,
        vec![
            ("o0".into(), vec![1.0 - z0, 0.0]),
            ("e".into(), vec![z0, z0]),
            ("o1".into(), vec![0.0, 1.0 - z0]),
        ],
    )
    .unwrap();
    let start = Instant::now();
    let mut outside = 0;
    let mut total = 0;
    let mut widest = 0.0f64;
    for n in 1..=3u32 {
        let profile = polar_profile(&bec, n, 17.2).unwrap();
        for i in 0..profile.len() {
            let mut z = z0;
            for level in (0..n).rev() {
                z = if (i >> level) & 1 == 0 {
                    2.0 * z - z * z
                } else {
                    z * z
                };
            }
            let exact = (1.0 - z) * LN_2;
            total += 1;
            widest = widest.max(profile.upper[i] - profile.lower[i]);
            if !(profile.lower[i] - RATE_TOL <= exact && exact <= profile.upper[i] + RATE_TOL) {
                outside += 1;
            }
        }
    }
    let t = start.elapsed();
    Outcome::new(
        outside == 0 && t < BUDGET_POLAR,
        format!("{total} synthetic channels, {outside} outside bounds, widest interval {widest:.3e}, {t:?}"),
    )
}

fn large_alphabet() -> Outcome {
    let mu = 100.0;
    let small = gen_random(8, 2, 1, 100_000).unwrap();
    let large = gen_random(8, 2, 1, 1_000_000).unwrap();
    let (t_small, _) = min_time(5, || upgrade(&small, mu).unwrap());
    let (t_large, res) = min_time(3, || upgrade(&large, mu).unwrap());
    let ratio = t_large.as_secs_f64() / t_small.as_secs_f64();
    let ok = t_large < BUDGET_LARGE && ratio < MAX_SCALING_RATIO && !res.upgraded.is_empty();
    Outcome::new(
        ok,
        format!("|Y|=1e6 in {t_large:?}, |Y|=1e5 in {t_small:?}, ratio {ratio:.2}"),
    )
}

fn main() -> ExitCode {
    let mut outcomes: Vec<(&str, Outcome)> = vec![
        ("region count at mu=17.2", region_count()),
        ("partition sweep", partition_sweep()),
    ];
    let corpus = corpus_checks();
    outcomes.push(("randomized upgrade guarantees", corpus.upgrade));
    outcomes.push(("per-bin construction properties", corpus.construction));
    outcomes.push(("degrade/upgrade sandwich", corpus.sandwich));
    outcomes.push(("partial information", partial_information()));
    outcomes.push(("polar BEC sandwich", polar_sandwich()));
    outcomes.push(("large alphabet scaling", large_alphabet()));

    let mut all = true;
    for (i, (name, o)) in outcomes.iter().enumerate() {
        all &= o.pass;
        println!(
            "criterion {}: {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
