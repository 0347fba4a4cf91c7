//! Independent checks of the relations and bounds an approximation promises.

use serde::Serialize;

use crate::channel::{eta_unchecked, Mac};
use crate::error::{Error, Result};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::transition::{Transition, STOCHASTIC_TOL};
use crate::upgrader::{alphabet_bound, boost_mass_bound, rate_gap_bound, UpgradeResult};

/// Tolerance used when grouping letters with equal posteriors.
pub const POSTERIOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    /// `bound - measured`.
    pub slack: f64,
}

impl Check {
    /// Passes when `measured <= bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured <= bound,
            measured,
            bound,
            slack: bound - measured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport { checks, pass }
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks that `w` is recovered from `q_up` through `p`:
/// `max |W(y|x) - sum_{y'} Q(y'|x) p(y|y')| <= tol`.
///
/// Only inputs with positive prior are compared; rows of zero-prior inputs
/// do not survive consolidation and carry no probability.
pub fn verify_degraded(
    w: &Mac,
    q_up: &Mac,
    p: &Transition,
    tol: f64,
) -> Result<VerificationReport> {
    if p.rows() != q_up.len() || p.cols() != w.len() || q_up.inputs() != w.inputs() {
        return Err(Error::DimensionMismatch(format!(
            "transition {}x{} between channels with {} and {} letters ({} vs {} inputs)",
            p.rows(),
            p.cols(),
            q_up.len(),
            w.len(),
            q_up.inputs(),
            w.inputs()
        )));
    }
    let q = w.inputs();
    let mut acc = vec![NeumaierSum::new(); w.len() * q];
    for src in 0..q_up.len() {
        let row = q_up.row(src);
        for (dst, v) in p.row(src) {
            for (a, &qv) in acc[dst * q..(dst + 1) * q].iter_mut().zip(row) {
                a.add(qv * v);
            }
        }
    }
    let mut residual = 0.0f64;
    for y in 0..w.len() {
        for x in 0..q {
            if w.prior()[x] > 0.0 {
                residual = residual.max((w.prob(y, x) - acc[y * q + x].value()).abs());
            }
        }
    }
    Ok(VerificationReport::new(vec![
        Check::at_most("degradation_residual", residual, tol),
        Check::at_most(
            "transition_stochastic",
            p.stochastic_defect(),
            STOCHASTIC_TOL,
        ),
    ]))
}

/// Full check of an upgrade result against its source channel.
pub fn verify_upgrade(w: &Mac, result: &UpgradeResult, mu: f64) -> Result<VerificationReport> {
    let q_up = &result.upgraded;
    let mut report = verify_degraded(w, q_up, &result.intermediate, 1e-10)?;
    let q = w.inputs();
    let gap = q_up.sum_rate() - w.sum_rate();
    let bound = rate_gap_bound(q, mu);
    let bins = result.binning.len();
    report.extend(VerificationReport::new(vec![
        Check::at_most("rate_gap_nonnegative", -gap, 1e-9),
        Check::at_most("rate_gap_bound", gap, bound + 1e-9),
        Check::at_most("alphabet_bound", q_up.len() as f64, alphabet_bound(q, mu)),
        Check::at_most(
            "alphabet_bins_plus_inputs",
            q_up.len() as f64,
            (bins + q) as f64,
        ),
    ]));
    Ok(report)
}

/// Per-bin properties of an upgrade: the leading posterior floor, the range
/// of `gamma`, the `eta` distance between member and bin posteriors, the
/// leaked mass and the leading region. When the result carries the
/// unconsolidated channel, its members must share the bin posterior and its
/// sum-rate must match the consolidated one.
pub fn verify_construction(w: &Mac, result: &UpgradeResult, mu: f64) -> Result<VerificationReport> {
    let q = w.inputs();
    let step = 1.0 / mu;
    let binning = &result.binning;

    let mut psi_floor = 0.0f64;
    let mut gamma_low = 0.0f64;
    let mut gamma_high = 0.0f64;
    let mut eta_off = 0.0f64;
    let mut eta_lead = 0.0f64;
    let mut leading_region = 0.0f64;
    let gamma_floor = 1.0 - boost_mass_bound(q, mu);
    for bin in binning.bins() {
        let xs = bin.leading_input;
        psi_floor = psi_floor.max(1.0 / q as f64 - bin.psi[xs]);
        let top = bin.key.regions().iter().copied().max().unwrap_or(0);
        if bin.key.regions()[xs] != top {
            leading_region += 1.0;
        }
        for &y in &bin.members {
            let phi = w.app(y)?;
            let g = phi[xs] / bin.psi[xs];
            gamma_low = gamma_low.max(gamma_floor - g);
            gamma_high = gamma_high.max(g - 1.0);
            for x in 0..q {
                let d = (eta_unchecked(phi[x]) - eta_unchecked(bin.psi[x].clamp(0.0, 1.0))).abs();
                if x == xs {
                    eta_lead = eta_lead.max(d - (q - 1) as f64 * step);
                } else {
                    eta_off = eta_off.max(d - step);
                }
            }
        }
    }
    let leaked = compensated_sum(w.prior().iter().zip(&result.epsilons).map(|(p, e)| p * e));

    let mut checks = vec![
        Check::at_most("leading_posterior_at_least_inv_q", psi_floor, 1e-12),
        Check::at_most("gamma_lower", gamma_low, 1e-10),
        Check::at_most("gamma_upper", gamma_high, 1e-12),
        Check::at_most("eta_gap_off_leading", eta_off, 1e-10),
        Check::at_most("eta_gap_leading", eta_lead, 1e-10),
        Check::at_most("boost_mass", leaked, boost_mass_bound(q, mu) + 1e-10),
        Check::at_most("leading_region", leading_region, 0.0),
    ];

    if let Some(qq) = &result.unconsolidated {
        let mut spread = 0.0f64;
        for bin in binning.bins() {
            for &y in &bin.members {
                let post = qq.app(y)?;
                for x in 0..q {
                    spread = spread.max((post[x] - bin.psi[x]).abs());
                }
            }
        }
        checks.push(Check::at_most(
            "unconsolidated_posteriors_equal",
            spread,
            1e-10,
        ));
        checks.push(Check::at_most(
            "unconsolidated_rate_matches",
            (qq.sum_rate() - result.upgraded.sum_rate()).abs(),
            1e-10,
        ));
    }
    Ok(VerificationReport::new(checks))
}

/// `I(X_A; X_B, Y) >= I(X_A; X_B, Z') - (R(Q') - R(W))`, within `1e-9`.
///
/// User indices are zero-based.
pub fn verify_partial_information(
    w: &Mac,
    q_up: &Mac,
    a: &[usize],
    b: &[usize],
) -> Result<VerificationReport> {
    if w.users() != q_up.users() || w.alphabet() != q_up.alphabet() {
        return Err(Error::DimensionMismatch(
            "channels have different inputs".into(),
        ));
    }
    let eps = q_up.sum_rate() - w.sum_rate();
    let lhs = w.partial_mutual_info(a, b)?;
    let rhs = q_up.partial_mutual_info(a, b)? - eps;
    let fmt = |s: &[usize]| {
        s.iter()
            .map(|u| (u + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    Ok(VerificationReport::new(vec![Check::at_most(
        format!("partial_information_A{{{}}}_B{{{}}}", fmt(a), fmt(b)),
        rhs - lhs,
        1e-9,
    )]))
}

/// One letter of the consolidation normal form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsolidatedLetter {
    pub mass: f64,
    pub posterior: Vec<f64>,
}

/// Groups letters whose posteriors agree within `tol` (transitively).
/// Returns, per group, the member letter indices. Zero-mass letters are
/// dropped.
fn equal_posterior_groups(mac: &Mac, tol: f64) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let q = mac.inputs();
    let mut apps = Vec::with_capacity(mac.len());
    let mut live = Vec::with_capacity(mac.len());
    for y in 0..mac.len() {
        if let Ok(a) = mac.app(y) {
            live.push(y);
            apps.push(a.into_inner());
        }
    }
    let mut order: Vec<usize> = (0..live.len()).collect();
    order.sort_by(|&i, &j| lex_cmp(&apps[i], &apps[j]));

    let mut parent: Vec<usize> = (0..live.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (pos, &i) in order.iter().enumerate() {
        for &j in order[..pos].iter().rev() {
            if apps[j][0] < apps[i][0] - tol {
                break;
            }
            if (0..q).all(|x| (apps[i][x] - apps[j][x]).abs() <= tol) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &y) in live.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(y);
    }
    (groups.into_values().collect(), apps)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Merges letters with equal posteriors into one letter each (rows summed).
pub fn consolidate(mac: &Mac) -> Result<Mac> {
    let (groups, _) = equal_posterior_groups(mac, POSTERIOR_TOL);
    let q = mac.inputs();
    let mut letters = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut row = vec![NeumaierSum::new(); q];
        for &y in g {
            for (r, &w) in row.iter_mut().zip(mac.row(y)) {
                r.add(w);
            }
        }
        let label = g
            .iter()
            .map(|&y| mac.label(y))
            .collect::<Vec<_>>()
            .join("+");
        letters.push((label, row.iter().map(NeumaierSum::value).collect()));
    }
    let mac = Mac::new(mac.users(), mac.alphabet(), mac.prior().to_vec(), letters)?;
    mac.purge_zero_outputs()
}

/// Sorted `(mass, posterior)` list after merging equal-posterior letters.
pub fn normal_form(mac: &Mac) -> Vec<ConsolidatedLetter> {
    let q = mac.inputs();
    let masses = mac.output_probs();
    let (groups, _) = equal_posterior_groups(mac, POSTERIOR_TOL);
    let mut out: Vec<ConsolidatedLetter> = groups
        .iter()
        .map(|g| {
            let mass: f64 = g.iter().map(|&y| masses[y]).sum::<NeumaierSum>().value();
            let mut post = vec![NeumaierSum::new(); q];
            for &y in g {
                for (x, p) in post.iter_mut().enumerate() {
                    p.add(mac.prior()[x] * mac.prob(y, x));
                }
            }
            ConsolidatedLetter {
                mass,
                posterior: post.iter().map(|s| s.value() / mass).collect(),
            }
        })
        .collect();
    out.sort_by(|a, b| lex_cmp(&a.posterior, &b.posterior).then(a.mass.total_cmp(&b.mass)));
    out
}

/// Largest discrepancy between two normal forms, or infinity if they cannot
/// be matched letter for letter.
fn normal_form_distance(a: &[ConsolidatedLetter], b: &[ConsolidatedLetter], tol: f64) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for la in a {
        let start = b.partition_point(|lb| lb.posterior[0] < la.posterior[0] - tol);
        let mut found = None;
        for (j, lb) in b.iter().enumerate().skip(start) {
            if lb.posterior[0] > la.posterior[0] + tol {
                break;
            }
            if used[j] {
                continue;
            }
            let d = la
                .posterior
                .iter()
                .zip(&lb.posterior)
                .map(|(x, y)| (x - y).abs())
                .fold((la.mass - lb.mass).abs(), f64::max);
            if d <= tol {
                found = Some((j, d));
                break;
            }
        }
        match found {
            Some((j, d)) => {
                used[j] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Necessary check for equivalence: equal sum-rates and equal consolidation
/// normal forms, both within `1e-10`.
pub fn verify_equivalence(a: &Mac, b: &Mac) -> Result<VerificationReport> {
    if a.users() != b.users() || a.alphabet() != b.alphabet() {
        return Err(Error::DimensionMismatch(format!(
            "{}-user/|X|={} vs {}-user/|X|={}",
            a.users(),
            a.alphabet(),
            b.users(),
            b.alphabet()
        )));
    }
    let prior_gap = a
        .prior()
        .iter()
        .zip(b.prior())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let rate_gap = (a.sum_rate() - b.sum_rate()).abs();
    let nf = normal_form_distance(&normal_form(a), &normal_form(b), POSTERIOR_TOL);
    Ok(VerificationReport::new(vec![
        Check::at_most("same_prior", prior_gap, 1e-12),
        Check::at_most("same_sum_rate", rate_gap, 1e-10),
        Check::at_most("same_normal_form", nf, POSTERIOR_TOL),
    ]))
}
