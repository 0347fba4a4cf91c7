//! Upgraded (and degraded) approximations with bounded output alphabets.
//!
//! Every letter `y` of bin `z` keeps a fraction `alpha_x(y)` of `W(y|x)` in
//! the merged letter `z`; the remainder `1 - alpha_x(y)` is routed to a boost
//! letter `k<x>` that reveals the input exactly. The retained weights are
//! chosen so every member of a bin ends up with posterior `psi(.|z)`, which
//! lets the members be consolidated into one letter without loss.

use serde::Serialize;

use crate::binner::{bin_count_bound, build_bins, Binning};
use crate::channel::Mac;
use crate::error::{Error, Result};
use crate::quantizer::{RegionPartition, MIN_MU};
use crate::sum::NeumaierSum;
use crate::transition::Transition;

/// Leaked masses below this are treated as exactly zero (no boost letter).
pub const EPSILON_FLOOR: f64 = 1e-15;

/// Round-off allowance above 1 for `alpha` and `gamma`.
pub const RATIO_TOL: f64 = 1e-12;

/// `max(5, q(q-1))`, the smallest admissible `mu` for `q` inputs.
pub fn min_mu(inputs: usize) -> f64 {
    let q = inputs as f64;
    MIN_MU.max(q * (q - 1.0))
}

/// `(q-1)/mu * (2 + q ln q)`, the bound on the sum-rate increment.
pub fn rate_gap_bound(inputs: usize, mu: f64) -> f64 {
    let q = inputs as f64;
    (q - 1.0) / mu * (2.0 + q * q.ln())
}

/// Output alphabet bound of the upgraded channel, `q^2 (2 mu)^(q-1)`.
pub fn alphabet_bound(inputs: usize, mu: f64) -> f64 {
    bin_count_bound(inputs, mu)
}

/// `q(q-1)/mu`, bound on the prior-weighted leaked mass.
pub fn boost_mass_bound(inputs: usize, mu: f64) -> f64 {
    let q = inputs as f64;
    q * (q - 1.0) / mu
}

/// Label of the boost letter for input `x`.
pub fn boost_label(x: usize) -> String {
    format!("k{x}")
}

/// `gamma(y) = phi(x*|y) / psi(x*|z)`.
pub fn gamma(phi_y: &[f64], psi: &[f64], x_star: usize) -> Result<f64> {
    let denom = psi[x_star];
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::Internal(format!(
            "psi(x*|z) = {denom} is not positive"
        )));
    }
    let g = phi_y[x_star] / denom;
    if !(0.0..=1.0 + RATIO_TOL).contains(&g) {
        return Err(Error::Internal(format!("gamma = {g} outside [0, 1]")));
    }
    Ok(g.min(1.0))
}

/// Retention weight `alpha_x(y)`.
pub fn alpha(phi_y: &[f64], psi: &[f64], x_star: usize, x: usize) -> Result<f64> {
    if x == x_star || phi_y[x] == 0.0 {
        return Ok(1.0);
    }
    let a = psi[x] / phi_y[x] * gamma(phi_y, psi, x_star)?;
    if !(-RATIO_TOL..=1.0 + RATIO_TOL).contains(&a) {
        return Err(Error::Internal(format!("alpha = {a} outside [0, 1]")));
    }
    Ok(a.clamp(0.0, 1.0))
}

/// `alpha_x(y)` for every letter, letter-major.
///
/// Also enforces the lower bound `gamma(y) >= 1 - q(q-1)/mu`.
pub fn retention_weights(mac: &Mac, binning: &Binning, mu: f64) -> Result<Vec<f64>> {
    let q = mac.inputs();
    let floor = 1.0 - boost_mass_bound(q, mu) - 1e-10;
    let mut alphas = vec![1.0; mac.len() * q];
    for (y, out) in alphas.chunks_exact_mut(q).enumerate() {
        let bin = &binning.bins()[binning.bin_of(y)];
        let phi = binning.app(y);
        let g = gamma(phi, &bin.psi, bin.leading_input)?;
        if g < floor {
            return Err(Error::Internal(format!(
                "gamma = {g} of letter {y} below {floor}"
            )));
        }
        for (x, a) in out.iter_mut().enumerate() {
            *a = alpha(phi, &bin.psi, bin.leading_input, x)?;
        }
    }
    Ok(alphas)
}

/// `eps_x = sum_y (1 - alpha_x(y)) W(y|x)`, with values below
/// [`EPSILON_FLOOR`] set to zero.
pub fn epsilons(mac: &Mac, alphas: &[f64]) -> Vec<f64> {
    let q = mac.inputs();
    let mut acc = vec![NeumaierSum::new(); q];
    for (row, a) in mac.rows().zip(alphas.chunks_exact(q)) {
        for x in 0..q {
            acc[x].add((1.0 - a[x]) * row[x]);
        }
    }
    acc.iter()
        .map(|s| {
            let e = s.value();
            if e < EPSILON_FLOOR {
                0.0
            } else {
                e
            }
        })
        .collect()
}

/// The post-processing channel taking the upgraded channel back to `mac`.
///
/// Rows: one per bin (in bin order), then one per input with a positive
/// leaked mass. A bin row spreads over its members proportionally to their
/// retained mass; a boost row spreads over the letters that leaked mass for
/// that input.
pub fn build_intermediate(
    mac: &Mac,
    binning: &Binning,
    alphas: &[f64],
    epsilons: &[f64],
) -> Result<Transition> {
    let q = mac.inputs();
    let nb = binning.len();
    let prior = mac.prior();
    let boosts: Vec<usize> = (0..q).filter(|&u| epsilons[u] != 0.0).collect();
    // Row of the boost letter of each input, if any.
    let mut boost_row = vec![usize::MAX; q];
    for (i, &u) in boosts.iter().enumerate() {
        boost_row[u] = nb + i;
    }

    // Retained mass of every letter, bin totals and row sizes, in letter order.
    let mut retained = vec![0.0; mac.len()];
    let mut totals = vec![NeumaierSum::new(); nb];
    let mut counts = vec![0usize; nb + boosts.len()];
    for (y, (row, a)) in mac.rows().zip(alphas.chunks_exact(q)).enumerate() {
        let mut m = NeumaierSum::new();
        for x in 0..q {
            m.add(prior[x] * a[x] * row[x]);
            if a[x] < 1.0 && row[x] > 0.0 && boost_row[x] != usize::MAX {
                counts[boost_row[x]] += 1;
            }
        }
        let m = m.value();
        retained[y] = m;
        if m > 0.0 {
            let k = binning.bin_of(y);
            totals[k].add(m);
            counts[k] += 1;
        }
    }
    let totals: Vec<f64> = totals.iter().map(NeumaierSum::value).collect();
    if let Some(k) = totals.iter().position(|&t| t.is_nan() || t <= 0.0) {
        return Err(Error::Internal(format!("merged letter z{k} has no mass")));
    }

    let mut offsets = Vec::with_capacity(counts.len() + 1);
    offsets.push(0);
    for c in &counts {
        offsets.push(offsets.last().unwrap() + c);
    }
    let nnz = *offsets.last().unwrap();
    let mut cursor = offsets[..counts.len()].to_vec();
    let mut cols = vec![0u32; nnz];
    let mut vals = vec![0.0; nnz];
    for (y, (row, a)) in mac.rows().zip(alphas.chunks_exact(q)).enumerate() {
        let m = retained[y];
        if m > 0.0 {
            let k = binning.bin_of(y);
            cols[cursor[k]] = y as u32;
            vals[cursor[k]] = m / totals[k];
            cursor[k] += 1;
        }
        for x in 0..q {
            let r = boost_row[x];
            if a[x] < 1.0 && row[x] > 0.0 && r != usize::MAX {
                cols[cursor[r]] = y as u32;
                vals[cursor[r]] = (1.0 - a[x]) * row[x] / epsilons[x];
                cursor[r] += 1;
            }
        }
    }
    let labels = (0..nb)
        .map(Binning::label)
        .chain(boosts.iter().map(|&u| boost_label(u)))
        .collect();
    Ok(Transition::from_csr(
        offsets,
        cols,
        vals,
        labels,
        mac.labels().to_vec(),
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpgradeOptions {
    /// Also materialize the unconsolidated channel on the original letters
    /// plus boost letters.
    pub keep_unconsolidated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub inputs: usize,
    pub users: usize,
    pub outputs: usize,
    pub mu: f64,
    pub bins: usize,
    pub boosts: usize,
    pub rate_original: f64,
    pub rate_approx: f64,
    /// `rate_approx - rate_original`.
    pub gap: f64,
    pub bound: f64,
    pub alphabet_bound: f64,
}

#[derive(Debug, Clone)]
pub struct UpgradeResult {
    /// Merged letters `z<k>` followed by boost letters `k<x>`.
    pub upgraded: Mac,
    /// Letter index in `upgraded` of each input's boost letter, if any.
    pub boost_map: Vec<Option<usize>>,
    pub epsilons: Vec<f64>,
    /// Rows: letters of `upgraded`; columns: letters of the original channel.
    pub intermediate: Transition,
    pub binning: Binning,
    pub alphas: Vec<f64>,
    pub unconsolidated: Option<Mac>,
    pub diagnostics: Diagnostics,
}

fn check_mu(inputs: usize, mu: f64) -> Result<()> {
    let min = min_mu(inputs);
    if !(mu.is_finite() && mu >= min) {
        return Err(Error::MuTooSmall { mu, min });
    }
    Ok(())
}

/// Upgraded approximation of a purged channel.
pub fn upgrade(mac: &Mac, mu: f64) -> Result<UpgradeResult> {
    upgrade_with(mac, mu, UpgradeOptions::default())
}

pub fn upgrade_with(mac: &Mac, mu: f64, opts: UpgradeOptions) -> Result<UpgradeResult> {
    let q = mac.inputs();
    check_mu(q, mu)?;
    let part = RegionPartition::build(mu)?;
    let binning = build_bins(mac, &part)?;
    let alphas = retention_weights(mac, &binning, mu)?;
    let epsilons = epsilons(mac, &alphas);

    let mut labels = Vec::with_capacity(binning.len() + q);
    let mut probs = Vec::with_capacity((binning.len() + q) * q);
    let mut acc = vec![NeumaierSum::new(); binning.len() * q];
    for (y, (row, a)) in mac.rows().zip(alphas.chunks_exact(q)).enumerate() {
        let k = binning.bin_of(y);
        for (s, (w, a)) in acc[k * q..(k + 1) * q].iter_mut().zip(row.iter().zip(a)) {
            s.add(a * w);
        }
    }
    for k in 0..binning.len() {
        labels.push(Binning::label(k));
    }
    probs.extend(acc.iter().map(NeumaierSum::value));
    let mut boost_map = vec![None; q];
    for (v, &eps) in epsilons.iter().enumerate() {
        if eps > 0.0 {
            boost_map[v] = Some(labels.len());
            labels.push(boost_label(v));
            probs.extend((0..q).map(|x| if x == v { eps } else { 0.0 }));
        }
    }
    let upgraded = Mac::from_parts(
        mac.users(),
        mac.alphabet(),
        mac.prior().to_vec(),
        labels,
        probs,
    )?;
    let intermediate = build_intermediate(mac, &binning, &alphas, &epsilons)?;
    if !upgraded.is_purged() {
        return Err(Error::Internal(
            "upgraded channel has a zero-mass letter".into(),
        ));
    }

    let unconsolidated = if opts.keep_unconsolidated {
        Some(unconsolidated_channel(mac, &alphas, &epsilons)?)
    } else {
        None
    };

    let rate_original = mac.sum_rate();
    let rate_approx = upgraded.sum_rate();
    let diagnostics = Diagnostics {
        inputs: q,
        users: mac.users(),
        outputs: mac.len(),
        mu,
        bins: binning.len(),
        boosts: boost_map.iter().flatten().count(),
        rate_original,
        rate_approx,
        gap: rate_approx - rate_original,
        bound: rate_gap_bound(q, mu),
        alphabet_bound: alphabet_bound(q, mu),
    };
    Ok(UpgradeResult {
        upgraded,
        boost_map,
        epsilons,
        intermediate,
        binning,
        alphas,
        unconsolidated,
        diagnostics,
    })
}

/// `W''(y|x) = alpha_x(y) W(y|x)` on the original letters, plus boost letters.
fn unconsolidated_channel(mac: &Mac, alphas: &[f64], epsilons: &[f64]) -> Result<Mac> {
    let q = mac.inputs();
    let mut labels = mac.labels().to_vec();
    let mut probs: Vec<f64> = mac
        .rows()
        .zip(alphas.chunks_exact(q))
        .flat_map(|(row, a)| row.iter().zip(a).map(|(w, a)| w * a).collect::<Vec<_>>())
        .collect();
    for (v, &eps) in epsilons.iter().enumerate() {
        if eps > 0.0 {
            labels.push(boost_label(v));
            probs.extend((0..q).map(|x| if x == v { eps } else { 0.0 }));
        }
    }
    Mac::from_parts(
        mac.users(),
        mac.alphabet(),
        mac.prior().to_vec(),
        labels,
        probs,
    )
}

/// Degraded approximation: every bin merged into one letter.
#[derive(Debug, Clone)]
pub struct DegradeResult {
    pub degraded: Mac,
    /// Deterministic map from original letters to merged letters.
    pub map: Transition,
    pub diagnostics: Diagnostics,
}

/// Degraded approximation of a purged channel, `Q(z|x) = sum_{y in B(z)} W(y|x)`.
pub fn degrade(mac: &Mac, mu: f64) -> Result<Mac> {
    Ok(degrade_full(mac, mu)?.degraded)
}

pub fn degrade_full(mac: &Mac, mu: f64) -> Result<DegradeResult> {
    let part = RegionPartition::build(mu)?;
    degrade_with_partition(mac, &part)
}

/// Degrades using an explicit partition.
pub fn degrade_with_partition(mac: &Mac, part: &RegionPartition) -> Result<DegradeResult> {
    let q = mac.inputs();
    let binning = build_bins(mac, part)?;
    let labels: Vec<String> = (0..binning.len()).map(Binning::label).collect();
    let mut probs = Vec::with_capacity(binning.len() * q);
    let mut acc = vec![NeumaierSum::new(); q];
    for bin in binning.bins() {
        acc.iter_mut().for_each(|a| *a = NeumaierSum::new());
        for &y in &bin.members {
            for (a, &w) in acc.iter_mut().zip(mac.row(y)) {
                a.add(w);
            }
        }
        probs.extend(acc.iter().map(NeumaierSum::value));
    }
    let mut b = Transition::builder(labels.clone());
    for y in 0..mac.len() {
        b.push_row(mac.label(y).to_string(), [(binning.bin_of(y), 1.0)]);
    }
    let degraded = Mac::from_parts(
        mac.users(),
        mac.alphabet(),
        mac.prior().to_vec(),
        labels,
        probs,
    )?;
    let rate_original = mac.sum_rate();
    let rate_approx = degraded.sum_rate();
    let diagnostics = Diagnostics {
        inputs: q,
        users: mac.users(),
        outputs: mac.len(),
        mu: part.mu(),
        bins: binning.len(),
        boosts: 0,
        rate_original,
        rate_approx,
        gap: rate_approx - rate_original,
        bound: rate_gap_bound(q, part.mu()),
        alphabet_bound: alphabet_bound(q, part.mu()),
    };
    Ok(DegradeResult {
        degraded,
        map: b.finish(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fixtures::*;

    #[test]
    fn alpha_special_cases() {
        let phi = [0.7, 0.2, 0.1];
        let psi = [0.75, 0.15, 0.1];
        assert_eq!(alpha(&phi, &psi, 0, 0).unwrap(), 1.0);
        assert_eq!(alpha(&[0.8, 0.0, 0.2], &psi, 0, 1).unwrap(), 1.0);
        for x in 0..3 {
            assert_eq!(alpha(&phi, &phi, 0, x).unwrap(), 1.0);
        }
        let a = alpha(&phi, &psi, 0, 1).unwrap();
        assert!((a - 0.15 / 0.2 * 0.7 / 0.75).abs() < 1e-15);
        assert!(alpha(&[0.5, 0.5], &[0.2, 0.8], 0, 1).is_err());
    }

    #[test]
    fn gamma_range() {
        assert_eq!(gamma(&[0.6, 0.4], &[0.6, 0.4], 0).unwrap(), 1.0);
        assert!((gamma(&[0.6, 0.4], &[0.7, 0.3], 0).unwrap() - 0.6 / 0.7).abs() < 1e-15);
        assert!(gamma(&[0.8, 0.2], &[0.6, 0.4], 0).is_err());
        assert!(gamma(&[0.8, 0.2], &[0.0, 1.0], 0).is_err());
    }

    #[test]
    fn mu_requirement() {
        assert!(matches!(
            upgrade(&ch_a(), 4.0),
            Err(Error::MuTooSmall { .. })
        ));
        assert!(
            matches!(upgrade(&adder(), 11.9), Err(Error::MuTooSmall { min, .. }) if min == 12.0)
        );
        assert!(upgrade(&adder(), 12.0).is_ok());
    }

    #[test]
    fn bec_is_reproduced() {
        let w = bec(0.5);
        let r = upgrade(&w, 17.2).unwrap();
        assert_eq!(r.upgraded.len(), 3);
        assert!(r.boost_map.iter().all(Option::is_none));
        assert_eq!(r.epsilons, vec![0.0, 0.0]);
        assert!((r.upgraded.sum_rate() - w.sum_rate()).abs() < 1e-12);
    }

    #[test]
    fn perfect_channel_is_reproduced() {
        let w = perfect(3);
        let r = upgrade(&w, 6.0).unwrap();
        assert_eq!(r.upgraded.len(), 3);
        assert_eq!(r.epsilons, vec![0.0; 3]);
        let mut rows: Vec<Vec<f64>> = r.upgraded.rows().map(<[f64]>::to_vec).collect();
        rows.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(
            rows,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
    }

    #[test]
    fn singleton_bins_give_permutation_intermediate() {
        let r = upgrade(&ch_a(), 5.0).unwrap();
        assert_eq!(r.binning.len(), 4);
        let dense = r.intermediate.to_dense();
        for row in &dense {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), 3);
        }
        assert!(r.diagnostics.gap.abs() < 1e-12);
    }

    #[test]
    fn merged_bins_leak_to_boosts() {
        let w = crate::random::gen_random(3, 2, 1, 200).unwrap();
        let r = upgrade_with(
            &w,
            5.0,
            UpgradeOptions {
                keep_unconsolidated: true,
            },
        )
        .unwrap();
        assert!(r.binning.len() < w.len());
        assert!(r.diagnostics.boosts > 0);
        let restored = r.upgraded.compose(&r.intermediate).unwrap();
        for y in 0..w.len() {
            for x in 0..2 {
                assert!((restored.prob(y, x) - w.prob(y, x)).abs() < 1e-10);
            }
        }
        assert!(r.intermediate.stochastic_defect() < 1e-9);
        let lost: f64 = w.prior().iter().zip(&r.epsilons).map(|(p, e)| p * e).sum();
        assert!(lost <= boost_mass_bound(2, 5.0) + 1e-10);
        assert!(r.diagnostics.gap >= -1e-9 && r.diagnostics.gap <= r.diagnostics.bound + 1e-9);
        let qq = r.unconsolidated.unwrap();
        assert!((qq.sum_rate() - r.upgraded.sum_rate()).abs() < 1e-10);
    }

    #[test]
    fn degrade_sandwich() {
        let w = ch_a();
        let d = degrade(&w, 5.0).unwrap();
        assert!(d.sum_rate() <= w.sum_rate() + 1e-9);
        let u = upgrade(&w, 5.0).unwrap().upgraded;
        assert!(w.sum_rate() <= u.sum_rate() + 1e-9);

        let one = RegionPartition::from_boundaries(5.0, vec![0.0, 1.0]).unwrap();
        let collapsed = degrade_with_partition(&w, &one).unwrap();
        assert_eq!(collapsed.degraded.len(), 1);
        assert_eq!(collapsed.degraded.sum_rate(), 0.0);
        assert_eq!(w.compose(&collapsed.map).unwrap(), collapsed.degraded);
    }

    #[test]
    fn bound_decreases_with_mu() {
        for q in 2..6 {
            let mut mu = min_mu(q);
            for _ in 0..10 {
                assert!(rate_gap_bound(q, 2.0 * mu) <= rate_gap_bound(q, mu));
                mu *= 2.0;
            }
        }
        assert!((rate_gap_bound(2, 5.0) - 0.2 * (2.0 + 2.0 * 2f64.ln())).abs() < 1e-15);
        assert!((rate_gap_bound(2, 5.0) - 0.67726).abs() < 1e-5);
    }
}
