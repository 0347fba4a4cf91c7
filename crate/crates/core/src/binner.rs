//! Grouping of output letters by the regions of their posteriors.
//!
//! Two letters share a bin when, for every input, their posteriors fall in
//! the same quantization region. Each bin becomes one merged letter with its
//! own posterior measure `psi`: the in-bin minimum for every input except the
//! leading one, which takes the complement.

use std::collections::BTreeMap;

use crate::channel::Mac;
use crate::error::{Error, Result};
use crate::quantizer::RegionPartition;

/// Region index of the posterior of each input, in flattened input order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinKey(Box<[u32]>);

impl BinKey {
    pub fn new(regions: Vec<u32>) -> Self {
        BinKey(regions.into_boxed_slice())
    }

    pub fn regions(&self) -> &[u32] {
        &self.0
    }
}

impl std::fmt::Display for BinKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(")")
    }
}

/// One merged output letter.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub key: BinKey,
    /// Original letter indices, ascending.
    pub members: Vec<usize>,
    /// `x*`: input with the largest posterior anywhere in the bin.
    pub leading_input: usize,
    /// `y*`: member attaining that posterior.
    pub leading_output: usize,
    /// `psi(.|z)`.
    pub psi: Vec<f64>,
}

/// Result of binning a channel: bins in key order plus cached posteriors.
#[derive(Debug, Clone)]
pub struct Binning {
    bins: Vec<Bin>,
    bin_of: Vec<u32>,
    apps: Vec<f64>,
    inputs: usize,
}

impl Binning {
    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn into_bins(self) -> Vec<Bin> {
        self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Index (into [`Binning::bins`]) of the bin containing letter `y`.
    pub fn bin_of(&self, y: usize) -> usize {
        self.bin_of[y] as usize
    }

    /// Cached `phi(.|y)`.
    pub fn app(&self, y: usize) -> &[f64] {
        &self.apps[y * self.inputs..(y + 1) * self.inputs]
    }

    /// Label of the merged letter for bin `k`.
    pub fn label(k: usize) -> String {
        format!("z{k}")
    }
}

/// `q^2 (2 mu)^(q-1)`, the bound on the number of non-empty bins.
pub fn bin_count_bound(inputs: usize, mu: f64) -> f64 {
    let q = inputs as f64;
    q * q * (2.0 * mu).powi(inputs as i32 - 1)
}

/// Region-index vector of letter `y`.
pub fn bin_key(mac: &Mac, part: &RegionPartition, y: usize) -> Result<BinKey> {
    let app = mac.app(y)?;
    Ok(BinKey::new(
        app.iter().map(|&p| part.region_of_unchecked(p)).collect(),
    ))
}

/// Bins every letter of a purged channel.
pub fn build_bins(mac: &Mac, part: &RegionPartition) -> Result<Binning> {
    let q = mac.inputs();
    let n = mac.len();
    let apps = mac.all_apps()?;

    // Provisional ids in order of first appearance, ranked by key afterwards.
    let mut index: BTreeMap<Box<[u32]>, u32> = BTreeMap::new();
    let mut provisional = Vec::with_capacity(n);
    let mut scratch = vec![0u32; q];
    for app in apps.chunks_exact(q) {
        for (k, &p) in scratch.iter_mut().zip(app) {
            *k = part.region_of_unchecked(p);
        }
        let id = match index.get(&scratch[..]) {
            Some(&id) => id,
            None => {
                let id = index.len() as u32;
                index.insert(scratch.clone().into_boxed_slice(), id);
                id
            }
        };
        provisional.push(id);
    }

    let bound = bin_count_bound(q, part.mu());
    if index.len() as f64 > bound {
        return Err(Error::Internal(format!(
            "{} non-empty bins exceed the bound {bound}",
            index.len()
        )));
    }

    let nb = index.len();
    let mut rank = vec![0u32; nb];
    let mut keys = Vec::with_capacity(nb);
    for (r, (key, id)) in index.into_iter().enumerate() {
        rank[id as usize] = r as u32;
        keys.push(key);
    }
    let bin_of: Vec<u32> = provisional.iter().map(|&id| rank[id as usize]).collect();
    drop(provisional);

    // One pass in letter order: per bin and input, the largest posterior
    // (first letter attaining it) and the smallest.
    let mut members = vec![Vec::new(); nb];
    let mut high = vec![f64::NEG_INFINITY; nb * q];
    let mut high_at = vec![0usize; nb * q];
    let mut low = vec![f64::INFINITY; nb * q];
    for (y, app) in apps.chunks_exact(q).enumerate() {
        let k = bin_of[y] as usize;
        members[k].push(y);
        let base = k * q;
        for (x, &p) in app.iter().enumerate() {
            if p > high[base + x] {
                high[base + x] = p;
                high_at[base + x] = y;
            }
            if p < low[base + x] {
                low[base + x] = p;
            }
        }
    }

    let mut bins = Vec::with_capacity(nb);
    for (k, (key, members)) in keys.into_iter().zip(members).enumerate() {
        let best = &high[k * q..(k + 1) * q];
        let mut leading_input = 0;
        for x in 1..q {
            if best[x] > best[leading_input] {
                leading_input = x;
            }
        }
        let top = key.iter().copied().max().unwrap_or(0);
        if key[leading_input] != top {
            return Err(Error::Internal(format!(
                "leading input {leading_input} of bin {k} is not in the leading region"
            )));
        }
        let mut psi = low[k * q..(k + 1) * q].to_vec();
        complement_leading(&mut psi, leading_input);
        bins.push(Bin {
            key: BinKey(key),
            members,
            leading_input,
            leading_output: high_at[k * q + leading_input],
            psi,
        });
    }
    Ok(Binning {
        bins,
        bin_of,
        apps,
        inputs: q,
    })
}

/// `(x*, y*)` for a set of letters. Ties go to the smallest input index, then
/// the smallest letter index.
pub fn leading_input(mac: &Mac, members: &[usize]) -> Result<(usize, usize)> {
    let apps = members
        .iter()
        .map(|&y| mac.app(y).map(|a| (y, a)))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<usize> = members.to_vec();
    sorted.sort_unstable();
    leading_from_apps(mac.inputs(), &sorted, |y| {
        &apps.iter().find(|(m, _)| *m == y).unwrap().1
    })
}

/// `psi(.|z)` for a set of letters with the given leading input.
pub fn psi(mac: &Mac, members: &[usize], leading: usize) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::EmptyBin);
    }
    if leading >= mac.inputs() {
        return Err(Error::DimensionMismatch(format!(
            "leading input {leading} out of range"
        )));
    }
    let apps = members
        .iter()
        .map(|&y| mac.app(y).map(|a| (y, a)))
        .collect::<Result<Vec<_>>>()?;
    Ok(psi_from_apps(members, leading, |y| {
        &apps.iter().find(|(m, _)| *m == y).unwrap().1
    }))
}

fn leading_from_apps<'a, F>(q: usize, members: &[usize], app: F) -> Result<(usize, usize)>
where
    F: Fn(usize) -> &'a [f64],
{
    let (&first, rest) = members.split_first().ok_or(Error::EmptyBin)?;
    let mut best = app(first).to_vec();
    for &y in rest {
        for (b, &p) in best.iter_mut().zip(app(y)) {
            if p > *b {
                *b = p;
            }
        }
    }
    let mut x_star = 0;
    for x in 1..q {
        if best[x] > best[x_star] {
            x_star = x;
        }
    }
    let mut y_star = first;
    for &y in rest {
        if app(y)[x_star] > app(y_star)[x_star] {
            y_star = y;
        }
    }
    Ok((x_star, y_star))
}

fn psi_from_apps<'a, F>(members: &[usize], leading: usize, app: F) -> Vec<f64>
where
    F: Fn(usize) -> &'a [f64],
{
    let mut psi = app(members[0]).to_vec();
    for &y in &members[1..] {
        for (m, &p) in psi.iter_mut().zip(app(y)) {
            if p < *m {
                *m = p;
            }
        }
    }
    complement_leading(&mut psi, leading);
    psi
}

/// Sets the leading coordinate to one minus the others.
fn complement_leading(psi: &mut [f64], leading: usize) {
    let others = crate::sum::compensated_sum(
        psi.iter()
            .enumerate()
            .filter(|&(x, _)| x != leading)
            .map(|(_, &p)| p),
    );
    psi[leading] = 1.0 - others;
}
