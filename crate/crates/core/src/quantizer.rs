//! Quantization of `[0, 1]` into regions of bounded `eta` variation.
//!
//! Starting from `b_1 = 0`, each region is widened until either its width or
//! the change of `eta(p) = -p ln p` across it reaches `1/mu`. Region indices
//! are 1-based, as are the `b_i`.

use serde::Serialize;

use crate::channel::eta_unchecked;
use crate::error::{Error, Result};

/// Smallest admissible fidelity parameter.
pub const MIN_MU: f64 = 5.0;

/// `1/e^2`, the point where `eta'` crosses 1.
pub fn inv_e2() -> f64 {
    (-2.0f64).exp()
}

/// The partition `0 = b_1 < b_2 < ... < b_{M+1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    mu: f64,
    boundaries: Vec<f64>,
    widths: Vec<f64>,
}

impl RegionPartition {
    /// Builds the partition for fidelity `mu >= 5`.
    pub fn build(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= MIN_MU) {
            return Err(Error::MuTooSmall { mu, min: MIN_MU });
        }
        let step = 1.0 / mu;
        let mut boundaries = vec![0.0];
        let mut b = 0.0f64;
        while b < 1.0 {
            let cap = (b + step).min(1.0);
            let base = eta_unchecked(b);
            let next = if (eta_unchecked(cap) - base).abs() <= step {
                cap
            } else {
                // eta is increasing here and overshoots at `cap`: find the
                // largest p with eta(p) - eta(b) <= 1/mu.
                let (mut lo, mut hi) = (b, cap);
                loop {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break lo;
                    }
                    if (eta_unchecked(mid) - base).abs() <= step {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            };
            if next <= b {
                return Err(Error::Internal(format!("partition stalled at {b}")));
            }
            boundaries.push(next);
            b = next;
        }
        Ok(Self::with_boundaries(mu, boundaries))
    }

    /// Wraps externally supplied boundaries (for diagnostics and tests).
    pub fn from_boundaries(mu: f64, boundaries: Vec<f64>) -> Result<Self> {
        let ok = boundaries.len() >= 2
            && boundaries[0] == 0.0
            && *boundaries.last().unwrap() == 1.0
            && boundaries.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidChannel(
                "boundaries must increase strictly from 0 to 1".into(),
            ));
        }
        Ok(Self::with_boundaries(mu, boundaries))
    }

    fn with_boundaries(mu: f64, boundaries: Vec<f64>) -> Self {
        let widths = boundaries.windows(2).map(|w| w[1] - w[0]).collect();
        RegionPartition {
            mu,
            boundaries,
            widths,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Number of regions `M`.
    pub fn regions(&self) -> usize {
        self.widths.len()
    }

    /// `b_1, ..., b_{M+1}`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// `Delta_i = b_{i+1} - b_i`, indexed from 0.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Width of the 1-based region `i`.
    pub fn width(&self, region: u32) -> f64 {
        self.widths[region as usize - 1]
    }

    /// 1-based region of `x`: `b_i <= x < b_{i+1}`, with `1` in region `M`.
    pub fn region_of(&self, x: f64) -> Result<u32> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::ProbabilityOutOfRange(x));
        }
        Ok(self.region_of_unchecked(x))
    }

    #[inline]
    pub(crate) fn region_of_unchecked(&self, x: f64) -> u32 {
        let k = self.boundaries.partition_point(|&b| b <= x);
        k.clamp(1, self.regions()) as u32
    }

    /// Per-region table rows: `(i, b_i, b_{i+1}, width, eta increment)`.
    pub fn table(&self) -> Vec<RegionRow> {
        self.boundaries
            .windows(2)
            .enumerate()
            .map(|(i, w)| RegionRow {
                index: i + 1,
                left: w[0],
                right: w[1],
                width: w[1] - w[0],
                eta_increment: eta_unchecked(w[1]) - eta_unchecked(w[0]),
            })
            .collect()
    }

    /// Checks the structural guarantees of the partition.
    pub fn check(&self) -> PartitionReport {
        let step = 1.0 / self.mu;
        let m = self.regions();
        let rows = self.table();
        let inner = &rows[..m.saturating_sub(1)];
        let mut checks = Vec::new();

        let ordered = self.boundaries.first() == Some(&0.0)
            && self.boundaries.last() == Some(&1.0)
            && self.boundaries.windows(2).all(|w| w[0] < w[1]);
        checks.push(PartitionCheck::flag("boundaries_ordered", ordered));

        // Each inner region has both increments <= 1/mu and one of them equal.
        let mut worst_excess = f64::NEG_INFINITY;
        let mut worst_gap = 0.0f64;
        for r in inner {
            worst_excess = worst_excess
                .max(r.width - step)
                .max(r.eta_increment.abs() - step);
            let gap = (r.width - step)
                .abs()
                .min((r.eta_increment.abs() - step).abs());
            worst_gap = worst_gap.max(gap);
        }
        if inner.is_empty() {
            worst_excess = 0.0;
        }
        checks.push(PartitionCheck::bounded(
            "increments_within_step",
            worst_excess.max(0.0),
            1e-10,
        ));
        checks.push(PartitionCheck::bounded(
            "increment_dichotomy",
            worst_gap,
            1e-10,
        ));

        let e2 = inv_e2();
        let left = inner
            .iter()
            .filter(|r| r.right < e2)
            .map(|r| (r.eta_increment - step).abs())
            .fold(0.0, f64::max);
        checks.push(PartitionCheck::bounded(
            "vertical_step_below_inv_e2",
            left,
            1e-10,
        ));
        let right = inner
            .iter()
            .filter(|r| r.left >= e2)
            .map(|r| (r.width - step).abs())
            .fold(0.0, f64::max);
        checks.push(PartitionCheck::bounded(
            "horizontal_step_above_inv_e2",
            right,
            1e-12,
        ));

        checks.push(PartitionCheck {
            name: "region_count_at_most_2mu".into(),
            pass: (m as f64) <= 2.0 * self.mu,
            measured: m as f64,
            bound: 2.0 * self.mu,
        });

        let drop = self.widths[..m.saturating_sub(1)]
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max);
        checks.push(PartitionCheck::bounded("nondecreasing_widths", drop, 1e-12));

        PartitionReport {
            mu: self.mu,
            regions: m,
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    pub index: usize,
    pub left: f64,
    pub right: f64,
    pub width: f64,
    pub eta_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCheck {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
}

impl PartitionCheck {
    fn bounded(name: &str, measured: f64, bound: f64) -> Self {
        PartitionCheck {
            name: name.into(),
            pass: measured <= bound,
            measured,
            bound,
        }
    }

    fn flag(name: &str, pass: bool) -> Self {
        PartitionCheck {
            name: name.into(),
            pass,
            measured: if pass { 0.0 } else { 1.0 },
            bound: 0.0,
        }
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.measured
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    pub mu: f64,
    pub regions: usize,
    pub pass: bool,
    pub checks: Vec<PartitionCheck>,
}
