//! Polar-code construction harness for single-user channels.
//!
//! The synthetic channels of a length-`2^n` polar code are obtained by `n`
//! rounds of the minus/plus transforms. Their output alphabets grow doubly
//! exponentially, so after every transform the channel is replaced by its
//! degraded (lower bound) or upgraded (upper bound) approximation.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::Mac;
use crate::error::{Error, Result};
use crate::upgrader::{alphabet_bound, degrade, min_mu, upgrade};

fn check_harness_channel(w: &Mac) -> Result<()> {
    if w.users() != 1 {
        return Err(Error::Unsupported(format!(
            "polar transforms need a single-user channel, got {} users",
            w.users()
        )));
    }
    let u = 1.0 / w.inputs() as f64;
    if w.prior().iter().any(|&p| (p - u).abs() > 1e-12) {
        return Err(Error::Unsupported(
            "polar transforms need a uniform prior".into(),
        ));
    }
    Ok(())
}

/// `W-((y1,y2)|u1) = 1/q sum_{u2} W(y1|u1+u2) W(y2|u2)`, addition mod `q`.
pub fn transform_minus(w: &Mac) -> Result<Mac> {
    check_harness_channel(w)?;
    let q = w.inputs();
    let scale = 1.0 / q as f64;
    let mut letters = Vec::with_capacity(w.len() * w.len());
    for y1 in 0..w.len() {
        for y2 in 0..w.len() {
            let row = (0..q)
                .map(|u1| {
                    scale
                        * (0..q)
                            .map(|u2| w.prob(y1, (u1 + u2) % q) * w.prob(y2, u2))
                            .sum::<f64>()
                })
                .collect();
            letters.push((format!("({},{})", w.label(y1), w.label(y2)), row));
        }
    }
    Mac::new(1, q, w.prior().to_vec(), letters)?.purge_zero_outputs()
}

/// `W+((y1,y2,u1)|u2) = 1/q W(y1|u1+u2) W(y2|u2)`, addition mod `q`.
pub fn transform_plus(w: &Mac) -> Result<Mac> {
    check_harness_channel(w)?;
    let q = w.inputs();
    let scale = 1.0 / q as f64;
    let mut letters = Vec::with_capacity(w.len() * w.len() * q);
    for y1 in 0..w.len() {
        for y2 in 0..w.len() {
            for u1 in 0..q {
                let row = (0..q)
                    .map(|u2| scale * w.prob(y1, (u1 + u2) % q) * w.prob(y2, u2))
                    .collect();
                letters.push((format!("({},{},{u1})", w.label(y1), w.label(y2)), row));
            }
        }
    }
    Mac::new(1, q, w.prior().to_vec(), letters)?.purge_zero_outputs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Degrade,
    Upgrade,
}

/// Mutual information of every synthetic channel under one approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileHalf {
    pub mode: Mode,
    /// Indexed by synthetic channel; the first transform is the most
    /// significant bit (0 = minus, 1 = plus).
    pub rates: Vec<f64>,
    pub max_alphabet: usize,
}

fn approximate(w: &Mac, mu: f64, mode: Mode) -> Result<Mac> {
    let out = match mode {
        Mode::Degrade => degrade(w, mu)?,
        Mode::Upgrade => upgrade(w, mu)?.upgraded,
    };
    let bound = alphabet_bound(out.inputs(), mu);
    if out.len() as f64 > bound {
        return Err(Error::Internal(format!(
            "approximation has {} letters, bound is {bound}",
            out.len()
        )));
    }
    Ok(out)
}

/// Approximates `w`, then applies `levels` rounds of transforms, approximating
/// after every transform.
pub fn construct_profile(w: &Mac, levels: u32, mu: f64, mode: Mode) -> Result<ProfileHalf> {
    check_harness_channel(w)?;
    let min = min_mu(w.inputs());
    if mu.is_nan() || mu < min {
        return Err(Error::MuTooSmall { mu, min });
    }
    let root = approximate(w, mu, mode)?;
    let mut max_alphabet = root.len();
    let mut nodes = vec![root];
    for _ in 0..levels {
        let children: Vec<(Mac, Mac)> = nodes
            .par_iter()
            .map(|node| -> Result<(Mac, Mac)> {
                let minus = approximate(&transform_minus(node)?, mu, mode)?;
                let plus = approximate(&transform_plus(node)?, mu, mode)?;
                Ok((minus, plus))
            })
            .collect::<Result<_>>()?;
        nodes = children.into_iter().flat_map(|(m, p)| [m, p]).collect();
        max_alphabet = max_alphabet.max(nodes.iter().map(Mac::len).max().unwrap_or(0));
    }
    Ok(ProfileHalf {
        mode,
        rates: nodes.par_iter().map(Mac::sum_rate).collect(),
        max_alphabet,
    })
}

/// Lower and upper bounds on the mutual information of each synthetic channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarProfile {
    pub levels: u32,
    pub mu: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub max_alphabet: usize,
}

impl PolarProfile {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }
}

pub fn polar_profile(w: &Mac, levels: u32, mu: f64) -> Result<PolarProfile> {
    let (lo, hi) = rayon::join(
        || construct_profile(w, levels, mu, Mode::Degrade),
        || construct_profile(w, levels, mu, Mode::Upgrade),
    );
    let (lo, hi) = (lo?, hi?);
    Ok(PolarProfile {
        levels,
        mu,
        max_alphabet: lo.max_alphabet.max(hi.max_alphabet),
        lower: lo.rates,
        upper: hi.rates,
    })
}
