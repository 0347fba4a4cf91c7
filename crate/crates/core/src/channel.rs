//! Discrete memoryless multiple-access channels.
//!
//! A [`Mac`] with `t` users, each drawing from an alphabet of size `|X|`, is
//! treated as a single-input channel over the `q = |X|^t` flattened input
//! vectors. User 1 is the least significant digit of the flattened index.
//! All information quantities are in nats.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::transition::Transition;

/// Tolerance on the simplex constraints checked when a channel is built.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// `eta(p) = -p ln p`, with `eta(0) = 0`.
pub fn eta(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(eta_unchecked(p))
}

#[inline]
pub(crate) fn eta_unchecked(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Flattened index of a vector of per-user symbols (user 1 least significant).
pub fn flatten_input(alphabet: usize, symbols: &[usize]) -> Result<usize> {
    let mut index = 0usize;
    let mut scale = 1usize;
    for (user, &s) in symbols.iter().enumerate() {
        if s >= alphabet {
            return Err(Error::SymbolOutOfRange {
                user: user + 1,
                symbol: s,
                alphabet,
            });
        }
        index += s * scale;
        scale *= alphabet;
    }
    Ok(index)
}

/// Inverse of [`flatten_input`].
pub fn unflatten_input(alphabet: usize, users: usize, mut index: usize) -> Vec<usize> {
    (0..users)
        .map(|_| {
            let s = index % alphabet;
            index /= alphabet;
            s
        })
        .collect()
}

/// Posterior distribution of the flattened input given one output letter.
#[derive(Debug, Clone, PartialEq)]
pub struct AppVector(Vec<f64>);

impl AppVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for AppVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A `t`-user channel with a fixed input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Mac {
    users: usize,
    alphabet: usize,
    inputs: usize,
    prior: Vec<f64>,
    labels: Vec<String>,
    // letter-major: probs[y * inputs + x] = W(y|x)
    probs: Vec<f64>,
}

impl Mac {
    /// Builds and validates a channel from `(label, W(y|.))` records.
    pub fn new(
        users: usize,
        alphabet: usize,
        prior: Vec<f64>,
        letters: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let inputs = input_count(users, alphabet)?;
        let mut labels = Vec::with_capacity(letters.len());
        let mut probs = Vec::with_capacity(letters.len() * inputs);
        for (label, row) in letters {
            if row.len() != inputs {
                return Err(Error::InvalidChannel(format!(
                    "letter `{label}` has {} probabilities, expected {inputs}",
                    row.len()
                )));
            }
            labels.push(label);
            probs.extend(row);
        }
        Self::from_parts(users, alphabet, prior, labels, probs)
    }

    /// Builds from a letter-major flat probability array.
    pub fn from_parts(
        users: usize,
        alphabet: usize,
        prior: Vec<f64>,
        labels: Vec<String>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let mac = Self::from_parts_unchecked(users, alphabet, prior, labels, probs)?;
        mac.validate()?;
        Ok(mac)
    }

    pub(crate) fn from_parts_unchecked(
        users: usize,
        alphabet: usize,
        prior: Vec<f64>,
        labels: Vec<String>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let inputs = input_count(users, alphabet)?;
        if prior.len() != inputs {
            return Err(Error::InvalidChannel(format!(
                "prior has {} entries, expected {inputs}",
                prior.len()
            )));
        }
        if probs.len() != labels.len() * inputs {
            return Err(Error::InvalidChannel(format!(
                "{} probabilities for {} letters of {inputs} inputs",
                probs.len(),
                labels.len()
            )));
        }
        Ok(Mac {
            users,
            alphabet,
            inputs,
            prior,
            labels,
            probs,
        })
    }

    /// Single-user channel with a uniform prior, from dense `W(y|x)` rows.
    pub fn single_user_uniform(alphabet: usize, letters: Vec<(String, Vec<f64>)>) -> Result<Self> {
        Self::new(1, alphabet, vec![1.0 / alphabet as f64; alphabet], letters)
    }

    fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::InvalidChannel("no output letters".into()));
        }
        if let Some(&p) = self.prior.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidChannel(format!(
                "prior entry {p} is negative"
            )));
        }
        let total = compensated_sum(self.prior.iter().copied());
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidChannel(format!("prior sums to {total}")));
        }
        if let Some(i) = self
            .probs
            .iter()
            .position(|p| !(p.is_finite() && *p >= 0.0))
        {
            return Err(Error::InvalidChannel(format!(
                "W({}|x={}) = {} is negative",
                self.labels[i / self.inputs],
                i % self.inputs,
                self.probs[i]
            )));
        }
        for (x, s) in self.input_row_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidChannel(format!(
                    "transition probabilities for input {x} sum to {s}"
                )));
            }
        }
        Ok(())
    }

    fn input_row_sums(&self) -> Vec<f64> {
        let mut acc = vec![NeumaierSum::new(); self.inputs];
        for row in self.probs.chunks_exact(self.inputs) {
            for (a, &p) in acc.iter_mut().zip(row) {
                a.add(p);
            }
        }
        acc.iter().map(NeumaierSum::value).collect()
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Number of flattened inputs, `q = |X|^t`.
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Number of output letters.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, y: usize) -> &str {
        &self.labels[y]
    }

    /// `W(y|.)` for one letter.
    pub fn row(&self, y: usize) -> &[f64] {
        &self.probs[y * self.inputs..(y + 1) * self.inputs]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.probs.chunks_exact(self.inputs)
    }

    /// `W(y|x)`.
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.probs[y * self.inputs + x]
    }

    pub fn flatten_input(&self, symbols: &[usize]) -> Result<usize> {
        if symbols.len() != self.users {
            return Err(Error::WrongUserCount {
                expected: self.users,
                got: symbols.len(),
            });
        }
        flatten_input(self.alphabet, symbols)
    }

    fn check_letter(&self, y: usize) -> Result<()> {
        if y >= self.len() {
            return Err(Error::LetterOutOfRange {
                index: y,
                len: self.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn mass_of_row(&self, row: &[f64]) -> f64 {
        compensated_sum(self.prior.iter().zip(row).map(|(p, w)| p * w))
    }

    /// `p_W(y) = sum_x P(x) W(y|x)`.
    pub fn output_prob(&self, y: usize) -> Result<f64> {
        self.check_letter(y)?;
        Ok(self.mass_of_row(self.row(y)))
    }

    pub fn output_probs(&self) -> Vec<f64> {
        self.rows().map(|r| self.mass_of_row(r)).collect()
    }

    /// Posterior `phi(x|y)` of every input given letter `y`.
    pub fn app(&self, y: usize) -> Result<AppVector> {
        self.check_letter(y)?;
        let mut out = vec![0.0; self.inputs];
        if !self.app_into(y, &mut out) {
            return Err(Error::UnpurgedLetter(y));
        }
        Ok(AppVector(out))
    }

    /// Writes `phi(.|y)` into `out`; returns false on a zero-mass letter.
    #[inline]
    pub(crate) fn app_into(&self, y: usize, out: &mut [f64]) -> bool {
        let row = self.row(y);
        let mut denom = NeumaierSum::new();
        for ((o, p), w) in out.iter_mut().zip(&self.prior).zip(row) {
            *o = p * w;
            denom.add(*o);
        }
        let denom = denom.value();
        if denom <= 0.0 {
            return false;
        }
        for o in out.iter_mut() {
            *o = (*o / denom).min(1.0);
        }
        true
    }

    /// Posteriors of every letter, letter-major.
    pub(crate) fn all_apps(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.probs.len()];
        for (y, chunk) in out.chunks_exact_mut(self.inputs).enumerate() {
            if !self.app_into(y, chunk) {
                return Err(Error::UnpurgedLetter(y));
            }
        }
        Ok(out)
    }

    pub fn is_purged(&self) -> bool {
        self.rows().all(|r| self.mass_of_row(r) > 0.0)
    }

    /// Removes letters with zero output probability under the prior.
    pub fn purge_zero_outputs(&self) -> Result<Mac> {
        self.purge_with_threshold(0.0)
    }

    /// Removes letters with `p_W(y) <= threshold`.
    ///
    /// With the default zero threshold the rows of inputs with positive prior
    /// are untouched. Rows that lose mass (zero-prior inputs, or any input when
    /// `threshold > 0`) are renormalized over the remaining letters; a row left
    /// with no mass becomes uniform.
    pub fn purge_with_threshold(&self, threshold: f64) -> Result<Mac> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&y| self.mass_of_row(self.row(y)) > threshold)
            .collect();
        if keep.is_empty() {
            return Err(Error::DegenerateChannel);
        }
        if keep.len() == self.len() {
            return Ok(self.clone());
        }
        let labels = keep.iter().map(|&y| self.labels[y].clone()).collect();
        let mut probs = Vec::with_capacity(keep.len() * self.inputs);
        for &y in &keep {
            probs.extend_from_slice(self.row(y));
        }
        let mut mac = Mac::from_parts_unchecked(
            self.users,
            self.alphabet,
            self.prior.clone(),
            labels,
            probs,
        )?;
        mac.renormalize_rows();
        mac.validate()?;
        Ok(mac)
    }

    fn renormalize_rows(&mut self) {
        let sums = self.input_row_sums();
        let n = self.len();
        for (x, s) in sums.into_iter().enumerate() {
            if (s - 1.0).abs() <= f64::EPSILON * 4.0 {
                continue;
            }
            for y in 0..n {
                let cell = &mut self.probs[y * self.inputs + x];
                *cell = if s > 0.0 { *cell / s } else { 1.0 / n as f64 };
            }
        }
    }

    /// `H(X)` in nats.
    pub fn input_entropy(&self) -> f64 {
        compensated_sum(self.prior.iter().map(|&p| eta_unchecked(p)))
    }

    /// `R(W) = I(X;Y)` in nats, computed as `H(X) - sum_y p(y) H(X|Y=y)`.
    ///
    /// Zero-mass letters contribute nothing. Round-off is clamped to `[0, H(X)]`.
    pub fn sum_rate(&self) -> f64 {
        let hx = self.input_entropy();
        let mut cond = NeumaierSum::new();
        let mut buf = vec![0.0; self.inputs];
        for y in 0..self.len() {
            if !self.app_into(y, &mut buf) {
                continue;
            }
            let py = self.mass_of_row(self.row(y));
            cond.add(py * compensated_sum(buf.iter().map(|&p| eta_unchecked(p))));
        }
        (hx - cond.value()).clamp(0.0, hx)
    }

    /// `I(X_A; X_B, Y)` by brute force over the joint distribution.
    ///
    /// `a` and `b` are disjoint sets of zero-based user indices.
    pub fn partial_mutual_info(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        for &u in a.iter().chain(b) {
            if u >= self.users {
                return Err(Error::UserOutOfRange {
                    user: u,
                    users: self.users,
                });
            }
        }
        if let Some(&u) = a.iter().find(|u| b.contains(u)) {
            return Err(Error::OverlappingUserSets(u));
        }
        if a.is_empty() {
            return Ok(0.0);
        }
        let na = self.alphabet.pow(a.len() as u32);
        let nb = self.alphabet.pow(b.len() as u32);
        let digits: Vec<Vec<usize>> = (0..self.inputs)
            .map(|x| unflatten_input(self.alphabet, self.users, x))
            .collect();
        let project = |x: usize, set: &[usize]| -> usize {
            set.iter()
                .rev()
                .fold(0usize, |acc, &u| acc * self.alphabet + digits[x][u])
        };
        let xa: Vec<usize> = (0..self.inputs).map(|x| project(x, a)).collect();
        let xb: Vec<usize> = (0..self.inputs).map(|x| project(x, b)).collect();

        let mut marginal_a = vec![NeumaierSum::new(); na];
        for x in 0..self.inputs {
            marginal_a[xa[x]].add(self.prior[x]);
        }
        let ha = compensated_sum(marginal_a.iter().map(|s| eta_unchecked(s.value())));

        // H(X_A | X_B, Y) = sum_{y, xb} [ sum_{xa} eta(p(xa, xb, y)) - eta(p(xb, y)) ]
        let mut cond = NeumaierSum::new();
        let mut joint = vec![0.0; na * nb];
        for y in 0..self.len() {
            joint.iter_mut().for_each(|v| *v = 0.0);
            for (x, (&p, &w)) in self.prior.iter().zip(self.row(y)).enumerate() {
                joint[xb[x] * na + xa[x]] += p * w;
            }
            for block in joint.chunks_exact(na) {
                let m = compensated_sum(block.iter().copied());
                if m <= 0.0 {
                    continue;
                }
                cond.add(
                    compensated_sum(block.iter().map(|&v| eta_unchecked(v))) - eta_unchecked(m),
                );
            }
        }
        Ok((ha - cond.value()).clamp(0.0, ha))
    }

    /// Channel obtained by post-processing this channel's output through `p`.
    ///
    /// `p` has one row per letter of `self`; its columns become the letters of
    /// the result: `W(y|x) = sum_{y'} Q(y'|x) p(y|y')`.
    pub fn compose(&self, p: &Transition) -> Result<Mac> {
        if p.rows() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "transition has {} rows, channel has {} letters",
                p.rows(),
                self.len()
            )));
        }
        p.validate()?;
        let q = self.inputs;
        let mut acc = vec![NeumaierSum::new(); p.cols() * q];
        for src in 0..self.len() {
            let row = self.row(src);
            for (dst, v) in p.row(src) {
                for (a, &w) in acc[dst * q..(dst + 1) * q].iter_mut().zip(row) {
                    a.add(w * v);
                }
            }
        }
        let probs = acc.iter().map(NeumaierSum::value).collect();
        Mac::from_parts(
            self.users,
            self.alphabet,
            self.prior.clone(),
            p.col_labels().to_vec(),
            probs,
        )
    }

    /// Same channel with the letters permuted: letter `i` of the result is
    /// letter `order[i]` of `self`.
    pub fn permute_letters(&self, order: &[usize]) -> Result<Mac> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len()
            || order
                .iter()
                .any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::DimensionMismatch(
                "not a permutation of the letters".into(),
            ));
        }
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        let mut probs = Vec::with_capacity(self.probs.len());
        for &i in order {
            probs.extend_from_slice(self.row(i));
        }
        Mac::from_parts_unchecked(self.users, self.alphabet, self.prior.clone(), labels, probs)
    }
}

fn input_count(users: usize, alphabet: usize) -> Result<usize> {
    if users == 0 || alphabet == 0 {
        return Err(Error::InvalidChannel(
            "users and alphabet size must be positive".into(),
        ));
    }
    alphabet
        .checked_pow(users as u32)
        .filter(|&q| q <= u32::MAX as usize)
        .ok_or_else(|| Error::InvalidChannel("input alphabet too large".into()))
}
