//! Sparse row-stochastic matrices used as post-processing channels.

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Tolerance on row sums when validating a transition.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// A channel from one output alphabet to another, stored row-compressed.
///
/// Row `r` is the distribution `P(. | r)` over the column letters.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl Transition {
    /// Starts an empty transition onto the given column letters.
    pub fn builder(col_labels: Vec<String>) -> TransitionBuilder {
        TransitionBuilder {
            inner: Transition {
                offsets: vec![0],
                cols: Vec::new(),
                vals: Vec::new(),
                row_labels: Vec::new(),
                col_labels,
            },
        }
    }

    /// Wraps row-compressed arrays; `offsets` has one entry per row plus one.
    pub(crate) fn from_csr(
        offsets: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Self {
        debug_assert_eq!(offsets.len(), row_labels.len() + 1);
        debug_assert_eq!(*offsets.last().unwrap(), cols.len());
        Transition {
            offsets,
            cols,
            vals,
            row_labels,
            col_labels,
        }
    }

    /// Identity transition over the given letters.
    pub fn identity(labels: &[String]) -> Self {
        let mut b = Transition::builder(labels.to_vec());
        for (i, l) in labels.iter().enumerate() {
            b.push_row(l.clone(), [(i, 1.0)]);
        }
        b.finish()
    }

    /// Builds from a dense row-major matrix, dropping exact zeros.
    pub fn from_dense(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        dense: &[Vec<f64>],
    ) -> Result<Self> {
        if dense.len() != row_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} row labels",
                dense.len(),
                row_labels.len()
            )));
        }
        let mut b = Transition::builder(col_labels);
        for (label, row) in row_labels.into_iter().zip(dense) {
            if row.len() != b.inner.col_labels.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row has {} entries, expected {}",
                    row.len(),
                    b.inner.col_labels.len()
                )));
            }
            b.push_row(
                label,
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c, v)),
            );
        }
        let t = b.finish();
        t.validate()?;
        Ok(t)
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Non-zero entries `(column, probability)` of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).filter(|&(cc, _)| cc == c).map(|(_, v)| v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest deviation of a row sum from 1 (and most negative entry).
    pub fn stochastic_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows() {
            let s = compensated_sum(self.row(r).map(|(_, v)| v));
            worst = worst.max((s - 1.0).abs());
            for (_, v) in self.row(r) {
                if v < 0.0 {
                    worst = worst.max(-v);
                }
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        for r in 0..self.rows() {
            let negative = self.row(r).any(|(_, v)| v < 0.0 || !v.is_finite());
            let sum = compensated_sum(self.row(r).map(|(_, v)| v));
            if negative || (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NonStochastic { row: r, sum });
            }
        }
        Ok(())
    }

    /// Dense copy, mainly for tests and small dumps.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|r| {
                let mut row = vec![0.0; self.cols()];
                for (c, v) in self.row(r) {
                    row[c] += v;
                }
                row
            })
            .collect()
    }

    /// Text serialization: one `col` line per column letter, then one `row`
    /// line per row listing `column:probability` pairs.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "TRANSITION");
        let _ = writeln!(out, "rows {}", self.rows());
        let _ = writeln!(out, "cols {}", self.cols());
        for l in &self.col_labels {
            let _ = writeln!(out, "col {l}");
        }
        for r in 0..self.rows() {
            let _ = write!(out, "row {}", self.row_labels[r]);
            for (c, v) in self.row(r) {
                let _ = write!(out, " {c}:{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, "TRANSITION")) => {}
            Some((n, _)) => return Err(perr(n, "expected TRANSITION header")),
            None => return Err(perr(0, "empty input")),
        }
        let mut header = |key: &str| -> Result<usize> {
            let (n, l) = lines.next().ok_or_else(|| perr(0, "unexpected end"))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(perr(n, &format!("expected `{key}`")));
            }
            it.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| perr(n, &format!("bad `{key}` value")))
        };
        let rows = header("rows")?;
        let cols = header("cols")?;
        let mut col_labels = Vec::with_capacity(cols);
        let mut b: Option<TransitionBuilder> = None;
        for (n, l) in lines {
            let mut it = l.split_whitespace();
            match it.next() {
                Some("col") if b.is_none() => col_labels.push(
                    it.next()
                        .ok_or_else(|| perr(n, "missing label"))?
                        .to_string(),
                ),
                Some("row") => {
                    let b = b.get_or_insert_with(|| Transition::builder(col_labels.clone()));
                    let label = it
                        .next()
                        .ok_or_else(|| perr(n, "missing label"))?
                        .to_string();
                    let mut entries = Vec::new();
                    for tok in it {
                        let (c, v) = tok.split_once(':').ok_or_else(|| perr(n, "bad entry"))?;
                        let c: usize = c.parse().map_err(|_| perr(n, "bad column"))?;
                        let v: f64 = v.parse().map_err(|_| perr(n, "bad probability"))?;
                        if c >= cols {
                            return Err(perr(n, "column out of range"));
                        }
                        entries.push((c, v));
                    }
                    b.push_row(label, entries);
                }
                _ => return Err(perr(n, "unexpected line")),
            }
        }
        if col_labels.len() != cols {
            return Err(perr(0, "column count mismatch"));
        }
        let t = b
            .unwrap_or_else(|| Transition::builder(col_labels))
            .finish();
        if t.rows() != rows {
            return Err(perr(0, "row count mismatch"));
        }
        Ok(t)
    }
}

pub struct TransitionBuilder {
    inner: Transition,
}

impl TransitionBuilder {
    pub fn push_row<I>(&mut self, label: String, entries: I)
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        for (c, v) in entries {
            debug_assert!(c < self.inner.col_labels.len());
            self.inner.cols.push(c as u32);
            self.inner.vals.push(v);
        }
        self.inner.offsets.push(self.inner.cols.len());
        self.inner.row_labels.push(label);
    }

    pub fn finish(self) -> Transition {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("l{i}")).collect()
    }

    #[test]
    fn identity_is_stochastic() {
        let t = Transition::identity(&labels(3));
        assert!(t.validate().is_ok());
        assert_eq!(t.get(1, 1), 1.0);
        assert_eq!(t.get(1, 0), 0.0);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = Transition::from_dense(labels(1), labels(2), &[vec![0.5, 0.4]]).unwrap_err();
        assert!(matches!(err, Error::NonStochastic { row: 0, .. }));
    }

    #[test]
    fn text_round_trip() {
        let t = Transition::from_dense(
            labels(2),
            labels(3),
            &[vec![0.1, 0.2, 0.7], vec![0.0, 1.0 / 3.0, 2.0 / 3.0]],
        )
        .unwrap();
        let back = Transition::parse(&t.to_text()).unwrap();
        assert_eq!(t, back);
    }
}
