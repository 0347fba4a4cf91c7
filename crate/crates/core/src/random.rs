//! Seeded random channels for test corpora and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::channel::Mac;
use crate::error::{Error, Result};

fn dirichlet_one<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random `users`-user channel over `alphabet` symbols per user with
/// `outputs` letters.
///
/// The prior and every row `W(.|x)` are drawn from a flat Dirichlet; the
/// letters are then shuffled and the channel purged. Deterministic per seed.
pub fn gen_random(seed: u64, alphabet: usize, users: usize, outputs: usize) -> Result<Mac> {
    if outputs == 0 {
        return Err(Error::InvalidChannel(
            "at least one output letter is required".into(),
        ));
    }
    let q = alphabet
        .checked_pow(users as u32)
        .ok_or_else(|| Error::InvalidChannel("input alphabet too large".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = dirichlet_one(&mut rng, q);
    let mut probs = vec![0.0; outputs * q];
    for x in 0..q {
        for (y, p) in dirichlet_one(&mut rng, outputs).into_iter().enumerate() {
            probs[y * q + x] = p;
        }
    }
    let mut order: Vec<usize> = (0..outputs).collect();
    order.shuffle(&mut rng);
    let mut mixed = Vec::with_capacity(probs.len());
    for &y in &order {
        mixed.extend_from_slice(&probs[y * q..(y + 1) * q]);
    }
    let labels = (0..outputs).map(|y| format!("y{y}")).collect();
    Mac::from_parts(users, alphabet, prior, labels, mixed)?.purge_zero_outputs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            gen_random(42, 2, 1, 30).unwrap(),
            gen_random(42, 2, 1, 30).unwrap()
        );
        assert_ne!(
            gen_random(42, 2, 1, 30).unwrap(),
            gen_random(43, 2, 1, 30).unwrap()
        );
    }

    #[test]
    fn valid_and_purged() {
        let w = gen_random(1, 2, 1, 200).unwrap();
        assert_eq!(w.len(), 200);
        assert!(w.is_purged());
        let m = gen_random(1, 2, 2, 10).unwrap();
        assert_eq!(m.inputs(), 4);
        assert_eq!(m.users(), 2);
    }

    #[test]
    fn single_output_is_useless() {
        let w = gen_random(9, 3, 1, 1).unwrap();
        assert!(w.sum_rate().abs() < 1e-12);
        assert!(gen_random(9, 3, 1, 0).is_err());
    }
}
