use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cloud::{prepare, Prepared, Role, SampleCloud};
use super::ksg::{KsgEstimator, Permutation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub observed_cmi: f64,
    pub shuffle_quantile: f64,
    pub n_shuffles: usize,
    pub alpha: f64,
    pub significant: bool,
}

/// Zero-based index of the `(1 - alpha)` order statistic among `n` sorted
/// shuffle values: `ceil((1 - alpha) * n)`, clamped to `n - 1`.
pub fn shuffle_quantile_index(n: usize, alpha: f64) -> usize {
    // The small offset keeps e.g. 0.95 * 100 from landing on 95.000000001.
    let idx = ((1.0 - alpha) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    idx.min(n - 1)
}

impl KsgEstimator {
    /// Permutation test for `I(X; Y | Z) > 0`.
    ///
    /// The rows of `x` are permuted `n_shuffles` times as set by
    /// [`KsgEstimator::permutation`]; shuffle `i` draws from a ChaCha stream
    /// keyed by `(seed, i)`, so serial and parallel runs agree bit for bit.
    pub fn shuffle_significance(
        &self,
        x: &SampleCloud,
        y: &SampleCloud,
        z: &SampleCloud,
        n_shuffles: usize,
        alpha: f64,
        seed: u64,
    ) -> Result<SignificanceResult> {
        if n_shuffles < 20 {
            return Err(Error::Argument(format!(
                "need at least 20 shuffles, got {n_shuffles}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        self.check(&[x, y, z])?;
        let (px, py, pz) = (
            prepare(x, Role::X),
            prepare(y, Role::Y),
            prepare(z, Role::Z),
        );
        let n = x.len();
        let observed_cmi = self.estimate(&px, &py, Some(&pz), None);
        let neighborhoods = match self.permutation {
            Permutation::Local { neighbors } if pz.dim > 0 && neighbors >= 2 => Some(
                self.execution
                    .map_range(n, |i| nearest_in(&pz, i, neighbors.min(n))),
            ),
            _ => None,
        };
        let mut null = self.execution.map_range(n_shuffles, |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let perm = match &neighborhoods {
                Some(nb) => local_permutation(nb, &mut rng),
                None => {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                }
            };
            self.estimate(&px, &py, Some(&pz), Some(&perm))
        });
        null.sort_by(f64::total_cmp);
        let shuffle_quantile = null[shuffle_quantile_index(n_shuffles, alpha)];
        Ok(SignificanceResult {
            observed_cmi,
            shuffle_quantile,
            n_shuffles,
            alpha,
            significant: observed_cmi > shuffle_quantile,
        })
    }
}

/// The `m` nearest samples to `i` in max-norm, `i` itself included, ties
/// broken by index.
fn nearest_in(z: &Prepared, i: usize, m: usize) -> Vec<usize> {
    let zi = z.row(i);
    let mut d: Vec<(f64, usize)> = (0..z.n)
        .map(|j| {
            let dist = zi
                .iter()
                .zip(z.row(j))
                .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            (dist, j)
        })
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    d.select_nth_unstable_by(m - 1, by_dist);
    d.truncate(m);
    d.sort_by(by_dist);
    d.into_iter().map(|p| p.1).collect()
}

/// Permutation that gives each sample a source row drawn from its own
/// neighborhood when possible. Samples are visited in random order and take
/// a random unused neighbor; a sample whose neighbors are all taken gets a
/// random leftover row, so the result is always a permutation.
fn local_permutation(neighborhoods: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = neighborhoods.len();
    let mut visit: Vec<usize> = (0..n).collect();
    visit.shuffle(rng);
    let mut used = vec![false; n];
    let mut perm = vec![usize::MAX; n];
    let mut pending = Vec::new();
    for &i in &visit {
        let mut cand = neighborhoods[i].clone();
        cand.shuffle(rng);
        match cand.into_iter().find(|&j| !used[j]) {
            Some(j) => {
                used[j] = true;
                perm[i] = j;
            }
            None => pending.push(i),
        }
    }
    let mut free: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
    for i in pending {
        perm[i] = free.swap_remove(rng.random_range(0..free.len()));
    }
    perm
}

pub fn shuffle_significance(
    x: &SampleCloud,
    y: &SampleCloud,
    z: &SampleCloud,
    k: usize,
    n_shuffles: usize,
    alpha: f64,
    seed: u64,
) -> Result<SignificanceResult> {
    KsgEstimator::new(k).shuffle_significance(x, y, z, n_shuffles, alpha, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_index() {
        assert_eq!(shuffle_quantile_index(20, 0.05), 19);
        assert_eq!(shuffle_quantile_index(100, 0.05), 95);
        assert_eq!(shuffle_quantile_index(100, 0.5), 50);
        assert_eq!(shuffle_quantile_index(30, 0.001), 29);
    }

    #[test]
    fn local_permutation_is_a_permutation() {
        let nb: Vec<Vec<usize>> = (0..50)
            .map(|i| vec![i, (i + 1) % 50, (i + 49) % 50])
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = local_permutation(&nb, &mut rng);
        let local = p
            .iter()
            .enumerate()
            .filter(|(i, j)| nb[*i].contains(j))
            .count();
        assert!(local >= 40);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn nearest_includes_self_first() {
        let c = SampleCloud::from_values(&[0.0, 10.0, 1.0, 2.0, 30.0]).unwrap();
        let p = prepare(&c, Role::Z);
        assert_eq!(nearest_in(&p, 0, 3), vec![0, 2, 3]);
    }

    #[test]
    fn argument_errors() {
        let x = SampleCloud::from_values(&(0..30).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let z = SampleCloud::empty(30);
        assert!(shuffle_significance(&x, &x, &z, 3, 19, 0.05, 0).is_err());
        assert!(shuffle_significance(&x, &x, &z, 3, 20, 0.0, 0).is_err());
        assert!(shuffle_significance(&x, &x, &z, 3, 20, 1.0, 0).is_err());
    }
}
