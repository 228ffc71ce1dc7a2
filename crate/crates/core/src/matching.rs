//! Minimum-cost eigenvalue pairing.

use nalgebra::DMatrix;

use crate::C64;

/// Minimum-total-cost assignment of rows to distinct columns (`rows ≤ cols`).
/// Returns `assignment[row] = col`. O(rows²·cols) potentials method.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let m = cost.ncols();
    assert!(n <= m, "hungarian needs rows <= cols");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Optimal pairing between two equally sized eigenvalue multisets.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMatch {
    /// `partner[i]` is the index in the second list paired with `a[i]`.
    pub partner: Vec<usize>,
    /// `|a[i] − b[partner[i]]|`.
    pub distances: Vec<f64>,
}

impl SpectrumMatch {
    pub fn max_error(&self) -> f64 {
        self.distances.iter().cloned().fold(0.0, f64::max)
    }

    /// `sqrt(Σ |a_i − b_π(i)|²)`.
    pub fn root_sum_square(&self) -> f64 {
        self.distances.iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

/// Pair `a` with `b` minimising the total distance `Σ |a_i − b_π(i)|`.
pub fn match_spectra(a: &[C64], b: &[C64]) -> SpectrumMatch {
    assert_eq!(a.len(), b.len(), "spectra must have equal size");
    let cost = DMatrix::from_fn(a.len(), b.len(), |i, j| (a[i] - b[j]).norm());
    let partner = hungarian(&cost);
    let distances = partner.iter().enumerate().map(|(i, &j)| cost[(i, j)]).collect();
    SpectrumMatch { partner, distances }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &DMatrix<f64>) -> f64 {
        fn rec(cost: &DMatrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.nrows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.ncols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[(row, j)] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.ncols()])
    }

    #[test]
    fn classic_three_by_three() {
        let cost = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        assert_eq!(total, 5.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cost = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..10.0));
            let a = hungarian(&cost);
            let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            prop_assert!((total - brute_force(&cost)).abs() < 1e-9);
        }

        #[test]
        fn order_free(seed in 0u64..500) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<C64> = (0..7).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0))).collect();
            let b: Vec<C64> = a.iter().map(|z| z + C64::new(rng.gen_range(-1e-3..1e-3), 0.0)).collect();
            let mut shuffled = b.clone();
            shuffled.shuffle(&mut rng);
            let d1 = match_spectra(&a, &b).distances.iter().sum::<f64>();
            let d2 = match_spectra(&a, &shuffled).distances.iter().sum::<f64>();
            prop_assert!((d1 - d2).abs() < 1e-12);
        }
    }
}
