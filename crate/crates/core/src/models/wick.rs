//! Gaussian moments as permanent-like sums over pairings.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// `Σ_σ Π_i C[a_i, b_σ(i)]` over all permutations σ of `0..p`.
pub fn wick_permanent(c: &DMatrix<f64>, a: &[usize], b: &[usize]) -> Result<f64> {
    let p = a.len();
    if b.len() != p {
        return Err(invalid("sources and sinks must have equal length"));
    }
    if p > 8 {
        return Err(invalid("wick_permanent supports p <= 8"));
    }
    if a.iter().chain(b).any(|&x| x >= c.nrows() || x >= c.ncols()) {
        return Err(invalid("site index outside the matrix"));
    }
    let mut perm: alloc::vec::Vec<usize> = (0..p).collect();
    let mut total = 0.0;
    // Heap's algorithm.
    let mut stack = alloc::vec![0usize; p];
    let term = |perm: &[usize]| a.iter().zip(perm).map(|(&ai, &k)| c[(ai, b[k])]).product::<f64>();
    total += term(&perm);
    let mut i = 0;
    while i < p {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            total += term(&perm);
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.3, 0.2, 2.0, 0.5, 0.3, 0.5, 3.0])
    }

    #[test]
    fn small_cases() {
        let c = sample();
        assert_eq!(wick_permanent(&c, &[0], &[2]).unwrap(), 0.3);
        assert!((wick_permanent(&c, &[0, 0], &[1, 1]).unwrap() - 2.0 * 0.04).abs() < 1e-15);
        let g = wick_permanent(&c, &[0, 1], &[2, 1]).unwrap();
        assert!((g - (0.3 * 2.0 + 0.2 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn counts_all_permutations() {
        let ones = DMatrix::from_element(8, 8, 1.0);
        let idx: alloc::vec::Vec<usize> = (0..8).collect();
        assert_eq!(wick_permanent(&ones, &idx, &idx).unwrap(), 40320.0);
        assert_eq!(wick_permanent(&ones, &[], &[]).unwrap(), 1.0);
    }
}
