//! Canonical block ranks p_0 ≥ p_1 ≥ … ≥ p_r of an operator pair presented in
//! canonical block layout, the local homogeneous dimension
//! D = Σ (2j+1) p_j, and the shifted drift obtained by zeroing every block
//! above the subdiagonal band.
//!
//! Inputs are assumed to already be in the canonical block layout; computing
//! the change of basis that brings an arbitrary admissible pair into that
//! layout is out of scope.

use crate::gramian::OperatorSpec;
use crate::linalg::{numerical_rank, psd_sqrt};
use nalgebra::DMatrix;
use thiserror::Error;

/// Relative Frobenius tolerance deciding whether a star block is zero.
pub const DEFAULT_STAR_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("canonical-form failure: Krylov rank increments {increments:?} are not positive, non-increasing and summing to {n}; check the rank tolerance and the block layout")]
    CanonicalForm { increments: Vec<usize>, n: usize },
    #[error("ranks {ranks:?} are inconsistent with dimension {n}")]
    Dimension { ranks: Vec<usize>, n: usize },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Block structure report: ranks, homogeneous dimension, dilation weights,
/// and the shifted drift.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub ranks: Vec<usize>,
    pub d: usize,
    /// Weight 2j+1 carried by block j under the anisotropic dilations.
    pub dilation_weights: Vec<usize>,
    pub b_bar: DMatrix<f64>,
    /// True when B equals its shifted drift, i.e. the equation is invariant
    /// under the anisotropic dilations.
    pub is_dilation_invariant: bool,
}

/// Block ranks as Krylov rank increments:
/// p_j = rank [A, …, B^j A] − rank [A, …, B^{j−1} A] with A = Q^{1/2}.
pub fn canonical_ranks(spec: &OperatorSpec, rel_tol: f64) -> Result<Vec<usize>, StructureError> {
    let n = spec.n();
    let a = psd_sqrt(spec.q(), 1e-12)?;
    let mut krylov = a.clone();
    let mut block = a;
    let mut prev = numerical_rank(&krylov, rel_tol);
    let mut increments = vec![prev];
    for _ in 1..n {
        block = spec.b() * &block;
        let mut grown = DMatrix::<f64>::zeros(n, krylov.ncols() + n);
        grown.view_mut((0, 0), (n, krylov.ncols())).copy_from(&krylov);
        grown
            .view_mut((0, krylov.ncols()), (n, n))
            .copy_from(&block);
        krylov = grown;
        let r = numerical_rank(&krylov, rel_tol);
        if r == prev {
            break;
        }
        increments.push(r - prev);
        prev = r;
    }
    let ok = prev == n
        && increments.windows(2).all(|w| w[0] >= w[1])
        && increments.iter().all(|&p| p >= 1);
    if !ok {
        return Err(StructureError::CanonicalForm { increments, n });
    }
    Ok(increments)
}

/// D = Σ_j (2j+1) ranks[j].
pub fn homogeneous_dimension(ranks: &[usize]) -> usize {
    assert!(!ranks.is_empty(), "ranks must be non-empty");
    assert!(
        ranks.iter().all(|&p| p > 0) && ranks.windows(2).all(|w| w[0] >= w[1]),
        "ranks must be positive and non-increasing"
    );
    ranks
        .iter()
        .enumerate()
        .map(|(j, &p)| (2 * j + 1) * p)
        .sum()
}

/// Keeps exactly the subdiagonal blocks B_j (sizes p_j x p_{j-1}) of B and
/// zeroes every star block. Returns the shifted drift and whether B already
/// coincides with it within `star_tol`.
pub fn shifted_drift(
    spec: &OperatorSpec,
    ranks: &[usize],
    star_tol: f64,
) -> Result<(DMatrix<f64>, bool), StructureError> {
    let n = spec.n();
    if ranks.iter().sum::<usize>() != n || ranks.is_empty() {
        return Err(StructureError::Dimension {
            ranks: ranks.to_vec(),
            n,
        });
    }
    let mut offsets = vec![0usize];
    for &p in ranks {
        offsets.push(offsets.last().unwrap() + p);
    }
    let b = spec.b();
    let mut b_bar = DMatrix::<f64>::zeros(n, n);
    for j in 1..ranks.len() {
        let (row0, rows) = (offsets[j], ranks[j]);
        let (col0, cols) = (offsets[j - 1], ranks[j - 1]);
        b_bar
            .view_mut((row0, col0), (rows, cols))
            .copy_from(&b.view((row0, col0), (rows, cols)));
    }
    let invariant = (b - &b_bar).norm() <= star_tol * (1.0 + b.norm());
    Ok((b_bar, invariant))
}

/// Convenience: ranks, D, weights and shifted drift in one report.
pub fn analyze_structure(spec: &OperatorSpec, rank_tol: f64) -> Result<StructureReport, StructureError> {
    let ranks = canonical_ranks(spec, rank_tol)?;
    let d = homogeneous_dimension(&ranks);
    let (b_bar, is_dilation_invariant) = shifted_drift(spec, &ranks, DEFAULT_STAR_TOL)?;
    let dilation_weights = (0..ranks.len()).map(|j| 2 * j + 1).collect();
    Ok(StructureReport {
        ranks,
        d,
        dilation_weights,
        b_bar,
        is_dilation_invariant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramian::{gramian_at, GramianMethod};
    use nalgebra::DMatrix;

    fn spec(n: usize, q: &[f64], b: &[f64]) -> OperatorSpec {
        OperatorSpec::new(
            DMatrix::from_row_slice(n, n, q),
            DMatrix::from_row_slice(n, n, b),
            "test",
        )
        .unwrap()
    }

    fn shift_chain(n: usize, k: usize) -> OperatorSpec {
        let mut q = DMatrix::<f64>::zeros(n, n);
        for i in 0..k {
            q[(i, i)] = 1.0;
        }
        let mut b = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            b[(i, i - 1)] = 1.0;
        }
        OperatorSpec::new(q, b, format!("fan-n{n}k{k}")).unwrap()
    }

    #[test]
    fn ranks_of_mixed_example() {
        let s = spec(
            3,
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        assert_eq!(canonical_ranks(&s, 1e-9).unwrap(), vec![2, 1]);
        assert_eq!(homogeneous_dimension(&[2, 1]), 5);
    }

    #[test]
    fn ranks_of_shift_chains() {
        assert_eq!(canonical_ranks(&shift_chain(4, 2), 1e-9).unwrap(), vec![2, 1, 1]);
        assert_eq!(canonical_ranks(&shift_chain(4, 1), 1e-9).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(canonical_ranks(&shift_chain(3, 3), 1e-9).unwrap(), vec![3]);
    }

    #[test]
    fn invertible_q_gives_single_block() {
        let s = spec(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(canonical_ranks(&s, 1e-9).unwrap(), vec![2]);
        assert_eq!(homogeneous_dimension(&[2]), 2);
    }

    #[test]
    fn dimension_table_for_shift_chains() {
        // D_n(k) = n + (n-k+1)(n-k)
        for n in 2..=4usize {
            for k in 1..=n {
                let ranks = canonical_ranks(&shift_chain(n, k), 1e-9).unwrap();
                let d = homogeneous_dimension(&ranks);
                assert_eq!(d, n + (n - k + 1) * (n - k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn kolmogorov_blocks_double_dimension() {
        for m in 1..=2usize {
            let n = 2 * m;
            let mut q = DMatrix::<f64>::zeros(n, n);
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..m {
                q[(i, i)] = 1.0;
                b[(m + i, i)] = 1.0;
            }
            let s = OperatorSpec::new(q, b, "kolmogorov").unwrap();
            let ranks = canonical_ranks(&s, 1e-9).unwrap();
            assert_eq!(ranks, vec![m, m]);
            assert_eq!(homogeneous_dimension(&ranks), 2 * n);
        }
    }

    #[test]
    fn shifted_drift_zeroes_star_blocks() {
        let s = spec(
            3,
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        let ranks = canonical_ranks(&s, 1e-9).unwrap();
        let (b_bar, invariant) = shifted_drift(&s, &ranks, DEFAULT_STAR_TOL).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        assert_eq!(b_bar, expected);
        assert!(!invariant);
    }

    #[test]
    fn pure_shift_is_dilation_invariant() {
        let s = shift_chain(3, 1);
        let ranks = canonical_ranks(&s, 1e-9).unwrap();
        let (b_bar, invariant) = shifted_drift(&s, &ranks, DEFAULT_STAR_TOL).unwrap();
        assert_eq!(&b_bar, s.b());
        assert!(invariant);
    }

    #[test]
    fn ranks_are_stable_under_drift_shift() {
        for s in [
            spec(
                3,
                &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            ),
            shift_chain(4, 2),
        ] {
            let ranks = canonical_ranks(&s, 1e-9).unwrap();
            let (b_bar, _) = shifted_drift(&s, &ranks, DEFAULT_STAR_TOL).unwrap();
            let shifted = s.with_drift(b_bar, "shifted").unwrap();
            assert_eq!(canonical_ranks(&shifted, 1e-9).unwrap(), ranks);
        }
    }

    #[test]
    fn shifted_drift_rejects_bad_ranks() {
        let s = shift_chain(3, 1);
        assert!(matches!(
            shifted_drift(&s, &[2, 2], DEFAULT_STAR_TOL),
            Err(StructureError::Dimension { .. })
        ));
    }

    #[test]
    fn dilation_scaling_law_for_invariant_drift() {
        // V(λ² t) = λ^{2D} V(t) when B is the shifted drift.
        for (s, lambda, t) in [
            (shift_chain(2, 1), 0.5f64, 0.1f64),
            (shift_chain(2, 1), 2.0, 1.0),
            (shift_chain(3, 1), 2.0, 0.1),
        ] {
            let ranks = canonical_ranks(&s, 1e-9).unwrap();
            let d = homogeneous_dimension(&ranks) as f64;
            let v1 = gramian_at(&s, t, GramianMethod::AugmentedExponential).unwrap().logdet;
            let v2 = gramian_at(&s, lambda * lambda * t, GramianMethod::AugmentedExponential)
                .unwrap()
                .logdet;
            let predicted = v1 + 2.0 * d * lambda.ln();
            assert!((v2 - predicted).abs() <= 1e-7 * (1.0 + v2.abs()));
        }
    }
}
