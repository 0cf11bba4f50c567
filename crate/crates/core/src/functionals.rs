//! Upper support functional values on tensor presentations.
//!
//! For a weight vector `theta` on the axes, the value of a presentation is
//! the maximum of `sum_i theta_i H(P_i)` over support distributions; the
//! functional itself is the minimum over basis changes of the presented
//! tensor. No basis search is performed here: the minimum is taken only over
//! presentations supplied by the caller. The resulting value is an upper
//! bound on the true functional, which keeps every downstream barrier valid
//! because the barrier expressions are antitone in it.

use thiserror::Error;

use crate::entropy::{maximize_entropy, SolverError, Theta};
use crate::symmetry::OrbitPartition;
use crate::tensor::TensorSupport;

#[derive(Debug, Error, PartialEq)]
pub enum FunctionalError {
    #[error("presentation list is empty")]
    EmptyPresentationList,
    #[error("orbit partition does not match the presentation support")]
    PartitionMismatch,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A named support presenting a tensor, optionally with an orbit partition
/// that reduces its entropy program.
#[derive(Clone, Debug)]
pub struct Presentation {
    pub id: String,
    pub support: TensorSupport,
    pub partition: Option<OrbitPartition>,
}

impl Presentation {
    pub fn new(id: impl Into<String>, support: TensorSupport) -> Self {
        Presentation { id: id.into(), support, partition: None }
    }

    pub fn with_partition(
        id: impl Into<String>,
        support: TensorSupport,
        partition: OrbitPartition,
    ) -> Result<Self, FunctionalError> {
        if !partition.matches(&support) {
            return Err(FunctionalError::PartitionMismatch);
        }
        Ok(Presentation {
            id: id.into(),
            support,
            partition: Some(partition),
        })
    }
}

/// A functional value in log2 scale, tagged with the presentation that
/// achieved it.
#[derive(Clone, Debug)]
pub struct FunctionalValue {
    pub log2_value: f64,
    /// Residual solver gap: the inner maximum lies within
    /// `[log2_value, log2_value + gap_bits]`.
    pub gap_bits: f64,
    pub theta: Theta,
    pub presentation_id: String,
}

/// The inner maximum of the support functional on one presentation, an upper
/// bound on the functional of the presented tensor.
pub fn zeta_upper(
    presentation: &Presentation,
    theta: &Theta,
    tol_bits: f64,
) -> Result<FunctionalValue, FunctionalError> {
    let report = maximize_entropy(
        &presentation.support,
        theta,
        presentation.partition.as_ref(),
        tol_bits,
    )?;
    Ok(FunctionalValue {
        log2_value: report.value_bits,
        gap_bits: report.gap_bits,
        theta: *theta,
        presentation_id: presentation.id.clone(),
    })
}

/// Closed form for matrix multiplication supports:
/// `(t1 + t3) log2 a + (t1 + t2) log2 b + (t2 + t3) log2 c`.
pub fn zeta_matmul_closed(a: usize, b: usize, c: usize, theta: &Theta) -> FunctionalValue {
    assert!(a >= 1 && b >= 1 && c >= 1, "matmul format must be positive");
    let t = theta.as_array();
    let log2_value = (t[0] + t[2]) * (a as f64).log2()
        + (t[0] + t[1]) * (b as f64).log2()
        + (t[1] + t[2]) * (c as f64).log2();
    FunctionalValue {
        log2_value,
        gap_bits: 0.0,
        theta: *theta,
        presentation_id: format!("mm:{a},{b},{c}"),
    }
}

/// Value of the formal rectangular symbol with real exponent `p`:
/// `2 t1 + t2 + t3 + p (t2 + t3)` in log2 scale. This is the product of the
/// closed-form values of the three elementary formats, the last raised to
/// the power `p`, and needs no tensor construction for non-integer `p`.
pub fn quasi_value(p: f64, theta: &Theta) -> FunctionalValue {
    assert!(p >= 0.0 && p.is_finite(), "exponent p must be finite and nonnegative");
    let t = theta.as_array();
    FunctionalValue {
        log2_value: 2.0 * t[0] + t[1] + t[2] + p * (t[1] + t[2]),
        gap_bits: 0.0,
        theta: *theta,
        presentation_id: format!("quasi:2,2,2^{p}"),
    }
}

/// Minimum of `zeta_upper` over a list of presentations of the same tensor.
pub fn zeta_min_over_presentations(
    presentations: &[Presentation],
    theta: &Theta,
    tol_bits: f64,
) -> Result<FunctionalValue, FunctionalError> {
    if presentations.is_empty() {
        return Err(FunctionalError::EmptyPresentationList);
    }
    let mut best: Option<FunctionalValue> = None;
    for pres in presentations {
        let v = zeta_upper(pres, theta, tol_bits)?;
        let better = match &best {
            None => true,
            Some(b) => v.log2_value + v.gap_bits < b.log2_value + b.gap_bits,
        };
        if better {
            best = Some(v);
        }
    }
    Ok(best.expect("nonempty list"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::DEFAULT_TOL_BITS;
    use crate::tensor::Tensor;
    use approx::assert_abs_diff_eq;

    fn pres(t: &Tensor, id: &str) -> Presentation {
        Presentation::new(id, t.support().clone())
    }

    #[test]
    fn diagonal_value_is_log_n() {
        for n in [2usize, 3, 7] {
            let t = Tensor::diagonal(n).unwrap();
            let v = zeta_upper(&pres(&t, "diag"), &Theta::uniform(), DEFAULT_TOL_BITS).unwrap();
            assert_abs_diff_eq!(v.log2_value, (n as f64).log2(), epsilon = 1e-9);
        }
    }

    #[test]
    fn mm222_uniform_theta_is_two() {
        let t = Tensor::matmul(2, 2, 2).unwrap();
        let v = zeta_upper(&pres(&t, "mm"), &Theta::uniform(), DEFAULT_TOL_BITS).unwrap();
        assert_abs_diff_eq!(v.log2_value, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_cases() {
        let theta = Theta::new(1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            zeta_matmul_closed(2, 1, 1, &theta).log2_value,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            zeta_matmul_closed(1, 1, 2, &theta).log2_value,
            0.0,
            epsilon = 1e-15
        );
        let v = zeta_matmul_closed(3, 4, 5, &Theta::uniform());
        let expected = (2.0 / 3.0) * (3f64.log2() + 4f64.log2() + 5f64.log2());
        assert_abs_diff_eq!(v.log2_value, expected, epsilon = 1e-12);
    }

    #[test]
    fn solver_matches_closed_form_on_matmul() {
        let theta = Theta::new(0.5, 0.2, 0.3).unwrap();
        for (a, b, c) in [(2usize, 3, 4), (4, 4, 4), (1, 2, 3)] {
            let t = Tensor::matmul(a, b, c).unwrap();
            let solved = zeta_upper(&pres(&t, "mm"), &theta, DEFAULT_TOL_BITS).unwrap();
            let closed = zeta_matmul_closed(a, b, c, &theta);
            assert_abs_diff_eq!(solved.log2_value, closed.log2_value, epsilon = 1e-6);
        }
    }

    #[test]
    fn quasi_values() {
        for theta in [Theta::uniform(), Theta::new(0.2, 0.5, 0.3).unwrap()] {
            assert_abs_diff_eq!(quasi_value(1.0, &theta).log2_value, 2.0, epsilon = 1e-12);
        }
        let t = Theta::new(1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(quasi_value(0.0, &t).log2_value, 2.0, epsilon = 1e-15);
        let t = Theta::new(0.14, 0.43, 0.43).unwrap();
        assert_abs_diff_eq!(quasi_value(2.0, &t).log2_value, 2.86, epsilon = 1e-12);
    }

    #[test]
    fn quasi_affine_nondecreasing_in_p() {
        let theta = Theta::new(0.3, 0.4, 0.3).unwrap();
        let v0 = quasi_value(0.0, &theta).log2_value;
        let v1 = quasi_value(1.0, &theta).log2_value;
        let v2 = quasi_value(2.0, &theta).log2_value;
        assert!(v1 > v0 && v2 > v1);
        assert_abs_diff_eq!(v2 - v1, v1 - v0, epsilon = 1e-12);

        // constant in p when the last two weights vanish
        let theta = Theta::new(1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            quasi_value(0.0, &theta).log2_value,
            quasi_value(3.0, &theta).log2_value,
            epsilon = 1e-15
        );
    }

    #[test]
    fn min_over_presentations() {
        let theta = Theta::uniform();
        let d3 = Tensor::diagonal(3).unwrap();

        let single = zeta_min_over_presentations(&[pres(&d3, "a")], &theta, DEFAULT_TOL_BITS)
            .unwrap();
        assert_abs_diff_eq!(single.log2_value, 3f64.log2(), epsilon = 1e-9);

        let dup = zeta_min_over_presentations(
            &[pres(&d3, "a"), pres(&d3, "b")],
            &theta,
            DEFAULT_TOL_BITS,
        )
        .unwrap();
        assert_abs_diff_eq!(dup.log2_value, 3f64.log2(), epsilon = 1e-9);
        assert_eq!(dup.presentation_id, "a");

        // a strictly larger equivalent support cannot lower the minimum
        // below the smaller presentation
        let mm = Tensor::matmul(2, 2, 2).unwrap();
        let bigger = Tensor::matmul(2, 2, 2)
            .unwrap()
            .direct_sum(&Tensor::diagonal(1).unwrap())
            .unwrap();
        let both = zeta_min_over_presentations(
            &[pres(&mm, "mm"), pres(&bigger, "mm-padded")],
            &theta,
            DEFAULT_TOL_BITS,
        )
        .unwrap();
        let alone = zeta_upper(&pres(&mm, "mm"), &theta, DEFAULT_TOL_BITS).unwrap();
        assert!(both.log2_value <= alone.log2_value + 1e-9);

        assert!(matches!(
            zeta_min_over_presentations(&[], &theta, DEFAULT_TOL_BITS),
            Err(FunctionalError::EmptyPresentationList)
        ));
    }

    #[test]
    fn monotone_under_support_inclusion() {
        let theta = Theta::new(0.25, 0.4, 0.35).unwrap();
        let small = Tensor::cw_small(2).unwrap();
        let big = Tensor::cw_big(2).unwrap();
        // same dims: embed the small support in the big dims
        let small_embedded = crate::tensor::TensorSupport::new(
            big.dims(),
            small.support().points().copied(),
        )
        .unwrap();
        let v_small = zeta_upper(
            &Presentation::new("small", small_embedded),
            &theta,
            DEFAULT_TOL_BITS,
        )
        .unwrap();
        let v_big = zeta_upper(&pres(&big, "big"), &theta, DEFAULT_TOL_BITS).unwrap();
        assert!(v_big.log2_value + 1e-9 >= v_small.log2_value);
    }
}
