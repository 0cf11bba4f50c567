//! Provable barrier bounds for rectangular matrix multiplication exponents.
//!
//! Fast matrix multiplication algorithms route the multiplication tensor
//! through an intermediate tensor (classically the Coppersmith-Winograd
//! family) and then through the diagonal "unit" tensors. Applying a
//! monotone, multiplicative tensor parameter to both reductions yields a
//! lower bound on every exponent upper bound such a route can produce: a
//! barrier. This crate evaluates those barriers through the upper support
//! functionals, whose inner optimization is a concave entropy maximization
//! over the tensor support.
//!
//! Modules:
//! - [`tensor`]: sparse tensors, constructors for the standard families,
//!   Kronecker/direct-sum combinators, and the text document format.
//! - [`symmetry`]: orbit partitions of supports under index permutations.
//! - [`entropy`]: the inner concave program, its mirror-ascent solver with
//!   certified gaps, and a grid-enumeration oracle.
//! - [`functionals`]: support-functional values on presentations, closed
//!   forms for matrix multiplication formats, and the rectangular symbol.
//! - [`barrier`]: the barrier expressions for the exponent curve, the dual
//!   exponent, catalytic variants, and mixed tensor sequences.

pub mod barrier;
pub mod entropy;
pub mod functionals;
pub mod symmetry;
pub mod tensor;

pub use barrier::{
    alpha_consistency_check, barrier_alpha, barrier_curve, barrier_mixed, barrier_omega,
    barrier_omega_at_theta, omega_from_alpha, BarrierError, BarrierQuery, BarrierResult,
    MethodLabel, MixedFactor, MixedRankMode, MixedSequence, RankMode, SearchConfig,
    SearchDiagnostics,
};
pub use entropy::{
    brute_force_max, marginals, maximize_entropy, objective, objective_gradient,
    objective_unnormalized, EntropyReport, SolverError, SupportDistribution, Theta, ThetaError,
    DEFAULT_TOL_BITS,
};
pub use functionals::{
    quasi_value, zeta_matmul_closed, zeta_min_over_presentations, zeta_upper, FunctionalError,
    FunctionalValue, Presentation,
};
pub use symmetry::{
    axis_swap_symmetric, cw_big_action, cw_standard_action, orbits, ActionError,
    AxisPermutations, OrbitPartition, Permutation, SupportAction,
};
pub use tensor::{
    builtin_rank, parse_tensor, serialize_tensor, BuiltinId, Coeff, DocumentError, IdError,
    RankRegistryEntry, Tensor, TensorError, TensorSupport, Triple,
};
