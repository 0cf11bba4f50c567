//! The inner concave program: maximize a weighted sum of marginal entropies
//! over the probability simplex on a tensor support.
//!
//! The solver is entropic mirror ascent (exponentiated gradient) with step
//! `1 / sum(weights)`. The objective `sum_i w_i H(P_i)` is `sum(w)`-smooth
//! relative to negative entropy over the simplex, so the unit relative step
//! is monotone; no line search is needed. Convergence is certified by the
//! Frank-Wolfe duality gap `max_x grad(x) - <grad, m>`, which upper-bounds
//! the distance to the optimum of the concave program, so callers get
//! two-sided bounds `[value, value + gap]` on the true maximum.
//!
//! When an orbit partition is supplied the program is solved over
//! orbit-constant distributions only; by the concavity averaging argument
//! this does not change the optimum for support-preserving actions. All
//! logarithms are natural internally; reported values are in bits.

use thiserror::Error;

use crate::symmetry::OrbitPartition;
use crate::tensor::{TensorSupport, Triple};

pub(crate) const LN2: f64 = std::f64::consts::LN_2;

/// Default solver tolerance in bits.
pub const DEFAULT_TOL_BITS: f64 = 1e-9;
/// Hard iteration cap for a single solve.
pub const SOLVER_ITERATION_CAP: usize = 1_000_000;
/// Largest number of simplex grid nodes the brute-force oracle will visit.
pub const BRUTE_FORCE_NODE_CAP: u128 = 200_000_000;

const MASS_FLOOR: f64 = 1e-300;
const STALL_WINDOW: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (value {value_bits} bits, residual gap {gap_bits} bits)")]
    NonConvergence {
        value_bits: f64,
        gap_bits: f64,
        iterations: usize,
    },
    #[error("orbit partition does not match the support")]
    PartitionMismatch,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("grid step must lie in (0, 1), got {0}")]
    BadGridStep(f64),
    #[error("simplex grid has {nodes} nodes, exceeding the cap of {cap}")]
    GridTooLarge { nodes: u128, cap: u128 },
    #[error("distribution has {got} masses for a support of {expected} points")]
    LengthMismatch { got: usize, expected: usize },
    #[error("negative mass {0}")]
    NegativeMass(f64),
    #[error("masses sum to {0}, not 1")]
    NotNormalized(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ThetaError {
    #[error("theta components must be finite and nonnegative")]
    Invalid,
    #[error("theta sums to {0}, not 1")]
    NotNormalized(f64),
}

/// A probability vector on the three tensor axes.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Theta([f64; 3]);

impl Theta {
    /// Validates nonnegativity and normalization within `1e-12`, then stores
    /// the exactly renormalized vector.
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self, ThetaError> {
        let t = [t1, t2, t3];
        if t.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ThetaError::Invalid);
        }
        let sum: f64 = t.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ThetaError::NotNormalized(sum));
        }
        Ok(Theta([t1 / sum, t2 / sum, t3 / sum]))
    }

    /// `(t1, (1-t1)/2, (1-t1)/2)`.
    pub fn symmetric(t1: f64) -> Result<Self, ThetaError> {
        if !t1.is_finite() || !(0.0..=1.0).contains(&t1) {
            return Err(ThetaError::Invalid);
        }
        Ok(Theta([t1, (1.0 - t1) / 2.0, (1.0 - t1) / 2.0]))
    }

    pub fn uniform() -> Self {
        Theta([1.0 / 3.0; 3])
    }

    pub fn get(&self, ax: usize) -> f64 {
        self.0[ax]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }
}

/// A probability distribution on a support, stored as one mass per point in
/// the support's sorted point order. Orbit-constant distributions are plain
/// distributions whose masses happen to agree within each orbit.
#[derive(Clone, PartialEq, Debug)]
pub struct SupportDistribution {
    masses: Vec<f64>,
}

impl SupportDistribution {
    pub fn uniform(support: &TensorSupport) -> Self {
        let n = support.len();
        SupportDistribution { masses: vec![1.0 / n as f64; n] }
    }

    /// One mass per support point, in sorted point order; must be nonnegative
    /// and sum to 1 within `1e-9` (the stored masses are renormalized).
    pub fn from_point_masses(
        support: &TensorSupport,
        masses: &[f64],
    ) -> Result<Self, SolverError> {
        if masses.len() != support.len() {
            return Err(SolverError::LengthMismatch {
                got: masses.len(),
                expected: support.len(),
            });
        }
        if let Some(&bad) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(SolverError::NegativeMass(bad));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SolverError::NotNormalized(sum));
        }
        Ok(SupportDistribution {
            masses: masses.iter().map(|m| m / sum).collect(),
        })
    }

    /// Builds an orbit-constant distribution from one per-point mass per
    /// orbit, in the partition's orbit order.
    pub fn from_orbit_point_masses(
        support: &TensorSupport,
        partition: &OrbitPartition,
        per_point: &[f64],
    ) -> Result<Self, SolverError> {
        if !partition.matches(support) {
            return Err(SolverError::PartitionMismatch);
        }
        if per_point.len() != partition.len() {
            return Err(SolverError::LengthMismatch {
                got: per_point.len(),
                expected: partition.len(),
            });
        }
        let mut masses = vec![0.0; support.len()];
        for (idx, p) in support.points().enumerate() {
            let orbit = partition.orbit_of(p).expect("partition covers support");
            masses[idx] = per_point[orbit];
        }
        Self::from_point_masses(support, &masses)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Result of an inner maximization.
#[derive(Clone, Debug)]
pub struct EntropyReport {
    /// Feasible objective value in bits; the true maximum lies within
    /// `[value_bits, value_bits + gap_bits]`.
    pub value_bits: f64,
    /// Residual Frank-Wolfe gap in bits.
    pub gap_bits: f64,
    pub iterations: usize,
    pub marginals: [Vec<f64>; 3],
    pub distribution: SupportDistribution,
}

/// The three marginals of a distribution on a support.
pub fn marginals(dist: &SupportDistribution, support: &TensorSupport) -> [Vec<f64>; 3] {
    let (d0, d1, d2) = support.dims();
    let mut out = [vec![0.0; d0], vec![0.0; d1], vec![0.0; d2]];
    for (p, &m) in support.points().zip(dist.masses()) {
        out[0][p.i] += m;
        out[1][p.j] += m;
        out[2][p.k] += m;
    }
    out
}

fn entropy_nats(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// `sum_i theta_i H(P_i)` in bits, with `0 log 0 = 0`.
pub fn objective(dist: &SupportDistribution, support: &TensorSupport, theta: &Theta) -> f64 {
    let margs = marginals(dist, support);
    (0..3)
        .map(|ax| theta.get(ax) * entropy_nats(&margs[ax]))
        .sum::<f64>()
        / LN2
}

/// The objective evaluated on raw (possibly unnormalized) point masses, in
/// support point order. Used by finite-difference checks, which perturb
/// single coordinates off the simplex.
pub fn objective_unnormalized(support: &TensorSupport, theta: &Theta, masses: &[f64]) -> f64 {
    assert_eq!(masses.len(), support.len(), "mass vector length mismatch");
    let (d0, d1, d2) = support.dims();
    let mut margs = [vec![0.0; d0], vec![0.0; d1], vec![0.0; d2]];
    for (p, &m) in support.points().zip(masses) {
        margs[0][p.i] += m;
        margs[1][p.j] += m;
        margs[2][p.k] += m;
    }
    (0..3)
        .map(|ax| theta.get(ax) * entropy_nats(&margs[ax]))
        .sum::<f64>()
        / LN2
}

/// Gradient of the objective with respect to point masses, in nats:
/// `sum_i theta_i (-ln P_i(x_i) - 1)` at each support point. `None` marks a
/// boundary point (a zero marginal entry on an axis with positive weight),
/// where the derivative diverges.
pub fn objective_gradient(
    dist: &SupportDistribution,
    support: &TensorSupport,
    theta: &Theta,
) -> Vec<Option<f64>> {
    let margs = marginals(dist, support);
    support
        .points()
        .map(|p| {
            let mut g = 0.0;
            for ax in 0..3 {
                let w = theta.get(ax);
                if w == 0.0 {
                    continue;
                }
                let q = margs[ax][p.axis(ax)];
                if q <= 0.0 {
                    return None;
                }
                g += w * (-q.ln() - 1.0);
            }
            Some(g)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cell decomposition and the mirror-ascent kernel
// ---------------------------------------------------------------------------

/// Support points grouped into cells (orbits, or singletons when no
/// partition is given), with per-axis label multiplicities.
pub(crate) struct CellProgram {
    dims: (usize, usize, usize),
    /// per cell: member points
    cells: Vec<Vec<Triple>>,
    /// per axis, per cell: (label, count / |cell|) pairs
    axis_weights: [Vec<Vec<(usize, f64)>>; 3],
    /// per axis, per cell: (label, count) pairs with integer counts
    axis_counts: [Vec<Vec<(usize, u32)>>; 3],
}

impl CellProgram {
    pub(crate) fn new(
        support: &TensorSupport,
        partition: Option<&OrbitPartition>,
    ) -> Result<Self, SolverError> {
        let cells: Vec<Vec<Triple>> = match partition {
            Some(part) => {
                if !part.matches(support) {
                    return Err(SolverError::PartitionMismatch);
                }
                part.orbits().to_vec()
            }
            None => support.points().map(|p| vec![*p]).collect(),
        };
        let mut axis_weights: [Vec<Vec<(usize, f64)>>; 3] = Default::default();
        let mut axis_counts: [Vec<Vec<(usize, u32)>>; 3] = Default::default();
        for cell in &cells {
            let size = cell.len() as f64;
            for ax in 0..3 {
                let mut counts: Vec<(usize, u32)> = Vec::new();
                for p in cell {
                    let label = p.axis(ax);
                    match counts.iter_mut().find(|(l, _)| *l == label) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((label, 1)),
                    }
                }
                counts.sort_unstable();
                axis_weights[ax].push(
                    counts
                        .iter()
                        .map(|&(l, c)| (l, c as f64 / size))
                        .collect(),
                );
                axis_counts[ax].push(counts);
            }
        }
        Ok(CellProgram {
            dims: support.dims(),
            cells,
            axis_weights,
            axis_counts,
        })
    }

    pub(crate) fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn cell_sizes(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }

    fn build_marginals(&self, cell_mass: &[f64], margs: &mut [Vec<f64>; 3]) {
        for ax in 0..3 {
            margs[ax].iter_mut().for_each(|x| *x = 0.0);
            for (ci, entries) in self.axis_weights[ax].iter().enumerate() {
                let m = cell_mass[ci];
                for &(label, w) in entries {
                    margs[ax][label] += m * w;
                }
            }
        }
    }

    /// Expands cell masses to per-point masses in support point order.
    fn point_masses(&self, support: &TensorSupport, cell_mass: &[f64]) -> Vec<f64> {
        use std::collections::BTreeMap;
        let mut per_point: BTreeMap<Triple, f64> = BTreeMap::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            let w = cell_mass[ci] / cell.len() as f64;
            for p in cell {
                per_point.insert(*p, w);
            }
        }
        support
            .points()
            .map(|p| per_point.get(p).copied().unwrap_or(0.0))
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum StopReason {
    GapReached,
    Stalled,
    IterationCap,
}

pub(crate) struct WeightedOutcome {
    /// Feasible value of `sum_ax w_ax (H_nats(P_ax) - offset_ax)`.
    pub value_nats: f64,
    /// Frank-Wolfe gap in nats.
    pub gap_nats: f64,
    pub iterations: usize,
    pub point_masses: Vec<f64>,
    pub marginals: [Vec<f64>; 3],
    pub stop: StopReason,
}

/// Maximizes `sum_ax w_ax (H_nats(P_ax) - offset_ax)` over the (reduced)
/// simplex. Weights may be arbitrary nonnegative numbers; offsets shift the
/// per-axis entropies before weighting, which lets callers evaluate
/// ill-conditioned combinations without catastrophic cancellation.
pub(crate) fn maximize_weighted(
    support: &TensorSupport,
    partition: Option<&OrbitPartition>,
    weights: [f64; 3],
    offsets_nats: [f64; 3],
    tol_nats: f64,
    max_iter: usize,
) -> Result<WeightedOutcome, SolverError> {
    if !(tol_nats > 0.0) {
        return Err(SolverError::BadTolerance(tol_nats));
    }
    let prog = CellProgram::new(support, partition)?;
    let nc = prog.n_cells();
    let sizes = prog.cell_sizes();
    let total_points: usize = sizes.iter().sum();

    // uniform per point, hence size-proportional per cell
    let mut mass: Vec<f64> = sizes
        .iter()
        .map(|&s| s as f64 / total_points as f64)
        .collect();

    let (d0, d1, d2) = prog.dims;
    let mut margs = [vec![0.0; d0], vec![0.0; d1], vec![0.0; d2]];
    let mut grad = vec![0.0; nc];

    let wsum: f64 = weights.iter().sum();
    let value_of = |margs: &[Vec<f64>; 3]| -> f64 {
        (0..3)
            .map(|ax| weights[ax] * (entropy_nats(&margs[ax]) - offsets_nats[ax]))
            .sum()
    };

    if wsum <= 0.0 {
        prog.build_marginals(&mass, &mut margs);
        let value = value_of(&margs);
        let point_masses = prog.point_masses(support, &mass);
        return Ok(WeightedOutcome {
            value_nats: value,
            gap_nats: 0.0,
            iterations: 0,
            point_masses,
            marginals: margs,
            stop: StopReason::GapReached,
        });
    }

    let inv_step = 1.0 / wsum;
    let stall_tol = tol_nats / 100.0;
    let mut stall_anchor: Option<f64> = None;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut stop = StopReason::IterationCap;

    for it in 1..=max_iter {
        iterations = it;
        prog.build_marginals(&mass, &mut margs);

        // gradient wrt cell mass, up to a constant shift that cancels in
        // both the gap and the multiplicative update
        for (ci, g) in grad.iter_mut().enumerate() {
            let mut acc = 0.0;
            for ax in 0..3 {
                let w = weights[ax];
                if w == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for &(label, lw) in &prog.axis_weights[ax][ci] {
                    s += lw * -(margs[ax][label].max(MASS_FLOOR)).ln();
                }
                acc += w * s;
            }
            *g = acc;
        }

        let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let expected: f64 = grad.iter().zip(&mass).map(|(g, m)| g * m).sum();
        gap = gmax - expected;
        if gap <= tol_nats {
            stop = StopReason::GapReached;
            break;
        }

        if it % STALL_WINDOW == 1 {
            let v = value_of(&margs);
            if let Some(prev) = stall_anchor {
                if (v - prev).abs() <= stall_tol {
                    stop = StopReason::Stalled;
                    break;
                }
            }
            stall_anchor = Some(v);
        }

        let mut sum = 0.0;
        for (m, g) in mass.iter_mut().zip(&grad) {
            *m = (*m * ((g - gmax) * inv_step).exp()).max(MASS_FLOOR);
            sum += *m;
        }
        for m in mass.iter_mut() {
            *m /= sum;
        }
    }

    prog.build_marginals(&mass, &mut margs);
    let value = value_of(&margs);
    let point_masses = prog.point_masses(support, &mass);
    Ok(WeightedOutcome {
        value_nats: value,
        gap_nats: gap.max(0.0),
        iterations,
        point_masses,
        marginals: margs,
        stop,
    })
}

/// Maximizes `sum_i theta_i H(P_i)` over distributions on the support (or
/// over orbit-constant distributions when a partition is given) to within
/// `tol_bits` of the true maximum.
///
/// Stops when the first-order optimality gap drops below `tol_bits` or the
/// value changes by at most `tol_bits / 100` across 50 iterations; hitting
/// the iteration cap is an error that carries the best value and residual
/// gap found.
pub fn maximize_entropy(
    support: &TensorSupport,
    theta: &Theta,
    partition: Option<&OrbitPartition>,
    tol_bits: f64,
) -> Result<EntropyReport, SolverError> {
    if !(tol_bits > 0.0) {
        return Err(SolverError::BadTolerance(tol_bits));
    }
    let out = maximize_weighted(
        support,
        partition,
        theta.as_array(),
        [0.0; 3],
        tol_bits * LN2,
        SOLVER_ITERATION_CAP,
    )?;
    let report = EntropyReport {
        value_bits: out.value_nats / LN2,
        gap_bits: out.gap_nats / LN2,
        iterations: out.iterations,
        marginals: out.marginals,
        distribution: SupportDistribution { masses: out.point_masses },
    };
    if out.stop == StopReason::IterationCap {
        return Err(SolverError::NonConvergence {
            value_bits: report.value_bits,
            gap_bits: report.gap_bits,
            iterations: report.iterations,
        });
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn compositions(total: u128, parts: u128) -> Option<u128> {
    // C(total + parts - 1, parts - 1)
    let n = total + parts - 1;
    let k = parts - 1;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul(n - k + i)? / i;
    }
    Some(acc)
}

/// Exhaustive maximum of the objective over the rational grid of resolution
/// `grid_step` on the (reduced) simplex. Independent of the mirror-ascent
/// path: pure enumeration with table-driven entropy updates.
pub fn brute_force_max(
    support: &TensorSupport,
    theta: &Theta,
    partition: Option<&OrbitPartition>,
    grid_step: f64,
) -> Result<f64, SolverError> {
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(SolverError::BadGridStep(grid_step));
    }
    let prog = CellProgram::new(support, partition)?;
    let k_units = (1.0 / grid_step).round() as u64;
    if k_units == 0 {
        return Err(SolverError::BadGridStep(grid_step));
    }
    let m = prog.n_cells();
    let nodes = compositions(k_units as u128, m as u128)
        .ok_or(SolverError::GridTooLarge { nodes: u128::MAX, cap: BRUTE_FORCE_NODE_CAP })?;
    if nodes > BRUTE_FORCE_NODE_CAP {
        return Err(SolverError::GridTooLarge { nodes, cap: BRUTE_FORCE_NODE_CAP });
    }

    // common denominator L so every marginal entry is an integer count of 1/L
    let lcm_sizes = prog
        .cells
        .iter()
        .map(|c| c.len() as u64)
        .fold(1u64, |acc, s| acc / gcd(acc, s) * s);
    let scale = k_units
        .checked_mul(lcm_sizes)
        .filter(|&l| l <= 16_000_000)
        .ok_or(SolverError::GridTooLarge { nodes, cap: BRUTE_FORCE_NODE_CAP })?;

    // psi[j] = -(j/L) log2 (j/L)
    let psi: Vec<f64> = (0..=scale)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                let x = j as f64 / scale as f64;
                -x * x.log2()
            }
        })
        .collect();

    // per cell, per axis: (label, count units of 1/L added per 1/K of cell mass)
    let mut deltas: Vec<[Vec<(usize, u64)>; 3]> = Vec::with_capacity(m);
    for ci in 0..m {
        let size = prog.cells[ci].len() as u64;
        let per_unit = lcm_sizes / size;
        let mut cell_deltas: [Vec<(usize, u64)>; 3] = Default::default();
        for ax in 0..3 {
            cell_deltas[ax] = prog.axis_counts[ax][ci]
                .iter()
                .map(|&(label, c)| (label, c as u64 * per_unit))
                .collect();
        }
        deltas.push(cell_deltas);
    }
    // visit cells touching many labels first so the innermost levels are cheap
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&ci| {
        std::cmp::Reverse(
            (0..3).map(|ax| deltas[ci][ax].len()).sum::<usize>(),
        )
    });

    let (d0, d1, d2) = prog.dims;
    let counts = [vec![0u64; d0], vec![0u64; d1], vec![0u64; d2]];
    let th = theta.as_array();

    struct Walker<'a> {
        order: &'a [usize],
        deltas: &'a [[Vec<(usize, u64)>; 3]],
        psi: &'a [f64],
        counts: [Vec<u64>; 3],
        sums: [f64; 3],
        th: [f64; 3],
        best: f64,
    }

    impl Walker<'_> {
        fn apply(&mut self, ci: usize, units: u64, sign: i64) {
            for ax in 0..3 {
                for &(label, d) in &self.deltas[ci][ax] {
                    let c = &mut self.counts[ax][label];
                    let old = *c;
                    let new = if sign > 0 { old + d * units } else { old - d * units };
                    *c = new;
                    self.sums[ax] += self.psi[new as usize] - self.psi[old as usize];
                }
            }
        }

        fn recurse(&mut self, depth: usize, remaining: u64) {
            let ci = self.order[depth];
            if depth + 1 == self.order.len() {
                self.apply(ci, remaining, 1);
                let v = self.th[0] * self.sums[0]
                    + self.th[1] * self.sums[1]
                    + self.th[2] * self.sums[2];
                if v > self.best {
                    self.best = v;
                }
                self.apply(ci, remaining, -1);
                return;
            }
            for units in 0..=remaining {
                if units > 0 {
                    self.apply(ci, 1, 1);
                }
                self.recurse(depth + 1, remaining - units);
            }
            if remaining > 0 {
                self.apply(ci, remaining, -1);
            }
        }
    }

    let mut walker = Walker {
        order: &order,
        deltas: &deltas,
        psi: &psi,
        counts,
        sums: [0.0; 3],
        th,
        best: f64::NEG_INFINITY,
    };
    walker.recurse(0, k_units);
    Ok(walker.best)
}
