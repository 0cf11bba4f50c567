//! Orbit partitions of tensor supports under coordinate-wise permutations.
//!
//! A support action is a finite set of generators, each a triple of index
//! permutations (one per axis) that maps the support onto itself. Restricting
//! the entropy program to distributions that are constant on the orbits of
//! the generated group loses nothing, because averaging a feasible
//! distribution over the group is again feasible and, by concavity, at least
//! as good. Orbits are computed by breadth-first closure on support points;
//! the full group is never materialized.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::tensor::{TensorSupport, Triple};

/// A permutation of `[n]`, stored as its image list.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// Validates that `images` is a bijection on `[images.len()]`.
    pub fn new(images: Vec<usize>) -> Result<Self, ActionError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &im in &images {
            if im >= n || seen[im] {
                return Err(ActionError::NotABijection);
            }
            seen[im] = true;
        }
        Ok(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &im)| i == im)
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }
}

/// One generator: a permutation per axis, applied coordinate-wise.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AxisPermutations {
    pub axes: [Permutation; 3],
}

impl AxisPermutations {
    pub fn apply(&self, p: &Triple) -> Triple {
        Triple::new(
            self.axes[0].apply(p.i),
            self.axes[1].apply(p.j),
            self.axes[2].apply(p.k),
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("permutation is not a bijection")]
    NotABijection,
    #[error("generator {generator} has wrong length on axis {axis}: {len} (dim {dim})")]
    LengthMismatch {
        generator: usize,
        axis: usize,
        len: usize,
        dim: usize,
    },
    #[error("generator {generator} maps support point {point:?} to {image:?}, which is not in the support")]
    NotPreservingSupport {
        generator: usize,
        point: Triple,
        image: Triple,
    },
    #[error("axes 2 and 3 have different dimensions ({0} vs {1})")]
    AxisDimMismatch(usize, usize),
    #[error("orbit partition does not match the support")]
    PartitionMismatch,
}

/// A finite group action on a support, given by generators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SupportAction {
    pub generators: Vec<AxisPermutations>,
}

impl SupportAction {
    pub fn trivial() -> Self {
        SupportAction { generators: Vec::new() }
    }

    /// Checks lengths against the support dims and that every generator maps
    /// the support onto itself.
    pub fn validate(&self, support: &TensorSupport) -> Result<(), ActionError> {
        for (gi, gen) in self.generators.iter().enumerate() {
            for ax in 0..3 {
                if gen.axes[ax].len() != support.dim(ax) {
                    return Err(ActionError::LengthMismatch {
                        generator: gi,
                        axis: ax,
                        len: gen.axes[ax].len(),
                        dim: support.dim(ax),
                    });
                }
            }
            for p in support.points() {
                let image = gen.apply(p);
                if !support.contains(&image) {
                    return Err(ActionError::NotPreservingSupport {
                        generator: gi,
                        point: *p,
                        image,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Disjoint orbits covering a support, ordered by lexicographically least
/// member; points within an orbit are sorted.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrbitPartition {
    orbits: Vec<Vec<Triple>>,
    point_to_orbit: BTreeMap<Triple, usize>,
}

impl OrbitPartition {
    pub fn orbits(&self) -> &[Vec<Triple>] {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbit_of(&self, p: &Triple) -> Option<usize> {
        self.point_to_orbit.get(p).copied()
    }

    /// True iff the orbits exactly partition `support`.
    pub fn matches(&self, support: &TensorSupport) -> bool {
        self.point_to_orbit.len() == support.len()
            && self.point_to_orbit.keys().all(|p| support.contains(p))
    }
}

/// Partitions `support` into orbits of the group generated by the action.
pub fn orbits(support: &TensorSupport, action: &SupportAction) -> Result<OrbitPartition, ActionError> {
    action.validate(support)?;

    let points: Vec<Triple> = support.points().copied().collect();
    let index: BTreeMap<Triple, usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, i))
        .collect();

    let mut assigned = vec![usize::MAX; points.len()];
    let mut orbit_list: Vec<Vec<Triple>> = Vec::new();
    // points iterate in sorted order, so each new orbit is discovered at its
    // lexicographically least member
    for start in 0..points.len() {
        if assigned[start] != usize::MAX {
            continue;
        }
        let orbit_id = orbit_list.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        assigned[start] = orbit_id;
        while let Some(cur) = stack.pop() {
            members.push(points[cur]);
            for gen in &action.generators {
                let image = gen.apply(&points[cur]);
                let ii = index[&image];
                if assigned[ii] == usize::MAX {
                    assigned[ii] = orbit_id;
                    stack.push(ii);
                }
            }
        }
        members.sort_unstable();
        orbit_list.push(members);
    }

    let mut point_to_orbit = BTreeMap::new();
    for (oi, orbit) in orbit_list.iter().enumerate() {
        for p in orbit {
            point_to_orbit.insert(*p, oi);
        }
    }
    Ok(OrbitPartition { orbits: orbit_list, point_to_orbit })
}

/// The standard symmetric-group action on a big or small CW support with
/// labels `0..=q+1` (or `0..=q`): permutes the label set `[q]` identically on
/// all three axes, fixing `0` and, when present, `q+1`.
///
/// Generators: the transposition `(1 2)` and the cycle `(1 2 .. q)`; both
/// degenerate to the identity for `q = 1`.
pub fn cw_standard_action(q: usize, axis_dim: usize) -> SupportAction {
    debug_assert!(axis_dim >= q + 1);
    let transposition: Vec<usize> = (0..axis_dim)
        .map(|i| match i {
            1 => 2.min(q),
            2 => {
                if q >= 2 {
                    1
                } else {
                    2
                }
            }
            other => other,
        })
        .collect();
    let cycle: Vec<usize> = (0..axis_dim)
        .map(|i| {
            if (1..=q).contains(&i) {
                if i == q {
                    1
                } else {
                    i + 1
                }
            } else {
                i
            }
        })
        .collect();
    let make = |images: Vec<usize>| {
        let p = Permutation::new(images).expect("constructed permutation is a bijection");
        AxisPermutations { axes: [p.clone(), p.clone(), p] }
    };
    SupportAction {
        generators: vec![make(transposition), make(cycle)],
    }
}

/// Convenience: the standard action for the big CW tensor with parameter `q`.
pub fn cw_big_action(q: usize) -> SupportAction {
    cw_standard_action(q, q + 2)
}

/// True iff swapping axes 2 and 3 maps the support onto itself; requires the
/// two axes to have equal dimension. Justifies restricting barrier searches
/// to weight vectors with equal last two entries.
pub fn axis_swap_symmetric(support: &TensorSupport) -> Result<bool, ActionError> {
    let (_, d1, d2) = support.dims();
    if d1 != d2 {
        return Err(ActionError::AxisDimMismatch(d1, d2));
    }
    Ok(support
        .points()
        .all(|p| support.contains(&Triple::new(p.i, p.k, p.j))))
}
