use crate::balls::config::BallConfig;
use crate::error::{Error, Result};
use crate::pde::domain::OuterBoundary;
use crate::pde::grid::Grid;
use crate::scalar::Real;

/// Smallest radius-to-spacing ratio accepted by [`rasterize`] for `α > 0`.
pub const MIN_RADIUS_RATIO: f64 = 4.0;

/// Pinned (`u = 0`) nodes of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObstacleMask {
    pinned: Vec<bool>,
    nodes: [usize; 3],
    interior_pinned: usize,
    outer: OuterBoundary,
}

impl ObstacleMask {
    /// Mask with only the outer boundary pinned (or nothing, for Neumann).
    pub fn empty<T: Real>(grid: &Grid<T>) -> Self {
        let outer = grid.domain().outer();
        let pinned = (0..grid.len())
            .map(|i| outer == OuterBoundary::Dirichlet && grid.on_boundary(grid.multi_index(i)))
            .collect();
        Self {
            pinned,
            nodes: grid.nodes(),
            interior_pinned: 0,
            outer,
        }
    }

    /// Builds a mask from an explicit pinned-node predicate on top of the outer rule.
    pub fn from_predicate<T: Real>(grid: &Grid<T>, pin: impl Fn(&[T]) -> bool) -> Self {
        let mut mask = Self::empty(grid);
        for idx in 0..grid.len() {
            if !mask.pinned[idx] && pin(&grid.node_point(idx)) {
                mask.pin(grid, idx);
            }
        }
        mask
    }

    fn pin<T: Real>(&mut self, grid: &Grid<T>, idx: usize) {
        if !self.pinned[idx] {
            self.pinned[idx] = true;
            if !grid.on_boundary(grid.multi_index(idx)) {
                self.interior_pinned += 1;
            }
        }
    }

    pub fn is_pinned(&self, idx: usize) -> bool {
        self.pinned[idx]
    }

    pub fn pinned(&self) -> &[bool] {
        &self.pinned
    }

    pub fn nodes(&self) -> [usize; 3] {
        self.nodes
    }

    pub fn outer(&self) -> OuterBoundary {
        self.outer
    }

    /// Pinned nodes off the outer faces.
    pub fn interior_pinned(&self) -> usize {
        self.interior_pinned
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned.iter().filter(|&&p| p).count()
    }

    pub fn free_count(&self) -> usize {
        self.pinned.len() - self.pinned_count()
    }

    /// True when every node pinned here is also pinned in `other`.
    pub fn is_subset_of(&self, other: &ObstacleMask) -> bool {
        self.nodes == other.nodes && self.pinned.iter().zip(&other.pinned).all(|(&a, &b)| !a || b)
    }

    pub fn union<T: Real>(&self, other: &ObstacleMask, grid: &Grid<T>) -> Result<ObstacleMask> {
        if self.nodes != other.nodes {
            return Err(Error::GridMismatch("masks on different grids".into()));
        }
        self.check_grid(grid)?;
        let mut out = self.clone();
        for (idx, &b) in other.pinned.iter().enumerate() {
            if b {
                out.pin(grid, idx);
            }
        }
        Ok(out)
    }

    pub(crate) fn check_grid<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        if self.nodes == grid.nodes() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "mask nodes {:?} vs grid nodes {:?}",
                self.nodes,
                grid.nodes()
            )))
        }
    }
}

/// Rasterizes the closed balls of `config` onto `grid`.
///
/// A node is pinned iff it lies within distance `r` of some center; outer
/// faces are pinned as well when the domain carries a Dirichlet tag. For
/// `α = 0` (points, legal only in one dimension) each center pins its
/// nearest node.
pub fn rasterize<T: Real>(config: &BallConfig<T>, grid: &Grid<T>) -> Result<ObstacleMask> {
    if !config.domain().same_box(grid.domain()) {
        return Err(Error::DomainMismatch(format!(
            "configuration box {:?} vs grid box {:?}",
            config.domain().extents(),
            grid.domain().extents()
        )));
    }
    let d = grid.dim();
    let r = config.radius();
    let mut mask = ObstacleMask::empty(grid);
    let nodes = grid.nodes();

    if r == T::zero() {
        if d >= 2 {
            return Err(Error::InvalidInput(
                "alpha = 0 has zero capacity in dimension two or more".into(),
            ));
        }
        let h = grid.spacing()[0];
        for c in config.centers() {
            let clamped = c[0].max(T::zero()).min(grid.domain().extents()[0]);
            let i = (clamped / h).round().to_usize().unwrap_or(0).min(nodes[0] - 1);
            mask.pin(grid, i);
        }
        return Ok(mask);
    }

    let ratio = r / grid.h_max();
    if ratio < T::lit(MIN_RADIUS_RATIO) {
        return Err(Error::Resolution {
            ratio: ratio.as_f64(),
            required: MIN_RADIUS_RATIO,
        });
    }

    // closed balls: accept nodes on the sphere up to rounding
    let reach = r + T::lit(1e-9) * grid.h_min();
    let reach2 = reach * reach;
    for c in config.centers() {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut empty = false;
        for a in 0..d {
            let h = grid.spacing()[a];
            let from = ((c[a] - reach) / h).ceil();
            let to = ((c[a] + reach) / h).floor();
            let last = T::from_usize_lossy(nodes[a] - 1);
            if to < T::zero() || from > last {
                empty = true;
                break;
            }
            lo[a] = from.max(T::zero()).to_usize().unwrap_or(0);
            hi[a] = to.min(last).to_usize().unwrap_or(0);
        }
        if empty {
            continue;
        }
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let m = [i, j, k];
                    let mut dist2 = T::zero();
                    for a in 0..d {
                        let e = grid.coord(a, m[a]) - c[a];
                        dist2 = dist2 + e * e;
                    }
                    if dist2 <= reach2 {
                        mask.pin(grid, grid.index(m));
                    }
                }
            }
        }
    }
    Ok(mask)
}
