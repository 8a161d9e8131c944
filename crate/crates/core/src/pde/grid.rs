use crate::error::{Error, Result};
use crate::pde::domain::Domain;
use crate::scalar::Real;

/// Uniform node grid over a [`Domain`]; axis 0 varies fastest in linear indices.
///
/// Unused axes (beyond the domain dimension) carry a single node so every loop
/// can be written over three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    domain: Domain<T>,
    nodes: [usize; 3],
    spacing: [T; 3],
}

impl<T: Real> Grid<T> {
    /// Grid with `cells[a]` equal intervals along axis `a`.
    pub fn new(domain: Domain<T>, cells: &[usize]) -> Result<Self> {
        let d = domain.dim();
        if cells.len() != d {
            return Err(Error::GridMismatch(format!(
                "expected {d} cell counts, got {}",
                cells.len()
            )));
        }
        if cells.contains(&0) {
            return Err(Error::InvalidInput("cell counts must be positive".into()));
        }
        let mut nodes = [1usize; 3];
        let mut spacing = [T::one(); 3];
        for a in 0..d {
            nodes[a] = cells[a] + 1;
            spacing[a] = domain.extents()[a] / T::from_usize_lossy(cells[a]);
        }
        Ok(Self { domain, nodes, spacing })
    }

    /// Grid with spacing `h` on every axis; `h` must divide each extent.
    pub fn with_spacing(domain: Domain<T>, h: T) -> Result<Self> {
        if !(h.is_finite() && h > T::zero()) {
            return Err(Error::InvalidInput(format!("spacing must be positive, got {h}")));
        }
        let mut cells = Vec::with_capacity(domain.dim());
        for &l in domain.extents() {
            let c = (l / h).round();
            let rel = ((c * h - l) / l).abs();
            if c < T::one() || rel > T::lit(1e-6) {
                return Err(Error::GridMismatch(format!("spacing {h} does not divide extent {l}")));
            }
            cells.push(c.to_usize().unwrap_or(0));
        }
        Self::new(domain, &cells)
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Nodes per axis, padded with 1 for unused axes.
    pub fn nodes(&self) -> [usize; 3] {
        self.nodes
    }

    pub fn cells(&self) -> Vec<usize> {
        self.nodes[..self.dim()].iter().map(|n| n - 1).collect()
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim()]
    }

    pub fn h_max(&self) -> T {
        self.spacing().iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn h_min(&self) -> T {
        self.spacing().iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        i[0] + self.nodes[0] * (i[1] + self.nodes[1] * i[2])
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let i0 = idx % self.nodes[0];
        let rest = idx / self.nodes[0];
        [i0, rest % self.nodes[1], rest / self.nodes[1]]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> T {
        T::from_usize_lossy(i) * self.spacing[axis]
    }

    pub fn node_point(&self, idx: usize) -> Vec<T> {
        let m = self.multi_index(idx);
        (0..self.dim()).map(|a| self.coord(a, m[a])).collect()
    }

    /// True when the node lies on a face of the box.
    #[inline]
    pub fn on_boundary(&self, m: [usize; 3]) -> bool {
        (0..self.dim()).any(|a| m[a] == 0 || m[a] + 1 == self.nodes[a])
    }

    /// Per-axis trapezoid factors `h_a · c_a(i)`, with `c = 1/2` at the ends.
    pub(crate) fn axis_weights(&self) -> [Vec<T>; 3] {
        let half = T::lit(0.5);
        std::array::from_fn(|a| {
            let n = self.nodes[a];
            if a >= self.dim() {
                return vec![T::one(); n];
            }
            (0..n)
                .map(|i| {
                    if i == 0 || i + 1 == n {
                        self.spacing[a] * half
                    } else {
                        self.spacing[a]
                    }
                })
                .collect()
        })
    }

    /// Trapezoid quadrature weight of every node.
    pub fn weights(&self) -> Vec<T> {
        let w = self.axis_weights();
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.nodes[2] {
            for j in 0..self.nodes[1] {
                let wjk = w[1][j] * w[2][k];
                out.extend(w[0].iter().map(|&wi| wi * wjk));
            }
        }
        out
    }

    /// Same node layout and spacing over the same box.
    pub fn compatible(&self, other: &Grid<T>) -> bool {
        self.nodes == other.nodes && self.domain.same_box(&other.domain) && self.spacing == other.spacing
    }

    pub(crate) fn check_compatible(&self, other: &Grid<T>) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grids {:?} and {:?} differ",
                self.cells(),
                other.cells()
            )))
        }
    }
}
