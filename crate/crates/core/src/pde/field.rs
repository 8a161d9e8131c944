use crate::error::{Error, Result};
use crate::pde::grid::Grid;
use crate::scalar::Real;

/// Node values on a uniform [`Grid`]. Holds solutions, sources and densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Grid<T>, c: T) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.node_point(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    /// Trapezoid-rule integral over the box.
    pub fn integral(&self) -> T {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }

    /// Multilinear interpolation; `None` outside the closed box.
    pub fn interpolate(&self, point: &[T]) -> Option<T> {
        let d = self.grid.dim();
        if point.len() != d {
            return None;
        }
        let nodes = self.grid.nodes();
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        let tol = T::lit(1e-12);
        for a in 0..d {
            let h = self.grid.spacing()[a];
            let s = point[a] / h;
            let last = T::from_usize_lossy(nodes[a] - 1);
            if s < -tol || s > last + tol {
                return None;
            }
            let s = s.max(T::zero()).min(last);
            let mut i = s.floor().to_usize().unwrap_or(0);
            if i + 1 >= nodes[a] {
                i = nodes[a].saturating_sub(2);
            }
            base[a] = i;
            frac[a] = if nodes[a] > 1 {
                s - T::from_usize_lossy(i)
            } else {
                T::zero()
            };
        }
        let mut acc = T::zero();
        for corner in 0..(1usize << d) {
            let mut w = T::one();
            let mut m = [0usize; 3];
            for a in 0..d {
                let bit = (corner >> a) & 1;
                m[a] = (base[a] + bit).min(nodes[a] - 1);
                w = w * if bit == 1 { frac[a] } else { T::one() - frac[a] };
            }
            if w != T::zero() {
                acc = acc + w * self.values[self.grid.index(m)];
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::domain::Domain;

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let grid = Grid::new(Domain::<f64>::unit_cube(2).unwrap(), &[8, 8]).unwrap();
        let f = ScalarField::from_fn(grid, |x| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1]).unwrap();
        for p in [[0.13, 0.71], [1.0, 1.0], [0.0, 0.5], [0.999, 0.001]] {
            let exact = 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1];
            assert!((f.interpolate(&p).unwrap() - exact).abs() < 1e-12);
        }
        assert!(f.interpolate(&[1.1, 0.5]).is_none());
    }

    #[test]
    fn rejects_non_finite() {
        let grid = Grid::new(Domain::<f64>::unit_cube(1).unwrap(), &[2]).unwrap();
        assert!(ScalarField::new(grid, vec![0.0, f64::INFINITY, 0.0]).is_err());
    }
}
