use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Condition imposed on the outer faces of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterBoundary {
    #[default]
    Dirichlet,
    /// Zero normal derivative; only solvable when some obstacle node is pinned.
    Neumann,
}

/// Axis-aligned box `[0, L_1] × … × [0, L_d]` with `d ∈ {1, 2, 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Domain<T> {
    extents: Vec<T>,
    #[serde(default)]
    outer: OuterBoundary,
}

impl<T: Real> Domain<T> {
    pub fn new(extents: Vec<T>, outer: OuterBoundary) -> Result<Self> {
        let d = extents.len();
        if !(1..=3).contains(&d) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if let Some(bad) = extents.iter().find(|l| !(l.is_finite() && **l > T::zero())) {
            return Err(Error::Domain(format!("extents must be finite and positive, got {bad}")));
        }
        Ok(Self { extents, outer })
    }

    /// The unit cube `[0,1]^d` with Dirichlet outer faces.
    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::new(vec![T::one(); d], OuterBoundary::Dirichlet)
    }

    pub fn with_outer(mut self, outer: OuterBoundary) -> Self {
        self.outer = outer;
        self
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[T] {
        &self.extents
    }

    pub fn outer(&self) -> OuterBoundary {
        self.outer
    }

    pub fn volume(&self) -> T {
        self.extents.iter().fold(T::one(), |acc, &l| acc * l)
    }

    pub fn is_unit_cube(&self) -> bool {
        self.extents.iter().all(|&l| l == T::one())
    }

    /// Same dimension and extents (the outer tag is not compared).
    pub fn same_box(&self, other: &Domain<T>) -> bool {
        self.extents == other.extents
    }

    /// Componentwise clamp onto the closed box; the Euclidean nearest point.
    pub fn clamp(&self, point: &[T]) -> Vec<T> {
        point
            .iter()
            .zip(&self.extents)
            .map(|(&x, &l)| x.max(T::zero()).min(l))
            .collect()
    }

    /// Euclidean distance from `point` to the closed box.
    pub fn distance_to_box(&self, point: &[T]) -> T {
        point
            .iter()
            .zip(&self.extents)
            .map(|(&x, &l)| {
                let e = if x < T::zero() {
                    -x
                } else if x > l {
                    x - l
                } else {
                    T::zero()
                };
                e * e
            })
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Nearest point of the closed `r`-neighbourhood of the box.
    pub fn project_to_neighbourhood(&self, point: &[T], r: T) -> Vec<T> {
        let q = self.clamp(point);
        let dist = self.distance_to_box(point);
        if dist <= r {
            return point.to_vec();
        }
        let s = r / dist;
        q.iter().zip(point).map(|(&qi, &xi)| qi + (xi - qi) * s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_extents() {
        assert!(Domain::<f64>::new(vec![], OuterBoundary::Dirichlet).is_err());
        assert!(Domain::<f64>::new(vec![1.0; 4], OuterBoundary::Dirichlet).is_err());
        assert!(Domain::<f64>::new(vec![1.0, 0.0], OuterBoundary::Dirichlet).is_err());
        assert!(Domain::<f64>::new(vec![f64::NAN], OuterBoundary::Dirichlet).is_err());
    }

    #[test]
    fn neighbourhood_projection() {
        let dom = Domain::<f64>::unit_cube(2).unwrap();
        assert_eq!(dom.project_to_neighbourhood(&[1.05, 0.5], 0.1), vec![1.05, 0.5]);
        let p = dom.project_to_neighbourhood(&[1.5, 0.5], 0.1);
        assert!((p[0] - 1.1).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = dom.project_to_neighbourhood(&[2.0, 2.0], 0.1);
        assert!((dom.distance_to_box(&p) - 0.1).abs() < 1e-12);
    }
}
