//! Empirical measures of ball centers, histogram densities and the
//! distances used to compare them with a limit density.

use serde::{Deserialize, Serialize};

use crate::balls::config::{project, BallConfig};
use crate::error::{Error, Result};
use crate::pde::domain::Domain;
use crate::pde::field::ScalarField;
use crate::scalar::Real;

/// Bin counts scaled to a density on a regular partition of the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Histogram<T> {
    pub bins: Vec<usize>,
    pub extents: Vec<T>,
    /// Density per bin, axis 0 fastest.
    pub density: Vec<T>,
}

impl<T: Real> Histogram<T> {
    pub fn bin_volume(&self) -> T {
        self.extents
            .iter()
            .zip(&self.bins)
            .fold(T::one(), |v, (&l, &b)| v * l / T::from_usize_lossy(b))
    }

    /// Total mass, `Σ density · bin volume`.
    pub fn mass(&self) -> T {
        self.density.iter().copied().sum::<T>() * self.bin_volume()
    }

    /// Bin centers in storage order.
    pub fn centers(&self) -> Vec<Vec<T>> {
        let total: usize = self.bins.iter().product();
        (0..total)
            .map(|mut flat| {
                self.bins
                    .iter()
                    .zip(&self.extents)
                    .map(|(&b, &l)| {
                        let i = flat % b;
                        flat /= b;
                        (T::from_usize_lossy(i) + T::lit(0.5)) * l / T::from_usize_lossy(b)
                    })
                    .collect()
            })
            .collect()
    }

    /// CSV rows `center_0,…,center_{d-1},density`.
    pub fn to_csv(&self) -> String {
        let d = self.bins.len();
        let mut out = String::new();
        for a in 0..d {
            out.push_str(&format!("x{a},"));
        }
        out.push_str("density\n");
        for (c, v) in self.centers().iter().zip(&self.density) {
            for x in c {
                out.push_str(&format!("{x},"));
            }
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

/// Uniform atomic measure on the projected centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EmpiricalMeasure<T> {
    pub atoms: Vec<Vec<T>>,
    pub histogram: Option<Histogram<T>>,
}

impl<T: Real> EmpiricalMeasure<T> {
    pub fn n(&self) -> usize {
        self.atoms.len()
    }

    pub fn weight(&self) -> T {
        T::from_usize_lossy(self.atoms.len()).recip()
    }
}

/// Bin index along one axis. Bins are `(a, b]` with the first bin closed,
/// so atoms on an internal face land in the lower-index bin.
fn bin_index<T: Real>(x: T, length: T, bins: usize) -> usize {
    let s = (x * T::from_usize_lossy(bins) / length).ceil();
    let i = s.to_i64().unwrap_or(0) - 1;
    i.clamp(0, bins as i64 - 1) as usize
}

pub fn histogram<T: Real>(atoms: &[Vec<T>], domain: &Domain<T>, bins: &[usize]) -> Result<Histogram<T>> {
    let d = domain.dim();
    if bins.len() != d || bins.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "need {d} positive bin counts, got {bins:?}"
        )));
    }
    if atoms.is_empty() {
        return Err(Error::InvalidInput("histogram of an empty measure".into()));
    }
    let total: usize = bins.iter().product();
    let mut counts = vec![0usize; total];
    for p in atoms {
        let mut flat = 0;
        let mut stride = 1;
        for a in 0..d {
            flat += bin_index(p[a], domain.extents()[a], bins[a]) * stride;
            stride *= bins[a];
        }
        counts[flat] += 1;
    }
    let mut hist = Histogram {
        bins: bins.to_vec(),
        extents: domain.extents().to_vec(),
        density: Vec::new(),
    };
    let scale = (T::from_usize_lossy(atoms.len()) * hist.bin_volume()).recip();
    hist.density = counts.into_iter().map(|c| T::from_usize_lossy(c) * scale).collect();
    Ok(hist)
}

/// `μ_Σ`: atoms at the clamped centers, optionally binned.
pub fn empirical_measure<T: Real>(config: &BallConfig<T>, bins: Option<&[usize]>) -> Result<EmpiricalMeasure<T>> {
    let atoms: Vec<Vec<T>> = config.centers().iter().map(|c| project(c, config.domain())).collect();
    let histogram = match bins {
        Some(b) => Some(histogram(&atoms, config.domain(), b)?),
        None => None,
    };
    Ok(EmpiricalMeasure { atoms, histogram })
}

/// Wasserstein-1 distance on an interval between an atomic measure with
/// equal weights and the probability density sampled on a 1D grid,
/// computed as the L¹ distance of the two CDFs. The density is linearly
/// interpolated between nodes and normalized to unit mass.
pub fn wasserstein1_1d<T: Real>(atoms: &[T], density: &ScalarField<T>) -> Result<T> {
    let grid = density.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidInput(
            "wasserstein1_1d needs a one-dimensional density".into(),
        ));
    }
    if atoms.is_empty() {
        return Err(Error::InvalidInput("empty atomic measure".into()));
    }
    let mass = density.integral();
    if !(mass > T::zero()) {
        return Err(Error::InvalidInput("density has no mass".into()));
    }
    let mut sorted: Vec<T> = atoms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite atoms"));
    let w = T::from_usize_lossy(sorted.len()).recip();
    let vals = density.values();
    let h = grid.spacing()[0];
    let half = T::lit(0.5);

    // Walk cells; within a cell the density CDF is quadratic and the atomic
    // CDF is a step function, split at atoms and refined for crossings.
    let mut next_atom = 0;
    let mut cdf_atoms = T::zero();
    let mut cdf_mu = T::zero();
    let mut total = T::zero();
    let sub = 8;
    for i in 0..vals.len() - 1 {
        let x0 = grid.coord(0, i);
        let (v0, v1) = (vals[i] / mass, vals[i + 1] / mass);
        let mu_at = |s: T| cdf_mu + v0 * s + (v1 - v0) * s * s / (T::lit(2.0) * h);
        let mut cuts = vec![T::zero()];
        while next_atom < sorted.len() && sorted[next_atom] - x0 <= h {
            if sorted[next_atom] - x0 > T::zero() {
                cuts.push(sorted[next_atom] - x0);
            }
            cuts.push(T::nan());
            next_atom += 1;
        }
        cuts.push(h);
        let mut s_prev = T::zero();
        for &c in &cuts[1..] {
            if c.is_nan() {
                cdf_atoms = cdf_atoms + w;
                continue;
            }
            let len = c - s_prev;
            if len > T::zero() {
                let step = len / T::from_usize_lossy(sub);
                for j in 0..sub {
                    let a = s_prev + step * T::from_usize_lossy(j);
                    let fa = (mu_at(a) - cdf_atoms).abs();
                    let fm = (mu_at(a + step * half) - cdf_atoms).abs();
                    let fb = (mu_at(a + step) - cdf_atoms).abs();
                    total = total + step * (fa + T::lit(4.0) * fm + fb) / T::lit(6.0);
                }
            }
            s_prev = c;
        }
        cdf_mu = mu_at(h);
    }
    Ok(total)
}

/// L¹ distance between a histogram density and a grid density averaged over
/// the same bins (bin averages estimated by interpolation at `sub^d` points
/// per bin).
pub fn histogram_l1<T: Real>(hist: &Histogram<T>, density: &ScalarField<T>, sub: usize) -> Result<T> {
    let d = hist.bins.len();
    if density.grid().dim() != d {
        return Err(Error::DomainMismatch("histogram and density dimensions differ".into()));
    }
    let mass = density.integral();
    if !(mass > T::zero()) {
        return Err(Error::InvalidInput("density has no mass".into()));
    }
    let sub = sub.max(1);
    let widths: Vec<T> = hist
        .extents
        .iter()
        .zip(&hist.bins)
        .map(|(&l, &b)| l / T::from_usize_lossy(b))
        .collect();
    let per_bin = sub.pow(d as u32);
    let mut total = T::zero();
    for (flat, &hv) in hist.density.iter().enumerate() {
        let mut rem = flat;
        let lo: Vec<T> = (0..d)
            .map(|a| {
                let i = rem % hist.bins[a];
                rem /= hist.bins[a];
                T::from_usize_lossy(i) * widths[a]
            })
            .collect();
        let mut acc = T::zero();
        for s in 0..per_bin {
            let mut r = s;
            let p: Vec<T> = (0..d)
                .map(|a| {
                    let j = r % sub;
                    r /= sub;
                    lo[a] + (T::from_usize_lossy(j) + T::lit(0.5)) * widths[a] / T::from_usize_lossy(sub)
                })
                .collect();
            acc = acc + density.interpolate(&p).unwrap_or(T::zero());
        }
        let avg = acc / T::from_usize_lossy(per_bin) / mass;
        total = total + (hv - avg).abs();
    }
    Ok(total * hist.bin_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balls::generators::lattice_config;
    use crate::pde::grid::Grid;

    #[test]
    fn single_atom() {
        let cfg = lattice_config::<f64>(1, 0.2, 2).unwrap();
        let m = empirical_measure(&cfg, None).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.weight(), 1.0);
    }

    #[test]
    fn lattice_histograms_are_uniform() {
        let one = lattice_config::<f64>(2, 0.1, 1).unwrap();
        let h = empirical_measure(&one, Some(&[2])).unwrap().histogram.unwrap();
        assert_eq!(h.density, vec![1.0, 1.0]);

        let two = lattice_config::<f64>(4, 0.1, 2).unwrap();
        let h = empirical_measure(&two, Some(&[4, 4])).unwrap().histogram.unwrap();
        assert!(h.density.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((h.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn face_atoms_go_to_lower_bin() {
        let dom = Domain::<f64>::unit_cube(1).unwrap();
        let h = histogram(&[vec![0.5], vec![0.0], vec![1.0]], &dom, &[2]).unwrap();
        assert!((h.density[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((h.density[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn projection_of_outside_centers() {
        let dom = Domain::<f64>::unit_cube(2).unwrap();
        let cfg = BallConfig::new(dom, 0.5, vec![vec![1.2, 0.5]]).unwrap();
        let m = empirical_measure(&cfg, None).unwrap();
        assert_eq!(m.atoms[0], vec![1.0, 0.5]);
    }

    #[test]
    fn w1_of_equal_spacing_is_order_one_over_n() {
        let grid = Grid::new(Domain::<f64>::unit_cube(1).unwrap(), &[1000]).unwrap();
        let uniform = ScalarField::constant(grid, 1.0);
        for n in [4usize, 16, 64] {
            let atoms: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let w = wasserstein1_1d(&atoms, &uniform).unwrap();
            // Oracle: each of the n cells holds two triangles with legs 1/(2n).
            assert!((w - 0.25 / n as f64).abs() < 1e-9, "n={n} w={w}");
        }
        let w = wasserstein1_1d(&[0.0], &uniform).unwrap();
        assert!((w - 0.5).abs() < 1e-9);
    }

    #[test]
    fn histogram_l1_zero_for_matching_density() {
        let two = lattice_config::<f64>(4, 0.1, 2).unwrap();
        let h = empirical_measure(&two, Some(&[4, 4])).unwrap().histogram.unwrap();
        let grid = Grid::new(Domain::unit_cube(2).unwrap(), &[16, 16]).unwrap();
        let uniform = ScalarField::constant(grid, 1.0);
        assert!(histogram_l1(&h, &uniform, 3).unwrap() < 1e-12);
    }
}
