use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::theta::bounds::half_diagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lattice,
    LatticeOptimize,
    HomogenizedBest,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Lattice => "lattice",
            Family::LatticeOptimize => "lattice-optimize",
            Family::HomogenizedBest => "homogenized-best",
        }
    }
}

/// Best scaled compliance found at one lattice order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KValue<T> {
    pub k: usize,
    pub n: usize,
    pub value: T,
    pub family: Family,
    pub h: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ThetaSample<T> {
    pub alpha: T,
    pub theta: T,
    pub err: T,
    pub k_max: usize,
    pub h: T,
    pub family: Family,
    #[serde(default)]
    pub per_k: Vec<KValue<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ThetaTable<T> {
    pub d: usize,
    pub samples: Vec<ThetaSample<T>>,
}

impl<T: Real> ThetaTable<T> {
    /// Sorts by `α` and checks the basic invariants.
    pub fn new(d: usize, mut samples: Vec<ThetaSample<T>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("theta table is empty".into()));
        }
        for s in &samples {
            if !(s.alpha >= T::zero() && s.theta >= T::zero() && s.theta.is_finite() && s.err >= T::zero()) {
                return Err(Error::InvalidInput(format!("bad sample at alpha = {}", s.alpha)));
            }
        }
        samples.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).expect("finite alpha"));
        if samples.windows(2).any(|w| w[0].alpha == w[1].alpha) {
            return Err(Error::InvalidInput("repeated alpha in theta table".into()));
        }
        Ok(Self { d, samples })
    }

    /// Table of exact values with zero error bars.
    pub fn from_values(d: usize, alphas: &[T], values: &[T]) -> Result<Self> {
        if alphas.len() != values.len() {
            return Err(Error::InvalidInput("alpha and value lists differ in length".into()));
        }
        let samples = alphas
            .iter()
            .zip(values)
            .map(|(&alpha, &theta)| ThetaSample {
                alpha,
                theta,
                err: T::zero(),
                k_max: 0,
                h: T::zero(),
                family: Family::Lattice,
                per_k: Vec::new(),
            })
            .collect();
        Self::new(d, samples)
    }

    pub fn alphas(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.alpha).collect()
    }

    pub fn thetas(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.theta).collect()
    }

    pub fn errors(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.err).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: ThetaTable<T> = serde_json::from_str(s)?;
        Self::new(t.d, t.samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,theta,err,k_max,h,family\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.alpha,
                s.theta,
                s.err,
                s.k_max,
                s.h,
                s.family.name()
            ));
        }
        out
    }
}

/// Least-squares nonincreasing fit (pool adjacent violators).
pub fn isotonic_decreasing<T: Real>(values: &[T]) -> Vec<T> {
    // blocks of (mean, count)
    let mut blocks: Vec<(T, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            let m = (m1 * T::from_usize_lossy(c1) + m2 * T::from_usize_lossy(c2)) / T::from_usize_lossy(c);
            *blocks.last_mut().unwrap() = (m, c);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, c)| std::iter::repeat_n(m, c))
        .collect()
}

/// Piecewise-linear nonincreasing interpolant on sample points, constant
/// outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Envelope<T> {
    pub alphas: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> Envelope<T> {
    pub fn eval(&self, alpha: T) -> T {
        let a = &self.alphas;
        let v = &self.values;
        if alpha <= a[0] {
            return v[0];
        }
        if alpha >= a[a.len() - 1] {
            return v[v.len() - 1];
        }
        let j = a.partition_point(|&x| x <= alpha) - 1;
        let s = (alpha - a[j]) / (a[j + 1] - a[j]);
        v[j] + s * (v[j + 1] - v[j])
    }
}

/// `θ⁻` from the running minimum taken from the left and `θ⁺` from the
/// running maximum taken from the right; both are nonincreasing and
/// bracket the table at every sample.
pub fn envelopes<T: Real>(table: &ThetaTable<T>) -> (Envelope<T>, Envelope<T>) {
    let alphas = table.alphas();
    let thetas = table.thetas();
    let mut lower = thetas.clone();
    for j in 1..lower.len() {
        lower[j] = lower[j].min(lower[j - 1]);
    }
    let mut upper = thetas;
    for j in (0..upper.len().saturating_sub(1)).rev() {
        upper[j] = upper[j].max(upper[j + 1]);
    }
    (
        Envelope {
            alphas: alphas.clone(),
            values: lower,
        },
        Envelope { alphas, values: upper },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct T1Estimate<T> {
    pub t1: T,
    /// Set when no sample reached the zero tolerance.
    pub not_reached: bool,
}

/// First zero of the table: the first sample with `θ̂ ≤ zero_tol`, moved
/// back towards the previous sample by linear interpolation.
///
/// The default tolerance is `10⁻³·θ̂` at the smallest sampled `α`.
pub fn t1_estimate<T: Real>(table: &ThetaTable<T>, zero_tol: Option<T>) -> T1Estimate<T> {
    let s = &table.samples;
    let tol = zero_tol.unwrap_or_else(|| T::lit(1e-3) * s[0].theta);
    match s.iter().position(|x| x.theta <= tol) {
        None => T1Estimate {
            t1: half_diagonal(table.d),
            not_reached: true,
        },
        Some(0) => T1Estimate {
            t1: s[0].alpha,
            not_reached: false,
        },
        Some(j) => {
            let (a0, v0) = (s[j - 1].alpha, s[j - 1].theta);
            let (a1, v1) = (s[j].alpha, s[j].theta);
            let t = if v0 > v1 {
                a0 + (a1 - a0) * (v0 - tol.max(v1)) / (v0 - v1)
            } else {
                a1
            };
            T1Estimate {
                t1: t.min(a1),
                not_reached: false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(alphas: &[f64], vals: &[f64]) -> ThetaTable<f64> {
        ThetaTable::from_values(2, alphas, vals).unwrap()
    }

    #[test]
    fn pava_examples() {
        assert_eq!(isotonic_decreasing(&[3.0, 2.0, 1.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(isotonic_decreasing(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
        assert_eq!(isotonic_decreasing(&[1.0, 2.0, 3.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn envelopes_of_decreasing_table_agree() {
        let t = table(&[0.1, 0.2, 0.4], &[0.5, 0.3, 0.1]);
        let (lo, hi) = envelopes(&t);
        for a in [0.1, 0.15, 0.3, 0.4] {
            assert!((lo.eval(a) - hi.eval(a)).abs() < 1e-15);
        }
        assert!((lo.eval(0.3) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn envelope_removes_blip() {
        let t = table(&[0.1, 0.2, 0.3, 0.4], &[0.5, 0.3, 0.35, 0.1]);
        let (lo, hi) = envelopes(&t);
        assert_eq!(lo.values, vec![0.5, 0.3, 0.3, 0.1]);
        assert_eq!(hi.values, vec![0.5, 0.35, 0.35, 0.1]);
        for (j, s) in t.samples.iter().enumerate() {
            assert!(lo.values[j] <= s.theta && s.theta <= hi.values[j]);
        }
    }

    #[test]
    fn zero_tail() {
        let t = table(&[0.1, 0.5, 0.6, 0.7], &[0.2, 0.0, 0.0, 0.0]);
        let (lo, hi) = envelopes(&t);
        for a in [0.5, 0.55, 0.7, 0.9] {
            assert_eq!(lo.eval(a), 0.0);
            assert_eq!(hi.eval(a), 0.0);
        }
    }

    #[test]
    fn t1_examples() {
        let alphas: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let vals: Vec<f64> = alphas
            .iter()
            .map(|&a| if a < 0.5 { (1.0 - 2.0 * a).powi(3) / 12.0 } else { 0.0 })
            .collect();
        let t = ThetaTable::from_values(1, &alphas, &vals).unwrap();
        let est = t1_estimate(&t, None);
        assert!(!est.not_reached);
        assert!((est.t1 - 0.5).abs() <= 0.05);

        let zero = table(&[0.2, 0.4], &[0.0, 0.0]);
        assert_eq!(t1_estimate(&zero, Some(1e-9)).t1, 0.2);

        let never = table(&[0.2, 0.4], &[0.3, 0.2]);
        let est = t1_estimate(&never, Some(1e-9));
        assert!(est.not_reached);
        assert!((est.t1 - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let t = table(&[0.1, 0.2], &[0.5, 0.3]);
        let back = ThetaTable::<f64>::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_csv().starts_with("alpha,theta,err,k_max,h,family\n"));
    }
}
