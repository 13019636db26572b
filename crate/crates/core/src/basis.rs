//! Kernel basis functions and design matrices for `g(x) = w^T phi(x)`.

use nalgebra::DMatrix;
use rand::seq::index;

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::rng;

/// Basis functions are capped at this many centers.
pub const DEFAULT_MAX_CENTERS: usize = 200;

/// Rows beyond this count are subsampled before the pairwise median.
pub const DEFAULT_MEDIAN_ROWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(-|x - c|^2 / (2 bandwidth^2))`
    Gaussian { bandwidth: f64 },
    /// `x . c`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    kernel: Kernel,
    centers: SampleMatrix,
}

impl FeatureMap {
    pub fn new(kernel: Kernel, centers: SampleMatrix) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::config("a feature map needs at least one center"));
        }
        if let Kernel::Gaussian { bandwidth } = kernel {
            if !(bandwidth.is_finite() && bandwidth > 0.0) {
                return Err(Error::config(format!(
                    "Gaussian bandwidth must be positive and finite, got {bandwidth}"
                )));
            }
        }
        Ok(Self { kernel, centers })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn centers(&self) -> &SampleMatrix {
        &self.centers
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.centers.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    /// `phi(x)` written into `out` (length `len()`).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self.kernel {
            Kernel::Gaussian { bandwidth } => {
                let scale = -0.5 / (bandwidth * bandwidth);
                for (o, c) in out.iter_mut().zip(self.centers.iter_rows()) {
                    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    *o = (scale * d2).exp();
                }
            }
            Kernel::Linear => {
                for (o, c) in out.iter_mut().zip(self.centers.iter_rows()) {
                    *o = x.iter().zip(c).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// `n x b` matrix whose row `i` is `phi(x_i)`. Entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("design matrix has non-finite entries"));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn negated(&self) -> Self {
        Self(-&self.0)
    }
}

/// Median of `{|x_i - x_j|}` over all ordered pairs, diagonal included.
pub fn median_heuristic(x: &SampleMatrix) -> Result<f64> {
    median_heuristic_with(x, DEFAULT_MEDIAN_ROWS, 0)
}

/// As [`median_heuristic`], first subsampling to at most `max_rows` rows
/// (seeded) when the input is larger.
pub fn median_heuristic_with(x: &SampleMatrix, max_rows: usize, seed: u64) -> Result<f64> {
    if x.rows() < 2 {
        return Err(Error::data(format!(
            "median heuristic needs at least 2 samples, got {}",
            x.rows()
        )));
    }
    let sub;
    let x = if x.rows() > max_rows.max(2) {
        let picked = index::sample(
            &mut rng::stream(seed, &[rng::TAG_MEDIAN]),
            x.rows(),
            max_rows.max(2),
        )
        .into_vec();
        sub = x.select(&picked);
        &sub
    } else {
        x
    };

    let n = x.rows();
    let mut off_diag = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let a = x.row(i);
        for j in (i + 1)..n {
            let d2: f64 = a.iter().zip(x.row(j)).map(|(p, q)| (p - q) * (p - q)).sum();
            off_diag.push(d2.sqrt());
        }
    }
    off_diag.sort_unstable_by(f64::total_cmp);

    // The ordered-pair multiset holds n diagonal zeros and every off-diagonal
    // distance twice.
    let kth = |k: usize| if k < n { 0.0 } else { off_diag[(k - n) / 2] };
    let m = n * n;
    let median = if m % 2 == 1 {
        kth(m / 2)
    } else {
        0.5 * (kth(m / 2 - 1) + kth(m / 2))
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::data(
            "degenerate bandwidth: median pairwise distance is zero",
        ))
    }
}

/// `b` distinct rows sampled without replacement.
pub fn select_centers(x: &SampleMatrix, b: usize, seed: u64) -> Result<SampleMatrix> {
    if b > x.rows() {
        return Err(Error::config(format!(
            "cannot select {b} centers from {} samples",
            x.rows()
        )));
    }
    let picked = index::sample(&mut rng::stream(seed, &[rng::TAG_CENTERS]), x.rows(), b).into_vec();
    Ok(x.select(&picked))
}

pub fn design_matrix(map: &FeatureMap, x: &SampleMatrix) -> Result<DesignMatrix> {
    if x.dim() != map.dim() && !x.is_empty() {
        return Err(Error::data(format!(
            "samples have dimension {}, basis centers have {}",
            x.dim(),
            map.dim()
        )));
    }
    let b = map.len();
    // One contiguous feature row per sample.
    let mut buf = vec![0.0; x.rows() * b];
    for (i, row) in x.iter_rows().enumerate() {
        map.eval_into(row, &mut buf[i * b..(i + 1) * b]);
    }
    DesignMatrix::from_matrix(DMatrix::from_row_slice(x.rows(), b, &buf))
}

/// How to build a feature map from a pool of training samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    pub kernel: KernelKind,
    pub max_centers: usize,
    pub median_rows: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Gaussian,
            max_centers: DEFAULT_MAX_CENTERS,
            median_rows: DEFAULT_MEDIAN_ROWS,
        }
    }
}

impl BasisConfig {
    pub fn linear() -> Self {
        Self {
            kernel: KernelKind::Linear,
            ..Self::default()
        }
    }

    /// Reference bandwidth of `pool` (Gaussian only).
    pub fn base_bandwidth(&self, pool: &SampleMatrix, seed: u64) -> Result<Option<f64>> {
        match self.kernel {
            KernelKind::Gaussian => median_heuristic_with(pool, self.median_rows, seed).map(Some),
            KernelKind::Linear => Ok(None),
        }
    }

    /// Centers drawn from `pool`, `min(n, max_centers)` of them.
    pub fn centers(&self, pool: &SampleMatrix, seed: u64) -> Result<SampleMatrix> {
        select_centers(pool, pool.rows().min(self.max_centers), seed)
    }

    /// Feature map with bandwidth `base * factor` over the given centers.
    pub fn map(
        &self,
        centers: SampleMatrix,
        base_bandwidth: Option<f64>,
        factor: f64,
    ) -> Result<FeatureMap> {
        let kernel = match (self.kernel, base_bandwidth) {
            (KernelKind::Gaussian, Some(base)) => Kernel::Gaussian {
                bandwidth: base * factor,
            },
            (KernelKind::Gaussian, None) => {
                return Err(Error::config("Gaussian kernel needs a bandwidth"))
            }
            (KernelKind::Linear, _) => Kernel::Linear,
        };
        FeatureMap::new(kernel, centers)
    }

    /// One-shot construction: median bandwidth times `factor`, seeded centers.
    pub fn build(&self, pool: &SampleMatrix, factor: f64, seed: u64) -> Result<FeatureMap> {
        let base = self.base_bandwidth(pool, seed)?;
        self.map(self.centers(pool, seed)?, base, factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> SampleMatrix {
        SampleMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    /// Median over the explicit ordered-pair multiset.
    fn brute_median(x: &SampleMatrix) -> f64 {
        let mut all = Vec::new();
        for a in x.iter_rows() {
            for b in x.iter_rows() {
                let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                all.push(d.sqrt());
            }
        }
        all.sort_by(f64::total_cmp);
        let m = all.len();
        if m % 2 == 1 {
            all[m / 2]
        } else {
            0.5 * (all[m / 2 - 1] + all[m / 2])
        }
    }

    #[test]
    fn median_two_points() {
        assert_eq!(median_heuristic(&col(&[0.0, 2.0])).unwrap(), 1.0);
    }

    #[test]
    fn median_rejects_degenerate_samples() {
        assert!(matches!(median_heuristic(&col(&[0.0, 0.0, 0.0])), Err(Error::Data(_))));
        assert!(matches!(median_heuristic(&col(&[1.0])), Err(Error::Data(_))));
    }

    #[test]
    fn median_subsampling_is_seeded() {
        let x = SampleMatrix::new(50, 1, (0..50).map(f64::from).collect()).unwrap();
        let a = median_heuristic_with(&x, 10, 4).unwrap();
        assert_eq!(a, median_heuristic_with(&x, 10, 4).unwrap());
        assert_eq!(median_heuristic_with(&x, 1000, 4).unwrap(), brute_median(&x));
    }

    #[test]
    fn centers_are_distinct_rows() {
        let x = SampleMatrix::new(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let c = select_centers(&x, 6, 1).unwrap();
        let mut v = c.values().to_vec();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, x.values());
        assert_eq!(select_centers(&x, 3, 9).unwrap(), select_centers(&x, 3, 9).unwrap());
        assert!(select_centers(&x, 7, 1).is_err());
    }

    #[test]
    fn gaussian_and_linear_entries() {
        let centers = SampleMatrix::from_rows(&[[3.0, 4.0]]).unwrap();
        let lin = FeatureMap::new(Kernel::Linear, centers.clone()).unwrap();
        let x = SampleMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(design_matrix(&lin, &x).unwrap().matrix()[(0, 0)], 11.0);

        let g = FeatureMap::new(Kernel::Gaussian { bandwidth: 0.7 }, centers.clone()).unwrap();
        assert_eq!(design_matrix(&g, &centers).unwrap().matrix()[(0, 0)], 1.0);

        let wide = FeatureMap::new(Kernel::Gaussian { bandwidth: 1e6 }, centers).unwrap();
        let y = SampleMatrix::from_rows(&[[3.0, 5.0]]).unwrap();
        let v = design_matrix(&wide, &y).unwrap().matrix()[(0, 0)];
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn design_matrix_checks_dimension() {
        let m = FeatureMap::new(Kernel::Linear, col(&[1.0])).unwrap();
        let x = SampleMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(design_matrix(&m, &x), Err(Error::Data(_))));
    }

    #[test]
    fn feature_map_validation() {
        assert!(FeatureMap::new(Kernel::Gaussian { bandwidth: 0.0 }, col(&[1.0])).is_err());
        assert!(FeatureMap::new(Kernel::Linear, SampleMatrix::empty(1)).is_err());
    }

    fn matrix(max_rows: usize, dim: usize) -> impl Strategy<Value = SampleMatrix> {
        (2..max_rows).prop_flat_map(move |n| {
            prop::collection::vec(-5.0f64..5.0, n * dim)
                .prop_map(move |v| SampleMatrix::new(n, dim, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn median_matches_pair_enumeration(x in matrix(12, 2)) {
            prop_assume!(brute_median(&x) > 0.0);
            prop_assert_eq!(median_heuristic(&x).unwrap(), brute_median(&x));
        }

        #[test]
        fn median_is_homogeneous_and_translation_invariant(
            x in matrix(10, 2), c in 0.1f64..10.0, shift in -3.0f64..3.0, rot in 0usize..10,
        ) {
            let base = median_heuristic(&x);
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            let scaled = median_heuristic(&x.scaled(c)).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-12 * c * base);
            let shifted: Vec<f64> = x.values().iter().map(|v| v + shift).collect();
            let shifted = SampleMatrix::new(x.rows(), 2, shifted).unwrap();
            prop_assert!((median_heuristic(&shifted).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
            let order: Vec<usize> = (0..x.rows()).map(|i| (i + rot) % x.rows()).collect();
            prop_assert_eq!(median_heuristic(&x.select(&order)).unwrap(), base);
        }

        #[test]
        fn gaussian_design_is_equivariant_and_bounded(
            x in matrix(8, 2), c in matrix(5, 2), bw in 1.0f64..3.0, rot in 0usize..8,
        ) {
            let map = FeatureMap::new(Kernel::Gaussian { bandwidth: bw }, c.clone()).unwrap();
            let d = design_matrix(&map, &x).unwrap();
            for (i, row) in x.iter_rows().enumerate() {
                for (l, center) in c.iter_rows().enumerate() {
                    let v = d.matrix()[(i, l)];
                    prop_assert!(v > 0.0 && v <= 1.0);
                    if row == center { prop_assert_eq!(v, 1.0); }
                }
            }
            let xo: Vec<usize> = (0..x.rows()).map(|i| (i + rot) % x.rows()).collect();
            let co: Vec<usize> = (0..c.rows()).rev().collect();
            let map2 = FeatureMap::new(Kernel::Gaussian { bandwidth: bw }, c.select(&co)).unwrap();
            let d2 = design_matrix(&map2, &x.select(&xo)).unwrap();
            for (i, &oi) in xo.iter().enumerate() {
                for (l, &ol) in co.iter().enumerate() {
                    prop_assert_eq!(d2.matrix()[(i, l)], d.matrix()[(oi, ol)]);
                }
            }
        }
    }
}
