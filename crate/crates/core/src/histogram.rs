//! Residence-time histograms over radius.

use serde::{Deserialize, Serialize};

use crate::config::HistogramConfig;
use crate::error::HistogramError;
use crate::physics::qm_radial_density;

/// Time spent in each radial bin [i·w, (i+1)·w). Time at r ≥ r_max only
/// counts toward `total_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    bin_width: f64,
    r_max: f64,
    weights: Vec<f64>,
    total_time: f64,
    out_of_range: f64,
}

impl RadialHistogram {
    pub fn new(bin_width: f64, r_max: f64) -> Result<Self, HistogramError> {
        if !(bin_width > 0.0 && r_max > 0.0 && bin_width.is_finite() && r_max.is_finite()) {
            return Err(HistogramError::InvalidBinning { bin_width, r_max });
        }
        // tolerate r_max/bin_width landing a hair above an integer
        let bins = ((r_max / bin_width) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Self {
            bin_width,
            r_max,
            weights: vec![0.0; bins],
            total_time: 0.0,
            out_of_range: 0.0,
        })
    }

    pub fn from_config(config: &HistogramConfig) -> Result<Self, HistogramError> {
        Self::new(config.bin_width, config.r_max)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Time spent at or beyond `r_max`.
    pub fn out_of_range_time(&self) -> f64 {
        self.out_of_range
    }

    pub fn bin_of(&self, r: f64) -> Option<usize> {
        if !(r >= 0.0) || r >= self.r_max {
            return None;
        }
        let i = (r / self.bin_width).floor() as usize;
        (i < self.weights.len()).then_some(i)
    }

    pub fn accumulate(&mut self, r: f64, dt: f64) {
        debug_assert!(dt >= 0.0);
        self.total_time += dt;
        match self.bin_of(r) {
            Some(i) => self.weights[i] += dt,
            None => self.out_of_range += dt,
        }
    }

    fn check_binning(&self, other: &Self) -> Result<(), HistogramError> {
        if self.bin_width != other.bin_width || self.weights.len() != other.weights.len() {
            return Err(HistogramError::BinningMismatch(
                self.bin_width,
                self.weights.len(),
                other.bin_width,
                other.weights.len(),
            ));
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<(), HistogramError> {
        self.check_binning(other)?;
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.total_time += other.total_time;
        self.out_of_range += other.out_of_range;
        Ok(())
    }

    /// Per-bin sum of weights and total times.
    pub fn merge(&self, other: &Self) -> Result<Self, HistogramError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// P_i = weight_i / (total_time · bin_width) at bin centres.
    pub fn normalize(&self) -> Result<DensityTable, HistogramError> {
        if !(self.total_time > 0.0) {
            return Err(HistogramError::Empty);
        }
        let norm = 1.0 / (self.total_time * self.bin_width);
        Ok(DensityTable {
            bin_width: self.bin_width,
            points: self
                .weights
                .iter()
                .enumerate()
                .map(|(i, w)| DensityPoint {
                    r: (i as f64 + 0.5) * self.bin_width,
                    p: w * norm,
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    /// Bin centre (cm).
    pub r: f64,
    /// Probability density (1/cm).
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub bin_width: f64,
    pub points: Vec<DensityPoint>,
}

impl DensityTable {
    /// ∫P dr over the recorded range.
    pub fn mass(&self) -> f64 {
        self.points.iter().map(|p| p.p).sum::<f64>() * self.bin_width
    }

    /// Centre of the highest bin.
    pub fn peak_radius(&self) -> Option<f64> {
        self.points
            .iter()
            .max_by(|a, b| a.p.total_cmp(&b.p))
            .map(|p| p.r)
    }
}

/// Σ |P_i − reference(r_i)| · bin_width.
pub fn l1_distance(density: &DensityTable, reference: impl Fn(f64) -> f64) -> f64 {
    density
        .points
        .iter()
        .map(|pt| (pt.p - reference(pt.r)).abs())
        .sum::<f64>()
        * density.bin_width
}

/// L1 distance to the hydrogen ground-state radial density.
pub fn l1_to_qm(density: &DensityTable, bohr: f64) -> f64 {
    l1_distance(density, |r| qm_radial_density(r, bohr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ANGSTROM;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const A_B: f64 = 0.529 * ANGSTROM;

    fn default_hist() -> RadialHistogram {
        RadialHistogram::from_config(&HistogramConfig::default()).unwrap()
    }

    #[test]
    fn default_binning_has_500_bins() {
        assert_eq!(default_hist().weights().len(), 500);
        assert!(RadialHistogram::new(0.0, 1.0).is_err());
    }

    #[test]
    fn delta_distribution() {
        let mut h = default_hist();
        h.accumulate(A_B, 1.0);
        let d = h.normalize().unwrap();
        let i = h.bin_of(A_B).unwrap();
        for (j, p) in d.points.iter().enumerate() {
            if j == i {
                assert_relative_eq!(p.p, 1.0 / h.bin_width(), max_relative = 1e-15);
            } else {
                assert_eq!(p.p, 0.0);
            }
        }
    }

    #[test]
    fn equal_times_give_equal_densities() {
        let mut h = default_hist();
        h.accumulate(0.3 * ANGSTROM, 2e-15);
        h.accumulate(1.7 * ANGSTROM, 2e-15);
        let d = h.normalize().unwrap();
        let a = d.points[h.bin_of(0.3 * ANGSTROM).unwrap()].p;
        let b = d.points[h.bin_of(1.7 * ANGSTROM).unwrap()].p;
        assert_eq!(a, b);
    }

    #[test]
    fn constant_radius_puts_everything_in_one_bin() {
        let mut h = default_hist();
        for _ in 0..1000 {
            h.accumulate(A_B, 1e-17);
        }
        assert_relative_eq!(h.total_time(), 1e-14, max_relative = 1e-12);
        assert_eq!(h.weights().iter().filter(|w| **w > 0.0).count(), 1);
    }

    #[test]
    fn out_of_range_residence_only_counts_in_total() {
        let mut h = default_hist();
        h.accumulate(1.0 * ANGSTROM, 1.0);
        h.accumulate(7.0 * ANGSTROM, 3.0);
        let d = h.normalize().unwrap();
        assert_relative_eq!(d.mass(), 0.25, max_relative = 1e-12);
        assert_eq!(h.out_of_range_time(), 3.0);
    }

    #[test]
    fn uniform_weights() {
        let mut h = RadialHistogram::new(0.1, 1.0).unwrap();
        for i in 0..10 {
            h.accumulate(0.05 + 0.1 * i as f64, 0.5);
        }
        for p in h.normalize().unwrap().points {
            assert_relative_eq!(p.p, 1.0 / (10.0 * 0.1), max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_histogram_cannot_normalize() {
        assert_eq!(default_hist().normalize().unwrap_err(), HistogramError::Empty);
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let mut h = default_hist();
        h.accumulate(0.5 * ANGSTROM, 1e-15);
        assert_eq!(h.merge(&default_hist()).unwrap(), h);
        let other = RadialHistogram::new(0.02 * ANGSTROM, 5.0 * ANGSTROM).unwrap();
        assert!(matches!(h.merge(&other), Err(HistogramError::BinningMismatch(..))));
    }

    #[test]
    fn merging_runs_equals_concatenated_stream() {
        // 11 synthetic observer streams, deterministic pseudo-random radii
        let mut merged = default_hist();
        let mut concatenated = default_hist();
        let mut x = 0x1234_5678_u64;
        for _run in 0..11 {
            let mut h = default_hist();
            for _ in 0..500 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let r = (x >> 11) as f64 / (1u64 << 53) as f64 * 6.0 * ANGSTROM;
                let dt = ((x >> 40) % 97 + 1) as f64 * 1e-18;
                h.accumulate(r, dt);
                concatenated.accumulate(r, dt);
            }
            merged.merge_from(&h).unwrap();
        }
        for (a, b) in merged.weights().iter().zip(concatenated.weights()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
        assert_relative_eq!(merged.total_time(), concatenated.total_time(), max_relative = 1e-12);
    }

    #[test]
    fn sampled_reference_is_close_to_itself() {
        let mut h = default_hist();
        for i in 0..h.weights().len() {
            let r = (i as f64 + 0.5) * h.bin_width();
            h.accumulate(r, qm_radial_density(r, A_B) * h.bin_width());
        }
        // scale so the table is the exact point sample, not renormalised
        let mut d = h.normalize().unwrap();
        let total = h.total_time();
        for p in &mut d.points {
            p.p *= total;
        }
        assert!(l1_to_qm(&d, A_B) < 1e-12);
        // and an independent midpoint-rule estimate against a finer grid
        let fine = |r: f64| qm_radial_density(r, A_B);
        let coarse = DensityTable {
            bin_width: 0.01 * ANGSTROM,
            points: (0..500)
                .map(|i| {
                    let lo = i as f64 * 0.01 * ANGSTROM;
                    // bin average by 100-point midpoint rule
                    let avg = (0..100)
                        .map(|j| fine(lo + (j as f64 + 0.5) * 1e-4 * ANGSTROM))
                        .sum::<f64>()
                        / 100.0;
                    DensityPoint { r: lo + 0.005 * ANGSTROM, p: avg }
                })
                .collect(),
        };
        assert!(l1_to_qm(&coarse, A_B) < 0.01);
    }

    #[test]
    fn delta_vs_reference_distance() {
        let mut h = default_hist();
        h.accumulate(A_B, 1.0);
        let d = h.normalize().unwrap();
        let dist = l1_to_qm(&d, A_B);
        // 2·(1 − mass of the reference in that bin); bin mass ≈ P(a)·w ≈ 0.0102
        assert_relative_eq!(dist, 1.98, max_relative = 2e-3);
        assert_eq!(l1_distance(&d, |r| d.points[(r / d.bin_width) as usize].p), 0.0);
    }

    proptest! {
        #[test]
        fn bookkeeping_is_exact(samples in prop::collection::vec((0.0f64..8.0, 0.0f64..1.0), 1..200)) {
            let mut h = default_hist();
            for (r, dt) in &samples {
                h.accumulate(r * ANGSTROM, dt * 1e-17);
            }
            let binned: f64 = h.weights().iter().sum();
            let total = h.total_time();
            prop_assert!((binned + h.out_of_range_time() - total).abs() <= 1e-12 * total.max(1e-300));
            if total > 0.0 {
                let d = h.normalize().unwrap();
                prop_assert!(d.mass() <= 1.0 + 1e-12);
                let mut doubled = h.clone();
                doubled.merge_from(&h).unwrap();
                let dd = doubled.normalize().unwrap();
                for (a, b) in d.points.iter().zip(&dd.points) {
                    prop_assert!((a.p - b.p).abs() <= 1e-12 * a.p.abs().max(1e-300));
                }
            }
        }

        #[test]
        fn merge_commutes(a in prop::collection::vec((0.0f64..6.0, 0.0f64..1.0), 0..50),
                          b in prop::collection::vec((0.0f64..6.0, 0.0f64..1.0), 0..50)) {
            let fill = |s: &[(f64, f64)]| {
                let mut h = default_hist();
                for (r, dt) in s {
                    h.accumulate(r * ANGSTROM, *dt);
                }
                h
            };
            let (ha, hb) = (fill(&a), fill(&b));
            prop_assert_eq!(ha.merge(&hb).unwrap(), hb.merge(&ha).unwrap());
        }
    }
}
