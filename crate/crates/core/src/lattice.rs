//! Spatial grid and time-slicing plan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equidistant points `x_0 .. x_D` on `[x_min, x_max]`.
///
/// Points are always computed from their index, never by accumulating the
/// spacing, so `point(i)` and `point(D - i)` are exact negatives on a
/// symmetric interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    intervals: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, intervals: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("interval bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min ({x_min}) must be below x_max ({x_max})"
            )));
        }
        if intervals < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 intervals, got {intervals}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            intervals,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of intervals `D`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of points `D + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.intervals as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i <= self.intervals);
        if i == self.intervals {
            return self.x_max;
        }
        // Symmetric form: the two halves are mirror images bit for bit when
        // x_min = -x_max.
        let d = self.intervals as f64;
        let i = i as f64;
        (self.x_min * (d - i) + self.x_max * i) / d
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub fn is_symmetric(&self) -> bool {
        self.x_min == -self.x_max
    }
}

/// Time slicing of one propagator block: `N` slices of length `dt = T / N`,
/// repeated for `N_T` blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSlicing {
    block_time: f64,
    slices: usize,
    blocks: usize,
}

impl TimeSlicing {
    pub fn new(block_time: f64, slices: usize, blocks: usize) -> Result<Self> {
        if !(block_time.is_finite() && block_time > 0.0) {
            return Err(Error::InvalidSlicing(format!(
                "block time must be positive, got {block_time}"
            )));
        }
        if !slices.is_power_of_two() {
            return Err(Error::InvalidSlicing(format!(
                "slices per block must be a power of two, got {slices}"
            )));
        }
        if blocks < 1 {
            return Err(Error::InvalidSlicing("need at least one block".into()));
        }
        Ok(Self {
            block_time,
            slices,
            blocks,
        })
    }

    /// Elapsed time `T` of one composed block.
    pub fn block_time(&self) -> f64 {
        self.block_time
    }

    /// Slices per block `N`.
    pub fn slices(&self) -> usize {
        self.slices
    }

    /// Number of blocks `N_T`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn dt(&self) -> f64 {
        self.block_time / self.slices as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn paper_grid_spacing() {
        let g = SpatialGrid::new(-7.0, 7.0, 600).unwrap();
        assert_eq!(g.len(), 601);
        assert!((g.dx() - 14.0 / 600.0).abs() < 1e-15);
        assert!((g.dx() - 0.023333).abs() < 1e-6);
    }

    #[test]
    fn unit_interval_with_two_intervals() {
        let g = SpatialGrid::new(0.0, 1.0, 2).unwrap();
        assert_eq!(g.points().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn symmetric_midpoint_is_exact_zero() {
        let g = SpatialGrid::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.point(2), 0.0);
    }

    #[test]
    fn mirrored_points_are_exact_negatives() {
        for d in [2usize, 3, 7, 300, 600, 601, 1024] {
            let g = SpatialGrid::new(-7.0, 7.0, d).unwrap();
            for i in 0..=d {
                assert_eq!(g.point(i), -g.point(d - i), "D = {d}, i = {i}");
            }
        }
    }

    #[test]
    fn points_strictly_increase() {
        let g = SpatialGrid::new(-3.3, 9.1, 777).unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pts[0], -3.3);
        assert_eq!(pts[777], 9.1);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(SpatialGrid::new(1.0, -1.0, 10), Err(Error::InvalidGrid(_))));
        assert!(matches!(SpatialGrid::new(1.0, 1.0, 10), Err(Error::InvalidGrid(_))));
        assert!(matches!(SpatialGrid::new(-1.0, 1.0, 1), Err(Error::InvalidGrid(_))));
        assert!(SpatialGrid::new(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn slicing_examples() {
        let s = TimeSlicing::new(2.0 * PI / 16.0, 4, 1).unwrap();
        assert!((s.dt() - 2.0 * PI / 64.0).abs() < 1e-15);
        let s = TimeSlicing::new(PI / 7.0, 4, 1024).unwrap();
        assert!((s.dt() - PI / 28.0).abs() < 1e-15);
        assert_eq!(s.blocks(), 1024);
        assert_eq!(TimeSlicing::new(1.0, 1, 1).unwrap().dt(), 1.0);
    }

    #[test]
    fn slicing_rejects_non_power_of_two() {
        assert!(matches!(TimeSlicing::new(1.0, 3, 1), Err(Error::InvalidSlicing(_))));
        assert!(matches!(TimeSlicing::new(1.0, 0, 1), Err(Error::InvalidSlicing(_))));
        assert!(TimeSlicing::new(-1.0, 4, 1).is_err());
        assert!(TimeSlicing::new(1.0, 4, 0).is_err());
    }
}
