use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic-box discretization of R^N truncated to [-L, L)^N.
///
/// Each axis carries `points_per_axis` equispaced samples with spacing
/// `h = 2 L / n`; sample j sits at `x_j = -L + j h`. Wavenumbers follow the
/// standard transform ordering `k_j = (pi / L) m_j` with
/// `m_j in {0, .., n/2 - 1, -n/2, .., -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let n = points_per_axis;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing h = 2L/n.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Total number of samples n^N.
    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight h^N of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume (2L)^N of the periodic box.
    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Coordinate of sample j along any axis.
    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Integer mode number m_j for transform index j.
    pub fn axis_mode(&self, j: usize) -> i64 {
        let n = self.points_per_axis;
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Wavenumber k_j = (pi / L) m_j for transform index j.
    pub fn axis_wavenumber(&self, j: usize) -> f64 {
        PI / self.half_width * self.axis_mode(j) as f64
    }

    /// Minimum-image displacement for offset index o: o h folded into [-L, L).
    pub fn axis_min_image(&self, o: usize) -> f64 {
        let n = self.points_per_axis;
        if o < n / 2 {
            o as f64 * self.spacing()
        } else {
            (o as f64 - n as f64) * self.spacing()
        }
    }

    /// All axis coordinates, in sample order.
    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|j| self.axis_coord(j)).collect()
    }

    /// All axis wavenumbers, in transform order.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        (0..self.points_per_axis)
            .map(|j| self.axis_wavenumber(j))
            .collect()
    }

    /// Decompose a row-major flat index into per-axis indices.
    /// Unused trailing axes are zero.
    pub fn decompose(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for d in (0..self.dim).rev() {
            idx[d] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Row-major flat index from per-axis indices.
    pub fn compose(&self, idx: &[usize; 3]) -> usize {
        let n = self.points_per_axis;
        let mut flat = 0;
        for d in 0..self.dim {
            flat = flat * n + idx[d];
        }
        flat
    }

    /// Physical coordinates of a flat sample index.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.decompose(flat);
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = self.axis_coord(idx[d]);
        }
        x
    }

    /// Squared wavenumber |k|^2 of a flat transform index.
    pub fn wavenumber_sq(&self, flat: usize) -> f64 {
        let idx = self.decompose(flat);
        let mut ksq = 0.0;
        for d in 0..self.dim {
            let k = self.axis_wavenumber(idx[d]);
            ksq += k * k;
        }
        ksq
    }

    /// |k|^2 for every flat transform index.
    pub fn wavenumber_sq_table(&self) -> Vec<f64> {
        let n = self.points_per_axis;
        let axis_ksq: Vec<f64> = (0..n)
            .map(|j| {
                let k = self.axis_wavenumber(j);
                k * k
            })
            .collect();
        let total = self.total_points();
        let mut table = vec![0.0; total];
        for (flat, slot) in table.iter_mut().enumerate() {
            let idx = self.decompose(flat);
            let mut ksq = 0.0;
            for d in 0..self.dim {
                ksq += axis_ksq[idx[d]];
            }
            *slot = ksq;
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimension() {
        assert!(GridSpec::new(0, 8.0, 16).is_err());
        assert!(GridSpec::new(4, 8.0, 16).is_err());
    }

    #[test]
    fn rejects_non_power_of_two_or_small_n() {
        assert!(GridSpec::new(1, 8.0, 12).is_err());
        assert!(GridSpec::new(1, 8.0, 4).is_err());
        assert!(GridSpec::new(1, 8.0, 8).is_ok());
    }

    #[test]
    fn rejects_nonpositive_half_width() {
        assert!(GridSpec::new(1, 0.0, 16).is_err());
        assert!(GridSpec::new(1, -1.0, 16).is_err());
    }

    #[test]
    fn spacing_is_exact() {
        let g = GridSpec::new(1, 8.0, 256).unwrap();
        assert_eq!(g.spacing(), 16.0 / 256.0);
        assert_eq!(g.axis_coord(0), -8.0);
        assert_eq!(g.axis_coord(128), 0.0);
    }

    #[test]
    fn wavenumber_ordering_matches_transform_convention() {
        let g = GridSpec::new(1, 4.0, 8).unwrap();
        let modes: Vec<i64> = (0..8).map(|j| g.axis_mode(j)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.axis_wavenumber(1), PI / 4.0);
    }

    #[test]
    fn compose_decompose_roundtrip() {
        let g = GridSpec::new(3, 2.0, 8).unwrap();
        for flat in [0usize, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.compose(&g.decompose(flat)), flat);
        }
    }

    #[test]
    fn min_image_folds_into_box() {
        let g = GridSpec::new(1, 4.0, 8).unwrap();
        let d: Vec<f64> = (0..8).map(|o| g.axis_min_image(o)).collect();
        assert_eq!(d, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }
}
