use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Complex-valued field sampled on the grid, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl FieldState {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.total_points()],
        }
    }

    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.total_points()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.total_points(),
                values.len()
            )));
        }
        let field = Self { grid, values };
        field.validate()?;
        Ok(field)
    }

    /// Build from a function of the physical coordinates.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.total_points())
            .map(|flat| f(&grid.coords(flat)))
            .collect();
        Self { grid, values }
    }

    /// Plane wave `amp * exp(i k . x)` with k = (pi/L) * modes.
    pub fn plane_wave(grid: GridSpec, modes: &[i64], amplitude: Complex64) -> Result<Self> {
        if modes.len() != grid.dim() {
            return Err(Error::InvalidField(format!(
                "plane wave needs {} mode numbers, got {}",
                grid.dim(),
                modes.len()
            )));
        }
        let n = grid.points_per_axis() as i64;
        for &m in modes {
            if m < -n / 2 || m >= n / 2 {
                return Err(Error::InvalidField(format!(
                    "mode number {m} outside [{}, {})",
                    -n / 2,
                    n / 2
                )));
            }
        }
        let ks: Vec<f64> = modes
            .iter()
            .map(|&m| std::f64::consts::PI / grid.half_width() * m as f64)
            .collect();
        Ok(Self::from_fn(grid, |x| {
            let phase: f64 = ks.iter().zip(x.iter()).map(|(k, xi)| k * xi).sum();
            amplitude * Complex64::new(0.0, phase).exp()
        }))
    }

    /// Isotropic Gaussian `exp(-|x|^2 / (2 w^2))` rescaled to the given
    /// discrete mass.
    pub fn gaussian(grid: GridSpec, width: f64, mass: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidField(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidField(format!(
                "target mass must be positive, got {mass}"
            )));
        }
        let mut field = Self::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|xi| xi * xi).sum();
            Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        });
        field.rescale_to_mass(mass);
        Ok(field)
    }

    /// Seeded random band-limited field: uniform complex coefficients on the
    /// lower quarter of the mode range with a Gaussian spectral envelope,
    /// rescaled to the given discrete mass. Deterministic per seed.
    pub fn random_band_limited(grid: GridSpec, seed: u64, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidField(format!(
                "target mass must be positive, got {mass}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.points_per_axis();
        let band = (n / 4).max(2) as i64;
        let k0 = std::f64::consts::PI / grid.half_width() * (band as f64 / 2.0);
        let total = grid.total_points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); total];
        for (flat, c) in coeffs.iter_mut().enumerate() {
            let idx = grid.decompose(flat);
            let mut in_band = true;
            let mut ksq = 0.0;
            for d in 0..grid.dim() {
                let m = grid.axis_mode(idx[d]);
                if m.abs() > band {
                    in_band = false;
                }
                let k = grid.axis_wavenumber(idx[d]);
                ksq += k * k;
            }
            if !in_band {
                continue;
            }
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            let envelope = (-ksq / (2.0 * k0 * k0)).exp();
            *c = Complex64::new(re, im) * envelope;
        }
        let spectral = SpectralField::from_coeffs(grid, coeffs)?;
        let mut field = crate::spectral::inverse_transform(&spectral);
        field.rescale_to_mass(mass);
        Ok(field)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Rebuild from raw values without the finiteness check. Internal helper
    /// for operators whose output is finite by construction.
    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.total_points());
        Self { grid, values }
    }

    /// Reject NaN or infinite samples.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidField(format!(
                    "non-finite sample {v} at index {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Discrete L^2 mass h^N sum |u_i|^2.
    pub fn mass(&self) -> f64 {
        let w = self.grid.cell_volume();
        w * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Multiply in place so the discrete mass becomes `mass`.
    pub fn rescale_to_mass(&mut self, mass: f64) {
        let current = self.mass();
        assert!(current > 0.0, "cannot rescale a zero field");
        let factor = (mass / current).sqrt();
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Global phase rotation u -> e^{i theta} u.
    pub fn rotated(&self, theta: f64) -> Self {
        let phase = Complex64::new(0.0, theta).exp();
        let values = self.values.iter().map(|v| v * phase).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// u + alpha * w on a shared grid.
    pub fn add_scaled(&self, other: &Self, alpha: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "cannot combine fields on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }
}

/// Transform-space representation of a field, in standard transform ordering.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.total_points() {
            return Err(Error::InvalidField(format!(
                "expected {} coefficients, got {}",
                grid.total_points(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_coeffs_unchecked(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.total_points());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }
}
