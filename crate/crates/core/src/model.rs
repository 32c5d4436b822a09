use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, SpectralField};
use crate::grid::GridSpec;
use crate::kernel::{build_hartree_kernel, HartreeKernel};
use crate::potential::{sample_potential, PotentialSpec};
use crate::spectral::{forward_transform, fractional_multiplier_table, inverse_transform};

/// Physical parameters of the model
///
///   i u_t = (-Laplacian + m^2)^s u + V(x) u - c (|x|^{-gamma} * |u|^2) u
///
/// `hartree_coupling` is the prefactor c; setting it to zero gives the
/// linear limit, 1 the standard equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s: f64,
    pub m: f64,
    pub gamma: f64,
    pub potential: PotentialSpec,
    pub mass_target: f64,
    #[serde(default = "default_coupling")]
    pub hartree_coupling: f64,
}

fn default_coupling() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(s: f64, m: f64, gamma: f64, potential: PotentialSpec, mass_target: f64) -> Self {
        Self {
            s,
            m,
            gamma,
            potential,
            mass_target,
            hartree_coupling: 1.0,
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.hartree_coupling = coupling;
        self
    }

    /// Parameter validation against a grid dimension. Hard errors for values
    /// the discretization cannot represent; the softer structural conditions
    /// of the stability theory (gamma < 2s, s < N/2) are reported through
    /// `is_subcritical` and log warnings instead.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.s.is_finite() || self.s <= 0.0 || self.s > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "fractional order s must lie in (0, 1], got {}",
                self.s
            )));
        }
        if !self.m.is_finite() || self.m < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mass parameter m must be nonnegative, got {}",
                self.m
            )));
        }
        let gamma_cap = (4.0 * self.s).min(dim as f64);
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma >= gamma_cap {
            return Err(Error::InvalidParameter(format!(
                "kernel exponent gamma must lie in (0, min(4s, N)) = (0, {gamma_cap}), got {}",
                self.gamma
            )));
        }
        if !self.mass_target.is_finite() || self.mass_target <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mass target must be positive, got {}",
                self.mass_target
            )));
        }
        if !self.hartree_coupling.is_finite() || self.hartree_coupling < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "hartree coupling must be finite and nonnegative, got {}",
                self.hartree_coupling
            )));
        }
        self.potential.validate(dim)?;
        Ok(())
    }

    /// gamma < 2s, the mass-subcritical window the stability results cover.
    pub fn is_subcritical(&self) -> bool {
        self.gamma < 2.0 * self.s
    }
}

/// A parameter set bound to a grid, with the sampled potential, the Hartree
/// kernel, and the kinetic multiplier table precomputed. Everything
/// downstream (functionals, flows, integrators) works off this bundle so the
/// expensive setups happen once.
#[derive(Debug, Clone)]
pub struct Model {
    grid: GridSpec,
    params: ModelParams,
    potential_values: Vec<f64>,
    kernel: HartreeKernel,
    multiplier: Vec<f64>,
    subcritical: bool,
}

impl Model {
    pub fn new(grid: GridSpec, params: ModelParams) -> Result<Self> {
        params.validate(grid.dim())?;
        let subcritical = params.is_subcritical();
        if !subcritical {
            log::warn!(
                "gamma = {} is not below 2s = {}; outside the subcritical regime",
                params.gamma,
                2.0 * params.s
            );
        }
        if params.s >= grid.dim() as f64 / 2.0 {
            log::warn!(
                "s = {} is not below N/2 = {}; outside the dimension condition",
                params.s,
                grid.dim() as f64 / 2.0
            );
        }
        if params.potential.is_zero_kind() {
            log::warn!("zero potential is not confining; outside the stability hypotheses");
        }
        let potential_values = sample_potential(&grid, &params.potential)?;
        let kernel = build_hartree_kernel(grid, params.gamma)?;
        let multiplier = fractional_multiplier_table(&grid, params.s, params.m);
        Ok(Self {
            grid,
            params,
            potential_values,
            kernel,
            multiplier,
            subcritical,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.potential_values
    }

    pub fn kernel(&self) -> &HartreeKernel {
        &self.kernel
    }

    /// Kinetic symbol (|k|^2 + m^2)^s per flat spectral index.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn is_subcritical(&self) -> bool {
        self.subcritical
    }

    pub fn coupling(&self) -> f64 {
        self.params.hartree_coupling
    }

    pub fn check_grid(&self, field: &FieldState) -> Result<()> {
        if *field.grid() != self.grid {
            return Err(Error::GridMismatch(
                "field grid does not match the model grid".into(),
            ));
        }
        Ok(())
    }

    /// (-Laplacian + m^2)^s u using the cached multiplier table.
    pub fn apply_kinetic(&self, field: &FieldState) -> Result<FieldState> {
        self.check_grid(field)?;
        let mut hat = forward_transform(field)?;
        for (c, w) in hat.coeffs_mut().iter_mut().zip(&self.multiplier) {
            *c *= *w;
        }
        Ok(inverse_transform(&hat))
    }

    /// Forward transform with the model's grid checked first.
    pub fn transform(&self, field: &FieldState) -> Result<SpectralField> {
        self.check_grid(field)?;
        forward_transform(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn line_grid() -> GridSpec {
        GridSpec::new(1, 8.0, 64).unwrap()
    }

    #[test]
    fn builds_with_standard_parameters() {
        let params = ModelParams::new(0.5, 1.0, 0.5, PotentialSpec::harmonic(), 1.0);
        let model = Model::new(line_grid(), params).unwrap();
        assert!(model.is_subcritical());
        assert_eq!(model.potential_values().len(), 64);
        assert_eq!(model.multiplier().len(), 64);
    }

    #[test]
    fn rejects_out_of_range_s() {
        for s in [0.0, -0.5, 1.5, f64::NAN] {
            let params = ModelParams::new(s, 1.0, 0.5, PotentialSpec::harmonic(), 1.0);
            assert!(Model::new(line_grid(), params).is_err(), "s = {s}");
        }
    }

    #[test]
    fn rejects_gamma_at_dimension() {
        let params = ModelParams::new(0.9, 1.0, 1.0, PotentialSpec::harmonic(), 1.0);
        assert!(Model::new(line_grid(), params).is_err());
    }

    #[test]
    fn rejects_gamma_at_four_s() {
        // in 2D with s = 0.2 the cap is 4s = 0.8, below the dimension
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let params = ModelParams::new(0.2, 1.0, 0.9, PotentialSpec::harmonic(), 1.0);
        assert!(Model::new(grid, params).is_err());
    }

    #[test]
    fn massless_operator_is_allowed() {
        let params = ModelParams::new(1.0, 0.0, 0.5, PotentialSpec::harmonic(), 1.0);
        assert!(Model::new(line_grid(), params).is_ok());
    }

    #[test]
    fn supercritical_gamma_is_allowed_but_flagged() {
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let params = ModelParams::new(0.6, 1.0, 1.5, PotentialSpec::harmonic(), 1.0);
        let model = Model::new(grid, params).unwrap();
        assert!(!model.is_subcritical());
    }

    #[test]
    fn kinetic_on_constant_scales_by_mass_power() {
        // constant field: only the k = 0 coefficient, so A u = (m^2)^s u
        let params = ModelParams::new(0.5, 2.0, 0.5, PotentialSpec::harmonic(), 1.0);
        let model = Model::new(line_grid(), params).unwrap();
        let u = FieldState::constant(line_grid(), Complex64::new(0.3, -0.1));
        let au = model.apply_kinetic(&u).unwrap();
        for (a, b) in au.values().iter().zip(u.values()) {
            assert!((a - b * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let params = ModelParams::new(0.5, 1.0, 0.5, PotentialSpec::harmonic(), 1.0);
        let model = Model::new(line_grid(), params).unwrap();
        let other = FieldState::zeros(GridSpec::new(1, 8.0, 32).unwrap());
        assert!(model.apply_kinetic(&other).is_err());
    }

    #[test]
    fn zero_coupling_validates() {
        let params =
            ModelParams::new(0.5, 1.0, 0.5, PotentialSpec::harmonic(), 1.0).with_coupling(0.0);
        assert!(Model::new(line_grid(), params).is_ok());
    }
}
