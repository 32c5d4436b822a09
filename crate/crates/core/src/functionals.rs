use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, SpectralField};
use crate::kernel::{build_hartree_kernel, hartree_convolve};
use crate::model::Model;
use crate::spectral::{forward_transform, fractional_multiplier_table, inverse_transform};

/// Energy components of E(u) = kinetic + potential - hartree, where
///
///   kinetic   = 1/2 <(-Laplacian + m^2)^s u, u>
///   potential = 1/2 integral V |u|^2
///   hartree   = c/4 double integral |u(x)|^2 |u(y)|^2 / |x-y|^gamma
///
/// with c the Hartree coupling. `total` is always assembled as
/// kinetic + potential - hartree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub hartree: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn zero() -> Self {
        Self {
            kinetic: 0.0,
            potential: 0.0,
            hartree: 0.0,
            total: 0.0,
        }
    }
}

/// Discrete mass h^N sum |u_i|^2.
pub fn mass(field: &FieldState) -> f64 {
    field.mass()
}

/// Homogeneous seminorm sum over wavenumbers of |k|^{2s} |u_hat_k|^2, with
/// the quadrature weight chosen so the s = 0 case reproduces the mass
/// (Parseval). Accepts s = 0 for exactly that reason.
pub fn hs_seminorm_sq(field: &FieldState, s: f64) -> Result<f64> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "seminorm order must be nonnegative, got {s}"
        )));
    }
    let grid = *field.grid();
    let hat = forward_transform(field)?;
    let weight = grid.cell_volume() / grid.total_points() as f64;
    let mut acc = 0.0;
    for (flat, c) in hat.coeffs().iter().enumerate() {
        let ksq = grid.wavenumber_sq(flat);
        let w = if s == 0.0 { 1.0 } else { ksq.powf(s) };
        acc += w * c.norm_sqr();
    }
    Ok(acc * weight)
}

pub(crate) fn kinetic_quadratic(model: &Model, hat: &SpectralField) -> f64 {
    let grid = model.grid();
    let weight = grid.cell_volume() / grid.total_points() as f64;
    let acc: f64 = hat
        .coeffs()
        .iter()
        .zip(model.multiplier())
        .map(|(c, w)| w * c.norm_sqr())
        .sum();
    acc * weight
}

pub(crate) fn potential_quadratic(model: &Model, field: &FieldState) -> f64 {
    let acc: f64 = field
        .values()
        .iter()
        .zip(model.potential_values())
        .map(|(u, v)| v * u.norm_sqr())
        .sum();
    acc * model.grid().cell_volume()
}

/// Squared Sigma^s norm <(-Laplacian + m^2)^s u, u> + integral V |u|^2.
pub fn sigma_norm_sq(model: &Model, field: &FieldState) -> Result<f64> {
    let hat = model.transform(field)?;
    Ok(kinetic_quadratic(model, &hat) + potential_quadratic(model, field))
}

/// Same quantity from bare parameters instead of a built model; this is the
/// path that admits s = 0, where the multiplier degenerates to (m^2)^0 = 1
/// and the norm collapses to a weighted L^2 norm.
pub fn sigma_norm_sq_raw(field: &FieldState, s: f64, m: f64, potential: &[f64]) -> Result<f64> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "fractional order must be nonnegative, got {s}"
        )));
    }
    if !m.is_finite() || m < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mass parameter must be nonnegative, got {m}"
        )));
    }
    let grid = *field.grid();
    if potential.len() != grid.total_points() {
        return Err(Error::GridMismatch(format!(
            "potential has {} samples, grid has {}",
            potential.len(),
            grid.total_points()
        )));
    }
    let hat = forward_transform(field)?;
    let table = fractional_multiplier_table(&grid, s, m);
    let weight = grid.cell_volume() / grid.total_points() as f64;
    let kinetic: f64 = hat
        .coeffs()
        .iter()
        .zip(&table)
        .map(|(c, w)| w * c.norm_sqr())
        .sum();
    let pot: f64 = field
        .values()
        .iter()
        .zip(potential)
        .map(|(u, v)| v * u.norm_sqr())
        .sum();
    Ok(kinetic * weight + pot * grid.cell_volume())
}

/// Sesquilinear Sigma^s pairing, linear in `u`, conjugate-linear in `v`:
/// sum of the multiplier-weighted spectral pairing and the V-weighted
/// pointwise pairing. sigma_inner(u, u) recovers sigma_norm_sq.
pub fn sigma_inner(model: &Model, u: &FieldState, v: &FieldState) -> Result<Complex64> {
    let u_hat = model.transform(u)?;
    let v_hat = model.transform(v)?;
    let grid = model.grid();
    let weight = grid.cell_volume() / grid.total_points() as f64;
    let mut spectral = Complex64::new(0.0, 0.0);
    for ((a, b), w) in u_hat
        .coeffs()
        .iter()
        .zip(v_hat.coeffs())
        .zip(model.multiplier())
    {
        spectral += w * a * b.conj();
    }
    let mut pointwise = Complex64::new(0.0, 0.0);
    for ((a, b), v_val) in u.values().iter().zip(v.values()).zip(model.potential_values()) {
        pointwise += v_val * a * b.conj();
    }
    Ok(spectral * weight + pointwise * grid.cell_volume())
}

/// Bare quartic h^N sum (W * |u|^2) |u|^2, the double integral of
/// |u(x)|^2 |u(y)|^2 / |x-y|^gamma, independent of the coupling.
pub fn hartree_quartic(model: &Model, field: &FieldState) -> Result<f64> {
    let conv = hartree_convolve(field, model.kernel())?;
    Ok(quartic_given(model, field, &conv))
}

pub(crate) fn quartic_given(model: &Model, field: &FieldState, conv: &FieldState) -> f64 {
    let acc: f64 = field
        .values()
        .iter()
        .zip(conv.values())
        .map(|(u, w)| w.re * u.norm_sqr())
        .sum();
    acc * model.grid().cell_volume()
}

pub(crate) fn energy_given(
    model: &Model,
    field: &FieldState,
    hat: &SpectralField,
    conv: &FieldState,
) -> EnergyBreakdown {
    let kinetic = 0.5 * kinetic_quadratic(model, hat);
    let potential = 0.5 * potential_quadratic(model, field);
    let hartree = 0.25 * model.coupling() * quartic_given(model, field, conv);
    EnergyBreakdown {
        kinetic,
        potential,
        hartree,
        total: kinetic + potential - hartree,
    }
}

/// Full energy breakdown of E(u).
pub fn energy(model: &Model, field: &FieldState) -> Result<EnergyBreakdown> {
    let hat = model.transform(field)?;
    let conv = hartree_convolve(field, model.kernel())?;
    Ok(energy_given(model, field, &hat, &conv))
}

pub(crate) fn gradient_given(
    model: &Model,
    field: &FieldState,
    hat: &SpectralField,
    conv: &FieldState,
) -> FieldState {
    let grid = *model.grid();
    let mut kin_hat = hat.clone();
    for (c, w) in kin_hat.coeffs_mut().iter_mut().zip(model.multiplier()) {
        *c *= *w;
    }
    let kin = inverse_transform(&kin_hat);
    let c = model.coupling();
    let values: Vec<Complex64> = field
        .values()
        .iter()
        .zip(kin.values())
        .zip(conv.values())
        .zip(model.potential_values())
        .map(|(((u, a), w), v)| a + (v - c * w.re) * u)
        .collect();
    FieldState::from_values_unchecked(grid, values)
}

/// L^2 gradient of the energy: (-Laplacian + m^2)^s u + V u - c (W*|u|^2) u,
/// normalized so that d/de E(u + e phi) = Re <phi, grad>_{L^2,h} at e = 0.
pub fn energy_gradient(model: &Model, field: &FieldState) -> Result<FieldState> {
    let hat = model.transform(field)?;
    let conv = hartree_convolve(field, model.kernel())?;
    Ok(gradient_given(model, field, &hat, &conv))
}

/// Interpolation-inequality ratio
///
///   D(u) / ( ||u||_{Hdot^s}^{gamma/s} . ||u||_2^{(4s-gamma)/s} )
///
/// with D the bare quartic. Invariant under amplitude scaling and (up to
/// discretization) under the mass-preserving dilation; its supremum over
/// fields is the empirical inequality constant.
pub fn gn_ratio(model: &Model, field: &FieldState) -> Result<f64> {
    model.check_grid(field)?;
    if field.is_zero() {
        return Err(Error::ZeroField("gn_ratio".into()));
    }
    let s = model.params().s;
    let gamma = model.params().gamma;
    let quartic = hartree_quartic(model, field)?;
    let hs = hs_seminorm_sq(field, s)?;
    let m = mass(field);
    if hs <= 0.0 {
        return Err(Error::ZeroField(
            "gn_ratio needs a field with nonzero seminorm".into(),
        ));
    }
    Ok(quartic / (hs.powf(0.5 * gamma / s) * m.powf(0.5 * (4.0 * s - gamma) / s)))
}

/// sup over x of (|x|^{-2s} * |u|^2)(x), the left side of the fractional
/// Hardy bound. Requires 2s < N so the kernel exponent stays integrable.
pub fn hardy_sup(field: &FieldState, s: f64) -> Result<f64> {
    let grid = *field.grid();
    if !s.is_finite() || s <= 0.0 || 2.0 * s >= grid.dim() as f64 {
        return Err(Error::InvalidParameter(format!(
            "hardy bound needs 0 < 2s < N, got s = {s} in dimension {}",
            grid.dim()
        )));
    }
    let kernel = build_hartree_kernel(grid, 2.0 * s)?;
    let conv = hartree_convolve(field, &kernel)?;
    Ok(conv
        .values()
        .iter()
        .map(|c| c.re)
        .fold(0.0f64, |a, b| a.max(b)))
}

/// hardy_sup normalized by the squared seminorm; bounded over fields by the
/// Hardy constant.
pub fn hardy_ratio(field: &FieldState, s: f64) -> Result<f64> {
    let sup = hardy_sup(field, s)?;
    let hs = hs_seminorm_sq(field, s)?;
    if hs <= 0.0 {
        return Err(Error::ZeroField(
            "hardy ratio needs a field with nonzero seminorm".into(),
        ));
    }
    Ok(sup / hs)
}
