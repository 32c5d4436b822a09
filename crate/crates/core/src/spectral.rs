use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::field::{FieldState, SpectralField};
use crate::grid::GridSpec;

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

/// Shared plan lookup. Plans are immutable and cheap to clone out of the
/// planner cache, so concurrent workers only contend on the lookup itself.
fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut planner = planner.lock().unwrap();
    if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    }
}

/// Unnormalized transform along every axis of a row-major n^N block.
fn fft_along_axes(values: &mut [Complex64], grid: &GridSpec, forward: bool) {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    let total = values.len();
    for d in 0..dim {
        let stride = n.pow((dim - 1 - d) as u32);
        if stride == 1 {
            for chunk in values.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
        } else {
            let mut line = vec![Complex64::ZERO; n];
            let block = stride * n;
            for block_start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = block_start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = values[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        values[base + j * stride] = *value;
                    }
                }
            }
        }
    }
}

/// Forward discrete transform. A plane wave `exp(i (pi/L) m . x)` maps to a
/// single nonzero coefficient at the index of mode m.
pub fn forward_transform(field: &FieldState) -> Result<SpectralField> {
    field.validate()?;
    let mut coeffs = field.values().to_vec();
    fft_along_axes(&mut coeffs, field.grid(), true);
    Ok(SpectralField::from_coeffs_unchecked(*field.grid(), coeffs))
}

/// Inverse transform, normalized so `inverse(forward(u)) = u`.
pub fn inverse_transform(spectral: &SpectralField) -> FieldState {
    let grid = *spectral.grid();
    let mut values = spectral.coeffs().to_vec();
    fft_along_axes(&mut values, &grid, false);
    let scale = 1.0 / grid.total_points() as f64;
    for v in &mut values {
        *v *= scale;
    }
    FieldState::from_values_unchecked(grid, values)
}

/// Table of (|k|^2 + m^2)^s over all transform indices.
pub fn fractional_multiplier_table(grid: &GridSpec, s: f64, m: f64) -> Vec<f64> {
    grid.wavenumber_sq_table()
        .into_iter()
        .map(|ksq| (ksq + m * m).powf(s))
        .collect()
}

/// Apply the Fourier multiplier (|k|^2 + m^2)^s, i.e. the operator
/// (-Lap + m^2)^s on the discrete wavenumber lattice.
pub fn apply_fractional(field: &FieldState, s: f64, m: f64) -> Result<FieldState> {
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "fractional order s must be positive, got {s}"
        )));
    }
    if !m.is_finite() || m < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mass parameter m must be nonnegative, got {m}"
        )));
    }
    let dim = field.grid().dim() as f64;
    if s >= dim / 2.0 {
        log::warn!("fractional order s = {s} outside (0, N/2) for N = {dim}");
    }
    let mut spectral = forward_transform(field)?;
    let table = fractional_multiplier_table(field.grid(), s, m);
    for (c, w) in spectral.coeffs_mut().iter_mut().zip(&table) {
        *c *= w;
    }
    Ok(inverse_transform(&spectral))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_transforms_to_dc_only() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = FieldState::constant(g, Complex64::new(1.0, 0.0));
        let s = forward_transform(&f).unwrap();
        assert!((s.coeffs()[0] - Complex64::new(16.0, 0.0)).norm() < 1e-12);
        for c in &s.coeffs()[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn unit_mode_plane_wave_hits_single_coefficient() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = FieldState::plane_wave(g, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let s = forward_transform(&f).unwrap();
        for (j, c) in s.coeffs().iter().enumerate() {
            if j == 1 {
                assert!(c.norm() > 15.9);
            } else {
                assert!(c.norm() < 1e-10, "leakage at index {j}: {c}");
            }
        }
    }

    #[test]
    fn negative_mode_lands_in_upper_half() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = FieldState::plane_wave(g, &[-3], Complex64::new(1.0, 0.0)).unwrap();
        let s = forward_transform(&f).unwrap();
        let hot = 16 - 3;
        for (j, c) in s.coeffs().iter().enumerate() {
            if j == hot {
                assert!(c.norm() > 15.9);
            } else {
                assert!(c.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn roundtrip_2d() {
        let g = GridSpec::new(2, 4.0, 16).unwrap();
        let f = FieldState::random_band_limited(g, 11, 1.0).unwrap();
        let back = inverse_transform(&forward_transform(&f).unwrap());
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn apply_fractional_rejects_bad_orders() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = FieldState::constant(g, Complex64::new(1.0, 0.0));
        assert!(apply_fractional(&f, 0.0, 0.0).is_err());
        assert!(apply_fractional(&f, -0.5, 0.0).is_err());
        assert!(apply_fractional(&f, 0.4, -1.0).is_err());
    }

    #[test]
    fn constant_field_scales_by_mass_power() {
        // multiplier at k = 0 is (m^2)^s
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = FieldState::constant(g, Complex64::new(1.0, 0.0));
        let out = apply_fractional(&f, 0.5, 2.0).unwrap();
        for v in out.values() {
            assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
    }
}
