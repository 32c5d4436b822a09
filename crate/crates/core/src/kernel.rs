use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::GridSpec;
use crate::spectral;

/// Periodicized Riesz-type kernel |x|^{-gamma} sampled with the minimum-image
/// convention, origin cell replaced by its analytic cell average. The spectral
/// samples carry the h^N quadrature factor, so multiplying a density transform
/// by them and inverting yields the discrete convolution h^N sum K(x-y) f(y).
#[derive(Debug, Clone)]
pub struct HartreeKernel {
    grid: GridSpec,
    gamma: f64,
    samples: Vec<f64>,
    spectral_samples: Vec<f64>,
}

impl HartreeKernel {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Regularized real-space samples, indexed by minimum-image offset.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn spectral_samples(&self) -> &[f64] {
        &self.spectral_samples
    }

    /// Cell-average value substituted at the origin.
    pub fn origin_cell_average(&self) -> f64 {
        self.samples[0]
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor Gauss-Legendre integral of |u|^{-gamma} over an axis-aligned box
/// bounded away from the origin.
fn box_integral(lo: &[f64], hi: &[f64], gamma: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let dim = lo.len();
    let order = nodes.len();
    let mut mapped: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(dim);
    for d in 0..dim {
        let mid = 0.5 * (hi[d] + lo[d]);
        let half = 0.5 * (hi[d] - lo[d]);
        let xs: Vec<f64> = nodes.iter().map(|t| mid + half * t).collect();
        let ws: Vec<f64> = weights.iter().map(|w| w * half).collect();
        mapped.push((xs, ws));
    }
    let count = order.pow(dim as u32);
    let mut sum = 0.0;
    for flat in 0..count {
        let mut rem = flat;
        let mut r2 = 0.0;
        let mut w = 1.0;
        for (xs, ws) in &mapped {
            let i = rem % order;
            rem /= order;
            r2 += xs[i] * xs[i];
            w *= ws[i];
        }
        sum += w * r2.powf(-gamma / 2.0);
    }
    sum
}

/// Integral of |u|^{-gamma} over the unit corner cube [0,1]^N.
///
/// The dyadic shells D_k = [0, 2^-k]^N \ [0, 2^-(k+1)]^N scale as
/// 2^{-k(N-gamma)}, so the whole integral is the outermost shell divided by
/// (1 - 2^{gamma-N}). The shell splits into N boxes with |u| >= 1/2, where
/// tensor Gauss-Legendre converges geometrically.
pub(crate) fn unit_corner_integral(dim: usize, gamma: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(48);
    let mut shell = 0.0;
    for d in 0..dim {
        // box: axis d in [1/2, 1], axes before d in [0, 1/2], axes after in [0, 1]
        let mut lo = vec![0.0; dim];
        let mut hi = vec![1.0; dim];
        for e in 0..d {
            hi[e] = 0.5;
        }
        lo[d] = 0.5;
        hi[d] = 1.0;
        shell += box_integral(&lo, &hi, gamma, &nodes, &weights);
    }
    shell / (1.0 - (2.0f64).powf(gamma - dim as f64))
}

/// Analytic cell average (1/h^N) * integral over [-h/2, h/2]^N of |x|^{-gamma}.
pub fn origin_cell_average(grid: &GridSpec, gamma: f64) -> f64 {
    let h = grid.spacing();
    (h / 2.0).powf(-gamma) * unit_corner_integral(grid.dim(), gamma)
}

pub fn build_hartree_kernel(grid: GridSpec, gamma: f64) -> Result<HartreeKernel> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel exponent gamma must be positive, got {gamma}"
        )));
    }
    if gamma >= grid.dim() as f64 {
        return Err(Error::InvalidParameter(format!(
            "kernel exponent gamma = {gamma} must be below the dimension {} (origin cell average diverges)",
            grid.dim()
        )));
    }

    let total = grid.total_points();
    let mut samples = vec![0.0; total];
    for (flat, slot) in samples.iter_mut().enumerate() {
        let idx = grid.decompose(flat);
        let mut r2 = 0.0;
        for d in 0..grid.dim() {
            let x = grid.axis_min_image(idx[d]);
            r2 += x * x;
        }
        *slot = r2.powf(-gamma / 2.0);
    }
    samples[0] = origin_cell_average(&grid, gamma);

    let complex: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let field = FieldState::from_values_unchecked(grid, complex);
    let transform = spectral::forward_transform(&field)?;
    let max_mag = transform
        .coeffs()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let max_imag = transform
        .coeffs()
        .iter()
        .map(|c| c.im.abs())
        .fold(0.0, f64::max);
    if max_imag > 1e-12 * max_mag {
        return Err(Error::InvalidParameter(format!(
            "kernel transform unexpectedly complex: max imag {max_imag:.3e} vs max magnitude {max_mag:.3e}"
        )));
    }
    let weight = grid.cell_volume();
    let spectral_samples = transform.coeffs().iter().map(|c| c.re * weight).collect();

    Ok(HartreeKernel {
        grid,
        gamma,
        samples,
        spectral_samples,
    })
}

/// Discrete periodic convolution of the kernel with |field|^2, i.e. the
/// Hartree potential W * |u|^2 sampled on the grid. Output is real-valued.
pub fn hartree_convolve(field: &FieldState, kernel: &HartreeKernel) -> Result<FieldState> {
    if field.grid() != kernel.grid() {
        return Err(Error::GridMismatch(
            "field and kernel live on different grids".into(),
        ));
    }
    let density: Vec<Complex64> = field
        .values()
        .iter()
        .map(|v| Complex64::new(v.norm_sqr(), 0.0))
        .collect();
    let density = FieldState::from_values_unchecked(*field.grid(), density);
    let mut transform = spectral::forward_transform(&density)?;
    for (c, w) in transform
        .coeffs_mut()
        .iter_mut()
        .zip(&kernel.spectral_samples)
    {
        *c *= w;
    }
    let raw = spectral::inverse_transform(&transform);
    let max_mag = raw.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let max_imag = raw.values().iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if max_imag > 1e-12 * max_mag.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidField(format!(
            "convolution output unexpectedly complex: max imag {max_imag:.3e} vs max magnitude {max_mag:.3e}"
        )));
    }
    let values = raw
        .values()
        .iter()
        .map(|c| Complex64::new(c.re, 0.0))
        .collect();
    Ok(FieldState::from_values_unchecked(*field.grid(), values))
}
