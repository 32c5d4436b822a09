// Independent reference implementations the integration tests check the
// library against. Everything here favors obviousness over speed: direct
// O(n^2) transforms, double-sum convolutions, quadrature built on adaptive
// Simpson, and brute-force scans.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

use hartree_lab::{
    energy, sigma_norm_sq, strang_step, FieldState, GridSpec, Model,
};

/// Direct O(total^2) forward DFT with the same mode ordering as the library:
/// hat_m = sum_j u_j exp(-2 pi i <j, m> / n) per axis.
pub fn direct_dft(field: &FieldState) -> Vec<Complex64> {
    let grid = field.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let total = grid.total_points();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (flat_m, slot) in out.iter_mut().enumerate() {
        let midx = grid.decompose(flat_m);
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat_j, value) in field.values().iter().enumerate() {
            let jidx = grid.decompose(flat_j);
            let mut phase = 0.0;
            for d in 0..dim {
                phase += jidx[d] as f64 * midx[d] as f64;
            }
            phase *= -2.0 * PI / n as f64;
            acc += value * Complex64::cis(phase);
        }
        *slot = acc;
    }
    out
}

/// Direct inverse of [`direct_dft`].
pub fn direct_inverse_dft(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let total = grid.total_points();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (flat_j, slot) in out.iter_mut().enumerate() {
        let jidx = grid.decompose(flat_j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat_m, coeff) in coeffs.iter().enumerate() {
            let midx = grid.decompose(flat_m);
            let mut phase = 0.0;
            for d in 0..dim {
                phase += jidx[d] as f64 * midx[d] as f64;
            }
            phase *= 2.0 * PI / n as f64;
            acc += coeff * Complex64::cis(phase);
        }
        *slot = acc / total as f64;
    }
    out
}

/// Dense application of the multiplier (|k|^2 + m^2)^s through the direct
/// transforms.
pub fn direct_fractional(field: &FieldState, s: f64, m: f64) -> Vec<Complex64> {
    let grid = field.grid();
    let mut hat = direct_dft(field);
    for (flat, c) in hat.iter_mut().enumerate() {
        let idx = grid.decompose(flat);
        let mut ksq = 0.0;
        for d in 0..grid.dim() {
            let k = grid.axis_wavenumber(idx[d]);
            ksq += k * k;
        }
        *c *= (ksq + m * m).powf(s);
    }
    direct_inverse_dft(grid, &hat)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Mean of |x|^{-gamma} over the grid cell [-h/2, h/2]^N, reduced to smooth
/// one- and two-dimensional integrals:
///   1D: closed form.
///   2D: polar coordinates over the square corner.
///   3D: pyramid decomposition by the largest coordinate.
pub fn oracle_origin_average(grid: &GridSpec, gamma: f64) -> f64 {
    let a = grid.spacing() / 2.0;
    let corner_unit = match grid.dim() {
        1 => 1.0 / (1.0 - gamma),
        2 => {
            let angular = adaptive_simpson(
                &|theta: f64| theta.cos().powf(gamma - 2.0),
                0.0,
                PI / 4.0,
                1e-14,
            );
            2.0 / (2.0 - gamma) * angular
        }
        3 => {
            // 3 * a^{3-gamma}/(3-gamma) * Int_{[0,1]^2} (1+p^2+q^2)^{-gamma/2}
            let planar = adaptive_simpson(
                &|p: f64| {
                    adaptive_simpson(
                        &|q: f64| (1.0 + p * p + q * q).powf(-gamma / 2.0),
                        0.0,
                        1.0,
                        1e-14,
                    )
                },
                0.0,
                1.0,
                1e-12,
            );
            3.0 / (3.0 - gamma) * planar
        }
        d => panic!("unsupported dimension {d}"),
    };
    a.powf(-gamma) * corner_unit
}

/// Minimum-image samples of |x|^{-gamma} with the origin replaced by the
/// quadrature cell average above.
pub fn oracle_kernel_samples(grid: &GridSpec, gamma: f64) -> Vec<f64> {
    let total = grid.total_points();
    let mut samples = vec![0.0; total];
    for (flat, slot) in samples.iter_mut().enumerate() {
        if flat == 0 {
            *slot = oracle_origin_average(grid, gamma);
            continue;
        }
        let idx = grid.decompose(flat);
        let mut r2 = 0.0;
        for d in 0..grid.dim() {
            let x = grid.axis_min_image(idx[d]);
            r2 += x * x;
        }
        *slot = r2.powf(-gamma / 2.0);
    }
    samples
}

/// Direct O(total^2) periodic convolution h^N sum_j W(x_i - x_j) |u(x_j)|^2.
pub fn double_sum_convolve(field: &FieldState, kernel_samples: &[f64]) -> Vec<f64> {
    let grid = field.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let total = grid.total_points();
    let mut out = vec![0.0; total];
    let density: Vec<f64> = field.values().iter().map(|v| v.norm_sqr()).collect();
    for (flat_i, slot) in out.iter_mut().enumerate() {
        let iidx = grid.decompose(flat_i);
        let mut acc = 0.0;
        for (flat_j, rho) in density.iter().enumerate() {
            let jidx = grid.decompose(flat_j);
            let mut offset_flat = 0usize;
            for d in 0..dim {
                let o = (iidx[d] + n - jidx[d]) % n;
                offset_flat = offset_flat * n + o;
            }
            acc += kernel_samples[offset_flat] * rho;
        }
        *slot = acc * grid.cell_volume();
    }
    out
}

/// Central finite difference of the energy along a direction field.
pub fn central_diff_energy(model: &Model, u: &FieldState, dir: &FieldState, eps: f64) -> f64 {
    let plus = u.add_scaled(dir, Complex64::new(eps, 0.0)).unwrap();
    let minus = u.add_scaled(dir, Complex64::new(-eps, 0.0)).unwrap();
    (energy(model, &plus).unwrap().total - energy(model, &minus).unwrap().total) / (2.0 * eps)
}

/// Real L^2-style pairing Re h^N sum g conj(v), the directional derivative
/// the gradient convention promises.
pub fn real_pairing(model: &Model, g: &FieldState, v: &FieldState) -> f64 {
    let acc: Complex64 = g
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a * b.conj())
        .sum();
    acc.re * model.grid().cell_volume()
}

/// Brute-force orbit distance: minimize ||u - e^{i theta} reference|| over a
/// uniform theta grid, each norm evaluated from scratch.
pub fn theta_scan_distance(
    model: &Model,
    u: &FieldState,
    reference: &FieldState,
    points: usize,
) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..points {
        let theta = 2.0 * PI * j as f64 / points as f64;
        let shifted = reference.rotated(theta);
        let diff = u.add_scaled(&shifted, Complex64::new(-1.0, 0.0)).unwrap();
        let d = sigma_norm_sq(model, &diff).unwrap().max(0.0).sqrt();
        if d < best {
            best = d;
        }
    }
    best
}

/// Reference one-step propagator with local error O(dt^5): Richardson
/// extrapolation of the splitting step against two half steps.
pub fn richardson_step(model: &Model, u: &FieldState, dt: f64) -> FieldState {
    let coarse = strang_step(model, u, dt).unwrap();
    let half = strang_step(model, u, 0.5 * dt).unwrap();
    let fine = strang_step(model, &half, 0.5 * dt).unwrap();
    let values = fine
        .values()
        .iter()
        .zip(coarse.values())
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect();
    FieldState::from_values(*u.grid(), values).unwrap()
}

/// sqrt(h^N sum |a - b|^2).
pub fn l2_distance(a: &FieldState, b: &FieldState) -> f64 {
    let acc: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    (acc * a.grid().cell_volume()).sqrt()
}

pub fn max_pointwise_diff(a: &FieldState, b: &FieldState) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max)
}
