use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{strang_step, EvolveConfig};
use crate::error::{Error, Result};
use crate::field::{FieldState, SpectralField};
use crate::functionals::{energy, kinetic_quadratic, potential_quadratic};
use crate::grid::GridSpec;
use crate::ground_state::{solve_ground_state, GroundStateConfig};
use crate::kernel::{build_hartree_kernel, hartree_convolve};
use crate::model::{Model, ModelParams};
use crate::potential::PotentialKind;
use crate::spectral::forward_transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbationMode {
    /// Band-limited random direction from the seed.
    RandomSeeded(u64),
    /// A single plane-wave mode, one integer index per axis.
    SingleMode(Vec<i64>),
    /// Blend toward the mass-preserving dilation factor^{N/2} U(factor x);
    /// factor 1 is the identity and leaves the state untouched.
    WidthDilation(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Requested orbit distance relative to the Sigma^s norm of the state.
    pub delta: f64,
    pub mode: PerturbationMode,
    /// Project the perturbed state back onto the mass sphere. Off by
    /// default: the stability statement perturbs in Sigma^s without fixing
    /// the mass.
    pub renormalize_mass: bool,
}

impl PerturbationSpec {
    pub fn new(delta: f64, mode: PerturbationMode) -> Self {
        Self {
            delta,
            mode,
            renormalize_mass: false,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "perturbation size delta must be positive, got {}",
                self.delta
            )));
        }
        match &self.mode {
            PerturbationMode::RandomSeeded(_) => Ok(()),
            PerturbationMode::SingleMode(modes) => {
                if modes.len() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "single-mode perturbation needs {dim} mode indices, got {}",
                        modes.len()
                    )));
                }
                Ok(())
            }
            PerturbationMode::WidthDilation(factor) => {
                if !factor.is_finite() || *factor <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "dilation factor must be positive, got {factor}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Time series of one perturb-and-evolve experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    pub orbit_distance: Vec<f64>,
    pub mass_trace: Vec<f64>,
    pub energy_trace: Vec<f64>,
    pub max_distance: f64,
    pub initial_distance: f64,
    pub omega: f64,
    pub ground_energy: f64,
    /// gamma < 2s, s < N/2, and a confining potential: the regime the
    /// stability theory covers. Runs outside it are still performed, just
    /// labeled.
    pub in_hypothesis: bool,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub perturbation: Option<PerturbationSpec>,
}

struct SigmaData {
    hat: SpectralField,
    norm_sq: f64,
}

fn sigma_data(model: &Model, field: &FieldState) -> Result<SigmaData> {
    let hat = model.transform(field)?;
    let norm_sq = kinetic_quadratic(model, &hat) + potential_quadratic(model, field);
    Ok(SigmaData { hat, norm_sq })
}

fn sigma_inner_given(
    model: &Model,
    u: &FieldState,
    u_hat: &SpectralField,
    v: &FieldState,
    v_hat: &SpectralField,
) -> Complex64 {
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
    for ((a, b), vv) in u.values().iter().zip(v.values()).zip(model.potential_values()) {
        pointwise += vv * a * b.conj();
    }
    spectral * weight + pointwise * grid.cell_volume()
}

/// min over theta of ||u - e^{i theta} r||_Sigma equals
/// sqrt(||u||^2 + ||r||^2 - 2 |<u, r>|), attained at the phase of <u, r>.
/// Evaluating the norm of the difference at that phase instead of the
/// closed-form square root avoids the cancellation that would otherwise
/// floor the distance near the orbit at ~1e-8.
fn distance_given(
    model: &Model,
    u: &FieldState,
    u_data: &SigmaData,
    r: &FieldState,
    r_data: &SigmaData,
) -> f64 {
    let inner = sigma_inner_given(model, u, &u_data.hat, r, &r_data.hat);
    let phase = if inner.norm() > 0.0 {
        inner / inner.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let grid = model.grid();
    let weight = grid.cell_volume() / grid.total_points() as f64;
    let mut kin = 0.0;
    for ((a, b), w) in u_data
        .hat
        .coeffs()
        .iter()
        .zip(r_data.hat.coeffs())
        .zip(model.multiplier())
    {
        kin += w * (a - phase * b).norm_sqr();
    }
    let mut pot = 0.0;
    for ((a, b), v) in u.values().iter().zip(r.values()).zip(model.potential_values()) {
        pot += v * (a - phase * b).norm_sqr();
    }
    (kin * weight + pot * grid.cell_volume()).max(0.0).sqrt()
}

/// Sigma^s distance from `u` to the phase orbit of `reference`:
/// min over theta of ||u - e^{i theta} reference||, i.e. the closed form
/// sqrt(||u||^2 + ||reference||^2 - 2 |<u, reference>|) evaluated through
/// the minimizing phase.
pub fn orbit_distance(model: &Model, u: &FieldState, reference: &FieldState) -> Result<f64> {
    model.check_grid(u)?;
    model.check_grid(reference)?;
    if reference.is_zero() {
        return Err(Error::ZeroField("orbit_distance reference".into()));
    }
    let u_data = sigma_data(model, u)?;
    let r_data = sigma_data(model, reference)?;
    Ok(distance_given(model, u, &u_data, reference, &r_data))
}

/// factor^{N/2} u(factor x) evaluated through the trigonometric interpolant
/// of `u`, axis by axis. The interpolant is 2L-periodic, so a contraction
/// (factor > 1) folds periodic images in near the box boundary; for fields
/// that decay inside the box these stay at the tail level.
fn dilated(field: &FieldState, factor: f64) -> Result<FieldState> {
    let grid = *field.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let hat = forward_transform(field)?;
    // evaluation matrix at the scaled coordinates, shared across axes; the
    // transform phases pair with x + L, the offset from the box corner
    let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let x = factor * grid.axis_coord(j) + grid.half_width();
        for m in 0..n {
            matrix[j * n + m] = Complex64::cis(grid.axis_wavenumber(m) * x);
        }
    }
    let mut data = hat.into_coeffs();
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let lines = total / n;
        for l in 0..lines {
            let block = l / stride;
            let offset = l % stride;
            let base = block * stride * n + offset;
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[base + j * stride];
            }
            for j in 0..n {
                let row = &matrix[j * n..(j + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, c) in row.iter().zip(&line) {
                    acc += b * c;
                }
                data[base + j * stride] = acc;
            }
        }
    }
    let scale = factor.powf(dim as f64 / 2.0) / total as f64;
    for v in &mut data {
        *v *= scale;
    }
    FieldState::from_values(grid, data)
}

fn direction(model: &Model, reference: &FieldState, mode: &PerturbationMode) -> Result<FieldState> {
    let grid = *model.grid();
    match mode {
        PerturbationMode::RandomSeeded(seed) => {
            FieldState::random_band_limited(grid, *seed, 1.0)
        }
        PerturbationMode::SingleMode(modes) => {
            FieldState::plane_wave(grid, modes, Complex64::new(1.0, 0.0))
        }
        PerturbationMode::WidthDilation(factor) => {
            let stretched = dilated(reference, *factor)?;
            stretched.add_scaled(reference, Complex64::new(-1.0, 0.0))
        }
    }
}

/// Produce initial data at the requested orbit distance from `reference`:
/// the mode picks a direction, and the amplitude is tuned so the measured
/// orbit distance lands within [0.5, 1.5] x delta x ||reference||_Sigma.
/// A direction the phase minimization absorbs entirely (or a dilation with
/// factor 1, which has no direction at all) cannot reach the bracket; the
/// former is an error, the latter returns `reference` unchanged.
pub fn perturb(
    model: &Model,
    reference: &FieldState,
    spec: &PerturbationSpec,
) -> Result<FieldState> {
    spec.validate(model.grid().dim())?;
    model.check_grid(reference)?;
    if reference.is_zero() {
        return Err(Error::ZeroField("perturbation reference".into()));
    }
    let r_data = sigma_data(model, reference)?;
    let sigma_ref = r_data.norm_sq.sqrt();
    let target = spec.delta * sigma_ref;
    let dir = direction(model, reference, &spec.mode)?;
    let dir_norm = sigma_data(model, &dir)?.norm_sq.sqrt();
    if dir_norm <= 1e-12 * sigma_ref {
        return Ok(reference.clone());
    }
    let ref_mass = reference.mass();
    let mut eps = target / dir_norm;
    let mut candidate = reference.clone();
    let mut measured = 0.0;
    for _ in 0..12 {
        candidate = reference.add_scaled(&dir, Complex64::new(eps, 0.0))?;
        if spec.renormalize_mass {
            candidate.rescale_to_mass(ref_mass);
        }
        let c_data = sigma_data(model, &candidate)?;
        measured = distance_given(model, &candidate, &c_data, reference, &r_data);
        if measured >= 0.75 * target && measured <= 1.25 * target {
            break;
        }
        if measured <= 1e-10 * target {
            return Err(Error::UnreachablePerturbation(format!(
                "direction is absorbed by the phase orbit; measured distance {measured:.3e} \
                 against target {target:.3e}"
            )));
        }
        eps *= target / measured;
    }
    if measured < 0.5 * target || measured > 1.5 * target {
        return Err(Error::UnreachablePerturbation(format!(
            "could not reach orbit distance {target:.3e} with this mode; best was {measured:.3e}"
        )));
    }
    Ok(candidate)
}

/// Solve for the ground state, displace it per the perturbation (none means
/// the unperturbed standing-wave run), evolve, and record the orbit
/// distance on the monitor stride.
pub fn run_stability_experiment(
    model: &Model,
    gs_config: &GroundStateConfig,
    perturbation: Option<&PerturbationSpec>,
    evolve_config: &EvolveConfig,
) -> Result<StabilityReport> {
    evolve_config.validate()?;
    let gs = solve_ground_state(model, gs_config)?;
    if !gs.converged {
        return Err(Error::NotConverged {
            iters: gs.iters,
            residual: gs.residual,
        });
    }
    let reference = gs.field;
    let r_data = sigma_data(model, &reference)?;
    let mut u = match perturbation {
        Some(spec) => perturb(model, &reference, spec)?,
        None => reference.clone(),
    };
    let steps = evolve_config.steps();
    let dt = evolve_config.dt;
    let mut times = Vec::new();
    let mut distances = Vec::new();
    let mut masses = Vec::new();
    let mut energies = Vec::new();
    let mut record = |model: &Model, u: &FieldState, step: usize| -> Result<()> {
        if u.validate().is_err() {
            return Err(Error::NonFinite {
                step,
                context: "field during stability run".into(),
            });
        }
        let u_data = sigma_data(model, u)?;
        times.push(step as f64 * dt);
        distances.push(distance_given(model, u, &u_data, &reference, &r_data));
        masses.push(u.mass());
        energies.push(energy(model, u)?.total);
        Ok(())
    };
    record(model, &u, 0)?;
    for step in 1..=steps {
        u = strang_step(model, &u, dt)?;
        if step % evolve_config.monitor_stride == 0 || step == steps {
            record(model, &u, step)?;
        }
    }
    let max_distance = distances.iter().cloned().fold(0.0f64, f64::max);
    let initial_distance = distances[0];
    let params = model.params().clone();
    let in_hypothesis = model.is_subcritical()
        && params.s < model.grid().dim() as f64 / 2.0
        && !params.potential.is_zero_kind();
    Ok(StabilityReport {
        times,
        orbit_distance: distances,
        mass_trace: masses,
        energy_trace: energies,
        max_distance,
        initial_distance,
        omega: gs.omega,
        ground_energy: gs.energy.total,
        in_hypothesis,
        params,
        grid: *model.grid(),
        perturbation: perturbation.cloned(),
    })
}

/// One dilation family evaluated at one lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub mass_rel_err: f64,
    /// |Hdot^s ratio / lambda^{2s} - 1| for the mass-preserving dilation.
    pub seminorm_ratio_err: Option<f64>,
    /// Same for the Hartree quartic at gamma = 2s.
    pub quartic_ratio_err: Option<f64>,
    /// |E(u_lambda)/E(u) - 1| for the energy-critical family at gamma = 4s.
    pub critical_energy_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub s: f64,
    /// 2s, when 2s < N so the mass-critical kernel exists on the grid.
    pub mass_critical_gamma: Option<f64>,
    /// 4s, when 4s < N.
    pub energy_critical_gamma: Option<f64>,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|row| {
            row.mass_rel_err <= 1e-10
                && row.seminorm_ratio_err.map_or(true, |e| e <= 1e-2)
                && row.quartic_ratio_err.map_or(true, |e| e <= 1e-2)
                && row.critical_energy_rel_err.map_or(true, |e| e <= 1e-2)
        })
    }
}

fn bare_quartic(field: &FieldState, gamma: f64) -> Result<f64> {
    let kernel = build_hartree_kernel(*field.grid(), gamma)?;
    let conv = hartree_convolve(field, &kernel)?;
    let acc: f64 = field
        .values()
        .iter()
        .zip(conv.values())
        .map(|(u, w)| w.re * u.norm_sqr())
        .sum();
    Ok(acc * field.grid().cell_volume())
}

fn scaled_copy(field: &FieldState, half_width: f64, amplitude: f64) -> Result<FieldState> {
    let grid = GridSpec::new(field.grid().dim(), half_width, field.grid().points_per_axis())?;
    let values = field.values().iter().map(|v| v * amplitude).collect();
    FieldState::from_values(grid, values)
}

/// Check the scaling structure of the functionals on the dilation families
/// u_lambda(x) = lambda^{N/2} u(lambda x) (mass-preserving; Hdot^s and the
/// gamma = 2s quartic both scale by lambda^{2s}) and, when 4s < N,
/// lambda^{-(N-2s)/2} u(x/lambda) (gamma = 4s energy invariant). Dilations
/// are realized by rescaling the grid, so the identities hold to rounding.
/// Only the free massless configuration scales cleanly, hence the V = 0,
/// m = 0 precondition; `params.gamma` plays no role, the critical exponents
/// are derived from s.
pub fn scaling_checks(field: &FieldState, params: &ModelParams) -> Result<ScalingReport> {
    if params.m != 0.0 {
        return Err(Error::InvalidParameter(
            "scaling identities hold only for m = 0".into(),
        ));
    }
    if !matches!(params.potential.kind, PotentialKind::Zero) || params.potential.shift != 0.0 {
        return Err(Error::InvalidParameter(
            "scaling identities hold only for V = 0".into(),
        ));
    }
    if field.is_zero() {
        return Err(Error::ZeroField("scaling_checks".into()));
    }
    let s = params.s;
    let grid = *field.grid();
    let dim_f = grid.dim() as f64;
    let mass_critical = 2.0 * s < dim_f;
    let energy_critical = 4.0 * s < dim_f;
    let base_mass = field.mass();
    let base_hs = crate::functionals::hs_seminorm_sq(field, s)?;
    let base_quartic = if mass_critical {
        Some(bare_quartic(field, 2.0 * s)?)
    } else {
        None
    };
    let base_energy = if energy_critical {
        Some(0.5 * base_hs - 0.25 * bare_quartic(field, 4.0 * s)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for lambda in [0.5, 1.0, 2.0] {
        let u_mass = scaled_copy(
            field,
            grid.half_width() / lambda,
            lambda.powf(dim_f / 2.0),
        )?;
        let mass_rel_err = (u_mass.mass() - base_mass).abs() / base_mass;
        let factor = lambda.powf(2.0 * s);
        let seminorm_ratio_err = if base_hs > 0.0 {
            Some((crate::functionals::hs_seminorm_sq(&u_mass, s)? / (factor * base_hs) - 1.0).abs())
        } else {
            None
        };
        let quartic_ratio_err = match base_quartic {
            Some(d) if d > 0.0 => {
                Some((bare_quartic(&u_mass, 2.0 * s)? / (factor * d) - 1.0).abs())
            }
            _ => None,
        };
        let critical_energy_rel_err = match base_energy {
            Some(e0) => {
                let u_energy = scaled_copy(
                    field,
                    grid.half_width() * lambda,
                    lambda.powf(-(dim_f - 2.0 * s) / 2.0),
                )?;
                let e = 0.5 * crate::functionals::hs_seminorm_sq(&u_energy, s)?
                    - 0.25 * bare_quartic(&u_energy, 4.0 * s)?;
                Some((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
            }
            None => None,
        };
        rows.push(ScalingRow {
            lambda,
            mass_rel_err,
            seminorm_ratio_err,
            quartic_ratio_err,
            critical_energy_rel_err,
        });
    }
    Ok(ScalingReport {
        s,
        mass_critical_gamma: mass_critical.then_some(2.0 * s),
        energy_critical_gamma: energy_critical.then_some(4.0 * s),
        rows,
    })
}
