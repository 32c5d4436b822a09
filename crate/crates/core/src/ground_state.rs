use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, SpectralField};
use crate::functionals::{energy_given, gradient_given, EnergyBreakdown};
use crate::kernel::hartree_convolve;
use crate::model::Model;
use crate::snapshot::read_snapshot;
use crate::spectral::{forward_transform, inverse_transform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroundStateInit {
    /// Width-1 Gaussian carrying the target mass.
    Gaussian,
    /// Band-limited random field from the given seed.
    RandomSeeded(u64),
    /// FRH1 snapshot, renormalized onto the mass constraint.
    FromFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub init: GroundStateInit,
    pub semi_implicit: bool,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            max_iters: 20_000,
            residual_tol: 1e-9,
            init: GroundStateInit::Gaussian,
            semi_implicit: true,
        }
    }
}

impl GroundStateConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "descent step size must be positive, got {}",
                self.step_size
            )));
        }
        if !self.residual_tol.is_finite() || self.residual_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "residual tolerance must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted descent iterate: constrained energy, Sigma^s norm, mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub energy: f64,
    pub sigma_norm: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub field: FieldState,
    pub omega: f64,
    pub energy: EnergyBreakdown,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// The multiplier making the Euler-Lagrange pairing with the field vanish:
/// omega = (4 * hartree energy - sigma_norm_sq) / mass.
pub fn lagrange_omega(model: &Model, field: &FieldState) -> Result<f64> {
    if field.is_zero() {
        return Err(Error::ZeroField("lagrange_omega".into()));
    }
    let it = Iterate::build(model, field.clone())?;
    Ok(omega_of(&it))
}

/// Norm of the Euler-Lagrange defect grad E(u) + omega u, measured in L^2
/// and normalized by the Sigma^s norm of the field.
pub fn el_residual(model: &Model, field: &FieldState, omega: f64) -> Result<f64> {
    if field.is_zero() {
        return Err(Error::ZeroField("el_residual".into()));
    }
    let it = Iterate::build(model, field.clone())?;
    residual_of(model, &it, omega)
}

struct Iterate {
    u: FieldState,
    hat: SpectralField,
    conv: FieldState,
    energy: EnergyBreakdown,
}

impl Iterate {
    fn build(model: &Model, u: FieldState) -> Result<Self> {
        let hat = model.transform(&u)?;
        Self::from_parts(model, u, hat)
    }

    fn from_parts(model: &Model, u: FieldState, hat: SpectralField) -> Result<Self> {
        let conv = hartree_convolve(&u, model.kernel())?;
        let energy = energy_given(model, &u, &hat, &conv);
        Ok(Self {
            u,
            hat,
            conv,
            energy,
        })
    }

    fn sigma_norm_sq(&self) -> f64 {
        2.0 * (self.energy.kinetic + self.energy.potential)
    }

    fn trace_point(&self) -> TracePoint {
        TracePoint {
            energy: self.energy.total,
            sigma_norm: self.sigma_norm_sq().max(0.0).sqrt(),
            mass: self.u.mass(),
        }
    }
}

fn omega_of(it: &Iterate) -> f64 {
    (4.0 * it.energy.hartree - it.sigma_norm_sq()) / it.u.mass()
}

fn residual_of(model: &Model, it: &Iterate, omega: f64) -> Result<f64> {
    let sigma_sq = it.sigma_norm_sq();
    if sigma_sq <= 0.0 {
        return Err(Error::ZeroField(
            "residual undefined for a field with vanishing Sigma^s norm".into(),
        ));
    }
    let grad = gradient_given(model, &it.u, &it.hat, &it.conv);
    let defect_sq: f64 = grad
        .values()
        .iter()
        .zip(it.u.values())
        .map(|(g, u)| (g + omega * u).norm_sqr())
        .sum::<f64>()
        * model.grid().cell_volume();
    Ok(defect_sq.sqrt() / sigma_sq.sqrt())
}

/// One step of the normalized gradient flow: descend along the
/// sphere-tangential gradient grad E(u) + omega(u) u, then rescale back to
/// the constraint sphere. Shifting by the multiplier estimate makes every
/// Euler-Lagrange point an exact fixed point of the map; without it the
/// mass projection biases the stationary state at finite tau. The
/// semi-implicit variant divides by 1 + tau (|k|^2 + m^2)^s in spectral
/// space so the stiff kinetic term does not limit the step size; the
/// explicit variant is plain projected descent.
fn propose(model: &Model, it: &Iterate, tau: f64, semi_implicit: bool) -> Result<Iterate> {
    let grid = *model.grid();
    let coupling = model.coupling();
    let target_mass = model.params().mass_target;
    let omega = omega_of(it);
    let nl: Vec<num_complex::Complex64> = it
        .u
        .values()
        .iter()
        .zip(model.potential_values())
        .zip(it.conv.values())
        .map(|((u, v), w)| (v - coupling * w.re + omega) * u)
        .collect();
    if semi_implicit {
        let nl_hat = forward_transform(&FieldState::from_values_unchecked(grid, nl))?;
        let mut new_hat = it.hat.clone();
        for ((c, nc), w) in new_hat
            .coeffs_mut()
            .iter_mut()
            .zip(nl_hat.coeffs())
            .zip(model.multiplier())
        {
            *c = (*c - tau * nc) / (1.0 + tau * w);
        }
        let weight = grid.cell_volume() / grid.total_points() as f64;
        let mass: f64 = new_hat.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * weight;
        if mass <= 0.0 {
            return Err(Error::ZeroField("descent annihilated the field".into()));
        }
        let scale = (target_mass / mass).sqrt();
        for c in new_hat.coeffs_mut() {
            *c *= scale;
        }
        let u = inverse_transform(&new_hat);
        Iterate::from_parts(model, u, new_hat)
    } else {
        let mut kin_hat = it.hat.clone();
        for (c, w) in kin_hat.coeffs_mut().iter_mut().zip(model.multiplier()) {
            *c *= *w;
        }
        let kin = inverse_transform(&kin_hat);
        let values: Vec<num_complex::Complex64> = it
            .u
            .values()
            .iter()
            .zip(kin.values())
            .zip(&nl)
            .map(|((u, k), n)| u - tau * (k + n))
            .collect();
        let mut u = FieldState::from_values_unchecked(grid, values);
        if u.is_zero() {
            return Err(Error::ZeroField("descent annihilated the field".into()));
        }
        u.rescale_to_mass(target_mass);
        let hat = forward_transform(&u)?;
        Iterate::from_parts(model, u, hat)
    }
}

fn initial_field(model: &Model, config: &GroundStateConfig) -> Result<FieldState> {
    let grid = *model.grid();
    let mass = model.params().mass_target;
    match &config.init {
        GroundStateInit::Gaussian => FieldState::gaussian(grid, 1.0, mass),
        GroundStateInit::RandomSeeded(seed) => FieldState::random_band_limited(grid, *seed, mass),
        GroundStateInit::FromFile(path) => {
            let mut field = read_snapshot(path)?;
            if field.grid() != &grid {
                return Err(Error::GridMismatch(format!(
                    "snapshot grid {:?} does not match the run grid",
                    field.grid()
                )));
            }
            if field.is_zero() {
                return Err(Error::ZeroField("snapshot initial state".into()));
            }
            field.rescale_to_mass(mass);
            Ok(field)
        }
    }
}

/// Normalized gradient flow for the constrained minimization
/// inf { E(v) : mass(v) = M }. Iterates descent + mass projection with step
/// halving whenever the energy fails to decrease; a step that still climbs
/// after 20 halvings aborts the solve. Residual below `residual_tol` marks
/// convergence; hitting `max_iters` first returns converged = false with the
/// diagnostics filled in. The returned field has its global phase fixed so
/// the sample of largest modulus is real positive.
pub fn solve_ground_state(model: &Model, config: &GroundStateConfig) -> Result<GroundStateResult> {
    config.validate()?;
    let mut it = Iterate::build(model, initial_field(model, config)?)?;
    let mut trace = vec![it.trace_point()];
    let mut tau = config.step_size;
    let mut omega = omega_of(&it);
    let mut residual = residual_of(model, &it, omega)?;
    let mut iters = 0;
    let mut converged = residual < config.residual_tol;
    while !converged && iters < config.max_iters {
        let mut halvings = 0u32;
        let accepted = loop {
            let candidate = propose(model, &it, tau, config.semi_implicit)?;
            // slack absorbs roundoff at stagnation; descent is otherwise strict
            let slack = 1e-13 * (1.0 + it.energy.total.abs());
            if candidate.energy.total <= it.energy.total + slack {
                break candidate;
            }
            halvings += 1;
            if halvings >= 20 {
                return Err(Error::DescentStalled {
                    iter: iters + 1,
                    halvings,
                });
            }
            tau *= 0.5;
        };
        it = accepted;
        iters += 1;
        trace.push(it.trace_point());
        omega = omega_of(&it);
        residual = residual_of(model, &it, omega)?;
        converged = residual < config.residual_tol;
    }
    let field = gauge_fixed(&it.u);
    Ok(GroundStateResult {
        field,
        omega,
        energy: it.energy,
        residual,
        iters,
        converged,
        trace,
    })
}

/// The per-iteration (energy, sigma_norm, mass) sequence of the descent,
/// exposing the minimizing sequence the solve walks through.
pub fn minimizing_sequence_trace(
    model: &Model,
    config: &GroundStateConfig,
) -> Result<Vec<TracePoint>> {
    Ok(solve_ground_state(model, config)?.trace)
}

fn gauge_fixed(u: &FieldState) -> FieldState {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for (i, v) in u.values().iter().enumerate() {
        let mag = v.norm_sqr();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    let theta = u.values()[best].arg();
    u.rotated(-theta)
}
