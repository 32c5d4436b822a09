use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Confining potential families. All kinds except `Zero` grow without bound
/// toward the box edge, mirroring the confinement condition the stability
/// theory needs; `Zero` is kept for comparison experiments and is flagged as
/// outside those hypotheses wherever it is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    /// V = 0.
    Zero,
    /// V(x) = |x|^2.
    Harmonic,
    /// V(x) = sum_d w_d x_d^2 with positive per-axis weights.
    AnisotropicQuadratic { weights: Vec<f64> },
    /// Radial even polynomial V(x) = sum_j c_j |x|^{2(j+1)}; coefficients
    /// start at the |x|^2 term and the leading one must be positive.
    EvenPolynomial { coefficients: Vec<f64> },
}

/// Potential description: a kind plus the additive shift C, so sampling
/// yields V(x) + C. `declared_floor` is the constant c1 the sampled values
/// are checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub shift: f64,
    pub declared_floor: f64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, shift: f64) -> Self {
        Self {
            kind,
            shift,
            declared_floor: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::new(PotentialKind::Zero, 0.0)
    }

    pub fn harmonic() -> Self {
        Self::new(PotentialKind::Harmonic, 0.0)
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.declared_floor = floor;
        self
    }

    pub fn is_zero_kind(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    /// Structural validation: confining kinds must actually grow along every
    /// axis, which for the parametric families reduces to sign conditions.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.shift.is_finite() {
            return Err(Error::InvalidParameter("potential shift must be finite".into()));
        }
        if !self.declared_floor.is_finite() || self.declared_floor < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "declared positivity floor must be finite and nonnegative, got {}",
                self.declared_floor
            )));
        }
        match &self.kind {
            PotentialKind::Zero | PotentialKind::Harmonic => Ok(()),
            PotentialKind::AnisotropicQuadratic { weights } => {
                if weights.len() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "anisotropic potential needs {dim} weights, got {}",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                    return Err(Error::InvalidParameter(
                        "anisotropic weights must all be positive".into(),
                    ));
                }
                Ok(())
            }
            PotentialKind::EvenPolynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::InvalidParameter(
                        "even polynomial needs at least one coefficient".into(),
                    ));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "even polynomial coefficients must be finite".into(),
                    ));
                }
                let leading = *coefficients.last().unwrap();
                if leading <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "even polynomial leading coefficient must be positive for confinement, got {leading}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Pointwise value V(x) + C.
    pub fn value(&self, x: &[f64; 3], dim: usize) -> f64 {
        let base = match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Harmonic => x[..dim].iter().map(|xi| xi * xi).sum(),
            PotentialKind::AnisotropicQuadratic { weights } => x[..dim]
                .iter()
                .zip(weights)
                .map(|(xi, w)| w * xi * xi)
                .sum(),
            PotentialKind::EvenPolynomial { coefficients } => {
                let r2: f64 = x[..dim].iter().map(|xi| xi * xi).sum();
                let mut acc = 0.0;
                let mut power = r2;
                for c in coefficients {
                    acc += c * power;
                    power *= r2;
                }
                acc
            }
        };
        base + self.shift
    }
}

/// Sample V(x) + C on the grid and check it stays at or above the declared
/// floor. Returns the real sampled values.
pub fn sample_potential(grid: &GridSpec, spec: &PotentialSpec) -> Result<Vec<f64>> {
    spec.validate(grid.dim())?;
    let total = grid.total_points();
    let mut values = vec![0.0; total];
    let mut min_value = f64::INFINITY;
    for (flat, slot) in values.iter_mut().enumerate() {
        let v = spec.value(&grid.coords(flat), grid.dim());
        min_value = min_value.min(v);
        *slot = v;
    }
    if min_value < spec.declared_floor || min_value < 0.0 {
        return Err(Error::PositivityViolation {
            min_value,
            floor: spec.declared_floor,
        });
    }
    Ok(values)
}
