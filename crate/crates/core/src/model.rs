//! Media (squared slowness plus attenuation), analytic test models,
//! absorbing layers and point sources.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, RealField, Side};

/// Squared slowness `kappa_sq` and attenuation `gamma` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    kappa_sq: RealField,
    gamma: RealField,
}

impl Medium {
    pub fn new(kappa_sq: RealField, gamma: RealField) -> Result<Self> {
        kappa_sq.grid().check_same(gamma.grid())?;
        if let Some(k) = kappa_sq.values().iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "kappa_sq",
                reason: format!("must be positive and finite, found {} at node {k}", kappa_sq.values()[k]),
            });
        }
        if let Some(k) = gamma.values().iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be non-negative, found {} at node {k}", gamma.values()[k]),
            });
        }
        Ok(Medium { kappa_sq, gamma })
    }

    /// Medium without attenuation.
    pub fn lossless(kappa_sq: RealField) -> Result<Self> {
        let gamma = RealField::zeros(*kappa_sq.grid());
        Self::new(kappa_sq, gamma)
    }

    pub fn grid(&self) -> &GridSpec {
        self.kappa_sq.grid()
    }

    pub fn kappa_sq(&self) -> &RealField {
        &self.kappa_sq
    }

    pub fn gamma(&self) -> &RealField {
        &self.gamma
    }

    /// Nodewise slowness `sqrt(kappa_sq)`.
    pub fn slowness(&self) -> RealField {
        self.kappa_sq.map(|k| k.sqrt())
    }

    pub fn with_gamma(&self, gamma: RealField) -> Result<Self> {
        Self::new(self.kappa_sq.clone(), gamma)
    }

    /// Smallest number of grid points per wavelength over the domain,
    /// `2 pi / (omega * max(kappa) * h)` with `h` the coarser spacing.
    pub fn points_per_wavelength(&self, omega: f64) -> f64 {
        let grid = self.grid();
        let kmax = self.kappa_sq.max().sqrt();
        2.0 * PI / (omega * kmax * grid.h1.max(grid.h2))
    }
}

/// Closed-form test models, evaluated in coordinates normalised to the
/// unit square (`x_d / L_d`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Constant { kappa_sq: f64 },
    /// Squared slowness varying linearly with depth.
    Linear { top: f64, bottom: f64 },
    Gaussian,
    Waveguide,
    Wedge,
}

impl ModelKind {
    /// The linear model with the default end values `0.4 -> 0.08`.
    pub const LINEAR: ModelKind = ModelKind::Linear {
        top: 0.4,
        bottom: 0.08,
    };

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Constant { .. } => "constant",
            ModelKind::Linear { .. } => "linear",
            ModelKind::Gaussian => "gaussian",
            ModelKind::Waveguide => "waveguide",
            ModelKind::Wedge => "wedge",
        }
    }

    /// Parses a model name with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(ModelKind::Constant { kappa_sq: 1.0 }),
            "linear" => Ok(ModelKind::LINEAR),
            "gaussian" => Ok(ModelKind::Gaussian),
            "waveguide" => Ok(ModelKind::Waveguide),
            "wedge" => Ok(ModelKind::Wedge),
            other => Err(Error::InvalidParameter {
                name: "model",
                reason: format!("unknown model kind `{other}`"),
            }),
        }
    }

    /// Squared slowness at normalised coordinates `(s1, s2)` in `[0, 1]^2`.
    pub fn kappa_sq_at(&self, s1: f64, s2: f64) -> f64 {
        match *self {
            ModelKind::Constant { kappa_sq } => kappa_sq,
            ModelKind::Linear { top, bottom } => top + (bottom - top) * s2,
            ModelKind::Gaussian => {
                let (d1, d2) = (s1 - 0.5, s2 - 0.5);
                (-(4.0 * d1 * d1 + 8.0 * d2 * d2)).exp()
            }
            ModelKind::Waveguide => {
                let d = s1 - 0.5;
                let v = (1.25 * (1.0 - 0.4 * (-32.0 * d * d).exp())).exp();
                1.0 / (v * v)
            }
            ModelKind::Wedge => {
                let s2 = if s2 > 0.5 { 1.0 - s2 } else { s2 };
                0.25 * ((4.0 * s2 - s1 - 0.75) * 20.0).tanh() + 0.75
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                })
            }
        };
        match *self {
            ModelKind::Constant { kappa_sq } => positive("kappa_sq", kappa_sq),
            ModelKind::Linear { top, bottom } => {
                positive("top", top)?;
                positive("bottom", bottom)
            }
            _ => Ok(()),
        }
    }
}

/// Evaluates an analytic model on the grid; attenuation starts at zero.
pub fn generate_model(kind: ModelKind, grid: &GridSpec) -> Result<Medium> {
    kind.validate()?;
    let (l1, l2) = (grid.l1, grid.l2);
    let kappa_sq = RealField::from_fn(*grid, |x1, x2| kind.kappa_sq_at(x1 / l1, x2 / l2));
    Medium::lossless(kappa_sq)
}

/// Point source location and angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub i1: usize,
    pub i2: usize,
    pub omega: f64,
}

impl SourceSpec {
    /// The source must lie strictly inside the grid or on its top row.
    pub fn new(grid: &GridSpec, i1: usize, i2: usize, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be positive, got {omega}"),
            });
        }
        let inside = i1 > 0 && i1 + 1 < grid.n1 && i2 > 0 && i2 + 1 < grid.n2;
        let top = i2 == 0 && i1 < grid.n1;
        if !(inside || top) {
            return Err(Error::InvalidParameter {
                name: "source",
                reason: format!(
                    "node ({i1}, {i2}) must be inside the {}x{} grid or on its top row",
                    grid.n1, grid.n2
                ),
            });
        }
        Ok(SourceSpec { i1, i2, omega })
    }

    /// Source on the top row at the horizontal centre.
    pub fn top_center(grid: &GridSpec, omega: f64) -> Result<Self> {
        Self::new(grid, grid.n1 / 2, 0, omega)
    }

    pub fn from_frequency(grid: &GridSpec, i1: usize, i2: usize, f: f64) -> Result<Self> {
        Self::new(grid, i1, i2, 2.0 * PI * f)
    }

    pub fn frequency(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn index(&self, grid: &GridSpec) -> usize {
        grid.index(self.i1, self.i2)
    }

    pub fn coords(&self, grid: &GridSpec) -> (f64, f64) {
        grid.coords(self.i1, self.i2)
    }
}

/// Adds quadratic absorbing bands along `sides`.
///
/// The band width is one wavelength measured with the domain-mean slowness.
/// Inside a band `gamma = omega * (d / W)^2` with `d` the penetration depth
/// from the inner edge, so it reaches `omega` on the boundary. Overlapping
/// corners keep the maximum.
pub fn attenuation_layer(medium: &Medium, source: &SourceSpec, sides: &[Side]) -> Result<Medium> {
    let grid = *medium.grid();
    let omega = source.omega;
    let mean_kappa = medium.slowness().mean();
    let width = 2.0 * PI / (omega * mean_kappa);
    for side in sides {
        let extent = match side {
            Side::Left | Side::Right => grid.l1,
            Side::Top | Side::Bottom => grid.l2,
        };
        if width > 0.5 * extent {
            return Err(Error::InvalidParameter {
                name: "attenuation band",
                reason: format!(
                    "width {width:.4} exceeds half the domain extent {extent} on the {} side",
                    side.name()
                ),
            });
        }
    }
    let base = medium.gamma();
    let gamma = RealField::from_fn(grid, |x1, x2| {
        let mut g: f64 = 0.0;
        for side in sides {
            let dist = match side {
                Side::Left => x1,
                Side::Right => grid.l1 - x1,
                Side::Top => x2,
                Side::Bottom => grid.l2 - x2,
            };
            let depth = (width - dist.max(0.0)).max(0.0);
            g = g.max(omega * (depth / width).powi(2));
        }
        g
    });
    let gamma = RealField::from_values(
        grid,
        gamma
            .values()
            .iter()
            .zip(base.values())
            .map(|(a, b)| a.max(*b))
            .collect(),
    )?;
    medium.with_gamma(gamma)
}

/// Discrete delta: `1 / (h1 h2)` at the source node, zero elsewhere.
pub fn point_source(grid: &GridSpec, source: &SourceSpec) -> ComplexField {
    let mut q = ComplexField::zeros(*grid);
    q.values_mut()[source.index(grid)] = Complex64::new(1.0 / (grid.h1 * grid.h2), 0.0);
    q
}
