//! Pointwise relative errors and grid injection.

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Field, GridSpec, RealField};

/// Default floor for [`relative_error_map`]: `1e-12 * max |u_ref|`.
pub fn default_floor(u_ref: &ComplexField) -> f64 {
    1e-12 * u_ref.values().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `e_ij = |u_ij - ref_ij| / |ref_ij|`; where `|ref_ij| < floor` the
/// difference is divided by `floor` instead.
pub fn relative_error_map(u: &ComplexField, u_ref: &ComplexField, floor: f64) -> Result<RealField> {
    u.grid().check_same(u_ref.grid())?;
    if !(floor >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "floor",
            reason: format!("must be non-negative, got {floor}"),
        });
    }
    let values = u
        .values()
        .iter()
        .zip(u_ref.values())
        .map(|(a, r)| {
            let diff = (a - r).norm();
            let scale = r.norm();
            if scale >= floor && scale > 0.0 {
                diff / scale
            } else if floor > 0.0 {
                diff / floor
            } else {
                // Both floor and reference vanish.
                if diff == 0.0 {
                    0.0
                } else {
                    f64::MAX
                }
            }
        })
        .collect();
    RealField::from_values(*u.grid(), values)
}

/// Nodal injection: keeps every `factor`-th node in both dimensions.
pub fn downsample<T: Copy>(field: &Field<T>, factor: usize) -> Result<Field<T>> {
    let g = field.grid();
    if factor == 0 {
        return Err(Error::InvalidParameter {
            name: "factor",
            reason: "must be at least 1".into(),
        });
    }
    for (dim, n) in [("n1", g.n1), ("n2", g.n2)] {
        if (n - 1) % factor != 0 {
            return Err(Error::Divisibility {
                dim,
                extent: n - 1,
                factor,
            });
        }
    }
    let coarse = GridSpec::unchecked((g.n1 - 1) / factor + 1, (g.n2 - 1) / factor + 1, g.l1, g.l2);
    let mut values = Vec::with_capacity(coarse.len());
    for i2 in 0..coarse.n2 {
        for i1 in 0..coarse.n1 {
            values.push(field.at(i1 * factor, i2 * factor));
        }
    }
    Field::from_values(coarse, values)
}

/// Order statistics of a set of non-negative errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

impl ErrorSummary {
    /// Nearest-rank statistics; an empty sample summarises to zeros.
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        if samples.is_empty() {
            return ErrorSummary {
                median: 0.0,
                p95: 0.0,
                max: 0.0,
                count: 0,
            };
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let rank = |p: f64| samples[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        ErrorSummary {
            median: rank(0.5),
            p95: rank(0.95),
            max: samples[n - 1],
            count: n,
        }
    }
}
