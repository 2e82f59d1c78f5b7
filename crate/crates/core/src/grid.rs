//! Nodal regular 2D grids and the scalar fields that live on them.
//!
//! Nodes are stored row-major with the first coordinate `x1` (horizontal)
//! varying fastest: node `(i1, i2)` has flat index `i2 * n1 + i1`. The
//! second coordinate `x2` is depth, and the top of the domain is `x2 = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Geometry of a nodal regular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// One of the four sides of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Bottom, Side::Left, Side::Right];

    pub fn name(self) -> &'static str {
        match self {
            Side::Top => "top",
            Side::Bottom => "bottom",
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "top" => Ok(Side::Top),
            "bottom" => Ok(Side::Bottom),
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

impl GridSpec {
    /// Builds a grid with `n1 x n2` nodes covering `[0, l1] x [0, l2]`.
    ///
    /// Multigrid divisibility is not checked here; it is enforced when a
    /// hierarchy is built.
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        if n1 < 5 || n2 < 5 {
            return Err(Error::InvalidGrid(format!(
                "need at least 5 nodes per dimension, got {n1}x{n2}"
            )));
        }
        if !(l1 > 0.0 && l1.is_finite() && l2 > 0.0 && l2.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive, got {l1} x {l2}"
            )));
        }
        Ok(Self::unchecked(n1, n2, l1, l2))
    }

    pub(crate) fn unchecked(n1: usize, n2: usize, l1: f64, l2: f64) -> Self {
        GridSpec {
            n1,
            n2,
            l1,
            l2,
            h1: l1 / (n1 - 1) as f64,
            h2: l2 / (n2 - 1) as f64,
        }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i2 * self.n1 + i1
    }

    #[inline]
    pub fn node(&self, index: usize) -> (usize, usize) {
        (index % self.n1, index / self.n1)
    }

    #[inline]
    pub fn coords(&self, i1: usize, i2: usize) -> (f64, f64) {
        (i1 as f64 * self.h1, i2 as f64 * self.h2)
    }

    /// Spacing along axis `0` (x1) or `1` (x2).
    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.h1
        } else {
            self.h2
        }
    }

    /// Node count along axis `0` (x1) or `1` (x2).
    #[inline]
    pub fn extent(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n1
        } else {
            self.n2
        }
    }

    /// True when a full-coarsening step is possible: both interval counts
    /// are even and the coarse grid keeps at least 3 nodes per dimension.
    pub fn can_coarsen(&self) -> bool {
        let ok = |n: usize| (n - 1) % 2 == 0 && (n - 1) / 2 >= 2;
        ok(self.n1) && ok(self.n2)
    }

    /// The grid obtained by dropping every other node in both dimensions.
    pub fn coarsened(&self) -> Result<Self> {
        for (dim, n) in [("n1", self.n1), ("n2", self.n2)] {
            if (n - 1) % 2 != 0 {
                return Err(Error::Divisibility {
                    dim,
                    extent: n - 1,
                    factor: 2,
                });
            }
        }
        Ok(Self::unchecked(
            (self.n1 - 1) / 2 + 1,
            (self.n2 - 1) / 2 + 1,
            self.l1,
            self.l2,
        ))
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::GridMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: GridSpec,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Copy> Field<T> {
    pub fn from_values(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn filled(grid: GridSpec, value: T) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Evaluates `f(x1, x2)` at every node.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i2 in 0..grid.n2 {
            for i1 in 0..grid.n1 {
                let (x1, x2) = grid.coords(i1, i2);
                values.push(f(x1, x2));
            }
        }
        Field { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> T {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(&T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::filled(grid, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl ComplexField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::filled(grid, Complex64::new(0.0, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
