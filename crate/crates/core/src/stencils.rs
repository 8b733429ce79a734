//! Finite-difference stencils for integer derivatives on a uniform grid.
//!
//! A window is a contiguous slice of grid samples. Forward stencils evaluate
//! the derivative at the first sample of the window, backward stencils at the
//! last one and central stencils at the middle one.

use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    Forward,
    Central,
    Backward,
}

/// Which derivative a stencil family approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Three-point one-sided and five-point central first derivative.
    First,
    /// Four-point one-sided and five-point central second derivative.
    Second,
    /// Three-point second derivative in every placement.
    SecondCompact,
    /// Five-point third derivative in every placement.
    Third,
}

impl Family {
    pub fn derivative_order(self) -> u32 {
        match self {
            Family::First => 1,
            Family::Second | Family::SecondCompact => 2,
            Family::Third => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StencilError {
    #[error("{family:?} {placement:?} stencil needs {expected} samples, got {got}")]
    WindowLength { family: Family, placement: Placement, expected: usize, got: usize },
    #[error("grid with {nodes} nodes is too short for a {family:?} operator (need {needed})")]
    GridTooShort { family: Family, nodes: usize, needed: usize },
}

/// A fixed coefficient row. The derivative is
/// `Σ coeffs[i]·window[i] / (denom·h^d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub family: Family,
    pub placement: Placement,
    pub coeffs: &'static [f64],
    pub denom: f64,
    /// Position of the evaluation node inside the window.
    pub anchor: usize,
    /// Truncation order of the approximation.
    pub formal_order: u32,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn derivative_order(&self) -> u32 {
        self.family.derivative_order()
    }

    /// Applies the stencil to a window of samples.
    pub fn apply<T: Scalar>(&self, window: &[T], h: T) -> Result<T, StencilError> {
        if window.len() != self.coeffs.len() {
            return Err(StencilError::WindowLength {
                family: self.family,
                placement: self.placement,
                expected: self.coeffs.len(),
                got: window.len(),
            });
        }
        // Rows sum to zero, so shifting by a sample changes nothing except
        // that constants now cancel exactly.
        let base = window.first().copied().unwrap_or_else(T::zero);
        let mut acc = T::zero();
        for (&c, &v) in self.coeffs.iter().zip(window) {
            acc += lit::<T>(c) * (v - base);
        }
        Ok(acc / (lit::<T>(self.denom) * h.powi(self.derivative_order() as i32)))
    }

    /// Coefficients with the denominator folded in, divided by h^d.
    pub fn scaled<T: Scalar>(&self, h: T) -> Vec<T> {
        let scale = (lit::<T>(self.denom) * h.powi(self.derivative_order() as i32)).recip();
        self.coeffs.iter().map(|&c| lit::<T>(c) * scale).collect()
    }
}

const FIRST_FORWARD: [f64; 3] = [-1.5, 2.0, -0.5];
const FIRST_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const FIRST_BACKWARD: [f64; 3] = [0.5, -2.0, 1.5];

const SECOND_FORWARD: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
const SECOND_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const SECOND_BACKWARD: [f64; 4] = [-1.0, 4.0, -5.0, 2.0];

const COMPACT: [f64; 3] = [1.0, -2.0, 1.0];

const THIRD_FORWARD: [f64; 5] = [-2.5, 9.0, -12.0, 7.0, -1.5];
const THIRD_CENTRAL: [f64; 5] = [-0.5, 1.0, 0.0, -1.0, 0.5];
const THIRD_BACKWARD: [f64; 5] = [1.5, -7.0, 12.0, -9.0, 2.5];

/// Looks up the stencil for a family and placement.
pub fn stencil(family: Family, placement: Placement) -> Stencil {
    use Family::*;
    use Placement::*;
    let (coeffs, denom, anchor, formal_order): (&'static [f64], f64, usize, u32) = match (family, placement) {
        (First, Forward) => (&FIRST_FORWARD, 1.0, 0, 2),
        (First, Central) => (&FIRST_CENTRAL, 12.0, 2, 4),
        (First, Backward) => (&FIRST_BACKWARD, 1.0, 2, 2),
        (Second, Forward) => (&SECOND_FORWARD, 1.0, 0, 2),
        (Second, Central) => (&SECOND_CENTRAL, 12.0, 2, 4),
        (Second, Backward) => (&SECOND_BACKWARD, 1.0, 3, 2),
        (SecondCompact, Forward) => (&COMPACT, 1.0, 0, 1),
        (SecondCompact, Central) => (&COMPACT, 1.0, 1, 2),
        (SecondCompact, Backward) => (&COMPACT, 1.0, 2, 1),
        (Third, Forward) => (&THIRD_FORWARD, 1.0, 0, 2),
        (Third, Central) => (&THIRD_CENTRAL, 1.0, 2, 2),
        (Third, Backward) => (&THIRD_BACKWARD, 1.0, 4, 2),
    };
    Stencil { family, placement, coeffs, denom, anchor, formal_order }
}

/// First derivative from a 3-point (one-sided) or 5-point (central) window.
pub fn first_derivative<T: Scalar>(window: &[T], h: T, placement: Placement) -> Result<T, StencilError> {
    stencil(Family::First, placement).apply(window, h)
}

/// Second derivative from a 4-point (one-sided) or 5-point (central) window.
pub fn second_derivative<T: Scalar>(window: &[T], h: T, placement: Placement) -> Result<T, StencilError> {
    stencil(Family::Second, placement).apply(window, h)
}

/// Second derivative from a 3-point window.
pub fn second_derivative_compact<T: Scalar>(window: &[T], h: T, placement: Placement) -> Result<T, StencilError> {
    stencil(Family::SecondCompact, placement).apply(window, h)
}

/// Third derivative from a 5-point window.
pub fn third_derivative<T: Scalar>(window: &[T], h: T, placement: Placement) -> Result<T, StencilError> {
    stencil(Family::Third, placement).apply(window, h)
}

/// One row of a [`SamplingOperator`]: scaled coefficients starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow<T> {
    pub start: usize,
    pub coeffs: Vec<T>,
    pub placement: Placement,
}

impl<T: Scalar> BandRow<T> {
    pub fn dot(&self, values: &[T]) -> T {
        let base = values[self.start];
        let mut acc = T::zero();
        for (&c, &v) in self.coeffs.iter().zip(&values[self.start..]) {
            acc += c * (v - base);
        }
        acc
    }
}

/// Maps grid values u_0..u_m to derivative samples at every node.
///
/// Central stencils are used wherever their window fits inside the grid;
/// nodes closer to an edge get the one-sided stencil of the same family
/// pointing into the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOperator<T> {
    pub family: Family,
    pub rows: Vec<BandRow<T>>,
}

impl<T: Scalar> SamplingOperator<T> {
    pub fn new(family: Family, nodes: usize, h: T) -> Result<Self, StencilError> {
        let central = stencil(family, Placement::Central);
        let forward = stencil(family, Placement::Forward);
        let backward = stencil(family, Placement::Backward);
        let needed = central.len().max(forward.len()).max(backward.len());
        if nodes < needed {
            return Err(StencilError::GridTooShort { family, nodes, needed });
        }
        let left = central.anchor;
        let right = central.len() - 1 - central.anchor;
        let rows = (0..nodes)
            .map(|j| {
                let s = if j < left {
                    forward
                } else if j + right >= nodes {
                    backward
                } else {
                    central
                };
                BandRow { start: j - s.anchor, coeffs: s.scaled(h), placement: s.placement }
            })
            .collect();
        Ok(SamplingOperator { family, rows })
    }

    pub fn nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, values: &[T]) -> Vec<T> {
        self.rows.iter().map(|r| r.dot(values)).collect()
    }
}
