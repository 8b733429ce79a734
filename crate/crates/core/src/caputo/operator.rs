//! Dense matrices mapping grid values of u to D^α u at every node.
//!
//! Row k is the quadrature at t = x_k applied to stencil reconstructions of
//! the integer derivatives it needs:
//!
//! | method       | n | boundary value       | samples                     |
//! |--------------|---|----------------------|-----------------------------|
//! | substitution | 1 |                      | u' (3/5-point)              |
//! | substitution | 2 |                      | u'' (3-point)               |
//! | by-parts     | 1 | u'(0) (3-point)      | u'' (3-point)               |
//! | by-parts     | 2 | u''(0) (4-point)     | u''' (5-point)              |

use super::{byparts_weights_from, kernel, substitution_weights_from, CaputoError, FractionalOrder, MethodKind};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::stencils::{stencil, Family, Placement, SamplingOperator};

fn family_for(derivative: usize) -> Result<Family, CaputoError> {
    match derivative {
        1 => Ok(Family::First),
        2 => Ok(Family::SecondCompact),
        3 => Ok(Family::Third),
        d => Err(CaputoError::UnsupportedDerivative(d)),
    }
}

fn boundary_family(derivative: usize) -> Result<Family, CaputoError> {
    match derivative {
        1 => Ok(Family::First),
        2 => Ok(Family::Second),
        d => Err(CaputoError::UnsupportedDerivative(d)),
    }
}

/// Stencil families used for the sampled derivative and, for by-parts, for
/// the boundary value at x = 0.
pub fn sample_stencils<T: Scalar>(
    ord: &FractionalOrder<T>,
    method: MethodKind,
) -> Result<(Family, Option<Family>), CaputoError> {
    let n = ord.n();
    match method {
        MethodKind::Substitution => Ok((family_for(n)?, None)),
        MethodKind::ByParts => Ok((family_for(n + 1)?, Some(boundary_family(n)?))),
    }
}

/// Builds the `nodes × nodes` matrix A with (A u)_k ≈ D^α u(x_k). Row 0 is
/// zero.
pub fn caputo_matrix<T: Scalar>(
    ord: &FractionalOrder<T>,
    method: MethodKind,
    h: T,
    nodes: usize,
) -> Result<Matrix<T>, CaputoError> {
    let (family, boundary) = sample_stencils(ord, method)?;
    let samples = SamplingOperator::new(family, nodes, h).map_err(|e| CaputoError::InvalidGrid(e.to_string()))?;
    let m = nodes - 1;
    let q = kernel::kernel_table(ord, h, m);
    let scale = ord.weight_gamma()?.recip();
    let boundary_row: Option<Vec<T>> = boundary.map(|fam| stencil(fam, Placement::Forward).scaled(h));

    let mut a = Matrix::zeros(nodes, nodes);
    for k in 1..nodes {
        let row = a.row_mut(k);
        let weights = match method {
            MethodKind::Substitution => substitution_weights_from(&q, k, scale),
            MethodKind::ByParts => {
                let (b, w) = byparts_weights_from(&q, k, h, scale);
                if let Some(br) = &boundary_row {
                    for (i, &c) in br.iter().enumerate() {
                        row[i] += b * c;
                    }
                }
                w
            }
        };
        for (j, &w) in weights.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let band = &samples.rows[j];
            for (i, &c) in band.coeffs.iter().enumerate() {
                row[band.start + i] += w * c;
            }
        }
    }
    Ok(a)
}
