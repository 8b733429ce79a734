//! Reference values: Taylor series, the power rule and analytic derivatives
//! of a few named functions.

use super::{caputo_byparts, caputo_substitution, CaputoError, FractionalOrder, GridFunction, MethodKind};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::special;

const TAYLOR_MAX_TERMS: usize = 500;
const TAYLOR_STOP_RUN: usize = 3;
const TAN_MAX_COEFFS: usize = 60;

/// Caputo derivative of a function given by its Taylor data at 0:
/// D^α f(x) = Σ_{k>α} f⁽ᵏ⁾(0) x^(k−α) / Γ(k+1−α).
///
/// `coeffs[k]` is f⁽ᵏ⁾(0); indices past the end count as zero. Summation
/// stops once three consecutive terms are below 1e-16 relative to the
/// partial sum.
pub fn caputo_taylor<T: Scalar>(coeffs: &[T], ord: &FractionalOrder<T>, x: T) -> Result<T, CaputoError> {
    if !(x >= T::zero()) {
        return Err(CaputoError::InvalidGrid(format!("Taylor point {x} is negative")));
    }
    let alpha = ord.effective();
    let ln_x = x.ln();
    let rel = lit::<T>(1e-16);
    let mut sum = T::zero();
    let mut run = 0;
    for k in ord.n()..TAYLOR_MAX_TERMS {
        let c = coeffs.get(k).copied().unwrap_or_else(T::zero);
        let term = if c == T::zero() || x == T::zero() {
            T::zero()
        } else {
            let kk = from_usize::<T>(k);
            let log_mag = c.abs().ln() + (kk - alpha) * ln_x - special::ln_gamma(kk + T::one() - alpha)?;
            log_mag.exp().copysign(c)
        };
        sum += term;
        if term.abs() <= rel * sum.abs() {
            run += 1;
            if run == TAYLOR_STOP_RUN {
                return Ok(sum);
            }
        } else {
            run = 0;
        }
    }
    Err(CaputoError::TaylorNotConverged { terms: TAYLOR_MAX_TERMS })
}

/// D^α x^β = Γ(β+1)/Γ(β+1−α) · x^(β−α), defined for β > n − 1.
pub fn caputo_power<T: Scalar>(beta: T, ord: &FractionalOrder<T>, x: T) -> Result<T, CaputoError> {
    let alpha = ord.effective();
    if !(beta > from_usize::<T>(ord.n() - 1)) {
        return Err(CaputoError::PowerDomain { beta: to_f64(beta), alpha: to_f64(ord.alpha()) });
    }
    let coeff = (special::ln_gamma(beta + T::one())? - special::ln_gamma(beta + T::one() - alpha)?).exp();
    Ok(coeff * x.powf(beta - alpha))
}

/// Coefficient vectors of the polynomials P_k with tan⁽ᵏ⁾(x) = P_k(tan x).
///
/// P_0(t) = t and P_{k+1}(t) = P_k'(t)·(1 + t²).
fn tan_polynomials(k_max: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![0.0, 1.0]];
    for k in 0..k_max {
        let p = &polys[k];
        let dp: Vec<f64> = (1..p.len()).map(|i| i as f64 * p[i]).collect();
        let mut next = vec![0.0; dp.len() + 2];
        for (i, &c) in dp.iter().enumerate() {
            next[i] += c;
            next[i + 2] += c;
        }
        polys.push(next);
    }
    polys
}

/// f⁽ᵏ⁾(0) of tan for k = 0..=K, K ≤ 60.
pub fn tan_taylor_coeffs<T: Scalar>(k_max: usize) -> Result<Vec<T>, CaputoError> {
    if k_max > TAN_MAX_COEFFS {
        return Err(CaputoError::TooManyCoefficients { requested: k_max, max: TAN_MAX_COEFFS });
    }
    Ok(tan_polynomials(k_max).iter().map(|p| lit::<T>(p[0])).collect())
}

/// Functions with closed-form derivatives, used as oracles and as inputs for
/// the analytic-derivative mode of the quadratures.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticFunction<T> {
    Tan,
    Exp,
    Sin,
    Cos,
    /// x^p
    Power(T),
    Const(T),
}

impl<T: Scalar> AnalyticFunction<T> {
    /// Recognizes `tan`, `exp`, `sin`, `cos` and `const<c>` such as `const1`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tan" => Some(Self::Tan),
            "exp" => Some(Self::Exp),
            "sin" => Some(Self::Sin),
            "cos" => Some(Self::Cos),
            _ => {
                let c: f64 = name.strip_prefix("const")?.parse().ok()?;
                c.is_finite().then(|| Self::Const(lit(c)))
            }
        }
    }

    pub fn value(&self, x: T) -> T {
        self.derivative(0, x)
    }

    /// k-th derivative at x. Singular derivatives of powers come back infinite.
    pub fn derivative(&self, k: usize, x: T) -> T {
        match self {
            Self::Tan => {
                let t = x.tan();
                let polys = tan_polynomials(k);
                polys[k].iter().rev().fold(T::zero(), |acc, &c| acc * t + lit::<T>(c))
            }
            Self::Exp => x.exp(),
            Self::Sin => match k % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
            Self::Cos => match k % 4 {
                0 => x.cos(),
                1 => -x.sin(),
                2 => -x.cos(),
                _ => x.sin(),
            },
            Self::Power(p) => {
                let mut c = T::one();
                for i in 0..k {
                    c *= *p - from_usize::<T>(i);
                }
                if c == T::zero() {
                    return T::zero();
                }
                c * x.powf(*p - from_usize::<T>(k))
            }
            Self::Const(c) => {
                if k == 0 {
                    *c
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Quadrature of D^α f at t = x_{t_index} fed with exact derivative
    /// samples instead of stencils.
    pub fn quadrature(
        &self,
        ord: &FractionalOrder<T>,
        method: MethodKind,
        h: T,
        t_index: usize,
    ) -> Result<T, CaputoError> {
        let n = ord.n();
        match method {
            MethodKind::Substitution => {
                let d = GridFunction::from_fn(h, t_index, |x| self.derivative(n, x))?;
                caputo_substitution(&d, ord, t_index)
            }
            MethodKind::ByParts => {
                let d = GridFunction::from_fn(h, t_index, |x| self.derivative(n + 1, x))?;
                caputo_byparts(self.derivative(n, T::zero()), &d, ord, t_index)
            }
        }
    }

    /// Exact D^α f(x) from the Taylor series or the power rule.
    pub fn caputo_reference(&self, ord: &FractionalOrder<T>, x: T) -> Result<T, CaputoError> {
        let cyclic = |pattern: [f64; 4]| -> Vec<T> { (0..200).map(|k| lit(pattern[k % 4])).collect() };
        match self {
            Self::Tan => caputo_taylor(&tan_taylor_coeffs(TAN_MAX_COEFFS)?, ord, x),
            Self::Exp => caputo_taylor(&[T::one(); 200], ord, x),
            Self::Sin => caputo_taylor(&cyclic([0.0, 1.0, 0.0, -1.0]), ord, x),
            Self::Cos => caputo_taylor(&cyclic([1.0, 0.0, -1.0, 0.0]), ord, x),
            Self::Power(p) => {
                let below = *p <= from_usize::<T>(ord.n() - 1);
                if below && *p >= T::zero() && *p == p.floor() {
                    Ok(T::zero())
                } else {
                    caputo_power(*p, ord, x)
                }
            }
            Self::Const(_) => Ok(T::zero()),
        }
    }
}
