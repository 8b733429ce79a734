//! Discrete Caputo derivatives.
//!
//! For n − 1 ≤ α < n the Caputo derivative is
//!
//! ```text
//! D^α f(t) = 1/Γ(n−α) ∫_0^t f⁽ⁿ⁾(x) (t − x)^(n−α−1) dx.
//! ```
//!
//! [`caputo_substitution`] removes the singularity with the change of
//! variables s = (t − x)^(n−α) and applies the trapezoid rule to f⁽ⁿ⁾.
//! [`caputo_byparts`] integrates by parts once, moving the quadrature onto
//! f⁽ⁿ⁺¹⁾ against the bounded weight (t − x)^(n−α). Both share the kernel
//! table of [`kernel`].

mod kernel;
mod operator;
mod oracle;

use thiserror::Error;

use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::special::{self, SpecialError};

pub use kernel::{clear_kernel_cache, kernel_cache_len};
pub use operator::{caputo_matrix, sample_stencils};
pub use oracle::{caputo_power, caputo_taylor, tan_taylor_coeffs, AnalyticFunction};

/// Which discrete representation of the Caputo derivative to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Substitution,
    ByParts,
}

impl MethodKind {
    pub const BOTH: [MethodKind; 2] = [MethodKind::Substitution, MethodKind::ByParts];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Substitution => "substitution",
            MethodKind::ByParts => "byparts",
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaputoError {
    #[error("fractional order must satisfy 0 < alpha < 3, got {0}")]
    InvalidOrder(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("t_index {t_index} outside {min}..={max}")]
    TIndexOutOfRange { t_index: usize, min: usize, max: usize },
    #[error("power {beta} has no classical Caputo derivative of order {alpha}")]
    PowerDomain { beta: f64, alpha: f64 },
    #[error("Taylor series did not meet the stop rule within {terms} terms")]
    TaylorNotConverged { terms: usize },
    #[error("at most {max} Taylor coefficients are available, requested {requested}")]
    TooManyCoefficients { requested: usize, max: usize },
    #[error("no stencil for derivatives of order {0}")]
    UnsupportedDerivative(usize),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// An order α > 0 together with n = ⌊α⌋ + 1.
///
/// Integer orders are nudged down to α − δ so that n − 1 ≤ α < n holds with
/// a strictly positive n − α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder<T> {
    alpha: T,
    effective: T,
    n: usize,
}

impl<T: Scalar> FractionalOrder<T> {
    pub fn new(alpha: T) -> Result<Self, CaputoError> {
        if !alpha.is_finite() || alpha <= T::zero() || alpha >= lit(3.0) {
            return Err(CaputoError::InvalidOrder(to_f64(alpha)));
        }
        let mut effective = alpha;
        if alpha == alpha.floor() {
            let delta = lit::<T>(1e-14).max(lit::<T>(8.0) * T::epsilon() * alpha);
            effective = alpha - delta;
        }
        let n = effective.floor().to_usize().unwrap_or(0) + 1;
        Ok(FractionalOrder { alpha, effective, n })
    }

    /// The order as given.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// The order used in every formula.
    pub fn effective(&self) -> T {
        self.effective
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Exponent n − α of the kernel weight.
    pub fn beta(&self) -> T {
        from_usize::<T>(self.n) - self.effective
    }

    /// Γ(n + 1 − α).
    pub fn weight_gamma(&self) -> Result<T, CaputoError> {
        Ok(special::gamma(self.beta() + T::one())?)
    }
}

/// Samples u_0..u_m on the uniform grid x_k = k·h.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    h: T,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(h: T, values: Vec<T>) -> Result<Self, CaputoError> {
        if !(h.is_finite() && h > T::zero()) {
            return Err(CaputoError::InvalidGrid(format!("step {h} is not positive")));
        }
        if values.len() < 2 {
            return Err(CaputoError::InvalidGrid(format!("need at least 2 nodes, got {}", values.len())));
        }
        Ok(GridFunction { h, values })
    }

    /// Samples `f` at x_0..x_m.
    pub fn from_fn(h: T, m: usize, f: impl Fn(T) -> T) -> Result<Self, CaputoError> {
        let values = (0..=m).map(|k| f(from_usize::<T>(k) * h)).collect();
        Self::new(h, values)
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Index of the last node.
    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x(&self, k: usize) -> T {
        from_usize::<T>(k) * self.h
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.values.len()).map(|k| self.x(k)).collect()
    }

    pub fn end(&self) -> T {
        self.x(self.m())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }
}

fn check_t_index(t_index: usize, min: usize, max: usize) -> Result<(), CaputoError> {
    if t_index < min || t_index > max {
        return Err(CaputoError::TIndexOutOfRange { t_index, min, max });
    }
    Ok(())
}

/// Per-sample weights of the substitution rule at t = x_k, including the
/// 1/Γ(n+1−α) factor. Entry j multiplies f⁽ⁿ⁾(x_j), j = 0..=k.
pub fn substitution_weights<T: Scalar>(ord: &FractionalOrder<T>, h: T, t_index: usize) -> Result<Vec<T>, CaputoError> {
    check_t_index(t_index, 1, usize::MAX)?;
    let q = kernel::kernel_table(ord, h, t_index);
    Ok(substitution_weights_from(&q, t_index, ord.weight_gamma()?.recip()))
}

pub(crate) fn substitution_weights_from<T: Scalar>(q: &[T], k: usize, scale: T) -> Vec<T> {
    // s_j = q[k - j] with s_k = 0; trapezoid pairs telescope into
    // w_j = (s_{j-1} - s_{j+1}) / 2 with s_{-1} = s_0 and s_{k+1} = 0
    let s = |j: usize| q[k - j];
    let half = lit::<T>(0.5) * scale;
    let mut w = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let prev = if j == 0 { s(0) } else { s(j - 1) };
        let next = if j == k { T::zero() } else { s(j + 1) };
        w.push((prev - next) * half);
    }
    w
}

/// Weights of the by-parts rule at t = x_k: the factor of f⁽ⁿ⁾(0) and the
/// per-sample factors of f⁽ⁿ⁺¹⁾(x_j), j = 0..=k (the last one is zero).
pub fn byparts_weights<T: Scalar>(ord: &FractionalOrder<T>, h: T, t_index: usize) -> Result<(T, Vec<T>), CaputoError> {
    check_t_index(t_index, 1, usize::MAX)?;
    let q = kernel::kernel_table(ord, h, t_index);
    Ok(byparts_weights_from(&q, t_index, h, ord.weight_gamma()?.recip()))
}

pub(crate) fn byparts_weights_from<T: Scalar>(q: &[T], k: usize, h: T, scale: T) -> (T, Vec<T>) {
    let hs = h * scale;
    let mut w = Vec::with_capacity(k + 1);
    w.push(lit::<T>(0.5) * hs * q[k]);
    for j in 1..k {
        w.push(hs * q[k - j]);
    }
    w.push(T::zero());
    (q[k] * scale, w)
}

/// Substitution quadrature of D^α f at t = x_{t_index}, from samples of
/// f⁽ⁿ⁾ on x_0..x_m.
pub fn caputo_substitution<T: Scalar>(
    nth_deriv: &GridFunction<T>,
    ord: &FractionalOrder<T>,
    t_index: usize,
) -> Result<T, CaputoError> {
    check_t_index(t_index, 1, nth_deriv.m())?;
    let w = substitution_weights(ord, nth_deriv.h(), t_index)?;
    Ok(w.iter().zip(nth_deriv.values()).fold(T::zero(), |acc, (&w, &d)| acc + w * d))
}

/// By-parts quadrature of D^α f at t = x_{t_index}, from f⁽ⁿ⁾(0) and
/// samples of f⁽ⁿ⁺¹⁾ on x_0..x_m.
///
/// Accepts `t_index = 1`, where the interior sum is empty.
pub fn caputo_byparts<T: Scalar>(
    nth_deriv_at_0: T,
    np1_deriv: &GridFunction<T>,
    ord: &FractionalOrder<T>,
    t_index: usize,
) -> Result<T, CaputoError> {
    check_t_index(t_index, 1, np1_deriv.m())?;
    let (boundary, w) = byparts_weights(ord, np1_deriv.h(), t_index)?;
    let sum = w[..t_index].iter().zip(np1_deriv.values()).fold(T::zero(), |acc, (&w, &d)| acc + w * d);
    Ok(boundary * nth_deriv_at_0 + sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tan_d1(x: f64) -> f64 {
        1.0 / x.cos().powi(2)
    }

    fn tan_d2(x: f64) -> f64 {
        2.0 * x.tan() / x.cos().powi(2)
    }

    #[test]
    fn order_bookkeeping() {
        let o = FractionalOrder::new(0.4f64).unwrap();
        assert_eq!((o.n(), o.effective()), (1, 0.4));
        let o = FractionalOrder::new(1.7f64).unwrap();
        assert_eq!(o.n(), 2);
        assert!((o.beta() - 0.3).abs() < 1e-15);
        let o = FractionalOrder::new(1.0f64).unwrap();
        assert_eq!(o.n(), 1);
        assert_eq!(o.effective(), 1.0 - 1e-14);
        let o = FractionalOrder::new(2.0f64).unwrap();
        assert_eq!(o.n(), 2);
        assert!(o.effective() < 2.0 && o.effective() >= 1.0);
        let o = FractionalOrder::new(1.0f32).unwrap();
        assert!(o.effective() < 1.0 && o.n() == 1);
        for bad in [0.0, -0.5, 3.0, f64::NAN, f64::INFINITY] {
            assert!(FractionalOrder::new(bad).is_err());
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridFunction::new(0.0, vec![1.0, 2.0]).is_err());
        assert!(GridFunction::new(0.1, vec![1.0]).is_err());
        let g = GridFunction::from_fn(0.25, 4, |x: f64| x).unwrap();
        assert_eq!(g.m(), 4);
        assert_eq!(g.end(), 1.0);
        assert_eq!(g.values()[2], 0.5);
    }

    #[test]
    fn zero_derivative_gives_zero() {
        let ord = FractionalOrder::new(0.6).unwrap();
        let zero = GridFunction::new(0.01, vec![0.0; 51]).unwrap();
        assert_eq!(caputo_substitution(&zero, &ord, 50).unwrap(), 0.0);
        assert_eq!(caputo_byparts(0.0, &zero, &ord, 50).unwrap(), 0.0);
    }

    #[test]
    fn telescoping_weights() {
        // f = x^n/n!: f⁽ⁿ⁾ ≡ 1 and D^α f = t^(n−α)/Γ(n+1−α)
        for alpha in [0.3, 0.5, 0.9, 1.3, 1.7] {
            let ord = FractionalOrder::new(alpha).unwrap();
            let h = 1e-2;
            let ones = GridFunction::new(h, vec![1.0; 101]).unwrap();
            for k in [1, 7, 100] {
                let t = k as f64 * h;
                let want = t.powf(ord.beta()) / special::gamma(ord.beta() + 1.0).unwrap();
                let got = caputo_substitution(&ones, &ord, k).unwrap();
                assert!((got - want).abs() <= 1e-14 * want, "{alpha} {k}");
                // by-parts with f⁽ⁿ⁺¹⁾ ≡ 0 and f⁽ⁿ⁾(0) = 1
                let zero = GridFunction::new(h, vec![0.0; 101]).unwrap();
                let got = caputo_byparts(1.0, &zero, &ord, k).unwrap();
                assert!((got - want).abs() <= 1e-14 * want);
            }
        }
    }

    #[test]
    fn substitution_weights_are_positive_and_ordered() {
        let ord = FractionalOrder::new(0.4).unwrap();
        let q = kernel::kernel_table(&ord, 1e-3, 200);
        for k in 1..200 {
            assert!(q[k] > q[k - 1]);
        }
        let w = substitution_weights(&ord, 1e-3, 200).unwrap();
        assert!(w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn table_one_first_row() {
        let ord = FractionalOrder::new(0.4).unwrap();
        let h = 1e-4;
        let d1 = GridFunction::from_fn(h, 1000, tan_d1).unwrap();
        let d2 = GridFunction::from_fn(h, 1000, tan_d2).unwrap();
        let s = caputo_substitution(&d1, &ord, 1000).unwrap();
        let b = caputo_byparts(1.0, &d2, &ord, 1000).unwrap();
        assert!((s - 0.282_482_140_7).abs() < 5e-11);
        assert!((b - 0.282_482_140_2).abs() < 5e-9);
    }

    #[test]
    fn power_example_with_singular_derivative() {
        // x^1.2 at t = 0.5: substitution converges slowly, by-parts sees
        // f''(0) = ∞ and cannot produce a finite value
        let ord = FractionalOrder::new(0.5).unwrap();
        let h = 1e-4;
        let want = 0.746_434_161_460_674_7;
        let d1 = GridFunction::from_fn(h, 5000, |x: f64| 1.2 * x.powf(0.2)).unwrap();
        let s = caputo_substitution(&d1, &ord, 5000).unwrap();
        assert!((s - want).abs() < 1e-5, "{s}");
        let d2 = GridFunction::from_fn(h, 5000, |x: f64| 0.24 * x.powf(-0.8)).unwrap();
        assert!(!caputo_byparts(0.0, &d2, &ord, 5000).unwrap().is_finite());
    }

    #[test]
    fn integer_order_perturbation_is_negligible() {
        // α = 1 collapses to the trapezoid average (f'(t) + f'(t−h))/2; the
        // δ nudge itself changes the result by O(δ)
        let ord = FractionalOrder::new(1.0).unwrap();
        let h = 1e-3;
        let d1 = GridFunction::from_fn(h, 500, f64::cos).unwrap();
        let got = caputo_substitution(&d1, &ord, 500).unwrap();
        let trap = 0.5 * (0.5f64.cos() + (0.5f64 - h).cos());
        assert!((got - trap).abs() < 1e-12);
        assert!((got - 0.5f64.cos()).abs() < h);
    }

    #[test]
    fn t_index_bounds() {
        let ord = FractionalOrder::new(0.5).unwrap();
        let g = GridFunction::new(0.1, vec![1.0; 11]).unwrap();
        assert!(matches!(caputo_substitution(&g, &ord, 0), Err(CaputoError::TIndexOutOfRange { .. })));
        assert!(caputo_substitution(&g, &ord, 11).is_err());
        assert!(caputo_byparts(0.0, &g, &ord, 12).is_err());
        assert!(caputo_byparts(0.0, &g, &ord, 1).is_ok());
    }

    #[test]
    fn single_precision_quadrature() {
        let ord = FractionalOrder::new(0.4f32).unwrap();
        let d1 = GridFunction::from_fn(1e-3f32, 100, |x: f32| 1.0 / x.cos().powi(2)).unwrap();
        let s = caputo_substitution(&d1, &ord, 100).unwrap();
        assert!((s - 0.282_482_16).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn quadratures_are_linear(
            seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 41),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            alpha in 0.05f64..1.95,
            k in 1usize..=40,
        ) {
            let ord = FractionalOrder::new(alpha).unwrap();
            let f: Vec<f64> = seed.iter().map(|p| p.0).collect();
            let g: Vec<f64> = seed.iter().map(|p| p.1).collect();
            let comb: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let gf = |v: &Vec<f64>| GridFunction::new(0.025, v.clone()).unwrap();
            let lhs = caputo_substitution(&gf(&comb), &ord, k).unwrap();
            let rhs = a * caputo_substitution(&gf(&f), &ord, k).unwrap()
                + b * caputo_substitution(&gf(&g), &ord, k).unwrap();
            let mag = a.abs() * caputo_substitution(&gf(&f.iter().map(|v| v.abs()).collect()), &ord, k).unwrap()
                + b.abs() * caputo_substitution(&gf(&g.iter().map(|v| v.abs()).collect()), &ord, k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-13 * mag.max(1e-300));
            let lhs = caputo_byparts(a * f[0] + b * g[0], &gf(&comb), &ord, k).unwrap();
            let rhs = a * caputo_byparts(f[0], &gf(&f), &ord, k).unwrap()
                + b * caputo_byparts(g[0], &gf(&g), &ord, k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-13 * (lhs.abs() + rhs.abs()).max(1.0));
        }
    }
}
