//! Scalar-generic polynomial primitives: GLL nodes, Gauss-Legendre rules,
//! Lagrange cardinal functions, and the linear blending functions.
//!
//! Everything here is pure polynomial arithmetic on the reference interval
//! `[-1, 1]` and works for any floating scalar; the rest of the crate
//! instantiates it at [`crate::Real`].

use num_traits::{Float, FromPrimitive};

/// Floating scalar the polynomial layer is generic over.
pub trait Scalar: Float + FromPrimitive + std::fmt::Debug + 'static {
    /// Shorthand for lossless conversion of small constants.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Maximum supported polynomial order of the serendipity construction.
pub const MAX_ORDER: usize = 3;

/// Gauss-Lobatto-Legendre abscissae on `[-1, 1]` for order `p`.
///
/// Returns the `p + 1` points including both endpoints; the interior points
/// are the roots of the Lobatto polynomial of degree `p - 1` (the derivative
/// of the Legendre polynomial of degree `p`).
pub fn gll_nodes<S: Scalar>(p: usize) -> Result<Vec<S>, crate::Error> {
    let one = S::one();
    match p {
        1 => Ok(vec![-one, one]),
        2 => Ok(vec![-one, S::zero(), one]),
        3 => {
            // Roots of P3'(x) ~ 5x^2 - 1.
            let r = (one / S::c(5.0)).sqrt();
            Ok(vec![-one, -r, r, one])
        }
        _ => Err(crate::Error::OrderOutOfRange(p)),
    }
}

/// Linear blending functions `(psi1, psi2) = ((1-s)/2, (1+s)/2)`.
#[inline]
pub fn blending<S: Scalar>(s: S) -> (S, S) {
    let half = S::c(0.5);
    (half * (S::one() - s), half * (S::one() + s))
}

/// Derivatives of the blending functions, `(-1/2, 1/2)`.
#[inline]
pub fn blending_deriv<S: Scalar>() -> (S, S) {
    (S::c(-0.5), S::c(0.5))
}

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term
/// recurrence.
pub fn legendre<S: Scalar>(n: usize, x: S) -> (S, S) {
    if n == 0 {
        return (S::one(), S::zero());
    }
    let mut p_prev = S::one();
    let mut p = x;
    for k in 1..n {
        let kf = S::c(k as f64);
        let next = ((S::c(2.0) * kf + S::one()) * x * p - kf * p_prev) / (kf + S::one());
        p_prev = p;
        p = next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1), rewritten to avoid the
    // singular endpoints via the recurrence form below.
    let nf = S::c(n as f64);
    let denom = x * x - S::one();
    let dp = if denom.abs() > S::c(1e-30) {
        nf * (x * p - p_prev) / denom
    } else {
        // At x = +-1, P_n'(x) = x^{n+1} n(n+1)/2.
        let sign = if x > S::zero() || n % 2 == 1 {
            S::one()
        } else {
            -S::one()
        };
        sign * nf * (nf + S::one()) * S::c(0.5)
    };
    (p, dp)
}

/// Gauss-Legendre abscissae and weights for an `n`-point rule on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial, accurate to machine
/// precision; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre<S: Scalar>(n: usize) -> (Vec<S>, Vec<S>) {
    assert!(n >= 1, "quadrature rule needs at least one point");
    let mut points = vec![S::zero(); n];
    let mut weights = vec![S::zero(); n];
    let pi = S::c(std::f64::consts::PI);
    let nf = S::c(n as f64);
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess for the i-th root (descending).
        let mut x = (pi * (S::c(i as f64) + S::c(0.75)) / (nf + S::c(0.5))).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() <= S::c(1e-17) {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = S::c(2.0) / ((S::one() - x * x) * dp * dp);
        points[i] = -x.abs();
        points[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = S::zero();
        let (_, dp) = legendre(n, S::zero());
        weights[n / 2] = S::c(2.0) / (dp * dp);
    }
    (points, weights)
}

/// Values of all Lagrange cardinal polynomials on `nodes` at `x`.
pub fn lagrange_values<S: Scalar>(nodes: &[S], x: S) -> Vec<S> {
    let n = nodes.len();
    let mut out = vec![S::one(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[i] = out[i] * (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
    }
    out
}

/// Derivatives of all Lagrange cardinal polynomials on `nodes` at `x`.
pub fn lagrange_derivs<S: Scalar>(nodes: &[S], x: S) -> Vec<S> {
    let n = nodes.len();
    let mut out = vec![S::zero(); n];
    for i in 0..n {
        let mut sum = S::zero();
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut prod = S::one() / (nodes[i] - nodes[k]);
            for j in 0..n {
                if j != i && j != k {
                    prod = prod * (x - nodes[j]) / (nodes[i] - nodes[j]);
                }
            }
            sum = sum + prod;
        }
        out[i] = sum;
    }
    out
}
