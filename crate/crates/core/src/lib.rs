//! Finite parts of divergent integrals of differential forms.
//!
//! The integrals handled here diverge along a linear subspace `Y = {x_1 = … =
//! x_m = 0}` of `R^n`.  An integrand is a top form `omega = mu_0^{-N} eta`
//! with `eta` smooth and compactly supported and `mu_0 = x_1^2 + … + x_m^2`.
//! Two regularization routes are implemented and cross-checked:
//!
//! * **Mellin route** ([`mellin`]): the weighted integral
//!   `zeta(s) = integral of mu^{s/2} omega` is computed in closed form as a
//!   finite combination of one-dimensional Mellin transforms of the cutoff
//!   window.  Its analytic continuation has at most simple poles on a known
//!   arithmetic progression; residues give the divergent coefficients and the
//!   value at `s = 0` (with the pole removed) gives the finite part.
//! * **Cutoff route** ([`cutoff`]): the integral over `{mu >= eps^2}` is
//!   evaluated on a geometric grid of `eps` values and fitted against the
//!   model `sum_k I_{-k} eps^{-k} + I_0 log(1/eps) + I_fin`.
//!
//! Supporting layers: [`exterior`] implements the window-closed exterior
//! algebra (wedge, differential, Euler contraction, restriction), [`residue`]
//! the residue map onto `Y` for tamely singular forms, and [`multi`] the
//! normal-crossing and boundary variants where several singular factors or a
//! boundary defining function appear.
//!
//! All scalar arithmetic is over `Complex<f64>`; coefficients enter linearly
//! everywhere, so real problems stay real and exactness-sensitive tests can
//! use dyadic rationals.

pub mod cutoff;
pub mod exterior;
pub mod mellin;
pub mod multi;
pub mod quadrature;
pub mod residue;
#[doc(hidden)]
pub mod testkit;

/// Scalar type used throughout: double precision complex numbers.
pub type C = num_complex::Complex64;

/// Which computational route produced a reported number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    /// Closed-form continuation through window Mellin transforms.
    Mellin,
    /// Direct cutoff integrals fitted against the divergence model.
    Cutoff,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Engine::Mellin => write!(f, "mellin"),
            Engine::Cutoff => write!(f, "cutoff"),
        }
    }
}

/// Convenience constructor for the scalar type.
#[inline]
pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Convenience constructor for real scalars.
#[inline]
pub fn cr(re: f64) -> C {
    C::new(re, 0.0)
}
