//! The smooth cutoff window and exact evaluation of its derivatives.
//!
//! The window is the standard two-sided bump built from `q(x) = exp(-1/x)`:
//!
//! ```text
//! w(u) = q(b^2 - u) / (q(b^2 - u) + q(u - a^2))
//! ```
//!
//! with `q(x) = 0` for `x <= 0`.  It equals 1 for `u <= a^2`, 0 for
//! `u >= b^2`, and is smooth everywhere.  Radial cutoffs use `w(|x'|^2)` so
//! the composite is smooth at the singular locus; one-dimensional cutoffs use
//! `w(x_j^2)` for the same reason.
//!
//! Derivatives of any order are obtained from truncated Taylor jets of the
//! defining formula rather than finite differences, so `w^(k)(u)` is accurate
//! to machine precision at every `u`.

use std::cmp::Ordering;

/// Default inner radius where the window stops being identically 1.
pub const DEFAULT_INNER: f64 = 0.5;
/// Default outer radius beyond which the window vanishes.
pub const DEFAULT_OUTER: f64 = 0.9;

/// A derivative `w^(order)` of the two-sided cutoff window with parameters
/// `0 < inner < outer`.
///
/// The struct is a value type ordered by `(inner, outer, order)` bit
/// patterns, so window products can be kept in canonical sorted form and
/// compared exactly.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    inner: f64,
    outer: f64,
    order: u32,
}

impl Window {
    /// A fresh window (derivative order 0).  Panics unless `0 < inner < outer`.
    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(
            inner.is_finite() && outer.is_finite() && 0.0 < inner && inner < outer,
            "window radii must satisfy 0 < inner < outer"
        );
        Window {
            inner,
            outer,
            order: 0,
        }
    }

    /// The default window with radii 0.5 and 0.9.
    pub fn standard() -> Self {
        Window::new(DEFAULT_INNER, DEFAULT_OUTER)
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// Derivative order carried by this factor.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Same radii, derivative order raised by one.
    pub fn derivative(&self) -> Self {
        Window {
            inner: self.inner,
            outer: self.outer,
            order: self.order + 1,
        }
    }

    /// Same radii, derivative order reset to zero.
    pub fn base(&self) -> Self {
        Window {
            inner: self.inner,
            outer: self.outer,
            order: 0,
        }
    }

    /// Evaluates `w^(order)(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        window_derivatives(self.inner, self.outer, u, self.order as usize)[self.order as usize]
    }

    fn key(&self) -> (u64, u64, u32) {
        (self.inner.to_bits(), self.outer.to_bits(), self.order)
    }
}

impl PartialEq for Window {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Window {}

impl PartialOrd for Window {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Window {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Evaluates `w(u), w'(u), ..., w^(max_order)(u)` in one pass.
///
/// Outside the open transition interval `(inner^2, outer^2)` the window is
/// locally constant, so the value is 0 or 1 and all derivatives vanish.
/// Inside, the jet of the defining formula is propagated through the
/// quotient, which costs `O(max_order^2)` and loses no accuracy to
/// cancellation because every intermediate jet is a smooth positive quantity.
pub fn window_derivatives(inner: f64, outer: f64, u: f64, max_order: usize) -> Vec<f64> {
    let a2 = inner * inner;
    let b2 = outer * outer;
    let len = max_order + 1;
    if u <= a2 {
        let mut out = vec![0.0; len];
        out[0] = 1.0;
        return out;
    }
    if u >= b2 {
        return vec![0.0; len];
    }
    // Jet of q(b^2 - u) in u: compose the q jet with the sign flip.
    let mut upper = bump_jet(b2 - u, len);
    for (k, c) in upper.iter_mut().enumerate() {
        if k % 2 == 1 {
            *c = -*c;
        }
    }
    let lower = bump_jet(u - a2, len);
    let denom: Vec<f64> = upper
        .iter()
        .zip(&lower)
        .map(|(x, y)| x + y)
        .collect();
    let ratio = jet_div(&upper, &denom);
    // Taylor coefficients to derivatives.
    let mut factorial = 1.0;
    ratio
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            if k > 0 {
                factorial *= k as f64;
            }
            c * factorial
        })
        .collect()
}

/// Taylor jet of `q(x) = exp(-1/x)` at `x > 0`, as coefficients
/// `q^(k)(x)/k!` for `k <= len-1`.
fn bump_jet(x: f64, len: usize) -> Vec<f64> {
    debug_assert!(x > 0.0);
    // g(x) = -1/x has jet coefficients g_k = (-1/x)^{k+1}.
    let mut g = vec![0.0; len];
    let mut p = -1.0 / x;
    for slot in g.iter_mut() {
        *slot = p;
        p *= -1.0 / x;
    }
    jet_exp(&g)
}

/// Jet of `exp(g)` from the jet of `g`.
fn jet_exp(g: &[f64]) -> Vec<f64> {
    let len = g.len();
    let mut e = vec![0.0; len];
    e[0] = g[0].exp();
    for k in 1..len {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += (j as f64) * g[j] * e[k - j];
        }
        e[k] = acc / (k as f64);
    }
    e
}

/// Jet of `a / d` given jets of numerator and denominator, `d_0 != 0`.
fn jet_div(a: &[f64], d: &[f64]) -> Vec<f64> {
    let len = a.len();
    let mut r = vec![0.0; len];
    r[0] = a[0] / d[0];
    for k in 1..len {
        let mut acc = a[k];
        for j in 1..=k {
            acc -= d[j] * r[k - j];
        }
        r[k] = acc / d[0];
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference value computed directly from the defining formula.
    fn w_direct(a: f64, b: f64, u: f64) -> f64 {
        let q = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
        let up = q(b * b - u);
        let lo = q(u - a * a);
        if u <= a * a {
            1.0
        } else if u >= b * b {
            0.0
        } else {
            up / (up + lo)
        }
    }

    #[test]
    fn matches_defining_formula_bit_for_bit() {
        let w = Window::standard();
        for k in 0..200 {
            let u = 0.005 * k as f64;
            assert_eq!(w.eval(u), w_direct(0.5, 0.9, u), "u = {u}");
        }
    }

    #[test]
    fn flat_regions_and_monotone_transition() {
        let w = Window::standard();
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(0.25), 1.0);
        assert_eq!(w.eval(0.81), 0.0);
        assert_eq!(w.eval(2.0), 0.0);
        let mut prev = 1.0;
        for k in 1..=100 {
            let u = 0.25 + 0.56 * k as f64 / 100.0;
            let v = w.eval(u);
            assert!(v <= prev + 1e-15, "window should decrease");
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        let w1 = Window::standard().derivative();
        let w = Window::standard();
        let h = 1e-6;
        for k in 0..50 {
            let u = 0.26 + 0.54 * k as f64 / 50.0;
            let fd = (w.eval(u + h) - w.eval(u - h)) / (2.0 * h);
            assert!(
                (w1.eval(u) - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                "u = {u}: jet {} vs fd {}",
                w1.eval(u),
                fd
            );
        }
    }

    #[test]
    fn high_derivatives_vanish_outside_the_transition() {
        for order in 1..8 {
            let mut w = Window::standard();
            for _ in 0..order {
                w = w.derivative();
            }
            assert_eq!(w.eval(0.2), 0.0);
            assert_eq!(w.eval(0.9), 0.0);
        }
    }

    #[test]
    fn third_derivative_matches_difference_of_second() {
        let w2 = Window::standard().derivative().derivative();
        let w3 = w2.derivative();
        let h = 1e-5;
        for k in 0..20 {
            let u = 0.3 + 0.5 * k as f64 / 20.0;
            let fd = (w2.eval(u + h) - w2.eval(u - h)) / (2.0 * h);
            let scale = 1.0 + fd.abs().max(w3.eval(u).abs());
            assert!(
                (w3.eval(u) - fd).abs() < 1e-4 * scale,
                "u = {u}: jet {} vs fd {}",
                w3.eval(u),
                fd
            );
        }
    }

    #[test]
    fn windows_sort_by_radii_then_order() {
        let w = Window::standard();
        let tighter = Window::new(0.4, 0.9);
        assert!(tighter < w);
        assert!(w < w.derivative());
        assert_eq!(w.derivative().base(), w);
    }
}
