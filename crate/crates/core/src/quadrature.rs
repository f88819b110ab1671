//! One-dimensional quadrature kernels and closed-form angular integrals.
//!
//! Everything downstream reduces to a handful of primitives implemented
//! here:
//!
//! * Gauss-Legendre rules ([`gauss_rule`], [`GaussRule::composite`]) with a
//!   process-wide node cache,
//! * the gamma function ([`gamma`]) with an exact path for integer and
//!   half-integer arguments feeding the sphere moment formula,
//! * monomial moments over round spheres ([`sphere_moment`]),
//! * Mellin transforms of cutoff-window products ([`WindowMellin`]), and
//! * integrals of polynomials against one-dimensional windows
//!   ([`base_integral`], [`BaseCache`]).
//!
//! The Mellin transform of a window product
//! `W(sigma) = integral_0^inf t^{sigma-1} prod_i w^(k_i)(t^2) dt`
//! splits into an exact pole part `a^sigma / sigma` (present exactly when
//! every derivative order `k_i` is zero, since the product is 1 below the
//! inner radius and 0 above the outer one) plus an entire integral supported
//! on `[a, b]`, evaluated by fixed Gauss panels.  This decomposition is what
//! turns analytic continuation into ordinary bookkeeping: poles and residues
//! are read off instead of estimated.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::exterior::window::Window;
use crate::exterior::Polynomial;
use crate::C;

/// Errors raised by the quadrature layer.
#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("gamma function pole at non-positive integer argument {0}")]
    GammaPole(f64),
    #[error("gauss rule order must be at least 1")]
    BadOrder,
    #[error("invalid integration interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("sphere dimension must be at least 1, got {0}")]
    SphereDimension(usize),
    #[error("window mellin transform evaluated at its pole (residue {residue})")]
    MellinPole { residue: f64 },
    #[error("coordinate x{} carries no cutoff window, integral would not converge", coord + 1)]
    MissingWindow { coord: usize },
    #[error("polynomial involves coordinate x{} outside the integration set", coord + 1)]
    ForeignVariable { coord: usize },
}

type Result<T> = std::result::Result<T, QuadratureError>;

/// Knobs for the fixed quadrature rules.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Number of equal panels per analytic segment.
    pub panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            order: 64,
            panels: 4,
        }
    }
}

// ---------------------------------------------------------------------------
// Gamma function.
// ---------------------------------------------------------------------------

/// Lanczos coefficients for g = 7, giving close to machine precision on the
/// real line away from poles.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line.
///
/// Positive integers and half-integers take an exact product path (so sphere
/// areas and moments are correct to the last bit of the recursion); all other
/// arguments go through the Lanczos approximation, with the reflection
/// formula below 0.5.
pub fn gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(QuadratureError::GammaPole(x));
    }
    let doubled = 2.0 * x;
    if x > 0.0 && doubled == doubled.floor() && doubled <= 1000.0 {
        return Ok(gamma_half_integer(doubled as u64));
    }
    Ok(gamma_lanczos(x))
}

/// Gamma at `half / 2` via the recursion off `gamma(1) = 1`, `gamma(1/2) = sqrt(pi)`.
fn gamma_half_integer(half: u64) -> f64 {
    debug_assert!(half >= 1);
    let mut value = if half % 2 == 0 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut arg = if half % 2 == 0 { 2 } else { 1 };
    while arg + 2 <= half {
        value *= arg as f64 / 2.0;
        arg += 2;
    }
    value
}

fn gamma_lanczos(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma_lanczos(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules.
// ---------------------------------------------------------------------------

/// A quadrature rule on a finite interval.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl GaussRule {
    /// Composite rule: `panels` equal Gauss panels of the given order.
    pub fn composite(order: usize, lo: f64, hi: f64, panels: usize) -> Result<GaussRule> {
        if panels == 0 {
            return Err(QuadratureError::BadOrder);
        }
        let width = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let rule = gauss_rule(order, lo + p as f64 * width, lo + (p + 1) as f64 * width)?;
            nodes.extend(rule.nodes);
            weights.extend(rule.weights);
        }
        Ok(GaussRule {
            nodes,
            weights,
            lo,
            hi,
        })
    }

    /// Node and weight pairs of the rule.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Applies the rule to a real integrand.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// Applies the rule to a complex integrand.
    pub fn integrate_complex<F: FnMut(f64) -> C>(&self, mut f: F) -> C {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(C::default(), |acc, (&t, &w)| acc + f(t) * w)
    }
}

/// Gauss-Legendre rule of the given order on `[lo, hi]`.
///
/// Exact for polynomials of degree `2 * order - 1`; weights sum to the
/// interval length.
pub fn gauss_rule(order: usize, lo: f64, hi: f64) -> Result<GaussRule> {
    if order == 0 {
        return Err(QuadratureError::BadOrder);
    }
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(QuadratureError::BadInterval { lo, hi });
    }
    let base = legendre_rule(order);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Ok(GaussRule {
        nodes: base.0.iter().map(|&x| mid + half * x).collect(),
        weights: base.1.iter().map(|&w| half * w).collect(),
        lo,
        hi,
    })
}

/// Cached nodes and weights on `[-1, 1]`.
fn legendre_rule(order: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().expect("legendre cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(legendre_nodes(order)))
        .clone()
}

/// Newton iteration on the Legendre recurrence, with the symmetric half
/// mirrored to keep the rule exactly symmetric about 0.
fn legendre_nodes(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            let dx = -p / d;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
        if n % 2 == 1 && i == n / 2 {
            nodes[i] = 0.0;
        }
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n` and its derivative at `x`.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// ---------------------------------------------------------------------------
// Sphere moments.
// ---------------------------------------------------------------------------

/// Surface area of the unit sphere `S^{m-1}` in `R^m`.
pub fn sphere_area(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(QuadratureError::SphereDimension(0));
    }
    let pi = std::f64::consts::PI;
    Ok(2.0 * pi.powf(m as f64 / 2.0) / gamma(m as f64 / 2.0)?)
}

/// Moment of a monomial over the round unit sphere:
/// `integral_{S^{m-1}} y^gamma dArea`.
///
/// Vanishes unless every exponent is even; otherwise the value is the
/// classical ratio of gamma factors, evaluated on the exact half-integer
/// path.
pub fn sphere_moment(exponents: &[u32]) -> Result<f64> {
    let m = exponents.len();
    if m == 0 {
        return Err(QuadratureError::SphereDimension(0));
    }
    if exponents.iter().any(|&g| g % 2 == 1) {
        return Ok(0.0);
    }
    let total: u32 = exponents.iter().sum();
    let mut num = 2.0;
    for &g in exponents {
        num *= gamma((f64::from(g) + 1.0) / 2.0)?;
    }
    Ok(num / gamma((f64::from(total) + m as f64) / 2.0)?)
}

// ---------------------------------------------------------------------------
// Mellin transforms of window products.
// ---------------------------------------------------------------------------

/// Mellin transform of a product of window derivatives along the radial
/// variable:
///
/// ```text
/// W(sigma) = integral_0^inf t^{sigma-1} * prod_i w^(k_i)(t^2) dt
/// ```
///
/// All factors share the same radii `(a, b)`.  When every order `k_i` is
/// zero the product equals 1 on `[0, a]` and the transform carries the
/// single simple pole `a^sigma / sigma` at `sigma = 0` with residue 1; in
/// every other case the integrand is supported in `[a, b]` and the transform
/// is entire.
#[derive(Clone, Debug)]
pub struct WindowMellin {
    window: Window,
    orders: Vec<u32>,
    rule: GaussRule,
    node_products: Vec<f64>,
}

/// Location of the only possible pole of a window Mellin transform.
pub const WINDOW_MELLIN_POLE: f64 = 0.0;

/// Hard floor under which evaluation at a pole-carrying transform is refused.
const MELLIN_POLE_GUARD: f64 = 1e-12;

impl WindowMellin {
    /// Transform of the single factor `w^(order)` described by `window`.
    pub fn new(window: Window, opts: &QuadOptions) -> Result<WindowMellin> {
        WindowMellin::from_signature(window, &[window.order()], opts)
    }

    /// Transform of `prod_i w^(orders[i])` with common radii taken from
    /// `window` (whose own order is ignored).
    pub fn from_signature(window: Window, orders: &[u32], opts: &QuadOptions) -> Result<WindowMellin> {
        let a = window.inner();
        let b = window.outer();
        let rule = GaussRule::composite(opts.order, a, b, opts.panels)?;
        let max_order = orders.iter().copied().max().unwrap_or(0) as usize;
        let node_products = rule
            .nodes
            .iter()
            .map(|&t| {
                let derivs =
                    crate::exterior::window::window_derivatives(a, b, t * t, max_order);
                orders.iter().map(|&k| derivs[k as usize]).product()
            })
            .collect();
        let mut sorted = orders.to_vec();
        sorted.sort_unstable();
        Ok(WindowMellin {
            window: window.base(),
            orders: sorted,
            rule,
            node_products,
        })
    }

    /// Shared radii of the factors.
    pub fn window(&self) -> Window {
        self.window
    }

    /// Sorted derivative orders of the factors.
    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    /// Whether the transform has the pole at `sigma = 0`.
    pub fn has_pole(&self) -> bool {
        self.orders.iter().all(|&k| k == 0)
    }

    /// Residue at `sigma = 0` (1 for pure window products, else 0).
    pub fn residue_at_zero(&self) -> f64 {
        if self.has_pole() {
            1.0
        } else {
            0.0
        }
    }

    /// The entire integral over `[a, b]` at a complex exponent.
    fn tail(&self, sigma: C) -> C {
        let mut acc = C::default();
        for ((&t, &w), &p) in self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&self.node_products)
        {
            if p == 0.0 {
                continue;
            }
            // t^{sigma-1} for t > 0.
            let ln_t = t.ln();
            acc += ((sigma - 1.0) * ln_t).exp() * (w * p);
        }
        acc
    }

    /// Evaluates the transform away from its pole.
    pub fn eval(&self, sigma: C) -> Result<C> {
        if self.has_pole() && sigma.norm() < MELLIN_POLE_GUARD {
            return Err(QuadratureError::MellinPole { residue: 1.0 });
        }
        let mut value = self.tail(sigma);
        if self.has_pole() {
            let a = self.window.inner();
            value += (sigma * a.ln()).exp() / sigma;
        }
        Ok(value)
    }

    /// Constant term of the Laurent expansion at `sigma = 0`.
    ///
    /// For pole-free signatures this is simply the value at 0; for the pure
    /// product it is `log a + integral_a^b prod w / t dt`.
    pub fn finite_part_at_zero(&self) -> f64 {
        let tail: f64 = self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&self.node_products)
            .map(|((&t, &w), &p)| w * p / t)
            .sum();
        if self.has_pole() {
            self.window.inner().ln() + tail
        } else {
            tail
        }
    }
}

// ---------------------------------------------------------------------------
// Base integrals of polynomials against one-dimensional windows.
// ---------------------------------------------------------------------------

/// Memo table for the one-dimensional integrals
/// `integral_R x^d * prod_i w^(k_i)(x^2) dx`.
///
/// Profile extraction evaluates thousands of monomials that share a handful
/// of distinct `(degree, window signature)` keys, so the cache collapses the
/// cost to one quadrature per key.
pub struct BaseCache {
    opts: QuadOptions,
    table: HashMap<(u32, Vec<(u64, u64, u32)>), f64>,
}

impl BaseCache {
    pub fn new(opts: QuadOptions) -> Self {
        BaseCache {
            opts,
            table: HashMap::new(),
        }
    }

    /// `integral_{-inf}^{inf} x^degree * prod_i w_i(x^2) dx`, which truncates
    /// to `[-b_max, b_max]` by the outermost window.
    pub fn one_dim(&mut self, degree: u32, factors: &[Window]) -> Result<f64> {
        if factors.is_empty() {
            return Err(QuadratureError::MissingWindow { coord: 0 });
        }
        if degree % 2 == 1 {
            return Ok(0.0);
        }
        let mut key: Vec<(u64, u64, u32)> = factors
            .iter()
            .map(|w| (w.inner().to_bits(), w.outer().to_bits(), w.order()))
            .collect();
        key.sort_unstable();
        if let Some(&v) = self.table.get(&(degree, key.clone())) {
            return Ok(v);
        }
        let value = one_dim_window_integral(degree, factors, &self.opts)?;
        self.table.insert((degree, key), value);
        Ok(value)
    }
}

/// Direct evaluation behind [`BaseCache::one_dim`].
///
/// The integrand is even, piecewise analytic with joins at every window
/// radius, so the positive half-line is split at those radii and each piece
/// integrated with fixed Gauss panels.  Pieces left of every inner radius are
/// exact monomial integrals when all factors have order 0 (the product is 1
/// there) and vanish when any factor is differentiated.
fn one_dim_window_integral(degree: u32, factors: &[Window], opts: &QuadOptions) -> Result<f64> {
    let all_plain = factors.iter().all(|w| w.order() == 0);
    let min_inner = factors
        .iter()
        .map(|w| w.inner())
        .fold(f64::INFINITY, f64::min);
    let max_outer = factors.iter().map(|w| w.outer()).fold(0.0, f64::max);
    // Support upper bound: differentiated factors also vanish below their
    // inner radius, which shrinks the support from the left.
    let lo_support = factors
        .iter()
        .filter(|w| w.order() > 0)
        .map(|w| w.inner())
        .fold(0.0, f64::max);

    let mut breaks: Vec<f64> = factors
        .iter()
        .flat_map(|w| [w.inner(), w.outer()])
        .filter(|&r| r > lo_support && r < max_outer)
        .collect();
    breaks.push(lo_support.max(0.0));
    breaks.push(max_outer);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut acc = 0.0;
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo < 1e-14 {
            continue;
        }
        if all_plain && hi <= min_inner {
            // All factors are identically 1 here.
            acc += (hi.powi(degree as i32 + 1) - lo.powi(degree as i32 + 1))
                / f64::from(degree + 1);
            continue;
        }
        let rule = GaussRule::composite(opts.order, lo, hi, opts.panels)?;
        acc += rule.integrate(|x| {
            let mut v = x.powi(degree as i32);
            for w in factors {
                v *= w.eval(x * x);
            }
            v
        });
    }
    Ok(2.0 * acc)
}

/// Integral of a polynomial against per-coordinate windows over the listed
/// coordinates, factorized monomial by monomial through [`BaseCache`].
///
/// Every listed coordinate must carry at least one window (otherwise the
/// integral would run over an unbounded direction), and the polynomial must
/// not involve unlisted coordinates.
pub fn base_integral(
    poly: &Polynomial,
    coords: &[usize],
    windows: &BTreeMap<usize, Vec<Window>>,
    cache: &mut BaseCache,
) -> Result<C> {
    for &c in coords {
        if windows.get(&c).map_or(true, Vec::is_empty) {
            return Err(QuadratureError::MissingWindow { coord: c });
        }
    }
    let mut acc = C::default();
    'terms: for (e, &v) in poly.terms() {
        let mut factor = 1.0;
        for (i, &gi) in e.0.iter().enumerate() {
            if coords.contains(&i) {
                continue;
            }
            if gi > 0 {
                return Err(QuadratureError::ForeignVariable { coord: i });
            }
        }
        for &c in coords {
            let f = cache.one_dim(e.0[c], &windows[&c])?;
            if f == 0.0 {
                continue 'terms;
            }
            factor *= f;
        }
        acc += v * factor;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::adaptive_quad;
    use std::f64::consts::PI;

    #[test]
    fn gamma_exact_on_integers_and_half_integers() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert!((gamma(0.5).unwrap() - PI.sqrt()).abs() < 1e-15);
        let g35 = 1.875 * PI.sqrt();
        assert!((gamma(3.5).unwrap() - g35).abs() / g35 < 1e-15);
        assert!(matches!(
            gamma(0.0),
            Err(QuadratureError::GammaPole(_))
        ));
        assert!(matches!(
            gamma(-2.0),
            Err(QuadratureError::GammaPole(_))
        ));
    }

    #[test]
    fn gamma_recursion_holds_off_the_exact_path() {
        for k in 0..40 {
            let x = 0.13 + 0.17 * k as f64;
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!(
                (lhs - rhs).abs() / rhs.abs() < 1e-12,
                "x = {x}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gamma_reflection_formula() {
        for &x in &[0.3, 0.41, 0.77, 1.9, -0.6, -1.3] {
            let lhs = gamma(x).unwrap() * gamma(1.0 - x).unwrap();
            let rhs = PI / (PI * x).sin();
            assert!(
                (lhs - rhs).abs() / rhs.abs() < 1e-11,
                "x = {x}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gauss_weights_sum_to_interval_length() {
        for order in [1, 2, 7, 32, 64] {
            let rule = gauss_rule(order, -0.25, 1.75).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "order {order}: {total}");
        }
    }

    #[test]
    fn gauss_exact_for_polynomials_up_to_design_degree() {
        let order = 8;
        let rule = gauss_rule(order, 0.0, 1.0).unwrap();
        for k in 0..=(2 * order - 1) {
            let got = rule.integrate(|x| x.powi(k as i32));
            let want = 1.0 / (k as f64 + 1.0);
            assert!(
                (got - want).abs() < 1e-13,
                "degree {k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn composite_rule_concatenates_panels() {
        let rule = GaussRule::composite(16, 0.0, 2.0, 4).unwrap();
        assert_eq!(rule.nodes.len(), 64);
        let got = rule.integrate(|x| (3.0 * x).sin());
        let want = (1.0 - (6.0f64).cos()) / 3.0;
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn gauss_rejects_degenerate_input() {
        assert!(gauss_rule(0, 0.0, 1.0).is_err());
        assert!(gauss_rule(4, 1.0, 1.0).is_err());
        assert!(gauss_rule(4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        let want = [
            2.0,
            2.0 * PI,
            4.0 * PI,
            2.0 * PI * PI,
            8.0 * PI * PI / 3.0,
            PI.powi(3),
        ];
        for (m, want) in want.iter().enumerate() {
            let got = sphere_area(m + 1).unwrap();
            assert!(
                (got - want).abs() / want < 1e-12,
                "m = {}: {got} vs {want}",
                m + 1
            );
        }
    }

    #[test]
    fn sphere_moments_known_values() {
        assert!((sphere_moment(&[0, 0]).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert_eq!(sphere_moment(&[1, 0]).unwrap(), 0.0);
        assert_eq!(sphere_moment(&[2, 1]).unwrap(), 0.0);
        let got = sphere_moment(&[2, 0, 0, 0]).unwrap();
        let want = PI * PI / 2.0;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // integral of y1^2 y2^2 over S^2 is 4 pi / 15.
        let got = sphere_moment(&[2, 2, 0]).unwrap();
        let want = 4.0 * PI / 15.0;
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn sphere_moments_sum_to_area_under_radius_squared() {
        // Summing moments of y_i^2 over i recovers the sphere area, because
        // the y_i^2 add up to 1 on the sphere.
        for m in 1..=5 {
            let mut total = 0.0;
            for i in 0..m {
                let mut e = vec![0u32; m];
                e[i] = 2;
                total += sphere_moment(&e).unwrap();
            }
            let want = sphere_area(m).unwrap();
            assert!(
                (total - want).abs() / want < 1e-12,
                "m = {m}: {total} vs {want}"
            );
        }
    }

    #[test]
    fn sphere_moment_matches_monte_carlo_oracle() {
        // Frozen Monte Carlo estimate for gamma = (2, 2, 0) on S^2 using a
        // deterministic low-discrepancy angle sweep.
        let steps = 2000;
        let mut acc = 0.0;
        for i in 0..steps {
            // Uniform z in [-1, 1], golden-angle longitude.
            let z = -1.0 + 2.0 * (i as f64 + 0.5) / steps as f64;
            let phi = 2.0 * PI * ((i as f64 * 0.618_033_988_749_895) % 1.0);
            let r = (1.0 - z * z).sqrt();
            let y1 = r * phi.cos();
            let y2 = r * phi.sin();
            acc += y1 * y1 * y2 * y2;
        }
        let estimate = acc * 4.0 * PI / steps as f64;
        let exact = sphere_moment(&[2, 2, 0]).unwrap();
        assert!(
            (estimate - exact).abs() < 1e-3,
            "oracle {estimate} vs exact {exact}"
        );
    }

    fn std_mellin() -> WindowMellin {
        WindowMellin::new(Window::standard(), &QuadOptions::default()).unwrap()
    }

    #[test]
    fn window_mellin_at_one_lies_between_the_radii() {
        // W(1) = a + integral_a^b w(t^2) dt, strictly between a and b.
        let w = std_mellin();
        let v = w.eval(crate::cr(1.0)).unwrap();
        assert_eq!(v.im, 0.0);
        assert!(v.re > 0.5 && v.re < 0.9, "W(1) = {}", v.re);
    }

    #[test]
    fn window_mellin_matches_adaptive_oracle_at_two() {
        let w = std_mellin();
        let got = w.eval(crate::cr(2.0)).unwrap().re;
        let win = Window::standard();
        let want = adaptive_quad(|t| t * win.eval(t * t), 0.0, 0.9, 1e-13);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn finite_part_at_zero_matches_its_defining_limit() {
        let w = std_mellin();
        let win = Window::standard();
        let direct = 0.5f64.ln() + adaptive_quad(|t| win.eval(t * t) / t, 0.5, 0.9, 1e-13);
        assert!((w.finite_part_at_zero() - direct).abs() < 1e-12);
        // The limit definition: W(sigma) - 1/sigma -> finite part as sigma -> 0.
        for &s in &[1e-4, 1e-5, 1e-6] {
            let v = w.eval(crate::cr(s)).unwrap().re - 1.0 / s;
            assert!(
                (v - w.finite_part_at_zero()).abs() < 1e-3 * s.sqrt().max(1e-8) + 1e-7,
                "sigma = {s}"
            );
        }
    }

    #[test]
    fn window_mellin_entire_part_is_tame_near_the_pole() {
        let w = std_mellin();
        let w1 = w.eval(crate::cr(1.0)).unwrap().norm();
        let mut max_entire = 0.0f64;
        for k in 0..32 {
            let theta = 2.0 * PI * k as f64 / 32.0;
            let sigma = crate::c(0.1 * theta.cos(), 0.1 * theta.sin());
            let entire = w.eval(sigma).unwrap() - (sigma * 0.5f64.ln()).exp() / sigma;
            max_entire = max_entire.max(entire.norm());
        }
        assert!(
            max_entire < 10.0 * w1,
            "entire part {max_entire} vs scale {w1}"
        );
    }

    #[test]
    fn window_mellin_pole_bookkeeping() {
        let pure = std_mellin();
        assert!(pure.has_pole());
        assert_eq!(pure.residue_at_zero(), 1.0);
        assert!(pure.eval(crate::cr(0.0)).is_err());

        let deriv =
            WindowMellin::new(Window::standard().derivative(), &QuadOptions::default()).unwrap();
        assert!(!deriv.has_pole());
        assert_eq!(deriv.residue_at_zero(), 0.0);
        let at_zero = deriv.eval(crate::cr(0.0)).unwrap();
        assert!((at_zero.re - deriv.finite_part_at_zero()).abs() < 1e-14);
    }

    #[test]
    fn differentiated_signature_satisfies_integration_by_parts() {
        // integral t^2 w'(t^2) dt = -1/2 integral w(t^2) dt, i.e.
        // W_[1](3) = -W_[0](1) / 2.
        let opts = QuadOptions::default();
        let w0 = WindowMellin::new(Window::standard(), &opts).unwrap();
        let w1 = WindowMellin::from_signature(Window::standard(), &[1], &opts).unwrap();
        let lhs = w1.eval(crate::cr(3.0)).unwrap().re;
        let rhs = -0.5 * w0.eval(crate::cr(1.0)).unwrap().re;
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn one_dim_window_integral_consistency() {
        let mut cache = BaseCache::new(QuadOptions::default());
        let w = Window::standard();
        // integral x^0 w(x^2) dx over R equals 2 * W(1).
        let got = cache.one_dim(0, &[w]).unwrap();
        let want = 2.0 * std_mellin().eval(crate::cr(1.0)).unwrap().re;
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        // Odd degrees vanish identically.
        assert_eq!(cache.one_dim(3, &[w]).unwrap(), 0.0);
        // Against the adaptive oracle for a differentiated factor.
        let got = cache.one_dim(2, &[w.derivative()]).unwrap();
        let want = 2.0 * adaptive_quad(|x| x * x * w.derivative().eval(x * x), 0.0, 0.9, 1e-13);
        assert!((got - want).abs() < 1e-11, "{got} vs {want}");
    }

    #[test]
    fn base_integral_factorizes_over_coordinates() {
        use crate::exterior::MultiIndex;
        let mut cache = BaseCache::new(QuadOptions::default());
        let mut windows = BTreeMap::new();
        windows.insert(0usize, vec![Window::standard()]);
        windows.insert(1usize, vec![Window::standard()]);
        let p = Polynomial::from_terms(
            2,
            vec![
                (MultiIndex(vec![2, 0]), crate::cr(1.0)),
                (MultiIndex(vec![1, 1]), crate::cr(7.0)),
            ],
        );
        let got = base_integral(&p, &[0, 1], &windows, &mut cache).unwrap();
        let i2 = cache.one_dim(2, &[Window::standard()]).unwrap();
        let i0 = cache.one_dim(0, &[Window::standard()]).unwrap();
        // The x1 * x2 term dies by parity.
        assert!((got.re - i2 * i0).abs() < 1e-13);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn base_integral_rejects_uncovered_coordinates() {
        let mut cache = BaseCache::new(QuadOptions::default());
        let windows = BTreeMap::new();
        let p = Polynomial::constant(1, crate::cr(1.0));
        assert!(matches!(
            base_integral(&p, &[0], &windows, &mut cache),
            Err(QuadratureError::MissingWindow { coord: 0 })
        ));
    }
}
