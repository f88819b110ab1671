//! Cutoff regularization: direct integrals over the region where the measure
//! exceeds a threshold, and least-squares recovery of the small-cutoff
//! expansion.
//!
//! For a singular form `omega` and measure `mu`, the integral over
//! `{mu >= eps^2}` expands as
//!
//! ```text
//! sum_k I_{-k} eps^{-k} + I_0 log(1/eps) + I_finite + O(eps)
//! ```
//!
//! This module computes the left-hand side by direct quadrature and fits the
//! coefficients from a grid of cutoffs.  It shares only the primitive
//! quadrature layer (sphere moments, one-dimensional window integrals) with
//! the continuation engine in [`crate::mellin`], so the two produce genuinely
//! independent numbers for every coefficient.
//!
//! The region splits along the radial coordinate `r = sqrt(mu_0)`.  Outside
//! the window inner radius the integrand is independent of the cutoff and is
//! integrated once.  Inside, every window factor is identically one, so the
//! radial integral of each monomial has a closed form with lower limit
//! `r*(ray)`, the radius where `mu = eps^2` on that ray.  For the standard
//! measure `r* = eps` on every ray and the whole integral factorizes through
//! sphere moments; for a conformal measure `r*` is found per ray by
//! safeguarded root finding.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::exterior::{
    CompiledPoly, FormError, MorseBott, SingularForm, Window, WindowSlot,
};
use crate::mellin::AsymptoticExpansion;
use crate::quadrature::{
    gauss_rule, sphere_moment, BaseCache, GaussRule, QuadOptions, QuadratureError,
};
use crate::{cr, Engine, C};

/// Errors raised by the cutoff engine.
#[derive(Debug, Error)]
pub enum CutoffError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(
        "form lives on {form_n} variables with codimension {form_m}, \
         measure on {measure_n} with codimension {measure_m}"
    )]
    MeasureMismatch {
        form_n: usize,
        measure_n: usize,
        form_m: usize,
        measure_m: usize,
    },
    #[error("integrand must be a top-degree form in {n} variables")]
    NotTopDegree { n: usize },
    #[error("a numerator term carries no radial window, so its support is unbounded")]
    MissingRadialWindow,
    #[error("numerator terms carry radial windows with different radii")]
    MixedRadialWindows,
    #[error("no window bounds base coordinate x{}", coord + 1)]
    UnboundedBase { coord: usize },
    #[error("sphere quadrature covers codimension 1 through 4, got {m}")]
    CodimTooLarge { m: usize },
    #[error("cutoff {eps:e} must lie in (0, {limit:e}) for this measure")]
    CutoffOutOfRange { eps: f64, limit: f64 },
    #[error("level set at 0 diverges: radial exponent {shift} is negative")]
    LevelSetAtZero { shift: i64 },
    #[error("level sets of a conformal measure are not spheres; use the standard measure")]
    ConformalLevelSet,
    #[error("cutoff radius root finding stalled on a ray (residual {residual:e})")]
    RootFind { residual: f64 },
    #[error("expansion fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("fit matrix has condition number {cond:e} (limit 1e12); refine the cutoff grid")]
    IllConditioned { cond: f64 },
    #[error("cutoff grid must be positive and strictly decreasing")]
    BadGrid,
}

type Result<T> = std::result::Result<T, CutoffError>;

/// Largest acceptable condition number for the expansion fit.
pub const FIT_CONDITION_LIMIT: f64 = 1e12;

/// Knobs for the cutoff engine.
#[derive(Clone, Copy, Debug)]
pub struct CutoffOptions {
    pub quad: QuadOptions,
    /// Angular resolution of the sphere rules; raised automatically when the
    /// integrand degree requires it.
    pub angular: usize,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions {
            quad: QuadOptions::default(),
            angular: 24,
        }
    }
}

/// A decreasing grid of cutoff values for expansion fitting.
#[derive(Clone, Debug)]
pub struct EpsilonGrid {
    values: Vec<f64>,
}

impl EpsilonGrid {
    /// Geometric grid `start * ratio^i` for `i = 0 .. count`.
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && start.is_finite() && ratio > 0.0 && ratio < 1.0) || count == 0 {
            return Err(CutoffError::BadGrid);
        }
        let values = (0..count).map(|i| start * ratio.powi(i as i32)).collect();
        Ok(EpsilonGrid { values })
    }

    /// Default grid for a window with the given inner radius: 12 points from
    /// `inner / 10` with ratio `0.7`.  Keeps the `O(eps)` remainder below the
    /// fit noise without driving the `eps^{-k}` columns into overflow.
    pub fn standard_for(inner: f64) -> Self {
        EpsilonGrid::geometric(inner / 10.0, 0.7, 12).expect("default grid is valid")
    }

    /// Explicit values; must be positive and strictly decreasing.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty()
            || !values.iter().all(|&e| e > 0.0 && e.is_finite())
            || !values.windows(2).all(|p| p[0] > p[1])
        {
            return Err(CutoffError::BadGrid);
        }
        Ok(EpsilonGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of fitting the cutoff expansion to sampled integrals.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub expansion: AsymptoticExpansion,
    /// Euclidean norm of the least-squares residual; never discard this
    /// silently, it is the only accuracy signal the fit has.
    pub residual_norm: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition_number: f64,
}

// ---------------------------------------------------------------------------
// Sphere rules.
// ---------------------------------------------------------------------------

/// Quadrature nodes and weights for the unit sphere `S^{m-1}`, exact for
/// polynomials up to the requested degree and spectrally accurate beyond.
fn sphere_rule(m: usize, angular: usize, degree: u32) -> Result<Vec<(f64, Vec<f64>)>> {
    let deg = degree as usize;
    match m {
        1 => Ok(vec![(1.0, vec![1.0]), (1.0, vec![-1.0])]),
        2 => {
            let k = (angular.max(deg + 2) + 1) & !1;
            let w = std::f64::consts::TAU / k as f64;
            Ok((0..k)
                .map(|i| {
                    let theta = std::f64::consts::TAU * (i as f64 + 0.5) / k as f64;
                    (w, vec![theta.cos(), theta.sin()])
                })
                .collect())
        }
        3 | 4 => {
            let inner = sphere_rule(m - 1, angular, degree)?;
            let k = (angular / 2).max(deg / 2 + 2);
            let (nodes, weights) = if m == 3 {
                let rule = gauss_rule(k, -1.0, 1.0)?;
                (rule.nodes, rule.weights)
            } else {
                chebyshev_second_rule(k)
            };
            let mut out = Vec::with_capacity(nodes.len() * inner.len());
            for (&t, &wt) in nodes.iter().zip(&weights) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                for (wz, z) in &inner {
                    let mut y = Vec::with_capacity(m);
                    y.push(t);
                    y.extend(z.iter().map(|&zi| s * zi));
                    out.push((wt * wz, y));
                }
            }
            Ok(out)
        }
        m => Err(CutoffError::CodimTooLarge { m }),
    }
}

/// Gauss rule for the weight `sqrt(1 - t^2)` on `[-1, 1]`: the nodes are the
/// Chebyshev points of the second kind, with closed-form weights.
fn chebyshev_second_rule(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 1..=k {
        let angle = std::f64::consts::PI * i as f64 / (k + 1) as f64;
        nodes.push(angle.cos());
        weights.push(std::f64::consts::PI / (k + 1) as f64 * angle.sin() * angle.sin());
    }
    (nodes, weights)
}

// ---------------------------------------------------------------------------
// The evaluator.
// ---------------------------------------------------------------------------

/// One numerator term, preprocessed for quadrature.
struct TermData {
    /// Radial derivative orders, sorted.
    sig: Vec<u32>,
    /// Radial window factors.
    radial: Vec<Window>,
    /// Base window factors as `(absolute coordinate, window)`.
    base_windows: Vec<(usize, Window)>,
    compiled: CompiledPoly,
    /// `(coefficient, normal exponents, base exponents)` per monomial.
    monomials: Vec<(C, Vec<u32>, Vec<u32>)>,
    /// Radial exponent `q = m - 1 - 2N + |gamma'|` mapped to the factorized
    /// coefficient `sum c * sphere_moment(gamma') * base integrals`.
    radial_coeffs: BTreeMap<i64, C>,
}

/// A quadrature ray `(y, x'')` with its cutoff-dependent radial data.
struct RayNode {
    weight: f64,
    /// Length `n`: unit sphere direction in the first `m` slots, base point
    /// in the rest.
    point: Vec<f64>,
    /// Closed-form radial coefficients of the inner region, grouped by the
    /// power of `r`.
    head: Vec<(i64, C)>,
    /// Root from the previous cutoff, reused as the starting guess.
    warm: f64,
}

/// Reusable cutoff integrator for one `(omega, mu)` pair.
///
/// Construction validates the form, factorizes the cutoff-independent outer
/// region, and lays out quadrature rays; [`CutoffEvaluator::integral`] then
/// costs one closed-form evaluation per ray (standard measure: one closed
/// form total).  Root finding results are memoized across calls, so feed
/// cutoff grids in decreasing order.
pub struct CutoffEvaluator {
    n: usize,
    m: usize,
    power: u32,
    shift: i64,
    inner: f64,
    outer: f64,
    /// Largest cutoff for which the inner/outer split is valid.
    effective_inner: f64,
    standard: bool,
    opts: CutoffOptions,
    terms: Vec<TermData>,
    /// Integral over the cutoff-independent region `r >= inner`.
    tail_const: C,
    /// Standard-measure fast path: closed-form coefficients per power of `r`.
    head_coeffs: BTreeMap<i64, C>,
    sphere: Vec<(f64, Vec<f64>)>,
    base_nodes: Vec<(f64, Vec<f64>)>,
    /// `base_window_values[term][base node]`.
    base_window_values: Vec<Vec<f64>>,
    rays: Vec<RayNode>,
    phi: CompiledPoly,
    phi_bound: f64,
    scratch: Vec<f64>,
}

impl CutoffEvaluator {
    pub fn new(omega: &SingularForm, mu: &MorseBott, opts: &CutoffOptions) -> Result<Self> {
        if omega.vars() != mu.vars() || omega.codim() != mu.codim() {
            return Err(CutoffError::MeasureMismatch {
                form_n: omega.vars(),
                measure_n: mu.vars(),
                form_m: omega.codim(),
                measure_m: mu.codim(),
            });
        }
        let n = omega.vars();
        let m = omega.codim();
        if !(omega.numerator().is_zero() || omega.degree() == Some(n)) {
            return Err(CutoffError::NotTopDegree { n });
        }

        // Collect terms, checking windows as we go.
        let mut shared: Option<Window> = None;
        let mut terms = Vec::new();
        let mut cache = BaseCache::new(opts.quad);
        for (_, bag, poly) in omega.numerator().terms() {
            let radial: Vec<Window> = bag
                .iter()
                .filter(|(s, _)| *s == WindowSlot::Radial(0))
                .map(|(_, w)| *w)
                .collect();
            if radial.is_empty() {
                return Err(CutoffError::MissingRadialWindow);
            }
            let base = radial[0].base();
            if *shared.get_or_insert(base) != base || radial.iter().any(|w| w.base() != base) {
                return Err(CutoffError::MixedRadialWindows);
            }
            let by_coord = bag.base_factors();
            for coord in m..n {
                if !by_coord.contains_key(&coord) {
                    return Err(CutoffError::UnboundedBase { coord });
                }
            }
            let mut base_windows = Vec::new();
            for (&coord, windows) in &by_coord {
                for w in windows {
                    base_windows.push((coord, *w));
                }
            }

            let sig = bag.radial_orders(0);
            let q0 = m as i64 - 1 - 2 * i64::from(omega.power());
            let mut monomials = Vec::new();
            let mut radial_coeffs: BTreeMap<i64, C> = BTreeMap::new();
            for (e, &coeff) in poly.terms() {
                let normal: Vec<u32> = e.0[..m].to_vec();
                let base_exp: Vec<u32> = e.0[m..].to_vec();
                let moment = sphere_moment(&normal)?;
                if moment != 0.0 {
                    let mut factor = cr(moment) * coeff;
                    for coord in m..n {
                        let one = cache.one_dim(base_exp[coord - m], &by_coord[&coord])?;
                        factor *= one;
                    }
                    if factor != C::default() {
                        let q = q0 + i64::from(normal.iter().sum::<u32>());
                        *radial_coeffs.entry(q).or_default() += factor;
                    }
                }
                monomials.push((coeff, normal, base_exp));
            }

            terms.push(TermData {
                sig,
                radial,
                base_windows,
                compiled: poly.compile(),
                monomials,
                radial_coeffs,
            });
        }

        let window = shared.unwrap_or_else(Window::standard);
        let (inner, outer) = (window.inner(), window.outer());

        // Cutoff-independent region r in [inner, outer].
        let mut tail_cache: BTreeMap<(i64, Vec<u32>), f64> = BTreeMap::new();
        let mut tail_const = C::default();
        for t in &terms {
            for (&q, &coeff) in &t.radial_coeffs {
                let key = (q, t.sig.clone());
                let value = match tail_cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = radial_tail(&t.radial, q, inner, outer, &opts.quad)?;
                        tail_cache.insert(key, v);
                        v
                    }
                };
                tail_const += coeff * value;
            }
        }

        // Standard-measure closed-form coefficients for r in [eps, inner]:
        // only terms whose radial factors are underived survive there.
        let mut head_coeffs: BTreeMap<i64, C> = BTreeMap::new();
        for t in terms.iter().filter(|t| t.sig.iter().all(|&k| k == 0)) {
            for (&q, &coeff) in &t.radial_coeffs {
                *head_coeffs.entry(q).or_default() += coeff;
            }
        }

        let degree = terms
            .iter()
            .flat_map(|t| t.monomials.iter())
            .map(|(_, normal, _)| normal.iter().sum::<u32>())
            .max()
            .unwrap_or(0);
        let sphere = sphere_rule(m, opts.angular, degree)?;
        let base_nodes = base_product_rule(&terms, n, m, opts.quad.order)?;
        let base_window_values: Vec<Vec<f64>> = terms
            .iter()
            .map(|t| {
                base_nodes
                    .iter()
                    .map(|(_, x)| base_window_product(t, m, x))
                    .collect()
            })
            .collect();

        let base_outer = terms
            .iter()
            .flat_map(|t| t.base_windows.iter())
            .map(|(_, w)| w.outer())
            .fold(0.0, f64::max);
        let phi_bound = mu.phi_sup_bound(outer.max(base_outer));
        let effective_inner = inner * (-phi_bound).exp();

        let mut evaluator = CutoffEvaluator {
            n,
            m,
            power: omega.power(),
            shift: m as i64 - 2 * i64::from(omega.power()),
            inner,
            outer,
            effective_inner,
            standard: mu.is_standard(),
            opts: *opts,
            terms,
            tail_const,
            head_coeffs,
            sphere,
            base_nodes,
            base_window_values,
            rays: Vec::new(),
            phi: mu.phi().compile(),
            phi_bound,
            scratch: vec![0.0; n],
        };
        if !evaluator.standard {
            evaluator.build_rays();
        }
        Ok(evaluator)
    }

    /// Largest cutoff the evaluator accepts for a conformal measure (for the
    /// standard measure any positive cutoff is fine).
    pub fn effective_inner(&self) -> f64 {
        self.effective_inner
    }

    pub fn codim(&self) -> usize {
        self.m
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Lays out the product quadrature rays and their closed-form radial
    /// coefficients for the cutoff-dependent inner region.
    fn build_rays(&mut self) {
        let m = self.m;
        for (ws, y) in &self.sphere {
            for (bi, (wb, x)) in self.base_nodes.iter().enumerate() {
                let mut head: BTreeMap<i64, C> = BTreeMap::new();
                for (ti, t) in self.terms.iter().enumerate() {
                    if !t.sig.iter().all(|&k| k == 0) {
                        continue;
                    }
                    let wbase = self.base_window_values[ti][bi];
                    if wbase == 0.0 {
                        continue;
                    }
                    for (coeff, normal, base_exp) in &t.monomials {
                        let mut v = *coeff * wbase;
                        for (yi, &e) in y.iter().zip(normal) {
                            v *= yi.powi(e as i32);
                        }
                        for (xj, &e) in x.iter().zip(base_exp) {
                            v *= xj.powi(e as i32);
                        }
                        if v != C::default() {
                            let q = m as i64 - 1 - 2 * i64::from(self.power)
                                + i64::from(normal.iter().sum::<u32>());
                            *head.entry(q).or_default() += v;
                        }
                    }
                }
                if head.is_empty() {
                    continue;
                }
                let mut point = Vec::with_capacity(self.n);
                point.extend_from_slice(y);
                point.extend_from_slice(x);
                self.rays.push(RayNode {
                    weight: ws * wb,
                    point,
                    head: head.into_iter().collect(),
                    warm: 0.0,
                });
            }
        }
    }

    /// The integral of the form over `{mu >= eps^2}`.
    pub fn integral(&mut self, eps: f64) -> Result<C> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CutoffError::CutoffOutOfRange {
                eps,
                limit: if self.standard {
                    f64::INFINITY
                } else {
                    self.effective_inner
                },
            });
        }
        if self.standard {
            if eps >= self.outer {
                return Ok(C::default());
            }
            if eps < self.inner {
                let mut value = self.tail_const;
                for (&q, &coeff) in &self.head_coeffs {
                    value += coeff * power_integral(q, eps, self.inner);
                }
                return Ok(value);
            }
            // Partial overlap with the window transition: integrate the
            // radial factor directly on [eps, outer].
            let mut value = C::default();
            for t in &self.terms {
                for (&q, &coeff) in &t.radial_coeffs {
                    value += coeff * radial_tail(&t.radial, q, eps, self.outer, &self.opts.quad)?;
                }
            }
            return Ok(value);
        }

        if eps >= self.effective_inner {
            return Err(CutoffError::CutoffOutOfRange {
                eps,
                limit: self.effective_inner,
            });
        }
        let mut value = self.tail_const;
        let inner = self.inner;
        let bound = self.phi_bound;
        for ray in &mut self.rays {
            let r = solve_cutoff_radius(
                &self.phi,
                &ray.point,
                self.m,
                eps,
                bound,
                inner,
                ray.warm,
                &mut self.scratch,
            )?;
            ray.warm = r;
            let mut ray_value = C::default();
            for &(q, coeff) in &ray.head {
                ray_value += coeff * power_integral(q, r, inner);
            }
            value += ray_value * ray.weight;
        }
        Ok(value)
    }

    /// The integral of the form's radial contraction over the level set
    /// `{mu_0 = t^2}`, with `t` signed.
    pub fn level_set(&self, t: f64) -> Result<C> {
        if !self.standard {
            return Err(CutoffError::ConformalLevelSet);
        }
        if t == 0.0 && self.shift < 0 {
            return Err(CutoffError::LevelSetAtZero { shift: self.shift });
        }
        let radial_scale = t.powi(self.shift as i32);
        let mut value = C::default();
        let mut point = vec![0.0; self.n];
        for (ti, term) in self.terms.iter().enumerate() {
            let mut factor = radial_scale;
            for w in &term.radial {
                factor *= w.eval(t * t);
            }
            if factor == 0.0 {
                continue;
            }
            let mut sum = C::default();
            for (ws, y) in &self.sphere {
                for (bi, (wb, x)) in self.base_nodes.iter().enumerate() {
                    let wbase = self.base_window_values[ti][bi];
                    if wbase == 0.0 {
                        continue;
                    }
                    for (slot, &yi) in point[..self.m].iter_mut().zip(y) {
                        *slot = t * yi;
                    }
                    point[self.m..].copy_from_slice(x);
                    sum += term.compiled.eval(&point) * (ws * wb * wbase);
                }
            }
            value += sum * factor;
        }
        Ok(value)
    }
}

/// `integral of r^q dr` over `[lo, hi]`, exactly.
fn power_integral(q: i64, lo: f64, hi: f64) -> f64 {
    if q == -1 {
        (hi / lo).ln()
    } else {
        let p = (q + 1) as i32;
        (hi.powi(p) - lo.powi(p)) / f64::from(p)
    }
}

/// `integral of r^q * prod w^(k)(r^2) dr` over `[lo, hi]` by composite Gauss.
fn radial_tail(
    radial: &[Window],
    q: i64,
    lo: f64,
    hi: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if lo >= hi {
        return Ok(0.0);
    }
    let rule = GaussRule::composite(opts.order, lo, hi, opts.panels.max(2))?;
    Ok(rule.integrate(|r| {
        let u = r * r;
        radial.iter().map(|w| w.eval(u)).product::<f64>() * r.powi(q as i32)
    }))
}

/// Product of a term's base window factors at a base point.
fn base_window_product(term: &TermData, m: usize, x: &[f64]) -> f64 {
    term.base_windows
        .iter()
        .map(|(coord, w)| {
            let xi = x[coord - m];
            w.eval(xi * xi)
        })
        .product()
}

/// Cartesian product of per-coordinate Gauss rules over the base variables,
/// split at every window radius so each panel sees a smooth integrand.
fn base_product_rule(
    terms: &[TermData],
    n: usize,
    m: usize,
    order: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut nodes: Vec<(f64, Vec<f64>)> = vec![(1.0, Vec::new())];
    for coord in m..n {
        let mut radii: Vec<f64> = Vec::new();
        for t in terms {
            for (c, w) in &t.base_windows {
                if *c == coord {
                    radii.push(w.inner());
                    radii.push(w.outer());
                }
            }
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let limit = radii.last().copied().unwrap_or(0.0);
        if limit == 0.0 {
            // No window on this coordinate can happen only for zero forms.
            continue;
        }
        let mut cuts: Vec<f64> = radii.iter().map(|&r| -r).collect();
        cuts.reverse();
        cuts.push(0.0);
        cuts.extend(radii.iter().copied());
        cuts.sort_by(f64::total_cmp);
        let mut line: Vec<(f64, f64)> = Vec::new();
        for pair in cuts.windows(2) {
            let rule = gauss_rule(order, pair[0], pair[1])?;
            line.extend(rule.nodes.into_iter().zip(rule.weights));
        }
        let mut next = Vec::with_capacity(nodes.len() * line.len());
        for (w, x) in &nodes {
            for &(xn, wn) in &line {
                let mut point = x.clone();
                point.push(xn);
                next.push((w * wn, point));
            }
        }
        nodes = next;
    }
    Ok(nodes)
}

/// Solves `r * exp(phi(r y, x'')) = eps` for `r` by bracketed Illinois
/// iteration.  The bracket `eps * e^{-B} <= r <= eps * e^{B}` comes from the
/// sup bound `B` on `|phi|`, so a root always exists inside it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_cutoff_radius(
    phi: &CompiledPoly,
    point: &[f64],
    m: usize,
    eps: f64,
    bound: f64,
    cap: f64,
    warm: f64,
    scratch: &mut [f64],
) -> Result<f64> {
    scratch[m..].copy_from_slice(&point[m..]);
    let eval = |r: f64, scratch: &mut [f64]| -> f64 {
        for (slot, &yi) in scratch[..m].iter_mut().zip(point) {
            *slot = r * yi;
        }
        (r / eps).ln() + phi.eval_real(scratch)
    };
    let mut lo = eps * (-bound).exp() * 0.999;
    let mut hi = (eps * bound.exp() * 1.001).min(cap);
    let mut flo = eval(lo, scratch);
    let mut fhi = eval(hi, scratch);
    for _ in 0..4 {
        if flo <= 0.0 {
            break;
        }
        lo *= 0.5;
        flo = eval(lo, scratch);
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(CutoffError::RootFind {
            residual: flo.abs().min(fhi.abs()),
        });
    }

    let mut x = if warm > lo && warm < hi {
        warm
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..100 {
        let fx = eval(x, scratch);
        if fx.abs() < 1e-14 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
            fhi = fx;
            // Illinois trick: halve the stale end to force superlinearity.
            flo *= 0.5;
        } else {
            lo = x;
            flo = fx;
            fhi *= 0.5;
        }
        if hi - lo < 1e-13 * hi {
            return Ok(0.5 * (lo + hi));
        }
        let secant = (lo * fhi - hi * flo) / (fhi - flo);
        x = if secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(CutoffError::RootFind {
        residual: eval(x, scratch).abs(),
    })
}

// ---------------------------------------------------------------------------
// Entry points.
// ---------------------------------------------------------------------------

/// The integral of `omega` over `{mu >= eps^2}`.
pub fn cutoff_integral(
    omega: &SingularForm,
    mu: &MorseBott,
    eps: f64,
    opts: &CutoffOptions,
) -> Result<C> {
    CutoffEvaluator::new(omega, mu, opts)?.integral(eps)
}

/// The level-set integral `I(t)` by sphere-times-base quadrature, with the
/// sign convention `I(-t) = (-1)^m I(t)`.
pub fn level_set_integral_numeric(
    omega: &SingularForm,
    mu: &MorseBott,
    t: f64,
    opts: &CutoffOptions,
) -> Result<C> {
    if !mu.is_standard() {
        return Err(CutoffError::ConformalLevelSet);
    }
    CutoffEvaluator::new(omega, mu, opts)?.level_set(t)
}

/// Fits the expansion coefficients to sampled cutoff integrals.
///
/// The reported basis is `{eps^{-k} : 1 <= k <= 2N - m, k = m mod 2}`,
/// `log(1/eps)` and `1`.  As many positive powers of `eps` as the sample
/// count affords (up to `eps^4`) join the fit as nuisance columns so the
/// `O(eps)` remainder does not bias the reported coefficients; their values
/// are discarded.  Rows are weighted by the inverse sample magnitude, since
/// the rounding noise of a divergent sample is proportional to its size, and
/// columns are scaled to unit norm before the singular-value solve.
pub fn fit_expansion(samples: &[(f64, C)], m: usize, power: u32) -> Result<FitReport> {
    let max_k = (2 * i64::from(power) - m as i64).max(0);
    let ks: Vec<u32> = (1..=max_k as u32).filter(|k| *k as usize % 2 == m % 2).collect();
    fit_with_powers(samples, &ks)
}

/// Fits `{eps^{-k} : k in ks}`, `log(1/eps)` and `1` to the samples.
pub(crate) fn fit_with_powers(samples: &[(f64, C)], ks: &[u32]) -> Result<FitReport> {
    let reported = ks.len() + 2;
    let rows = samples.len();
    if rows < reported + 4 {
        return Err(CutoffError::TooFewSamples {
            needed: reported + 4,
            got: rows,
        });
    }
    let remainder = (rows - reported - 4).min(4);
    let cols = reported + remainder;

    let weights: Vec<f64> = samples.iter().map(|(_, v)| 1.0 / v.norm().max(1.0)).collect();
    let mut a = DMatrix::zeros(rows, cols);
    for (i, &(eps, _)) in samples.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            a[(i, j)] = eps.powi(-(k as i32)) * weights[i];
        }
        a[(i, ks.len())] = (1.0 / eps).ln() * weights[i];
        a[(i, ks.len() + 1)] = weights[i];
        for p in 1..=remainder {
            a[(i, reported + p - 1)] = eps.powi(p as i32) * weights[i];
        }
    }
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, &s) in scales.iter().enumerate() {
        if s > 0.0 {
            a.column_mut(j).scale_mut(1.0 / s);
        }
    }

    let b_re = DVector::from_iterator(
        rows,
        samples.iter().zip(&weights).map(|((_, v), w)| v.re * w),
    );
    let b_im = DVector::from_iterator(
        rows,
        samples.iter().zip(&weights).map(|((_, v), w)| v.im * w),
    );

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > FIT_CONDITION_LIMIT {
        return Err(CutoffError::IllConditioned { cond });
    }
    let sol_re = svd
        .solve(&b_re, 0.0)
        .map_err(|_| CutoffError::IllConditioned { cond })?;
    let sol_im = svd
        .solve(&b_im, 0.0)
        .map_err(|_| CutoffError::IllConditioned { cond })?;

    let coefficient = |j: usize| -> C {
        let s = scales[j];
        if s > 0.0 {
            C::new(sol_re[j] / s, sol_im[j] / s)
        } else {
            C::default()
        }
    };

    // Report the misfit of the raw samples, not of the weighted rows.
    let mut residual = 0.0;
    for &(eps, v) in samples {
        let mut fit = C::default();
        for (j, &k) in ks.iter().enumerate() {
            fit += coefficient(j) * eps.powi(-(k as i32));
        }
        fit += coefficient(ks.len()) * (1.0 / eps).ln();
        fit += coefficient(ks.len() + 1);
        for p in 1..=remainder {
            fit += coefficient(reported + p - 1) * eps.powi(p as i32);
        }
        residual += (fit - v).norm_sqr();
    }
    let residual_norm = residual.sqrt();
    let mut neg = BTreeMap::new();
    for (j, &k) in ks.iter().enumerate() {
        neg.insert(k, coefficient(j));
    }
    let scale = samples
        .iter()
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    Ok(FitReport {
        expansion: AsymptoticExpansion {
            neg_coefficients: neg,
            log_coefficient: coefficient(ks.len()),
            finite_part: coefficient(ks.len() + 1),
            engine: Engine::Cutoff,
            error_estimate: residual_norm.max(1e-14 * scale),
        },
        residual_norm,
        condition_number: cond,
    })
}

/// Samples the cutoff integral over a grid and fits the expansion.
pub fn cutoff_expansion(
    omega: &SingularForm,
    mu: &MorseBott,
    grid: &EpsilonGrid,
    opts: &CutoffOptions,
) -> Result<FitReport> {
    let mut evaluator = CutoffEvaluator::new(omega, mu, opts)?;
    let mut samples = Vec::with_capacity(grid.len());
    for &eps in grid.values() {
        samples.push((eps, evaluator.integral(eps)?));
    }
    fit_expansion(&samples, evaluator.codim(), evaluator.power())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{Form, MultiIndex, Polynomial, WindowBag};
    use crate::mellin::{expansion, MellinOptions, ZetaEvaluator};
    use crate::testkit::adaptive_quad;
    use crate::{c, cr};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn opts() -> CutoffOptions {
        CutoffOptions {
            quad: QuadOptions {
                order: 32,
                panels: 2,
            },
            angular: 16,
        }
    }

    fn mu0(n: usize, m: usize) -> MorseBott {
        MorseBott::standard(n, m).unwrap()
    }

    /// `w(mu_0) dx_1 ^ ... ^ dx_n / mu_0^N` with base windows everywhere.
    fn standard_form(n: usize, m: usize, power: u32) -> SingularForm {
        let mut bag = WindowBag::radial(0, Window::standard());
        for coord in m..n {
            bag.push(WindowSlot::Base(coord), Window::standard());
        }
        let frame: Vec<usize> = (0..n).collect();
        let num = Form::term(Polynomial::constant(n, cr(1.0)), bag, &frame).unwrap();
        SingularForm::new(num, m, power).unwrap()
    }

    /// Random dyadic singular form with windows on every slot.
    fn random_form(rng: &mut ChaCha8Rng, n: usize, m: usize, power: u32) -> SingularForm {
        let mut num = Form::zero(n);
        let frame: Vec<usize> = (0..n).collect();
        for _ in 0..rng.random_range(1..=2) {
            let mut bag = WindowBag::radial(0, Window::standard());
            if rng.random_bool(0.25) {
                bag.push(WindowSlot::Radial(0), Window::standard().derivative());
            }
            for coord in m..n {
                bag.push(WindowSlot::Base(coord), Window::standard());
            }
            let mut poly = Polynomial::zero(n);
            for _ in 0..rng.random_range(1..=3) {
                let e = MultiIndex((0..n).map(|_| rng.random_range(0..=2u32)).collect());
                let re = rng.random_range(-8..=8i32) as f64 / 4.0;
                let im = rng.random_range(-8..=8i32) as f64 / 4.0;
                poly.add_term(e, c(re, im));
            }
            num = num.add(&Form::term(poly, bag, &frame).unwrap());
        }
        SingularForm::new(num, m, power).unwrap()
    }

    /// Small random conformal factor with dyadic coefficients.
    fn random_phi(rng: &mut ChaCha8Rng, n: usize) -> Polynomial {
        let mut phi = Polynomial::constant(n, cr(rng.random_range(-4..=4i32) as f64 / 32.0));
        for _ in 0..2 {
            let e = MultiIndex((0..n).map(|_| rng.random_range(0..=1u32)).collect());
            phi.add_term(e, cr(rng.random_range(-4..=4i32) as f64 / 64.0));
        }
        phi
    }

    #[test]
    fn sphere_rules_match_moment_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for m in 1..=4 {
            for _ in 0..20 {
                let exps: Vec<u32> = (0..m).map(|_| 2 * rng.random_range(0..=2u32)).collect();
                let rule = sphere_rule(m, 16, exps.iter().sum()).unwrap();
                let got: f64 = rule
                    .iter()
                    .map(|(w, y)| {
                        w * y
                            .iter()
                            .zip(&exps)
                            .map(|(yi, &e)| yi.powi(e as i32))
                            .product::<f64>()
                    })
                    .sum();
                let want = sphere_moment(&exps).unwrap();
                assert!(
                    (got - want).abs() < 1e-12 * want.max(1.0),
                    "m={m} exps={exps:?}: {got} vs {want}"
                );
            }
            // Odd exponents integrate to zero by symmetry of the rules.
            let mut exps = vec![0u32; m];
            exps[0] = 3;
            let rule = sphere_rule(m, 16, 3).unwrap();
            let got: f64 = rule
                .iter()
                .map(|(w, y)| w * y[0].powi(3))
                .sum();
            assert!(got.abs() < 1e-13, "m={m}: odd moment {got}");
        }
        assert!(matches!(
            sphere_rule(5, 8, 0),
            Err(CutoffError::CodimTooLarge { m: 5 })
        ));
    }

    #[test]
    fn standard_example_matches_radial_oracle() {
        // integral over {mu_0 >= eps^2} of w dx1 dx2 / mu_0
        //   = 2 pi (log(a/eps) + int_a^b w(t^2)/t dt).
        let omega = standard_form(2, 2, 1);
        let w = Window::standard();
        let tail = adaptive_quad(
            |t| w.eval(t * t) / t,
            w.inner(),
            w.outer(),
            1e-12,
        );
        for &eps in &[0.01, 0.002] {
            let got = cutoff_integral(&omega, &mu0(2, 2), eps, &opts()).unwrap();
            let want = 2.0 * PI * ((w.inner() / eps).ln() + tail);
            assert!((got.re - want).abs() < 1e-6, "eps={eps}: {} vs {want}", got.re);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn cutoff_above_support_gives_zero() {
        let omega = standard_form(2, 2, 1);
        let got = cutoff_integral(&omega, &mu0(2, 2), 0.95, &opts()).unwrap();
        assert_eq!(got, C::default());
    }

    #[test]
    fn cutoff_inside_transition_matches_adaptive_oracle() {
        // For a <= eps < b the integral is 2 pi int_eps^b w(r^2)/r dr.
        let omega = standard_form(2, 2, 1);
        let w = Window::standard();
        let eps = 0.7;
        let want = 2.0
            * PI
            * adaptive_quad(|r| w.eval(r * r) / r, eps, w.outer(), 1e-12);
        let got = cutoff_integral(&omega, &mu0(2, 2), eps, &opts()).unwrap();
        assert!((got.re - want).abs() < 1e-8, "{} vs {want}", got.re);
    }

    #[test]
    fn constant_rescaling_shifts_the_cutoff() {
        // Replacing mu_0 by t mu_0 is the same as shrinking eps by sqrt(t).
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let omega = random_form(&mut rng, 3, 2, 2);
        let scaled = MorseBott::scaled(3, 2, (2.0f64).exp()).unwrap();
        let eps = 0.02;
        let lhs = cutoff_integral(&omega, &scaled, eps, &opts()).unwrap();
        let rhs = cutoff_integral(&omega, &mu0(3, 2), eps * (-1.0f64).exp(), &opts()).unwrap();
        assert!(
            (lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0),
            "{lhs} vs {rhs}"
        );
    }

    #[test]
    fn conformal_cutoff_rejects_large_eps() {
        let omega = standard_form(2, 2, 1);
        let mu = MorseBott::conformal(2, Polynomial::constant(2, cr(0.5))).unwrap();
        let mut ev = CutoffEvaluator::new(&omega, &mu, &opts()).unwrap();
        let limit = ev.effective_inner();
        assert!((limit - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(matches!(
            ev.integral(limit * 1.01),
            Err(CutoffError::CutoffOutOfRange { .. })
        ));
        assert!(ev.integral(limit * 0.5).is_ok());
    }

    #[test]
    fn root_finder_reproduces_constant_shift_exactly() {
        // With phi constant the cutoff radius is eps * e^{-phi} on every ray,
        // so the conformal integral equals the standard one shifted.
        let omega = standard_form(3, 2, 1);
        let mu = MorseBott::conformal(2, Polynomial::constant(3, cr(0.25))).unwrap();
        let eps = 0.01;
        let lhs = cutoff_integral(&omega, &mu, eps, &opts()).unwrap();
        let rhs = cutoff_integral(&omega, &mu0(3, 2), eps * (-0.25f64).exp(), &opts()).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn level_set_of_reference_form_is_circle_length() {
        let omega = standard_form(2, 2, 1);
        let got = level_set_integral_numeric(&omega, &mu0(2, 2), 0.3, &opts()).unwrap();
        assert!((got.re - 2.0 * PI).abs() < 1e-12, "{}", got.re);
        assert!(got.im.abs() < 1e-14);
    }

    #[test]
    fn level_set_matches_profile_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..25 {
            let n = rng.random_range(2..=4);
            let m = rng.random_range(1..=n.min(4));
            let power = rng.random_range(0..=2);
            let omega = random_form(&mut rng, n, m, power);
            let profile =
                crate::mellin::radial_profile(&omega, &QuadOptions::default()).unwrap();
            for &t in &[0.2, -0.35, 0.6] {
                let got = level_set_integral_numeric(&omega, &mu0(n, m), t, &opts()).unwrap();
                let want = profile.level_set(t);
                assert!(
                    (got - want).norm() < 1e-7 * want.norm().max(1.0),
                    "trial {trial} n={n} m={m} t={t}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn level_set_parity_in_the_sign_of_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for m in [2usize, 3] {
            let n = m + 1;
            let omega = random_form(&mut rng, n, m, 1);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for &t in &[0.15, 0.4] {
                let plus = level_set_integral_numeric(&omega, &mu0(n, m), t, &opts()).unwrap();
                let minus = level_set_integral_numeric(&omega, &mu0(n, m), -t, &opts()).unwrap();
                assert!(
                    (minus - plus * sign).norm() < 1e-11 * plus.norm().max(1.0),
                    "m={m} t={t}"
                );
            }
        }
    }

    #[test]
    fn level_set_of_zero_form_is_zero() {
        let zero = SingularForm::new(Form::zero(3), 2, 1).unwrap();
        let got = level_set_integral_numeric(&zero, &mu0(3, 2), 0.3, &opts()).unwrap();
        assert_eq!(got, C::default());
    }

    #[test]
    fn level_set_rejects_zero_with_negative_exponent() {
        let omega = standard_form(2, 2, 2);
        assert!(matches!(
            level_set_integral_numeric(&omega, &mu0(2, 2), 0.0, &opts()),
            Err(CutoffError::LevelSetAtZero { shift: -2 })
        ));
    }

    #[test]
    fn level_set_rejects_conformal_measures() {
        let omega = standard_form(2, 2, 1);
        let mu = MorseBott::conformal(2, Polynomial::coordinate(2, 0)).unwrap();
        assert!(matches!(
            level_set_integral_numeric(&omega, &mu, 0.3, &opts()),
            Err(CutoffError::ConformalLevelSet)
        ));
    }

    #[test]
    fn fit_recovers_synthetic_coefficients() {
        let grid = EpsilonGrid::geometric(1e-2, 0.7, 12).unwrap();
        let samples: Vec<(f64, C)> = grid
            .values()
            .iter()
            .map(|&e| {
                (
                    e,
                    cr(3.0 / e + 2.0 * (1.0 / e).ln() + 5.0 + 0.1 * e),
                )
            })
            .collect();
        let report = fit_expansion(&samples, 1, 1).unwrap();
        let e = &report.expansion;
        assert!((e.neg_coefficients[&1].re - 3.0).abs() < 1e-3);
        assert!((e.log_coefficient.re - 2.0).abs() < 1e-3);
        assert!((e.finite_part.re - 5.0).abs() < 1e-3);
        assert!(report.condition_number < 1e6);
        assert!(report.residual_norm < 1e-2);
    }

    #[test]
    fn fit_of_constant_samples_is_the_constant() {
        let grid = EpsilonGrid::geometric(1e-2, 0.7, 12).unwrap();
        let samples: Vec<(f64, C)> = grid.values().iter().map(|&e| (e, c(4.0, -1.0))).collect();
        let report = fit_expansion(&samples, 2, 1).unwrap();
        let e = &report.expansion;
        assert!(e.neg_coefficients.is_empty());
        assert!(e.log_coefficient.norm() < 1e-12);
        assert!((e.finite_part - c(4.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn fit_rejects_underdetermined_and_degenerate_input() {
        let samples: Vec<(f64, C)> = (0..4).map(|i| (0.1 / (i + 1) as f64, cr(1.0))).collect();
        assert!(matches!(
            fit_expansion(&samples, 2, 2),
            Err(CutoffError::TooFewSamples { needed: 7, .. })
        ));
        let repeated: Vec<(f64, C)> = (0..12).map(|_| (0.01, cr(1.0))).collect();
        assert!(matches!(
            fit_expansion(&repeated, 2, 1),
            Err(CutoffError::IllConditioned { .. })
        ));
    }

    #[test]
    fn grid_constructors_validate_input() {
        assert!(EpsilonGrid::geometric(0.0, 0.7, 12).is_err());
        assert!(EpsilonGrid::geometric(0.1, 1.5, 12).is_err());
        assert!(EpsilonGrid::from_values(vec![0.1, 0.2]).is_err());
        assert!(EpsilonGrid::from_values(vec![]).is_err());
        let grid = EpsilonGrid::standard_for(0.5);
        assert_eq!(grid.len(), 12);
        assert!((grid.values()[0] - 0.05).abs() < 1e-15);
        assert!(grid.values().iter().all(|&e| e < 0.5));
    }

    #[test]
    fn fitted_reference_example_recovers_log_coefficient() {
        let omega = standard_form(2, 2, 1);
        let grid = EpsilonGrid::standard_for(0.5);
        let report = cutoff_expansion(&omega, &mu0(2, 2), &grid, &opts()).unwrap();
        assert!(
            (report.expansion.log_coefficient.re - 2.0 * PI).abs() < 1e-4,
            "{}",
            report.expansion.log_coefficient.re
        );
        assert!(report.residual_norm < 1e-8);
    }

    #[test]
    fn engines_agree_on_random_standard_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mopts = MellinOptions::default();
        let grid = EpsilonGrid::standard_for(0.5);
        for trial in 0..30 {
            let n = rng.random_range(2..=4);
            let m = 2.min(n);
            let power = rng.random_range(1..=3);
            let omega = random_form(&mut rng, n, m, power);
            let mellin = expansion(&omega, &mu0(n, m), &mopts).unwrap();
            let fit = cutoff_expansion(&omega, &mu0(n, m), &grid, &opts()).unwrap();
            let scale = omega.numerator().max_coefficient_norm().max(1.0);
            assert!(
                (mellin.log_coefficient - fit.expansion.log_coefficient).norm() < 1e-4 * scale,
                "trial {trial}: I0 {} vs {}",
                mellin.log_coefficient,
                fit.expansion.log_coefficient
            );
            assert!(
                (mellin.finite_part - fit.expansion.finite_part).norm() < 1e-4 * scale,
                "trial {trial}: finite {} vs {}",
                mellin.finite_part,
                fit.expansion.finite_part
            );
            for k in 1..=(2 * power - m as u32).max(0) {
                let a = mellin.neg_coefficients.get(&k).copied().unwrap_or_default();
                let b = fit
                    .expansion
                    .neg_coefficients
                    .get(&k)
                    .copied()
                    .unwrap_or_default();
                assert!(
                    (a - b).norm() < 1e-3 * scale.max(a.norm()),
                    "trial {trial}: I_-{k} {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn fitted_log_coefficient_is_conformally_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grid = EpsilonGrid::geometric(0.02, 0.7, 12).unwrap();
        for trial in 0..6 {
            let n = rng.random_range(2..=3);
            let m = 2.min(n);
            let power = rng.random_range(1..=2);
            let omega = random_form(&mut rng, n, m, power);
            let phi = random_phi(&mut rng, n);
            let mu = MorseBott::conformal(m, phi).unwrap();
            let standard = cutoff_expansion(&omega, &mu0(n, m), &grid, &opts()).unwrap();
            let conformal = cutoff_expansion(&omega, &mu, &grid, &opts()).unwrap();
            let scale = omega.numerator().max_coefficient_norm().max(1.0);
            assert!(
                (standard.expansion.log_coefficient - conformal.expansion.log_coefficient)
                    .norm()
                    < 1e-4 * scale,
                "trial {trial}: {} vs {}",
                standard.expansion.log_coefficient,
                conformal.expansion.log_coefficient
            );
        }
    }

    #[test]
    fn fitted_finite_part_shift_matches_continuation_residue() {
        // The finite parts of the two measures differ by the residue at zero
        // of the continuation applied to phi * omega.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let grid = EpsilonGrid::geometric(0.02, 0.7, 12).unwrap();
        let mopts = MellinOptions::default();
        for trial in 0..6 {
            let n = rng.random_range(2..=3);
            let m = 2.min(n);
            let power = rng.random_range(1..=2);
            let omega = random_form(&mut rng, n, m, power);
            let phi = random_phi(&mut rng, n);
            let mu = MorseBott::conformal(m, phi.clone()).unwrap();
            let standard = cutoff_expansion(&omega, &mu0(n, m), &grid, &opts()).unwrap();
            let conformal = cutoff_expansion(&omega, &mu, &grid, &opts()).unwrap();
            let weighted = SingularForm::new(
                omega.numerator().mul_scalar(&phi),
                m,
                omega.power(),
            )
            .unwrap();
            let correction = ZetaEvaluator::new(&weighted, &mu0(n, m), &mopts)
                .unwrap()
                .log_coefficient();
            let got = conformal.expansion.finite_part - standard.expansion.finite_part;
            let scale = omega.numerator().max_coefficient_norm().max(1.0);
            assert!(
                (got - correction).norm() < 1e-4 * scale,
                "trial {trial}: shift {got} vs residue {correction}"
            );
        }
    }

    #[test]
    fn conformal_engines_agree_on_divergent_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let grid = EpsilonGrid::geometric(0.02, 0.7, 12).unwrap();
        let mopts = MellinOptions::default();
        for trial in 0..4 {
            let n = rng.random_range(2..=3);
            let m = 2;
            let omega = random_form(&mut rng, n, m, 2);
            let phi = random_phi(&mut rng, n);
            let mu = MorseBott::conformal(m, phi).unwrap();
            let mellin = expansion(&omega, &mu, &mopts).unwrap();
            let fit = cutoff_expansion(&omega, &mu, &grid, &opts()).unwrap();
            let scale = omega.numerator().max_coefficient_norm().max(1.0);
            for k in [2u32] {
                let a = mellin.neg_coefficients.get(&k).copied().unwrap_or_default();
                let b = fit
                    .expansion
                    .neg_coefficients
                    .get(&k)
                    .copied()
                    .unwrap_or_default();
                assert!(
                    (a - b).norm() < 1e-3 * scale.max(a.norm()),
                    "trial {trial}: I_-{k} {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn evaluator_rejects_malformed_input() {
        let omega = standard_form(2, 2, 1);
        let mu3 = MorseBott::standard(3, 2).unwrap();
        assert!(matches!(
            CutoffEvaluator::new(&omega, &mu3, &opts()),
            Err(CutoffError::MeasureMismatch { .. })
        ));

        // Missing radial window.
        let bare = Form::term(
            Polynomial::constant(2, cr(1.0)),
            WindowBag::empty(),
            &[0, 1],
        )
        .unwrap();
        let omega = SingularForm::new(bare, 2, 1).unwrap();
        assert!(matches!(
            CutoffEvaluator::new(&omega, &mu0(2, 2), &opts()),
            Err(CutoffError::MissingRadialWindow)
        ));

        // Missing base window.
        let bag = WindowBag::radial(0, Window::standard());
        let partial = Form::term(Polynomial::constant(3, cr(1.0)), bag, &[0, 1, 2]).unwrap();
        let omega = SingularForm::new(partial, 2, 1).unwrap();
        assert!(matches!(
            CutoffEvaluator::new(&omega, &mu0(3, 2), &opts()),
            Err(CutoffError::UnboundedBase { coord: 2 })
        ));

        // Not top degree.
        let low = Form::term(
            Polynomial::constant(2, cr(1.0)),
            WindowBag::radial(0, Window::standard()),
            &[0],
        )
        .unwrap();
        let omega = SingularForm::new(low, 2, 1).unwrap();
        assert!(matches!(
            CutoffEvaluator::new(&omega, &mu0(2, 2), &opts()),
            Err(CutoffError::NotTopDegree { n: 2 })
        ));
    }
}
