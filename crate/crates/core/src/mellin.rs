//! Regularization through the weighted integral
//! `zeta(s) = integral mu^{s/2} omega` and its analytic continuation.
//!
//! In polar coordinates around the singular locus the integral of
//! `omega = mu_0^{-N} f dx` over a level set `{mu_0 = t^2}` collapses to a
//! closed form: sphere moments of the normal part of each monomial times
//! one-dimensional window integrals of the transverse part.  The level-set
//! integral is therefore
//!
//! ```text
//! I(t) = t^{m - 2N} * sum_sig (prod w^(k)(t^2)) * sum_j c_{sig,j} t^j
//! ```
//!
//! and `zeta(s) = sum c_{sig,j} * W_sig(s + shift + j)` where `W_sig` is the
//! Mellin transform of the window product.  Every analytic statement (pole
//! locations, residues, finite parts) then reduces to the single explicit
//! pole of [`WindowMellin`], with no numerical continuation anywhere.
//!
//! Conformal measures `mu = e^{2 phi} mu_0` enter through the series
//! `zeta(s; mu, omega) = sum_l s^l / l! * zeta(s; mu_0, phi^l omega)`.  At
//! `s = 0` only `l <= 1` contributes (the poles are simple), so the log
//! coefficient and the finite part are computed without truncation; residues
//! at `s = k > 0` use a degree-truncated Taylor polynomial of `e^{k phi}`,
//! cross-checked independently by the cutoff engine.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exterior::{FormError, MorseBott, SingularForm, Window, WindowSlot};
use crate::quadrature::{sphere_moment, BaseCache, QuadOptions, QuadratureError, WindowMellin};
use crate::{Engine, C};

/// Errors raised by the continuation engine.
#[derive(Debug, Error)]
pub enum MellinError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("integrand must be a top-degree form in {n} variables")]
    NotTopDegree { n: usize },
    #[error("a numerator term lacks a radial cutoff window on the singular block")]
    MissingRadialWindow,
    #[error("radial cutoff windows mix different radii; one window per problem")]
    MixedRadialWindows,
    #[error("coordinate x{} carries no cutoff window in some term", coord + 1)]
    MissingBaseWindow { coord: usize },
    #[error("form and measure disagree: dimension {form_n}/{measure_n}, codimension {form_m}/{measure_m}")]
    MeasureMismatch {
        form_n: usize,
        measure_n: usize,
        form_m: usize,
        measure_m: usize,
    },
    #[error("s = {s} is within {POLE_GUARD} of the pole at {location} (residue {residue})")]
    NearPole {
        s: C,
        location: i64,
        residue: C,
    },
}

type Result<T> = std::result::Result<T, MellinError>;

/// Evaluation points closer than this to a pole location count as pole hits.
pub const POLE_GUARD: f64 = 1e-9;

/// Default truncation degree for `e^{k phi}` in conformal residue
/// extraction.
pub const DEFAULT_CONFORMAL_TRUNCATION: u32 = 12;

/// Default depth of the conformal series in [`ZetaEvaluator::eval`].
pub const DEFAULT_SERIES_DEPTH: usize = 16;

/// Tuning knobs shared by the continuation entry points.
#[derive(Clone, Copy, Debug)]
pub struct MellinOptions {
    pub quad: QuadOptions,
    /// Number of series terms kept when evaluating at general `s` under a
    /// conformal factor.
    pub series_depth: usize,
    /// Total-degree truncation of `e^{k phi}` for divergent coefficients.
    pub conformal_truncation: u32,
}

impl Default for MellinOptions {
    fn default() -> Self {
        MellinOptions {
            quad: QuadOptions::default(),
            series_depth: DEFAULT_SERIES_DEPTH,
            conformal_truncation: DEFAULT_CONFORMAL_TRUNCATION,
        }
    }
}

// ---------------------------------------------------------------------------
// Radial profiles.
// ---------------------------------------------------------------------------

/// Coefficients of one window signature inside a [`RadialProfile`].
#[derive(Clone, Debug)]
pub struct ProfileGroup {
    /// Sorted derivative orders of the radial window factors.
    pub orders: Vec<u32>,
    /// Map from the power `j` of `t` to its coefficient `c_j`.
    pub coefficients: BTreeMap<u32, C>,
}

impl ProfileGroup {
    /// Whether this signature contributes poles (all factors underived).
    pub fn is_pure(&self) -> bool {
        self.orders.iter().all(|&k| k == 0)
    }
}

/// Closed form of the level-set integral
/// `I(t) = integral over {mu_0 = t^2} of the contracted form`:
///
/// ```text
/// I(t) = t^shift * sum over groups of (prod w^(k)(t^2)) * sum_j c_j t^j
/// ```
#[derive(Clone, Debug)]
pub struct RadialProfile {
    /// Power shift `m - 2N` carried by the measure of the level set.
    pub shift: i64,
    /// Codimension of the singular block.
    pub m: usize,
    /// Common radii of all radial windows.
    pub window: Window,
    /// One entry per distinct derivative signature.
    pub groups: Vec<ProfileGroup>,
}

impl RadialProfile {
    pub fn is_zero(&self) -> bool {
        self.groups.iter().all(|g| g.coefficients.is_empty())
    }

    /// Coefficients of the underived-window signature, which is the only one
    /// contributing poles.
    pub fn pure_coefficients(&self) -> BTreeMap<u32, C> {
        self.groups
            .iter()
            .filter(|g| g.is_pure())
            .flat_map(|g| g.coefficients.iter().map(|(j, c)| (*j, *c)))
            .fold(BTreeMap::new(), |mut acc, (j, c)| {
                *acc.entry(j).or_default() += c;
                acc
            })
    }

    /// Evaluates `I(t)` for `t != 0`; negative `t` picks up the parity sign
    /// `(-1)^m` of the antipodal map.
    pub fn level_set(&self, t: f64) -> C {
        let r = t.abs();
        let mut acc = C::default();
        for g in &self.groups {
            let derivs = crate::exterior::window::window_derivatives(
                self.window.inner(),
                self.window.outer(),
                r * r,
                g.orders.last().copied().unwrap_or(0) as usize,
            );
            let wprod: f64 = g.orders.iter().map(|&k| derivs[k as usize]).product();
            if wprod == 0.0 {
                continue;
            }
            let mut poly = C::default();
            for (&j, &c) in &g.coefficients {
                poly += c * r.powi(j as i32);
            }
            acc += poly * wprod;
        }
        let mut value = acc * r.powi(self.shift as i32);
        if t < 0.0 && self.m % 2 == 1 {
            value = -value;
        }
        value
    }

    /// Largest coefficient magnitude, for error scaling.
    pub fn scale(&self) -> f64 {
        self.groups
            .iter()
            .flat_map(|g| g.coefficients.values())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Extracts the radial profile of a top-degree singular form.
///
/// Every numerator term must carry a radial window on the singular block
/// (all sharing one pair of radii) and at least one window on each
/// transverse coordinate, so the level sets have compact support.
pub fn radial_profile(omega: &SingularForm, opts: &QuadOptions) -> Result<RadialProfile> {
    let mut cache = BaseCache::new(*opts);
    radial_profile_with_cache(omega, &mut cache)
}

fn radial_profile_with_cache(omega: &SingularForm, cache: &mut BaseCache) -> Result<RadialProfile> {
    let n = omega.vars();
    let m = omega.codim();
    let shift = m as i64 - 2 * i64::from(omega.power());
    let mut window: Option<Window> = None;
    let mut groups: BTreeMap<Vec<u32>, BTreeMap<u32, C>> = BTreeMap::new();

    let full_frame: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    for (frame, bag, poly) in omega.numerator().terms() {
        if frame != full_frame {
            return Err(MellinError::NotTopDegree { n });
        }
        let mut radial: Option<Window> = None;
        for (slot, w) in bag.iter() {
            if *slot == WindowSlot::Radial(0) {
                match radial {
                    None => radial = Some(w.base()),
                    Some(r) if r == w.base() => {}
                    Some(_) => return Err(MellinError::MixedRadialWindows),
                }
            }
        }
        let radial = radial.ok_or(MellinError::MissingRadialWindow)?;
        match window {
            None => window = Some(radial),
            Some(w) if w == radial => {}
            Some(_) => return Err(MellinError::MixedRadialWindows),
        }
        let orders = bag.radial_orders(0);
        let base_factors = bag.base_factors();
        for coord in m..n {
            if base_factors.get(&coord).map_or(true, Vec::is_empty) {
                return Err(MellinError::MissingBaseWindow { coord });
            }
        }
        let slot = groups.entry(orders).or_default();
        for (e, &v) in poly.terms() {
            let normal = &e.0[..m];
            let moment = sphere_moment(normal)?;
            if moment == 0.0 {
                continue;
            }
            let mut base = 1.0;
            for coord in m..n {
                base *= cache.one_dim(e.0[coord], &base_factors[&coord])?;
                if base == 0.0 {
                    break;
                }
            }
            if base == 0.0 {
                continue;
            }
            let j: u32 = normal.iter().sum();
            let entry = slot.entry(j).or_default();
            *entry += v * moment * base;
            if *entry == C::default() {
                slot.remove(&j);
            }
        }
    }

    Ok(RadialProfile {
        shift,
        m,
        window: window.unwrap_or_else(Window::standard),
        groups: groups
            .into_iter()
            .map(|(orders, coefficients)| ProfileGroup {
                orders,
                coefficients,
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// The continuation evaluator.
// ---------------------------------------------------------------------------

/// A value of the continued `zeta` together with a bound on the conformal
/// series truncation.
#[derive(Clone, Copy, Debug)]
pub struct ZetaValue {
    pub value: C,
    /// Heuristic bound on the truncation error of the conformal series;
    /// exactly 0 for the standard measure.
    pub truncation: f64,
}

/// Immutable continuation engine for one `(omega, mu)` pair.
///
/// Construction extracts the radial profiles of `phi^l omega / l!` up to the
/// configured depth and prepares one [`WindowMellin`] per window signature;
/// evaluation afterwards is pure arithmetic, safe to share across threads.
pub struct ZetaEvaluator {
    shift: i64,
    m: usize,
    standard: bool,
    /// `profiles[l]` is the profile of `phi^l omega` (without the `1/l!`).
    profiles: Vec<RadialProfile>,
    mellins: BTreeMap<Vec<u32>, WindowMellin>,
    /// Pole locations and residues of the continued function.
    poles: Vec<(i64, C)>,
    phi_bound: f64,
    opts: MellinOptions,
    omega: SingularForm,
    mu: MorseBott,
}

impl ZetaEvaluator {
    pub fn new(omega: &SingularForm, mu: &MorseBott, opts: &MellinOptions) -> Result<Self> {
        if omega.vars() != mu.vars() || omega.codim() != mu.codim() {
            return Err(MellinError::MeasureMismatch {
                form_n: omega.vars(),
                measure_n: mu.vars(),
                form_m: omega.codim(),
                measure_m: mu.codim(),
            });
        }
        if !(omega.numerator().is_zero() || omega.degree() == Some(omega.vars())) {
            return Err(MellinError::NotTopDegree { n: omega.vars() });
        }
        let mut cache = BaseCache::new(opts.quad);
        let depth = if mu.is_standard() {
            0
        } else {
            opts.series_depth
        };
        let mut profiles = Vec::with_capacity(depth + 1);
        let mut weighted = omega.clone();
        for l in 0..=depth {
            if l > 0 {
                weighted = SingularForm::new(
                    weighted.numerator().mul_scalar(mu.phi()),
                    omega.codim(),
                    omega.power(),
                )?;
            }
            profiles.push(radial_profile_with_cache(&weighted, &mut cache)?);
        }

        let window = profiles
            .iter()
            .find(|p| !p.is_zero())
            .map(|p| p.window)
            .unwrap_or_else(Window::standard);
        for p in &profiles {
            if !p.is_zero() && p.window != window {
                return Err(MellinError::MixedRadialWindows);
            }
        }

        let mut mellins = BTreeMap::new();
        for p in &profiles {
            for g in &p.groups {
                if !mellins.contains_key(&g.orders) {
                    mellins.insert(
                        g.orders.clone(),
                        WindowMellin::from_signature(window, &g.orders, &opts.quad)?,
                    );
                }
            }
        }

        let shift = profiles[0].shift;
        let m = omega.codim();
        let phi_bound = mu.phi_sup_bound(window.outer());

        let mut evaluator = ZetaEvaluator {
            shift,
            m,
            standard: mu.is_standard(),
            profiles,
            mellins,
            poles: Vec::new(),
            phi_bound,
            opts: *opts,
            omega: omega.clone(),
            mu: mu.clone(),
        };
        evaluator.poles = evaluator.collect_poles();
        Ok(evaluator)
    }

    /// Pole locations of the continued function with their residues.
    ///
    /// Simple poles sit on `s = 2N - m - j` for the stored powers `j` of the
    /// underived window signature; under a conformal factor the series terms
    /// `s^l zeta_l` keep every such pole except that only `l = 0` can place
    /// one at `s = 0`.
    pub fn poles(&self) -> &[(i64, C)] {
        &self.poles
    }

    fn collect_poles(&self) -> Vec<(i64, C)> {
        let mut locations: Vec<i64> = Vec::new();
        for (l, p) in self.profiles.iter().enumerate() {
            for (j, _) in p.pure_coefficients() {
                let location = -self.shift - i64::from(j);
                if l > 0 && location == 0 {
                    continue;
                }
                if !locations.contains(&location) {
                    locations.push(location);
                }
            }
        }
        locations.sort_unstable();
        locations.reverse();
        locations
            .into_iter()
            .map(|k| (k, self.residue_series(k)))
            .filter(|(_, r)| r.norm() > 0.0)
            .collect()
    }

    /// Residue at an integer location via the depth-truncated series.
    fn residue_series(&self, k: i64) -> C {
        let mut acc = C::default();
        let mut weight = 1.0;
        for (l, p) in self.profiles.iter().enumerate() {
            if l > 0 {
                weight *= k as f64 / l as f64;
                if k == 0 {
                    break;
                }
            }
            let j = -self.shift - k;
            if j < 0 {
                continue;
            }
            if let Some(c) = p.pure_coefficients().get(&(j as u32)) {
                acc += c * weight;
            }
        }
        acc
    }

    /// The residue at `s = 0`, i.e. the coefficient of `log(1/eps)` in the
    /// cutoff expansion.  Exactly conformally invariant: only the `l = 0`
    /// series term can contribute.
    pub fn log_coefficient(&self) -> C {
        let j = -self.shift;
        if j < 0 {
            return C::default();
        }
        self.profiles[0]
            .pure_coefficients()
            .get(&(j as u32))
            .copied()
            .unwrap_or_default()
    }

    /// The constant term of the Laurent expansion at `s = 0`.
    ///
    /// Equals the finite part of the cutoff integral.  The conformal
    /// correction is the residue at 0 of `zeta(s; mu_0, phi omega)`, which is
    /// exact because the series contributes nothing at `s = 0` beyond
    /// `l <= 1`.
    pub fn finite_part(&self) -> C {
        let mut acc = self.laurent_constant(&self.profiles[0]);
        if self.profiles.len() > 1 {
            let j = -self.shift;
            if j >= 0 {
                acc += self.profiles[1]
                    .pure_coefficients()
                    .get(&(j as u32))
                    .copied()
                    .unwrap_or_default();
            }
        }
        acc
    }

    /// Constant Laurent term at `s = 0` of the standard-measure zeta of one
    /// profile.
    fn laurent_constant(&self, profile: &RadialProfile) -> C {
        let mut acc = C::default();
        for g in &profile.groups {
            let mellin = &self.mellins[&g.orders];
            for (&j, &c) in &g.coefficients {
                let arg = self.shift + i64::from(j);
                if arg == 0 && mellin.has_pole() {
                    acc += c * mellin.finite_part_at_zero();
                } else {
                    let value = mellin
                        .eval(crate::cr(arg as f64))
                        .expect("nonzero integer argument cannot hit the pole");
                    acc += c * value;
                }
            }
        }
        acc
    }

    /// Evaluates the continued function away from poles.
    pub fn eval(&self, s: C) -> Result<ZetaValue> {
        for &(location, residue) in &self.poles {
            if (s - location as f64).norm() < POLE_GUARD {
                return Err(MellinError::NearPole {
                    s,
                    location,
                    residue,
                });
            }
        }
        if s.norm() < POLE_GUARD {
            // No pole is stored at 0, so the continuation is analytic there
            // and its value is the Laurent constant.
            return Ok(ZetaValue {
                value: self.finite_part(),
                truncation: self.truncation_bound(s),
            });
        }
        let mut value = C::default();
        let mut weight = C::new(1.0, 0.0);
        for (l, p) in self.profiles.iter().enumerate() {
            if l > 0 {
                weight *= s / l as f64;
            }
            let mut term = C::default();
            for g in &p.groups {
                let mellin = &self.mellins[&g.orders];
                for (&j, &c) in &g.coefficients {
                    let arg = s + (self.shift + i64::from(j)) as f64;
                    // An individual transform may sit at its pole even though
                    // the residues cancel in the sum (otherwise the location
                    // would be stored and guarded above); the finite part is
                    // the correct shared limit.
                    let w = if mellin.has_pole() && arg.norm() < POLE_GUARD {
                        crate::cr(mellin.finite_part_at_zero())
                    } else {
                        mellin.eval(arg)?
                    };
                    term += c * w;
                }
            }
            value += term * weight;
            if weight.norm() == 0.0 {
                break;
            }
        }
        Ok(ZetaValue {
            value,
            truncation: self.truncation_bound(s),
        })
    }

    /// Heuristic remainder bound for the truncated conformal series at `s`.
    fn truncation_bound(&self, s: C) -> f64 {
        if self.standard {
            return 0.0;
        }
        let depth = self.profiles.len() - 1;
        let x = s.norm() * self.phi_bound;
        let mut tail = 1.0;
        for l in 1..=(depth + 1) {
            tail *= x / l as f64;
        }
        // Crude geometric tail of the factorial series.
        let ratio = x / (depth as f64 + 2.0);
        let geom = if ratio < 0.9 { 1.0 / (1.0 - ratio) } else { 10.0 };
        tail * geom * self.profiles[0].scale().max(1.0)
    }

    /// Divergent coefficient `I_{-k} = res_{s=k} zeta / k` for `k >= 1`.
    ///
    /// Under a conformal factor the residue at `k` equals the standard-
    /// measure residue of `e^{k phi} omega`; the exponential is truncated at
    /// the configured total degree.
    pub fn divergent_coefficient(&self, k: u32) -> Result<C> {
        debug_assert!(k >= 1);
        let j = -self.shift - i64::from(k);
        if j < 0 {
            return Ok(C::default());
        }
        let residue = if self.standard {
            self.profiles[0]
                .pure_coefficients()
                .get(&(j as u32))
                .copied()
                .unwrap_or_default()
        } else {
            let all: Vec<usize> = (0..self.omega.vars()).collect();
            let weight = self
                .mu
                .phi()
                .scale(crate::cr(f64::from(k)))
                .exp_truncated_on(&all, self.opts.conformal_truncation);
            let weighted = SingularForm::new(
                self.omega.numerator().mul_scalar(&weight),
                self.omega.codim(),
                self.omega.power(),
            )?;
            let profile = radial_profile(&weighted, &self.opts.quad)?;
            profile
                .pure_coefficients()
                .get(&(j as u32))
                .copied()
                .unwrap_or_default()
        };
        Ok(residue / f64::from(k))
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// Codimension of the singular locus.
    pub fn codim(&self) -> usize {
        self.m
    }

    /// The profile of the form itself (series order 0).
    pub fn profile(&self) -> &RadialProfile {
        &self.profiles[0]
    }
}

// ---------------------------------------------------------------------------
// Expansion extraction.
// ---------------------------------------------------------------------------

/// Coefficients of the cutoff expansion
/// `sum_k I_{-k} eps^{-k} + I_0 log(1/eps) + I_finite + o(1)`.
#[derive(Clone, Debug)]
pub struct AsymptoticExpansion {
    /// `k -> I_{-k}` for `k = 1 .. 2N - m`; absent keys are zero.
    pub neg_coefficients: BTreeMap<u32, C>,
    /// Coefficient of `log(1/eps)`.
    pub log_coefficient: C,
    /// The finite part.
    pub finite_part: C,
    pub engine: Engine,
    /// Heuristic accuracy bound for the reported numbers.
    pub error_estimate: f64,
}

/// Convenience wrapper building a fresh evaluator.
pub fn zeta_eval(
    omega: &SingularForm,
    mu: &MorseBott,
    s: C,
    opts: &MellinOptions,
) -> Result<ZetaValue> {
    ZetaEvaluator::new(omega, mu, opts)?.eval(s)
}

/// Pole table of the standard-measure continuation: `(location, residue)`
/// sorted by descending location.
pub fn pole_table(omega: &SingularForm, opts: &MellinOptions) -> Result<Vec<(i64, C)>> {
    let mu = MorseBott::standard(omega.vars(), omega.codim())?;
    Ok(ZetaEvaluator::new(omega, &mu, opts)?.poles().to_vec())
}

/// Full expansion of the regularized integral of `omega` against the
/// measure `mu`.
pub fn expansion(
    omega: &SingularForm,
    mu: &MorseBott,
    opts: &MellinOptions,
) -> Result<AsymptoticExpansion> {
    let evaluator = ZetaEvaluator::new(omega, mu, opts)?;
    let mut neg = BTreeMap::new();
    let max_k = 2 * i64::from(omega.power()) - omega.codim() as i64;
    for k in 1..=max_k.max(0) {
        let k = k as u32;
        // Parity: sphere moments kill every coefficient with k != m mod 2.
        if (k as usize) % 2 != evaluator.codim() % 2 {
            continue;
        }
        let value = evaluator.divergent_coefficient(k)?;
        if value != C::default() {
            neg.insert(k, value);
        }
    }
    let scale = evaluator.profile().scale().max(1.0);
    let mut error = 1e-13 * scale;
    if !mu.is_standard() {
        // Truncation of e^{k phi} at total degree T: next Taylor term.
        let t = opts.conformal_truncation;
        let mut worst = 0.0f64;
        for &k in neg.keys() {
            let x = f64::from(k) * evaluator.phi_bound;
            let mut term = scale;
            for l in 1..=(t + 1) {
                term *= x / f64::from(l);
            }
            worst = worst.max(term);
        }
        error += worst;
    }
    Ok(AsymptoticExpansion {
        neg_coefficients: neg,
        log_coefficient: evaluator.log_coefficient(),
        finite_part: evaluator.finite_part(),
        engine: Engine::Mellin,
        error_estimate: error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{
        alpha_form, beta_form, Form, MultiIndex, Polynomial, WindowBag, WindowSlot,
    };
    use crate::testkit::adaptive_quad;
    use crate::{c, cr};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn opts() -> MellinOptions {
        MellinOptions::default()
    }

    /// The reference integrand `w(mu) dx_1 ^ ... ^ dx_n / mu_0^N` with base
    /// windows on the transverse coordinates.
    fn standard_form(n: usize, m: usize, power: u32) -> SingularForm {
        let mut bag = WindowBag::radial(0, Window::standard());
        for c in m..n {
            bag.push(WindowSlot::Base(c), Window::standard());
        }
        let frame: Vec<usize> = (0..n).collect();
        let num = Form::term(
            Polynomial::constant(n, cr(1.0)),
            bag,
            &frame,
        )
        .unwrap();
        SingularForm::new(num, m, power).unwrap()
    }

    fn mu0(n: usize, m: usize) -> MorseBott {
        MorseBott::standard(n, m).unwrap()
    }

    #[test]
    fn profile_of_the_plane_model() {
        // w dx1 dx2 / mu in R^2: shift 0, c_0 = 2 pi.
        let omega = standard_form(2, 2, 1);
        let p = radial_profile(&omega, &QuadOptions::default()).unwrap();
        assert_eq!(p.shift, 0);
        assert_eq!(p.groups.len(), 1);
        let c0 = p.groups[0].coefficients[&0];
        assert!((c0.re - 2.0 * PI).abs() < 1e-12);
        assert_eq!(c0.im, 0.0);
    }

    #[test]
    fn profile_of_a_smooth_form_shifts_up() {
        let omega = standard_form(2, 2, 0);
        let p = radial_profile(&omega, &QuadOptions::default()).unwrap();
        assert_eq!(p.shift, 2);
        assert!((p.pure_coefficients()[&0].re - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn odd_numerators_vanish_by_parity() {
        let n = 2;
        let num = Form::term(
            Polynomial::coordinate(n, 0),
            WindowBag::radial(0, Window::standard()),
            &[0, 1],
        )
        .unwrap();
        let omega = SingularForm::new(num, 2, 1).unwrap();
        let p = radial_profile(&omega, &QuadOptions::default()).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn profile_validates_windows() {
        let n = 2;
        let bare = SingularForm::new(
            Form::term(Polynomial::constant(n, cr(1.0)), WindowBag::empty(), &[0, 1]).unwrap(),
            2,
            1,
        )
        .unwrap();
        assert!(matches!(
            radial_profile(&bare, &QuadOptions::default()),
            Err(MellinError::MissingRadialWindow)
        ));

        // Transverse coordinate without a window.
        let mut bag = WindowBag::radial(0, Window::standard());
        let three = SingularForm::new(
            Form::term(Polynomial::constant(3, cr(1.0)), bag.clone(), &[0, 1, 2]).unwrap(),
            2,
            1,
        )
        .unwrap();
        assert!(matches!(
            radial_profile(&three, &QuadOptions::default()),
            Err(MellinError::MissingBaseWindow { coord: 2 })
        ));

        // Mixed radii.
        bag.push(WindowSlot::Radial(0), Window::new(0.3, 0.8));
        let mixed = SingularForm::new(
            Form::term(Polynomial::constant(2, cr(1.0)), bag, &[0, 1]).unwrap(),
            2,
            1,
        )
        .unwrap();
        assert!(matches!(
            radial_profile(&mixed, &QuadOptions::default()),
            Err(MellinError::MixedRadialWindows)
        ));
    }

    #[test]
    fn profile_rejects_lower_degree_forms() {
        let n = 2;
        let low = SingularForm::new(
            Form::term(
                Polynomial::constant(n, cr(1.0)),
                WindowBag::radial(0, Window::standard()),
                &[0],
            )
            .unwrap(),
            2,
            1,
        )
        .unwrap();
        assert!(matches!(
            radial_profile(&low, &QuadOptions::default()),
            Err(MellinError::NotTopDegree { n: 2 })
        ));
    }

    #[test]
    fn zeta_matches_the_window_transform() {
        let omega = standard_form(2, 2, 1);
        let z = zeta_eval(&omega, &mu0(2, 2), cr(2.0), &opts()).unwrap();
        let w = WindowMellin::new(Window::standard(), &QuadOptions::default()).unwrap();
        let want = w.eval(cr(2.0)).unwrap() * (2.0 * PI);
        assert!((z.value - want).norm() < 1e-12);
        assert_eq!(z.truncation, 0.0);
    }

    #[test]
    fn zeta_of_the_zero_form_vanishes() {
        let zero = SingularForm::new(Form::zero(2), 2, 1).unwrap();
        let z = zeta_eval(&zero, &mu0(2, 2), c(1.3, 0.4), &opts()).unwrap();
        assert_eq!(z.value, C::default());
    }

    #[test]
    fn homogeneity_under_constant_rescaling() {
        // zeta(s; t mu_0, omega) = t^{s/2} zeta(s; mu_0, omega).
        let omega = standard_form(2, 2, 1);
        let t = 4.0;
        let scaled = MorseBott::scaled(2, 2, t).unwrap();
        let s = cr(2.0);
        let lhs = zeta_eval(&omega, &scaled, s, &opts()).unwrap().value;
        let rhs = zeta_eval(&omega, &mu0(2, 2), s, &opts()).unwrap().value;
        let ratio = lhs / rhs;
        assert!((ratio.re - 4.0).abs() < 1e-10, "ratio {ratio}");
        assert!(ratio.im.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10 {
            let s = c(rng.random_range(-1.5..2.5), rng.random_range(-1.0..1.0));
            if s.norm() < 0.2 {
                continue;
            }
            let lhs = zeta_eval(&omega, &scaled, s, &opts()).unwrap().value;
            let rhs = zeta_eval(&omega, &mu0(2, 2), s, &opts()).unwrap().value;
            let expected = (s / 2.0 * t.ln()).exp() * rhs;
            assert!(
                (lhs - expected).norm() <= 1e-10 * expected.norm().max(1.0),
                "s = {s}: {lhs} vs {expected}"
            );
        }
    }

    #[test]
    fn pole_table_of_the_plane_model() {
        let omega = standard_form(2, 2, 1);
        let poles = pole_table(&omega, &opts()).unwrap();
        assert_eq!(poles.len(), 1);
        assert_eq!(poles[0].0, 0);
        assert!((poles[0].1.re - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn pole_table_with_higher_power_and_curvature_terms() {
        // (1 + x1^2) w dx1 dx2 / mu^2: poles at s = 2 (residue 2 pi) and
        // s = 0 (residue pi from the quadratic term).
        let n = 2;
        let poly = Polynomial::constant(n, cr(1.0)).add(&Polynomial::monomial(
            MultiIndex(vec![2, 0]),
            cr(1.0),
        ));
        let num = Form::term(poly, WindowBag::radial(0, Window::standard()), &[0, 1]).unwrap();
        let omega = SingularForm::new(num, 2, 2).unwrap();
        let poles = pole_table(&omega, &opts()).unwrap();
        assert_eq!(
            poles.iter().map(|p| p.0).collect::<Vec<_>>(),
            vec![2, 0]
        );
        assert!((poles[0].1.re - 2.0 * PI).abs() < 1e-12);
        assert!((poles[1].1.re - PI).abs() < 1e-12);
    }

    #[test]
    fn smooth_forms_have_no_poles_at_nonnegative_locations() {
        let omega = standard_form(2, 2, 0);
        let poles = pole_table(&omega, &opts()).unwrap();
        assert!(poles.iter().all(|&(k, _)| k <= -2), "{poles:?}");
    }

    #[test]
    fn evaluation_near_a_pole_is_refused_with_the_residue() {
        let omega = standard_form(2, 2, 1);
        let err = zeta_eval(&omega, &mu0(2, 2), cr(1e-10), &opts()).unwrap_err();
        match err {
            MellinError::NearPole {
                location, residue, ..
            } => {
                assert_eq!(location, 0);
                assert!((residue.re - 2.0 * PI).abs() < 1e-12);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn expansion_of_the_plane_model() {
        let omega = standard_form(2, 2, 1);
        let e = expansion(&omega, &mu0(2, 2), &opts()).unwrap();
        assert!(e.neg_coefficients.is_empty());
        assert!((e.log_coefficient.re - 2.0 * PI).abs() < 1e-12);
        let w = Window::standard();
        let want = 2.0 * PI
            * (0.5f64.ln() + adaptive_quad(|t| w.eval(t * t) / t, 0.5, 0.9, 1e-13));
        assert!(
            (e.finite_part.re - want).abs() < 1e-10,
            "{} vs {want}",
            e.finite_part.re
        );
        assert_eq!(e.engine, Engine::Mellin);
    }

    #[test]
    fn odd_codimension_has_no_log_term() {
        // m = 1 inside R^2: mu = x1^2; the candidate log coefficient is an
        // odd sphere moment, hence exactly zero.
        let n = 2;
        let mut bag = WindowBag::radial(0, Window::standard());
        bag.push(WindowSlot::Base(1), Window::standard());
        let num = Form::term(Polynomial::constant(n, cr(1.0)), bag, &[0, 1]).unwrap();
        let omega = SingularForm::new(num, 1, 1).unwrap();
        let e = expansion(&omega, &mu0(n, 1), &opts()).unwrap();
        assert_eq!(e.log_coefficient, C::default());
        // The k = 1 divergent coefficient is present instead.
        assert!(e.neg_coefficients.contains_key(&1));
    }

    #[test]
    fn constant_conformal_factor_shifts_the_finite_part() {
        // mu = e^{2c} mu_0: finite part moves by c * I_0, log term unchanged.
        let omega = standard_form(2, 2, 1);
        let base = expansion(&omega, &mu0(2, 2), &opts()).unwrap();
        let cval = 0.37;
        let mu = MorseBott::conformal(2, Polynomial::constant(2, cr(cval))).unwrap();
        let shifted = expansion(&omega, &mu, &opts()).unwrap();
        assert!((shifted.log_coefficient - base.log_coefficient).norm() < 1e-12);
        let want = base.finite_part + base.log_coefficient * cval;
        assert!(
            (shifted.finite_part - want).norm() < 1e-10,
            "{} vs {want}",
            shifted.finite_part
        );
    }

    /// Residue at `center` by a 32-point trapezoid contour, which is
    /// independent of the algebraic residue bookkeeping.
    fn contour_residue(ev: &ZetaEvaluator, center: f64, radius: f64) -> C {
        let nodes = 64;
        let mut acc = C::default();
        for q in 0..nodes {
            let theta = 2.0 * PI * q as f64 / nodes as f64;
            let offset = c(radius * theta.cos(), radius * theta.sin());
            let s = cr(center) + offset;
            acc += ev.eval(s).unwrap().value * offset;
        }
        acc / nodes as f64
    }

    fn random_phi(rng: &mut ChaCha8Rng, n: usize) -> Polynomial {
        let mut p = Polynomial::zero(n);
        for _ in 0..rng.random_range(1..=3) {
            let e = MultiIndex((0..n).map(|_| rng.random_range(0..=2u32)).collect());
            p.add_term(e, cr(f64::from(rng.random_range(-4..=4i32)) / 16.0));
        }
        p
    }

    fn random_numerator(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SingularForm {
        let mut bag = WindowBag::radial(0, Window::standard());
        for c in m..n {
            bag.push(WindowSlot::Base(c), Window::standard());
        }
        let mut poly = Polynomial::zero(n);
        for _ in 0..rng.random_range(1..=4) {
            let e = MultiIndex((0..n).map(|_| rng.random_range(0..=2u32)).collect());
            poly.add_term(e, cr(f64::from(rng.random_range(-8..=8i32)) / 4.0));
        }
        if poly.is_zero() {
            poly = Polynomial::constant(n, cr(1.0));
        }
        let frame: Vec<usize> = (0..n).collect();
        let num = Form::term(poly, bag, &frame).unwrap();
        SingularForm::new(num, m, rng.random_range(1..=2)).unwrap()
    }

    #[test]
    fn residue_at_zero_is_conformally_invariant() {
        // Contour-extracted residue of the conformal series equals the
        // standard-measure residue.
        let mut rng = ChaCha8Rng::seed_from_u64(6021);
        for trial in 0..50 {
            let n = rng.random_range(2..=3);
            let m = rng.random_range(1..=n);
            let omega = random_numerator(&mut rng, n, m);
            let phi = random_phi(&mut rng, n);
            let mu = MorseBott::conformal(m, phi).unwrap();
            let conformal = ZetaEvaluator::new(&omega, &mu, &opts()).unwrap();
            let standard = ZetaEvaluator::new(&omega, &mu0(n, m), &opts()).unwrap();
            let got = contour_residue(&conformal, 0.0, 0.35);
            let want = standard.log_coefficient();
            assert!(
                (got - want).norm() <= 1e-10 * want.norm().max(1.0),
                "trial {trial}: contour {got} vs standard {want}"
            );
        }
    }

    #[test]
    fn conformal_finite_part_law() {
        // The finite part moves by the residue at 0 of zeta(s; mu_0, phi omega),
        // measured here by evaluating the series near 0 and removing the pole.
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        for trial in 0..25 {
            let n = rng.random_range(2..=3);
            let m = rng.random_range(1..=n);
            let omega = random_numerator(&mut rng, n, m);
            let phi = random_phi(&mut rng, n);
            let mu = MorseBott::conformal(m, phi.clone()).unwrap();

            let conformal = ZetaEvaluator::new(&omega, &mu, &opts()).unwrap();
            let i0 = conformal.log_coefficient();
            // Finite part through the defining limit, evaluated on the series.
            // The symmetric average leaves an O(h^2) error, so extrapolate
            // once in h to push it far below the comparison tolerance.
            let fp_limit = |ev: &ZetaEvaluator, h: f64| {
                let plus = ev.eval(cr(h)).unwrap().value - i0 / h;
                let minus = ev.eval(cr(-h)).unwrap().value + i0 / h;
                (plus + minus) / 2.0
            };
            let h = 1e-3;
            let coarse = fp_limit(&conformal, h);
            let fine = fp_limit(&conformal, h / 2.0);
            let got = (fine * 4.0 - coarse) / 3.0;
            assert!(
                (got - conformal.finite_part()).norm()
                    <= 1e-6 * conformal.finite_part().norm().max(1.0),
                "trial {trial}: limit {got} vs closed form {}",
                conformal.finite_part()
            );

            // And the law itself: FP(conformal) - FP(standard) = res_0 of phi omega.
            let standard = ZetaEvaluator::new(&omega, &mu0(n, m), &opts()).unwrap();
            let phi_omega = SingularForm::new(
                omega.numerator().mul_scalar(&phi),
                m,
                omega.power(),
            )
            .unwrap();
            let correction = ZetaEvaluator::new(&phi_omega, &mu0(n, m), &opts())
                .unwrap()
                .log_coefficient();
            let lhs = conformal.finite_part() - standard.finite_part();
            assert!(
                (lhs - correction).norm() <= 1e-8 * correction.norm().max(1.0),
                "trial {trial}: {lhs} vs {correction}"
            );
        }
    }

    #[test]
    fn exact_forms_have_no_log_coefficient() {
        // I_0(d psi) = 0 for compactly supported psi of degree n - 1.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..40 {
            let n = rng.random_range(2..=3);
            let m = rng.random_range(1..=n);
            let psi = random_form_of_degree(&mut rng, n, m, n - 1);
            let dpsi = psi.d();
            if dpsi.numerator().is_zero() {
                continue;
            }
            let e = expansion(&dpsi, &mu0(n, m), &opts()).unwrap();
            let scale = radial_profile(&psi, &QuadOptions::default())
                .map(|p| p.scale())
                .unwrap_or(1.0)
                .max(1.0);
            assert!(
                e.log_coefficient.norm() <= 1e-9 * scale,
                "trial {trial}: I_0 = {}",
                e.log_coefficient
            );
        }
    }

    /// Random compactly supported singular form of the requested degree with
    /// full windows on every term.
    fn random_form_of_degree(
        rng: &mut ChaCha8Rng,
        n: usize,
        m: usize,
        degree: usize,
    ) -> SingularForm {
        let mut form = Form::zero(n);
        for _ in 0..rng.random_range(1..=2) {
            let mut frame: Vec<usize> = (0..n).collect();
            for i in (1..frame.len()).rev() {
                frame.swap(i, rng.random_range(0..=i));
            }
            frame.truncate(degree);
            frame.sort_unstable();
            let mut bag = WindowBag::radial(0, Window::standard());
            for c in m..n {
                bag.push(WindowSlot::Base(c), Window::standard());
            }
            let mut poly = Polynomial::zero(n);
            for _ in 0..rng.random_range(1..=3) {
                let e = MultiIndex((0..n).map(|_| rng.random_range(0..=2u32)).collect());
                poly.add_term(e, cr(f64::from(rng.random_range(-8..=8i32)) / 4.0));
            }
            if poly.is_zero() {
                poly = Polynomial::constant(n, cr(1.0));
            }
            form = form.add(&Form::term(poly, bag, &frame).unwrap());
        }
        SingularForm::new(form, m, rng.random_range(0..=2)).unwrap()
    }

    #[test]
    fn finite_part_of_exact_forms_pairs_with_the_radial_one_form() {
        // I_finite(d psi) = I_0(psi ^ dmu/2mu) in even dimension, with the
        // parity sign (-1)^n in general.
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for trial in 0..40 {
            let n = rng.random_range(2..=4);
            let m = rng.random_range(1..=n);
            let psi = random_form_of_degree(&mut rng, n, m, n - 1);
            let dpsi = psi.d();
            let theta = alpha_form(n, m).unwrap().scale(cr(0.5));
            let paired = psi.wedge(&theta).unwrap();
            if dpsi.numerator().is_zero() {
                continue;
            }
            let lhs = expansion(&dpsi, &mu0(n, m), &opts()).unwrap().finite_part;
            let rhs = expansion(&paired, &mu0(n, m), &opts()).unwrap().log_coefficient;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let want = rhs * sign;
            assert!(
                (lhs - want).norm() <= 1e-8 * want.norm().max(1.0),
                "trial {trial} (n = {n}, m = {m}): {lhs} vs {want}"
            );
        }
    }

    #[test]
    fn log_coefficient_defines_a_chain_pairing() {
        // I_0(d omega ^ phi) = (-1)^{p+1} I_0(omega ^ d phi) for omega of
        // degree p, following from I_0 vanishing on exact forms.
        let mut rng = ChaCha8Rng::seed_from_u64(2718);
        for trial in 0..30 {
            let n = rng.random_range(2..=3);
            let m = rng.random_range(1..=n);
            let p = rng.random_range(1..n);
            let omega = random_form_of_degree(&mut rng, n, m, p);
            let phi = random_form_of_degree(&mut rng, n, m, n - p - 1);
            // Keep phi smooth: power 0.
            let phi = SingularForm::new(phi.numerator().clone(), m, 0).unwrap();
            let lhs_form = omega.d().wedge(&phi).unwrap();
            let rhs_form = omega.wedge(&phi.d()).unwrap();
            let lhs = expansion(&lhs_form, &mu0(n, m), &opts())
                .unwrap()
                .log_coefficient;
            let rhs = expansion(&rhs_form, &mu0(n, m), &opts())
                .unwrap()
                .log_coefficient;
            let sign = if (p + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let scale = lhs.norm().max(rhs.norm()).max(1.0);
            assert!(
                (lhs - rhs * sign).norm() <= 1e-8 * scale,
                "trial {trial} (n = {n}, m = {m}, p = {p}): {lhs} vs {}",
                rhs * sign
            );
        }
    }

    #[test]
    fn mellin_relation_against_the_level_set_closed_form() {
        // zeta(s) = integral_0^inf t^{s-1} I(t) dt with I(t) evaluated from
        // the profile, integrated by the adaptive oracle.
        let omega = {
            let n = 2;
            let poly = Polynomial::constant(n, cr(1.0)).add(&Polynomial::monomial(
                MultiIndex(vec![2, 0]),
                cr(0.5),
            ));
            let num =
                Form::term(poly, WindowBag::radial(0, Window::standard()), &[0, 1]).unwrap();
            SingularForm::new(num, 2, 1).unwrap()
        };
        let profile = radial_profile(&omega, &QuadOptions::default()).unwrap();
        for &s in &[3.0, 4.5] {
            let direct = adaptive_quad(
                |t| {
                    if t <= 0.0 {
                        0.0
                    } else {
                        t.powf(s - 1.0) * profile.level_set(t).re
                    }
                },
                0.0,
                0.9,
                1e-12,
            );
            let continued = zeta_eval(&omega, &mu0(2, 2), cr(s), &opts())
                .unwrap()
                .value
                .re;
            assert!(
                (direct - continued).abs() < 1e-10 * continued.abs().max(1.0),
                "s = {s}: {direct} vs {continued}"
            );
        }
    }

    #[test]
    fn level_set_parity_follows_the_codimension() {
        let omega2 = standard_form(3, 2, 1);
        let p2 = radial_profile(&omega2, &QuadOptions::default()).unwrap();
        assert!((p2.level_set(-0.3) - p2.level_set(0.3)).norm() < 1e-14);

        let omega3 = standard_form(3, 3, 1);
        let p3 = radial_profile(&omega3, &QuadOptions::default()).unwrap();
        assert!((p3.level_set(-0.3) + p3.level_set(0.3)).norm() < 1e-14);
    }

    #[test]
    fn beta_times_alpha_reproduces_the_plane_model_constants() {
        // w * alpha ^ beta pairs the radial logarithmic form dmu/mu = 2 dr/r
        // with the unit angular form, so the log coefficient is twice the
        // circle length.
        let n = 2;
        let alpha = alpha_form(n, 2).unwrap();
        let beta = beta_form(n, 2).unwrap();
        let windowed = Form::term(
            Polynomial::constant(n, cr(1.0)),
            WindowBag::radial(0, Window::standard()),
            &[],
        )
        .unwrap();
        let omega = alpha.wedge(&beta).unwrap().wedge_smooth(&windowed).unwrap();
        let e = expansion(&omega, &mu0(n, 2), &opts()).unwrap();
        assert!((e.log_coefficient.re - 4.0 * PI).abs() < 1e-12);
    }
}
