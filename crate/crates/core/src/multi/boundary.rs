//! Regularization against a scale vanishing to first order on a hyperplane.
//!
//! The integrand lives on the half-space `{x_1 > 0}` and diverges like
//! `num / x_1^M` toward the wall; the scale is `lambda = x_1 e^{phi}`.  The
//! continued integral `zeta(s) = integral lambda^s omega` is meromorphic
//! with at most simple poles at the integers `M - 1 - e_1`, one per
//! numerator power of `x_1`: every integer below `M` can appear, in contrast
//! to the parity-thinned progression of a quadratic singularity.  Divergent
//! coefficients are residues over their location, the logarithmic
//! coefficient is the residue at 0, and the finite part is the constant
//! term there.
//!
//! A first-order divergence carries a residue form: when
//! `omega = dx_1/x_1 ^ sigma + regular`, the restriction
//! [`boundary_residue`]` = sigma|_{x_1=0}` is what multiplies the logarithm,
//! it pairs against smooth forms through the residue at 0, and it
//! anticommutes with the exterior differential.

use std::collections::BTreeMap;

use crate::cutoff::{fit_with_powers, solve_cutoff_radius, CutoffError, EpsilonGrid, FitReport};
use crate::exterior::{
    frame_indices, CompiledPoly, Form, MultiIndex, Polynomial, Window, WindowBag, WindowSlot,
};
use crate::mellin::{AsymptoticExpansion, MellinOptions};
use crate::quadrature::{BaseCache, GaussRule, QuadOptions, WindowMellin};
use crate::{cr, C, Engine};

use super::{full_frame, MultiError, Result};

/// Evaluation refuses `s` closer than this to a pole.
const POLE_GUARD: f64 = 1e-9;

/// An integrand `num / x_1^M` on the half-space, with scale `x_1 e^{phi}`.
///
/// Numerator terms window the scale coordinate through plain
/// `WindowSlot::Base(0)` factors; radial windows belong to quadratic
/// singularities and are rejected here.  Construction keeps any degree, so
/// residue algebra works on partial forms; integration entry points insist
/// on top degree and full windowing.
#[derive(Clone, Debug)]
pub struct BoundaryProblem {
    numerator: Form,
    power: u32,
    phi: Polynomial,
}

impl BoundaryProblem {
    pub fn new(numerator: Form, power: u32) -> Result<Self> {
        for (_, bag, _) in numerator.terms() {
            if bag
                .iter()
                .any(|(slot, _)| matches!(slot, WindowSlot::Radial(_)))
            {
                return Err(MultiError::RadialWindowOnBoundary);
            }
        }
        let n = numerator.vars();
        Ok(BoundaryProblem {
            numerator,
            power,
            phi: Polynomial::zero(n),
        })
    }

    /// Replaces the scale by `x_1 e^{phi}`.
    pub fn with_conformal(mut self, phi: Polynomial) -> Result<Self> {
        let expected = self.numerator.vars();
        if phi.vars() != expected {
            return Err(MultiError::PhiVarMismatch {
                expected,
                got: phi.vars(),
            });
        }
        if !phi.is_real() {
            return Err(MultiError::ComplexConformal);
        }
        self.phi = phi;
        Ok(self)
    }

    pub fn numerator(&self) -> &Form {
        &self.numerator
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn conformal_factor(&self) -> &Polynomial {
        &self.phi
    }

    pub fn vars(&self) -> usize {
        self.numerator.vars()
    }

    pub fn is_standard(&self) -> bool {
        self.phi.is_zero()
    }

    /// The exterior differential of the underlying form:
    /// `d(num / x_1^M) = (x_1 d num - M dx_1 ^ num) / x_1^{M+1}`.
    pub fn d(&self) -> BoundaryProblem {
        let n = self.numerator.vars();
        let x1 = Polynomial::coordinate(n, 0);
        let lead = self.numerator.d(&[]).mul_scalar(&x1);
        let correction = Form::dx(n, 0)
            .wedge(&self.numerator)
            .expect("dimensions agree")
            .scale(cr(f64::from(self.power)));
        BoundaryProblem {
            numerator: lead.sub(&correction),
            power: self.power + 1,
            phi: self.phi.clone(),
        }
    }
}

/// Checks the shape every integration entry point needs: top degree, a
/// consistent scale window per term, and a window on every base coordinate.
fn integration_ready(problem: &BoundaryProblem) -> Result<()> {
    let n = problem.vars();
    let full = full_frame(n);
    for (frame, bag, _) in problem.numerator.terms() {
        if frame != full {
            return Err(MultiError::NotTopDegree { n });
        }
        let mut scale: Option<Window> = None;
        for (slot, w) in bag.iter() {
            if *slot == WindowSlot::Base(0) {
                match scale {
                    None => scale = Some(w.base()),
                    Some(r) if r == w.base() => {}
                    Some(_) => return Err(MultiError::MixedScaleWindows),
                }
            }
        }
        if scale.is_none() {
            return Err(MultiError::MissingBaseWindow { coord: 0 });
        }
        let factors = bag.base_factors();
        for coord in 1..n {
            if factors.get(&coord).map_or(true, Vec::is_empty) {
                return Err(MultiError::MissingBaseWindow { coord });
            }
        }
    }
    Ok(())
}

/// Largest window radius per coordinate, for support boxes and sup bounds.
fn support_radii(problem: &BoundaryProblem) -> Vec<f64> {
    let n = problem.vars();
    let mut radii = vec![0.0f64; n];
    for (_, bag, _) in problem.numerator.terms() {
        for (slot, w) in bag.iter() {
            if let WindowSlot::Base(j) = slot {
                radii[*j] = radii[*j].max(w.outer());
            }
        }
    }
    radii
}

fn phi_sup_bound(phi: &Polynomial, radii: &[f64]) -> f64 {
    phi.terms()
        .map(|(e, v)| {
            let mut bound = v.norm();
            for (j, &g) in e.0.iter().enumerate() {
                bound *= radii[j].powi(g as i32);
            }
            bound
        })
        .sum()
}

/// One summand of the continued integral: the series power of `s` times a
/// table of shifted scale transforms.
struct BoundaryTable {
    weight: u32,
    /// Map from `(shift, transform id)` to the accumulated constant in
    /// front of `W_id(s + shift)`.
    terms: BTreeMap<(i64, u32), C>,
}

/// Immutable continuation engine for one boundary problem.
///
/// Construction expands the conformal series `lambda^s = x_1^s e^{s phi}`
/// and reduces every monomial to base window integrals times one shifted
/// scale transform; evaluation, residues and the finite part afterwards are
/// pure arithmetic on the tables.
pub struct BoundaryZeta {
    mellins: Vec<WindowMellin>,
    tables: Vec<BoundaryTable>,
    poles: Vec<(i64, C)>,
    power: u32,
    phi_bound: f64,
    depth: usize,
    scale: f64,
}

/// Builds the continuation engine for `zeta(s) = integral (x_1 e^{phi})^s
/// num / x_1^M`.
pub fn boundary_zeta(problem: &BoundaryProblem, opts: &MellinOptions) -> Result<BoundaryZeta> {
    integration_ready(problem)?;
    let n = problem.vars();
    let depth = if problem.phi.is_zero() {
        0
    } else {
        opts.series_depth
    };
    let mut cache = BaseCache::new(opts.quad);
    let mut ids: BTreeMap<(Window, Vec<u32>), u32> = BTreeMap::new();
    let mut mellins: Vec<WindowMellin> = Vec::new();
    let mut tables = Vec::new();
    let mut weighted = problem.numerator.clone();
    let mut factor = 1.0;
    for l in 0..=depth {
        if l > 0 {
            weighted = weighted.mul_scalar(&problem.phi);
            factor /= l as f64;
        }
        let mut terms: BTreeMap<(i64, u32), C> = BTreeMap::new();
        for (_, bag, poly) in weighted.terms() {
            let mut window = Window::standard();
            let mut orders: Vec<u32> = Vec::new();
            for (slot, w) in bag.iter() {
                if *slot == WindowSlot::Base(0) {
                    window = w.base();
                    orders.push(w.order());
                }
            }
            orders.sort_unstable();
            let key = (window, orders.clone());
            let id = match ids.get(&key) {
                Some(&id) => id,
                None => {
                    let id = mellins.len() as u32;
                    mellins.push(WindowMellin::from_signature(window, &orders, &opts.quad)?);
                    ids.insert(key, id);
                    id
                }
            };
            let base_factors = bag.base_factors();
            'monomials: for (e, &v) in poly.terms() {
                let mut c = v * factor;
                for coord in 1..n {
                    c *= cache.one_dim(e.0[coord], &base_factors[&coord])?;
                    if c == C::default() {
                        continue 'monomials;
                    }
                }
                let shift = i64::from(e.0[0]) + 1 - i64::from(problem.power);
                let entry = terms.entry((shift, id)).or_default();
                *entry += c;
                if *entry == C::default() {
                    terms.remove(&(shift, id));
                }
            }
        }
        if !terms.is_empty() {
            tables.push(BoundaryTable {
                weight: l as u32,
                terms,
            });
        }
    }

    let scale = tables
        .iter()
        .filter(|t| t.weight == 0)
        .flat_map(|t| t.terms.values())
        .map(|c| c.norm())
        .sum::<f64>();
    let phi_bound = phi_sup_bound(&problem.phi, &support_radii(problem));
    let mut zeta = BoundaryZeta {
        mellins,
        tables,
        poles: Vec::new(),
        power: problem.power,
        phi_bound,
        depth,
        scale,
    };
    zeta.poles = zeta.collect_poles();
    Ok(zeta)
}

impl BoundaryZeta {
    /// Value of the continued integral at `s`.
    pub fn eval(&self, s: C) -> Result<C> {
        let mut acc = C::default();
        for table in &self.tables {
            let mut weight = cr(1.0);
            for _ in 0..table.weight {
                weight *= s;
            }
            for (&(shift, id), &c) in &table.terms {
                let sigma = s + cr(shift as f64);
                let mellin = &self.mellins[id as usize];
                if mellin.has_pole() && sigma.norm() < POLE_GUARD {
                    return Err(MultiError::NearPole {
                        s,
                        location: -(shift as f64),
                    });
                }
                acc += weight * c * mellin.eval(sigma)?;
            }
        }
        Ok(acc)
    }

    /// Pole locations of the continued function with their residues, sorted
    /// by descending location.
    pub fn poles(&self) -> &[(i64, C)] {
        &self.poles
    }

    fn collect_poles(&self) -> Vec<(i64, C)> {
        let mut locations: Vec<i64> = Vec::new();
        for table in &self.tables {
            for (&(shift, id), _) in &table.terms {
                if !self.mellins[id as usize].has_pole() {
                    continue;
                }
                let location = -shift;
                if table.weight > 0 && location == 0 {
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
            .map(|k| (k, self.residue_at(k)))
            .filter(|(_, r)| r.norm() > 0.0)
            .collect()
    }

    /// Residue at the integer `location` via the depth-truncated series.
    fn residue_at(&self, location: i64) -> C {
        let mut acc = C::default();
        for table in &self.tables {
            let weight = (location as f64).powi(table.weight as i32);
            for (&(shift, id), &c) in &table.terms {
                if shift == -location && self.mellins[id as usize].has_pole() {
                    // The factored transform has residue 1 at its pole.
                    acc += c * weight;
                }
            }
        }
        acc
    }

    /// Coefficient of the logarithm: the residue at 0.
    pub fn log_coefficient(&self) -> C {
        self.residue_at(0)
    }

    /// Constant term of the Laurent expansion at 0.
    pub fn finite_part(&self) -> C {
        let mut acc = C::default();
        for table in &self.tables {
            match table.weight {
                0 => {
                    for (&(shift, id), &c) in &table.terms {
                        let mellin = &self.mellins[id as usize];
                        if shift == 0 && mellin.has_pole() {
                            acc += c * mellin.finite_part_at_zero();
                        } else {
                            acc += c
                                * mellin
                                    .eval(cr(shift as f64))
                                    .expect("no pole away from the origin");
                        }
                    }
                }
                1 => {
                    for (&(shift, id), &c) in &table.terms {
                        if shift == 0 && self.mellins[id as usize].has_pole() {
                            // s times the simple pole leaves the residue 1.
                            acc += c;
                        }
                    }
                }
                _ => {}
            }
        }
        acc
    }

    /// The divergent coefficient of order `k >= 1`: the residue at `k`
    /// divided by `k`.
    pub fn divergent_coefficient(&self, k: u32) -> C {
        debug_assert!(k >= 1);
        self.residue_at(i64::from(k)) / cr(f64::from(k))
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Heuristic bound on the conformal series truncation at location `k`.
    fn truncation_bound(&self, k: f64) -> f64 {
        if self.depth == 0 {
            return 0.0;
        }
        let x = k.abs() * self.phi_bound;
        let mut term = 1.0;
        for l in 1..=self.depth + 1 {
            term *= x / l as f64;
        }
        term * x.exp() * self.scale
    }
}

/// Full expansion of the regularized integral of a boundary problem.
pub fn boundary_expansion(
    problem: &BoundaryProblem,
    opts: &MellinOptions,
) -> Result<AsymptoticExpansion> {
    let zeta = boundary_zeta(problem, opts)?;
    let mut neg = BTreeMap::new();
    let mut truncation = zeta.truncation_bound(0.0);
    for &(location, residue) in zeta.poles() {
        if location >= 1 {
            neg.insert(location as u32, residue / cr(location as f64));
            truncation = truncation.max(zeta.truncation_bound(location as f64));
        }
    }
    Ok(AsymptoticExpansion {
        neg_coefficients: neg,
        log_coefficient: zeta.log_coefficient(),
        finite_part: zeta.finite_part(),
        engine: Engine::Mellin,
        error_estimate: truncation.max(1e-13 * zeta.scale.max(1.0)),
    })
}

/// The residue form of a logarithmic divergence: with
/// `omega = dx_1/x_1 ^ sigma + regular`, returns `sigma|_{x_1=0}`.
///
/// Requires `num / x_1^{M-1}` to split as `dx_1 ^ A + B` with `B` vanishing
/// on the wall.  Terms carrying a scale window factor of positive order are
/// flat at the wall: they absorb any leftover power of `x_1` and die on
/// restriction, so they never obstruct the split.
pub fn boundary_residue(problem: &BoundaryProblem) -> Result<Form> {
    let n = problem.vars();
    let power = problem.power;
    if power == 0 {
        return Ok(Form::zero(n));
    }
    let mut sigma = Form::zero(n);
    for (frame, bag, poly) in problem.numerator.terms() {
        let flat = bag
            .iter()
            .any(|(slot, w)| *slot == WindowSlot::Base(0) && w.order() > 0);
        if flat {
            continue;
        }
        if frame & 1 != 0 {
            let quotient =
                divide_by_first(poly, power - 1).ok_or(MultiError::NotLogarithmic)?;
            let stripped = frame_indices(frame & !1);
            sigma = sigma.add(
                &Form::term(quotient, bag.clone(), &stripped)
                    .expect("stripped frames stay valid"),
            );
        } else if poly.terms().any(|(e, _)| e.0[0] < power) {
            return Err(MultiError::NotLogarithmic);
        }
    }
    Ok(sigma.restrict_zero(&[0], &[]))
}

fn divide_by_first(poly: &Polynomial, k: u32) -> Option<Polynomial> {
    let mut out = Polynomial::zero(poly.vars());
    for (e, &v) in poly.terms() {
        if e.0[0] < k {
            return None;
        }
        let mut exps = e.0.clone();
        exps[0] -= k;
        out.add_term(MultiIndex(exps), v);
    }
    Some(out)
}

/// Sampled-cutoff geometry shared by the integral and the fit.
struct CutoffGeometry {
    compiled: Vec<(WindowBag, CompiledPoly)>,
    phi: CompiledPoly,
    standard: bool,
    power: u32,
    /// Product-rule nodes over the base coordinates: `(weight, x_2..x_n)`.
    base_nodes: Vec<(f64, Vec<f64>)>,
    /// Sorted break points of every scale window.
    scale_cuts: Vec<f64>,
    outer_max: f64,
    inner_min: f64,
    phi_bound: f64,
    quad: QuadOptions,
}

impl CutoffGeometry {
    fn new(problem: &BoundaryProblem, opts: &QuadOptions) -> Result<Self> {
        integration_ready(problem)?;
        let n = problem.vars();
        let mut scale_cuts: Vec<f64> = Vec::new();
        let mut inner_min = f64::INFINITY;
        let mut outer_max: f64 = 0.0;
        let mut base_cuts: Vec<Vec<f64>> = vec![Vec::new(); n];
        for (_, bag, _) in problem.numerator.terms() {
            for (slot, w) in bag.iter() {
                if let WindowSlot::Base(j) = slot {
                    if *j == 0 {
                        inner_min = inner_min.min(w.inner());
                        outer_max = outer_max.max(w.outer());
                        push_cut(&mut scale_cuts, w.inner());
                        push_cut(&mut scale_cuts, w.outer());
                    } else {
                        push_cut(&mut base_cuts[*j], w.inner());
                        push_cut(&mut base_cuts[*j], w.outer());
                    }
                }
            }
        }

        let mut base_nodes = vec![(1.0, Vec::new())];
        for coord in 1..n {
            let rule = line_rule(&base_cuts[coord], opts)?;
            let mut next = Vec::with_capacity(base_nodes.len() * rule.len());
            for (weight, point) in &base_nodes {
                for &(x, w) in &rule {
                    let mut extended = point.clone();
                    extended.push(x);
                    next.push((weight * w, extended));
                }
            }
            base_nodes = next;
        }

        let radii = support_radii(problem);
        Ok(CutoffGeometry {
            compiled: problem
                .numerator
                .terms()
                .map(|(_, bag, poly)| (bag.clone(), poly.compile()))
                .collect(),
            phi: problem.phi.compile(),
            standard: problem.phi.is_zero(),
            power: problem.power,
            base_nodes,
            scale_cuts,
            outer_max,
            inner_min,
            phi_bound: phi_sup_bound(&problem.phi, &radii),
            quad: *opts,
        })
    }

    /// The integral of the form over `{x_1 e^{phi} >= eps}`.
    fn integral(&self, eps: f64) -> Result<C> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(MultiError::Cutoff(CutoffError::CutoffOutOfRange {
                eps,
                limit: self.inner_min * (-self.phi_bound).exp(),
            }));
        }
        if self.standard && eps >= self.outer_max {
            return Ok(C::default());
        }
        if !self.standard && eps >= self.inner_min * (-self.phi_bound).exp() {
            return Err(MultiError::Cutoff(CutoffError::CutoffOutOfRange {
                eps,
                limit: self.inner_min * (-self.phi_bound).exp(),
            }));
        }

        let mut point = vec![0.0; self.base_nodes[0].1.len() + 1];
        let mut scratch = point.clone();
        let mut ray_point = point.clone();
        ray_point[0] = 1.0;
        let mut acc = C::default();
        for (weight, base) in &self.base_nodes {
            point[1..].copy_from_slice(base);
            let start = if self.standard {
                eps
            } else {
                ray_point[1..].copy_from_slice(base);
                solve_cutoff_radius(
                    &self.phi,
                    &ray_point,
                    1,
                    eps,
                    self.phi_bound,
                    self.inner_min,
                    eps,
                    &mut scratch,
                )
                .map_err(MultiError::Cutoff)?
            };
            // Doubling panels climb away from the threshold so the pole-like
            // head keeps spectral accuracy, then the window radii take over.
            let mut boundaries: Vec<f64> = Vec::new();
            let first_cut = self
                .scale_cuts
                .iter()
                .copied()
                .find(|&c| c > start)
                .unwrap_or(self.outer_max);
            let mut t = start * 2.0;
            while t < first_cut {
                boundaries.push(t);
                t *= 2.0;
            }
            boundaries.extend(self.scale_cuts.iter().copied().filter(|&c| c > start));
            if self.outer_max > start {
                boundaries.push(self.outer_max);
            }
            let mut inner = C::default();
            let mut lo = start;
            for &cut in &boundaries {
                if cut <= lo {
                    continue;
                }
                let rule = GaussRule::composite(self.quad.order, lo, cut, self.quad.panels)?;
                inner += rule.integrate_complex(|t| {
                    point[0] = t;
                    self.integrand(&point)
                });
                lo = cut;
            }
            acc += cr(*weight) * inner;
        }
        Ok(acc)
    }

    fn integrand(&self, point: &[f64]) -> C {
        let mut total = C::default();
        for (bag, poly) in &self.compiled {
            let v = poly.eval(point);
            if v == C::default() {
                continue;
            }
            let windows = bag.eval(|slot| match slot {
                WindowSlot::Base(j) => point[j] * point[j],
                WindowSlot::Radial(_) => unreachable!("rejected at construction"),
            });
            total += v * windows;
        }
        total * cr(point[0].powi(-(self.power as i32)))
    }
}

fn push_cut(cuts: &mut Vec<f64>, value: f64) {
    if !cuts.contains(&value) {
        cuts.push(value);
        cuts.sort_by(f64::total_cmp);
    }
}

/// Gauss nodes over `[-b, b]` split at the window radii and at 0.
fn line_rule(cuts: &[f64], opts: &QuadOptions) -> Result<Vec<(f64, f64)>> {
    let b = cuts.last().copied().unwrap_or(0.0);
    let mut points = vec![0.0];
    for &c in cuts {
        points.push(c);
        points.push(-c);
    }
    points.sort_by(f64::total_cmp);
    let mut nodes = Vec::new();
    let mut lo = -b;
    for &hi in points.iter().chain([b].iter()) {
        if hi <= lo {
            continue;
        }
        let rule = GaussRule::composite(opts.order, lo, hi, opts.panels)?;
        nodes.extend(rule.points());
        lo = hi;
    }
    Ok(nodes)
}

/// The integral of the form over `{x_1 e^{phi} >= eps}`, by product
/// quadrature with the threshold solved per base ray.
pub fn boundary_cutoff_integral(
    problem: &BoundaryProblem,
    eps: f64,
    opts: &QuadOptions,
) -> Result<C> {
    CutoffGeometry::new(problem, opts)?.integral(eps)
}

/// Samples the cutoff integral over a grid and fits the expansion in the
/// integer basis `{eps^{-k} : 1 <= k <= M - 1}`, `log(1/eps)` and `1`.
pub fn boundary_cutoff_expansion(
    problem: &BoundaryProblem,
    grid: &EpsilonGrid,
    opts: &QuadOptions,
) -> Result<FitReport> {
    let geometry = CutoffGeometry::new(problem, opts)?;
    let mut samples = Vec::with_capacity(grid.len());
    for &eps in grid.values() {
        samples.push((eps, geometry.integral(eps)?));
    }
    let ks: Vec<u32> = (1..problem.power()).collect();
    Ok(fit_with_powers(&samples, &ks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::adaptive_quad;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn assert_close(got: C, want: C, tol: f64) {
        assert!(
            (got - want).norm() <= tol,
            "got {got}, want {want}, off by {:.3e}",
            (got - want).norm()
        );
    }

    fn quad() -> QuadOptions {
        QuadOptions {
            order: 32,
            panels: 2,
        }
    }

    fn mellin_opts() -> MellinOptions {
        MellinOptions {
            quad: quad(),
            ..MellinOptions::default()
        }
    }

    fn scale_bag() -> WindowBag {
        WindowBag::empty().with(WindowSlot::Base(0), Window::standard())
    }

    #[test]
    fn window_scale_reference_values() {
        let numerator =
            Form::term(Polynomial::constant(1, cr(1.0)), scale_bag(), &[0]).unwrap();
        let problem = BoundaryProblem::new(numerator, 1).unwrap();
        let zeta = boundary_zeta(&problem, &mellin_opts()).unwrap();
        let reference = WindowMellin::new(Window::standard(), &quad()).unwrap();
        for s in [C::new(0.7, 0.4), C::new(-1.3, 0.2), C::new(2.1, -0.8)] {
            assert_eq!(zeta.eval(s).unwrap(), reference.eval(s).unwrap());
        }
        assert_eq!(zeta.poles(), &[(0, cr(1.0))]);
        assert_eq!(zeta.log_coefficient(), cr(1.0));
        assert_eq!(zeta.finite_part(), cr(reference.finite_part_at_zero()));
        assert!(matches!(
            zeta.eval(C::default()),
            Err(MultiError::NearPole { .. })
        ));
    }

    #[test]
    fn integer_pole_progression_with_cutoff_cross_check() {
        // (1 + x_1 + x_1^2) w(x_1^2) dx_1 / x_1^3 diverges like eps^{-2}/2,
        // eps^{-1} and log(1/eps): consecutive integer orders, both parities.
        let poly = Polynomial::constant(1, cr(1.0))
            .add(&Polynomial::coordinate(1, 0))
            .add(&Polynomial::coordinate(1, 0).pow(2));
        let numerator = Form::term(poly, scale_bag(), &[0]).unwrap();
        let problem = BoundaryProblem::new(numerator, 3).unwrap();

        let zeta = boundary_zeta(&problem, &mellin_opts()).unwrap();
        assert_eq!(zeta.poles(), &[(2, cr(1.0)), (1, cr(1.0)), (0, cr(1.0))]);
        assert_eq!(zeta.divergent_coefficient(2), cr(0.5));
        assert_eq!(zeta.divergent_coefficient(1), cr(1.0));

        let expansion = boundary_expansion(&problem, &mellin_opts()).unwrap();
        assert_eq!(expansion.neg_coefficients[&2], cr(0.5));
        assert_eq!(expansion.neg_coefficients[&1], cr(1.0));
        assert_eq!(expansion.log_coefficient, cr(1.0));
        assert!(matches!(expansion.engine, Engine::Mellin));

        let grid = EpsilonGrid::standard_for(Window::standard().inner());
        let fit = boundary_cutoff_expansion(&problem, &grid, &quad()).unwrap();
        assert_close(fit.expansion.neg_coefficients[&2], cr(0.5), 1e-7);
        assert_close(fit.expansion.neg_coefficients[&1], cr(1.0), 1e-6);
        assert_close(fit.expansion.log_coefficient, cr(1.0), 1e-6);
        assert_close(fit.expansion.finite_part, expansion.finite_part, 1e-5);
    }

    #[test]
    fn smooth_integrands_need_no_regularization() {
        let numerator =
            Form::term(Polynomial::constant(1, cr(1.0)), scale_bag(), &[0]).unwrap();
        let problem = BoundaryProblem::new(numerator, 0).unwrap();
        let zeta = boundary_zeta(&problem, &mellin_opts()).unwrap();
        assert_eq!(zeta.log_coefficient(), C::default());
        assert_eq!(zeta.poles(), &[(-1, cr(1.0))]);

        let window = Window::standard();
        let direct = adaptive_quad(|t| window.eval(t * t), 0.0, 1.0, 1e-13);
        assert_close(zeta.eval(C::default()).unwrap(), cr(direct), 1e-12);
        assert_close(zeta.finite_part(), cr(direct), 1e-12);

        let eps = 0.03125;
        let tail = adaptive_quad(|t| window.eval(t * t), eps, 1.0, 1e-13);
        let cut = boundary_cutoff_integral(&problem, eps, &quad()).unwrap();
        assert_close(cut, cr(tail), 1e-10);
        assert_eq!(
            boundary_cutoff_integral(&problem, 2.0, &quad()).unwrap(),
            C::default()
        );
    }

    #[test]
    fn conformal_scales_shift_only_the_finite_part() {
        let bag = scale_bag().with(WindowSlot::Base(1), Window::standard());
        let poly = Polynomial::constant(2, cr(1.0)).add(&Polynomial::coordinate(2, 1).pow(2));
        let numerator = Form::term(poly, bag, &[0, 1]).unwrap();
        let standard = BoundaryProblem::new(numerator, 1).unwrap();
        let phi = Polynomial::constant(2, cr(0.25))
            .add(&Polynomial::coordinate(2, 1).scale(cr(0.25)))
            .add(
                &Polynomial::coordinate(2, 0)
                    .mul(&Polynomial::coordinate(2, 1))
                    .scale(cr(-0.125)),
            );
        let conformal = standard.clone().with_conformal(phi.clone()).unwrap();

        let zeta_std = boundary_zeta(&standard, &mellin_opts()).unwrap();
        let zeta_conf = boundary_zeta(&conformal, &mellin_opts()).unwrap();
        // The logarithmic coefficient ignores the choice of scale.
        assert_close(
            zeta_conf.log_coefficient(),
            zeta_std.log_coefficient(),
            1e-12,
        );
        assert!(zeta_std.log_coefficient().norm() > 1.0);

        // The finite part shifts by the residue of phi times the form.
        let weighted = BoundaryProblem::new(
            standard.numerator().mul_scalar(&phi),
            standard.power(),
        )
        .unwrap();
        let correction = boundary_zeta(&weighted, &mellin_opts())
            .unwrap()
            .log_coefficient();
        assert_close(
            zeta_conf.finite_part() - zeta_std.finite_part(),
            correction,
            1e-10,
        );

        // The cutoff engine sees the same expansion without touching the
        // continuation tables.
        let grid = EpsilonGrid::standard_for(Window::standard().inner());
        let fit = boundary_cutoff_expansion(&conformal, &grid, &quad()).unwrap();
        assert!(fit.expansion.neg_coefficients.is_empty());
        assert_close(
            fit.expansion.log_coefficient,
            zeta_std.log_coefficient(),
            1e-6,
        );
        assert_close(fit.expansion.finite_part, zeta_conf.finite_part(), 1e-5);
        let fit_std = boundary_cutoff_expansion(&standard, &grid, &quad()).unwrap();
        assert_close(
            fit_std.expansion.log_coefficient,
            zeta_std.log_coefficient(),
            1e-6,
        );
    }

    #[test]
    fn residue_forms_of_simple_divergences() {
        // w(x_1^2) dx_1 / x_1 restricts to the constant 1.
        let numerator =
            Form::term(Polynomial::constant(1, cr(1.0)), scale_bag(), &[0]).unwrap();
        let problem = BoundaryProblem::new(numerator, 1).unwrap();
        assert_eq!(
            boundary_residue(&problem).unwrap(),
            Form::scalar(Polynomial::constant(1, cr(1.0)))
        );

        // g(x_2) w(x_1^2) w(x_2^2) dx_1 ^ dx_2 / x_1 restricts to
        // g(x_2) w(x_2^2) dx_2.
        let g = Polynomial::constant(2, cr(0.5)).add(&Polynomial::coordinate(2, 1).pow(2));
        let bag = scale_bag().with(WindowSlot::Base(1), Window::new(0.4, 0.8));
        let numerator = Form::term(g.clone(), bag, &[0, 1]).unwrap();
        let problem = BoundaryProblem::new(numerator, 1).unwrap();
        let expected = Form::term(
            g,
            WindowBag::empty().with(WindowSlot::Base(1), Window::new(0.4, 0.8)),
            &[1],
        )
        .unwrap();
        assert_eq!(boundary_residue(&problem).unwrap(), expected);

        // Power 0 has no divergence at all.
        let smooth = BoundaryProblem::new(
            Form::term(Polynomial::constant(1, cr(1.0)), scale_bag(), &[0]).unwrap(),
            0,
        )
        .unwrap();
        assert!(boundary_residue(&smooth).unwrap().is_zero());

        // A flat window factor absorbs missing powers and dies on the wall.
        let flat_bag = WindowBag::empty().with(
            WindowSlot::Base(0),
            Window::standard().derivative(),
        );
        let flat = BoundaryProblem::new(
            Form::term(Polynomial::constant(2, cr(1.0)), flat_bag, &[0, 1]).unwrap(),
            2,
        )
        .unwrap();
        assert!(boundary_residue(&flat).unwrap().is_zero());
    }

    #[test]
    fn non_logarithmic_forms_are_rejected() {
        // w(x_1^2) dx_2 / x_1 has a first-order pole off the dx_1 part.
        let numerator =
            Form::term(Polynomial::constant(2, cr(1.0)), scale_bag(), &[1]).unwrap();
        let problem = BoundaryProblem::new(numerator, 1).unwrap();
        assert!(matches!(
            boundary_residue(&problem),
            Err(MultiError::NotLogarithmic)
        ));

        // A second-order pole on the dx_1 part.
        let numerator =
            Form::term(Polynomial::constant(2, cr(1.0)), scale_bag(), &[0, 1]).unwrap();
        let problem = BoundaryProblem::new(numerator, 2).unwrap();
        assert!(matches!(
            boundary_residue(&problem),
            Err(MultiError::NotLogarithmic)
        ));
    }

    fn random_poly(rng: &mut StdRng, n: usize, degree: u32) -> Polynomial {
        let mut p = Polynomial::zero(n);
        for _ in 0..4 {
            let mut exps = vec![0u32; n];
            for e in exps.iter_mut() {
                *e = rng.random_range(0..=degree);
            }
            p.add_term(
                MultiIndex(exps),
                C::new(
                    f64::from(rng.random_range(-4..=4)) * 0.25,
                    f64::from(rng.random_range(-4..=4)) * 0.25,
                ),
            );
        }
        p
    }

    /// A smooth form whose frames avoid `dx_1`, with occasional windows.
    fn random_partial_form(rng: &mut StdRng, n: usize) -> Form {
        let mut f = Form::zero(n);
        for _ in 0..3 {
            let frame: Vec<usize> = (1..n).filter(|_| rng.random_bool(0.5)).collect();
            let mut bag = WindowBag::empty();
            if rng.random_bool(0.5) {
                bag = bag.with(WindowSlot::Base(0), Window::standard());
            }
            if n > 1 && rng.random_bool(0.5) {
                bag = bag.with(WindowSlot::Base(1), Window::new(0.4, 0.8));
            }
            f = f.add(&Form::term(random_poly(rng, n, 2), bag, &frame).unwrap());
        }
        f
    }

    #[test]
    fn differential_anticommutes_with_the_residue() {
        let mut rng = StdRng::seed_from_u64(7);
        for trial in 0..100u64 {
            let n = 2 + (trial % 2) as usize;
            let f = random_partial_form(&mut rng, n);
            let g = random_partial_form(&mut rng, n);
            let numerator = Form::dx(n, 0)
                .wedge(&f)
                .unwrap()
                .add(&g.mul_scalar(&Polynomial::coordinate(n, 0)));
            let problem = BoundaryProblem::new(numerator, 1).unwrap();
            let lhs = boundary_residue(&problem.d()).unwrap();
            let rhs = boundary_residue(&problem).unwrap().d(&[]).scale(cr(-1.0));
            assert_eq!(lhs, rhs, "trial {trial}");
        }
    }

    #[test]
    fn pairing_matches_the_log_coefficient() {
        // omega = (c0 + c1 x_1 + c2 x_2^2) w(x_1^2) w(x_2^2) dx_1 / x_1,
        // psi = (d0 + d1 x_2^2) w(x_2^2) dx_2.
        let c = [cr(0.75), C::new(0.5, -0.25), C::new(-0.25, 1.0)];
        let d = [C::new(1.25, 0.5), cr(-0.5)];
        let mut omega_poly = Polynomial::constant(2, c[0]);
        omega_poly.add_term(MultiIndex(vec![1, 0]), c[1]);
        omega_poly.add_term(MultiIndex(vec![0, 2]), c[2]);
        let omega_bag = scale_bag().with(WindowSlot::Base(1), Window::standard());
        let omega = Form::term(omega_poly, omega_bag, &[0]).unwrap();

        let mut psi_poly = Polynomial::constant(2, d[0]);
        psi_poly.add_term(MultiIndex(vec![0, 2]), d[1]);
        let psi_bag = WindowBag::empty().with(WindowSlot::Base(1), Window::standard());
        let psi = Form::term(psi_poly, psi_bag, &[1]).unwrap();

        let problem = BoundaryProblem::new(omega.wedge(&psi).unwrap(), 1).unwrap();
        let lhs = boundary_zeta(&problem, &mellin_opts())
            .unwrap()
            .log_coefficient();

        let w = Window::standard();
        let pair = |x: f64| -> C {
            let restricted = c[0] + c[2] * x * x;
            let against = d[0] + d[1] * x * x;
            restricted * against * w.eval(x * x) * w.eval(x * x)
        };
        let rhs = crate::testkit::adaptive_quad_complex(pair, -1.0, 1.0, 1e-13);
        assert_close(lhs, rhs, 1e-10);

        // The residue form integrates over the boundary line to the same value.
        let paired = boundary_residue(&problem).unwrap();
        let mut total = C::default();
        for (_, bag, poly) in paired.terms() {
            total += crate::testkit::adaptive_quad_complex(
                |x| {
                    let point = [0.0, x];
                    let windows = bag.eval(|slot| match slot {
                        WindowSlot::Base(j) => point[j] * point[j],
                        WindowSlot::Radial(_) => unreachable!("smooth bags only"),
                    });
                    poly.eval(&point) * windows
                },
                -1.0,
                1.0,
                1e-12,
            );
        }
        assert_close(total, rhs, 1e-9);
    }

    #[test]
    fn integration_entry_points_validate_their_input() {
        let radial = Form::term(
            Polynomial::constant(2, cr(1.0)),
            WindowBag::radial(0, Window::standard()),
            &[0, 1],
        )
        .unwrap();
        assert!(matches!(
            BoundaryProblem::new(radial, 1),
            Err(MultiError::RadialWindowOnBoundary)
        ));

        // Not top degree.
        let partial = BoundaryProblem::new(
            Form::term(Polynomial::constant(2, cr(1.0)), scale_bag(), &[0]).unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(
            boundary_zeta(&partial, &mellin_opts()),
            Err(MultiError::NotTopDegree { n: 2 })
        ));

        // No window on the second coordinate.
        let unwindowed = BoundaryProblem::new(
            Form::term(Polynomial::constant(2, cr(1.0)), scale_bag(), &[0, 1]).unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(
            boundary_zeta(&unwindowed, &mellin_opts()),
            Err(MultiError::MissingBaseWindow { coord: 1 })
        ));

        // No scale window at all.
        let no_scale = BoundaryProblem::new(
            Form::term(
                Polynomial::constant(1, cr(1.0)),
                WindowBag::empty(),
                &[0],
            )
            .unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(
            boundary_zeta(&no_scale, &mellin_opts()),
            Err(MultiError::MissingBaseWindow { coord: 0 })
        ));

        // Mixed scale radii inside one term.
        let mixed_bag = scale_bag().with(WindowSlot::Base(0), Window::new(0.3, 0.7));
        let mixed = BoundaryProblem::new(
            Form::term(Polynomial::constant(1, cr(1.0)), mixed_bag, &[0]).unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(
            boundary_zeta(&mixed, &mellin_opts()),
            Err(MultiError::MixedScaleWindows)
        ));

        let good = BoundaryProblem::new(
            Form::term(Polynomial::constant(1, cr(1.0)), scale_bag(), &[0]).unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(
            good.clone().with_conformal(Polynomial::zero(2)),
            Err(MultiError::PhiVarMismatch {
                expected: 1,
                got: 2
            })
        ));
        assert!(matches!(
            good.clone()
                .with_conformal(Polynomial::constant(1, C::new(0.0, 1.0))),
            Err(MultiError::ComplexConformal)
        ));

        assert!(matches!(
            boundary_cutoff_integral(&good, 0.0, &quad()),
            Err(MultiError::Cutoff(CutoffError::CutoffOutOfRange { .. }))
        ));
        let conformal = good
            .with_conformal(Polynomial::constant(1, cr(0.25)))
            .unwrap();
        assert!(matches!(
            boundary_cutoff_integral(&conformal, 0.6, &quad()),
            Err(MultiError::Cutoff(CutoffError::CutoffOutOfRange { .. }))
        ));
    }
}
