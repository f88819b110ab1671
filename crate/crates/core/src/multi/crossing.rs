//! Continuation across several quadratic singularities at once.
//!
//! The measure factors over disjoint coordinate blocks: component `i` owns
//! an even block `B_i` of coordinates carrying `mu_i = sum_{j in B_i} x_j^2`,
//! and the integrand is `num / prod_i mu_i^{N_i}` with a radial window per
//! component and one-dimensional windows on the remaining coordinates.  The
//! continued integral
//!
//! ```text
//! zeta(s_1, .., s_k) = integral prod_i mu_i^{s_i/2} * omega
//! ```
//!
//! is a product-like function of one complex variable per component, with at
//! most simple poles on the coordinate hyperplanes `s_i = const`.  Under
//! `mu_i -> e^{2 phi_i} mu_0` the integrand picks up `e^{s_i phi_i}`, which
//! expands into a finite-degree polynomial correction per series order
//! exactly as in the one-component case.
//!
//! Regularized values are indexed by a subset mask: bit `i` set means the
//! Laurent expansion at the origin takes the constant term in `s_i`, bit `i`
//! clear means it takes the coefficient of `1/s_i`.  The empty mask is the
//! product of residues, the full mask is the finite part, and mixed masks
//! interpolate.  [`CrossingEvaluator::coefficient`] extracts these factor by
//! factor from the transform tables; [`CrossingEvaluator::contour_coefficient`]
//! recomputes them as averages over a torus of sample points, which shares no
//! code path with the extraction and anchors the consistency checks.

use std::collections::BTreeMap;

use crate::exterior::{Form, Polynomial, Window, WindowBag, WindowSlot};
use crate::quadrature::{sphere_moment, BaseCache, QuadOptions, WindowMellin};
use crate::{cr, C};

use super::{full_frame, MultiError, Result};

/// Evaluation refuses `s` vectors closer than this to a pole hyperplane.
const POLE_GUARD: f64 = 1e-9;

/// Default number of conformal series terms kept across all components.
pub const DEFAULT_SERIES_DEPTH: usize = 16;

/// Default nodes per circle for contour extraction.
pub const DEFAULT_CONTOUR_POINTS: usize = 24;

/// Default radius of each extraction circle.
pub const DEFAULT_CONTOUR_RADIUS: f64 = 0.35;

/// Tuning knobs for the crossing engine.
#[derive(Clone, Copy, Debug)]
pub struct CrossingOptions {
    pub quad: QuadOptions,
    /// Total number of conformal series terms kept across all components
    /// when evaluating at general `s`.
    pub series_depth: usize,
    /// Nodes per circle when extracting Laurent coefficients by contour.
    pub contour_points: usize,
    /// Radius of each extraction circle; must stay below 1 so no shifted
    /// transform brings a pole inside the polydisk.
    pub contour_radius: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions {
            quad: QuadOptions::default(),
            series_depth: DEFAULT_SERIES_DEPTH,
            contour_points: DEFAULT_CONTOUR_POINTS,
            contour_radius: DEFAULT_CONTOUR_RADIUS,
        }
    }
}

/// A top-degree integrand with several disjoint quadratic singularities.
///
/// Component `i` is the pair `(B_i, N_i)`: the form behaves like
/// `num / prod_i mu_i^{N_i}` with `mu_i` the coordinate quadric on the even
/// block `B_i`.  Coordinates outside every block are the base directions and
/// every numerator term must window them; block coordinates must not carry
/// one-dimensional windows of their own.
#[derive(Clone, Debug)]
pub struct CrossingProblem {
    numerator: Form,
    blocks: Vec<Vec<usize>>,
    powers: Vec<u32>,
    phis: Vec<Polynomial>,
}

impl CrossingProblem {
    pub fn new(numerator: Form, components: &[(Vec<usize>, u32)]) -> Result<Self> {
        let n = numerator.vars();
        if components.is_empty() {
            return Err(MultiError::NoComponents);
        }
        let mut owner = vec![usize::MAX; n];
        let mut blocks = Vec::with_capacity(components.len());
        let mut powers = Vec::with_capacity(components.len());
        for (index, (block, power)) in components.iter().enumerate() {
            if block.is_empty() {
                return Err(MultiError::EmptyBlock { component: index });
            }
            if block.len() % 2 != 0 {
                return Err(MultiError::OddBlock {
                    component: index,
                    size: block.len(),
                });
            }
            let mut sorted = block.clone();
            sorted.sort_unstable();
            for pair in sorted.windows(2) {
                if pair[0] == pair[1] {
                    return Err(MultiError::OverlappingBlocks { coord: pair[0] });
                }
            }
            for &coord in &sorted {
                if coord >= n {
                    return Err(MultiError::CoordOutOfRange { coord, n });
                }
                if owner[coord] != usize::MAX {
                    return Err(MultiError::OverlappingBlocks { coord });
                }
                owner[coord] = index;
            }
            blocks.push(sorted);
            powers.push(*power);
        }
        let full = full_frame(n);
        for (frame, bag, _) in numerator.terms() {
            if frame != full {
                return Err(MultiError::NotTopDegree { n });
            }
            validate_bag(bag, blocks.len(), &owner)?;
        }
        let phis = vec![Polynomial::zero(n); blocks.len()];
        Ok(CrossingProblem {
            numerator,
            blocks,
            powers,
            phis,
        })
    }

    /// Replaces the measure of one component by `e^{2 phi} mu_0`.
    pub fn with_conformal(mut self, component: usize, phi: Polynomial) -> Result<Self> {
        let count = self.blocks.len();
        if component >= count {
            return Err(MultiError::ComponentOutOfRange { component, count });
        }
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
        self.phis[component] = phi;
        Ok(self)
    }

    pub fn numerator(&self) -> &Form {
        &self.numerator
    }

    pub fn components(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, component: usize) -> &[usize] {
        &self.blocks[component]
    }

    pub fn power(&self, component: usize) -> u32 {
        self.powers[component]
    }

    pub fn conformal_factor(&self, component: usize) -> &Polynomial {
        &self.phis[component]
    }

    pub fn is_standard(&self) -> bool {
        self.phis.iter().all(Polynomial::is_zero)
    }

    /// The same problem with every measure reset to the standard one.
    pub fn standardized(&self) -> CrossingProblem {
        let mut out = self.clone();
        for phi in &mut out.phis {
            *phi = Polynomial::zero(self.numerator.vars());
        }
        out
    }

    /// The standard-measure problem with the numerator multiplied by `p`.
    fn weighted(&self, p: &Polynomial) -> CrossingProblem {
        let mut out = self.standardized();
        out.numerator = out.numerator.mul_scalar(p);
        out
    }
}

fn validate_bag(bag: &WindowBag, count: usize, owner: &[usize]) -> Result<()> {
    let n = owner.len();
    for component in 0..count {
        let mut radial: Option<Window> = None;
        for (slot, w) in bag.iter() {
            if *slot == WindowSlot::Radial(component) {
                match radial {
                    None => radial = Some(w.base()),
                    Some(r) if r == w.base() => {}
                    Some(_) => return Err(MultiError::MixedRadialWindows { component }),
                }
            }
        }
        if radial.is_none() {
            return Err(MultiError::MissingRadialWindow { component });
        }
    }
    for (slot, _) in bag.iter() {
        match *slot {
            WindowSlot::Radial(component) if component >= count => {
                return Err(MultiError::ComponentOutOfRange { component, count });
            }
            WindowSlot::Base(coord) => {
                if coord >= n {
                    return Err(MultiError::CoordOutOfRange { coord, n });
                }
                if owner[coord] != usize::MAX {
                    return Err(MultiError::WindowOnBlockCoordinate { coord });
                }
            }
            _ => {}
        }
    }
    let factors = bag.base_factors();
    for coord in 0..n {
        if owner[coord] == usize::MAX && factors.get(&coord).map_or(true, Vec::is_empty) {
            return Err(MultiError::MissingBaseWindow { coord });
        }
    }
    Ok(())
}

/// One summand of the continued integral: the monomial power of each `s_i`
/// from the conformal series, times a table of factored transforms.
struct CrossingTable {
    /// Power of `s_i` multiplying every term of this table.
    weights: Vec<u32>,
    /// Map from the per-component `(shift, transform id)` vector to the
    /// accumulated constant in front of `prod_i W_id(s_i + shift)`.
    terms: BTreeMap<Vec<(i64, u32)>, C>,
}

/// Immutable multi-variable continuation engine for one crossing problem.
///
/// Construction expands the conformal series, reduces every monomial to
/// sphere moments, base window integrals and one shifted window transform
/// per component, and dedupes the transforms by signature.  Evaluation and
/// coefficient extraction afterwards are pure arithmetic.
pub struct CrossingEvaluator {
    components: usize,
    mellins: Vec<WindowMellin>,
    tables: Vec<CrossingTable>,
    opts: CrossingOptions,
}

impl CrossingEvaluator {
    pub fn new(problem: &CrossingProblem, opts: &CrossingOptions) -> Result<Self> {
        Self::with_depth(problem, opts, opts.series_depth)
    }

    fn with_depth(problem: &CrossingProblem, opts: &CrossingOptions, depth: usize) -> Result<Self> {
        let k = problem.blocks.len();
        let conformal: Vec<usize> = (0..k).filter(|&i| !problem.phis[i].is_zero()).collect();
        let depth = if conformal.is_empty() { 0 } else { depth };
        let mut builder = TableBuilder {
            problem,
            quad: opts.quad,
            ids: BTreeMap::new(),
            mellins: Vec::new(),
            cache: BaseCache::new(opts.quad),
            base_coords: base_coordinates(problem),
        };
        let mut tables = Vec::new();
        for assignment in assignments(conformal.len(), depth) {
            let mut weights = vec![0u32; k];
            let mut weighted = problem.numerator.clone();
            let mut factor = 1.0;
            for (pos, &l) in assignment.iter().enumerate() {
                let comp = conformal[pos];
                weights[comp] = l;
                if l > 0 {
                    weighted = weighted.mul_scalar(&problem.phis[comp].pow(l));
                    for j in 1..=l {
                        factor /= f64::from(j);
                    }
                }
            }
            let terms = builder.table(&weighted, factor)?;
            if !terms.is_empty() {
                tables.push(CrossingTable { weights, terms });
            }
        }
        Ok(CrossingEvaluator {
            components: k,
            mellins: builder.mellins,
            tables,
            opts: *opts,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Value of the continued integral at `s`, one entry per component.
    pub fn eval(&self, s: &[C]) -> Result<C> {
        if s.len() != self.components {
            return Err(MultiError::ComponentCount {
                expected: self.components,
                got: s.len(),
            });
        }
        let mut cache: BTreeMap<(usize, i64, u32), C> = BTreeMap::new();
        let mut acc = C::default();
        for table in &self.tables {
            let mut weight = cr(1.0);
            for (i, &l) in table.weights.iter().enumerate() {
                for _ in 0..l {
                    weight *= s[i];
                }
            }
            for (key, &c) in &table.terms {
                let mut term = weight * c;
                for (i, &(shift, id)) in key.iter().enumerate() {
                    let sigma = s[i] + cr(shift as f64);
                    let mellin = &self.mellins[id as usize];
                    if mellin.has_pole() && sigma.norm() < POLE_GUARD {
                        return Err(MultiError::PoleHyperplane {
                            component: i,
                            location: -(shift as f64),
                        });
                    }
                    let value = match cache.get(&(i, shift, id)) {
                        Some(&v) => v,
                        None => {
                            let v = mellin.eval(sigma)?;
                            cache.insert((i, shift, id), v);
                            v
                        }
                    };
                    term *= value;
                }
                acc += term;
            }
        }
        Ok(acc)
    }

    /// Laurent coefficient at the origin selected by the subset mask: the
    /// constant term in `s_i` where bit `i` is set, the coefficient of
    /// `1/s_i` where it is clear.
    pub fn coefficient(&self, subset: u32) -> Result<C> {
        self.check_subset(subset)?;
        let mut acc = C::default();
        'tables: for table in &self.tables {
            for (i, &l) in table.weights.iter().enumerate() {
                // One series power of s_i survives only against the simple
                // pole of a constant-term extraction; two or more never do.
                if l > 1 || (l == 1 && subset & (1 << i) == 0) {
                    continue 'tables;
                }
            }
            'terms: for (key, &c) in &table.terms {
                let mut term = c;
                for (i, &(shift, id)) in key.iter().enumerate() {
                    let mellin = &self.mellins[id as usize];
                    let pole = shift == 0 && mellin.has_pole();
                    let constant = subset & (1 << i) != 0;
                    if table.weights[i] == 1 {
                        if !pole {
                            continue 'terms;
                        }
                        // s_i times the simple pole leaves the residue 1.
                    } else if constant {
                        if pole {
                            term *= mellin.finite_part_at_zero();
                        } else {
                            term *= mellin.eval(cr(shift as f64))?;
                        }
                    } else if pole {
                        // Residue of the factored pole is 1.
                    } else {
                        continue 'terms;
                    }
                }
                acc += term;
            }
        }
        Ok(acc)
    }

    /// The same Laurent coefficient as [`coefficient`](Self::coefficient),
    /// measured as a torus average of plain evaluations.
    pub fn contour_coefficient(&self, subset: u32) -> Result<C> {
        self.check_subset(subset)?;
        let k = self.components;
        let points = self.opts.contour_points.max(4);
        let radius = self.opts.contour_radius;
        let nodes: Vec<C> = (0..points)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
                C::from_polar(radius, theta)
            })
            .collect();
        let mut idx = vec![0usize; k];
        let mut s = vec![C::default(); k];
        let mut acc = C::default();
        loop {
            for (i, &j) in idx.iter().enumerate() {
                s[i] = nodes[j];
            }
            let mut weight = cr(1.0);
            for i in 0..k {
                if subset & (1 << i) == 0 {
                    weight *= s[i];
                }
            }
            acc += weight * self.eval(&s)?;
            let mut digit = 0;
            loop {
                if digit == k {
                    return Ok(acc / cr((points as f64).powi(k as i32)));
                }
                idx[digit] += 1;
                if idx[digit] < points {
                    break;
                }
                idx[digit] = 0;
                digit += 1;
            }
        }
    }

    fn check_subset(&self, subset: u32) -> Result<()> {
        if self.components < 32 && subset >= 1 << self.components {
            return Err(MultiError::SubsetOutOfRange {
                subset,
                components: self.components,
            });
        }
        Ok(())
    }
}

fn base_coordinates(problem: &CrossingProblem) -> Vec<usize> {
    let n = problem.numerator.vars();
    let mut in_block = vec![false; n];
    for block in &problem.blocks {
        for &coord in block {
            in_block[coord] = true;
        }
    }
    (0..n).filter(|&j| !in_block[j]).collect()
}

/// All length-`count` exponent vectors with total sum at most `total`.
fn assignments(count: usize, total: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..count {
        let mut next = Vec::new();
        for v in &out {
            let used: u32 = v.iter().sum();
            for l in 0..=(total as u32 - used) {
                let mut w = v.clone();
                w.push(l);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

struct TableBuilder<'a> {
    problem: &'a CrossingProblem,
    quad: QuadOptions,
    ids: BTreeMap<(Window, Vec<u32>), u32>,
    mellins: Vec<WindowMellin>,
    cache: BaseCache,
    base_coords: Vec<usize>,
}

impl TableBuilder<'_> {
    fn mellin_id(&mut self, window: Window, orders: &[u32]) -> Result<u32> {
        let key = (window, orders.to_vec());
        if let Some(&id) = self.ids.get(&key) {
            return Ok(id);
        }
        let id = self.mellins.len() as u32;
        self.mellins
            .push(WindowMellin::from_signature(window, orders, &self.quad)?);
        self.ids.insert(key, id);
        Ok(id)
    }

    fn table(&mut self, form: &Form, factor: f64) -> Result<BTreeMap<Vec<(i64, u32)>, C>> {
        let blocks = &self.problem.blocks;
        let mut terms: BTreeMap<Vec<(i64, u32)>, C> = BTreeMap::new();
        for (_, bag, poly) in form.terms() {
            let mut bag_mellins = Vec::with_capacity(blocks.len());
            for component in 0..blocks.len() {
                let window = bag
                    .radial_window(component)
                    .expect("radial windows validated at construction");
                let orders = bag.radial_orders(component);
                bag_mellins.push(self.mellin_id(window, &orders)?);
            }
            let base_factors = bag.base_factors();
            'monomials: for (e, &v) in poly.terms() {
                let mut c = v * factor;
                for &coord in &self.base_coords {
                    c *= self.cache.one_dim(e.0[coord], &base_factors[&coord])?;
                    if c == C::default() {
                        continue 'monomials;
                    }
                }
                let mut key = Vec::with_capacity(blocks.len());
                for (i, block) in blocks.iter().enumerate() {
                    let exps: Vec<u32> = block.iter().map(|&j| e.0[j]).collect();
                    let moment = sphere_moment(&exps)?;
                    if moment == 0.0 {
                        continue 'monomials;
                    }
                    c *= moment;
                    let degree: i64 = exps.iter().map(|&g| i64::from(g)).sum();
                    let shift =
                        degree + block.len() as i64 - 2 * i64::from(self.problem.powers[i]);
                    key.push((shift, bag_mellins[i]));
                }
                let entry = terms.entry(key.clone()).or_default();
                *entry += c;
                if *entry == C::default() {
                    terms.remove(&key);
                }
            }
        }
        Ok(terms)
    }
}

/// Regularized coefficients of a crossing problem, one per subset mask.
#[derive(Clone, Debug)]
pub struct MultiExpansion {
    components: usize,
    coefficients: BTreeMap<u32, C>,
}

impl MultiExpansion {
    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coefficient(&self, subset: u32) -> Option<C> {
        self.coefficients.get(&subset).copied()
    }

    pub fn coefficients(&self) -> &BTreeMap<u32, C> {
        &self.coefficients
    }

    /// The product of residues: the empty mask.
    pub fn leading(&self) -> C {
        self.coefficients[&0]
    }

    /// The fully regularized value: the full mask.
    pub fn finite_part(&self) -> C {
        *self
            .coefficients
            .values()
            .next_back()
            .expect("expansion holds every mask")
    }
}

/// Value of the continued integral at `s`.
pub fn multi_zeta(problem: &CrossingProblem, s: &[C], opts: &CrossingOptions) -> Result<C> {
    CrossingEvaluator::new(problem, opts)?.eval(s)
}

/// Conformal series depth that extraction needs: one power of each
/// conformal factor.
fn extraction_depth(problem: &CrossingProblem) -> usize {
    (0..problem.components())
        .filter(|&i| !problem.conformal_factor(i).is_zero())
        .count()
}

/// One regularized coefficient, extracted from the transform tables.
pub fn subset_coefficient(
    problem: &CrossingProblem,
    subset: u32,
    opts: &CrossingOptions,
) -> Result<C> {
    CrossingEvaluator::with_depth(problem, opts, extraction_depth(problem))?.coefficient(subset)
}

/// Every regularized coefficient of the problem, indexed by subset mask.
pub fn crossing_expansion(
    problem: &CrossingProblem,
    opts: &CrossingOptions,
) -> Result<MultiExpansion> {
    let evaluator = CrossingEvaluator::with_depth(problem, opts, extraction_depth(problem))?;
    let k = evaluator.components();
    let mut coefficients = BTreeMap::new();
    for subset in 0..(1u32 << k) {
        coefficients.insert(subset, evaluator.coefficient(subset)?);
    }
    Ok(MultiExpansion {
        components: k,
        coefficients,
    })
}

/// One verified identity: a contour-measured coefficient of a conformal
/// problem against its closed-form prediction from standard-measure values.
#[derive(Clone, Debug)]
pub struct CrossingCheck {
    /// `"independence"`, `"shift"` or `"mixed-sum"`.
    pub law: &'static str,
    /// The conformal component the row varies, if a single one.
    pub component: Option<usize>,
    pub subset: u32,
    pub lhs: C,
    pub rhs: C,
}

impl CrossingCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// Collected transformation-law checks for one problem.
#[derive(Clone, Debug)]
pub struct CrossingCheckReport {
    pub checks: Vec<CrossingCheck>,
}

impl CrossingCheckReport {
    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .map(CrossingCheck::residual)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Verifies how the regularized coefficients respond to conformal changes
/// of each component measure.
///
/// For every nonzero `phis[i]` and every subset `M`, the coefficient of the
/// problem with only component `i` made conformal is measured by contour
/// extraction and compared against the standard values: unchanged when
/// `i` is not in `M` (`"independence"`), shifted by the coefficient of
/// `phi_i * omega` at `M` minus `i` when it is (`"shift"`).  When any factor
/// is nonzero a final `"mixed-sum"` row checks the fully conformal finite
/// part against the sum over masks of standard coefficients of
/// `prod_{i not in M} phi_i * omega`.
pub fn crossing_conformal_check(
    problem: &CrossingProblem,
    phis: &[Polynomial],
    opts: &CrossingOptions,
) -> Result<CrossingCheckReport> {
    let k = problem.components();
    if phis.len() != k {
        return Err(MultiError::ComponentCount {
            expected: k,
            got: phis.len(),
        });
    }
    let standard = problem.standardized();
    let std_ev = CrossingEvaluator::with_depth(&standard, opts, 0)?;
    let full = (1u32 << k) - 1;
    let mut checks = Vec::new();

    for (i, phi) in phis.iter().enumerate() {
        if phi.is_zero() {
            continue;
        }
        let single = standard.clone().with_conformal(i, phi.clone())?;
        let conformal = CrossingEvaluator::new(&single, opts)?;
        let corrected = standard.weighted(phi);
        let corrected_ev = CrossingEvaluator::with_depth(&corrected, opts, 0)?;
        for subset in 0..=full {
            let lhs = conformal.contour_coefficient(subset)?;
            if subset & (1 << i) == 0 {
                checks.push(CrossingCheck {
                    law: "independence",
                    component: Some(i),
                    subset,
                    lhs,
                    rhs: std_ev.coefficient(subset)?,
                });
            } else {
                let rhs = std_ev.coefficient(subset)?
                    + corrected_ev.coefficient(subset & !(1 << i))?;
                checks.push(CrossingCheck {
                    law: "shift",
                    component: Some(i),
                    subset,
                    lhs,
                    rhs,
                });
            }
        }
    }

    if phis.iter().any(|phi| !phi.is_zero()) {
        let mut all = standard.clone();
        for (i, phi) in phis.iter().enumerate() {
            if !phi.is_zero() {
                all = all.with_conformal(i, phi.clone())?;
            }
        }
        let conformal = CrossingEvaluator::new(&all, opts)?;
        let lhs = conformal.contour_coefficient(full)?;
        let mut rhs = C::default();
        for subset in 0..=full {
            let mut weight = Polynomial::constant(problem.numerator.vars(), cr(1.0));
            for (i, phi) in phis.iter().enumerate() {
                if subset & (1 << i) == 0 {
                    weight = weight.mul(phi);
                }
            }
            let weighted_ev = CrossingEvaluator::with_depth(&standard.weighted(&weight), opts, 0)?;
            rhs += weighted_ev.coefficient(subset)?;
        }
        checks.push(CrossingCheck {
            law: "mixed-sum",
            component: None,
            subset: full,
            lhs,
            rhs,
        });
    }

    Ok(CrossingCheckReport { checks })
}
