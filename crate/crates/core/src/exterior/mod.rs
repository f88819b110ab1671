//! Exterior algebra of compactly supported forms with controlled
//! singularities along a linear subspace.
//!
//! Ambient space is `R^n` with the distinguished subspace
//! `Y = {x_1 = ... = x_m = 0}` and squared distance `mu_0 = x_1^2 + ... +
//! x_m^2`.  A [`Form`] is a sum of terms `p(x) * (window product) * dx_F`
//! where `p` is a polynomial and the window product is a bag of cutoff
//! factors, each applied either to `mu` of a coordinate block or to a single
//! squared coordinate.  Keeping the windows symbolic (rather than sampling
//! them) makes the algebra closed under the exterior differential: the chain
//! rule only ever raises a factor's derivative order and multiplies by a
//! coordinate.
//!
//! A [`SingularForm`] is `mu_0^{-N}` times a smooth [`Form`]; all structural
//! operations (wedge, differential, Euler contraction, the radial/angular
//! splitting) stay in that class, with explicit power bookkeeping instead of
//! hidden normalization.
//!
//! Coefficients are complex doubles.  Every operation here is plain ring
//! arithmetic, so with dyadic inputs the results are bit-exact; tests of
//! identities such as `d(d omega) = 0` check for exact zero rather than small
//! residuals.

pub mod poly;
pub mod window;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use poly::{CompiledPoly, MultiIndex, Polynomial};
pub use window::Window;

use crate::C;

/// Errors raised by form construction and structural operations.
#[derive(Debug, Error)]
pub enum FormError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("codimension mismatch: {0} vs {1}")]
    Codimension(usize, usize),
    #[error("frame index {index} out of range for dimension {n}")]
    FrameRange { index: usize, n: usize },
    #[error("frame index {0} repeats")]
    FrameRepeat(usize),
    #[error("codimension must satisfy 1 <= m <= n, got m = {m}, n = {n}")]
    BadCodimension { m: usize, n: usize },
    #[error("this construction requires even codimension, got m = {0}")]
    OddCodimension(usize),
    #[error("conformal exponent must be real-valued")]
    ComplexExponent,
}

type Result<T> = std::result::Result<T, FormError>;

// ---------------------------------------------------------------------------
// Frames as bit masks.
// ---------------------------------------------------------------------------

/// Packs strictly increasing 0-based coordinate indices into a bit mask.
pub fn frame_mask(indices: &[usize]) -> u32 {
    let mut mask = 0u32;
    for &i in indices {
        mask |= 1 << i;
    }
    mask
}

/// Unpacks a frame mask into increasing indices.
pub fn frame_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Orders an arbitrary frame list, returning the mask and the sign of the
/// sorting permutation.  Repeated indices are an error.
pub fn frame_with_sign(indices: &[usize], n: usize) -> Result<(u32, f64)> {
    let mut mask = 0u32;
    let mut sign = 1.0;
    for &i in indices {
        if i >= n {
            return Err(FormError::FrameRange { index: i, n });
        }
        let bit = 1u32 << i;
        if mask & bit != 0 {
            return Err(FormError::FrameRepeat(i));
        }
        // Parity of the number of already-placed indices greater than i.
        if (mask >> (i + 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= bit;
    }
    Ok((mask, sign))
}

/// Sign of `dx_{f1} ^ dx_{f2}` relative to the sorted concatenation; the
/// masks must be disjoint.
fn wedge_sign(f1: u32, f2: u32) -> f64 {
    debug_assert_eq!(f1 & f2, 0);
    let mut inversions = 0u32;
    let mut rest = f2;
    while rest != 0 {
        let i = rest.trailing_zeros();
        inversions += (f1 >> (i + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of inserting or removing `dx_i` at its sorted position in `dx_F`:
/// the parity of the number of frame indices below `i`.
fn position_sign(i: usize, frame: u32) -> f64 {
    if (frame & ((1 << i) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

// ---------------------------------------------------------------------------
// Window bags.
// ---------------------------------------------------------------------------

/// Argument slot of a window factor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum WindowSlot {
    /// Applied to the squared distance of a coordinate block (`mu_block`).
    Radial(usize),
    /// Applied to the square of a single coordinate.
    Base(usize),
}

/// A sorted multiplicative bag of window factors.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct WindowBag {
    factors: Vec<(WindowSlot, Window)>,
}

impl WindowBag {
    pub fn empty() -> Self {
        WindowBag::default()
    }

    /// Single radial factor on the given block.
    pub fn radial(block: usize, window: Window) -> Self {
        let mut bag = WindowBag::empty();
        bag.push(WindowSlot::Radial(block), window);
        bag
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(WindowSlot, Window)> {
        self.factors.iter()
    }

    /// Adds one factor, keeping the bag sorted.
    pub fn push(&mut self, slot: WindowSlot, window: Window) {
        let pos = self
            .factors
            .partition_point(|(s, w)| (s, w) <= (&slot, &window));
        self.factors.insert(pos, (slot, window));
    }

    pub fn with(mut self, slot: WindowSlot, window: Window) -> Self {
        self.push(slot, window);
        self
    }

    /// Multiplicative union of two bags.
    pub fn product(&self, other: &WindowBag) -> WindowBag {
        let mut out = self.clone();
        for (slot, w) in &other.factors {
            out.push(*slot, *w);
        }
        out
    }

    /// The bag with factor `idx` replaced by its derivative.
    fn with_factor_derivative(&self, idx: usize) -> WindowBag {
        let mut out = self.clone();
        let (slot, w) = out.factors.remove(idx);
        out.push(slot, w.derivative());
        out
    }

    /// Derivative orders of the radial factors on one block, sorted.
    pub fn radial_orders(&self, block: usize) -> Vec<u32> {
        let mut orders: Vec<u32> = self
            .factors
            .iter()
            .filter(|(s, _)| *s == WindowSlot::Radial(block))
            .map(|(_, w)| w.order())
            .collect();
        orders.sort_unstable();
        orders
    }

    /// Radii of the radial factors on one block, if any.
    pub fn radial_window(&self, block: usize) -> Option<Window> {
        self.factors
            .iter()
            .find(|(s, _)| *s == WindowSlot::Radial(block))
            .map(|(_, w)| w.base())
    }

    /// Per-coordinate base factors.
    pub fn base_factors(&self) -> BTreeMap<usize, Vec<Window>> {
        let mut out: BTreeMap<usize, Vec<Window>> = BTreeMap::new();
        for (slot, w) in &self.factors {
            if let WindowSlot::Base(j) = slot {
                out.entry(*j).or_default().push(*w);
            }
        }
        out
    }

    /// Evaluates the product given the argument of each slot.
    pub fn eval<F: Fn(WindowSlot) -> f64>(&self, arg: F) -> f64 {
        self.factors
            .iter()
            .map(|(slot, w)| w.eval(arg(*slot)))
            .product()
    }
}

// ---------------------------------------------------------------------------
// Smooth forms.
// ---------------------------------------------------------------------------

/// A differential form with polynomial-times-window coefficients.
///
/// Terms are merged on the `(frame, window bag)` key, so forms have one
/// canonical representation and equality is structural.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    n: usize,
    terms: BTreeMap<(u32, WindowBag), Polynomial>,
}

impl Form {
    pub fn zero(n: usize) -> Self {
        Form {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// A 0-form given by a polynomial.
    pub fn scalar(p: Polynomial) -> Self {
        let n = p.vars();
        let mut f = Form::zero(n);
        f.accumulate(0, WindowBag::empty(), p);
        f
    }

    /// The coordinate 1-form `dx_i` (0-based).
    pub fn dx(n: usize, i: usize) -> Self {
        let mut f = Form::zero(n);
        f.accumulate(
            1 << i,
            WindowBag::empty(),
            Polynomial::constant(n, C::new(1.0, 0.0)),
        );
        f
    }

    /// One term `p * windows * dx_F` with `frame` strictly increasing.
    pub fn term(p: Polynomial, windows: WindowBag, frame: &[usize]) -> Result<Self> {
        let n = p.vars();
        let (mask, sign) = frame_with_sign(frame, n)?;
        let mut f = Form::zero(n);
        f.accumulate(mask, windows, p.scale(C::new(sign, 0.0)));
        Ok(f)
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates merged terms as `(frame mask, windows, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &WindowBag, &Polynomial)> {
        self.terms.iter().map(|((f, w), p)| (*f, w, p))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Common degree of all terms; `None` for zero or mixed-degree forms.
    pub fn degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(|(f, _)| f.count_ones() as usize);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    /// Largest coefficient magnitude across all terms.
    pub fn max_coefficient_norm(&self) -> f64 {
        self.terms
            .values()
            .map(Polynomial::max_coefficient_norm)
            .fold(0.0, f64::max)
    }

    fn accumulate(&mut self, frame: u32, windows: WindowBag, p: Polynomial) {
        if p.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((frame, windows)) {
            Entry::Occupied(mut slot) => {
                let sum = slot.get().add(&p);
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(p);
            }
        }
    }

    pub fn add(&self, other: &Form) -> Form {
        assert_eq!(self.n, other.n, "ambient dimension mismatch");
        let mut out = self.clone();
        for ((f, w), p) in &other.terms {
            out.accumulate(*f, w.clone(), p.clone());
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C) -> Form {
        if factor == C::default() {
            return Form::zero(self.n);
        }
        Form {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(k, p)| (k.clone(), p.scale(factor)))
                .collect(),
        }
    }

    /// Multiplies every coefficient by a polynomial.
    pub fn mul_scalar(&self, p: &Polynomial) -> Form {
        let mut out = Form::zero(self.n);
        for ((f, w), q) in &self.terms {
            out.accumulate(*f, w.clone(), q.mul(p));
        }
        out
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Form) -> Result<Form> {
        if self.n != other.n {
            return Err(FormError::Dimension(self.n, other.n));
        }
        let mut out = Form::zero(self.n);
        for ((f1, w1), p1) in &self.terms {
            for ((f2, w2), p2) in &other.terms {
                if f1 & f2 != 0 {
                    continue;
                }
                let sign = wedge_sign(*f1, *f2);
                out.accumulate(
                    f1 | f2,
                    w1.product(w2),
                    p1.mul(p2).scale(C::new(sign, 0.0)),
                );
            }
        }
        Ok(out)
    }

    /// Exterior differential.
    ///
    /// `blocks[b]` lists the coordinates of the radial block that a
    /// `WindowSlot::Radial(b)` factor is applied to; the chain rule for such
    /// a factor produces `2 x_i` times the factor with its order raised.
    pub fn d(&self, blocks: &[Vec<usize>]) -> Form {
        let mut out = Form::zero(self.n);
        for ((frame, bag), p) in &self.terms {
            // Polynomial part.
            for i in 0..self.n {
                if frame & (1 << i) != 0 {
                    continue;
                }
                let dp = p.partial(i);
                if dp.is_zero() {
                    continue;
                }
                let sign = position_sign(i, *frame);
                out.accumulate(
                    frame | (1 << i),
                    bag.clone(),
                    dp.scale(C::new(sign, 0.0)),
                );
            }
            // Window part.
            for (idx, (slot, _)) in bag.iter().enumerate() {
                let coords: Vec<usize> = match slot {
                    WindowSlot::Radial(b) => blocks[*b].clone(),
                    WindowSlot::Base(j) => vec![*j],
                };
                for i in coords {
                    if frame & (1 << i) != 0 {
                        continue;
                    }
                    let sign = position_sign(i, *frame);
                    let coeff = p
                        .mul(&Polynomial::coordinate(self.n, i))
                        .scale(C::new(2.0 * sign, 0.0));
                    out.accumulate(frame | (1 << i), bag.with_factor_derivative(idx), coeff);
                }
            }
        }
        out
    }

    /// Contraction with the radial Euler field `sum_{i in coords} x_i d/dx_i`.
    pub fn contract_radial(&self, coords: &[usize]) -> Form {
        let mut out = Form::zero(self.n);
        for ((frame, bag), p) in &self.terms {
            for &i in coords {
                if frame & (1 << i) == 0 {
                    continue;
                }
                let sign = position_sign(i, *frame);
                out.accumulate(
                    frame & !(1 << i),
                    bag.clone(),
                    p.mul(&Polynomial::coordinate(self.n, i))
                        .scale(C::new(sign, 0.0)),
                );
            }
        }
        out
    }

    /// Restriction to `{x_i = 0 for i in coords}`.
    ///
    /// Terms whose frame meets the coordinates die; radial window factors on
    /// blocks inside `coords` evaluate at 0 (1 for order 0, 0 otherwise), as
    /// do base factors on those coordinates.
    pub fn restrict_zero(&self, coords: &[usize], blocks: &[Vec<usize>]) -> Form {
        let dead: u32 = frame_mask(coords);
        let mut out = Form::zero(self.n);
        'terms: for ((frame, bag), p) in &self.terms {
            if frame & dead != 0 {
                continue;
            }
            let restricted = p.subst_zero(coords);
            if restricted.is_zero() {
                continue;
            }
            let mut kept = WindowBag::empty();
            for (slot, w) in bag.iter() {
                let at_origin = match slot {
                    WindowSlot::Radial(b) => blocks[*b].iter().all(|i| coords.contains(i)),
                    WindowSlot::Base(j) => coords.contains(j),
                };
                if at_origin {
                    if w.order() > 0 {
                        // w^(k)(0) = 0 for k >= 1.
                        continue 'terms;
                    }
                    // w(0) = 1: drop the factor.
                } else {
                    kept.push(*slot, *w);
                }
            }
            out.accumulate(*frame, kept, restricted);
        }
        out
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((frame, bag), p) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p})")?;
            for (slot, w) in bag.iter() {
                let arg = match slot {
                    WindowSlot::Radial(b) => format!("mu_{b}"),
                    WindowSlot::Base(j) => format!("x{}^2", j + 1),
                };
                if w.order() == 0 {
                    write!(f, " w({arg})")?;
                } else {
                    write!(f, " w^({})({arg})", w.order())?;
                }
            }
            for i in frame_indices(*frame) {
                write!(f, " dx{}", i + 1)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Singular forms.
// ---------------------------------------------------------------------------

/// A form `mu_0^{-power} * numerator` with `numerator` smooth and
/// `mu_0 = x_1^2 + ... + x_m^2`.
///
/// Radial window factors in the numerator refer to block 0, which is always
/// the first `m` coordinates.
#[derive(Clone, Debug)]
pub struct SingularForm {
    numerator: Form,
    m: usize,
    power: u32,
}

impl SingularForm {
    pub fn new(numerator: Form, m: usize, power: u32) -> Result<Self> {
        let n = numerator.vars();
        if m == 0 || m > n {
            return Err(FormError::BadCodimension { m, n });
        }
        Ok(SingularForm {
            numerator,
            m,
            power,
        })
    }

    /// A smooth form viewed in the singular class (power 0).
    pub fn from_smooth(form: Form, m: usize) -> Result<Self> {
        SingularForm::new(form, m, 0)
    }

    pub fn numerator(&self) -> &Form {
        &self.numerator
    }

    pub fn vars(&self) -> usize {
        self.numerator.vars()
    }

    /// Codimension of the singular locus.
    pub fn codim(&self) -> usize {
        self.m
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// The coordinates of the singular block.
    pub fn block(&self) -> Vec<usize> {
        (0..self.m).collect()
    }

    /// `mu_0` as a polynomial in the ambient variables.
    pub fn mu(&self) -> Polynomial {
        Polynomial::radius_squared(self.vars(), self.m)
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn degree(&self) -> Option<usize> {
        self.numerator.degree()
    }

    /// Represents the same form with the power raised by `extra` (numerator
    /// multiplied by `mu_0^extra`).
    pub fn raise_power(&self, extra: u32) -> SingularForm {
        let mut num = self.numerator.clone();
        let mu = self.mu();
        for _ in 0..extra {
            num = num.mul_scalar(&mu);
        }
        SingularForm {
            numerator: num,
            m: self.m,
            power: self.power + extra,
        }
    }

    fn check_compatible(&self, other: &SingularForm) -> Result<()> {
        if self.vars() != other.vars() {
            return Err(FormError::Dimension(self.vars(), other.vars()));
        }
        if self.m != other.m {
            return Err(FormError::Codimension(self.m, other.m));
        }
        Ok(())
    }

    pub fn add(&self, other: &SingularForm) -> Result<SingularForm> {
        self.check_compatible(other)?;
        let power = self.power.max(other.power);
        let a = self.raise_power(power - self.power);
        let b = other.raise_power(power - other.power);
        Ok(SingularForm {
            numerator: a.numerator.add(&b.numerator),
            m: self.m,
            power,
        })
    }

    pub fn sub(&self, other: &SingularForm) -> Result<SingularForm> {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C) -> SingularForm {
        SingularForm {
            numerator: self.numerator.scale(factor),
            m: self.m,
            power: self.power,
        }
    }

    /// Exterior product; powers add.
    pub fn wedge(&self, other: &SingularForm) -> Result<SingularForm> {
        self.check_compatible(other)?;
        Ok(SingularForm {
            numerator: self.numerator.wedge(&other.numerator)?,
            m: self.m,
            power: self.power + other.power,
        })
    }

    /// Wedge with a smooth form.
    pub fn wedge_smooth(&self, other: &Form) -> Result<SingularForm> {
        if self.vars() != other.vars() {
            return Err(FormError::Dimension(self.vars(), other.vars()));
        }
        Ok(SingularForm {
            numerator: self.numerator.wedge(other)?,
            m: self.m,
            power: self.power,
        })
    }

    /// Exterior differential, staying in the singular class:
    /// `d(mu^{-N} eta) = mu^{-(N+1)} (mu d eta - N d mu ^ eta)`.
    pub fn d(&self) -> SingularForm {
        let blocks = vec![self.block()];
        let d_num = self.numerator.d(&blocks);
        if self.power == 0 {
            return SingularForm {
                numerator: d_num,
                m: self.m,
                power: 0,
            };
        }
        let mu = self.mu();
        let dmu = self.dmu();
        let n_factor = C::new(-(f64::from(self.power)), 0.0);
        let correction = dmu
            .wedge(&self.numerator)
            .expect("dmu shares the ambient dimension")
            .scale(n_factor);
        SingularForm {
            numerator: d_num.mul_scalar(&mu).add(&correction),
            m: self.m,
            power: self.power + 1,
        }
    }

    /// `d mu_0` as a smooth 1-form.
    pub fn dmu(&self) -> Form {
        let n = self.vars();
        let mut out = Form::zero(n);
        for i in 0..self.m {
            out = out.add(
                &Form::dx(n, i).mul_scalar(&Polynomial::coordinate(n, i).scale(C::new(2.0, 0.0))),
            );
        }
        out
    }

    /// Contraction with the radial Euler field of the singular block.
    pub fn contract_euler(&self) -> SingularForm {
        SingularForm {
            numerator: self.numerator.contract_radial(&self.block()),
            m: self.m,
            power: self.power,
        }
    }

    /// Splits off the radial direction:
    /// `omega = (d mu / mu) ^ sigma + tau` with both parts annihilated by the
    /// Euler contraction.  `sigma` is half the Euler contraction of `omega`.
    pub fn euler_decompose(&self) -> (SingularForm, SingularForm) {
        let sigma = self.contract_euler().scale(C::new(0.5, 0.0));
        // (dmu/mu) ^ sigma has one extra mu power.
        let alpha_sigma = SingularForm {
            numerator: self
                .dmu()
                .wedge(&sigma.numerator)
                .expect("dimensions match"),
            m: self.m,
            power: sigma.power + 1,
        };
        let tau = self
            .sub(&alpha_sigma)
            .expect("compatible by construction");
        (sigma, tau)
    }

    /// True when both represent the same form after clearing denominators.
    pub fn equiv(&self, other: &SingularForm) -> bool {
        if self.vars() != other.vars() || self.m != other.m {
            return false;
        }
        let power = self.power.max(other.power);
        let a = self.raise_power(power - self.power);
        let b = other.raise_power(power - other.power);
        a.numerator == b.numerator
    }

    /// Difference magnitude after clearing denominators, for near-equality
    /// assertions.
    pub fn distance(&self, other: &SingularForm) -> f64 {
        let power = self.power.max(other.power);
        let a = self.raise_power(power - self.power);
        let b = other.raise_power(power - other.power);
        a.numerator.sub(&b.numerator).max_coefficient_norm()
    }
}

impl fmt::Display for SingularForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.power == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "mu^-{} * [{}]", self.power, self.numerator)
        }
    }
}

// ---------------------------------------------------------------------------
// Measures in the conformal class of mu_0.
// ---------------------------------------------------------------------------

/// A squared-distance measure `mu = e^{2 phi} mu_0` for the block of the
/// first `m` coordinates.
///
/// `phi = 0` is the standard measure.  The exponent must be real-valued: a
/// complex rescaling would not define a positive measure.
#[derive(Clone, Debug)]
pub struct MorseBott {
    m: usize,
    phi: Polynomial,
}

impl MorseBott {
    /// The standard measure `mu_0` on `R^n`.
    pub fn standard(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(FormError::BadCodimension { m, n });
        }
        Ok(MorseBott {
            m,
            phi: Polynomial::zero(n),
        })
    }

    /// The measure `e^{2 phi} mu_0`; `phi` must have real coefficients.
    pub fn conformal(m: usize, phi: Polynomial) -> Result<Self> {
        let n = phi.vars();
        if m == 0 || m > n {
            return Err(FormError::BadCodimension { m, n });
        }
        if !phi.is_real() {
            return Err(FormError::ComplexExponent);
        }
        Ok(MorseBott { m, phi })
    }

    /// The constant rescaling `t * mu_0` for `t > 0`, i.e. `phi = ln(t)/2`.
    pub fn scaled(n: usize, m: usize, t: f64) -> Result<Self> {
        assert!(t > 0.0, "scaling factor must be positive");
        MorseBott::conformal(m, Polynomial::constant(n, C::new(t.ln() / 2.0, 0.0)))
    }

    pub fn codim(&self) -> usize {
        self.m
    }

    pub fn vars(&self) -> usize {
        self.phi.vars()
    }

    pub fn phi(&self) -> &Polynomial {
        &self.phi
    }

    pub fn is_standard(&self) -> bool {
        self.phi.is_zero()
    }

    /// Evaluates `mu` at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut mu0 = 0.0;
        for &xi in &x[..self.m] {
            mu0 += xi * xi;
        }
        (2.0 * self.phi.eval(x).re).exp() * mu0
    }

    /// Upper bound for `|phi|` over the box `|x_i| <= radius`, from the
    /// coefficient norms.  Used for series-depth diagnostics.
    pub fn phi_sup_bound(&self, radius: f64) -> f64 {
        self.phi
            .terms()
            .map(|(e, v)| v.norm() * radius.powi(e.degree() as i32))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Canonical generators.
// ---------------------------------------------------------------------------

/// The logarithmic radial 1-form `d mu / mu`.
pub fn alpha_form(n: usize, m: usize) -> Result<SingularForm> {
    if m == 0 || m > n {
        return Err(FormError::BadCodimension { m, n });
    }
    let probe = SingularForm::new(Form::zero(n), m, 0)?;
    SingularForm::new(probe.dmu(), m, 1)
}

/// The normalized sphere volume component
/// `mu^{-m/2} sum_i (-1)^{i-1} x_i dx_1 ^ ... ^ (skip i) ^ ... ^ dx_m`,
/// defined for even codimension.
pub fn beta_form(n: usize, m: usize) -> Result<SingularForm> {
    if m == 0 || m > n {
        return Err(FormError::BadCodimension { m, n });
    }
    if m % 2 != 0 {
        return Err(FormError::OddCodimension(m));
    }
    let mut num = Form::zero(n);
    let full: Vec<usize> = (0..m).collect();
    for i in 0..m {
        let frame: Vec<usize> = full.iter().copied().filter(|&j| j != i).collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = Polynomial::coordinate(n, i).scale(C::new(sign, 0.0));
        num = num.add(&Form::term(coeff, WindowBag::empty(), &frame)?);
    }
    SingularForm::new(num, m, (m / 2) as u32)
}
