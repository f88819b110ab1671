//! Sparse multivariate polynomials with complex coefficients.
//!
//! Coefficient data lives in a `BTreeMap` keyed by exponent vectors, so the
//! term order is deterministic and iteration is reproducible across runs.
//! Only coefficients that are exactly zero are dropped; small values produced
//! by cancellation are kept so that exactness-sensitive callers can decide
//! their own thresholds.

use std::collections::BTreeMap;
use std::fmt;

use crate::C;

/// Exponent vector of a single monomial `x_1^{e_1} ... x_n^{e_n}`.
///
/// Coordinates are 0-based internally; user-facing layers translate from the
/// 1-based labels used in problem descriptions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    /// The zero exponent vector in `n` variables (the constant monomial).
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Exponent vector of the single coordinate `x_i` (0-based).
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree `e_1 + ... + e_n`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Partial degree over the listed coordinates.
    pub fn degree_on(&self, coords: &[usize]) -> u32 {
        coords.iter().map(|&i| self.0[i]).sum()
    }

    /// True when every exponent on the listed coordinates is even.
    pub fn even_on(&self, coords: &[usize]) -> bool {
        coords.iter().all(|&i| self.0[i] % 2 == 0)
    }

    /// True when no listed coordinate appears.
    pub fn vanishes_on(&self, coords: &[usize]) -> bool {
        coords.iter().all(|&i| self.0[i] == 0)
    }

    fn mul(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// Sparse polynomial in `n` real variables over complex scalars.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, C>,
}

impl Polynomial {
    /// The zero polynomial in `n` variables.
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// Constant polynomial.
    pub fn constant(n: usize, value: C) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::zero(n), value);
        p
    }

    /// The coordinate function `x_i` (0-based).
    pub fn coordinate(n: usize, i: usize) -> Self {
        assert!(i < n, "coordinate index out of range");
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::unit(n, i), C::new(1.0, 0.0));
        p
    }

    /// Single monomial `value * x^exponents`.
    pub fn monomial(exponents: MultiIndex, value: C) -> Self {
        let n = exponents.len();
        let mut p = Polynomial::zero(n);
        p.add_term(exponents, value);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// duplicates.
    pub fn from_terms<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, C)>,
    {
        let mut p = Polynomial::zero(n);
        for (e, v) in terms {
            assert_eq!(e.len(), n, "exponent vector length mismatch");
            p.add_term(e, v);
        }
        p
    }

    /// The squared radius `x_1^2 + ... + x_m^2` of the first `m` coordinates,
    /// as a polynomial in `n` variables.
    pub fn radius_squared(n: usize, m: usize) -> Self {
        let mut p = Polynomial::zero(n);
        for i in 0..m {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(MultiIndex(e), C::new(1.0, 0.0));
        }
        p
    }

    /// Number of variables.
    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored monomials.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterates terms in deterministic (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    /// Coefficient of a monomial, zero if absent.
    pub fn coefficient(&self, e: &MultiIndex) -> C {
        self.terms.get(e).copied().unwrap_or_default()
    }

    /// Adds `value * x^e` in place, dropping the entry if it cancels exactly.
    pub fn add_term(&mut self, e: MultiIndex, value: C) {
        assert_eq!(e.len(), self.n, "exponent vector length mismatch");
        if value == C::default() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += value;
                if *slot.get() == C::default() {
                    slot.remove();
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(value);
            }
        }
    }

    /// Largest coefficient magnitude, used for relative comparisons.
    pub fn max_coefficient_norm(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.degree()).max().unwrap_or(0)
    }

    /// True when every coefficient has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|v| v.im == 0.0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.n, other.n, "variable count mismatch");
        let mut out = self.clone();
        for (e, v) in &other.terms {
            out.add_term(e.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C) -> Polynomial {
        if factor == C::default() {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(e, v)| (e.clone(), *v * factor))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.n, other.n, "variable count mismatch");
        let mut out = Polynomial::zero(self.n);
        for (ea, va) in &self.terms {
            for (eb, vb) in &other.terms {
                out.add_term(ea.mul(eb), va * vb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, C::new(1.0, 0.0));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to `x_i` (0-based).
    pub fn partial(&self, i: usize) -> Polynomial {
        assert!(i < self.n, "coordinate index out of range");
        let mut out = Polynomial::zero(self.n);
        for (e, v) in &self.terms {
            if e.0[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d.0[i] -= 1;
            out.add_term(d, v * C::new(f64::from(e.0[i]), 0.0));
        }
        out
    }

    /// Sets the listed coordinates to zero.
    pub fn subst_zero(&self, coords: &[usize]) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, v) in &self.terms {
            if e.vanishes_on(coords) {
                out.add_term(e.clone(), *v);
            }
        }
        out
    }

    /// Keeps only the terms whose partial degree over `coords` is exactly
    /// `degree`.
    pub fn part_of_degree_on(&self, coords: &[usize], degree: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, v) in &self.terms {
            if e.degree_on(coords) == degree {
                out.add_term(e.clone(), *v);
            }
        }
        out
    }

    /// Drops terms whose partial degree over `coords` exceeds `max`.
    pub fn truncate_degree_on(&self, coords: &[usize], max: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, v) in &self.terms {
            if e.degree_on(coords) <= max {
                out.add_term(e.clone(), *v);
            }
        }
        out
    }

    /// Taylor series of `exp(self)` with every power of the zero-constant
    /// part truncated at partial degree `max` over `coords`.
    ///
    /// The constant term exponentiates exactly; the remainder has positive
    /// degree, so the loop terminates once its powers leave the degree
    /// window.  When `coords` covers all variables this is the usual total
    /// degree truncation.
    pub fn exp_truncated_on(&self, coords: &[usize], max: u32) -> Polynomial {
        let c0 = self.coefficient(&MultiIndex::zero(self.n));
        let q = self
            .sub(&Polynomial::constant(self.n, c0))
            .truncate_degree_on(coords, max);
        let mut out = Polynomial::constant(self.n, C::new(1.0, 0.0));
        let mut power = Polynomial::constant(self.n, C::new(1.0, 0.0));
        let mut factorial = 1.0f64;
        for l in 1..=max.max(1) {
            power = power.mul(&q).truncate_degree_on(coords, max);
            if power.is_zero() {
                break;
            }
            factorial *= f64::from(l);
            out = out.add(&power.scale(C::new(1.0 / factorial, 0.0)));
        }
        out.scale(c0.exp())
    }

    /// Evaluates at a real point.
    pub fn eval(&self, x: &[f64]) -> C {
        assert_eq!(x.len(), self.n, "evaluation point length mismatch");
        let mut acc = C::default();
        for (e, v) in &self.terms {
            let mut mono = 1.0;
            for (xi, &gi) in x.iter().zip(&e.0) {
                if gi > 0 {
                    mono *= xi.powi(gi as i32);
                }
            }
            acc += v * mono;
        }
        acc
    }

    /// Flattens to a dense term list for evaluation-heavy inner loops.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, v)| (e.0.clone().into_boxed_slice(), *v))
                .collect(),
        }
    }
}

/// Flat term list mirroring a [`Polynomial`], cheap to evaluate repeatedly.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(Box<[u32]>, C)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> C {
        let mut acc = C::default();
        for (e, v) in &self.terms {
            let mut mono = 1.0;
            for (xi, &gi) in x.iter().zip(e.iter()) {
                if gi > 0 {
                    mono *= xi.powi(gi as i32);
                }
            }
            acc += v * mono;
        }
        acc
    }

    /// Evaluates assuming real coefficients; debug-asserts that assumption.
    pub fn eval_real(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, v) in &self.terms {
            debug_assert_eq!(v.im, 0.0, "real evaluation of a complex polynomial");
            let mut mono = 1.0;
            for (xi, &gi) in x.iter().zip(e.iter()) {
                if gi > 0 {
                    mono *= xi.powi(gi as i32);
                }
            }
            acc += v.re * mono;
        }
        acc
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, v) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if v.im == 0.0 {
                write!(f, "{}", v.re)?;
            } else {
                write!(f, "({}{:+}i)", v.re, v.im)?;
            }
            for (i, &gi) in e.0.iter().enumerate() {
                match gi {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, gi)?,
                }
            }
        }
        Ok(())
    }
}
