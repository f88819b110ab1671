//! Residue map onto the singular locus for tamely singular forms.
//!
//! A form `omega = mu_0^{-N} eta` with even codimension `m = 2r` is *tame*
//! when both `mu_0^{m/2} omega` and `mu_0^{m/2-1} d(mu_0) ^ omega` are
//! smooth.  Both conditions are exact polynomial statements: a quotient by a
//! power of `mu_0` is smooth iff the numerator lies in the corresponding
//! power of the ideal generated by `mu_0`, which [`tame_check`] decides by
//! Euclidean division in the last normal variable.
//!
//! For a tame form the cleared numerator splits as
//!
//! ```text
//! mu_0^{m/2} omega = dx_1 ^ … ^ dx_m ^ alpha + sum_i x_i alpha_i
//! ```
//!
//! ([`varia_decompose`]), and the residue is the restriction of `alpha` to
//! the singular locus `Y = {x_1 = … = x_m = 0}` scaled by the area constant
//! `2 pi^r / (r-1)!`:  `R(omega)` captures the log coefficient of the
//! regularized integral in the sense that `I_0(omega ^ phi)` equals the
//! pairing of `R(omega)` with `phi` over `Y` for every smooth windowed
//! `phi` ([`pair_on_y`]).
//!
//! When the singular block is a complex line (`m = 2`, `z_1 = x_1 + i x_2`),
//! forms with doubly logarithmic poles split against `dz_1/z_1` and
//! `dzbar_1/zbar_1`; [`residue_complex`] reads the residue directly off that
//! decomposition and agrees with [`residue_map`] on the real-coordinate
//! expansion assembled by [`bilogarithmic_form`].

use std::f64::consts::PI;

use thiserror::Error;

use crate::exterior::{frame_indices, frame_mask, Form, FormError, Polynomial, SingularForm};
use crate::quadrature::{base_integral, BaseCache, QuadOptions, QuadratureError};
use crate::C;

/// Errors from tameness analysis, decomposition, and pairing.
#[derive(Debug, Error)]
pub enum ResidueError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("residues need even codimension, got {m}")]
    OddCodimension { m: usize },
    #[error("form is not tamely singular, so it has no residue")]
    NotTame,
    #[error(
        "residue of degree {residue} paired with a degree {phi} form, \
         but the locus has dimension {dim}"
    )]
    DegreeMismatch {
        residue: usize,
        phi: usize,
        dim: usize,
    },
    #[error("forms live on different variable counts: {expected} vs {got}")]
    VarMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ResidueError>;

/// Outcome of the tameness test, with the cleared forms as witnesses.
#[derive(Clone, Debug)]
pub struct TameReport {
    /// Whether both clearance conditions hold.
    pub tame: bool,
    /// `mu_0^{m/2} omega` when it is polynomial.
    pub cleared: Option<Form>,
    /// `mu_0^{m/2-1} d(mu_0) ^ omega` when it is polynomial.
    pub boundary: Option<Form>,
}

/// Exact splitting `mu_0^{m/2} omega = dx_1 ^ … ^ dx_m ^ alpha + sum_i x_i
/// alpha_i` of a tame form.
#[derive(Clone, Debug)]
pub struct TameDecomposition {
    /// Coefficient of the full normal frame.
    pub alpha: Form,
    /// Correction forms keyed by 0-based coordinate index; only nonzero
    /// entries are kept.
    pub correction: Vec<(usize, Form)>,
}

/// A form on the singular locus `Y`, produced by the residue map.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueForm {
    form: Form,
    m: usize,
}

impl ResidueForm {
    /// The underlying form; it involves neither the normal coordinates nor
    /// their differentials.
    pub fn form(&self) -> &Form {
        &self.form
    }

    /// Codimension of the locus the residue lives on.
    pub fn codim(&self) -> usize {
        self.m
    }

    /// Degree on `Y`; `None` for the zero form or mixed degrees.
    pub fn degree(&self) -> Option<usize> {
        self.form.degree()
    }

    /// Orientation convention the normalizing constant refers to: the fibre
    /// factor `dx_1 ^ … ^ dx_m` is split off in front of the base
    /// orientation `dx_{m+1} ^ … ^ dx_n`.
    pub fn orientation(&self) -> &'static str {
        "fibre dx_1^…^dx_m first, base dx_{m+1}^…^dx_n second"
    }

    /// Exterior derivative along `Y`.
    pub fn d(&self) -> ResidueForm {
        ResidueForm {
            form: self.form.d(&[]),
            m: self.m,
        }
    }
}

/// Euclidean division of `p` by `mu_0 = x_1^2 + … + x_m^2`, treated as a
/// monic quadratic in `x_m`.  Returns `(q, rem)` with `p = q mu_0 + rem` and
/// `rem` of degree at most one in `x_m`; since the complement variables form
/// an integral domain, `rem` vanishes exactly when `p` is divisible.
fn divide_by_quadric(p: &Polynomial, m: usize) -> (Polynomial, Polynomial) {
    let n = p.vars();
    let pivot = m - 1;
    let mu = Polynomial::radius_squared(n, m);
    let mut rem = p.clone();
    let mut quot = Polynomial::zero(n);
    loop {
        let lead = rem
            .terms()
            .filter(|(e, _)| e.0[pivot] >= 2)
            .max_by_key(|(e, _)| e.0[pivot])
            .map(|(e, &v)| (e.clone(), v));
        let Some((mut e, v)) = lead else {
            break;
        };
        e.0[pivot] -= 2;
        let step = Polynomial::monomial(e, v);
        quot = quot.add(&step);
        rem = rem.sub(&step.mul(&mu));
    }
    (quot, rem)
}

/// Exact quotient of `p` by `mu_0^k`, or `None` when `p` is not in the ideal.
fn divide_power(p: &Polynomial, m: usize, k: u32) -> Option<Polynomial> {
    let mut out = p.clone();
    for _ in 0..k {
        let (q, rem) = divide_by_quadric(&out, m);
        if !rem.is_zero() {
            return None;
        }
        out = q;
    }
    Some(out)
}

/// Divides every coefficient of `form` by `mu_0^k`; `None` when any term
/// fails.
fn divide_form(form: &Form, m: usize, k: u32) -> Option<Form> {
    if k == 0 {
        return Some(form.clone());
    }
    let mut out = Form::zero(form.vars());
    for (frame, bag, poly) in form.terms() {
        let q = divide_power(poly, m, k)?;
        let term = Form::term(q, bag.clone(), &frame_indices(frame))
            .expect("existing frames stay valid");
        out = out.add(&term);
    }
    Some(out)
}

/// Decides tameness of `omega` by exact division: `mu_0^{m/2} omega` and
/// `mu_0^{m/2-1} d(mu_0) ^ omega` must both clear the denominator.  The
/// report carries the cleared forms as witnesses where they exist.
pub fn tame_check(omega: &SingularForm) -> Result<TameReport> {
    let m = omega.codim();
    if m % 2 != 0 {
        return Err(ResidueError::OddCodimension { m });
    }
    let half = (m as u32) / 2;
    let n = omega.vars();
    let power = omega.power();
    let cleared = if power <= half {
        let lift = Polynomial::radius_squared(n, m).pow(half - power);
        Some(omega.numerator().mul_scalar(&lift))
    } else {
        divide_form(omega.numerator(), m, power - half)
    };
    let wedge = omega.dmu().wedge(omega.numerator())?;
    let boundary = if power + 1 <= half {
        let lift = Polynomial::radius_squared(n, m).pow(half - 1 - power);
        Some(wedge.mul_scalar(&lift))
    } else {
        divide_form(&wedge, m, power + 1 - half)
    };
    let tame = cleared.is_some() && boundary.is_some();
    Ok(TameReport {
        tame,
        cleared,
        boundary,
    })
}

/// Splits the cleared numerator of a tame form into the full-normal-frame
/// part `alpha` and corrections in the ideal `(x_1, …, x_m)`.
///
/// Terms whose frame contains every normal differential feed `alpha`; for
/// the rest, tameness forces every monomial to contain a normal variable,
/// and each is assigned to the slot of its first one.  The reconstruction
/// `dx_1 ^ … ^ dx_m ^ alpha + sum_i x_i alpha_i` is exact.
pub fn varia_decompose(omega: &SingularForm) -> Result<TameDecomposition> {
    let report = tame_check(omega)?;
    if !report.tame {
        return Err(ResidueError::NotTame);
    }
    let cleared = report.cleared.expect("tame reports carry the cleared form");
    let n = omega.vars();
    let m = omega.codim();
    let block: Vec<usize> = (0..m).collect();
    let block_mask = frame_mask(&block);
    let mut alpha = Form::zero(n);
    let mut slots: Vec<Form> = vec![Form::zero(n); m];
    for (frame, bag, poly) in cleared.terms() {
        if frame & block_mask == block_mask {
            let rest = frame_indices(frame & !block_mask);
            alpha = alpha.add(&Form::term(poly.clone(), bag.clone(), &rest)?);
            continue;
        }
        let mut buckets: Vec<Polynomial> = vec![Polynomial::zero(n); m];
        for (e, &v) in poly.terms() {
            let Some(i) = (0..m).find(|&i| e.0[i] > 0) else {
                return Err(ResidueError::NotTame);
            };
            let mut lower = e.clone();
            lower.0[i] -= 1;
            buckets[i].add_term(lower, v);
        }
        let indices = frame_indices(frame);
        for (i, bucket) in buckets.into_iter().enumerate() {
            if !bucket.is_zero() {
                slots[i] = slots[i].add(&Form::term(bucket, bag.clone(), &indices)?);
            }
        }
    }
    let correction = slots
        .into_iter()
        .enumerate()
        .filter(|(_, f)| !f.is_zero())
        .collect();
    Ok(TameDecomposition { alpha, correction })
}

/// Residue of a tame form: the `alpha` part of the decomposition restricted
/// to `Y` and scaled by `2 pi^r / (r-1)!` where `m = 2r`.
pub fn residue_map(omega: &SingularForm) -> Result<ResidueForm> {
    let decomposition = varia_decompose(omega)?;
    let m = omega.codim();
    let mut factorial = 1.0;
    for k in 2..(m / 2) {
        factorial *= k as f64;
    }
    let constant = 2.0 * PI.powi((m / 2) as i32) / factorial;
    let block: Vec<usize> = (0..m).collect();
    let form = decomposition
        .alpha
        .restrict_zero(&block, &[block.clone()])
        .scale(crate::cr(constant));
    Ok(ResidueForm { form, m })
}

/// Assembles the doubly logarithmic form
///
/// ```text
/// (dz_1/z_1) ^ (dzbar_1/zbar_1) ^ omega11 + (dz_1/z_1) ^ omega10
///   + (dzbar_1/zbar_1) ^ omega01 + omega00
/// ```
///
/// in the real coordinates `z_1 = x_1 + i x_2`, over the common denominator
/// `mu_0 = |z_1|^2`.
pub fn bilogarithmic_form(
    omega11: &Form,
    omega10: &Form,
    omega01: &Form,
    omega00: &Form,
) -> Result<SingularForm> {
    let n = omega11.vars();
    for f in [omega10, omega01, omega00] {
        if f.vars() != n {
            return Err(ResidueError::VarMismatch {
                expected: n,
                got: f.vars(),
            });
        }
    }
    let x1 = Polynomial::coordinate(n, 0);
    let x2 = Polynomial::coordinate(n, 1);
    let dx1 = Form::dx(n, 0);
    let dx2 = Form::dx(n, 1);
    // mu_0 (dz_1/z_1) = (x_1 - i x_2)(dx_1 + i dx_2), and conjugate.
    let hol = dx1
        .add(&dx2.scale(crate::c(0.0, 1.0)))
        .mul_scalar(&x1.add(&x2.scale(crate::c(0.0, -1.0))));
    let anti = dx1
        .add(&dx2.scale(crate::c(0.0, -1.0)))
        .mul_scalar(&x1.add(&x2.scale(crate::c(0.0, 1.0))));
    // mu_0 (dz_1/z_1) ^ (dzbar_1/zbar_1) = -2i dx_1 ^ dx_2.
    let top = dx1.wedge(&dx2)?.scale(crate::c(0.0, -2.0));
    let mu = Polynomial::radius_squared(n, 2);
    let numerator = top
        .wedge(omega11)?
        .add(&hol.wedge(omega10)?)
        .add(&anti.wedge(omega01)?)
        .add(&omega00.mul_scalar(&mu));
    Ok(SingularForm::new(numerator, 2, 1)?)
}

/// Residue of a doubly logarithmic form, read directly off its decomposition:
/// `-4 pi i` times the restriction of the `(dz_1/z_1) ^ (dzbar_1/zbar_1)`
/// coefficient.  Agrees exactly with [`residue_map`] applied to
/// [`bilogarithmic_form`] of the same data.
pub fn residue_complex(
    omega11: &Form,
    omega10: &Form,
    omega01: &Form,
    omega00: &Form,
) -> Result<ResidueForm> {
    let n = omega11.vars();
    for f in [omega10, omega01, omega00] {
        if f.vars() != n {
            return Err(ResidueError::VarMismatch {
                expected: n,
                got: f.vars(),
            });
        }
    }
    if n < 2 {
        return Err(ResidueError::Form(FormError::BadCodimension { m: 2, n }));
    }
    let block = vec![0, 1];
    let form = omega11
        .restrict_zero(&block, &[block.clone()])
        .scale(crate::c(0.0, -4.0 * PI));
    Ok(ResidueForm { form, m: 2 })
}

/// Pairing of a residue with a smooth windowed form over the locus `Y`: the
/// coefficient of the base orientation in `R ^ phi|_Y`, integrated over the
/// base coordinates.
pub fn pair_on_y(residue: &ResidueForm, phi: &Form, opts: &QuadOptions) -> Result<C> {
    let n = residue.form.vars();
    if phi.vars() != n {
        return Err(ResidueError::VarMismatch {
            expected: n,
            got: phi.vars(),
        });
    }
    let m = residue.m;
    let block: Vec<usize> = (0..m).collect();
    let restricted = phi.restrict_zero(&block, &[block.clone()]);
    if let (Some(r), Some(p)) = (residue.form.degree(), restricted.degree()) {
        if r + p != n - m {
            return Err(ResidueError::DegreeMismatch {
                residue: r,
                phi: p,
                dim: n - m,
            });
        }
    }
    let product = residue.form.wedge(&restricted)?;
    let base: Vec<usize> = (m..n).collect();
    let full = frame_mask(&base);
    let mut cache = BaseCache::new(*opts);
    let mut acc = C::default();
    for (frame, bag, poly) in product.terms() {
        if frame != full {
            continue;
        }
        acc += base_integral(poly, &base, &bag.base_factors(), &mut cache)?;
    }
    Ok(acc)
}
