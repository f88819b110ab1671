//! JSON problem descriptions: schema, validation, and conversion into the
//! library's form and measure types.
//!
//! A problem file describes one integrand.  Three kinds are supported and
//! exactly one must be selected:
//!
//! * `codim`: the numerator over `mu_0^power` with `mu_0 = x_1^2 + ... +
//!   x_m^2`, optionally against the conformal measure `e^{2 phi} mu_0`.
//! * `blocks`: a normal-crossing product, one squared-radius factor per
//!   coordinate block, with per-component `powers` and optional `phis`.
//! * `boundary`: a half-space integrand over `x_1^power` on `{x_1 > 0}`,
//!   optionally with the boundary scale `x_1 e^{phi}`.
//!
//! Every coordinate reference in a file is 1-based; conversion to the
//! 0-based library indices happens here.  Complex numbers are `[re, im]`
//! pairs, monomials are exponent arrays of length `n`, and wedge frames are
//! arrays of coordinate indices.  Parsing normalizes each frame to sorted
//! order, folding the permutation sign into the coefficient, and fills in
//! explicit window tags for every term that omits them, so a reparsed echo
//! of the spec reproduces it exactly.

use finpart_core::exterior::{
    frame_with_sign, Form, MorseBott, MultiIndex, Polynomial, SingularForm, Window, WindowBag,
    WindowSlot,
};
use finpart_core::multi::{BoundaryProblem, CrossingProblem};
use finpart_core::c;
use serde::{Deserialize, Serialize};

/// Largest accepted ambient dimension.
pub const MAX_VARS: usize = 16;
/// Largest accepted denominator power.
pub const MAX_POWER: u32 = 8;
/// Largest accepted exponent total degree per monomial.
pub const MAX_DEGREE: u32 = 16;
/// Largest accepted window derivative order.
pub const MAX_ORDER: u32 = 8;

/// A schema or range violation, carrying the path of the offending field.
#[derive(Clone, Debug)]
pub struct SpecError(pub String);

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for SpecError {}

type Result<T> = std::result::Result<T, SpecError>;

fn fail<T>(path: &str, message: impl std::fmt::Display) -> Result<T> {
    Err(SpecError(format!("{path}: {message}")))
}

/// Engine selection, either from the file or from `--engine`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Mellin,
    Cutoff,
    Both,
}

impl std::fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EngineChoice::Mellin => write!(f, "mellin"),
            EngineChoice::Cutoff => write!(f, "cutoff"),
            EngineChoice::Both => write!(f, "both"),
        }
    }
}

/// Which slot a window factor occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotTag {
    /// Cutoff in the squared radius of a component block.
    Radial,
    /// Cutoff in the square of a single coordinate.
    Base,
}

/// One window factor attached to a term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowTag {
    pub slot: SlotTag,
    /// Component index (1-based) for radial slots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    /// Coordinate index (1-based) for base slots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<usize>,
    /// Derivative order of the window profile.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub order: u32,
    /// Inner radius, overriding the file-level window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    /// Outer radius, overriding the file-level window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

/// One monomial term of a numerator or test form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Complex coefficient as `[re, im]`.
    pub coefficient: [f64; 2],
    /// Exponent of each coordinate; length `n`.
    pub monomial: Vec<u32>,
    /// Wedge frame as 1-based coordinate indices.
    pub frame: Vec<usize>,
    /// Window factors; filled with the kind's defaults when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<WindowTag>>,
}

/// One real monomial of a conformal exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub coefficient: f64,
    pub monomial: Vec<u32>,
}

/// File-level cutoff window radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub inner: f64,
    pub outer: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            inner: 0.5,
            outer: 0.9,
        }
    }
}

/// A validated problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Ambient dimension.
    pub n: usize,
    /// Codimension of the singular subspace `{x_1 = ... = x_m = 0}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codim: Option<usize>,
    /// Coordinate blocks (1-based) of a normal-crossing problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    /// Marks a half-space problem singular on the wall `{x_1 = 0}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<bool>,
    /// Denominator power for codim and boundary problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    /// Per-component denominator powers for crossing problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<u32>>,
    /// Numerator terms.
    pub numerator: Vec<TermSpec>,
    /// Conformal exponent for codim and boundary problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<MonomialSpec>>,
    /// Per-component conformal exponents for crossing problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<Vec<MonomialSpec>>>,
    /// Default window radii; `{inner: 0.5, outer: 0.9}` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    /// Smooth windowed form used for residue pairing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_form: Option<Vec<TermSpec>>,
    /// Default engine when the command line does not choose one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineChoice>,
    /// Default comparison tolerance for checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Default seed for generated test data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// The three supported problem shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Codim,
    Crossing,
    Boundary,
}

impl ProblemSpec {
    /// Which shape the spec selects; valid only after [`parse_problem`].
    pub fn kind(&self) -> ProblemKind {
        if self.blocks.is_some() {
            ProblemKind::Crossing
        } else if self.boundary == Some(true) {
            ProblemKind::Boundary
        } else {
            ProblemKind::Codim
        }
    }

    /// The file-level window radii with defaults applied.
    pub fn window_radii(&self) -> WindowSpec {
        self.window.unwrap_or_default()
    }

    /// Smallest inner radius appearing in any window of the numerator.
    pub fn min_inner(&self) -> f64 {
        let base = self.window_radii().inner;
        let mut inner = base;
        for term in &self.numerator {
            for tag in term.windows.as_deref().unwrap_or(&[]) {
                inner = inner.min(tag.inner.unwrap_or(base));
            }
        }
        inner
    }
}

/// Parses and validates a problem document, returning the normalized spec.
///
/// Diagnostics name the path of the offending field, e.g. `window.inner` or
/// `numerator[2].frame`.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let mut spec: ProblemSpec = serde_path_to_error::deserialize(&mut deserializer)
        .map_err(|e| SpecError(format!("{}: {}", e.path(), e.inner())))?;
    validate(&mut spec)?;
    Ok(spec)
}

fn validate(spec: &mut ProblemSpec) -> Result<()> {
    if spec.n == 0 || spec.n > MAX_VARS {
        return fail("n", format_args!("must be between 1 and {MAX_VARS}"));
    }
    let n = spec.n;

    let kinds = usize::from(spec.codim.is_some())
        + usize::from(spec.blocks.is_some())
        + usize::from(spec.boundary == Some(true));
    if kinds != 1 {
        return fail(
            "codim",
            "exactly one of codim, blocks, or boundary must select the problem kind",
        );
    }
    let kind = spec.kind();

    // Ownership map for crossing coordinates: component index or MAX.
    let mut owner = vec![usize::MAX; n];
    let component_count = match kind {
        ProblemKind::Codim => {
            let m = spec.codim.unwrap();
            if m == 0 || m > n {
                return fail("codim", format_args!("must be between 1 and n = {n}"));
            }
            if spec.power.is_none() {
                return fail("power", "required for codim problems");
            }
            if spec.powers.is_some() {
                return fail("powers", "applies only to crossing problems");
            }
            for (i, o) in owner.iter_mut().enumerate().take(m) {
                let _ = i;
                *o = 0;
            }
            1
        }
        ProblemKind::Crossing => {
            let blocks = spec.blocks.as_ref().unwrap();
            if blocks.is_empty() {
                return fail("blocks", "at least one component block required");
            }
            for (i, block) in blocks.iter().enumerate() {
                if block.is_empty() {
                    return fail(&format!("blocks[{i}]"), "component block is empty");
                }
                if block.len() % 2 != 0 {
                    return fail(
                        &format!("blocks[{i}]"),
                        "component blocks must have even size",
                    );
                }
                for (j, &coord) in block.iter().enumerate() {
                    if coord == 0 || coord > n {
                        return fail(
                            &format!("blocks[{i}][{j}]"),
                            format_args!("coordinate must be between 1 and n = {n}"),
                        );
                    }
                    if owner[coord - 1] != usize::MAX {
                        return fail(
                            &format!("blocks[{i}][{j}]"),
                            format_args!("coordinate {coord} appears in two blocks"),
                        );
                    }
                    owner[coord - 1] = i;
                }
            }
            match &spec.powers {
                None => return fail("powers", "required for crossing problems"),
                Some(powers) if powers.len() != blocks.len() => {
                    return fail(
                        "powers",
                        format_args!(
                            "expected one power per block ({}), got {}",
                            blocks.len(),
                            powers.len()
                        ),
                    );
                }
                Some(powers) => {
                    for (i, &p) in powers.iter().enumerate() {
                        if p > MAX_POWER {
                            return fail(
                                &format!("powers[{i}]"),
                                format_args!("at most {MAX_POWER}"),
                            );
                        }
                    }
                }
            }
            if spec.power.is_some() {
                return fail("power", "crossing problems take powers, one per block");
            }
            if spec.phi.is_some() {
                return fail("phi", "crossing problems take phis, one per block");
            }
            blocks.len()
        }
        ProblemKind::Boundary => {
            if spec.power.is_none() {
                return fail("power", "required for boundary problems");
            }
            if spec.powers.is_some() {
                return fail("powers", "applies only to crossing problems");
            }
            owner[0] = 0;
            0
        }
    };
    if let Some(p) = spec.power {
        if p > MAX_POWER {
            return fail("power", format_args!("at most {MAX_POWER}"));
        }
    }

    if let Some(window) = &spec.window {
        check_radii("window", window.inner, window.outer)?;
    } else {
        spec.window = Some(WindowSpec::default());
    }

    if spec.numerator.is_empty() {
        return fail("numerator", "at least one term required");
    }
    let defaults = default_tags(kind, n, spec.codim, &owner, component_count);
    for (i, term) in spec.numerator.iter_mut().enumerate() {
        validate_term(
            &format!("numerator[{i}]"),
            term,
            n,
            kind,
            component_count,
            &owner,
            &defaults,
        )?;
    }
    if let Some(test_form) = &mut spec.test_form {
        if test_form.is_empty() {
            return fail("test_form", "at least one term required when present");
        }
        for (i, term) in test_form.iter_mut().enumerate() {
            validate_term(
                &format!("test_form[{i}]"),
                term,
                n,
                kind,
                component_count,
                &owner,
                &defaults,
            )?;
        }
    }

    if let Some(phi) = &spec.phi {
        validate_exponent("phi", phi, n)?;
    }
    if let Some(phis) = &spec.phis {
        if kind != ProblemKind::Crossing {
            return fail("phis", "applies only to crossing problems");
        }
        if phis.len() != component_count {
            return fail(
                "phis",
                format_args!("expected one exponent per block ({component_count})"),
            );
        }
        for (i, phi) in phis.iter().enumerate() {
            validate_exponent(&format!("phis[{i}]"), phi, n)?;
        }
    }

    if let Some(tol) = spec.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return fail("tol", "must be a positive finite number");
        }
    }
    Ok(())
}

fn check_radii(path: &str, inner: f64, outer: f64) -> Result<()> {
    if !(inner > 0.0 && inner.is_finite()) {
        return fail(&format!("{path}.inner"), "must be a positive finite number");
    }
    if !(outer.is_finite() && inner < outer) {
        return fail(
            &format!("{path}.inner"),
            format_args!("inner radius {inner} must lie below the outer radius {outer}"),
        );
    }
    Ok(())
}

/// The window tags a term gets when it declares none: one radial cutoff per
/// component and one base cutoff per unowned coordinate (for boundary
/// problems, a base cutoff on every coordinate including the wall).
fn default_tags(
    kind: ProblemKind,
    n: usize,
    codim: Option<usize>,
    owner: &[usize],
    component_count: usize,
) -> Vec<WindowTag> {
    let mut tags = Vec::new();
    let blank = WindowTag {
        slot: SlotTag::Radial,
        component: None,
        coord: None,
        order: 0,
        inner: None,
        outer: None,
    };
    match kind {
        ProblemKind::Codim => {
            tags.push(WindowTag {
                component: Some(1),
                ..blank.clone()
            });
            let m = codim.unwrap_or(n);
            for coord in m + 1..=n {
                tags.push(WindowTag {
                    slot: SlotTag::Base,
                    coord: Some(coord),
                    ..blank.clone()
                });
            }
        }
        ProblemKind::Crossing => {
            for component in 1..=component_count {
                tags.push(WindowTag {
                    component: Some(component),
                    ..blank.clone()
                });
            }
            for coord in 1..=n {
                if owner[coord - 1] == usize::MAX {
                    tags.push(WindowTag {
                        slot: SlotTag::Base,
                        coord: Some(coord),
                        ..blank.clone()
                    });
                }
            }
        }
        ProblemKind::Boundary => {
            for coord in 1..=n {
                tags.push(WindowTag {
                    slot: SlotTag::Base,
                    coord: Some(coord),
                    ..blank.clone()
                });
            }
        }
    }
    tags
}

fn validate_term(
    path: &str,
    term: &mut TermSpec,
    n: usize,
    kind: ProblemKind,
    component_count: usize,
    owner: &[usize],
    defaults: &[WindowTag],
) -> Result<()> {
    if !(term.coefficient[0].is_finite() && term.coefficient[1].is_finite()) {
        return fail(&format!("{path}.coefficient"), "must be finite");
    }
    if term.monomial.len() != n {
        return fail(
            &format!("{path}.monomial"),
            format_args!("expected n = {n} exponents, got {}", term.monomial.len()),
        );
    }
    if term.monomial.iter().sum::<u32>() > MAX_DEGREE {
        return fail(
            &format!("{path}.monomial"),
            format_args!("total degree at most {MAX_DEGREE}"),
        );
    }
    for (j, &index) in term.frame.iter().enumerate() {
        if index == 0 || index > n {
            return fail(
                &format!("{path}.frame[{j}]"),
                format_args!("coordinate must be between 1 and n = {n}"),
            );
        }
        if term.frame[..j].contains(&index) {
            return fail(
                &format!("{path}.frame"),
                format_args!("repeated coordinate {index}"),
            );
        }
    }
    // Normalize the frame to sorted order; the permutation sign folds into
    // the coefficient.
    let zero_based: Vec<usize> = term.frame.iter().map(|&i| i - 1).collect();
    let (_, sign) = frame_with_sign(&zero_based, n)
        .map_err(|e| SpecError(format!("{path}.frame: {e}")))?;
    term.frame.sort_unstable();
    if sign < 0.0 {
        term.coefficient = [-term.coefficient[0], -term.coefficient[1]];
    }

    match &mut term.windows {
        None => term.windows = Some(defaults.to_vec()),
        Some(tags) => {
            for (j, tag) in tags.iter().enumerate() {
                validate_tag(
                    &format!("{path}.windows[{j}]"),
                    tag,
                    n,
                    kind,
                    component_count,
                    owner,
                )?;
            }
        }
    }
    Ok(())
}

fn validate_tag(
    path: &str,
    tag: &WindowTag,
    n: usize,
    kind: ProblemKind,
    component_count: usize,
    owner: &[usize],
) -> Result<()> {
    match tag.slot {
        SlotTag::Radial => {
            if kind == ProblemKind::Boundary {
                return fail(
                    &format!("{path}.slot"),
                    "radial windows do not apply to boundary problems",
                );
            }
            let component = tag.component.unwrap_or(1);
            if component == 0 || component > component_count {
                return fail(
                    &format!("{path}.component"),
                    format_args!("must be between 1 and {component_count}"),
                );
            }
            if tag.coord.is_some() {
                return fail(&format!("{path}.coord"), "radial windows take a component");
            }
        }
        SlotTag::Base => {
            let coord = match tag.coord {
                Some(coord) if coord >= 1 && coord <= n => coord,
                _ => {
                    return fail(
                        &format!("{path}.coord"),
                        format_args!("base windows need a coordinate between 1 and n = {n}"),
                    )
                }
            };
            if kind != ProblemKind::Boundary && owner[coord - 1] != usize::MAX {
                return fail(
                    &format!("{path}.coord"),
                    format_args!("coordinate {coord} belongs to a singular block"),
                );
            }
            if tag.component.is_some() {
                return fail(
                    &format!("{path}.component"),
                    "base windows take a coordinate",
                );
            }
        }
    }
    if tag.order > MAX_ORDER {
        return fail(&format!("{path}.order"), format_args!("at most {MAX_ORDER}"));
    }
    match (tag.inner, tag.outer) {
        (None, None) => Ok(()),
        (Some(inner), Some(outer)) => check_radii(path, inner, outer),
        _ => fail(path, "inner and outer radii must be given together"),
    }
}

fn validate_exponent(path: &str, terms: &[MonomialSpec], n: usize) -> Result<()> {
    for (i, term) in terms.iter().enumerate() {
        if !term.coefficient.is_finite() {
            return fail(&format!("{path}[{i}].coefficient"), "must be finite");
        }
        if term.monomial.len() != n {
            return fail(
                &format!("{path}[{i}].monomial"),
                format_args!("expected n = {n} exponents, got {}", term.monomial.len()),
            );
        }
        if term.monomial.iter().sum::<u32>() > MAX_DEGREE {
            return fail(
                &format!("{path}[{i}].monomial"),
                format_args!("total degree at most {MAX_DEGREE}"),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Conversion into library objects.
// ---------------------------------------------------------------------------

/// The library-side shape of a parsed problem.
pub enum BuiltProblem {
    Codim {
        omega: SingularForm,
        phi: Option<Polynomial>,
    },
    Crossing {
        /// The standard-measure problem; conformal factors kept separately.
        problem: CrossingProblem,
        phis: Option<Vec<Polynomial>>,
    },
    Boundary {
        /// The standard-scale problem; the conformal factor kept separately.
        problem: BoundaryProblem,
        phi: Option<Polynomial>,
    },
}

/// A fully constructed problem plus the optional pairing form.
pub struct Built {
    pub problem: BuiltProblem,
    pub test_form: Option<Form>,
}

/// Converts a normalized spec into library objects.
pub fn build(spec: &ProblemSpec) -> Result<Built> {
    let numerator = build_form(&spec.numerator, spec)?;
    let problem = match spec.kind() {
        ProblemKind::Codim => {
            let m = spec.codim.unwrap();
            let omega = SingularForm::new(numerator, m, spec.power.unwrap())
                .map_err(|e| SpecError(format!("numerator: {e}")))?;
            BuiltProblem::Codim {
                omega,
                phi: spec.phi.as_deref().map(|p| build_exponent(p, spec.n)),
            }
        }
        ProblemKind::Crossing => {
            let blocks = spec.blocks.as_ref().unwrap();
            let powers = spec.powers.as_ref().unwrap();
            let components: Vec<(Vec<usize>, u32)> = blocks
                .iter()
                .zip(powers)
                .map(|(block, &p)| (block.iter().map(|&c| c - 1).collect(), p))
                .collect();
            let problem = CrossingProblem::new(numerator, &components)
                .map_err(|e| SpecError(format!("numerator: {e}")))?;
            BuiltProblem::Crossing {
                problem,
                phis: spec
                    .phis
                    .as_ref()
                    .map(|ps| ps.iter().map(|p| build_exponent(p, spec.n)).collect()),
            }
        }
        ProblemKind::Boundary => {
            let problem = BoundaryProblem::new(numerator, spec.power.unwrap())
                .map_err(|e| SpecError(format!("numerator: {e}")))?;
            BuiltProblem::Boundary {
                problem,
                phi: spec.phi.as_deref().map(|p| build_exponent(p, spec.n)),
            }
        }
    };
    let test_form = match &spec.test_form {
        Some(terms) => Some(build_form(terms, spec)?),
        None => None,
    };
    Ok(Built { problem, test_form })
}

/// Assembles a form from normalized term specs.
pub fn build_form(terms: &[TermSpec], spec: &ProblemSpec) -> Result<Form> {
    let n = spec.n;
    let radii = spec.window_radii();
    let mut form = Form::zero(n);
    for term in terms {
        let coefficient = c(term.coefficient[0], term.coefficient[1]);
        let poly = Polynomial::monomial(MultiIndex(term.monomial.clone()), coefficient);
        let mut bag = WindowBag::empty();
        for tag in term.windows.as_deref().unwrap_or(&[]) {
            let mut window =
                Window::new(tag.inner.unwrap_or(radii.inner), tag.outer.unwrap_or(radii.outer));
            for _ in 0..tag.order {
                window = window.derivative();
            }
            let slot = match tag.slot {
                SlotTag::Radial => WindowSlot::Radial(tag.component.unwrap_or(1) - 1),
                SlotTag::Base => WindowSlot::Base(tag.coord.unwrap() - 1),
            };
            bag.push(slot, window);
        }
        let frame: Vec<usize> = term.frame.iter().map(|&i| i - 1).collect();
        let piece = Form::term(poly, bag, &frame)
            .map_err(|e| SpecError(format!("numerator: {e}")))?;
        form = form.add(&piece);
    }
    Ok(form)
}

/// Assembles a real conformal exponent.
pub fn build_exponent(terms: &[MonomialSpec], n: usize) -> Polynomial {
    let mut poly = Polynomial::zero(n);
    for term in terms {
        poly.add_term(
            MultiIndex(term.monomial.clone()),
            finpart_core::cr(term.coefficient),
        );
    }
    poly
}

/// The standard measure of a codim problem.
pub fn standard_measure(omega: &SingularForm) -> MorseBott {
    MorseBott::standard(omega.vars(), omega.codim()).expect("validated dimensions")
}

///// The measure a codim problem integrates against: conformal when a `phi`
/// is present, standard otherwise.
pub fn selected_measure(omega: &SingularForm, phi: &Option<Polynomial>) -> Result<MorseBott> {
    match phi {
        Some(phi) => MorseBott::conformal(omega.codim(), phi.clone())
            .map_err(|e| SpecError(format!("phi: {e}"))),
        None => Ok(standard_measure(omega)),
    }
}
