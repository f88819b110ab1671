//! Command implementations and the error-to-exit-code policy.
//!
//! Every command receives the parsed problem in a [`Ctx`] and fills one
//! section of the report.  Failures split into two classes: invalid input
//! (exit 2), covering schema, range, and shape violations, and numerical
//! failure (exit 3), covering pole hits, stalled root finding, and
//! rank-deficient expansion fits.  A report whose check verdicts contain a
//! failure exits with 1.

use finpart_core::cutoff::{
    cutoff_integral, fit_expansion, CutoffError, CutoffEvaluator, CutoffOptions, EpsilonGrid,
    FitReport,
};
use finpart_core::exterior::{
    alpha_form, Form, FormError, MorseBott, MultiIndex, Polynomial, SingularForm, Window,
    WindowBag, WindowSlot,
};
use finpart_core::mellin::{
    expansion, AsymptoticExpansion, MellinError, MellinOptions, ZetaEvaluator,
};
use finpart_core::multi::{
    boundary_cutoff_expansion, boundary_cutoff_integral, boundary_expansion, boundary_residue,
    boundary_zeta, crossing_conformal_check, crossing_expansion, multi_zeta, BoundaryProblem,
    CrossingOptions, CrossingProblem, MultiError,
};
use finpart_core::quadrature::{QuadOptions, QuadratureError};
use finpart_core::residue::{pair_on_y, residue_map, tame_check, ResidueError};
use finpart_core::{cr, C};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::report::{
    form_terms, mask_string, pair, CheckVerdict, CrossingPayload, ExpansionPayload,
    IntegralPayload, PoleEntry, PolesPayload, Report, ResiduePayload, ValuePayload, ZetaPayload,
};
use crate::spec::{
    selected_measure, standard_measure, Built, BuiltProblem, EngineChoice, ProblemSpec, SpecError,
};

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 2: the input names a problem or request outside the contract.
    Invalid(String),
    /// Exit 3: the computation itself broke down.
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Failure {
        Failure::Invalid(e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

pub fn quad_failure(e: QuadratureError) -> Failure {
    numerical(e)
}

pub fn mellin_failure(e: MellinError) -> Failure {
    match e {
        MellinError::NearPole { .. } => numerical(e),
        MellinError::Quadrature(q) => quad_failure(q),
        _ => invalid(e),
    }
}

pub fn cutoff_failure(e: CutoffError) -> Failure {
    match e {
        CutoffError::RootFind { .. }
        | CutoffError::IllConditioned { .. }
        | CutoffError::TooFewSamples { .. } => numerical(e),
        CutoffError::Quadrature(q) => quad_failure(q),
        _ => invalid(e),
    }
}

pub fn multi_failure(e: MultiError) -> Failure {
    match e {
        MultiError::NearPole { .. } | MultiError::PoleHyperplane { .. } => numerical(e),
        MultiError::Cutoff(c) => cutoff_failure(c),
        MultiError::Quadrature(q) => quad_failure(q),
        _ => invalid(e),
    }
}

pub fn residue_failure(e: ResidueError) -> Failure {
    match e {
        ResidueError::Quadrature(q) => quad_failure(q),
        _ => invalid(e),
    }
}

fn form_failure(e: FormError) -> Failure {
    invalid(e)
}

/// Which law family a `check` invocation verifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Conformal,
    Exact,
    Residue,
    Homogeneity,
    Parity,
    Crossing,
    Boundary,
    All,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Conformal => "conformal",
            CheckKind::Exact => "exact",
            CheckKind::Residue => "residue",
            CheckKind::Homogeneity => "homogeneity",
            CheckKind::Parity => "parity",
            CheckKind::Crossing => "crossing",
            CheckKind::Boundary => "boundary",
            CheckKind::All => "all",
        }
    }
}

/// Resolved settings shared by every command.
pub struct Ctx {
    pub spec: ProblemSpec,
    pub built: Built,
    pub engine: EngineChoice,
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Ctx {
    fn tol_or(&self, fallback: f64) -> f64 {
        self.tol.unwrap_or(fallback)
    }

    fn rng(&self) -> StdRng {
        StdRng::seed_from_u64(self.seed)
    }
}

fn mopts() -> MellinOptions {
    MellinOptions::default()
}

fn copts() -> CutoffOptions {
    CutoffOptions::default()
}

fn qopts() -> QuadOptions {
    QuadOptions::default()
}

/// Parses a complex command-line argument of the form `RE,IM` (or `RE`).
pub fn parse_complex(text: &str) -> Result<C> {
    let mut parts = text.splitn(2, ',');
    let re: f64 = parts
        .next()
        .unwrap_or("")
        .trim()
        .parse()
        .map_err(|_| Failure::Invalid(format!("--s expects RE,IM; got `{text}`")))?;
    let im: f64 = match parts.next() {
        Some(part) => part
            .trim()
            .parse()
            .map_err(|_| Failure::Invalid(format!("--s expects RE,IM; got `{text}`")))?,
        None => 0.0,
    };
    if !(re.is_finite() && im.is_finite()) {
        return Err(Failure::Invalid(format!("--s must be finite; got `{text}`")));
    }
    Ok(C::new(re, im))
}

// ---------------------------------------------------------------------------
// Engine plumbing.
// ---------------------------------------------------------------------------

/// Number of divergent coefficients the expansion of a codim problem
/// reports.
fn divergent_count(m: usize, power: u32) -> usize {
    let max_k = 2 * i64::from(power) - m as i64;
    (1..=max_k.max(0)).filter(|k| *k as usize % 2 == m % 2).count()
}

/// Cutoff grid sized so the fit keeps spare rows beyond the reported and
/// nuisance columns.
fn fit_grid(inner: f64, reported: usize) -> Result<EpsilonGrid> {
    EpsilonGrid::geometric(inner / 10.0, 0.7, (reported + 8).max(12)).map_err(cutoff_failure)
}

/// Samples and fits the cutoff expansion of a codim problem.
fn codim_fit(omega: &SingularForm, mu: &MorseBott) -> Result<FitReport> {
    let mut evaluator = CutoffEvaluator::new(omega, mu, &copts()).map_err(cutoff_failure)?;
    let reported = divergent_count(omega.codim(), omega.power()) + 2;
    let grid = fit_grid(evaluator.effective_inner(), reported)?;
    let mut samples = Vec::with_capacity(grid.len());
    for &eps in grid.values() {
        samples.push((eps, evaluator.integral(eps).map_err(cutoff_failure)?));
    }
    fit_expansion(&samples, omega.codim(), omega.power()).map_err(cutoff_failure)
}

/// Samples and fits the cutoff expansion of a boundary problem.
fn boundary_fit(problem: &BoundaryProblem, inner: f64) -> Result<FitReport> {
    let reported = problem.power().saturating_sub(1) as usize + 2;
    let grid = fit_grid(inner, reported)?;
    boundary_cutoff_expansion(problem, &grid, &qopts()).map_err(multi_failure)
}

/// The expansions each selected engine produces for a codim problem.
fn engine_runs(
    engine: EngineChoice,
    omega: &SingularForm,
    mu: &MorseBott,
) -> Result<Vec<AsymptoticExpansion>> {
    let mut out = Vec::new();
    if matches!(engine, EngineChoice::Mellin | EngineChoice::Both) {
        out.push(expansion(omega, mu, &mopts()).map_err(mellin_failure)?);
    }
    if matches!(engine, EngineChoice::Cutoff | EngineChoice::Both) {
        out.push(codim_fit(omega, mu)?.expansion);
    }
    Ok(out)
}

/// The crossing problem with its conformal factors applied.
fn conformal_crossing(
    problem: &CrossingProblem,
    phis: &Option<Vec<Polynomial>>,
) -> Result<CrossingProblem> {
    let mut out = problem.clone();
    if let Some(phis) = phis {
        for (i, phi) in phis.iter().enumerate() {
            if !phi.is_zero() {
                out = out.with_conformal(i, phi.clone()).map_err(multi_failure)?;
            }
        }
    }
    Ok(out)
}

/// The boundary problem with its conformal factor applied.
fn conformal_boundary(
    problem: &BoundaryProblem,
    phi: &Option<Polynomial>,
) -> Result<BoundaryProblem> {
    match phi {
        Some(phi) => problem
            .clone()
            .with_conformal(phi.clone())
            .map_err(multi_failure),
        None => Ok(problem.clone()),
    }
}

/// The standard-measure problem with the numerator multiplied by `phi`.
fn weighted_codim(omega: &SingularForm, phi: &Polynomial) -> Result<SingularForm> {
    SingularForm::new(
        omega.numerator().mul_scalar(phi),
        omega.codim(),
        omega.power(),
    )
    .map_err(form_failure)
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

pub fn finite_part(ctx: &Ctx, report: &mut Report) -> Result<()> {
    match &ctx.built.problem {
        BuiltProblem::Codim { omega, phi } => {
            let mu = selected_measure(omega, phi)?;
            let mut payloads = Vec::new();
            if matches!(ctx.engine, EngineChoice::Mellin | EngineChoice::Both) {
                let exp = expansion(omega, &mu, &mopts()).map_err(mellin_failure)?;
                payloads.push(ExpansionPayload::from_expansion(&exp));
            }
            if matches!(ctx.engine, EngineChoice::Cutoff | EngineChoice::Both) {
                payloads.push(ExpansionPayload::from_fit(&codim_fit(omega, &mu)?));
            }
            if payloads.len() == 2 {
                report.cross_engine_gap = Some(payloads[0].gap(&payloads[1]));
            }
            report.expansions = Some(payloads);
        }
        BuiltProblem::Crossing { problem, phis } => {
            if ctx.engine != EngineChoice::Mellin {
                return Err(Failure::Invalid(
                    "crossing problems are regularized by the continuation engine only; \
                     use --engine mellin"
                        .to_string(),
                ));
            }
            let conformal = conformal_crossing(problem, phis)?;
            let expansion =
                crossing_expansion(&conformal, &CrossingOptions::default()).map_err(multi_failure)?;
            let k = expansion.components();
            report.crossing = Some(CrossingPayload {
                engine: "mellin".to_string(),
                components: k,
                coefficients: expansion
                    .coefficients()
                    .iter()
                    .map(|(mask, v)| (mask_string(*mask, k), pair(*v)))
                    .collect(),
                leading: pair(expansion.leading()),
                finite: pair(expansion.finite_part()),
            });
        }
        BuiltProblem::Boundary { problem, phi } => {
            let conformal = conformal_boundary(problem, phi)?;
            let mut payloads = Vec::new();
            if matches!(ctx.engine, EngineChoice::Mellin | EngineChoice::Both) {
                let exp = boundary_expansion(&conformal, &mopts()).map_err(multi_failure)?;
                payloads.push(ExpansionPayload::from_expansion(&exp));
            }
            if matches!(ctx.engine, EngineChoice::Cutoff | EngineChoice::Both) {
                let fit = boundary_fit(&conformal, ctx.spec.min_inner())?;
                payloads.push(ExpansionPayload::from_fit(&fit));
            }
            if payloads.len() == 2 {
                report.cross_engine_gap = Some(payloads[0].gap(&payloads[1]));
            }
            report.expansions = Some(payloads);
        }
    }
    Ok(())
}

pub fn zeta(ctx: &Ctx, s: C, report: &mut Report) -> Result<()> {
    match &ctx.built.problem {
        BuiltProblem::Codim { omega, phi } => {
            let mu = selected_measure(omega, phi)?;
            let evaluator = ZetaEvaluator::new(omega, &mu, &mopts()).map_err(mellin_failure)?;
            let value = evaluator.eval(s).map_err(mellin_failure)?;
            report.zeta = Some(ZetaPayload {
                engine: "mellin".to_string(),
                s: pair(s),
                value: pair(value.value),
                truncation: Some(value.truncation),
            });
        }
        BuiltProblem::Crossing { problem, phis } => {
            let conformal = conformal_crossing(problem, phis)?;
            let point = vec![s; conformal.components()];
            let value =
                multi_zeta(&conformal, &point, &CrossingOptions::default()).map_err(multi_failure)?;
            report.zeta = Some(ZetaPayload {
                engine: "mellin".to_string(),
                s: pair(s),
                value: pair(value),
                truncation: None,
            });
        }
        BuiltProblem::Boundary { problem, phi } => {
            let conformal = conformal_boundary(problem, phi)?;
            let zeta = boundary_zeta(&conformal, &mopts()).map_err(multi_failure)?;
            for &(location, residue) in zeta.poles() {
                if (s - cr(location as f64)).norm() < 1e-9 {
                    return Err(Failure::Numerical(format!(
                        "s = {s} is within 1e-9 of the pole at {location} (residue {residue})"
                    )));
                }
            }
            let value = zeta.eval(s).map_err(multi_failure)?;
            report.zeta = Some(ZetaPayload {
                engine: "mellin".to_string(),
                s: pair(s),
                value: pair(value),
                truncation: None,
            });
        }
    }
    Ok(())
}

pub fn poles(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let poles = match &ctx.built.problem {
        BuiltProblem::Codim { omega, phi } => {
            let mu = selected_measure(omega, phi)?;
            ZetaEvaluator::new(omega, &mu, &mopts())
                .map_err(mellin_failure)?
                .poles()
                .to_vec()
        }
        BuiltProblem::Crossing { .. } => {
            return Err(Failure::Invalid(
                "crossing problems have one pole family per component; poles applies to \
                 codim and boundary problems"
                    .to_string(),
            ));
        }
        BuiltProblem::Boundary { problem, phi } => {
            let conformal = conformal_boundary(problem, phi)?;
            boundary_zeta(&conformal, &mopts())
                .map_err(multi_failure)?
                .poles()
                .to_vec()
        }
    };
    report.poles = Some(PolesPayload {
        engine: "mellin".to_string(),
        poles: poles
            .into_iter()
            .map(|(location, residue)| PoleEntry {
                location,
                residue: pair(residue),
            })
            .collect(),
    });
    Ok(())
}

pub fn residue(ctx: &Ctx, report: &mut Report) -> Result<()> {
    match &ctx.built.problem {
        BuiltProblem::Codim { omega, .. } => {
            let r = residue_map(omega).map_err(residue_failure)?;
            let pairing = match &ctx.built.test_form {
                Some(phi) => Some(ValuePayload {
                    engine: "quadrature".to_string(),
                    value: pair(pair_on_y(&r, phi, &qopts()).map_err(residue_failure)?),
                }),
                None => None,
            };
            report.residue = Some(ResiduePayload {
                engine: "exact".to_string(),
                codim: r.codim(),
                degree: r.degree(),
                orientation: r.orientation().to_string(),
                terms: form_terms(r.form()),
                pairing,
            });
        }
        BuiltProblem::Crossing { .. } => {
            return Err(Failure::Invalid(
                "residues of crossing problems factor through the single-block map; \
                 apply it per component"
                    .to_string(),
            ));
        }
        BuiltProblem::Boundary { problem, .. } => {
            let form = boundary_residue(problem).map_err(multi_failure)?;
            report.residue = Some(ResiduePayload {
                engine: "exact".to_string(),
                codim: 1,
                degree: form.degree(),
                orientation: "restriction to the wall x_1 = 0".to_string(),
                terms: form_terms(&form),
                pairing: None,
            });
        }
    }
    Ok(())
}

pub fn level_set(ctx: &Ctx, t: f64, report: &mut Report) -> Result<()> {
    if !t.is_finite() {
        return Err(Failure::Invalid("--t must be finite".to_string()));
    }
    match &ctx.built.problem {
        BuiltProblem::Codim { omega, phi } => {
            let mu = selected_measure(omega, phi)?;
            let value = finpart_core::cutoff::level_set_integral_numeric(omega, &mu, t, &copts())
                .map_err(cutoff_failure)?;
            report.level_set = Some(IntegralPayload {
                engine: "quadrature".to_string(),
                at: t,
                value: pair(value),
            });
            Ok(())
        }
        _ => Err(Failure::Invalid(
            "level sets apply to codim problems".to_string(),
        )),
    }
}

pub fn cutoff(ctx: &Ctx, eps: f64, report: &mut Report) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Invalid(
            "--eps must be a positive finite number".to_string(),
        ));
    }
    let value = match &ctx.built.problem {
        BuiltProblem::Codim { omega, phi } => {
            let mu = selected_measure(omega, phi)?;
            cutoff_integral(omega, &mu, eps, &copts()).map_err(cutoff_failure)?
        }
        BuiltProblem::Crossing { .. } => {
            return Err(Failure::Invalid(
                "cutoff integrals of crossing problems are not implemented; \
                 use finite-part --engine mellin"
                    .to_string(),
            ));
        }
        BuiltProblem::Boundary { problem, phi } => {
            let conformal = conformal_boundary(problem, phi)?;
            boundary_cutoff_integral(&conformal, eps, &qopts()).map_err(multi_failure)?
        }
    };
    report.cutoff = Some(IntegralPayload {
        engine: "cutoff".to_string(),
        at: eps,
        value: pair(value),
    });
    Ok(())
}

// ---------------------------------------------------------------------------
// Checks.
// ---------------------------------------------------------------------------

pub fn check(ctx: &Ctx, which: CheckKind, report: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    match which {
        CheckKind::Conformal => rows.extend(check_conformal(ctx)?),
        CheckKind::Exact => rows.extend(check_exact(ctx)?),
        CheckKind::Residue => rows.extend(check_residue(ctx)?),
        CheckKind::Homogeneity => rows.extend(check_homogeneity(ctx)?),
        CheckKind::Parity => rows.extend(check_parity(ctx)?),
        CheckKind::Crossing => rows.extend(check_crossing(ctx)?),
        CheckKind::Boundary => rows.extend(check_boundary(ctx)?),
        CheckKind::All => {
            match &ctx.built.problem {
                BuiltProblem::Codim { omega, phi } => {
                    let n = omega.vars();
                    let top = omega.degree() == Some(n);
                    if top && phi.is_some() {
                        rows.extend(check_conformal(ctx)?);
                    }
                    if omega.degree() == Some(n - 1) {
                        rows.extend(check_exact(ctx)?);
                    }
                    if top {
                        if tame_check(omega).map_err(residue_failure)?.tame
                            && omega.codim() % 2 == 0
                        {
                            rows.extend(check_residue(ctx)?);
                        }
                        rows.extend(check_homogeneity(ctx)?);
                        if omega.codim() <= 4 {
                            rows.extend(check_parity(ctx)?);
                        }
                    }
                }
                BuiltProblem::Crossing { .. } => rows.extend(check_crossing(ctx)?),
                BuiltProblem::Boundary { .. } => rows.extend(check_boundary(ctx)?),
            }
            if rows.is_empty() {
                return Err(Failure::Invalid(
                    "no check applies to this problem shape".to_string(),
                ));
            }
        }
    }
    report.checks = Some(rows);
    Ok(())
}

fn codim_problem<'a>(
    ctx: &'a Ctx,
    check: &str,
) -> Result<(&'a SingularForm, &'a Option<Polynomial>)> {
    match &ctx.built.problem {
        BuiltProblem::Codim { omega, phi } => Ok((omega, phi)),
        _ => Err(Failure::Invalid(format!(
            "check {check} applies to codim problems"
        ))),
    }
}

/// Fitted conformal coefficients against the standard continuation.
fn check_conformal(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (omega, phi) = codim_problem(ctx, "conformal")?;
    let phi = phi.as_ref().ok_or_else(|| {
        Failure::Invalid("check conformal needs a conformal exponent phi".to_string())
    })?;
    let mu0 = standard_measure(omega);
    let mu_phi =
        MorseBott::conformal(omega.codim(), phi.clone()).map_err(form_failure)?;
    let standard = expansion(omega, &mu0, &mopts()).map_err(mellin_failure)?;
    let fit_conformal = codim_fit(omega, &mu_phi)?.expansion;
    let fit_standard = codim_fit(omega, &mu0)?.expansion;
    let shift = expansion(&weighted_codim(omega, phi)?, &mu0, &mopts())
        .map_err(mellin_failure)?
        .log_coefficient;
    Ok(vec![
        CheckVerdict::new(
            "conformal",
            "t-01iii",
            "cutoff vs mellin",
            "fitted log coefficient under e^{2 phi} mu_0 equals the standard continuation \
             residue at 0"
                .to_string(),
            fit_conformal.log_coefficient,
            standard.log_coefficient,
            ctx.tol_or(1e-4),
        ),
        CheckVerdict::new(
            "conformal",
            "t-02",
            "cutoff vs mellin",
            "fitted finite-part difference equals the continuation residue of phi * omega"
                .to_string(),
            fit_conformal.finite_part - fit_standard.finite_part,
            shift,
            ctx.tol_or(1e-4),
        ),
    ])
}

/// The two identities satisfied by the differential of the problem form.
fn check_exact(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (psi, _) = codim_problem(ctx, "exact")?;
    let n = psi.vars();
    if psi.degree() != Some(n - 1) {
        return Err(Failure::Invalid(
            "check exact treats the problem form as psi and needs degree n - 1".to_string(),
        ));
    }
    let mu0 = standard_measure(psi);
    let dpsi = psi.d();
    let theta = alpha_form(n, psi.codim())
        .map_err(form_failure)?
        .scale(cr(0.5));
    let paired = psi.wedge(&theta).map_err(form_failure)?;
    let sign = if n % 2 == 0 { cr(1.0) } else { cr(-1.0) };
    let mut rows = Vec::new();
    for exp in engine_runs(ctx.engine, &dpsi, &mu0)? {
        let engine = exp.engine.to_string();
        rows.push(CheckVerdict::new(
            "exact",
            "pr-02",
            &engine,
            "log coefficient of d(psi) vanishes".to_string(),
            exp.log_coefficient,
            C::default(),
            ctx.tol_or(1e-8),
        ));
        let paired_exp = match exp.engine {
            finpart_core::Engine::Mellin => {
                expansion(&paired, &mu0, &mopts()).map_err(mellin_failure)?
            }
            finpart_core::Engine::Cutoff => codim_fit(&paired, &mu0)?.expansion,
        };
        rows.push(CheckVerdict::new(
            "exact",
            "pr-02",
            &engine,
            "finite part of d(psi) equals (-1)^n times the log coefficient of \
             psi ^ dmu / (2 mu)"
                .to_string(),
            exp.finite_part,
            sign * paired_exp.log_coefficient,
            ctx.tol_or(1e-8),
        ));
    }
    Ok(rows)
}

/// The residue pairing against the regularized integral.
fn check_residue(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (omega, _) = codim_problem(ctx, "residue")?;
    let r = residue_map(omega).map_err(residue_failure)?;
    let phi_form = match &ctx.built.test_form {
        Some(form) => form.clone(),
        None => random_pairing_form(ctx, omega)?,
    };
    let lhs = pair_on_y(&r, &phi_form, &qopts()).map_err(residue_failure)?;
    let paired = omega.wedge_smooth(&phi_form).map_err(form_failure)?;
    let mu0 = standard_measure(omega);
    let mut rows = Vec::new();
    for exp in engine_runs(ctx.engine, &paired, &mu0)? {
        rows.push(CheckVerdict::new(
            "residue",
            "t-04",
            &format!("quadrature vs {}", exp.engine),
            "pairing of the residue on Y equals the log coefficient of omega ^ phi".to_string(),
            lhs,
            exp.log_coefficient,
            ctx.tol_or(1e-8),
        ));
    }
    Ok(rows)
}

/// Scale covariance of the continuation in the measure.
fn check_homogeneity(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (omega, _) = codim_problem(ctx, "homogeneity")?;
    let n = omega.vars();
    let m = omega.codim();
    let mu0 = standard_measure(omega);
    let base = ZetaEvaluator::new(omega, &mu0, &mopts()).map_err(mellin_failure)?;
    let mut rng = ctx.rng();
    let mut rows = Vec::new();
    for &t in &[2.0, 4.0] {
        let scaled = MorseBott::scaled(n, m, t).map_err(form_failure)?;
        let evaluator = ZetaEvaluator::new(omega, &scaled, &mopts()).map_err(mellin_failure)?;
        for _ in 0..5 {
            let s = C::new(
                0.3 + 0.4 * rng.random::<f64>(),
                2.0 * rng.random::<f64>() - 1.0,
            );
            let lhs = evaluator.eval(s).map_err(mellin_failure)?.value;
            let rhs = cr(t).powc(s * cr(0.5)) * base.eval(s).map_err(mellin_failure)?.value;
            rows.push(CheckVerdict::new(
                "homogeneity",
                "t-01iii",
                "mellin",
                format!("zeta(s; {t} mu_0) = {t}^(s/2) zeta(s; mu_0) at s = {s}"),
                lhs,
                rhs,
                ctx.tol_or(1e-10),
            ));
        }
    }
    Ok(rows)
}

/// Sign of the level-set integral under `t -> -t`.
fn check_parity(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (omega, _) = codim_problem(ctx, "parity")?;
    let m = omega.codim();
    let mu0 = standard_measure(omega);
    let evaluator = CutoffEvaluator::new(omega, &mu0, &copts()).map_err(cutoff_failure)?;
    let inner = evaluator.effective_inner();
    let sign = if m % 2 == 0 { cr(1.0) } else { cr(-1.0) };
    let mut rows = Vec::new();
    for &t in &[0.5 * inner, 0.25 * inner] {
        let lhs = evaluator.level_set(-t).map_err(cutoff_failure)?;
        let rhs = sign * evaluator.level_set(t).map_err(cutoff_failure)?;
        rows.push(CheckVerdict::new(
            "parity",
            "t-01iii",
            "quadrature",
            format!("level-set integral satisfies I(-t) = (-1)^{m} I(t) at t = {t}"),
            lhs,
            rhs,
            ctx.tol_or(1e-10),
        ));
    }
    Ok(rows)
}

/// Conformal transformation laws of the crossing coefficients.
fn check_crossing(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (problem, phis) = match &ctx.built.problem {
        BuiltProblem::Crossing { problem, phis } => (problem, phis),
        _ => {
            return Err(Failure::Invalid(
                "check crossing applies to crossing problems".to_string(),
            ))
        }
    };
    let n = problem.numerator().vars();
    let k = problem.components();
    let phis: Vec<Polynomial> = match phis {
        Some(p) if p.iter().any(|q| !q.is_zero()) => p.clone(),
        _ => {
            let mut rng = ctx.rng();
            (0..k).map(|_| random_exponent(&mut rng, n)).collect()
        }
    };
    let outcome = crossing_conformal_check(problem, &phis, &CrossingOptions::default())
        .map_err(multi_failure)?;
    let tol = ctx.tol_or(1e-6);
    Ok(outcome
        .checks
        .iter()
        .map(|row| {
            let detail = match row.component {
                Some(i) => format!(
                    "{} law for component {} at subset {}",
                    row.law,
                    i + 1,
                    mask_string(row.subset, k)
                ),
                None => format!("{} law over all subsets", row.law),
            };
            CheckVerdict::new(
                "crossing",
                "t-06",
                "contour vs mellin",
                detail,
                row.lhs,
                row.rhs,
                tol,
            )
        })
        .collect())
}

/// Scale-change laws of the boundary coefficients.
fn check_boundary(ctx: &Ctx) -> Result<Vec<CheckVerdict>> {
    let (problem, phi) = match &ctx.built.problem {
        BuiltProblem::Boundary { problem, phi } => (problem, phi),
        _ => {
            return Err(Failure::Invalid(
                "check boundary applies to boundary problems".to_string(),
            ))
        }
    };
    let n = problem.vars();
    let phi = match phi {
        Some(phi) if !phi.is_zero() => phi.clone(),
        _ => {
            let mut rng = ctx.rng();
            random_exponent(&mut rng, n)
        }
    };
    let conformal = problem
        .clone()
        .with_conformal(phi.clone())
        .map_err(multi_failure)?;
    let standard = boundary_zeta(problem, &mopts()).map_err(multi_failure)?;
    let inner = ctx.spec.min_inner();
    let fit_conformal = boundary_fit(&conformal, inner)?.expansion;
    let fit_standard = boundary_fit(problem, inner)?.expansion;
    let weighted = BoundaryProblem::new(problem.numerator().mul_scalar(&phi), problem.power())
        .map_err(multi_failure)?;
    let shift = boundary_zeta(&weighted, &mopts())
        .map_err(multi_failure)?
        .log_coefficient();
    Ok(vec![
        CheckVerdict::new(
            "boundary",
            "t-b01iv",
            "cutoff vs mellin",
            "fitted log coefficient under the scale x_1 e^{phi} equals the standard \
             continuation residue at 0"
                .to_string(),
            fit_conformal.log_coefficient,
            standard.log_coefficient(),
            ctx.tol_or(1e-6),
        ),
        CheckVerdict::new(
            "boundary",
            "t-b01iv",
            "cutoff vs mellin",
            "fitted finite-part difference equals the continuation residue of phi * omega"
                .to_string(),
            fit_conformal.finite_part - fit_standard.finite_part,
            shift,
            ctx.tol_or(1e-4),
        ),
    ])
}

// ---------------------------------------------------------------------------
// Seeded test data.
// ---------------------------------------------------------------------------

fn dyadic(rng: &mut StdRng) -> f64 {
    f64::from(rng.random_range(-8..=8i32)) / 8.0
}

fn nonzero_dyadic(rng: &mut StdRng) -> f64 {
    loop {
        let v = dyadic(rng);
        if v != 0.0 {
            return v;
        }
    }
}

/// A small real polynomial usable as a conformal exponent.
fn random_exponent(rng: &mut StdRng, n: usize) -> Polynomial {
    let mut phi = Polynomial::constant(n, cr(f64::from(rng.random_range(-4..=4i32)) / 16.0));
    for _ in 0..2 {
        let mut exponents = vec![0u32; n];
        exponents[rng.random_range(0..n)] = rng.random_range(1..=2);
        phi.add_term(
            MultiIndex(exponents),
            cr(f64::from(rng.random_range(-4..=4i32)) / 16.0),
        );
    }
    if phi.is_zero() {
        phi.add_term(MultiIndex(vec![0; n]), cr(0.25));
    }
    phi
}

/// A sorted random frame of the requested size.
fn random_frame(rng: &mut StdRng, n: usize, size: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut frame: Vec<usize> = indices[..size].to_vec();
    frame.sort_unstable();
    frame
}

/// A random smooth windowed form pairing nontrivially with the residue of
/// `omega`.
fn random_pairing_form(ctx: &Ctx, omega: &SingularForm) -> Result<Form> {
    let n = omega.vars();
    let m = omega.codim();
    let degree = omega.degree().ok_or_else(|| {
        Failure::Invalid(
            "the numerator mixes degrees; give a test_form for the residue pairing".to_string(),
        )
    })?;
    let size = n - degree;
    let radii = ctx.spec.window_radii();
    let window = Window::new(radii.inner, radii.outer);
    let mut bag = WindowBag::radial(0, window);
    for coord in m..n {
        bag.push(WindowSlot::Base(coord), window);
    }
    let mut rng = ctx.rng();
    let mut form = Form::zero(n);
    for _ in 0..2 {
        // Frames inside the base coordinates restrict nontrivially to the
        // singular locus.
        let frame: Vec<usize> = if size <= n - m {
            random_frame(&mut rng, n - m, size)
                .into_iter()
                .map(|i| i + m)
                .collect()
        } else {
            random_frame(&mut rng, n, size)
        };
        let mut exponents = vec![0u32; n];
        for e in exponents.iter_mut().skip(m) {
            if rng.random_bool(0.5) {
                *e = 2;
            }
        }
        let poly = Polynomial::monomial(MultiIndex(exponents), cr(nonzero_dyadic(&mut rng)));
        form = form.add(&Form::term(poly, bag.clone(), &frame).map_err(form_failure)?);
    }
    Ok(form)
}
