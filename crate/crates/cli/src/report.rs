//! Machine-readable reports.
//!
//! Every command emits one JSON report on stdout: the schema version, an
//! echo of the command and the normalized problem, the result payloads, and
//! the wall-clock time.  Each payload block carries an `engine` string
//! naming the computation that produced its numbers: `mellin` for the
//! continued-transform route, `cutoff` for fitted cutoff integrals, `exact`
//! for symbolic results, and `quadrature` for direct numerical integrals.
//! Reports are deterministic for a fixed spec and seed; only `wall_ms`
//! varies between runs.

use finpart_core::cutoff::FitReport;
use finpart_core::exterior::{Form, WindowSlot};
use finpart_core::mellin::AsymptoticExpansion;
use finpart_core::C;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::spec::{ProblemSpec, SlotTag, WindowTag};

/// Complex number as the `[re, im]` pair used throughout the JSON surface.
pub fn pair(v: C) -> [f64; 2] {
    [v.re, v.im]
}

/// Subset mask rendered as a bit string, character `i` for component `i+1`;
/// `1` marks components whose constant term is taken, `0` a residue.
pub fn mask_string(mask: u32, components: usize) -> String {
    (0..components)
        .map(|i| if mask & (1 << i) != 0 { '1' } else { '0' })
        .collect()
}

/// Echo of the invocation that produced a report.
#[derive(Clone, Debug, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub engine: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub which: Option<String>,
}

/// Divergence coefficients of one engine run.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionPayload {
    pub engine: String,
    /// `k -> I_{-k}`, the coefficient of `eps^{-k}`.
    pub divergent: BTreeMap<String, [f64; 2]>,
    /// Coefficient of `log(1/eps)`.
    pub log: [f64; 2],
    pub finite: [f64; 2],
    pub error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_condition: Option<f64>,
}

impl ExpansionPayload {
    pub fn from_expansion(expansion: &AsymptoticExpansion) -> ExpansionPayload {
        ExpansionPayload {
            engine: expansion.engine.to_string(),
            divergent: expansion
                .neg_coefficients
                .iter()
                .map(|(k, v)| (k.to_string(), pair(*v)))
                .collect(),
            log: pair(expansion.log_coefficient),
            finite: pair(expansion.finite_part),
            error_estimate: expansion.error_estimate,
            fit_residual: None,
            fit_condition: None,
        }
    }

    pub fn from_fit(fit: &FitReport) -> ExpansionPayload {
        let mut payload = Self::from_expansion(&fit.expansion);
        payload.fit_residual = Some(fit.residual_norm);
        payload.fit_condition = Some(fit.condition_number);
        payload
    }

    /// Largest coefficient difference against another engine's payload.
    pub fn gap(&self, other: &ExpansionPayload) -> f64 {
        let dist = |a: &[f64; 2], b: &[f64; 2]| {
            C::new(a[0] - b[0], a[1] - b[1]).norm()
        };
        let mut gap = dist(&self.log, &other.log).max(dist(&self.finite, &other.finite));
        let zero = [0.0, 0.0];
        for (k, v) in &self.divergent {
            gap = gap.max(dist(v, other.divergent.get(k).unwrap_or(&zero)));
        }
        for (k, v) in &other.divergent {
            gap = gap.max(dist(v, self.divergent.get(k).unwrap_or(&zero)));
        }
        gap
    }
}

/// Regularized coefficients of a crossing problem, keyed by subset mask.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingPayload {
    pub engine: String,
    pub components: usize,
    /// Mask bit strings to coefficients; `11...1` is the finite part and
    /// `00...0` the product of residues.
    pub coefficients: BTreeMap<String, [f64; 2]>,
    pub leading: [f64; 2],
    pub finite: [f64; 2],
}

/// One continuation value.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaPayload {
    pub engine: String,
    pub s: [f64; 2],
    pub value: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

/// One pole of the continuation.
#[derive(Clone, Debug, Serialize)]
pub struct PoleEntry {
    pub location: i64,
    pub residue: [f64; 2],
}

/// Pole table of the continuation, sorted by descending location.
#[derive(Clone, Debug, Serialize)]
pub struct PolesPayload {
    pub engine: String,
    pub poles: Vec<PoleEntry>,
}

/// One term of a reported differential form.
#[derive(Clone, Debug, Serialize)]
pub struct FormTermPayload {
    pub coefficient: [f64; 2],
    pub monomial: Vec<u32>,
    /// 1-based wedge frame.
    pub frame: Vec<usize>,
    pub windows: Vec<WindowTag>,
}

/// A residue form on the singular locus.
#[derive(Clone, Debug, Serialize)]
pub struct ResiduePayload {
    pub engine: String,
    pub codim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub orientation: String,
    pub terms: Vec<FormTermPayload>,
    /// Pairing against the spec's test form, when one is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<ValuePayload>,
}

/// A single tagged number.
#[derive(Clone, Debug, Serialize)]
pub struct ValuePayload {
    pub engine: String,
    pub value: [f64; 2],
}

/// A level-set or cutoff integral.
#[derive(Clone, Debug, Serialize)]
pub struct IntegralPayload {
    pub engine: String,
    /// The level `t` or the cutoff `eps` the integral was taken at.
    pub at: f64,
    pub value: [f64; 2],
}

/// One verified identity: both sides and the comparison outcome.
#[derive(Clone, Debug, Serialize)]
pub struct CheckVerdict {
    /// The check family, e.g. `conformal`.
    pub check: String,
    /// The transformation law the row tests, e.g. `t-02`.
    pub law: String,
    /// Provenance of the two sides, e.g. `cutoff vs mellin`.
    pub engine: String,
    pub detail: String,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckVerdict {
    pub fn new(
        check: &str,
        law: &str,
        engine: &str,
        detail: String,
        lhs: C,
        rhs: C,
        tol: f64,
    ) -> CheckVerdict {
        let residual = (lhs - rhs).norm();
        CheckVerdict {
            check: check.to_string(),
            law: law.to_string(),
            engine: engine.to_string(),
            detail,
            lhs: pair(lhs),
            rhs: pair(rhs),
            residual,
            tol,
            passed: residual <= tol,
        }
    }
}

/// The full report a command prints.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: CommandEcho,
    pub problem: ProblemSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansions: Option<Vec<ExpansionPayload>>,
    /// Largest coefficient disagreement between engines, when both ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_engine_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing: Option<CrossingPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poles: Option<PolesPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residue: Option<ResiduePayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_set: Option<IntegralPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<IntegralPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckVerdict>>,
    pub wall_ms: f64,
}

impl Report {
    pub fn new(command: CommandEcho, problem: ProblemSpec) -> Report {
        Report {
            schema: 1,
            command,
            problem,
            expansions: None,
            cross_engine_gap: None,
            crossing: None,
            zeta: None,
            poles: None,
            residue: None,
            level_set: None,
            cutoff: None,
            checks: None,
            wall_ms: 0.0,
        }
    }

    /// Whether every reported check verdict passed.
    pub fn all_checks_passed(&self) -> bool {
        self.checks
            .as_deref()
            .map_or(true, |checks| checks.iter().all(|c| c.passed))
    }
}

/// Serializes a library form back into term payloads with 1-based frames.
pub fn form_terms(form: &Form) -> Vec<FormTermPayload> {
    let mut out = Vec::new();
    for (frame, bag, poly) in form.terms() {
        let frame: Vec<usize> = finpart_core::exterior::frame_indices(frame)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        let windows: Vec<WindowTag> = bag
            .iter()
            .map(|(slot, w)| WindowTag {
                slot: match slot {
                    WindowSlot::Radial(_) => SlotTag::Radial,
                    WindowSlot::Base(_) => SlotTag::Base,
                },
                component: match slot {
                    WindowSlot::Radial(b) => Some(b + 1),
                    WindowSlot::Base(_) => None,
                },
                coord: match slot {
                    WindowSlot::Radial(_) => None,
                    WindowSlot::Base(j) => Some(j + 1),
                },
                order: w.order(),
                inner: Some(w.inner()),
                outer: Some(w.outer()),
            })
            .collect();
        for (exponents, coefficient) in poly.terms() {
            out.push(FormTermPayload {
                coefficient: pair(*coefficient),
                monomial: exponents.0.clone(),
                frame: frame.clone(),
                windows: windows.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_strings_put_component_one_first() {
        assert_eq!(mask_string(0b01, 2), "10");
        assert_eq!(mask_string(0b10, 2), "01");
        assert_eq!(mask_string(0b11, 2), "11");
        assert_eq!(mask_string(0, 3), "000");
    }

    #[test]
    fn gaps_cover_coefficients_missing_on_either_side() {
        let a = ExpansionPayload {
            engine: "mellin".to_string(),
            divergent: [("2".to_string(), [1.0, 0.0])].into_iter().collect(),
            log: [0.0, 0.0],
            finite: [1.0, 0.0],
            error_estimate: 0.0,
            fit_residual: None,
            fit_condition: None,
        };
        let mut b = a.clone();
        b.divergent.clear();
        b.finite = [1.5, 0.0];
        assert!((a.gap(&b) - 1.0).abs() < 1e-15);
        b.divergent.insert("2".to_string(), [1.0, 0.0]);
        assert!((a.gap(&b) - 0.5).abs() < 1e-15);
    }
}
