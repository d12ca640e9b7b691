//! The sufficiency pipeline.
//!
//! A candidate is certified when it is positive off the diagonal (H1),
//! symmetric (H2), has a non-negative cross partial off the diagonal (H3) and
//! satisfies one of four boundary hypotheses:
//!
//! * **H4A** — `t ↦ d(t, a)` is non-increasing left of `a`, non-decreasing right of it;
//! * **H4B** — `lim_{λ→+∞}[d(b,λ) − d(a,λ)] ≤ lim_{λ→−∞}[d(b,λ) − d(a,λ)]` for `a < b`;
//! * **H4C** — `∇d(x, y) → 0` as `(x, y) → ∞`;
//! * **H4D** — `lim_{λ→−∞} d(c,λ) = lim_{λ→+∞} d(c,λ)`, finite, for every `c`.
//!
//! When `d` is only smooth off a set Λ (axes, antidiagonal), H3 is checked on
//! `d(h(x), h(y))` with `h(x) = x^{2n+1}` instead, and H4C is not combined with
//! such a change of variables. Every check runs on sampled sets, so a
//! certificate is numerical evidence, never a proof; it says so in its caveat.
//!
//! If no certificate is found the candidate goes through the counterexample
//! search and the necessary-condition battery before being declared
//! inconclusive.

mod candidate;
mod config;
pub mod gfunc;
pub mod hypotheses;
pub mod limits;
pub mod reparam;

use std::fmt;
use std::time::Instant;

use serde::{Serialize, Serializer};

pub use candidate::{LambdaSet, MetricCandidate, Reparametrization};
pub use config::{CheckConfig, ConfigError};
pub use hypotheses::{
    check_h1, check_h2, check_h3, check_h4a, check_h4b, check_h4c, check_h4d, Check, H1Evidence, H2Evidence,
    H3Evidence, H3Mode, H3Run, H3Witness, H4Evidence,
};
pub use limits::{estimate_limit, LimitDirection, LimitEstimate, LimitStatus};
pub use reparam::{choose_reparametrization, infer_lambda};

use crate::necessary::{self, NecessaryReport};
use crate::search::{find_counterexample, Violation, ViolationKind};
use crate::subadditive::{PairViolation, TiEvidence};

pub const CAVEAT: &str = "numerical certificate on sampled sets";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H4Kind {
    A,
    B,
    C,
    D,
}

impl fmt::Display for H4Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            H4Kind::A => "H4A",
            H4Kind::B => "H4B",
            H4Kind::C => "H4C",
            H4Kind::D => "H4D",
        };
        f.write_str(s)
    }
}

/// The sufficiency result a certificate relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// H1–H3 on `d` itself plus the given boundary hypothesis.
    Plain(H4Kind),
    /// H3 on `d ∘ (h × h)` with `h(x) = x^{2n+1}`, H1, H2 and `via` on `d`.
    Combined { n: u32, via: H4Kind },
    /// Translation invariant with a non-decreasing subadditive generator.
    TiMonotoneSubadditive,
    /// Translation invariant with an even subadditive generator.
    TiEvenSubadditive,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theorem::Plain(k) => write!(f, "T-{k}"),
            Theorem::Combined { n, via } => write!(f, "T-combined(n={n},{via})"),
            Theorem::TiMonotoneSubadditive => f.write_str("TI-monotone-subadditive"),
            Theorem::TiEvenSubadditive => f.write_str("TI-even-subadditive"),
        }
    }
}

impl Serialize for Theorem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisEvidence {
    pub h1: H1Evidence,
    pub h2: H2Evidence,
    pub h3: H3Evidence,
    pub h4: H4Evidence,
    pub reparametrization: Option<Reparametrization>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum Evidence {
    Hypotheses(Box<HypothesisEvidence>),
    TranslationInvariant(TiEvidence),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub theorem: Theorem,
    pub evidence: Evidence,
    pub caveat: &'static str,
}

impl Certificate {
    pub fn new(theorem: Theorem, evidence: Evidence) -> Self {
        Certificate {
            theorem,
            evidence,
            caveat: CAVEAT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    Certified(Certificate),
    Refuted {
        violation: Violation,
        /// The generator pair behind a translation-invariant refutation.
        pair: Option<PairViolation>,
    },
    Inconclusive {
        diagnostics: Vec<String>,
    },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Certified(_) => "certified",
            Verdict::Refuted { .. } => "refuted",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn theorem(&self) -> Option<Theorem> {
        match self {
            Verdict::Certified(c) => Some(c.theorem),
            _ => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    /// Process exit status: 0 certified, 2 refuted, 3 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Certified(_) => 0,
            Verdict::Refuted { .. } => 2,
            Verdict::Inconclusive { .. } => 3,
        }
    }

    fn refuted(violation: Violation) -> Self {
        Verdict::Refuted { violation, pair: None }
    }
}

/// Outcome of the hypothesis checks alone.
enum Sufficiency {
    Decided(Verdict),
    Undecided(Vec<String>),
}

fn h3_failure(w: &H3Witness) -> String {
    format!(
        "H3: cross partial {:e} < 0 at ({:e}, {:e})",
        w.cross_partial, w.x, w.y
    )
}

/// H3, reparametrizing when the candidate is only smooth off Λ.
fn establish_h3(d: &MetricCandidate, cfg: &CheckConfig, diags: &mut Vec<String>) -> Option<(H3Evidence, Option<Reparametrization>)> {
    let raw = check_h3(&d.expr, d.lambda, H3Mode::Raw, cfg);
    let lambda = match raw.outcome {
        Check::Pass(ev) if d.lambda.is_empty() => return Some((ev, None)),
        Check::Pass(_) => d.lambda,
        Check::Fail(w) => {
            diags.push(h3_failure(&w));
            return None;
        }
        Check::Inconclusive(msg) if raw.kink_points.is_empty() => {
            diags.push(format!("H3: {msg}"));
            return None;
        }
        Check::Inconclusive(msg) => match infer_lambda(&raw.kink_points) {
            Some(l) if !l.is_empty() => {
                diags.push(format!("H3: {msg}; treating {} as non-smooth", l.describe()));
                l
            }
            _ => {
                diags.push(format!("H3: {msg}, not all on the axes or the antidiagonal"));
                return None;
            }
        },
    };
    let lambda_d = d.clone().with_lambda(lambda);
    let Some(r) = choose_reparametrization(&lambda_d, cfg.max_n) else {
        diags.push(format!(
            "reparametrization: no n <= {} makes second partials continuous across {}",
            cfg.max_n,
            lambda.describe()
        ));
        return None;
    };
    let composite = lambda_d.reparametrized(r.clone());
    match check_h3(composite.effective(), lambda, H3Mode::Reparametrized, cfg).outcome {
        Check::Pass(ev) => Some((ev, Some(r))),
        Check::Fail(w) => {
            diags.push(format!("{} after reparametrization with n = {}", h3_failure(&w), r.n));
            None
        }
        Check::Inconclusive(msg) => {
            diags.push(format!("H3 after reparametrization with n = {}: {msg}", r.n));
            None
        }
    }
}

fn sufficiency(d: &MetricCandidate, cfg: &CheckConfig) -> Sufficiency {
    let mut diags = Vec::new();
    let h1 = match check_h1(&d.expr, cfg) {
        Check::Pass(ev) => ev,
        Check::Fail(v) => return Sufficiency::Decided(Verdict::refuted(v)),
        Check::Inconclusive(msg) => return Sufficiency::Undecided(vec![format!("H1: {msg}")]),
    };
    let h2 = match check_h2(&d.expr, cfg) {
        Check::Pass(ev) => ev,
        Check::Fail(v) => return Sufficiency::Decided(Verdict::refuted(v)),
        Check::Inconclusive(msg) => return Sufficiency::Undecided(vec![format!("H2: {msg}")]),
    };
    let Some((h3, reparam)) = establish_h3(d, cfg, &mut diags) else {
        return Sufficiency::Undecided(diags);
    };
    let order: [(H4Kind, fn(&crate::expr::Expr, &CheckConfig) -> Check<H4Evidence, String>); 4] = [
        (H4Kind::A, check_h4a),
        (H4Kind::D, check_h4d),
        (H4Kind::B, check_h4b),
        (H4Kind::C, check_h4c),
    ];
    for (kind, check) in order {
        if kind == H4Kind::C && reparam.is_some() {
            diags.push("H4C: not combinable with a reparametrization".into());
            continue;
        }
        match check(&d.expr, cfg) {
            Check::Pass(h4) => {
                let theorem = match &reparam {
                    Some(r) => Theorem::Combined { n: r.n, via: kind },
                    None => Theorem::Plain(kind),
                };
                let evidence = HypothesisEvidence {
                    h1,
                    h2,
                    h3,
                    h4,
                    reparametrization: reparam,
                };
                return Sufficiency::Decided(Verdict::Certified(Certificate::new(
                    theorem,
                    Evidence::Hypotheses(Box::new(evidence)),
                )));
            }
            Check::Fail(msg) => diags.push(msg),
            Check::Inconclusive(msg) => diags.push(format!("{msg} (inconclusive)")),
        }
    }
    Sufficiency::Undecided(diags)
}

/// The most severe witness of a refuting necessary-condition report.
pub fn necessary_violation(r: &NecessaryReport) -> Option<Violation> {
    if let Some(w) = r.first_order.first() {
        return Some(Violation {
            kind: ViolationKind::FirstOrderBound,
            witness: vec![w.x, w.y],
            magnitude: w.value - w.bound,
        });
    }
    if let Some(w) = r.diagonal_positivity.first() {
        let magnitude = if w.test == "d1+ != d2+" {
            w.value.abs()
        } else {
            -w.value
        };
        return Some(Violation {
            kind: ViolationKind::DiagonalPositivity,
            witness: vec![w.x, w.x],
            magnitude,
        });
    }
    r.second_order.first().map(|w| Violation {
        kind: ViolationKind::SecondOrderBound,
        witness: vec![w.x, w.y],
        magnitude: w.lhs - w.rhs,
    })
}

/// Certify, refute, or give up on `d`.
///
/// The hypothesis checks run first; only when they neither certify nor refute
/// are the counterexample search and the necessary-condition battery run.
pub fn certify(d: &MetricCandidate, cfg: &CheckConfig) -> Verdict {
    let mut diags = match sufficiency(d, cfg) {
        Sufficiency::Decided(v) => return v,
        Sufficiency::Undecided(diags) => diags,
    };
    match find_counterexample(d, cfg) {
        Ok(Some(v)) => return Verdict::refuted(v),
        Ok(None) => diags.push("search: no triangle violation found".into()),
        Err(err) => diags.push(format!("search: {err}")),
    }
    let report = necessary::run(d, cfg);
    if let Some(v) = necessary_violation(&report) {
        return Verdict::refuted(v);
    }
    diags.push(format!(
        "necessary conditions: no witness on {} points",
        report.points_checked
    ));
    Verdict::Inconclusive { diagnostics: diags }
}

/// Wall-clock milliseconds per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub hypotheses_ms: f64,
    pub search_ms: f64,
    pub necessary_ms: f64,
}

/// Everything a full run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub necessary: NecessaryReport,
    pub search: Option<Violation>,
    pub diagnostics: Vec<String>,
    pub timings: Timings,
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Run the hypothesis checks, the search and the necessary battery.
///
/// The verdict agrees with [`certify`] except that a triangle violation found
/// by the search always wins over a numerical certificate.
pub fn check_all(d: &MetricCandidate, cfg: &CheckConfig) -> CheckOutcome {
    let mut timings = Timings::default();
    let t = Instant::now();
    let sufficiency = sufficiency(d, cfg);
    timings.hypotheses_ms = millis(t);

    let t = Instant::now();
    let mut diagnostics = Vec::new();
    let search = match find_counterexample(d, cfg) {
        Ok(v) => v,
        Err(err) => {
            diagnostics.push(format!("search: {err}"));
            None
        }
    };
    timings.search_ms = millis(t);

    let t = Instant::now();
    let necessary = necessary::run(d, cfg);
    timings.necessary_ms = millis(t);

    let verdict = match (sufficiency, &search) {
        (Sufficiency::Decided(v @ Verdict::Refuted { .. }), _) => v,
        (_, Some(v)) => Verdict::refuted(v.clone()),
        (Sufficiency::Decided(v), None) => v,
        (Sufficiency::Undecided(mut diags), None) => match necessary_violation(&necessary) {
            Some(v) => Verdict::refuted(v),
            None => {
                diags.extend(diagnostics.iter().cloned());
                diags.push("search: no triangle violation found".into());
                diags.push(format!(
                    "necessary conditions: no witness on {} points",
                    necessary.points_checked
                ));
                Verdict::Inconclusive { diagnostics: diags }
            }
        },
    };
    CheckOutcome {
        verdict,
        necessary,
        search,
        diagnostics,
        timings,
    }
}
