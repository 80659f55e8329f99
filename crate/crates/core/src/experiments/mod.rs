//! Audits of the a priori estimates on discrete solutions.
//!
//! Every audit is a pure function of its inputs and returns one
//! [`AuditReport`] per checked inequality. Inequalities whose constants are
//! unknown are checked by fitting the constant at one anchor and asserting
//! the bound, with fixed headroom, across the rest of the family.

pub mod fit;
pub mod mms;
pub mod presets;

use std::collections::BTreeMap;
use std::fmt::Display;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exponents::{classify, ratio_to_f64, s_m, Exponent, RegimeTag};
use crate::field::{Field, FieldError};
use crate::scheme::{
    solve_level, solve_u_given_v_from, IterationControl, ProblemData, SchemeError, SchemeState,
    SweepReport,
};

/// Headroom for bounds whose constant was fitted at an anchor.
pub const FIT_HEADROOM: f64 = 1.10;
/// Headroom for the `L^∞` bound across the `n` schedule.
pub const LINFTY_HEADROOM: f64 = 1.05;
/// Allowed excess of a fitted scaling slope over the predicted one.
pub const SLOPE_TOLERANCE: f64 = 0.10;
/// Residual bound for the self-consistency audit.
pub const RESIDUAL_BOUND: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit refused: {0}")]
    Regime(String),
    #[error("audit refused: level n={0} did not converge")]
    Unconverged(u64),
    #[error("{0}")]
    Family(String),
    #[error("{0}")]
    Capability(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Verdict on one inequality `left ≤ right`, up to `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub id: String,
    pub left: f64,
    pub right: f64,
    pub slack: f64,
    pub epsilon: f64,
    pub pass: bool,
    pub context: BTreeMap<String, String>,
}

impl AuditReport {
    pub fn new(id: impl Into<String>, left: f64, right: f64, epsilon: f64) -> Self {
        let slack = right - left;
        Self {
            id: id.into(),
            left,
            right,
            slack,
            epsilon,
            pass: slack >= -epsilon,
            context: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.context.insert(key.to_string(), value.to_string());
        self
    }

    pub(crate) fn with_problem(self, data: &ProblemData) -> Self {
        let g = data.grid();
        self.with("params", data.params())
            .with("grid", format!("d={} n_cells={}", g.d(), g.n_cells()))
    }

    /// `key=value` pairs joined by `;`, in key order.
    pub fn context_string(&self) -> String {
        self.context
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Log–log least-squares fit of a norm against the datum scale `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub quantity: String,
    pub lambdas: Vec<f64>,
    pub measured: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub predicted_slope: f64,
    pub tolerance: f64,
}

/// One member of a datum family `λ f₀`, solved at a fixed level.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub lambda: f64,
    pub data: ProblemData,
    pub state: SchemeState,
}

fn check_converged(state: &SchemeState) -> Result<(), AuditError> {
    if state.converged {
        Ok(())
    } else {
        Err(AuditError::Unconverged(state.n))
    }
}

fn require_theory(data: &ProblemData) -> Result<(), AuditError> {
    if data.params().d() > 3 {
        return Err(AuditError::Capability(format!(
            "d = {} exceeds the solver's 3 dimensions; use the exponent-level check (`classify`) instead",
            data.params().d()
        )));
    }
    if data.theory_off() {
        return Err(AuditError::Capability(format!(
            "grid dimension {} is below 3 (theory-off mode); regime audits need d = 3",
            data.grid().d()
        )));
    }
    Ok(())
}

fn require_regime(data: &ProblemData, tag: RegimeTag) -> Result<(), AuditError> {
    require_theory(data)?;
    let regime = classify(data.params());
    if regime.contains(tag) {
        Ok(())
    } else {
        let have: Vec<&str> = regime.tags().into_iter().map(RegimeTag::name).collect();
        Err(AuditError::Regime(format!(
            "{} needs the {} regime, but {} is in {{{}}}",
            tag.explanation(),
            tag.name(),
            data.params(),
            have.join(", ")
        )))
    }
}

fn f_norm(data: &ProblemData) -> Result<f64, AuditError> {
    Ok(data.f().lp_norm(Exponent::Finite(data.params().m()))?)
}

fn shift(state: &SchemeState) -> f64 {
    1.0 / state.n as f64
}

fn with_state(report: AuditReport, data: &ProblemData, state: &SchemeState) -> AuditReport {
    report.with_problem(data).with("n", state.n)
}

/// Residuals of both equations, `u ≥ 0`, and `v > 0` at interior nodes.
pub fn audit_self_consistency(state: &SchemeState, data: &ProblemData) -> Vec<AuditReport> {
    let zero_f = data.f().values().iter().all(|&x| x == 0.0);
    let v_bad = if zero_f {
        0
    } else {
        state.v_nonpositive_nodes().len()
    };
    let u_bad = state.u_nonpositive_on_support(data.f()).len();
    vec![
        AuditReport::new(
            "residual_u",
            state.residuals.u_equation,
            RESIDUAL_BOUND,
            0.0,
        ),
        AuditReport::new(
            "residual_v",
            state.residuals.v_equation,
            RESIDUAL_BOUND,
            0.0,
        ),
        AuditReport::new("u_nonnegative", (-state.u.min_value()).max(0.0), 0.0, 0.0),
        AuditReport::new("v_positive", v_bad as f64, 0.0, 0.0).with("floor", "1e-14*sup(v)"),
        AuditReport::new("u_positive_on_support", u_bad as f64, 0.0, 0.0)
            .with("exempt", "nodes with f = 0"),
    ]
    .into_iter()
    .map(|r| with_state(r.with("converged", state.converged), data, state))
    .collect()
}

/// `α‖Du‖² ≤ ∫ f_n u^(1-γ)` and `α‖Dv‖² ≤ ∫ u^r (v+1/n)^(-θ) v`.
pub fn audit_energy(
    state: &SchemeState,
    data: &ProblemData,
    it: &IterationControl,
) -> Result<Vec<AuditReport>, AuditError> {
    check_converged(state)?;
    let e = data.exponents();
    let alpha = data.coeff().alpha();
    let eps = data.epsilon_res(it);
    let f_n = crate::scheme::truncate_datum(data.f(), state.n)?;
    let s = shift(state);
    let rhs_u = f_n
        .zip_map(&state.u, |f, u| f * u.powf(1.0 - e.gamma))?
        .integral();
    let rhs_v = state
        .u
        .zip_map(&state.v, |u, v| u.powf(e.r) * v / (v + s).powf(e.theta))?
        .integral();
    Ok(vec![
        with_state(
            AuditReport::new(
                "energy_u",
                alpha * state.u.h1_seminorm().powi(2),
                rhs_u,
                eps,
            ),
            data,
            state,
        ),
        with_state(
            AuditReport::new(
                "energy_v",
                alpha * state.v.h1_seminorm().powi(2),
                rhs_v,
                eps,
            ),
            data,
            state,
        ),
    ])
}

/// `∫_{u ≥ h} u^r (v+1/n)^(-θ) ≤ β/(2h) (‖Du‖² + ‖Dv‖²)` for each level `h`.
pub fn audit_superlevel(
    state: &SchemeState,
    data: &ProblemData,
    heights: &[f64],
    it: &IterationControl,
) -> Result<Vec<AuditReport>, AuditError> {
    check_converged(state)?;
    let e = data.exponents();
    let beta = data.coeff().beta();
    let eps = data.epsilon_res(it);
    let s = shift(state);
    let weight = state
        .u
        .zip_map(&state.v, |u, v| u.powf(e.r) / (v + s).powf(e.theta))?;
    let energy = state.u.h1_seminorm().powi(2) + state.v.h1_seminorm().powi(2);
    heights
        .iter()
        .map(|&h| {
            let left = state.u.superlevel_integral(&weight, h)?;
            let report = AuditReport::new(
                format!("superlevel_h{h}"),
                left,
                beta / (2.0 * h) * energy,
                eps,
            );
            Ok(with_state(report.with("h", h), data, state))
        })
        .collect()
}

/// `‖u_n‖∞ ≤ 1 + C‖f‖_{L^m}` across the schedule with `C` fitted at the
/// smallest `n`, plus the relative change of `‖u_n‖∞` over the last step.
pub fn audit_linfty_bound(
    states: &[SchemeState],
    data: &ProblemData,
) -> Result<Vec<AuditReport>, AuditError> {
    require_regime(data, RegimeTag::Bounded)?;
    let anchor = states
        .iter()
        .min_by_key(|s| s.n)
        .ok_or_else(|| AuditError::Family("no levels to audit".into()))?;
    for s in states {
        check_converged(s)?;
    }
    let fm = f_norm(data)?;
    let c = ((anchor.u.sup_norm() - 1.0) / fm).max(0.0);
    let bound = LINFTY_HEADROOM * (1.0 + c * fm);
    let mut sorted: Vec<&SchemeState> = states.iter().collect();
    sorted.sort_by_key(|s| s.n);
    let mut out: Vec<AuditReport> = sorted
        .iter()
        .map(|s| {
            with_state(
                AuditReport::new("linfty_bound", s.u.sup_norm(), bound, 0.0),
                data,
                s,
            )
            .with("fitted_C", c)
            .with("anchor_n", anchor.n)
        })
        .collect();
    if let [.., prev, last] = sorted.as_slice() {
        let (a, b) = (prev.u.sup_norm(), last.u.sup_norm());
        out.push(
            with_state(
                AuditReport::new("linfty_stabilization", (b - a).abs() / a, 0.05, 0.0),
                data,
                last,
            )
            .with("previous_n", prev.n),
        );
    }
    Ok(out)
}

/// `‖u_n‖∞ ≤ C n^(1+γ)` across the schedule with `C` fitted at the
/// smallest `n` and never exceeded.
pub fn audit_level_growth(
    states: &[SchemeState],
    data: &ProblemData,
) -> Result<Vec<AuditReport>, AuditError> {
    let anchor = states
        .iter()
        .min_by_key(|s| s.n)
        .ok_or_else(|| AuditError::Family("no levels to audit".into()))?;
    for s in states {
        check_converged(s)?;
    }
    let e = data.exponents();
    let c = anchor.u.sup_norm() / (anchor.n as f64).powf(1.0 + e.gamma);
    Ok(states
        .iter()
        .map(|s| {
            let right = c * (s.n as f64).powf(1.0 + e.gamma);
            with_state(
                AuditReport::new("level_growth", s.u.sup_norm(), right, 0.0),
                data,
                s,
            )
            .with("fitted_C", c)
            .with("anchor_n", anchor.n)
        })
        .collect())
}

/// Solves `λ f₀` at level `n` for every `λ`, in parallel, in input order.
pub fn run_family(
    data: &ProblemData,
    lambdas: &[f64],
    n: u64,
    it: &IterationControl,
) -> Result<Vec<FamilyMember>, AuditError> {
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(AuditError::Family(
            "every lambda must be positive and finite".into(),
        ));
    }
    lambdas
        .par_iter()
        .map(|&lambda| {
            let member = data.scaled_datum(lambda)?;
            let state = solve_level(&member, n, it)?;
            check_converged(&state)?;
            Ok(FamilyMember {
                lambda,
                data: member,
                state,
            })
        })
        .collect()
}

fn check_family(family: &[FamilyMember], min_points: usize) -> Result<(), AuditError> {
    if family.len() < min_points {
        return Err(AuditError::Family(format!(
            "lambda grid too small: {} point(s), need at least {min_points}",
            family.len()
        )));
    }
    let mut lambdas: Vec<f64> = family.iter().map(|m| m.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    if lambdas.windows(2).any(|w| w[0] == w[1]) {
        return Err(AuditError::Family("lambda grid has repeated points".into()));
    }
    Ok(())
}

fn anchor(family: &[FamilyMember]) -> &FamilyMember {
    family
        .iter()
        .min_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .expect("family checked non-empty")
}

/// Scaling law in the dual-space regime.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingAudit {
    pub norm_fit: ScalingFit,
    pub energy_fit: ScalingFit,
    pub reports: Vec<AuditReport>,
}

/// Runs the family and audits `‖u_n‖_{L^{m**(1+γ)}} ≤ C‖f‖^{1/(1+γ)}` and
/// `‖u_n‖²_{H¹} ≤ C‖f‖^{2/(1+γ)}`.
pub fn audit_scaling_law(
    data: &ProblemData,
    lambdas: &[f64],
    n_fixed: u64,
    it: &IterationControl,
) -> Result<ScalingAudit, AuditError> {
    require_regime(data, RegimeTag::DualSpace)?;
    if lambdas.len() < 4 {
        return Err(AuditError::Family(format!(
            "lambda grid too small: {} point(s), need at least 4",
            lambdas.len()
        )));
    }
    let family = run_family(data, lambdas, n_fixed, it)?;
    scaling_from_family(&family)
}

pub fn scaling_from_family(family: &[FamilyMember]) -> Result<ScalingAudit, AuditError> {
    check_family(family, 4)?;
    let data = &anchor(family).data;
    require_regime(data, RegimeTag::DualSpace)?;
    let gamma = ratio_to_f64(data.params().gamma());
    let p = classify(data.params())
        .get(RegimeTag::DualSpace)
        .and_then(|e| e.u_space)
        .expect("dual-space entry carries an exponent");

    let mut lambdas = Vec::new();
    let mut norms = Vec::new();
    let mut energies = Vec::new();
    let mut f_norms = Vec::new();
    for m in family {
        lambdas.push(m.lambda);
        norms.push(m.state.u.lp_norm(p)?);
        energies.push(m.state.u.h1_seminorm().powi(2));
        f_norms.push(f_norm(&m.data)?);
    }
    let fit_of =
        |quantity: String, measured: &[f64], predicted: f64| -> Result<ScalingFit, AuditError> {
            let (slope, intercept) = fit::loglog_fit(&lambdas, measured).ok_or_else(|| {
                AuditError::Family(format!("cannot fit {quantity}: non-positive values"))
            })?;
            Ok(ScalingFit {
                quantity,
                lambdas: lambdas.clone(),
                measured: measured.to_vec(),
                slope,
                intercept,
                predicted_slope: predicted,
                tolerance: SLOPE_TOLERANCE,
            })
        };
    let norm_fit = fit_of(format!("u_L{p}"), &norms, 1.0 / (1.0 + gamma))?;
    let energy_fit = fit_of("u_H1_squared".into(), &energies, 2.0 / (1.0 + gamma))?;

    let i0 = family
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda))
        .map(|(i, _)| i)
        .expect("family checked non-empty");
    let mut reports = Vec::new();
    for (fit, values, power, id) in [
        (&norm_fit, &norms, 1.0 / (1.0 + gamma), "scaling_norm"),
        (
            &energy_fit,
            &energies,
            2.0 / (1.0 + gamma),
            "scaling_energy",
        ),
    ] {
        reports.push(
            AuditReport::new(
                format!("{id}_slope"),
                fit.slope,
                fit.predicted_slope + fit.tolerance,
                0.0,
            )
            .with_problem(data)
            .with("quantity", &fit.quantity)
            .with("n", anchor(family).state.n),
        );
        let c = values[i0] / f_norms[i0].powf(power);
        for (k, m) in family.iter().enumerate() {
            let right = FIT_HEADROOM * c * f_norms[k].powf(power);
            reports.push(
                with_state(
                    AuditReport::new(format!("{id}_bound"), values[k], right, 0.0),
                    &m.data,
                    &m.state,
                )
                .with("lambda", m.lambda)
                .with("fitted_C", c)
                .with("quantity", &fit.quantity),
            );
        }
    }
    Ok(ScalingAudit {
        norm_fit,
        energy_fit,
        reports,
    })
}

fn omega_measure(data: &ProblemData) -> f64 {
    data.grid().len() as f64 * data.grid().cell_volume()
}

/// Outside the dual space: the final display of the `L^r` bound, and for
/// `θ = 0` the `L^{r+1}` bound, each with the constant assembled from the
/// chain of inequalities.
///
/// For `L^r` the chain gives `∫u^r ≤ |Ω| + (1 + 2^θ β/(2α)) ∫ f_n u^(1-γ)`,
/// where `∫_{v≤1} u^{r+1}(v+1/n)^(-θ) ≤ ∫ A Dv·Du` comes from testing the
/// discrete `v`-equation with `u`. Hölder then gives the constant
/// `C = (1 + 2^θ β/(2α)) |Ω|^{1/m' - (1-γ)/r}`.
pub fn audit_outside_dual(
    state: &SchemeState,
    data: &ProblemData,
    it: &IterationControl,
) -> Result<Vec<AuditReport>, AuditError> {
    require_theory(data)?;
    let regime = classify(data.params());
    let (lr, lr1) = (
        regime.contains(RegimeTag::OutsideDualLr),
        regime.contains(RegimeTag::OutsideDualLr1),
    );
    if !lr && !lr1 {
        return Err(AuditError::Regime(format!(
            "outside-dual audits need the OutsideDual_Lr or OutsideDual_Lr1 regime; {} has neither (r > 2* - 1 and m below the dual threshold required)",
            data.params()
        )));
    }
    check_converged(state)?;
    let e = data.exponents();
    let (alpha, beta) = (data.coeff().alpha(), data.coeff().beta());
    let omega = omega_measure(data);
    let m = ratio_to_f64(data.params().m());
    let inv_m_conj = 1.0 - 1.0 / m;
    let fm = f_norm(data)?;
    let eps = data.epsilon_res(it);
    let mut out = Vec::new();
    if lr {
        let c = (1.0 + 2f64.powf(e.theta) * beta / (2.0 * alpha))
            * omega.powf(inv_m_conj - (1.0 - e.gamma) / e.r);
        let ur = state.u.lp_norm_f64(e.r)?;
        let left = ur.powf(e.r) * (1.0 - c * fm * ur.powf(1.0 - e.gamma - e.r));
        out.push(
            with_state(
                AuditReport::new("outside_dual_lr", left, omega, eps),
                data,
                state,
            )
            .with("C", c),
        );
    }
    if lr1 {
        let k = beta / (2.0 * alpha) * omega.powf(inv_m_conj - (1.0 - e.gamma) / (e.r + 1.0));
        let c = k.powf(1.0 / (e.r + e.gamma));
        let left = state.u.lp_norm_f64(e.r + 1.0)?;
        let right = c * fm.powf(1.0 / (e.r + e.gamma));
        out.push(
            with_state(
                AuditReport::new("outside_dual_lr1", left, right, eps),
                data,
                state,
            )
            .with("C", c),
        );
    }
    Ok(out)
}

/// `∫u^{r+1+γ} ≤ C‖f‖(1 + ‖f‖^{1/(r-1+γ)})` and `∫_{v≤1} u^{r+1+γ} ≤ C‖f‖`
/// across the family, constants fitted at the smallest `λ`.
pub fn audit_higher_integrability(family: &[FamilyMember]) -> Result<Vec<AuditReport>, AuditError> {
    check_family(family, 2)?;
    let base = &anchor(family).data;
    require_regime(base, RegimeTag::HigherIntegrability)?;
    let e = base.exponents();
    let power = e.r + 1.0 + e.gamma;
    let mut rows = Vec::new();
    for m in family {
        let fm = f_norm(&m.data)?;
        let total = m.state.u.map(|u| u.powf(power)).integral();
        let split = m
            .state
            .u
            .zip_map(
                &m.state.v,
                |u, v| if v <= 1.0 { u.powf(power) } else { 0.0 },
            )?
            .integral();
        let nodes = m.state.v.values().iter().filter(|&&v| v <= 1.0).count();
        rows.push((m, fm, total, split, nodes));
    }
    let shape = |fm: f64| fm * (1.0 + fm.powf(1.0 / (e.r - 1.0 + e.gamma)));
    let a = rows
        .iter()
        .min_by(|x, y| x.0.lambda.total_cmp(&y.0.lambda))
        .expect("family checked non-empty");
    let c_total = a.2 / shape(a.1);
    let c_split = a.3 / a.1;
    let it = IterationControl::default();
    let mut out = Vec::new();
    for (m, fm, total, split, nodes) in &rows {
        let eps = m.data.epsilon_res(&it);
        out.push(
            with_state(
                AuditReport::new(
                    "higher_integrability",
                    *total,
                    FIT_HEADROOM * c_total * shape(*fm),
                    eps,
                ),
                &m.data,
                &m.state,
            )
            .with("lambda", m.lambda)
            .with("fitted_C", c_total),
        );
        out.push(
            with_state(
                AuditReport::new(
                    "higher_integrability_split",
                    *split,
                    FIT_HEADROOM * c_split * fm,
                    eps,
                ),
                &m.data,
                &m.state,
            )
            .with("lambda", m.lambda)
            .with("fitted_C", c_split)
            .with("nodes_v_le_1", nodes),
        );
    }
    Ok(out)
}

/// Bounds on `v_n` for `r = 2` in the dual space: the sup bound when
/// `m > d/(3+γ)`, the `L^{s_m}` bound below that threshold.
pub fn audit_v_regularity(family: &[FamilyMember]) -> Result<Vec<AuditReport>, AuditError> {
    check_family(family, 2)?;
    let base = &anchor(family).data;
    require_theory(base)?;
    let s = s_m(base.params()).map_err(|e| AuditError::Regime(e.to_string()))?;
    let gamma = ratio_to_f64(base.params().gamma());
    let theta = ratio_to_f64(base.params().theta());
    let mut rows = Vec::new();
    for m in family {
        let fm = f_norm(&m.data)?;
        let value = match s {
            Exponent::AnyFinite => {
                return Err(AuditError::Regime(
                    "m = d/(3+γ): every finite exponent is predicted; no single norm to audit"
                        .into(),
                ))
            }
            p => m.state.v.lp_norm(p)?,
        };
        rows.push((m, fm, value));
    }
    let a = rows
        .iter()
        .min_by(|x, y| x.0.lambda.total_cmp(&y.0.lambda))
        .expect("family checked non-empty");
    let mut out = Vec::new();
    match s {
        Exponent::Infinite => {
            let power = 2.0 / (1.0 + gamma);
            let c = ((a.2 - 1.0) / a.1.powf(power)).max(0.0);
            for (m, fm, value) in &rows {
                let right = FIT_HEADROOM * (1.0 + c * fm.powf(power));
                out.push(
                    with_state(
                        AuditReport::new("v_sup_bound", *value, right, 0.0),
                        &m.data,
                        &m.state,
                    )
                    .with("lambda", m.lambda)
                    .with("fitted_C", c),
                );
            }
        }
        _ => {
            let power = 2.0 / ((1.0 + theta) * (1.0 + gamma));
            let c = a.2 / a.1.powf(power);
            for (m, fm, value) in &rows {
                let right = FIT_HEADROOM * c * fm.powf(power);
                out.push(
                    with_state(
                        AuditReport::new("v_lp_bound", *value, right, 0.0),
                        &m.data,
                        &m.state,
                    )
                    .with("lambda", m.lambda)
                    .with("fitted_C", c)
                    .with("exponent", s),
                );
            }
        }
    }
    Ok(out)
}

/// Solves the `u`-equation from `u ≡ 0` and `u ≡ 1` and compares.
pub fn audit_uniqueness(
    data: &ProblemData,
    v: &Field,
    n: u64,
    it: &IterationControl,
) -> Result<AuditReport, AuditError> {
    let g = data.grid();
    let a = solve_u_given_v_from(data, v, n, &Field::zeros(g), it)?;
    let b = solve_u_given_v_from(data, v, n, &Field::constant(g, 1.0), it)?;
    let gap = a.field.zip_map(&b.field, |x, y| x - y)?.sup_norm();
    let tol = 10.0 * it.tol_inner * (1.0 + a.field.sup_norm());
    Ok(AuditReport::new("uniqueness_u", gap, tol, 0.0)
        .with_problem(data)
        .with("n", n)
        .with("iterations", format!("{}/{}", a.iterations, b.iterations)))
}

/// `‖u_{2n} - u_n‖_{L²}` must decrease over the last three steps of the
/// schedule.
pub fn audit_cauchy_trend(
    sweep: &SweepReport,
    data: &ProblemData,
) -> Result<Vec<AuditReport>, AuditError> {
    let diffs: Vec<(u64, f64)> = sweep
        .levels
        .iter()
        .filter_map(|l| {
            l.result
                .as_ref()
                .ok()
                .and_then(|(_, norms)| norms.u_l2_diff.map(|d| (l.n, d)))
        })
        .collect();
    if diffs.len() < 3 {
        return Err(AuditError::Family(format!(
            "Cauchy trend needs three successive differences, have {}",
            diffs.len()
        )));
    }
    let tail = &diffs[diffs.len() - 3..];
    Ok(tail
        .windows(2)
        .map(|w| {
            AuditReport::new("cauchy_trend", w[1].1, w[0].1, 0.0)
                .with_problem(data)
                .with("n", w[1].0)
                .with("previous_n", w[0].0)
        })
        .collect())
}
