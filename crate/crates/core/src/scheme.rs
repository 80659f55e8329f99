//! The regularized problems at level `n`:
//!
//! ```text
//! -div(A Du) + v^(1-θ) u^(r-1) = f_n / (u + 1/n)^γ
//! -div(A Dv)                   = u^r / (v + 1/n)^θ
//! ```
//!
//! with `f_n = min(f, n)`, solved by frozen-coefficient Picard iterations for
//! each equation inside an alternating outer loop.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exponents::{classify, ratio_to_f64, Exponent, ExponentError, Params};
use crate::field::{Field, FieldError, GridSpec};
use crate::operator::{assemble, cg_solve_from, CoefficientField, OperatorError};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("datum is negative at node {index}: {value}")]
    NegativeDatum { index: usize, value: f64 },
    #[error("datum is identically zero")]
    TrivialDatum,
    #[error("{which} is negative at node {index}: {value}")]
    NegativeInput {
        which: &'static str,
        index: usize,
        value: f64,
    },
    #[error("regularization level must be at least 1, got {0}")]
    Level(u64),
    #[error("parameters are for d = {params} but the grid has d = {grid}; only grids with d < 3 may differ")]
    DimensionMismatch { params: u32, grid: usize },
    #[error("schedule must be non-empty and strictly increasing")]
    Schedule,
    #[error("{which}-iteration did not converge in {iterations} steps (last update {last:e})")]
    InnerNonConvergence {
        which: &'static str,
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },
    #[error("datum: {0}")]
    Datum(String),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Known sources added to the right-hand sides, used by manufactured-solution
/// studies.
#[derive(Debug, Clone)]
pub struct Sources {
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone)]
pub struct ProblemData {
    params: Params,
    coeff: CoefficientField,
    f: Field,
    sources: Option<Sources>,
}

impl ProblemData {
    /// `f` must be nonnegative and not identically zero.
    pub fn new(params: Params, coeff: CoefficientField, f: Field) -> Result<Self, SchemeError> {
        let data = Self::allow_trivial(params, coeff, f)?;
        if data.f.values().iter().all(|&x| x == 0.0) {
            return Err(SchemeError::TrivialDatum);
        }
        Ok(data)
    }

    /// Like [`ProblemData::new`] but accepts `f ≡ 0`; for test problems
    /// outside the theory.
    pub fn allow_trivial(
        params: Params,
        coeff: CoefficientField,
        f: Field,
    ) -> Result<Self, SchemeError> {
        f.check_grid(&Field::zeros(coeff.grid()))?;
        let grid = coeff.grid();
        if !grid.theory_off() && params.d() as usize != grid.d() {
            return Err(SchemeError::DimensionMismatch {
                params: params.d(),
                grid: grid.d(),
            });
        }
        if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
            return Err(SchemeError::NegativeDatum { index, value });
        }
        Ok(Self {
            params,
            coeff,
            f,
            sources: None,
        })
    }

    pub fn with_sources(mut self, sources: Sources) -> Result<Self, SchemeError> {
        self.f.check_grid(&sources.u)?;
        self.f.check_grid(&sources.v)?;
        self.sources = Some(sources);
        Ok(self)
    }

    /// The same problem with `f` replaced by `λ f`.
    pub fn scaled_datum(&self, lambda: f64) -> Result<Self, SchemeError> {
        let mut out = Self::new(self.params, self.coeff.clone(), self.f.scaled(lambda))?;
        out.sources = self.sources.clone();
        Ok(out)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> GridSpec {
        self.coeff.grid()
    }

    pub fn coeff(&self) -> &CoefficientField {
        &self.coeff
    }

    pub fn f(&self) -> &Field {
        &self.f
    }

    pub fn sources(&self) -> Option<&Sources> {
        self.sources.as_ref()
    }

    /// True when the grid dimension is below 3, where the theory does not
    /// apply.
    pub fn theory_off(&self) -> bool {
        self.grid().theory_off()
    }

    /// `ε_res = 10 · tol_outer · ‖f‖_{L¹}`.
    pub fn epsilon_res(&self, it: &IterationControl) -> f64 {
        10.0 * it.tol_outer * self.f.integral()
    }

    pub(crate) fn exponents(&self) -> Exps {
        Exps {
            r: ratio_to_f64(self.params.r()),
            gamma: ratio_to_f64(self.params.gamma()),
            theta: ratio_to_f64(self.params.theta()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Exps {
    pub r: f64,
    pub gamma: f64,
    pub theta: f64,
}

/// How each inner step linearizes its equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearization {
    /// Nonlinear coefficients and the singular right-hand side frozen at the
    /// previous iterate.
    #[default]
    Picard,
    /// Newton step. The derivatives of the absorption and of the singular
    /// terms both enter the reaction with a nonnegative sign, so every step
    /// is still an M-matrix solve.
    Newton,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationControl {
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub omega_min: f64,
    pub linearization: Linearization,
}

impl Default for IterationControl {
    fn default() -> Self {
        Self {
            tol_inner: 1e-8,
            tol_outer: 1e-7,
            max_inner: 200,
            max_outer: 100,
            linear_tol: 1e-10,
            linear_max_iter: 10_000,
            omega_min: 1.0 / 16.0,
            linearization: Linearization::Picard,
        }
    }
}

/// `f_n = min(f, n)`.
pub fn truncate_datum(f: &Field, n: u64) -> Result<Field, SchemeError> {
    check_level(n)?;
    Ok(f.map(|x| x.min(n as f64)))
}

fn check_level(n: u64) -> Result<(), SchemeError> {
    if n == 0 {
        Err(SchemeError::Level(n))
    } else {
        Ok(())
    }
}

fn check_nonnegative(which: &'static str, x: &Field) -> Result<(), SchemeError> {
    match x.values().iter().enumerate().find(|(_, s)| !(**s >= 0.0)) {
        Some((index, &value)) => Err(SchemeError::NegativeInput {
            which,
            index,
            value,
        }),
        None => Ok(()),
    }
}

/// Result of one inner fixed-point solve.
#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub field: Field,
    pub iterations: usize,
    pub linear_iterations: usize,
    pub omega: f64,
    /// Sup-norm update per iteration.
    pub trace: Vec<f64>,
}

// Damped Picard loop shared by both equations. `step` maps the current
// iterate and a warm start to the next undamped iterate.
fn picard(
    which: &'static str,
    init: Field,
    it: &IterationControl,
    mut step: impl FnMut(&Field) -> Result<(Field, usize), SchemeError>,
) -> Result<InnerSolve, SchemeError> {
    let mut u = init;
    let mut omega: f64 = 1.0;
    let mut trace = Vec::new();
    let mut rises = 0;
    let mut linear_iterations = 0;
    for k in 1..=it.max_inner {
        let (next, lin) = step(&u)?;
        linear_iterations += lin;
        let relaxed = u.zip_map(&next, |old, new| (1.0 - omega) * old + omega * new.max(0.0))?;
        let delta = relaxed.zip_map(&u, |a, b| a - b)?.sup_norm();
        let scale = 1.0 + u.sup_norm();
        u = relaxed;
        if trace.last().is_some_and(|&prev| delta > prev) {
            rises += 1;
        } else {
            rises = 0;
        }
        trace.push(delta);
        if delta <= it.tol_inner * scale {
            return Ok(InnerSolve {
                field: u,
                iterations: k,
                linear_iterations,
                omega,
                trace,
            });
        }
        if rises == 2 && omega > it.omega_min && it.linearization == Linearization::Picard {
            omega = (omega / 2.0).max(it.omega_min);
            rises = 0;
        }
    }
    let last = trace.last().copied().unwrap_or(f64::NAN);
    Err(SchemeError::InnerNonConvergence {
        which,
        iterations: it.max_inner,
        last,
        trace,
    })
}

/// Solves the `u`-equation at level `n` for fixed `v`, starting from `u ≡ 0`.
pub fn solve_u_given_v(
    data: &ProblemData,
    v: &Field,
    n: u64,
    it: &IterationControl,
) -> Result<InnerSolve, SchemeError> {
    solve_u_given_v_from(data, v, n, &Field::zeros(data.grid()), it)
}

pub fn solve_u_given_v_from(
    data: &ProblemData,
    v: &Field,
    n: u64,
    init: &Field,
    it: &IterationControl,
) -> Result<InnerSolve, SchemeError> {
    check_level(n)?;
    data.f.check_grid(v)?;
    data.f.check_grid(init)?;
    check_nonnegative("v", v)?;
    check_nonnegative("initial u", init)?;
    let e = data.exponents();
    let shift = 1.0 / n as f64;
    let f_n = truncate_datum(&data.f, n)?;
    let weight = v.map(|x| x.powf(1.0 - e.theta));
    let newton = it.linearization == Linearization::Newton;
    picard("u", init.clone(), it, |u| {
        let len = u.len();
        let (mut reaction, mut rhs) = (vec![0.0; len], vec![0.0; len]);
        for i in 0..len {
            let (w, s, f) = (weight.values()[i], u.values()[i], f_n.values()[i]);
            let singular = f / (s + shift).powf(e.gamma);
            if newton {
                let slope = e.gamma * singular / (s + shift);
                reaction[i] = (e.r - 1.0) * w * s.powf(e.r - 2.0) + slope;
                rhs[i] = singular + slope * s + (e.r - 2.0) * w * s.powf(e.r - 1.0);
            } else {
                reaction[i] = w * s.powf(e.r - 2.0);
                rhs[i] = singular;
            }
        }
        let reaction = Field::new(data.grid(), reaction)?;
        let mut rhs = Field::new(data.grid(), rhs)?;
        if let Some(src) = &data.sources {
            rhs = rhs.zip_map(&src.u, |a, b| a + b)?;
        }
        let sys = assemble(&data.coeff, &reaction)?;
        let sol = cg_solve_from(&sys, &rhs, u, it.linear_tol, it.linear_max_iter)?;
        Ok((sol.solution, sol.diagnostics.iterations))
    })
}

/// Solves the `v`-equation at level `n` for fixed `u`, starting from `v ≡ 0`.
pub fn solve_v_given_u(
    data: &ProblemData,
    u: &Field,
    n: u64,
    it: &IterationControl,
) -> Result<InnerSolve, SchemeError> {
    solve_v_given_u_from(data, u, n, &Field::zeros(data.grid()), it)
}

pub fn solve_v_given_u_from(
    data: &ProblemData,
    u: &Field,
    n: u64,
    init: &Field,
    it: &IterationControl,
) -> Result<InnerSolve, SchemeError> {
    check_level(n)?;
    data.f.check_grid(u)?;
    data.f.check_grid(init)?;
    check_nonnegative("u", u)?;
    check_nonnegative("initial v", init)?;
    let e = data.exponents();
    let shift = 1.0 / n as f64;
    let source = u.map(|s| s.powf(e.r));
    let zero = Field::zeros(data.grid());
    let sys = assemble(&data.coeff, &zero)?;
    let rhs_at = |v: &Field| -> Result<Field, SchemeError> {
        let mut rhs = source.zip_map(v, |s, x| s / (x + shift).powf(e.theta))?;
        if let Some(src) = &data.sources {
            rhs = rhs.zip_map(&src.v, |a, b| a + b)?;
        }
        Ok(rhs)
    };
    if e.theta == 0.0 && data.sources.is_none() {
        let sol = cg_solve_from(
            &sys,
            &rhs_at(init)?,
            init,
            it.linear_tol,
            it.linear_max_iter,
        )?;
        let field = sol.solution.map(|x| x.max(0.0));
        let delta = field.zip_map(init, |a, b| a - b)?.sup_norm();
        return Ok(InnerSolve {
            field,
            iterations: 1,
            linear_iterations: sol.diagnostics.iterations,
            omega: 1.0,
            trace: vec![delta],
        });
    }
    if it.linearization == Linearization::Newton {
        return picard("v", init.clone(), it, |v| {
            let slope = source.zip_map(v, |s, x| e.theta * s / (x + shift).powf(1.0 + e.theta))?;
            let rhs = rhs_at(v)?.zip_map(&slope.zip_map(v, |a, b| a * b)?, |a, b| a + b)?;
            let sys = assemble(&data.coeff, &slope)?;
            let sol = cg_solve_from(&sys, &rhs, v, it.linear_tol, it.linear_max_iter)?;
            Ok((sol.solution, sol.diagnostics.iterations))
        });
    }
    picard("v", init.clone(), it, |v| {
        let sol = cg_solve_from(&sys, &rhs_at(v)?, v, it.linear_tol, it.linear_max_iter)?;
        Ok((sol.solution, sol.diagnostics.iterations))
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Residuals {
    /// `‖L_u(u, v) - rhs_u‖₂ / ‖rhs_u‖₂` at the returned state.
    pub u_equation: f64,
    pub v_equation: f64,
    /// Last outer sup-norm updates.
    pub u_update: f64,
    pub v_update: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeState {
    pub n: u64,
    #[serde(skip)]
    pub u: Field,
    #[serde(skip)]
    pub v: Field,
    pub inner_iters_u: usize,
    pub inner_iters_v: usize,
    pub linear_iters: usize,
    pub outer_iters: usize,
    pub converged: bool,
    pub residuals: Residuals,
}

impl SchemeState {
    /// Nodes where `v` is not strictly positive, using the floor
    /// `1e-14 · ‖v‖∞`.
    pub fn v_nonpositive_nodes(&self) -> Vec<usize> {
        let floor = 1e-14 * self.v.sup_norm();
        self.v
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &x)| !(x > floor))
            .map(|(i, _)| i)
            .collect()
    }

    /// Nodes with `f > 0` where `u` is not strictly positive.
    pub fn u_nonpositive_on_support(&self, f: &Field) -> Vec<usize> {
        let floor = 1e-14 * self.u.sup_norm();
        f.values()
            .iter()
            .zip(self.u.values())
            .enumerate()
            .filter(|(_, (&fi, &ui))| fi > 0.0 && !(ui > floor))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Relative residuals of both discrete equations at `(u, v)`.
pub fn equation_residuals(
    data: &ProblemData,
    u: &Field,
    v: &Field,
    n: u64,
) -> Result<(f64, f64), SchemeError> {
    check_level(n)?;
    let e = data.exponents();
    let shift = 1.0 / n as f64;
    let f_n = truncate_datum(&data.f, n)?;
    let zero = Field::zeros(data.grid());
    let sys = assemble(&data.coeff, &zero)?;

    let mut rhs_u = f_n.zip_map(u, |f, s| f / (s + shift).powf(e.gamma))?;
    let mut rhs_v = u.zip_map(v, |s, x| s.powf(e.r) / (x + shift).powf(e.theta))?;
    if let Some(src) = &data.sources {
        rhs_u = rhs_u.zip_map(&src.u, |a, b| a + b)?;
        rhs_v = rhs_v.zip_map(&src.v, |a, b| a + b)?;
    }
    let absorption = v.zip_map(u, |x, s| x.powf(1.0 - e.theta) * s.powf(e.r - 1.0))?;
    let lhs_u = sys.apply(u)?.zip_map(&absorption, |a, b| a + b)?;
    let lhs_v = sys.apply(v)?;
    Ok((relative(&lhs_u, &rhs_u)?, relative(&lhs_v, &rhs_v)?))
}

fn relative(lhs: &Field, rhs: &Field) -> Result<f64, SchemeError> {
    let diff = lhs.zip_map(rhs, |a, b| a - b)?;
    let num = diff.dot(&diff).sqrt();
    let den = rhs.dot(rhs).sqrt();
    Ok(if den > 0.0 { num / den } else { num })
}

/// Alternating outer iteration at level `n` from `(0, 0)`.
///
/// Exceeding the outer cap is not an error: the last iterate is returned
/// with `converged = false`.
pub fn solve_level(
    data: &ProblemData,
    n: u64,
    it: &IterationControl,
) -> Result<SchemeState, SchemeError> {
    check_level(n)?;
    let grid = data.grid();
    let mut u = Field::zeros(grid);
    let mut v = Field::zeros(grid);
    let mut state = SchemeState {
        n,
        u: u.clone(),
        v: v.clone(),
        inner_iters_u: 0,
        inner_iters_v: 0,
        linear_iters: 0,
        outer_iters: 0,
        converged: false,
        residuals: Residuals::default(),
    };
    for outer in 1..=it.max_outer {
        let v_solve = solve_v_given_u_from(data, &u, n, &v, it)?;
        let u_solve = solve_u_given_v_from(data, &v_solve.field, n, &u, it)?;
        state.inner_iters_v += v_solve.iterations;
        state.inner_iters_u += u_solve.iterations;
        state.linear_iters += v_solve.linear_iterations + u_solve.linear_iterations;
        let du = u_solve.field.zip_map(&u, |a, b| a - b)?.sup_norm();
        let dv = v_solve.field.zip_map(&v, |a, b| a - b)?.sup_norm();
        u = u_solve.field;
        v = v_solve.field;
        state.outer_iters = outer;
        state.residuals.u_update = du;
        state.residuals.v_update = dv;
        if du <= it.tol_outer * (1.0 + u.sup_norm()) && dv <= it.tol_outer * (1.0 + v.sup_norm()) {
            state.converged = true;
            break;
        }
    }
    let (ru, rv) = equation_residuals(data, &u, &v, n)?;
    state.residuals.u_equation = ru;
    state.residuals.v_equation = rv;
    state.u = u;
    state.v = v;
    Ok(state)
}

/// Wraps externally supplied fields as a state at level `n`, with residuals
/// recomputed from the fields. The state is marked converged; audits then
/// judge it on its residuals.
pub fn state_from_fields(
    data: &ProblemData,
    n: u64,
    u: Field,
    v: Field,
) -> Result<SchemeState, SchemeError> {
    data.f.check_grid(&u)?;
    data.f.check_grid(&v)?;
    check_nonnegative("u", &u)?;
    check_nonnegative("v", &v)?;
    let (u_equation, v_equation) = equation_residuals(data, &u, &v, n)?;
    Ok(SchemeState {
        n,
        u,
        v,
        inner_iters_u: 0,
        inner_iters_v: 0,
        linear_iters: 0,
        outer_iters: 0,
        converged: true,
        residuals: Residuals {
            u_equation,
            v_equation,
            u_update: 0.0,
            v_update: 0.0,
        },
    })
}

/// Norms tracked per level of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LevelNorms {
    /// `(exponent, ‖u_n‖_{L^p})` for every concrete regime exponent, plus ∞.
    pub u_lp: Vec<(Exponent, f64)>,
    pub u_h1: f64,
    pub v_h1: f64,
    pub u_sup: f64,
    pub v_sup: f64,
    /// `‖u_n - u_prev‖_{L²}` against the previous schedule entry.
    pub u_l2_diff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub n: u64,
    pub result: Result<(SchemeState, LevelNorms), String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub levels: Vec<LevelOutcome>,
    pub exponents: Vec<Exponent>,
}

/// Exponents whose norms a sweep tracks: the concrete regime exponents of
/// the problem (none in theory-off mode) and ∞, sorted and deduplicated.
pub fn tracked_exponents(data: &ProblemData) -> Vec<Exponent> {
    let mut exps: Vec<Exponent> = if data.theory_off() {
        Vec::new()
    } else {
        classify(&data.params)
            .u_exponents()
            .into_iter()
            .filter(|e| matches!(e, Exponent::Finite(_)))
            .collect()
    };
    exps.push(Exponent::Infinite);
    exps.sort();
    exps.dedup();
    exps
}

/// Runs `solve_level` for every `n` in the schedule, levels in parallel.
/// Results are in schedule order and do not depend on thread scheduling.
pub fn sweep_n(
    data: &ProblemData,
    schedule: &[u64],
    it: &IterationControl,
) -> Result<SweepReport, SchemeError> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SchemeError::Schedule);
    }
    check_level(schedule[0])?;
    let exponents = tracked_exponents(data);
    let states: Vec<Result<SchemeState, String>> = schedule
        .par_iter()
        .map(|&n| solve_level(data, n, it).map_err(|e| e.to_string()))
        .collect();

    let mut levels = Vec::with_capacity(schedule.len());
    let mut prev: Option<&Field> = None;
    for (&n, state) in schedule.iter().zip(&states) {
        let result = match state {
            Ok(s) => {
                let u_lp = exponents
                    .iter()
                    .map(|&p| Ok((p, s.u.lp_norm(p)?)))
                    .collect::<Result<Vec<_>, FieldError>>()?;
                let u_l2_diff = match prev {
                    Some(p) => Some(s.u.zip_map(p, |a, b| a - b)?.lp_norm_f64(2.0)?),
                    None => None,
                };
                let norms = LevelNorms {
                    u_lp,
                    u_h1: s.u.h1_seminorm(),
                    v_h1: s.v.h1_seminorm(),
                    u_sup: s.u.sup_norm(),
                    v_sup: s.v.sup_norm(),
                    u_l2_diff,
                };
                prev = Some(&s.u);
                Ok((s.clone(), norms))
            }
            Err(msg) => {
                prev = None;
                Err(msg.clone())
            }
        };
        levels.push(LevelOutcome { n, result });
    }
    Ok(SweepReport { levels, exponents })
}

impl SweepReport {
    pub fn all_converged(&self) -> bool {
        self.levels
            .iter()
            .all(|l| matches!(&l.result, Ok((s, _)) if s.converged))
    }

    pub fn states(&self) -> impl Iterator<Item = &SchemeState> {
        self.levels
            .iter()
            .filter_map(|l| l.result.as_ref().ok().map(|(s, _)| s))
    }

    pub fn table_header(&self) -> Vec<String> {
        let mut cols = vec!["n".to_string()];
        cols.extend(self.exponents.iter().map(|p| format!("u_L{p}")));
        cols.extend(
            [
                "u_H1",
                "v_H1",
                "u_sup",
                "v_sup",
                "u_L2_diff_prev",
                "inner_iters_u",
                "inner_iters_v",
                "outer_iters",
                "linear_iters",
                "converged",
                "residual_u",
                "residual_v",
                "error",
            ]
            .map(String::from),
        );
        cols
    }

    /// One row per level, aligned with [`SweepReport::table_header`].
    pub fn table_rows(&self) -> Vec<Vec<String>> {
        let width = self.table_header().len();
        self.levels
            .iter()
            .map(|level| {
                let mut row = vec![level.n.to_string()];
                match &level.result {
                    Ok((s, norms)) => {
                        row.extend(norms.u_lp.iter().map(|(_, x)| fmt(*x)));
                        row.extend([norms.u_h1, norms.v_h1, norms.u_sup, norms.v_sup].map(fmt));
                        row.push(norms.u_l2_diff.map(fmt).unwrap_or_default());
                        row.extend(
                            [
                                s.inner_iters_u,
                                s.inner_iters_v,
                                s.outer_iters,
                                s.linear_iters,
                            ]
                            .map(|x| x.to_string()),
                        );
                        row.push(s.converged.to_string());
                        row.push(fmt(s.residuals.u_equation));
                        row.push(fmt(s.residuals.v_equation));
                        row.push(String::new());
                    }
                    Err(msg) => {
                        row.resize(width - 4, String::new());
                        row.extend(["false".into(), String::new(), String::new(), msg.clone()]);
                    }
                }
                row
            })
            .collect()
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::cg_solve;

    fn params(r: &str, gamma: &str, theta: &str) -> Params {
        Params::parse(3, r, gamma, theta, "2").unwrap()
    }

    fn problem(d: usize, n_cells: usize, p: Params, f: Field) -> ProblemData {
        let g = GridSpec::new(d, n_cells).unwrap();
        ProblemData::new(p, CoefficientField::constant(g, 1.0).unwrap(), f).unwrap()
    }

    #[test]
    fn truncate_datum_examples() {
        let g = GridSpec::new(1, 5).unwrap();
        let f = Field::new(g, vec![0.0, 1.0, 2.5, 7.0, 3.0]).unwrap();
        assert_eq!(truncate_datum(&f, 8).unwrap().values(), f.values());
        assert_eq!(
            truncate_datum(&Field::constant(g, 10.0), 3)
                .unwrap()
                .values(),
            &[3.0; 5]
        );
        assert_eq!(
            truncate_datum(&f, 2).unwrap().values(),
            &[0.0, 1.0, 2.0, 2.0, 2.0]
        );
        assert!(truncate_datum(&f, 0).is_err());
    }

    #[test]
    fn data_guards() {
        let g = GridSpec::new(2, 4).unwrap();
        let coeff = CoefficientField::constant(g, 1.0).unwrap();
        let p = params("2", "1/2", "1/2");
        assert!(matches!(
            ProblemData::new(p, coeff.clone(), Field::zeros(g)),
            Err(SchemeError::TrivialDatum)
        ));
        let mut f = Field::constant(g, 1.0);
        f.values_mut()[3] = -1.0;
        assert!(matches!(
            ProblemData::new(p, coeff.clone(), f),
            Err(SchemeError::NegativeDatum { index: 3, .. })
        ));
        assert!(ProblemData::allow_trivial(p, coeff, Field::zeros(g)).is_ok());
    }

    #[test]
    fn zero_datum_gives_zero_state() {
        let g = GridSpec::new(1, 9).unwrap();
        let data = ProblemData::allow_trivial(
            params("2", "1/2", "1/2"),
            CoefficientField::constant(g, 1.0).unwrap(),
            Field::zeros(g),
        )
        .unwrap();
        let it = IterationControl::default();
        let u = solve_u_given_v(&data, &Field::zeros(g), 4, &it).unwrap();
        assert_eq!(u.iterations, 1);
        assert_eq!(u.field.sup_norm(), 0.0);
        let v = solve_v_given_u(&data, &Field::zeros(g), 4, &it).unwrap();
        assert_eq!(v.field.sup_norm(), 0.0);
        let state = solve_level(&data, 4, &it).unwrap();
        assert!(state.converged);
        assert_eq!(state.outer_iters, 1);
        assert_eq!((state.u.sup_norm(), state.v.sup_norm()), (0.0, 0.0));
    }

    #[test]
    fn small_gamma_approaches_poisson() {
        let g = GridSpec::new(2, 15).unwrap();
        let p = Params::parse(3, "2", "1/1000", "1/2", "2").unwrap();
        let data = problem(2, 15, p, Field::constant(g, 1.0));
        let it = IterationControl::default();
        let u = solve_u_given_v(&data, &Field::zeros(g), 1000, &it)
            .unwrap()
            .field;
        let sys = assemble(data.coeff(), &Field::zeros(g)).unwrap();
        let poisson = cg_solve(&sys, &Field::constant(g, 1.0), 1e-12, 1000)
            .unwrap()
            .solution;
        let rel = u.zip_map(&poisson, |a, b| a - b).unwrap().sup_norm() / poisson.sup_norm();
        assert!(rel < 0.01, "relative gap {rel}");
    }

    #[test]
    fn u_solve_unique_from_two_starts() {
        let g = GridSpec::new(2, 12).unwrap();
        let data = problem(
            2,
            12,
            params("3", "1/2", "1/2"),
            Field::from_fn(g, |x| 1.0 + 4.0 * x[0]),
        );
        let v = Field::from_fn(g, |x| x[0] * (1.0 - x[0]) * x[1]);
        let it = IterationControl::default();
        let a = solve_u_given_v_from(&data, &v, 8, &Field::zeros(g), &it).unwrap();
        let b = solve_u_given_v_from(&data, &v, 8, &Field::constant(g, 1.0), &it).unwrap();
        let gap = a.field.zip_map(&b.field, |x, y| x - y).unwrap().sup_norm();
        assert!(
            gap <= 10.0 * it.tol_inner * (1.0 + a.field.sup_norm()),
            "gap {gap}"
        );
    }

    #[test]
    fn v_solve_theta_zero_is_one_linear_solve() {
        let g = GridSpec::new(2, 10).unwrap();
        let data = problem(2, 10, params("2", "1/2", "0"), Field::constant(g, 1.0));
        let u = Field::from_fn(g, |x| (x[0] * x[1]).sqrt());
        let it = IterationControl::default();
        let v = solve_v_given_u(&data, &u, 4, &it).unwrap();
        assert_eq!(v.iterations, 1);
        let sys = assemble(data.coeff(), &Field::zeros(g)).unwrap();
        let direct = cg_solve(&sys, &u.map(|s| s * s), 1e-12, 1000)
            .unwrap()
            .solution;
        assert!(
            v.field.zip_map(&direct, |a, b| a - b).unwrap().sup_norm() < 1e-8 * direct.sup_norm()
        );
    }

    #[test]
    fn v_solve_self_consistent_1d() {
        let g = GridSpec::new(1, 31).unwrap();
        let data = problem(1, 31, params("2", "1/2", "1/2"), Field::constant(g, 1.0));
        let u = Field::constant(g, 1.0);
        let it = IterationControl::default();
        let n = 4;
        let v = solve_v_given_u(&data, &u, n, &it).unwrap().field;
        let sys = assemble(data.coeff(), &Field::zeros(g)).unwrap();
        let rhs = v.map(|x| 1.0 / (x + 0.25).sqrt());
        let lhs = sys.apply(&v).unwrap();
        let res = relative(&lhs, &rhs).unwrap();
        assert!(res <= 1e-6, "residual {res}");
        assert!(v.min_value() > 0.0);
    }

    #[test]
    fn inner_solves_reject_negative_input() {
        let g = GridSpec::new(1, 5).unwrap();
        let data = problem(1, 5, params("2", "1/2", "1/2"), Field::constant(g, 1.0));
        let mut neg = Field::zeros(g);
        neg.values_mut()[1] = -0.5;
        let it = IterationControl::default();
        assert!(matches!(
            solve_u_given_v(&data, &neg, 2, &it),
            Err(SchemeError::NegativeInput {
                which: "v",
                index: 1,
                ..
            })
        ));
        assert!(matches!(
            solve_v_given_u(&data, &neg, 2, &it),
            Err(SchemeError::NegativeInput { which: "u", .. })
        ));
    }

    #[test]
    fn level_solve_small_3d() {
        let g = GridSpec::new(3, 7).unwrap();
        let data = problem(3, 7, params("2", "1/2", "1/2"), Field::constant(g, 1.0));
        let it = IterationControl::default();
        let s = solve_level(&data, 8, &it).unwrap();
        assert!(s.converged);
        assert!(
            s.residuals.u_equation <= 1e-6 && s.residuals.v_equation <= 1e-6,
            "{:?}",
            s.residuals
        );
        assert!(s.u.min_value() >= 0.0);
        assert!(s.v_nonpositive_nodes().is_empty());
    }

    #[test]
    fn sweep_reports_levels_in_order() {
        let g = GridSpec::new(2, 8).unwrap();
        let data = problem(2, 8, params("2", "1/2", "1/2"), Field::constant(g, 1.0));
        let it = IterationControl::default();
        let report = sweep_n(&data, &[1, 2, 4], &it).unwrap();
        assert_eq!(
            report.levels.iter().map(|l| l.n).collect::<Vec<_>>(),
            vec![1, 2, 4]
        );
        assert!(report.all_converged());
        let rows = report.table_rows();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.len() == report.table_header().len()));
        assert!(rows[0][report
            .table_header()
            .iter()
            .position(|c| c == "u_L2_diff_prev")
            .unwrap()]
        .is_empty());
        assert!(sweep_n(&data, &[2, 2], &it).is_err());
        assert!(sweep_n(&data, &[], &it).is_err());
        assert_eq!(sweep_n(&data, &[1], &it).unwrap().levels.len(), 1);
    }
}
