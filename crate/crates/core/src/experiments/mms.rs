//! Manufactured-solution studies of the discretization.

use std::f64::consts::PI;

use serde::Serialize;

use super::fit::observed_orders;
use crate::exponents::{ratio_to_f64, Params};
use crate::field::{Field, GridSpec};
use crate::operator::{assemble, cg_solve, CoefficientField};
use crate::scheme::{solve_level, IterationControl, ProblemData, SchemeError, Sources};

#[derive(Debug, Clone, Serialize)]
pub struct MmsReport {
    pub label: String,
    pub n_cells: Vec<usize>,
    pub h: Vec<f64>,
    /// Sup-norm error per grid.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl MmsReport {
    fn new(label: String, n_cells: Vec<usize>, errors: Vec<f64>) -> Self {
        let h: Vec<f64> = n_cells.iter().map(|&n| 1.0 / (n as f64 + 1.0)).collect();
        let orders = observed_orders(&h, &errors);
        Self {
            label,
            n_cells,
            h,
            errors,
            orders,
        }
    }

    /// Order between the two finest grids.
    pub fn final_order(&self) -> Option<f64> {
        self.orders.last().copied()
    }
}

/// Exact solution of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Manufactured {
    /// `Π sin(π x_i)`.
    Sines,
    Zero,
}

fn sines(x: &[f64]) -> f64 {
    x.iter().map(|t| (PI * t).sin()).product()
}

/// `-div(a Du) = g` with `a(x) = 1 + x_1/2`, `u = Π sin(π x_i)`.
pub fn linear_mms(d: usize, grids: &[usize]) -> Result<MmsReport, SchemeError> {
    let mut errors = Vec::with_capacity(grids.len());
    for &n in grids {
        let g = GridSpec::new(d, n)?;
        let coeff = CoefficientField::from_face_fn(g, |_, x| 1.0 + 0.5 * x[0])?;
        let rhs = Field::from_fn(g, |x| {
            let a = 1.0 + 0.5 * x[0];
            let rest: f64 = x[1..].iter().map(|t| (PI * t).sin()).product();
            a * d as f64 * PI * PI * sines(x) - 0.5 * PI * (PI * x[0]).cos() * rest
        });
        let sys = assemble(&coeff, &Field::zeros(g))?;
        let sol = cg_solve(&sys, &rhs, 1e-13, 100_000)?;
        let exact = Field::from_fn(g, sines);
        errors.push(sol.solution.zip_map(&exact, |a, b| a - b)?.sup_norm());
    }
    Ok(MmsReport::new(
        format!("linear d={d}"),
        grids.to_vec(),
        errors,
    ))
}

/// The coupled system at level `n` with `A = I`, `f ≡ 1` and sources chosen
/// so that `u = v = Π sin(π x_i)` solve it exactly. The error is the larger
/// of the two sup-norm errors.
pub fn coupled_mms(
    params: &Params,
    d: usize,
    n: u64,
    grids: &[usize],
    solution: Manufactured,
    it: &IterationControl,
) -> Result<MmsReport, SchemeError> {
    let r = ratio_to_f64(params.r());
    let gamma = ratio_to_f64(params.gamma());
    let theta = ratio_to_f64(params.theta());
    let s = 1.0 / n as f64;
    let lap = d as f64 * PI * PI;
    let mut errors = Vec::with_capacity(grids.len());
    for &cells in grids {
        let g = GridSpec::new(d, cells)?;
        let coeff = CoefficientField::constant(g, 1.0)?;
        let (exact, f, sources) = match solution {
            Manufactured::Sines => {
                let exact = Field::from_fn(g, sines);
                let f = Field::constant(g, 1.0);
                let su = exact.map(|w| {
                    lap * w + w.powf(1.0 - theta) * w.powf(r - 1.0) - 1.0 / (w + s).powf(gamma)
                });
                let sv = exact.map(|w| lap * w - w.powf(r) / (w + s).powf(theta));
                (exact, f, Sources { u: su, v: sv })
            }
            Manufactured::Zero => {
                let zero = Field::zeros(g);
                (
                    zero.clone(),
                    zero.clone(),
                    Sources {
                        u: zero.clone(),
                        v: zero,
                    },
                )
            }
        };
        let data = ProblemData::allow_trivial(*params, coeff, f)?.with_sources(sources)?;
        let state = solve_level(&data, n, it)?;
        let eu = state.u.zip_map(&exact, |a, b| a - b)?.sup_norm();
        let ev = state.v.zip_map(&exact, |a, b| a - b)?.sup_norm();
        errors.push(eu.max(ev));
    }
    Ok(MmsReport::new(
        format!("coupled d={d} n={n}"),
        grids.to_vec(),
        errors,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub linear: Vec<MmsReport>,
    pub coupled: MmsReport,
}

/// Linear studies in `d = 1, 2, 3` on halving grids and the coupled study
/// on `grids`.
pub fn convergence_study(
    params: &Params,
    n: u64,
    grids: &[usize],
    it: &IterationControl,
) -> Result<ConvergenceStudy, SchemeError> {
    let linear = [
        (1, vec![15, 31, 63, 127]),
        (2, vec![15, 31, 63]),
        (3, vec![7, 15, 31]),
    ]
    .into_iter()
    .map(|(d, g)| linear_mms(d, &g))
    .collect::<Result<Vec<_>, _>>()?;
    let coupled = coupled_mms(params, 3, n, grids, Manufactured::Sines, it)?;
    Ok(ConvergenceStudy { linear, coupled })
}
