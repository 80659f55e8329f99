//! Named problem setups and the full audit battery run over them.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    audit_cauchy_trend, audit_energy, audit_higher_integrability, audit_level_growth,
    audit_linfty_bound, audit_outside_dual, audit_self_consistency, audit_superlevel,
    audit_v_regularity, run_family, scaling_from_family, AuditError, AuditReport,
};
use crate::exponents::{classify, Params, RegimeTag};
use crate::field::{Field, GridSpec};
use crate::operator::CoefficientField;
use crate::scheme::{
    sweep_n, IterationControl, Linearization, ProblemData, SchemeError, SchemeState, SweepReport,
};

/// Datum `f₀` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Datum {
    Constant(f64),
    /// `value` on the box `|x_i - 1/2| ≤ half_width`, zero elsewhere.
    IndicatorBox {
        value: f64,
        half_width: f64,
    },
    /// Field file as written by [`Field::write_to`].
    File(PathBuf),
}

impl Datum {
    pub fn build(&self, grid: GridSpec) -> Result<Field, SchemeError> {
        match self {
            Datum::Constant(c) => Ok(Field::constant(grid, *c)),
            Datum::IndicatorBox { value, half_width } => Ok(Field::from_fn(grid, |x| {
                if x.iter().all(|t| (t - 0.5).abs() <= *half_width) {
                    *value
                } else {
                    0.0
                }
            })),
            Datum::File(path) => {
                let file = File::open(path)
                    .map_err(|e| SchemeError::Datum(format!("{}: {e}", path.display())))?;
                let field = Field::read_from(BufReader::new(file))?;
                if field.grid() != grid {
                    return Err(SchemeError::Datum(format!(
                        "{}: grid d={} n_cells={} does not match d={} n_cells={}",
                        path.display(),
                        field.grid().d(),
                        field.grid().n_cells(),
                        grid.d(),
                        grid.n_cells()
                    )));
                }
                Ok(field)
            }
        }
    }
}

/// A complete run: parameters, grid, datum, schedules and solver controls.
/// `A = I` throughout.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub name: String,
    pub d: u32,
    pub r: String,
    pub gamma: String,
    pub theta: String,
    pub m: String,
    pub grid_d: usize,
    pub n_cells: usize,
    pub datum: Datum,
    pub schedule: Vec<u64>,
    /// `λ` grid for the scaling law and the `v` bounds.
    pub scaling_lambdas: Vec<f64>,
    /// `λ` grid for higher integrability.
    pub family_lambdas: Vec<f64>,
    /// Level at which families are solved.
    pub n_fixed: u64,
    pub control: IterationControl,
}

impl RunSpec {
    pub fn params(&self) -> Result<Params, SchemeError> {
        Ok(Params::parse(
            self.d,
            &self.r,
            &self.gamma,
            &self.theta,
            &self.m,
        )?)
    }

    pub fn grid(&self) -> Result<GridSpec, SchemeError> {
        Ok(GridSpec::new(self.grid_d, self.n_cells)?)
    }

    pub fn problem(&self) -> Result<ProblemData, SchemeError> {
        let grid = self.grid()?;
        let coeff = CoefficientField::constant(grid, 1.0)?;
        ProblemData::new(self.params()?, coeff, self.datum.build(grid)?)
    }
}

pub const PRESET_NAMES: [&str; 6] = [
    "default-d3",
    "dual-space-d3",
    "bounded-d3",
    "outside-dual-lr",
    "outside-dual-lr1",
    "higher-integrability",
];

const SCHEDULE: [u64; 6] = [1, 2, 4, 8, 16, 32];

fn base(name: &str, r: &str, theta: &str, m: &str, datum: Datum) -> RunSpec {
    RunSpec {
        name: name.into(),
        d: 3,
        r: r.into(),
        gamma: "1/2".into(),
        theta: theta.into(),
        m: m.into(),
        grid_d: 3,
        n_cells: 16,
        datum,
        schedule: SCHEDULE.to_vec(),
        scaling_lambdas: vec![1.0, 2.0, 4.0, 8.0],
        family_lambdas: vec![1.0, 2.0, 4.0],
        n_fixed: 128,
        control: IterationControl::default(),
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<RunSpec> {
    let spec = match name {
        "default-d3" => base(name, "2", "1/2", "6/5", Datum::Constant(1.0)),
        "dual-space-d3" => base(
            name,
            "2",
            "1/2",
            "6/5",
            Datum::IndicatorBox {
                value: 1.0,
                half_width: 0.25,
            },
        ),
        "bounded-d3" => base(name, "2", "1/2", "2", Datum::Constant(4.0)),
        "outside-dual-lr" => RunSpec {
            schedule: vec![4, 8, 16, 32],
            ..base(name, "7", "1/2", "14/13", Datum::Constant(1.0))
        },
        "outside-dual-lr1" => RunSpec {
            schedule: vec![4, 8, 16, 32],
            ..base(name, "7", "0", "16/15", Datum::Constant(1.0))
        },
        "higher-integrability" => RunSpec {
            schedule: vec![1_000_000],
            family_lambdas: vec![1.0, 2.0, 4.0],
            n_fixed: 1_000_000,
            control: IterationControl {
                linearization: Linearization::Newton,
                ..IterationControl::default()
            },
            ..base(
                name,
                "3",
                "1/2",
                "7/5",
                Datum::IndicatorBox {
                    value: 1e5,
                    half_width: 0.25,
                },
            )
        },
        _ => return None,
    };
    Some(spec)
}

/// Outcome of the audit battery.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub params: String,
    pub regimes: Vec<String>,
    pub reports: Vec<AuditReport>,
    /// Audits that were skipped or refused, with the reason.
    pub notes: Vec<String>,
    #[serde(skip)]
    pub sweep: Option<SweepReport>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

fn failed(id: &str, data: &ProblemData, n: u64, reason: &str) -> AuditReport {
    AuditReport::new(id, 1.0, 0.0, 0.0)
        .with_problem(data)
        .with("n", n)
        .with("reason", reason)
}

fn collect(
    out: &mut Vec<AuditReport>,
    notes: &mut Vec<String>,
    label: &str,
    result: Result<Vec<AuditReport>, AuditError>,
) {
    match result {
        Ok(reports) => out.extend(reports),
        Err(e @ (AuditError::Unconverged(_) | AuditError::Scheme(_))) => {
            out.push(AuditReport::new(label.replace(' ', "_"), 1.0, 0.0, 0.0).with("reason", &e));
            notes.push(format!("{label}: {e}"));
        }
        Err(e) => notes.push(format!("{label}: {e}")),
    }
}

/// Runs every audit that applies to `spec`. With `injected` the level
/// audits run on the supplied state instead of a fresh sweep, and family
/// audits are skipped.
pub fn verify_all(
    spec: &RunSpec,
    injected: Option<SchemeState>,
) -> Result<VerifyReport, AuditError> {
    let data = spec.problem()?;
    let it = &spec.control;
    let regime = classify(data.params());
    let mut reports = Vec::new();
    let mut notes = Vec::new();

    let (states, sweep) = match injected {
        Some(state) => (vec![state], None),
        None => {
            let sweep = sweep_n(&data, &spec.schedule, it)?;
            let mut states = Vec::new();
            for level in &sweep.levels {
                match &level.result {
                    Ok((state, _)) if state.converged => states.push(state.clone()),
                    Ok((state, _)) => {
                        reports.push(failed(
                            "level_converged",
                            &data,
                            level.n,
                            "outer iteration budget exhausted",
                        ));
                        notes.push(format!(
                            "level n={} did not converge after {} outer iterations",
                            level.n, state.outer_iters
                        ));
                    }
                    Err(e) => {
                        reports.push(failed("level_converged", &data, level.n, e));
                        notes.push(format!("level n={}: {e}", level.n));
                    }
                }
            }
            (states, Some(sweep))
        }
    };

    let outside =
        regime.contains(RegimeTag::OutsideDualLr) || regime.contains(RegimeTag::OutsideDualLr1);
    for state in &states {
        reports.extend(audit_self_consistency(state, &data));
        if !state.converged {
            notes.push(format!(
                "level n={} is unconverged; remaining level audits refused",
                state.n
            ));
            continue;
        }
        collect(
            &mut reports,
            &mut notes,
            "energy",
            audit_energy(state, &data, it),
        );
        collect(
            &mut reports,
            &mut notes,
            "superlevel",
            audit_superlevel(state, &data, &[0.5, 1.0, 2.0], it),
        );
        if outside && !data.theory_off() {
            collect(
                &mut reports,
                &mut notes,
                "outside-dual",
                audit_outside_dual(state, &data, it),
            );
        }
    }

    if states.len() >= 2 && states.iter().all(|s| s.converged) {
        collect(
            &mut reports,
            &mut notes,
            "level growth",
            audit_level_growth(&states, &data),
        );
    }
    match &sweep {
        Some(sweep) => collect(
            &mut reports,
            &mut notes,
            "cauchy trend",
            audit_cauchy_trend(sweep, &data),
        ),
        None => notes.push("cauchy trend: skipped for an injected state".into()),
    }

    if data.theory_off() || regime.is_none() || regime.tags().is_empty() {
        notes.push("no regime-specific audits applicable".into());
    } else {
        if regime.contains(RegimeTag::Bounded) {
            collect(
                &mut reports,
                &mut notes,
                "linfty bound",
                audit_linfty_bound(&states, &data),
            );
        }
        if sweep.is_none() {
            notes.push("family audits skipped for an injected state".into());
        } else {
            if regime.contains(RegimeTag::DualSpace) {
                let family = run_family(&data, &spec.scaling_lambdas, spec.n_fixed, it);
                let scaling = family.and_then(|family| {
                    let mut out = scaling_from_family(&family)?.reports;
                    if data.params().r() == crate::exponents::int(2) {
                        out.extend(audit_v_regularity(&family)?);
                    }
                    Ok(out)
                });
                collect(&mut reports, &mut notes, "scaling law", scaling);
            }
            if regime.contains(RegimeTag::HigherIntegrability) {
                let result = run_family(&data, &spec.family_lambdas, spec.n_fixed, it)
                    .and_then(|family| audit_higher_integrability(&family));
                collect(&mut reports, &mut notes, "higher integrability", result);
            }
        }
    }

    Ok(VerifyReport {
        name: spec.name.clone(),
        params: data.params().to_string(),
        regimes: regime.tags().iter().map(|t| t.name().to_string()).collect(),
        reports,
        notes,
        sweep,
    })
}
