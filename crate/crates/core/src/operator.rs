//! Discrete `-div(A(x) D·) + c(x)` with homogeneous Dirichlet boundary.
//!
//! `A` is diagonal, `diag(a_1, .., a_d)`, with `a_k` sampled on the faces
//! normal to axis `k`. The (2d+1)-point stencil is then a symmetric M-matrix
//! for any nonnegative reaction `c`, so nonnegative right-hand sides produce
//! nonnegative solutions.

use serde::Serialize;
use thiserror::Error;

use crate::field::{face_count, for_each_face, Field, FieldError, GridSpec};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("reaction is negative at node {index}: {value}")]
    NegativeReaction { index: usize, value: f64 },
    #[error("coefficient is not positive on face {face} normal to axis {axis}: {value}")]
    NonPositiveFace {
        axis: usize,
        face: usize,
        value: f64,
    },
    #[error("ellipticity bounds must satisfy 0 < alpha <= beta, got alpha={alpha}, beta={beta}")]
    InvalidBounds { alpha: f64, beta: f64 },
    #[error("expected {expected} face arrays of length {len}")]
    FaceShape { expected: usize, len: usize },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

// A face of the grid after scaling by 1/h^2. `usize::MAX` marks the boundary.
#[derive(Debug, Clone, Copy)]
struct Link {
    lower: usize,
    upper: usize,
    weight: f64,
}

const BOUNDARY: usize = usize::MAX;

/// Diagonal coefficient matrix sampled on faces, with its declared
/// ellipticity bounds.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    grid: GridSpec,
    faces: Vec<Vec<f64>>,
    alpha: f64,
    beta: f64,
    links: Vec<Link>,
}

impl CoefficientField {
    pub fn new(
        grid: GridSpec,
        faces: Vec<Vec<f64>>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, OperatorError> {
        let len = face_count(grid);
        if faces.len() != grid.d() || faces.iter().any(|f| f.len() != len) {
            return Err(OperatorError::FaceShape {
                expected: grid.d(),
                len,
            });
        }
        if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
            return Err(OperatorError::InvalidBounds { alpha, beta });
        }
        let links = build_links(grid, &faces);
        Ok(Self {
            grid,
            faces,
            alpha,
            beta,
            links,
        })
    }

    /// `A ≡ value · I`.
    pub fn constant(grid: GridSpec, value: f64) -> Result<Self, OperatorError> {
        let faces = vec![vec![value; face_count(grid)]; grid.d()];
        Self::new(grid, faces, value, value)
    }

    /// Samples `a(axis, x)` at face centres; the bounds are the observed
    /// extremes.
    pub fn from_face_fn(
        grid: GridSpec,
        a: impl Fn(usize, &[f64]) -> f64,
    ) -> Result<Self, OperatorError> {
        let h = grid.h();
        let mut faces = vec![vec![0.0; face_count(grid)]; grid.d()];
        for_each_face(grid, |axis, face, lower, upper| {
            let mut x = match (lower, upper) {
                (_, Some(node)) => grid.coords(node),
                (Some(node), None) => grid.coords(node),
                (None, None) => unreachable!("a face touches at least one node"),
            };
            x[axis] = match upper {
                Some(_) => x[axis] - 0.5 * h,
                None => x[axis] + 0.5 * h,
            };
            faces[axis][face] = a(axis, &x[..grid.d()]);
        });
        Self::with_observed_bounds(grid, faces)
    }

    /// Face values from nodal samples of a scalar coefficient: harmonic mean
    /// of the two adjacent nodes, the adjacent node's value on boundary faces.
    pub fn from_node_samples(samples: &Field) -> Result<Self, OperatorError> {
        let grid = samples.grid();
        let s = samples.values();
        let mut faces = vec![vec![0.0; face_count(grid)]; grid.d()];
        for_each_face(grid, |axis, face, lower, upper| {
            faces[axis][face] = match (lower, upper) {
                (Some(a), Some(b)) => harmonic_mean(s[a], s[b]),
                (Some(a), None) => s[a],
                (None, Some(b)) => s[b],
                (None, None) => unreachable!("a face touches at least one node"),
            };
        });
        Self::with_observed_bounds(grid, faces)
    }

    fn with_observed_bounds(grid: GridSpec, faces: Vec<Vec<f64>>) -> Result<Self, OperatorError> {
        let (lo, hi) = faces
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            });
        Self::new(grid, faces, lo, hi)
    }

    /// Replaces the declared bounds without touching the face values.
    pub fn with_bounds(mut self, alpha: f64, beta: f64) -> Result<Self, OperatorError> {
        if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
            return Err(OperatorError::InvalidBounds { alpha, beta });
        }
        self.alpha = alpha;
        self.beta = beta;
        Ok(self)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn faces(&self, axis: usize) -> &[f64] {
        &self.faces[axis]
    }

    /// `Σ_faces a_k |D x|^2 h^d`.
    pub fn energy(&self, x: &Field) -> f64 {
        self.bilinear(x, x)
    }

    /// `Σ_faces a_k (D x)(D y) h^d`, the discrete `∫ A Dx·Dy`.
    pub fn bilinear(&self, x: &Field, y: &Field) -> f64 {
        let (xv, yv) = (x.values(), y.values());
        let at = |v: &[f64], i: usize| if i == BOUNDARY { 0.0 } else { v[i] };
        let sum: f64 = self
            .links
            .iter()
            .map(|l| {
                l.weight * (at(xv, l.upper) - at(xv, l.lower)) * (at(yv, l.upper) - at(yv, l.lower))
            })
            .sum();
        sum * self.grid.cell_volume()
    }
}

fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn build_links(grid: GridSpec, faces: &[Vec<f64>]) -> Vec<Link> {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut links = Vec::with_capacity(grid.d() * face_count(grid));
    for_each_face(grid, |axis, face, lower, upper| {
        links.push(Link {
            lower: lower.unwrap_or(BOUNDARY),
            upper: upper.unwrap_or(BOUNDARY),
            weight: faces[axis][face] * inv_h2,
        });
    });
    links
}

/// Assembled operator `-div(A D·) + c`. Borrows the coefficients; holds the
/// reaction and the diagonal.
#[derive(Debug, Clone)]
pub struct LinearSystem<'a> {
    coeff: &'a CoefficientField,
    reaction: Vec<f64>,
    diagonal: Vec<f64>,
}

pub fn assemble<'a>(
    coeff: &'a CoefficientField,
    reaction: &Field,
) -> Result<LinearSystem<'a>, OperatorError> {
    if reaction.grid() != coeff.grid {
        return Err(FieldError::GridMismatch.into());
    }
    if let Some((index, &value)) = reaction
        .values()
        .iter()
        .enumerate()
        .find(|(_, c)| !(**c >= 0.0))
    {
        return Err(OperatorError::NegativeReaction { index, value });
    }
    for (axis, faces) in coeff.faces.iter().enumerate() {
        if let Some((face, &value)) = faces.iter().enumerate().find(|(_, a)| !(**a > 0.0)) {
            return Err(OperatorError::NonPositiveFace { axis, face, value });
        }
    }
    let mut diagonal = reaction.values().to_vec();
    for l in &coeff.links {
        if l.lower != BOUNDARY {
            diagonal[l.lower] += l.weight;
        }
        if l.upper != BOUNDARY {
            diagonal[l.upper] += l.weight;
        }
    }
    Ok(LinearSystem {
        coeff,
        reaction: reaction.values().to_vec(),
        diagonal,
    })
}

impl LinearSystem<'_> {
    pub fn grid(&self) -> GridSpec {
        self.coeff.grid
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn reaction(&self) -> &[f64] {
        &self.reaction
    }

    pub fn apply(&self, x: &Field) -> Result<Field, OperatorError> {
        if x.grid() != self.grid() {
            return Err(FieldError::GridMismatch.into());
        }
        let mut y = vec![0.0; x.len()];
        self.apply_into(x.values(), &mut y);
        Ok(Field::new(self.grid(), y)?)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), ci) in y.iter_mut().zip(x).zip(&self.reaction) {
            *yi = ci * xi;
        }
        for l in &self.coeff.links {
            match (l.lower, l.upper) {
                (BOUNDARY, hi) => y[hi] += l.weight * x[hi],
                (lo, BOUNDARY) => y[lo] += l.weight * x[lo],
                (lo, hi) => {
                    let flux = l.weight * (x[hi] - x[lo]);
                    y[lo] -= flux;
                    y[hi] += flux;
                }
            }
        }
    }
}

/// Outcome of a converged conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub solution: Field,
    pub diagnostics: CgDiagnostics,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CgDiagnostics {
    pub iterations: usize,
    /// `‖b - Ax‖₂ / ‖b‖₂` recomputed from the returned iterate.
    pub relative_residual: f64,
    /// Recurrence residual norms, relative, one per iteration.
    pub residual_history: Vec<f64>,
}

pub fn cg_solve(
    sys: &LinearSystem<'_>,
    rhs: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution, OperatorError> {
    cg_solve_from(sys, rhs, &Field::zeros(rhs.grid()), tol, max_iter)
}

/// Jacobi-preconditioned conjugate gradient from the initial guess `x0`.
/// Stops when `‖b - Ax‖₂ ≤ tol ‖b‖₂`.
pub fn cg_solve_from(
    sys: &LinearSystem<'_>,
    rhs: &Field,
    x0: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution, OperatorError> {
    if !(tol > 0.0) {
        return Err(OperatorError::BadTolerance(tol));
    }
    if rhs.grid() != sys.grid() || x0.grid() != sys.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let n = rhs.len();
    let b = rhs.values();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgSolution {
            solution: Field::zeros(rhs.grid()),
            diagnostics: CgDiagnostics::default(),
        });
    }

    let mut x = x0.values().to_vec();
    let mut ax = vec![0.0; n];
    sys.apply_into(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let inv_diag: Vec<f64> = sys.diagonal.iter().map(|d| 1.0 / d).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut history = Vec::new();
    let mut rel = norm2(&r) / b_norm;
    let mut iterations = 0;

    while rel > tol {
        if iterations == max_iter {
            return Err(OperatorError::NonConvergence {
                iterations,
                residual: rel,
            });
        }
        sys.apply_into(&p, &mut q);
        let step = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        iterations += 1;
        rel = norm2(&r) / b_norm;
        history.push(rel);
        if rel <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    sys.apply_into(&x, &mut ax);
    let true_rel = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai).powi(2))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    Ok(CgSolution {
        solution: Field::new(rhs.grid(), x)?,
        diagnostics: CgDiagnostics {
            iterations,
            relative_residual: true_rel,
            residual_history: history,
        },
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceViolation {
    pub axis: usize,
    pub face: usize,
    /// Face centre.
    pub position: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub pass: bool,
    pub alpha: f64,
    pub beta: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub violations: Vec<FaceViolation>,
}

/// Checks `alpha ≤ a_k ≤ beta` on every face.
pub fn ellipticity_audit(coeff: &CoefficientField) -> EllipticityReport {
    let grid = coeff.grid;
    let h = grid.h();
    let mut violations = Vec::new();
    let mut observed_min = f64::INFINITY;
    let mut observed_max = f64::NEG_INFINITY;
    for_each_face(grid, |axis, face, lower, upper| {
        let value = coeff.faces[axis][face];
        observed_min = observed_min.min(value);
        observed_max = observed_max.max(value);
        if !(value >= coeff.alpha && value <= coeff.beta && value > 0.0) {
            let node = upper.or(lower).expect("a face touches at least one node");
            let mut x = grid.coords(node);
            x[axis] += if upper.is_some() { -0.5 * h } else { 0.5 * h };
            violations.push(FaceViolation {
                axis,
                face,
                position: x[..grid.d()].to_vec(),
                value,
            });
        }
    });
    EllipticityReport {
        pass: violations.is_empty(),
        alpha: coeff.alpha,
        beta: coeff.beta,
        observed_min,
        observed_max,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_coeff(grid: GridSpec, seed: u64, lo: f64, hi: f64) -> CoefficientField {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let faces = (0..grid.d())
            .map(|_| {
                (0..face_count(grid))
                    .map(|_| rng.gen_range(lo..hi))
                    .collect()
            })
            .collect();
        CoefficientField::new(grid, faces, lo, hi).unwrap()
    }

    fn dense(sys: &LinearSystem<'_>) -> Vec<Vec<f64>> {
        let g = sys.grid();
        (0..g.len())
            .map(|j| {
                let mut e = Field::zeros(g);
                e.values_mut()[j] = 1.0;
                sys.apply(&e).unwrap().into_values()
            })
            .collect()
    }

    #[test]
    fn laplacian_stencil_1d() {
        let g = GridSpec::new(1, 3).unwrap();
        let coeff = CoefficientField::constant(g, 1.0).unwrap();
        let sys = assemble(&coeff, &Field::zeros(g)).unwrap();
        let h2 = g.h() * g.h();
        let cols = dense(&sys);
        let expected = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for j in 0..3 {
            for i in 0..3 {
                assert!((cols[j][i] * h2 - expected[i][j]).abs() < 1e-12);
            }
        }
        let shifted = assemble(&coeff, &Field::constant(g, 5.0)).unwrap();
        for (a, b) in shifted.diagonal().iter().zip(sys.diagonal()) {
            assert!((a - b - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn random_operator_is_symmetric_m_matrix() {
        let g = GridSpec::new(2, 5).unwrap();
        let coeff = random_coeff(g, 3, 0.5, 2.0);
        let reaction = Field::from_fn(g, |x| x[0] * x[1]);
        let sys = assemble(&coeff, &reaction).unwrap();
        let a = dense(&sys);
        for i in 0..g.len() {
            let mut off = 0.0;
            for j in 0..g.len() {
                assert!((a[i][j] - a[j][i]).abs() <= 1e-12 * a[i][i].abs());
                if i != j {
                    assert!(a[i][j] <= 0.0);
                    off += a[i][j].abs();
                }
            }
            assert!(a[i][i] >= off);
            assert!((a[i][i] - sys.diagonal()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let g = GridSpec::new(1, 4).unwrap();
        let coeff = CoefficientField::constant(g, 1.0).unwrap();
        let mut c = Field::zeros(g);
        c.values_mut()[2] = -1e-3;
        assert!(matches!(
            assemble(&coeff, &c),
            Err(OperatorError::NegativeReaction { index: 2, .. })
        ));
        let other = GridSpec::new(1, 5).unwrap();
        assert!(assemble(&coeff, &Field::zeros(other)).is_err());
        assert!(CoefficientField::constant(g, 0.0).is_err());
        assert!(CoefficientField::new(g, vec![vec![1.0; 3]], 1.0, 1.0).is_err());
    }

    #[test]
    fn apply_examples() {
        let g = GridSpec::new(1, 63).unwrap();
        let coeff = CoefficientField::constant(g, 1.0).unwrap();
        let sys = assemble(&coeff, &Field::zeros(g)).unwrap();
        assert_eq!(sys.apply(&Field::zeros(g)).unwrap().sup_norm(), 0.0);

        let s = Field::from_fn(g, |x| (PI * x[0]).sin());
        let out = sys.apply(&s).unwrap();
        let h = g.h();
        for (o, v) in out.values().iter().zip(s.values()) {
            assert!((o - PI * PI * v).abs() <= PI.powi(4) * h * h / 12.0 + 1e-12);
        }
    }

    #[test]
    fn apply_is_symmetric_in_inner_product() {
        let g = GridSpec::new(3, 6).unwrap();
        let coeff = random_coeff(g, 5, 0.3, 3.0);
        let sys = assemble(&coeff, &Field::from_fn(g, |x| x[2])).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let x = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let y = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let lhs = sys.apply(&x).unwrap().dot(&y);
        let rhs = x.dot(&sys.apply(&y).unwrap());
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn energy_identity_and_coercivity() {
        let g = GridSpec::new(2, 8).unwrap();
        let coeff = random_coeff(g, 13, 0.7, 1.9);
        let sys = assemble(&coeff, &Field::zeros(g)).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..5 {
            let x =
                Field::new(g, (0..g.len()).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            let quad = sys.apply(&x).unwrap().dot(&x) * g.cell_volume();
            let energy = coeff.energy(&x);
            assert!((quad - energy).abs() <= 1e-12 * energy);
            assert!(energy >= coeff.alpha() * x.h1_seminorm().powi(2) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn cg_recovers_known_solution() {
        let g = GridSpec::new(2, 12).unwrap();
        let coeff = random_coeff(g, 21, 0.5, 4.0);
        let sys = assemble(&coeff, &Field::from_fn(g, |x| x[0])).unwrap();
        let exact = Field::from_fn(g, |x| (3.0 * x[0]).cos() * x[1] - 0.2);
        let rhs = sys.apply(&exact).unwrap();
        let sol = cg_solve(&sys, &rhs, 1e-12, 1000).unwrap();
        let err = sol
            .solution
            .zip_map(&exact, |a, b| a - b)
            .unwrap()
            .sup_norm();
        assert!(err < 1e-8, "err {err}");
        assert!(sol.diagnostics.relative_residual <= 1e-11);
        assert_eq!(
            sol.diagnostics.residual_history.len(),
            sol.diagnostics.iterations
        );
    }

    #[test]
    fn cg_zero_rhs_and_failures() {
        let g = GridSpec::new(2, 8).unwrap();
        let coeff = CoefficientField::constant(g, 1.0).unwrap();
        let sys = assemble(&coeff, &Field::zeros(g)).unwrap();
        let sol = cg_solve(&sys, &Field::zeros(g), 1e-10, 10).unwrap();
        assert!(sol.diagnostics.iterations <= 1);
        assert_eq!(sol.solution.sup_norm(), 0.0);

        let rhs = Field::from_fn(g, |x| x[0] * (1.0 - x[1]));
        assert!(matches!(
            cg_solve(&sys, &rhs, 1e-14, 2),
            Err(OperatorError::NonConvergence { iterations: 2, .. })
        ));
        assert!(matches!(
            cg_solve(&sys, &rhs, 0.0, 2),
            Err(OperatorError::BadTolerance(_))
        ));
    }

    #[test]
    fn cg_poisson_second_order() {
        let mut errors = Vec::new();
        for n in [15, 31] {
            let g = GridSpec::new(2, n).unwrap();
            let coeff = CoefficientField::constant(g, 1.0).unwrap();
            let sys = assemble(&coeff, &Field::zeros(g)).unwrap();
            let exact = Field::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let rhs = exact.scaled(2.0 * PI * PI);
            let sol = cg_solve(&sys, &rhs, 1e-12, 5000).unwrap();
            errors.push(
                sol.solution
                    .zip_map(&exact, |a, b| a - b)
                    .unwrap()
                    .sup_norm(),
            );
        }
        let ratio = errors[0] / errors[1];
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn discrete_maximum_principle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(33);
        for seed in 0..5 {
            let g = GridSpec::new(2, 10).unwrap();
            let coeff = random_coeff(g, 100 + seed, 0.1, 5.0);
            let c =
                Field::new(g, (0..g.len()).map(|_| rng.gen_range(0.0..50.0)).collect()).unwrap();
            let sys = assemble(&coeff, &c).unwrap();
            let rhs = Field::new(
                g,
                (0..g.len())
                    .map(|_| {
                        if rng.gen_bool(0.2) {
                            rng.gen_range(0.0..10.0)
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
            .unwrap();
            let sol = cg_solve(&sys, &rhs, 1e-12, 5000).unwrap();
            assert!(sol.solution.min_value() >= -1e-10 * rhs.sup_norm());
        }
    }

    #[test]
    fn larger_reaction_lowers_solution() {
        let g = GridSpec::new(2, 9).unwrap();
        let coeff = random_coeff(g, 41, 0.5, 2.0);
        let rhs = Field::from_fn(g, |x| 1.0 + x[0]);
        let c_small = Field::from_fn(g, |x| x[1]);
        let c_large = c_small.map(|c| 3.0 * c + 1.0);
        let small = cg_solve(&assemble(&coeff, &c_small).unwrap(), &rhs, 1e-13, 5000).unwrap();
        let large = cg_solve(&assemble(&coeff, &c_large).unwrap(), &rhs, 1e-13, 5000).unwrap();
        for (a, b) in large.solution.values().iter().zip(small.solution.values()) {
            assert!(*a <= b + 1e-10);
        }
    }

    #[test]
    fn ellipticity_audit_examples() {
        let g = GridSpec::new(2, 4).unwrap();
        let unit = CoefficientField::constant(g, 1.0).unwrap();
        assert!(ellipticity_audit(&unit).pass);

        let mut faces = vec![vec![1.0; face_count(g)]; 2];
        faces[1][7] = 0.0;
        let broken = CoefficientField::new(g, faces, 1.0, 1.0).unwrap();
        let report = ellipticity_audit(&broken);
        assert!(!report.pass);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            (report.violations[0].axis, report.violations[0].face),
            (1, 7)
        );
        assert_eq!(report.observed_min, 0.0);

        assert!(ellipticity_audit(&random_coeff(g, 2, 0.25, 4.0)).pass);
    }

    #[test]
    fn node_samples_use_harmonic_mean() {
        let g = GridSpec::new(1, 3).unwrap();
        let samples = Field::new(g, vec![1.0, 3.0, 2.0]).unwrap();
        let coeff = CoefficientField::from_node_samples(&samples).unwrap();
        assert_eq!(coeff.faces(0), &[1.0, 1.5, 2.4, 2.0]);
        assert_eq!((coeff.alpha(), coeff.beta()), (1.0, 2.4));

        let smooth = CoefficientField::from_face_fn(g, |_, x| 1.0 + x[0]).unwrap();
        let expected = [1.125, 1.375, 1.625, 1.875];
        for (a, b) in smooth.faces(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
