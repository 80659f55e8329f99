//! Uniform tensor-product grids on the unit box and grid functions with
//! homogeneous Dirichlet boundary.
//!
//! Only interior nodes are stored, in lexicographic order with the first
//! axis fastest: node `(i_0, .., i_{d-1})` lives at index
//! `i_0 + n i_1 + n^2 i_2`, at position `((i_0+1)h, ..)`. The boundary trace
//! is zero by construction.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::exponents::Exponent;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid dimension {0} is not supported (1, 2 or 3)")]
    Dimension(usize),
    #[error("grid needs at least 3 interior nodes per axis, got {0}")]
    TooCoarse(usize),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("truncation level {0} is negative")]
    NegativeLevel(f64),
    #[error("Lebesgue exponent {0} is below 1")]
    ExponentBelowOne(String),
    #[error("the 'any finite exponent' marker needs a concrete exponent")]
    NeedsConcreteExponent,
    #[error("superlevel height must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GridSpec {
    d: usize,
    n_cells: usize,
}

impl GridSpec {
    pub fn new(d: usize, n_cells: usize) -> Result<Self, FieldError> {
        if !(1..=3).contains(&d) {
            return Err(FieldError::Dimension(d));
        }
        if n_cells < 3 {
            return Err(FieldError::TooCoarse(n_cells));
        }
        Ok(Self { d, n_cells })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Interior nodes per axis.
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_cells as f64 + 1.0)
    }

    /// Quadrature weight of one node, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n_cells.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Below the dimension the theory is stated for.
    pub fn theory_off(&self) -> bool {
        self.d < 3
    }

    /// Index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n_cells.pow(axis as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for slot in out.iter_mut().take(self.d) {
            *slot = idx % self.n_cells;
            idx /= self.n_cells;
        }
        out
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let h = self.h();
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = (mi[axis] as f64 + 1.0) * h;
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `func` at every interior node; only the first `d` coordinates
    /// are meaningful.
    pub fn from_fn(grid: GridSpec, func: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| func(&grid.coords(i)[..grid.d]))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, func: impl Fn(f64) -> f64) -> Field {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&s| func(s)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(
        &self,
        other: &Field,
        func: impl Fn(f64, f64) -> f64,
    ) -> Result<Field, FieldError> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| func(a, b))
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn check_grid(&self, other: &Field) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|s| factor * s)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, s| acc.max(s.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `h^d Σ values`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// Euclidean inner product of the node values (no quadrature weight).
    pub fn dot(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `T_k`: clamps every value to `[-k, k]`.
    pub fn truncate_tk(&self, k: f64) -> Result<Field, FieldError> {
        check_level(k)?;
        Ok(self.map(|s| s.clamp(-k, k)))
    }

    /// `G_k = id - T_k`: the part of every value beyond `[-k, k]`.
    pub fn excess_gk(&self, k: f64) -> Result<Field, FieldError> {
        check_level(k)?;
        Ok(self.map(|s| {
            if s > k {
                s - k
            } else if s < -k {
                s + k
            } else {
                0.0
            }
        }))
    }

    /// Discrete Lebesgue norm with the nodal rule, `(h^d Σ |s|^p)^(1/p)`.
    pub fn lp_norm(&self, p: Exponent) -> Result<f64, FieldError> {
        match p {
            Exponent::Infinite => Ok(self.sup_norm()),
            Exponent::AnyFinite => Err(FieldError::NeedsConcreteExponent),
            Exponent::Finite(q) => self.lp_norm_f64(crate::exponents::ratio_to_f64(q)),
        }
    }

    pub fn lp_norm_f64(&self, p: f64) -> Result<f64, FieldError> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self.sup_norm());
        }
        if p.is_nan() || p < 1.0 {
            return Err(FieldError::ExponentBelowOne(p.to_string()));
        }
        let sum: f64 = self.values.iter().map(|s| s.abs().powf(p)).sum();
        Ok((self.grid.cell_volume() * sum).powf(1.0 / p))
    }

    /// `‖D·‖_{L^2}` from face differences, boundary faces included.
    pub fn h1_seminorm(&self) -> f64 {
        let h = self.grid.h();
        let mut sum = 0.0;
        for_each_face(self.grid, |_axis, _face, lower, upper| {
            let a = lower.map_or(0.0, |i| self.values[i]);
            let b = upper.map_or(0.0, |i| self.values[i]);
            let diff = (b - a) / h;
            sum += diff * diff;
        });
        (sum * self.grid.cell_volume()).sqrt()
    }

    /// `h^d Σ_{field ≥ level} weight`.
    pub fn superlevel_integral(&self, weight: &Field, level: f64) -> Result<f64, FieldError> {
        self.check_grid(weight)?;
        if !(level > 0.0) {
            return Err(FieldError::NonPositiveHeight(level));
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&weight.values)
            .filter(|(s, _)| **s >= level)
            .map(|(_, w)| w)
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// `h^d Σ_{mask} values`, where `mask` selects nodes of `selector`.
    pub fn integral_where(
        &self,
        selector: &Field,
        mask: impl Fn(f64) -> bool,
    ) -> Result<f64, FieldError> {
        self.check_grid(selector)?;
        let sum: f64 = self
            .values
            .iter()
            .zip(&selector.values)
            .filter(|(_, s)| mask(**s))
            .map(|(v, _)| v)
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// Text format: header line `d,n_cells`, then one value per line.
    pub fn write_to(&self, mut out: impl Write) -> Result<(), FieldError> {
        let mut buf = String::with_capacity(24 * self.len() + 16);
        writeln!(buf, "{},{}", self.grid.d, self.grid.n_cells).expect("string write");
        for v in &self.values {
            writeln!(buf, "{v:?}").expect("string write");
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_from(input: impl Read) -> Result<Field, FieldError> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| FieldError::Format("empty input".into()))??;
        let (d, n) = header
            .trim()
            .split_once(',')
            .ok_or_else(|| FieldError::Format(format!("bad header {header:?}")))?;
        let parse_usize = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| FieldError::Format(format!("bad header {header:?}")))
        };
        let grid = GridSpec::new(parse_usize(d)?, parse_usize(n)?)?;
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v = line
                .parse::<f64>()
                .map_err(|_| FieldError::Format(format!("line {}: {line:?}", lineno + 2)))?;
            values.push(v);
        }
        Field::new(grid, values)
    }
}

fn check_level(k: f64) -> Result<(), FieldError> {
    if k.is_nan() || k < 0.0 {
        return Err(FieldError::NegativeLevel(k));
    }
    Ok(())
}

/// Visits every face of the grid, boundary faces included.
///
/// Faces normal to `axis` are indexed like nodes except that their `axis`
/// index runs over `0..=n`; face `j` separates node `j-1` from node `j`.
/// The callback receives `(axis, face index, lower node, upper node)`, with
/// `None` standing for the boundary.
pub fn for_each_face(
    grid: GridSpec,
    mut visit: impl FnMut(usize, usize, Option<usize>, Option<usize>),
) {
    let n = grid.n_cells;
    for axis in 0..grid.d {
        let stride = grid.stride(axis);
        let fstride = face_stride(grid, axis);
        for base in line_bases(grid, axis) {
            let fbase = face_base(grid, axis, base);
            for j in 0..=n {
                let lower = (j > 0).then(|| base + (j - 1) * stride);
                let upper = (j < n).then(|| base + j * stride);
                visit(axis, fbase + j * fstride, lower, upper);
            }
        }
    }
}

/// Number of faces normal to `axis`.
pub fn face_count(grid: GridSpec) -> usize {
    let n = grid.n_cells;
    (n + 1) * n.pow(grid.d as u32 - 1)
}

/// Node indices with zero `axis` component, ascending.
pub(crate) fn line_bases(grid: GridSpec, axis: usize) -> impl Iterator<Item = usize> {
    let n = grid.n_cells;
    let stride = grid.stride(axis);
    (0..grid.len()).filter(move |idx| (idx / stride).is_multiple_of(n))
}

/// Face index (normal to `axis`) of face 0 on the line through node `base`.
pub(crate) fn face_base(grid: GridSpec, axis: usize, base: usize) -> usize {
    let n = grid.n_cells;
    let mi = grid.multi_index(base);
    let mut idx = 0;
    let mut stride = 1;
    for (k, &i) in mi.iter().enumerate().take(grid.d) {
        let extent = if k == axis { n + 1 } else { n };
        idx += i * stride;
        stride *= extent;
    }
    idx
}

/// Face stride along `axis` for faces normal to `axis`.
pub(crate) fn face_stride(grid: GridSpec, axis: usize) -> usize {
    grid.n_cells.pow(axis as u32)
}
