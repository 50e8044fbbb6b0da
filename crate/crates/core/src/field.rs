//! Piecewise-linear scalar fields on regular grids.
//!
//! A field is sampled at the vertices of an `nx × ny × nz` grid and linearly
//! interpolated over the Freudenthal (Kuhn) subdivision of each cell: vertex
//! `v` is adjacent to `v ± e` for every non-zero `e ∈ {0,1}³`. That gives the
//! usual 6-neighborhood in 2D, 14 in 3D, and a path in 1D.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Offsets of the Freudenthal 1-skeleton, `±e` for `e ∈ {0,1}³ \ {0}`.
const FREUDENTHAL_OFFSETS: [[i64; 3]; 14] = [
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
    [-1, 0, 0],
    [0, -1, 0],
    [-1, -1, 0],
    [0, 0, -1],
    [-1, 0, -1],
    [0, -1, -1],
    [-1, -1, -1],
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    name: String,
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    values: Vec<f64>,
}

impl ScalarField {
    /// Builds a field, checking the grid invariants. Values are row-major with
    /// x varying fastest.
    pub fn new(
        name: impl Into<String>,
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        values: Vec<f64>,
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidField(format!("dims {dims:?} contain a zero")));
        }
        if dims.iter().all(|&d| d < 2) {
            return Err(Error::InvalidField(
                "a field needs at least two vertices along one axis".into(),
            ));
        }
        let expected = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidField(format!("dims {dims:?} overflow")))?;
        if values.len() != expected {
            return Err(Error::InvalidField(format!(
                "expected {expected} values for dims {dims:?}, got {}",
                values.len()
            )));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidField(format!("spacing {spacing:?} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidField(format!("origin {origin:?} must be finite")));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("value #{index} is not finite")));
        }
        Ok(Self {
            name: name.into(),
            dims,
            spacing,
            origin,
            values,
        })
    }

    /// Unit spacing, zero origin.
    pub fn from_values(name: impl Into<String>, dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        Self::new(name, dims, [1.0; 3], [0.0; 3], values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    /// Returns `(min, max)` of the sampled values.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.range();
        lo == hi
    }

    pub(crate) fn grid_coords(&self, vertex: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [vertex % nx, (vertex / nx) % ny, vertex / (nx * ny)]
    }

    /// World coordinates of a vertex.
    pub fn position(&self, vertex: usize) -> [f64; 3] {
        let c = self.grid_coords(vertex);
        std::array::from_fn(|a| self.origin[a] + self.spacing[a] * c[a] as f64)
    }

    /// Calls `visit` for every vertex adjacent to `vertex` in the Freudenthal
    /// triangulation.
    pub fn for_each_neighbor(&self, vertex: usize, mut visit: impl FnMut(usize)) {
        let [nx, ny, nz] = self.dims;
        let c = self.grid_coords(vertex);
        for off in FREUDENTHAL_OFFSETS {
            let x = c[0] as i64 + off[0];
            let y = c[1] as i64 + off[1];
            let z = c[2] as i64 + off[2];
            if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
                continue;
            }
            visit(x as usize + nx * (y as usize + ny * z as usize));
        }
    }

    /// A copy with every value negated, used for the superlevel filtration.
    pub fn negated(&self) -> Self {
        Self {
            name: self.name.clone(),
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub(crate) fn same_geometry(&self, other: &Self) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.origin == other.origin
    }
}

/// An ordered collection of fields sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<ScalarField>,
    metadata: BTreeMap<String, String>,
}

impl Ensemble {
    pub fn new(members: Vec<ScalarField>, metadata: BTreeMap<String, String>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyInput)?;
        if let Some(bad) = members.iter().find(|m| !first.same_geometry(m)) {
            return Err(Error::DimensionMismatch(bad.name().into()));
        }
        Ok(Self { members, metadata })
    }

    pub fn members(&self) -> &[ScalarField] {
        &self.members
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.members[0].dims()
    }
}
