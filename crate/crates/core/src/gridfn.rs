//! Real functions sampled on a [`Grid`], with delta/nabla calculus.
//!
//! Every operation here is exact for the time scale formed by the grid nodes
//! themselves: the delta derivative is a forward difference, the delta
//! integral a left rectangle sum, and the nabla counterparts are backward
//! differences and right rectangle sums. On that discretized scale the
//! interchange rules between delta and nabla calculus hold as identities.
//!
//! Derivatives at the boundary node where no neighbour exists (f^Δ at b,
//! f^∇ at a) copy the adjacent value; use the grid's κ flags to tell whether
//! the node belongs to the derivative's domain.

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::timescale::Grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridFnError {
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("{0} is not a grid node")]
    NotANode(f64),
    #[error("integration bounds out of order: {0} > {1}")]
    Bounds(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, GridFnError> {
        if values.len() != grid.len() {
            return Err(GridFnError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridFnError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self, GridFnError> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    // internal constructor for values produced by exact arithmetic on finite input
    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
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

    /// f^Δ(t_i) = (f(t_{i+1}) − f(t_i)) / (t_{i+1} − t_i); the last node copies t_{N−1}.
    pub fn delta_derivative(&self) -> GridFunction {
        let n = self.values.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n - 1 {
            out.push(forward_difference(&self.grid, &self.values, i));
        }
        out.push(out[n - 2]);
        Self::from_parts(self.grid.clone(), out)
    }

    /// f^∇(t_i) = (f(t_i) − f(t_{i−1})) / (t_i − t_{i−1}); the first node copies t_1.
    pub fn nabla_derivative(&self) -> GridFunction {
        let n = self.values.len();
        let mut out = Vec::with_capacity(n);
        out.push(0.0);
        for i in 1..n {
            out.push(forward_difference(&self.grid, &self.values, i - 1));
        }
        out[0] = out[1];
        Self::from_parts(self.grid.clone(), out)
    }

    /// f^σ on the grid: shift left, holding the last value.
    pub fn compose_sigma(&self) -> GridFunction {
        let n = self.values.len();
        let out = (0..n).map(|i| self.values[(i + 1).min(n - 1)]).collect();
        Self::from_parts(self.grid.clone(), out)
    }

    /// f^ρ on the grid: shift right, holding the first value.
    pub fn compose_rho(&self) -> GridFunction {
        let out = (0..self.values.len())
            .map(|i| self.values[i.saturating_sub(1)])
            .collect();
        Self::from_parts(self.grid.clone(), out)
    }

    fn bounds(&self, lo: f64, hi: f64) -> Result<(usize, usize), GridFnError> {
        let i = self.grid.node_index(lo).ok_or(GridFnError::NotANode(lo))?;
        let j = self.grid.node_index(hi).ok_or(GridFnError::NotANode(hi))?;
        if i > j {
            return Err(GridFnError::Bounds(lo, hi));
        }
        Ok((i, j))
    }

    /// ∫_lo^hi f Δt = Σ_{lo ≤ t_i < hi} f(t_i)(t_{i+1} − t_i).
    pub fn delta_integral(&self, lo: f64, hi: f64) -> Result<f64, GridFnError> {
        let (i, j) = self.bounds(lo, hi)?;
        Ok(delta_sum(&self.grid, &self.values, i, j))
    }

    /// ∫_lo^hi f ∇t = Σ_{lo < t_i ≤ hi} f(t_i)(t_i − t_{i−1}).
    pub fn nabla_integral(&self, lo: f64, hi: f64) -> Result<f64, GridFnError> {
        let (i, j) = self.bounds(lo, hi)?;
        Ok(nabla_sum(&self.grid, &self.values, i, j))
    }

    /// (f^Δ)^ρ, which equals f^∇ on the grid's 𝕋_κ.
    pub fn nabla_deriv_from_delta(&self) -> GridFunction {
        self.delta_derivative().compose_rho()
    }

    /// (f^∇)^σ, which equals f^Δ on the grid's 𝕋^κ.
    pub fn delta_deriv_from_nabla(&self) -> GridFunction {
        self.nabla_derivative().compose_sigma()
    }

    /// ∫ f^ρ ∇t, the nabla form of ∫ f Δt.
    pub fn integral_interchange_delta_to_nabla(&self, lo: f64, hi: f64) -> Result<f64, GridFnError> {
        self.compose_rho().nabla_integral(lo, hi)
    }

    /// ∫ f^σ Δt, the delta form of ∫ f ∇t.
    pub fn integral_interchange_nabla_to_delta(&self, lo: f64, hi: f64) -> Result<f64, GridFnError> {
        self.compose_sigma().delta_integral(lo, hi)
    }

    /// Running delta integral t ↦ ∫_a^t f Δτ at every node.
    pub fn cumulative_delta(&self) -> GridFunction {
        Self::from_parts(self.grid.clone(), cumulative_delta(&self.grid, &self.values))
    }

    /// Running nabla integral t ↦ ∫_a^t f ∇τ at every node.
    pub fn cumulative_nabla(&self) -> GridFunction {
        Self::from_parts(self.grid.clone(), cumulative_nabla(&self.grid, &self.values))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `t,value,delta_deriv,nabla_deriv,flags`, one row per node.
    ///
    /// `flags` holds `U` when the node is in 𝕋^κ and `L` when it is in 𝕋_κ.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.delta_derivative();
        let nb = self.nabla_derivative();
        writeln!(out, "t,value,delta_deriv,nabla_deriv,flags")?;
        for (i, &t) in self.grid.nodes().iter().enumerate() {
            let mut flags = String::new();
            if self.grid.in_kappa_upper(i) {
                flags.push('U');
            }
            if self.grid.in_kappa_lower(i) {
                flags.push('L');
            }
            writeln!(
                out,
                "{t:?},{:?},{:?},{:?},{flags}",
                self.values[i], d.values[i], nb.values[i]
            )?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn forward_difference(grid: &Grid, values: &[f64], i: usize) -> f64 {
    (values[i + 1] - values[i]) / grid.step(i)
}

pub(crate) fn delta_sum(grid: &Grid, values: &[f64], from: usize, to: usize) -> f64 {
    (from..to).map(|i| values[i] * grid.step(i)).sum()
}

pub(crate) fn nabla_sum(grid: &Grid, values: &[f64], from: usize, to: usize) -> f64 {
    (from + 1..=to).map(|i| values[i] * grid.step(i - 1)).sum()
}

pub(crate) fn cumulative_delta(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        out.push(acc);
        if i + 1 < values.len() {
            acc += values[i] * grid.step(i);
        }
    }
    out
}

pub(crate) fn cumulative_nabla(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for i in 1..values.len() {
        acc += values[i] * grid.step(i - 1);
        out.push(acc);
    }
    out
}
