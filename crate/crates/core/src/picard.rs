//! Picard iterates of the Duhamel formula for KdV,
//! `u^{[j]}(t) = S(t)u₀ + ∫₀ᵗ S(t−τ) ∂ₓ(3(u^{[j−1]}(τ))²) dτ`, `u^{[−1]} = 0`,
//! where `S(t)` is the Airy propagator.
//!
//! The integral is taken in the rotated frame `S(−τ)u(τ)`, where the
//! dispersive phase is exact and only the nonlinear oscillation has to be
//! resolved by the composite Gauss–Legendre panels.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flows::quadratic_term;
use crate::fourier::{sobolev_norm, FourierField};
use crate::integrator::{airy, LedgerEntry, Trajectory};
use crate::quadrature::GaussLegendre;

#[derive(Clone, Debug, PartialEq)]
pub struct PicardOptions {
    /// Largest panel width in `τ`.
    pub panel_width: f64,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Allowed change (max coefficient) when the panel width is halved.
    pub tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { panel_width: 1e-2, nodes: 8, tol: 1e-10 }
    }
}

struct Panels {
    /// `(start, end)` of each panel.
    bounds: Vec<(f64, f64)>,
    /// Index of the panel ending at each grid time (`None` for `t = 0`).
    grid_end: Vec<Option<usize>>,
}

fn make_panels(grid: &[f64], width: f64) -> Panels {
    let mut bounds = Vec::new();
    let mut grid_end = Vec::with_capacity(grid.len());
    let mut t = 0.0;
    for &g in grid {
        if g == t {
            grid_end.push(if bounds.is_empty() { None } else { Some(bounds.len() - 1) });
            continue;
        }
        let n = libm::ceil((g - t) / width).max(1.0) as usize;
        let h = (g - t) / n as f64;
        for i in 0..n {
            let a = t + h * i as f64;
            let b = if i + 1 == n { g } else { t + h * (i + 1) as f64 };
            bounds.push((a, b));
        }
        grid_end.push(Some(bounds.len() - 1));
        t = g;
    }
    Panels { bounds, grid_end }
}

/// Iterates at every quadrature node and at every panel end.
struct Iterate {
    nodes: Vec<Vec<FourierField>>,
    ends: Vec<FourierField>,
}

fn free_iterate(u0: &FourierField, panels: &Panels, gl: &GaussLegendre) -> Iterate {
    let mut nodes = Vec::with_capacity(panels.bounds.len());
    let mut ends = Vec::with_capacity(panels.bounds.len());
    for &(a, b) in &panels.bounds {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        nodes.push(gl.nodes.iter().map(|x| airy(u0, c + h * x)).collect());
        ends.push(airy(u0, b));
    }
    Iterate { nodes, ends }
}

fn next_iterate(u0: &FourierField, prev: &Iterate, panels: &Panels, gl: &GaussLegendre, cum: &[Vec<f64>]) -> Iterate {
    let k = u0.k_max();
    let mut acc = u0.clone();
    let mut nodes = Vec::with_capacity(panels.bounds.len());
    let mut ends = Vec::with_capacity(panels.bounds.len());
    for (p, &(a, b)) in panels.bounds.iter().enumerate() {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        let taus: Vec<f64> = gl.nodes.iter().map(|x| c + h * x).collect();
        let g: Vec<FourierField> =
            prev.nodes[p].iter().zip(&taus).map(|(u, &tau)| airy(&quadratic_term(u, k), -tau)).collect();
        let here: Vec<FourierField> = cum
            .iter()
            .zip(&taus)
            .map(|(row, &tau)| {
                let mut w = acc.clone();
                for (s, gj) in row.iter().zip(&g) {
                    w = w.axpy(h * s, gj);
                }
                airy(&w, tau)
            })
            .collect();
        for (wj, gj) in gl.weights.iter().zip(&g) {
            acc = acc.axpy(h * wj, gj);
        }
        nodes.push(here);
        ends.push(airy(&acc, b));
    }
    Iterate { nodes, ends }
}

fn iterate_on(u0: &FourierField, j: usize, grid: &[f64], opts: &PicardOptions, width: f64) -> Vec<FourierField> {
    let panels = make_panels(grid, width);
    let gl = GaussLegendre::new(opts.nodes);
    let cum = gl.cumulative_matrix();
    let mut it = free_iterate(u0, &panels, &gl);
    for _ in 0..j {
        it = next_iterate(u0, &it, &panels, &gl, &cum);
    }
    panels
        .grid_end
        .iter()
        .map(|e| match e {
            None => u0.clone(),
            Some(p) => it.ends[*p].clone(),
        })
        .collect()
}

/// `u^{[j]}` at the (nonnegative, increasing) times `t_grid`, in the band of `u0`.
///
/// The computation is repeated with half the panel width; if the two results
/// differ by more than `opts.tol` the quadrature is reported as too coarse.
pub fn picard_iterate(u0: &FourierField, j: usize, t_grid: &[f64], opts: &PicardOptions) -> Result<Trajectory> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] < 0.0 {
        return Err(Error::invalid("t_grid", "times must be nonnegative and strictly increasing"));
    }
    if !(opts.panel_width > 0.0) || opts.nodes < 2 {
        return Err(Error::invalid("panel_width", "need a positive width and at least two nodes"));
    }
    let coarse = iterate_on(u0, j, t_grid, opts, opts.panel_width);
    let fine = iterate_on(u0, j, t_grid, opts, opts.panel_width / 2.0);
    let difference = coarse.iter().zip(&fine).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
    if difference > opts.tol {
        return Err(Error::QuadratureTooCoarse { difference });
    }
    let ledger = t_grid
        .iter()
        .zip(&fine)
        .map(|(&t, u)| LedgerEntry { time: t, mean: 0.0, l2: sobolev_norm(u, 0.0), hamiltonian: None, energies: None })
        .collect();
    Ok(Trajectory { times: t_grid.to_vec(), states: fine, ledger, steps: 0 })
}
