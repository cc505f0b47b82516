//! Post-processing of meridian fields: gradient reconstruction, the
//! directional gradient envelope, and pointwise diagnostics.
//!
//! For `u = Y_k(ω) · w(r, z)` the full n-dimensional gradient magnitude at a
//! point with sphere direction ω is
//!
//! ```text
//! |∇u|² = Y_k(ω)² (w_r² + w_z²) + |∇_S Y_k|²(ω) · (w/r)².
//! ```
//!
//! For `k = 0` this is `w_r² + w_z²`; for `k = 1` (with `Y₁ = ω₁`) the
//! maximum over directions is `max(w_r² + w_z², (w/r)²)`, which is what the
//! envelope stores.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{metric, GapGeometry, MeridianGrid};
use crate::pde::ModeSpec;

/// How a field's nodal values came to be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    /// Produced by the linear solver at the recorded relative residual.
    Solved { relative_residual: f64 },
    /// Inserted by hand (manufactured-solution tests, coefficient scans).
    Manufactured,
}

/// Nodal meridian field `w` with its mode and grid.
#[derive(Debug, Clone)]
pub struct Field {
    pub values: Vec<f64>,
    pub mode: ModeSpec,
    grid: Arc<MeridianGrid>,
    provenance: Provenance,
}

impl Field {
    /// Wraps hand-built nodal values.
    pub fn manufactured(values: Vec<f64>, mode: ModeSpec, grid: Arc<MeridianGrid>) -> Result<Field> {
        Self::with_provenance(values, mode, grid, Provenance::Manufactured)
    }

    pub fn with_provenance(
        values: Vec<f64>,
        mode: ModeSpec,
        grid: Arc<MeridianGrid>,
        provenance: Provenance,
    ) -> Result<Field> {
        if values.len() != grid.n_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_argument("field contains non-finite values"));
        }
        Ok(Field {
            values,
            mode,
            grid,
            provenance,
        })
    }

    pub fn grid(&self) -> &Arc<MeridianGrid> {
        &self.grid
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.provenance, Provenance::Solved { .. })
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }
}

/// Per-node gradient data and the directional envelope `M`.
#[derive(Debug, Clone)]
pub struct GradEnvelope {
    /// `max_ω |∇u|` per node.
    pub m: Vec<f64>,
    pub w_r: Vec<f64>,
    pub w_z: Vec<f64>,
    /// `w/r` per node for `k = 1` (`w_r` limit on the axis); `None` for k = 0.
    pub w_over_r: Option<Vec<f64>>,
    grid: Arc<MeridianGrid>,
}

impl GradEnvelope {
    pub fn grid(&self) -> &Arc<MeridianGrid> {
        &self.grid
    }
}

/// Second-order finite difference of one grid line, one-sided at the ends.
#[inline]
fn deriv_line(vm2: f64, vm1: f64, v0: f64, vp1: f64, vp2: f64, pos: i32, d: f64) -> f64 {
    match pos {
        // at the low end: forward stencil on (v0, vp1, vp2)
        -1 => (-3.0 * v0 + 4.0 * vp1 - vp2) / (2.0 * d),
        // at the high end: backward stencil on (vm2, vm1, v0)
        1 => (3.0 * v0 - 4.0 * vm1 + vm2) / (2.0 * d),
        _ => (vp1 - vm1) / (2.0 * d),
    }
}

/// Reconstructs `(w_r, w_z)` per node: central differences in `(ξ, η)`
/// (one-sided at boundaries) mapped through the inverse conformal Jacobian
/// with analytic metric terms.
pub fn gradient_components(field: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = field.grid();
    let geom = grid.geometry();
    let (n_xi, n_eta) = (grid.n_xi, grid.n_eta);
    let mut w_r = vec![0.0; grid.n_nodes()];
    let mut w_z = vec![0.0; grid.n_nodes()];
    let v = |i: usize, j: usize| field.values[grid.idx(i, j)];
    for j in 0..n_eta {
        for i in 0..n_xi {
            let pos_xi: i32 = if i == 0 {
                -1
            } else if i == n_xi - 1 {
                1
            } else {
                0
            };
            let pos_eta: i32 = if j == 0 {
                -1
            } else if j == n_eta - 1 {
                1
            } else {
                0
            };
            let at = |di: i32, dj: i32| v((i as i32 + di) as usize, (j as i32 + dj) as usize);
            let w_xi = match pos_xi {
                -1 => deriv_line(0.0, 0.0, at(0, 0), at(1, 0), at(2, 0), -1, grid.d_xi),
                1 => deriv_line(at(-2, 0), at(-1, 0), at(0, 0), 0.0, 0.0, 1, grid.d_xi),
                _ => deriv_line(0.0, at(-1, 0), at(0, 0), at(1, 0), 0.0, 0, grid.d_xi),
            };
            let w_eta = match pos_eta {
                -1 => deriv_line(0.0, 0.0, at(0, 0), at(0, 1), at(0, 2), -1, grid.d_eta),
                1 => deriv_line(at(0, -2), at(0, -1), at(0, 0), 0.0, 0.0, 1, grid.d_eta),
                _ => deriv_line(0.0, at(0, -1), at(0, 0), at(0, 1), 0.0, 0, grid.d_eta),
            };
            let nd = grid.node(i, j);
            let m = metric(nd.xi, nd.eta, geom)?;
            let h2 = m.h * m.h;
            let id = grid.idx(i, j);
            w_r[id] = (m.r_xi * w_xi + m.r_eta * w_eta) / h2;
            w_z[id] = (m.z_xi * w_xi + m.z_eta * w_eta) / h2;
        }
    }
    Ok((w_r, w_z))
}

/// Builds the directional gradient envelope.
pub fn grad_envelope(field: &Field) -> Result<GradEnvelope> {
    let (w_r, w_z) = gradient_components(field)?;
    let grid = field.grid().clone();
    let n = grid.n_nodes();
    let mut m = vec![0.0; n];
    let w_over_r = if field.mode.k == 1 {
        let mut q = vec![0.0; n];
        for (id, nd) in grid.nodes().iter().enumerate() {
            q[id] = if nd.r == 0.0 {
                // w vanishes on the axis for k = 1; w/r tends to w_r
                w_r[id]
            } else {
                field.values[id] / nd.r
            };
        }
        Some(q)
    } else {
        None
    };
    for id in 0..n {
        let plane = (w_r[id] * w_r[id] + w_z[id] * w_z[id]).sqrt();
        m[id] = match &w_over_r {
            Some(q) => plane.max(q[id].abs()),
            None => plane,
        };
    }
    Ok(GradEnvelope {
        m,
        w_r,
        w_z,
        w_over_r,
        grid,
    })
}

/// Result of [`max_in_v`].
#[derive(Debug, Clone, Copy)]
pub struct MaxInV {
    pub m_max: f64,
    pub r: f64,
    pub z: f64,
    pub node: usize,
}

/// Maximum of the envelope over the gap neighbourhood
/// `V = {r² + z² ≤ c_gap²}`; ties broken by smallest `r`, then smallest
/// `|z|`. Errors when no grid node lies in `V`.
pub fn max_in_v(env: &GradEnvelope, geom: &GapGeometry) -> Result<MaxInV> {
    let c2 = geom.c_gap * geom.c_gap;
    let mut best: Option<MaxInV> = None;
    for (id, nd) in env.grid.nodes().iter().enumerate() {
        if nd.r * nd.r + nd.z * nd.z > c2 {
            continue;
        }
        let cand = MaxInV {
            m_max: env.m[id],
            r: nd.r,
            z: nd.z,
            node: id,
        };
        best = Some(match best {
            None => cand,
            Some(cur) => {
                if cand.m_max > cur.m_max
                    || (cand.m_max == cur.m_max
                        && (cand.r < cur.r || (cand.r == cur.r && cand.z.abs() < cur.z.abs())))
                {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    best.ok_or_else(|| {
        Error::invalid_config(format!(
            "no grid node lies in V (c_gap = {}): grid too coarse",
            geom.c_gap
        ))
    })
}

/// Maximum of `|w_z|` over the gap-axis region `r ≤ 0.05, |z| ≤ c_gap`;
/// a proxy for the axial derivative bound `|u_n| ≤ C`.
pub fn axis_normal_gradient(field: &Field) -> Result<f64> {
    let (_, w_z) = gradient_components(field)?;
    let grid = field.grid();
    let c_gap = grid.geometry().c_gap;
    let mut worst: f64 = 0.0;
    for (id, nd) in grid.nodes().iter().enumerate() {
        if nd.r <= 0.05 && nd.z.abs() <= c_gap {
            worst = worst.max(w_z[id].abs());
        }
    }
    Ok(worst)
}

/// Boundary identity check: on the sphere surface the converged field must
/// satisfy `∂_ν |∇u|² = 2 |∇u|²` with ν the unit normal pointing into the
/// ball. Returns the maximum relative defect over sphere-arc nodes with
/// `r ≤ c_gap`, evaluating `|∇u|²` at the fixed meridian direction
/// (`ω = e₁` for k = 1), for which it equals `w_r² + w_z²`.
///
/// Rejects fields that were not produced by the solver: the identity only
/// holds under the Neumann wall condition, which manufactured fields
/// generally violate.
pub fn boundary_normal_derivative_check(field: &Field, geom: &GapGeometry) -> Result<f64> {
    if !field.is_solved() {
        return Err(Error::invalid_argument(
            "boundary identity requires a solver-produced field (the Neumann condition must hold)",
        ));
    }
    let grid = field.grid();
    if grid.n_xi < 4 {
        return Err(Error::invalid_config(
            "grid too coarse in xi for the one-sided boundary stencil",
        ));
    }
    let (w_r, w_z) = gradient_components(field)?;
    let f = |i: usize, j: usize| -> f64 {
        let id = grid.idx(i, j);
        w_r[id] * w_r[id] + w_z[id] * w_z[id]
    };
    let c2 = geom.c_gap * geom.c_gap;

    // arc nodes within B_c on both sphere surfaces
    let mut f_scale: f64 = 0.0;
    let mut samples: Vec<(usize, usize, bool)> = Vec::new(); // (i, j, upper wall)
    for j in 1..grid.n_eta {
        for (i, upper) in [(grid.n_xi - 1, true), (0, false)] {
            let nd = grid.node(i, j);
            if nd.r * nd.r + nd.z * nd.z <= c2 {
                f_scale = f_scale.max(f(i, j));
                samples.push((i, j, upper));
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::invalid_config(
            "no sphere-arc node lies within B_c",
        ));
    }
    let floor = 1e-8 * f_scale;

    let mut worst: f64 = 0.0;
    for (i, j, upper) in samples {
        let nd = grid.node(i, j);
        // ν = ê_ξ on the upper wall (ξ = +ξ₀), −ê_ξ on the lower; one-sided
        // second-order derivative along the grid line, step h·dξ
        let df_dxi = if upper {
            (3.0 * f(i, j) - 4.0 * f(i - 1, j) + f(i - 2, j)) / (2.0 * grid.d_xi)
        } else {
            -(-3.0 * f(i, j) + 4.0 * f(i + 1, j) - f(i + 2, j)) / (2.0 * grid.d_xi)
        };
        let dnu = df_dxi / nd.h;
        let defect = (dnu - 2.0 * f(i, j)).abs();
        worst = worst.max(defect / f(i, j).max(floor));
    }
    Ok(worst)
}
