//! Gap geometry and the bispherical coordinate map.
//!
//! Two closed unit balls are centered at `(0, …, 0, ±(1+ε))`, so their
//! surfaces are a distance `2ε` apart at the origin. In the meridian
//! half-plane `(r, z)` with `r = |x'|`, `z = x_n`, bispherical coordinates
//!
//! ```text
//! r = a sin η / (cosh ξ − cos η),   z = a sinh ξ / (cosh ξ − cos η)
//! ```
//!
//! with `a = sinh ξ₀`, `cosh ξ₀ = 1 + ε` turn the region between the spheres
//! into the rectangle `[−ξ₀, ξ₀] × [η_min, π]`:
//!
//! - `ξ = ±ξ₀` are the two sphere surfaces (unit circles centered at
//!   `(0, ±(1+ε))`),
//! - `η = π` is the gap segment of the symmetry axis (`r = 0`, `|z| ≤ ε`),
//! - `η = η_min` is the outer truncation arc, a coordinate circle through
//!   the focal points `(0, ±a)` whose farthest point from the origin lies at
//!   distance `a·cot(η_min/2)`.
//!
//! The map is conformal: `dr² + dz² = h² (dξ² + dη²)` with
//! `h = a / (cosh ξ − cos η)`.

use crate::error::{Error, Result};

/// Default outer truncation coordinate.
pub const DEFAULT_ETA_MIN: f64 = 0.35;

/// Default radius `c` of the ball `B_c` whose intersection with the domain
/// is the gap neighbourhood `V`.
pub const DEFAULT_C_GAP: f64 = 0.3;

/// Gap geometry for a given half-separation `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapGeometry {
    /// Gap half-width `ε > 0`; balls have radius 1.
    pub eps: f64,
    /// Sphere coordinate `ξ₀ = arccosh(1 + ε)`.
    pub xi0: f64,
    /// Bispherical scale `a = sinh ξ₀ = sqrt(ε (2 + ε))`.
    pub a: f64,
    /// Outer truncation coordinate in `(0, π)`.
    pub eta_min: f64,
    /// Radius of the ball `B_c` defining the gap neighbourhood `V`.
    pub c_gap: f64,
}

impl GapGeometry {
    /// Builds the geometry from `ε`, an outer truncation coordinate and the
    /// `B_c` radius.
    pub fn new(eps: f64, eta_min: f64, c_gap: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid_argument(format!(
                "eps must be positive and finite, got {eps}"
            )));
        }
        if !(eta_min > 0.0 && eta_min < std::f64::consts::PI) {
            return Err(Error::invalid_argument(format!(
                "eta_min must lie in (0, pi), got {eta_min}"
            )));
        }
        if !(c_gap > 0.0 && c_gap < 0.5) {
            return Err(Error::invalid_argument(format!(
                "c_gap must lie in (0, 1/2), got {c_gap}"
            )));
        }
        let a = (eps * (2.0 + eps)).sqrt();
        // arccosh(1+eps) via the log form; for small eps the direct formula
        // ln(1+eps + a) is accurate because a >> eps.
        let xi0 = (1.0 + eps + a).ln();
        Ok(GapGeometry {
            eps,
            xi0,
            a,
            eta_min,
            c_gap,
        })
    }

    /// Builds the geometry with the outer arc placed at a fixed physical
    /// distance: `η_min = 2·atan(a / outer_radius)`, so the farthest point of
    /// the truncation arc sits at `outer_radius` from the origin regardless
    /// of `ε`. With `outer_radius = 2.5` and `ε = 0.1` this reproduces the
    /// default `η_min ≈ 0.35`.
    pub fn with_outer_radius(eps: f64, outer_radius: f64, c_gap: f64) -> Result<Self> {
        if !(outer_radius > 0.0) || !outer_radius.is_finite() {
            return Err(Error::invalid_argument(format!(
                "outer_radius must be positive, got {outer_radius}"
            )));
        }
        let a = (eps.max(0.0) * (2.0 + eps.max(0.0))).sqrt();
        let eta_min = 2.0 * (a / outer_radius).atan();
        Self::new(eps, eta_min, c_gap)
    }

    /// Farthest physical distance of the outer truncation arc from the
    /// origin, `a·cot(η_min/2)` (attained at `ξ = 0`).
    pub fn outer_radius(&self) -> f64 {
        self.a / (0.5 * self.eta_min).tan()
    }
}

/// Constructs a [`GapGeometry`]; alias for [`GapGeometry::new`].
pub fn geometry_from_eps(eps: f64, eta_min: f64, c_gap: f64) -> Result<GapGeometry> {
    GapGeometry::new(eps, eta_min, c_gap)
}

/// Physical point and analytic metric data of the bispherical map at a
/// single `(ξ, η)`.
#[derive(Debug, Clone, Copy)]
pub struct Metric {
    pub r: f64,
    pub z: f64,
    /// Conformal factor `h = a / (cosh ξ − cos η)`.
    pub h: f64,
    pub r_xi: f64,
    pub r_eta: f64,
    pub z_xi: f64,
    pub z_eta: f64,
}

/// Evaluates the map and its first derivatives. Errors at the coordinate
/// singularity `(ξ, η) → (0, 0)` (the point at infinity).
pub fn metric(xi: f64, eta: f64, geom: &GapGeometry) -> Result<Metric> {
    let a = geom.a;
    let (sh, ch) = (xi.sinh(), xi.cosh());
    let (sn, cs) = (eta.sin(), eta.cos());
    let d = ch - cs;
    if d < 1e-14 {
        return Err(Error::invalid_argument(format!(
            "(xi, eta) = ({xi}, {eta}) is at the coordinate singularity (point at infinity)"
        )));
    }
    let d2 = d * d;
    Ok(Metric {
        r: a * sn / d,
        z: a * sh / d,
        h: a / d,
        r_xi: -a * sn * sh / d2,
        r_eta: a * (ch * cs - 1.0) / d2,
        z_xi: a * (1.0 - ch * cs) / d2,
        z_eta: -a * sh * sn / d2,
    })
}

/// Maps `(ξ, η)` to the physical meridian point `(r, z)`.
pub fn bispherical_to_physical(xi: f64, eta: f64, geom: &GapGeometry) -> Result<(f64, f64)> {
    let m = metric(xi, eta, geom)?;
    Ok((m.r, m.z))
}

/// Conformal factor `h` at `(ξ, η)`; companion to
/// [`bispherical_to_physical`].
pub fn conformal_factor(xi: f64, eta: f64, geom: &GapGeometry) -> Result<f64> {
    Ok(metric(xi, eta, geom)?.h)
}

/// A single grid node with precomputed physical coordinates.
#[derive(Debug, Clone, Copy)]
pub struct GridNode {
    pub xi: f64,
    pub eta: f64,
    pub r: f64,
    pub z: f64,
    pub h: f64,
}

/// Uniform tensor grid on `[−ξ₀, ξ₀] × [η_min, π]`.
///
/// Nodes are stored row-major by η-level: index `j * n_xi + i` where
/// `i` counts ξ from `−ξ₀` upward and `j` counts η from `η_min` upward, so
/// node 0 is the corner `(−ξ₀, η_min)` and the last row `j = n_eta − 1` is
/// the axis `η = π` (where `r = 0` exactly).
#[derive(Debug, Clone)]
pub struct MeridianGrid {
    pub n_xi: usize,
    pub n_eta: usize,
    pub d_xi: f64,
    pub d_eta: f64,
    geom: GapGeometry,
    nodes: Vec<GridNode>,
}

impl MeridianGrid {
    pub fn geometry(&self) -> &GapGeometry {
        &self.geom
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_xi && j < self.n_eta);
        j * self.n_xi + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> &GridNode {
        &self.nodes[self.idx(i, j)]
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `η = π` row (the gap segment of the symmetry axis).
    #[inline]
    pub fn is_axis_row(&self, j: usize) -> bool {
        j == self.n_eta - 1
    }

    /// `η = η_min` row (outer Dirichlet arc).
    #[inline]
    pub fn is_outer_row(&self, j: usize) -> bool {
        j == 0
    }

    /// `ξ = ±ξ₀` column (sphere surfaces).
    #[inline]
    pub fn is_wall_col(&self, i: usize) -> bool {
        i == 0 || i == self.n_xi - 1
    }

    /// Grid with both cell counts doubled (node counts `2n − 1`), so the
    /// spacings halve exactly.
    pub fn refined(&self) -> MeridianGrid {
        build_grid(&self.geom, 2 * self.n_xi - 1, 2 * self.n_eta - 1)
            .expect("refining a valid grid cannot fail")
    }
}

/// Builds a uniform grid; requires at least 8 nodes per direction.
pub fn build_grid(geom: &GapGeometry, n_xi: usize, n_eta: usize) -> Result<MeridianGrid> {
    if n_xi < 8 || n_eta < 8 {
        return Err(Error::invalid_config(format!(
            "grid must have at least 8 nodes per direction, got {n_xi} x {n_eta}"
        )));
    }
    let d_xi = 2.0 * geom.xi0 / (n_xi - 1) as f64;
    let d_eta = (std::f64::consts::PI - geom.eta_min) / (n_eta - 1) as f64;
    let mut nodes = Vec::with_capacity(n_xi * n_eta);
    for j in 0..n_eta {
        let on_axis = j == n_eta - 1;
        let eta = if on_axis {
            std::f64::consts::PI
        } else {
            geom.eta_min + j as f64 * d_eta
        };
        for i in 0..n_xi {
            let xi = if i == n_xi - 1 {
                geom.xi0
            } else {
                -geom.xi0 + i as f64 * d_xi
            };
            let m = metric(xi, eta, geom)?;
            // sin(pi) is ~1e-16 rather than 0 in floating point; snap the
            // axis row so r = 0 holds exactly there.
            let r = if on_axis { 0.0 } else { m.r };
            nodes.push(GridNode {
                xi,
                eta,
                r,
                z: m.z,
                h: m.h,
            });
        }
    }
    Ok(MeridianGrid {
        n_xi,
        n_eta,
        d_xi,
        d_eta,
        geom: *geom,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn geometry_closed_forms_at_eps_point_one() {
        let g = geometry_from_eps(0.1, DEFAULT_ETA_MIN, DEFAULT_C_GAP).unwrap();
        assert!((g.a - 0.21f64.sqrt()).abs() < 1e-15);
        assert!((g.a - 0.4582575694955840).abs() < 1e-12);
        // identity cross-check: cosh(arccosh(1+eps)) = 1+eps
        assert!((g.xi0.cosh() - 1.1).abs() < 1e-14);
        assert!((g.xi0 - 0.4435682543851154).abs() < 1e-12);
    }

    #[test]
    fn geometry_rejects_degenerate_eps() {
        assert!(geometry_from_eps(0.0, 0.35, 0.3).is_err());
        assert!(geometry_from_eps(-1.0, 0.35, 0.3).is_err());
        assert!(geometry_from_eps(f64::NAN, 0.35, 0.3).is_err());
        assert!(geometry_from_eps(0.1, 0.0, 0.3).is_err());
        assert!(geometry_from_eps(0.1, 3.15, 0.3).is_err());
        assert!(geometry_from_eps(0.1, 0.35, 0.6).is_err());
        assert!(geometry_from_eps(0.1, 0.35, 0.0).is_err());
    }

    #[test]
    fn geometry_tiny_eps_identities() {
        let g = geometry_from_eps(1e-6, 0.35, 0.3).unwrap();
        assert!((g.a - (2e-6f64 + 1e-12).sqrt()).abs() < 1e-18);
        assert!((g.a - 1.4142e-3).abs() < 1e-6);
        assert!((g.xi0.cosh() - 1.0 - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn outer_radius_rule_matches_default_at_eps_point_one() {
        // eta_min = 0.35 at eps = 0.1 corresponds to an outer arc at
        // physical distance a*cot(0.175) ~ 2.59.
        let g = geometry_from_eps(0.1, DEFAULT_ETA_MIN, DEFAULT_C_GAP).unwrap();
        let d = g.outer_radius();
        assert!((d - 2.59).abs() < 0.02, "outer radius {d}");
        let g2 = GapGeometry::with_outer_radius(0.1, d, DEFAULT_C_GAP).unwrap();
        assert!((g2.eta_min - DEFAULT_ETA_MIN).abs() < 1e-12);
    }

    #[test]
    fn map_hits_gap_endpoints() {
        let g = geometry_from_eps(0.05, 0.35, 0.3).unwrap();
        let (r, z) = bispherical_to_physical(g.xi0, std::f64::consts::PI, &g).unwrap();
        assert!(r.abs() < 1e-14);
        assert!((z - g.eps).abs() < 1e-14);
        let (r, z) = bispherical_to_physical(-g.xi0, std::f64::consts::PI, &g).unwrap();
        assert!(r.abs() < 1e-14);
        assert!((z + g.eps).abs() < 1e-14);
        let (r, z) = bispherical_to_physical(0.0, std::f64::consts::PI, &g).unwrap();
        assert!(r.abs() < 1e-14 && z.abs() < 1e-14);
    }

    #[test]
    fn map_rejects_point_at_infinity() {
        let g = geometry_from_eps(0.1, 0.35, 0.3).unwrap();
        assert!(bispherical_to_physical(0.0, 0.0, &g).is_err());
    }

    #[test]
    fn sphere_surface_lies_on_unit_circle() {
        let g = geometry_from_eps(0.07, 0.35, 0.3).unwrap();
        for m in 0..20 {
            let eta = g.eta_min + (std::f64::consts::PI - g.eta_min) * (m as f64 + 0.5) / 20.0;
            let (r, z) = bispherical_to_physical(g.xi0, eta, &g).unwrap();
            let dist2 = r * r + (z - 1.0 - g.eps) * (z - 1.0 - g.eps);
            assert!(
                (dist2 - 1.0).abs() < 1e-12,
                "eta={eta}: dist^2 from center = {dist2}"
            );
            let (r, z) = bispherical_to_physical(-g.xi0, eta, &g).unwrap();
            let dist2 = r * r + (z + 1.0 + g.eps) * (z + 1.0 + g.eps);
            assert!((dist2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_construction_and_refinement() {
        let g = geometry_from_eps(0.1, 0.35, 0.3).unwrap();
        let grid = build_grid(&g, 8, 8).unwrap();
        assert_eq!(grid.n_nodes(), 64);
        let corner = grid.node(0, 0);
        assert!((corner.xi + g.xi0).abs() < 1e-15);
        assert!((corner.eta - g.eta_min).abs() < 1e-15);

        let fine = grid.refined();
        assert_eq!(fine.n_xi, 15);
        assert_eq!(fine.d_xi, grid.d_xi / 2.0);
        assert_eq!(fine.d_eta, grid.d_eta / 2.0);

        assert!(build_grid(&g, 7, 8).is_err());
    }

    #[test]
    fn axis_row_has_exactly_zero_radius() {
        let g = geometry_from_eps(0.02, 0.35, 0.3).unwrap();
        let grid = build_grid(&g, 16, 24).unwrap();
        for i in 0..grid.n_xi {
            let n = grid.node(i, grid.n_eta - 1);
            assert_eq!(n.r, 0.0);
            assert!(n.z.abs() <= g.eps + 1e-14);
        }
        // physical gap width between the two pole nodes is exactly 2eps
        let top = grid.node(grid.n_xi - 1, grid.n_eta - 1);
        let bot = grid.node(0, grid.n_eta - 1);
        let width = ((top.r - bot.r).powi(2) + (top.z - bot.z).powi(2)).sqrt();
        assert!((width - 2.0 * g.eps).abs() < 1e-12);
    }

    #[test]
    fn map_is_conformal_under_fd_refinement() {
        // Cauchy-Riemann-type relations r_xi = z_eta, r_eta = -z_xi hold
        // analytically; the centered FD Jacobian must approach them at
        // second order in the step.
        let g = geometry_from_eps(0.05, 0.35, 0.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let xi = rng.gen_range(-g.xi0 * 0.9..g.xi0 * 0.9);
            let eta = rng.gen_range(g.eta_min + 0.1..std::f64::consts::PI - 0.05);
            let defect = |s: f64| -> f64 {
                let rp = |dx: f64, de: f64| {
                    bispherical_to_physical(xi + dx, eta + de, &g).unwrap()
                };
                let (r_e, z_e) = rp(s, 0.0);
                let (r_w, z_w) = rp(-s, 0.0);
                let (r_n, z_n) = rp(0.0, s);
                let (r_s, z_s) = rp(0.0, -s);
                let r_xi = (r_e - r_w) / (2.0 * s);
                let z_xi = (z_e - z_w) / (2.0 * s);
                let r_eta = (r_n - r_s) / (2.0 * s);
                let z_eta = (z_n - z_s) / (2.0 * s);
                (r_xi - z_eta).abs().max((r_eta + z_xi).abs())
            };
            let d1 = defect(1e-3);
            let d2 = defect(5e-4);
            let h = conformal_factor(xi, eta, &g).unwrap();
            // second order: quartering the defect when halving the step,
            // with slack for roundoff on nearly-exact points
            assert!(d2 < d1 * 0.3 + 1e-10 * h);
        }
    }

    #[test]
    fn analytic_metric_matches_finite_differences() {
        let g = geometry_from_eps(0.05, 0.35, 0.3).unwrap();
        let pts = [(0.1, 1.0), (-0.2, 2.5), (0.0, 3.0), (0.25, 0.6)];
        for &(frac, eta) in &pts {
            let xi = frac * g.xi0;
            let m = metric(xi, eta, &g).unwrap();
            let s = 1e-6;
            let (r_e, z_e) = bispherical_to_physical(xi + s, eta, &g).unwrap();
            let (r_w, z_w) = bispherical_to_physical(xi - s, eta, &g).unwrap();
            let (r_n, z_n) = bispherical_to_physical(xi, eta + s, &g).unwrap();
            let (r_s, z_s) = bispherical_to_physical(xi, eta - s, &g).unwrap();
            assert!(((r_e - r_w) / (2.0 * s) - m.r_xi).abs() < 1e-7 * (1.0 + m.h));
            assert!(((z_e - z_w) / (2.0 * s) - m.z_xi).abs() < 1e-7 * (1.0 + m.h));
            assert!(((r_n - r_s) / (2.0 * s) - m.r_eta).abs() < 1e-7 * (1.0 + m.h));
            assert!(((z_n - z_s) / (2.0 * s) - m.z_eta).abs() < 1e-7 * (1.0 + m.h));
            // conformal: |grad r| = |grad z| = h
            assert!(((m.r_xi * m.r_xi + m.r_eta * m.r_eta).sqrt() - m.h).abs() < 1e-12 * m.h);
        }
    }
}
