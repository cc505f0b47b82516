//! Closed-form estimate machinery: the critical exponent `γ*(n)`, the
//! positivity quantity `ρ`, the `(b, A)` constant recipe, and the auxiliary
//! comparison quantities evaluated on solved fields.
//!
//! `γ*(n)` is the positive root of
//!
//! ```text
//! (n−2) γ² + (n²−4n+5) γ − (n²−5n+5) = 0,
//! ```
//!
//! which exists for `n ≥ 4` and lies in `(0, 1)`; the quadratic has no
//! positive root for `n = 2, 3`. The gradient bound
//! `|∇u| ≤ C (ε + |x'|²)^{−(1−γ)/2}` holds for every `0 < γ < γ*(n)`.

use crate::error::{Error, Result};
use crate::field::{grad_envelope, Field, GradEnvelope};
use crate::geometry::GapGeometry;

/// Default smoothing exponent shift δ.
pub const DEFAULT_DELTA: f64 = 1e-3;

/// Constants `(γ, δ, σ, b, A, ρ)` entering the comparison quantity
/// `Q = ((r² + σ)^{1−γ} + ε^{1−γ(1−δ)} − A (b z² + r⁴ + σ)^{1−γ/2}) |∇u|²`.
#[derive(Debug, Clone, Copy)]
pub struct EstimateParams {
    pub n: u32,
    pub gamma: f64,
    pub delta: f64,
    /// Regularizer; 0 is allowed for evaluation. When positive it must
    /// satisfy `σ^{1−γ} < ε³` for the ε in use (see
    /// [`EstimateParams::validate_for_eps`]).
    pub sigma: f64,
    pub b: f64,
    pub a: f64,
    pub rho: f64,
}

impl EstimateParams {
    /// Checks the regularizer constraint `σ^{1−γ} < ε³` for a given ε.
    pub fn validate_for_eps(&self, eps: f64) -> Result<()> {
        if self.sigma > 0.0 && self.sigma.powf(1.0 - self.gamma) >= eps.powi(3) {
            return Err(Error::invalid_argument(format!(
                "sigma = {} violates sigma^(1-gamma) < eps^3 at eps = {eps}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Quadratic coefficients `(A, B, C)` of `A γ² + B γ − C = 0` for γ*.
fn gamma_star_coefficients(n: f64) -> (f64, f64, f64) {
    (n - 2.0, n * n - 4.0 * n + 5.0, n * n - 5.0 * n + 5.0)
}

/// Positive root `γ*(n)` of the quadratic, when it exists.
///
/// Returns `None` for `n = 2, 3` (no positive root). Uses the rationalized
/// form `2C / (B + sqrt(B² + 4AC))`, which stays accurate for large `n`
/// where the textbook formula cancels catastrophically.
pub fn gamma_star(n: u32) -> Result<Option<f64>> {
    if n < 2 {
        return Err(Error::invalid_argument(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    let (a, b, c) = gamma_star_coefficients(n as f64);
    if n == 2 {
        // degenerate leading coefficient: B γ = C with C = -1 < 0
        debug_assert!(a == 0.0);
        return Ok(None);
    }
    if c <= 0.0 {
        // n = 3: roots of γ² + 2γ + 1 are both -1
        return Ok(None);
    }
    let disc = b * b + 4.0 * a * c;
    let root = 2.0 * c / (b + disc.sqrt());
    debug_assert!(root > 0.0 && root < 1.0);
    Ok(Some(root))
}

/// `ρ(n, γ) = −(n−2)γ² − (n²−4n+5)γ + (n²−5n+5)`; its positivity is what
/// restricts the refined bound to `γ < γ*(n)`.
pub fn rho(n: u32, gamma: f64) -> f64 {
    let (a, b, c) = gamma_star_coefficients(n as f64);
    -a * gamma * gamma - b * gamma + c
}

/// Chooses admissible constants `(b, A)` for `0 < γ < γ*(n)`:
/// `b` is the largest value in the halving sequence `1/2, 1/4, …` with
/// `4γ(1 + b/4)^{γ/2} < 4γ + 0.99·ρ/(n−1)` (the 0.99 margin keeps the
/// inequality strictly away from its boundary instead of solving the
/// transcendental equation exactly), and `A = (4γ + ρ/(n−1)) / (b(2−γ))`.
/// The returned constants satisfy the sandwich
/// `4γ(1 + b/4)^{γ/2} < A b (2−γ) < 4γ + 2ρ/(n−1)` strictly.
pub fn choose_constants(n: u32, gamma: f64) -> Result<EstimateParams> {
    if n < 2 {
        return Err(Error::invalid_argument(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid_argument(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let rho_val = rho(n, gamma);
    if rho_val <= 0.0 {
        return Err(Error::invalid_argument(format!(
            "rho(n = {n}, gamma = {gamma}) = {rho_val} <= 0: need n >= 4 and gamma < gamma_star(n)"
        )));
    }
    let target = 4.0 * gamma + rho_val / (n as f64 - 1.0);
    let margin_target = 4.0 * gamma + 0.99 * rho_val / (n as f64 - 1.0);
    let mut b: f64 = 0.5;
    let mut tries = 0;
    while 4.0 * gamma * (1.0 + b / 4.0).powf(gamma / 2.0) >= margin_target {
        b *= 0.5;
        tries += 1;
        if tries > 200 {
            return Err(Error::invalid_argument(format!(
                "no admissible b found for n = {n}, gamma = {gamma}"
            )));
        }
    }
    let a = target / (b * (2.0 - gamma));
    let params = EstimateParams {
        n,
        gamma,
        delta: DEFAULT_DELTA,
        sigma: 0.0,
        b,
        a,
        rho: rho_val,
    };
    // both sides of the sandwich, asserted strictly
    let lower = 4.0 * gamma * (1.0 + b / 4.0).powf(gamma / 2.0);
    let middle = a * b * (2.0 - gamma);
    let upper = 4.0 * gamma + 2.0 * rho_val / (n as f64 - 1.0);
    if !(lower < middle && middle < upper) {
        return Err(Error::invalid_argument(format!(
            "constructed constants violate the sandwich: {lower} < {middle} < {upper}"
        )));
    }
    Ok(params)
}

/// The comparison quantity
/// `Q = ((r² + σ)^{1−γ} + ε^{1−γ(1−δ)} − A (b z² + r⁴ + σ)^{1−γ/2}) · |∇u|²`.
pub fn q_value(r: f64, z: f64, eps: f64, params: &EstimateParams, gradsq: f64) -> f64 {
    let g = params.gamma;
    let bracket = (r * r + params.sigma).powf(1.0 - g)
        + eps.powf(1.0 - g * (1.0 - params.delta))
        - params.a * (params.b * z * z + r.powi(4) + params.sigma).powf(1.0 - g / 2.0);
    bracket * gradsq
}

/// Coefficient-only part of [`q_value`] (the bracket), for coefficient scans.
pub fn q_bracket(r: f64, z: f64, eps: f64, params: &EstimateParams) -> f64 {
    q_value(r, z, eps, params, 1.0)
}

/// The positive part of the bracket times the gradient square,
/// `((r² + σ)^{1−γ} + ε^{1−γ(1−δ)}) · |∇u|²`: this is the quantity the
/// maximum argument ultimately bounds uniformly in ε.
pub fn q_positive_part(r: f64, eps: f64, params: &EstimateParams, gradsq: f64) -> f64 {
    let g = params.gamma;
    ((r * r + params.sigma).powf(1.0 - g) + eps.powf(1.0 - g * (1.0 - params.delta))) * gradsq
}

/// The simpler comparison quantity
/// `Q = (r² + ε − 2z²) |∇u|² + A u²` behind the baseline
/// `(ε + |x'|²)^{−1/2}` gradient bound.
pub fn q_baseline(r: f64, z: f64, eps: f64, a: f64, u: f64, gradsq: f64) -> f64 {
    (r * r + eps - 2.0 * z * z) * gradsq + a * u * u
}

/// The baseline argument needs `A > 15 − n`; out-of-range constants are a
/// warning for the campaign driver, not a failure.
pub fn q_baseline_constant_ok(n: u32, a: f64) -> bool {
    a > 15.0 - n as f64
}

/// `max_V (ε + r²)^{(1−γ)/2} · M`: the constant the refined gradient bound
/// asserts is uniform in ε. At `γ = 0` this reproduces the baseline-bound
/// ratio.
pub fn bound_ratio(env: &GradEnvelope, geom: &GapGeometry, eps: f64, gamma: f64) -> f64 {
    let c2 = geom.c_gap * geom.c_gap;
    let e = 0.5 * (1.0 - gamma);
    let mut worst: f64 = 0.0;
    for (id, nd) in env.grid().nodes().iter().enumerate() {
        if nd.r * nd.r + nd.z * nd.z > c2 {
            continue;
        }
        worst = worst.max((eps + nd.r * nd.r).powf(e) * env.m[id]);
    }
    worst
}

/// Where `Q` attains its maximum over `V`.
#[derive(Debug, Clone, Copy)]
pub struct QArgmax {
    pub r: f64,
    pub z: f64,
    pub value: f64,
    /// Positive-part value at the argmax (uniformity diagnostic).
    pub positive_part: f64,
    /// True when the argmax lies on the outer shell
    /// `r² + z² ≥ (c_gap − shell_tol)²` with `shell_tol` two local grid
    /// spacings.
    pub on_outer_shell: bool,
    /// Set when the argmax node touches the grid edge with fewer than four
    /// grid neighbours, indicating an under-resolved scan.
    pub resolution_warning: bool,
}

/// Evaluates `Q` at every node of `V` using the directional-envelope
/// `gradsq = M²` and reports the argmax.
pub fn q_argmax_location(
    field: &Field,
    params: &EstimateParams,
    geom: &GapGeometry,
) -> Result<QArgmax> {
    if params.rho <= 0.0 {
        return Err(Error::invalid_argument(format!(
            "q_argmax_location requires rho > 0, got {}",
            params.rho
        )));
    }
    params.validate_for_eps(geom.eps)?;
    let env = grad_envelope(field)?;
    let grid = field.grid();
    let c2 = geom.c_gap * geom.c_gap;
    let mut best: Option<(usize, f64)> = None;
    for (id, nd) in grid.nodes().iter().enumerate() {
        if nd.r * nd.r + nd.z * nd.z > c2 {
            continue;
        }
        let q = q_value(nd.r, nd.z, geom.eps, params, env.m[id] * env.m[id]);
        match best {
            Some((_, qb)) if qb >= q => {}
            _ => best = Some((id, q)),
        }
    }
    let (id, value) = best.ok_or_else(|| {
        Error::invalid_config(format!(
            "no grid node lies in V (c_gap = {}): grid too coarse",
            geom.c_gap
        ))
    })?;
    let nd = &grid.nodes()[id];
    let i = id % grid.n_xi;
    let j = id / grid.n_xi;
    let shell_tol = 2.0 * nd.h * grid.d_xi.max(grid.d_eta);
    let shell = (geom.c_gap - shell_tol).max(0.0);
    let on_outer_shell = nd.r * nd.r + nd.z * nd.z >= shell * shell;
    let resolution_warning = i == 0 || i == grid.n_xi - 1 || j == 0 || j == grid.n_eta - 1;
    Ok(QArgmax {
        r: nd.r,
        z: nd.z,
        value,
        positive_part: q_positive_part(nd.r, geom.eps, params, env.m[id] * env.m[id]),
        on_outer_shell,
        resolution_warning,
    })
}

/// Argmax of the baseline quantity over `V`, using `gradsq = M²` and the
/// fixed-direction trace `u = w`.
pub fn q_baseline_argmax(field: &Field, a: f64, geom: &GapGeometry) -> Result<QArgmax> {
    let env = grad_envelope(field)?;
    let grid = field.grid();
    let c2 = geom.c_gap * geom.c_gap;
    let mut best: Option<(usize, f64)> = None;
    for (id, nd) in grid.nodes().iter().enumerate() {
        if nd.r * nd.r + nd.z * nd.z > c2 {
            continue;
        }
        let q = q_baseline(
            nd.r,
            nd.z,
            geom.eps,
            a,
            field.values[id],
            env.m[id] * env.m[id],
        );
        match best {
            Some((_, qb)) if qb >= q => {}
            _ => best = Some((id, q)),
        }
    }
    let (id, value) = best.ok_or_else(|| {
        Error::invalid_config("no grid node lies in V: grid too coarse")
    })?;
    let nd = &grid.nodes()[id];
    let i = id % grid.n_xi;
    let j = id / grid.n_xi;
    let shell_tol = 2.0 * nd.h * grid.d_xi.max(grid.d_eta);
    let shell = (geom.c_gap - shell_tol).max(0.0);
    Ok(QArgmax {
        r: nd.r,
        z: nd.z,
        value,
        positive_part: (nd.r * nd.r + geom.eps) * env.m[id] * env.m[id],
        on_outer_shell: nd.r * nd.r + nd.z * nd.z >= shell * shell,
        resolution_warning: i == 0 || i == grid.n_xi - 1 || j == 0 || j == grid.n_eta - 1,
    })
}
