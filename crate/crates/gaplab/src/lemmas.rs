//! Standalone oracles for the self-contained mathematical sub-claims; none
//! of these require a PDE solve.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimates::gamma_star;
use crate::geometry::GapGeometry;

/// Symmetric matrix with zero trace, the algebraic shape of the Hessian of a
/// harmonic function.
#[derive(Debug, Clone)]
pub struct TraceFreeSymmetricMatrix {
    n: usize,
    entries: Vec<f64>, // row-major n x n
}

impl TraceFreeSymmetricMatrix {
    /// Validates symmetry and (near-)zero trace.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n} x {n} matrix",
                entries.len()
            )));
        }
        let m = TraceFreeSymmetricMatrix { n, entries };
        let scale = m.frobenius_norm().max(1e-300);
        for i in 0..n {
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::invalid_argument("matrix is not symmetric"));
                }
            }
        }
        let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
        if trace.abs() > 1e-12 * scale {
            return Err(Error::invalid_argument(format!(
                "trace {trace} exceeds 1e-12 of the matrix norm"
            )));
        }
        Ok(m)
    }

    /// Random trace-free symmetric matrix: symmetrize a matrix with entries
    /// uniform in [−1, 1], then subtract trace/n from the diagonal.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let raw: f64 = rng.gen_range(-1.0..1.0);
                entries[i * n + j] = raw;
                entries[j * n + i] = raw;
            }
        }
        let trace: f64 = (0..n).map(|i| entries[i * n + i]).sum();
        for i in 0..n {
            entries[i * n + i] -= trace / n as f64;
        }
        TraceFreeSymmetricMatrix { n, entries }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Row-versus-total Hessian inequality: for a trace-free symmetric `H`,
/// `Σ_j H[1][j]² ≤ (n−1)/n · Σ_{ij} H[i][j]²`. Returns `(lhs, rhs)`.
pub fn hessian_row_inequality(h: &TraceFreeSymmetricMatrix) -> (f64, f64) {
    let n = h.dim();
    let lhs: f64 = (0..n).map(|j| h.get(0, j) * h.get(0, j)).sum();
    let total: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| h.get(i, j) * h.get(i, j))
        .sum();
    (lhs, (n as f64 - 1.0) / n as f64 * total)
}

/// Elementary inequality behind the wall-term absorption:
/// `(b(ε + y/2)² + y²)^{−γ/2} (ε + y/2) ≥ ½ (1 + b/4)^{−γ/2} y^{1−γ}`
/// for `y, ε ≥ 0`, with equality at `ε = 0`. Returns `(lhs, rhs)`;
/// both sides are 0 by convention at `y = ε = 0`.
pub fn elementary_inequality_check(y: f64, eps: f64, b: f64, gamma: f64) -> (f64, f64) {
    debug_assert!(y >= 0.0 && eps >= 0.0 && b > 0.0 && gamma > 0.0 && gamma < 1.0);
    if y == 0.0 && eps == 0.0 {
        return (0.0, 0.0);
    }
    let s = eps + 0.5 * y;
    let lhs = (b * s * s + y * y).powf(-gamma / 2.0) * s;
    let rhs = 0.5 * (1.0 + b / 4.0).powf(-gamma / 2.0) * y.powf(1.0 - gamma);
    (lhs, rhs)
}

/// Gap-boundary expansion defect: the upper sphere surface is
/// `f(r) = 1 + ε − sqrt(1 − r²)` and the oracle measures
/// `max_r |f(r) − (ε + r²/2)| / r³` over `r ∈ (0, c_gap]`, the observed
/// constant of the cubic-order remainder (the remainder is actually quartic,
/// so the ratio decays like `r` and stays below 1 for `c_gap ≤ 0.3`).
pub fn gap_expansion_check(geom: &GapGeometry) -> Result<f64> {
    gap_expansion_check_sampled(geom, 200)
}

pub fn gap_expansion_check_sampled(geom: &GapGeometry, samples: usize) -> Result<f64> {
    if geom.c_gap >= 1.0 {
        return Err(Error::invalid_argument("c_gap must be < 1"));
    }
    let mut worst: f64 = 0.0;
    for i in 1..=samples {
        let r = geom.c_gap * i as f64 / samples as f64;
        let f = 1.0 + geom.eps - (1.0 - r * r).sqrt();
        let defect = (f - (geom.eps + 0.5 * r * r)).abs();
        worst = worst.max(defect / (r * r * r));
    }
    Ok(worst)
}

/// Report of the γ*-property scan.
#[derive(Debug, Clone)]
pub struct GammaStarReport {
    pub n_max: u32,
    pub all_present: bool,
    pub all_in_unit_interval: bool,
    pub strictly_monotone: bool,
    pub none_for_n2_n3: bool,
    pub last_value: f64,
}

impl GammaStarReport {
    pub fn all_pass(&self) -> bool {
        self.all_present
            && self.all_in_unit_interval
            && self.strictly_monotone
            && self.none_for_n2_n3
    }
}

/// Scans `γ*(n)` over `n = 4…200`: presence, range `(0, 1)`, strict
/// monotonicity, and absence of a positive root for `n = 2, 3`.
pub fn gamma_star_properties() -> Result<GammaStarReport> {
    let n_max = 200;
    let mut all_present = true;
    let mut all_in_unit_interval = true;
    let mut strictly_monotone = true;
    let mut prev = f64::NEG_INFINITY;
    let mut last = 0.0;
    for n in 4..=n_max {
        match gamma_star(n)? {
            Some(g) => {
                if !(g > 0.0 && g < 1.0) {
                    all_in_unit_interval = false;
                }
                if g <= prev {
                    strictly_monotone = false;
                }
                prev = g;
                last = g;
            }
            None => all_present = false,
        }
    }
    let none_for_n2_n3 = gamma_star(2)?.is_none() && gamma_star(3)?.is_none();
    Ok(GammaStarReport {
        n_max,
        all_present,
        all_in_unit_interval,
        strictly_monotone,
        none_for_n2_n3,
        last_value: last,
    })
}

/// Davenport-style randomized scan of the Hessian row inequality; returns
/// the number of violations (which must be zero) and the worst margin seen.
pub fn hessian_inequality_scan(samples_per_n: usize, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for n in 2..=8 {
        for _ in 0..samples_per_n {
            let h = TraceFreeSymmetricMatrix::random(n, &mut rng);
            let (lhs, rhs) = hessian_row_inequality(&h);
            let margin = rhs - lhs;
            if margin < -1e-13 * rhs.max(1e-300) {
                violations += 1;
            }
            worst_margin = worst_margin.min(margin);
        }
    }
    (violations, worst_margin)
}

/// Dense scan of the elementary inequality over
/// `y ∈ (0, 1], ε ∈ [0, 1], b ∈ {0.01, 0.1, 0.5}, γ ∈ {0.1, 0.5, 0.9}`;
/// returns `(violations, worst equality defect at ε = 0)`.
pub fn elementary_inequality_scan(points_per_axis: usize) -> (usize, f64) {
    let bs = [0.01, 0.1, 0.5];
    let gs = [0.1, 0.5, 0.9];
    let mut violations = 0;
    let mut worst_eq: f64 = 0.0;
    for &b in &bs {
        for &g in &gs {
            for iy in 1..=points_per_axis {
                let y = iy as f64 / points_per_axis as f64;
                for ie in 0..=points_per_axis {
                    let eps = ie as f64 / points_per_axis as f64;
                    let (lhs, rhs) = elementary_inequality_check(y, eps, b, g);
                    if lhs < rhs * (1.0 - 1e-13) {
                        violations += 1;
                    }
                    if ie == 0 {
                        worst_eq = worst_eq.max((lhs - rhs).abs() / rhs.max(1e-300));
                    }
                }
            }
        }
    }
    (violations, worst_eq)
}
