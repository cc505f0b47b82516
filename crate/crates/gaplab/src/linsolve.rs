//! Sparse symmetric solver: CSR storage and preconditioned conjugate
//! gradients.
//!
//! Everything here is strictly serial with a fixed reduction order, so two
//! solves with identical inputs produce bitwise-identical results.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::{Field, Provenance};
use crate::pde::DiscreteSystem;

/// Compressed-sparse-row symmetric matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, val)` lists; duplicate columns are summed,
    /// columns are stored sorted.
    pub fn from_row_lists(mut rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let (c, mut v) = row[k];
                let mut m = k + 1;
                while m < row.len() && row[m].0 == c {
                    v += row[m].1;
                    m += 1;
                }
                cols.push(c);
                vals.push(v);
                k = m;
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if *c == i {
                    d[i] = *v;
                }
            }
        }
        d
    }

    /// Largest absolute entry-wise asymmetry `|a_ij − a_ji|`; the flux-form
    /// assembly is symmetric by construction so this should be exactly zero.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let vt = self.get(*c, i);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }
}

/// Preconditioner choice for the conjugate-gradient solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    /// Symmetric Gauss–Seidel (SSOR with ω = 1); zero setup cost and robust
    /// on the degenerate axis coefficient.
    #[default]
    Ssor,
    /// Diagonal scaling fallback.
    Jacobi,
    /// No preconditioning.
    None,
}

/// Convergence diagnostics of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub tolerance: f64,
    /// Wall-clock seconds; diagnostic only, never written to result files.
    pub wall_time: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `M z = r` for the symmetric Gauss–Seidel preconditioner
/// `M = (D + L) D⁻¹ (D + U)`.
fn apply_ssor(a: &CsrMatrix, diag: &[f64], r: &[f64], z: &mut [f64]) {
    let n = a.n();
    // forward sweep: (D + L) y = r
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut s = r[i];
        for (c, v) in cols.iter().zip(vals) {
            if *c < i {
                s -= v * z[*c];
            }
        }
        z[i] = s / diag[i];
    }
    // scale by D, then backward sweep: (D + U) z = D y
    for i in 0..n {
        z[i] *= diag[i];
    }
    for i in (0..n).rev() {
        let (cols, vals) = a.row(i);
        let mut s = z[i];
        for (c, v) in cols.iter().zip(vals) {
            if *c > i {
                s -= v * z[*c];
            }
        }
        z[i] = s / diag[i];
    }
}

fn apply_precond(
    kind: Preconditioner,
    a: &CsrMatrix,
    diag: &[f64],
    r: &[f64],
    z: &mut [f64],
) {
    match kind {
        Preconditioner::Ssor => apply_ssor(a, diag, r, z),
        Preconditioner::Jacobi => {
            for i in 0..a.n() {
                z[i] = r[i] / diag[i];
            }
        }
        Preconditioner::None => z.copy_from_slice(r),
    }
}

/// Preconditioned conjugate gradients on `A x = b` with `x₀ = 0`.
///
/// `on_iterate`, when given, observes every accepted iterate (for
/// diagnostics such as the A-norm monotonicity check).
pub fn solve_reduced_with_observer(
    a: &CsrMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
    precond: Preconditioner,
    mut on_iterate: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<(Vec<f64>, SolveReport)> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs matrix dimension {}",
            b.len(),
            a.n()
        )));
    }
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::invalid_argument(format!(
            "solver tolerance must lie in (0, 1), got {tolerance}"
        )));
    }
    let t0 = Instant::now();
    let n = a.n();
    let diag = a.diagonal();
    for (i, d) in diag.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(Error::IndefiniteOperator(format!(
                "nonpositive diagonal entry {d} at reduced row {i}"
            )));
        }
    }

    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                tolerance,
                wall_time: t0.elapsed().as_secs_f64(),
            },
        ));
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    apply_precond(precond, a, &diag, &r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;

    for iter in 1..=max_iterations {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::IndefiniteOperator(format!(
                "negative curvature p·Ap = {pq} at iteration {iter}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if let Some(cb) = on_iterate.as_deref_mut() {
            cb(iter, &x);
        }
        rel = norm2(&r) / b_norm;
        if rel <= tolerance {
            return Ok((
                x,
                SolveReport {
                    iterations: iter,
                    final_relative_residual: rel,
                    tolerance,
                    wall_time: t0.elapsed().as_secs_f64(),
                },
            ));
        }
        apply_precond(precond, a, &diag, &r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Err(Error::ConvergenceFailure {
        report: SolveReport {
            iterations: max_iterations,
            final_relative_residual: rel,
            tolerance,
            wall_time: t0.elapsed().as_secs_f64(),
        },
    })
}

/// [`solve_reduced_with_observer`] without an observer.
pub fn solve_reduced(
    a: &CsrMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
    precond: Preconditioner,
) -> Result<(Vec<f64>, SolveReport)> {
    solve_reduced_with_observer(a, b, tolerance, max_iterations, precond, None)
}

/// Solves the assembled system with its own Dirichlet-lift right-hand side
/// and scatters the solution back onto the full node set.
pub fn solve(
    system: &DiscreteSystem,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Field, SolveReport)> {
    let (x, report) = solve_reduced(
        system.reduced(),
        system.rhs(),
        tolerance,
        max_iterations,
        Preconditioner::Ssor,
    )?;
    let values = system.scatter(&x);
    let field = Field::with_provenance(
        values,
        system.mode(),
        system.grid().clone(),
        Provenance::Solved {
            relative_residual: report.final_relative_residual,
        },
    )?;
    Ok((field, report))
}

/// Solves the system with a caller-supplied reduced right-hand side (used by
/// the scattered-field formulation); pinned nodes are set to zero in the
/// returned full-length vector.
pub fn solve_with_rhs(
    system: &DiscreteSystem,
    rhs: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    if rhs.len() != system.reduced().n() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs reduced dimension {}",
            rhs.len(),
            system.reduced().n()
        )));
    }
    let (x, report) = solve_reduced(
        system.reduced(),
        rhs,
        tolerance,
        max_iterations,
        Preconditioner::Ssor,
    )?;
    let mut values = system.scatter(&x);
    for (node, v) in values.iter_mut().enumerate() {
        if system.is_pinned(node) {
            *v = 0.0;
        }
    }
    Ok((values, report))
}

/// Relative algebraic residual `‖A x − b‖₂ / ‖b‖₂` of a field against the
/// reduced system; falls back to the absolute norm when `‖b‖ = 0`.
pub fn residual_norm(system: &DiscreteSystem, field: &Field) -> Result<f64> {
    if field.values.len() != system.grid().n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} values, grid has {} nodes",
            field.values.len(),
            system.grid().n_nodes()
        )));
    }
    let x = system.restrict(&field.values);
    let a = system.reduced();
    let b = system.rhs();
    let mut ax = vec![0.0; a.n()];
    a.matvec(&x, &mut ax);
    let mut diff2 = 0.0;
    for i in 0..a.n() {
        let d = ax[i] - b[i];
        diff2 += d * d;
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        Ok(diff2.sqrt())
    } else {
        Ok(diff2.sqrt() / b_norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal_system(d: &[f64]) -> CsrMatrix {
        CsrMatrix::from_row_lists(d.iter().enumerate().map(|(i, v)| vec![(i, *v)]).collect())
    }

    #[test]
    fn diagonal_system_converges_in_one_iteration() {
        let d = [2.0, 5.0, 1.5, 8.0];
        let a = diagonal_system(&d);
        let (x, report) = solve_reduced(&a, &d, 1e-12, 10, Preconditioner::Ssor).unwrap();
        assert_eq!(report.iterations, 1);
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_tolerance_is_rejected() {
        let a = diagonal_system(&[1.0]);
        assert!(matches!(
            solve_reduced(&a, &[1.0], 0.0, 10, Preconditioner::Ssor),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_rhs_returns_zero_without_iterating() {
        let a = diagonal_system(&[1.0, 2.0]);
        let (x, report) = solve_reduced(&a, &[0.0, 0.0], 1e-10, 10, Preconditioner::Ssor).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn indefinite_matrix_is_detected() {
        // symmetric but indefinite: eigenvalues 3 and -1
        let a = CsrMatrix::from_row_lists(vec![
            vec![(0, 1.0), (1, 2.0)],
            vec![(0, 2.0), (1, 1.0)],
        ]);
        let r = solve_reduced(&a, &[1.0, -1.0], 1e-10, 50, Preconditioner::None);
        assert!(matches!(r, Err(Error::IndefiniteOperator(_))));
    }

    #[test]
    fn max_iterations_carries_report() {
        // 2D Laplacian-ish chain, deliberately starved of iterations
        let n = 50;
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = vec![(i, 2.0)];
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            rows.push(row);
        }
        let a = CsrMatrix::from_row_lists(rows);
        let b = vec![1.0; n];
        match solve_reduced(&a, &b, 1e-14, 2, Preconditioner::None) {
            Err(Error::ConvergenceFailure { report }) => {
                assert_eq!(report.iterations, 2);
                assert!(report.final_relative_residual > 1e-14);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn solves_are_bitwise_deterministic_and_scale_exactly() {
        let n = 80;
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = vec![(i, 2.4 + (i % 7) as f64 * 0.1)];
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            rows.push(row);
        }
        let a = CsrMatrix::from_row_lists(rows);
        let b: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let (x1, r1) = solve_reduced(&a, &b, 1e-11, 10_000, Preconditioner::Ssor).unwrap();
        let (x2, r2) = solve_reduced(&a, &b, 1e-11, 10_000, Preconditioner::Ssor).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(r1.iterations, r2.iterations);

        // scaling by a power of two is exact in floating point
        let b2: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
        let (x_scaled, _) = solve_reduced(&a, &b2, 1e-11, 10_000, Preconditioner::Ssor).unwrap();
        for (u, v) in x1.iter().zip(&x_scaled) {
            assert_eq!(2.0 * u, *v);
        }
    }

    #[test]
    fn cg_error_decreases_monotonically_in_a_norm() {
        let n = 30;
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = vec![(i, 2.0 + (i as f64) * 0.01)];
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            rows.push(row);
        }
        let a = CsrMatrix::from_row_lists(rows);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let (x_exact, _) = solve_reduced(&a, &b, 1e-15, 10_000, Preconditioner::Ssor).unwrap();

        let mut energies = Vec::new();
        {
            let mut observer = |_it: usize, x: &[f64]| {
                let e: Vec<f64> = x.iter().zip(&x_exact).map(|(u, v)| u - v).collect();
                let mut ae = vec![0.0; n];
                a.matvec(&e, &mut ae);
                energies.push(dot(&e, &ae));
            };
            solve_reduced_with_observer(&a, &b, 1e-12, 10_000, Preconditioner::None, Some(&mut observer))
                .unwrap();
        }
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-30, "A-norm error increased: {w:?}");
        }
    }
}
