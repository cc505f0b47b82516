// prototype: eps sweeps, total vs scattered formulation
use std::sync::Arc;
use std::time::Instant;
use gaplab::field::{grad_envelope, max_in_v, Field, Provenance};
use gaplab::geometry::{build_grid, GapGeometry};
use gaplab::linsolve::{solve, solve_with_rhs};
use gaplab::pde::{assemble, ModeSpec, PhiChoice};

fn fit(rows: &[(f64, f64)]) -> f64 {
    let m = rows.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, v) in rows {
        let (x, y) = (e.ln(), v.ln());
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    -(m * sxy - sx * sy) / (m * sxx - sx * sx)
}

fn main() {
    let eps_list: Vec<f64> = (0..7).map(|i| 10f64.powf(-2.0 - 0.5 * i as f64)).collect();
    for (n, k) in [(2u32, 1u32), (3, 1), (4, 1), (5, 1), (3, 0)] {
        for formulation in ["scattered", "total"] {
            let t0 = Instant::now();
            let mut rows = Vec::new();
            let mut iters_all = Vec::new();
            for &eps in &eps_list {
                let geom = GapGeometry::with_outer_radius(eps, 2.5, 0.3).unwrap();
                let grid = Arc::new(build_grid(&geom, 65, 385).unwrap());
                let mode = ModeSpec::new(n, k).unwrap();
                let phi = PhiChoice::for_mode(k).unwrap();
                let bg: Vec<f64> = grid.nodes().iter().map(|nd| phi.trace()(nd.r, nd.z)).collect();
                let (field, it) = if formulation == "total" {
                    let sys = assemble(&grid, mode, phi.trace()).unwrap();
                    let (f, rep) = solve(&sys, 1e-10, 200_000).unwrap();
                    (f, rep.iterations)
                } else {
                    let sys = assemble(&grid, mode, |_, _| 0.0).unwrap();
                    let rhs = sys.scattered_rhs(&bg).unwrap();
                    let (wt, rep) = solve_with_rhs(&sys, &rhs, 1e-10, 200_000).unwrap();
                    let vals: Vec<f64> = wt.iter().zip(&bg).map(|(a, b)| a + b).collect();
                    (Field::with_provenance(vals, mode, grid.clone(), Provenance::Solved { relative_residual: rep.final_relative_residual }).unwrap(), rep.iterations)
                };
                let env = grad_envelope(&field).unwrap();
                let best = max_in_v(&env, &geom).unwrap();
                rows.push((eps, best.m_max));
                iters_all.push(it);
            }
            let beta5 = fit(&rows[rows.len() - 5..]);
            let betas: Vec<String> = rows.windows(2).map(|w| format!("{:.3}", -(w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln())).collect();
            println!("n={n} k={k} {formulation}: beta5={beta5:.4} local {betas:?} iters {iters_all:?} ({:.1}s)", t0.elapsed().as_secs_f64());
        }
    }
}
