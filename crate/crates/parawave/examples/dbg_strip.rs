use parawave::dno::*;
use parawave::spectral::*;

fn main() {
    let t = Truncation::new(32);
    let eta = GridField::cosine(&t, (1, 0), 0.1);
    let psi = GridField::from_fn(&t, |x1, _| (0.1 * x1.cos()).exp() * x1.cos());
    let want = GridField::from_fn(&t, |x1, _| {
        (0.1 * x1.cos()).exp() * (x1.cos() - 0.1 * x1.sin() * x1.sin())
    })
    .dealias()
    .project(|j| j != (0, 0));

    for n_y in [40usize, 80, 160, 320] {
        let ctx = StripContext::new(&t, StripParams { n_y, tol: 1e-12, ..Default::default() });
        let out = dirichlet_neumann_with(&ctx, &eta, &psi, None).unwrap();
        let rel = out.g.sub(&want).l2_norm() / want.l2_norm();
        println!(
            "n_y {:4}: rel {:.3e} iters {} raw_mean {:.2e}",
            n_y,
            rel,
            out.solution.stats.len(),
            out.raw_mean
        );
        // interior check against e^{y+eta}cos x1 at a few levels
        if n_y == 80 {
            let xs = t.grid_coords();
            let eg = eta.to_grid();
            for m in [1usize, 5, 20, 40, 60, 80] {
                let y = out.solution.phi.y[m];
                let mut coeffs = out.solution.phi.values.row(m).to_owned();
                let arr = ndarray::Array2::from_shape_vec(
                    (t.n_grid(), t.n_grid()),
                    coeffs.iter().cloned().collect(),
                )
                .unwrap();
                let grid = t.to_grid(&arr);
                let mut worst = 0.0f64;
                for r in 0..t.n_grid() {
                    for c in 0..t.n_grid() {
                        let exact = (y + eg[[r, c]].re).exp() * xs[r].cos();
                        worst = worst.max((grid[[r, c]].re - exact).abs());
                    }
                }
                coeffs[0] = num_complex::Complex64::default();
                println!("  level {:3} y={:8.4}: sup err {:.3e}", m, y, worst);
            }
        }
    }
}
// timing note: see dbg_timing example
