use parawave::dno::*;
use parawave::spectral::*;
use std::time::Instant;

fn main() {
    let t = Truncation::new(32);
    let eta = GridField::from_fn(&t, |x1, x2| 0.02 * (x1.cos() + (x2 + x1).sin()));
    let psi = GridField::from_fn(&t, |x1, x2| 0.02 * ((2.0 * x1).sin() + x2.cos()));
    let ctx = StripContext::new(&t, StripParams::default());
    let solver = StripSolver::new(&ctx, &eta);
    let phi0 = ctx.flat_extension(&psi);
    // time the pieces via the public probe hooks
    let t0 = Instant::now();
    let n = 20;
    for _ in 0..n {
        let _ = ctx.profile_dy(&phi0);
    }
    println!("dy_all: {:.2} ms", t0.elapsed().as_secs_f64() * 1e3 / n as f64);
    let t0 = Instant::now();
    for _ in 0..n {
        let _ = solver.profile_apply_f(&phi0, true);
    }
    println!("apply_f_real (incl dy): {:.2} ms", t0.elapsed().as_secs_f64() * 1e3 / n as f64);
    let f = solver.profile_apply_f(&phi0, true);
    let t0 = Instant::now();
    for _ in 0..n {
        let _ = ctx.profile_flat_inverse(&f);
    }
    println!("flat_inverse: {:.2} ms", t0.elapsed().as_secs_f64() * 1e3 / n as f64);
    let t0 = Instant::now();
    for _ in 0..n {
        let _ = ctx.flat_extension(&psi);
    }
    println!("flat_extension: {:.2} ms", t0.elapsed().as_secs_f64() * 1e3 / n as f64);
}
