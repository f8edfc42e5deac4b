use parawave::dno::*;
use parawave::spectral::*;
use std::time::Instant;

fn main() {
    let t = Truncation::new(32);
    let eta = GridField::from_fn(&t, |x1, x2| 0.02 * (x1.cos() + (x2 + x1).sin()));
    let psi = GridField::from_fn(&t, |x1, x2| 0.02 * ((2.0 * x1).sin() + x2.cos()));
    let ctx = StripContext::new(&t, StripParams::default());
    // cold solve
    let t0 = Instant::now();
    let out = dirichlet_neumann_with(&ctx, &eta, &psi, None).unwrap();
    println!("cold: {:?} iters {}", t0.elapsed(), out.solution.stats.len());
    // warm restart with the same state
    let t0 = Instant::now();
    let out2 = dirichlet_neumann_with(&ctx, &eta, &psi, Some(&out.solution.correction)).unwrap();
    println!("warm same: {:?} iters {}", t0.elapsed(), out2.solution.stats.len());
    // warm restart with a slightly different psi (like an RK stage)
    let psi2 = psi.add(&GridField::cosine(&t, (1, 1), 1e-4));
    let t0 = Instant::now();
    let out3 = dirichlet_neumann_with(&ctx, &eta, &psi2, Some(&out.solution.correction)).unwrap();
    println!("warm near: {:?} iters {}", t0.elapsed(), out3.solution.stats.len());
}
