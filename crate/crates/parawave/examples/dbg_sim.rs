use parawave::dno::state_norm;
use parawave::sim::*;
use parawave::spectral::*;
use std::time::Instant;

fn main() {
    // small conservation smoke test at n_max=16
    let trunc = Truncation::new(16);
    let cfg = RunConfig {
        n_max: 16,
        t_end: 1.0,
        dt: 0.01,
        snapshot_every: 50,
        n_y: 48,
        ..Default::default()
    };
    let initial = random_annulus_state(&trunc, 0.05, 1.0, 3.0, 7);
    println!("state norm: {}", state_norm(&initial, 3.0));
    let t0 = Instant::now();
    let rec = run(&cfg, &initial, 3.0).unwrap();
    let h0 = rec.rows[0].hamiltonian;
    let h1 = rec.rows.last().unwrap().hamiltonian;
    println!(
        "t=1 at n=16: {:?} ({} steps), H drift rel {:.3e}, mass {:.2e}, mom drift {:.2e}",
        t0.elapsed(),
        (cfg.t_end / cfg.dt) as usize,
        ((h1 - h0) / h0).abs(),
        rec.rows.last().unwrap().mass.abs(),
        (rec.rows.last().unwrap().mom1 - rec.rows[0].mom1).abs()
            / rec.rows[0].mom1.abs().max(1e-300),
    );
    // the same at n_max=32 to estimate criterion-10 runtime
    let trunc = Truncation::new(32);
    let cfg = RunConfig { n_max: 32, t_end: 0.25, dt: 0.005, snapshot_every: 50, ..Default::default() };
    let initial = random_annulus_state(&trunc, 0.05, 1.0, 3.0, 7);
    let t0 = Instant::now();
    let rec = run(&cfg, &initial, 3.0).unwrap();
    let h0 = rec.rows[0].hamiltonian;
    let h1 = rec.rows.last().unwrap().hamiltonian;
    let per_step = t0.elapsed().as_secs_f64() / 50.0;
    println!(
        "t=0.25 at n=32: {:?} → {:.0} ms/step → t=50 ≈ {:.0} min; H drift rel {:.3e}",
        t0.elapsed(),
        per_step * 1e3,
        per_step * 10000.0 / 60.0,
        ((h1 - h0) / h0).abs()
    );
}
