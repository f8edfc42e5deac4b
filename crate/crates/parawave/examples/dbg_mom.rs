use parawave::sim::*;
use parawave::spectral::*;

fn main() {
    let trunc = Truncation::new(32);
    let initial = random_annulus_state(&trunc, 0.05, 1.0, 3.0, 7);
    for (n_y, dt, t_end) in [(80usize, 0.02, 5.0), (128, 0.02, 5.0)] {
        let cfg = RunConfig {
            n_max: 32,
            t_end,
            dt,
            snapshot_every: (1.0 / dt) as usize,
            n_y,
            ..Default::default()
        };
        let rec = run(&cfg, &initial, 3.0).unwrap();
        let h0 = rec.rows[0].hamiltonian;
        println!("n_y={n_y}: H0={h0:.8e} mom1_0={:.6e} mom2_0={:.6e}", rec.rows[0].mom1, rec.rows[0].mom2);
        for r in &rec.rows {
            println!(
                "  t={:4.1} dH={:+.2e} dM1={:+.3e} dM2={:+.3e}",
                r.t,
                (r.hamiltonian - h0) / h0,
                r.mom1 - rec.rows[0].mom1,
                r.mom2 - rec.rows[0].mom2
            );
        }
    }
}
