use parawave::sim::*;
use parawave::spectral::*;
use std::time::Instant;

fn main() {
    let trunc = Truncation::new(32);
    let initial = random_annulus_state(&trunc, 0.05, 1.0, 3.0, 7);
    for dt in [0.02, 0.01, 0.005] {
        let cfg = RunConfig { n_max: 32, t_end: 2.0, dt, snapshot_every: (0.5 / dt) as usize, ..Default::default() };
        let t0 = Instant::now();
        let rec = run(&cfg, &initial, 3.0).unwrap();
        let h0 = rec.rows[0].hamiltonian;
        let hs: Vec<f64> = rec.rows.iter().map(|r| ((r.hamiltonian - h0) / h0).abs()).collect();
        let m0 = rec.rows[0].mom1;
        let ms: Vec<f64> = rec.rows.iter().map(|r| ((r.mom1 - m0) / m0).abs()).collect();
        println!(
            "dt={dt}: {:?}; H drift per snapshot {:?}; mom1 drift {:?}",
            t0.elapsed(),
            hs.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>(),
            ms.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>(),
        );
    }
}
