use ndarray::Array2;
use num_complex::Complex64;
use parawave::spectral::*;
use rustfft::FftPlanner;
use std::time::Instant;

fn main() {
    // raw 2D FFT costs at 65 and 64
    for size in [64usize, 65, 128, 129] {
        let mut planner = FftPlanner::<f64>::new();
        let plan = planner.plan_fft_forward(size);
        let mut data = vec![Complex64::new(1.0, 0.5); size * size];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let t0 = Instant::now();
        let reps = 200;
        for _ in 0..reps {
            // rows
            for r in 0..size {
                plan.process_with_scratch(&mut data[r * size..(r + 1) * size], &mut scratch);
            }
            // transpose in place
            for r in 0..size {
                for c in r + 1..size {
                    data.swap(r * size + c, c * size + r);
                }
            }
            for r in 0..size {
                plan.process_with_scratch(&mut data[r * size..(r + 1) * size], &mut scratch);
            }
            for r in 0..size {
                for c in r + 1..size {
                    data.swap(r * size + c, c * size + r);
                }
            }
        }
        println!("fft2 {}²: {:.1} µs", size, t0.elapsed().as_secs_f64() * 1e6 / reps as f64);
    }
    // the Truncation helper path
    let t = Truncation::new(32);
    let g = t.n_grid();
    let mut a = Array2::<Complex64>::from_elem((g, g), Complex64::new(1.0, 0.0));
    let t0 = Instant::now();
    for _ in 0..200 {
        t.fft2_in_place(&mut a, true);
    }
    println!("fft2_in_place 65²: {:.1} µs", t0.elapsed().as_secs_f64() * 1e6 / 200.0);
}
