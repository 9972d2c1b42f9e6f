use criterion::{criterion_group, criterion_main, Criterion};
use ecs_spectra::spectral::{build_recursion_matrix, eval_fhat, solve_window, Backend, FhatMethod, QValue, SolveOptions};
use ecs_spectra::{MomentumVector, SpectralWindow, TailControl};
use std::hint::black_box;

fn windows(c: &mut Criterion) {
    let tc = TailControl::default();
    let win = SpectralWindow::new(2, 8).unwrap().with_sector(0);
    c.bench_function("recursion_matrix_n2_nmax8", |b| {
        b.iter(|| build_recursion_matrix(black_box(&win), 2.0, QValue::Real(0.1), Backend::FourierV).unwrap())
    });
    let opts = SolveOptions { filter: None, drift: false, ..SolveOptions::default() };
    c.bench_function("solve_window_n2_nmax8_unfiltered", |b| {
        b.iter(|| solve_window(black_box(&win), 2.0, 0.1, Backend::FourierV, &opts, &tc).unwrap())
    });
}

fn fhat(c: &mut Criterion) {
    let tc = TailControl::default();
    let n = MomentumVector::new(vec![-1, 1]).unwrap();
    let m = FhatMethod::Contour { grid: 128, sigma_max: 0.8 };
    c.bench_function("fhat_contour_n2_grid128", |b| b.iter(|| eval_fhat(&n, black_box(&[-0.7, 0.9]), 2.0, 0.1, &m, &tc).unwrap()));
}

criterion_group!(benches, windows, fhat);
criterion_main!(benches);
