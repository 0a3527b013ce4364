//! Parallel-versus-sequential benchmarks for the data-parallel sweeps: the
//! non-extremality test-set enumeration, the randomized competitor energy
//! sweep, and the mollification delta sweep.
//!
//! With the default `parallel` feature the "par" variants run on a pool
//! sized to the machine and the "seq" variants on a single-thread pool (or
//! the plain sequential helpers). Built with `--no-default-features`, every
//! variant is the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pmclab::exec;
use pmclab::geom::RadialDomain;
use pmclab::measure::{nonextremality_ratio, RadialMeasure};
use pmclab::profile::{uniform_grid, RadialProfile};
use pmclab::radial::energy_radial_profile;

fn domain() -> RadialDomain {
    RadialDomain::new(2, 1.0, 3.0, 4.0).unwrap()
}

fn bench_nonextremality(c: &mut Criterion) {
    let m = RadialMeasure::from_atoms(domain(), &[(1.5, 0.4), (2.0, 0.8), (2.5, -0.3)]).unwrap();
    let mut group = c.benchmark_group("nonextremality_ratio");
    for (label, jobs) in [("seq", Some(1)), ("par", None)] {
        group.bench_with_input(BenchmarkId::new(label, 4096), &jobs, |b, jobs| {
            b.iter(|| exec::with_jobs(*jobs, || nonextremality_ratio(&m, 4096).unwrap().l_hat))
        });
    }
    group.finish();
}

fn competitor(seed: usize, phi_b: f64) -> RadialProfile {
    // Deterministic pseudo-random competitor from a cheap hash; the bench
    // measures the energy sweep, not RNG quality.
    let d = domain();
    let grid = uniform_grid(1.0, 3.0, 64 + seed % 64);
    let values: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let t = i as f64 / (grid.len() - 1) as f64;
            let wiggle = ((seed.wrapping_mul(2654435761) ^ i.wrapping_mul(40503)) % 1000) as f64;
            phi_b * t + (wiggle / 1000.0 - 0.5)
        })
        .collect();
    RadialProfile::new(d, grid, values).unwrap()
}

fn bench_competitor_sweep(c: &mut Criterion) {
    let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8)]).unwrap();
    let phi_b = 3.0;
    let mut group = c.benchmark_group("competitor_energies");
    group.sample_size(20);
    group.bench_function("seq_helper", |b| {
        b.iter(|| {
            exec::map_indexed_seq(200, |i| {
                energy_radial_profile(&competitor(i, phi_b), &m, 0.0, phi_b)
            })
        })
    });
    group.bench_function("par_helper", |b| {
        b.iter(|| {
            exec::map_indexed(200, |i| {
                energy_radial_profile(&competitor(i, phi_b), &m, 0.0, phi_b)
            })
        })
    });
    group.finish();
}

fn bench_delta_sweep(c: &mut Criterion) {
    let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.3)]).unwrap();
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let params = pmclab::minimize::MinimizeParams {
        tol_gap: 1e-4,
        max_iter: 20_000,
        ..Default::default()
    };
    let mut group = c.benchmark_group("gamma_delta_sweep");
    group.sample_size(10);
    for (label, jobs) in [("seq", Some(1)), ("par", None)] {
        group.bench_with_input(BenchmarkId::new(label, deltas.len()), &jobs, |b, jobs| {
            b.iter(|| {
                pmclab::approx::gamma_experiment(&m, 0.0, 1.0, &deltas, 0.01, &params, *jobs)
                    .unwrap()
                    .rows
                    .len()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_nonextremality, bench_competitor_sweep, bench_delta_sweep);
criterion_main!(benches);
