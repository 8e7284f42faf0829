use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use covbohm::algebra::{su2_rotation, twisted_law_residual, PeriodicitySection, SemidirectElement, UnitaryRep};
use covbohm::bohm::{integrate_trajectory, VelocityField};
use covbohm::evolution::{
    assemble_hamiltonian, evolve_step, CoveringWave, PotentialField, SolverOptions,
};
use covbohm::geometry::{CoverPoint, Geometry};
use covbohm::TopologicalFactor;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn annulus_wave() -> CoveringWave {
    let g = Geometry::annulus(1.0, 2.0, 48, 64);
    CoveringWave::annular_packet(g, TopologicalFactor::phase(1.7), 0.0, 0.8, 2.0).unwrap()
}

fn bench_matvec(c: &mut Criterion) {
    let psi = annulus_wave();
    let h = assemble_hamiltonian(&psi.geometry, &PotentialField::Zero, &psi.factor).unwrap();
    let x = h.extract(&psi.values);
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    c.bench_function("hamiltonian_matvec_48x64", |b| {
        b.iter(|| h.apply(black_box(&x), &mut y))
    });
}

fn bench_cn_step(c: &mut Criterion) {
    let psi = annulus_wave();
    let h = assemble_hamiltonian(&psi.geometry, &PotentialField::Zero, &psi.factor).unwrap();
    let opts = SolverOptions::default();
    c.bench_function("crank_nicolson_step_48x64", |b| {
        b.iter(|| evolve_step(black_box(&psi), &h, 1e-3, opts).unwrap())
    });
}

fn bench_velocity_field(c: &mut Criterion) {
    let psi = annulus_wave();
    c.bench_function("velocity_frame_48x64", |b| {
        b.iter(|| VelocityField::from_wave(black_box(&psi)).unwrap())
    });
}

fn bench_trajectory(c: &mut Criterion) {
    let psi = annulus_wave();
    let field = VelocityField::from_wave(&psi).unwrap();
    let geometry = psi.geometry;
    c.bench_function("trajectory_rk4_1000_steps", |b| {
        b.iter(|| {
            integrate_trajectory(
                &field,
                &geometry,
                CoverPoint::new(1.5, 0.0, 0),
                0.0,
                1.0,
                1e-3,
            )
            .unwrap()
        })
    });
}

fn bench_twisted_law(c: &mut Criterion) {
    let single = UnitaryRep::new(vec![su2_rotation(0.7, [0.0, 1.0, 0.0]).unwrap()]).unwrap();
    let section = PeriodicitySection::Fermion { n: 3, single };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<_> = (0..64)
        .map(|_| {
            (
                SemidirectElement::random(&mut rng, 3, 3),
                SemidirectElement::random(&mut rng, 3, 3),
            )
        })
        .collect();
    c.bench_function("twisted_law_64_pairs_n3", |b| {
        b.iter(|| twisted_law_residual(black_box(&section), &pairs).unwrap())
    });
}

fn bench_spectrum(c: &mut Criterion) {
    let g = Geometry::ring(1.0, 512);
    let h = assemble_hamiltonian(&g, &PotentialField::Zero, &TopologicalFactor::phase(PI / 3.0))
        .unwrap();
    c.bench_function("ring_spectrum_512", |b| {
        b.iter(|| covbohm::evolution::spectrum(black_box(&h), 6).unwrap())
    });
}

criterion_group!(
    benches,
    bench_matvec,
    bench_cn_step,
    bench_velocity_field,
    bench_trajectory,
    bench_twisted_law,
    bench_spectrum
);
criterion_main!(benches);
