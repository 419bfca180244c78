use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::Vector3;

use chipspec_core::analysis::{
    fit_multi_gaussian, levenberg_marquardt, FitModel, LmOptions, MultiGaussian,
};
use chipspec_core::ensemble::{
    choose_dt, integrate_trajectory, sample_thermal_cloud, AtomRecord, SamplerConfig,
    ThermalSampler,
};
use chipspec_core::experiment::{run_decay, Apparatus, AxisKind, CountTimeSeries, DecayProtocol};

fn four_lines() -> (Vec<f64>, Vec<f64>) {
    let model = MultiGaussian { n_peaks: 4 };
    let mut p = vec![];
    for (c, a) in [
        (3.9e6, 340.0),
        (11.6e6, 360.0),
        (22.5e6, 375.0),
        (36.0e6, 410.0),
    ] {
        p.extend([c, 7.4e6, a]);
    }
    p.push(2.0);
    let x: Vec<f64> = (0..290).map(|i| -20e6 + 0.225e6 * i as f64).collect();
    let y = x.iter().map(|&v| model.predict(&p, v)).collect();
    (x, y)
}

fn bench_trajectory(c: &mut Criterion) {
    let app = Apparatus::default();
    let scene = app.scene(440e-6, 1.6);
    let dt = choose_dt(&scene);
    let mut atom = AtomRecord::at_rest(Vector3::new(5e-6, 3e-6, 20e-6), 1.0);
    atom.velocity = Vector3::new(0.01, -0.02, 0.005);
    c.bench_function("verlet 1000 steps in dimple", |b| {
        b.iter(|| integrate_trajectory(black_box(&atom), &scene, dt, 1000).unwrap())
    });
}

fn bench_sampler(c: &mut Criterion) {
    let app = Apparatus::default();
    let scene = app.scene(0.0, 1.6);
    let config = SamplerConfig {
        burn_in_sweeps: 200,
        force_chain: true,
        ..Default::default()
    };
    let sampler = ThermalSampler::new(config);
    c.bench_function("metropolis 500 atoms in dimple", |b| {
        b.iter(|| sampler.sample(500, 1e5, 20e-6, &scene, 3).unwrap())
    });
    c.bench_function("exact harmonic 1e5 atoms", |b| {
        b.iter(|| sample_thermal_cloud(100_000, 1e6, 18e-6, &app.trap, 3).unwrap())
    });
}

fn bench_fits(c: &mut Criterion) {
    let (x, y) = four_lines();
    let w = vec![1.0; x.len()];
    let model = MultiGaussian { n_peaks: 4 };
    let mut init = vec![];
    for (cen, a) in [
        (4.2e6, 300.0),
        (11.2e6, 300.0),
        (22.9e6, 300.0),
        (35.6e6, 300.0),
    ] {
        init.extend([cen, 6.5e6, a]);
    }
    init.push(0.0);
    c.bench_function("lm multi-gauss 13 params", |b| {
        b.iter(|| {
            levenberg_marquardt(&model, &x, &y, &w, black_box(&init), &LmOptions::default())
                .unwrap()
        })
    });
    let counts = y.iter().map(|v| v.round() as u64).collect();
    let series = CountTimeSeries::new(x.clone(), counts, AxisKind::DiodeDetuning).unwrap();
    c.bench_function("seeded multi-gauss fit", |b| {
        b.iter(|| fit_multi_gaussian(black_box(&series), 4).unwrap())
    });
}

fn bench_decay(c: &mut Criterion) {
    let app = Apparatus::default();
    let protocol = DecayProtocol {
        observe_duration: 0.1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("decay");
    group.sample_size(10);
    group.bench_function("200 atoms for 100 ms", |b| {
        b.iter_batched(
            || sample_thermal_cloud(200, 7e5, 6e-6, &app.trap, 1).unwrap(),
            |cloud| run_decay(&cloud, &protocol, &app, 1).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_trajectory,
    bench_sampler,
    bench_fits,
    bench_decay
);
criterion_main!(benches);
