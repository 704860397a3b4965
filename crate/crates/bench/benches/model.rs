use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shine_bench::default_data;
use shine_core::model::{objective, ParamVars, Phase};
use shine_core::{Dataset, GraphContext, ModelParams, Split, Tape, TrainConfig};

fn setup(d: usize) -> (Dataset, GraphContext<f32>, ModelParams<f32>) {
    let data = default_data();
    let h = data.catalog.hypergraph().unwrap();
    let cfg = TrainConfig {
        hidden_dim: d,
        ..Default::default()
    };
    let arch = cfg.architecture(h.num_nodes(), data.dataset.num_classes());
    let params = ModelParams::init(arch, &mut ChaCha8Rng::seed_from_u64(0));
    (data.dataset, GraphContext::new(h), params)
}

fn theta(c: &mut Criterion) {
    let h = default_data().catalog.hypergraph().unwrap();
    c.bench_function("theta", |b| b.iter(|| black_box(&h).theta()));
    c.bench_function("graph_context", |b| {
        b.iter(|| GraphContext::<f32>::new(black_box(&h).clone()))
    });
}

fn passes(c: &mut Criterion) {
    for d in [32, 128] {
        let (dataset, ctx, params) = setup(d);
        let train = dataset.indices(Split::Train);
        let batch = dataset.batch::<f32>(&train).unwrap();
        c.bench_function(&format!("predict_d{d}"), |b| {
            b.iter(|| params.predict(&ctx, black_box(&batch)).unwrap())
        });
        c.bench_function(&format!("objective_backward_d{d}"), |b| {
            b.iter(|| {
                let mut tape = Tape::new();
                let vars = ParamVars::register(&mut tape, &params, true);
                let o = objective(
                    &mut tape,
                    &ctx,
                    &vars,
                    &params.arch,
                    &batch,
                    1.0,
                    &mut Phase::Eval,
                )
                .unwrap();
                tape.backward(o.loss.total).unwrap()
            })
        });
    }
}

criterion_group!(benches, theta, passes);
criterion_main!(benches);
