use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use drsynth_bench::{catalog, scenes};
use drsynth_core::augmentor::{augment, Sample};
use drsynth_core::pipeline::render_index;
use drsynth_core::{rasterize, Config, RngStream};

fn bench_render(c: &mut Criterion) {
    let catalog = catalog();
    let mut group = c.benchmark_group("rasterize");
    for (w, h) in [(300, 100), (1200, 400)] {
        let (params, specs) = scenes(&catalog, w, h, 16);
        group.throughput(Throughput::Elements(1));
        let mut k = 0;
        group.bench_function(format!("{w}x{h}"), |b| {
            b.iter(|| {
                k = (k + 1) % specs.len();
                rasterize(&specs[k], &catalog, &params).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_image(c: &mut Criterion) {
    let catalog = catalog();
    let config = Config::default();
    let mut i = 0;
    c.bench_function("render_index/1200x400", |b| {
        b.iter(|| {
            i += 1;
            render_index(&config.randomization, None, &catalog, 7, i).unwrap()
        })
    });
    let sample: Sample = render_index(&config.randomization, None, &catalog, 7, 0).unwrap().sample;
    let mut s = 0;
    c.bench_function("augment/1200x400", |b| {
        b.iter_batched(
            || {
                s += 1;
                RngStream::from_seed(s)
            },
            |mut rng| augment(&sample, &config.augmentation, &mut rng),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_render, bench_image);
criterion_main!(benches);
