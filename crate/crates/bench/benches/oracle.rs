use criterion::{criterion_group, criterion_main, Criterion};
use fdmimo_core::channel::Resolution;
use fdmimo_core::simkernel::{simulate_downlink_trial, simulate_uplink_trial, verify_corollary1};
use fdmimo_core::{LargeScaleScenario, SystemParams};

fn trials(c: &mut Criterion) {
    let scn = LargeScaleScenario::synthetic(3, 2, 2, 7);
    for n in [16, 64] {
        let p = SystemParams {
            antennas: n,
            res_ul: Resolution::Bits(2),
            res_dl: Resolution::Bits(2),
            ..SystemParams::reference_defaults()
        };
        c.bench_function(&format!("uplink_trial_n{n}"), |b| {
            let mut t = 0;
            b.iter(|| {
                t += 1;
                simulate_uplink_trial(&scn, &p, 1, t).unwrap()
            })
        });
        c.bench_function(&format!("downlink_trial_n{n}"), |b| {
            let mut t = 0;
            b.iter(|| {
                t += 1;
                simulate_downlink_trial(&scn, &p, 1, t).unwrap()
            })
        });
    }
    c.bench_function("moments_n100_1000_draws", |b| {
        b.iter(|| verify_corollary1(100, 1000, 3).unwrap())
    });
}

criterion_group!(benches, trials);
criterion_main!(benches);
