use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fdmimo_core::channel::{LayoutSpec, NetworkDraw};
use fdmimo_core::linkperf::center_breakdowns;
use fdmimo_core::netgeom::DropConfig;
use fdmimo_core::{CsiMode, LargeScaleScenario, Link, SystemParams};

fn closed_form(c: &mut Criterion) {
    let params = SystemParams::reference_defaults();
    let drop = DropConfig {
        k_ul: 4,
        k_dl: 4,
        d_min: 10.0,
    };
    let spec = LayoutSpec::Hex {
        tiers: 2,
        cell_radius: 500.0,
    };
    let draw = NetworkDraw::sample(&spec, &drop, &params, 1, 0).unwrap();
    let small = LargeScaleScenario::synthetic(3, 4, 4, 1);

    c.bench_function("draw_19_cells", |b| {
        let mut i = 0;
        b.iter(|| {
            i += 1;
            NetworkDraw::sample(&spec, &drop, &params, 1, i).unwrap()
        })
    });
    for (name, scn) in [("19_cells", &draw.scenario), ("3_cells", &small)] {
        c.bench_function(&format!("uplink_breakdowns_{name}"), |b| {
            b.iter(|| center_breakdowns(black_box(scn), &params, Link::Uplink, CsiMode::Hardening).unwrap())
        });
        c.bench_function(&format!("downlink_breakdowns_{name}"), |b| {
            b.iter(|| center_breakdowns(black_box(scn), &params, Link::Downlink, CsiMode::Hardening).unwrap())
        });
    }
}

criterion_group!(benches, closed_form);
criterion_main!(benches);
