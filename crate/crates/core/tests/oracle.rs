use fdmimo_core::channel::Resolution;
use fdmimo_core::linkperf::{center_breakdowns, CsiMode, Link};
use fdmimo_core::rng::{stream, Domain};
use fdmimo_core::simkernel::run_oracle;
use fdmimo_core::{LargeScaleScenario, SystemParams};
use rand::Rng;

fn params(n: usize) -> SystemParams {
    SystemParams {
        antennas: n,
        noise_w: 0.5,
        p_si_w: 0.2,
        mu_si2: 0.8,
        res_ul: Resolution::Bits(2),
        res_dl: Resolution::Bits(1),
        ..SystemParams::reference_defaults()
    }
}

fn every_term_within_two_percent(link: Link) {
    let scn = LargeScaleScenario::synthetic(3, 3, 3, 41);
    let p = params(16);
    let closed = center_breakdowns(&scn, &p, link, CsiMode::Hardening).unwrap();
    let rep = run_oracle(&scn, &p, link, 100_000, 8).unwrap();
    for row in rep.compare(&closed) {
        let rel = (row.empirical.mean - row.closed_form).abs() / row.closed_form;
        assert!(
            rel < 0.02,
            "user {} {}: {} vs {}",
            row.user,
            row.term,
            row.empirical.mean,
            row.closed_form
        );
    }
}

#[test]
fn uplink_terms_match_closed_form() {
    every_term_within_two_percent(Link::Uplink);
}

#[test]
fn downlink_terms_match_closed_form() {
    every_term_within_two_percent(Link::Downlink);
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        0.5 * (xs[m - 1] + xs[m])
    } else {
        xs[m]
    }
}

#[test]
fn downlink_median_over_scenarios() {
    let p = params(16);
    let scenarios = 200;
    let mut closed = Vec::new();
    let mut empirical = Vec::new();
    for s in 0..scenarios {
        let scn = LargeScaleScenario::synthetic(3, 2, 2, 1000 + s);
        let cf = &center_breakdowns(&scn, &p, Link::Downlink, CsiMode::Hardening).unwrap()[0];
        let rep = run_oracle(&scn, &p, Link::Downlink, 4000, s).unwrap();
        closed.push(cf.sqinr);
        empirical.push(rep.users[0].empirical_sqinr());
    }
    let target = median(&mut closed.clone());

    let mut rng = stream(99, Domain::Generic, 0);
    let mut boots: Vec<f64> = (0..2000)
        .map(|_| {
            let mut b: Vec<f64> = (0..empirical.len())
                .map(|_| empirical[rng.random_range(0..empirical.len())])
                .collect();
            median(&mut b)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let (lo, hi) = (boots[10], boots[1989]);
    assert!(lo <= target && target <= hi, "{target} not in [{lo}, {hi}]");
}
