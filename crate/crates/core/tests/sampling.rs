use fdmimo_core::channel::{sample_iui_channel, sample_shadowing, sample_si_channel, sample_small_scale};
use fdmimo_core::rng::{stream, Domain};
use fdmimo_core::simkernel::verify_corollary1;

fn mean_sd(xs: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt(), (var / n).sqrt())
}

#[test]
fn shadowing_moments() {
    let mut rng = stream(1, Domain::Generic, 0);
    let chi: Vec<f64> = (0..1_000_000).map(|_| sample_shadowing(5.0, &mut rng)).collect();
    let (m, _, se) = mean_sd(chi.iter().map(|c| c.ln()));
    assert!(m.abs() < 3.0 * se, "{m}");
    let (_, sd_db, _) = mean_sd(chi.iter().map(|c| 10.0 * c.log10()));
    assert!((sd_db - 5.0).abs() < 0.1, "{sd_db}");

    // E[chi^delta] = exp((delta * s)^2 / 2) with s the log-domain std
    let delta = 2.0 / 3.5;
    let s = 5.0 * std::f64::consts::LN_10 / 10.0;
    let (m, _, se) = mean_sd(chi.iter().map(|c| c.powf(delta)));
    let exact = ((delta * s).powi(2) / 2.0).exp();
    assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact}");
    let (half, _, _) = mean_sd(chi[..500_000].iter().map(|c| c.powf(delta)));
    assert!((half - m).abs() / m < 0.01);
}

#[test]
fn small_scale_moments() {
    let n = 100;
    let mut rng = stream(2, Domain::Generic, 0);
    let mut n2 = 0.0;
    let mut n4 = 0.0;
    let mut re2 = 0.0;
    let mut im2 = 0.0;
    let draws = 100_000;
    for _ in 0..draws {
        let h = sample_small_scale(n, &mut rng);
        let e: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        n2 += e;
        n4 += e * e;
        re2 += h[0].re * h[0].re;
        im2 += h[0].im * h[0].im;
    }
    let d = draws as f64;
    assert!((n2 / d - 100.0).abs() / 100.0 < 0.01);
    assert!((n4 / d - 10_100.0).abs() / 10_100.0 < 0.02);
    assert!((re2 / d - 0.5).abs() < 0.01);
    assert!((im2 / d - 0.5).abs() < 0.01);
}

#[test]
fn si_and_iui_power() {
    let mut rng = stream(3, Domain::Generic, 0);
    let h = sample_si_channel(1000, 10.0, &mut rng);
    let m = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / h.len() as f64;
    assert!((m - 10.0).abs() / 10.0 < 0.01, "{m}");
    let g = (0..1_000_000)
        .map(|_| sample_iui_channel(2.5, &mut rng).norm_sqr())
        .sum::<f64>()
        / 1e6;
    assert!((g - 2.5).abs() / 2.5 < 0.01, "{g}");
}

#[test]
fn matched_filter_moments() {
    let n = 100.0;
    let r = verify_corollary1(100, 100_000, 11).unwrap();
    for (e, want) in r
        .combiner
        .iter()
        .chain(&r.precoder)
        .zip([n, n * n + n, n, n, n * n + n, n])
    {
        assert!(e.z(want).abs() < 3.0, "{} vs {want} (se {})", e.mean, e.std_err);
    }
}
