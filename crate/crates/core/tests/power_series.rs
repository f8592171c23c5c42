use nps::Family;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn families() -> [Family; 7] {
    [
        Family::Geometric,
        Family::Poisson,
        Family::Logarithmic,
        Family::Binomial { m: 1 },
        Family::Binomial { m: 5 },
        Family::NegativeBinomial { k: 1 },
        Family::NegativeBinomial { k: 3 },
    ]
}

fn proper_grid(f: Family) -> Vec<f64> {
    let d = f.proper_domain();
    if d.upper.is_finite() {
        (1..=20).map(|i| d.upper * i as f64 / 21.0).collect()
    } else {
        (1..=20).map(|i| 0.05 * 1.3f64.powi(i)).collect()
    }
}

fn extended_grid(f: Family) -> Vec<f64> {
    let mut g = proper_grid(f);
    match f {
        Family::Geometric | Family::Logarithmic => g.extend([-0.2, -1.0, -5.0, -20.0]),
        Family::Poisson => g.extend([-0.2, -1.0, -5.0]),
        Family::Binomial { .. } => g.extend([-0.2, -0.5, -0.9]),
        Family::NegativeBinomial { .. } => {}
    }
    g
}

#[test]
fn pmf_sums_to_one_on_proper_grid() {
    for f in families() {
        for t in proper_grid(f) {
            let (s, _) = f.sum_series(t, 0, 1.0, 1e-13, |_, p| p).unwrap();
            assert!(s <= 1.0 + 1e-12 && s >= 1.0 - 1e-10, "{f} theta={t}: {s}");
        }
    }
}

#[test]
fn negative_binomial_direct_summation() {
    let f = Family::NegativeBinomial { k: 2 };
    let s: f64 = (2..=200).map(|n| f.pmf(0.5, n).unwrap()).sum();
    assert!((s - 1.0).abs() < 1e-12);
    assert_eq!(f.pmf(0.5, 1).unwrap(), 0.0);
}

#[test]
fn derivatives_match_finite_differences() {
    for f in families() {
        for t in extended_grid(f) {
            let h = 1e-6 * t.abs().max(1.0);
            if !f.extended_domain().contains(t - 2.0 * h) || !f.extended_domain().contains(t + 2.0 * h) {
                continue;
            }
            let fd = |g: &dyn Fn(f64) -> f64| (g(t + h) - g(t - h)) / (2.0 * h);
            let checks = [
                (f.dc(t).unwrap(), fd(&|x| f.c(x).unwrap())),
                (f.d2c(t).unwrap(), fd(&|x| f.dc(x).unwrap())),
                (f.d3c(t).unwrap(), fd(&|x| f.d2c(x).unwrap())),
            ];
            for (k, (a, n)) in checks.into_iter().enumerate() {
                let rel = (a - n).abs() / a.abs().max(1e-8);
                assert!(rel < 1e-6, "{f} theta={t} order {}: {a} vs {n}", k + 1);
            }
        }
    }
}

#[test]
fn c_inverse_roundtrip_on_extended_grid() {
    for f in families() {
        for t in extended_grid(f) {
            let back = f.c_inv(f.c(t).unwrap()).unwrap();
            assert!((back - t).abs() <= 1e-12 * t.abs().max(1.0), "{f} theta={t}: {back}");
        }
    }
}

#[test]
fn poisson_sampler_goodness_of_fit() {
    let f = Family::Poisson;
    let theta = 3.0;
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let top = 9;
    let mut counts = vec![0u64; top + 1];
    for _ in 0..draws {
        let n = f.sample_n(theta, &mut rng).unwrap() as usize;
        counts[n.min(top)] += 1;
    }
    let mut expected: Vec<f64> = (1..top as u64).map(|n| f.pmf(theta, n).unwrap()).collect();
    expected.push(1.0 - expected.iter().sum::<f64>());
    let chi2: f64 = counts[1..]
        .iter()
        .zip(&expected)
        .map(|(&o, &p)| {
            let e = p * draws as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = (expected.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2} on {df} df, p = {p}");
}

#[test]
fn sampler_means_match_analytic_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (f, t) in [
        (Family::Logarithmic, 0.7),
        (Family::Binomial { m: 4 }, 1.5),
        (Family::NegativeBinomial { k: 2 }, 0.4),
    ] {
        let draws: Vec<f64> = (0..50_000).map(|_| f.sample_n(t, &mut rng).unwrap() as f64).collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let se = (v / draws.len() as f64).sqrt();
        assert!((m - f.mean_n(t)).abs() < 4.0 * se, "{f}: {m} vs {}", f.mean_n(t));
    }
}
