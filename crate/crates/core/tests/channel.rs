use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satsec::channel::{
    fourth_moment, log_moment_closed_form, log_moment_derivative, log_moment_numerical,
    mgf_envelope_sq, moment, pdf_envelope, sample, LogMomentArgument, SrfParams, SrfSampler,
};
use satsec::specfun::{hyp2f1, SeriesControl, EULER_GAMMA};
use satsec_testkit as tk;

fn sets() -> [(&'static str, SrfParams); 4] {
    [
        ("reference", SrfParams::reference()),
        ("light", SrfParams::light_shadowing()),
        ("average", SrfParams::average_shadowing()),
        ("heavy", SrfParams::heavy_shadowing()),
    ]
}

// Upper integration limit past the mode where x·pdf(x) has dropped below 1e-18.
fn upper_limit(p: &SrfParams) -> f64 {
    let mut x = (2.0 * p.b + p.omega).sqrt();
    while x * pdf_envelope(p, x).unwrap() > 1e-18 || x < 2.0 * (2.0 * p.b + p.omega).sqrt() {
        x *= 1.2;
    }
    x
}

fn expect_pdf<F: Fn(f64) -> f64>(p: &SrfParams, f: F) -> f64 {
    let top = upper_limit(p);
    tk::integrate_split(|x| f(x) * pdf_envelope(p, x).unwrap(), 0.0, top, 64, 1e-14)
}

#[test]
fn pdf_normalizes() {
    for (name, p) in sets() {
        let total = expect_pdf(&p, |_| 1.0);
        assert!((total - 1.0).abs() < 1e-8, "{name}: {total}");
    }
}

#[test]
fn pdf_rayleigh_limit() {
    let p = SrfParams::new(0.2, 3.0, 0.0).unwrap();
    for x in [0.05, 0.3, 0.7, 1.5] {
        let rayleigh = x / 0.2 * (-x * x / 0.4f64).exp();
        assert!((pdf_envelope(&p, x).unwrap() - rayleigh).abs() < 1e-14 * rayleigh.max(1.0));
    }
    assert_eq!(pdf_envelope(&p, 0.0).unwrap(), 0.0);
    assert!(pdf_envelope(&p, -1e-3).is_err());
}

#[test]
fn moments_match_quadrature() {
    for (name, p) in sets() {
        for order in [1.0, 2.0, 3.0, 4.0] {
            let oracle = expect_pdf(&p, |x| x.powf(order));
            let closed = moment(&p, order).unwrap();
            assert!(((closed - oracle) / oracle).abs() < 1e-6, "{name} ω = {order}: {closed} vs {oracle}");
        }
    }
}

#[test]
fn moment_identities() {
    for (_, p) in sets() {
        assert!((moment(&p, 0.0).unwrap() - 1.0).abs() < 1e-14);
    }
    let rayleigh = SrfParams::new(0.3, 4.0, 0.0).unwrap();
    assert!((moment(&rayleigh, 2.0).unwrap() - 0.6).abs() < 1e-15);
    assert!((fourth_moment(&rayleigh).unwrap() - 8.0 * 0.09).abs() < 1e-15);
    assert!(moment(&rayleigh, -1.0).is_err());
}

#[test]
fn fourth_moment_equals_general_moment() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = SrfParams::new(
            rng.random_range(0.001..0.5),
            rng.random_range(0.3..40.0),
            rng.random_range(0.0..3.0),
        )
        .unwrap();
        let a = fourth_moment(&p).unwrap();
        let b = moment(&p, 4.0).unwrap();
        assert!(((a - b) / b).abs() < 1e-10, "{p:?}: {a} vs {b}");
    }
}

#[test]
fn second_moment_needs_the_m_in_its_argument() {
    // Writing φ(2) with 2F1(2, m; 1; Ω/(2b + Ω)) drops the m from the
    // argument Ω/(2bm + Ω). Quadrature decides between the two.
    let ctrl = SeriesControl::default();
    for (name, p) in [("reference", SrfParams::reference()), ("light", SrfParams::light_shadowing())] {
        let oracle = expect_pdf(&p, |x| x * x);
        let shadow = (2.0 * p.b * p.m / (2.0 * p.b * p.m + p.omega)).powf(p.m);
        let variant = 2.0 * p.b * shadow * hyp2f1(2.0, p.m, 1.0, p.omega / (2.0 * p.b + p.omega), &ctrl).unwrap();
        assert!(((moment(&p, 2.0).unwrap() - oracle) / oracle).abs() < 1e-8, "{name}");
        assert!(((variant - oracle) / oracle).abs() > 0.1, "{name}: variant {variant} vs {oracle}");
    }
}

#[test]
fn mgf_matches_quadrature() {
    for (name, p) in sets() {
        assert!((mgf_envelope_sq(&p, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for eta in [0.1, 1.0, 10.0] {
            let oracle = expect_pdf(&p, |x| (-eta * x * x).exp());
            let v = mgf_envelope_sq(&p, eta).unwrap();
            assert!((v - oracle).abs() < 1e-8, "{name} η = {eta}: {v} vs {oracle}");
        }
        assert!(mgf_envelope_sq(&p, 1e6).unwrap() < 1e-4);
    }
}

#[test]
fn log_moment_rayleigh_cases() {
    let unit = SrfParams::new(0.5, 1.0, 0.0).unwrap();
    assert!((log_moment_derivative(&unit).unwrap() + EULER_GAMMA).abs() < 1e-14);
    let p = SrfParams::new(0.07, 3.0, 0.0).unwrap();
    let expect = (0.14f64).ln() - EULER_GAMMA;
    assert!((log_moment_derivative(&p).unwrap() - expect).abs() < 1e-14);
    assert!((log_moment_numerical(&p).unwrap() - expect).abs() < 1e-8);
}

#[test]
fn log_moment_matches_quadrature() {
    for (name, p) in sets() {
        let oracle = expect_pdf(&p, |x| if x > 0.0 { (x * x).ln() } else { 0.0 });
        let closed = log_moment_derivative(&p).unwrap();
        let numeric = log_moment_numerical(&p).unwrap();
        assert!((closed - oracle).abs() < 1e-7, "{name}: closed {closed} vs {oracle}");
        assert!((numeric - oracle).abs() < 1e-6, "{name}: numeric {numeric} vs {oracle}");
    }
}

#[test]
fn extra_scatter_reading_rejected() {
    // For the reference set the alternative argument Ω/(2b(2bm + Ω)) exceeds one.
    let r = log_moment_closed_form(&SrfParams::reference(), LogMomentArgument::ExtraScatterFactor);
    assert!(r.is_err());
    let light = SrfParams::light_shadowing();
    let alt = log_moment_closed_form(&light, LogMomentArgument::ExtraScatterFactor).unwrap();
    let numeric = log_moment_numerical(&light).unwrap();
    assert!((alt - numeric).abs() > 1e-2, "{alt} vs {numeric}");
}

#[test]
fn sampler_matches_closed_forms() {
    let p = SrfParams::reference();
    let sampler = SrfSampler::new(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let (mut s2, mut s4, mut sl, mut se) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let g = sampler.draw(&mut rng).envelope_sq;
        s2.push(g);
        s4.push(g * g);
        sl.push(g.ln());
        se.push((-g).exp());
    }
    let checks = [
        ("|h|²", tk::mean_stderr(&s2), moment(&p, 2.0).unwrap()),
        ("|h|⁴", tk::mean_stderr(&s4), fourth_moment(&p).unwrap()),
        ("ln|h|²", tk::mean_stderr(&sl), log_moment_derivative(&p).unwrap()),
        ("e^-|h|²", tk::mean_stderr(&se), mgf_envelope_sq(&p, 1.0).unwrap()),
    ];
    for (name, (mean, se), closed) in checks {
        assert!((mean - closed).abs() < 4.0 * se, "{name}: {mean} ± {se} vs {closed}");
    }
}

#[test]
fn sampler_rayleigh_power() {
    let p = SrfParams::new(0.25, 2.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g: Vec<f64> = sample(&p, &mut rng, 1_000_000).unwrap().iter().map(|s| s.envelope_sq).collect();
    let (mean, se) = tk::mean_stderr(&g);
    assert!((mean - 0.5).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn envelope_law_ignores_los_phase() {
    let base = SrfParams::light_shadowing();
    let turned = base.with_los_phase(PI / 3.0).unwrap();
    let draw = |p: &SrfParams, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = sample(p, &mut rng, 400_000).unwrap().iter().map(|s| s.envelope_sq).collect();
        tk::mean_stderr(&g)
    };
    let (m0, e0) = draw(&base, 1);
    let (m1, e1) = draw(&turned, 2);
    assert!((m0 - m1).abs() < 4.0 * e0.hypot(e1), "{m0} vs {m1}");
}

#[test]
fn sampler_deterministic_and_consistent() {
    let p = SrfParams::reference();
    let a = sample(&p, &mut ChaCha8Rng::seed_from_u64(42), 3).unwrap();
    let b = sample(&p, &mut ChaCha8Rng::seed_from_u64(42), 3).unwrap();
    assert_eq!(a, b);
    for s in sample(&p, &mut ChaCha8Rng::seed_from_u64(5), 1000).unwrap() {
        let direct = s.real_part * s.real_part + s.imag_part * s.imag_part;
        assert!((s.envelope_sq - direct).abs() <= 4.0 * f64::EPSILON * direct);
    }
}

#[test]
fn histogram_density_near_mode() {
    let p = SrfParams::reference();
    let grid: Vec<f64> = (1..400).map(|i| i as f64 * 0.005).collect();
    let mode = grid
        .iter()
        .copied()
        .max_by(|a, b| pdf_envelope(&p, *a).unwrap().total_cmp(&pdf_envelope(&p, *b).unwrap()))
        .unwrap();
    let width = 0.01;
    let n = 2_000_000;
    let sampler = SrfSampler::new(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let hits = (0..n)
        .filter(|_| (sampler.draw(&mut rng).envelope_sq.sqrt() - mode).abs() < 0.5 * width)
        .count();
    let empirical = hits as f64 / (n as f64 * width);
    let bin_avg = tk::integrate(|x| pdf_envelope(&p, x).unwrap(), mode - 0.5 * width, mode + 0.5 * width, 1e-14) / width;
    assert!(((empirical - bin_avg) / bin_avg).abs() < 0.02, "{empirical} vs {bin_avg}");
}
