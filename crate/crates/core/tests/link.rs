use std::f64::consts::PI;

use satsec::channel::{moment, SrfParams};
use satsec::link::{
    arc_distance, arc_offset_angle, calibrate_to_mean_snr, db_to_linear, free_space_loss,
    itu_pattern_gain_dbi, linear_to_db, mean_snr, AntennaPattern, LinkBudget,
};

fn budget() -> LinkBudget {
    LinkBudget {
        p_a: 2.0,
        rx_gain: 3.0,
        wavelength_m: 0.15,
        distance_m: 2.0e6,
        fspl_squared: false,
    }
}

#[test]
fn pattern_non_increasing_on_each_piece() {
    let p = AntennaPattern::default();
    let gain = |phi: f64| itu_pattern_gain_dbi(&p, phi).unwrap();
    let mut last = f64::INFINITY;
    for i in 0..4700 {
        let phi = 1.0 + 0.01 * i as f64;
        assert!(gain(phi) < last, "phi = {phi}");
        last = gain(phi);
    }
    for i in 0..=13_200 {
        assert_eq!(gain(48.0 + 0.01 * i as f64), -10.0);
    }
    // The sidelobe law ends 0.03 dB below the floor, so the floor is a small step up.
    let seam = gain(48.0) - gain(48.0 - 1e-9);
    assert!(seam > 0.0 && seam < 0.04, "seam = {seam}");
}

#[test]
fn pattern_examples() {
    let p = AntennaPattern::default();
    assert!((itu_pattern_gain_dbi(&p, 10.0).unwrap() - 7.0).abs() < 1e-12);
    assert_eq!(itu_pattern_gain_dbi(&p, 100.0).unwrap(), -10.0);
    assert_eq!(itu_pattern_gain_dbi(&p, 1.0).unwrap(), 32.0);
    let left = 32.0 - 25.0 * 48f64.log10();
    assert!(left > -10.1 && left < -10.0);
    assert!((left + 10.0).abs() < 0.04);
}

#[test]
fn free_space_examples() {
    assert!((free_space_loss(4.0 * PI, 1.0).unwrap() - 1.0).abs() < 1e-15);
    let direct = 0.15 / (4.0 * PI * 2.0e6);
    assert!((free_space_loss(0.15, 2.0e6).unwrap() - direct).abs() < 1e-24);
    assert!((free_space_loss(0.15, 2.0e6).unwrap() - 5.968e-9).abs() < 1e-12);
}

#[test]
fn arc_examples() {
    assert!((arc_offset_angle(45.0e3, 2.0e6) - 1.2892).abs() < 1e-4);
    assert!((arc_offset_angle(PI * 2.0e6, 2.0e6) - 180.0).abs() < 1e-12);
    for phi in [0.0, 0.3, 7.0, 48.0, 179.0] {
        assert!((arc_offset_angle(arc_distance(phi, 2.0e6), 2.0e6) - phi).abs() < 1e-12);
    }
}

#[test]
fn mean_snr_linear_in_each_factor() {
    let srf = SrfParams::reference();
    let base = mean_snr(&budget(), 5.0, &srf).unwrap();
    let scaled = |b: LinkBudget, g: f64| mean_snr(&b, g, &srf).unwrap() / base;
    assert!((scaled(budget(), 10.0) - 2.0).abs() < 1e-14);
    assert!((scaled(LinkBudget { p_a: 6.0, ..budget() }, 5.0) - 3.0).abs() < 1e-14);
    assert!((scaled(LinkBudget { rx_gain: 1.5, ..budget() }, 5.0) - 0.5).abs() < 1e-14);
    assert!((scaled(LinkBudget { distance_m: 4.0e6, ..budget() }, 5.0) - 0.5).abs() < 1e-14);
    let expect = 2.0 * 5.0 * 3.0 * free_space_loss(0.15, 2.0e6).unwrap() * moment(&srf, 2.0).unwrap();
    assert!(((base - expect) / expect).abs() < 1e-14);
}

#[test]
fn calibration_round_trips() {
    for srf in [SrfParams::reference(), SrfParams::light_shadowing(), SrfParams::heavy_shadowing()] {
        for target_db in [-10.0, -3.0, 0.0, 5.0, 14.0] {
            let s = calibrate_to_mean_snr(target_db, &srf).unwrap();
            let unit = LinkBudget {
                p_a: s,
                rx_gain: 1.0,
                wavelength_m: 4.0 * PI,
                distance_m: 1.0,
                fspl_squared: false,
            };
            let snr = mean_snr(&unit, 1.0, &srf).unwrap();
            assert!(((snr - db_to_linear(target_db)) / snr).abs() < 1e-12);
            assert!((linear_to_db(snr) - target_db).abs() < 1e-11);
        }
    }
    let phi2 = moment(&SrfParams::reference(), 2.0).unwrap();
    let s5 = calibrate_to_mean_snr(5.0, &SrfParams::reference()).unwrap();
    assert!((s5 * phi2 - 3.162_277_660_168_379).abs() < 1e-12);
}

#[test]
fn squared_loss_switch() {
    let b = LinkBudget { fspl_squared: true, ..budget() };
    let l = free_space_loss(0.15, 2.0e6).unwrap();
    assert!((b.path_loss().unwrap() - l * l).abs() < 1e-30);
}
