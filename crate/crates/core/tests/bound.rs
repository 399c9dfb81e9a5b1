//! Rate lower bound: tightness, global validity and the slope coefficient.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uav_wsn::channel::{outage_rate, rate_at};
use uav_wsn::sca::{bound_coeffs, eval_rate_lb};
use uav_wsn::scenario::{ChannelParams, Point};

use common::{channel_config, rel_diff};

const H: f64 = 100.0;

fn params() -> ChannelParams {
    ChannelParams::new(channel_config(1e-2)).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(
        rng.random_range(-1500.0..1500.0),
        rng.random_range(-1500.0..1500.0),
    )
}

#[test]
fn tight_at_expansion_point() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (ql, w) = (random_point(&mut rng), random_point(&mut rng));
        let power = rng.random_range(0.01..1.0);
        let c = bound_coeffs(&ql, &w, power, &p, H);
        let exact = outage_rate(&ql, &w, power, &p, H);
        assert!(rel_diff(eval_rate_lb(&ql, &ql, &w, &c), exact) <= 1e-12);
        assert!(rel_diff(c.a, exact) <= 1e-15);
        assert!(rel_diff(c.j, H * H + (ql - w).norm_squared()) <= 1e-15);
    }
}

#[test]
fn global_lower_bound() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let (q, ql, w) = (
            random_point(&mut rng),
            random_point(&mut rng),
            random_point(&mut rng),
        );
        let c = bound_coeffs(&ql, &w, 0.1, &p, H);
        let lb = eval_rate_lb(&q, &ql, &w, &c);
        assert!(lb <= outage_rate(&q, &w, 0.1, &p, H) + 1e-9);
    }
}

#[test]
fn slope_matches_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for alpha in [2.0, 2.5, 3.0] {
        let mut cfg = channel_config(1e-2);
        cfg.alpha = alpha;
        let p = ChannelParams::new(cfg).unwrap();
        for _ in 0..200 {
            let (ql, w) = (random_point(&mut rng), random_point(&mut rng));
            let c = bound_coeffs(&ql, &w, 0.1, &p, H);
            let d2 = (ql - w).norm_squared();
            let h = 1e-4 * (H * H + d2);
            let fd =
                -(rate_at(H * H + d2 + h, 0.1, &p) - rate_at(H * H + d2 - h, 0.1, &p)) / (2.0 * h);
            assert!(
                rel_diff(c.i, fd) <= 1e-6,
                "alpha {alpha}: I = {}, fd = {fd}",
                c.i
            );
        }
    }
}

#[test]
fn overhead_expansion() {
    let p = params();
    let w = Point::new(3.0, -4.0);
    let c = bound_coeffs(&w, &w, 0.1, &p, H);
    assert_eq!(c.j, H * H);
}

proptest! {
    #[test]
    fn farther_is_worse(ql in (-800.0f64..800.0, -800.0f64..800.0), dir in 0.0f64..6.28, r1 in 0.0f64..900.0, dr in 1e-3f64..900.0) {
        let p = params();
        let w = Point::new(0.0, 0.0);
        let ql = Point::new(ql.0, ql.1);
        let c = bound_coeffs(&ql, &w, 0.1, &p, H);
        let u = Point::new(dir.cos(), dir.sin());
        prop_assert!(eval_rate_lb(&(u * (r1 + dr)), &ql, &w, &c) < eval_rate_lb(&(u * r1), &ql, &w, &c));
    }
}
