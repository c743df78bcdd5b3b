use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shape_core::geometry::{
    intersect_halfplanes, intersect_halfplanes_traced, ConvexPolygon, HalfPlane, Point2, EPS_AREA,
    EPS_GEOM,
};

/// Half-plane through `p` with inward normal at angle `phi`.
fn halfplane_through(p: Point2, phi: f64) -> HalfPlane {
    let (a, b) = (phi.cos(), phi.sin());
    HalfPlane::new(a, b, -(a * p.x + b * p.z)).unwrap()
}

/// `k` random half-planes that all keep `inside`.
fn random_halfplanes(rng: &mut ChaCha8Rng, k: usize, inside: Point2, spread: f64) -> Vec<HalfPlane> {
    (0..k)
        .map(|_| {
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let offset = rng.random_range(0.05..spread);
            // boundary passes `offset` behind `inside` along the normal
            let p = inside - Point2::new(phi.cos(), phi.sin()) * offset;
            halfplane_through(p, phi)
        })
        .collect()
}

fn random_polygon(rng: &mut ChaCha8Rng) -> ConvexPolygon {
    let bounds = ConvexPolygon::centered_square(10.0).unwrap();
    loop {
        let inside = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let k = rng.random_range(3..12);
        let poly = intersect_halfplanes(&random_halfplanes(rng, k, inside, 6.0), &bounds);
        if poly.area() > 0.1 {
            return poly;
        }
    }
}

fn bbox(poly: &ConvexPolygon) -> (Point2, Point2) {
    let v = poly.vertices();
    let min = v.iter().fold(v[0], |m, p| Point2::new(m.x.min(p.x), m.z.min(p.z)));
    let max = v.iter().fold(v[0], |m, p| Point2::new(m.x.max(p.x), m.z.max(p.z)));
    (min, max)
}

/// Independent centroid estimate by rejection sampling, using the
/// half-plane test on each polygon edge directly.
fn monte_carlo_centroid(poly: &ConvexPolygon, samples: usize, rng: &mut ChaCha8Rng) -> Point2 {
    let (min, max) = bbox(poly);
    let edges: Vec<(Point2, Point2)> = poly.edges().collect();
    let (mut sx, mut sz, mut n) = (0.0, 0.0, 0usize);
    for _ in 0..samples {
        let p = Point2::new(rng.random_range(min.x..max.x), rng.random_range(min.z..max.z));
        if edges.iter().all(|&(a, b)| (b - a).cross(p - a) >= 0.0) {
            sx += p.x;
            sz += p.z;
            n += 1;
        }
    }
    Point2::new(sx / n as f64, sz / n as f64)
}

#[test]
fn centroid_matches_rejection_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let poly = random_polygon(&mut rng);
        let (min, max) = bbox(&poly);
        let scale = max.distance(min);
        let mc = monte_carlo_centroid(&poly, 1_000_000, &mut rng);
        let c = poly.centroid().unwrap();
        assert!(c.distance(mc) <= 1e-3 * scale, "{c:?} vs {mc:?}");
    }
}

#[test]
fn contains_agrees_with_building_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bounds = ConvexPolygon::centered_square(10.0).unwrap();
    for _ in 0..20 {
        let hps = random_halfplanes(&mut rng, 8, Point2::new(0.5, -0.5), 5.0);
        let poly = intersect_halfplanes(&hps, &bounds);
        for _ in 0..2000 {
            let p = Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let by_constraints = hps.iter().all(|h| h.signed_distance(p) >= 0.0)
                && bounds.contains(p);
            let margin = hps.iter().map(|h| h.signed_distance(p).abs()).fold(f64::INFINITY, f64::min);
            if margin > 1e-7 {
                assert_eq!(poly.contains(p), by_constraints, "{p:?}");
            }
        }
    }
}

#[test]
fn intersection_vertices_satisfy_every_constraint() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bounds = ConvexPolygon::centered_square(50.0).unwrap();
    for _ in 0..200 {
        let inside = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let hps = random_halfplanes(&mut rng, 30, inside, 10.0);
        let poly = intersect_halfplanes(&hps, &bounds);
        assert!(!poly.is_empty());
        for &v in poly.vertices() {
            for h in &hps {
                assert!(h.signed_distance(v) >= -EPS_GEOM, "{}", h.signed_distance(v));
            }
        }
        // the result is a valid convex CCW polygon
        ConvexPolygon::new(poly.vertices().to_vec()).unwrap();
    }
}

#[test]
fn vertex_count_stays_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bounds = ConvexPolygon::centered_square(50.0).unwrap();
    let mut worst = 0;
    for k in [10, 100, 1000] {
        for _ in 0..20 {
            let inside = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let hps = random_halfplanes(&mut rng, k, inside, 10.0);
            let (_, stats) = intersect_halfplanes_traced(&hps, &bounds);
            worst = worst.max(stats.max_vertices);
        }
    }
    assert!(worst <= 64, "max intermediate vertices {worst}");
}

fn arb_polygon() -> impl Strategy<Value = ConvexPolygon> {
    any::<u64>().prop_map(|seed| random_polygon(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn arb_halfplane() -> impl Strategy<Value = HalfPlane> {
    (-8.0..8.0f64, -8.0..8.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(x, z, phi)| halfplane_through(Point2::new(x, z), phi))
}

fn max_vertex_shift(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    a.vertices()
        .iter()
        .map(|p| b.vertices().iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn clip_is_idempotent(poly in arb_polygon(), hp in arb_halfplane()) {
        let once = poly.clip(&hp);
        let twice = once.clip(&hp);
        prop_assert_eq!(once.len(), twice.len());
        prop_assert!(max_vertex_shift(&once, &twice) <= EPS_GEOM);
    }

    #[test]
    fn clip_never_grows_area(poly in arb_polygon(), hp in arb_halfplane()) {
        prop_assert!(poly.clip(&hp).area() <= poly.area() + EPS_AREA);
    }

    #[test]
    fn centroid_lies_inside(poly in arb_polygon()) {
        prop_assert!(poly.contains(poly.centroid().unwrap()));
    }

    #[test]
    fn intersection_is_order_invariant(seed in any::<u64>(), rot in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = ConvexPolygon::centered_square(50.0).unwrap();
        let inside = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let mut hps = random_halfplanes(&mut rng, 8, inside, 10.0);
        let a = intersect_halfplanes(&hps, &bounds);
        hps.rotate_left(rot);
        hps.swap(0, 5);
        let b = intersect_halfplanes(&hps, &bounds);
        prop_assert!((a.area() - b.area()).abs() < EPS_AREA.max(1e-12 * a.area()));
        let (ca, cb) = (a.centroid().unwrap(), b.centroid().unwrap());
        prop_assert!(ca.distance(cb) < EPS_GEOM, "{:?} vs {:?}", ca, cb);
    }
}
