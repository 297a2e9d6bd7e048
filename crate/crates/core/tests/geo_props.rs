use proptest::prelude::*;
use trendmine_core::geo::{call_state, StateTally, Winner};
use trendmine_core::kdtree::{default_states, squared_distance, KdTree2, StatePoint};

fn linear_scan(points: &[StatePoint], lat: f64, lon: f64) -> &StatePoint {
    points
        .iter()
        .min_by(|a, b| {
            squared_distance(lat, lon, a)
                .total_cmp(&squared_distance(lat, lon, b))
                .then_with(|| a.code.cmp(&b.code))
        })
        .unwrap()
}

fn grid_points() -> impl Strategy<Value = Vec<StatePoint>> {
    // Small integer grid so that equal coordinates and equidistant queries
    // are common.
    prop::collection::vec((0..6i32, 0..6i32), 1..40).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (a, b))| StatePoint {
                code: format!("S{i:02}"),
                lat: f64::from(a),
                lon: f64::from(b),
                electoral_votes: 1,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn kd_matches_scan_on_us_box(lat in 18.0f64..72.0, lon in -170.0f64..-65.0) {
        let states = default_states();
        let tree = KdTree2::build(states.clone()).unwrap();
        prop_assert_eq!(&tree.nearest(lat, lon).code, &linear_scan(&states, lat, lon).code);
    }

    #[test]
    fn kd_matches_scan_with_ties(points in grid_points(), q in prop::collection::vec((-2..16i32, -2..16i32), 1..20)) {
        let tree = KdTree2::build(points.clone()).unwrap();
        prop_assert!(tree.check_structure());
        for (a, b) in q {
            let (lat, lon) = (f64::from(a) / 2.0, f64::from(b) / 2.0);
            prop_assert_eq!(&tree.nearest(lat, lon).code, &linear_scan(&points, lat, lon).code);
        }
    }

    #[test]
    fn call_is_scale_invariant(c in prop::array::uniform4(0..50u64), s in 1..1000u64) {
        let t = StateTally { code: "XX".into(), pos_a: c[0], neg_a: c[1], pos_b: c[2], neg_b: c[3], total_geo: 0 };
        let scaled = StateTally { pos_a: c[0] * s, neg_a: c[1] * s, pos_b: c[2] * s, neg_b: c[3] * s, ..t.clone() };
        prop_assert_eq!(call_state(&t).winner, call_state(&scaled).winner);
        let swapped = call_state(&t.swapped()).winner;
        prop_assert_eq!(swapped, call_state(&t).winner.swapped());
        if swapped == Winner::Undecided {
            prop_assert_eq!(call_state(&t).winner, Winner::Undecided);
        }
    }
}
