use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subsurf::attributes::{got_section, GotAxis, GotParams};
use subsurf::fault::Mask;
use subsurf::salt::*;
use subsurf::volume::{generate_synthetic, LayerSpec, SaltShape, SaltSpec, SyntheticSpec, CLASS_SALT};
use subsurf::{Error, SectionAxis, SeismicVolume};

fn ellipsoid(seed: u64, noise: f64) -> SyntheticSpec {
    SyntheticSpec {
        dims: [24, 64, 64],
        seed,
        layers: LayerSpec { noise_level: noise, ..Default::default() },
        salts: vec![SaltSpec {
            shape: SaltShape::Ellipsoid,
            center: [12.0, 32.0, 32.0],
            radii: [10.0, 12.0, 16.0],
            drift: 0.0,
            amplitude: 1.5,
        }],
        ..Default::default()
    }
}

#[test]
fn chaotic_ellipsoid_is_outlined_from_got() {
    let params = GotParams { scales: vec![5, 7], weights: vec![0.5, 0.5], axes: vec![GotAxis::T, GotAxis::X, GotAxis::Y] };
    for seed in 0..3 {
        let (vol, truth) = generate_synthetic(&ellipsoid(seed, 0.1)).unwrap();
        let got = got_section(&vol, &params, SectionAxis::Inline, 12, 2).unwrap();
        let curve = delineate_salt_boundary(&got, 64, 64, &DelineateParams::default(), 12).unwrap();
        let planted = boundary_from_labels(&truth.section(SectionAxis::Inline, 12).unwrap(), 64, 64, CLASS_SALT, 12).unwrap();
        assert!(curve.closed && curve.is_simple());
        let d = boundary_mean_distance(&curve, &planted);
        assert!(d <= 2.0, "seed {seed}: mean distance {d}");
    }
}

#[test]
fn delineation_edge_cases() {
    let flat = vec![0.3; 100];
    assert!(matches!(
        delineate_salt_boundary(&flat, 10, 10, &DelineateParams::default(), 0),
        Err(Error::Empty(_))
    ));
    let mut map: Vec<f64> = (0..100).map(|i| (i % 7) as f64 * 0.1).collect();
    map[44] = 5.0;
    let c = delineate_salt_boundary(&map, 10, 10, &DelineateParams { theta_rel: 1.0, ..Default::default() }, 0).unwrap();
    assert_eq!(c.points, vec![(4.0, 4.0)]);
}

#[test]
fn tensor_count_follows_the_centre_boundary() {
    let spec = SyntheticSpec {
        dims: [12, 64, 64],
        salts: vec![SaltSpec {
            shape: SaltShape::Cylinder,
            center: [6.0, 32.0, 32.0],
            radii: [20.0, 9.0, 12.0],
            drift: 1.0,
            amplitude: 1.5,
        }],
        ..Default::default()
    };
    let (vol, truth) = generate_synthetic(&spec).unwrap();
    let refs: Vec<_> = (4..9)
        .map(|i| boundary_from_labels(&truth.section(SectionAxis::Inline, i).unwrap(), 64, 64, CLASS_SALT, i).unwrap())
        .collect();
    let set = build_boundary_tensors(&vol, SectionAxis::Inline, &refs, 11).unwrap();
    assert_eq!(set.tensors.len(), refs[2].len());
    assert!(set.tensors.iter().all(|t| t.dims() == (11, 11, 5)));
}

#[test]
fn tensors_move_with_the_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let plane: Vec<f32> = (0..3 * 60 * 60).map(|_| rng.random_range(-1.0..1.0)).collect();
    let at = |i: usize, j: usize, k: usize| plane[(i * 60 + j) * 60 + k];
    let (dr, dc) = (3usize, 5usize);
    let base = SeismicVolume::from_fn((3, 40, 40), |i, j, k| at(i, j + 10, k + 10)).unwrap();
    let shifted = SeismicVolume::from_fn((3, 40, 40), |i, j, k| at(i, j + 10 - dr, k + 10 - dc)).unwrap();
    let curve = |i: usize, off: (f64, f64)| BoundaryCurve {
        points: [(15.0, 15.0), (15.0, 22.0), (22.0, 22.0), (22.0, 15.0)]
            .iter()
            .map(|p| (p.0 + off.0, p.1 + off.1))
            .collect(),
        closed: true,
        section_index: i,
    };
    let a: Vec<_> = (0..3).map(|i| curve(i, (0.0, 0.0))).collect();
    let b: Vec<_> = (0..3).map(|i| curve(i, (dr as f64, dc as f64))).collect();
    let ta = build_boundary_tensors(&base, SectionAxis::Inline, &a, 5).unwrap();
    let tb = build_boundary_tensors(&shifted, SectionAxis::Inline, &b, 5).unwrap();
    for (x, y) in ta.tensors.iter().zip(&tb.tensors) {
        assert_eq!(x.data(), y.data());
    }
}

#[test]
fn constant_volume_cannot_be_tracked() {
    let vol = SeismicVolume::from_fn((8, 40, 40), |_, _, _| 1.0).unwrap();
    let refs: Vec<_> = (0..5)
        .map(|i| BoundaryCurve {
            points: vec![(15.0, 15.0), (15.0, 25.0), (25.0, 25.0), (25.0, 15.0)],
            closed: true,
            section_index: i,
        })
        .collect();
    let r = track_salt_sequence(&vol, SectionAxis::Inline, &refs, 1, false, &SaltTrackParams::default(), 1);
    assert!(matches!(r, Err(Error::Degenerate(_))), "{r:?}");
}

#[test]
fn boundary_text_roundtrip() {
    let c = BoundaryCurve { points: vec![(1.5, 2.0), (3.25, 4.0), (2.0, 7.125)], closed: true, section_index: 9 };
    assert_eq!(BoundaryCurve::from_text(&c.to_text()).unwrap(), c);
}

fn blob(seed: u64) -> Mask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r0, c0) = (rng.random_range(6.0..14.0), rng.random_range(6.0..14.0));
    let (a, b) = (rng.random_range(2.0..6.0), rng.random_range(2.0..6.0));
    let data = (0..400)
        .map(|i| {
            let (r, c) = ((i / 20) as f64, (i % 20) as f64);
            ((r - r0) / a).powi(2) + ((c - c0) / b).powi(2) + rng.random_range(0.0..0.3) <= 1.0
        })
        .collect();
    Mask::new(20, 20, data).unwrap()
}

proptest! {
    #[test]
    fn traced_contours_are_closed_simple_and_hug_the_component(seed in any::<u64>()) {
        let mask = blob(seed);
        let Some(comp) = largest_component(&closing(&mask)) else { return Ok(()) };
        let curve = trace_contour(&comp, 0);
        prop_assume!(curve.len() >= 3);
        prop_assert!(curve.closed);
        prop_assert!(curve.is_simple());
        for &(r, c) in &curve.points {
            let (r, c) = (r as isize, c as isize);
            let near = (-1..=1).any(|dr| (-1..=1).any(|dc| {
                let (y, x) = (r + dr, c + dc);
                (0..20).contains(&y) && (0..20).contains(&x) && comp.get(y as usize, x as usize)
            }));
            prop_assert!(near);
        }
    }
}
