use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subsurf::attributes::*;
use subsurf::multilinear::Tensor3;
use subsurf::volume::{generate_synthetic, FaultSpec, SyntheticSpec, CLASS_FAULT};
use subsurf::{Section2D, SeismicVolume};

fn random_volume(dims: (usize, usize, usize), seed: u64) -> SeismicVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SeismicVolume::from_fn(dims, |_, _, _| rng.random_range(-1.0f32..1.0)).unwrap()
}

#[test]
fn fault_plane_is_less_coherent_than_its_surroundings() {
    let spec = SyntheticSpec {
        dims: [16, 16, 16],
        seed: 1,
        faults: vec![FaultSpec { crossline: 8.0, dip: 0.1, strike_slope: 0.0, displacement: 3.0 }],
        ..Default::default()
    };
    let (vol, truth) = generate_synthetic(&spec).unwrap();
    let att = gtc(&vol, &GtcParams::default(), 2).unwrap();
    // the fault does not vary along inline, so mode 1 never sees it
    assert!(att.channel(0).iter().all(|&v| v == 1.0));
    for c in 1..3 {
        let (mut on, mut off) = ((0.0, 0usize), (0.0, 0usize));
        for (v, &l) in att.channel(c).iter().zip(truth.labels()) {
            let slot = if l == CLASS_FAULT { &mut on } else { &mut off };
            slot.0 += v;
            slot.1 += 1;
        }
        let (m_on, m_off) = (on.0 / on.1 as f64, off.0 / off.1 as f64);
        assert!(m_on < m_off, "channel {c}: on-fault {m_on} vs off-fault {m_off}");
    }
}

#[test]
fn got_voxel_matches_hand_extracted_cubes() {
    let vol = random_volume((9, 20, 11), 4);
    let params = GotParams { scales: vec![3], weights: vec![1.0], axes: vec![GotAxis::X] };
    let (il, xl, s) = (4, 10, 5);
    // cubes centred two voxels either side along x
    let cube = |dx: isize| {
        Tensor3::from_fn((3, 3, 3), |a, b, c| {
            vol.get_clamped(il as isize + a as isize - 1, xl as isize + dx + b as isize - 1, s as isize + c as isize - 1)
                as f64
        })
    };
    let want = perceptual_dissimilarity(&cube(-2), &cube(2)).unwrap();
    let got = got_voxel(&vol, &params, il, xl, s).unwrap();
    assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
}

#[test]
fn uniform_volume_has_zero_got() {
    let vol = SeismicVolume::from_fn((8, 8, 8), |_, _, _| 2.5).unwrap();
    let params = GotParams { scales: vec![3, 5], weights: vec![0.5, 0.5], axes: vec![GotAxis::T, GotAxis::X, GotAxis::Y] };
    let g = got3d(&vol, &params, 2).unwrap();
    assert!(g.channel(0).iter().all(|&v| v == 0.0));
}

#[test]
fn worker_count_does_not_change_results() {
    let vol = random_volume((6, 10, 12), 9);
    let a = gtc(&vol, &GtcParams::default(), 1).unwrap();
    let b = gtc(&vol, &GtcParams::default(), 4).unwrap();
    assert_eq!(a, b);
    let params = GotParams { scales: vec![3], weights: vec![1.0], axes: vec![GotAxis::X, GotAxis::Y] };
    assert_eq!(got3d(&vol, &params, 1).unwrap(), got3d(&vol, &params, 3).unwrap());
}

#[test]
fn sobel_magnitude_combines_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = Section2D::from_fn(7, 9, |_, _| rng.random_range(-1.0..1.0));
    let angles = [SobelAngle::Deg45, SobelAngle::DegMinus45];
    let mag = sobel_magnitude(&s, &angles).unwrap();
    let a = sobel_directional(&s, angles[0]).unwrap();
    let b = sobel_directional(&s, angles[1]).unwrap();
    for i in 0..mag.len() {
        assert!((mag[i] - a[i].hypot(b[i])).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn dissimilarity_is_zero_on_identity_and_symmetric(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor3::from_fn((n, n + 1, n), |_, _, _| rng.random_range(-2.0..2.0));
        let b = Tensor3::from_fn((n, n + 1, n), |_, _, _| rng.random_range(-2.0..2.0));
        prop_assert_eq!(perceptual_dissimilarity(&a, &a).unwrap(), 0.0);
        let ab = perceptual_dissimilarity(&a, &b).unwrap();
        let ba = perceptual_dissimilarity(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
    }

    #[test]
    fn gtc_channels_stay_in_unit_interval(seed in any::<u64>()) {
        let vol = random_volume((4, 5, 12), seed);
        let att = gtc(&vol, &GtcParams::default(), 1).unwrap();
        for c in 0..3 {
            prop_assert!(att.channel(c).iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn glcm_probabilities_sum_to_one(seed in any::<u64>(), levels in 2usize..12, dr in 0isize..3, dc in -2isize..3) {
        prop_assume!(dr != 0 || dc != 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..36).map(|_| rng.random_range(0.0..1.0)).collect();
        let p = glcm_matrix(&w, 6, 6, levels, [dr, dc]).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }
}
