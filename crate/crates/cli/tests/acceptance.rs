//! Acceptance run: every criterion prints one PASS/FAIL line.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are reported but do not fail the
//! test; every other FAIL does.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subsurf::attributes::{got3d, AttributeVolume, gtc, gtc_voxel, perceptual_dissimilarity, GotAxis, GotParams, GtcParams};
use subsurf::fault::{detect_faults, discontinuity_map, fault_f1, hough_accumulator, FaultParams, HoughParams, Mask};
use subsurf::labeling::textures::{composite_dataset, layered_patch, texture_corpus, CompositeSpec};
use subsurf::labeling::{
    czekanowski_similarity, extract_features, hoyer_sparsity, nmf_pixel_annotation, nmf_pixel_annotation_observed,
    project_to_sparsity, retrieve_similar, FeatureConfig, FilterBank, NmfParams, TextureExtractor,
};
use subsurf::multilinear::Tensor3;
use subsurf::salt::{boundary_from_labels, boundary_mean_distance, track_salt_sequence, BoundaryCurve, SaltTrackParams};
use subsurf::volume::{
    generate_synthetic, ibm_to_ieee, load_segy, read_svol, write_segy, write_svol, FaultSpec, HalfSpaceSpec, LayerSpec,
    SaltShape, SaltSpec, SegyOptions, SyntheticSpec, CLASS_FAULT, CLASS_SALT,
};
use subsurf::{SectionAxis, SeismicVolume};

/// Criteria that cannot be met as stated; see the notes printed with them.
const KNOWN_UNATTAINABLE: &[u32] = &[7];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------- 1: GoT boundary localization ----------

fn criterion_1() -> Outcome {
    let spec = SyntheticSpec {
        dims: [64, 64, 64],
        seed: 11,
        half_space: Some(HalfSpaceSpec { boundary: 32, period: 8.0, noise_std: 0.25 }),
        ..Default::default()
    };
    let (vol, _) = generate_synthetic(&spec).map_err(|e| e.to_string())?;
    let params = GotParams { scales: vec![5, 7], weights: vec![0.5, 0.5], axes: vec![GotAxis::X] };
    let start = Instant::now();
    let g = got3d(&vol, &params, 1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut hits = 0;
    for i in 0..64 {
        for k in 0..64 {
            let best = (0..64).max_by(|&a, &b| g.get(0, i, a, k).total_cmp(&g.get(0, i, b, k))).unwrap();
            hits += usize::from(best.abs_diff(32) <= 1);
        }
    }
    let share = hits as f64 / 4096.0;
    check(
        share >= 0.95 && elapsed < Duration::from_secs(60),
        format!("{:.1}% of rows within one voxel, {:.1} s single-threaded", 100.0 * share, elapsed.as_secs_f64()),
    )
}

// ---------- 2: Kronecker oracle ----------

fn dft_matrix(n: usize) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(n, n, |j, k| {
        let a = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
        Complex::new(a.cos(), a.sin())
    })
}

fn kronecker_dissimilarity(k: &DMatrix<Complex<f64>>, a: &[f64], b: &[f64]) -> f64 {
    let x = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(p, q)| Complex::new((p - q).abs(), 0.0)));
    let inner = (k * x).map(|z| Complex::new(z.norm(), 0.0));
    let outer = (k * inner).map(|z| z.norm());
    outer.sum() / a.len() as f64
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let d = dft_matrix(4);
    let k = d.kronecker(&d).kronecker(&d);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = Tensor3::from_fn((4, 4, 4), |_, _, _| rng.random_range(-1.0..1.0));
        let b = Tensor3::from_fn((4, 4, 4), |_, _, _| rng.random_range(-1.0..1.0));
        let got = perceptual_dissimilarity(&a, &b).map_err(|e| e.to_string())?;
        let want = kronecker_dissimilarity(&k, a.data(), b.data());
        worst = worst.max((got - want).abs() / want.abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-8 && elapsed < Duration::from_secs(5),
        format!("worst relative error {worst:.2e} over 50 pairs, {:.2} s", elapsed.as_secs_f64()),
    )
}

// ---------- 3: GTC ----------

/// λ₁/Tr of the row-centred mode unfolding, by a dense symmetric eigensolve.
fn gtc_oracle(vol: &SeismicVolume, cube: [usize; 3], at: [usize; 3]) -> [f64; 3] {
    let h = cube.map(|e| (e / 2) as isize);
    let value = |a: usize, b: usize, c: usize| {
        vol.get_clamped(
            at[0] as isize + a as isize - h[0],
            at[1] as isize + b as isize - h[1],
            at[2] as isize + c as isize - h[2],
        ) as f64
    };
    let entries = cube[0] * cube[1] * cube[2];
    let mut out = [0.0; 3];
    for (mode, slot) in out.iter_mut().enumerate() {
        let rows = cube[mode];
        let mut m = DMatrix::<f64>::zeros(rows, entries / rows);
        let mut fill = vec![0usize; rows];
        for a in 0..cube[0] {
            for b in 0..cube[1] {
                for c in 0..cube[2] {
                    let r = [a, b, c][mode];
                    m[(r, fill[r])] = value(a, b, c);
                    fill[r] += 1;
                }
            }
        }
        for mut row in m.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        let c = &m * m.transpose();
        let trace = c.trace();
        *slot = if trace < 1e-12 * entries as f64 {
            1.0
        } else {
            SymmetricEigen::new(c).eigenvalues.max() / trace
        };
    }
    out
}

/// Largest channel change under amplitude scaling by 3.7.
fn scaling_change(vol: &SeismicVolume, att: &AttributeVolume, params: &GtcParams) -> Result<f64, String> {
    let scaled = gtc(&vol.scaled(3.7).map_err(|e| e.to_string())?, params, 2).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for c in 0..3 {
        for (a, b) in att.channel(c).iter().zip(scaled.channel(c)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn criterion_3() -> Outcome {
    let params = GtcParams::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let specs = [
        SyntheticSpec {
            dims: [12, 24, 32],
            seed: 3,
            layers: LayerSpec { noise_level: 0.1, undulation_amplitude: 2.0, ..Default::default() },
            faults: vec![FaultSpec { crossline: 11.0, dip: 0.2, strike_slope: 0.0, displacement: 4.0 }],
            salts: vec![SaltSpec {
                shape: SaltShape::Ellipsoid,
                center: [6.0, 12.0, 16.0],
                radii: [4.0, 5.0, 6.0],
                drift: 0.0,
                amplitude: 1.5,
            }],
            ..Default::default()
        },
        SyntheticSpec { dims: [10, 10, 20], seed: 4, layers: LayerSpec { noise_level: 1.0, ..Default::default() }, ..Default::default() },
    ];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut worst_oracle = 0.0f64;
    let mut worst_scale = 0.0f64;
    let mut worst_rounded = 0.0f64;
    for spec in &specs {
        let (vol, _) = generate_synthetic(spec).map_err(|e| e.to_string())?;
        let att = gtc(&vol, &params, 2).map_err(|e| e.to_string())?;
        for c in 0..3 {
            for &v in att.channel(c) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        worst_rounded = worst_rounded.max(scaling_change(&vol, &att, &params)?);
        // signed powers of two times 3.7 are exact in f32, so this measures
        // GTC itself rather than the rounding of the scaled input
        let pow2 = SeismicVolume::from_fn(vol.dims(), |i, j, k| {
            let v = vol.get(i, j, k);
            if v == 0.0 { 0.0 } else { v.signum() * v.abs().log2().round().exp2() }
        })
        .map_err(|e| e.to_string())?;
        let pow2_att = gtc(&pow2, &params, 2).map_err(|e| e.to_string())?;
        worst_scale = worst_scale.max(scaling_change(&pow2, &pow2_att, &params)?);
        let (ni, nx, ns) = vol.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut voxels = vec![[0, 0, 0], [ni - 1, nx - 1, ns - 1]];
        voxels.extend((0..100).map(|_| [rng.random_range(0..ni), rng.random_range(0..nx), rng.random_range(0..ns)]));
        for v in voxels {
            let got = gtc_voxel(&vol, &params, v[0], v[1], v[2]);
            let want = gtc_oracle(&vol, params.cube, v);
            for m in 0..3 {
                worst_oracle = worst_oracle.max((got[m] - want[m]).abs());
            }
        }
    }
    let in_range = lo >= 0.0 && hi <= 1.0;
    ok &= in_range && worst_oracle <= 1e-10 && worst_scale <= 1e-9;
    notes.push(format!("range [{lo:.4}, {hi:.4}]"));
    notes.push(format!("oracle error {worst_oracle:.1e}"));
    notes.push(format!(
        "scaling change {worst_scale:.1e} (exactly scaled input), {worst_rounded:.1e} with f32-rounded input"
    ));

    let flat = SeismicVolume::from_fn((8, 8, 24), |_, _, s| (0.7 * s as f64).sin() as f32).map_err(|e| e.to_string())?;
    let att = gtc(&flat, &params, 2).map_err(|e| e.to_string())?;
    let all_one = (0..3).all(|c| att.channel(c).iter().all(|&v| v == 1.0));
    ok &= all_one;
    notes.push(format!("laterally constant volume all 1.0: {all_one}"));
    check(ok, notes.join(", "))
}

// ---------- 4: fault pipeline and Hough ----------

fn brute_force_votes(mask: &Mask, thetas: &[f64], res: f64) -> HashMap<(usize, i64), u32> {
    let mut votes = HashMap::new();
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if !mask.get(r, c) {
                continue;
            }
            for (t, &th) in thetas.iter().enumerate() {
                let rho = r as f64 * th.cos() + c as f64 * th.sin();
                *votes.entry((t, (rho / res).round() as i64)).or_insert(0) += 1;
            }
        }
    }
    votes
}

fn hough_subcheck() -> Outcome {
    let (theta_deg, rho0) = (12.0f64, 30.0f64);
    let th = theta_deg.to_radians();
    let mut mask = Mask::empty(64, 64);
    for c in 0..64 {
        let r = ((rho0 - c as f64 * th.sin()) / th.cos()).round();
        if (0.0..64.0).contains(&r) {
            mask.set(r as usize, c, true);
        }
    }
    let params = HoughParams::default();
    let acc = hough_accumulator(&mask, &params).map_err(|e| e.to_string())?;
    let oracle = brute_force_votes(&mask, &params.thetas(), params.rho_resolution);
    let mut mismatches = 0;
    for (&(t, rb), &v) in &oracle {
        if acc.get(t, (rb + acc.rho_offset as i64) as usize) != v {
            mismatches += 1;
        }
    }
    let total: u64 = acc.votes.iter().map(|&v| v as u64).sum();
    let oracle_total: u64 = oracle.values().map(|&v| v as u64).sum();
    let (pt, pb, pv) = acc.peak();
    let oracle_peak = oracle.values().copied().max().unwrap_or(0);
    let dtheta = (acc.thetas[pt].to_degrees() - theta_deg).abs() / params.theta_resolution_deg;
    let drho = (acc.rho_of(pb) - rho0).abs() / params.rho_resolution;
    check(
        mismatches == 0 && total == oracle_total && pv == oracle_peak && dtheta <= 1.0 + 1e-9 && drho <= 1.0 + 1e-9,
        format!("Hough peak off by {dtheta:.0} theta / {drho:.0} rho bins, {mismatches} bins differ from brute force"),
    )
}

fn criterion_4() -> Outcome {
    let mut f1s = Vec::new();
    for seed in 0..5u64 {
        let spec = SyntheticSpec {
            seed,
            faults: vec![FaultSpec { crossline: 28.0 + 2.0 * seed as f64, dip: 0.15, strike_slope: 0.0, displacement: 5.0 }],
            ..Default::default()
        };
        let (vol, truth) = generate_synthetic(&spec).map_err(|e| e.to_string())?;
        let params = FaultParams::default();
        let map = discontinuity_map(&vol, &GtcParams::default(), &params.coherence_modes, SectionAxis::Inline, 32, 2)
            .map_err(|e| e.to_string())?;
        let det = detect_faults(&map, 64, 64, &params).map_err(|e| e.to_string())?;
        let labels = truth.section(SectionAxis::Inline, 32).map_err(|e| e.to_string())?;
        let mask = Mask::new(64, 64, labels.iter().map(|&l| l == CLASS_FAULT).collect()).map_err(|e| e.to_string())?;
        f1s.push(fault_f1(&det.network, &mask, 2.0).2);
    }
    let min = f1s.iter().copied().fold(f64::INFINITY, f64::min);
    let hough = hough_subcheck();
    let detail = format!(
        "F1 per seed {:?}; {}",
        f1s.iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>(),
        match &hough {
            Ok(s) | Err(s) => s,
        }
    );
    check(min >= 0.7 && hough.is_ok(), detail)
}

// ---------- 5: salt tracking ----------

fn salt_spec(drift: f64, noise: f64) -> SyntheticSpec {
    SyntheticSpec {
        dims: [40, 64, 64],
        seed: 5,
        layers: LayerSpec { noise_level: noise, ..Default::default() },
        salts: vec![SaltSpec {
            shape: SaltShape::Cylinder,
            center: [20.0, 32.0, 32.0],
            radii: [64.0, 10.0, 14.0],
            drift,
            amplitude: 1.5,
        }],
        ..Default::default()
    }
}

fn criterion_5() -> Outcome {
    let (vol, truth) = generate_synthetic(&salt_spec(1.0, 0.1)).map_err(|e| e.to_string())?;
    let boundary = |i: usize| -> Result<BoundaryCurve, String> {
        let labels = truth.section(SectionAxis::Inline, i).map_err(|e| e.to_string())?;
        boundary_from_labels(&labels, 64, 64, CLASS_SALT, i).map_err(|e| e.to_string())
    };
    let refs = (15..20).map(boundary).collect::<Result<Vec<_>, _>>()?;
    let params = SaltTrackParams::default();
    let tracked = track_salt_sequence(&vol, SectionAxis::Inline, &refs, 5, false, &params, 2).map_err(|e| e.to_string())?;
    let mut dists = Vec::new();
    for c in &tracked {
        dists.push(boundary_mean_distance(c, &boundary(c.section_index)?));
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;

    // identical sections: copy one inline everywhere
    let (src, src_truth) = generate_synthetic(&salt_spec(0.0, 0.1)).map_err(|e| e.to_string())?;
    let same = SeismicVolume::from_fn((8, 64, 64), |_, j, k| src.get(20, j, k)).map_err(|e| e.to_string())?;
    let labels = src_truth.section(SectionAxis::Inline, 20).map_err(|e| e.to_string())?;
    let refs: Vec<BoundaryCurve> = (0..5)
        .map(|i| boundary_from_labels(&labels, 64, 64, CLASS_SALT, i))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let out = track_salt_sequence(&same, SectionAxis::Inline, &refs, 1, false, &params, 2).map_err(|e| e.to_string())?;
    let identity = out[0].points == refs[4].points && out[0].closed == refs[4].closed;

    check(
        mean <= 2.0 && identity,
        format!(
            "mean distance {mean:.2} px over 5 sections {:?}, identity exact: {identity}",
            dists.iter().map(|d| format!("{d:.2}")).collect::<Vec<_>>()
        ),
    )
}

// ---------- 6: Czekanowski ----------

fn criterion_6() -> Outcome {
    let cz = |a: &[f64], b: &[f64]| czekanowski_similarity(a, b).map_err(|e| e.to_string());
    let orth = cz(&[1.0, 0.0], &[0.0, 1.0])?;
    let third = cz(&[1.0, 1.0], &[1.0, 3.0])?;
    let ident = cz(&[0.3, 1.7, 0.0, 4.0], &[0.3, 1.7, 0.0, 4.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut out_of_range = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..32);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..10.0) }).collect();
        let s = cz(&a, &b)?;
        out_of_range += usize::from(!(0.0..=1.0).contains(&s));
    }
    check(
        orth == 0.0 && third == 2.0 / 3.0 && ident == 1.0 && out_of_range == 0,
        format!("orthogonal {orth}, (1,1)/(1,3) {third}, identical {ident}, {out_of_range}/10000 outside [0,1]"),
    )
}

// ---------- 7: Hoyer ----------

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..200);
        let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        w[0] += 1e-3;
        let p = project_to_sparsity(&w, 0.7, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((hoyer_sparsity(&p).map_err(|e| e.to_string())? - 0.7).abs());
    }
    let h = |w: &[f64]| hoyer_sparsity(w).map_err(|e| e.to_string());
    let one_hot = h(&[0.0, 0.0, 2.5, 0.0])?;
    let constant = h(&[1.5; 6])?;
    let hand = h(&[3.0, 4.0, 0.0, 0.0])?;
    check(
        worst <= 1e-6 && one_hot == 1.0 && constant == 0.0 && hand == 0.2,
        format!(
            "round-trip error {worst:.1e}, one-hot {one_hot}, constant {constant}, (3,4,0,0) {hand} (expected 0.2; \
             (sqrt(4) - 7/5)/(sqrt(4) - 1) is 0.6)"
        ),
    )
}

// ---------- 8: constrained NMF ----------

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let ds = composite_dataset(&CompositeSpec { seed: 0, ..Default::default() }).map_err(|e| e.to_string())?;
    let params = NmfParams { n_f_per_class: 4, rho_w: 0.3, gamma1: 0.1, ..NmfParams::default() };
    let mut nonneg = true;
    let mut worst_norm = 0.0f64;
    let mut first = None;
    let mut last = f64::NAN;
    let out = nmf_pixel_annotation_observed(&ds.data, &params, &mut |_, w, h, obj| {
        nonneg &= w.data().iter().all(|&v| v >= 0.0) && h.data().iter().all(|&v| v >= 0.0);
        for n in 0..h.cols() {
            let norm = (0..h.rows()).map(|i| h.get(i, n).powi(2)).sum::<f64>().sqrt();
            worst_norm = worst_norm.max((norm - 1.0).abs());
        }
        first.get_or_insert(obj);
        last = obj;
    })
    .map_err(|e| e.to_string())?;
    let accuracy = ds.composite_accuracy(&out.labels, 3.0);
    let first = first.ok_or("no iterations logged")?;
    let descended = last <= first;

    // baseline: plain multiplicative updates on the same data, 300 iterations
    let base = NmfParams { n_f_per_class: 4, max_iter: 300, tol: 0.0, ..NmfParams::unconstrained() };
    let log = nmf_pixel_annotation(&ds.data, &base).map_err(|e| e.to_string())?.model.objective_log;
    let rises = log.windows(2).filter(|p| p[1] > p[0] * (1.0 + 1e-12)).count();
    let elapsed = start.elapsed();
    check(
        nonneg && worst_norm <= 1e-9 && descended && log.len() == 300 && rises == 0 && accuracy >= 0.8
            && elapsed < Duration::from_secs(300),
        format!(
            "off-seam accuracy {accuracy:.3}, W/H nonnegative {nonneg}, |h|-1 <= {worst_norm:.1e}, \
             objective {first:.4e} -> {last:.4e}, baseline rises {rises}/{} steps, {:.1} s",
            log.len().saturating_sub(1),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------- 9: retrieval ----------

fn criterion_9() -> Outcome {
    let corpus = texture_corpus(50, 32, 9);
    let bank = FilterBank::new(FeatureConfig::default()).map_err(|e| e.to_string())?;
    let feats = extract_features(&bank, &corpus, 2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let exemplar = bank.extract(&layered_patch(32, 32, 8.0, 2.0, 0.2, &mut rng)).map_err(|e| e.to_string())?;
    let top = retrieve_similar(&exemplar, &feats, 10).map_err(|e| e.to_string())?;
    let layered = top.iter().filter(|(i, _)| *i < 50).count();
    check(layered >= 9, format!("{layered}/10 layered in the top 10 of 100"))
}

// ---------- 10: I/O and CLI reproducibility ----------

/// `(-1)^s · F/2^24 · 16^(E-64)` in f64, which holds every IBM value exactly.
fn ibm_hand(bits: u32) -> Option<f32> {
    let sign = if bits >> 31 == 1 { -1.0 } else { 1.0 };
    let e = ((bits >> 24) & 0x7f) as i32;
    let f = (bits & 0x00ff_ffff) as f64;
    let v = sign * f / 16_777_216.0 * 16f64.powi(e - 64);
    if v.abs() >= 2f64.powi(128) {
        None
    } else {
        Some(v as f32)
    }
}

fn io_roundtrips(dir: &Path) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut values: Vec<f32> = (0..3 * 5 * 7).map(|_| rng.random_range(-1e3..1e3)).collect();
    values[..6].copy_from_slice(&[0.0, -0.0, f32::MIN_POSITIVE, 1e-42, f32::MAX, f32::MIN]);
    let vol = SeismicVolume::new(3, 5, 7, values).map_err(|e| e.to_string())?;
    let bits = |v: &SeismicVolume| v.amplitudes().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let svol = dir.join("rt.svol");
    write_svol(&vol, &svol).map_err(|e| e.to_string())?;
    let back = read_svol(&svol).map_err(|e| e.to_string())?;
    let segy = dir.join("rt.sgy");
    write_segy(&vol, &segy).map_err(|e| e.to_string())?;
    let back2 = load_segy(&segy, SegyOptions::default()).map_err(|e| e.to_string())?;
    let ok = back.dims() == vol.dims() && bits(&back) == bits(&vol) && back2.dims() == vol.dims() && bits(&back2) == bits(&vol);
    if !ok {
        return Err("round-trip changed the amplitudes".into());
    }

    let mut patterns: Vec<u32> = vec![0, 0x8000_0000, 0x4110_0000, 0xc276_a000, 0x7fff_ffff, 0x0010_0000, 0x0000_0001, 0x2100_0001];
    patterns.extend((patterns.len()..10_000).map(|_| rng.random::<u32>()));
    let mismatches = patterns
        .iter()
        .filter(|&&p| ibm_to_ieee(p).map(f32::to_bits) != ibm_hand(p).map(f32::to_bits))
        .count();
    if mismatches > 0 {
        return Err(format!("{mismatches}/10000 IBM patterns differ from the hand formula"));
    }
    Ok("SVOL and SEG-Y bit-exact, 10000 IBM patterns match".into())
}

const PIPELINE_CONFIG: &str = "\
[got]
scales = [5, 7]
weights = [0.5, 0.5]
[composite]
images = 12
side = 32
[features]
min_side = 16
[nmf]
n_f_per_class = 2
max_iter = 30
";

const PIPELINE_SPEC: &str = "\
dims = [12, 40, 48]
[[faults]]
crossline = 16
dip = 0.1
displacement = 4
[[salts]]
shape = \"cylinder\"
center = [6, 26, 24]
radii = [40, 6, 8]
drift = 0.5
";

fn run_pipeline(dir: &Path) -> Result<(), String> {
    std::fs::write(dir.join("cfg.toml"), PIPELINE_CONFIG).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("spec.toml"), PIPELINE_SPEC).map_err(|e| e.to_string())?;
    let steps: &[&[&str]] = &[
        &["synth", "--spec", "spec.toml", "--out", "v.svol", "--truth", "gt.svol"],
        &["convert", "--in", "v.svol", "--out", "v.sgy"],
        &["convert", "--in", "v.sgy", "--out", "v2.svol"],
        &["attr", "gtc", "--in", "v2.svol", "--out", "c.svol"],
        &["attr", "got", "--in", "v.svol", "--section", "inline:6", "--out", "g.svol"],
        &["attr", "sobel", "--in", "v.svol", "--section", "inline:6", "--out", "s.svol"],
        &["attr", "glcm", "--in", "v.svol", "--section", "inline:6", "--out", "t.svol"],
        &["fault", "detect", "--in", "c.svol", "--section", "inline:6", "--out", "f6.txt"],
        &["fault", "track", "--in", "v.svol", "--axis", "inline", "--ref", "6=f6.txt", "--predict", "7-8", "--out", "ft"],
        &["salt", "delineate", "--in", "g.svol", "--got", "--section", "inline:0", "--out", "b.txt"],
        &["render", "--in", "c.svol", "--section", "inline:6", "--out", "c.png"],
        &["render", "--in", "v.svol", "--section", "inline:6", "--overlay", "f6.txt", "--out", "v.png"],
        &["render", "--in", "gt.svol", "--section", "inline:6", "--kind", "labels", "--out", "gt.pgm"],
        &["synth", "--dataset", "--out", "ds"],
        &["label", "features", "--dataset", "ds", "--out", "feats.txt"],
        &["label", "retrieve", "--features", "feats.txt", "--exemplar", "0", "--k", "5", "--out", "top.txt"],
        &["label", "overseg", "--in", "v.svol", "--section", "inline:6", "--out", "seg.svol"],
        &["label", "classify", "--in", "v.svol", "--dataset", "ds", "--section", "inline:6", "--out", "lab.svol"],
        &["label", "annotate", "--dataset", "ds", "--classes", "2", "--out", "ann", "--png"],
    ];
    for step in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_subsurf"))
            .current_dir(dir)
            .args(["--config", "cfg.toml", "--seed", "42", "--workers", "2"])
            .args(*step)
            .env_remove("SUBSURF_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("`{}` failed: {}", step.join(" "), String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let io = io_roundtrips(tmp.path())?;
    let (a, b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
    for d in [&a, &b] {
        std::fs::create_dir(d).map_err(|e| e.to_string())?;
        run_pipeline(d)?;
    }
    let (ta, tb) = (tree(&a), tree(&b));
    let differing: Vec<&str> = ta
        .iter()
        .zip(&tb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    check(
        ta.len() == tb.len() && differing.is_empty() && ta.len() > 30,
        format!("{io}; CLI pipeline wrote {} files twice, {} differ {:?}", ta.len(), differing.len(), differing),
    )
}

#[test]
fn acceptance() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "GoT boundary localization", criterion_1),
        (2, "perceptual dissimilarity = Kronecker DFT oracle", criterion_2),
        (3, "GTC range, flat, oracle and scaling", criterion_3),
        (4, "fault pipeline F1 and Hough oracle", criterion_4),
        (5, "salt tracking", criterion_5),
        (6, "Czekanowski cases", criterion_6),
        (7, "Hoyer round-trip and hand cases", criterion_7),
        (8, "constrained NMF properties and accuracy", criterion_8),
        (9, "retrieval precision", criterion_9),
        (10, "I/O round-trips, IBM formula, CLI reproducibility", criterion_10),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, _, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("panicked".into())))
            .collect()
    });
    // written past the test harness capture so the lines always show
    let mut stdout = std::io::stdout().lock();
    let mut unexpected = Vec::new();
    for ((n, name, _), r) in criteria.iter().zip(&results) {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let known = if r.is_err() && KNOWN_UNATTAINABLE.contains(n) { " [known unattainable]" } else { "" };
        let _ = writeln!(stdout, "{tag} criterion {n}: {name}: {detail}{known}");
        if r.is_err() && !KNOWN_UNATTAINABLE.contains(n) {
            unexpected.push(*n);
        }
    }
    drop(stdout);
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
