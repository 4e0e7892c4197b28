mod common;

use std::fs;

use common::{corpus, generate, tree_bytes, write_bundle, Bundle};
use warpforge::io::{load_image, read_flo, read_landmarks, read_msk, write_landmarks};
use warpforge::metrics::{psnr, Label, MetricConfig};
use warpforge::synth::{procedural_face, synthesize_with_params, FalParam, FalParams, LandmarkGroup, SynthConfig};
use warpforge::FlowField;
use warpforge_cli::{balanced_iteration_weights, evaluate, read_manifest, render_overlay, render_undo};

#[test]
fn two_images_six_reps() {
    let dir = tempfile::tempdir().unwrap();
    let images = corpus(dir.path(), 2, 96);
    let out = dir.path().join("ds");
    let m = generate(&images, &out, 6, 3, 2);
    assert_eq!(m.count(Label::Real), 2);
    assert_eq!(m.count(Label::Fake), 12);
    assert_eq!(read_manifest(out.join("manifest.jsonl")).unwrap(), m);
    for e in &m.entries {
        assert!(out.join(&e.original_path).is_file());
        let fakes = m.entries.iter().filter(|f| f.image_id == e.image_id && f.label == Label::Fake).count();
        assert_eq!(fakes, 6);
        if e.label == Label::Fake {
            let flow = read_flo(out.join(e.flow_path.as_ref().unwrap())).unwrap();
            assert!(flow.max_magnitude() <= SynthConfig::default().max_displacement);
            let mask = read_msk(out.join(e.mask_path.as_ref().unwrap())).unwrap();
            assert_eq!(mask.dims(), flow.dims());
            assert_eq!(load_image(out.join(e.warped_path.as_ref().unwrap())).unwrap().dims(), flow.dims());
            // every derivative shares its original's split
            assert_eq!(e.split, m.original_of(&e.image_id).unwrap().split);
        }
    }
    let w = balanced_iteration_weights(&m).unwrap();
    assert!(m.entries.iter().zip(&w).all(|(e, &w)| w == if e.label == Label::Real { 6.0 } else { 1.0 }));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let images = corpus(dir.path(), 3, 64);
    generate(&images, &dir.path().join("a"), 2, 9, 1);
    generate(&images, &dir.path().join("b"), 2, 9, 3);
    assert_eq!(tree_bytes(&dir.path().join("a")), tree_bytes(&dir.path().join("b")));
    generate(&images, &dir.path().join("c"), 2, 10, 1);
    assert_ne!(
        fs::read(dir.path().join("a/manifest.jsonl")).unwrap(),
        fs::read(dir.path().join("c/manifest.jsonl")).unwrap()
    );
}

#[test]
fn images_without_landmarks_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let images = corpus(dir.path(), 3, 64);
    let lm = images.join("landmarks.json");
    let mut records = read_landmarks(&lm).unwrap();
    records.retain(|r| !r.image.ends_with("face_0001.png"));
    write_landmarks(&lm, &records).unwrap();
    let m = generate(&images, &dir.path().join("ds"), 1, 0, 1);
    assert_eq!(m.count(Label::Real), 2);
    assert!(m.entries.iter().all(|e| e.image_id != "face_0001"));
}

#[test]
fn oracle_and_zero_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let images = corpus(dir.path(), 2, 128);
    let root = dir.path().join("ds");
    let m = generate(&images, &root, 6, 5, 2);
    let cfg = MetricConfig::default();

    let oracle = write_bundle(&root, &m, Bundle::Oracle, &dir.path().join("oracle"));
    let r = evaluate(&m, &root, &oracle, &cfg).unwrap();
    let d = r.detection.as_ref().unwrap();
    assert_eq!(d.ap, 100.0);
    assert_eq!(d.two_afc, 100.0);
    assert_eq!(d.pairs, 12);
    assert_eq!(d.accuracy_at_threshold.total, 100.0);
    let l = r.localization.as_ref().unwrap();
    assert_eq!(l.epe, 0.0);
    assert!(l.iou_samples > 0);
    assert_eq!(l.iou, Some(1.0));
    assert!(l.delta_psnr > 0.0);

    let zero = write_bundle(&root, &m, Bundle::Zero, &dir.path().join("zero"));
    let r = evaluate(&m, &root, &zero, &cfg).unwrap();
    let l = r.localization.as_ref().unwrap();
    assert_eq!(l.delta_psnr, 0.0);
    assert_eq!(l.iou, Some(0.0));
    assert_eq!(r.detection.as_ref().unwrap().two_afc, 50.0);
}

#[test]
fn shuffled_scores_give_chance_ap() {
    // permutation null: ranks of fakes are a uniform random subset
    let dir = tempfile::tempdir().unwrap();
    let images = corpus(dir.path(), 6, 48);
    let root = dir.path().join("ds");
    let m = generate(&images, &root, 2, 1, 1);
    let n = m.entries.len();
    let k = m.count(Label::Fake);
    let rate = k as f64 / n as f64;
    let null_ap = |perm: &[bool]| {
        let (mut hits, mut sum) = (0.0, 0.0);
        for (i, &fake) in perm.iter().enumerate() {
            if fake {
                hits += 1.0;
                sum += hits / (i + 1) as f64;
            }
        }
        sum / hits
    };
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut labels: Vec<bool> = (0..n).map(|i| i < k).collect();
    let draws: Vec<f64> = (0..4000)
        .map(|_| {
            labels.shuffle(&mut rng);
            null_ap(&labels)
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    for seed in 0..5 {
        let bundle = write_bundle(&root, &m, Bundle::Shuffled(seed), &dir.path().join(format!("s{seed}")));
        let r = evaluate(&m, &root, &bundle, &MetricConfig::default()).unwrap();
        assert!(r.localization.is_none());
        let ap = r.detection.unwrap().ap / 100.0;
        assert!((ap - rate).abs() <= 3.0 * sd, "AP {ap} vs rate {rate} (sd {sd})");
    }
}

#[test]
fn missing_flows_omit_localization() {
    let dir = tempfile::tempdir().unwrap();
    let images = corpus(dir.path(), 1, 48);
    let root = dir.path().join("ds");
    let m = generate(&images, &root, 2, 1, 1);
    let mut bundle = write_bundle(&root, &m, Bundle::Oracle, &dir.path().join("b"));
    let victim = m.entries.iter().find(|e| e.label == Label::Fake).unwrap();
    fs::remove_file(bundle.flow_dir.as_ref().unwrap().join(format!("{}.flo", victim.id))).unwrap();
    let r = evaluate(&m, &root, &bundle, &MetricConfig::default()).unwrap();
    assert!(r.localization.is_none());
    assert!(r.detection.is_some());
    bundle.scores = None;
    assert!(evaluate(&m, &root, &bundle, &MetricConfig::default()).unwrap().detection.is_none());
}

#[test]
fn overlay_and_undo_files() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mesh) = procedural_face(128, 2);
    let cfg = SynthConfig::default();

    let zero = render_overlay(&img, &FlowField::zeros(128, 128), 5.0, &dir.path().join("z.png")).unwrap();
    let gray = img.to_gray();
    for r in 0..128 {
        for c in 0..128 {
            assert!(zero.pixel(r, c).iter().all(|&v| (v - gray.get(r, c, 0)).abs() <= 0.5 / 255.0 + 1e-12));
        }
    }

    let params = FalParams::single(FalParam::MouthHeight, -1.0).unwrap();
    let ex = synthesize_with_params(&img, &mesh, params, &cfg).unwrap();
    let ov = render_overlay(&img, &ex.flow, cfg.max_displacement, &dir.path().join("o.png")).unwrap();
    assert_eq!(ov.dims(), img.dims());
    assert_eq!(load_image(dir.path().join("o.png")).unwrap(), ov);
    // the peak sits at the mouth, where the overlay departs from gray
    let (row, col) = warpforge::flow::flow_magnitude(&ex.flow).argmax();
    let (x0, y0, x1, y1) = mesh.bounding_box(LandmarkGroup::Mouth).unwrap();
    assert!((x0..=x1).contains(&(col as f64)) && (y0..=y1).contains(&(row as f64)));
    assert!(ov.get(row, col, 0) - ov.get(row, col, 2) > 0.2);

    let path = dir.path().join("u.png");
    let undone = render_undo(&ex.warped, &ex.flow, &path).unwrap();
    assert_eq!(load_image(&path).unwrap(), undone);
    let mc = MetricConfig::default();
    assert!(psnr(&img, &undone, &mc).unwrap() > psnr(&img, &ex.warped, &mc).unwrap());
    let copy = render_undo(&ex.warped, &FlowField::zeros(128, 128), &dir.path().join("c.png")).unwrap();
    assert_eq!(copy.to_u8(), ex.warped.to_u8());
}
