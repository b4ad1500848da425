mod common;

use common::{check_script, seeded_store};
use trackbox::synth::rng;
use trackbox::{AnnotationStore, Box3D, ClassLabel, Vec3};

#[test]
fn random_scripts_match_net_replay() {
    let mut totals = (0, 0, 0);
    for seed in 0..200 {
        let mut r = rng(seed);
        let initial = seeded_store(&mut r, 12);
        let stats = check_script(&mut r, &initial, 12, 100).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        totals.0 += stats.applied;
        totals.1 += stats.undos;
        totals.2 += stats.redos;
    }
    // the generator must actually exercise the history
    assert!(totals.0 > 5000 && totals.1 > 1000 && totals.2 > 150, "{totals:?}");
}

#[test]
fn create_then_undo_keeps_counter() {
    let mut s = AnnotationStore::new("s", 3);
    let b = Box3D::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), 0.0, ClassLabel::Car, 0).unwrap();
    assert_eq!(s.create_annotation(0, b).unwrap(), 0);
    s.undo().unwrap();
    assert!(s.get(0, 0).is_none());
    assert_eq!(s.next_track_id(), 1);
    assert_eq!(s.create_annotation(0, b).unwrap(), 1);
}

#[test]
fn keyframes_survive_interpolation_untouched() {
    let mut r = rng(5);
    for _ in 0..50 {
        let mut s = AnnotationStore::new("s", 30);
        let b = common::any_box(&mut r, 0);
        let t = s.create_annotation(0, b).unwrap();
        let mut keys = vec![0u32];
        for f in [7u32, 13, 21, 29] {
            let mut k = common::any_box(&mut r, t);
            k.class_label = b.class_label;
            s.place_keyframe(f, t, k).unwrap();
            keys.push(f);
        }
        let before: Vec<Box3D> = keys.iter().map(|&f| *s.get(f, t).unwrap()).collect();
        assert_eq!(s.interpolate_range(t, 0, 29).unwrap(), 30 - keys.len());
        let after: Vec<Box3D> = keys.iter().map(|&f| *s.get(f, t).unwrap()).collect();
        assert_eq!(before, after);
    }
}
