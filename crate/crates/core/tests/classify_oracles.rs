mod common;

use pivotal::classify::{
    auc, loss_and_gradient, ovr_report, predict_proba, roc_curve, stratified_split, train,
    youden_cutoff, FeatureMatrix, LinearModel, TrainParams,
};
use pivotal::cohort::Group;
use pivotal::linalg::Mat;
use proptest::prelude::*;
use rand::Rng;

/// Mann–Whitney pair count with ties as ½.
fn pair_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            den += 1.0;
            num += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    num / den
}

fn random_case(rng: &mut rand_chacha::ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..=200);
    let coarse = rng.random_bool(0.5);
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = (0..n)
        .map(|_| {
            let s: f64 = rng.random();
            if coarse { (s * 10.0).floor() / 10.0 } else { s }
        })
        .collect();
    (scores, labels)
}

#[test]
fn trapezoid_equals_pair_counting() {
    let mut rng = common::rng(51);
    for _ in 0..1000 {
        let (s, l) = random_case(&mut rng);
        let c = roc_curve(&s, &l, "x").unwrap();
        assert!((auc(&c) - pair_auc(&s, &l)).abs() <= 1e-12);
        let flipped: Vec<bool> = l.iter().map(|b| !b).collect();
        let cf = roc_curve(&s, &flipped, "x").unwrap();
        assert!((auc(&c) + auc(&cf) - 1.0).abs() <= 1e-12);
        assert_eq!(c.points[0], (0.0, 0.0));
        assert_eq!(*c.points.last().unwrap(), (1.0, 1.0));
        assert!(c.points.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    }
}

#[test]
fn monotone_transform_keeps_auc() {
    let mut rng = common::rng(52);
    for _ in 0..100 {
        let (s, l) = random_case(&mut rng);
        let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
        let a = auc(&roc_curve(&s, &l, "x").unwrap());
        let b = auc(&roc_curve(&t, &l, "x").unwrap());
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn youden_matches_exhaustive_sweep() {
    let mut rng = common::rng(53);
    for _ in 0..300 {
        let (s, l) = random_case(&mut rng);
        let (thr, j) = youden_cutoff(&roc_curve(&s, &l, "x").unwrap());
        let pos = l.iter().filter(|&&b| b).count() as f64;
        let neg = l.len() as f64 - pos;
        let mut cands: Vec<f64> = s.clone();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup();
        let mut best = (f64::INFINITY, 0.0);
        for &t in cands.iter().rev() {
            let tp = s.iter().zip(&l).filter(|(x, y)| **x >= t && **y).count() as f64;
            let fp = s.iter().zip(&l).filter(|(x, y)| **x >= t && !**y).count() as f64;
            let jt = tp / pos - fp / neg;
            if jt >= best.1 {
                best = (t, jt);
            }
        }
        assert!((j - best.1).abs() <= 1e-12);
        assert_eq!(thr, best.0);
        assert!((0.0..=1.0).contains(&j));
    }
}

#[test]
fn gradient_check_random_instances() {
    let mut rng = common::rng(54);
    for _ in 0..25 {
        let n = rng.random_range(3..15);
        let p = rng.random_range(1..6);
        let x = Mat::from_fn(n, p, |_, _| common::normal(&mut rng));
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let w = Mat::from_fn(3, p + 1, |_, _| 0.5 * common::normal(&mut rng));
        let l2: f64 = rng.random_range(0.0..2.0);
        let (_, g) = loss_and_gradient(&w, &x, &y, l2);
        let h = 1e-5;
        for i in 0..3 {
            for j in 0..=p {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp.row_mut(i)[j] += h;
                wm.row_mut(i)[j] -= h;
                let fd = (loss_and_gradient(&wp, &x, &y, l2).0 - loss_and_gradient(&wm, &x, &y, l2).0)
                    / (2.0 * h);
                let scale = fd.abs().max(g[(i, j)].abs()).max(1.0);
                assert!((fd - g[(i, j)]).abs() <= 1e-6 * scale, "{fd} vs {}", g[(i, j)]);
            }
        }
    }
}

fn features(rows: Vec<Vec<f64>>, labels: Vec<Group>) -> FeatureMatrix<f64> {
    let p = rows[0].len();
    FeatureMatrix {
        rows: Mat::from_rows(&rows).unwrap(),
        patient_ids: (0..labels.len()).map(|i| format!("p{i}")).collect(),
        labels,
        feature_names: (0..p).map(|j| format!("f{j}")).collect(),
    }
}

#[test]
fn separable_two_class_toy_set() {
    let f = features(
        vec![vec![0.0, 0.1], vec![0.2, 0.0], vec![1.0, 0.9], vec![0.9, 1.1]],
        vec![Group::Ad, Group::Ad, Group::Cn, Group::Cn],
    );
    let m = train(&f, &TrainParams::default()).unwrap();
    let p = predict_proba(&m, &f.rows).unwrap();
    for (i, g) in f.labels.iter().enumerate() {
        let row = p.row(i);
        let best = (0..3).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
        assert_eq!(best, g.class_index());
    }
    assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn identical_rows_predict_priors_and_half_auc() {
    let labels: Vec<Group> = (0..30).map(|i| Group::ALL[i % 3]).collect();
    let f = features(vec![vec![0.3, 0.3, 0.3]; 30], labels.clone());
    let m = train(&f, &TrainParams::default()).unwrap();
    let p = predict_proba(&m, &f.rows).unwrap();
    let r = ovr_report(&p, &labels, 0).unwrap();
    assert!(r.per_class_auc.values().all(|&a| a == 0.5));
    for c in 0..3 {
        assert!((p[(0, c)] - 1.0 / 3.0).abs() < 1e-6);
    }
}

fn zero_model(p: usize) -> LinearModel<f64> {
    LinearModel {
        weights: Mat::zeros(3, p + 1),
        means: vec![0.0; p],
        stds: vec![1.0; p],
        kept_columns: (0..p).collect(),
        dropped_columns: vec![],
        n_features_in: p,
        params: TrainParams::default(),
        loss_trace: vec![],
    }
}

#[test]
fn zero_model_is_uniform_and_positive_weight_is_monotone() {
    let mut rng = common::rng(55);
    let x = Mat::from_fn(20, 4, |_, _| common::normal(&mut rng));
    let p = predict_proba(&zero_model(4), &x).unwrap();
    assert!(p.as_slice().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));

    let mut m = zero_model(4);
    m.weights = Mat::from_fn(3, 5, |_, _| common::normal(&mut rng));
    m.weights.row_mut(1)[2] = 1.5;
    m.weights.row_mut(0)[2] = -0.5;
    m.weights.row_mut(2)[2] = 0.0;
    for i in 0..20 {
        let row = x.row(i).to_vec();
        let mut bumped = row.clone();
        bumped[2] += 0.25;
        let base = predict_proba(&m, &Mat::from_rows(&[row]).unwrap()).unwrap();
        let up = predict_proba(&m, &Mat::from_rows(&[bumped]).unwrap()).unwrap();
        assert!(up[(0, 1)] > base[(0, 1)]);
        let sum: f64 = up.row(0).iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn report_matches_recount() {
    let mut rng = common::rng(56);
    let n = 60;
    let labels: Vec<Group> = (0..n).map(|i| Group::ALL[(i * 7) % 3]).collect();
    let probs = Mat::from_fn(n, 3, |_, _| rng.random::<f64>());
    let r = ovr_report(&probs, &labels, 9).unwrap();
    let mut pooled_s = Vec::new();
    let mut pooled_l = Vec::new();
    let mut sum = 0.0;
    for g in Group::ALL {
        let s: Vec<f64> = (0..n).map(|i| probs[(i, g.class_index())]).collect();
        let l: Vec<bool> = labels.iter().map(|&x| x == g).collect();
        let a = pair_auc(&s, &l);
        assert!((r.per_class_auc[&g] - a).abs() <= 1e-12);
        sum += a;
        pooled_s.extend(s);
        pooled_l.extend(l);
    }
    assert!((r.macro_auc - sum / 3.0).abs() <= 1e-12);
    assert!((r.micro_auc - pair_auc(&pooled_s, &pooled_l)).abs() <= 1e-12);
    for g in Group::ALL {
        let c = r.confusion[&g];
        assert_eq!(c.tp + c.fp + c.tn + c.fn_, n);
    }
}

#[test]
fn uniform_probabilities_give_half() {
    let labels: Vec<Group> = (0..12).map(|i| Group::ALL[i % 3]).collect();
    let p = Mat::from_fn(12, 3, |_, _| 1.0 / 3.0);
    let r = ovr_report(&p, &labels, 0).unwrap();
    assert!(r.per_class_auc.values().all(|&a| a == 0.5));
    assert_eq!(r.macro_auc, 0.5);
}

#[test]
fn perfect_probabilities_give_unit_j() {
    let labels: Vec<Group> = (0..12).map(|i| Group::ALL[i % 3]).collect();
    let p = Mat::from_fn(12, 3, |i, c| if labels[i].class_index() == c { 1.0 } else { 0.0 });
    let r = ovr_report(&p, &labels, 0).unwrap();
    assert_eq!(r.micro_auc, 1.0);
    assert!(r.youden.values().all(|y| y.j == 1.0));
}

proptest! {
    #[test]
    fn split_is_a_stratified_partition(
        sizes in prop::array::uniform3(2usize..60),
        frac in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let labels: Vec<Group> = Group::ALL
            .iter()
            .zip(sizes)
            .flat_map(|(&g, n)| std::iter::repeat_n(g, n))
            .collect();
        let s = stratified_split(&labels, frac, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (g, n) in Group::ALL.iter().zip(sizes) {
            let k = s.train.iter().filter(|&&i| labels[i] == *g).count() as f64;
            prop_assert!((k - frac * n as f64).abs() < 1.0);
        }
    }
}
