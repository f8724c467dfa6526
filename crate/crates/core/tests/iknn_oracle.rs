mod oracle;

use oracle::{iknn_oracle as oracle, random_histogram};
use powerprint::iknn::{fit, knn_predict, IknnConfig, KnnMetric, TrainingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_subgroup_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut queries = 0;
    for split in 0..250 {
        let n_classes = rng.random_range(2..6);
        let dim = rng.random_range(4..20);
        let n = rng.random_range(n_classes..60);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        labels[..n_classes].iter_mut().enumerate().for_each(|(c, l)| *l = c);
        let hist: Vec<Vec<f64>> = (0..n).map(|_| random_histogram(&mut rng, dim)).collect();
        let names = (0..n_classes).map(|c| format!("c{c}")).collect();
        let k = rng.random_range(1..8).min(n);
        let train = TrainingSet::new(names, hist.clone(), labels.clone()).unwrap();
        let model = fit(
            &train,
            IknnConfig {
                k,
                m: Some(1),
                seed: split,
            },
        )
        .unwrap();

        for _ in 0..8 {
            // some queries duplicate a training point to exercise zero distances
            let q = if rng.random_bool(0.25) {
                hist[rng.random_range(0..n)].clone()
            } else {
                random_histogram(&mut rng, dim)
            };
            let got = model.predict(&q).unwrap();
            let (class, ids) = oracle(&hist, &labels, n_classes, &q, k);
            assert_eq!(got.class, class, "split {split}");
            assert_eq!(got.neighbor_ids, ids, "split {split}");
            queries += 1;
        }
    }
    assert_eq!(queries, 2000);
}

#[test]
fn rare_class_weighting_changes_vote() {
    let xs = [1.0, -1.0, 5.0, 6.0, 0.5, 10.0];
    let labels = vec![0, 0, 0, 0, 1, 1];
    let hist: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 0.0]).collect();
    let names = vec!["common".to_string(), "rare".to_string()];
    let train = TrainingSet::new(names, hist.clone(), labels.clone()).unwrap();
    let query = [0.0, 0.0];

    assert_eq!(knn_predict(&train, &query, 3, KnnMetric::Euclidean).unwrap(), 0);
    let model = fit(
        &train,
        IknnConfig {
            k: 3,
            m: Some(1),
            seed: 0,
        },
    )
    .unwrap();
    let p = model.predict(&query).unwrap();
    assert_eq!(p.class, 1);
    assert_eq!(p.label, "rare");
    assert_eq!(oracle(&hist, &labels, 2, &query, 3).0, 1);
}

#[test]
fn cosine_knn_matches_exhaustive_scan() {
    let xs = [3.0, -1.0, 2.0, -4.0, 0.5];
    let labels = vec![0, 1, 0, 1, 1];
    let hist: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let train = TrainingSet::new(vec!["a".into(), "b".into()], hist.clone(), labels.clone()).unwrap();
    for query in [-2.0, 1.0, 7.5] {
        for k in 1..=5 {
            let mut d: Vec<(f64, usize)> = hist
                .iter()
                .enumerate()
                .map(|(i, h)| (1.0 - h[0] * query / (h[0].abs() * f64::abs(query)), i))
                .collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut votes = [0usize; 2];
            for &(_, i) in &d[..k] {
                votes[labels[i]] += 1;
            }
            let expected = usize::from(votes[1] > votes[0]);
            let got = knn_predict(&train, &[query], k, KnnMetric::Cosine).unwrap();
            assert_eq!(got, expected, "query {query} k {k}");
        }
    }
    // query -2 points the same way as the two negative points: b, b, then a (index 0)
    assert_eq!(knn_predict(&train, &[-2.0], 3, KnnMetric::Cosine).unwrap(), 1);
    assert_eq!(knn_predict(&train, &[-2.0], 1, KnnMetric::Euclidean).unwrap(), 1);
}
