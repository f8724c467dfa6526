//! Improved k-nearest neighbors.
//!
//! Training computes class priors and the ensemble entropy, derives one
//! weight per class (rarer classes weigh more), and partitions the training
//! histograms into `m` subgroups by seeded centroid clustering. A query is
//! routed to the subgroup with the nearest centroid; its `k` nearest members
//! under the class-weighted Euclidean distance vote with weight
//! `w_class / (distance + EPSILON)`.
//!
//! Plain KNN baselines live in [`knn_predict`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;
pub const EPSILON: f64 = 1e-9;
pub const MIN_CLASS_WEIGHT: f64 = 0.1;
pub const MAX_CLASS_WEIGHT: f64 = 10.0;
const MAX_ROUNDS: usize = 20;

/// Labeled histograms sharing one length.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    class_names: Vec<String>,
    histograms: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl TrainingSet {
    pub fn new(class_names: Vec<String>, histograms: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if histograms.is_empty() {
            return Err(Error::NoRecords);
        }
        if histograms.len() != labels.len() {
            return Err(Error::Dimension {
                expected: histograms.len(),
                got: labels.len(),
            });
        }
        let dim = histograms[0].len();
        if let Some(h) = histograms.iter().find(|h| h.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: h.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::UnknownClass(format!("class index {l}")));
        }
        Ok(Self {
            class_names,
            histograms,
            labels,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn histograms(&self) -> &[Vec<f64>] {
        &self.histograms
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.histograms[0].len()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.class_names.clone(),
            indices.iter().map(|&i| self.histograms[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IknnConfig {
    pub k: usize,
    /// Subgroup count; `None` picks `max(2, floor(sqrt(M)))`, capped at `M`.
    pub m: Option<usize>,
    pub seed: u64,
}

impl Default for IknnConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            m: None,
            seed: 0,
        }
    }
}

impl IknnConfig {
    pub fn subgroup_count(&self, training_size: usize) -> usize {
        self.m
            .unwrap_or_else(|| ((training_size as f64).sqrt().floor() as usize).max(2))
            .min(training_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IknnModel {
    pub config: IknnConfig,
    pub class_names: Vec<String>,
    pub histograms: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub priors: Vec<f64>,
    pub entropy: f64,
    pub class_weights: Vec<f64>,
    /// Training indices of each subgroup, ascending.
    pub subgroups: Vec<Vec<usize>>,
    pub centroids: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub label: String,
    /// Winning vote mass.
    pub score: f64,
    pub neighbor_ids: Vec<usize>,
}

/// `(priors, entropy)` of the label distribution, entropy in bits.
pub fn class_priors(labels: &[usize], n_classes: usize) -> (Vec<f64>, f64) {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let total = labels.len() as f64;
    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let entropy = -priors.iter().filter(|&&a| a > 0.0).map(|&a| a * a.log2()).sum::<f64>();
    (priors, entropy)
}

/// `-log2(a_c) / E`, clamped to `[MIN_CLASS_WEIGHT, MAX_CLASS_WEIGHT]`.
pub fn class_weights(priors: &[f64], entropy: f64) -> Vec<f64> {
    priors
        .iter()
        .map(|&a| (-a.log2() / entropy).clamp(MIN_CLASS_WEIGHT, MAX_CLASS_WEIGHT))
        .collect()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn argmin_distance(centroids: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (g, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, x);
        if d < best_d {
            best = g;
            best_d = d;
        }
    }
    best
}

fn mean_of(histograms: &[Vec<f64>], members: &[usize], dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    for &i in members {
        for (s, v) in sum.iter_mut().zip(&histograms[i]) {
            *s += v;
        }
    }
    let n = members.len() as f64;
    sum.iter().map(|s| s / n).collect()
}

/// Farthest-point seeded centroid clustering. Returns one group id per point;
/// every group ends up non-empty.
fn partition(histograms: &[Vec<f64>], m: usize, seed: u64) -> Vec<usize> {
    let n = histograms.len();
    let dim = histograms[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = histograms
        .iter()
        .map(|h| squared_distance(h, &histograms[chosen[0]]))
        .collect();
    while chosen.len() < m {
        let mut next = usize::MAX;
        let mut far = f64::NEG_INFINITY;
        for (i, &d) in nearest.iter().enumerate() {
            if d > far && !chosen.contains(&i) {
                next = i;
                far = d;
            }
        }
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(&histograms[i], &histograms[next]));
        }
    }
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&i| histograms[i].clone()).collect();

    let mut assignment = vec![usize::MAX; n];
    for _ in 0..MAX_ROUNDS {
        let mut next: Vec<usize> = histograms.iter().map(|h| argmin_distance(&centroids, h)).collect();
        let mut sizes = vec![0usize; m];
        for &g in &next {
            sizes[g] += 1;
        }
        for g in 0..m {
            if sizes[g] > 0 {
                continue;
            }
            // move the point farthest from its own centroid into the empty group
            let mut pick = usize::MAX;
            let mut far = f64::NEG_INFINITY;
            for (i, h) in histograms.iter().enumerate() {
                let d = squared_distance(h, &centroids[next[i]]);
                if sizes[next[i]] > 1 && d > far {
                    pick = i;
                    far = d;
                }
            }
            sizes[next[pick]] -= 1;
            next[pick] = g;
            sizes[g] = 1;
        }
        let converged = next == assignment;
        assignment = next;
        for (g, c) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == g).collect();
            *c = mean_of(histograms, &members, dim);
        }
        if converged {
            break;
        }
    }
    assignment
}

pub fn fit(train: &TrainingSet, cfg: IknnConfig) -> Result<IknnModel> {
    let n = train.len();
    let n_classes = train.class_names.len();
    let (priors, entropy) = class_priors(&train.labels, n_classes);
    let present = priors.iter().filter(|&&a| a > 0.0).count();
    if present < 2 {
        return Err(Error::TooFewClasses(present));
    }
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::InvalidConfig(format!("k must be in 1..={n}, got {}", cfg.k)));
    }
    let m = cfg.subgroup_count(n);
    if m == 0 || m > n {
        return Err(Error::InvalidConfig(format!("m must be in 1..={n}, got {m}")));
    }
    let class_weights = class_weights(&priors, entropy);

    let assignment = partition(&train.histograms, m, cfg.seed);
    let subgroups: Vec<Vec<usize>> = (0..m)
        .map(|g| (0..n).filter(|&i| assignment[i] == g).collect())
        .collect();
    let centroids = subgroups
        .iter()
        .map(|members| mean_of(&train.histograms, members, train.dim()))
        .collect();

    Ok(IknnModel {
        config: cfg,
        class_names: train.class_names.clone(),
        histograms: train.histograms.clone(),
        labels: train.labels.clone(),
        priors,
        entropy,
        class_weights,
        subgroups,
        centroids,
    })
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// First class with the largest vote.
fn argmax(votes: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    (best, votes[best])
}

impl IknnModel {
    pub fn dim(&self) -> usize {
        self.histograms[0].len()
    }

    pub fn training_size(&self) -> usize {
        self.histograms.len()
    }

    fn check_dim(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: query.len(),
            });
        }
        Ok(())
    }

    /// Subgroup whose centroid is closest; ties go to the lowest id.
    pub fn nearest_subgroup(&self, query: &[f64]) -> Result<usize> {
        self.check_dim(query)?;
        Ok(argmin_distance(&self.centroids, query))
    }

    pub fn weighted_distance(&self, train_index: usize, query: &[f64]) -> f64 {
        self.class_weights[self.labels[train_index]].sqrt() * euclidean(&self.histograms[train_index], query)
    }

    pub fn predict(&self, query: &[f64]) -> Result<Prediction> {
        let g = self.nearest_subgroup(query)?;
        let mut ranked: Vec<(f64, usize)> = self.subgroups[g]
            .iter()
            .map(|&i| (self.weighted_distance(i, query), i))
            .collect();
        ranked.sort_by(by_distance_then_index);
        ranked.truncate(self.config.k);

        let mut votes = vec![0.0; self.class_names.len()];
        for &(wd, i) in &ranked {
            let c = self.labels[i];
            votes[c] += self.class_weights[c] / (wd + EPSILON);
        }
        let (class, score) = argmax(&votes);
        Ok(Prediction {
            class,
            label: self.class_names[class].clone(),
            score,
            neighbor_ids: ranked.iter().map(|&(_, i)| i).collect(),
        })
    }

    /// Predictions in query order; queries are spread over the rayon pool.
    pub fn predict_batch(&self, queries: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        use rayon::prelude::*;
        queries.par_iter().map(|q| self.predict(q)).collect()
    }

    /// The same model with every class weight multiplied by `factor`.
    pub fn with_scaled_weights(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.class_weights.iter_mut().for_each(|w| *w *= factor);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMetric {
    /// Euclidean distance, one vote per neighbor.
    Euclidean,
    /// `1 - cosine similarity`, one vote per neighbor.
    Cosine,
    /// Euclidean distance, votes weighted by `1 / (distance + EPSILON)`.
    WeightedEuclidean,
}

impl KnnMetric {
    pub fn name(self) -> &'static str {
        match self {
            KnnMetric::Euclidean => "euclidean",
            KnnMetric::Cosine => "cosine",
            KnnMetric::WeightedEuclidean => "weighted-euclidean",
        }
    }
}

impl fmt::Display for KnnMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KnnMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(KnnMetric::Euclidean),
            "cosine" => Ok(KnnMetric::Cosine),
            "weighted-euclidean" => Ok(KnnMetric::WeightedEuclidean),
            _ => Err(Error::InvalidConfig(format!(
                "unknown metric {s:?}; expected euclidean, cosine or weighted-euclidean"
            ))),
        }
    }
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot / (na * nb)
}

/// Conventional KNN over the whole training set. Returns the class index.
pub fn knn_predict(train: &TrainingSet, query: &[f64], k: usize, metric: KnnMetric) -> Result<usize> {
    if query.len() != train.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: query.len(),
        });
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidConfig(format!(
            "k must be in 1..={}, got {k}",
            train.len()
        )));
    }
    let mut ranked: Vec<(f64, usize)> = train
        .histograms
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let d = match metric {
                KnnMetric::Cosine => cosine_distance(h, query),
                _ => euclidean(h, query),
            };
            (d, i)
        })
        .collect();
    ranked.sort_by(by_distance_then_index);
    ranked.truncate(k);
    let mut votes = vec![0.0; train.class_names.len()];
    for &(d, i) in &ranked {
        votes[train.labels[i]] += match metric {
            KnnMetric::WeightedEuclidean => 1.0 / (d + EPSILON),
            _ => 1.0,
        };
    }
    Ok(argmax(&votes).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn set(points: &[(&[f64], usize)], n_classes: usize) -> TrainingSet {
        TrainingSet::new(
            names(n_classes),
            points.iter().map(|(p, _)| p.to_vec()).collect(),
            points.iter().map(|(_, l)| *l).collect(),
        )
        .unwrap()
    }

    #[test]
    fn balanced_two_classes() {
        let (a, e) = class_priors(&[0, 1, 0, 1], 2);
        assert_eq!(a, [0.5, 0.5]);
        assert_eq!(e, 1.0);
        assert_eq!(class_weights(&a, e), [1.0, 1.0]);
    }

    #[test]
    fn four_class_entropy() {
        let mut labels = Vec::new();
        for (c, n) in [4, 3, 2, 1].iter().enumerate() {
            labels.extend(std::iter::repeat_n(c, *n));
        }
        let (a, e) = class_priors(&labels, 4);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((e - 1.84644).abs() < 1e-4);
        let w = class_weights(&a, e);
        assert!(w.windows(2).all(|p| p[0] < p[1]), "rarer classes weigh more: {w:?}");
    }

    #[test]
    fn absent_class_weight_is_clamped() {
        let (a, e) = class_priors(&[0, 1, 1], 3);
        let w = class_weights(&a, e);
        assert_eq!(w[2], MAX_CLASS_WEIGHT);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn single_class_rejected() {
        let t = set(&[(&[0.0], 0), (&[1.0], 0)], 1);
        assert!(matches!(fit(&t, IknnConfig::default()), Err(Error::TooFewClasses(1))));
        let t = set(&[(&[0.0], 0), (&[1.0], 0)], 2);
        assert!(matches!(
            fit(
                &t,
                IknnConfig {
                    k: 1,
                    ..Default::default()
                }
            ),
            Err(Error::TooFewClasses(1))
        ));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let r = TrainingSet::new(names(2), vec![vec![0.0, 1.0], vec![1.0]], vec![0, 1]);
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn k_larger_than_training_rejected() {
        let t = set(&[(&[0.0], 0), (&[1.0], 1)], 2);
        assert!(fit(
            &t,
            IknnConfig {
                k: 3,
                m: Some(1),
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn nearest_subgroup_ties_and_exact_hits() {
        let t = set(&[(&[0.0], 0), (&[1.0], 1), (&[2.0], 0), (&[3.0], 1)], 2);
        let mut model = fit(
            &t,
            IknnConfig {
                k: 1,
                m: Some(1),
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(model.nearest_subgroup(&[10.0]).unwrap(), 0);
        model.centroids = vec![vec![5.0], vec![0.0], vec![9.0], vec![2.0]];
        assert_eq!(model.nearest_subgroup(&[9.0]).unwrap(), 2);
        // equidistant from centroids 1 and 3
        assert_eq!(model.nearest_subgroup(&[1.0]).unwrap(), 1);
        assert!(model.nearest_subgroup(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_match_k1() {
        let t = set(&[(&[0.0, 1.0], 0), (&[1.0, 0.0], 1), (&[0.5, 0.5], 1)], 2);
        let model = fit(
            &t,
            IknnConfig {
                k: 1,
                m: Some(1),
                seed: 0,
            },
        )
        .unwrap();
        let p = model.predict(&[1.0, 0.0]).unwrap();
        assert_eq!(p.label, "c1");
        assert_eq!(p.neighbor_ids, [1]);
        assert!(p.score > 0.0);
    }

    #[test]
    fn unanimous_neighbors() {
        let t = set(&[(&[0.0], 0), (&[0.1], 0), (&[0.2], 0), (&[5.0], 1), (&[5.1], 1)], 2);
        let model = fit(
            &t,
            IknnConfig {
                k: 3,
                m: Some(1),
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(model.predict(&[0.05]).unwrap().class, 0);
    }

    #[test]
    fn subgroup_smaller_than_k() {
        let t = set(
            &[(&[0.0], 0), (&[0.1], 1), (&[100.0], 0), (&[100.1], 1), (&[100.2], 1)],
            2,
        );
        let model = fit(
            &t,
            IknnConfig {
                k: 5,
                m: Some(2),
                seed: 0,
            },
        )
        .unwrap();
        let g = model.nearest_subgroup(&[0.0]).unwrap();
        assert_eq!(model.subgroups[g], [0, 1]);
        let p = model.predict(&[0.0]).unwrap();
        assert_eq!(p.neighbor_ids.len(), 2);
    }

    #[test]
    fn knn_baselines() {
        let t = set(
            &[(&[1.0, 0.0], 0), (&[0.0, 1.0], 1), (&[2.0, 0.1], 0), (&[0.1, 3.0], 1)],
            2,
        );
        for metric in [KnnMetric::Euclidean, KnnMetric::Cosine, KnnMetric::WeightedEuclidean] {
            assert_eq!(knn_predict(&t, &[1.0, 0.0], 1, metric).unwrap(), 0);
            assert_eq!(knn_predict(&t, &[0.0, 2.0], 1, metric).unwrap(), 1);
            assert_eq!(metric.name().parse::<KnnMetric>().unwrap(), metric);
        }
        assert!(knn_predict(&t, &[1.0], 1, KnnMetric::Cosine).is_err());
        assert!(knn_predict(&t, &[1.0, 0.0], 5, KnnMetric::Cosine).is_err());
    }

    #[test]
    fn knn_vote_tie_goes_to_first_class() {
        let t = set(&[(&[1.0], 1), (&[-1.0], 0)], 2);
        assert_eq!(knn_predict(&t, &[0.0], 2, KnnMetric::Euclidean).unwrap(), 0);
    }

    fn arb_training() -> impl Strategy<Value = TrainingSet> {
        (2usize..4, 6usize..40, 1usize..5).prop_flat_map(|(classes, n, dim)| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), n),
                prop::collection::vec(0..classes, n),
            )
                .prop_filter_map("need two classes", move |(h, mut l)| {
                    l[0] = 0;
                    l[1] = 1;
                    TrainingSet::new(names(classes), h, l).ok()
                })
        })
    }

    proptest! {
        #[test]
        fn partition_covers_and_centroids_are_means(t in arb_training(), m in 1usize..8, seed: u64) {
            let m = m.min(t.len());
            let model = fit(&t, IknnConfig { k: 1, m: Some(m), seed }).unwrap();
            let mut all: Vec<usize> = model.subgroups.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..t.len()).collect::<Vec<_>>());
            for (g, members) in model.subgroups.iter().enumerate() {
                prop_assert!(!members.is_empty());
                prop_assert_eq!(&model.centroids[g], &mean_of(&t.histograms, members, t.dim()));
            }
            let e = model.entropy;
            prop_assert!(e >= 0.0 && e <= (t.class_names.len() as f64).log2() + 1e-12);
        }

        #[test]
        fn fit_is_deterministic(t in arb_training(), seed: u64) {
            let cfg = IknnConfig { k: 3.min(t.len()), m: None, seed };
            prop_assert_eq!(fit(&t, cfg).unwrap(), fit(&t, cfg).unwrap());
        }

        #[test]
        fn weight_scale_invariance(t in arb_training(), q in prop::collection::vec(0.0f64..1.0, 4), factor in 0.05f64..20.0) {
            let model = fit(&t, IknnConfig { k: 3.min(t.len()), m: None, seed: 1 }).unwrap();
            let q = &q[..t.dim().min(q.len())];
            prop_assume!(q.len() == t.dim());
            let scaled = model.with_scaled_weights(factor);
            prop_assert_eq!(model.predict(q).unwrap().class, scaled.predict(q).unwrap().class);
        }
    }
}
