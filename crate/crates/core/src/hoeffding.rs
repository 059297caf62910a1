//! Incremental three-class Hoeffding tree (VFDT) over numeric attributes.
//!
//! Each leaf keeps per-class Gaussian summaries of every attribute. Every
//! `grace_period` instances a leaf evaluates binary splits at equal-frequency
//! cut points of the pooled Gaussian mixture and splits when the Hoeffding
//! bound separates the best attribute from the runner-up, or when the bound
//! has shrunk below the tie threshold.
//!
//! Splitting is done in place: the two new leaves inherit the parent's class
//! counts, divided according to the estimated split distribution, so the
//! total count over all leaves always equals the number of instances seen.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{argmax_label, DelayLabel, FeatureVector};
use crate::model::{Prediction, StreamModel};

/// Range of information gain for three classes, `log2(3)`.
pub const GAIN_RANGE: f64 = 1.584_962_500_721_156;

const NB_SD_FLOOR: f64 = 1e-3;
const BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafPrediction {
    #[default]
    MajorityClass,
    NaiveBayes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HtConfig {
    /// Split confidence δ.
    pub delta: f64,
    pub grace_period: u64,
    /// Tie threshold τ.
    pub tie_threshold: f64,
    pub leaf_prediction: LeafPrediction,
    /// Candidate thresholds evaluated per attribute.
    pub numeric_bins: usize,
}

impl Default for HtConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            grace_period: 200,
            tie_threshold: 0.05,
            leaf_prediction: LeafPrediction::MajorityClass,
            numeric_bins: 10,
        }
    }
}

impl HtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("ht.delta must be in (0,1), got {}", self.delta)));
        }
        if self.grace_period == 0 {
            return Err(Error::InvalidConfig("ht.grace_period must be >= 1".into()));
        }
        if !(self.tie_threshold >= 0.0) {
            return Err(Error::InvalidConfig("ht.tie_threshold must be >= 0".into()));
        }
        if self.numeric_bins == 0 {
            return Err(Error::InvalidConfig("ht.numeric_bins must be >= 1".into()));
        }
        Ok(())
    }
}

/// `ε = sqrt(R² ln(1/δ) / 2n)`.
pub fn hoeffding_bound(range: f64, delta: f64, n: u64) -> f64 {
    (range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn entropy(counts: &[f64; 3]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

fn split_gain(parent: &[f64; 3], left: &[f64; 3], right: &[f64; 3]) -> f64 {
    let total: f64 = parent.iter().sum();
    let wl: f64 = left.iter().sum::<f64>() / total;
    let wr: f64 = right.iter().sum::<f64>() / total;
    let gain = entropy(parent) - wl * entropy(left) - wr * entropy(right);
    gain.clamp(0.0, GAIN_RANGE)
}

/// Entropy reduction (base 2) of splitting `parent` into `left` and `right`.
pub fn info_gain(parent: [u64; 3], left: [u64; 3], right: [u64; 3]) -> Result<f64> {
    for c in 0..3 {
        if left[c] + right[c] != parent[c] {
            return Err(Error::CountMismatch(format!("class {c}: {} + {} != {}", left[c], right[c], parent[c])));
        }
    }
    if parent.iter().sum::<u64>() == 0 {
        return Err(Error::CountMismatch("parent is empty".into()));
    }
    let f = |a: [u64; 3]| a.map(|v| v as f64);
    Ok(split_gain(&f(parent), &f(left), &f(right)))
}

/// Running mean/variance (Welford) with observed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianObserver {
    pub count: u64,
    pub mean: f64,
    m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for GaussianObserver {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl GaussianObserver {
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        if self.m2 < 0.0 {
            self.m2 = 0.0;
        }
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Estimated fraction of this class's values that are `<= x`.
    fn fraction_at_or_below(&self, x: f64) -> f64 {
        if self.count == 0 || x < self.min {
            return 0.0;
        }
        if x >= self.max {
            return 1.0;
        }
        let sd = self.std_dev();
        if sd <= 0.0 {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        let z = (x - self.mean) / sd;
        0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
    }

    fn log_density(&self, x: f64) -> f64 {
        let sd = self.std_dev().max(NB_SD_FLOOR);
        let z = (x - self.mean) / sd;
        -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Per-class Gaussian summaries of one attribute.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeObserver {
    pub per_class: [GaussianObserver; 3],
}

impl AttributeObserver {
    fn update(&mut self, x: f64, y: DelayLabel) {
        self.per_class[y.index()].update(x);
    }

    fn range(&self) -> Option<(f64, f64)> {
        let live = self.per_class.iter().filter(|g| g.count > 0);
        let (lo, hi) = live.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g.min), hi.max(g.max)));
        (lo < hi).then_some((lo, hi))
    }

    fn pooled_fraction(&self, x: f64) -> f64 {
        let total: u64 = self.per_class.iter().map(|g| g.count).sum();
        let below: f64 = self.per_class.iter().map(|g| g.count as f64 * g.fraction_at_or_below(x)).sum();
        below / total as f64
    }

    /// Equal-frequency cut points of the pooled mixture, ascending, strictly
    /// inside the observed range.
    pub fn candidate_thresholds(&self, bins: usize) -> Vec<f64> {
        let Some((lo, hi)) = self.range() else {
            return Vec::new();
        };
        let mut cuts: Vec<f64> = (1..=bins)
            .map(|j| {
                let q = j as f64 / (bins + 1) as f64;
                let (mut a, mut b) = (lo, hi);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (a + b);
                    if self.pooled_fraction(mid) < q {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                b
            })
            .filter(|t| *t < hi)
            .collect();
        cuts.dedup();
        cuts
    }

    /// Estimated class counts falling at or below `threshold`.
    pub fn left_distribution(&self, threshold: f64) -> [f64; 3] {
        std::array::from_fn(|c| {
            let g = &self.per_class[c];
            g.count as f64 * g.fraction_at_or_below(threshold)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitDecision {
    NoSplit,
    Split { attribute: usize, threshold: f64 },
}

/// Sufficient statistics held by a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafStats {
    /// Instances attributed to this leaf, including the share inherited
    /// from its parent at split time.
    pub class_counts: [u64; 3],
    pub observers: Vec<AttributeObserver>,
    since_attempt: u64,
}

impl LeafStats {
    pub fn new(arity: usize) -> Self {
        Self::with_counts(arity, [0; 3])
    }

    fn with_counts(arity: usize, class_counts: [u64; 3]) -> Self {
        Self {
            class_counts,
            observers: vec![AttributeObserver::default(); arity],
            since_attempt: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.class_counts.iter().sum()
    }

    /// Per-class counts seen by the observers since the leaf was created.
    pub fn observed_counts(&self) -> [u64; 3] {
        match self.observers.first() {
            Some(o) => std::array::from_fn(|c| o.per_class[c].count),
            None => [0; 3],
        }
    }

    pub fn absorb(&mut self, x: &FeatureVector, y: DelayLabel) {
        self.class_counts[y.index()] += 1;
        for (obs, &v) in self.observers.iter_mut().zip(x.values()) {
            obs.update(v, y);
        }
        self.since_attempt += 1;
    }

    pub fn scores(&self, x: &FeatureVector, mode: LeafPrediction) -> [f64; 3] {
        let total = self.total();
        if total == 0 {
            return [1.0 / 3.0; 3];
        }
        let observed = self.observed_counts();
        if mode == LeafPrediction::NaiveBayes && observed.iter().sum::<u64>() > 0 {
            return self.naive_bayes_scores(x, &observed);
        }
        self.class_counts.map(|c| c as f64 / total as f64)
    }

    fn naive_bayes_scores(&self, x: &FeatureVector, observed: &[u64; 3]) -> [f64; 3] {
        let n: u64 = observed.iter().sum();
        let log_post: [f64; 3] = std::array::from_fn(|c| {
            if observed[c] == 0 {
                return f64::NEG_INFINITY;
            }
            let prior = (observed[c] as f64 / n as f64).ln();
            self.observers
                .iter()
                .zip(x.values())
                .map(|(o, &v)| o.per_class[c].log_density(v))
                .sum::<f64>()
                + prior
        });
        let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp = log_post.map(|l| (l - max).exp());
        let sum: f64 = exp.iter().sum();
        exp.map(|e| e / sum)
    }

    pub fn attempt_split(&self, cfg: &HtConfig) -> SplitDecision {
        let observed = self.observed_counts();
        let n: u64 = observed.iter().sum();
        if n == 0 || observed.iter().filter(|&&c| c > 0).count() < 2 {
            return SplitDecision::NoSplit;
        }
        let parent = observed.map(|c| c as f64);

        // best (gain, threshold) per attribute; equal gains keep the lower threshold
        let per_attribute: Vec<Option<(f64, f64)>> = self
            .observers
            .iter()
            .map(|obs| {
                let mut best: Option<(f64, f64)> = None;
                for thr in obs.candidate_thresholds(cfg.numeric_bins) {
                    let left = obs.left_distribution(thr);
                    let right: [f64; 3] = std::array::from_fn(|c| (parent[c] - left[c]).max(0.0));
                    let gain = split_gain(&parent, &left, &right);
                    if best.is_none_or(|(g, _)| gain > g) {
                        best = Some((gain, thr));
                    }
                }
                best
            })
            .collect();

        let mut best: Option<(usize, f64, f64)> = None;
        for (attr, cand) in per_attribute.iter().enumerate() {
            if let Some((gain, thr)) = *cand {
                if best.is_none_or(|(_, g, _)| gain > g) {
                    best = Some((attr, gain, thr));
                }
            }
        }
        let Some((attribute, best_gain, threshold)) = best else {
            return SplitDecision::NoSplit;
        };
        if best_gain <= 0.0 {
            return SplitDecision::NoSplit;
        }
        // runner-up is the best other attribute, or the null split (gain 0)
        let second_gain = per_attribute
            .iter()
            .enumerate()
            .filter(|(a, _)| *a != attribute)
            .filter_map(|(_, c)| c.map(|(g, _)| g))
            .fold(0.0, f64::max);

        let eps = hoeffding_bound(GAIN_RANGE, cfg.delta, n);
        if best_gain - second_gain > eps || eps < cfg.tie_threshold {
            SplitDecision::Split { attribute, threshold }
        } else {
            SplitDecision::NoSplit
        }
    }

    fn split_children(&self, attribute: usize, threshold: f64) -> (LeafStats, LeafStats) {
        let obs = &self.observers[attribute];
        let left_est = obs.left_distribution(threshold);
        let observed = self.observed_counts();
        let observed_total: u64 = observed.iter().sum();
        let overall_left = if observed_total > 0 {
            left_est.iter().sum::<f64>() / observed_total as f64
        } else {
            0.5
        };
        let mut left = [0u64; 3];
        let mut right = [0u64; 3];
        for c in 0..3 {
            let share = if observed[c] > 0 {
                left_est[c] / observed[c] as f64
            } else {
                overall_left
            };
            let n = self.class_counts[c];
            left[c] = ((share * n as f64).round() as u64).min(n);
            right[c] = n - left[c];
        }
        let arity = self.observers.len();
        (LeafStats::with_counts(arity, left), LeafStats::with_counts(arity, right))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(LeafStats),
    Split {
        attribute: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a LeafStats>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    fn dump(&self) -> NodeDump {
        match self {
            Node::Leaf(l) => NodeDump::Leaf { counts: l.class_counts },
            Node::Split {
                attribute,
                threshold,
                left,
                right,
            } => {
                let (l, r) = (left.dump(), right.dump());
                let counts = std::array::from_fn(|c| l.counts()[c] + r.counts()[c]);
                NodeDump::Split {
                    attribute: *attribute,
                    threshold: *threshold,
                    counts,
                    left: Box::new(l),
                    right: Box::new(r),
                }
            }
        }
    }
}

/// JSON-friendly view of a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeDump {
    Leaf {
        counts: [u64; 3],
    },
    Split {
        attribute: usize,
        threshold: f64,
        counts: [u64; 3],
        left: Box<NodeDump>,
        right: Box<NodeDump>,
    },
}

impl NodeDump {
    pub fn counts(&self) -> [u64; 3] {
        match self {
            NodeDump::Leaf { counts } | NodeDump::Split { counts, .. } => *counts,
        }
    }

    /// Attributes used by split nodes, in pre-order.
    pub fn split_attributes(&self) -> Vec<usize> {
        match self {
            NodeDump::Leaf { .. } => Vec::new(),
            NodeDump::Split {
                attribute, left, right, ..
            } => {
                let mut v = vec![*attribute];
                v.extend(left.split_attributes());
                v.extend(right.split_attributes());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingTree {
    cfg: HtConfig,
    arity: usize,
    root: Node,
    instances_seen: u64,
}

impl HoeffdingTree {
    pub fn new(arity: usize, cfg: HtConfig) -> Result<Self> {
        cfg.validate()?;
        if arity == 0 {
            return Err(Error::InvalidConfig("tree arity must be positive".into()));
        }
        Ok(Self {
            root: Node::Leaf(LeafStats::new(arity)),
            cfg,
            arity,
            instances_seen: 0,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn config(&self) -> &HtConfig {
        &self.cfg
    }

    pub fn instances_seen(&self) -> u64 {
        self.instances_seen
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn leaves(&self) -> Vec<&LeafStats> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn dump(&self) -> NodeDump {
        self.root.dump()
    }

    fn check_arity(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn leaf_for(&self, x: &FeatureVector) -> &LeafStats {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(l) => return l,
                Node::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                } => node = if x[*attribute] <= *threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        self.check_arity(x)?;
        let scores = self.leaf_for(x).scores(x, self.cfg.leaf_prediction);
        Ok(Prediction {
            label: argmax_label(&scores),
            scores,
        })
    }

    pub fn learn(&mut self, x: &FeatureVector, y: DelayLabel) -> Result<()> {
        self.check_arity(x)?;
        self.instances_seen += 1;

        let mut node = &mut self.root;
        while let Node::Split {
            attribute,
            threshold,
            left,
            right,
        } = node
        {
            node = if x[*attribute] <= *threshold { left } else { right };
        }
        let Node::Leaf(leaf) = node else {
            unreachable!("descent ends at a leaf")
        };
        leaf.absorb(x, y);
        if leaf.since_attempt < self.cfg.grace_period {
            return Ok(());
        }
        leaf.since_attempt = 0;
        if let SplitDecision::Split { attribute, threshold } = leaf.attempt_split(&self.cfg) {
            let (l, r) = leaf.split_children(attribute, threshold);
            *node = Node::Split {
                attribute,
                threshold,
                left: Box::new(Node::Leaf(l)),
                right: Box::new(Node::Leaf(r)),
            };
        }
        Ok(())
    }
}

impl StreamModel for HoeffdingTree {
    fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        HoeffdingTree::predict(self, x)
    }

    fn learn(&mut self, x: &FeatureVector, y: DelayLabel) -> Result<()> {
        HoeffdingTree::learn(self, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bound_examples() {
        assert_eq!(hoeffding_bound(1.0, 1.0, 10), 0.0);
        assert!((hoeffding_bound(1.0, 0.05, 200) - 0.086_541).abs() < 1e-6);
        assert!(hoeffding_bound(1.0, 0.05, 400) < hoeffding_bound(1.0, 0.05, 200));
    }

    #[test]
    fn gain_examples() {
        assert_eq!(info_gain([4, 4, 0], [4, 0, 0], [0, 4, 0]).unwrap(), 1.0);
        assert!(info_gain([2, 2, 0], [1, 1, 0], [1, 1, 0]).unwrap().abs() < 1e-15);
        assert!(matches!(info_gain([2, 2, 0], [1, 1, 0], [1, 2, 0]), Err(Error::CountMismatch(_))));
        assert!(info_gain([0, 0, 0], [0, 0, 0], [0, 0, 0]).is_err());
    }

    #[test]
    fn gain_against_hand_entropy() {
        // H(p) = -Σ p log2 p computed term by term
        let h = |c: &[f64]| -> f64 {
            let s: f64 = c.iter().sum();
            c.iter().filter(|v| **v > 0.0).map(|v| -(v / s) * (v / s).log2()).sum()
        };
        let expected = h(&[5.0, 3.0, 2.0]) - 0.5 * h(&[5.0]) - 0.5 * h(&[3.0, 2.0]);
        let got = info_gain([5, 3, 2], [5, 0, 0], [0, 3, 2]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_tree_predicts_uniform() {
        let t = HoeffdingTree::new(3, HtConfig::default()).unwrap();
        let p = t.predict(&fv(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(p.scores, [1.0 / 3.0; 3]);
        assert_eq!(p.label, DelayLabel::BeforeTime);
    }

    #[test]
    fn single_class_stream() {
        let mut t = HoeffdingTree::new(2, HtConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = fv(&[rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)]);
            t.learn(&x, DelayLabel::Delayed).unwrap();
        }
        let p = t.predict(&fv(&[0.0, 0.0])).unwrap();
        assert_eq!(p.label, DelayLabel::Delayed);
        assert_eq!(p.scores, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn learn_counts_one_instance() {
        let mut t = HoeffdingTree::new(1, HtConfig::default()).unwrap();
        t.learn(&fv(&[5.0]), DelayLabel::OnTime).unwrap();
        assert_eq!(t.instances_seen(), 1);
        assert_eq!(t.leaves()[0].total(), 1);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let mut t = HoeffdingTree::new(2, HtConfig::default()).unwrap();
        assert!(matches!(t.predict(&fv(&[1.0])), Err(Error::ArityMismatch { expected: 2, got: 1 })));
        assert!(t.learn(&fv(&[1.0, 2.0, 3.0]), DelayLabel::OnTime).is_err());
    }

    #[test]
    fn identical_instances_never_split() {
        let cfg = HtConfig {
            tie_threshold: 0.0,
            grace_period: 50,
            ..HtConfig::default()
        };
        let mut t = HoeffdingTree::new(3, cfg).unwrap();
        for i in 0..5000 {
            let y = if i % 2 == 0 { DelayLabel::OnTime } else { DelayLabel::Delayed };
            t.learn(&fv(&[1.0, 2.0, 3.0]), y).unwrap();
        }
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn pure_leaf_does_not_split() {
        let mut leaf = LeafStats::new(2);
        for i in 0..500 {
            leaf.absorb(&fv(&[i as f64, -(i as f64)]), DelayLabel::OnTime);
        }
        assert_eq!(leaf.attempt_split(&HtConfig::default()), SplitDecision::NoSplit);
    }

    #[test]
    fn separating_attribute_is_chosen() {
        // attribute 0 separates classes perfectly, attribute 1 is shared noise
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut leaf = LeafStats::new(2);
        for i in 0..1000 {
            let (y, a0) = if i % 2 == 0 {
                (DelayLabel::OnTime, rng.random_range(-100.0..-10.0))
            } else {
                (DelayLabel::Delayed, rng.random_range(10.0..100.0))
            };
            leaf.absorb(&fv(&[a0, rng.random_range(-50.0..50.0)]), y);
        }
        let cfg = HtConfig::default();
        match leaf.attempt_split(&cfg) {
            SplitDecision::Split { attribute, threshold } => {
                assert_eq!(attribute, 0);
                assert!(threshold.abs() < 40.0, "threshold {threshold}");
            }
            other => panic!("expected split, got {other:?}"),
        }
        // the gain margin exceeds the bound for n = 1000
        let eps = hoeffding_bound(GAIN_RANGE, cfg.delta, 1000);
        assert!(1.0 - eps > 0.0);
    }

    #[test]
    fn identical_attributes_split_on_lower_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut leaf = LeafStats::new(2);
        let n = 2000;
        for _ in 0..n {
            let v: f64 = rng.random_range(-100.0..100.0);
            let y = if v > 0.0 { DelayLabel::Delayed } else { DelayLabel::OnTime };
            leaf.absorb(&fv(&[v, v]), y);
        }
        let cfg = HtConfig::default();
        assert!(hoeffding_bound(GAIN_RANGE, cfg.delta, n) < cfg.tie_threshold);
        match leaf.attempt_split(&cfg) {
            SplitDecision::Split { attribute, .. } => assert_eq!(attribute, 0),
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn learns_threshold_on_last_delay() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut t = HoeffdingTree::new(6, HtConfig::default()).unwrap();
        for _ in 0..5000 {
            let d: Vec<f64> = (0..6).map(|_| rng.random_range(-300.0..300.0)).collect();
            let y = if d[5] > 60.0 { DelayLabel::Delayed } else { DelayLabel::OnTime };
            t.learn(&fv(&d), y).unwrap();
        }
        assert!(t.dump().split_attributes().contains(&5));
    }

    #[test]
    fn leaf_counts_sum_to_instances_seen() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut t = HoeffdingTree::new(3, HtConfig { grace_period: 50, ..HtConfig::default() }).unwrap();
        for _ in 0..6000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = match (x[0] > 0.2, x[1] > -0.3) {
                (true, _) => DelayLabel::Delayed,
                (false, true) => DelayLabel::OnTime,
                _ => DelayLabel::BeforeTime,
            };
            t.learn(&fv(&x), y).unwrap();
        }
        assert!(t.depth() >= 2);
        assert!(t.depth() as u64 <= t.instances_seen());
        let total: u64 = t.leaves().iter().map(|l| l.total()).sum();
        assert_eq!(total, t.instances_seen());
    }

    #[test]
    fn naive_bayes_leaves_use_observers() {
        let cfg = HtConfig {
            leaf_prediction: LeafPrediction::NaiveBayes,
            grace_period: 10_000,
            ..HtConfig::default()
        };
        let mut t = HoeffdingTree::new(1, cfg).unwrap();
        for i in 0..300 {
            let v = (i % 10) as f64;
            t.learn(&fv(&[v - 100.0]), DelayLabel::BeforeTime).unwrap();
            t.learn(&fv(&[v + 100.0]), DelayLabel::Delayed).unwrap();
        }
        // a majority leaf would tie; naive Bayes separates by value
        assert_eq!(t.predict(&fv(&[95.0])).unwrap().label, DelayLabel::Delayed);
        assert_eq!(t.predict(&fv(&[-95.0])).unwrap().label, DelayLabel::BeforeTime);
        let s = t.predict(&fv(&[0.0])).unwrap().scores;
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dump_serializes_to_tagged_json() {
        let mut t = HoeffdingTree::new(1, HtConfig { grace_period: 20, ..HtConfig::default() }).unwrap();
        for i in 0..400 {
            let v = i as f64;
            t.learn(&fv(&[v]), if v < 200.0 { DelayLabel::OnTime } else { DelayLabel::Delayed }).unwrap();
        }
        let json = serde_json::to_value(t.dump()).unwrap();
        assert_eq!(json["type"], "split");
        assert_eq!(json["attribute"], 0);
        assert_eq!(json["counts"], serde_json::json!([0, 200, 200]));
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop, prop_assert, prop_assert_eq, prop_assume, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn bound_matches_closed_form(r in 0.01f64..10.0, delta in 1e-9f64..0.999, n in 1u64..1_000_000) {
                let closed = (r * r * (-delta.ln()) / (2.0 * n as f64)).sqrt();
                let got = hoeffding_bound(r, delta, n);
                prop_assert!((got - closed).abs() <= 1e-12 * closed.abs().max(f64::MIN_POSITIVE));
                prop_assert!(hoeffding_bound(r, delta, 2 * n) < got);
            }
        }

        proptest! {
            #[test]
            fn gain_is_bounded(l in prop::array::uniform3(0u64..50), r in prop::array::uniform3(0u64..50)) {
                let p = [l[0] + r[0], l[1] + r[1], l[2] + r[2]];
                prop_assume!(p.iter().sum::<u64>() > 0);
                let g = info_gain(p, l, r).unwrap();
                prop_assert!((0.0..=GAIN_RANGE).contains(&g));
            }

            #[test]
            fn learning_is_deterministic(seed in 0u64..1000) {
                let run = || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut t = HoeffdingTree::new(2, HtConfig { grace_period: 25, ..HtConfig::default() }).unwrap();
                    for _ in 0..400 {
                        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                        let y = DelayLabel::from_index(rng.random_range(0..3)).unwrap();
                        let y = if x[0] > 0.0 { DelayLabel::Delayed } else { y };
                        t.learn(&fv(&x), y).unwrap();
                    }
                    t
                };
                prop_assert_eq!(run(), run());
            }
        }
    }
}
