//! Prequential runner for the hybrid stream/neural classifier.
//!
//! For every instance `i` the runner first predicts, then consumes the true
//! label. The stream model `h` predicts and learns on every instance. The
//! first `N` labelled instances are kept as a training set; once instance
//! `N` has been consumed the neural model `P_N` is trained on them and then
//! frozen. From `i = N + 1` on, `P_N` predicts every instance in shadow so
//! that both models have a correctness history.
//!
//! For `i > N + 1` the hybrid compares the window accuracies
//!
//! ```text
//! ω_h = #correct(h, j) / (i - max(i-L, 1))      j ∈ [max(i-L, 1),   i-1]
//! ω_P = #correct(P, j) / (i - max(i-L, N+1))    j ∈ [max(i-L, N+1), i-1]
//! ```
//!
//! and emits the stream model's prediction when `ω_h ≥ ω_P`, the neural one
//! otherwise. The comparison is done on integer cross products, so ties are
//! exact.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DelayLabel, FeatureSelector, FeatureVector, WindowedInstance};
use crate::hoeffding::{HoeffdingTree, HtConfig};
use crate::mlp::{MlpConfig, MlpTrainer};
use crate::model::{BatchModel, BatchTrainer, Prediction, StreamModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ht,
    Mlp,
    Csann,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ht => "ht",
            Method::Mlp => "mlp",
            Method::Csann => "csann",
        }
    }

    fn needs_neural(self) -> bool {
        matches!(self, Method::Mlp | Method::Csann)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ht" => Ok(Method::Ht),
            "mlp" => Ok(Method::Mlp),
            "csann" => Ok(Method::Csann),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsannConfig {
    /// Training-set size `N` for the neural model.
    #[serde(alias = "N")]
    pub n_train: usize,
    /// Sliding window size `L`.
    #[serde(alias = "L")]
    pub window: usize,
    pub selector: FeatureSelector,
    pub ht: HtConfig,
    pub mlp: MlpConfig,
}

impl Default for CsannConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            window: 100,
            selector: FeatureSelector::Delays,
            ht: HtConfig::default(),
            mlp: MlpConfig::default(),
        }
    }
}

impl CsannConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 {
            return Err(Error::InvalidConfig("N must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig("L must be >= 1".into()));
        }
        self.ht.validate()?;
        self.mlp.validate()
    }
}

/// Which model produced the hybrid output; serialized as `1` (stream) or `0` (neural).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ModelSource {
    Neural,
    Stream,
}

impl From<ModelSource> for u8 {
    fn from(s: ModelSource) -> u8 {
        match s {
            ModelSource::Neural => 0,
            ModelSource::Stream => 1,
        }
    }
}

impl TryFrom<u8> for ModelSource {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(ModelSource::Neural),
            1 => Ok(ModelSource::Stream),
            other => Err(format!("model source must be 0 or 1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVerdict {
    pub i: u64,
    pub prediction: DelayLabel,
    pub source: ModelSource,
    pub omega_h: Option<f64>,
    pub omega_p: Option<f64>,
    pub shadow_h: DelayLabel,
    pub shadow_p: Option<DelayLabel>,
    pub truth: DelayLabel,
}

impl ModelVerdict {
    pub fn is_correct(&self) -> bool {
        self.prediction == self.truth
    }

    fn check(&self) -> Result<()> {
        let expected = match self.source {
            ModelSource::Stream => Some(self.shadow_h),
            ModelSource::Neural => self.shadow_p,
        };
        if expected != Some(self.prediction) {
            return Err(Error::TraceInvariant(format!(
                "verdict {} does not match its source model's prediction",
                self.i
            )));
        }
        Ok(())
    }
}

/// Append-only record of one prequential run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Index of the first scored instance: `1`, or `N + 1` for the neural baseline.
    pub start: u64,
    verdicts: Vec<ModelVerdict>,
    correct: u64,
}

impl RunTrace {
    pub fn new(start: u64) -> Self {
        Self {
            start,
            verdicts: Vec::new(),
            correct: 0,
        }
    }

    pub fn push(&mut self, v: ModelVerdict) -> Result<()> {
        let expected = self.start + self.verdicts.len() as u64;
        if v.i != expected {
            return Err(Error::TraceInvariant(format!("expected index {expected}, got {}", v.i)));
        }
        v.check()?;
        self.correct += v.is_correct() as u64;
        self.verdicts.push(v);
        Ok(())
    }

    pub fn verdicts(&self) -> &[ModelVerdict] {
        &self.verdicts
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn correct_count(&self) -> u64 {
        self.correct
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.verdicts {
            serde_json::to_writer(&mut out, v)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut trace: Option<RunTrace> = None;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: ModelVerdict = serde_json::from_str(&line)?;
            trace.get_or_insert_with(|| RunTrace::new(v.i)).push(v)?;
        }
        trace.ok_or(Error::EmptyTrace)
    }
}

/// Correct count over a window length; compared exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowAccuracy {
    pub correct: u64,
    pub len: u64,
}

impl WindowAccuracy {
    pub fn value(&self) -> f64 {
        self.correct as f64 / self.len as f64
    }

    /// `self ≥ other` without rounding.
    pub fn at_least(&self, other: &WindowAccuracy) -> bool {
        self.correct as u128 * other.len as u128 >= other.correct as u128 * self.len as u128
    }
}

/// Accuracy over `j ∈ [max(i - window, floor + 1), i - 1]`, where
/// `history[j - 1]` says whether the model was right on instance `j`.
/// Entries at or below `floor` are never read.
pub fn window_accuracy(history: &[bool], i: u64, floor: u64, window: u64) -> Result<WindowAccuracy> {
    let lo = i.saturating_sub(window).max(floor + 1);
    if i <= lo {
        return Err(Error::EmptyWindow { index: i });
    }
    if (i - 1) as usize > history.len() {
        return Err(Error::EmptyWindow { index: i });
    }
    let correct = (lo..i).filter(|&j| history[(j - 1) as usize]).count() as u64;
    Ok(WindowAccuracy { correct, len: i - lo })
}

/// Incremental counterpart of [`window_accuracy`]: keeps the last `window`
/// outcomes pushed.
#[derive(Debug, Clone)]
pub struct SlidingAccuracy {
    window: usize,
    outcomes: VecDeque<bool>,
    correct: u64,
}

impl SlidingAccuracy {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            outcomes: VecDeque::with_capacity(window + 1),
            correct: 0,
        }
    }

    pub fn push(&mut self, ok: bool) {
        self.outcomes.push_back(ok);
        self.correct += ok as u64;
        if self.outcomes.len() > self.window {
            let old = self.outcomes.pop_front().unwrap_or(false);
            self.correct -= old as u64;
        }
    }

    pub fn current(&self) -> Option<WindowAccuracy> {
        (!self.outcomes.is_empty()).then_some(WindowAccuracy {
            correct: self.correct,
            len: self.outcomes.len() as u64,
        })
    }
}

struct Pending {
    i: u64,
    x: FeatureVector,
    shadow_h: Prediction,
    shadow_p: Option<Prediction>,
    source: ModelSource,
    omega_h: Option<WindowAccuracy>,
    omega_p: Option<WindowAccuracy>,
}

/// The prediction handed out between `predict` and `reveal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingPrediction {
    pub i: u64,
    pub prediction: Prediction,
    pub source: ModelSource,
}

pub struct Runner<S, T: BatchTrainer> {
    method: Method,
    n_train: u64,
    selector: FeatureSelector,
    stream: S,
    trainer: T,
    neural: Option<T::Model>,
    training: Vec<(FeatureVector, DelayLabel)>,
    next: u64,
    pending: Option<Pending>,
    h_window: SlidingAccuracy,
    p_window: SlidingAccuracy,
}

impl<S: StreamModel, T: BatchTrainer> Runner<S, T> {
    pub fn new(method: Method, n_train: usize, window: usize, selector: FeatureSelector, stream: S, trainer: T) -> Self {
        Self {
            method,
            n_train: n_train as u64,
            selector,
            stream,
            trainer,
            neural: None,
            training: Vec::new(),
            next: 1,
            pending: None,
            h_window: SlidingAccuracy::new(window),
            p_window: SlidingAccuracy::new(window),
        }
    }

    pub fn stream_model(&self) -> &S {
        &self.stream
    }

    pub fn neural_model(&self) -> Option<&T::Model> {
        self.neural.as_ref()
    }

    /// Index the next call to [`Self::predict`] must use.
    pub fn next_index(&self) -> u64 {
        self.next
    }

    /// Current `(ω_h, ω_P)` windows, as they would be used for the next instance.
    pub fn windows(&self) -> (Option<WindowAccuracy>, Option<WindowAccuracy>) {
        (self.h_window.current(), self.p_window.current())
    }

    pub fn predict(&mut self, i: u64, instance: &WindowedInstance) -> Result<PendingPrediction> {
        if let Some(p) = &self.pending {
            return Err(Error::OrderingViolation(format!(
                "instance {} still awaits its label",
                p.i
            )));
        }
        if i < self.next {
            return Err(Error::OrderingViolation(format!("label for instance {i} was already consumed")));
        }
        if i > self.next {
            return Err(Error::OutOfOrder {
                expected: self.next,
                got: i,
            });
        }
        let x = self.selector.select(instance)?;
        let shadow_h = self.stream.predict(&x)?;
        let shadow_p = match (&self.neural, i > self.n_train) {
            (Some(m), true) => Some(m.predict(&x)?),
            _ => None,
        };

        let (source, omega_h, omega_p) = match self.method {
            Method::Ht => (ModelSource::Stream, None, None),
            Method::Mlp => (ModelSource::Neural, None, None),
            Method::Csann if i <= self.n_train + 1 => (ModelSource::Stream, None, None),
            Method::Csann => {
                let (wh, wp) = self.windows();
                let (wh, wp) = match (wh, wp, shadow_p) {
                    (Some(wh), Some(wp), Some(_)) => (wh, wp),
                    _ => {
                        return Err(Error::TraceInvariant(format!(
                            "accuracy windows unavailable at instance {i}"
                        )))
                    }
                };
                let src = if wh.at_least(&wp) {
                    ModelSource::Stream
                } else {
                    ModelSource::Neural
                };
                (src, Some(wh), Some(wp))
            }
        };
        let prediction = match source {
            ModelSource::Stream => shadow_h,
            ModelSource::Neural => match shadow_p {
                Some(p) => p,
                None if self.method == Method::Mlp => shadow_h,
                None => unreachable!("neural source chosen without a neural prediction"),
            },
        };
        self.pending = Some(Pending {
            i,
            x,
            shadow_h,
            shadow_p,
            source,
            omega_h,
            omega_p,
        });
        Ok(PendingPrediction { i, prediction, source })
    }

    /// Consumes the label for the pending instance and updates the models.
    /// Returns `None` for instances the method does not score (the neural
    /// baseline before `P_N` exists).
    pub fn reveal(&mut self, i: u64, truth: DelayLabel) -> Result<Option<ModelVerdict>> {
        let p = match self.pending.take() {
            Some(p) if p.i == i => p,
            Some(p) => {
                let expected = p.i;
                self.pending = Some(p);
                return Err(Error::OutOfOrder { expected, got: i });
            }
            None => {
                return Err(Error::OrderingViolation(format!(
                    "label for instance {i} revealed before its prediction"
                )))
            }
        };

        self.h_window.push(p.shadow_h.label == truth);
        if let Some(sp) = &p.shadow_p {
            self.p_window.push(sp.label == truth);
        }
        self.stream.learn(&p.x, truth)?;
        if self.method.needs_neural() && i <= self.n_train {
            self.training.push((p.x, truth));
            if i == self.n_train {
                self.neural = Some(self.trainer.train(&self.training)?);
                self.training = Vec::new();
            }
        }
        self.next += 1;

        let scored = !(self.method == Method::Mlp && p.shadow_p.is_none());
        Ok(scored.then(|| {
            let shadow_p = p.shadow_p.map(|s| s.label);
            let prediction = match p.source {
                ModelSource::Stream => p.shadow_h.label,
                ModelSource::Neural => shadow_p.unwrap_or(p.shadow_h.label),
            };
            ModelVerdict {
                i,
                prediction,
                source: p.source,
                omega_h: p.omega_h.map(|w| w.value()),
                omega_p: p.omega_p.map(|w| w.value()),
                shadow_h: p.shadow_h.label,
                shadow_p,
                truth,
            }
        }))
    }

    /// Predict, then reveal, for the next instance.
    pub fn process(&mut self, instance: &WindowedInstance) -> Result<Option<ModelVerdict>> {
        let i = self.next;
        self.predict(i, instance)?;
        self.reveal(i, instance.label)
    }
}

/// Runs `method` over `stream` with a Hoeffding tree and an MLP.
pub fn run_prequential<'a, I>(stream: I, cfg: &CsannConfig, method: Method) -> Result<RunTrace>
where
    I: IntoIterator<Item = &'a WindowedInstance>,
{
    cfg.validate()?;
    let mut iter = stream.into_iter().peekable();
    let first = iter.peek().ok_or(Error::EmptyTrace)?;
    let arity = cfg.selector.arity(first.lags());
    let tree = HoeffdingTree::new(arity, cfg.ht.clone())?;
    let trainer = MlpTrainer {
        config: cfg.mlp.clone(),
    };
    let runner = Runner::new(method, cfg.n_train, cfg.window, cfg.selector, tree, trainer);
    drive(runner, iter, method, cfg.n_train)
}

/// Feeds every instance to `runner` and collects the scored verdicts.
pub fn drive<'a, S, T, I>(mut runner: Runner<S, T>, stream: I, method: Method, n_train: usize) -> Result<RunTrace>
where
    S: StreamModel,
    T: BatchTrainer,
    I: IntoIterator<Item = &'a WindowedInstance>,
{
    let start = if method == Method::Mlp { n_train as u64 + 1 } else { 1 };
    let mut trace = RunTrace::new(start);
    for w in stream {
        if let Some(v) = runner.process(w)? {
            trace.push(v)?;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::rc::Rc;

    fn instance(delay: f64, label: DelayLabel) -> WindowedInstance {
        WindowedInstance {
            vehicle_id: "v".into(),
            direction: "A".into(),
            t: 0,
            times: Vec::new(),
            coords: vec![[0.0, 0.0]],
            delays: vec![delay],
            statuses: vec![DelayLabel::OnTime],
            label,
        }
    }

    /// Stream model that always answers `answer` and records learn calls.
    struct Fixed {
        answer: DelayLabel,
        learned: Rc<RefCell<u64>>,
    }

    impl StreamModel for Fixed {
        fn predict(&self, _: &FeatureVector) -> Result<Prediction> {
            let mut s = [0.0; 3];
            s[self.answer.index()] = 1.0;
            Ok(Prediction::from_scores(s))
        }

        fn learn(&mut self, _: &FeatureVector, _: DelayLabel) -> Result<()> {
            *self.learned.borrow_mut() += 1;
            Ok(())
        }
    }

    struct FixedTrainer(DelayLabel);
    struct FixedModel(DelayLabel);

    impl BatchModel for FixedModel {
        fn predict(&self, _: &FeatureVector) -> Result<Prediction> {
            let mut s = [0.0; 3];
            s[self.0.index()] = 1.0;
            Ok(Prediction::from_scores(s))
        }
    }

    impl BatchTrainer for FixedTrainer {
        type Model = FixedModel;
        fn train(&self, data: &[(FeatureVector, DelayLabel)]) -> Result<FixedModel> {
            assert!(!data.is_empty());
            Ok(FixedModel(self.0))
        }
    }

    fn fixed_runner(n: usize, l: usize, h: DelayLabel, p: DelayLabel) -> (Runner<Fixed, FixedTrainer>, Rc<RefCell<u64>>) {
        let learned = Rc::new(RefCell::new(0));
        let s = Fixed {
            answer: h,
            learned: learned.clone(),
        };
        (
            Runner::new(Method::Csann, n, l, FeatureSelector::Delays, s, FixedTrainer(p)),
            learned,
        )
    }

    #[test]
    fn window_examples() {
        let all = vec![true; 300];
        assert_eq!(window_accuracy(&all, 150, 0, 100).unwrap().value(), 1.0);
        let alt: Vec<bool> = (0..300).map(|j| j % 2 == 0).collect();
        assert_eq!(window_accuracy(&alt, 201, 0, 100).unwrap().value(), 0.5);
        assert!(matches!(window_accuracy(&all, 1, 0, 100), Err(Error::EmptyWindow { index: 1 })));
        assert!(window_accuracy(&all, 11, 10, 100).is_err());
        // denominators per the two floors
        assert_eq!(window_accuracy(&all, 50, 0, 100).unwrap().len, 49);
        assert_eq!(window_accuracy(&all, 50, 40, 100).unwrap().len, 9);
    }

    #[test]
    fn exact_tie_prefers_stream() {
        let a = WindowAccuracy { correct: 1, len: 3 };
        let b = WindowAccuracy { correct: 33, len: 99 };
        assert!(a.at_least(&b) && b.at_least(&a));
    }

    #[test]
    fn neural_wins_when_stream_is_always_wrong() {
        // h always says before_time, P always says delayed, truth is delayed
        let (mut r, learned) = fixed_runner(20, 10, DelayLabel::BeforeTime, DelayLabel::Delayed);
        let mut sources = Vec::new();
        for _ in 0..60 {
            let v = r.process(&instance(0.0, DelayLabel::Delayed)).unwrap().unwrap();
            assert_eq!(v.prediction, if v.source == ModelSource::Stream { v.shadow_h } else { v.shadow_p.unwrap() });
            sources.push(v.source);
        }
        assert!(sources[..21].iter().all(|s| *s == ModelSource::Stream));
        assert!(sources[21..].iter().all(|s| *s == ModelSource::Neural));
        // h keeps learning after P_N is trained
        assert_eq!(*learned.borrow(), 60);
    }

    #[test]
    fn tie_selects_stream() {
        // identical models: once both windows cover the same L instances the
        // accuracies are equal and the stream model must be chosen
        let (n, l) = (5u64, 4u64);
        let (mut r, _) = fixed_runner(n as usize, l as usize, DelayLabel::OnTime, DelayLabel::OnTime);
        for k in 0..40 {
            let truth = if k % 3 == 0 { DelayLabel::OnTime } else { DelayLabel::Delayed };
            let v = r.process(&instance(0.0, truth)).unwrap().unwrap();
            if v.i > n + l {
                assert_eq!(v.omega_h, v.omega_p);
                assert_eq!(v.source, ModelSource::Stream);
            }
        }
        // all-correct histories tie at 1.0 from the first switching step
        let (mut r, _) = fixed_runner(n as usize, l as usize, DelayLabel::OnTime, DelayLabel::OnTime);
        for _ in 0..20 {
            let v = r.process(&instance(0.0, DelayLabel::OnTime)).unwrap().unwrap();
            assert_eq!(v.source, ModelSource::Stream);
        }
    }

    #[test]
    fn ordering_errors() {
        let (mut r, _) = fixed_runner(5, 4, DelayLabel::OnTime, DelayLabel::OnTime);
        let w = instance(0.0, DelayLabel::OnTime);
        assert!(matches!(r.reveal(1, DelayLabel::OnTime), Err(Error::OrderingViolation(_))));
        assert!(matches!(r.predict(2, &w), Err(Error::OutOfOrder { expected: 1, got: 2 })));
        r.predict(1, &w).unwrap();
        assert!(matches!(r.predict(1, &w), Err(Error::OrderingViolation(_))));
        assert!(matches!(r.reveal(2, DelayLabel::OnTime), Err(Error::OutOfOrder { .. })));
        r.reveal(1, DelayLabel::OnTime).unwrap();
        assert!(matches!(r.predict(1, &w), Err(Error::OrderingViolation(_))));
    }

    #[test]
    fn first_prediction_comes_from_empty_tree() {
        let stream = vec![instance(10.0, DelayLabel::Delayed)];
        let trace = run_prequential(&stream, &CsannConfig::default(), Method::Csann).unwrap();
        assert_eq!(trace.len(), 1);
        let v = &trace.verdicts()[0];
        assert_eq!(v.prediction, DelayLabel::BeforeTime);
        assert_eq!(v.source, ModelSource::Stream);
    }

    #[test]
    fn mlp_baseline_starts_after_training() {
        let stream: Vec<_> = (0..30)
            .map(|k| {
                let d = (k as f64 - 15.0) * 20.0;
                instance(d, DelayLabel::from_delay(d, 60.0))
            })
            .collect();
        let cfg = CsannConfig {
            n_train: 10,
            mlp: MlpConfig { epochs: 5, ..MlpConfig::default() },
            ..CsannConfig::default()
        };
        let trace = run_prequential(&stream, &cfg, Method::Mlp).unwrap();
        assert_eq!(trace.start, 11);
        assert_eq!(trace.len(), 20);
        assert!(trace.verdicts().iter().all(|v| v.source == ModelSource::Neural));
    }

    #[test]
    fn trace_jsonl_round_trip() {
        let stream: Vec<_> = (0..50)
            .map(|k| instance(k as f64, if k % 2 == 0 { DelayLabel::OnTime } else { DelayLabel::Delayed }))
            .collect();
        let cfg = CsannConfig {
            n_train: 20,
            window: 5,
            mlp: MlpConfig { epochs: 3, ..MlpConfig::default() },
            ..CsannConfig::default()
        };
        let trace = run_prequential(&stream, &cfg, Method::Csann).unwrap();
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let first_line = std::str::from_utf8(&buf).unwrap().lines().next().unwrap().to_owned();
        assert!(first_line.contains("\"source\":1"));
        let back = RunTrace::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn trace_rejects_gaps_and_mismatched_sources() {
        let v = ModelVerdict {
            i: 1,
            prediction: DelayLabel::OnTime,
            source: ModelSource::Stream,
            omega_h: None,
            omega_p: None,
            shadow_h: DelayLabel::OnTime,
            shadow_p: None,
            truth: DelayLabel::OnTime,
        };
        let mut t = RunTrace::new(1);
        t.push(v.clone()).unwrap();
        assert!(t.push(ModelVerdict { i: 3, ..v.clone() }).is_err());
        assert!(t
            .push(ModelVerdict {
                i: 2,
                source: ModelSource::Neural,
                ..v
            })
            .is_err());
    }
}
