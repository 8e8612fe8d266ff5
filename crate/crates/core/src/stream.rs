//! The streaming outer loop: bootstrap a forest from the first window of
//! points, then score each subsequent chunk with the current forest before
//! retiring the worst-ranked trees and regrowing them from a balanced sample
//! of that chunk. Scoring strictly precedes every update, so each point is
//! judged by a model trained only on earlier data.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::eval::threshold_labels;
use crate::iforest::{build_forest, score_from_mean_path, Forest};
use crate::rng::{derive_rng, DOMAIN_SAMPLING};
use crate::sampling::{
    compute_inclusion_probabilities, cube_sample, reduce_to_scalar, Reducer,
};
use crate::{Error, FeatureVector, Result};

/// How chunk scores are turned into anomaly labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdPolicy {
    /// Flag the top fraction of each chunk's scores.
    Contamination(f64),
    /// Flag every score at or above a fixed cutoff.
    FixedCutoff(f64),
}

impl std::fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdPolicy::Contamination(q) => write!(f, "contamination:{q}"),
            ThresholdPolicy::FixedCutoff(c) => write!(f, "cutoff:{c}"),
        }
    }
}

/// Detector parameters. The defaults are the streaming configuration used
/// throughout: window and sample of 256 points, 50 trees, 10 replaced per
/// chunk.
#[derive(Clone, Debug)]
pub struct DetectorConfig {
    pub window_size: usize,
    pub ntrees: usize,
    pub ktrees: usize,
    pub sample_size: usize,
    pub threshold: ThresholdPolicy,
    pub reducer: Reducer,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_size: 256,
            ntrees: 50,
            ktrees: 10,
            sample_size: 256,
            threshold: ThresholdPolicy::Contamination(0.1),
            reducer: Reducer::default(),
            seed: 42,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "window size must be at least 2, got {}",
                self.window_size
            )));
        }
        if self.ntrees == 0 {
            return Err(Error::InvalidConfig("ntrees must be at least 1".into()));
        }
        if self.ktrees == 0 || self.ktrees > self.ntrees {
            return Err(Error::InvalidConfig(format!(
                "ktrees must be in 1..={}, got {}",
                self.ntrees, self.ktrees
            )));
        }
        if self.sample_size == 0 || self.sample_size > self.window_size {
            return Err(Error::InvalidConfig(format!(
                "sample size must be in 1..={}, got {}",
                self.window_size, self.sample_size
            )));
        }
        match self.threshold {
            ThresholdPolicy::Contamination(q) => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::InvalidContamination(q));
                }
            }
            ThresholdPolicy::FixedCutoff(c) => {
                if !(c.is_finite() && c > 0.0 && c < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "fixed cutoff must lie in (0, 1), got {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tree height cap: ceil(log2(window_size)).
    pub fn height_limit(&self) -> usize {
        self.window_size.next_power_of_two().trailing_zeros() as usize
    }

    /// One-line echo of every parameter, embedded in reports.
    pub fn describe(&self) -> String {
        format!(
            "window={} ntrees={} ktrees={} sample_size={} threshold={} reducer={} seed={}",
            self.window_size,
            self.ntrees,
            self.ktrees,
            self.sample_size,
            self.threshold,
            self.reducer,
            self.seed
        )
    }
}

/// Fixed-capacity FIFO buffer of the most recent points.
#[derive(Clone, Debug)]
pub struct SlidingWindow {
    buffer: VecDeque<FeatureVector>,
    capacity: usize,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            buffer: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    /// Appends a point, evicting the oldest one if the window is full.
    pub fn push(&mut self, point: FeatureVector) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(point);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
    }

    /// Window contents oldest first.
    pub fn points(&self) -> Vec<FeatureVector> {
        self.buffer.iter().cloned().collect()
    }
}

/// Everything observable about one processed chunk.
#[derive(Clone, Debug)]
pub struct ChunkReport {
    /// Forest score of each chunk point, in arrival order.
    pub scores: Vec<f64>,
    /// Anomaly labels under the configured threshold policy.
    pub labels: Vec<bool>,
    /// The score cutoff that was in effect for this chunk (NaN for an empty
    /// chunk, where no threshold was applied).
    pub cutoff: f64,
    /// Chunk points flagged by each tree of the pre-update forest.
    pub tree_flags: Vec<usize>,
    /// Slots of the trees retired by this chunk's update, most-flagged first;
    /// empty when the update was skipped.
    pub trees_replaced: Vec<usize>,
    /// Chunk positions of the balanced sample the replacement trees were
    /// trained on.
    pub sample_indices: Vec<usize>,
    /// Whether the model update ran (it is skipped for chunks smaller than
    /// the sample size).
    pub updated: bool,
    pub score_time: Duration,
    pub update_time: Duration,
}

/// Counts, for each tree, the chunk points whose single-tree score clears the
/// forest-level cutoff; stores the counts as `anomalies_flagged`, recomputes
/// ranks, and returns the retirement order (most-flagged first, ties to the
/// older tree).
pub fn rank_trees(forest: &mut Forest, chunk: &[FeatureVector], cutoff: f64) -> Result<Vec<usize>> {
    let normalizer_size = forest.sample_size();
    let mut counts = vec![0usize; forest.len()];
    for point in chunk {
        let paths = forest.path_lengths(point)?;
        for (count, path) in counts.iter_mut().zip(paths) {
            if score_from_mean_path(path, normalizer_size) >= cutoff {
                *count += 1;
            }
        }
    }
    forest.set_anomalies_flagged(&counts)?;
    Ok(forest.retirement_order())
}

/// Overlapping stride-1 windows of width `width` over a scalar sequence,
/// lifting it to `width`-dimensional points. Inputs shorter than the width
/// produce no output.
pub fn shingle(values: &[f64], width: usize) -> Result<Vec<FeatureVector>> {
    if width == 0 {
        return Err(Error::InvalidConfig("shingle width must be at least 1".into()));
    }
    Ok(values.windows(width).map(|w| w.to_vec()).collect())
}

/// A bootstrapped streaming detector.
#[derive(Clone, Debug)]
pub struct Detector {
    config: DetectorConfig,
    window: SlidingWindow,
    forest: Forest,
    chunks_processed: u64,
}

fn draw_balanced_sample(
    population: &[FeatureVector],
    config: &DetectorConfig,
    draw_index: u64,
) -> Result<(Vec<FeatureVector>, Vec<usize>)> {
    let scores = reduce_to_scalar(population, config.reducer)?;
    let pi = compute_inclusion_probabilities(&scores, config.sample_size)?;
    let mut rng = derive_rng(config.seed, DOMAIN_SAMPLING, draw_index);
    let selection = cube_sample(population, &pi, &mut rng)?;
    let rows = selection
        .selected_indices()
        .iter()
        .map(|&i| population[i].clone())
        .collect();
    Ok((rows, selection.selected_indices().to_vec()))
}

impl Detector {
    /// Consumes exactly `window_size` points from the stream, draws a
    /// balanced sample of them, and builds the initial forest. Nothing is
    /// scored during bootstrap.
    pub fn bootstrap<I>(config: DetectorConfig, stream: &mut I) -> Result<Self>
    where
        I: Iterator<Item = Result<FeatureVector>>,
    {
        config.validate()?;
        let mut window = SlidingWindow::new(config.window_size);
        let mut received = 0usize;
        while !window.is_full() {
            match stream.next() {
                Some(point) => {
                    window.push(point?);
                    received += 1;
                }
                None => {
                    return Err(Error::StreamExhausted {
                        received,
                        needed: config.window_size,
                    })
                }
            }
        }
        let points = window.points();
        let (sample, _) = draw_balanced_sample(&points, &config, 0)?;
        let forest = build_forest(&sample, config.ntrees, config.height_limit(), config.seed)?;
        Ok(Self {
            config,
            window,
            forest,
            chunks_processed: 0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn chunks_processed(&self) -> u64 {
        self.chunks_processed
    }

    fn apply_threshold(&self, scores: &[f64]) -> Result<(Vec<bool>, f64)> {
        match self.config.threshold {
            ThresholdPolicy::FixedCutoff(cutoff) => {
                Ok((scores.iter().map(|&s| s >= cutoff).collect(), cutoff))
            }
            ThresholdPolicy::Contamination(q) => {
                let labels = threshold_labels(scores, q)?;
                let cutoff = scores
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &flagged)| flagged)
                    .map(|(&s, _)| s)
                    .fold(f64::INFINITY, f64::min);
                Ok((labels, cutoff))
            }
        }
    }

    /// Processes the next chunk: scores it with the current forest, labels it
    /// under the threshold policy, counts per-tree flags, and (for chunks at
    /// least as large as the sample size) retires the `ktrees` worst trees
    /// and regrows them from a balanced sample of this chunk. The window is
    /// refilled with the chunk, so the detector always holds the latest
    /// points.
    pub fn process_chunk(&mut self, chunk: &[FeatureVector]) -> Result<ChunkReport> {
        if chunk.is_empty() {
            return Ok(ChunkReport {
                scores: Vec::new(),
                labels: Vec::new(),
                cutoff: f64::NAN,
                tree_flags: self
                    .forest
                    .meta()
                    .iter()
                    .map(|m| m.anomalies_flagged)
                    .collect(),
                trees_replaced: Vec::new(),
                sample_indices: Vec::new(),
                updated: false,
                score_time: Duration::ZERO,
                update_time: Duration::ZERO,
            });
        }

        let score_start = Instant::now();
        let mut scores = Vec::with_capacity(chunk.len());
        for point in chunk {
            scores.push(self.forest.anomaly_score(point)?);
        }
        let (labels, cutoff) = self.apply_threshold(&scores)?;
        let score_time = score_start.elapsed();

        let update_start = Instant::now();
        let retirement = rank_trees(&mut self.forest, chunk, cutoff)?;
        let tree_flags: Vec<usize> = self
            .forest
            .meta()
            .iter()
            .map(|m| m.anomalies_flagged)
            .collect();

        self.window.clear();
        for point in chunk {
            self.window.push(point.clone());
        }

        let mut trees_replaced = Vec::new();
        let mut sample_indices = Vec::new();
        let mut updated = false;
        if chunk.len() >= self.config.sample_size {
            let (sample, indices) =
                draw_balanced_sample(chunk, &self.config, self.chunks_processed + 1)?;
            trees_replaced = retirement[..self.config.ktrees].to_vec();
            self.forest.replace_trees(
                &trees_replaced,
                &sample,
                self.config.height_limit(),
                self.config.seed,
            )?;
            sample_indices = indices;
            updated = true;
        }
        self.chunks_processed += 1;
        let update_time = update_start.elapsed();

        Ok(ChunkReport {
            scores,
            labels,
            cutoff,
            tree_flags,
            trees_replaced,
            sample_indices,
            updated,
            score_time,
            update_time,
        })
    }
}

/// Totals returned by [`drive`].
#[derive(Clone, Copy, Debug)]
pub struct StreamSummary {
    /// Points consumed, bootstrap included.
    pub total_points: usize,
    /// Chunks scored after bootstrap.
    pub chunks: usize,
    /// Points consumed by bootstrap (always the window size).
    pub bootstrap_points: usize,
}

/// Runs the whole protocol over a point stream: bootstrap, then one
/// `process_chunk` per window-size chunk (the final chunk may be shorter).
/// `on_chunk` receives each chunk's starting stream offset, the chunk
/// itself, and its report.
pub fn drive<I, F>(config: DetectorConfig, mut stream: I, mut on_chunk: F) -> Result<(Detector, StreamSummary)>
where
    I: Iterator<Item = Result<FeatureVector>>,
    F: FnMut(usize, &[FeatureVector], &ChunkReport) -> Result<()>,
{
    let mut detector = Detector::bootstrap(config, &mut stream)?;
    let window_size = detector.config().window_size;
    let mut offset = window_size;
    let mut chunks = 0usize;
    loop {
        let mut chunk: Vec<FeatureVector> = Vec::with_capacity(window_size);
        for _ in 0..window_size {
            match stream.next() {
                Some(point) => chunk.push(point?),
                None => break,
            }
        }
        if chunk.is_empty() {
            break;
        }
        let report = detector.process_chunk(&chunk)?;
        on_chunk(offset, &chunk, &report)?;
        offset += chunk.len();
        chunks += 1;
        if chunk.len() < window_size {
            break;
        }
    }
    Ok((
        detector,
        StreamSummary {
            total_points: offset,
            chunks,
            bootstrap_points: window_size,
        },
    ))
}

/// In-memory convenience wrapper around [`drive`]: returns the concatenated
/// scores and labels of every point after the bootstrap window.
#[derive(Clone, Debug)]
pub struct PrequentialRun {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    /// Stream index of the first scored point (= the bootstrap size).
    pub first_scored: usize,
    pub chunks: usize,
}

pub fn run_prequential(config: DetectorConfig, points: &[FeatureVector]) -> Result<PrequentialRun> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let stream = points.iter().cloned().map(Ok);
    let (_, summary) = drive(config, stream, |_, _, report| {
        scores.extend_from_slice(&report.scores);
        labels.extend_from_slice(&report.labels);
        Ok(())
    })?;
    Ok(PrequentialRun {
        scores,
        labels,
        first_scored: summary.bootstrap_points,
        chunks: summary.chunks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_config() -> DetectorConfig {
        DetectorConfig {
            window_size: 16,
            ntrees: 5,
            ktrees: 2,
            sample_size: 8,
            threshold: ThresholdPolicy::Contamination(0.25),
            reducer: Reducer::CentroidDistance,
            seed: 7,
        }
    }

    fn noisy_points(n: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                vec![
                    (i as f64 * 0.1).sin() + rng.random_range(-0.05..0.05),
                    (i as f64 * 0.1).cos() + rng.random_range(-0.05..0.05),
                ]
            })
            .collect()
    }

    fn ok_stream(points: &[FeatureVector]) -> impl Iterator<Item = Result<FeatureVector>> + '_ {
        points.iter().cloned().map(Ok)
    }

    #[test]
    fn default_config_matches_streaming_defaults() {
        let config = DetectorConfig::default();
        assert_eq!(config.window_size, 256);
        assert_eq!(config.ntrees, 50);
        assert_eq!(config.ktrees, 10);
        assert_eq!(config.sample_size, 256);
        assert_eq!(config.height_limit(), 8);
        config.validate().unwrap();
    }

    #[test]
    fn config_rejects_out_of_range_parameters() {
        let mut bad = test_config();
        bad.window_size = 1;
        assert!(bad.validate().is_err());

        let mut bad = test_config();
        bad.ktrees = 0;
        assert!(bad.validate().is_err());

        let mut bad = test_config();
        bad.ktrees = bad.ntrees + 1;
        assert!(bad.validate().is_err());

        let mut bad = test_config();
        bad.sample_size = bad.window_size + 1;
        assert!(bad.validate().is_err());

        let mut bad = test_config();
        bad.threshold = ThresholdPolicy::Contamination(1.0);
        assert!(bad.validate().is_err());

        let mut bad = test_config();
        bad.threshold = ThresholdPolicy::FixedCutoff(1.5);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn height_limit_rounds_up() {
        let mut config = test_config();
        config.window_size = 256;
        assert_eq!(config.height_limit(), 8);
        config.window_size = 257;
        assert_eq!(config.height_limit(), 9);
        config.window_size = 2;
        assert_eq!(config.height_limit(), 1);
    }

    #[test]
    fn sliding_window_evicts_fifo() {
        let mut window = SlidingWindow::new(3);
        for i in 0..5 {
            window.push(vec![i as f64]);
        }
        assert_eq!(window.len(), 3);
        assert!(window.is_full());
        let points = window.points();
        assert_eq!(points, vec![vec![2.0], vec![3.0], vec![4.0]]);
    }

    #[test]
    fn bootstrap_consumes_exactly_one_window() {
        let points = noisy_points(20, 1);
        let mut stream = ok_stream(&points);
        let detector = Detector::bootstrap(test_config(), &mut stream).unwrap();
        assert!(detector.window().is_full());
        assert_eq!(detector.forest().len(), 5);
        assert_eq!(detector.chunks_processed(), 0);
        // Four points remain for the caller.
        assert_eq!(stream.count(), 4);
    }

    #[test]
    fn bootstrap_reports_early_exhaustion() {
        let points = noisy_points(10, 2);
        let mut stream = ok_stream(&points);
        match Detector::bootstrap(test_config(), &mut stream) {
            Err(Error::StreamExhausted { received, needed }) => {
                assert_eq!(received, 10);
                assert_eq!(needed, 16);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn census_bootstrap_trains_on_the_full_window() {
        let mut config = test_config();
        config.sample_size = config.window_size;
        let points = noisy_points(16, 3);
        let detector = Detector::bootstrap(config, &mut ok_stream(&points)).unwrap();
        assert_eq!(detector.forest().sample_size(), 16);
    }

    #[test]
    fn chunks_keep_the_forest_size_constant() {
        let points = noisy_points(80, 4);
        let mut detector = Detector::bootstrap(test_config(), &mut ok_stream(&points[..16])).unwrap();
        for (i, chunk) in points[16..].chunks(16).enumerate() {
            let report = detector.process_chunk(chunk).unwrap();
            assert_eq!(detector.forest().len(), 5, "chunk {i} changed the forest size");
            assert_eq!(report.scores.len(), chunk.len());
            assert_eq!(report.labels.len(), chunk.len());
            assert!(report.updated);
            assert_eq!(report.trees_replaced.len(), 2);
            assert_eq!(report.sample_indices.len(), 8);
        }
        assert_eq!(detector.chunks_processed(), 4);
    }

    #[test]
    fn replaced_trees_are_the_most_flagged_of_the_pre_update_forest() {
        let points = noisy_points(64, 5);
        let mut detector = Detector::bootstrap(test_config(), &mut ok_stream(&points[..16])).unwrap();
        for chunk in points[16..].chunks(16) {
            let before = detector.forest().clone();
            let report = detector.process_chunk(chunk).unwrap();

            let mut expected = before.clone();
            let order = rank_trees(&mut expected, chunk, report.cutoff).unwrap();
            assert_eq!(report.trees_replaced, order[..2].to_vec());
            assert_eq!(
                report.tree_flags,
                expected
                    .meta()
                    .iter()
                    .map(|m| m.anomalies_flagged)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn partial_final_chunk_is_scored_but_not_learned_from() {
        let points = noisy_points(22, 6);
        let mut detector = Detector::bootstrap(test_config(), &mut ok_stream(&points[..16])).unwrap();
        // 6 points < sample_size 8: scoring happens, the update does not.
        let report = detector.process_chunk(&points[16..]).unwrap();
        assert_eq!(report.scores.len(), 6);
        assert!(!report.updated);
        assert!(report.trees_replaced.is_empty());
        assert!(report.sample_indices.is_empty());
    }

    #[test]
    fn full_refresh_when_ktrees_equals_ntrees() {
        let mut config = test_config();
        config.ktrees = config.ntrees;
        let points = noisy_points(48, 7);
        let mut detector = Detector::bootstrap(config, &mut ok_stream(&points[..16])).unwrap();
        detector.process_chunk(&points[16..32]).unwrap();
        // Every slot must now hold a post-bootstrap tree.
        assert!(detector.forest().meta().iter().all(|m| m.birth >= 5));
    }

    #[test]
    fn empty_chunk_is_a_no_op() {
        let points = noisy_points(16, 8);
        let mut detector = Detector::bootstrap(test_config(), &mut ok_stream(&points)).unwrap();
        let before = detector.chunks_processed();
        let report = detector.process_chunk(&[]).unwrap();
        assert!(report.scores.is_empty());
        assert!(!report.updated);
        assert_eq!(detector.chunks_processed(), before);
    }

    #[test]
    fn fixed_cutoff_threshold_labels_directly() {
        let mut config = test_config();
        config.threshold = ThresholdPolicy::FixedCutoff(0.5);
        let points = noisy_points(32, 9);
        let mut detector = Detector::bootstrap(config, &mut ok_stream(&points[..16])).unwrap();
        let report = detector.process_chunk(&points[16..]).unwrap();
        assert_eq!(report.cutoff, 0.5);
        for (score, label) in report.scores.iter().zip(&report.labels) {
            assert_eq!(*label, *score >= 0.5);
        }
    }

    #[test]
    fn contamination_cutoff_is_the_lowest_flagged_score() {
        let points = noisy_points(32, 10);
        let mut detector = Detector::bootstrap(test_config(), &mut ok_stream(&points[..16])).unwrap();
        let report = detector.process_chunk(&points[16..]).unwrap();
        assert_eq!(report.labels.iter().filter(|&&l| l).count(), 4);
        let lowest_flagged = report
            .scores
            .iter()
            .zip(&report.labels)
            .filter(|(_, &l)| l)
            .map(|(&s, _)| s)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.cutoff, lowest_flagged);
    }

    #[test]
    fn rank_trees_degenerate_cutoffs_fall_back_to_age_order() {
        let points = noisy_points(16, 11);
        let detector = Detector::bootstrap(test_config(), &mut ok_stream(&points)).unwrap();
        let chunk = noisy_points(16, 12);

        // A cutoff above every possible score: no tree flags anything.
        let forest = &mut detector.forest.clone();
        let order = rank_trees(forest, &chunk, 0.999_999).unwrap();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
        assert!(forest.meta().iter().all(|m| m.anomalies_flagged == 0));

        // A cutoff below every possible score: every tree flags everything.
        let forest = &mut detector.forest.clone();
        let order = rank_trees(forest, &chunk, 1e-9).unwrap();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
        assert!(forest.meta().iter().all(|m| m.anomalies_flagged == 16));
    }

    #[test]
    fn shingle_definition_examples() {
        let out = shingle(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(
            out,
            vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]
        );

        let identity = shingle(&[5.0, 6.0], 1).unwrap();
        assert_eq!(identity, vec![vec![5.0], vec![6.0]]);

        let ten: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(shingle(&ten, 4).unwrap().len(), 7);

        assert!(shingle(&ten, 0).is_err());
        assert!(shingle(&[1.0, 2.0], 3).unwrap().is_empty());
    }

    #[test]
    fn drive_visits_every_chunk_with_stream_offsets() {
        let points = noisy_points(70, 13);
        let mut offsets = Vec::new();
        let mut sizes = Vec::new();
        let (_, summary) = drive(test_config(), ok_stream(&points), |offset, chunk, report| {
            offsets.push(offset);
            sizes.push(chunk.len());
            assert_eq!(report.scores.len(), chunk.len());
            Ok(())
        })
        .unwrap();
        assert_eq!(offsets, vec![16, 32, 48, 64]);
        assert_eq!(sizes, vec![16, 16, 16, 6]);
        assert_eq!(summary.total_points, 70);
        assert_eq!(summary.chunks, 4);
        assert_eq!(summary.bootstrap_points, 16);
    }

    #[test]
    fn replay_is_deterministic() {
        let points = noisy_points(100, 14);
        let a = run_prequential(test_config(), &points).unwrap();
        let b = run_prequential(test_config(), &points).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.first_scored, 16);
        assert_eq!(a.scores.len(), points.len() - 16);

        let mut other_seed = test_config();
        other_seed.seed = 8;
        let c = run_prequential(other_seed, &points).unwrap();
        assert_ne!(a.scores, c.scores);
    }
}
