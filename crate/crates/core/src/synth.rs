//! Labeled sine-wave streams with injected anomalies, for controlled
//! experiments: a clean sinusoid plus Gaussian noise, with point anomalies
//! (one displaced sample), contextual anomalies (a span held at a level that
//! is normal globally but wrong for its phase), and collective anomalies (a
//! span running at a shifted frequency).

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::eval::AnomalyType;
use crate::rng::{derive_rng, DOMAIN_SYNTH};
use crate::{Error, Result};

/// One anomaly to splice into the stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub kind: AnomalyType,
    /// Index of the first affected sample.
    pub position: usize,
    /// Number of affected samples; point anomalies must use span 1.
    pub span: usize,
    /// Strength relative to the wave amplitude.
    pub magnitude: f64,
}

/// Full description of a synthetic stream; equal specs generate identical
/// streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineStreamSpec {
    pub length: usize,
    pub amplitude: f64,
    /// Samples per full cycle.
    pub period: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub injections: Vec<Injection>,
}

impl SineStreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidSpec("length must be positive".into()));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "noise sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        for injection in &self.injections {
            if injection.kind == AnomalyType::None {
                return Err(Error::InvalidSpec(
                    "injections must have an anomalous type".into(),
                ));
            }
            if injection.span == 0 {
                return Err(Error::InvalidSpec(format!(
                    "injection at {} has span 0",
                    injection.position
                )));
            }
            if injection.kind == AnomalyType::Point && injection.span != 1 {
                return Err(Error::InvalidSpec(format!(
                    "point injection at {} must have span 1, got {}",
                    injection.position, injection.span
                )));
            }
            if injection.position + injection.span > self.length {
                return Err(Error::InvalidSpec(format!(
                    "injection at {} spans past the stream end",
                    injection.position
                )));
            }
            if !injection.magnitude.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "injection at {} has non-finite magnitude",
                    injection.position
                )));
            }
        }
        let mut ordered: Vec<&Injection> = self.injections.iter().collect();
        ordered.sort_by_key(|inj| inj.position);
        for pair in ordered.windows(2) {
            if pair[0].position + pair[0].span > pair[1].position {
                return Err(Error::OverlappingInjections(pair[1].position));
            }
        }
        Ok(())
    }

    /// The reconstruction used by the replica benchmark: a 2048-sample wave
    /// with one anomaly of each type injected well past the first window.
    /// Also shipped as `configs/sine_replica.toml`.
    pub fn replica() -> Self {
        Self {
            length: 2048,
            amplitude: 1.0,
            period: 64.0,
            noise_sigma: 0.05,
            seed: 7,
            injections: vec![
                Injection {
                    kind: AnomalyType::Point,
                    position: 624,
                    span: 1,
                    magnitude: 3.0,
                },
                Injection {
                    kind: AnomalyType::Contextual,
                    position: 992,
                    span: 32,
                    magnitude: 1.0,
                },
                Injection {
                    kind: AnomalyType::Collective,
                    position: 1400,
                    span: 32,
                    magnitude: 1.0,
                },
            ],
        }
    }
}

/// A generated stream with its ground truth.
#[derive(Clone, Debug)]
pub struct SynthStream {
    pub values: Vec<f64>,
    pub labels: Vec<bool>,
    pub types: Vec<AnomalyType>,
}

/// Generates the stream described by the spec. Every sample draws exactly one
/// noise value, so the noise sequence depends only on the seed, not on the
/// injections.
pub fn generate(spec: &SineStreamSpec) -> Result<SynthStream> {
    spec.validate()?;
    let mut rng = derive_rng(spec.seed, DOMAIN_SYNTH, 0);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidSpec(format!("noise distribution: {e}")))?;

    let mut kind_at: Vec<AnomalyType> = vec![AnomalyType::None; spec.length];
    let mut magnitude_at: Vec<f64> = vec![0.0; spec.length];
    for injection in &spec.injections {
        for t in injection.position..injection.position + injection.span {
            kind_at[t] = injection.kind;
            magnitude_at[t] = injection.magnitude;
        }
    }

    let omega = std::f64::consts::TAU / spec.period;
    let mut values = Vec::with_capacity(spec.length);
    let mut labels = Vec::with_capacity(spec.length);
    let mut types = Vec::with_capacity(spec.length);
    for t in 0..spec.length {
        let phase = omega * t as f64;
        let eps = noise.sample(&mut rng);
        let level = magnitude_at[t] * spec.amplitude;
        let value = match kind_at[t] {
            AnomalyType::None => spec.amplitude * phase.sin() + eps,
            AnomalyType::Point => spec.amplitude * phase.sin() + level + eps,
            AnomalyType::Contextual => level + eps,
            AnomalyType::Collective => level * (4.0 * phase).sin() + eps,
        };
        values.push(value);
        labels.push(kind_at[t] != AnomalyType::None);
        types.push(kind_at[t]);
    }
    Ok(SynthStream {
        values,
        labels,
        types,
    })
}

/// Ground truth for a shingled view of the stream: a shingle is anomalous iff
/// it covers at least one anomalous sample, and it takes the type of the
/// first anomalous sample it covers.
pub fn shingled_ground_truth(
    labels: &[bool],
    types: &[AnomalyType],
    width: usize,
) -> Result<(Vec<bool>, Vec<AnomalyType>)> {
    if width == 0 {
        return Err(Error::InvalidConfig("shingle width must be at least 1".into()));
    }
    if labels.len() != types.len() {
        return Err(Error::LengthMismatch {
            what: "type tags",
            expected: labels.len(),
            got: types.len(),
        });
    }
    let mut out_labels = Vec::new();
    let mut out_types = Vec::new();
    for (window, type_window) in labels.windows(width).zip(types.windows(width)) {
        let first_anomaly = window.iter().position(|&l| l);
        out_labels.push(first_anomaly.is_some());
        out_types.push(match first_anomaly {
            Some(i) => type_window[i],
            Option::None => AnomalyType::None,
        });
    }
    Ok((out_labels, out_types))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean_spec(length: usize) -> SineStreamSpec {
        SineStreamSpec {
            length,
            amplitude: 1.0,
            period: 64.0,
            noise_sigma: 0.0,
            seed: 1,
            injections: Vec::new(),
        }
    }

    #[test]
    fn clean_stream_is_a_pure_sine() {
        let stream = generate(&clean_spec(128)).unwrap();
        assert!(stream.labels.iter().all(|&l| !l));
        assert!((stream.values[0] - 0.0).abs() < 1e-12);
        // Quarter period: the crest.
        assert!((stream.values[16] - 1.0).abs() < 1e-12);
        assert!((stream.values[48] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_injection_displaces_exactly_one_sample() {
        let mut spec = clean_spec(1024);
        spec.injections.push(Injection {
            kind: AnomalyType::Point,
            position: 500,
            span: 1,
            magnitude: 3.0,
        });
        let stream = generate(&spec).unwrap();
        assert_eq!(stream.labels.iter().filter(|&&l| l).count(), 1);
        assert!(stream.labels[500]);
        assert_eq!(stream.types[500], AnomalyType::Point);
        let clean = generate(&clean_spec(1024)).unwrap();
        assert!((stream.values[500] - (clean.values[500] + 3.0)).abs() < 1e-12);
        assert_eq!(stream.values[499], clean.values[499]);
    }

    #[test]
    fn contextual_injection_holds_a_level() {
        let mut spec = clean_spec(256);
        spec.injections.push(Injection {
            kind: AnomalyType::Contextual,
            position: 96,
            span: 32,
            magnitude: 1.0,
        });
        let stream = generate(&spec).unwrap();
        for t in 96..128 {
            assert_eq!(stream.values[t], 1.0, "sample {t} should hold the level");
            assert_eq!(stream.types[t], AnomalyType::Contextual);
        }
    }

    #[test]
    fn collective_injection_shifts_the_frequency() {
        let mut spec = clean_spec(256);
        spec.injections.push(Injection {
            kind: AnomalyType::Collective,
            position: 128,
            span: 32,
            magnitude: 1.0,
        });
        let stream = generate(&spec).unwrap();
        let omega = std::f64::consts::TAU / 64.0;
        for t in 128..160 {
            let expected = (4.0 * omega * t as f64).sin();
            assert!((stream.values[t] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn label_count_equals_total_injected_span() {
        let stream = generate(&SineStreamSpec::replica()).unwrap();
        assert_eq!(stream.labels.iter().filter(|&&l| l).count(), 65);
    }

    #[test]
    fn replica_leaves_the_first_window_clean() {
        let spec = SineStreamSpec::replica();
        spec.validate().unwrap();
        let stream = generate(&spec).unwrap();
        assert!(stream.labels[..256].iter().all(|&l| !l));
        let mut kinds: Vec<AnomalyType> = spec.injections.iter().map(|i| i.kind).collect();
        kinds.sort();
        kinds.dedup();
        assert_eq!(kinds.len(), 3, "replica must carry one of each type");
    }

    #[test]
    fn noiseless_shingles_of_one_period_are_rotations() {
        let stream = generate(&clean_spec(256)).unwrap();
        let shingles = crate::stream::shingle(&stream.values, 64).unwrap();
        for t in 0..shingles.len() - 1 {
            let mut rotated = shingles[t].clone();
            rotated.rotate_left(1);
            for (a, b) in rotated.iter().zip(&shingles[t + 1]) {
                assert!((a - b).abs() < 1e-9, "shingle {t} is not a rotation");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let mut spec = clean_spec(512);
        spec.noise_sigma = 0.05;
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.values, b.values);
        spec.seed = 2;
        let c = generate(&spec).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn validation_rejects_malformed_specs() {
        let mut spec = clean_spec(100);
        spec.injections.push(Injection {
            kind: AnomalyType::Point,
            position: 99,
            span: 2,
            magnitude: 1.0,
        });
        assert!(spec.validate().is_err());

        let mut spec = clean_spec(100);
        spec.injections.push(Injection {
            kind: AnomalyType::Collective,
            position: 10,
            span: 0,
            magnitude: 1.0,
        });
        assert!(spec.validate().is_err());

        let mut spec = clean_spec(100);
        spec.injections.push(Injection {
            kind: AnomalyType::None,
            position: 10,
            span: 1,
            magnitude: 1.0,
        });
        assert!(spec.validate().is_err());

        let mut spec = clean_spec(100);
        spec.injections.push(Injection {
            kind: AnomalyType::Point,
            position: 10,
            span: 3,
            magnitude: 1.0,
        });
        assert!(spec.validate().is_err());

        let mut spec = clean_spec(100);
        spec.amplitude = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn overlapping_injections_are_rejected_with_the_collision_point() {
        let mut spec = clean_spec(200);
        spec.injections.push(Injection {
            kind: AnomalyType::Contextual,
            position: 50,
            span: 32,
            magnitude: 1.0,
        });
        spec.injections.push(Injection {
            kind: AnomalyType::Collective,
            position: 70,
            span: 8,
            magnitude: 1.0,
        });
        assert!(matches!(
            spec.validate(),
            Err(Error::OverlappingInjections(70))
        ));
    }

    #[test]
    fn shingled_ground_truth_takes_the_first_covered_type() {
        let labels = [false, false, true, false];
        let types = [
            AnomalyType::None,
            AnomalyType::None,
            AnomalyType::Point,
            AnomalyType::None,
        ];
        let (out_labels, out_types) = shingled_ground_truth(&labels, &types, 2).unwrap();
        assert_eq!(out_labels, vec![false, true, true]);
        assert_eq!(
            out_types,
            vec![AnomalyType::None, AnomalyType::Point, AnomalyType::Point]
        );
    }

    #[test]
    fn shingled_ground_truth_validates_inputs() {
        assert!(shingled_ground_truth(&[true], &[], 1).is_err());
        assert!(shingled_ground_truth(&[true], &[AnomalyType::Point], 0).is_err());
    }
}
