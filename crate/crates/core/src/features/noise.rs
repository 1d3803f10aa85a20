//! Distractor corpora anchoring the zero end of the score.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{write_wav, AudioClip, FeatureError};
use crate::data::{DatasetManifest, DatasetRole, UtteranceEntry};

/// Standard deviation of the Gaussian noise corpus before clipping to [-1, 1].
pub const GAUSSIAN_SIGMA: f64 = 0.33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    Uniform,
    Gaussian,
    Ones,
    Zeros,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] =
        [NoiseKind::Uniform, NoiseKind::Gaussian, NoiseKind::Ones, NoiseKind::Zeros];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Uniform => "uniform",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Ones => "ones",
            NoiseKind::Zeros => "zeros",
        }
    }

    fn stream(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FeatureError::InvalidArgument(format!("unknown noise kind `{s}`")))
    }
}

/// Clips plus a manifest whose audio paths are relative file names.
#[derive(Debug, Clone)]
pub struct NoiseCorpus {
    pub kind: NoiseKind,
    pub manifest: DatasetManifest,
    pub clips: Vec<AudioClip>,
}

/// Generates `n_clips` clips with durations uniform in `dur_range_s`.
/// Output depends only on the arguments.
pub fn generate_noise_corpus(
    kind: NoiseKind,
    n_clips: usize,
    dur_range_s: (f64, f64),
    sample_rate: u32,
    seed: u64,
) -> Result<NoiseCorpus, FeatureError> {
    let (lo, hi) = dur_range_s;
    if n_clips == 0 {
        return Err(FeatureError::InvalidArgument("n_clips must be at least 1".into()));
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(FeatureError::InvalidArgument(format!("bad duration range ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind.stream());
    let normal = Normal::new(0.0, GAUSSIAN_SIGMA).expect("valid sigma");

    let mut clips = Vec::with_capacity(n_clips);
    let mut entries = Vec::with_capacity(n_clips);
    for i in 0..n_clips {
        let dur = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let n = ((dur * sample_rate as f64).round() as usize).max(1);
        let samples: Vec<f32> = match kind {
            NoiseKind::Uniform => (0..n).map(|_| rng.random_range(-1.0f32..=1.0)).collect(),
            NoiseKind::Gaussian => (0..n)
                .map(|_| normal.sample(&mut rng).clamp(-1.0, 1.0) as f32)
                .collect(),
            NoiseKind::Ones => vec![1.0; n],
            NoiseKind::Zeros => vec![0.0; n],
        };
        let clip = AudioClip::new(samples, sample_rate)?;
        let id = format!("{}_{i:04}", kind.name());
        entries.push(UtteranceEntry {
            audio_path: PathBuf::from(format!("{id}.wav")),
            id,
            speaker: kind.name().to_owned(),
            text: None,
            duration_s: clip.duration_s(),
        });
        clips.push(clip);
    }
    let manifest = DatasetManifest::new(kind.name(), DatasetRole::Noise, entries)
        .map_err(|e| FeatureError::InvalidArgument(e.to_string()))?;
    Ok(NoiseCorpus { kind, manifest, clips })
}

/// Writes `<dir>/<id>.wav` for every clip and `<dir>/manifest.jsonl`.
pub fn write_noise_corpus(corpus: &NoiseCorpus, dir: impl AsRef<Path>) -> Result<PathBuf, FeatureError> {
    let dir = dir.as_ref();
    let io = |source| FeatureError::Io { path: dir.to_owned(), source };
    fs::create_dir_all(dir).map_err(io)?;
    for (entry, clip) in corpus.manifest.entries().iter().zip(&corpus.clips) {
        write_wav(clip, dir.join(&entry.audio_path))?;
    }
    let path = dir.join("manifest.jsonl");
    fs::write(&path, corpus.manifest.to_jsonl())
        .map_err(|source| FeatureError::Io { path: path.clone(), source })?;
    Ok(path)
}
