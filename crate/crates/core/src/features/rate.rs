//! Speaking-rate features: deduplicated discrete-unit rate and an
//! energy-envelope syllable rate.

use std::fs;
use std::path::Path;

use super::{AudioClip, FeatureError};

/// Discrete units for one utterance, as emitted by an external tokenizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub utterance_id: String,
    pub tokens: Vec<u32>,
    pub n_frames: usize,
}

/// Number of runs of identical consecutive tokens divided by the frame count.
pub fn dedup_token_rate(seq: &TokenSequence) -> Result<f64, FeatureError> {
    if seq.tokens.is_empty() {
        return Err(FeatureError::EmptyTokens);
    }
    let runs = 1 + seq.tokens.windows(2).filter(|w| w[0] != w[1]).count();
    if seq.n_frames < runs {
        return Err(FeatureError::InvalidArgument(format!(
            "`{}`: {runs} deduplicated tokens exceed {} frames",
            seq.utterance_id, seq.n_frames
        )));
    }
    Ok(runs as f64 / seq.n_frames as f64)
}

/// Parses a token file: one `utterance_id n_frames tok tok ...` line per
/// utterance, whitespace separated. Blank lines and `#` comments are skipped.
pub fn read_token_file(path: impl AsRef<Path>) -> Result<Vec<TokenSequence>, FeatureError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|source| FeatureError::Io { path: path.to_owned(), source })?;
    parse_tokens(&text)
}

pub(crate) fn parse_tokens(text: &str) -> Result<Vec<TokenSequence>, FeatureError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| FeatureError::MalformedTokens { line: line_no, reason };
        let mut fields = line.split_whitespace();
        let utterance_id = fields.next().expect("non-empty line").to_owned();
        let n_frames = fields
            .next()
            .ok_or_else(|| bad("missing frame count".into()))?
            .parse::<usize>()
            .map_err(|e| bad(format!("frame count: {e}")))?;
        let tokens = fields
            .map(|t| t.parse::<u32>().map_err(|e| bad(format!("token `{t}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(TokenSequence { utterance_id, tokens, n_frames });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyllableConfig {
    pub hop_ms: f64,
    pub smooth_ms: f64,
    pub min_peak_distance_ms: f64,
    /// A peak must exceed the envelope median by this fraction of the median.
    pub peak_margin: f64,
}

impl Default for SyllableConfig {
    fn default() -> Self {
        Self { hop_ms: 10.0, smooth_ms: 80.0, min_peak_distance_ms: 120.0, peak_margin: 0.05 }
    }
}

pub const MIN_SYLLABLE_CLIP_S: f64 = 0.5;

/// Peaks per second of the smoothed RMS envelope.
pub fn extract_syllable_rate(clip: &AudioClip, cfg: &SyllableConfig) -> Result<f64, FeatureError> {
    let duration_s = clip.duration_s();
    if duration_s < MIN_SYLLABLE_CLIP_S {
        return Err(FeatureError::ClipTooShort { duration_s, min_s: MIN_SYLLABLE_CLIP_S });
    }
    let hop = clip.ms_to_samples(cfg.hop_ms).max(1);
    let envelope: Vec<f64> = clip
        .samples
        .chunks_exact(hop)
        .map(|c| (c.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / hop as f64).sqrt())
        .collect();
    if envelope.len() < 3 {
        return Ok(0.0);
    }

    let width = ((cfg.smooth_ms / cfg.hop_ms).round() as usize).max(1);
    let smooth = moving_average(&envelope, width);

    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 { 0.5 * (sorted[mid - 1] + sorted[mid]) } else { sorted[mid] };
    let floor = median * (1.0 + cfg.peak_margin);

    let mut peaks: Vec<usize> = (1..smooth.len() - 1)
        .filter(|&k| smooth[k] > smooth[k - 1] && smooth[k] >= smooth[k + 1] && smooth[k] > floor)
        .collect();

    // Keep the tallest peaks first, dropping any within the minimum distance.
    let min_dist = (cfg.min_peak_distance_ms / cfg.hop_ms).ceil() as usize;
    peaks.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in peaks {
        if kept.iter().all(|&k| k.abs_diff(p) >= min_dist) {
            kept.push(p);
        }
    }
    Ok(kept.len() as f64 / duration_s)
}

fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let half = width / 2;
    (0..x.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + width - half).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(tokens: &[u32], n_frames: usize) -> TokenSequence {
        TokenSequence { utterance_id: "u".into(), tokens: tokens.to_vec(), n_frames }
    }

    #[test]
    fn dedup_examples() {
        assert_eq!(dedup_token_rate(&seq(&[5, 5, 7, 7, 7, 2], 6)).unwrap(), 0.5);
        assert_eq!(dedup_token_rate(&seq(&[9; 40], 40)).unwrap(), 1.0 / 40.0);
        assert!(matches!(dedup_token_rate(&seq(&[], 6)), Err(FeatureError::EmptyTokens)));
    }

    #[test]
    fn token_file_parsing() {
        let parsed = parse_tokens("# header\nu1 6 5 5 7 7 7 2\n\nu2 3 1 2 3\n").unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], seq(&[5, 5, 7, 7, 7, 2], 6).with_id("u1"));
        assert!(matches!(parse_tokens("u1 x 1"), Err(FeatureError::MalformedTokens { line: 1, .. })));
        assert!(matches!(parse_tokens("u1 3 1 -2"), Err(FeatureError::MalformedTokens { .. })));
    }

    impl TokenSequence {
        fn with_id(mut self, id: &str) -> Self {
            self.utterance_id = id.into();
            self
        }
    }

    proptest! {
        #[test]
        fn dedup_rate_in_unit_interval_and_repeat_invariant(
            tokens in proptest::collection::vec(0u32..6, 1..60),
            k in 1usize..5,
        ) {
            let n = tokens.len();
            let r = dedup_token_rate(&seq(&tokens, n)).unwrap();
            prop_assert!(r > 0.0 && r <= 1.0);
            // Repeating each token k times merges into the same runs.
            let repeated: Vec<u32> = tokens.iter().flat_map(|&t| std::iter::repeat_n(t, k)).collect();
            prop_assert_eq!(dedup_token_rate(&seq(&repeated, n)).unwrap(), r);
            let rk = dedup_token_rate(&seq(&repeated, n * k)).unwrap();
            prop_assert!((rk * k as f64 - r).abs() <= 1e-15 * r);
        }
    }

    fn am_noise(rate_hz: f64, secs: f64, sr: u32, seed: u64) -> AudioClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (secs * sr as f64) as usize;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / sr as f64;
                let m = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * rate_hz * t).cos());
                (m * rng.random_range(-0.8..0.8)) as f32
            })
            .collect();
        AudioClip::new(samples, sr).unwrap()
    }

    #[test]
    fn am_noise_rate() {
        for seed in 0..5 {
            let r = extract_syllable_rate(&am_noise(4.0, 2.0, 16_000, seed), &SyllableConfig::default()).unwrap();
            assert!((r - 4.0).abs() <= 0.5, "seed {seed}: {r}");
        }
    }

    #[test]
    fn constant_tone_has_no_peaks() {
        for freq in [100.0, 220.0, 333.0, 1000.0] {
            let samples = (0..32_000)
                .map(|i| (0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 16_000.0).sin()) as f32)
                .collect();
            let clip = AudioClip::new(samples, 16_000).unwrap();
            assert_eq!(extract_syllable_rate(&clip, &SyllableConfig::default()).unwrap(), 0.0, "{freq} Hz");
        }
    }

    #[test]
    fn silence_and_short_clips() {
        let zeros = AudioClip::new(vec![0.0; 16_000], 16_000).unwrap();
        assert_eq!(extract_syllable_rate(&zeros, &SyllableConfig::default()).unwrap(), 0.0);
        let short = AudioClip::new(vec![0.1; 3_200], 16_000).unwrap();
        assert!(matches!(
            extract_syllable_rate(&short, &SyllableConfig::default()),
            Err(FeatureError::ClipTooShort { .. })
        ));
    }
}
