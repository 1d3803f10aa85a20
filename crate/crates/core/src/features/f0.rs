//! Frame-wise F0 from the normalized autocorrelation.

use super::{AudioClip, FeatureError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Config {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Frames whose best normalized correlation falls below this are unvoiced.
    pub voicing_threshold: f64,
}

impl Default for F0Config {
    fn default() -> Self {
        Self { frame_ms: 25.0, hop_ms: 10.0, f0_min: 60.0, f0_max: 400.0, voicing_threshold: 0.3 }
    }
}

/// Among candidate peaks, the shortest lag within this fraction of the best
/// correlation wins. Guards against locking onto a subharmonic.
const OCTAVE_TOLERANCE: f64 = 0.9;

/// F0 in Hz for every voiced frame, in frame order.
pub fn extract_f0(clip: &AudioClip, cfg: &F0Config) -> Result<Vec<f64>, FeatureError> {
    if !(cfg.f0_min > 0.0 && cfg.f0_max > cfg.f0_min) {
        return Err(FeatureError::InvalidArgument(format!(
            "F0 band [{}, {}] is empty",
            cfg.f0_min, cfg.f0_max
        )));
    }
    let sr = clip.sample_rate as f64;
    let frame_len = clip.ms_to_samples(cfg.frame_ms);
    let hop = clip.ms_to_samples(cfg.hop_ms).max(1);
    let lag_min = ((sr / cfg.f0_max).floor() as usize).max(2);
    let lag_max = (sr / cfg.f0_min).ceil() as usize;
    if lag_max + 2 >= frame_len {
        return Err(FeatureError::InvalidArgument(format!(
            "frame of {frame_len} samples cannot hold a {lag_max}-sample period"
        )));
    }
    if clip.samples.len() < frame_len {
        return Err(FeatureError::ClipTooShort {
            duration_s: clip.duration_s(),
            min_s: cfg.frame_ms / 1000.0,
        });
    }

    let mut frame = vec![0.0f64; frame_len];
    let mut prefix = vec![0.0f64; frame_len + 1];
    let mut corr = vec![0.0f64; lag_max + 2];
    let mut out = Vec::new();

    let mut start = 0;
    while start + frame_len <= clip.samples.len() {
        let raw = &clip.samples[start..start + frame_len];
        let mean = raw.iter().map(|&v| v as f64).sum::<f64>() / frame_len as f64;
        for (dst, &v) in frame.iter_mut().zip(raw) {
            *dst = v as f64 - mean;
        }
        for (k, &v) in frame.iter().enumerate() {
            prefix[k + 1] = prefix[k] + v * v;
        }
        start += hop;

        let energy = prefix[frame_len];
        if energy <= 1e-12 * frame_len as f64 {
            continue;
        }

        let mut best = f64::NEG_INFINITY;
        for lag in lag_min - 1..=lag_max + 1 {
            let n = frame_len - lag;
            let cross: f64 = frame[..n].iter().zip(&frame[lag..]).map(|(a, b)| a * b).sum();
            let e0 = prefix[n];
            let e1 = prefix[frame_len] - prefix[lag];
            let denom = (e0 * e1).sqrt();
            corr[lag] = if denom > 0.0 { cross / denom } else { 0.0 };
            if (lag_min..=lag_max).contains(&lag) {
                best = best.max(corr[lag]);
            }
        }
        if best < cfg.voicing_threshold {
            continue;
        }

        let pick = (lag_min..=lag_max).find(|&lag| {
            corr[lag] >= OCTAVE_TOLERANCE * best
                && corr[lag] >= corr[lag - 1]
                && corr[lag] >= corr[lag + 1]
        });
        let Some(lag) = pick else { continue };

        let (l, c, r) = (corr[lag - 1], corr[lag], corr[lag + 1]);
        let curvature = l - 2.0 * c + r;
        let offset = if curvature < 0.0 { (0.5 * (l - r) / curvature).clamp(-0.5, 0.5) } else { 0.0 };
        let f0 = sr / (lag as f64 + offset);
        if (cfg.f0_min..=cfg.f0_max).contains(&f0) {
            out.push(f0);
        }
    }

    if out.is_empty() {
        Err(FeatureError::NoVoicedFrames)
    } else {
        Ok(out)
    }
}
