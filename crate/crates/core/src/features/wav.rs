use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, FeatureError};

fn map_hound(path: &Path, e: hound::Error) -> FeatureError {
    match e {
        hound::Error::IoError(source) if source.kind() == std::io::ErrorKind::NotFound => {
            FeatureError::Io { path: path.to_owned(), source }
        }
        hound::Error::IoError(source) if source.kind() == std::io::ErrorKind::UnexpectedEof => {
            FeatureError::CorruptHeader(format!("{}: unexpected end of file", path.display()))
        }
        hound::Error::IoError(source) => FeatureError::Io { path: path.to_owned(), source },
        hound::Error::FormatError(msg) => {
            FeatureError::CorruptHeader(format!("{}: {msg}", path.display()))
        }
        hound::Error::Unsupported => {
            FeatureError::UnsupportedEncoding(format!("{}: unsupported WAV variant", path.display()))
        }
        other => FeatureError::CorruptHeader(format!("{}: {other}", path.display())),
    }
}

/// Reads a PCM WAV file. Integer PCM (16/24/32-bit) is scaled to `[-1, 1]`
/// and channels are averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, FeatureError> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(FeatureError::CorruptHeader("zero channels".into()));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (fmt, bits) => {
            return Err(FeatureError::UnsupportedEncoding(format!(
                "{}: {bits}-bit {fmt:?}",
                path.display()
            )))
        }
    };

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| (frame.iter().map(|&v| v as f64).sum::<f64>() / channels as f64) as f32)
            .collect()
    };
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes a mono 32-bit float WAV.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in &clip.samples {
        w.write_sample(s).map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))
}
