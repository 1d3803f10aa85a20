#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use distscore::features::{generate_noise_corpus, write_wav, AudioClip, NoiseKind};
use distscore::{DatasetManifest, DatasetRole, UtteranceEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_RATE: u32 = 16_000;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distscore"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn distscore")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "distscore {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

/// Speech-like clip: a voiced tone whose pitch glides over the whole
/// 110-210 Hz range, amplitude-modulated at a syllable-like rate near 4 Hz,
/// over a faint noise floor.
pub fn speechlike_clip(rng: &mut ChaCha8Rng) -> AudioClip {
    let dur = rng.random_range(4.0..6.0);
    let syllable_hz = rng.random_range(3.8..4.2);
    let glide_hz = rng.random_range(0.6..0.9);
    let glide_phase = rng.random_range(0.0..TAU);
    let sr = SAMPLE_RATE as f64;
    let n = (dur * sr) as usize;
    let mut phase = 0.0;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let f0 = 160.0 + 50.0 * (TAU * glide_hz * t + glide_phase).sin();
            phase += TAU * f0 / sr;
            let env = 0.5 * (1.0 - (TAU * syllable_hz * t).cos());
            let floor = 0.01 * rng.random_range(-1.0..1.0);
            (0.6 * env * phase.sin() + floor) as f32
        })
        .collect();
    AudioClip::new(samples, SAMPLE_RATE).expect("valid clip")
}

fn entry(id: String, speaker: &str, clip: &AudioClip) -> UtteranceEntry {
    UtteranceEntry {
        audio_path: PathBuf::from(format!("{id}.wav")),
        id,
        speaker: speaker.into(),
        text: None,
        duration_s: clip.duration_s(),
    }
}

/// Writes `<dir>/manifest.jsonl` plus one WAV per clip.
pub fn write_corpus(dir: &Path, id: &str, role: DatasetRole, clips: &[(String, AudioClip)]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let entries = clips
        .iter()
        .enumerate()
        .map(|(i, (utt, clip))| {
            write_wav(clip, dir.join(format!("{utt}.wav"))).unwrap();
            entry(utt.clone(), &format!("spk{}", i % 10), clip)
        })
        .collect();
    let path = dir.join("manifest.jsonl");
    DatasetManifest::new(id, role, entries).unwrap().write(&path).unwrap();
    path
}

pub fn speechlike_clips(n: usize, seed: u64) -> Vec<(String, AudioClip)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("utt{i:04}"), speechlike_clip(&mut rng))).collect()
}

pub fn speechlike_corpus(dir: &Path, id: &str, role: DatasetRole, n: usize, seed: u64) -> PathBuf {
    write_corpus(dir, id, role, &speechlike_clips(n, seed))
}

/// Uniform-noise clips with the same duration range as the speech-like ones.
pub fn uniform_clips(n: usize, seed: u64) -> Vec<(String, AudioClip)> {
    let corpus = generate_noise_corpus(NoiseKind::Uniform, n, (4.0, 6.0), SAMPLE_RATE, seed).unwrap();
    corpus
        .manifest
        .entries()
        .iter()
        .zip(corpus.clips)
        .map(|(e, c)| (e.id.clone(), c))
        .collect()
}

/// Writes the four noise reference corpora under `<dir>/<kind>/`.
pub fn noise_refs(dir: &Path, n: usize, seed: u64) -> PathBuf {
    run_ok(&["noise", "--kind", "all", "--out", dir.to_str().unwrap(), "--n", &n.to_string(), "--seed", &seed.to_string()]);
    dir.to_path_buf()
}
