//! Deterministic corpus construction: duration filtering, external filter
//! hooks, speaker-pair selection, and reference/synthesis splitting.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DataError, DatasetManifest, DatasetRole, UtteranceEntry};

pub const MIN_DURATION_S: f64 = 3.0;
pub const MAX_DURATION_S: f64 = 30.0;
pub const DEFAULT_PAIR_COUNT: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum PairingError {
    #[error("no utterances left after filtering")]
    EmptyResult,
    #[error("need {needed} speakers with at least two utterances, {qualifying} qualify")]
    InsufficientSpeakers { needed: usize, qualifying: usize },
    #[error("no pairs to split")]
    EmptyInput,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Keeps entries with `min_s <= duration_s <= max_s`, in order.
pub fn filter_duration(manifest: &DatasetManifest, min_s: f64, max_s: f64) -> Result<DatasetManifest, PairingError> {
    let kept: Vec<UtteranceEntry> = manifest
        .entries()
        .iter()
        .filter(|e| e.duration_s >= min_s && e.duration_s <= max_s)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(PairingError::EmptyResult);
    }
    Ok(DatasetManifest::new(manifest.id.clone(), manifest.role, kept)?)
}

/// A named utterance predicate standing in for an external filter.
pub struct FilterHook<'a> {
    pub name: String,
    pub keep: Box<dyn Fn(&UtteranceEntry) -> bool + 'a>,
}

impl<'a> FilterHook<'a> {
    pub fn new(name: impl Into<String>, keep: impl Fn(&UtteranceEntry) -> bool + 'a) -> Self {
        Self { name: name.into(), keep: Box::new(keep) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HookAudit {
    /// `(hook name, rejected count)` in hook order.
    pub rejections: Vec<(String, usize)>,
    /// `(utterance id, hook name)` for every rejected entry.
    pub rejected: Vec<(String, String)>,
}

impl HookAudit {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["hook", "rejected"])?;
        for (name, n) in &self.rejections {
            w.write_record([name.as_str(), &n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Removes entries failing any hook. Each rejection is charged to the first
/// hook (in order) that fails. Returns `None` for the manifest when nothing
/// survives.
pub fn apply_filter_hooks(manifest: &DatasetManifest, hooks: &[FilterHook<'_>]) -> (Option<DatasetManifest>, HookAudit) {
    let mut counts = vec![0usize; hooks.len()];
    let mut rejected = Vec::new();
    let mut kept = Vec::new();
    for e in manifest.entries() {
        match hooks.iter().position(|h| !(h.keep)(e)) {
            Some(i) => {
                counts[i] += 1;
                rejected.push((e.id.clone(), hooks[i].name.clone()));
            }
            None => kept.push(e.clone()),
        }
    }
    let audit = HookAudit {
        rejections: hooks.iter().map(|h| h.name.clone()).zip(counts).collect(),
        rejected,
    };
    let manifest = DatasetManifest::new(manifest.id.clone(), manifest.role, kept).ok();
    (manifest, audit)
}

/// Two utterances of one speaker, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPair {
    pub reference: UtteranceEntry,
    pub synthesis: UtteranceEntry,
}

/// Picks `count` speakers uniformly among those with at least two
/// utterances, then two distinct utterances of each. Pairs are listed in
/// order of each speaker's first appearance.
pub fn select_speaker_pairs(manifest: &DatasetManifest, count: usize, seed: u64) -> Result<Vec<SpeakerPair>, PairingError> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_speaker: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, e) in manifest.entries().iter().enumerate() {
        let list = by_speaker.entry(e.speaker.as_str()).or_default();
        if list.is_empty() {
            order.push(e.speaker.as_str());
        }
        list.push(i);
    }
    let qualifying: Vec<&str> = order.into_iter().filter(|s| by_speaker[s].len() >= 2).collect();
    if qualifying.len() < count || count == 0 {
        return Err(PairingError::InsufficientSpeakers { needed: count, qualifying: qualifying.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = index::sample(&mut rng, qualifying.len(), count).into_vec();
    chosen.sort_unstable();
    let entries = manifest.entries();
    Ok(chosen
        .into_iter()
        .map(|s| {
            let utts = &by_speaker[qualifying[s]];
            let mut two = index::sample(&mut rng, utts.len(), 2).into_vec();
            two.sort_unstable();
            SpeakerPair { reference: entries[utts[two[0]]].clone(), synthesis: entries[utts[two[1]]].clone() }
        })
        .collect())
}

/// First elements form the reference set, second elements the texts to
/// synthesize; index `i` of both belongs to the same speaker.
pub fn split_pairs(id: &str, pairs: &[SpeakerPair]) -> Result<(DatasetManifest, DatasetManifest), PairingError> {
    if pairs.is_empty() {
        return Err(PairingError::EmptyInput);
    }
    let reference = pairs.iter().map(|p| p.reference.clone()).collect();
    let synthesis = pairs.iter().map(|p| p.synthesis.clone()).collect();
    Ok((
        DatasetManifest::new(format!("{id}_reference"), DatasetRole::Real, reference)?,
        DatasetManifest::new(format!("{id}_synthesis"), DatasetRole::Synthetic, synthesis)?,
    ))
}
