//! A synthetic detection task with planted lexical cues.
//!
//! Each item comes with a ready-made debate transcript that follows the
//! standard eight-turn plan. Filler sentences are drawn from a neutral
//! vocabulary; cue words are placed in selected turns so that the label is
//! recoverable from the debate but not from the news text.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::debate::plan_debate;
use crate::domain::{DebateConfig, DebateLog, DebateStage, DebateTurn, Label, NewsItem, Split, Stance};

const FILLER: &[&str] = &[
    "council", "harbor", "meeting", "weather", "season", "market", "bridge", "village", "schedule", "festival",
    "library", "traffic", "garden", "district", "budget", "museum", "railway", "hospital", "stadium", "factory",
    "river", "program", "committee", "station", "highway", "school", "airport", "county", "network", "project",
    "harvest", "energy", "airline", "campus", "theater", "election", "mayor", "policy", "report", "survey",
    "shipment", "contract", "tourism", "climate", "coastline", "pipeline", "orchestra", "exhibit", "lecture", "vendor",
];

const REAL_CUES: &[&str] = &["corroborated", "documented", "verified"];
const FAKE_CUES: &[&str] = &["fabricated", "doctored", "hoax"];
const SHARED_CUES: &[&str] = &["flagged", "contested"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticVariant {
    /// Label-specific cue words appear in one to two turns of the team whose
    /// position matches the label.
    Planted,
    /// One shared cue word appears in a single turn; the label is the stance
    /// of the team that spoke it, so only role information separates the
    /// classes.
    RoleDependent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
    pub variant: SyntheticVariant,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            train: 500,
            val: 0,
            test: 200,
            seed: 7,
            variant: SyntheticVariant::Planted,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticItem {
    pub item: NewsItem,
    pub log: DebateLog,
}

fn filler_sentence(rng: &mut ChaCha8Rng, extra: Option<&str>) -> String {
    let n = rng.random_range(8..=14);
    let mut words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).expect("non-empty")).collect();
    if let Some(cue) = extra {
        let at = rng.random_range(0..=words.len());
        words.insert(at, cue);
    }
    let mut s = words.join(" ");
    s.push('.');
    s
}

fn make_item(rng: &mut ChaCha8Rng, id: String, split: Split, variant: SyntheticVariant) -> SyntheticItem {
    let label = if rng.random_bool(0.5) { Label::Fake } else { Label::Real };
    let cue_team = match label {
        Label::Real => Stance::True,
        Label::Fake => Stance::Fake,
    };
    let cue_stages: Vec<DebateStage> = match variant {
        SyntheticVariant::Planted => {
            let k = rng.random_range(1..=2);
            DebateStage::ALL.choose_multiple(rng, k).copied().collect()
        }
        SyntheticVariant::RoleDependent => vec![*DebateStage::ALL.choose(rng).expect("non-empty")],
    };
    let news = format!("{} {}", filler_sentence(rng, None), filler_sentence(rng, None));

    let plan = plan_debate(&DebateConfig::default()).expect("default plan");
    let mut log = DebateLog::new(id.clone());
    for stage_plan in &plan {
        for slot in &stage_plan.slots {
            let cue = (slot.stance == cue_team && cue_stages.contains(&stage_plan.stage)).then(|| {
                let pool = match variant {
                    SyntheticVariant::Planted if label == Label::Real => REAL_CUES,
                    SyntheticVariant::Planted => FAKE_CUES,
                    SyntheticVariant::RoleDependent => SHARED_CUES,
                };
                *pool.choose(rng).expect("non-empty")
            });
            let text = format!("{} {}", filler_sentence(rng, cue), filler_sentence(rng, None));
            let target_stage = match stage_plan.stage {
                DebateStage::CrossExamination => Some(DebateStage::Opening),
                DebateStage::Rebuttal => Some(DebateStage::CrossExamination),
                _ => None,
            };
            let targets = target_stage
                .map(|ts| {
                    log.turns_in(ts)
                        .filter(|t| t.stance == slot.stance.opposite())
                        .map(|t| t.turn_index)
                        .collect()
                })
                .unwrap_or_default();
            log.turns.push(DebateTurn {
                turn_index: log.turns.len(),
                agent_id: slot.agent_id(),
                stance: slot.stance,
                role: slot.role,
                stage: stage_plan.stage,
                text,
                targets,
            });
        }
    }
    SyntheticItem {
        item: NewsItem {
            id,
            content: news,
            label: Some(label),
            split: Some(split),
        },
        log,
    }
}

/// Deterministic in `config.seed`.
pub fn generate_synthetic(config: &SyntheticConfig) -> Vec<SyntheticItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.train + config.val + config.test);
    for (split, n) in [(Split::Train, config.train), (Split::Val, config.val), (Split::Test, config.test)] {
        for i in 0..n {
            let id = format!("syn-{}-{i:04}", split.as_str());
            out.push(make_item(&mut rng, id, split, config.variant));
        }
    }
    out
}
