//! Core vocabulary shared by the debate, graph, and classifier modules.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Binary veracity label. Encoded as `real = 0`, `fake = 1` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Real, Label::Fake];

    pub fn index(self) -> usize {
        match self {
            Label::Real => 0,
            Label::Fake => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::Real),
            1 => Some(Label::Fake),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Dataset language; selects the prompt variant for the synthesis report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    En,
    Cn,
}

/// A news item under examination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsItem {
    pub id: String,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl NewsItem {
    pub fn new(id: impl Into<String>, content: impl Into<String>) -> Result<Self, DomainError> {
        let item = NewsItem {
            id: id.into(),
            content: content.into(),
            label: None,
            split: None,
        };
        item.check()?;
        Ok(item)
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }

    pub fn check(&self) -> Result<(), DomainError> {
        if self.content.trim().is_empty() {
            return Err(DomainError::EmptyContent(self.id.clone()));
        }
        Ok(())
    }
}

/// Team position. Proponents argue `True`, Opponents argue `Fake`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stance {
    True,
    Fake,
}

impl Stance {
    pub const ALL: [Stance; 2] = [Stance::True, Stance::Fake];

    pub fn opposite(self) -> Self {
        match self {
            Stance::True => Stance::Fake,
            Stance::Fake => Stance::True,
        }
    }

    pub fn team_name(self) -> &'static str {
        match self {
            Stance::True => "Proponent",
            Stance::Fake => "Opponent",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Stance::True => 0,
            Stance::Fake => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DebateRole {
    OpeningSpeaker,
    Questioner,
    Responder,
    Rebutter,
    ClosingSpeaker,
}

impl DebateRole {
    pub const ALL: [DebateRole; 5] = [
        DebateRole::OpeningSpeaker,
        DebateRole::Questioner,
        DebateRole::Responder,
        DebateRole::Rebutter,
        DebateRole::ClosingSpeaker,
    ];

    pub fn index(self) -> usize {
        match self {
            DebateRole::OpeningSpeaker => 0,
            DebateRole::Questioner => 1,
            DebateRole::Responder => 2,
            DebateRole::Rebutter => 3,
            DebateRole::ClosingSpeaker => 4,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DebateRole::OpeningSpeaker => "Opening Speaker",
            DebateRole::Questioner => "Questioner",
            DebateRole::Responder => "Responder",
            DebateRole::Rebutter => "Rebutter",
            DebateRole::ClosingSpeaker => "Closing Speaker",
        }
    }

    /// The stage in which this role may speak.
    pub fn stage(self) -> DebateStage {
        match self {
            DebateRole::OpeningSpeaker => DebateStage::Opening,
            DebateRole::Questioner => DebateStage::CrossExamination,
            DebateRole::Responder | DebateRole::Rebutter => DebateStage::Rebuttal,
            DebateRole::ClosingSpeaker => DebateStage::Closing,
        }
    }

    pub fn legal_in(self, stage: DebateStage) -> bool {
        self.stage() == stage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DebateStage {
    Opening,
    CrossExamination,
    Rebuttal,
    Closing,
}

impl DebateStage {
    pub const ALL: [DebateStage; 4] = [
        DebateStage::Opening,
        DebateStage::CrossExamination,
        DebateStage::Rebuttal,
        DebateStage::Closing,
    ];

    pub fn index(self) -> usize {
        match self {
            DebateStage::Opening => 0,
            DebateStage::CrossExamination => 1,
            DebateStage::Rebuttal => 2,
            DebateStage::Closing => 3,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DebateStage::Opening => "Opening",
            DebateStage::CrossExamination => "CrossExamination",
            DebateStage::Rebuttal => "Rebuttal",
            DebateStage::Closing => "Closing",
        }
    }
}

impl fmt::Display for DebateStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// One agent utterance in the debate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTurn {
    pub turn_index: usize,
    pub agent_id: String,
    pub stance: Stance,
    pub role: DebateRole,
    pub stage: DebateStage,
    pub text: String,
    #[serde(default)]
    pub targets: Vec<usize>,
}

/// The ordered record of a debate over one news item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateLog {
    pub news_id: String,
    pub turns: Vec<DebateTurn>,
}

impl DebateLog {
    pub fn new(news_id: impl Into<String>) -> Self {
        DebateLog {
            news_id: news_id.into(),
            turns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn turns_in(&self, stage: DebateStage) -> impl Iterator<Item = &DebateTurn> {
        self.turns.iter().filter(move |t| t.stage == stage)
    }

    pub fn total_targets(&self) -> usize {
        self.turns.iter().map(|t| t.targets.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("debate log serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictHint {
    LeansReal,
    LeansFake,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub news_id: String,
    pub text: String,
    pub verdict_hint: Option<VerdictHint>,
}

/// Order in which the two teams speak within each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    #[default]
    ProponentFirst,
    OpponentFirst,
}

impl OrderPolicy {
    pub fn order(self) -> [Stance; 2] {
        match self {
            OrderPolicy::ProponentFirst => [Stance::True, Stance::Fake],
            OrderPolicy::OpponentFirst => [Stance::Fake, Stance::True],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationSettings {
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        GenerationSettings {
            temperature: 0.7,
            max_tokens: 512,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebateConfig {
    pub agents_per_team: usize,
    pub generation: GenerationSettings,
    pub order: OrderPolicy,
    /// Character budget for the debate history embedded in one prompt.
    pub history_budget_chars: usize,
}

impl Default for DebateConfig {
    fn default() -> Self {
        DebateConfig {
            agents_per_team: 2,
            generation: GenerationSettings::default(),
            order: OrderPolicy::default(),
            history_budget_chars: 24_000,
        }
    }
}

impl DebateConfig {
    pub fn check(&self) -> Result<(), DomainError> {
        if self.agents_per_team == 0 {
            return Err(DomainError::InvalidConfig(
                "agents_per_team must be at least 1".into(),
            ));
        }
        if !(self.generation.temperature >= 0.0) {
            return Err(DomainError::InvalidConfig(
                "temperature must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    MissingStage(DebateStage),
    MissingStance(DebateStage, Stance),
    NonContiguousIndex { expected: usize },
    StageRegression,
    ForwardReference,
    DuplicateTarget,
    EmptyText,
    RoleStageMismatch,
}

/// A broken invariant in a debate log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub turn: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |f: &mut fmt::Formatter<'_>| match self.turn {
            Some(t) => write!(f, " at turn {t}"),
            None => Ok(()),
        };
        match &self.kind {
            ViolationKind::MissingStage(s) => write!(f, "missing stage {s}")?,
            ViolationKind::MissingStance(s, st) => {
                write!(f, "stage {s} has no {} turn", st.team_name())?
            }
            ViolationKind::NonContiguousIndex { expected } => {
                write!(f, "turn_index not contiguous (expected {expected})")?
            }
            ViolationKind::StageRegression => f.write_str("stage order regression")?,
            ViolationKind::ForwardReference => f.write_str("forward reference")?,
            ViolationKind::DuplicateTarget => f.write_str("duplicate target")?,
            ViolationKind::EmptyText => f.write_str("empty text")?,
            ViolationKind::RoleStageMismatch => f.write_str("role not legal in stage")?,
        }
        at(f)
    }
}

/// Checks every debate-log invariant. An empty result means the log is valid.
pub fn validate_log(log: &DebateLog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut prev_stage: Option<DebateStage> = None;
    for (pos, turn) in log.turns.iter().enumerate() {
        let here = Some(pos);
        if turn.turn_index != pos {
            out.push(Violation {
                turn: here,
                kind: ViolationKind::NonContiguousIndex { expected: pos },
            });
        }
        if let Some(prev) = prev_stage {
            if turn.stage.index() < prev.index() {
                out.push(Violation {
                    turn: here,
                    kind: ViolationKind::StageRegression,
                });
            }
        }
        prev_stage = Some(turn.stage);
        if turn.text.trim().is_empty() {
            out.push(Violation {
                turn: here,
                kind: ViolationKind::EmptyText,
            });
        }
        if !turn.role.legal_in(turn.stage) {
            out.push(Violation {
                turn: here,
                kind: ViolationKind::RoleStageMismatch,
            });
        }
        let mut seen = HashSet::new();
        for &t in &turn.targets {
            if t >= pos {
                out.push(Violation {
                    turn: here,
                    kind: ViolationKind::ForwardReference,
                });
            } else if !seen.insert(t) {
                out.push(Violation {
                    turn: here,
                    kind: ViolationKind::DuplicateTarget,
                });
            }
        }
    }
    for stage in DebateStage::ALL {
        let stances: HashSet<Stance> = log.turns_in(stage).map(|t| t.stance).collect();
        if stances.is_empty() {
            out.push(Violation {
                turn: None,
                kind: ViolationKind::MissingStage(stage),
            });
            continue;
        }
        for st in Stance::ALL {
            if !stances.contains(&st) {
                out.push(Violation {
                    turn: None,
                    kind: ViolationKind::MissingStance(stage, st),
                });
            }
        }
    }
    out
}

pub fn check_log(log: &DebateLog) -> Result<(), DomainError> {
    let violations = validate_log(log);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(DomainError::InvalidLog(
            violations.iter().map(ToString::to_string).collect(),
        ))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The default 8-slot protocol written out by hand.
    pub fn default_log() -> DebateLog {
        let rows: [(Stance, DebateRole, DebateStage, &[usize]); 8] = [
            (Stance::True, DebateRole::OpeningSpeaker, DebateStage::Opening, &[]),
            (Stance::Fake, DebateRole::OpeningSpeaker, DebateStage::Opening, &[]),
            (Stance::True, DebateRole::Questioner, DebateStage::CrossExamination, &[1]),
            (Stance::Fake, DebateRole::Questioner, DebateStage::CrossExamination, &[0]),
            (Stance::True, DebateRole::Rebutter, DebateStage::Rebuttal, &[3]),
            (Stance::Fake, DebateRole::Rebutter, DebateStage::Rebuttal, &[2]),
            (Stance::True, DebateRole::ClosingSpeaker, DebateStage::Closing, &[]),
            (Stance::Fake, DebateRole::ClosingSpeaker, DebateStage::Closing, &[]),
        ];
        DebateLog {
            news_id: "n1".into(),
            turns: rows
                .iter()
                .enumerate()
                .map(|(i, (stance, role, stage, targets))| DebateTurn {
                    turn_index: i,
                    agent_id: format!("agent-{i}"),
                    stance: *stance,
                    role: *role,
                    stage: *stage,
                    text: format!("turn {i} text"),
                    targets: targets.to_vec(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::default_log;
    use super::*;

    #[test]
    fn complete_default_log_is_valid() {
        assert!(validate_log(&default_log()).is_empty());
    }

    #[test]
    fn empty_log_reports_missing_opening() {
        let v = validate_log(&DebateLog::new("x"));
        let msgs: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        assert!(msgs.contains(&"missing stage Opening".to_string()), "{msgs:?}");
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn forward_reference_is_named() {
        let mut log = default_log();
        log.turns[3].targets = vec![5];
        let msgs: Vec<String> = validate_log(&log).iter().map(|v| v.to_string()).collect();
        assert_eq!(msgs, vec!["forward reference at turn 3".to_string()]);
    }

    #[test]
    fn self_reference_and_duplicates_flagged() {
        let mut log = default_log();
        log.turns[2].targets = vec![2];
        log.turns[4].targets = vec![3, 3];
        let kinds: Vec<ViolationKind> = validate_log(&log).into_iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![ViolationKind::ForwardReference, ViolationKind::DuplicateTarget]
        );
    }

    #[test]
    fn stage_regression_and_role_mismatch() {
        let mut log = default_log();
        log.turns.swap(5, 6);
        for (i, t) in log.turns.iter_mut().enumerate() {
            t.turn_index = i;
        }
        log.turns[5].targets.clear();
        assert!(validate_log(&log)
            .iter()
            .any(|v| v.kind == ViolationKind::StageRegression && v.turn == Some(6)));

        let mut log = default_log();
        log.turns[0].role = DebateRole::ClosingSpeaker;
        assert_eq!(validate_log(&log)[0].kind, ViolationKind::RoleStageMismatch);
    }

    #[test]
    fn one_sided_stage_flagged() {
        let mut log = default_log();
        log.turns[7].stance = Stance::True;
        let v = validate_log(&log);
        assert_eq!(
            v[0].kind,
            ViolationKind::MissingStance(DebateStage::Closing, Stance::Fake)
        );
    }

    #[test]
    fn valid_log_sorted_by_stage_is_identity() {
        let log = default_log();
        let mut sorted = log.turns.clone();
        sorted.sort_by_key(|t| (t.stage.index(), t.turn_index));
        assert_eq!(sorted, log.turns);
    }

    #[test]
    fn config_and_news_checks() {
        let cfg = DebateConfig {
            agents_per_team: 0,
            ..Default::default()
        };
        assert!(cfg.check().is_err());
        assert!(NewsItem::new("a", "   \n").is_err());
        assert!(NewsItem::new("a", "text").is_ok());
    }

    #[test]
    fn debate_log_json_shape() {
        let json: serde_json::Value = serde_json::from_str(&default_log().to_json()).unwrap();
        let t = &json["turns"][2];
        assert_eq!(t["stance"], "True");
        assert_eq!(t["role"], "Questioner");
        assert_eq!(t["stage"], "CrossExamination");
        assert_eq!(t["targets"], serde_json::json!([1]));
        assert_eq!(json["news_id"], "n1");
    }
}
