//! The staged two-team debate: slot planning, stage prompts, and the turn
//! sequencer that produces a validated [`DebateLog`].

mod history;
mod prompts;

pub use history::{abstract_line, render_history};
pub use prompts::{render, PromptSet, PromptTemplate, TemplateId, Vars};

use crate::domain::{
    check_log, DebateConfig, DebateLog, DebateRole, DebateStage, DebateTurn, NewsItem, Stance,
};
use crate::error::DebateError;
use crate::gateway::{Gateway, GenerationRequest, Message};

/// One speaking position within a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub stance: Stance,
    pub role: DebateRole,
    pub agent_slot: usize,
}

impl Slot {
    pub fn agent_id(&self) -> String {
        let team = match self.stance {
            Stance::True => "pro",
            Stance::Fake => "opp",
        };
        format!("{team}-{}", self.agent_slot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    pub stage: DebateStage,
    pub slots: Vec<Slot>,
}

/// The role each team fields in a stage.
pub fn stage_role(stage: DebateStage) -> DebateRole {
    match stage {
        DebateStage::Opening => DebateRole::OpeningSpeaker,
        DebateStage::CrossExamination => DebateRole::Questioner,
        DebateStage::Rebuttal => DebateRole::Rebutter,
        DebateStage::Closing => DebateRole::ClosingSpeaker,
    }
}

/// One speaker per team per stage, in the configured team order. Team
/// members rotate through stages, so a single-member team reuses its agent.
pub fn plan_debate(config: &DebateConfig) -> Result<Vec<StagePlan>, DebateError> {
    config.check()?;
    Ok(DebateStage::ALL
        .iter()
        .map(|&stage| StagePlan {
            stage,
            slots: config
                .order
                .order()
                .iter()
                .map(|&stance| Slot {
                    stance,
                    role: stage_role(stage),
                    agent_slot: stage.index() % config.agents_per_team,
                })
                .collect(),
        })
        .collect())
}

/// Turns that a turn at `stage` by `stance` responds to.
fn reference_targets(stage: DebateStage, stance: Stance, log: &DebateLog) -> Vec<usize> {
    let target_stage = match stage {
        DebateStage::CrossExamination => DebateStage::Opening,
        DebateStage::Rebuttal => DebateStage::CrossExamination,
        DebateStage::Opening | DebateStage::Closing => return Vec::new(),
    };
    log.turns_in(target_stage)
        .filter(|t| t.stance == stance.opposite())
        .map(|t| t.turn_index)
        .collect()
}

fn stance_word(stance: Stance) -> &'static str {
    match stance {
        Stance::True => "true",
        Stance::Fake => "fake",
    }
}

/// Builds the stage prompts and runs debates against a gateway.
#[derive(Debug, Clone, Default)]
pub struct DebateEngine {
    pub config: DebateConfig,
    pub prompts: PromptSet,
}

impl DebateEngine {
    pub fn new(config: DebateConfig) -> Self {
        DebateEngine {
            config,
            prompts: PromptSet::builtin(),
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    fn request(
        &self,
        id: TemplateId,
        news: &NewsItem,
        stance: Stance,
        history: Option<&str>,
    ) -> Result<GenerationRequest, DebateError> {
        news.check()?;
        let stage = match id {
            TemplateId::Opening => DebateStage::Opening,
            TemplateId::CrossExam => DebateStage::CrossExamination,
            TemplateId::Rebuttal => DebateStage::Rebuttal,
            TemplateId::Closing => DebateStage::Closing,
        };
        let vars = Vars {
            news: news.content.trim(),
            stance: stance_word(stance),
            role: stage_role(stage).display_name(),
            team: stance.team_name(),
            history,
        };
        let (system, user) = self.prompts.get(id).render(&vars)?;
        Ok(GenerationRequest::new(
            vec![Message::system(system), Message::user(user)],
            self.config.generation.clone(),
        )?)
    }

    fn require(log: &DebateLog, stages: &[DebateStage]) -> Result<(), DebateError> {
        for &stage in stages {
            for stance in Stance::ALL {
                if !log.turns_in(stage).any(|t| t.stance == stance) {
                    return Err(DebateError::MissingStage { stage, stance });
                }
            }
        }
        Ok(())
    }

    fn opposing(
        log: &DebateLog,
        stage: DebateStage,
        stance: Stance,
    ) -> impl Iterator<Item = &DebateTurn> {
        log.turns_in(stage).filter(move |t| t.stance == stance.opposite())
    }

    /// Opening statement: the news and the stance, no history.
    pub fn opening_prompt(&self, news: &NewsItem, stance: Stance) -> Result<GenerationRequest, DebateError> {
        self.request(TemplateId::Opening, news, stance, None)
    }

    /// Cross-examination: quotes the opposing team's opening arguments.
    pub fn cross_exam_prompt(
        &self,
        news: &NewsItem,
        history: &DebateLog,
        stance: Stance,
    ) -> Result<GenerationRequest, DebateError> {
        Self::require(history, &[DebateStage::Opening])?;
        let quoted = render_history(
            Self::opposing(history, DebateStage::Opening, stance),
            self.config.history_budget_chars,
        );
        self.request(TemplateId::CrossExam, news, stance, Some(&quoted))
    }

    /// Rebuttal: quotes the opposing team's cross-examination questions.
    pub fn rebuttal_prompt(
        &self,
        news: &NewsItem,
        history: &DebateLog,
        stance: Stance,
    ) -> Result<GenerationRequest, DebateError> {
        Self::require(history, &[DebateStage::Opening, DebateStage::CrossExamination])?;
        let quoted = render_history(
            Self::opposing(history, DebateStage::CrossExamination, stance),
            self.config.history_budget_chars,
        );
        self.request(TemplateId::Rebuttal, news, stance, Some(&quoted))
    }

    /// Closing: the full history of the three earlier stages.
    pub fn closing_prompt(
        &self,
        news: &NewsItem,
        history: &DebateLog,
        stance: Stance,
    ) -> Result<GenerationRequest, DebateError> {
        let earlier = [
            DebateStage::Opening,
            DebateStage::CrossExamination,
            DebateStage::Rebuttal,
        ];
        Self::require(history, &earlier)?;
        let quoted = render_history(
            history.turns.iter().filter(|t| t.stage < DebateStage::Closing),
            self.config.history_budget_chars,
        );
        self.request(TemplateId::Closing, news, stance, Some(&quoted))
    }

    /// The prompt for a slot given the turns recorded so far. Only turns from
    /// strictly earlier stages are visible.
    pub fn prompt_for(
        &self,
        news: &NewsItem,
        stage: DebateStage,
        stance: Stance,
        log: &DebateLog,
    ) -> Result<GenerationRequest, DebateError> {
        let visible = DebateLog {
            news_id: log.news_id.clone(),
            turns: log.turns.iter().filter(|t| t.stage < stage).cloned().collect(),
        };
        match stage {
            DebateStage::Opening => self.opening_prompt(news, stance),
            DebateStage::CrossExamination => self.cross_exam_prompt(news, &visible, stance),
            DebateStage::Rebuttal => self.rebuttal_prompt(news, &visible, stance),
            DebateStage::Closing => self.closing_prompt(news, &visible, stance),
        }
    }

    /// Runs the full four-stage debate. Either the complete, validated log is
    /// returned or an error; partial logs are discarded.
    pub fn run(&self, news: &NewsItem, gateway: &Gateway) -> Result<DebateLog, DebateError> {
        news.check()?;
        let plan = plan_debate(&self.config)?;
        let mut log = DebateLog::new(news.id.clone());
        for stage_plan in &plan {
            for slot in &stage_plan.slots {
                let req = self.prompt_for(news, stage_plan.stage, slot.stance, &log)?;
                let resp = gateway.generate(&req)?;
                let targets = reference_targets(stage_plan.stage, slot.stance, &log);
                log.turns.push(DebateTurn {
                    turn_index: log.turns.len(),
                    agent_id: slot.agent_id(),
                    stance: slot.stance,
                    role: slot.role,
                    stage: stage_plan.stage,
                    text: resp.text.trim().to_string(),
                    targets,
                });
            }
        }
        check_log(&log)?;
        Ok(log)
    }
}

/// Runs a debate with the builtin prompt set.
pub fn run_debate(news: &NewsItem, config: &DebateConfig, gateway: &Gateway) -> Result<DebateLog, DebateError> {
    DebateEngine::new(config.clone()).run(news, gateway)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{fixtures::default_log, validate_log, OrderPolicy};
    use crate::gateway::{Backend, BackendFailure, GatewayConfig, RetryPolicy};

    fn news() -> NewsItem {
        NewsItem::new("n1", "City council approves new bicycle lanes downtown.").unwrap()
    }

    fn engine() -> DebateEngine {
        DebateEngine::default()
    }

    fn prefix(n: usize) -> DebateLog {
        let mut log = default_log();
        log.turns.truncate(n);
        log
    }

    #[test]
    fn default_plan_enumerates_eight_slots() {
        let plan = plan_debate(&DebateConfig::default()).unwrap();
        let flat: Vec<(DebateStage, Stance, DebateRole)> = plan
            .iter()
            .flat_map(|p| p.slots.iter().map(move |s| (p.stage, s.stance, s.role)))
            .collect();
        use DebateRole::*;
        use DebateStage::*;
        use Stance::{Fake as Opp, True as Pro};
        assert_eq!(
            flat,
            vec![
                (Opening, Pro, OpeningSpeaker),
                (Opening, Opp, OpeningSpeaker),
                (CrossExamination, Pro, Questioner),
                (CrossExamination, Opp, Questioner),
                (Rebuttal, Pro, Rebutter),
                (Rebuttal, Opp, Rebutter),
                (Closing, Pro, ClosingSpeaker),
                (Closing, Opp, ClosingSpeaker),
            ]
        );
        let agents: Vec<String> = plan.iter().map(|p| p.slots[0].agent_id()).collect();
        assert_eq!(agents, ["pro-0", "pro-1", "pro-0", "pro-1"]);
    }

    #[test]
    fn single_agent_teams_keep_slot_count() {
        let cfg = DebateConfig {
            agents_per_team: 1,
            ..Default::default()
        };
        let plan = plan_debate(&cfg).unwrap();
        assert_eq!(plan.iter().map(|p| p.slots.len()).sum::<usize>(), 8);
        assert!(plan.iter().flat_map(|p| &p.slots).all(|s| s.agent_slot == 0));
        let zero = DebateConfig {
            agents_per_team: 0,
            ..Default::default()
        };
        assert!(plan_debate(&zero).is_err());
    }

    #[test]
    fn opening_prompt_contract() {
        let n = news();
        let pro = engine().opening_prompt(&n, Stance::True).unwrap();
        let user = pro.user_text();
        assert!(user.contains(&n.content));
        assert!(user.contains("supports") && user.contains("true"));
        assert!(!user.contains("[Turn"));
        let opp = engine().opening_prompt(&n, Stance::Fake).unwrap().user_text();
        assert!(opp.contains("the news item is fake"));
        let blank = NewsItem {
            content: "  ".into(),
            ..n
        };
        assert!(engine().opening_prompt(&blank, Stance::True).is_err());
    }

    #[test]
    fn cross_exam_quotes_opposing_openings() {
        let h = prefix(2);
        let fake_side = engine().cross_exam_prompt(&news(), &h, Stance::Fake).unwrap().user_text();
        assert!(fake_side.contains("turn 0 text") && !fake_side.contains("turn 1 text"));
        let true_side = engine().cross_exam_prompt(&news(), &h, Stance::True).unwrap().user_text();
        assert!(true_side.contains("turn 1 text") && !true_side.contains("turn 0 text"));
        let err = engine().cross_exam_prompt(&news(), &prefix(1), Stance::True).unwrap_err();
        assert!(matches!(
            err,
            DebateError::MissingStage {
                stage: DebateStage::Opening,
                stance: Stance::Fake
            }
        ));
    }

    #[test]
    fn rebuttal_quotes_opposing_questions() {
        let h = prefix(4);
        let t = engine().rebuttal_prompt(&news(), &h, Stance::True).unwrap().user_text();
        assert!(t.contains("turn 3 text") && !t.contains("turn 2 text"));
        let f = engine().rebuttal_prompt(&news(), &h, Stance::Fake).unwrap().user_text();
        assert!(f.contains("turn 2 text") && !f.contains("turn 3 text"));
        assert!(matches!(
            engine().rebuttal_prompt(&news(), &prefix(2), Stance::True),
            Err(DebateError::MissingStage {
                stage: DebateStage::CrossExamination,
                ..
            })
        ));
    }

    #[test]
    fn closing_embeds_full_history() {
        let h = prefix(6);
        let pro = engine().closing_prompt(&news(), &h, Stance::True).unwrap().user_text();
        let opp = engine().closing_prompt(&news(), &h, Stance::Fake).unwrap().user_text();
        for i in 0..6 {
            assert!(pro.contains(&format!("turn {i} text")));
        }
        assert_ne!(pro, opp);
        assert_eq!(pro.replace("true", "X"), opp.replace("fake", "X"));
        assert!(engine().closing_prompt(&news(), &DebateLog::new("n1"), Stance::True).is_err());
    }

    #[test]
    fn run_debate_matches_reference_rule() {
        let log = run_debate(&news(), &DebateConfig::default(), &Gateway::mock()).unwrap();
        assert!(validate_log(&log).is_empty());
        let stages: Vec<usize> = log.turns.iter().map(|t| t.stage.index()).collect();
        assert_eq!(stages, [0, 0, 1, 1, 2, 2, 3, 3]);
        let targets: Vec<Vec<usize>> = log.turns.iter().map(|t| t.targets.clone()).collect();
        let expected: Vec<Vec<usize>> = vec![vec![], vec![], vec![1], vec![0], vec![3], vec![2], vec![], vec![]];
        assert_eq!(targets, expected);
        let again = run_debate(&news(), &DebateConfig::default(), &Gateway::mock()).unwrap();
        assert_eq!(log.to_json(), again.to_json());
    }

    #[test]
    fn opponent_first_policy() {
        let cfg = DebateConfig {
            order: OrderPolicy::OpponentFirst,
            ..Default::default()
        };
        let log = run_debate(&news(), &cfg, &Gateway::mock()).unwrap();
        assert_eq!(log.turns[0].stance, Stance::Fake);
        assert_eq!(log.turns[2].targets, vec![1]);
        assert!(validate_log(&log).is_empty());
    }

    struct Recording(std::sync::Mutex<Vec<String>>);
    impl Backend for Recording {
        fn id(&self) -> &str {
            "rec"
        }
        fn complete(&self, req: &GenerationRequest) -> Result<String, BackendFailure> {
            let mut seen = self.0.lock().unwrap();
            seen.push(req.user_text());
            Ok(format!("UTTERANCE-{}", seen.len() - 1))
        }
    }

    #[test]
    fn prompts_only_see_earlier_stages() {
        let rec = std::sync::Arc::new(Recording(Default::default()));
        struct Shared(std::sync::Arc<Recording>);
        impl Backend for Shared {
            fn id(&self) -> &str {
                "rec"
            }
            fn complete(&self, req: &GenerationRequest) -> Result<String, BackendFailure> {
                self.0.complete(req)
            }
        }
        let gw = Gateway::new(Box::new(Shared(rec.clone())), &GatewayConfig::default());
        let log = run_debate(&news(), &DebateConfig::default(), &gw).unwrap();
        let prompts = rec.0.lock().unwrap().clone();
        for (k, prompt) in prompts.iter().enumerate() {
            for t in &log.turns {
                let visible = t.stage < log.turns[k].stage;
                if prompt.contains(&format!("UTTERANCE-{}\n", t.turn_index))
                    || prompt.ends_with(&format!("UTTERANCE-{}", t.turn_index))
                {
                    assert!(visible, "turn {k} prompt leaks turn {}", t.turn_index);
                }
            }
        }
    }

    struct AlwaysDown;
    impl Backend for AlwaysDown {
        fn id(&self) -> &str {
            "down"
        }
        fn complete(&self, _: &GenerationRequest) -> Result<String, BackendFailure> {
            Err(BackendFailure::Transport("connection refused".into()))
        }
    }

    #[test]
    fn failing_gateway_yields_no_log() {
        let cfg = GatewayConfig {
            retry: RetryPolicy {
                max_attempts: 2,
                initial_delay_ms: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        let gw = Gateway::new(Box::new(AlwaysDown), &cfg);
        let err = run_debate(&news(), &DebateConfig::default(), &gw).unwrap_err();
        assert!(matches!(err, DebateError::Gateway(_)));
    }
}
