//! The synthesis agent: turns a finished debate into an evaluation report.

use crate::debate::render_history;
use crate::domain::{check_log, DebateLog, GenerationSettings, Language, SummaryReport, VerdictHint};
use crate::error::DebateError;
use crate::gateway::{Gateway, GenerationRequest, Message};

/// Lead-in and the five checklist criteria, English.
pub const CRITERIA_EN: [&str; 6] = [
    "It should contain a detailed explanation of your assessment of the debate. Focus on evaluating the authenticity of the news involved in the topic by checking the following:",
    "1. Whether the news contains specific details and verifiable information.",
    "2. Whether the news cites reliable sources or news organizations.",
    "3. The tone and style of the news, with real news generally being more objective and neutral.",
    "4. Any use of emotional language, which might be a characteristic of fake news.",
    "5. Whether the information in the news can be confirmed through other reliable channels.",
];

pub const CRITERIA_CN: [&str; 6] = [
    "报告应详细说明你对这场辩论的评估。请重点评估辩题所涉及新闻的真实性，检查以下几点：",
    "1. 新闻是否包含具体细节和可核实的信息。",
    "2. 新闻是否引用了可靠的来源或新闻机构。",
    "3. 新闻的语气和风格，真实新闻通常更加客观、中立。",
    "4. 是否使用了情绪化的语言，这可能是虚假新闻的特征。",
    "5. 新闻中的信息能否通过其他可靠渠道得到证实。",
];

const REAL_CUES: &[&str] = &[
    "likely true",
    "likely real",
    "probably true",
    "probably real",
    "appears authentic",
    "appears genuine",
    "verdict: real",
    "verdict: true",
    "可能是真实的",
    "很可能为真",
    "倾向于真实",
];

const FAKE_CUES: &[&str] = &[
    "likely fake",
    "likely false",
    "probably fake",
    "probably false",
    "likely fabricated",
    "appears fabricated",
    "verdict: fake",
    "verdict: false",
    "可能是虚假的",
    "很可能为假",
    "倾向于虚假",
];

/// Keyword heuristic over the report; conflicting or absent signals yield
/// `Undecided`.
pub fn parse_verdict_hint(report: &str) -> VerdictHint {
    let lower = report.to_lowercase();
    let real = REAL_CUES.iter().any(|c| lower.contains(c));
    let fake = FAKE_CUES.iter().any(|c| lower.contains(c));
    match (real, fake) {
        (true, false) => VerdictHint::LeansReal,
        (false, true) => VerdictHint::LeansFake,
        _ => VerdictHint::Undecided,
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisAgent {
    pub language: Language,
    pub generation: GenerationSettings,
    pub history_budget_chars: usize,
}

impl Default for SynthesisAgent {
    fn default() -> Self {
        SynthesisAgent {
            language: Language::En,
            generation: GenerationSettings::default(),
            history_budget_chars: 48_000,
        }
    }
}

impl SynthesisAgent {
    pub fn new(language: Language) -> Self {
        SynthesisAgent {
            language,
            ..Default::default()
        }
    }

    pub fn prompt(&self, log: &DebateLog) -> Result<GenerationRequest, DebateError> {
        check_log(log)?;
        let transcript = render_history(&log.turns, self.history_budget_chars);
        let (system, intro, criteria, outro) = match self.language {
            Language::En => (
                "You are the Synthesis Agent. You read the complete record of a debate between a \
                 Proponent team (arguing the news is true) and an Opponent team (arguing it is fake) \
                 and write an evaluation report.",
                "Write an evaluation report on the debate below.",
                &CRITERIA_EN,
                "Weigh the strengths and weaknesses of each side's arguments. End with one line of \
                 the form \"Verdict: the news is likely true\" or \"Verdict: the news is likely fake\".",
            ),
            Language::Cn => (
                "你是综合评估智能体。你将阅读正方（认为新闻为真）与反方（认为新闻为假）之间的完整辩论记录，并撰写评估报告。",
                "请针对以下辩论撰写一份评估报告。",
                &CRITERIA_CN,
                "请权衡双方论点的优势与不足。最后单独一行给出结论：\"结论：该新闻可能是真实的\" 或 \"结论：该新闻可能是虚假的\"。",
            ),
        };
        let user = format!(
            "{intro}\n\n{}\n\nDebate transcript:\n{transcript}\n\n{outro}",
            criteria.join("\n")
        );
        Ok(GenerationRequest::new(
            vec![Message::system(system), Message::user(user)],
            self.generation.clone(),
        )?)
    }

    pub fn synthesize(&self, log: &DebateLog, gateway: &Gateway) -> Result<SummaryReport, DebateError> {
        let req = self.prompt(log)?;
        let text = gateway.generate(&req)?.text.trim().to_string();
        Ok(SummaryReport {
            news_id: log.news_id.clone(),
            verdict_hint: Some(parse_verdict_hint(&text)),
            text,
        })
    }
}

/// English-language synthesis with default settings.
pub fn synthesize(log: &DebateLog, gateway: &Gateway) -> Result<SummaryReport, DebateError> {
    SynthesisAgent::default().synthesize(log, gateway)
}
