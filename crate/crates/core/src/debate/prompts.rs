use std::path::Path;

use serde::Deserialize;

use crate::error::DebateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    Opening,
    CrossExam,
    Rebuttal,
    Closing,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::Opening,
        TemplateId::CrossExam,
        TemplateId::Rebuttal,
        TemplateId::Closing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::Opening => "opening",
            TemplateId::CrossExam => "cross_exam",
            TemplateId::Rebuttal => "rebuttal",
            TemplateId::Closing => "closing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct TemplateFile {
    system: String,
    user: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    fn parse(id: TemplateId, raw: &str) -> Result<Self, DebateError> {
        let file: TemplateFile = toml::from_str(raw)
            .map_err(|e| DebateError::PromptSet(format!("{}: {e}", id.name())))?;
        let t = PromptTemplate {
            id,
            system: file.system.trim().to_string(),
            user: file.user.trim().to_string(),
        };
        // Surface unknown placeholders at load time rather than mid-debate.
        let probe = Vars::probe();
        t.render(&probe)?;
        Ok(t)
    }

    pub fn render(&self, vars: &Vars<'_>) -> Result<(String, String), DebateError> {
        let wrap = |message: String| DebateError::Template {
            template: self.id.name().to_string(),
            message,
        };
        let system = render(&self.system, vars).map_err(wrap)?;
        let user = render(&self.user, vars).map_err(wrap)?;
        Ok((system, user))
    }
}

/// Values substituted into a template.
#[derive(Debug, Clone, Default)]
pub struct Vars<'a> {
    pub news: &'a str,
    pub stance: &'a str,
    pub role: &'a str,
    pub team: &'a str,
    pub history: Option<&'a str>,
}

impl Vars<'_> {
    fn probe() -> Vars<'static> {
        Vars {
            news: "n",
            stance: "s",
            role: "r",
            team: "t",
            history: Some("h"),
        }
    }

    fn lookup(&self, name: &str) -> Option<&str> {
        match name {
            "news" => Some(self.news),
            "stance" => Some(self.stance),
            "role" => Some(self.role),
            "team" => Some(self.team),
            "history" => self.history,
            _ => None,
        }
    }
}

/// Single-pass substitution of `{name}` placeholders; `{{` and `}}` are
/// literal braces. Substituted values are never rescanned.
pub fn render(template: &str, vars: &Vars<'_>) -> Result<String, String> {
    let mut out = String::with_capacity(template.len() + vars.news.len());
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|&(_, c)| c) == Some('{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek().map(|&(_, c)| c) == Some('}') => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let rest = &template[i + 1..];
                let end = rest
                    .find('}')
                    .ok_or_else(|| format!("unclosed placeholder at byte {i}"))?;
                let name = &rest[..end];
                let value = vars
                    .lookup(name)
                    .ok_or_else(|| format!("unresolved placeholder {{{name}}}"))?;
                out.push_str(value);
                for _ in 0..=end {
                    chars.next();
                }
            }
            '}' => return Err(format!("stray '}}' at byte {i}")),
            c => out.push(c),
        }
    }
    Ok(out)
}

/// The four debate-stage templates.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    templates: [PromptTemplate; 4],
}

impl PromptSet {
    pub fn builtin() -> Self {
        let raw = [
            include_str!("../../assets/prompts/opening.toml"),
            include_str!("../../assets/prompts/cross_exam.toml"),
            include_str!("../../assets/prompts/rebuttal.toml"),
            include_str!("../../assets/prompts/closing.toml"),
        ];
        let templates = TemplateId::ALL.map(|id| {
            PromptTemplate::parse(id, raw[Self::slot(id)]).expect("builtin prompt templates are valid")
        });
        PromptSet { templates }
    }

    /// Loads `<dir>/<template>.toml` for each stage, falling back to the
    /// builtin text for files that do not exist.
    pub fn load_dir(dir: &Path) -> Result<Self, DebateError> {
        let mut set = Self::builtin();
        for id in TemplateId::ALL {
            let path = dir.join(format!("{}.toml", id.name()));
            match std::fs::read_to_string(&path) {
                Ok(raw) => set.templates[Self::slot(id)] = PromptTemplate::parse(id, &raw)?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(DebateError::PromptSet(format!("{}: {e}", path.display()))),
            }
        }
        Ok(set)
    }

    fn slot(id: TemplateId) -> usize {
        TemplateId::ALL.iter().position(|&t| t == id).unwrap()
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[Self::slot(id)]
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vars<'static> {
        Vars {
            news: "N {news} }",
            stance: "true",
            role: "Questioner",
            team: "Proponent",
            history: None,
        }
    }

    #[test]
    fn substitutes_once_and_escapes() {
        let out = render("a {news} b {{x}} {stance}", &vars()).unwrap();
        assert_eq!(out, "a N {news} } b {x} true");
    }

    #[test]
    fn unresolved_placeholders_error() {
        assert!(render("{history}", &vars()).unwrap_err().contains("{history}"));
        assert!(render("{nope}", &vars()).is_err());
        assert!(render("{news", &vars()).is_err());
        assert!(render("x } y", &vars()).is_err());
    }

    #[test]
    fn builtin_set_loads_and_overrides() {
        let set = PromptSet::builtin();
        for id in TemplateId::ALL {
            assert!(set.get(id).user.contains("{news}"));
        }
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("closing.toml"),
            "system = \"S {team}\"\nuser = \"U {history}\"\n",
        )
        .unwrap();
        let custom = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(custom.get(TemplateId::Closing).system, "S {team}");
        assert_eq!(custom.get(TemplateId::Opening), set.get(TemplateId::Opening));

        std::fs::write(dir.path().join("opening.toml"), "system = \"{bogus}\"\nuser = \"u\"\n").unwrap();
        assert!(PromptSet::load_dir(dir.path()).is_err());
    }
}
