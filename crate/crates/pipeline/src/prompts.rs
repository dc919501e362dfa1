//! System prompts. The built-in texts live in `prompts/<agent>.md`; a
//! directory with files of the same names overrides them one by one.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use repro_core::rubric::rubric_text;

use crate::profile::AgentKind;

const RUBRIC_SLOT: &str = "{{rubric}}";

#[derive(Debug, Clone)]
pub struct Prompts {
    texts: BTreeMap<AgentKind, String>,
}

impl Prompts {
    pub fn builtin() -> Self {
        let texts = [
            (AgentKind::Setup, include_str!("../prompts/setup.md")),
            (AgentKind::Execution, include_str!("../prompts/execution.md")),
            (AgentKind::Scoring, include_str!("../prompts/scoring.md")),
            (AgentKind::Report, include_str!("../prompts/report.md")),
        ];
        Self {
            texts: texts.into_iter().map(|(k, t)| (k, t.to_string())).collect(),
        }
    }

    /// Built-ins, replaced by any `<agent>.md` found in `dir`.
    pub fn with_overrides(dir: &Path) -> io::Result<Self> {
        let mut prompts = Self::builtin();
        for kind in AgentKind::ALL {
            let path = dir.join(format!("{}.md", kind.as_str()));
            match std::fs::read_to_string(&path) {
                Ok(text) => {
                    prompts.texts.insert(kind, text);
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        Ok(prompts)
    }

    pub fn raw(&self, kind: AgentKind) -> &str {
        &self.texts[&kind]
    }

    /// Prompt text with the rubric filled in.
    pub fn system_prompt(&self, kind: AgentKind) -> String {
        self.raw(kind).replace(RUBRIC_SLOT, rubric_text().trim_end())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoring_and_report_prompts_embed_the_rubric() {
        let prompts = Prompts::builtin();
        for kind in [AgentKind::Scoring, AgentKind::Report] {
            let text = prompts.system_prompt(kind);
            assert!(text.contains("fully reproducible"), "{kind}");
            assert!(text.contains("irreproducible"), "{kind}");
            assert!(!text.contains(RUBRIC_SLOT));
        }
    }

    #[test]
    fn execution_prompt_carries_the_save_results_demo() {
        let text = Prompts::builtin().system_prompt(AgentKind::Execution);
        assert!(text.contains("graph export"));
        assert!(text.contains("dev.off()"));
    }

    #[test]
    fn directory_overrides_one_agent() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("setup.md"), "custom setup").unwrap();
        let prompts = Prompts::with_overrides(dir.path()).unwrap();
        assert_eq!(prompts.raw(AgentKind::Setup), "custom setup");
        assert_eq!(
            prompts.raw(AgentKind::Scoring),
            Prompts::builtin().raw(AgentKind::Scoring)
        );
    }
}
