//! Replay backend: answers with canned assistant messages, in order.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::message::{ChatMessage, ToolCall};
use super::tokens::{estimate_message_tokens, estimate_tokens};
use super::{BackendError, BackendReply, ChatBackend, ChatRequest, Usage};

/// One canned reply as written in a transcript file: either free text or a
/// single tool call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    ToolCall { tool_call: ScriptedCall },
    Text { content: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCall {
    #[serde(default)]
    pub id: Option<String>,
    pub name: String,
    #[serde(default)]
    pub arguments: Value,
}

impl ScriptedReply {
    fn into_message(self, index: usize) -> ChatMessage {
        match self {
            ScriptedReply::Text { content } => ChatMessage::assistant(content),
            ScriptedReply::ToolCall { tool_call } => ChatMessage::assistant_tool_call(ToolCall {
                id: tool_call.id.unwrap_or_else(|| format!("call_{index}")),
                name: tool_call.name,
                arguments: if tool_call.arguments.is_null() {
                    Value::Object(Default::default())
                } else {
                    tool_call.arguments
                },
            }),
        }
    }
}

fn substitute(value: &mut Value, vars: &[(&str, &str)]) {
    match value {
        Value::String(s) => {
            for (name, replacement) in vars {
                let pattern = format!("${{{name}}}");
                if s.contains(&pattern) {
                    *s = s.replace(&pattern, replacement);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| substitute(v, vars)),
        Value::Object(map) => map.values_mut().for_each(|v| substitute(v, vars)),
        _ => {}
    }
}

#[derive(Debug)]
pub struct ScriptedBackend {
    replies: Vec<ChatMessage>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(replies: Vec<ChatMessage>) -> Self {
        Self {
            replies,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_replies(replies: Vec<ScriptedReply>) -> Self {
        Self::new(
            replies
                .into_iter()
                .enumerate()
                .map(|(i, r)| r.into_message(i))
                .collect(),
        )
    }

    /// Loads a JSON array of replies, replacing `${NAME}` placeholders in
    /// every string with the given values.
    pub fn from_json(text: &str, vars: &[(&str, &str)]) -> Result<Self, String> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        substitute(&mut value, vars);
        let replies: Vec<ScriptedReply> = serde_json::from_value(value).map_err(|e| e.to_string())?;
        Ok(Self::from_replies(replies))
    }

    pub fn from_file(path: &Path, vars: &[(&str, &str)]) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text, vars).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn remaining(&self) -> usize {
        self.replies.len() - *self.cursor.lock().expect("cursor lock")
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let message = self
            .replies
            .get(*cursor)
            .cloned()
            .ok_or(BackendError::ScriptExhausted)?;
        *cursor += 1;
        let usage = Usage {
            prompt_tokens: estimate_tokens(request.messages),
            completion_tokens: estimate_message_tokens(&message),
        };
        Ok(BackendReply {
            message,
            usage: Some(usage),
        })
    }
}
