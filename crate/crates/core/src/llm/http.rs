//! Chat-completions over HTTP (OpenAI-compatible wire format).

use std::time::Duration;

use serde_json::{json, Value};

use super::message::{ChatMessage, ImageAttachment, Role, ToolCall};
use super::tool::ToolSpec;
use super::{BackendError, BackendReply, ChatBackend, ChatRequest, Usage};

pub struct HttpBackend {
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpBackend {
    /// The key is read from `api_key_env` once, here, and never persisted.
    pub fn from_env(api_key_env: &str, timeout: Duration) -> Self {
        Self::new(std::env::var(api_key_env).ok(), timeout)
    }

    pub fn new(api_key: Option<String>, timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            api_key,
        }
    }
}

fn image_part(image: &ImageAttachment) -> Value {
    json!({
        "type": "image_url",
        "image_url": {"url": format!("data:{};base64,{}", image.media_type, image.data_base64)}
    })
}

fn user_content(text: &str, images: &[ImageAttachment]) -> Value {
    if images.is_empty() {
        return Value::String(text.to_string());
    }
    let mut parts = vec![json!({"type": "text", "text": text})];
    parts.extend(images.iter().map(image_part));
    Value::Array(parts)
}

/// Maps the internal history onto wire messages. Tool results cannot carry
/// images on the wire, so their attachments follow as a user message.
pub(crate) fn wire_messages(messages: &[ChatMessage]) -> Vec<Value> {
    let mut out = Vec::new();
    for m in messages {
        match m.role {
            Role::System => out.push(json!({"role": "system", "content": m.content})),
            Role::User => out.push(json!({"role": "user", "content": user_content(&m.content, &m.images)})),
            Role::Assistant => match &m.tool_call {
                Some(call) => out.push(json!({
                    "role": "assistant",
                    "content": if m.content.is_empty() { Value::Null } else { Value::String(m.content.clone()) },
                    "tool_calls": [{
                        "id": call.id,
                        "type": "function",
                        "function": {"name": call.name, "arguments": call.arguments.to_string()},
                    }],
                })),
                None => out.push(json!({"role": "assistant", "content": m.content})),
            },
            Role::ToolResult => {
                out.push(json!({
                    "role": "tool",
                    "tool_call_id": m.tool_call_id.clone().unwrap_or_default(),
                    "content": m.content,
                }));
                if !m.images.is_empty() {
                    out.push(
                        json!({"role": "user", "content": user_content("Image returned by the tool:", &m.images)}),
                    );
                }
            }
        }
    }
    out
}

fn wire_tools(tools: &[ToolSpec]) -> Vec<Value> {
    tools
        .iter()
        .map(|t| {
            json!({
                "type": "function",
                "function": {"name": t.name, "description": t.description, "parameters": t.json_schema()},
            })
        })
        .collect()
}

pub(crate) fn request_body(request: &ChatRequest<'_>) -> Value {
    let mut body = json!({
        "model": request.model.model_id,
        "messages": wire_messages(request.messages),
    });
    if !request.tools.is_empty() {
        body["tools"] = Value::Array(wire_tools(request.tools));
        body["tool_choice"] = json!("auto");
        body["parallel_tool_calls"] = json!(false);
    }
    body
}

pub(crate) fn parse_response(body: &Value) -> Result<BackendReply, BackendError> {
    let message = body
        .pointer("/choices/0/message")
        .ok_or_else(|| BackendError::Protocol("response has no choices[0].message".into()))?;
    let content = message.get("content").and_then(Value::as_str).unwrap_or_default();
    let tool_call = message
        .get("tool_calls")
        .and_then(Value::as_array)
        .and_then(|calls| calls.first())
        .map(|call| {
            let raw = call
                .pointer("/function/arguments")
                .and_then(Value::as_str)
                .unwrap_or("{}");
            // unparsable arguments are kept as a string and rejected by the schema check
            let arguments = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            ToolCall {
                id: call.get("id").and_then(Value::as_str).unwrap_or("call").to_string(),
                name: call
                    .pointer("/function/name")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                arguments,
            }
        });
    let mut reply = ChatMessage::assistant(content);
    reply.tool_call = tool_call;
    let usage = body.get("usage").map(|u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    });
    Ok(BackendReply { message: reply, usage })
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        let mut call = self
            .agent
            .post(&request.model.endpoint)
            .set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let response = match call.send_json(request_body(&request)) {
            Ok(response) => response,
            Err(ureq::Error::Status(code, response)) => {
                let text = response.into_string().unwrap_or_default();
                let message = format!("HTTP {code}: {}", text.chars().take(400).collect::<String>());
                return Err(if code == 429 || code >= 500 {
                    BackendError::Transport(message)
                } else {
                    BackendError::Protocol(message)
                });
            }
            Err(err) => return Err(BackendError::Transport(err.to_string())),
        };
        let body: Value = response
            .into_json()
            .map_err(|e| BackendError::Transport(format!("reading response: {e}")))?;
        parse_response(&body)
    }
}
