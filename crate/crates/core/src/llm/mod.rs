//! Chat-with-tools model interface.
//!
//! [`ChatBackend`] is the transport: a scripted replay backend for offline
//! runs and an HTTP backend speaking the chat-completions wire format.
//! [`ChatClient::chat`] wraps a backend with context fitting, budget
//! enforcement, retries, tool-call checking and cost accounting.

mod client;
mod config;
mod context;
mod http;
mod message;
mod scripted;
mod tokens;
mod tool;

pub use client::{ChatClient, RetryPolicy};
pub use config::ModelConfig;
pub use context::{fit_context, ELISION_PREFIX};
pub use http::HttpBackend;
pub use message::{ChatMessage, ImageAttachment, Role, ToolCall};
pub use scripted::{ScriptedBackend, ScriptedReply};
pub use tokens::{
    estimate_message_tokens, estimate_text_tokens, estimate_tokens, IMAGE_TOKENS, MESSAGE_OVERHEAD_TOKENS,
};
pub use tool::{ParamKind, ParamSpec, ToolSpec};

use rust_decimal::Decimal;
use thiserror::Error;

/// Token counts reported by a provider for one call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone)]
pub struct BackendReply {
    pub message: ChatMessage,
    pub usage: Option<Usage>,
}

/// A request as seen by a backend, after context fitting.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub model: &'a ModelConfig,
    pub messages: &'a [ChatMessage],
    pub tools: &'a [ToolSpec],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    /// Network or server-side failure; worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    /// The provider answered with something unusable; not retried.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("scripted model has no more replies")]
    ScriptExhausted,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: ChatRequest<'_>) -> Result<BackendReply, BackendError>;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("malformed tool call: {reason}")]
    MalformedToolCall { message: Box<ChatMessage>, reason: String },
    #[error("budget exceeded: spent {spent} + estimated {estimate} would pass the {budget} USD cap")]
    BudgetExceeded {
        spent: Decimal,
        estimate: Decimal,
        budget: Decimal,
    },
    #[error("scripted model has no more replies")]
    ScriptExhausted,
    #[error("context cannot fit: minimal history needs {needed} tokens, window is {window}")]
    ContextUnfittable { needed: u64, window: u64 },
}
