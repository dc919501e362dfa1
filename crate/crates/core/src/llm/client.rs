use std::time::{Duration, Instant};

use rust_decimal::Decimal;
use tracing::{debug, warn};

use super::config::ModelConfig;
use super::context::fit_context;
use super::message::ChatMessage;
use super::tokens::{estimate_message_tokens, estimate_text_tokens, estimate_tokens};
use super::tool::ToolSpec;
use super::{BackendError, ChatBackend, ChatRequest, LlmError, Usage};
use crate::ledger::{CostLedger, LedgerEntry};

/// Transport retry policy: `attempts` total tries with exponential backoff
/// starting at `base_delay`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

/// A backend bound to one model configuration.
#[derive(Clone, Copy)]
pub struct ChatClient<'a> {
    pub backend: &'a dyn ChatBackend,
    pub model: &'a ModelConfig,
    pub retry: RetryPolicy,
}

impl<'a> ChatClient<'a> {
    pub fn new(backend: &'a dyn ChatBackend, model: &'a ModelConfig) -> Self {
        Self {
            backend,
            model,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn prompt_estimate(&self, history: &[ChatMessage], tools: &[ToolSpec]) -> u64 {
        let tool_text: String = tools
            .iter()
            .map(|t| format!("{}{}{}", t.name, t.description, t.json_schema()))
            .collect();
        estimate_tokens(history) + estimate_text_tokens(&tool_text)
    }

    /// Pre-call cost estimate used by the budget check.
    pub fn estimate_cost(&self, history: &[ChatMessage], tools: &[ToolSpec]) -> Decimal {
        self.model.cost(
            self.prompt_estimate(history, tools),
            self.model.expected_completion_tokens,
        )
    }

    /// Sends one turn. On success the reply is either free text or exactly
    /// one tool call whose arguments satisfy the tool's schema, and one
    /// ledger entry has been appended.
    pub fn chat(
        &self,
        history: &[ChatMessage],
        tools: &[ToolSpec],
        ledger: &mut CostLedger,
        budget: Decimal,
        agent: &str,
    ) -> Result<ChatMessage, LlmError> {
        let mut fitted = fit_context(history, self.model.max_context_tokens)?;
        if !self.model.multimodal {
            for message in fitted.iter_mut().filter(|m| !m.images.is_empty()) {
                warn!(agent, "dropping image attachments for a text-only model");
                message.images.clear();
            }
        }

        let estimate = self.estimate_cost(&fitted, tools);
        let spent = ledger.total();
        if spent >= budget || spent + estimate > budget {
            return Err(LlmError::BudgetExceeded {
                spent,
                estimate,
                budget,
            });
        }

        let request = ChatRequest {
            model: self.model,
            messages: &fitted,
            tools,
        };
        let started = Instant::now();
        let mut attempt = 0;
        let reply = loop {
            match self.backend.complete(request) {
                Ok(reply) => break reply,
                Err(BackendError::Transport(message)) => {
                    attempt += 1;
                    if attempt >= self.retry.attempts.max(1) {
                        return Err(LlmError::Transport {
                            attempts: attempt,
                            message,
                        });
                    }
                    debug!(agent, attempt, %message, "retrying after transport error");
                    std::thread::sleep(self.retry.delay(attempt - 1));
                }
                Err(BackendError::Protocol(message)) => return Err(LlmError::Protocol(message)),
                Err(BackendError::ScriptExhausted) => return Err(LlmError::ScriptExhausted),
            }
        };

        let usage = reply.usage.unwrap_or_else(|| Usage {
            prompt_tokens: self.prompt_estimate(&fitted, tools),
            completion_tokens: estimate_message_tokens(&reply.message),
        });
        ledger.record(LedgerEntry {
            agent_name: agent.to_string(),
            model_id: self.model.model_id.clone(),
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            usd_cost: self.model.cost(usage.prompt_tokens, usage.completion_tokens),
            wall_time_ms: started.elapsed().as_millis() as u64,
        });

        let message = reply.message;
        if let Some(call) = &message.tool_call {
            let reason = match tools.iter().find(|t| t.name == call.name) {
                None => Some(format!("tool {:?} is not available to this agent", call.name)),
                Some(spec) => spec.check_arguments(&call.arguments).err(),
            };
            if let Some(reason) = reason {
                return Err(LlmError::MalformedToolCall {
                    message: Box::new(message),
                    reason,
                });
            }
        }
        Ok(message)
    }
}
