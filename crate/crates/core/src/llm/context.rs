//! Context control: shrink a history until its estimate fits the window.
//!
//! Order of sacrifice: bodies of the oldest tool results, then bodies of
//! other old turns, then whole old turns. System messages and the most
//! recent user instruction are never touched; surviving messages keep
//! their relative order.

use serde_json::json;

use super::message::{ChatMessage, Role};
use super::tokens::{estimate_message_tokens, estimate_tokens};
use super::LlmError;

pub const ELISION_PREFIX: &str = "[elided ";

fn marker(chars: usize, what: &str) -> String {
    format!("{ELISION_PREFIX}{chars} characters of earlier {what}]")
}

fn is_elided(message: &ChatMessage) -> bool {
    message.content.starts_with(ELISION_PREFIX)
}

fn protected_indices(history: &[ChatMessage]) -> Vec<bool> {
    let last_user = history.iter().rposition(|m| m.role == Role::User);
    history
        .iter()
        .enumerate()
        .map(|(i, m)| m.role == Role::System || Some(i) == last_user)
        .collect()
}

fn elide_body(message: &mut ChatMessage, what: &str) -> bool {
    let before = estimate_message_tokens(message);
    let mut candidate = message.clone();
    if !candidate.content.is_empty() && !is_elided(&candidate) {
        candidate.content = marker(candidate.content.chars().count(), what);
    }
    candidate.images.clear();
    if let Some(call) = &mut candidate.tool_call {
        let raw = call.arguments.to_string();
        if raw.len() > 32 {
            call.arguments = json!({ "_elided_chars": raw.chars().count() });
        }
    }
    if estimate_message_tokens(&candidate) < before {
        *message = candidate;
        true
    } else {
        false
    }
}

pub fn fit_context(history: &[ChatMessage], max_context_tokens: u64) -> Result<Vec<ChatMessage>, LlmError> {
    if estimate_tokens(history) <= max_context_tokens {
        return Ok(history.to_vec());
    }
    let protected = protected_indices(history);
    let skeleton: u64 = history
        .iter()
        .zip(&protected)
        .filter(|(_, p)| **p)
        .map(|(m, _)| estimate_message_tokens(m))
        .sum();
    if skeleton > max_context_tokens {
        return Err(LlmError::ContextUnfittable {
            needed: skeleton,
            window: max_context_tokens,
        });
    }

    let mut messages: Vec<(ChatMessage, bool)> = history.iter().cloned().zip(protected).collect();
    let total = |ms: &[(ChatMessage, bool)]| ms.iter().map(|(m, _)| estimate_message_tokens(m)).sum::<u64>();

    for pass_roles in [&[Role::ToolResult][..], &[Role::Assistant, Role::User][..]] {
        for i in 0..messages.len() {
            if total(&messages) <= max_context_tokens {
                return Ok(messages.into_iter().map(|(m, _)| m).collect());
            }
            let (message, protected) = &mut messages[i];
            if !*protected && pass_roles.contains(&message.role) {
                let what = if message.role == Role::ToolResult {
                    "tool output"
                } else {
                    "conversation"
                };
                elide_body(message, what);
            }
        }
    }

    while total(&messages) > max_context_tokens {
        let Some(victim) = messages.iter().position(|(_, p)| !*p) else {
            break;
        };
        let (removed, _) = messages.remove(victim);
        if let Some(call) = removed.tool_call {
            messages.retain(|(m, _)| m.tool_call_id.as_deref() != Some(call.id.as_str()));
        }
    }
    let needed = total(&messages);
    if needed > max_context_tokens {
        return Err(LlmError::ContextUnfittable {
            needed,
            window: max_context_tokens,
        });
    }
    Ok(messages.into_iter().map(|(m, _)| m).collect())
}
