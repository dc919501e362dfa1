//! Deterministic token estimation: one token per four characters (rounded
//! up), plus a fixed overhead per message and a flat charge per image.
//! Only pre-call budgeting and context fitting use these numbers; billed
//! costs come from provider-reported usage when available.

use super::message::ChatMessage;

pub const MESSAGE_OVERHEAD_TOKENS: u64 = 4;
pub const IMAGE_TOKENS: u64 = 765;

pub fn estimate_text_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

pub fn estimate_message_tokens(message: &ChatMessage) -> u64 {
    let mut tokens = MESSAGE_OVERHEAD_TOKENS + estimate_text_tokens(&message.content);
    tokens += IMAGE_TOKENS * message.images.len() as u64;
    if let Some(call) = &message.tool_call {
        tokens += estimate_text_tokens(&call.name) + estimate_text_tokens(&call.arguments.to_string());
    }
    tokens
}

pub fn estimate_tokens(messages: &[ChatMessage]) -> u64 {
    messages.iter().map(estimate_message_tokens).sum()
}
