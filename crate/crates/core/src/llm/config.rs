use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::ledger::token_cost;

fn default_completion_estimate() -> u64 {
    1024
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

/// Identity and pricing of one model. The API key is never stored here;
/// `api_key_env` names the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub endpoint: String,
    pub price_per_million_prompt_tokens: Decimal,
    pub price_per_million_completion_tokens: Decimal,
    pub max_context_tokens: u64,
    pub multimodal: bool,
    /// Completion size assumed by the pre-call budget check.
    #[serde(default = "default_completion_estimate")]
    pub expected_completion_tokens: u64,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

impl ModelConfig {
    /// A multimodal model priced at 2.50 / 10.00 USD per million tokens.
    pub fn gpt4o_like() -> Self {
        Self {
            model_id: "gpt-4o".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            price_per_million_prompt_tokens: Decimal::new(250, 2),
            price_per_million_completion_tokens: Decimal::new(1000, 2),
            max_context_tokens: 128_000,
            multimodal: true,
            expected_completion_tokens: default_completion_estimate(),
            api_key_env: default_api_key_env(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.price_per_million_prompt_tokens.is_sign_negative()
            || self.price_per_million_completion_tokens.is_sign_negative()
        {
            return Err("model prices must be nonnegative".into());
        }
        if self.max_context_tokens == 0 {
            return Err("max_context_tokens must be positive".into());
        }
        Ok(())
    }

    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> Decimal {
        token_cost(
            prompt_tokens,
            completion_tokens,
            self.price_per_million_prompt_tokens,
            self.price_per_million_completion_tokens,
        )
    }
}
