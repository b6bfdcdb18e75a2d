//! HTTP gateway that routes each request to one LLM endpoint using a trained
//! policy, with per-endpoint timeouts, one retry, fallback to the next-ranked
//! arm and an exact spend ledger.

pub mod config;
pub mod embed;
pub mod http;
pub mod provider;
pub mod service;

pub use banditroute::prompt::{parse_label, render_prompt, Label, PromptError};
pub use config::{ConfigError, EmbeddingConfig, EndpointConfig, GatewayConfig};
pub use embed::{Embedder, HttpEmbedder, StaticEmbedder};
pub use http::{router, serve};
pub use provider::{AuthFailProvider, Completion, FixedProvider, HangingProvider, HttpProvider, LlmProvider, ProviderError};
pub use service::{Endpoint, Gateway, GatewayError, RouteError, RouteRequest, RouteResponse, SpendSnapshot};
