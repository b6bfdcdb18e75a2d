//! Request handling independent of HTTP: embed, score, pick an arm, call the
//! provider with timeout/retry/fallback, parse the label and meter the spend.

use std::cmp::Ordering as CmpOrdering;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use banditroute::prompt::PromptError;
use banditroute::{load_model, load_model_for, parse_label, render_prompt, Label, Picodollars, PolicyError, PolicyModel, Price, Roster};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, GatewayConfig};
use crate::embed::{EmbedError, Embedder, HttpEmbedder};
use crate::provider::{HttpProvider, LlmProvider, ProviderError};

/// Attempts per arm before falling back to the next one.
pub const ATTEMPTS_PER_ARM: usize = 2;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] PolicyError),
    #[error("endpoint setup failed for arm {arm:?}: {reason}")]
    Endpoint { arm: String, reason: String },
}

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("request has no embedding and no embedding endpoint is configured")]
    NoEmbedder,
    #[error("embedding has {got} dimensions, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Embedding(#[from] EmbedError),
    #[error("provider for arm {arm:?} rejected credentials")]
    Auth { arm: String },
    #[error("routing failed: every arm failed ({})", summarize(.attempts))]
    AllFailed { attempts: Vec<FailedAttempt> },
}

fn summarize(attempts: &[FailedAttempt]) -> String {
    attempts.iter().map(|a| format!("{}: {}", a.arm, a.error)).collect::<Vec<_>>().join("; ")
}

impl From<PromptError> for RouteError {
    fn from(e: PromptError) -> Self {
        RouteError::BadRequest(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteRequest {
    pub text: String,
    #[serde(default)]
    pub embedding: Option<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedAttempt {
    pub arm: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResponse {
    pub arm: String,
    pub arm_id: usize,
    pub predicted_rewards: Vec<f64>,
    pub text: String,
    pub label: Label,
    pub tokens: u64,
    pub tokens_estimated: bool,
    pub cost_usd: f64,
    pub cost_picodollars: Picodollars,
    pub latency_ms: u64,
    /// True when the answer came from an arm other than the top-ranked one.
    pub fallback: bool,
    pub failed_attempts: Vec<FailedAttempt>,
}

/// A provider bound to one roster arm.
#[derive(Clone)]
pub struct Endpoint {
    pub arm: String,
    pub template: String,
    pub timeout: Duration,
    pub price: Price,
    pub provider: Arc<dyn LlmProvider>,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("arm", &self.arm)
            .field("template", &self.template)
            .field("timeout", &self.timeout)
            .field("price", &self.price)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpend {
    pub arm: String,
    pub requests: u64,
    pub spend_picodollars: Picodollars,
    pub spend_usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpendSnapshot {
    pub arms: Vec<ArmSpend>,
    pub total_picodollars: Picodollars,
    pub total_usd: f64,
}

/// Per-arm spend counters in picodollars.
#[derive(Debug)]
pub struct SpendLedger {
    names: Vec<String>,
    spend: Vec<AtomicU64>,
    requests: Vec<AtomicU64>,
}

impl SpendLedger {
    pub fn new(names: Vec<String>) -> Self {
        let k = names.len();
        Self {
            names,
            spend: (0..k).map(|_| AtomicU64::new(0)).collect(),
            requests: (0..k).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    pub fn record(&self, arm_id: usize, cost: Picodollars) {
        self.spend[arm_id].fetch_add(cost.0, Ordering::Relaxed);
        self.requests[arm_id].fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> SpendSnapshot {
        let arms: Vec<ArmSpend> = self
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let spend = Picodollars(self.spend[j].load(Ordering::Relaxed));
                ArmSpend {
                    arm: name.clone(),
                    requests: self.requests[j].load(Ordering::Relaxed),
                    spend_picodollars: spend,
                    spend_usd: spend.as_dollars(),
                }
            })
            .collect();
        let total: Picodollars = arms.iter().map(|a| a.spend_picodollars).sum();
        SpendSnapshot { arms, total_picodollars: total, total_usd: total.as_dollars() }
    }
}

/// Arms ordered by predicted reward, ties to lower cost then lower id. The
/// first entry equals `select_arm`.
pub fn rank_arms(q: &[f64], roster: &Roster) -> Vec<usize> {
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let arms = roster.arms();
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| {
        key(q[b])
            .partial_cmp(&key(q[a]))
            .unwrap_or(CmpOrdering::Equal)
            .then(arms[a].normalized_cost.total_cmp(&arms[b].normalized_cost))
            .then(a.cmp(&b))
    });
    order
}

/// `ceil(chars / 4)`.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

pub struct Gateway {
    model: RwLock<Arc<PolicyModel>>,
    endpoints: Vec<Endpoint>,
    embedder: Option<Arc<dyn Embedder>>,
    ledger: SpendLedger,
}

impl Gateway {
    /// `endpoints` must list one endpoint per roster arm, in roster order.
    pub fn new(
        model: PolicyModel,
        endpoints: Vec<Endpoint>,
        embedder: Option<Arc<dyn Embedder>>,
    ) -> Result<Self, GatewayError> {
        let roster = model.roster();
        if endpoints.len() != roster.len() {
            return Err(ConfigError::Roster(format!("{} endpoints for {} arms", endpoints.len(), roster.len())).into());
        }
        for (arm, ep) in roster.arms().iter().zip(&endpoints) {
            if arm.name != ep.arm || arm.price_per_1k != ep.price {
                return Err(ConfigError::Roster(format!(
                    "endpoint {:?} at {} does not match arm {:?} at {}",
                    ep.arm, ep.price, arm.name, arm.price_per_1k
                ))
                .into());
            }
            if ep.timeout.is_zero() {
                return Err(GatewayError::Endpoint { arm: ep.arm.clone(), reason: "timeout must be > 0".into() });
            }
        }
        let ledger = SpendLedger::new(roster.arms().iter().map(|a| a.name.clone()).collect());
        Ok(Self { model: RwLock::new(Arc::new(model)), endpoints, embedder, ledger })
    }

    /// Loads the model and builds HTTP clients for every endpoint.
    pub fn from_config(cfg: &GatewayConfig) -> Result<Self, GatewayError> {
        let model = load_model(&cfg.model_path)?;
        let endpoints = cfg
            .endpoints_for(model.roster())?
            .into_iter()
            .map(|ep| {
                let timeout = Duration::from_millis(ep.timeout_ms);
                let provider = HttpProvider::new(&ep.base_url, &ep.model, ep.auth_env.clone(), timeout)
                    .map_err(|e| GatewayError::Endpoint { arm: ep.arm.clone(), reason: e.to_string() })?;
                Ok(Endpoint {
                    arm: ep.arm,
                    template: ep.template,
                    timeout,
                    price: ep.price_per_1k,
                    provider: Arc::new(provider),
                })
            })
            .collect::<Result<Vec<_>, GatewayError>>()?;
        let embedder = match &cfg.embedding {
            Some(e) => Some(Arc::new(
                HttpEmbedder::new(&e.url, Duration::from_millis(e.timeout_ms))
                    .map_err(|err| GatewayError::Endpoint { arm: "<embedding>".into(), reason: err.to_string() })?,
            ) as Arc<dyn Embedder>),
            None => None,
        };
        Self::new(model, endpoints, embedder)
    }

    pub fn model(&self) -> Arc<PolicyModel> {
        Arc::clone(&self.model.read().expect("model lock"))
    }

    /// Swaps in a model from `path`; it must serve the same roster and width.
    pub fn reload(&self, path: &Path) -> Result<(), PolicyError> {
        let current = self.model();
        let next = load_model_for(path, current.roster(), current.embedding_dim())?;
        *self.model.write().expect("model lock") = Arc::new(next);
        Ok(())
    }

    pub fn spend(&self) -> SpendSnapshot {
        self.ledger.snapshot()
    }

    pub async fn handle_route(&self, req: RouteRequest) -> Result<RouteResponse, RouteError> {
        let start = Instant::now();
        if req.text.is_empty() {
            return Err(RouteError::BadRequest("text must be non-empty".into()));
        }
        let model = self.model();
        let embedding = match req.embedding {
            Some(e) => e,
            None => self.embedder.as_ref().ok_or(RouteError::NoEmbedder)?.embed(&req.text).await?,
        };
        if embedding.len() != model.embedding_dim() {
            return Err(RouteError::Dimension { expected: model.embedding_dim(), got: embedding.len() });
        }
        if embedding.iter().any(|v| !v.is_finite()) {
            return Err(RouteError::BadRequest("embedding contains non-finite values".into()));
        }
        let q = model.predict_q(&embedding).map_err(|e| RouteError::BadRequest(e.to_string()))?;
        let ranking = rank_arms(&q, model.roster());

        let mut failed = Vec::new();
        for (rank, &arm_id) in ranking.iter().enumerate() {
            let ep = &self.endpoints[arm_id];
            let prompt = render_prompt(&ep.template, &req.text)?;
            for _ in 0..ATTEMPTS_PER_ARM {
                let outcome = match tokio::time::timeout(ep.timeout, ep.provider.complete(&prompt)).await {
                    Ok(r) => r,
                    Err(_) => Err(ProviderError::Timeout),
                };
                match outcome {
                    Ok(c) => {
                        let (tokens, estimated) = match c.usage_tokens {
                            Some(t) => (t, false),
                            None => (estimate_tokens(&prompt) + estimate_tokens(&c.text), true),
                        };
                        let cost = ep.price.cost_of(tokens);
                        self.ledger.record(arm_id, cost);
                        return Ok(RouteResponse {
                            arm: ep.arm.clone(),
                            arm_id,
                            predicted_rewards: q,
                            label: parse_label(&c.text),
                            text: c.text,
                            tokens,
                            tokens_estimated: estimated,
                            cost_usd: cost.as_dollars(),
                            cost_picodollars: cost,
                            latency_ms: start.elapsed().as_millis() as u64,
                            fallback: rank > 0,
                            failed_attempts: failed,
                        });
                    }
                    Err(ProviderError::Auth) => return Err(RouteError::Auth { arm: ep.arm.clone() }),
                    Err(e) => {
                        tracing::warn!(arm = %ep.arm, error = %e, "provider call failed");
                        failed.push(FailedAttempt { arm: ep.arm.clone(), error: e.to_string() });
                    }
                }
            }
        }
        Err(RouteError::AllFailed { attempts: failed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_cost() {
        let roster = Roster::from_pairs(&[("a", "2"), ("b", "1"), ("c", "1")]).unwrap();
        assert_eq!(rank_arms(&[0.0, 0.0, 0.0], &roster), vec![1, 2, 0]);
        assert_eq!(rank_arms(&[0.5, f64::NAN, 0.1], &roster), vec![0, 2, 1]);
        let q = [0.3, 0.7, 0.7];
        assert_eq!(rank_arms(&q, &roster)[0], banditroute::select_arm(&q, &roster).unwrap());
    }

    #[test]
    fn token_estimate_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
        assert_eq!(estimate_tokens("ééééé"), 2);
    }

    #[test]
    fn ledger_snapshot_totals() {
        let l = SpendLedger::new(vec!["a".into(), "b".into()]);
        l.record(0, Picodollars(5));
        l.record(1, Picodollars(7));
        l.record(1, Picodollars(1));
        let s = l.snapshot();
        assert_eq!(s.total_picodollars, Picodollars(13));
        assert_eq!(s.arms[1].requests, 2);
    }
}
