use std::time::Duration;

use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use banditroute_gateway::{HttpProvider, LlmProvider, ProviderError};
use serde_json::{json, Value};

const TOKEN_VAR: &str = "BANDITROUTE_TEST_PROVIDER_TOKEN";
const TOKEN: &str = "sk-test-7f3a9c";

async fn completions(headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some(&format!("Bearer {TOKEN}")) {
        return (StatusCode::UNAUTHORIZED, Json(json!({ "error": "bad key" })));
    }
    match body["model"].as_str() {
        Some("slow") => {
            tokio::time::sleep(Duration::from_secs(5)).await;
            (StatusCode::OK, Json(json!({ "choices": [{ "text": "late" }] })))
        }
        Some("no-usage") => (StatusCode::OK, Json(json!({ "choices": [{ "text": " negative" }] }))),
        _ => {
            assert!(body["prompt"].as_str().unwrap().starts_with("For the sentence:"));
            (StatusCode::OK, Json(json!({ "choices": [{ "text": " Positive" }], "usage": { "total_tokens": 17 } })))
        }
    }
}

async fn mock_server() -> String {
    let app = Router::new().route("/v1/completions", post(completions));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/")
}

#[tokio::test]
async fn openai_compatible_round_trip() {
    std::env::set_var(TOKEN_VAR, TOKEN);
    let base = mock_server().await;
    let prompt = banditroute_gateway::render_prompt("openai_sst2", "great movie").unwrap();

    let p = HttpProvider::new(&base, "babbage-002", Some(TOKEN_VAR.into()), Duration::from_secs(2)).unwrap();
    let c = p.complete(&prompt).await.unwrap();
    assert_eq!((c.text.as_str(), c.usage_tokens), (" Positive", Some(17)));
    assert!(!format!("{p:?}").contains(TOKEN));

    let p = HttpProvider::new(&base, "no-usage", Some(TOKEN_VAR.into()), Duration::from_secs(2)).unwrap();
    assert_eq!(p.complete(&prompt).await.unwrap().usage_tokens, None);

    let p = HttpProvider::new(&base, "babbage-002", None, Duration::from_secs(2)).unwrap();
    assert_eq!(p.complete(&prompt).await, Err(ProviderError::Auth));

    let p = HttpProvider::new(&base, "babbage-002", Some("BANDITROUTE_UNSET_VAR".into()), Duration::from_secs(2)).unwrap();
    assert_eq!(p.complete(&prompt).await, Err(ProviderError::Auth));

    let p = HttpProvider::new(&base, "slow", Some(TOKEN_VAR.into()), Duration::from_millis(100)).unwrap();
    assert_eq!(p.complete(&prompt).await, Err(ProviderError::Timeout));
}

#[tokio::test]
async fn unreachable_host_is_transport_error() {
    let p = HttpProvider::new("http://127.0.0.1:1", "m", None, Duration::from_secs(2)).unwrap();
    assert!(matches!(p.complete("x").await, Err(ProviderError::Transport(_))));
}
