use std::sync::Arc;

use banditroute_gateway::{Gateway, GatewayConfig};
use tracing_subscriber::EnvFilter;

use crate::args::ServeArgs;
use crate::error::CliError;

pub fn serve(a: &ServeArgs) -> Result<(), CliError> {
    let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
    let _ = tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_ansi(!no_color)
        .with_writer(std::io::stderr)
        .try_init();
    let cfg = GatewayConfig::load(&a.gateway_config).map_err(|e| CliError::Usage(e.to_string()))?;
    let listen = a.listen.clone().unwrap_or_else(|| cfg.listen.clone());
    let gateway = Gateway::from_config(&cfg).map_err(|e| CliError::Data(e.to_string()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(format!("runtime: {e}")))?;
    runtime
        .block_on(banditroute_gateway::serve(Arc::new(gateway), &listen))
        .map_err(|e| CliError::Data(format!("{listen}: {e}")))
}
