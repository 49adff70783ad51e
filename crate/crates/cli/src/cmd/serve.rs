use std::io::Write;
use std::sync::Arc;

use inpaint_eval_study::{router, serve, ServerConfig, Study};

use crate::{CliError, ServeArgs};

pub fn run(a: ServeArgs) -> Result<(), CliError> {
    let mut cfg = ServerConfig::load(&a.config).map_err(CliError::user)?;
    cfg.apply_env(|k| std::env::var(k).ok());
    if let Some(bind) = a.bind {
        cfg.bind = bind;
    }
    let seed = a.seed.or(cfg.seed);
    let study_cfg = cfg.study_config().map_err(CliError::user)?;
    let study = Arc::new(Study::open(study_cfg, &cfg.log_path, seed).map_err(CliError::data)?);
    if cfg.operator_token.as_deref().unwrap_or("").is_empty() {
        tracing::warn!("no operator token configured; /api/export is disabled");
    }
    let app = router(study, cfg.operator_token.clone(), cfg.static_dir.clone());

    let rt = tokio::runtime::Runtime::new().map_err(CliError::data)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&cfg.bind)
            .await
            .map_err(|e| CliError::user(format!("cannot bind {}: {e}", cfg.bind)))?;
        let addr = listener.local_addr().map_err(CliError::data)?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        serve(listener, app, shutdown).await.map_err(CliError::data)
    })
}
