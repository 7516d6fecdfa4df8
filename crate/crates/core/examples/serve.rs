//! Serves a freshly trained model over HTTP until interrupted.
//!
//! `cargo run --example serve [port]`, then
//! `curl -d '{"raw_text":"It was shown previously. We agree."}' localhost:8080/api/predict`

use std::net::SocketAddr;

use citeworth::artifact::ModelArtifact;
use citeworth::pipeline::{train_model, ModelFamily, TrainSpec};
use citeworth::service::{router, serve, ServiceConfig};
use citeworth::synthetic::keyword_split;

fn main() -> citeworth::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let port: u16 = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(8080);
    let mut spec = TrainSpec::new(ModelFamily::Enlr);
    spec.featurizer.min_df = 1;
    let model = ModelArtifact::new(train_model(&spec, &keyword_split(200, 2), None)?.model);
    let app = router(Some(model), &ServiceConfig::default())?;
    tokio::runtime::Runtime::new()?.block_on(serve(SocketAddr::from(([127, 0, 0, 1], port)), app))
}
