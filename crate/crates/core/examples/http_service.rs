//! Serves the HTTP API over an in-memory holder until Ctrl-C.
//!
//! cargo run --example http_service -- [port]
//!
//! curl -X POST --data-binary @crates/core/examples/data/shopping.xes localhost:8080/collect/xes
//! curl localhost:8080/instances/shopping-1/provenance?format=prov-json
//! curl localhost:8080/instances/shopping-1/changes

use std::net::SocketAddr;

use adprov::holder::{MemoryProvider, ProvenanceHolder};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let port: u16 = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(8080);
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let holder = ProvenanceHolder::new(Box::new(MemoryProvider::new("default")));

    println!("listening on http://{addr}");
    adprov::service::serve(holder, addr, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
