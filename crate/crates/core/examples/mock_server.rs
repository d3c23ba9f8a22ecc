//! Run the mock speculative-decoding endpoint in the foreground.
//!
//! cargo run --example mock_server -- 127.0.0.1:8000

use speedkit::mock::{self, MockConfig};

#[tokio::main]
async fn main() {
    let bind = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:8000".into());
    let mut cfg = MockConfig::new(vec![0.8, 0.6, 0.4], 10.0, 1.0, 256);
    cfg.t_per_conc = 0.05;
    let server = mock::serve(cfg, &bind).await.expect("bind");
    println!("serving {} (POST /v1/completions, GET /__mock/state)", server.base_url());
    tokio::signal::ctrl_c().await.unwrap();
    server.shutdown().await;
}
