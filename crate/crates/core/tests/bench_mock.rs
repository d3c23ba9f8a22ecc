use std::collections::BTreeMap;

use speedkit::bench::{
    dispatch_request, run_benchmark, ApiKind, BenchClient, BenchConfig, TraceStatus, WorkloadItem,
};
use speedkit::metrics::{decode_steps, empirical_al};
use speedkit::mock::{self, MockConfig};

fn workload(n: usize) -> Vec<WorkloadItem> {
    (0..n)
        .map(|i| WorkloadItem::from_ids(format!("s{i}"), vec![1, 2, 3, i as u32 + 10]))
        .collect()
}

fn bench_config(base: &str, levels: Vec<usize>, gamma: usize, max_tokens: usize) -> BenchConfig {
    let mut cfg = BenchConfig::new(base, levels, gamma, max_tokens);
    cfg.warmup_requests = Some(0);
    cfg
}

#[tokio::test(flavor = "multi_thread")]
async fn chunks_match_server_ground_truth() {
    let server = mock::serve(MockConfig::new(vec![0.8, 0.6, 0.4], 1.0, 0.0, 40), "127.0.0.1:0")
        .await
        .unwrap();
    let cfg = bench_config(&server.base_url(), vec![1], 3, 64);
    let runs = run_benchmark(&cfg, &workload(3)).await.unwrap();
    assert_eq!(runs.len(), 1);
    let run = &runs[0];
    assert_eq!(run.traces.len(), 3);
    for t in &run.traces {
        assert_eq!(t.status, TraceStatus::Ok, "{:?}", t.error);
        t.validate().unwrap();
        let truth = server.state.request(&t.request_id).expect("ground truth");
        let sizes: Vec<u32> = t.token_events().map(|e| e.new_tokens).collect();
        assert_eq!(sizes, truth.chunk_sizes);
        // token chunks, the usage chunk and [DONE]
        assert_eq!(t.events.len(), truth.chunk_sizes.len() + 2);
        assert_eq!(t.total_output_tokens, 40);
        assert_eq!(t.reported_completion_tokens, Some(40));
        assert_eq!(t.finish_reason.as_deref(), Some("length"));
        assert!(t.dispatch_ns <= t.events[0].t_ns);
    }
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn closed_loop_never_exceeds_level() {
    let server = mock::serve(MockConfig::new(vec![], 100.0, 0.0, 3), "127.0.0.1:0")
        .await
        .unwrap();
    let cfg = bench_config(&server.base_url(), vec![2], 0, 3);
    let runs = run_benchmark(&cfg, &workload(6)).await.unwrap();
    assert!(runs[0].traces.iter().all(|t| t.is_ok()));
    let snap = server.state.snapshot();
    assert_eq!(snap.peak_in_flight, 2);
    assert_eq!(snap.served, 6);
    assert_eq!(snap.in_flight, 0);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_workload_fails_before_dispatch() {
    let cfg = bench_config("http://127.0.0.1:9", vec![1], 0, 4);
    assert!(run_benchmark(&cfg, &[]).await.is_err());
}

#[tokio::test(flavor = "multi_thread")]
async fn unreachable_endpoint_aborts() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let cfg = bench_config(&format!("http://{addr}"), vec![1, 2], 0, 4);
    let runs = run_benchmark(&cfg, &workload(3)).await.unwrap();
    assert_eq!(runs.len(), 1);
    assert!(runs[0].aborted.is_some());
    assert!(runs[0].traces.iter().all(|t| t.status == TraceStatus::Error));
}

#[tokio::test(flavor = "multi_thread")]
async fn timeout_keeps_received_events() {
    let server = mock::serve(MockConfig::new(vec![], 100.0, 0.0, 10), "127.0.0.1:0")
        .await
        .unwrap();
    let mut cfg = bench_config(&server.base_url(), vec![1], 0, 10);
    cfg.request_timeout = 0.15;
    let t = dispatch_request(&cfg, &workload(1)[0], "slow").await.unwrap();
    assert_eq!(t.status, TraceStatus::Timeout);
    assert_eq!(t.events.len(), 1);
    assert_eq!(t.total_output_tokens, 1);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn reset_mid_stream_is_an_error_with_partial_events() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        let (mut sock, _) = listener.accept().await.unwrap();
        let mut buf = vec![0u8; 4096];
        let _ = sock.read(&mut buf).await.unwrap();
        sock.write_all(
            b"HTTP/1.1 200 OK\r\ncontent-type: text/event-stream\r\nconnection: close\r\n\r\n\
              data: {\"choices\":[{\"text\":\"a b\",\"token_ids\":[1,2]}]}\n\n",
        )
        .await
        .unwrap();
        sock.flush().await.unwrap();
    });
    let cfg = bench_config(&format!("http://{addr}"), vec![1], 0, 10);
    let t = dispatch_request(&cfg, &workload(1)[0], "r").await.unwrap();
    assert_eq!(t.status, TraceStatus::Error);
    assert_eq!(t.events.len(), 1);
    assert_eq!(t.events[0].new_tokens, 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn same_request_id_reproduces_chunks() {
    let server = mock::serve(MockConfig::new(vec![0.7, 0.5], 1.0, 0.0, 50), "127.0.0.1:0")
        .await
        .unwrap();
    let cfg = bench_config(&server.base_url(), vec![1], 2, 50);
    let item = &workload(1)[0];
    let sizes = |t: &speedkit::bench::RequestTrace| -> Vec<u32> {
        t.token_events().map(|e| e.new_tokens).collect()
    };
    let a = dispatch_request(&cfg, item, "fixed").await.unwrap();
    let b = dispatch_request(&cfg, item, "fixed").await.unwrap();
    let c = dispatch_request(&cfg, item, "other").await.unwrap();
    assert_eq!(sizes(&a), sizes(&b));
    assert_ne!(sizes(&a), sizes(&c));
    server.shutdown().await;
}

#[test]
fn request_bodies_are_byte_identical() {
    let cfg = BenchConfig::new("http://x", vec![1], 0, 8);
    let client = BenchClient::new(&cfg).unwrap();
    let item = WorkloadItem::from_ids("a", vec![5, 6, 7]);
    assert_eq!(client.request_body(&item), client.request_body(&item.clone()));
    let body: serde_json::Value = serde_json::from_slice(&client.request_body(&item)).unwrap();
    assert_eq!(body["prompt_token_ids"], serde_json::json!([5, 6, 7]));
    assert_eq!(body["stream"], serde_json::json!(true));
}

#[tokio::test(flavor = "multi_thread")]
async fn text_only_chunks_are_counted_with_the_tokenizer() {
    let mut mcfg = MockConfig::new(vec![0.9, 0.9, 0.9], 1.0, 0.0, 30);
    mcfg.report_token_ids = false;
    let server = mock::serve(mcfg, "127.0.0.1:0").await.unwrap();
    for api in [ApiKind::Completions, ApiKind::Chat] {
        let mut cfg = bench_config(&server.base_url(), vec![1], 3, 30);
        cfg.api = api;
        let t = dispatch_request(&cfg, &workload(1)[0], "t").await.unwrap();
        assert!(t.is_ok(), "{:?}", t.error);
        let truth = server.state.request("t").unwrap();
        assert_eq!(t.token_events().map(|e| e.new_tokens).collect::<Vec<_>>(), truth.chunk_sizes);
        assert_eq!(t.total_output_tokens, 30);
    }
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn gamma_zero_emits_single_tokens() {
    let server = mock::serve(MockConfig::new(vec![], 1.0, 0.0, 12), "127.0.0.1:0")
        .await
        .unwrap();
    let cfg = bench_config(&server.base_url(), vec![1], 0, 12);
    let t = dispatch_request(&cfg, &workload(1)[0], "g0").await.unwrap();
    assert!(t.token_events().all(|e| e.new_tokens == 1));
    assert_eq!(t.token_events().count(), 12);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn entropy_tags_order_acceptance_length() {
    let mut mcfg = MockConfig::new(vec![0.6, 0.5, 0.4], 0.5, 0.0, 200);
    mcfg.entropy_profile = Some(BTreeMap::from([
        ("low_entropy".to_string(), vec![0.9, 0.85, 0.8]),
        ("mixed".to_string(), vec![0.7, 0.6, 0.5]),
        ("high_entropy".to_string(), vec![0.4, 0.3, 0.2]),
    ]));
    let server = mock::serve(mcfg, "127.0.0.1:0").await.unwrap();
    let cfg = bench_config(&server.base_url(), vec![8], 3, 200);
    let mut al = BTreeMap::new();
    for tag in ["low_entropy", "mixed", "high_entropy"] {
        let items: Vec<WorkloadItem> = workload(16)
            .into_iter()
            .map(|mut w| {
                w.tag = Some(tag.to_string());
                w
            })
            .collect();
        let runs = run_benchmark(&cfg, &items).await.unwrap();
        al.insert(tag, empirical_al(&runs[0].traces, true).unwrap());
    }
    assert!(al["low_entropy"] > al["mixed"], "{al:?}");
    assert!(al["mixed"] > al["high_entropy"], "{al:?}");
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn fixed_step_latency_is_observed() {
    let server = mock::serve(MockConfig::new(vec![], 10.0, 0.0, 30), "127.0.0.1:0")
        .await
        .unwrap();
    let cfg = bench_config(&server.base_url(), vec![2], 0, 30);
    let runs = run_benchmark(&cfg, &workload(4)).await.unwrap();
    let stats = speedkit::metrics::latency_stats(&runs[0].traces).unwrap();
    let p50 = stats.step_latency.unwrap().p50;
    assert!((p50 - 10.0).abs() <= 1.0, "p50 step {p50}");
    assert!(decode_steps(&runs[0].traces, true).iter().all(|&s| s == 1));
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn diagnostics_endpoint_reports_state() {
    let cfg = MockConfig::new(vec![0.5], 1.0, 0.0, 4);
    let hash = cfg.config_hash();
    let server = mock::serve(cfg, "127.0.0.1:0").await.unwrap();
    let v: serde_json::Value = reqwest::get(format!("{}/__mock/state", server.base_url()))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(v["in_flight"], 0);
    assert_eq!(v["served"], 0);
    assert_eq!(v["config_hash"], hash);
    let missing = reqwest::get(format!("{}/__mock/requests/nope", server.base_url()))
        .await
        .unwrap();
    assert_eq!(missing.status(), 404);
    server.shutdown().await;
}
