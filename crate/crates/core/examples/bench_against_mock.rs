//! Sweep concurrency against an in-process mock and print the metric report
//! for each level.
//!
//! cargo run --example bench_against_mock

use speedkit::bench::{run_benchmark, BenchConfig, WorkloadItem};
use speedkit::metrics::report_for_run;
use speedkit::mock::{self, MockConfig};

#[tokio::main]
async fn main() {
    let server = mock::serve(MockConfig::new(vec![0.8, 0.6, 0.4], 5.0, 0.5, 128), "127.0.0.1:0")
        .await
        .unwrap();
    let cfg = BenchConfig::new(server.base_url(), vec![1, 4, 16], 3, 128);
    let workload: Vec<WorkloadItem> = (0..32)
        .map(|i| WorkloadItem::from_ids(format!("p{i}"), vec![1, 2, 3, i]))
        .collect();
    let runs = run_benchmark(&cfg, &workload).await.unwrap();
    println!("conc  AL     ar                      ttft_p50  step_p50  user_tps  output_tps");
    for run in &runs {
        let r = report_for_run(run).unwrap();
        let ar: Vec<String> = r.ar_vector.ar.iter().map(|a| a.map_or("-".into(), |x| format!("{x:.3}"))).collect();
        println!(
            "{:<5} {:.3}  {:<22}  {:>7.2}  {:>8.2}  {:>8.1}  {:>10.1}",
            r.concurrency,
            r.empirical_al,
            ar.join(" "),
            r.ttft_stats.p50,
            r.step_latency_stats.map_or(f64::NAN, |s| s.p50),
            r.user_tps,
            r.output_tps
        );
    }
    server.shutdown().await;
}
