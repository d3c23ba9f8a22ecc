//! Compare draft lengths 1 and 3 across concurrency under a per-token
//! batching penalty. The longer draft wins at low concurrency and loses at
//! high concurrency.
//!
//! cargo run --release --example dl_crossover

use speedkit::bench::{run_benchmark, BenchConfig, WorkloadItem};
use speedkit::metrics::{pareto_frontier, report_for_run, ParetoPoint};
use speedkit::mock::{self, MockConfig};

async fn sweep(ar: Vec<f64>, levels: &[usize]) -> Vec<ParetoPoint> {
    let mut points = Vec::new();
    for &c in levels {
        let gamma = ar.len();
        let mut mcfg = MockConfig::new(ar.clone(), 10.0, 1.0, 48);
        mcfg.t_per_conc = 0.05;
        let server = mock::serve(mcfg, "127.0.0.1:0").await.unwrap();
        let cfg = BenchConfig::new(server.base_url(), vec![c], gamma, 48);
        let workload: Vec<WorkloadItem> = (0..(2 * c).max(8))
            .map(|i| WorkloadItem::from_ids(format!("p{i}"), vec![1, 2, i as u32]))
            .collect();
        let runs = run_benchmark(&cfg, &workload).await.unwrap();
        points.push(report_for_run(&runs[0]).unwrap().pareto_point());
        server.shutdown().await;
    }
    points
}

#[tokio::main]
async fn main() {
    let levels = [1, 8, 64, 256];
    let dl1 = sweep(vec![0.8], &levels).await;
    let dl3 = sweep(vec![0.8, 0.6, 0.4], &levels).await;
    println!("conc   DL1 output_tps  DL3 output_tps");
    for (a, b) in dl1.iter().zip(&dl3) {
        println!("{:<6} {:>14.0}  {:>14.0}", a.concurrency, a.output_tps, b.output_tps);
    }
    for (name, pts) in [("DL1", &dl1), ("DL3", &dl3)] {
        let front: Vec<usize> = pareto_frontier(pts).iter().map(|p| p.concurrency).collect();
        println!("{name} frontier concurrencies: {front:?}");
    }
}
