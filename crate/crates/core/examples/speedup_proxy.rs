//! Speedup estimates from step times and acceptance rates.
//!
//! cargo run --example speedup_proxy

use speedkit::metrics::{mean_speedup, speedup_proxy, theoretical_al};

fn main() {
    let t_ar = 10.0;
    for (gamma, ar) in [(1, vec![0.8]), (3, vec![0.8, 0.6, 0.4]), (5, vec![0.8, 0.7, 0.6, 0.5, 0.4])] {
        let al = theoretical_al(&ar).unwrap();
        let t_sd = t_ar + gamma as f64;
        let est = speedup_proxy(t_ar, t_sd, al).unwrap();
        println!("γ={gamma}: AL {al:.3}, t_sd {t_sd} ms -> {:.3}x", est.speedup);
    }
    // Long requests dominate the token-weighted mean.
    let per_request = [(2.1, 50), (1.6, 400), (2.4, 20)];
    let m = mean_speedup(&per_request).unwrap();
    println!("request-weighted {:.3}x, token-weighted {:.3}x", m.request_weighted, m.token_weighted);
}
