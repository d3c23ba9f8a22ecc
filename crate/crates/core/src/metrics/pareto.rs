use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// One operating point of a concurrency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub concurrency: usize,
    pub user_tps: f64,
    pub output_tps: f64,
}

impl ParetoPoint {
    pub fn new(concurrency: usize, user_tps: f64, output_tps: f64) -> Self {
        Self {
            concurrency,
            user_tps,
            output_tps,
        }
    }

    /// At least as good on both axes and strictly better on one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.user_tps >= other.user_tps
            && self.output_tps >= other.output_tps
            && (self.user_tps > other.user_tps || self.output_tps > other.output_tps)
    }
}

/// Non-dominated points sorted by ascending user TPS. Of several identical
/// points only the one with the lowest concurrency is kept.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        b.user_tps
            .total_cmp(&a.user_tps)
            .then(b.output_tps.total_cmp(&a.output_tps))
            .then(a.concurrency.cmp(&b.concurrency))
    });
    let mut frontier: Vec<ParetoPoint> = Vec::new();
    let mut best_output = f64::NEG_INFINITY;
    for p in sorted {
        // every earlier point has user_tps >= p's, so p survives only by
        // strictly beating all of their output
        if p.output_tps > best_output {
            best_output = p.output_tps;
            frontier.push(p);
        }
    }
    frontier.reverse();
    frontier
}

/// `concurrency,user_tps,output_tps,on_frontier` for every input point.
pub fn write_pareto_csv(path: &Path, points: &[ParetoPoint]) -> Result<(), MetricsError> {
    let frontier = pareto_frontier(points);
    let mut out = String::from("concurrency,user_tps,output_tps,on_frontier\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            p.concurrency,
            p.user_tps,
            p.output_tps,
            frontier.contains(p)
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| MetricsError::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| MetricsError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[(f64, f64)]) -> Vec<ParetoPoint> {
        xs.iter()
            .enumerate()
            .map(|(i, &(u, o))| ParetoPoint::new(i + 1, u, o))
            .collect()
    }

    #[test]
    fn three_point_fixture() {
        let f = pareto_frontier(&pts(&[(10.0, 100.0), (15.0, 120.0), (20.0, 90.0)]));
        let coords: Vec<(f64, f64)> = f.iter().map(|p| (p.user_tps, p.output_tps)).collect();
        assert_eq!(coords, vec![(15.0, 120.0), (20.0, 90.0)]);
    }

    #[test]
    fn single_and_duplicate() {
        let one = pts(&[(1.0, 2.0)]);
        assert_eq!(pareto_frontier(&one), one);
        let dup = pts(&[(1.0, 2.0), (1.0, 2.0)]);
        let f = pareto_frontier(&dup);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].concurrency, 1);
    }

    #[test]
    fn equal_user_tps_keeps_higher_output() {
        let f = pareto_frontier(&pts(&[(5.0, 10.0), (5.0, 20.0)]));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].output_tps, 20.0);
    }

    #[test]
    fn csv_marks_frontier() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_pareto_csv(&path, &pts(&[(10.0, 100.0), (15.0, 120.0)])).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "concurrency,user_tps,output_tps,on_frontier");
        assert!(lines[1].ends_with("false"));
        assert!(lines[2].ends_with("true"));
    }
}
