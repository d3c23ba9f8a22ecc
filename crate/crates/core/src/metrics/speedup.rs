use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Speedup inferred from step times and acceptance length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupEstimate {
    /// Autoregressive step time, ms.
    pub t_ar: f64,
    /// Speculative step time, ms.
    pub t_sd: f64,
    pub al: f64,
    pub speedup: f64,
}

/// `t_ar * al / t_sd`: tokens per ms with speculation over tokens per ms
/// without it.
pub fn speedup_proxy(t_ar: f64, t_sd: f64, al: f64) -> Result<SpeedupEstimate, MetricsError> {
    for (name, v) in [("t_ar", t_ar), ("t_sd", t_sd), ("al", al)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MetricsError::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(SpeedupEstimate {
        t_ar,
        t_sd,
        al,
        speedup: t_ar * al / t_sd,
    })
}

/// Mean speedup over requests, both weighted per request and per token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSpeedup {
    pub request_weighted: f64,
    pub token_weighted: f64,
}

/// `pairs` holds `(speedup, output_tokens)` per request.
pub fn mean_speedup(pairs: &[(f64, u64)]) -> Result<MeanSpeedup, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoTraces);
    }
    let tokens: u64 = pairs.iter().map(|p| p.1).sum();
    if tokens == 0 {
        return Err(MetricsError::InvalidParameter("no output tokens".into()));
    }
    Ok(MeanSpeedup {
        request_weighted: pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64,
        token_weighted: pairs.iter().map(|p| p.0 * p.1 as f64).sum::<f64>() / tokens as f64,
    })
}
