//! Streaming endpoint that simulates speculative decoding.
//!
//! Each request runs a sequence of verification steps. A step sleeps for the
//! configured step latency, drafts `gamma` tokens, accepts the longest prefix
//! of independent Bernoulli trials with the configured per-position rates,
//! and emits the accepted tokens plus one bonus token as a single chunk.

mod server;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use server::{router, serve, MockHandle, MockState, RequestRecord, StateSnapshot};

#[derive(Debug, thiserror::Error)]
pub enum MockError {
    #[error("mock config: {0}")]
    Config(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Each request's generator is seeded from its request id.
    #[default]
    PerRequestId,
    /// Requests draw seeds from one shared generator in arrival order.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentMode {
    /// Every emitted token is the same id.
    #[default]
    FixedToken,
    /// Emitted tokens cycle through the prompt.
    Echo,
}

pub const FIXED_TOKEN_ID: u32 = 1000;
const FIXED_TOKEN_TEXT: &str = "tok";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    pub gamma: usize,
    pub ar_true: Vec<f64>,
    /// Milliseconds per step.
    pub t_base: f64,
    /// Milliseconds per drafted token per step.
    pub t_per_token: f64,
    /// Milliseconds per verified token per additional in-flight request.
    #[serde(default)]
    pub t_per_conc: f64,
    pub output_tokens_target: usize,
    #[serde(default)]
    pub seed_mode: SeedMode,
    #[serde(default)]
    pub content_mode: ContentMode,
    /// Prompt tag to acceptance-rate override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_profile: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
    /// Attach `token_ids` to every chunk. Without them clients have to count
    /// tokens from text.
    #[serde(default = "default_true")]
    pub report_token_ids: bool,
}

fn default_true() -> bool {
    true
}

impl MockConfig {
    pub fn new(ar_true: Vec<f64>, t_base: f64, t_per_token: f64, output_tokens_target: usize) -> Self {
        Self {
            gamma: ar_true.len(),
            ar_true,
            t_base,
            t_per_token,
            t_per_conc: 0.0,
            output_tokens_target,
            seed_mode: SeedMode::default(),
            content_mode: ContentMode::default(),
            entropy_profile: None,
            seed: 0,
            report_token_ids: true,
        }
    }

    pub fn validate(&self) -> Result<(), MockError> {
        let err = |m: String| Err(MockError::Config(m));
        let check_rates = |name: &str, ar: &[f64]| -> Result<(), MockError> {
            if ar.len() != self.gamma {
                return err(format!("{name} has {} rates, gamma is {}", ar.len(), self.gamma));
            }
            if let Some((i, r)) = ar.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
                return err(format!("{name}[{i}] = {r} is outside [0, 1]"));
            }
            Ok(())
        };
        check_rates("ar_true", &self.ar_true)?;
        for (tag, ar) in self.entropy_profile.iter().flatten() {
            check_rates(&format!("entropy_profile.{tag}"), ar)?;
        }
        for (name, v) in [
            ("t_base", self.t_base),
            ("t_per_token", self.t_per_token),
            ("t_per_conc", self.t_per_conc),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return err(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if self.output_tokens_target == 0 {
            return err("output_tokens_target must be >= 1".into());
        }
        Ok(())
    }

    /// Parse TOML (`.toml`) or JSON (anything else).
    pub fn load(path: &Path) -> Result<Self, MockError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MockError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| MockError::Config(e.message().to_owned()))?
        } else {
            serde_json::from_str(&text).map_err(|e| MockError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the JSON serialization; stable across file formats.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("serializable config")))
    }

    /// Acceptance rates for a prompt tag, falling back to `ar_true`.
    pub fn rates_for(&self, tag: Option<&str>) -> &[f64] {
        tag.and_then(|t| self.entropy_profile.as_ref()?.get(t))
            .map_or(&self.ar_true, |v| v)
    }

    /// Seed for a request id under [`SeedMode::PerRequestId`].
    pub fn request_seed(&self, request_id: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(request_id.as_bytes());
        u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub accepted: usize,
    pub emitted: usize,
}

/// One verification step under `cfg.ar_true`.
pub fn sample_step(cfg: &MockConfig, rng: &mut impl Rng) -> StepOutcome {
    sample_step_with(&cfg.ar_true, rng)
}

/// Draft positions are tried in order; the first rejection ends the step.
pub fn sample_step_with(ar: &[f64], rng: &mut impl Rng) -> StepOutcome {
    let accepted = ar
        .iter()
        .take_while(|&&p| rng.random::<f64>() < p)
        .count();
    StepOutcome {
        accepted,
        emitted: accepted + 1,
    }
}

/// `t_base + t_per_token*gamma + t_per_conc*(gamma+1)*(in_flight-1)` ms.
///
/// The concurrency penalty scales with the tokens verified per step, so
/// longer drafts lose ground as the batch grows.
pub fn step_latency(cfg: &MockConfig, in_flight: usize) -> Duration {
    let g = cfg.gamma as f64;
    let extra = in_flight.saturating_sub(1) as f64;
    let ms = cfg.t_base + cfg.t_per_token * g + cfg.t_per_conc * (g + 1.0) * extra;
    Duration::from_secs_f64(ms / 1e3)
}

/// Emitted-token probabilities `P(emitted = m)` for `m = 1..=gamma+1`.
pub fn emitted_distribution(ar: &[f64]) -> Vec<f64> {
    let mut probs = Vec::with_capacity(ar.len() + 1);
    let mut prefix = 1.0;
    for &r in ar {
        probs.push(prefix * (1.0 - r));
        prefix *= r;
    }
    probs.push(prefix);
    probs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_step_with(&[1.0; 3], &mut rng).emitted, 4);
            assert_eq!(sample_step_with(&[0.0; 3], &mut rng).emitted, 1);
        }
        assert_eq!(sample_step_with(&[], &mut rng).emitted, 1);
    }

    #[test]
    fn mean_emitted_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 1_000_000;
        let total: usize = (0..n)
            .map(|_| sample_step_with(&[0.8, 0.6, 0.4], &mut rng).emitted)
            .sum();
        let mean = total as f64 / n as f64;
        // 1 + 0.8 + 0.8*0.6 + 0.8*0.6*0.4
        assert!((mean - 2.472).abs() < 0.005, "{mean}");
    }

    #[test]
    fn latency_arithmetic() {
        let mut cfg = MockConfig::new(vec![], 10.0, 1.0, 10);
        assert_eq!(step_latency(&cfg, 1), Duration::from_millis(10));
        cfg.gamma = 3;
        cfg.ar_true = vec![0.5; 3];
        assert_eq!(step_latency(&cfg, 1), Duration::from_millis(13));
        cfg.t_per_conc = 0.05;
        let d = step_latency(&cfg, 11).as_secs_f64() * 1e3;
        assert!((d - 15.0).abs() < 1e-9);
    }

    #[test]
    fn distribution_sums_to_one() {
        let p = emitted_distribution(&[0.8, 0.6, 0.4]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.2).abs() < 1e-12);
        assert!((p[3] - 0.192).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut cfg = MockConfig::new(vec![0.5, 1.2], 1.0, 0.0, 5);
        assert!(cfg.validate().is_err());
        cfg.ar_true = vec![0.5, 0.2];
        cfg.validate().unwrap();
        cfg.gamma = 3;
        assert!(cfg.validate().is_err());
        cfg.gamma = 2;
        cfg.t_base = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_survives_format_round_trip() {
        let mut cfg = MockConfig::new(vec![0.8, 0.6], 1.5, 0.25, 64);
        cfg.entropy_profile = Some(BTreeMap::from([("low".into(), vec![0.9, 0.9])]));
        let toml_text = toml::to_string(&cfg).unwrap();
        let back: MockConfig = toml::from_str(&toml_text).unwrap();
        assert_eq!(back.config_hash(), cfg.config_hash());
        let json_back: MockConfig = serde_json::from_slice(&serde_json::to_vec(&cfg).unwrap()).unwrap();
        assert_eq!(json_back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn tag_routing() {
        let mut cfg = MockConfig::new(vec![0.5], 1.0, 0.0, 5);
        cfg.entropy_profile = Some(BTreeMap::from([("low".into(), vec![0.9])]));
        assert_eq!(cfg.rates_for(Some("low")), &[0.9]);
        assert_eq!(cfg.rates_for(Some("other")), &[0.5]);
        assert_eq!(cfg.rates_for(None), &[0.5]);
    }
}
