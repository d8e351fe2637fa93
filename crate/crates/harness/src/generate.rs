//! Synthetic episode JSONL.

use std::io::Write;

use mindstate_core::{generate_synthetic, Episode, SynthConfig};

/// One compact JSON record per line.
pub fn to_jsonl(episodes: &[Episode]) -> String {
    let mut out = String::new();
    for ep in episodes {
        out.push_str(&serde_json::to_string(ep).expect("episodes serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<W: Write>(episodes: &[Episode], mut w: W) -> std::io::Result<()> {
    w.write_all(to_jsonl(episodes).as_bytes())
}

/// Deterministic for a given config.
pub fn generate(config: &SynthConfig) -> String {
    to_jsonl(&generate_synthetic(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_episodes;

    #[test]
    fn output_round_trips_through_ingest() {
        let config = SynthConfig {
            n_episodes: 5,
            ..SynthConfig::default()
        };
        let raw = generate(&config);
        assert_eq!(raw.lines().count(), 5);
        assert_eq!(parse_episodes(&raw).unwrap().episodes, generate_synthetic(&config));
    }
}
