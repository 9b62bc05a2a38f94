//! Line-based `key = value` config with one `[section]` per pipeline stage.
//!
//! ```text
//! [generate]
//! mode = synthetic          # or: ontology
//! count = 10
//! iterations = 4
//! random_axioms = 78        # omit to use 2x the structured count
//! concept_headroom = 78
//! role_headroom = 19
//! seed = 42
//! # ontology mode:
//! # input = dump.kb
//! # size = 20
//! # min_steps = 2
//! # retry_bound = 1000
//!
//! [train]
//! architectures = flat,deep,piecewise
//! epochs = 20000
//! piecewise_epochs = 10000
//! learning_rate = 0.0001
//! folds = 10
//! seed = 7
//!
//! [eval]
//! levels = 0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9
//! seed = 11
//! ```

use anyhow::{anyhow, bail, Context, Result};
use elstm_core::nnet::Architecture;
use elstm_core::syngen::{structured_axiom_count, GenConfig};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum GenerateMode {
    Synthetic,
    Ontology { input: String, size: usize, min_steps: usize, retry_bound: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub raw: String,
    pub mode: GenerateMode,
    pub count: usize,
    pub gen: GenConfig,
    pub architectures: Vec<Architecture>,
    pub epochs: usize,
    pub piecewise_epochs: usize,
    pub learning_rate: f64,
    pub folds: usize,
    pub train_seed: u64,
    pub levels: Vec<f64>,
    pub eval_seed: u64,
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current = String::from("");
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`, got `{line}`", i + 1))?;
        sections
            .entry(current.clone())
            .or_default()
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(sections)
}

fn get<'a>(
    sections: &'a BTreeMap<String, BTreeMap<String, String>>,
    section: &str,
    key: &str,
) -> Option<&'a str> {
    sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
}

fn parse_or<T: std::str::FromStr>(value: Option<&str>, default: T, what: &str) -> Result<T> {
    match value {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| anyhow!("bad value for {what}: `{v}`")),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let sections = parse_sections(text)?;

        let iterations: u32 = parse_or(get(&sections, "generate", "iterations"), 4, "iterations")?;
        let default_random = 2 * structured_axiom_count(iterations.max(1)) as u32;
        let random_axioms: u32 =
            parse_or(get(&sections, "generate", "random_axioms"), default_random, "random_axioms")?;
        let concept_headroom: u32 =
            parse_or(get(&sections, "generate", "concept_headroom"), random_axioms, "concept_headroom")?;
        let role_headroom: u32 = parse_or(
            get(&sections, "generate", "role_headroom"),
            (random_axioms / 4).max(2),
            "role_headroom",
        )?;
        let gen_seed: u64 = parse_or(get(&sections, "generate", "seed"), 42, "generate seed")?;
        let gen = GenConfig { iterations, random_axioms, concept_headroom, role_headroom, seed: gen_seed };

        let mode = match get(&sections, "generate", "mode").unwrap_or("synthetic") {
            "synthetic" => GenerateMode::Synthetic,
            "ontology" => {
                let input = get(&sections, "generate", "input")
                    .ok_or_else(|| anyhow!("ontology mode needs `input = <path>`"))?
                    .to_string();
                GenerateMode::Ontology {
                    input,
                    size: parse_or(get(&sections, "generate", "size"), 20, "size")?,
                    min_steps: parse_or(get(&sections, "generate", "min_steps"), 1, "min_steps")?,
                    retry_bound: parse_or(get(&sections, "generate", "retry_bound"), 1000, "retry_bound")?,
                }
            }
            other => bail!("unknown generate mode `{other}`"),
        };

        let architectures: Vec<Architecture> = get(&sections, "train", "architectures")
            .unwrap_or("flat")
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse().map_err(|e: String| anyhow!(e)))
            .collect::<Result<_>>()?;
        if architectures.is_empty() {
            bail!("no architectures configured");
        }

        let levels: Vec<f64> = match get(&sections, "eval", "levels") {
            None => (0..10).map(|i| i as f64 / 10.0).collect(),
            Some(v) => v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| anyhow!("bad corruption level `{s}`")))
                .collect::<Result<_>>()?,
        };
        for &level in &levels {
            if !(0.0..=1.0).contains(&level) {
                bail!("corruption level {level} outside [0,1]");
            }
        }

        Ok(Config {
            raw: text.to_string(),
            mode,
            count: parse_or(get(&sections, "generate", "count"), 10, "count")?,
            gen,
            architectures,
            epochs: parse_or(get(&sections, "train", "epochs"), 20_000, "epochs")?,
            piecewise_epochs: parse_or(get(&sections, "train", "piecewise_epochs"), 10_000, "piecewise_epochs")?,
            learning_rate: parse_or(get(&sections, "train", "learning_rate"), 1e-4, "learning_rate")?,
            folds: parse_or(get(&sections, "train", "folds"), 10, "folds")?,
            train_seed: parse_or(get(&sections, "train", "seed"), 7, "train seed")?,
            levels,
            eval_seed: parse_or(get(&sections, "eval", "seed"), 11, "eval seed")?,
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text)
    }

    /// Stable hash of the effective config text; names the run directory.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.raw.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
