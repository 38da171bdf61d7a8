//! Run configuration: a flat key space that round-trips through a plain
//! `key = value` text format. Command-line flags override file values.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub chain_sites: Option<usize>,
    pub side_sites: usize,
    pub attach_pos: Option<usize>,
    pub boundary: String,
    pub graph_file: Option<PathBuf>,
    pub interaction: String,
    pub g_list: Vec<f64>,
    pub np_list: Vec<usize>,
    pub bin_width: f64,
    pub states: Vec<usize>,
    pub sweep_attach: bool,
    pub output_dir: PathBuf,
    pub format: String,
    pub workers: Option<usize>,
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let output_dir = std::env::var_os("PAIRGRAPH_OUTPUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("pairgraph-out"));
        RunConfig {
            command: String::new(),
            chain_sites: None,
            side_sites: 0,
            attach_pos: None,
            boundary: "open".into(),
            graph_file: None,
            interaction: "bcs".into(),
            g_list: Vec::new(),
            np_list: Vec::new(),
            bin_width: 0.05,
            states: vec![0],
            sweep_attach: false,
            output_dir,
            format: "csv".into(),
            workers: None,
            tolerance: 1e-10,
        }
    }
}

pub const COMMANDS: &[&str] = &[
    "spectrum",
    "twobody",
    "sweep-depairing",
    "dos",
    "pdist",
    "coherence",
    "richardson-gap",
    "gap-sweep",
    "occupations",
    "bcs-fit",
];

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Serialize as the flat text format.
    pub fn to_flat_text(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            if !value.is_empty() {
                writeln!(out, "{} = {}", key, value).unwrap();
            }
        };
        put("command", self.command.clone());
        if let Some(n) = self.chain_sites {
            put("chain_sites", n.to_string());
        }
        put("side_sites", self.side_sites.to_string());
        if let Some(n) = self.attach_pos {
            put("attach_pos", n.to_string());
        }
        put("boundary", self.boundary.clone());
        if let Some(p) = &self.graph_file {
            put("graph_file", p.display().to_string());
        }
        put("interaction", self.interaction.clone());
        put("g_list", join(&self.g_list));
        put("np_list", join(&self.np_list));
        put("bin_width", self.bin_width.to_string());
        put("states", join(&self.states));
        put("sweep_attach", self.sweep_attach.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("format", self.format.clone());
        if let Some(w) = self.workers {
            put("workers", w.to_string());
        }
        put("tolerance", self.tolerance.to_string());
        out
    }

    /// Parse the flat text format over a default configuration.
    pub fn from_flat_text(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let ctx = |e: String| anyhow!("line {}: key `{}`: {}", lineno + 1, key, e);
            match key {
                "command" => config.command = value.to_string(),
                "chain_sites" => {
                    config.chain_sites = Some(value.parse().map_err(|e: std::num::ParseIntError| ctx(e.to_string()))?)
                }
                "side_sites" => {
                    config.side_sites = value.parse().map_err(|e: std::num::ParseIntError| ctx(e.to_string()))?
                }
                "attach_pos" => {
                    config.attach_pos = Some(value.parse().map_err(|e: std::num::ParseIntError| ctx(e.to_string()))?)
                }
                "boundary" => config.boundary = value.to_string(),
                "graph_file" => config.graph_file = Some(PathBuf::from(value)),
                "interaction" => config.interaction = value.to_string(),
                "g_list" => config.g_list = parse_f64_list(value).map_err(|e| ctx(e))?,
                "np_list" => config.np_list = parse_usize_list(value).map_err(|e| ctx(e))?,
                "bin_width" => {
                    config.bin_width = value.parse().map_err(|e: std::num::ParseFloatError| ctx(e.to_string()))?
                }
                "states" => config.states = parse_usize_list(value).map_err(|e| ctx(e))?,
                "sweep_attach" => {
                    config.sweep_attach = value.parse().map_err(|e: std::str::ParseBoolError| ctx(e.to_string()))?
                }
                "output_dir" => config.output_dir = PathBuf::from(value),
                "format" => config.format = value.to_string(),
                "workers" => {
                    config.workers = Some(value.parse().map_err(|e: std::num::ParseIntError| ctx(e.to_string()))?)
                }
                "tolerance" => {
                    config.tolerance = value.parse().map_err(|e: std::num::ParseFloatError| ctx(e.to_string()))?
                }
                other => bail!("line {}: unknown key `{}`", lineno + 1, other),
            }
        }
        Ok(config)
    }

    /// Full precondition check; collects every violation.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if !COMMANDS.contains(&self.command.as_str()) {
            violations.push(format!(
                "unknown command `{}` (expected one of {})",
                self.command,
                COMMANDS.join(", ")
            ));
        }
        let sweeps_attach = matches!(self.command.as_str(), "sweep-depairing" | "gap-sweep")
            || (self.command == "bcs-fit" && self.sweep_attach);
        if self.graph_file.is_none() {
            match self.chain_sites {
                None => violations.push("one of chain_sites or graph_file is required".into()),
                Some(n) => {
                    if sweeps_attach {
                        // the attach position is the sweep variable
                        if self.attach_pos.is_some() {
                            violations
                                .push("attach_pos is swept by this command; remove it".into());
                        }
                        let probe = pairgraph::ChainSpec {
                            total_sites: n,
                            side_sites: self.side_sites,
                            attach_pos: if self.side_sites >= 1 { Some(1) } else { None },
                            boundary: pairgraph::Boundary::Open,
                        };
                        if let Err(e) = probe.validate() {
                            violations.push(e.to_string());
                        }
                        if self.boundary == "periodic" {
                            violations.push("attach-position sweeps need an open chain".into());
                        }
                    } else {
                        let spec = self.chain_spec_unchecked(n);
                        if let Err(e) = spec.validate() {
                            violations.push(e.to_string());
                        }
                    }
                }
            }
        } else if self.chain_sites.is_some() {
            violations.push("chain_sites and graph_file are mutually exclusive".into());
        } else if sweeps_attach {
            violations.push("attach-position sweeps work on chain families, not graph files".into());
        }
        if !matches!(self.boundary.as_str(), "open" | "periodic") {
            violations.push(format!(
                "boundary `{}` is not `open` or `periodic`",
                self.boundary
            ));
        }
        if !matches!(self.interaction.as_str(), "bcs" | "hubbard") {
            violations.push(format!(
                "interaction `{}` is not `bcs` or `hubbard`",
                self.interaction
            ));
        }
        if !matches!(self.format.as_str(), "csv" | "json") {
            violations.push(format!("format `{}` is not `csv` or `json`", self.format));
        }
        if self.g_list.iter().any(|g| !g.is_finite()) {
            violations.push("coupling list contains a non-finite value".into());
        }
        if !(self.bin_width > 0.0) {
            violations.push(format!("bin_width {} is not positive", self.bin_width));
        }
        if !(self.tolerance > 0.0) {
            violations.push(format!("tolerance {} is not positive", self.tolerance));
        }
        let needs_g = matches!(
            self.command.as_str(),
            "twobody"
                | "sweep-depairing"
                | "dos"
                | "pdist"
                | "coherence"
                | "richardson-gap"
                | "gap-sweep"
                | "occupations"
                | "bcs-fit"
        );
        if needs_g && self.g_list.is_empty() {
            violations.push("this command needs --g or --g-grid".into());
        }
        let needs_np = matches!(
            self.command.as_str(),
            "richardson-gap" | "gap-sweep" | "occupations" | "bcs-fit"
        );
        if needs_np && self.np_list.is_empty() {
            violations.push("this command needs --np".into());
        }
        if self.np_list.iter().any(|&np| np == 0) {
            violations.push("pair counts must be positive".into());
        }
        if matches!(self.command.as_str(), "sweep-depairing" | "gap-sweep")
            && self.side_sites == 0
        {
            violations.push("sweeps over the lateral-site position need side_sites >= 1".into());
        }
        if self.command == "bcs-fit" && self.sweep_attach && self.side_sites == 0 {
            violations.push("bcs-fit --sweep-attach needs side_sites >= 1".into());
        }
        violations
    }

    fn chain_spec_unchecked(&self, total_sites: usize) -> pairgraph::ChainSpec {
        pairgraph::ChainSpec {
            total_sites,
            side_sites: self.side_sites,
            attach_pos: self.attach_pos,
            boundary: if self.boundary == "periodic" {
                pairgraph::Boundary::Periodic
            } else {
                pairgraph::Boundary::Open
            },
        }
    }

    pub fn chain_spec(&self) -> Result<pairgraph::ChainSpec> {
        let n = self
            .chain_sites
            .ok_or_else(|| anyhow!("chain_sites required"))?;
        let spec = self.chain_spec_unchecked(n);
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_f64_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

pub fn parse_usize_list(text: &str) -> std::result::Result<Vec<usize>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect()
}

/// `start:stop:count` linear grid.
pub fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:stop:count".into());
    }
    let start: f64 = parts[0].trim().parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let stop: f64 = parts[1].trim().parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let count: usize = parts[2].trim().parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    if count == 0 {
        return Err("count must be positive".into());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_text_round_trip() {
        let mut config = RunConfig::default();
        config.command = "gap-sweep".into();
        config.chain_sites = Some(40);
        config.side_sites = 1;
        config.attach_pos = None;
        config.g_list = vec![0.005, 0.01];
        config.np_list = vec![1, 4, 7];
        config.workers = Some(4);
        let text = config.to_flat_text();
        let back = RunConfig::from_flat_text(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn grid_parsing() {
        let grid = parse_grid("0.001:0.3:40").unwrap();
        assert_eq!(grid.len(), 40);
        assert!((grid[0] - 0.001).abs() < 1e-15);
        assert!((grid[39] - 0.3).abs() < 1e-15);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }

    #[test]
    fn validation_collects_everything() {
        let mut config = RunConfig::default();
        config.command = "sweep-depairing".into();
        config.chain_sites = Some(40);
        config.side_sites = 1;
        config.attach_pos = Some(40);
        config.boundary = "weird".into();
        let violations = config.validate();
        assert!(violations.iter().any(|v| v.contains("attach_pos")));
        assert!(violations.iter().any(|v| v.contains("boundary")));
        assert!(violations.iter().any(|v| v.contains("--g")));
    }

    #[test]
    fn periodic_with_side_sites_rejected() {
        let mut config = RunConfig::default();
        config.command = "twobody".into();
        config.chain_sites = Some(40);
        config.side_sites = 1;
        config.attach_pos = Some(5);
        config.boundary = "periodic".into();
        config.g_list = vec![0.05];
        let violations = config.validate();
        assert!(violations.iter().any(|v| v.contains("periodic")));
    }
}
