//! One pipeline per subcommand, each behind the same trait and selected
//! by name from the registry at dispatch time.

use anyhow::{anyhow, Context, Result};

use pairgraph::graph::QuantumGraph;
use pairgraph::manybody::{fit_bcs, ground_occupations};
use pairgraph::richardson::{gap_sweep, solve_richardson, spectroscopic_gap, LevelSet};
use pairgraph::spectral::graph_spectrum;
use pairgraph::twobody::{
    assemble, coherence_length, depairing_sweep, dos_histogram, pair_distance_distribution,
    Interaction, InteractionKind,
};

use crate::config::RunConfig;
use crate::output::Artifact;

pub struct PipelineOutput {
    pub artifacts: Vec<Artifact>,
    pub failed_points: Vec<String>,
}

impl PipelineOutput {
    fn of(artifacts: Vec<Artifact>) -> Self {
        PipelineOutput {
            artifacts,
            failed_points: Vec::new(),
        }
    }
}

pub trait Pipeline: Sync {
    fn name(&self) -> &'static str;
    fn run(&self, config: &RunConfig) -> Result<PipelineOutput>;
}

pub fn registry() -> Vec<Box<dyn Pipeline>> {
    vec![
        Box::new(Spectrum),
        Box::new(TwoBody),
        Box::new(SweepDepairing),
        Box::new(Dos),
        Box::new(PairDistance),
        Box::new(Coherence),
        Box::new(RichardsonGap),
        Box::new(GapSweepCmd),
        Box::new(Occupations),
        Box::new(BcsFit),
    ]
}

pub fn find(registry: &[Box<dyn Pipeline>], name: &str) -> Option<usize> {
    registry.iter().position(|p| p.name() == name)
}

fn build_graph(config: &RunConfig) -> Result<QuantumGraph> {
    if let Some(path) = &config.graph_file {
        let text = crate::output::read_to_string(path)?;
        Ok(QuantumGraph::from_edge_list(&text)?)
    } else {
        let spec = config.chain_spec()?;
        Ok(QuantumGraph::chain(&spec)?)
    }
}

fn interaction(config: &RunConfig, g: f64) -> Interaction {
    match config.interaction.as_str() {
        "hubbard" => Interaction::hubbard(g),
        _ => Interaction::bcs(g),
    }
}

fn interaction_kind(config: &RunConfig) -> InteractionKind {
    match config.interaction.as_str() {
        "hubbard" => InteractionKind::Hubbard,
        _ => InteractionKind::Bcs,
    }
}

fn first_g(config: &RunConfig) -> Result<f64> {
    config
        .g_list
        .first()
        .copied()
        .ok_or_else(|| anyhow!("a coupling is required"))
}

fn graph_levels(graph: &QuantumGraph) -> Result<Vec<f64>> {
    Ok(graph_spectrum(graph)?.energies().to_vec())
}

struct Spectrum;

impl Pipeline for Spectrum {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let levels = graph_levels(&graph)?;
        let rows: Vec<String> = levels
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{},{}", i + 1, e))
            .collect();
        let mut artifacts = vec![
            Artifact::csv("spectrum.csv", "index,energy_K", &rows),
            Artifact {
                name: "graph.txt".into(),
                bytes: graph.to_edge_list().into_bytes(),
            },
        ];
        if config.format == "json" {
            artifacts.push(Artifact::json("spectrum.json", &levels)?);
        }
        Ok(PipelineOutput::of(artifacts))
    }
}

struct TwoBody;

impl Pipeline for TwoBody {
    fn name(&self) -> &'static str {
        "twobody"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let g = first_g(config)?;
        let solution = assemble(&graph, interaction(config, g)).solve();
        let mut rows = Vec::new();
        for (i, e) in solution.sym_energies().iter().enumerate() {
            rows.push(format!("symmetric,{},{}", i + 1, e));
        }
        for (i, e) in solution.antisym_energies().iter().enumerate() {
            rows.push(format!("antisymmetric,{},{}", i + 1, e));
        }
        let spectra = Artifact::csv("twobody_spectra.csv", "sector,index,energy_K", &rows);
        let phi = solution.ground_state();
        let n = graph.n_sites();
        let mut grid = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                grid.push(format!("{},{},{}", i + 1, j + 1, phi[(i, j)] * phi[(i, j)]));
            }
        }
        let wavefunction = Artifact::csv("ground_wavefunction.csv", "i,j,phi_sq", &grid);
        let mut artifacts = vec![spectra, wavefunction];
        if config.format == "json" {
            #[derive(serde::Serialize)]
            struct Summary {
                ground_energy: f64,
                depairing_energy: f64,
            }
            artifacts.push(Artifact::json(
                "twobody_summary.json",
                &Summary {
                    ground_energy: solution.sym_energies()[0],
                    depairing_energy: solution.depairing_energy(),
                },
            )?);
        }
        Ok(PipelineOutput::of(artifacts))
    }
}

struct SweepDepairing;

impl Pipeline for SweepDepairing {
    fn name(&self) -> &'static str {
        "sweep-depairing"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let total = config
            .chain_sites
            .ok_or_else(|| anyhow!("sweep-depairing works on chain families"))?;
        let rows = depairing_sweep(
            total,
            config.side_sites,
            &config.g_list,
            interaction_kind(config),
        )?;
        let lines: Vec<String> = rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{}",
                    r.attach_pos, r.g, r.depairing, r.coherence_length
                )
            })
            .collect();
        Ok(PipelineOutput::of(vec![Artifact::csv(
            "depairing_sweep.csv",
            "attach_pos,g,depairing_K,coherence_length",
            &lines,
        )]))
    }
}

struct Dos;

impl Pipeline for Dos {
    fn name(&self) -> &'static str {
        "dos"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let g = first_g(config)?;
        let (sym, antisym) = assemble(&graph, interaction(config, g)).sector_eigenvalues();
        let histogram = dos_histogram(&sym, &antisym, config.bin_width)?;
        let rows: Vec<String> = (0..histogram.n_bins())
            .map(|k| {
                format!(
                    "{},{},{},{}",
                    histogram.bin_start(k),
                    histogram.symmetric[k],
                    histogram.antisymmetric[k],
                    histogram.combined[k]
                )
            })
            .collect();
        Ok(PipelineOutput::of(vec![Artifact::csv(
            "dos.csv",
            "bin_start_K,symmetric,antisymmetric,total",
            &rows,
        )]))
    }
}

struct PairDistance;

impl Pipeline for PairDistance {
    fn name(&self) -> &'static str {
        "pdist"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let distances = graph.shortest_path_distances();
        let mut rows = Vec::new();
        for &g in &config.g_list {
            let solution = assemble(&graph, interaction(config, g)).solve();
            for &state in &config.states {
                let phi = solution
                    .symmetric_state(state)
                    .with_context(|| format!("state {}", state))?;
                let p = pair_distance_distribution(&phi, &distances)?;
                for (r, prob) in p.iter().enumerate() {
                    rows.push(format!("{},{},{},{}", g, state, r, prob));
                }
            }
        }
        Ok(PipelineOutput::of(vec![Artifact::csv(
            "pair_distance.csv",
            "g,state,r,probability",
            &rows,
        )]))
    }
}

struct Coherence;

impl Pipeline for Coherence {
    fn name(&self) -> &'static str {
        "coherence"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let distances = graph.shortest_path_distances();
        let rows: Vec<String> = config
            .g_list
            .iter()
            .map(|&g| {
                let solution = assemble(&graph, interaction(config, g)).solve();
                let xi = coherence_length(&solution.ground_state(), &distances)?;
                Ok(format!(
                    "{},{},{}",
                    g,
                    xi,
                    if xi > 0.0 { 1.0 / xi } else { f64::INFINITY }
                ))
            })
            .collect::<Result<_>>()?;
        Ok(PipelineOutput::of(vec![Artifact::csv(
            "coherence.csv",
            "g,xi,inverse_xi",
            &rows,
        )]))
    }
}

struct RichardsonGap;

impl Pipeline for RichardsonGap {
    fn name(&self) -> &'static str {
        "richardson-gap"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let levels = graph_levels(&graph)?;
        let mut rows = Vec::new();
        let mut records = Vec::new();
        let mut failed = Vec::new();
        for &np in &config.np_list {
            for &g in &config.g_list {
                match spectroscopic_gap(&levels, np, g) {
                    Ok(gap) => rows.push(format!("{},{},{}", np, g, gap)),
                    Err(e) => {
                        failed.push(format!("np={} g={}: {}", np, g, e));
                        continue;
                    }
                }
                let set = LevelSet::new(levels.clone(), vec![], np)?;
                let seeds: Vec<usize> = (0..np).collect();
                match solve_richardson(&set, g, &seeds) {
                    Ok(solution) => {
                        if solution.residual_norm > config.tolerance {
                            failed.push(format!(
                                "np={} g={}: residual {} above tolerance",
                                np, g, solution.residual_norm
                            ));
                        }
                        records.push(SolutionRecord {
                            n_pairs: np,
                            g,
                            rapidities: solution
                                .rapidities
                                .iter()
                                .map(|e| [e.re, e.im])
                                .collect(),
                            residual_norm: solution.residual_norm,
                            trace_len: solution.trace.len(),
                            pair_energy: solution.pair_energy(),
                        });
                    }
                    Err(e) => failed.push(format!("np={} g={}: {}", np, g, e)),
                }
            }
        }
        let artifacts = vec![
            Artifact::csv("richardson_gap.csv", "n_pairs,g,gap_K", &rows),
            Artifact::json("richardson_solutions.json", &records)?,
        ];
        Ok(PipelineOutput {
            artifacts,
            failed_points: failed,
        })
    }
}

#[derive(serde::Serialize)]
struct SolutionRecord {
    n_pairs: usize,
    g: f64,
    rapidities: Vec<[f64; 2]>,
    residual_norm: f64,
    trace_len: usize,
    pair_energy: f64,
}

struct GapSweepCmd;

impl Pipeline for GapSweepCmd {
    fn name(&self) -> &'static str {
        "gap-sweep"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let total = config
            .chain_sites
            .ok_or_else(|| anyhow!("gap-sweep works on chain families"))?;
        let sweep = gap_sweep(total, config.side_sites, &config.np_list, &config.g_list)?;
        let rows: Vec<String> = sweep
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.attach_pos, r.n_pairs, r.g, r.gap, r.enhancement
                )
            })
            .collect();
        let failed = sweep
            .failures
            .iter()
            .map(|(n, np, g, msg)| format!("n={} np={} g={}: {}", n, np, g, msg))
            .collect();
        Ok(PipelineOutput {
            artifacts: vec![Artifact::csv(
                "gap_sweep.csv",
                "attach_pos,n_pairs,g,gap_K,enhancement",
                &rows,
            )],
            failed_points: failed,
        })
    }
}

struct Occupations;

impl Pipeline for Occupations {
    fn name(&self) -> &'static str {
        "occupations"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let graph = build_graph(config)?;
        let levels = graph_levels(&graph)?;
        let np = *config
            .np_list
            .first()
            .ok_or_else(|| anyhow!("occupations needs --np"))?;
        let g = first_g(config)?;
        let profile = ground_occupations(&levels, g, np)?;
        let fit = fit_bcs(&profile, &levels)?;
        let rows: Vec<String> = levels
            .iter()
            .zip(profile.nu())
            .enumerate()
            .map(|(i, (&e, &nu))| {
                format!(
                    "{},{},{},{}",
                    i + 1,
                    e,
                    nu,
                    pairgraph::manybody::bcs_occupation(e, fit.mu, fit.delta)
                )
            })
            .collect();
        Ok(PipelineOutput::of(vec![Artifact::csv(
            "occupations.csv",
            "level,energy_K,nu,v2_fit",
            &rows,
        )]))
    }
}

struct BcsFit;

impl Pipeline for BcsFit {
    fn name(&self) -> &'static str {
        "bcs-fit"
    }

    fn run(&self, config: &RunConfig) -> Result<PipelineOutput> {
        let np = *config
            .np_list
            .first()
            .ok_or_else(|| anyhow!("bcs-fit needs --np"))?;
        if config.sweep_attach {
            // pairing parameter and spectroscopic gap against the
            // lateral-site position, at fixed coupling
            let total = config
                .chain_sites
                .ok_or_else(|| anyhow!("--sweep-attach works on chain families"))?;
            let g = first_g(config)?;
            let backbone = total - config.side_sites;
            let mut rows = Vec::new();
            let mut failed = Vec::new();
            for n in 1..=backbone {
                let spec = pairgraph::ChainSpec {
                    total_sites: total,
                    side_sites: config.side_sites,
                    attach_pos: Some(n),
                    boundary: pairgraph::Boundary::Open,
                };
                let graph = QuantumGraph::chain(&spec)?;
                let levels = graph_levels(&graph)?;
                let profile = ground_occupations(&levels, g, np)?;
                let fit = fit_bcs(&profile, &levels)?;
                match spectroscopic_gap(&levels, np, g) {
                    Ok(gap) => rows.push(format!("{},{},{}", n, fit.delta, gap)),
                    Err(e) => failed.push(format!("n={}: {}", n, e)),
                }
            }
            return Ok(PipelineOutput {
                artifacts: vec![Artifact::csv(
                    "bcs_fit_attach_sweep.csv",
                    "attach_pos,delta_fit_K,delta_gap_K",
                    &rows,
                )],
                failed_points: failed,
            });
        }
        let graph = build_graph(config)?;
        let levels = graph_levels(&graph)?;
        let rows: Vec<String> = config
            .g_list
            .iter()
            .map(|&g| {
                let profile = ground_occupations(&levels, g, np)?;
                let fit = fit_bcs(&profile, &levels)?;
                Ok(format!("{},{},{},{}", g, fit.delta, fit.mu, fit.rss))
            })
            .collect::<Result<_>>()?;
        Ok(PipelineOutput::of(vec![Artifact::csv(
            "bcs_fit.csv",
            "g,delta_K,mu_K,rss",
            &rows,
        )]))
    }
}
