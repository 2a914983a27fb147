//! Pipeline command line: fuse depth views into a labeled cloud, sample
//! suction candidates, evaluate the collision/seal/wrench gates, annotate
//! score maps, rank grasps, and report precision metrics.

mod cmds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sgrasp_core::config::PipelineConfig;
use sgrasp_core::wrench::GateSelection;

#[derive(Parser)]
#[command(
    name = "sgrasp",
    version,
    about = "Suction grasp sampling, evaluation, and annotation on labeled point clouds"
)]
struct Cli {
    /// Pipeline config JSON; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted config overrides, e.g. --set sampler.samples_per_object=200
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Worker threads (0 = auto). Output is identical for every value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// RNG seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Back-project depth views, estimate normals, and merge into cloud.ply
    Fuse {
        /// Directory of .pgm / .f32 depth files with .json sidecars
        #[arg(long)]
        depth_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write ASCII PLY instead of binary little-endian
        #[arg(long)]
        ascii: bool,
    },
    /// Sample object-aware suction candidates from a labeled cloud
    Sample {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the collision / seal / wrench gates over candidates
    Evaluate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Which gates to run (all, collision-only, seal-only, no-dynamics)
        #[arg(long)]
        gate: Option<GateSelection>,
    },
    /// Turn passing candidates into a per-point binary score map
    Annotate {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        evaluations: PathBuf,
        /// Output scores.ply (a scores.json sidecar lands next to it)
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter by safety margin and rank candidates by confidence
    Rank {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        /// Score-map PLY to rank with; the normal-variance baseline
        /// affordance is used when omitted
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the cloud with per-point confidence as a score
        /// property for external viewers
        #[arg(long)]
        export_scored: Option<PathBuf>,
    },
    /// Top-k precision of ranked grasps against the online Q oracle
    Metrics {
        /// Scene directory with ranked.jsonl and scene.json; repeat for
        /// multi-scene reports (per-scene, mean, and pooled)
        #[arg(long = "scene-dir", required = true)]
        scene_dirs: Vec<PathBuf>,
        /// Optional CSV output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the 960-vertex and 8-vertex seal models on the test board
    CompareModels {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit procedural fixtures: board pads, stack scenes, and the demo
    /// scene with rendered depth views
    Fixtures {
        #[arg(long)]
        emit: PathBuf,
    },
    /// Print the effective configuration
    ConfigDump,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => return e.report(),
    };
    let result = match cli.command {
        Command::Fuse {
            depth_dir,
            out,
            ascii,
        } => cmds::fuse(&config, &depth_dir, &out, ascii),
        Command::Sample { cloud, out } => cmds::sample(&config, &cloud, &out),
        Command::Evaluate {
            scene,
            candidates,
            out,
            gate,
        } => cmds::evaluate(&config, &scene, &candidates, &out, gate),
        Command::Annotate {
            cloud,
            candidates,
            evaluations,
            out,
        } => cmds::annotate(&config, &cloud, &candidates, &evaluations, &out),
        Command::Rank {
            cloud,
            candidates,
            scene,
            scores,
            out,
            export_scored,
        } => cmds::rank(
            &config,
            &cloud,
            &candidates,
            &scene,
            scores.as_deref(),
            &out,
            export_scored.as_deref(),
        ),
        Command::Metrics { scene_dirs, out } => {
            cmds::metrics(&config, &scene_dirs, out.as_deref())
        }
        Command::CompareModels { out } => cmds::compare_models(&config, out.as_deref()),
        Command::Fixtures { emit } => cmds::fixtures(&config, &emit),
        Command::ConfigDump => {
            println!("{}", config.to_pretty_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, cmds::CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                cmds::CliError::input(format!("cannot read config {}: {e}", path.display()))
            })?;
            PipelineConfig::from_json(&text).map_err(cmds::CliError::from)?
        }
        None => PipelineConfig::default(),
    };
    config = config.with_overrides(&cli.sets)?;
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}
