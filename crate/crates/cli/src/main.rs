use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crackprobe::reconstruction::Method;
use crackprobe_cli::{
    cmd_compare, cmd_eval, cmd_gen_scene, cmd_plan, cmd_reconstruct, cmd_run, cmd_segment, cmd_skeleton, cmd_touch,
    resolve_config, Overrides, PipelineConfig,
};

#[derive(Parser)]
#[command(
    name = "crackprobe",
    version,
    about = "Vision-guided tactile crack inspection simulator"
)]
struct Cli {
    /// JSON configuration file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scene with its renders and ground-truth mask.
    GenScene,
    /// Segment the overhead image.
    Segment {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Thin the vision mask and extract the skeleton graph.
    Skeleton,
    /// Plan guided and passive contacts.
    Plan,
    /// Press the guided plan and reject false edges.
    Touch,
    /// Build the vision, aligned, passive and active reconstructions.
    Reconstruct,
    /// Score a profile CSV against a scene.
    Eval {
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Benchmark all methods over several seeds.
    Compare,
    /// Run every stage for one seed.
    Run,
    /// Print the effective configuration.
    Config,
}

fn print_report(report: &crackprobe::evaluation::BenchmarkReport) {
    print!("{}", report.to_csv());
}

fn execute(cli: Cli) -> Result<()> {
    let cfg: PipelineConfig = resolve_config(cli.config.as_deref(), &cli.overrides)?;
    let layout = cfg.layout();
    match cli.command {
        Command::GenScene => {
            let scene = cmd_gen_scene(&cfg)?;
            eprintln!(
                "scene {}: {} real, {} painted -> {}",
                cfg.seed,
                scene.real_cracks().count(),
                scene.cracks.len() - scene.real_cracks().count(),
                layout.scenes().display()
            );
        }
        Command::Segment { input } => {
            let mask = cmd_segment(&cfg, input.as_deref())?;
            eprintln!("{} crack pixels -> {}", mask.count(), layout.vision_mask().display());
        }
        Command::Skeleton => {
            let g = cmd_skeleton(&cfg)?;
            eprintln!(
                "{} edges, {} end points, {} junctions -> {}",
                g.edges.len(),
                g.end_points.len(),
                g.junctions.len(),
                layout.graph_json().display()
            );
        }
        Command::Plan => {
            let (plan, passive) = cmd_plan(&cfg)?;
            eprintln!("{} guided, {} passive contacts", plan.len(), passive.len());
        }
        Command::Touch => {
            let (frames, rejected) = cmd_touch(&cfg)?;
            eprintln!("{} frames, rejected edges {:?}", frames.len(), rejected);
        }
        Command::Reconstruct => {
            for p in cmd_reconstruct(&cfg)? {
                eprintln!("{}: {} points", p.method, p.len());
            }
        }
        Command::Eval {
            profiles,
            scene,
            output,
        } => {
            let profiles = profiles.unwrap_or_else(|| layout.profiles_csv());
            let scene = scene.unwrap_or_else(|| layout.scene_json());
            print_report(&cmd_eval(&cfg, &profiles, &scene, output.as_deref())?);
        }
        Command::Compare => {
            let report = cmd_compare(&cfg)?;
            print!("{}", report.summary_csv());
            for m in Method::ALL {
                let s = report.summary(m);
                if s.n_scored == 0 {
                    eprintln!("warning: {m} produced no scored reconstruction");
                }
            }
        }
        Command::Run => print_report(&cmd_run(&cfg)?),
        Command::Config => println!("{}", serde_json::to_string_pretty(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
