use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use occkit::harness::{self, Command, RunConfig};
use occkit::maskplan::{DEFAULT_AREA_RATIO, DEFAULT_P_VIEW, DEFAULT_ROW_RATIO, DEFAULT_ROW_RATIO_GRID};
use occkit::metrics2d::{Background, EvalMode, MissingPolicy};
use occkit::metrics3d::voxel::DEFAULT_RESOLUTION;
use occkit::metrics3d::evaluate::DEFAULT_POINTS;
use occkit::occluder::{
    DatasetConfig, FillPolicy, OcclusionBounds, PatternParams, DEFAULT_ALPHA_THRESHOLD, DEFAULT_FILL_RGB,
    DEFAULT_MAX_TRIES,
};
use occkit::poses::ViewSetKind;

#[derive(Parser)]
#[command(name = "occkit", version, about = "Occlusion-robust view synthesis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Base seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses one per core. Never changes outputs.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Clone)]
struct RunDir {
    /// Root under which the run directory is created.
    #[arg(long)]
    out: PathBuf,
    /// Run directory name; defaults to a UTC timestamp.
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args, Clone)]
struct DatasetArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    p_occlude: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    f_min: f64,
    #[arg(long, default_value_t = 0.6)]
    f_max: f64,
    /// `gray`, `source`, or `rgb:r,g,b`.
    #[arg(long, default_value = "gray")]
    fill: String,
    #[arg(long, default_value_t = DEFAULT_MAX_TRIES)]
    max_tries: u32,
    #[arg(long, default_value_t = DEFAULT_ALPHA_THRESHOLD)]
    alpha_threshold: u8,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract occluder silhouettes from RGBA renders.
    BuildLibrary {
        #[arg(long)]
        renders: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA_THRESHOLD)]
        alpha_threshold: u8,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Build a paired clean/occluded training set.
    GenOcclusions {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Build an occluded evaluation split; every reference view is occluded by default.
    MakeOccnvs {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Write a named camera view set.
    GenPoses {
        #[arg(long)]
        set: ViewSetKind,
        #[arg(long, default_value_t = 1.5)]
        radius: f64,
        #[arg(long, default_value_t = 0.0)]
        reference_azimuth: f64,
        /// Also write `<stem>.matrices.json` with 4x4 camera-to-world matrices.
        #[arg(long)]
        matrices: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a masking plan, or a directory of plans with --sweep.
    MaskPlan {
        #[arg(long, default_value_t = 64)]
        b: usize,
        #[arg(long, default_value_t = 6)]
        t: usize,
        #[arg(long, default_value_t = 196)]
        l: usize,
        #[arg(long, default_value_t = DEFAULT_P_VIEW)]
        p_view: f64,
        #[arg(long, default_value_t = DEFAULT_ROW_RATIO)]
        row_ratio: f64,
        #[arg(long, default_value_t = DEFAULT_AREA_RATIO)]
        area_ratio: f64,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
        /// Emit one plan per row ratio into the --out directory.
        #[arg(long)]
        sweep: bool,
        /// Row ratios for --sweep.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted views against ground truth.
    #[command(name = "eval-2d")]
    Eval2d {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value = "nvs")]
        mode: EvalMode,
        #[arg(long, default_value = "white")]
        background: Background,
        #[arg(long, default_value = "skip")]
        on_missing: MissingPolicy,
        /// CSV of externally computed scores to merge by row key.
        #[arg(long)]
        import_scores: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Score predicted meshes against ground truth.
    #[command(name = "eval-3d")]
    Eval3d {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        pre_rotation_deg: f64,
        /// x, y or z.
        #[arg(long, default_value = "z")]
        pre_rotation_axis: String,
        /// Use squared distances in the Chamfer distance.
        #[arg(long)]
        squared: bool,
        #[arg(long, default_value = "default")]
        dataset: String,
        /// Group for predictions not laid out in `ref<N>` subdirectories.
        #[arg(long, default_value_t = 1)]
        n_ref_views: u32,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Recompute aggregates and markdown tables from row CSVs or run directories.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = harness::DEFAULT_REF_VIEWS)]
        ref_views: Vec<u32>,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Run every subcommand twice on generated fixtures and compare outputs.
    Selftest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dir: RunDir,
    },
    /// Re-execute a stored config.json into a new run directory.
    Rerun {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        dir: RunDir,
    },
}

fn parse_fill(s: &str) -> Result<FillPolicy, String> {
    match s {
        "gray" | "grey" => Ok(FillPolicy::SolidColor(DEFAULT_FILL_RGB)),
        "source" => Ok(FillPolicy::SourceTexture),
        _ => s
            .parse::<Background>()
            .map(|b| FillPolicy::SolidColor(b.0))
            .map_err(|_| format!("bad fill {s:?}")),
    }
}

fn dataset_config(d: &DatasetArgs, default_p: f64, default_split: &str) -> Result<DatasetConfig, String> {
    Ok(DatasetConfig {
        p_occlude: d.p_occlude.unwrap_or(default_p),
        bounds: OcclusionBounds {
            f_min: d.f_min,
            f_max: d.f_max,
        },
        pattern: PatternParams::default(),
        fill: parse_fill(&d.fill)?,
        max_tries: d.max_tries,
        alpha_threshold: d.alpha_threshold,
        split: d.split.clone().unwrap_or_else(|| default_split.to_string()),
    })
}

fn parse_axis(s: &str) -> Result<usize, String> {
    match s {
        "x" => Ok(0),
        "y" => Ok(1),
        "z" => Ok(2),
        o => Err(format!("bad axis {o:?}")),
    }
}

enum Plan {
    Run(RunConfig, PathBuf, Option<String>),
    Rerun(PathBuf, RunDir),
}

fn plan(cli: Cli) -> Result<Plan, String> {
    let run = |command, c: Common, d: RunDir| Plan::Run(RunConfig::new(command, c.seed, c.workers), d.out, d.run_name);
    Ok(match cli.command {
        Cmd::BuildLibrary {
            renders,
            alpha_threshold,
            common,
            dir,
        } => run(Command::BuildLibrary { renders, alpha_threshold }, common, dir),
        Cmd::GenOcclusions { data, common, dir } => {
            let dataset = dataset_config(&data, 0.5, "train")?;
            run(
                Command::GenOcclusions {
                    input: data.input,
                    library: data.library,
                    dataset,
                },
                common,
                dir,
            )
        }
        Cmd::MakeOccnvs { data, common, dir } => {
            let dataset = dataset_config(&data, 1.0, "test")?;
            run(
                Command::MakeOccnvs {
                    input: data.input,
                    library: data.library,
                    dataset,
                },
                common,
                dir,
            )
        }
        Cmd::GenPoses {
            set,
            radius,
            reference_azimuth,
            matrices,
            out,
        } => Plan::Run(
            RunConfig::new(
                Command::GenPoses {
                    set,
                    radius,
                    reference_azimuth_deg: reference_azimuth,
                    with_matrices: matrices,
                },
                0,
                1,
            ),
            out,
            None,
        ),
        Cmd::MaskPlan {
            b,
            t,
            l,
            p_view,
            row_ratio,
            area_ratio,
            epoch,
            sweep,
            ratios,
            seed,
            out,
        } => {
            if ratios.is_some() && !sweep {
                return Err("--ratios requires --sweep".into());
            }
            let sweep = sweep.then(|| ratios.unwrap_or_else(|| DEFAULT_ROW_RATIO_GRID.to_vec()));
            Plan::Run(
                RunConfig::new(
                    Command::MaskPlan {
                        b,
                        t,
                        l,
                        p_view,
                        row_ratio,
                        area_ratio,
                        epoch,
                        sweep,
                    },
                    seed,
                    1,
                ),
                out,
                None,
            )
        }
        Cmd::Eval2d {
            pred,
            gt,
            mode,
            background,
            on_missing,
            import_scores,
            common,
            dir,
        } => run(
            Command::Eval2d {
                pred,
                gt,
                mode,
                background,
                on_missing,
                import_scores,
            },
            common,
            dir,
        ),
        Cmd::Eval3d {
            pred,
            gt,
            resolution,
            points,
            pre_rotation_deg,
            pre_rotation_axis,
            squared,
            dataset,
            n_ref_views,
            common,
            dir,
        } => run(
            Command::Eval3d {
                pred,
                gt,
                dataset,
                n_ref_views,
                pre_rotation_deg,
                pre_rotation_axis: parse_axis(&pre_rotation_axis)?,
                points,
                resolution,
                squared,
            },
            common,
            dir,
        ),
        Cmd::Report { inputs, ref_views, dir } => run(
            Command::Report { inputs, ref_views },
            Common { seed: 0, workers: 1 },
            dir,
        ),
        Cmd::Selftest { common, dir } => run(Command::Selftest, common, dir),
        Cmd::Rerun { config, dir } => Plan::Rerun(config, dir),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match plan(cli) {
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Ok(Plan::Run(cfg, out, name)) => harness::execute(&cfg, &out, name.as_deref()),
        Ok(Plan::Rerun(config, dir)) => harness::run::rerun(&config, &dir.out, dir.run_name.as_deref()),
    };
    match outcome {
        Ok(o) => {
            let label = match o.status {
                harness::ExitStatus::Success => "ok",
                harness::ExitStatus::Partial => "partial",
                harness::ExitStatus::Error => "error",
            };
            println!("{label}: {} ({})", o.summary, o.output.display());
            ExitCode::from(o.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
