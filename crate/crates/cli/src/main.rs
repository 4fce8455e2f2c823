//! `casemix`: batch capacity assessments from project files.
//!
//! Exit status: 0 success, 1 error, 2 negative outcome (over-use,
//! infeasible or unbounded model), 64 bad usage, 65 malformed input file.

use std::path::PathBuf;
use std::process::ExitCode;

use casemix_core::domain::{MssTemplate, ProjectBundle};
use casemix_core::fileio::{self, FileError, ParseOptions};
use casemix_core::generate::{generate_instance, Scale};
use casemix_core::models::{TargetFitSpec, TargetOption, Viewpoint, WardOptionPolicy, DEFAULT_SEGMENTS};
use casemix_core::norms::Norm;
use casemix_core::tasks::{run_task, TaskError, TaskKind, TaskRequest};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_ERROR: u8 = 1;
const EXIT_NEGATIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "casemix", version, about = "Hospital case-mix capacity assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static estimate from theatre sessions or from beds alone.
    AssessBasic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Basis::Theatre)]
        by: Basis,
    },
    /// Maximum patient throughput over all resources.
    AssessAdvanced {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ViewpointArg::Whole)]
        viewpoint: ViewpointArg,
        #[arg(long = "ward-options", value_enum, default_value_t = WardArg::All)]
        ward_options: WardArg,
        /// Per-type minimum counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        minimums: Vec<f64>,
        /// Print the hand-check worksheet instead of the report.
        #[arg(long, conflicts_with = "dump_model")]
        worksheet: bool,
        /// Print the generated linear model instead of solving it.
        #[arg(long)]
        dump_model: bool,
    },
    /// Resource use of an allocation.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Allocation file; defaults to the project's.
        #[arg(long)]
        alloc: Option<PathBuf>,
    },
    /// Whether targets and/or an allocation fit the hospital.
    Feasibility {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long)]
        alloc: Option<PathBuf>,
    },
    /// Closest achievable cohort to the targets.
    BestFit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OptionArg::To1)]
        option: OptionArg,
        #[arg(long, value_enum, default_value_t = NormArg::One)]
        norm: NormArg,
        #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
        segments: usize,
        /// Per-type weights, comma separated.
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        #[arg(long)]
        relative: bool,
        /// When every target is met, push throughput above them.
        #[arg(long)]
        post_optimize: bool,
        #[arg(long = "ward-options", value_enum, default_value_t = WardArg::All)]
        ward_options: WardArg,
    },
    /// Load a project and report its size.
    Validate {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        lenient: bool,
    },
    /// Write a seeded synthetic project.
    Generate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ScaleArg::Small)]
        scale: ScaleArg,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    project: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    lenient: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    weeks: u32,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long = "sessions-per-day")]
    sessions_per_day: Option<u32>,
    /// Hours per theatre session.
    #[arg(long = "session-hours")]
    session_hours: Option<f64>,
    /// Theatres in use; defaults to the configured count.
    #[arg(long)]
    theatres: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Theatre,
    Beds,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewpointArg {
    Whole,
    Partition,
}

#[derive(Clone, Copy, ValueEnum)]
enum WardArg {
    All,
    First,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptionArg {
    To1,
    To2,
    To3,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    #[value(alias = "1")]
    One,
    #[value(alias = "2")]
    Two,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Small,
    Large,
}

impl From<WardArg> for WardOptionPolicy {
    fn from(w: WardArg) -> Self {
        match w {
            WardArg::All => WardOptionPolicy::All,
            WardArg::First => WardOptionPolicy::FirstOnly,
        }
    }
}

enum Failure {
    File(FileError),
    Task(TaskError),
    Other(String),
}

impl Failure {
    fn exit(&self) -> u8 {
        match self {
            Failure::File(FileError::Parse(_)) => EXIT_DATA,
            Failure::Task(t) if t.is_infeasible_outcome() => EXIT_NEGATIVE,
            _ => EXIT_ERROR,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::File(e) => e.to_string(),
            Failure::Task(e) => e.to_string(),
            Failure::Other(s) => s.clone(),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::File(e)
    }
}

impl From<TaskError> for Failure {
    fn from(e: TaskError) -> Self {
        Failure::Task(e)
    }
}

fn opts(lenient: bool) -> ParseOptions {
    ParseOptions { lenient }
}

impl Common {
    fn load(&self) -> Result<ProjectBundle, Failure> {
        Ok(fileio::load_project(&self.project, opts(self.lenient))?)
    }

    fn request(&self, bundle: &ProjectBundle, kind: TaskKind) -> TaskRequest {
        let mut mss = MssTemplate::standard(&bundle.config, self.weeks);
        if let Some(d) = self.days {
            mss.days_per_week = d;
        }
        if let Some(s) = self.sessions_per_day {
            mss.sessions_per_day = s;
        }
        if let Some(h) = self.session_hours {
            mss.session_hours = h;
        }
        if let Some(t) = self.theatres {
            mss.theatres = t;
        }
        TaskRequest {
            mss: Some(mss),
            ..TaskRequest::new(kind)
        }
    }
}

/// Output text and exit status.
fn run(cli: Cli) -> Result<(String, u8), Failure> {
    let (common, bundle, req) = match cli.command {
        Command::Validate { project, lenient } => {
            let b = fileio::load_project(&project, opts(lenient))?;
            if let Err(e) = b.validate() {
                return Err(Failure::Other(e.to_string()));
            }
            return Ok((
                format!(
                    "OK: {} types, {} sub-types, {} wards\n",
                    b.catalog.type_count(),
                    b.catalog.sub_type_count(),
                    b.config.wards.len()
                ),
                0,
            ));
        }
        Command::Generate { seed, scale, out } => {
            let scale = match scale {
                ScaleArg::Small => Scale::small(),
                ScaleArg::Large => Scale::large(),
            };
            let b = generate_instance(seed, &scale).map_err(|e| Failure::Other(e.to_string()))?;
            let path = fileio::save_project(&b, &out)?;
            return Ok((format!("{}\n", path.display()), 0));
        }
        Command::AssessBasic { common, by } => {
            let b = common.load()?;
            let kind = match by {
                Basis::Theatre => TaskKind::BasicTheatre,
                Basis::Beds => TaskKind::BasicBeds,
            };
            let req = common.request(&b, kind);
            (common, b, req)
        }
        Command::AssessAdvanced {
            common,
            viewpoint,
            ward_options,
            minimums,
            worksheet,
            dump_model,
        } => {
            let b = common.load()?;
            let mut req = common.request(&b, TaskKind::Advanced);
            req.viewpoint = Some(match viewpoint {
                ViewpointArg::Whole => Viewpoint::WholeCohort,
                ViewpointArg::Partition => Viewpoint::SessionPartition,
            });
            req.ward_options = Some(ward_options.into());
            req.minimums = (!minimums.is_empty()).then_some(minimums);
            if worksheet || dump_model {
                return advanced_debug(&b, &req, worksheet);
            }
            (common, b, req)
        }
        Command::Evaluate { common, alloc } => {
            let b = common.load()?;
            let mut req = common.request(&b, TaskKind::EvaluateAllocation);
            if let Some(p) = alloc {
                req.allocation = Some(fileio::load_allocation(p, &b.catalog, opts(common.lenient))?);
            }
            (common, b, req)
        }
        Command::Feasibility { common, targets, alloc } => {
            let b = common.load()?;
            let mut req = common.request(&b, TaskKind::Feasibility);
            if let Some(p) = targets {
                req.targets = Some(fileio::load_targets(p, &b.catalog, opts(common.lenient))?);
            }
            if let Some(p) = alloc {
                req.allocation = Some(fileio::load_allocation(p, &b.catalog, opts(common.lenient))?);
            }
            (common, b, req)
        }
        Command::BestFit {
            common,
            targets,
            option,
            norm,
            segments,
            weights,
            relative,
            post_optimize,
            ward_options,
        } => {
            let b = common.load()?;
            let mut req = common.request(&b, TaskKind::BestFit);
            if let Some(p) = targets {
                req.targets = Some(fileio::load_targets(p, &b.catalog, opts(common.lenient))?);
            }
            req.fit = Some(TargetFitSpec {
                option: match option {
                    OptionArg::To1 => TargetOption::Types,
                    OptionArg::To2 => TargetOption::SubTypes,
                    OptionArg::To3 => TargetOption::Both,
                },
                norm: match norm {
                    NormArg::One => Norm::One,
                    NormArg::Two => Norm::Two,
                },
                weights,
                segments,
                relative,
                post_optimize_throughput: post_optimize,
                ward_options: ward_options.into(),
            });
            (common, b, req)
        }
    };
    let result = run_task(&bundle, &req)?;
    let text = match common.format {
        Format::Text => result.to_text(&bundle),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&result).map_err(|e| Failure::Other(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => result.to_csv(&bundle),
    };
    Ok((text, if result.is_negative() { EXIT_NEGATIVE } else { 0 }))
}

fn advanced_debug(b: &ProjectBundle, req: &TaskRequest, worksheet: bool) -> Result<(String, u8), Failure> {
    use casemix_core::models::{assess_capacity, build_advanced_model, AssessmentSpec, ModelsError};
    let spec = AssessmentSpec {
        viewpoint: req.viewpoint.unwrap_or_default(),
        ward_options: req.ward_options.unwrap_or_default(),
        mss: req.mss.clone().expect("set by request()"),
        mix: b
            .mix
            .clone()
            .ok_or_else(|| Failure::Other("project has no mix".into()))?,
        minimums: req.minimums.clone().unwrap_or_default(),
    };
    let task = |e: ModelsError| Failure::Task(TaskError::Models(e));
    if worksheet {
        let a = assess_capacity(b, &spec).map_err(task)?;
        Ok((casemix_core::report::worksheet(b, &spec, &a), 0))
    } else {
        let cm = build_advanced_model(b, &spec).map_err(task)?;
        Ok((cm.model.to_string(), 0))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit())
        }
    }
}
