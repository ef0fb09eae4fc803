use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emg_core::io::write_atomic;
use emg_core::mspca::mspca_denoise_with_report;
use emg_core::nn::{load_model, save_model};
use emg_core::pipeline::{
    evaluate_scaled, features_from_windows, features_unlabelled, fit_model, run_pipeline,
    scale_for, split, PipelineConfig, PipelineInput, CONFUSION_FILE, CURVE_FILE, METRICS_FILE,
    MODEL_FILE,
};
use emg_core::signal::{load_signal, load_windows, save_windows, segment, SignalFormat};
use emg_core::synth::{synth_dataset_windows, synth_generate};
use emg_core::{ClassLabel, Dataset, Error, Result, Window};

#[derive(Parser, Debug)]
#[command(name = "emg", version, about = "EMG window classification pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed; overrides the one in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write seeded synthetic windows to windows.emgwin.
    Synth {
        /// Only this class (name or code); all three otherwise.
        #[arg(long)]
        class: Option<ClassLabel>,
        /// Windows per class; defaults to `per_class` from the config.
        #[arg(long)]
        count: Option<usize>,
    },
    /// MSPCA-denoise a window set into denoised.emgwin.
    Denoise {
        #[arg(long)]
        windows: PathBuf,
    },
    /// Segment signals or read window sets, then write features.csv.
    Extract {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Split a feature CSV into sub_train.csv, validation.csv and test.csv.
    Split {
        #[arg(long)]
        features: PathBuf,
    },
    /// Train on raw feature CSVs; writes the model and learning curve.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        validation: PathBuf,
    },
    /// Score a model on a labelled feature CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Print one predicted label per window or feature row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Raw feature CSV instead of signals or windows.
        #[arg(long, conflicts_with_all = ["signals", "windows"])]
        features: Option<PathBuf>,
    },
    /// End to end: data, denoising, features, split, training, evaluation.
    /// Synthetic data is used when no input is given.
    Run {
        #[command(flatten)]
        input: InputArgs,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Signal files (.csv, or .bin/.f64 raw little-endian f64).
    #[arg(long, num_args = 1.., conflicts_with = "windows")]
    signals: Vec<PathBuf>,
    /// Window set files written by `synth` or `denoise`.
    #[arg(long, num_args = 1..)]
    windows: Vec<PathBuf>,
}

impl InputArgs {
    fn to_input(&self) -> PipelineInput {
        if !self.signals.is_empty() {
            PipelineInput::Signals(self.signals.clone())
        } else if !self.windows.is_empty() {
            PipelineInput::Windows(self.windows.clone())
        } else {
            PipelineInput::Synthetic
        }
    }

    fn load(&self, config: &PipelineConfig) -> Result<Vec<Window>> {
        let mut out = Vec::new();
        for p in &self.signals {
            let signal = load_signal(p, SignalFormat::from_path(p))?;
            out.extend(segment(&signal, config.window_len, config.stride)?);
        }
        for p in &self.windows {
            out.extend(load_windows(p)?);
        }
        if out.is_empty() {
            return Err(Error::EmptyInput("give --signals or --windows".into()));
        }
        Ok(out)
    }
}

fn load_config(global: &Global) -> Result<PipelineConfig> {
    let mut config = match &global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.global)?;
    let out = cli.global.out_dir.as_path();
    create_dir(out)?;

    match cli.command {
        Command::Synth { class, count } => {
            let n = count.unwrap_or(config.per_class);
            let windows = match class {
                Some(c) => synth_generate(c, n, config.seed)?,
                None => synth_dataset_windows(n, config.seed)?,
            };
            let path = out.join("windows.emgwin");
            save_windows(&windows, &path)?;
            println!("wrote {} windows to {}", windows.len(), path.display());
        }
        Command::Denoise { windows } => {
            let input = load_windows(&windows)?;
            let (denoised, report) = mspca_denoise_with_report(&input, &config.mspca)?;
            let path = out.join("denoised.emgwin");
            save_windows(&denoised, &path)?;
            for r in &report {
                println!(
                    "{}: kept {} of {} components",
                    r.band, r.n_retained, r.n_components
                );
            }
            println!("wrote {} windows to {}", denoised.len(), path.display());
        }
        Command::Extract { input } => {
            let ds = features_from_windows(&input.load(&config)?, &config)?;
            let path = out.join("features.csv");
            ds.save_csv(&path)?;
            println!(
                "wrote {}x{} features to {}",
                ds.len(),
                emg_core::N_FEATURES,
                path.display()
            );
        }
        Command::Split { features } => {
            let ds = Dataset::load_csv(&features)?;
            let parts = split(&ds, &config.split)?;
            for (name, part) in [
                ("sub_train.csv", &parts.sub_train),
                ("validation.csv", &parts.validation),
                ("test.csv", &parts.test),
            ] {
                part.save_csv(&out.join(name))?;
                println!("{name}: {} rows", part.len());
            }
        }
        Command::Train { train, validation } => {
            let sub = Dataset::load_csv(&train)?;
            let val = Dataset::load_csv(&validation)?;
            let (network, outcome, _) = fit_model(&sub, &val, &config)?;
            save_model(&network, &out.join(MODEL_FILE))?;
            write_atomic(&out.join(CURVE_FILE), outcome.curve.to_csv().as_bytes())?;
            println!(
                "best validation accuracy {:.4} at epoch {} (iteration {})",
                outcome.best.validation_accuracy, outcome.best.epoch, outcome.best.iteration
            );
        }
        Command::Evaluate { model, test } => {
            let network = load_model(&model)?;
            let eval = evaluate_scaled(&network, &Dataset::load_csv(&test)?)?;
            write_atomic(&out.join(METRICS_FILE), eval.to_json().as_bytes())?;
            write_atomic(
                &out.join(CONFUSION_FILE),
                eval.confusion_matrix.to_csv().as_bytes(),
            )?;
            println!(
                "accuracy {:.4} on {} samples",
                eval.accuracy, eval.n_samples
            );
        }
        Command::Predict {
            model,
            input,
            features,
        } => {
            let network = load_model(&model)?;
            let raw = match features {
                Some(path) => Dataset::load_csv(&path)?,
                None => {
                    let rows = features_unlabelled(
                        &input.load(&config)?,
                        &config.mspca.filter,
                        config.ratio_mode,
                    )?;
                    let n = rows.len();
                    Dataset::new(rows, vec![ClassLabel::Normal; n])?
                }
            };
            for label in emg_core::pipeline::predict(&network, &scale_for(&network, &raw)?)? {
                println!("{label}");
            }
        }
        Command::Run { input } => {
            let summary = run_pipeline(&input.to_input(), &config, out)?;
            println!(
                "windows {}, features {}x{}, split {}/{}/{}",
                summary.n_windows,
                summary.feature_shape.0,
                summary.feature_shape.1,
                summary.split_sizes[0],
                summary.split_sizes[1],
                summary.split_sizes[2]
            );
            println!("test accuracy {:.4}", summary.test.accuracy);
            println!("artifacts in {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
