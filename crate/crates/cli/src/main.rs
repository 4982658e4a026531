//! Command-line front end for the fgpd detector.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fgpd::classifier::FeatureMask;
use fgpd::evaluation::metrics_report;
use fgpd::pipeline::{
    ablation, evaluate_dataset, extract_manifest, inspect_dataset, predict_paths,
    train_pipeline, write_feature_table, write_predictions, write_raw_table, DatasetManifest, Failure,
    ModelBundle, PipelineConfig,
};
use fgpd::synth::{generate_corpus, SynthConfig};

#[derive(Parser)]
#[command(name = "fgpd", version, about = "Frequency-domain fake painting detector")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with pipeline settings; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fgpd-out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print debug logging.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a feature table for a manifest.
    Extract {
        manifest: PathBuf,
        /// Encode descriptors with this bundle's mixture and write full rows.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train a detector and write `model.json`.
    Train { manifest: PathBuf },
    /// Score images with a trained bundle.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Image files, or a manifest with --manifest.
        paths: Vec<PathBuf>,
        #[arg(long, conflicts_with = "paths")]
        manifest: Option<PathBuf>,
    },
    /// Report accuracy, F1, confusion matrix and ROC on a labelled manifest.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        manifest: PathBuf,
    },
    /// Train and test every feature subset.
    Ablation { train: PathBuf, test: PathBuf },
    /// Averaged spectra, diagonal profiles and blob tables per class.
    Inspect { manifest: PathBuf },
    /// Generate a labelled synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 400)]
        train: usize,
        #[arg(long, default_value_t = 200)]
        test: usize,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn report_failures(failures: &[Failure], out: &Path) -> Result<usize> {
    if failures.is_empty() {
        return Ok(0);
    }
    let path = out.join("failures.csv");
    let mut w = create(&path)?;
    writeln!(w, "path,reason")?;
    for f in failures {
        eprintln!("failed: {}: {}", f.path.display(), f.reason);
        writeln!(w, "{},\"{}\"", f.path.display(), f.reason.replace('"', "'"))?;
    }
    w.flush()?;
    eprintln!("{} image(s) failed; see {}", failures.len(), path.display());
    Ok(failures.len())
}

fn run(cli: Cli) -> Result<usize> {
    let common = &cli.common;
    let out = &common.out;
    match cli.command {
        Command::Extract { manifest, model } => {
            let m = DatasetManifest::load(&manifest)?;
            let (cfg, gmm) = match model {
                Some(p) => {
                    let b = ModelBundle::load(&p)?;
                    let g = b.gmm.clone().context("bundle has no descriptor mixture")?;
                    (b.config, Some(g))
                }
                None => (load_config(common)?, None),
            };
            let ex = extract_manifest(&m, &cfg)?;
            let dest = out.join("features.csv");
            let mut w = create(&dest)?;
            match &gmm {
                Some(g) => write_feature_table(&ex.rows, g, &mut w)?,
                None => write_raw_table(&ex.rows, &mut w)?,
            }
            w.flush()?;
            println!("wrote {} rows to {}", ex.rows.len(), dest.display());
            report_failures(&ex.failures, out)
        }
        Command::Train { manifest } => {
            let cfg = load_config(common)?;
            let m = DatasetManifest::load(&manifest)?;
            let outcome = train_pipeline(&m, &cfg)?;
            let dest = out.join("model.json");
            outcome.bundle.save(&dest)?;
            let s = &outcome.bundle.summary;
            println!(
                "real={} fake={} c={} gamma={} cv_accuracy={}",
                s.real_count, s.fake_count, s.selected.c, s.selected.gamma, s.selected.cv_accuracy
            );
            println!("wrote {}", dest.display());
            report_failures(&outcome.failures, out)
        }
        Command::Predict { model, paths, manifest } => {
            let bundle = ModelBundle::load(&model)?;
            let paths = match manifest {
                Some(m) => DatasetManifest::load(&m)?.paths().map(Path::to_path_buf).collect(),
                None => paths,
            };
            if paths.is_empty() {
                bail!("no images given");
            }
            let (preds, failures) = predict_paths(&bundle, &paths)?;
            let dest = out.join("predictions.csv");
            let mut w = create(&dest)?;
            write_predictions(&preds, &mut w)?;
            w.flush()?;
            println!("wrote {} predictions to {}", preds.len(), dest.display());
            report_failures(&failures, out)
        }
        Command::Evaluate { model, manifest } => {
            let bundle = ModelBundle::load(&model)?;
            let m = DatasetManifest::load(&manifest)?;
            let eval = evaluate_dataset(&bundle, &m)?;
            let report = metrics_report(&eval.confusion, eval.auc());
            let mut w = create(&out.join("metrics.txt"))?;
            w.write_all(report.as_bytes())?;
            w.flush()?;
            if let Some(r) = &eval.roc {
                let mut w = create(&out.join("roc.csv"))?;
                r.write_csv(&mut w)?;
                w.flush()?;
            }
            if !eval.leaked.is_empty() {
                println!("warning: {} test images were used for training", eval.leaked.len());
            }
            print!("{report}");
            report_failures(&eval.failures, out)
        }
        Command::Ablation { train, test } => {
            let cfg = load_config(common)?;
            let tr = DatasetManifest::load(&train)?;
            let te = DatasetManifest::load(&test)?;
            let rep = ablation(&tr, &te, &cfg)?;
            let table = rep.table();
            let mut w = create(&out.join("ablation.txt"))?;
            w.write_all(table.as_bytes())?;
            w.flush()?;
            let mut w = create(&out.join("ablation.csv"))?;
            rep.write_csv(&mut w)?;
            w.flush()?;
            if !rep.leaked.is_empty() {
                println!("warning: {} paths appear in both manifests", rep.leaked.len());
            }
            print!("{table}");
            if let Some(full) = rep.row(FeatureMask::ALL) {
                println!("full feature accuracy={}", full.accuracy);
            }
            report_failures(&rep.failures, out)
        }
        Command::Inspect { manifest } => {
            let cfg = load_config(common)?;
            let m = DatasetManifest::load(&manifest)?;
            let res = inspect_dataset(&m, &cfg, out)?;
            println!("wrote {} files under {}", res.written.len(), out.display());
            Ok(0)
        }
        Command::Synth { train, test } => {
            let seed = common.seed.unwrap_or(0);
            let corpus = generate_corpus(out, train, test, seed, &SynthConfig::default())?;
            println!("wrote {}", corpus.train_manifest.display());
            println!("wrote {}", corpus.test_manifest.display());
            Ok(0)
        }
        Command::Config => {
            print!("{}", load_config(common)?.to_toml_string());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
