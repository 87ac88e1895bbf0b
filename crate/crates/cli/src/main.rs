//! crossfeat: train and apply boosted cross-image classifiers to decide
//! whether two grayscale images depict the same identity.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use crossfeat::{
    adaboost_train_with_log, error_rates_at, kfold_evaluate, load_dataset, pair_features, roc,
    FeatureBank, GrayImage, PairIntegrals, PairLabel, PairManifest, StrongClassifier,
};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "crossfeat",
    version,
    about = "Pair verification with boosted cross-image rectangle features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a boosted classifier from a labeled pair manifest.
    Train {
        /// Pair manifest: path1<TAB>path2<TAB>{1|0} per line.
        #[arg(long)]
        pairs: PathBuf,
        /// Output model path; a `<out>.config` sidecar records the run.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Boosting rounds (required here or in the config file).
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 = auto.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score a manifest with a trained model and report ROC/EER metrics.
    Eval {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the ROC CSV (threshold,far,frr,tpr).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// k-fold cross validation: train on k-1 folds, score the held-out one.
    Kfold {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Assign whole identities (parent directories) to folds and drop
        /// cross-fold negative pairs.
        #[arg(long)]
        identity_disjoint: bool,
    },
    /// Score one image pair and print the margin and decision.
    Predict {
        img1: PathBuf,
        img2: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump the feature vectors of a manifest as CSV.
    Extract {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Dump the feature bank descriptor list (`id kind x y w h` lines).
    Bank {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time integral-image extraction against the naive per-pixel path.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Random pairs to measure.
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            pairs,
            out,
            config,
            rounds,
            seed,
            threads,
        } => {
            let mut config = resolve_config(config.as_deref())?;
            if rounds.is_some() {
                config.rounds = rounds;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(threads) = threads {
                config.threads = threads;
            }
            init_threads(config.threads)?;
            cmd_train(&pairs, &config, &out)
        }
        Command::Eval {
            pairs,
            model,
            config,
            out,
            threads,
        } => {
            let config = model_config(config.as_deref(), &model)?;
            init_threads(threads.unwrap_or(config.threads))?;
            cmd_eval(&pairs, &model, &config, out.as_deref())
        }
        Command::Kfold {
            pairs,
            k,
            config,
            rounds,
            seed,
            threads,
            identity_disjoint,
        } => {
            let mut config = resolve_config(config.as_deref())?;
            if rounds.is_some() {
                config.rounds = rounds;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(threads) = threads {
                config.threads = threads;
            }
            init_threads(config.threads)?;
            cmd_kfold(&pairs, k, &config, identity_disjoint)
        }
        Command::Predict {
            img1,
            img2,
            model,
            config,
        } => {
            let config = model_config(config.as_deref(), &model)?;
            cmd_predict(&img1, &img2, &model, &config)
        }
        Command::Extract {
            pairs,
            config,
            out,
            threads,
        } => {
            let config = resolve_config(config.as_deref())?;
            init_threads(threads.unwrap_or(config.threads))?;
            cmd_extract(&pairs, &config, out.as_deref())
        }
        Command::Bank { config, out } => {
            let config = resolve_config(config.as_deref())?;
            cmd_bank(&config, out.as_deref())
        }
        Command::Bench {
            config,
            trials,
            seed,
        } => {
            let config = resolve_config(config.as_deref())?;
            cmd_bench(&config, trials, seed.unwrap_or(config.seed))
        }
    }
}

fn resolve_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Config for commands that apply an existing model: an explicit --config
/// wins, otherwise the model's sidecar.
fn model_config(explicit: Option<&Path>, model: &Path) -> Result<RunConfig> {
    if let Some(p) = explicit {
        return RunConfig::load(p);
    }
    let sidecar = sidecar_path(model);
    if sidecar.exists() {
        RunConfig::load(&sidecar)
    } else {
        Ok(RunConfig::default())
    }
}

fn sidecar_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".config");
    model.with_file_name(name)
}

fn init_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("thread pool already configured")?;
    }
    Ok(())
}

fn build_bank(config: &RunConfig) -> Result<FeatureBank> {
    FeatureBank::generate(config.window_w, config.window_h, config.quantization())
        .context("cannot generate feature bank")
}

/// Verifies the model was trained against the active bank.
fn check_fingerprint(model: &StrongClassifier, bank: &FeatureBank) -> Result<()> {
    model
        .check_bank(bank)
        .context("model/bank fingerprint mismatch; pass the config the model was trained with")
}

fn cmd_train(pairs: &Path, config: &RunConfig, out: &Path) -> Result<()> {
    let train_config = config.train_config()?;
    let manifest = PairManifest::load(pairs)?;
    let bank = build_bank(config)?;
    eprintln!(
        "training: {} pairs, bank {} features, {} rounds, seed {}",
        manifest.entries.len(),
        bank.len(),
        train_config.rounds,
        train_config.seed
    );
    let dataset = load_dataset(&manifest.entries, &bank)?;
    let started = Instant::now();
    let (model, log) = adaboost_train_with_log(&dataset, &bank, train_config.rounds)?;
    for (round, r) in log.rounds.iter().enumerate() {
        let d = bank.descriptor(r.feature_id as usize).expect("bank id");
        eprintln!(
            "round {:>3}: feature {:>6} {:<6} rect ({},{}) {}x{}  eps {:.6}  alpha {:.4}",
            round + 1,
            r.feature_id,
            d.kind.token(),
            d.frame.x,
            d.frame.y,
            d.frame.w,
            d.frame.h,
            r.epsilon,
            r.alpha
        );
    }
    eprintln!(
        "trained in {:.2?}; bound {:.3e}, training error {:.4}",
        started.elapsed(),
        log.final_bound(),
        log.final_training_error()
    );
    model.save(out)?;
    config.save(&sidecar_path(out))?;
    eprintln!("model written to {}", out.display());
    Ok(())
}

fn score_manifest(
    pairs: &Path,
    model: &StrongClassifier,
    bank: &FeatureBank,
) -> Result<Vec<(f64, PairLabel)>> {
    let manifest = PairManifest::load(pairs)?;
    let dataset = load_dataset(&manifest.entries, bank)?;
    dataset
        .iter()
        .map(|s| Ok((model.score(&s.features)?, s.label)))
        .collect()
}

fn cmd_eval(pairs: &Path, model_path: &Path, config: &RunConfig, out: Option<&Path>) -> Result<()> {
    let model = StrongClassifier::load(model_path)?;
    let bank = build_bank(config)?;
    check_fingerprint(&model, &bank)?;
    let scores = score_manifest(pairs, &model, &bank)?;
    let curve = roc(&scores)?;
    if let Some(out) = out {
        fs::write(out, curve.to_csv())
            .with_context(|| format!("cannot write {}", out.display()))?;
        eprintln!("roc csv written to {}", out.display());
    }
    let positives = scores.iter().filter(|(_, l)| *l == PairLabel::Same).count();
    let (far, frr) = error_rates_at(&scores, model.decision_threshold());
    println!("pairs={} positives={} negatives={}", scores.len(), positives, scores.len() - positives);
    println!(
        "eer={:.4} accuracy_at_eer={:.4} eer_threshold={:.6}",
        curve.eer, curve.accuracy_at_eer, curve.eer_threshold
    );
    println!(
        "far_at_decision_threshold={:.4} frr_at_decision_threshold={:.4}",
        far, frr
    );
    Ok(())
}

fn cmd_kfold(pairs: &Path, k: usize, config: &RunConfig, identity_disjoint: bool) -> Result<()> {
    let train_config = config.train_config()?;
    let manifest = PairManifest::load(pairs)?;
    let report = kfold_evaluate(&manifest, k, &train_config, identity_disjoint)?;
    for fold in &report.folds {
        println!(
            "fold={} n_train={} n_test={} eer_insample={:.4} accuracy_insample={:.4} eer_heldout={:.4} accuracy_heldout={:.4}",
            fold.fold,
            fold.n_train,
            fold.n_test,
            fold.roc.eer,
            fold.roc.accuracy_at_eer,
            fold.eer_heldout,
            fold.accuracy_heldout
        );
    }
    println!(
        "mean_accuracy_at_eer={:.4} std_accuracy_at_eer={:.4}",
        report.mean_accuracy_at_eer, report.std_accuracy_at_eer
    );
    println!(
        "mean_accuracy_heldout={:.4} std_accuracy_heldout={:.4}",
        report.mean_accuracy_heldout, report.std_accuracy_heldout
    );
    println!("dropped={}", report.dropped);
    Ok(())
}

fn cmd_predict(img1: &Path, img2: &Path, model_path: &Path, config: &RunConfig) -> Result<()> {
    let model = StrongClassifier::load(model_path)?;
    let bank = build_bank(config)?;
    check_fingerprint(&model, &bank)?;
    let load = |p: &Path| -> Result<GrayImage> {
        Ok(crossfeat::load_image(p)?.resize_bilinear(config.window_w, config.window_h)?)
    };
    let features = pair_features(&load(img1)?, &load(img2)?, &bank)?;
    let margin = model.score(&features)?;
    let decision = if margin >= model.decision_threshold() {
        "same"
    } else {
        "different"
    };
    println!("margin={margin} decision={decision}");
    Ok(())
}

fn cmd_extract(pairs: &Path, config: &RunConfig, out: Option<&Path>) -> Result<()> {
    let manifest = PairManifest::load(pairs)?;
    let bank = build_bank(config)?;
    let dataset = load_dataset(&manifest.entries, &bank)?;
    let mut csv = String::from("label");
    for i in 0..bank.len() {
        csv.push_str(&format!(",f{i}"));
    }
    csv.push('\n');
    for sample in &dataset {
        csv.push_str(if sample.label == PairLabel::Same { "1" } else { "0" });
        for v in &sample.features {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    write_or_print(out, &csv)
}

fn cmd_bank(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    let bank = build_bank(config)?;
    eprintln!("bank: {} descriptors, fingerprint {}", bank.len(), bank.fingerprint());
    write_or_print(out, &bank.export_text())
}

fn write_or_print(out: Option<&Path>, data: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, data)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

/// Deterministic xorshift pixels; no rand dependency needed for a bench.
fn random_image(state: &mut u64, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    })
}

fn cmd_bench(config: &RunConfig, trials: usize, seed: u64) -> Result<()> {
    if trials == 0 {
        bail!("trials must be at least 1");
    }
    let bank = build_bank(config)?;
    let mut state = seed | 1;
    let mut fast_total = 0.0f64;
    let mut naive_total = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut worst_rel = 0.0f64;
    for _ in 0..trials {
        let img1 = random_image(&mut state, config.window_w, config.window_h);
        let img2 = random_image(&mut state, config.window_w, config.window_h);

        let started = Instant::now();
        let pi = PairIntegrals::new(&img1, &img2)?;
        let fast = bank.extract(&pi)?;
        fast_total += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let naive = crossfeat::naive::extract_all(&img1, &img2, bank.descriptors())?;
        naive_total += started.elapsed().as_secs_f64();

        for (d, (&a, &b)) in bank.descriptors().iter().zip(fast.iter().zip(&naive)) {
            if d.kind.is_haar() {
                let err = (a - b).abs();
                worst_abs = worst_abs.max(err);
                if err > 1e-6 {
                    bail!("haar disagreement at feature {}: fast {a} vs naive {b}", d.id);
                }
            } else if b == 0.0 {
                if a != 0.0 {
                    bail!("ncc degenerate disagreement at feature {}: fast {a}", d.id);
                }
            } else {
                let err = (a - b).abs() / b.abs().max(1.0);
                worst_rel = worst_rel.max(err);
                if err > 1e-9 {
                    bail!("ncc disagreement at feature {}: fast {a} vs naive {b}", d.id);
                }
            }
        }
    }
    let fast_us = fast_total / trials as f64 * 1e6;
    let naive_us = naive_total / trials as f64 * 1e6;
    println!("bank_size={}", bank.len());
    println!("trials={trials}");
    println!("fast_per_pair_us={fast_us:.1}");
    println!("naive_per_pair_us={naive_us:.1}");
    println!("speedup={:.2}", naive_us / fast_us);
    println!("worst_haar_abs_err={worst_abs:.3e}");
    println!("worst_ncc_rel_err={worst_rel:.3e}");
    println!("agreement=ok");
    Ok(())
}
