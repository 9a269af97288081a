use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use proctrack_core::corpus::{load_grids, split_stats};
use proctrack_core::decoder::{load_emissions, save_emissions, RELAX_PENALTY};
use proctrack_core::harness::{
    decode_records, grids_from_tracks, load_decoded, resolve_records, run_pipeline, save_decoded, synth_corpus,
    synth_emissions, tune, BiasKey, GridSpec, OracleConfig,
};
use proctrack_core::qaformat::{export_instances, QaKind};
use proctrack_core::transitions::TransitionModel;
use proctrack_core::{evaluator, Corpus, DecodeConfig, EmissionsF64, Error, Result, StateVocabulary, TransitionModelF64};

#[derive(Parser)]
#[command(name = "proctrack", version, about = "Entity state tracking over procedural text")]
struct Cli {
    /// State vocabulary.
    #[arg(long, global = true, default_value = "propara", value_parser = ["propara", "recipes"])]
    vocab: String,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Procedure count and average steps/entities per corpus file.
    Stats {
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
    },
    /// Export state and location QA instances as JSONL.
    FormatQa {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "state,location")]
        kinds: Vec<String>,
    },
    /// Estimate a transition model from gold grids.
    EstimateTransitions {
        /// Training corpora; counts are pooled.
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Warn about observed transitions seen fewer than this many times.
        #[arg(long, default_value_t = 0)]
        min_count: u64,
    },
    /// Write synthetic emissions for a gold corpus (or for a generated one).
    Synth {
        /// Gold corpus to corrupt. Without it a corpus is generated.
        #[arg(long, conflicts_with = "procedures")]
        corpus: Option<PathBuf>,
        /// Size of the generated corpus.
        #[arg(long, required_unless_present = "corpus")]
        procedures: Option<usize>,
        /// Where to write the generated corpus.
        #[arg(long, requires = "procedures")]
        corpus_out: Option<PathBuf>,
        /// Emission file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Weighted Viterbi decoding of state sequences.
    Decode {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        emissions: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconcile decoded states with location answers into prediction grids.
    Resolve {
        #[arg(long)]
        corpus: PathBuf,
        /// Emission file supplying the location answers.
        #[arg(long)]
        emissions: PathBuf,
        /// Output of `decode`.
        #[arg(long)]
        decoded: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score prediction grids against the corpus gold.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        per_procedure: bool,
    },
    /// Exhaustive grid search over (tau_exp, tau_imp).
    Tune {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        emissions: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Candidate tau_exp values; defaults to the range flags.
        #[arg(long, value_delimiter = ',')]
        tau_exp: Vec<f64>,
        /// Candidate tau_imp values; defaults to the range flags.
        #[arg(long, value_delimiter = ',')]
        tau_imp: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        tau_min: f64,
        #[arg(long, default_value_t = 1.5)]
        tau_max: f64,
        #[arg(long, default_value_t = 0.1)]
        tau_step: f64,
        #[arg(long)]
        relax: bool,
        /// Write the full table as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode, resolve and evaluate in one go.
    Pipeline {
        #[arg(long)]
        corpus: PathBuf,
        /// Emission file; without it emissions are synthesized from the gold.
        #[arg(long)]
        emissions: Option<PathBuf>,
        /// Transition model; alternatively estimate one with --train.
        #[arg(long, required_unless_present = "train", conflicts_with = "train")]
        model: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        decode: DecodeArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        per_procedure: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long, default_value_t = DecodeConfig::DEFAULT_TAU_EXP)]
    tau_exp: f64,
    #[arg(long, default_value_t = DecodeConfig::DEFAULT_TAU_IMP)]
    tau_imp: f64,
    /// Replace impossible transitions with a large finite penalty.
    #[arg(long)]
    relax: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    state_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    location_noise: f64,
    /// Extra state noise, e.g. `implicit=0.3` (keys: explicit, implicit, even, odd).
    #[arg(long, value_delimiter = ',')]
    bias: Vec<String>,
}

impl OracleArgs {
    fn config(&self) -> Result<OracleConfig> {
        let mut c = OracleConfig::new(self.state_noise, self.location_noise, self.seed)?;
        for spec in &self.bias {
            let (key, value) = spec
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bias {spec:?} is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bias {spec:?} has a non-numeric rate")))?;
            c = c.with_bias(BiasKey::parse(key.trim())?, value)?;
        }
        Ok(c)
    }
}

fn decode_config(args: &DecodeArgs) -> Result<DecodeConfig> {
    DecodeConfig::new(args.tau_exp, args.tau_imp)
}

fn load_model(path: &Path, vocab: &StateVocabulary, relax: bool) -> Result<TransitionModelF64> {
    let model = TransitionModel::load(path, vocab)?;
    Ok(if relax { model.relaxed(RELAX_PENALTY) } else { model })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn warn_missing(missing: &[(String, String)]) {
    for (p, e) in missing {
        eprintln!("warning: no emissions for procedure {p}, entity {e}; scored as an empty track");
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs {n}: {e}")))?;
    }
    let vocab = StateVocabulary::builtin(&cli.vocab)?;

    match cli.command {
        Command::Stats { corpus } => {
            println!("file\tprocedures\tavg_steps\tavg_entities");
            for path in corpus {
                let c = Corpus::load(&path, &vocab)?;
                println!("{}\t{}", path.display(), split_stats(&c.procedures));
            }
        }

        Command::FormatQa { corpus, out, kinds } => {
            let kinds: Vec<QaKind> = kinds.iter().map(|k| QaKind::parse(k)).collect::<Result<_>>()?;
            let c = Corpus::load(&corpus, &vocab)?;
            let n = export_instances(&c, &vocab, &kinds, &out)?;
            println!("{n} instances written to {}", out.display());
        }

        Command::EstimateTransitions { corpus, out, min_count } => {
            let mut gold = Vec::new();
            for path in &corpus {
                gold.extend(Corpus::load(path, &vocab)?.gold.into_values());
            }
            let model = TransitionModelF64::estimate_from_grids(&gold, &vocab)?;
            for (p, q, n) in model.rare_transitions(min_count) {
                eprintln!(
                    "warning: transition {} -> {} seen only {n} time(s)",
                    vocab.label(p),
                    vocab.label(q)
                );
            }
            model.save(&out)?;
            println!("{} sequences, model written to {}", model.sequences(), out.display());
        }

        Command::Synth {
            corpus,
            procedures,
            corpus_out,
            out,
            oracle,
        } => {
            let config = oracle.config()?;
            let c = match (corpus, procedures) {
                (Some(path), _) => Corpus::load(&path, &vocab)?,
                (None, Some(n)) => {
                    if vocab.name() != StateVocabulary::PROPARA {
                        return Err(Error::Config("generated corpora use the propara vocabulary".into()));
                    }
                    synth_corpus(n, oracle.seed)?
                }
                (None, None) => unreachable!("clap requires --corpus or --procedures"),
            };
            if let Some(path) = corpus_out {
                c.save(&path, &vocab)?;
                println!("corpus of {} procedures written to {}", c.procedures.len(), path.display());
            }
            if let Some(path) = out {
                save_emissions(&path, &synth_emissions(&c, &vocab, &config)?)?;
                println!("emissions written to {}", path.display());
            }
        }

        Command::Decode {
            corpus,
            emissions,
            model,
            decode,
            out,
        } => {
            let c = Corpus::load(&corpus, &vocab)?;
            let em = load_emissions(&emissions, &c, &vocab)?;
            let m = load_model(&model, &vocab, decode.relax)?;
            let (records, missing) = decode_records(&c, &em, &m, &decode_config(&decode)?)?;
            warn_missing(&missing);
            save_decoded(&out, &records)?;
            println!("{} entities decoded to {}", records.len(), out.display());
        }

        Command::Resolve {
            corpus,
            emissions,
            decoded,
            out,
        } => {
            let c = Corpus::load(&corpus, &vocab)?;
            let em = load_emissions(&emissions, &c, &vocab)?;
            let tracks = resolve_records(&load_decoded(&decoded)?, &c, &em, &vocab)?;
            let repairs: usize = tracks.iter().map(|(_, t)| t.repairs.len()).sum();
            proctrack_core::corpus::save_grids(&out, &grids_from_tracks(&tracks), &vocab)?;
            println!("{} entities resolved ({repairs} location repairs) to {}", tracks.len(), out.display());
        }

        Command::Evaluate {
            corpus,
            predictions,
            out,
            per_procedure,
        } => {
            let c = Corpus::load(&corpus, &vocab)?;
            if c.gold.is_empty() {
                return Err(Error::Validation(format!("{} has no gold grids", corpus.display())));
            }
            let pred = load_grids(&predictions, &c, &vocab)?;
            let mut report = evaluator::evaluate(&c.gold, &pred, &vocab)?;
            if per_procedure {
                report.per_procedure = Some(evaluator::evaluate_per_procedure(&c.gold, &pred, &vocab)?);
            }
            print!("{}", report.to_table());
            if let Some(path) = out {
                write(&path, &report.to_json())?;
            }
        }

        Command::Tune {
            corpus,
            emissions,
            model,
            tau_exp,
            tau_imp,
            tau_min,
            tau_max,
            tau_step,
            relax,
            out,
        } => {
            let c = Corpus::load(&corpus, &vocab)?;
            let em: EmissionsF64 = load_emissions(&emissions, &c, &vocab)?;
            let m = load_model(&model, &vocab, relax)?;
            let range = || GridSpec::range(tau_min, tau_max, tau_step);
            let grid = GridSpec {
                tau_exp: if tau_exp.is_empty() { range()? } else { tau_exp },
                tau_imp: if tau_imp.is_empty() { range()? } else { tau_imp },
            };
            let result = tune(&c, &em, &m, &grid)?;
            println!(
                "best tau_exp={} tau_imp={} objective={:.4} ({} cells)",
                result.best.tau_exp,
                result.best.tau_imp,
                result.best.objective,
                result.table.len()
            );
            if let Some(path) = out {
                write(&path, &result.to_json())?;
            }
        }

        Command::Pipeline {
            corpus,
            emissions,
            model,
            train,
            decode,
            oracle,
            per_procedure,
            out,
        } => {
            let c = Corpus::load(&corpus, &vocab)?;
            let em = match emissions {
                Some(path) => load_emissions(&path, &c, &vocab)?,
                None => synth_emissions(&c, &vocab, &oracle.config()?)?,
            };
            let m = match (model, train) {
                (Some(path), _) => load_model(&path, &vocab, decode.relax)?,
                (None, Some(path)) => {
                    let gold = Corpus::load(&path, &vocab)?.gold;
                    let m = TransitionModelF64::estimate_from_grids(gold.values(), &vocab)?;
                    if decode.relax {
                        m.relaxed(RELAX_PENALTY)
                    } else {
                        m
                    }
                }
                (None, None) => unreachable!("clap requires --model or --train"),
            };
            let output = run_pipeline(&c, &em, &m, &decode_config(&decode)?, per_procedure)?;
            for w in output.warnings() {
                eprintln!("warning: {w}");
            }
            output.write(&out, &vocab)?;
            if let Some(report) = &output.report {
                print!("{}", report.to_table());
            }
            println!("outputs written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
