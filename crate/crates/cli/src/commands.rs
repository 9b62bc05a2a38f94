//! The four subcommands: generate, run, inspect, eval.

use crate::config::{Config, GenerateMode};
use anyhow::{anyhow, bail, Context, Result};
use elstm_core::encode::{build_dataset_with_sources, encode_kb, DatasetTensors, PreparedSample};
use elstm_core::eval::{best_match_score, run_sweep, EvalReport, Metric};
use elstm_core::kb::{parse_axiom, parse_kb, render_kb, Axiom, KnowledgeBase};
use elstm_core::nnet::{cross_validate, Architecture, Model, ModelSpec, TrainConfig};
use elstm_core::ontosample::{load_ontology, sample_connected};
use elstm_core::reasoner::{completion_set, saturate};
use elstm_core::supports::{extract_supports, step_support_union};
use elstm_core::syngen::generate_batch;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Scalar type the pipeline trains in.
type Train = f32;

pub fn cmd_generate(cfg: &Config, out: &Path) -> Result<()> {
    let kb_dir = out.join("kbs");
    fs::create_dir_all(&kb_dir).with_context(|| format!("creating {}", kb_dir.display()))?;

    let kbs: Vec<(KnowledgeBase, u64)> = match &cfg.mode {
        GenerateMode::Synthetic => {
            let batch = generate_batch(&cfg.gen, cfg.count).map_err(|e| anyhow!(e))?;
            batch.into_iter().enumerate().map(|(i, kb)| (kb, cfg.gen.seed + i as u64)).collect()
        }
        GenerateMode::Ontology { input, size, min_steps, retry_bound } => {
            let report = load_ontology(Path::new(input)).map_err(|e| anyhow!(e))?;
            if report.skipped > 0 {
                eprintln!("skipped {} non-EL+ axioms while loading {input}", report.skipped);
            }
            (0..cfg.count)
                .map(|i| {
                    let seed = cfg.gen.seed + i as u64;
                    let sample = sample_connected(&report.kb, *size, *min_steps, seed, *retry_bound)
                        .map_err(|e| anyhow!(e))?;
                    Ok((sample.kb, seed))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut manifest = String::from("file\tseed\taxioms\ttrace_len\n");
    for (i, (kb, seed)) in kbs.iter().enumerate() {
        let name = format!("kb_{i:04}.kb");
        fs::write(kb_dir.join(&name), render_kb(kb))?;
        let trace_len = saturate(kb).len();
        let _ = writeln!(manifest, "{name}\t{seed}\t{}\t{trace_len}", kb.len());
    }
    fs::write(kb_dir.join("manifest.tsv"), manifest)?;
    println!("wrote {} KB files to {}", kbs.len(), kb_dir.display());
    Ok(())
}

fn load_kb_files(kb_dir: &Path) -> Result<Vec<(String, KnowledgeBase)>> {
    let mut names: Vec<String> = fs::read_dir(kb_dir)
        .with_context(|| format!("reading {}", kb_dir.display()))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".kb"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("no .kb files in {} (run `generate` first)", kb_dir.display());
    }
    names
        .into_iter()
        .map(|name| {
            let text = fs::read_to_string(kb_dir.join(&name))?;
            let (kb, warnings) = parse_kb(&text).map_err(|e| anyhow!("{name}: {e}"))?;
            for w in warnings {
                eprintln!("{name}: {w}");
            }
            Ok((name, kb))
        })
        .collect()
}

pub fn cmd_run(cfg: &Config, out: &Path) -> Result<()> {
    let kb_dir = out.join("kbs");
    let run_dir = out.join(format!("run-{}", cfg.hash()));
    fs::create_dir_all(run_dir.join("checkpoints"))?;
    fs::create_dir_all(run_dir.join("curves"))?;
    fs::create_dir_all(run_dir.join("plots"))?;

    // Stage: saturate + supports.
    let named = load_kb_files(&kb_dir).context("stage load-kbs")?;
    let prepared: Vec<PreparedSample> = named
        .par_iter()
        .map(|(name, kb)| PreparedSample::prepare(kb).map_err(|e| anyhow!("{name}: {e}")))
        .collect::<Result<_>>()
        .context("stage saturate-supports")?;

    // Stage: dataset assembly.
    let sources: Vec<String> = named.iter().map(|(name, _)| name.clone()).collect();
    let tensors: DatasetTensors<Train> =
        build_dataset_with_sources(&prepared, Some(&sources)).context("stage build-dataset")?;
    tensors.save(&run_dir.join("dataset.txt")).context("stage build-dataset")?;
    fs::write(run_dir.join("dataset.sidecar.tsv"), tensors.sidecar())?;
    let dims = tensors.dims();
    println!(
        "dataset: {} samples, {} steps, kb_width {}, support_width {}, out_width {}",
        dims.samples, dims.steps, dims.kb_width, dims.support_width, dims.out_width
    );

    let mut summary = String::new();
    let _ = writeln!(summary, "elstm {} run {}", env!("CARGO_PKG_VERSION"), cfg.hash());
    let _ = writeln!(
        summary,
        "dataset: samples {} steps {} kb_width {} support_width {} out_width {}",
        dims.samples, dims.steps, dims.kb_width, dims.support_width, dims.out_width
    );

    // Stage: per architecture, cross-validate then sweep.
    for &arch in &cfg.architectures {
        let spec = ModelSpec::for_dims(arch, dims);
        let train_cfg = TrainConfig {
            epochs: cfg.epochs,
            piecewise_epochs: cfg.piecewise_epochs,
            learning_rate: cfg.learning_rate,
            folds: cfg.folds,
            seed: cfg.train_seed,
        };
        let folds = cross_validate(spec, &tensors, &train_cfg)
            .with_context(|| format!("stage train ({arch})"))?;

        for fold in &folds {
            fold.model.save(&run_dir.join("checkpoints").join(format!("{arch}_fold{:02}.model", fold.fold)))?;
            for curve in &fold.curves {
                let mut csv = String::from("epoch,loss\n");
                for (epoch, loss) in curve.values.iter().enumerate() {
                    let _ = writeln!(csv, "{epoch},{loss}");
                }
                fs::write(
                    run_dir.join("curves").join(format!("{arch}_fold{:02}_{}.csv", fold.fold, curve.name)),
                    csv,
                )?;
            }
            if let Some(curve) = fold.curves.first() {
                if let (Some(first), Some(last)) = (curve.values.first(), curve.values.last()) {
                    let _ = writeln!(
                        summary,
                        "{arch} fold {}: {} loss {first} -> {last}",
                        fold.fold, curve.name
                    );
                }
            }
        }

        let report = run_sweep(&folds, &tensors, &prepared, &cfg.levels, cfg.eval_seed)
            .with_context(|| format!("stage sweep ({arch})"))?;
        fs::write(run_dir.join(format!("report_{arch}.csv")), report.to_csv())?;
        write_plot_data(&report, &run_dir.join("plots"), arch)?;
        println!("{arch}: report written ({} rows)", report.rows.len());
    }

    let _ = writeln!(summary, "---- config ----");
    summary.push_str(&cfg.raw);
    fs::write(run_dir.join("summary.txt"), summary)?;
    println!("run directory: {}", run_dir.display());
    Ok(())
}

fn write_plot_data(report: &EvalReport, plot_dir: &Path, arch: Architecture) -> Result<()> {
    use elstm_core::eval::Baseline;
    for metric in Metric::ALL {
        for baseline in Baseline::ALL {
            let mut dist = String::new();
            let mut f1 = String::new();
            for row in report.rows.iter().filter(|r| r.metric == metric && r.baseline == baseline) {
                let _ = writeln!(dist, "{} {}", row.level, row.mean_dist);
                let _ = writeln!(f1, "{} {}", row.level, row.f1);
            }
            fs::write(plot_dir.join(format!("{arch}_{metric}_{baseline}_dist.dat")), dist)?;
            fs::write(plot_dir.join(format!("{arch}_{metric}_{baseline}_f1.dat")), f1)?;
        }
    }
    Ok(())
}

pub fn cmd_inspect(checkpoint: &Path, kb_file: &Path, step: usize) -> Result<()> {
    let model: Model<Train> = Model::load(checkpoint).map_err(|e| anyhow!(e))?;
    let spec = model.spec();
    if spec.architecture == Architecture::Flat {
        bail!("flat checkpoints have no intermediate support layer to inspect");
    }
    if step == 0 || step > spec.steps {
        bail!("step {step} out of range, model has {} steps", spec.steps);
    }

    let text = fs::read_to_string(kb_file)?;
    let (kb, _) = parse_kb(&text).map_err(|e| anyhow!(e))?;
    let trace = saturate(&kb);
    let supports = extract_supports(&trace).map_err(|e| anyhow!(e))?;

    let mut row = vec![0.0 as Train; spec.kb_width];
    let enc: Vec<Train> = encode_kb(&kb);
    if enc.len() > row.len() {
        bail!("KB is wider than the model input ({} > {})", enc.len(), row.len());
    }
    row[..enc.len()].copy_from_slice(&enc);
    let x_rows: Vec<&[Train]> = (0..spec.steps).map(|_| row.as_slice()).collect();
    let output = model.forward(&x_rows).map_err(|e| anyhow!(e))?;
    let activations = output
        .support_activations
        .as_ref()
        .expect("deep/piecewise models expose support activations");

    println!("checkpoint {} ({}), kb {}, step {step}/{}", checkpoint.display(), spec.architecture, kb_file.display(), spec.steps);
    println!("decoded support-layer activations:");
    let decoded = elstm_core::encode::decode_row(&activations[step - 1], kb.signature());
    if decoded.is_empty() {
        println!("  (all padding)");
    }
    for axiom in &decoded {
        println!("  {axiom}");
    }

    println!("true supports at step {step}:");
    if step > trace.len() {
        println!("  (step beyond trace; no supports)");
        return Ok(());
    }
    let union = step_support_union(&trace, &supports, step).map_err(|e| anyhow!(e))?;
    for index in union {
        println!("  [{index}] {}", kb.axioms()[index]);
    }
    Ok(())
}

pub fn cmd_eval(predictions_file: &Path, kb_file: &Path) -> Result<()> {
    let predictions: Vec<Axiom> = fs::read_to_string(predictions_file)?
        .lines()
        .map(|line| match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(|line| parse_axiom(line).map_err(|e| anyhow!("{}: {e}", predictions_file.display())))
        .collect::<Result<_>>()?;

    let text = fs::read_to_string(kb_file)?;
    let (kb, _) = parse_kb(&text).map_err(|e| anyhow!(e))?;
    let mut answers: Vec<Axiom> = completion_set(&saturate(&kb)).into_iter().collect();
    answers.sort_by_cached_key(Axiom::to_string);

    println!("metric,mean_dist,min_dist,max_dist,precision,recall,f1");
    for metric in Metric::ALL {
        let score = best_match_score(&predictions, &answers, metric);
        let (mean, min, max) = if score.distances.is_empty() {
            (0.0, 0, 0)
        } else {
            let sum: u64 = score.distances.iter().sum();
            (
                sum as f64 / score.distances.len() as f64,
                *score.distances.iter().min().unwrap(),
                *score.distances.iter().max().unwrap(),
            )
        };
        println!("{metric},{mean},{min},{max},{},{},{}", score.precision, score.recall, score.f1);
    }
    Ok(())
}
