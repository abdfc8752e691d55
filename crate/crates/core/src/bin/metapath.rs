// SPDX-License-Identifier: Apache-2.0

//! `metapath` command-line tool.
//!
//! Exit status: 0 on success, 1 on runtime failure, 2 on bad flags, 3 on an
//! invalid config. Failures print one JSON object on standard error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use metapath_core::config::{load_config, RunConfig};
use metapath_core::datagen::generate_dataset;
use metapath_core::eval::{run_experiment, sweep_parameter, Method, SweepParam};
use metapath_core::hin::io::{labels_from_pairs, load_dataset, read_id_labels, Dataset};
use metapath_core::hin::{HinGraph, LabelAssignment};
use metapath_core::manifest::Manifest;
use metapath_core::pipeline::{classify, PreparedGraph};
use metapath_core::{Error, Result};

const BUILD_ID: &str = concat!(env!("CARGO_PKG_VERSION"), " (metapath-core)");

#[derive(Parser)]
#[command(name = "metapath", version = BUILD_ID, about = "Meta-path based transductive classification on heterogeneous networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "METAPATH_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set lambda=4`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory (overrides the `data` config key).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Summarize meta-path similarities, optionally dumping them.
    Paths {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Write every PathSim matrix as dense CSV into this directory.
        #[arg(long)]
        dump_pathsim: Option<PathBuf>,
    },
    /// Fit meta-path weights from labeled seeds.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Seed labels (`id,class`); defaults to the labels in nodes.csv.
        #[arg(long)]
        seeds: Option<PathBuf>,
    },
    /// Classify every target node from labeled seeds.
    Classify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Seed labels (`id,class`); defaults to the labels in nodes.csv.
        #[arg(long)]
        seeds: Option<PathBuf>,
    },
    /// Run the repeated seed-fraction experiment.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Write SVG plots into this directory.
        #[arg(long)]
        emit_plots: Option<PathBuf>,
    },
    /// Rerun the experiment over values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// `lambda` or `epsilon`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        /// Write SVG plots into this directory.
        #[arg(long)]
        emit_plots: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(&Error::Config("--threads must be >= 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&Error::Config(format!("thread pool: {e}")));
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    let line = json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{line}");
    ExitCode::from(if e.is_config() { 3 } else { 1 })
}

fn log(msg: impl AsRef<str>) {
    eprintln!("metapath: {}", msg.as_ref());
}

/// Loads the config with `--data` applied, so the manifest echo records it.
fn setup(common: &Common, data: Option<&DataArgs>) -> Result<RunConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(dir) = data.and_then(|d| d.data.as_ref()) {
        overrides.push(format!("data={}", serde_json::to_string(dir).expect("path serializes")));
    }
    let cfg = load_config(common.config.as_deref(), &overrides)?;
    cfg.check_data()?;
    fs::create_dir_all(&common.out).map_err(|e| Error::Io { path: common.out.clone(), source: e })?;
    Ok(cfg)
}

fn require_data(cfg: &RunConfig) -> Result<&Path> {
    cfg.data
        .as_deref()
        .ok_or_else(|| Error::Config("no dataset: pass --data or set the `data` key".into()))
}

/// Loaded or generated graph with its ground truth, plus the input files read.
fn dataset(cfg: &RunConfig) -> Result<(HinGraph, LabelAssignment, Vec<PathBuf>)> {
    match &cfg.data {
        Some(dir) => {
            let ds = load_dataset(dir)?;
            let truth = ds.ground_truth().clone();
            Ok((ds.graph, truth, Dataset::files(dir)))
        }
        None => {
            log("no data directory configured; generating the synthetic dataset in memory");
            let (graph, truth) = generate_dataset(&cfg.generator())?.build()?;
            Ok((graph, truth, Vec::new()))
        }
    }
}

fn seed_labels(graph: &HinGraph, ds: &Dataset, seeds: Option<&Path>) -> Result<LabelAssignment> {
    match seeds {
        Some(p) => labels_from_pairs(graph, &read_id_labels(p, ["id", "class"])?),
        None => Ok(ds.labels.clone()),
    }
}

fn finish(command: &str, cfg: &RunConfig, out: &Path, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<()> {
    let mut m = Manifest::new(command, cfg.to_value());
    m.add_inputs(inputs)?;
    m.add_outputs(out, outputs)?;
    m.write(out)?;
    Ok(())
}

fn write_text(path: PathBuf, body: &str) -> Result<PathBuf> {
    fs::write(&path, body).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    Ok(path)
}

fn beta_json(prepared: &PreparedGraph, beta: &metapath_core::weights::BetaWeights) -> String {
    let mut s = serde_json::to_string_pretty(&json!({
        "paths": prepared.path_names(),
        "raw": beta.raw,
        "bias": beta.bias,
        "normalized": beta.normalized,
        "kkt_residual": beta.kkt_residual,
        "iterations": beta.iterations,
    }))
    .expect("weights serialize");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Generate { common } => {
            let cfg = setup(&common, None)?;
            let data = generate_dataset(&cfg.generator())?;
            data.write(&common.out)?;
            finish("generate", &cfg, &common.out, &[], &Dataset::files(&common.out))?;
            log(format!("wrote dataset to {}", common.out.display()));
        }
        Command::Paths { common, data, dump_pathsim } => {
            let cfg = setup(&common, Some(&data))?;
            let dir = require_data(&cfg)?;
            let ds = load_dataset(dir)?;
            let prepared = PreparedGraph::new(ds.graph.clone(), &cfg.metapaths)?;
            let mut summary = String::from("path,nodes,rank,zero_diagonal\n");
            for f in &prepared.factors {
                let pf = f.factor();
                let zero = pf.diagonal().iter().filter(|&&d| d == 0.0).count();
                summary.push_str(&format!("{},{},{},{}\n", pf.path(), pf.size(), pf.rank(), zero));
            }
            let mut outputs = vec![write_text(common.out.join("paths.csv"), &summary)?];
            if let Some(dump) = dump_pathsim {
                fs::create_dir_all(&dump).map_err(|e| Error::Io { path: dump.clone(), source: e })?;
                for f in &prepared.factors {
                    let path = dump.join(format!("pathsim_{}.csv", f.factor().path()));
                    dump_pathsim_csv(f.factor(), &path)?;
                    log(format!("wrote {}", path.display()));
                }
            }
            outputs.sort();
            finish("paths", &cfg, &common.out, &Dataset::files(dir), &outputs)?;
        }
        Command::Fit { common, data, seeds } => {
            let cfg = setup(&common, Some(&data))?;
            let dir = require_data(&cfg)?;
            let ds = load_dataset(dir)?;
            let labels = seed_labels(&ds.graph, &ds, seeds.as_deref())?;
            let prepared = PreparedGraph::new(ds.graph.clone(), &cfg.metapaths)?;
            let beta = prepared.fit_weights(&labels.labeled_nodes(), &labels, &cfg.weights(), cfg.rng_seed)?;
            let out = write_text(common.out.join("beta.json"), &beta_json(&prepared, &beta))?;
            let mut inputs = Dataset::files(dir);
            inputs.extend(seeds);
            finish("fit", &cfg, &common.out, &inputs, &[out])?;
        }
        Command::Classify { common, data, seeds } => {
            let cfg = setup(&common, Some(&data))?;
            let dir = require_data(&cfg)?;
            let ds = load_dataset(dir)?;
            let labels = seed_labels(&ds.graph, &ds, seeds.as_deref())?;
            let prepared = PreparedGraph::new(ds.graph.clone(), &cfg.metapaths)?;
            let result = classify(&prepared, &labels, &cfg.weights(), &cfg.propagation(), cfg.spectral_iters, cfg.rng_seed)?;
            log(format!("spectral radius estimate {:.12}", result.spectral_radius));
            let ids = prepared.graph.node_ids(prepared.graph.target_type_id());
            let scores_path = common.out.join("scores.csv");
            write_scores(&scores_path, ids, &result)?;
            let beta_path = write_text(common.out.join("beta.json"), &beta_json(&prepared, &result.beta))?;
            let mut inputs = Dataset::files(dir);
            inputs.extend(seeds);
            finish("classify", &cfg, &common.out, &inputs, &[beta_path, scores_path])?;
        }
        Command::Evaluate { common, data, emit_plots } => {
            let cfg = setup(&common, Some(&data))?;
            let (graph, truth, inputs) = dataset(&cfg)?;
            let prepared = PreparedGraph::new(graph, &cfg.metapaths)?;
            let report = run_experiment(&prepared, &truth, &cfg.experiment())?;
            let mut outputs = report.write(&common.out)?;
            if let Some(dir) = emit_plots {
                fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                write_text(dir.join("accuracy.svg"), &report.accuracy_plot())?;
            }
            outputs.sort();
            finish("evaluate", &cfg, &common.out, &inputs, &outputs)?;
            eprint!("{}", report.to_markdown());
        }
        Command::Sweep { common, data, param, values, emit_plots } => {
            let param: SweepParam = param.parse()?;
            let cfg = setup(&common, Some(&data))?;
            let (graph, truth, inputs) = dataset(&cfg)?;
            let prepared = PreparedGraph::new(graph, &cfg.metapaths)?;
            let table = sweep_parameter(&prepared, &truth, &cfg.experiment(), param, &values)?;
            let outputs = table.write(&common.out)?;
            if let Some(dir) = emit_plots {
                fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                for &m in &cfg.methods {
                    if m == Method::Majority {
                        continue;
                    }
                    write_text(dir.join(format!("sweep_{}_{}.svg", param.as_str(), m)), &table.plot(m))?;
                }
            }
            finish("sweep", &cfg, &common.out, &inputs, &outputs)?;
        }
    }
    log(format!("done in {:.1}s", started.elapsed().as_secs_f64()));
    Ok(())
}

fn dump_pathsim_csv(factor: &metapath_core::metapath::PathFactor, path: &Path) -> Result<()> {
    let io = |e| Error::Io { path: path.to_path_buf(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let n = factor.size();
    let mut row = vec![0.0; n];
    let mut scratch = factor.scratch();
    for i in 0..n {
        factor.pathsim_row(i, 0, &mut row, &mut scratch);
        let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_scores(path: &Path, ids: &[String], result: &metapath_core::pipeline::Classification) -> Result<()> {
    let io = |e| Error::Io { path: path.to_path_buf(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let p = result.scores.entries.cols();
    let mut header = String::from("id");
    for c in 1..=p {
        header.push_str(&format!(",score_{c}"));
    }
    writeln!(w, "{header},label,flag").map_err(io)?;
    for (i, id) in ids.iter().enumerate() {
        let mut line = id.clone();
        for v in result.scores.entries.row(i) {
            line.push_str(&format!(",{v:.12e}"));
        }
        let a = &result.assignments[i];
        writeln!(w, "{line},{},{}", a.class, a.flag.as_str()).map_err(io)?;
    }
    w.flush().map_err(io)
}
