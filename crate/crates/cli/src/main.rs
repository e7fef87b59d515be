use std::io::{BufRead, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use treebeam::datagen::{self, task_from_json, GenConfig, Task};
use treebeam::dsl::{parse_arg_list, parse_program, render_program};
use treebeam::eval::{self, EvalReport, Plan, EVAL_TIMEOUT};
use treebeam::exec::Exec;
use treebeam::guidance::{FrequencyGuidance, UniformGuidance};
use treebeam::interp::{self, Value, DEFAULT_FUEL};
use treebeam::search::{greedy_decode, synthesize, SearchConfig, MAX_DEPTH};
use treebeam::seq2tree::archive::{decode_archive, encode_archive};
use treebeam::seq2tree::parity::{check_parity, ParityFixture};
use treebeam::seq2tree::{prep, ModelParams, Seq2Tree, Vocab};

const MODEL_ENV: &str = "TREEBEAM_MODEL";
/// Largest logit deviation accepted by `train-export-verify`.
const PARITY_TOL: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "treebeam", version, about = "Typed-DSL program synthesis with guided tree-beam search")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    SearchUniform,
    SearchFreq,
    SearchNeural,
    ModelOnly,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::SearchUniform => "search-uniform",
            Mode::SearchFreq => "search-freq",
            Mode::SearchNeural => "search-neural",
            Mode::ModelOnly => "model-only",
        }
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 100)]
    max_visited: usize,
    #[arg(long, default_value_t = 100)]
    queue_n: usize,
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    #[arg(long, default_value_t = MAX_DEPTH)]
    max_depth: usize,
    /// Per-task wall-clock limit in seconds (0 disables it).
    #[arg(long, default_value_t = EVAL_TIMEOUT.as_secs_f64())]
    timeout: f64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            max_visited: self.max_visited,
            queue_n: self.queue_n,
            threshold: self.threshold,
            max_depth: self.max_depth,
            timeout: (self.timeout > 0.0).then(|| Duration::from_secs_f64(self.timeout)),
            ..SearchConfig::default()
        }
    }
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset directory (train/dev/test JSONL) or a single JSONL file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "dev")]
    split: String,
    /// Evaluate only the first N tasks.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_enum, default_value = "search-neural")]
    mode: Mode,
    /// Weight archive; its vocabulary sidecar sits next to it.
    #[arg(long, env = MODEL_ENV)]
    model: Option<PathBuf>,
    /// Training tasks for the frequency model (default: train.jsonl beside the data).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Run searches one after another on this thread.
    #[arg(long)]
    sequential: bool,
    /// Lock-step batch width for neural search (0 runs independent searches).
    #[arg(long, default_value_t = 64)]
    batch: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset split into train/dev/test JSONL files.
    Gen {
        #[arg(long, default_value_t = 6000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated template ids (default: all).
        #[arg(long, value_delimiter = ',')]
        templates: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a program on inputs read from stdin, one JSON array per line.
    Run {
        program: String,
        /// Arguments as `name:type` pairs, e.g. `a:int[],n:int`.
        #[arg(long, default_value = "")]
        args: String,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Parse and type-check a program.
    Check {
        program: String,
        #[arg(long, default_value = "")]
        args: String,
    },
    /// Synthesize a program for one task.
    Synth {
        /// File holding one task record (`-` for stdin).
        #[arg(long)]
        task_json: PathBuf,
        #[arg(long, value_enum, default_value = "search-neural")]
        mode: Mode,
        #[arg(long, env = MODEL_ENV)]
        model: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Accuracy of one mode on a dataset split.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// JSON report path; depth table goes next to it as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Accuracy as a function of the visited-tree budget.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,50,100")]
        values: Vec<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check an exported archive: canonical bytes and logit parity.
    TrainExportVerify {
        #[arg(long, env = MODEL_ENV)]
        model: PathBuf,
        /// Reference values written by the trainer (default: parity.json beside the model).
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Export vocabulary and encoded records for the trainer.
    Prep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        placeholders: usize,
    },
}

/// A failure caused by the user's input, as opposed to an internal error.
#[derive(Debug)]
struct UserError(String);

impl std::fmt::Display for UserError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

fn user<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UserError(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UserError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load_model(path: Option<&Path>) -> anyhow::Result<Seq2Tree> {
    let Some(path) = path else {
        return user(format!("neural modes need --model or {MODEL_ENV}"));
    };
    Seq2Tree::load(path, None).or_else(|e| user(e.to_string()))
}

fn load_split(data: &Path, split: &str) -> anyhow::Result<Vec<Task>> {
    let file = if data.is_dir() { data.join(format!("{split}.jsonl")) } else { data.to_path_buf() };
    datagen::read_tasks(&file).or_else(|e| user(e.to_string()))
}

fn frequency(train: Option<&Path>, data: &Path) -> anyhow::Result<FrequencyGuidance> {
    let path = match train {
        Some(p) => p.to_path_buf(),
        None if data.is_dir() => data.join("train.jsonl"),
        None => data.with_file_name("train.jsonl"),
    };
    Ok(FrequencyGuidance::train(&load_split(&path, "train")?))
}

fn write_report(path: &Path, report: &EvalReport) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json).with_context(|| path.display().to_string())?;
    let csv = path.with_extension("depth.csv");
    std::fs::write(&csv, eval::depth_csv(&report.by_depth)).with_context(|| csv.display().to_string())?;
    if !report.by_max_visited.is_empty() {
        let csv = path.with_extension("sweep.csv");
        std::fs::write(&csv, eval::sweep_csv(&report.by_max_visited)).with_context(|| csv.display().to_string())?;
    }
    Ok(())
}

fn run(cmd: Cmd) -> anyhow::Result<ExitCode> {
    match cmd {
        Cmd::Gen { n, seed, templates, out } => {
            let cfg = GenConfig { n_tasks: n, seed, templates, ..GenConfig::default() };
            let split = datagen::generate_dataset(&cfg).or_else(|e| user(e.to_string()))?;
            datagen::write_dataset(&split, &out)?;
            for (name, tasks) in split.parts() {
                println!("{name}: {} tasks", tasks.len());
            }
        }
        Cmd::Run { program, args, fuel } => {
            let args = parse_arg_list(&args).or_else(|e| user(e.to_string()))?;
            let tree = parse_program(&program, &args).or_else(|e| user(e.to_string()))?;
            let mut failed = false;
            for line in std::io::stdin().lock().lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let json: serde_json::Value = serde_json::from_str(&line).or_else(|e| user(format!("input: {e}")))?;
                let Some(items) = json.as_array().filter(|a| a.len() == args.len()) else {
                    return user(format!("input must be a JSON array of {} values", args.len()));
                };
                let inputs = items
                    .iter()
                    .zip(args.iter())
                    .map(|(j, a)| Value::from_json(j, &a.ty))
                    .collect::<Result<Vec<_>, _>>()
                    .or_else(|e| user(e.to_string()))?;
                match interp::evaluate(&tree, &inputs, fuel) {
                    Ok(v) => println!("{}", v.to_json()),
                    Err(e) => {
                        println!("error: {e}");
                        failed = true;
                    }
                }
            }
            if failed {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Check { program, args } => {
            let args = parse_arg_list(&args).or_else(|e| user(e.to_string()))?;
            let tree = parse_program(&program, &args).or_else(|e| user(e.to_string()))?;
            println!("{} : {}", render_program(&tree), tree.result_type());
        }
        Cmd::Synth { task_json, mode, model, train, search } => {
            let text = if task_json == Path::new("-") {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                std::fs::read_to_string(&task_json).or_else(|e| user(format!("{}: {e}", task_json.display())))?
            };
            let task = task_from_json(text.trim()).or_else(user)?;
            let cfg = search.config();
            let program = match mode {
                Mode::SearchUniform => synthesize(&task, &UniformGuidance, &cfg).program().cloned(),
                Mode::SearchFreq => {
                    let Some(train) = train else { return user("search-freq needs --train") };
                    synthesize(&task, &frequency(Some(&train), &train)?, &cfg).program().cloned()
                }
                Mode::SearchNeural => synthesize(&task, &load_model(model.as_deref())?, &cfg).program().cloned(),
                Mode::ModelOnly => greedy_decode(&task, &load_model(model.as_deref())?, cfg.max_depth, eval::GREEDY_MAX_NODES),
            };
            let Some(program) = program else {
                println!("no program found");
                return Ok(ExitCode::from(1));
            };
            let pass = if mode == Mode::ModelOnly {
                interp::run_tests(&program, &task.tests, cfg.fuel).passed()
            } else {
                eval::passes_holdout(&program, &task, cfg.fuel)
            };
            println!("{}", render_program(&program));
            println!("{}", if pass { "PASS" } else { "FAIL" });
            if !pass {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Eval { data, search, report } => {
            let r = evaluate(&data, &search.config())?;
            print!("{}", r.table());
            if let Some(path) = report {
                write_report(&path, &r)?;
            }
        }
        Cmd::Sweep { data, search, values, report } => {
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return user("--values must be strictly increasing");
            }
            if data.mode == Mode::ModelOnly {
                return user("sweep needs a search mode");
            }
            let base = search.config();
            let mut points = Vec::new();
            let mut all = Vec::new();
            for v in values {
                let r = evaluate(&data, &SearchConfig { max_visited: v, ..base.clone() })?;
                eprintln!("max_visited {v}: {:.1}%", 100.0 * r.accuracy);
                points.push(eval::SweepPoint { max_visited: v, n: r.n, solved: r.solved, accuracy: r.accuracy });
                all.push(r);
            }
            let mut last = all.pop().expect("at least one value");
            last.mode = format!("{} sweep", data.mode.name());
            last.by_max_visited = points;
            print!("{}", last.table());
            if let Some(path) = report {
                write_report(&path, &last)?;
            }
        }
        Cmd::TrainExportVerify { model, fixture } => {
            let bytes = std::fs::read(&model).or_else(|e| user(format!("{}: {e}", model.display())))?;
            let tensors = decode_archive(&bytes).or_else(|e| user(e.to_string()))?;
            let canonical = encode_archive(&tensors) == bytes;
            let params = ModelParams::from_tensors(tensors, None).or_else(|e| user(e.to_string()))?;
            let m = Seq2Tree::load(&model, None).or_else(|e| user(e.to_string()))?;
            let fixture = fixture.unwrap_or_else(|| model.with_file_name("parity.json"));
            let f = ParityFixture::read(&fixture).or_else(user)?;
            let p = check_parity(&params, &f);
            println!("archive: {} tensors, V = {}, H = {}", m.params.to_tensors().len(), params.vocab, params.hidden);
            println!("re-export byte-identical: {canonical}");
            println!("nodes checked: {}", p.nodes);
            println!("max encoder difference: {:.3e}", p.max_encoder_diff);
            println!("max logit difference: {:.3e} (tolerance {PARITY_TOL:e})", p.max_logit_diff);
            let ok = canonical && p.max_logit_diff <= PARITY_TOL && p.max_encoder_diff <= PARITY_TOL;
            println!("{}", if ok { "PASS" } else { "FAIL" });
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Prep { data, out, placeholders } => {
            let split = datagen::read_dataset(&data).or_else(|e| user(e.to_string()))?;
            let vocab = Vocab::build(&split.train, placeholders);
            std::fs::create_dir_all(&out).with_context(|| out.display().to_string())?;
            vocab.write(&out.join("vocab.txt"))?;
            for (name, tasks) in split.parts() {
                let lines: Vec<String> = tasks
                    .iter()
                    .map(|t| serde_json::to_string(&prep::record(&vocab, t)).expect("records serialize"))
                    .collect();
                std::fs::write(out.join(format!("{name}.enc.jsonl")), lines.join("\n") + "\n")?;
            }
            println!("vocabulary: {} regular + {} placeholders", vocab.n_regular(), vocab.n_placeholders());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn evaluate(data: &DataArgs, cfg: &SearchConfig) -> anyhow::Result<EvalReport> {
    let mut tasks = load_split(&data.data, &data.split)?;
    if let Some(n) = data.limit {
        tasks.truncate(n);
    }
    let exec = if data.sequential { Exec::Sequential } else { Exec::Parallel };
    let name = data.mode.name();
    let map = Plan::Map(exec);
    Ok(match data.mode {
        Mode::SearchUniform => eval::evaluate_search(name, &tasks, &UniformGuidance, cfg, map),
        Mode::SearchFreq => {
            let g = frequency(data.train.as_deref(), &data.data)?;
            eval::evaluate_search(name, &tasks, &g, cfg, map)
        }
        Mode::SearchNeural => {
            let g = load_model(data.model.as_deref())?;
            let plan = if data.batch > 0 && !data.sequential { Plan::Batched(data.batch) } else { map };
            eval::evaluate_search(name, &tasks, &g, cfg, plan)
        }
        Mode::ModelOnly => {
            let g = load_model(data.model.as_deref())?;
            eval::evaluate_greedy(name, &tasks, &g, cfg.max_depth, cfg.fuel, exec)
        }
    })
}
