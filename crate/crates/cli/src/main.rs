mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delaystream::csann::{run_prequential, Method, RunTrace};
use delaystream::fusion::{fuse, read_jsonl, read_records, write_jsonl, write_records_csv};
use delaystream::fusion::timetable::Timetable;
use delaystream::report::{checkpoint_table, feature_comparison, Manifest, Report, RunMeta, Table};
use delaystream::synth::{drift_stream, generate_network, simulate_day};
use delaystream::{Error, FeatureSelector, Result, WindowedInstance};

use crate::config::PipelineConfig;

#[derive(Parser)]
#[command(name = "delaystream", version, about = "Transit delay classification on location streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default configuration as TOML.
    Defaults,
    /// Simulate a service day (raw records, timetable, ground truth) or a drifting window stream.
    Generate(GenerateArgs),
    /// Turn raw location records into the enriched stream and windowed instances.
    Fuse(FuseArgs),
    /// Prequential run of one method over a window stream.
    Run(RunArgs),
    /// Cumulative accuracy tables and curves from stored traces.
    Report(ReportArgs),
    /// Stream model alone, once per feature selector, on the same windows.
    CompareFeatures(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit a two-regime window stream instead of a service day.
    #[arg(long)]
    drift: bool,
}

#[derive(Args)]
struct FuseArgs {
    /// Raw records, CSV or JSON lines.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    timetable: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    windows: PathBuf,
    /// Trace file to write (JSON lines).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "csann")]
    method: Method,
    #[arg(long)]
    selector: Option<FeatureSelector>,
    #[arg(long = "N")]
    n_train: Option<usize>,
    #[arg(long = "L")]
    window: Option<usize>,
    /// Seed for the neural model.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// `LABEL=PATH`, or just `PATH` to label by file stem. Repeatable.
    #[arg(long = "trace", required = true)]
    traces: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "stream")]
    stream_id: String,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    windows: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "all,coords,delays")]
    selectors: Vec<FeatureSelector>,
    #[arg(long, default_value = "stream")]
    stream_id: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Defaults => defaults(),
        Command::Generate(a) => generate(a),
        Command::Fuse(a) => fuse_cmd(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::CompareFeatures(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn defaults() -> Result<()> {
    print!("{}", PipelineConfig::default().to_toml()?);
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn save_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    write_jsonl(&mut w, items)?;
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_windows(path: &Path) -> Result<Vec<WindowedInstance>> {
    let windows: Vec<WindowedInstance> = read_jsonl(BufReader::new(open(path)?))?;
    for w in &windows {
        w.validate()?;
    }
    Ok(windows)
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(a.config.as_deref())?;
    std::fs::create_dir_all(&a.out)?;
    let manifest_file = a.out.join("manifest.json");

    if a.drift {
        if let Some(seed) = a.seed {
            cfg.drift.seed = seed;
        }
        let windows = drift_stream(&cfg.drift)?;
        let path = a.out.join("windows.jsonl");
        save_jsonl(&path, &windows)?;
        Manifest::new("generate --drift", Some(cfg.drift.seed), &cfg.drift)?
            .output(&path)?
            .save(&manifest_file)?;
        println!("{} instances -> {}", windows.len(), path.display());
        return Ok(());
    }

    if let Some(seed) = a.seed {
        cfg.synth.seed = seed;
    }
    let net = generate_network(&cfg.synth)?;
    let day = simulate_day(&cfg.synth, &net)?;

    let raw = a.out.join("raw.csv");
    let timetable = a.out.join("timetable.json");
    let truth = a.out.join("truth.jsonl");
    let mut w = create(&raw)?;
    write_records_csv(&mut w, &day.records)?;
    w.flush()?;
    net.timetable.save(&timetable)?;
    save_jsonl(&truth, day.truth.points())?;

    Manifest::new("generate", Some(cfg.synth.seed), &cfg.synth)?
        .output(&raw)?
        .output(&timetable)?
        .output(&truth)?
        .save(&manifest_file)?;
    println!(
        "{} records ({} captures) from {} vehicles -> {}",
        day.records.len(),
        day.captures,
        net.blocks.len(),
        a.out.display()
    );
    Ok(())
}

fn fuse_cmd(a: FuseArgs) -> Result<()> {
    let cfg = PipelineConfig::load(a.config.as_deref())?;
    open(&a.raw)?;
    open(&a.timetable)?;
    let raw = read_records(&a.raw)?;
    let timetable = Timetable::load(&a.timetable)?;
    let out = fuse(&raw, &timetable, &cfg.fusion)?;

    std::fs::create_dir_all(&a.out)?;
    let stream_u = a.out.join("stream_u.jsonl");
    let windows = a.out.join("windows.jsonl");
    let stats = a.out.join("stats.json");
    save_jsonl(&stream_u, &out.stream_u)?;
    save_jsonl(&windows, &out.windows)?;
    std::fs::write(&stats, serde_json::to_string_pretty(&out.stats)? + "\n")?;

    Manifest::new("fuse", None, &cfg.fusion)?
        .input(&a.raw)?
        .input(&a.timetable)?
        .output(&stream_u)?
        .output(&windows)?
        .output(&stats)?
        .save(&a.out.join("manifest.json"))?;
    let s = &out.stats;
    println!(
        "{} raw, {} duplicates, {} speed-gated, {} snapped, {} off-route -> {} enriched, {} windows",
        s.raw_records, s.duplicates, s.speed_gated, s.snapped, s.off_route, s.enriched, s.windows
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(a.config.as_deref())?.run;
    if let Some(s) = a.selector {
        cfg.selector = s;
    }
    if let Some(n) = a.n_train {
        cfg.n_train = n;
    }
    if let Some(l) = a.window {
        cfg.window = l;
    }
    if let Some(seed) = a.seed {
        cfg.mlp.seed = seed;
    }
    let windows = load_windows(&a.windows)?;
    let trace = run_prequential(&windows, &cfg, a.method)?;
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }

    let mut w = create(&a.out)?;
    trace.write_jsonl(&mut w)?;
    w.flush()?;

    #[derive(serde::Serialize)]
    struct RunRecord<'a> {
        method: Method,
        run: &'a delaystream::csann::CsannConfig,
    }
    Manifest::new("run", Some(cfg.mlp.seed), &RunRecord { method: a.method, run: &cfg })?
        .input(&a.windows)?
        .output(&a.out)?
        .save(&manifest_path(&a.out))?;

    let report = Report::from_trace(&trace, RunMeta::default())?;
    println!(
        "{} over {} instances: A = {}, {} switches",
        a.method,
        trace.len(),
        report.final_accuracy().render(),
        report.switches()
    );
    Ok(())
}

fn parse_trace_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) => (label.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(arg);
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| arg.to_string());
            (label, path)
        }
    }
}

/// Seed and config hash from the manifest written next to a trace, if present.
fn trace_meta(path: &Path, label: &str, stream_id: &str) -> RunMeta {
    let manifest: Option<Manifest> = std::fs::read(manifest_path(path)).ok().and_then(|b| serde_json::from_slice(&b).ok());
    let selector = manifest
        .as_ref()
        .and_then(|m| m.config.pointer("/run/selector"))
        .and_then(|v| v.as_str())
        .unwrap_or_default()
        .to_string();
    RunMeta {
        stream_id: stream_id.to_string(),
        method: label.to_string(),
        selector,
        seed: manifest.as_ref().and_then(|m| m.seed),
        config_hash: manifest.map(|m| m.config_sha256).unwrap_or_default(),
    }
}

fn write_reports(out: &Path, reports: &[Report], labels: &[String]) -> Result<Table> {
    std::fs::create_dir_all(out)?;
    let table = checkpoint_table(reports)?;
    std::fs::write(out.join("table.csv"), table.to_csv())?;
    std::fs::write(out.join("table.txt"), table.to_text())?;
    for (r, label) in reports.iter().zip(labels) {
        let mut w = create(&out.join(format!("curve_{label}.csv")))?;
        r.write_curve_csv(&mut w)?;
        w.flush()?;
        let mut w = create(&out.join(format!("report_{label}.json")))?;
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(table)
}

fn report(a: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    let mut labels = Vec::new();
    let mut inputs = Vec::new();
    for arg in &a.traces {
        let (label, path) = parse_trace_arg(arg);
        if labels.contains(&label) {
            return Err(Error::InvalidConfig(format!("duplicate trace label '{label}'")));
        }
        let trace = RunTrace::read_jsonl(BufReader::new(open(&path)?))?;
        reports.push(Report::from_trace(&trace, trace_meta(&path, &label, &a.stream_id))?);
        labels.push(label);
        inputs.push(path);
    }
    let table = write_reports(&a.out, &reports, &labels)?;

    let mut manifest = Manifest::new("report", None, &labels)?;
    for p in &inputs {
        manifest = manifest.input(p)?;
    }
    manifest.output(&a.out.join("table.csv"))?.save(&a.out.join("manifest.json"))?;
    print!("{}", table.to_text());
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let cfg = PipelineConfig::load(a.config.as_deref())?.run;
    let windows = load_windows(&a.windows)?;
    let reports = feature_comparison(&windows, &a.selectors, &cfg, &a.stream_id)?;
    let labels: Vec<String> = a.selectors.iter().map(|s| s.to_string()).collect();
    let table = write_reports(&a.out, &reports, &labels)?;

    let summary = Table {
        header: vec!["selector".into(), "final".into()],
        rows: reports
            .iter()
            .zip(&labels)
            .map(|(r, l)| vec![l.clone(), r.final_accuracy().render()])
            .collect(),
    };
    Manifest::new("compare-features", Some(cfg.mlp.seed), &cfg)?
        .input(&a.windows)?
        .output(&a.out.join("table.csv"))?
        .save(&a.out.join("manifest.json"))?;
    print!("{}\n{}", table.to_text(), summary.to_text());
    Ok(())
}
