//! The `vmsim` command line, callable in-process through [`dispatch`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use vmsim_core::cost::{compare, measure, CostReport};
use vmsim_core::sim::run;
use vmsim_core::workload::file::{load_scenario, ScenarioFile};
use vmsim_core::workload::fixtures::anomaly;
use vmsim_core::workload::generator::{benchmark_latency, benchmark_view, generate, GeneratorSpec};
use vmsim_core::{MaintainerKind, Relation, Scenario, ViewHierarchy};

const COLUMNS: [&str; 7] =
    ["kind", "space_bytes", "rows_warehouse", "rows_source", "queries_sent", "compensations", "oracle_match"];

#[derive(Parser)]
#[command(name = "vmsim", version, about = "Simulate warehouse view maintenance strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and validate its view hierarchy.
    Validate { file: PathBuf },
    /// Simulate the scenario with its maintainer and report costs.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Write the event trace to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Use this maintainer instead of the file's.
        #[arg(long)]
        kind: Option<MaintainerKind>,
    },
    /// Simulate the scenario once per maintainer kind.
    Compare {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "SMR,NSMR,SMI,NSMI_ECA")]
        kinds: Vec<MaintainerKind>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the built-in anomaly schedule under naive delta queries and under ECA.
    AnomalyDemo,
    /// Write an order-processing benchmark scenario file.
    Generate {
        #[arg(long)]
        scale: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        appends: u64,
        #[arg(long, default_value = "SMI")]
        kind: MaintainerKind,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Exit status of a failed scenario, validation or demo.
pub const EXIT_FAILURE: u8 = 1;
/// Exit status of a usage error.
pub const EXIT_USAGE: u8 = 2;

/// Parse `args` (program name first) and run the command, returning the exit status.
pub fn dispatch<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_FAILURE
        }
    }
}

fn execute(command: Command) -> Result<u8, String> {
    match command {
        Command::Validate { file } => validate(&file),
        Command::Run { file, format, trace, kind } => {
            let mut scenario = load(&file)?;
            if let Some(k) = kind {
                scenario.kind = k;
            }
            let outcome = run(&scenario).map_err(|e| e.to_string())?;
            if let Some(path) = trace {
                std::fs::write(&path, outcome.trace.to_string()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            report(&scenario.label, &[measure(&outcome)], format)?;
            Ok(0)
        }
        Command::Compare { file, kinds, format } => {
            let scenario = load(&file)?;
            let rows = compare(&scenario, &kinds).map_err(|e| e.to_string())?;
            report(&scenario.label, &rows, format)?;
            Ok(0)
        }
        Command::AnomalyDemo => anomaly_demo(),
        Command::Generate { scale, seed, appends, kind, output } => {
            let scenario = generated(scale, seed, appends, kind)?;
            std::fs::write(&output, ScenarioFile::from_scenario(&scenario).to_json() + "\n")
                .map_err(|e| format!("{}: {e}", output.display()))?;
            println!("wrote {} ({} updates)", output.display(), scenario.updates.len());
            Ok(0)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, String> {
    load_scenario(path).map_err(|e| e.to_string())
}

fn validate(path: &Path) -> Result<u8, String> {
    let s = load(path)?;
    let h = &s.hierarchy;
    println!(
        "ok: {} base relations, {} views, primary {} over {}",
        h.bases().len(),
        h.views().len(),
        h.primary(),
        h.primary_bases().into_iter().collect::<Vec<_>>().join(", ")
    );
    println!("order: {}", h.topological_order().join(" -> "));
    Ok(0)
}

fn generated(scale: u64, seed: u64, appends: u64, kind: MaintainerKind) -> Result<Scenario, String> {
    let g = generate(&GeneratorSpec::new(scale, appends, seed)).map_err(|e| e.to_string())?;
    let h = ViewHierarchy::build(g.schemas, vec![benchmark_view()], "V").map_err(|e| e.to_string())?;
    let mut s = Scenario::new("miniature order-processing benchmark (TPC-inspired stand-in)", h, g.data, kind);
    s.updates = g.updates;
    s.latency = benchmark_latency();
    s.seed = seed;
    Ok(s)
}

fn cells(r: &CostReport) -> [String; 7] {
    [
        r.kind.to_string(),
        r.space_bytes.to_string(),
        r.rows_warehouse.to_string(),
        r.rows_source.to_string(),
        r.queries_sent.to_string(),
        r.compensations.to_string(),
        r.oracle_match.to_string(),
    ]
}

fn report(label: &str, rows: &[CostReport], format: Format) -> Result<(), String> {
    let mut out = std::io::stdout().lock();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(COLUMNS).map_err(|e| e.to_string())?;
            for r in rows {
                w.write_record(cells(r)).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "kind": r.kind,
                        "space_bytes": r.space_bytes,
                        "rows_warehouse": r.rows_warehouse,
                        "rows_source": r.rows_source,
                        "queries_sent": r.queries_sent,
                        "compensations": r.compensations,
                        "oracle_match": r.oracle_match,
                    })
                })
                .collect();
            let doc = json!({ "scenario": label, "rows": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json values serialize"))
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn show(r: &Relation) -> String {
    let rows: Vec<String> = r.iter().map(|(t, n)| format!("{t}x{n}")).collect();
    format!("{{{}}}", rows.join(", "))
}

fn anomaly_demo() -> Result<u8, String> {
    let naive = run(&anomaly(MaintainerKind::NsmiNaive)).map_err(|e| e.to_string())?;
    let eca = run(&anomaly(MaintainerKind::NsmiEca)).map_err(|e| e.to_string())?;
    println!("schedule: r1={{(1,2)}}, r2={{}}; t=0 insert (2,3) into r2; t=3 insert (4,2) into r1");
    println!("oracle     {}", show(&eca.oracle));
    println!("NSMI_NAIVE {}  matches oracle: {}", show(&naive.final_view), naive.matches_oracle());
    println!("NSMI_ECA   {}  matches oracle: {}  compensations: {}", show(&eca.final_view), eca.matches_oracle(), eca.compensations);
    Ok(if !naive.matches_oracle() && eca.matches_oracle() { 0 } else { EXIT_FAILURE })
}
