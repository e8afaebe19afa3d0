//! Command-line front door: parse graphs and instances, run the reductions,
//! produce / verify / extract witnesses, and run the heuristic solver.
//!
//! Exit codes: 0 for success, 1 for a computed negative answer (no coloring,
//! no balanced signing, residual above tolerance, no dimension found), 2 for
//! usage or format errors.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qdimfit::graphs::{
    brute_force_3col, check_coloring, extend_coloring_to_gadgets, insert_gadgets, parse_graph,
    triangle_decorate, Graph,
};
use qdimfit::io::{
    self, AnyInstance, AnyModel, BipartiteInstanceJson, BipartiteModelJson, ColoringJson,
    DataInstanceJson, GadgetLabelsJson, ModelJson, SignsJson,
};
use qdimfit::reductions::{
    bipartite_model_to_vectors, brute_force_partition, coloring_to_gram, gram_to_coloring,
    gram_to_vectors, model_to_partition_signs, model_to_vectors, partition_witness_to_model,
    reduce_3col_to_dim3, reduce_3col_to_dim3_ab, reduce_partition, residual, residual_bipartite,
    vectors_to_bipartite_model, vectors_to_gram, vectors_to_model, PartitionInstance,
};
use qdimfit::solver::{fit_bipartite, fit_model, min_dim, SolverOptions};

#[derive(Parser)]
#[command(
    name = "qdimfit",
    version,
    about = "Reductions between 3-coloring, partitioning, and quantum model fitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the primary artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a graph file to a model-fitting instance (JSON).
    #[command(name = "reduce-3col")]
    Reduce3Col {
        graph: PathBuf,
        /// Emit the bipartite instance instead of the single-party one.
        #[arg(long)]
        bipartite: bool,
        /// Also export the CSV flattening here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Where to write the gadget-label sidecar (defaults to
        /// `<out stem>.labels.json` when --out is given).
        #[arg(long)]
        labels_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the 3-coloring oracle and the full forward pipeline; write the
    /// witness model or report that the graph is not 3-colorable.
    Witness {
        graph: PathBuf,
        #[arg(long)]
        bipartite: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Backward pipeline: extract a coloring from a model that satisfies a
    /// reduction instance.
    Extract {
        model: PathBuf,
        instance: PathBuf,
        graph: PathBuf,
        /// Extraction tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reduce a partition instance (positive integer weights) to a
    /// model-fitting instance.
    #[command(name = "reduce-partition")]
    ReducePartition {
        #[arg(required = true)]
        weights: Vec<u64>,
        /// Also export the CSV flattening here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the partition oracle and build the real witness model.
    #[command(name = "witness-partition")]
    WitnessPartition {
        #[arg(required = true)]
        weights: Vec<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Extract the balanced sign vector back out of a witness model.
    #[command(name = "extract-partition")]
    ExtractPartition {
        model: PathBuf,
        #[arg(required = true)]
        weights: Vec<u64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a model of fixed dimension (--d) or sweep dimensions (--dmax).
    Solve {
        instance: PathBuf,
        #[arg(long, conflicts_with = "dmax")]
        d: Option<usize>,
        #[arg(long)]
        dmax: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Convergence threshold and success bar for the residual.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the residual of a model against an instance.
    Verify {
        model: PathBuf,
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print the lexicographically first 3-coloring, or `none`.
    #[command(name = "oracle-3col")]
    Oracle3Col { graph: PathBuf },
    /// Print the lexicographically first balanced signing, or `none`.
    #[command(name = "oracle-partition")]
    OraclePartition {
        #[arg(required = true)]
        weights: Vec<u64>,
    },
}

struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(err: E) -> Self {
        Failure(err.to_string())
    }
}

type CliResult = Result<u8, Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn emit(output: &OutputArgs, contents: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => write_file(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Ok(parse_graph(&read_file(path)?)?)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map_or_else(|| "labels".to_string(), |s| s.to_string_lossy().into_owned());
    name.push_str(".labels.json");
    out.with_file_name(name)
}

fn cmd_reduce_3col(
    graph: &Path,
    bipartite: bool,
    csv: Option<&Path>,
    labels_out: Option<&Path>,
    output: &OutputArgs,
) -> CliResult {
    let g = load_graph(graph)?;
    let (_, labels) = insert_gadgets(&g);
    let payload = if bipartite {
        let inst = reduce_3col_to_dim3_ab::<f64>(&g);
        if let Some(path) = csv {
            write_file(path, &io::bipartite_instance_to_csv(&inst))?;
        }
        io::to_json_string(&BipartiteInstanceJson::from(&inst))?
    } else {
        let inst = reduce_3col_to_dim3::<f64>(&g);
        if let Some(path) = csv {
            write_file(path, &io::instance_to_csv(&inst))?;
        }
        io::to_json_string(&DataInstanceJson::from(&inst))?
    };
    emit(output, &payload)?;
    let labels_json = io::to_json_string(&GadgetLabelsJson::from(&labels))?;
    match (labels_out, &output.out) {
        (Some(path), _) => write_file(path, &labels_json)?,
        (None, Some(out)) => write_file(&sidecar_path(out), &labels_json)?,
        (None, None) => {}
    }
    Ok(0)
}

fn cmd_witness(graph: &Path, bipartite: bool, output: &OutputArgs) -> CliResult {
    let g = load_graph(graph)?;
    let Some(coloring) = brute_force_3col(&g)? else {
        println!("not 3-colorable");
        return Ok(1);
    };
    let (gprime, labels) = insert_gadgets(&g);
    let extended = extend_coloring_to_gadgets(&g, &coloring, &labels)?;
    let gram = coloring_to_gram::<f64>(&gprime, &extended)?;
    let delta = triangle_decorate(&gprime);
    let vectors = gram_to_vectors(&gram, &delta)?;
    let payload = if bipartite {
        let model = vectors_to_bipartite_model(&vectors)?;
        io::to_json_string(&BipartiteModelJson::from(&model))?
    } else {
        let model = vectors_to_model(&vectors)?;
        io::to_json_string(&ModelJson::from(&model))?
    };
    emit(output, &payload)?;
    Ok(0)
}

fn cmd_extract(
    model: &Path,
    instance: &Path,
    graph: &Path,
    tol: f64,
    output: &OutputArgs,
) -> CliResult {
    let g = load_graph(graph)?;
    let (_, labels) = insert_gadgets(&g);
    let model = io::parse_any_model(&read_file(model)?)?;
    let instance = io::parse_any_instance(&read_file(instance)?)?;
    let vectors = match (&model, &instance) {
        (AnyModel::Single(m), AnyInstance::Single(inst)) => model_to_vectors(m, inst, tol)?,
        (AnyModel::Bipartite(m), AnyInstance::Bipartite(inst)) => {
            bipartite_model_to_vectors(m, inst, tol)?
        }
        _ => {
            return Err(Failure(
                "model and instance files have different arities".into(),
            ))
        }
    };
    let gram = vectors_to_gram(&vectors)?;
    let coloring = gram_to_coloring(&gram, &g, &labels)?;
    if !check_coloring(&g, &coloring)? {
        return Err(Failure("extracted coloring failed validation".into()));
    }
    emit(output, &io::to_json_string(&ColoringJson::from(&coloring))?)?;
    Ok(0)
}

fn cmd_reduce_partition(weights: Vec<u64>, csv: Option<&Path>, output: &OutputArgs) -> CliResult {
    let c = PartitionInstance::new(weights)?;
    let inst = reduce_partition::<f64>(&c)?;
    if let Some(path) = csv {
        write_file(path, &io::instance_to_csv(&inst))?;
    }
    emit(output, &io::to_json_string(&DataInstanceJson::from(&inst))?)?;
    Ok(0)
}

fn cmd_witness_partition(weights: Vec<u64>, output: &OutputArgs) -> CliResult {
    let c = PartitionInstance::new(weights)?;
    let Some(signs) = brute_force_partition(&c)? else {
        println!("no balanced signing");
        return Ok(1);
    };
    let model = partition_witness_to_model::<f64>(&c, &signs)?;
    emit(output, &io::to_json_string(&ModelJson::from(&model))?)?;
    Ok(0)
}

fn cmd_extract_partition(
    model: &Path,
    weights: Vec<u64>,
    tol: f64,
    output: &OutputArgs,
) -> CliResult {
    let c = PartitionInstance::new(weights)?;
    let model = match io::parse_any_model(&read_file(model)?)? {
        AnyModel::Single(m) => m,
        AnyModel::Bipartite(_) => {
            return Err(Failure(
                "partition extraction needs a single-party model".into(),
            ))
        }
    };
    let signs = model_to_partition_signs(&model, &c, tol)?;
    emit(output, &io::to_json_string(&SignsJson::from(&signs))?)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    instance: &Path,
    d: Option<usize>,
    dmax: Option<usize>,
    seed: u64,
    restarts: usize,
    tol: f64,
    output: &OutputArgs,
) -> CliResult {
    let opts = SolverOptions {
        seed,
        restarts,
        convergence_threshold: tol,
        ..SolverOptions::default()
    };
    let parsed = io::parse_any_instance(&read_file(instance)?)?;
    let (payload, ok) = match parsed {
        AnyInstance::Single(inst) => match (d, dmax) {
            (Some(d), None) => {
                let report = fit_model(&inst, d, &opts);
                let ok = report.residual <= tol;
                (io::to_json_string(&io::report_to_json(d, &report))?, ok)
            }
            (None, Some(dmax)) => match min_dim(&inst, dmax, &opts) {
                Some((found, report)) => (
                    io::to_json_string(&io::report_to_json(found, &report))?,
                    true,
                ),
                None => {
                    println!("no model found up to dimension {dmax}");
                    return Ok(1);
                }
            },
            _ => return Err(Failure("pass exactly one of --d or --dmax".into())),
        },
        AnyInstance::Bipartite(inst) => match (d, dmax) {
            (Some(d), None) => {
                let report = fit_bipartite(&inst, d, &opts);
                let ok = report.residual <= tol;
                (
                    io::to_json_string(&io::bipartite_report_to_json(d, &report))?,
                    ok,
                )
            }
            (None, Some(dmax)) => {
                let mut found = None;
                for d in 1..=dmax {
                    let report = fit_bipartite(&inst, d, &opts);
                    if report.residual <= tol {
                        found = Some((d, report));
                        break;
                    }
                }
                match found {
                    Some((d, report)) => (
                        io::to_json_string(&io::bipartite_report_to_json(d, &report))?,
                        true,
                    ),
                    None => {
                        println!("no model found up to dimension {dmax}");
                        return Ok(1);
                    }
                }
            }
            _ => return Err(Failure("pass exactly one of --d or --dmax".into())),
        },
    };
    emit(output, &payload)?;
    Ok(if ok { 0 } else { 1 })
}

fn cmd_verify(model: &Path, instance: &Path, tol: f64) -> CliResult {
    let model = io::parse_any_model(&read_file(model)?)?;
    let instance = io::parse_any_instance(&read_file(instance)?)?;
    let value = match (&model, &instance) {
        (AnyModel::Single(m), AnyInstance::Single(inst)) => residual(m, inst)?,
        (AnyModel::Bipartite(m), AnyInstance::Bipartite(inst)) => residual_bipartite(m, inst)?,
        _ => {
            return Err(Failure(
                "model and instance files have different arities".into(),
            ))
        }
    };
    println!("residual {value:e}");
    Ok(if value <= tol { 0 } else { 1 })
}

fn cmd_oracle_3col(graph: &Path) -> CliResult {
    let g = load_graph(graph)?;
    match brute_force_3col(&g)? {
        Some(coloring) => {
            let names: Vec<&str> = coloring.colors().iter().map(|c| c.as_str()).collect();
            println!("{}", names.join(" "));
            Ok(0)
        }
        None => {
            println!("none");
            Ok(1)
        }
    }
}

fn cmd_oracle_partition(weights: Vec<u64>) -> CliResult {
    let c = PartitionInstance::new(weights)?;
    match brute_force_partition(&c)? {
        Some(signs) => {
            let rendered: Vec<&str> = signs
                .signs()
                .iter()
                .map(|s| if *s > 0 { "+1" } else { "-1" })
                .collect();
            println!("{}", rendered.join(" "));
            Ok(0)
        }
        None => {
            println!("none");
            Ok(1)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Reduce3Col {
            graph,
            bipartite,
            csv,
            labels_out,
            output,
        } => cmd_reduce_3col(
            &graph,
            bipartite,
            csv.as_deref(),
            labels_out.as_deref(),
            &output,
        ),
        Command::Witness {
            graph,
            bipartite,
            output,
        } => cmd_witness(&graph, bipartite, &output),
        Command::Extract {
            model,
            instance,
            graph,
            tol,
            output,
        } => cmd_extract(&model, &instance, &graph, tol, &output),
        Command::ReducePartition {
            weights,
            csv,
            output,
        } => cmd_reduce_partition(weights, csv.as_deref(), &output),
        Command::WitnessPartition { weights, output } => cmd_witness_partition(weights, &output),
        Command::ExtractPartition {
            model,
            weights,
            tol,
            output,
        } => cmd_extract_partition(&model, weights, tol, &output),
        Command::Solve {
            instance,
            d,
            dmax,
            seed,
            restarts,
            tol,
            output,
        } => cmd_solve(&instance, d, dmax, seed, restarts, tol, &output),
        Command::Verify {
            model,
            instance,
            tol,
        } => cmd_verify(&model, &instance, tol),
        Command::Oracle3Col { graph } => cmd_oracle_3col(&graph),
        Command::OraclePartition { weights } => cmd_oracle_partition(weights),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
