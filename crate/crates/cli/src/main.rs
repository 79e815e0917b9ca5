//! `nodal`: JSON in, JSON or CSV out.
//!
//! Exit codes: 0 success, 1 a verification or experiment failed, 2 bad
//! usage or invalid input. `NTL_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nodal_core::aut::{
    automorphism_group, decompose_stabilizer, involution_midpoint, level_one_points, realizable_symmetry_report,
};
use nodal_core::energy::{inclusion, properness_experiment, sample_map, PropernessExperimentConfig, Verdict};
use nodal_core::io::{
    chart_to_json, parse_matrix, ConfigJson, LabeledTreeJson, MorphismJson, TreeJson, SCHEMA_VERSION,
};
use nodal_core::mobius::{
    classify_finite_subgroup, kak_decompose, standard_finite_subgroup, FiniteGroupKind, FiniteSubgroupSample, Mobius,
};
use nodal_core::moduli::chart;
use nodal_core::morphism::has_flipped_identification;
use nodal_core::order::{order_from_labeling, total_order_from_tip_order};
use nodal_core::tree::{enumerate_by_size, minimal_stabilizations, Vertex, MAX_ENUMERATED_VERTICES};
use nodal_core::verify::{self, Status, VerifyConfig};

#[derive(Parser)]
#[command(name = "nodal", version, about = "Trees, Möbius numerics and sphere-map energies for nodal curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unlabeled trees.
    #[command(subcommand)]
    Trees(TreesCmd),
    /// Tree morphisms.
    #[command(subcommand)]
    Morphism(MorphismCmd),
    /// Total orders from tip orders or labelings.
    #[command(subcommand)]
    Order(OrderCmd),
    /// Automorphism groups and stabilizers.
    #[command(subcommand)]
    Aut(AutCmd),
    /// Möbius transformations.
    #[command(subcommand)]
    Mobius(MobiusCmd),
    /// Cross-ratio charts of special-point configurations.
    #[command(subcommand)]
    Moduli(ModuliCmd),
    /// Energies of sampled sphere maps.
    #[command(subcommand)]
    Energy(EnergyCmd),
    /// Run the full verification matrix.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum TreesCmd {
    /// All unlabeled trees with exactly `n` vertices.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Also emit a minimal stabilization of every tree.
        #[arg(long)]
        stabilize: bool,
    },
}

#[derive(Subcommand)]
enum MorphismCmd {
    /// Pre-morphism and morphism conditions, with a flipped identification if any.
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum OrderCmd {
    /// Total order of a labeled tree, or of a tree with `--tips`.
    Compute {
        file: PathBuf,
        /// Comma-separated tip order for an unlabeled tree.
        #[arg(long, value_delimiter = ',')]
        tips: Option<Vec<Vertex>>,
    },
}

#[derive(Subcommand)]
enum AutCmd {
    /// Group order, generators, midpoint, level-one points and stabilizers.
    Analyze { file: PathBuf },
}

#[derive(Subcommand)]
enum MobiusCmd {
    /// KAK decomposition `g = u D(a) v`.
    Decompose {
        /// Entries `a,b,c,d`, each real or complex such as `1+2i`.
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
    },
    /// Classify a finite subgroup.
    Classify {
        /// A JSON file with `elements` or `generators`, or a name such as
        /// `C5`, `D4`, `tetrahedral`, `octahedral`, `icosahedral`.
        #[arg(long)]
        group: String,
    },
}

#[derive(Subcommand)]
enum ModuliCmd {
    /// Multi-cross-ratio coordinates of a configuration.
    Chart { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    Inclusion,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum EnergyCmd {
    /// Energy of `h ∘ D(a_n)` on `B(R)` for `a_n = 2^-n`.
    Experiment {
        #[arg(long, value_enum, default_value = "inclusion")]
        map: MapKind,
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long = "N", default_value_t = 256)]
        resolution: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Directory for `experiment.json` and `experiment.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 8)]
    max_vertices: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "N", default_value_t = 256)]
    resolution: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Directory for `verify.json` and `verify.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Trees(TreesCmd::Enumerate { n, stabilize }) => trees_enumerate(n, stabilize),
        Command::Morphism(MorphismCmd::Check { file }) => morphism_check(&file),
        Command::Order(OrderCmd::Compute { file, tips }) => order_compute(&file, tips),
        Command::Aut(AutCmd::Analyze { file }) => aut_analyze(&file),
        Command::Mobius(MobiusCmd::Decompose { matrix }) => mobius_decompose(&matrix),
        Command::Mobius(MobiusCmd::Classify { group }) => mobius_classify(&group),
        Command::Moduli(ModuliCmd::Chart { file }) => moduli_chart(&file),
        Command::Energy(EnergyCmd::Experiment { map, radius, steps, resolution, format, out }) => {
            energy_experiment(map, radius, steps, resolution, format, out.as_deref())
        }
        Command::Verify(args) => run_verify(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("NTL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or(format!("NTL_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Writes to stdout; a closed pipe (as under `| head`) is not an error.
fn print_out(text: &str) -> Outcome {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(value: &impl Serialize) -> Outcome {
    print_out(&format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn trees_enumerate(n: usize, stabilize: bool) -> Outcome {
    if n == 0 || n > MAX_ENUMERATED_VERTICES {
        return Err(Failure::Usage(format!("--n must be in 1..={MAX_ENUMERATED_VERTICES}")));
    }
    let trees = enumerate_by_size(n)?.pop().unwrap_or_default();
    let items: Vec<Value> = trees
        .iter()
        .map(|t| {
            let mut v = json!(TreeJson::from_tree(t));
            if stabilize {
                let lt = minimal_stabilizations(t).remove(0);
                v["stabilization"] = json!(LabeledTreeJson::from_labeled(&lt));
            }
            v
        })
        .collect();
    emit(&json!({ "schema_version": SCHEMA_VERSION, "n": n, "count": items.len(), "trees": items }))
}

fn morphism_check(file: &Path) -> Outcome {
    let m = serde_json::from_str::<MorphismJson>(&read_input(file)?)?.to_morphism()?;
    let witness = if m.is_premorphism() { has_flipped_identification(&m)?.map(|w| w.chain) } else { None };
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "premorphism": m.is_premorphism(),
        "morphism": m.is_morphism(),
        "flipped_witness": witness,
    }))
}

fn order_compute(file: &Path, tips: Option<Vec<Vertex>>) -> Outcome {
    let text = read_input(file)?;
    let (order, special) = match tips {
        Some(tips) => {
            let t = serde_json::from_str::<TreeJson>(&text)?.to_tree()?;
            (total_order_from_tip_order(&t, &tips)?, BTreeMap::new())
        }
        None => {
            let lt = serde_json::from_str::<LabeledTreeJson>(&text)?.to_labeled()?;
            let lo = order_from_labeling(&lt)?;
            (lo.order, lo.special_points)
        }
    };
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "ordered_tips": order.ordered_tips(),
        "vertex_order": order.vertex_order(),
        "edge_order": order.edge_order(),
        "special_points": special,
    }))
}

fn aut_analyze(file: &Path) -> Outcome {
    let t = serde_json::from_str::<TreeJson>(&read_input(file)?)?.to_tree()?;
    let group = automorphism_group(&t)?;
    let generators: Vec<_> = group.generators().iter().map(|p| p.to_vertex_map(&t)).collect();
    let mut stabilizers = BTreeMap::new();
    for &v in t.vertices() {
        stabilizers.insert(
            v,
            json!({
                "structure": decompose_stabilizer(&t, v)?,
                "realizable_report": realizable_symmetry_report(&t, v)?,
            }),
        );
    }
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "order": group.order(),
        "generators": generators,
        "involution_midpoint": involution_midpoint(&t)?,
        "level_one_points": level_one_points(&t),
        "stabilizers": stabilizers,
    }))
}

fn mobius_decompose(matrix: &str) -> Outcome {
    let g = parse_matrix(matrix)?;
    let k = kak_decompose(&g);
    emit(&json!({ "schema_version": SCHEMA_VERSION, "u": k.u, "a": k.a, "v": k.v, "residual": k.residual(&g) }))
}

fn named_group(name: &str) -> Option<FiniteGroupKind> {
    let lower = name.to_ascii_lowercase();
    let indexed = |prefix: &str| lower.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok());
    match lower.as_str() {
        "t" | "tetrahedral" => Some(FiniteGroupKind::Tetrahedral),
        "o" | "octahedral" => Some(FiniteGroupKind::Octahedral),
        "i" | "icosahedral" => Some(FiniteGroupKind::Icosahedral),
        _ => indexed("c").map(FiniteGroupKind::Cyclic).or_else(|| indexed("d").map(FiniteGroupKind::Dihedral)),
    }
}

fn mobius_classify(group: &str) -> Outcome {
    let sample = match named_group(group) {
        Some(kind) if !Path::new(group).exists() => standard_finite_subgroup(kind)?,
        _ => {
            let v: Value = serde_json::from_str(&read_input(Path::new(group))?)?;
            let list = |key: &str| -> Result<Option<Vec<Mobius>>, Failure> {
                v.get(key).map(|x| serde_json::from_value(x.clone())).transpose().map_err(Failure::from)
            };
            match (list("elements")?, list("generators")?) {
                (Some(elements), _) => FiniteSubgroupSample::new(elements)?,
                (None, Some(gens)) => FiniteSubgroupSample::saturate(&gens)?,
                (None, None) => return Err(Failure::Usage("group file needs \"elements\" or \"generators\"".into())),
            }
        }
    };
    let c = classify_finite_subgroup(&sample)?;
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "kind": c.kind,
        "order": c.order,
        "element_orders": c.element_orders,
    }))
}

fn moduli_chart(file: &Path) -> Outcome {
    let config = serde_json::from_str::<ConfigJson>(&read_input(file)?)?.to_config()?;
    emit(&chart_to_json(&chart(&config)?))
}

fn write_outputs(out: &Path, stem: &str, json_text: &str, csv_text: &str) -> Outcome {
    fs::create_dir_all(out)?;
    fs::write(out.join(format!("{stem}.json")), format!("{json_text}\n"))?;
    fs::write(out.join(format!("{stem}.csv")), csv_text)?;
    Ok(())
}

fn energy_experiment(map: MapKind, radius: f64, steps: usize, n: usize, format: Format, out: Option<&Path>) -> Outcome {
    let h = match map {
        MapKind::Inclusion => sample_map(inclusion, n)?,
        MapKind::Constant => sample_map(|_| vec![0.0, 0.0, 1.0], n)?,
    };
    let cfg = PropernessExperimentConfig { radius, ..PropernessExperimentConfig::standard(steps, n) };
    let report = properness_experiment(&h, &cfg)?;
    let json_text = serde_json::to_string_pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "map": match map { MapKind::Inclusion => "inclusion", MapKind::Constant => "constant" },
        "radius": radius,
        "resolution": n,
        "report": report,
    }))?;
    let csv_text = report.to_csv();
    if let Some(dir) = out {
        write_outputs(dir, "experiment", &json_text, &csv_text)?;
    }
    match format {
        Format::Json => print_out(&format!("{json_text}\n"))?,
        Format::Csv => print_out(&csv_text)?,
    }
    if report.verdict == Verdict::Fail {
        return Err(Failure::Check("experiment verdict: fail".into()));
    }
    Ok(())
}

fn verify_csv(report: &verify::VerificationReport) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "status", "claim", "detail"])?;
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        };
        w.write_record([c.id, status, c.claim, &c.detail])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?)
}

fn run_verify(args: &VerifyArgs) -> Outcome {
    let cfg = VerifyConfig { max_vertices: args.max_vertices, seed: args.seed, resolution: args.resolution };
    let report = verify::run(&cfg)?;
    let json_text = serde_json::to_string_pretty(&report)?;
    let csv_text = verify_csv(&report)?;
    if let Some(dir) = &args.out {
        write_outputs(dir, "verify", &json_text, &csv_text)?;
    }
    match args.format {
        Format::Json => print_out(&format!("{json_text}\n"))?,
        Format::Csv => print_out(&csv_text)?,
    }
    if !report.passed() {
        let failed: Vec<&str> = report.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.id).collect();
        return Err(Failure::Check(format!("verification failed: {}", failed.join(", "))));
    }
    Ok(())
}
