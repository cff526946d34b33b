//! Command-line driver for the starg library: synthetic regression
//! experiments, factorization discovery, per-irrep analysis, file-based
//! tensor algebra, and group/irrep verification.
//!
//! Every experiment command writes its artifacts (a JSON report plus
//! plot-ready CSV data) into the `--out` directory and prints a one-line
//! summary. Algebra commands read and write the tensor JSON format
//! (`{"dims": [rows, cols, n], "group": "<spec>", "data": [...]}`). Reports
//! carry `"schema": 1` and are byte-identical across reruns of the same
//! configuration except for their wall-clock field.
//!
//! Exit codes: 0 on success, 1 on contract violations (bad arguments,
//! malformed files), 2 on numerical failures, 64 on unusable command lines.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use starg::error::{Error, Result};
use starg::{
    build_group, dipole_vector, discover_tensor, factorizations, fold_product_batch,
    fourier_blocks, gen_discovery_dataset, gen_octahedral_dataset, gen_product_dataset,
    gen_synthetic_cyclic, irrep_table, parse_qm9_xyz, per_irrep_analysis, run_pipeline,
    starg_product, starg_svd, starg_transpose, verify_group, verify_irreps, DiscoveryReport,
    FactorSide, GTensor, GroupSpec, IrrepReport, LabeledDataset, PipelineReport, SampleBatch,
    DEFAULT_LAMBDA_GRID, QM9_PROPERTY_NAMES,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

const EXIT_CONTRACT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Report format version stamped on every JSON artifact this binary
/// assembles itself; library reports carry their own copy.
const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "starg",
    version,
    about = "Group-algebraic tensor experiments and algebra operations",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regression on synthetic rotationally symmetric molecules.
    ///
    /// Generates molecules with exact cyclic symmetry (the first seed also
    /// seeds the generator), fits the invariant-feature ridge pipeline once
    /// per seed, and reports held-out accuracy and rotation variance.
    Synth {
        /// Number of molecules to generate.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Product-group study: coupled-frequency targets and their ablations.
    ///
    /// Generates tensors over Z6xZ4 whose target rides mostly on coupled
    /// frequency cells, then fits four readings of the same data: the
    /// product group, the plain cyclic Z24 reinterpretation, and each
    /// factor alone with the other folded into rows. Also emits a 2-D
    /// frequency map of cell power and target correlation.
    Product {
        /// Number of tensors to generate.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Symmetry-structure discovery over candidate groups.
    ///
    /// Generates tensors planted with Z3xZ8 structure and scores every
    /// candidate reading of the group axis by fit quality and invariance.
    Discover {
        /// Number of tensors to generate.
        #[arg(long)]
        samples: Option<usize>,
        /// Comma-separated candidate group specs; defaults to every
        /// two-factor factorization of the group axis length.
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<String>>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Per-irrep analysis of octahedral molecules.
    ///
    /// Generates asymmetric molecules with scalar and vector targets,
    /// regresses every target on each irrep channel alone, and emits the
    /// score heatmap.
    Irrep {
        /// Number of molecules to generate.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Decompose a tensor file and report its spectrum.
    Svd {
        /// Tensor JSON file to decompose.
        #[arg(long)]
        input: PathBuf,
        /// Also truncate to this many leading tubes and write the result.
        #[arg(long)]
        rank: Option<usize>,
        /// Relative tube-norm tolerance for the reported numerical rank.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Directory reports are written into.
        #[arg(long, default_value = "starg-out")]
        out: PathBuf,
    },
    /// Multiply two tensor files.
    Multiply {
        /// Left operand, tensor JSON.
        #[arg(long)]
        a: PathBuf,
        /// Right operand, tensor JSON.
        #[arg(long)]
        b: PathBuf,
        /// Where to write the product; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Transpose a tensor file.
    Transpose {
        /// Input tensor JSON.
        #[arg(long)]
        input: PathBuf,
        /// Where to write the transpose; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Verify group axioms and irrep identities for one group.
    Verify {
        /// Group spec to verify, e.g. Z12, D4, S3, Q8, K4, O, Z6xZ4.
        #[arg(long)]
        group: String,
        /// Include the full irrep table (dims, labels, matrices) in the
        /// report.
        #[arg(long)]
        dump_irreps: bool,
    },
    /// Parse xyz files and report atoms, properties, and dipole.
    ParseXyz {
        /// One or more xyz files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Flags shared by the experiment commands. Every flag falls back to the
/// `--config` file, then to a built-in default.
#[derive(Args)]
struct RunOpts {
    /// Group spec, e.g. Z12, D4, S3, Q8, K4, O, Z6xZ4.
    #[arg(long)]
    group: Option<String>,
    /// Comma-separated split seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Weight on fit quality versus invariance in discovery scores.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated ridge penalty grid.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Directory reports are written into.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying defaults for the flags above plus "samples";
    /// unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// On-disk form of [`RunOpts`]. Explicit flags win over these values.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    group: Option<String>,
    seeds: Option<Vec<u64>>,
    alpha: Option<f64>,
    lambda_grid: Option<Vec<f64>>,
    out: Option<PathBuf>,
    samples: Option<usize>,
}

/// Fully resolved run settings: flag, else config, else default.
struct Settings {
    group: Option<String>,
    seeds: Vec<u64>,
    alpha: f64,
    lambda_grid: Vec<f64>,
    out: PathBuf,
    samples: usize,
}

fn resolve(opts: &RunOpts, samples: Option<usize>, default_samples: usize) -> Result<Settings> {
    let cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Error::contract(format!("bad config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let seeds = opts.seeds.clone().or(cfg.seeds).unwrap_or_else(|| vec![1, 2, 3]);
    if seeds.is_empty() {
        return Err(Error::contract("seed list is empty"));
    }
    let alpha = opts.alpha.or(cfg.alpha).unwrap_or(0.5);
    let lambda_grid = opts
        .lambda_grid
        .clone()
        .or(cfg.lambda_grid)
        .unwrap_or_else(|| DEFAULT_LAMBDA_GRID.to_vec());
    if lambda_grid.is_empty() {
        return Err(Error::contract("lambda grid is empty"));
    }
    Ok(Settings {
        group: opts.group.clone().or(cfg.group),
        seeds,
        alpha,
        lambda_grid,
        out: opts.out.clone().or(cfg.out).unwrap_or_else(|| PathBuf::from("starg-out")),
        samples: samples.or(cfg.samples).unwrap_or(default_samples),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Numerical(_) => ExitCode::from(EXIT_NUMERICAL),
                _ => ExitCode::from(EXIT_CONTRACT),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    apply_thread_cap()?;
    match cli.command {
        Command::Synth { samples, run } => cmd_synth(&resolve(&run, samples, 1000)?),
        Command::Product { samples, run } => cmd_product(&resolve(&run, samples, 1000)?),
        Command::Discover { samples, candidates, run } => {
            cmd_discover(&resolve(&run, samples, 600)?, candidates.as_deref())
        }
        Command::Irrep { samples, run } => cmd_irrep(&resolve(&run, samples, 2000)?),
        Command::Svd { input, rank, tol, out } => cmd_svd(&input, rank, tol, &out),
        Command::Multiply { a, b, output } => cmd_multiply(&a, &b, output.as_deref()),
        Command::Transpose { input, output } => cmd_transpose(&input, output.as_deref()),
        Command::Verify { group, dump_irreps } => cmd_verify(&group, dump_irreps),
        Command::ParseXyz { files } => cmd_parse_xyz(&files),
    }
}

/// Applies the `STARG_THREADS` cap before any parallel work starts. An unset
/// variable leaves the pool at its default size; a malformed one is a
/// contract error rather than a silent ignore.
fn apply_thread_cap() -> Result<()> {
    match std::env::var("STARG_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::contract(format!("STARG_THREADS must be a positive integer, got {v:?}")))?;
            if n == 0 {
                return Err(Error::contract("STARG_THREADS must be at least 1"));
            }
            starg::parallel::set_thread_cap(n);
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(Error::contract(format!("STARG_THREADS is not readable: {e}"))),
    }
}

// ---------------------------------------------------------------------------
// Experiment commands
// ---------------------------------------------------------------------------

fn cmd_synth(s: &Settings) -> Result<()> {
    let spec: GroupSpec = s.group.as_deref().unwrap_or("Z12").parse()?;
    let n_group = match spec {
        GroupSpec::Cyclic(n) => n,
        _ => {
            return Err(Error::contract(format!(
                "synth generates cyclically symmetric molecules; got group {spec}"
            )))
        }
    };
    let (_, dataset) = gen_synthetic_cyclic(s.samples, n_group, s.seeds[0])?;
    let y = expect_target(&dataset, "target")?;
    let (report, _) = run_pipeline(&dataset.batch, y, "target", &s.seeds, &s.lambda_grid)?;

    write_file(&s.out, "synth_report.json", &pretty(&serde_json::to_value(&report)?))?;
    write_file(&s.out, "synth_seeds.csv", &seeds_csv(&report))?;
    println!(
        "synth {spec}: {} samples, {} seeds, mean test r2 = {:.6}, rotation variance = {:.3e}",
        s.samples,
        s.seeds.len(),
        report.mean_test_r2,
        report.mean_rotation_variance
    );
    Ok(())
}

fn cmd_product(s: &Settings) -> Result<()> {
    let expected = GroupSpec::product(GroupSpec::Cyclic(6), GroupSpec::Cyclic(4));
    reject_group_override(s, &expected, "product")?;
    let dataset = gen_product_dataset(s.samples, s.seeds[0])?;
    let y = expect_target(&dataset, "target")?;

    let product = run_pipeline(&dataset.batch, y, "target", &s.seeds, &s.lambda_grid)?.0;
    let plain = dataset.batch.reinterpret(&GroupSpec::Cyclic(24))?;
    let z24 = run_pipeline(&plain, y, "target", &s.seeds, &s.lambda_grid)?.0;
    let left = fold_product_batch(&dataset.batch, FactorSide::Left)?;
    let z6 = run_pipeline(&left, y, "target", &s.seeds, &s.lambda_grid)?.0;
    let right = fold_product_batch(&dataset.batch, FactorSide::Right)?;
    let z4 = run_pipeline(&right, y, "target", &s.seeds, &s.lambda_grid)?.0;

    let report = json!({
        "schema": SCHEMA,
        "samples": s.samples,
        "seeds": s.seeds,
        "readings": [
            reading_entry("Z6xZ4", &product),
            reading_entry("Z24", &z24),
            reading_entry("Z6", &z6),
            reading_entry("Z4", &z4),
        ],
    });
    write_file(&s.out, "product_report.json", &pretty(&report))?;
    write_file(&s.out, "product_frequency_map.csv", &frequency_map_csv(&dataset.batch, y)?)?;
    println!(
        "product: {} samples, test r2 by reading: Z6xZ4 = {:.4}, Z24 = {:.4}, Z6 = {:.4}, Z4 = {:.4}",
        s.samples, product.mean_test_r2, z24.mean_test_r2, z6.mean_test_r2, z4.mean_test_r2
    );
    Ok(())
}

fn reading_entry(name: &str, report: &PipelineReport) -> Value {
    json!({
        "reading": name,
        "mean_test_r2": report.mean_test_r2,
        "mean_rotation_variance": report.mean_rotation_variance,
        "report": report,
    })
}

fn cmd_discover(s: &Settings, candidates: Option<&[String]>) -> Result<()> {
    let expected = GroupSpec::product(GroupSpec::Cyclic(3), GroupSpec::Cyclic(8));
    reject_group_override(s, &expected, "discover")?;
    let dataset = gen_discovery_dataset(s.samples, s.seeds[0])?;
    let y = expect_target(&dataset, "target")?;
    let specs: Vec<GroupSpec> = match candidates {
        Some(list) => list.iter().map(|c| c.parse()).collect::<Result<_>>()?,
        None => factorizations(dataset.batch.group_order())?,
    };
    let report = discover_tensor(&dataset.batch, y, &specs, &s.seeds, &s.lambda_grid, s.alpha)?;

    write_file(&s.out, "discover_report.json", &pretty(&serde_json::to_value(&report)?))?;
    write_file(&s.out, "discover_ranked.csv", &discover_csv(&report))?;
    match report.best() {
        Some(best) => println!(
            "discover: {} samples, {} candidates, best = {} (score {:.6})",
            s.samples,
            report.candidates.len(),
            best.spec,
            best.score.unwrap_or(f64::NAN)
        ),
        None => println!("discover: no candidate could be evaluated"),
    }
    Ok(())
}

fn cmd_irrep(s: &Settings) -> Result<()> {
    reject_group_override(s, &GroupSpec::Octahedral, "irrep")?;
    let (_, dataset) = gen_octahedral_dataset(s.samples, s.seeds[0])?;
    let report = per_irrep_analysis(&dataset.batch, &dataset.targets, &s.seeds, &s.lambda_grid)?;

    let mut argmax = serde_json::Map::new();
    let mut t1_over_a1 = serde_json::Map::new();
    for target in &report.targets {
        argmax.insert(target.clone(), json!(report.argmax(target)));
        t1_over_a1.insert(target.clone(), json!(report.ratio(target, "T1", "A1")));
    }
    let full = json!({
        "schema": SCHEMA,
        "report": report,
        "argmax": argmax,
        "t1_over_a1": t1_over_a1,
    });
    write_file(&s.out, "irrep_report.json", &pretty(&full))?;
    write_file(&s.out, "irrep_heatmap.csv", &report.to_csv())?;
    let best: Vec<String> = report
        .targets
        .iter()
        .map(|t| format!("{t} -> {}", report.argmax(t).unwrap_or("?")))
        .collect();
    println!("irrep O24: {} samples, argmax per target: {}", s.samples, best.join(", "));
    Ok(())
}

/// Errors when an explicit `--group` contradicts the group a generator is
/// hard-wired to.
fn reject_group_override(s: &Settings, expected: &GroupSpec, command: &str) -> Result<()> {
    if let Some(text) = &s.group {
        let spec: GroupSpec = text.parse()?;
        if spec != *expected {
            return Err(Error::contract(format!(
                "{command} generates data over {expected}; got --group {spec}"
            )));
        }
    }
    Ok(())
}

fn expect_target<'a>(dataset: &'a LabeledDataset, name: &str) -> Result<&'a [f64]> {
    dataset
        .target(name)
        .ok_or_else(|| Error::contract(format!("dataset has no target named {name:?}")))
}

/// Per-seed rows of a pipeline report.
fn seeds_csv(report: &PipelineReport) -> String {
    let mut out =
        String::from("seed,lambda,val_r2,test_r2,test_rmse,rotation_variance,n_train,n_val,n_test\n");
    for r in &report.seeds {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.lambda,
            r.val_r2,
            r.test_r2,
            r.test_rmse,
            r.rotation_variance,
            r.n_train,
            r.n_val,
            r.n_test
        ));
    }
    out
}

fn discover_csv(report: &DiscoveryReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("rank,spec,r2,rotation_variance,score,note\n");
    for (i, c) in report.candidates.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            c.spec,
            opt(c.r2),
            opt(c.rotation_variance),
            opt(c.score),
            c.note.as_deref().unwrap_or_default()
        ));
    }
    out
}

/// Mean signal power and target correlation of every frequency cell of a
/// product-of-cyclics batch, as plot-ready CSV. Cells are located by their
/// irrep labels, so the table's own ordering is authoritative.
fn frequency_map_csv(batch: &SampleBatch, y: &[f64]) -> Result<String> {
    let (n1, n2) = match &batch.group.spec {
        GroupSpec::Product(l, r) => match (l.as_ref(), r.as_ref()) {
            (GroupSpec::Cyclic(a), GroupSpec::Cyclic(b)) => (*a, *b),
            _ => {
                return Err(Error::contract(
                    "frequency map needs a product of two cyclic groups",
                ))
            }
        },
        _ => {
            return Err(Error::contract(
                "frequency map needs a product of two cyclic groups",
            ))
        }
    };
    let table = Arc::new(irrep_table(batch.group.clone())?);
    let mut powers = vec![vec![0.0f64; batch.len()]; table.irreps.len()];
    for (s, sample) in batch.samples.iter().enumerate() {
        let fb = fourier_blocks(sample, &table)?;
        for (k, cell) in powers.iter_mut().enumerate() {
            let mut total = 0.0;
            for i in 0..sample.rows {
                for j in 0..sample.cols {
                    total += fb.block_power(k, i, j);
                }
            }
            cell[s] = total;
        }
    }
    let mut out = String::from("f1,f2,mean_power,corr_target\n");
    for f1 in 0..n1 {
        for f2 in 0..n2 {
            let label = format!("(k={f1},k={f2})");
            let k = table
                .irreps
                .iter()
                .position(|ir| ir.label == label)
                .ok_or_else(|| Error::contract(format!("product table has no irrep {label:?}")))?;
            let mean = powers[k].iter().sum::<f64>() / batch.len() as f64;
            out.push_str(&format!("{f1},{f2},{mean},{}\n", pearson(&powers[k], y)));
        }
    }
    Ok(out)
}

/// Pearson correlation; zero when either side has no variance.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Algebra commands
// ---------------------------------------------------------------------------

fn cmd_svd(input: &Path, rank: Option<usize>, tol: f64, out: &Path) -> Result<()> {
    let tensor = GTensor::read_json_file(input)?;
    let table = Arc::new(irrep_table(tensor.group.clone())?);
    let svd = starg_svd(&tensor, &table)?;

    let mut spectra = String::from("irrep,index,sigma\n");
    for (k, sigmas) in svd.per_irrep_sigmas.iter().enumerate() {
        for (i, sigma) in sigmas.iter().enumerate() {
            spectra.push_str(&format!("{},{i},{sigma}\n", table.irreps[k].label));
        }
    }
    std::fs::create_dir_all(out)?;
    let spectra_path = out.join("svd_spectra.csv");
    std::fs::write(&spectra_path, spectra)?;

    let mut report = json!({
        "schema": SCHEMA,
        "input": input.display().to_string(),
        "dims": [tensor.rows, tensor.cols, tensor.group.order],
        "group": tensor.group.spec.to_string(),
        "tube_norms": svd.tube_norms,
        "tol": tol,
        "rank": svd.rank(tol),
    });
    if let Some(k) = rank {
        let truncated = svd.truncate(k)?;
        let path = out.join(format!("svd_rank{k}.json"));
        truncated.reconstruct()?.write_json_file(&path)?;
        report["kept"] = json!(k);
        report["truncation_error"] = json!(svd.truncation_error(k));
        report["truncated"] = json!(path.display().to_string());
    }
    let report_path = out.join("svd_report.json");
    std::fs::write(&report_path, pretty(&report))?;
    println!(
        "svd {}: rank {} of {} tubes, wrote {} and {}",
        input.display(),
        svd.rank(tol),
        svd.tube_norms.len(),
        report_path.display(),
        spectra_path.display()
    );
    Ok(())
}

fn cmd_multiply(a: &Path, b: &Path, output: Option<&Path>) -> Result<()> {
    let left = GTensor::read_json_file(a)?;
    let right = GTensor::read_json_file(b)?;
    if left.group.spec != right.group.spec {
        return Err(Error::contract(format!(
            "operands live over different groups: {} vs {}",
            left.group.spec, right.group.spec
        )));
    }
    let table = Arc::new(irrep_table(left.group.clone())?);
    emit_tensor(&starg_product(&left, &right, &table)?, output)
}

fn cmd_transpose(input: &Path, output: Option<&Path>) -> Result<()> {
    emit_tensor(&starg_transpose(&GTensor::read_json_file(input)?), output)
}

fn emit_tensor(t: &GTensor, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            t.write_json_file(path)?;
            println!("wrote {}", path.display());
        }
        None => println!("{}", t.to_json_string()?),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Verification and ingestion commands
// ---------------------------------------------------------------------------

fn cmd_verify(group: &str, dump_irreps: bool) -> Result<()> {
    let spec: GroupSpec = group.parse()?;
    let g = Arc::new(build_group(&spec)?);
    let axioms = verify_group(&g);
    let table = Arc::new(irrep_table(g.clone())?);
    let irreps = verify_irreps(&table);
    let pass = axioms.all_pass() && irreps.all_pass();

    let mut report = json!({
        "schema": SCHEMA,
        "group": spec.to_string(),
        "order": g.order,
        "axioms": {
            "identity_ok": axioms.identity_ok,
            "inverses_ok": axioms.inverses_ok,
            "associativity_ok": axioms.associativity_ok,
            "permutation_slices_ok": axioms.permutation_slices_ok,
            "rotations_ok": axioms.rotations_ok,
            "counterexample": axioms.counterexample,
        },
        "irreps": {
            "count": table.irreps.len(),
            "dim_sum_sq": irreps.dim_sum_sq,
            "identity_residual": irreps.identity_residual,
            "homomorphism_residual": irreps.homomorphism_residual,
            "unitarity_residual": irreps.unitarity_residual,
            "character_orthogonality_residual": irreps.character_orthogonality_residual,
            "fourier_residual": irreps.fourier_residual,
            "tolerance": IrrepReport::TOL,
        },
        "pass": pass,
    });
    if dump_irreps {
        report["irrep_table"] = table.to_json();
    }
    println!("{}", pretty(&report));
    if pass {
        Ok(())
    } else {
        Err(Error::numerical(format!("verification failed for {spec}")))
    }
}

fn cmd_parse_xyz(files: &[PathBuf]) -> Result<()> {
    let mut entries = Vec::with_capacity(files.len());
    for path in files {
        let mol = parse_qm9_xyz(path)?;
        let dipole = match &mol.charges {
            Some(_) => {
                let d = dipole_vector(&mol)?;
                json!([d[0], d[1], d[2]])
            }
            None => Value::Null,
        };
        let properties = mol.properties.as_ref().map(|p| {
            let mut named = serde_json::Map::new();
            for (name, value) in QM9_PROPERTY_NAMES.iter().zip(p.values.iter()) {
                named.insert((*name).to_string(), json!(value));
            }
            json!({ "index": p.index, "values": named })
        });
        entries.push(json!({
            "file": path.display().to_string(),
            "atoms": mol.len(),
            "elements": mol.elements,
            "has_charges": mol.charges.is_some(),
            "properties": properties,
            "dipole": dipole,
        }));
    }
    println!("{}", pretty(&json!({ "schema": SCHEMA, "molecules": entries })));
    Ok(())
}

// ---------------------------------------------------------------------------
// Artifact helpers
// ---------------------------------------------------------------------------

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("report serialization cannot fail")
}

fn write_file(out: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}
