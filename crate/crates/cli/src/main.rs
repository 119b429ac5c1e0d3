//! `arbormatch` command-line entry point.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use arbormatch::retrieval::{classify_row, parse_ratio, CorpusEntry};
use arbormatch::synth::{generate, SynthParams};
use arbormatch::{
    cost_matrix, evaluate, matching, morph_paths, par, CorpusIndex, DistanceMatrix, ElasticConfig,
    NeuronTree, Orientation, PathSet,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "arbormatch",
    version,
    about = "Elastic path-based distances between neuron reconstructions"
)]
struct Cli {
    /// Worker threads for distance computations (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// Keep the largest tree when a file has several root records.
    #[arg(long, global = true)]
    take_largest_root: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Elastic {
    /// Samples per path before comparison.
    #[arg(long, env = "ARBORMATCH_RHO", default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
    rho: u32,

    /// Offset in the hierarchy weight.
    #[arg(long, env = "ARBORMATCH_LAMBDA", default_value_t = 1.0, value_parser = positive_f64)]
    lambda: f64,
}

impl Elastic {
    fn config(&self) -> ElasticConfig {
        ElasticConfig::default()
            .with_rho(self.rho as usize)
            .with_lambda(self.lambda)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate an SWC file and print a JSON summary.
    Parse {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rooted paths with concurrence and hierarchy, as JSON.
    Paths {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Neuron distance between two files.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        elastic: Elastic,
        /// Write the full path cost matrix (rows: paths of A) as CSV.
        #[arg(long)]
        per_path: Option<PathBuf>,
    },
    /// Optimal path assignment between two files, as JSON.
    Match {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        elastic: Elastic,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-frame CSV files morphing each matched path of A onto its partner in B.
    Morph {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        elastic: Elastic,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
        frames: u32,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// All-pairs distance matrix over the SWC files of a directory.
    Distmat {
        dir: PathBuf,
        #[command(flatten)]
        elastic: Elastic,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-NN labels for every query neuron against a labeled cluster set.
    Classify {
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        /// Cached distances; computed from the manifests when absent.
        #[arg(long)]
        distances: Option<PathBuf>,
        #[command(flatten)]
        elastic: Elastic,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieval accuracy over repeated stratified cluster/test splits.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Cached distances; computed from the manifest when absent.
        #[arg(long)]
        distances: Option<PathBuf>,
        /// Cluster:test ratio such as 9:1, or a fraction.
        #[arg(long, default_value = "9:1", value_parser = ratio)]
        ratio: f64,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        repeats: u32,
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sweep the ratios 9:1 down to 1:9 instead of a single ratio.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        elastic: Elastic,
        /// Where to cache freshly computed distances.
        #[arg(long)]
        save_distances: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance and wall time for a list of sample counts, as CSV.
    BenchRho {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "25,50,100,200,400",
              value_parser = clap::value_parser!(u32).range(2..))]
        rho: Vec<u32>,
        #[arg(long, env = "ARBORMATCH_LAMBDA", default_value_t = 1.0, value_parser = positive_f64)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic synthetic corpus with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
        per_class: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated preset names (default: all).
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
    },
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn ratio(s: &str) -> Result<f64, String> {
    parse_ratio(s).map_err(|e| e.to_string())
}

/// Failure after argument parsing; always exit code 2.
#[derive(Debug)]
struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

type Res<T> = Result<T, DataError>;

fn in_file<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Res<T> {
    r.map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn file_id(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_tree(path: &Path, take_largest_root: bool) -> Res<NeuronTree> {
    let (tree, _) = NeuronTree::from_file(path, take_largest_root)?.collapse_duplicates();
    Ok(tree.translate_to_origin())
}

fn load(path: &Path, take_largest_root: bool) -> Res<PathSet> {
    Ok(PathSet::from_tree(
        file_id(path),
        &load_tree(path, take_largest_root)?,
    ))
}

fn load_as(path: &Path, id: &str, take_largest_root: bool) -> Res<PathSet> {
    Ok(PathSet::from_tree(id, &load_tree(path, take_largest_root)?))
}

fn pair_context<'a>(a: &'a Path, b: &'a Path) -> impl Fn(arbormatch::Error) -> DataError + 'a {
    move |e| DataError(format!("{} vs {}: {e}", a.display(), b.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => in_file(p, fs::write(p, text)),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Res<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

fn emit_matrix(out: Option<&Path>, d: &DistanceMatrix) -> Res<()> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    emit(out, &String::from_utf8(buf)?)
}

#[derive(Serialize)]
struct Summary {
    file: String,
    records: usize,
    vertices: usize,
    duplicates_collapsed: usize,
    root_id: i64,
    paths: usize,
    total_length: f64,
}

fn cmd_parse(file: &Path, take_largest_root: bool, out: Option<&Path>) -> Res<()> {
    let raw = NeuronTree::from_file(file, take_largest_root)?;
    let records = raw.len();
    let (tree, dropped) = raw.collapse_duplicates();
    let total_length = (0..tree.len())
        .filter_map(|v| {
            tree.parent(v)
                .map(|p| (tree.vertex(v).position - tree.vertex(p).position).norm())
        })
        .sum();
    emit_json(
        out,
        &Summary {
            file: file.display().to_string(),
            records,
            vertices: tree.len(),
            duplicates_collapsed: dropped,
            root_id: tree.vertex(tree.root()).id,
            paths: tree.leaves().len(),
            total_length,
        },
    )
}

#[derive(Serialize)]
struct MatchReport<'a> {
    a: &'a str,
    b: &'a str,
    orientation: Orientation,
    pairs: Vec<(usize, usize, f64)>,
    unmatched: &'a [usize],
    total: f64,
}

fn cmd_distance(
    a: &Path,
    b: &Path,
    cfg: &ElasticConfig,
    per_path: Option<&Path>,
    take_largest_root: bool,
) -> Res<()> {
    let (pa, pb) = (load(a, take_largest_root)?, load(b, take_largest_root)?);
    let cm = cost_matrix(&pa, &pb, cfg).map_err(pair_context(a, b))?;
    let asg = matching::assign(&cm)?;
    if let Some(path) = per_path {
        let mut w = in_file(path, csv::Writer::from_path(path))?;
        let mut header = vec!["path".to_string()];
        header.extend((0..pb.n()).map(|j| j.to_string()));
        in_file(path, w.write_record(&header))?;
        for i in 0..pa.n() {
            let mut row = vec![i.to_string()];
            row.extend((0..pb.n()).map(|j| format!("{:?}", cm.get_ab(i, j))));
            in_file(path, w.write_record(&row))?;
        }
        in_file(path, w.flush())?;
    }
    println!("{:?}", asg.total);
    Ok(())
}

fn cmd_match(
    a: &Path,
    b: &Path,
    cfg: &ElasticConfig,
    out: Option<&Path>,
    take_largest_root: bool,
) -> Res<()> {
    let (pa, pb) = (load(a, take_largest_root)?, load(b, take_largest_root)?);
    let (_, asg) = arbormatch::neuron_distance(&pa, &pb, cfg).map_err(pair_context(a, b))?;
    emit_json(
        out,
        &MatchReport {
            a: &pa.neuron_id,
            b: &pb.neuron_id,
            orientation: asg.orientation,
            pairs: asg.pairs.iter().map(|p| (p.a, p.b, p.cost)).collect(),
            unmatched: &asg.unmatched,
            total: asg.total,
        },
    )
}

fn cmd_morph(
    a: &Path,
    b: &Path,
    cfg: &ElasticConfig,
    out: &Path,
    take_largest_root: bool,
) -> Res<()> {
    let (pa, pb) = (load(a, take_largest_root)?, load(b, take_largest_root)?);
    let (_, asg) = arbormatch::neuron_distance(&pa, &pb, cfg).map_err(pair_context(a, b))?;
    let sequences = par::map_range(asg.pairs.len(), |k| {
        let p = asg.pairs[k];
        morph_paths(&pa.paths[p.a], &pb.paths[p.b], cfg)
    });
    let sequences = sequences
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(pair_context(a, b))?;
    in_file(out, fs::create_dir_all(out))?;
    for f in 0..cfg.frames {
        let path = out.join(format!("frame_{f:03}.csv"));
        let mut w = in_file(&path, csv::Writer::from_path(&path))?;
        in_file(
            &path,
            w.write_record(["frame", "path", "sample", "x", "y", "z"]),
        )?;
        for (pair, frames) in asg.pairs.iter().zip(&sequences) {
            for (s, p) in frames[f].iter().enumerate() {
                let row = [
                    f.to_string(),
                    pair.a.to_string(),
                    s.to_string(),
                    format!("{:?}", p.x),
                    format!("{:?}", p.y),
                    format!("{:?}", p.z),
                ];
                in_file(&path, w.write_record(&row))?;
            }
        }
        in_file(&path, w.flush())?;
    }
    log::info!(
        "wrote {} frames for {} matched paths to {}",
        cfg.frames,
        asg.pairs.len(),
        out.display()
    );
    Ok(())
}

fn swc_files(dir: &Path) -> Res<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = in_file(dir, fs::read_dir(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("swc")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(DataError(format!("{}: no .swc files", dir.display())));
    }
    Ok(files)
}

fn timed_matrix(
    rows: &[PathSet],
    cols: &[PathSet],
    cfg: &ElasticConfig,
    symmetric: bool,
) -> Res<DistanceMatrix> {
    let t0 = Instant::now();
    let d = DistanceMatrix::compute(rows, cols, cfg, symmetric)?;
    log::info!(
        "{}x{} distances in {:.2}s",
        rows.len(),
        cols.len(),
        t0.elapsed().as_secs_f64()
    );
    Ok(d)
}

fn load_corpus(index: &CorpusIndex, take_largest_root: bool) -> Res<Vec<PathSet>> {
    (0..index.len())
        .map(|i| load_as(&index.file(i), &index.entries[i].id, take_largest_root))
        .collect()
}

fn cmd_distmat(
    dir: &Path,
    cfg: &ElasticConfig,
    out: Option<&Path>,
    take_largest_root: bool,
) -> Res<()> {
    let sets = swc_files(dir)?
        .iter()
        .map(|f| load(f, take_largest_root))
        .collect::<Res<Vec<_>>>()?;
    emit_matrix(out, &timed_matrix(&sets, &sets, cfg, true)?)
}

fn read_manifest(path: &Path) -> Res<CorpusIndex> {
    let index = CorpusIndex::read_manifest(path)?;
    if index.is_empty() {
        return Err(DataError(format!("{}: empty manifest", path.display())));
    }
    Ok(index)
}

fn cached(path: &Path, rows: &[String], cols: &[String]) -> Res<DistanceMatrix> {
    let d = DistanceMatrix::read_path(path)?;
    in_file(path, d.select(rows, cols))
}

#[allow(clippy::too_many_arguments)]
fn cmd_classify(
    cluster: &Path,
    query: &Path,
    k: usize,
    distances: Option<&Path>,
    cfg: &ElasticConfig,
    out: Option<&Path>,
    take_largest_root: bool,
) -> Res<()> {
    let ci = read_manifest(cluster)?;
    let qi = read_manifest(query)?;
    let d = match distances {
        Some(p) => cached(p, &qi.ids(), &ci.ids())?,
        None => timed_matrix(
            &load_corpus(&qi, take_largest_root)?,
            &load_corpus(&ci, take_largest_root)?,
            cfg,
            false,
        )?,
    };
    let labels = ci.labels();
    let members: Vec<usize> = (0..ci.len()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "label", "predicted"])?;
    let mut correct = 0;
    for (q, entry) in qi.entries.iter().enumerate() {
        let predicted = in_file(query, classify_row(&d, q, &members, &labels, k))?;
        correct += usize::from(predicted == entry.label);
        w.write_record([entry.id.as_str(), entry.label.as_str(), predicted.as_str()])?;
    }
    log::info!("{correct}/{} queries match their manifest label", qi.len());
    emit(
        out,
        &String::from_utf8(w.into_inner().map_err(|e| DataError(e.to_string()))?)?,
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    manifest: &Path,
    distances: Option<&Path>,
    ratio: f64,
    repeats: usize,
    k: usize,
    seed: u64,
    full: bool,
    cfg: &ElasticConfig,
    save: Option<&Path>,
    out: Option<&Path>,
    take_largest_root: bool,
) -> Res<()> {
    let index = read_manifest(manifest)?;
    let ids = index.ids();
    let d = match distances {
        Some(p) => cached(p, &ids, &ids)?,
        None => {
            let sets = load_corpus(&index, take_largest_root)?;
            let d = timed_matrix(&sets, &sets, cfg, true)?;
            if let Some(p) = save {
                let f = in_file(p, fs::File::create(p))?;
                in_file(p, d.write_csv(f))?;
            }
            d
        }
    };
    let labels = index.labels();
    let run = |r: f64| in_file(manifest, evaluate(&d, &labels, r, repeats, k, seed));
    if full {
        let reports = (1..=9)
            .rev()
            .map(|c| run(c as f64 / 10.0))
            .collect::<Res<Vec<_>>>()?;
        for r in &reports {
            log::info!("ratio {:.1}: mean accuracy {:.4}", r.ratio, r.mean_accuracy);
        }
        emit_json(out, &reports)
    } else {
        let report = run(ratio)?;
        log::info!("mean accuracy {:.4}", report.mean_accuracy);
        emit_json(out, &report)
    }
}

fn cmd_bench_rho(
    a: &Path,
    b: &Path,
    rhos: &[u32],
    lambda: f64,
    out: Option<&Path>,
    take_largest_root: bool,
) -> Res<()> {
    let (pa, pb) = (load(a, take_largest_root)?, load(b, take_largest_root)?);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rho", "distance", "seconds"])?;
    for &rho in rhos {
        let cfg = ElasticConfig::default()
            .with_rho(rho as usize)
            .with_lambda(lambda);
        let t0 = Instant::now();
        let (d, _) = arbormatch::neuron_distance(&pa, &pb, &cfg).map_err(pair_context(a, b))?;
        let secs = t0.elapsed().as_secs_f64();
        w.write_record([rho.to_string(), format!("{d:?}"), format!("{secs:.6}")])?;
    }
    emit(
        out,
        &String::from_utf8(w.into_inner().map_err(|e| DataError(e.to_string()))?)?,
    )
}

fn cmd_synth(out: &Path, per_class: u32, seed: u64, classes: &[String]) -> Res<()> {
    let presets: Vec<(&str, SynthParams)> = if classes.is_empty() {
        SynthParams::presets()
    } else {
        classes
            .iter()
            .map(|c| {
                SynthParams::preset(c)
                    .map(|p| (c.as_str(), p))
                    .ok_or_else(|| DataError(format!("unknown synthetic class {c:?}")))
            })
            .collect::<Res<_>>()?
    };
    in_file(out, fs::create_dir_all(out))?;
    let mut entries = Vec::new();
    for (ci, (name, params)) in presets.iter().enumerate() {
        let base = SynthParams::presets()
            .iter()
            .position(|(n, _)| n == name)
            .unwrap_or(ci) as u64;
        for i in 0..per_class as u64 {
            let file = format!("{name}_{i:03}.swc");
            let s = seed
                .wrapping_mul(1_000_003)
                .wrapping_add(base * 100_000 + i);
            let path = out.join(&file);
            in_file(&path, fs::write(&path, generate(params, s).to_swc_string()))?;
            entries.push(CorpusEntry {
                id: file.clone(),
                relative_path: PathBuf::from(file),
                label: name.to_string(),
            });
        }
    }
    let manifest = out.join("manifest.csv");
    let index = CorpusIndex {
        entries,
        base: out.to_path_buf(),
    };
    in_file(&manifest, index.write_manifest(&manifest))?;
    log::info!("wrote {} neurons and {}", index.len(), manifest.display());
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    if let Some(n) = cli.threads {
        if !par::set_threads(n as usize) {
            log::warn!("--threads ignored: no configurable worker pool");
        }
    }
    let lr = cli.take_largest_root;
    match cli.command {
        Command::Parse { file, out } => cmd_parse(&file, lr, out.as_deref()),
        Command::Paths { file, out } => emit_json(out.as_deref(), &load(&file, lr)?),
        Command::Distance {
            a,
            b,
            elastic,
            per_path,
        } => cmd_distance(&a, &b, &elastic.config(), per_path.as_deref(), lr),
        Command::Match { a, b, elastic, out } => {
            cmd_match(&a, &b, &elastic.config(), out.as_deref(), lr)
        }
        Command::Morph {
            a,
            b,
            elastic,
            frames,
            out,
        } => {
            let cfg = ElasticConfig {
                frames: frames as usize,
                ..elastic.config()
            };
            cmd_morph(&a, &b, &cfg, &out, lr)
        }
        Command::Distmat { dir, elastic, out } => {
            cmd_distmat(&dir, &elastic.config(), out.as_deref(), lr)
        }
        Command::Classify {
            cluster,
            query,
            k,
            distances,
            elastic,
            out,
        } => cmd_classify(
            &cluster,
            &query,
            k as usize,
            distances.as_deref(),
            &elastic.config(),
            out.as_deref(),
            lr,
        ),
        Command::Evaluate {
            manifest,
            distances,
            ratio,
            repeats,
            k,
            seed,
            full,
            elastic,
            save_distances,
            out,
        } => cmd_evaluate(
            &manifest,
            distances.as_deref(),
            ratio,
            repeats as usize,
            k as usize,
            seed,
            full,
            &elastic.config(),
            save_distances.as_deref(),
            out.as_deref(),
            lr,
        ),
        Command::BenchRho {
            a,
            b,
            rho,
            lambda,
            out,
        } => cmd_bench_rho(&a, &b, &rho, lambda, out.as_deref(), lr),
        Command::Synth {
            out,
            per_class,
            seed,
            classes,
        } => cmd_synth(&out, per_class, seed, &classes),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
