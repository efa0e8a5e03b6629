//! The `shredsim` command line: sample walks, measure pair distances, run
//! experiment suites and export embedding geometry.
//!
//! Settings resolve as flags > TOML config file > defaults. Every command
//! writes a `manifest.json` next to its outputs listing each file with its
//! SHA-256 digest and the resolved settings.
//!
//! Exit codes: 0 success, 1 violated exact inequality or failed exact
//! check, 2 usage error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::slits_of;
use crate::error::{Error, Result};
use crate::excursion::sample_excursion;
use crate::experiments::{self, gap::measure_pairs, gap::sample_pairs, ExperimentReport};
use crate::heightvar::v_distance;
use crate::io::WalkFile;
use crate::map::build_map;
use crate::metrics::ProfileMode;
use crate::rng::{self, tag};
use crate::steps::StepLaw;

#[derive(Debug, Parser)]
#[command(name = "shredsim", version, about = "Causal random planar maps and the stable shredded sphere")]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample conditioned walks and write them as shredwalk files.
    Sample {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure D, D^up, D^down, D* and V between pairs of coded vertices.
    Measure {
        #[arg(long)]
        walk: PathBuf,
        #[arg(long)]
        pairs: Option<usize>,
        /// Measure every ordered pair instead of sampling.
        #[arg(long)]
        all_pairs: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment suite.
    Experiment {
        /// gap, dimension, identify, scaling, counterexample or words
        suite: String,
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        centers: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the embedding of a walk's map: edges, vertex positions, slits
    /// and, with --from/--to, a geodesic and a V witness.
    RenderData {
        #[arg(long)]
        walk: PathBuf,
        #[arg(long)]
        from: Option<usize>,
        #[arg(long)]
        to: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub trials: Option<usize>,
    pub pairs: Option<usize>,
    pub centers: Option<usize>,
    pub samples: Option<usize>,
    pub beta: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of one run, embedded in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub alpha: Vec<f64>,
    pub n: Vec<usize>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub pairs: Option<usize>,
    pub count: Option<usize>,
    pub centers: Option<usize>,
    pub samples: Option<usize>,
    pub beta: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub input: Option<PathBuf>,
    pub endpoints: Option<(usize, usize)>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunConfig,
    pub law: Option<StepLaw>,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_manifest(run: &RunConfig, law: Option<StepLaw>, files: &[PathBuf]) -> Result<PathBuf> {
    let mut entries = Vec::new();
    for f in files {
        let name = f.strip_prefix(&run.out).unwrap_or(f).to_string_lossy().into_owned();
        entries.push(ManifestEntry { path: name, sha256: sha256_file(f)? });
    }
    let manifest = Manifest { run: run.clone(), law, files: entries };
    let path = run.out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::MalformedWalk(_) | Error::MalformedConfig(_) => 2,
        _ => 1,
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        if jobs == 0 {
            return Err(usage("--jobs must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out = |flag: Option<PathBuf>| flag.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Sample { alpha, n, seed, count, out: o } => {
            let run = RunConfig {
                command: "sample".into(),
                alpha: vec![alpha.or_else(|| file.alpha.as_ref().and_then(|a| a.first().copied())).unwrap_or(1.5)],
                n: vec![n.or_else(|| file.n.as_ref().and_then(|v| v.first().copied())).unwrap_or(1000)],
                seed: seed.or(file.seed).unwrap_or(1),
                count: Some(count.or(file.count).unwrap_or(1)),
                trials: None,
                pairs: None,
                centers: None,
                samples: None,
                beta: None,
                k: None,
                input: None,
                endpoints: None,
                out: out(o),
            };
            cmd_sample(&run)
        }
        Command::Measure { walk, pairs, all_pairs, seed, out: o } => {
            let run = RunConfig {
                command: "measure".into(),
                alpha: vec![],
                n: vec![],
                seed: seed.or(file.seed).unwrap_or(1),
                pairs: if all_pairs { None } else { Some(pairs.or(file.pairs).unwrap_or(100)) },
                trials: None,
                count: None,
                centers: None,
                samples: None,
                beta: None,
                k: None,
                input: Some(walk),
                endpoints: None,
                out: out(o),
            };
            cmd_measure(&run)
        }
        Command::Experiment { suite, alpha, n, trials, pairs, centers, samples, seed, beta, k, out: o } => {
            let run = RunConfig {
                command: format!("experiment {suite}"),
                alpha: alpha.or_else(|| file.alpha.clone()).unwrap_or_default(),
                n: n.or_else(|| file.n.clone()).unwrap_or_default(),
                seed: seed.or(file.seed).unwrap_or(1),
                trials: trials.or(file.trials),
                pairs: pairs.or(file.pairs),
                count: None,
                centers: centers.or(file.centers),
                samples: samples.or(file.samples),
                beta: beta.or(file.beta),
                k: k.or(file.k),
                input: None,
                endpoints: None,
                out: out(o),
            };
            cmd_experiment(&suite, &run)
        }
        Command::RenderData { walk, from, to, out: o } => {
            let run = RunConfig {
                command: "render-data".into(),
                alpha: vec![],
                n: vec![],
                seed: 0,
                trials: None,
                pairs: None,
                count: None,
                centers: None,
                samples: None,
                beta: None,
                k: None,
                input: Some(walk),
                endpoints: from.zip(to),
                out: out(o),
            };
            cmd_render_data(&run)
        }
    }
}

pub fn cmd_sample(run: &RunConfig) -> Result<i32> {
    let (alpha, n) = (run.alpha[0], run.n[0]);
    let law = StepLaw::stable(alpha)?;
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    std::fs::create_dir_all(&run.out)?;
    let count = run.count.unwrap_or(1);
    let mut files = Vec::new();
    for i in 0..count {
        let e = sample_excursion(&law, n, &mut rng::stream(run.seed, i as u64, tag::SAMPLE))?;
        let name = if count == 1 { "walk.txt".to_string() } else { format!("walk_{i:04}.txt") };
        let path = run.out.join(name);
        let seed = rng::mix(run.seed, i as u64, tag::SAMPLE);
        std::fs::write(&path, WalkFile { alpha, seed, excursion: e }.to_text())?;
        files.push(path);
    }
    write_manifest(run, Some(law), &files)?;
    Ok(0)
}

pub fn cmd_measure(run: &RunConfig) -> Result<i32> {
    let input = run.input.as_ref().expect("measure has an input");
    let walk = WalkFile::read(input)?;
    let e = &walk.excursion;
    let pairs = match run.pairs {
        None => {
            let ks = e.coded_times().indices().to_vec();
            ks.iter().flat_map(|&a| ks.iter().map(move |&b| (a, b))).collect()
        }
        Some(p) => sample_pairs(e, p, &mut rng::stream(run.seed, 0, tag::PAIRS)),
    };
    let rows = match measure_pairs(e, &pairs) {
        Ok(r) => r,
        Err(err @ Error::SandwichViolation(_)) => {
            std::fs::create_dir_all(&run.out)?;
            std::fs::write(run.out.join("violation.txt"), format!("{err}\n{}", walk.to_text()))?;
            return Err(err);
        }
        Err(err) => return Err(err),
    };
    std::fs::create_dir_all(&run.out)?;
    let path = run.out.join("pairs.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["u", "v", "D", "Dup", "Ddown", "Dstar", "V"])?;
    for m in &rows {
        w.write_record([
            m.u.to_string(),
            m.v.to_string(),
            m.d.to_string(),
            m.d_up.to_string(),
            m.d_down.to_string(),
            m.d_star.to_string(),
            m.v_metric.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    write_manifest(run, None, &[path])?;
    Ok(0)
}

pub fn run_suite(suite: &str, run: &RunConfig) -> Result<ExperimentReport> {
    use experiments::*;
    let alpha = run.alpha.first().copied();
    let n = run.n.first().copied();
    let report = match suite {
        "gap" => {
            let d = GapConfig::default();
            gap_study(&GapConfig {
                alpha: alpha.unwrap_or(d.alpha),
                ns: if run.n.is_empty() { d.ns } else { run.n.clone() },
                trials: run.trials.unwrap_or(d.trials),
                pairs: run.pairs.unwrap_or(d.pairs),
                seed: run.seed,
            })?
        }
        "dimension" => {
            let d = DimensionConfig::default();
            dimension_fit(&DimensionConfig {
                alpha: alpha.unwrap_or(d.alpha),
                n: n.unwrap_or(d.n),
                trials: run.trials.unwrap_or(d.trials),
                centers: run.centers.unwrap_or(d.centers),
                seed: run.seed,
                ..d
            })?
        }
        "identify" => {
            let d = IdentifyConfig::default();
            identification_probe(&IdentifyConfig {
                alpha: alpha.unwrap_or(d.alpha),
                n: n.unwrap_or(d.n),
                trials: run.trials.unwrap_or(d.trials),
                sources: run.pairs.unwrap_or(d.sources),
                seed: run.seed,
                ..d
            })?
        }
        "scaling" => {
            let d = ScalingConfig::default();
            scaling_selfconsistency(&ScalingConfig {
                alpha: alpha.unwrap_or(d.alpha),
                ns: if run.n.is_empty() { d.ns } else { run.n.clone() },
                trials: run.trials.unwrap_or(d.trials),
                seed: run.seed,
                ..d
            })?
        }
        "counterexample" => {
            let d = CounterexampleConfig::default();
            counterexample_suite(&CounterexampleConfig { beta: run.beta.unwrap_or(d.beta), k_max: run.k.unwrap_or(d.k_max) })?
        }
        "words" => {
            let d = WordsConfig::default();
            words_suite(&WordsConfig {
                alphas: if run.alpha.is_empty() { d.alphas.clone() } else { run.alpha.clone() },
                badword_alpha: alpha.unwrap_or(d.badword_alpha),
                samples: run.samples.unwrap_or(d.samples),
                trials: run.trials.unwrap_or(d.trials),
                instances: run.pairs.unwrap_or(d.instances),
                seed: run.seed,
                ..d
            })?
        }
        other => return Err(usage(format!("unknown suite {other:?}"))),
    };
    Ok(report)
}

pub fn cmd_experiment(suite: &str, run: &RunConfig) -> Result<i32> {
    let mut report = run_suite(suite, run)?;
    report.config = serde_json::json!({ "run": run, "suite": report.config });
    let files = report.write(&run.out)?;
    write_manifest(run, None, &files)?;
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let kind = if c.calibrated { "calibrated" } else { "exact" };
        println!("{status} {} = {} ({}, {kind})", c.name, c.value, c.threshold);
    }
    let exact_failed = report.checks.iter().any(|c| !c.passed && !c.calibrated);
    Ok(if exact_failed { 1 } else { 0 })
}

#[derive(Debug, Serialize)]
struct VertexPosition {
    id: usize,
    x: f64,
    y: f64,
    level: i64,
    down_step: Option<usize>,
}

pub fn cmd_render_data(run: &RunConfig) -> Result<i32> {
    let input = run.input.as_ref().expect("render-data has an input");
    let walk = WalkFile::read(input)?;
    let e = &walk.excursion;
    let map = build_map(e)?;
    std::fs::create_dir_all(&run.out)?;
    let mut files = Vec::new();

    let edges_path = run.out.join("edges.csv");
    let mut w = csv::Writer::from_path(&edges_path)?;
    w.write_record(["u", "v"])?;
    for (a, b) in map.edges() {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    files.push(edges_path);

    let positions: Vec<VertexPosition> = (0..map.vertex_count())
        .map(|v| {
            let p = map.position(v);
            VertexPosition { id: v, x: p.x, y: p.y, level: map.level(v), down_step: map.down_step(v) }
        })
        .collect();
    let pos_path = run.out.join("positions.json");
    std::fs::write(
        &pos_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "circumference": map.circumference(),
            "bottom": map.bottom(),
            "top": map.top(),
            "vertices": positions,
        }))?,
    )?;
    files.push(pos_path);

    let slits_path = run.out.join("slits.csv");
    let mut w = csv::Writer::from_path(&slits_path)?;
    w.write_record(["x", "bottom", "top"])?;
    for s in &slits_of(e).slits {
        w.write_record([s.x.to_string(), s.bottom.to_string(), s.top.to_string()])?;
    }
    w.flush()?;
    files.push(slits_path);

    let walk_path = run.out.join("walk.csv");
    let mut w = csv::Writer::from_path(&walk_path)?;
    w.write_record(["t", "height"])?;
    for (k, h) in e.heights().iter().enumerate() {
        w.write_record([k.to_string(), h.to_string()])?;
    }
    w.flush()?;
    files.push(walk_path);

    if let Some((a, b)) = run.endpoints {
        if a >= map.vertex_count() || b >= map.vertex_count() {
            return Err(usage(format!("vertices must be below {}", map.vertex_count())));
        }
        let witness_path = run.out.join("witness.csv");
        let mut w = csv::Writer::from_path(&witness_path)?;
        w.write_record(["path", "index", "x", "y"])?;
        for (i, v) in map.geodesic(a, b).into_iter().enumerate() {
            let p = map.position(v);
            w.write_record(["geodesic".to_string(), i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        let (pa, pb) = (map.position(a), map.position(b));
        let v = v_distance(&slits_of(e), ProfileMode::Cyclic, pa.x, pa.y, pb.x, pb.y);
        for (i, (x, y)) in v.polyline(map.circumference() as f64).into_iter().enumerate() {
            w.write_record(["v_witness".to_string(), i.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        files.push(witness_path);
    }
    write_manifest(run, None, &files)?;
    Ok(0)
}
