use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use srcl_core::data::{
    generate_synthetic, load_image, load_samples, save_dictionary, save_samples, DatasetManifest,
    FeatureKind, SyntheticConfig, DEFAULT_GRADE_COLUMN,
};
use srcl_core::features::{
    build_codebook, bow_regions, extract_patches, resize_flatten, sample_patches, Codebook,
    GrayImage, DEFAULT_BINS, DEFAULT_PATCH_SIZE, DEFAULT_SIDE,
};
use srcl_core::metrics::{cataract_metrics, mean_absolute_error, pearson_correlation};
use srcl_core::srcl::{grade_batch, DistanceSource, MethodKind, MethodVariant, Task};
use srcl_core::{Dictionary, FeatureVector, GroupPartition, SrclError};

#[derive(Parser)]
#[command(name = "srcl", version, about = "Grade samples by sparse reconstruction over a graded reference set")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grade every test sample and write a JSON-lines report.
    Grade(GradeArgs),
    /// Compare predicted grades with ground truth.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic reference set and test set.
    Synth(SynthArgs),
    /// Build a patch codebook and bag-of-words histograms for a directory of images.
    Bow(BowArgs),
    /// Resize a directory of images and flatten them into feature rows.
    Resize(ResizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Cdr,
    Cataract,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Cdr => Task::Cdr,
            TaskArg::Cataract => Task::Cataract,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    Euclidean,
    ChiSquare,
}

#[derive(Args)]
struct GradeArgs {
    /// Method name: sc, llc, sdc, ssgl, sc+rc, sdc+rc, ssgl+rc.
    #[arg(long)]
    variant: String,
    /// JSON manifest naming the reference and test files.
    #[arg(long, conflicts_with_all = ["refs", "tests"])]
    manifest: Option<PathBuf>,
    #[arg(long, requires = "tests")]
    refs: Option<PathBuf>,
    #[arg(long, requires = "refs")]
    tests: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cdr")]
    task: TaskArg,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    #[arg(long)]
    lars_steps: Option<usize>,
    /// Run exactly this many outer iterations (no tolerance stopping).
    #[arg(long)]
    fixed_iters: Option<usize>,
    /// Outer iteration budget (default: the preset count).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop early once successive grades differ by less than this.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    distance: Option<DistanceArg>,
    /// Number of equal-width grade bins for the group penalty.
    #[arg(long)]
    bins: Option<usize>,
    /// LLC locality bandwidth (default: RMS distance to the atoms).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    grade_column: Option<String>,
    /// Report destination (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the metrics table as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth grades: one number per line, a sample CSV, or a JSON-lines report.
    #[arg(long)]
    truth: PathBuf,
    /// Predicted grades, in any of the same formats.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "cdr")]
    task: TaskArg,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 120)]
    n_ref: usize,
    #[arg(long, default_value_t = 200)]
    n_test: usize,
    #[arg(long, default_value_t = 2500)]
    dim: usize,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    nuisance_fraction: Option<f64>,
    #[arg(long)]
    nuisance_rank: Option<usize>,
    #[arg(long, env = "SRCL_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BowArgs {
    /// Directory of .pgm or .csv images, processed in file-name order. Repeat
    /// once per region; region directories must hold the same file names and
    /// their histograms are concatenated.
    #[arg(long, required = true)]
    images: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
    patch: usize,
    /// Reuse existing codebooks (one per region) instead of learning them.
    #[arg(long)]
    codebook: Vec<PathBuf>,
    /// Cap on the number of patches used to learn the codebook.
    #[arg(long, default_value_t = 20_000)]
    max_patches: usize,
    /// CSV of `file,grade` rows giving each image's grade.
    #[arg(long)]
    grades: Option<PathBuf>,
    #[arg(long, env = "SRCL_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ResizeArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SIDE)]
    side: usize,
    #[arg(long)]
    grades: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit status: 1 for bad input, 2 for solver failures.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Grade(a) => cmd_grade(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bow(a) => cmd_bow(a),
        Command::Resize(a) => cmd_resize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct ReportLine {
    sample_id: usize,
    grade: f64,
    support_size: usize,
    iterations: usize,
    converged: bool,
}

fn build_variant(a: &GradeArgs, task: Task, dict: &Dictionary, kind_hint: Option<FeatureKind>) -> anyhow::Result<MethodVariant> {
    let kind: MethodKind = a.variant.parse()?;
    let mut v = MethodVariant::preset(kind, task, dict)?;
    let p = &mut v.params;
    if let Some(x) = a.gamma {
        p.gamma = x;
    }
    if let Some(x) = a.lambda1 {
        p.lambda1 = x;
    }
    if let Some(x) = a.lambda2 {
        p.lambda2 = x;
    }
    if let Some(x) = a.lambda3 {
        p.lambda3 = x;
    }
    if let Some(x) = a.lars_steps {
        p.lars_steps = x;
    }
    if let Some(x) = a.max_iters {
        p.max_outer_iterations = x;
    }
    if let Some(x) = a.tolerance {
        p.convergence_tolerance = x;
        p.stop_on_tolerance = true;
    }
    if let Some(n) = a.fixed_iters {
        p.max_outer_iterations = n;
        p.stop_on_tolerance = false;
    }
    if kind.needs_distance() {
        let source = match (a.distance, kind_hint) {
            (Some(DistanceArg::Euclidean), _) => DistanceSource::Euclidean,
            (Some(DistanceArg::ChiSquare), _) | (None, Some(FeatureKind::BagOfWords)) => DistanceSource::ChiSquare,
            (None, _) => task.default_distance(),
        };
        v = v.with_distance(source);
    }
    if let (true, Some(bins)) = (kind.needs_groups(), a.bins) {
        v = v.with_groups(GroupPartition::by_grade_bins(dict.grades(), bins)?);
    }
    v.llc_sigma = a.sigma;
    v.validate(dict.len())?;
    Ok(v)
}

fn cmd_grade(a: GradeArgs) -> CliResult {
    let task = Task::from(a.task);
    let (refs, tests, grade_column, kind_hint) = match (&a.manifest, &a.refs, &a.tests) {
        (Some(m), _, _) => {
            let m = DatasetManifest::load(m).with_context(|| format!("reading manifest {}", m.display()))?;
            (m.reference_path, m.test_path, m.grade_column, Some(m.feature_kind))
        }
        (None, Some(r), Some(t)) => (r.clone(), t.clone(), DEFAULT_GRADE_COLUMN.to_string(), None),
        _ => return Err(anyhow!("give either --manifest or both --refs and --tests").into()),
    };
    let grade_column = a.grade_column.clone().unwrap_or(grade_column);
    let dict = load_samples(&refs, &grade_column)
        .with_context(|| format!("reading references {}", refs.display()))?
        .into_dictionary()?;
    let samples = load_samples(&tests, &grade_column).with_context(|| format!("reading tests {}", tests.display()))?;
    if let Some(bad) = samples.features.iter().position(|f| f.len() != dict.dim()) {
        return Err(anyhow!(
            "test sample {bad} has {} features, references have {}",
            samples.features[bad].len(),
            dict.dim()
        )
        .into());
    }
    let variant = build_variant(&a, task, &dict, kind_hint)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(anyhow!("--jobs must be at least 1").into());
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    let results = pool.install(|| grade_batch(&samples.features, &dict, &variant));

    let mut lines = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        let sol = r.map_err(|e| Failure {
            code: 2,
            error: anyhow!("solver failed on sample {i}: {e}"),
        })?;
        lines.push(ReportLine {
            sample_id: i,
            grade: sol.grade,
            support_size: sol.coefficients.support().len(),
            iterations: sol.trace.iterations.len(),
            converged: sol.trace.converged && sol.inner_converged,
        });
    }

    let mut sink: Box<dyn Write> = match &a.report {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    };
    for line in &lines {
        serde_json::to_writer(&mut sink, line)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    drop(sink);

    let pred: Vec<f64> = lines.iter().map(|l| l.grade).collect();
    let table = metrics_table(task, &samples.grades, &pred)?;
    let out = render_table(&table, a.csv);
    if a.report.is_some() {
        print!("{out}");
    } else {
        eprint!("{out}");
    }
    Ok(())
}

fn metrics_table(task: Task, truth: &[f64], pred: &[f64]) -> anyhow::Result<Vec<(&'static str, f64)>> {
    Ok(match task {
        Task::Cdr => {
            let corr = match pearson_correlation(truth, pred) {
                Ok(r) => r,
                Err(SrclError::ConstantVector | SrclError::Empty(_)) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            vec![("mae", mean_absolute_error(truth, pred)?), ("correlation", corr)]
        }
        Task::Cataract => {
            let m = cataract_metrics(truth, pred)?;
            vec![
                ("mae", m.mean_abs_error),
                ("r0", m.r0),
                ("r0.5", m.r0_5),
                ("r1", m.r1),
                ("r0.5_decimal", m.r0_5_decimal),
                ("r1_decimal", m.r1_decimal),
            ]
        }
    })
}

fn render_table(rows: &[(&str, f64)], csv: bool) -> String {
    let mut s = String::new();
    if csv {
        s.push_str("metric,value\n");
        for (k, v) in rows {
            s.push_str(&format!("{k},{v}\n"));
        }
    } else {
        for (k, v) in rows {
            s.push_str(&format!("{k:<14}{v:.6}\n"));
        }
    }
    s
}

/// Reads grades from a plain list, a sample CSV with a `grade` column, or a
/// JSON-lines report.
fn read_grades(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with('{') {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let v: serde_json::Value = serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))?;
                v.get("grade")
                    .and_then(serde_json::Value::as_f64)
                    .ok_or_else(|| anyhow!("{}:{}: no numeric `grade` field", path.display(), i + 1))
            })
            .collect();
    }
    if first.split(',').any(|h| h.trim() == DEFAULT_GRADE_COLUMN) {
        return Ok(load_samples(path, DEFAULT_GRADE_COLUMN)?.grades);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("{}:{}: `{}` is not a number", path.display(), i + 1, l.trim()))
        })
        .collect()
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult {
    let truth = read_grades(&a.truth)?;
    let pred = read_grades(&a.pred)?;
    let table = metrics_table(a.task.into(), &truth, &pred)?;
    print!("{}", render_table(&table, a.csv));
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CliResult {
    let defaults = SyntheticConfig::default();
    let cfg = SyntheticConfig {
        n_ref: a.n_ref,
        n_test: a.n_test,
        dim: a.dim,
        noise_sigma: a.noise.unwrap_or(defaults.noise_sigma),
        nuisance_fraction: a.nuisance_fraction.unwrap_or(defaults.nuisance_fraction),
        nuisance_rank: a.nuisance_rank.unwrap_or(defaults.nuisance_rank),
        seed: a.seed,
    };
    let ds = generate_synthetic(&cfg)?;
    fs::create_dir_all(&a.out_dir)?;
    save_dictionary(&a.out_dir.join("refs.csv"), &ds.dictionary)?;
    save_samples(&a.out_dir.join("tests.csv"), &ds.tests, &ds.test_grades)?;
    let mut manifest = DatasetManifest::new("refs.csv", "tests.csv");
    manifest.seed = a.seed;
    manifest.save(&a.out_dir.join("manifest.json"))?;
    eprintln!(
        "wrote {} references and {} tests to {}",
        ds.dictionary.len(),
        ds.tests.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn list_images(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("pgm" | "csv")
            )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .pgm or .csv images in {}", dir.display());
    }
    Ok(files)
}

fn load_all(files: &[PathBuf]) -> anyhow::Result<Vec<GrayImage>> {
    files
        .iter()
        .map(|p| load_image(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Grades keyed by file name, in the order of `files`; zeros if no file.
fn image_grades(files: &[PathBuf], grades: Option<&Path>) -> anyhow::Result<Vec<f64>> {
    let Some(path) = grades else {
        eprintln!("note: no --grades file; grade column set to 0");
        return Ok(vec![0.0; files.len()]);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut table = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, grade) = line
            .rsplit_once(',')
            .ok_or_else(|| anyhow!("{}:{}: expected `file,grade`", path.display(), i + 1))?;
        match grade.trim().parse::<f64>() {
            Ok(g) => {
                table.insert(name.trim().to_string(), g);
            }
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}:{}: `{}` is not a number", path.display(), i + 1, grade.trim()),
        }
    }
    files
        .iter()
        .map(|f| {
            let name = file_name(f);
            table
                .get(&name)
                .copied()
                .ok_or_else(|| anyhow!("no grade for image `{name}` in {}", path.display()))
        })
        .collect()
}

fn write_row_names(path: &Path, files: &[PathBuf]) -> anyhow::Result<()> {
    let mut s = String::new();
    for f in files {
        s.push_str(&file_name(f));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn cmd_bow(a: BowArgs) -> CliResult {
    if !a.codebook.is_empty() && a.codebook.len() != a.images.len() {
        return Err(anyhow!("give one --codebook per --images directory").into());
    }
    let files = list_images(&a.images[0])?;
    let names: Vec<String> = files.iter().map(|f| file_name(f)).collect();
    let grades = image_grades(&files, a.grades.as_deref())?;
    let mut regions = Vec::with_capacity(a.images.len());
    for (r, dir) in a.images.iter().enumerate() {
        let region_files = list_images(dir)?;
        let region_names: Vec<String> = region_files.iter().map(|f| file_name(f)).collect();
        if region_names != names {
            return Err(anyhow!("{} does not hold the same image names as {}", dir.display(), a.images[0].display()).into());
        }
        let images = load_all(&region_files)?;
        let codebook = match a.codebook.get(r) {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str::<Codebook>(&text).with_context(|| format!("parsing codebook {}", p.display()))?
            }
            None => {
                let mut patches = Vec::new();
                for img in &images {
                    patches.extend(extract_patches(img, a.patch)?);
                }
                let patches = sample_patches(patches, a.max_patches, a.seed.wrapping_add(r as u64));
                build_codebook(&patches, a.k, a.seed.wrapping_add(r as u64))?
            }
        };
        regions.push((images, codebook));
    }
    let histograms: Vec<FeatureVector> = (0..files.len())
        .map(|i| {
            let parts: Vec<(&GrayImage, &Codebook)> = regions.iter().map(|(imgs, cb)| (&imgs[i], cb)).collect();
            bow_regions(&parts)
        })
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(&a.out_dir)?;
    if a.codebook.is_empty() {
        for (r, (_, codebook)) in regions.iter().enumerate() {
            let name = if regions.len() == 1 { "codebook.json".to_string() } else { format!("codebook-{r}.json") };
            fs::write(a.out_dir.join(name), serde_json::to_string(codebook)? + "\n")?;
        }
    }
    save_samples(&a.out_dir.join("histograms.csv"), &histograms, &grades)?;
    write_row_names(&a.out_dir.join("histograms.files"), &files)?;
    eprintln!("{} images, {} regions", files.len(), regions.len());
    Ok(())
}

fn cmd_resize(a: ResizeArgs) -> CliResult {
    let files = list_images(&a.images)?;
    let images = load_all(&files)?;
    let grades = image_grades(&files, a.grades.as_deref())?;
    let rows: Vec<FeatureVector> = images
        .iter()
        .map(|img| resize_flatten(img, a.side))
        .collect::<Result<_, _>>()?;
    save_samples(&a.out, &rows, &grades)?;
    Ok(())
}
