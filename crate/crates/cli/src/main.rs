use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use bodymap::config::ConfigFile;
use bodymap::eval::{accuracy, back_project};
use bodymap::gmm::GmmModel;
use bodymap::homunculus::{surrogate_weights, HomunculusWeights, SurrogateConfig};
use bodymap::lexicon::{inject_noise, utterances_from_dataset, NoiseMode};
use bodymap::mapping::{one_step, sequential, MappingInput, SequentialConfig};
use bodymap::render::{render_heatmap, Palette};
use bodymap::seed::{derive, rng_from_seed, Stream};
use bodymap::skin::{
    default_layout, generate_dataset, read_dataset, subsample_indices, write_dataset, DatasetHeader,
    TaxelSample,
};
use bodymap::sweep::{
    aggregate, run_sweep, write_aggregate_csv, write_records_csv, Mapper, MapperChoice, SweepConfig,
};
use bodymap::{BodyPartLabel, Error};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bodymap", version, about = "Body-part categories from touch and words")]
struct Cli {
    /// Flat `key = value` file; keys mirror the long flags. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tactile dataset.
    Generate(GenerateArgs),
    /// Build surrogate homunculus weights.
    Weights(WeightsArgs),
    /// Fit a Gaussian mixture to projected data.
    Fit(FitArgs),
    /// Run one mapping experiment on a dataset.
    Map(MapArgs),
    /// Run the size x noise x repetition grid.
    Sweep(SweepArgs),
    /// Draw a label map on the neuron grid.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    stimulations: Option<usize>,
    #[arg(long)]
    per_stimulation: Option<usize>,
    /// Keep a random subset of this many samples.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    weights: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    mapper: Option<String>,
    #[arg(long)]
    components: Option<usize>,
    /// Mixture to map with instead of fitting one.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated dataset sizes.
    #[arg(long)]
    sizes: Option<String>,
    /// Comma-separated noise levels in [0, 1].
    #[arg(long)]
    noises: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    mapper: Option<String>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Labels written by `map`; without it the true labels are drawn.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

enum Failure {
    Argument(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_argument() {
            Failure::Argument(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn arg_err(msg: impl Into<String>) -> Failure {
    Failure::Argument(msg.into())
}

/// Flag value, else config value, else `default`.
struct Settings {
    file: ConfigFile,
}

impl Settings {
    fn load(path: Option<&Path>) -> Outcome<Self> {
        let file = match path {
            Some(p) => {
                let f = File::open(p).map_err(|e| arg_err(format!("{}: {e}", p.display())))?;
                ConfigFile::parse(BufReader::new(f))?
            }
            None => ConfigFile::default(),
        };
        Ok(Settings { file })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Outcome<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.file.value(key)?.unwrap_or(default)),
        }
    }

    fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Outcome<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.file.value(key)?),
        }
    }

    fn pick_list<T: FromStr>(&self, flag: Option<&str>, key: &str, default: Vec<T>) -> Outcome<Vec<T>> {
        match flag {
            Some(v) => parse_list(v, key),
            None => Ok(self.file.list(key)?.unwrap_or(default)),
        }
    }
}

fn parse_list<T: FromStr>(v: &str, key: &str) -> Outcome<Vec<T>> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| arg_err(format!("bad entry `{x}` in --{key}")))
        })
        .collect()
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let f = File::create(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    let f = File::open(path).map_err(|e| arg_err(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(f))
}

fn load_inputs(input: &InputArgs) -> Outcome<(Vec<TaxelSample>, HomunculusWeights)> {
    let (header, data) = read_dataset(open(&input.data)?)?;
    let weights = HomunculusWeights::read_from(open(&input.weights)?)?;
    if header.n_taxels != weights.cols() {
        return Err(arg_err(format!(
            "dataset has {} taxels, weights expect {}",
            header.n_taxels,
            weights.cols()
        )));
    }
    Ok((data, weights))
}

fn project(weights: &HomunculusWeights, data: &[TaxelSample]) -> Outcome<Vec<Vec<f64>>> {
    Ok(data
        .iter()
        .map(|s| weights.project(s).map(|a| a.into_inner()))
        .collect::<Result<_, _>>()?)
}

fn generate(s: &Settings, seed: u64, a: GenerateArgs) -> Outcome {
    let defaults = SweepConfig::default();
    let n = s.pick(a.stimulations, "stimulations", defaults.n_stimulations)?;
    let per = s.pick(a.per_stimulation, "per-stimulation", defaults.samples_per_stimulation)?;
    let size = s.pick_opt(a.size, "size")?;
    let layout = default_layout();
    let mut rng = rng_from_seed(derive(seed, &[Stream::Corpus as u64, 0]));
    let mut data = generate_dataset(&layout, n, per, &mut rng)?;
    if let Some(size) = size {
        let mut rs = rng_from_seed(derive(seed, &[Stream::Subsample as u64, size as u64, 0]));
        let idx = subsample_indices(data.len(), size, &mut rs)?;
        data = idx.into_iter().map(|i| data[i].clone()).collect();
    }
    let header = DatasetHeader {
        n_taxels: layout.n_taxels(),
        layout_fingerprint: layout.fingerprint(),
        seed: Some(seed),
    };
    let mut w = create(&a.out)?;
    write_dataset(&mut w, &header, &data)?;
    w.flush()?;
    println!("wrote {} samples to {}", data.len(), a.out.display());
    Ok(())
}

fn weights(s: &Settings, seed: u64, a: WeightsArgs) -> Outcome {
    let overlap = s.pick(a.overlap, "overlap", SweepConfig::default().surrogate.overlap)?;
    let cfg = SurrogateConfig {
        overlap,
        ..SurrogateConfig::default()
    };
    let mut rng = rng_from_seed(derive(seed, &[Stream::Weights as u64, 0]));
    let mut w = surrogate_weights(&default_layout(), &cfg, &mut rng)?;
    w.provenance.seed = Some(seed);
    w.provenance.overlap = Some(overlap);
    let mut out = create(&a.out)?;
    w.write_to(&mut out)?;
    out.flush()?;
    println!("wrote {}x{} weights to {}", w.rows(), w.cols(), a.out.display());
    Ok(())
}

fn fit(s: &Settings, seed: u64, a: FitArgs) -> Outcome {
    let j = s.pick(a.components, "components", BodyPartLabel::COUNT)?;
    let (data, weights) = load_inputs(&a.input)?;
    let acts = project(&weights, &data)?;
    let utts = utterances_from_dataset(&data);
    let input = MappingInput::new(&acts, &utts)?;
    let mut rng = rng_from_seed(derive(seed, &[Stream::Mixture as u64, data.len() as u64, 0]));
    let model = input.fit(j, &SweepConfig::default().gmm, &mut rng)?;
    let mut w = create(&a.out)?;
    model.write_to(&mut w)?;
    w.flush()?;
    println!(
        "fitted {} components, log-likelihood {:.6}, {} iterations",
        model.n_components(),
        model.info.log_likelihood,
        model.info.iterations
    );
    Ok(())
}

fn map(s: &Settings, seed: u64, a: MapArgs) -> Outcome {
    let defaults = SweepConfig::default();
    let noise = s.pick(a.noise, "noise", 0.0)?;
    let mapper: MapperChoice = s.pick(a.mapper.as_deref().map(str::parse).transpose()?, "mapper", MapperChoice::Both)?;
    let j = s.pick(a.components, "components", defaults.components)?;
    let size = s.pick_opt(a.size, "size")?;
    let out_dir = s.pick(a.out_dir, "out-dir", PathBuf::from("."))?;
    let (data, weights) = load_inputs(&a.input)?;

    let idx: Vec<usize> = match size {
        Some(n) => {
            let mut rs = rng_from_seed(derive(seed, &[Stream::Subsample as u64, n as u64, 0]));
            subsample_indices(data.len(), n, &mut rs)?
        }
        None => (0..data.len()).collect(),
    };
    let samples: Vec<TaxelSample> = idx.iter().map(|&i| data[i].clone()).collect();
    let acts = project(&weights, &samples)?;
    let n = samples.len() as u64;
    let mut rn = rng_from_seed(derive(seed, &[Stream::Noise as u64, n, noise.to_bits(), 0]));
    let utts = inject_noise(&utterances_from_dataset(&samples), noise, NoiseMode::Permute, &mut rn)?;
    let truth: Vec<BodyPartLabel> = samples.iter().map(|s| s.label).collect();

    let input = MappingInput::new(&acts, &utts)?;
    let mut rm = rng_from_seed(derive(seed, &[Stream::Mixture as u64, n, 0]));
    let first = match &a.fit {
        Some(p) => GmmModel::read_from(open(p)?)?,
        None => input.fit(j, &defaults.gmm, &mut rm)?,
    };
    if first.dim() != weights.rows() {
        return Err(arg_err(format!(
            "mixture has dimension {}, weights produce {}",
            first.dim(),
            weights.rows()
        )));
    }
    let cfg = SequentialConfig {
        gmm: defaults.gmm,
        refit: defaults.refit,
        decay: defaults.decay.clone(),
        labels: defaults.labels,
    };
    fs::create_dir_all(&out_dir)?;
    for &m in mapper.mappers() {
        let r = match m {
            Mapper::OneStep => one_step(&input, j, &cfg, Some(&first), &mut rm)?,
            Mapper::Sequential => sequential(&input, j, &cfg, Some(&first), &mut rm)?,
        };
        let mut rep = create(&out_dir.join(format!("report_{}.txt", m.key())))?;
        r.write_report(&mut rep)?;
        rep.flush()?;
        let mut lab = create(&out_dir.join(format!("labels_{}.csv", m.key())))?;
        writeln!(lab, "sample_index,predicted,truth")?;
        for ((&i, p), t) in idx.iter().zip(&r.per_point_label).zip(&truth) {
            writeln!(lab, "{i},{},{}", p.map_or("NA", |l| l.key()), t.key())?;
        }
        lab.flush()?;
        let acc = accuracy(&r.per_point_label, &truth)?;
        println!("{} accuracy {acc:.4} assigned {}/{}", m.key(), r.n_assigned(), r.assignment.len());
    }
    Ok(())
}

fn sweep(s: &Settings, seed: u64, a: SweepArgs) -> Outcome {
    let mut cfg = SweepConfig {
        seed,
        ..SweepConfig::default()
    };
    cfg.sizes = s.pick_list(a.sizes.as_deref(), "sizes", cfg.sizes)?;
    cfg.noise_levels = s.pick_list(a.noises.as_deref(), "noises", cfg.noise_levels)?;
    cfg.repetitions = s.pick(a.reps, "reps", cfg.repetitions)?;
    cfg.mapper = s.pick(a.mapper.as_deref().map(str::parse).transpose()?, "mapper", cfg.mapper)?;
    cfg.surrogate.overlap = s.pick(a.overlap, "overlap", cfg.surrogate.overlap)?;
    let out_dir = s.pick(a.out_dir, "out-dir", PathBuf::from("."))?;
    cfg.validate()?;

    let result = run_sweep(&cfg)?;
    fs::create_dir_all(&out_dir)?;
    let mut w = create(&out_dir.join("records.csv"))?;
    write_records_csv(&result.records, &mut w)?;
    w.flush()?;
    let aggs = aggregate(&result.records);
    let mut w = create(&out_dir.join("aggregate.csv"))?;
    write_aggregate_csv(&aggs, &mut w)?;
    w.flush()?;
    let mut w = create(&out_dir.join("failures.csv"))?;
    writeln!(w, "size,noise,mapper,repetition,error")?;
    let mut failed = 0;
    for r in result.failures() {
        failed += 1;
        let msg = r.error.as_deref().unwrap_or("").replace(['\n', ','], " ");
        writeln!(w, "{},{},{},{},{msg}", r.size, r.noise, r.mapper, r.repetition)?;
    }
    w.flush()?;
    for g in &aggs {
        println!(
            "{:>6} {:>4} {:<10} {} (runs {}, failed {})",
            g.size,
            g.noise,
            g.mapper.key(),
            g.accuracy.mean.map_or("NA".into(), |m| format!("{m:.4}")),
            g.runs,
            g.failed
        );
    }
    println!("{} records, {failed} failed, written to {}", result.records.len(), out_dir.display());
    Ok(())
}

fn read_labels(path: &Path) -> Outcome<Vec<(usize, Option<BodyPartLabel>)>> {
    use std::io::BufRead;
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || arg_err(format!("{}:{}: malformed label line", path.display(), i + 1));
        let mut f = line.split(',');
        let idx: usize = f.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let label = match f.next().ok_or_else(bad)? {
            "NA" => None,
            v => Some(v.parse::<BodyPartLabel>().map_err(|_| bad())?),
        };
        out.push((idx, label));
    }
    Ok(out)
}

fn render(s: &Settings, a: RenderArgs) -> Outcome {
    let scale = s.pick(a.scale, "scale", 10)?;
    let (data, weights) = load_inputs(&a.input)?;
    let labels: Vec<(usize, Option<BodyPartLabel>)> = match &a.labels {
        Some(p) => read_labels(p)?,
        None => data.iter().enumerate().map(|(i, s)| (i, Some(s.label))).collect(),
    };
    if let Some((i, _)) = labels.iter().find(|(i, _)| *i >= data.len()) {
        return Err(arg_err(format!("sample index {i} beyond the dataset")));
    }
    let samples: Vec<TaxelSample> = labels.iter().map(|(i, _)| data[*i].clone()).collect();
    let acts = project(&weights, &samples)?;
    let predicted: Vec<Option<BodyPartLabel>> = labels.iter().map(|l| l.1).collect();
    let bp = back_project(&acts, &predicted)?;
    let img = render_heatmap(&bp, weights.grid_shape(), scale, &Palette::default())?;
    let mut w = create(&a.out)?;
    img.write_ppm(&mut w)?;
    w.flush()?;
    println!("wrote {}x{} image to {}", img.width, img.height, a.out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.pick(cli.seed, "seed", 0)?;
    match cli.command {
        Command::Generate(a) => generate(&settings, seed, a),
        Command::Weights(a) => weights(&settings, seed, a),
        Command::Fit(a) => fit(&settings, seed, a),
        Command::Map(a) => map(&settings, seed, a),
        Command::Sweep(a) => sweep(&settings, seed, a),
        Command::Render(a) => render(&settings, a),
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Argument(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
