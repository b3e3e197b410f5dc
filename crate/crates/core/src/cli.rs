//! Command-line front end: run configuration, output locking, manifests and
//! the seven subcommands.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{posterior_irf_bands, IrfBands, IrfSpec};
use crate::data::{
    assemble_dataset, default_transform, fetch_remote_series, load_grouped_csv, load_macro_csv, Dataset,
    FetchOptions, GroupedSchema, Instrument, Transform, TransformSpec, INEQUALITY_STATE,
};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_joint_twostep, generate_synthetic_dataset, simulate_lorenz_comparison, write_macro_csv,
    SyntheticTruth,
};
use crate::sampler::{run_joint_mcmc, run_twostep, PosteriorDraws, PriorOverrides, SamplerConfig};

pub const LOCK_FILE: &str = ".ginivar.lock";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "ginivar", version, about = "Joint grouped-income inequality and VAR estimation")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-draw analysis.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the joint model and write the posterior draws.
    FitJoint,
    /// Sample the plug-in VAR with the inequality state fixed at per-period fits.
    FitTwostep,
    /// Impulse-response bands from a draws directory.
    Irf(IrfArgs),
    /// Joint versus two-step IRFs and the one-quarter response scatter.
    Compare(SvgArg),
    /// Grouped versus closed-form Gini of simulated lognormal incomes.
    SimulateLorenz(LorenzArgs),
    /// Synthetic dataset plus a ready-to-run configuration.
    GenSynthetic(SyntheticArgs),
    /// Download (or read from cache) two-column series.
    Fetch(FetchArgs),
}

#[derive(Debug, Args)]
pub struct IrfArgs {
    /// Draws directory; defaults to `<out>/draws`.
    #[arg(long)]
    pub draws: Option<PathBuf>,
    /// Variables whose rows of B and A are zeroed.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub shutdown: Vec<String>,
    /// Also write an SVG chart of the bands.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct SvgArg {
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct LorenzArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n_obs: usize,
    #[arg(long, default_value_t = 5)]
    pub n_groups: usize,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    /// Truth JSON; the built-in three-variable fixture when omitted.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(required = true)]
    pub ids: Vec<String>,
    /// Download cache; defaults to `<out>/cache`.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub end: Option<String>,
    /// Serve from the cache only.
    #[arg(long)]
    pub offline: bool,
    #[arg(long)]
    pub base_url: Option<String>,
}

/// Overrides of the IRF defaults; the shock defaults to the instrument's.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrfOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock_variable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantiles: Option<Vec<f64>>,
}

/// Reads a user-supplied input file. A missing file is an input error
/// rather than an I/O failure.
fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Validation(format!("input file {} does not exist", path.display()))
        } else {
            Error::io(path, e)
        }
    })
}

/// Single JSON run configuration. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub income_csv: PathBuf,
    pub income_schema: PathBuf,
    pub macro_csv: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<Instrument>,
    /// Macro variables in identification order; replaces the instrument's ordering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Vec<String>>,
    /// Per-variable transforms; unlisted variables use the defaults.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub transforms: TransformSpec,
    #[serde(default)]
    pub priors: PriorOverrides,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub irf: IrfOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_input(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.income_csv, &mut cfg.income_schema, &mut cfg.macro_csv] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    /// Macro variables in VAR order after the inequality state.
    pub fn macro_ordering(&self) -> Result<Vec<String>> {
        match (&self.ordering, self.instrument) {
            (Some(o), _) => Ok(o.clone()),
            (None, Some(i)) => Ok(i.ordering()),
            (None, None) => Err(Error::Validation(
                "configuration needs an instrument or an explicit ordering".into(),
            )),
        }
    }

    pub fn variables(&self) -> Result<Vec<String>> {
        Ok(std::iter::once(INEQUALITY_STATE.to_string())
            .chain(self.macro_ordering()?)
            .collect())
    }

    pub fn irf_spec(&self) -> Result<IrfSpec> {
        let d = IrfSpec::default();
        let shock = match (&self.irf.shock_variable, self.instrument) {
            (Some(s), _) => s.clone(),
            (None, Some(i)) => i.shock_variable().to_string(),
            (None, None) => {
                return Err(Error::Validation(
                    "irf.shock_variable is required without an instrument".into(),
                ))
            }
        };
        let spec = IrfSpec {
            shock_variable: shock,
            horizon: self.irf.horizon.unwrap_or(d.horizon),
            scale: self.irf.scale.unwrap_or(d.scale),
            quantiles: self.irf.quantiles.clone().unwrap_or(d.quantiles),
        };
        spec.validate()?;
        if !self.variables()?.contains(&spec.shock_variable) {
            return Err(Error::Validation(format!(
                "shock variable '{}' is not in the ordering",
                spec.shock_variable
            )));
        }
        Ok(spec)
    }

    fn transform_spec(&self, order: &[String]) -> TransformSpec {
        let mut t: TransformSpec = order.iter().map(|n| (n.clone(), default_transform(n))).collect();
        for (k, v) in &self.transforms {
            t.insert(k.clone(), *v);
        }
        t
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.income_csv, &self.income_schema, &self.macro_csv] {
            if !p.is_file() {
                return Err(Error::Validation(format!("input file {} does not exist", p.display())));
            }
        }
        if self.seed.is_none() {
            return Err(Error::Validation(
                "a seed is required (set \"seed\" or pass --seed)".into(),
            ));
        }
        self.sampler.validate()?;
        self.irf_spec()?;
        let m = self.variables()?.len();
        self.priors.build(m)?;
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let schema = GroupedSchema::from_file(&self.income_schema)?;
        let income = load_grouped_csv(&self.income_csv, &schema)?;
        let raw = load_macro_csv(&self.macro_csv)?;
        let order = self.macro_ordering()?;
        assemble_dataset(income, &raw, &self.transform_spec(&order), &order)
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
    _file: File,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::io(
                        &path,
                        std::io::Error::new(
                            e.kind(),
                            "output directory is in use by another run (remove the lock file if stale)",
                        ),
                    )
                } else {
                    Error::io(&path, e)
                }
            })?;
        Ok(Self { path, _file: file })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    version: String,
    seed: Option<u64>,
    /// SHA-256 of the canonical JSON of `config`.
    config_sha256: String,
    config: serde_json::Value,
    /// SHA-256 of every input file by role.
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
) -> Result<()> {
    let canonical = serde_json::to_vec(&config)?;
    let m = Manifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config_sha256: sha256_hex(&canonical),
        config,
        inputs,
        outputs,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").map_err(|e| Error::io(&path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Resolved {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
}

fn require_config(cli: &Cli) -> Result<Resolved> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Validation("--config is required for this command".into()))?;
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Validation("no output directory (set \"out\" or pass --out)".into()))?;
    let seed = cfg.seed.expect("validated");
    Ok(Resolved { cfg, out, seed })
}

fn out_only(cli: &Cli) -> Result<PathBuf> {
    cli.out.clone().ok_or_else(|| Error::Validation("--out is required for this command".into()))
}

/// Config as recorded in manifests: resolved values, no output location.
fn config_record(cfg: &RunConfig) -> Result<serde_json::Value> {
    let mut c = cfg.clone();
    c.out = None;
    let mut v = serde_json::to_value(&c)?;
    // Paths are recorded by content hash instead.
    if let Some(obj) = v.as_object_mut() {
        for k in ["income_csv", "income_schema", "macro_csv"] {
            obj.remove(k);
        }
    }
    Ok(v)
}

fn config_inputs(cfg: &RunConfig) -> Result<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    m.insert("income_csv".into(), file_sha256(&cfg.income_csv)?);
    m.insert("income_schema".into(), file_sha256(&cfg.income_schema)?);
    m.insert("macro_csv".into(), file_sha256(&cfg.macro_csv)?);
    let schema = GroupedSchema::from_file(&cfg.income_schema)?;
    if let Some(p) = &schema.endpoints_csv {
        m.insert("endpoints_csv".into(), file_sha256(p)?);
    }
    Ok(m)
}

fn fit(cli: &Cli, twostep: bool) -> Result<()> {
    let r = require_config(cli)?;
    let data = r.cfg.load_dataset()?;
    let priors = r.cfg.priors.build(data.dim())?;
    let inputs = config_inputs(&r.cfg)?;
    let _lock = OutputLock::acquire(&r.out)?;
    let (draws, name) = if twostep {
        (run_twostep(&data, &priors, &r.cfg.sampler, r.seed)?, "draws_twostep")
    } else {
        (run_joint_mcmc(&data, &priors, &r.cfg.sampler, r.seed)?, "draws")
    };
    draws.write_dir(&r.out.join(name))?;
    let cmd = if twostep { "fit-twostep" } else { "fit-joint" };
    write_manifest(&r.out, cmd, Some(r.seed), config_record(&r.cfg)?, inputs, vec![name.into()])?;
    eprintln!("wrote {} draws to {}", draws.len(), r.out.join(name).display());
    Ok(())
}

fn irf_file_stem(shutdown: &[String]) -> String {
    if shutdown.is_empty() {
        "irf".into()
    } else {
        format!("irf_no_{}", shutdown.join("_"))
    }
}

#[derive(Debug, Serialize)]
struct IrfMeta<'a> {
    spec: &'a IrfSpec,
    shutdown: &'a [String],
    used_draws: usize,
    skipped_draws: usize,
}

fn cmd_irf(cli: &Cli, args: &IrfArgs) -> Result<()> {
    let r = require_config(cli)?;
    let spec = r.cfg.irf_spec()?;
    let dir = args.draws.clone().unwrap_or_else(|| r.out.join("draws"));
    if !dir.join("meta.json").is_file() {
        return Err(Error::Validation(format!(
            "{} is not a complete draws directory",
            dir.display()
        )));
    }
    let draws = PosteriorDraws::read_dir(&dir)?;
    for name in &args.shutdown {
        if !draws.meta.variables.contains(name) {
            return Err(Error::Validation(format!(
                "unknown variable '{name}' (ordering: {})",
                draws.meta.variables.join(", ")
            )));
        }
    }
    let mut inputs = BTreeMap::new();
    for f in ["meta.json", "beta.csv", "sigma.csv"] {
        inputs.insert(format!("draws/{f}"), file_sha256(&dir.join(f))?);
    }
    let _lock = OutputLock::acquire(&r.out)?;
    let off = (!args.shutdown.is_empty()).then_some(args.shutdown.as_slice());
    let bands = posterior_irf_bands(&draws, &spec, off)?;
    let stem = irf_file_stem(&args.shutdown);
    let mut outputs = vec![format!("{stem}.csv"), format!("{stem}.json")];
    bands.write_csv(&r.out.join(format!("{stem}.csv")))?;
    let meta = IrfMeta {
        spec: &spec,
        shutdown: &args.shutdown,
        used_draws: bands.used_draws,
        skipped_draws: bands.skipped_draws,
    };
    write_text(&r.out.join(format!("{stem}.json")), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    if args.svg {
        write_text(&r.out.join(format!("{stem}.svg")), &bands_svg(&[("posterior", &bands)]))?;
        outputs.push(format!("{stem}.svg"));
    }
    let mut record = config_record(&r.cfg)?;
    if let Some(obj) = record.as_object_mut() {
        obj.insert("shutdown".into(), serde_json::to_value(&args.shutdown)?);
    }
    write_manifest(&r.out, "irf", Some(r.seed), record, inputs, outputs)?;
    if bands.skipped_draws > 0 {
        eprintln!("skipped {} non-stationary draws", bands.skipped_draws);
    }
    Ok(())
}

fn cmd_compare(cli: &Cli, args: &SvgArg) -> Result<()> {
    let r = require_config(cli)?;
    let spec = r.cfg.irf_spec()?;
    let data = r.cfg.load_dataset()?;
    let priors = r.cfg.priors.build(data.dim())?;
    let inputs = config_inputs(&r.cfg)?;
    let _lock = OutputLock::acquire(&r.out)?;
    let cmp = compare_joint_twostep(&data, &priors, &r.cfg.sampler, &spec, r.seed)?;
    let dir = r.out.join("compare");
    cmp.write_dir(&dir)?;
    let mut outputs = vec!["compare".to_string()];
    if args.svg {
        let svg = bands_svg(&[("joint", &cmp.joint_bands), ("two-step", &cmp.twostep_bands)]);
        write_text(&dir.join("irf_compare.svg"), &svg)?;
        outputs.push("compare/irf_compare.svg".into());
    }
    write_manifest(&r.out, "compare", Some(r.seed), config_record(&r.cfg)?, inputs, outputs)?;
    Ok(())
}

fn cmd_simulate_lorenz(cli: &Cli, args: &LorenzArgs) -> Result<()> {
    let out = out_only(cli)?;
    let seed = cli.seed.unwrap_or(0);
    let report = simulate_lorenz_comparison(args.mu, args.sigma, args.n_obs, args.n_groups, seed)?;
    let _lock = OutputLock::acquire(&out)?;
    write_text(&out.join("lorenz.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write_text(&out.join("lorenz_curves.csv"), &report.curves_csv())?;
    let config = serde_json::json!({
        "mu": args.mu,
        "sigma": args.sigma,
        "n_obs": args.n_obs,
        "n_groups": args.n_groups,
    });
    write_manifest(
        &out,
        "simulate-lorenz",
        Some(seed),
        config,
        BTreeMap::new(),
        vec!["lorenz.json".into(), "lorenz_curves.csv".into()],
    )?;
    println!(
        "true Gini {:.6}  grouped Gini {:.6}  gap {:.6}",
        report.true_gini, report.grouped_gini, report.gap
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct LatentRow {
    date: String,
    mu: f64,
    h: f64,
}

fn cmd_gen_synthetic(cli: &Cli, args: &SyntheticArgs) -> Result<()> {
    let out = out_only(cli)?;
    let (mut truth, inputs) = match &args.truth {
        Some(p) => {
            let text = read_input(p)?;
            let t: SyntheticTruth = serde_json::from_str(&text)
                .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?;
            let mut i = BTreeMap::new();
            i.insert("truth".to_string(), sha256_hex(text.as_bytes()));
            (t, i)
        }
        None => (SyntheticTruth::fixture(0), BTreeMap::new()),
    };
    if let Some(s) = cli.seed {
        truth.seed = s;
    }
    let synth = generate_synthetic_dataset(&truth)?;
    let _lock = OutputLock::acquire(&out)?;
    let data = &synth.dataset;
    let schema = data.income().write_csv(&out.join("income.csv"), &out.join("endpoints.csv"))?;
    write_text(&out.join("schema.json"), &(serde_json::to_string_pretty(&schema)? + "\n"))?;
    write_macro_csv(data, &out.join("macro.csv"))?;
    write_text(&out.join("truth.json"), &(serde_json::to_string_pretty(&truth)? + "\n"))?;

    let mut w = csv::Writer::from_path(out.join("latent.csv"))?;
    for (t, d) in data.dates().iter().enumerate() {
        w.serialize(LatentRow {
            date: d.to_string(),
            mu: synth.mu[t],
            h: synth.h[t],
        })?;
    }
    w.flush().map_err(|e| Error::io(out.join("latent.csv"), e))?;

    let cfg = RunConfig {
        income_csv: "income.csv".into(),
        income_schema: "schema.json".into(),
        macro_csv: "macro.csv".into(),
        instrument: None,
        ordering: Some(truth.macro_names.clone()),
        transforms: truth
            .macro_names
            .iter()
            .map(|n| (n.clone(), Transform::Level))
            .collect(),
        priors: PriorOverrides::default(),
        sampler: SamplerConfig::default(),
        irf: IrfOverrides {
            shock_variable: truth.macro_names.last().cloned(),
            ..IrfOverrides::default()
        },
        out: Some("run".into()),
        seed: Some(truth.seed),
    };
    write_text(&out.join("config.json"), &(serde_json::to_string_pretty(&cfg)? + "\n"))?;
    let outputs = ["income.csv", "endpoints.csv", "schema.json", "macro.csv", "truth.json", "latent.csv", "config.json"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_manifest(&out, "gen-synthetic", Some(truth.seed), serde_json::to_value(&truth)?, inputs, outputs)?;
    Ok(())
}

fn cmd_fetch(cli: &Cli, args: &FetchArgs) -> Result<()> {
    let out = out_only(cli)?;
    let cache = args.cache_dir.clone().unwrap_or_else(|| out.join("cache"));
    let mut opts = FetchOptions {
        start: args.start.clone(),
        end: args.end.clone(),
        offline: args.offline,
        ..FetchOptions::default()
    };
    if let Some(u) = &args.base_url {
        opts.base_url = u.clone();
    }
    let _lock = OutputLock::acquire(&out)?;
    let mut inputs = BTreeMap::new();
    let mut outputs = Vec::new();
    for id in &args.ids {
        let s = fetch_remote_series(id, &cache, &opts)?;
        let mut text = String::from("date,value\n");
        for (d, v) in s.dates.iter().zip(&s.values) {
            text.push_str(d);
            text.push(',');
            if !v.is_nan() {
                text.push_str(&v.to_string());
            }
            text.push('\n');
        }
        inputs.insert(id.clone(), sha256_hex(text.as_bytes()));
        write_text(&out.join(format!("{id}.csv")), &text)?;
        outputs.push(format!("{id}.csv"));
    }
    let config = serde_json::json!({
        "ids": args.ids,
        "start": args.start,
        "end": args.end,
        "base_url": opts.base_url,
    });
    write_manifest(&out, "fetch", cli.seed, config, inputs, outputs)
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::FitJoint => fit(cli, false),
        Command::FitTwostep => fit(cli, true),
        Command::Irf(a) => cmd_irf(cli, a),
        Command::Compare(a) => cmd_compare(cli, a),
        Command::SimulateLorenz(a) => cmd_simulate_lorenz(cli, a),
        Command::GenSynthetic(a) => cmd_gen_synthetic(cli, a),
        Command::Fetch(a) => cmd_fetch(cli, a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Validation(e.to_string()))?;
    run(&cli)
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Small-multiple line chart: one panel per variable, median line and the
/// outermost band of every series.
pub fn bands_svg(series: &[(&str, &IrfBands)]) -> String {
    use std::fmt::Write as _;
    let first = series[0].1;
    let vars = &first.variables;
    let (pw, ph, pad) = (260.0, 170.0, 30.0);
    let cols = 3usize;
    let rows = vars.len().div_ceil(cols);
    let width = cols as f64 * pw;
    let height = rows as f64 * ph + 24.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for (i, (label, _)) in series.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="14" fill="{}">{label}</text>"#,
            10.0 + 90.0 * i as f64,
            PALETTE[i % PALETTE.len()]
        );
    }
    for (v, name) in vars.iter().enumerate() {
        let x0 = (v % cols) as f64 * pw + pad;
        let y0 = (v / cols) as f64 * ph + 24.0 + 14.0;
        let w = pw - 1.5 * pad;
        let h = ph - pad - 14.0;
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for (_, b) in series {
            let n = b.spec.quantiles.len();
            for q in [0, n - 1] {
                for val in b.series(name, q).unwrap_or_default() {
                    lo = lo.min(val);
                    hi = hi.max(val);
                }
            }
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        let horizon = first.spec.horizon as f64;
        let px = |k: usize| x0 + w * k as f64 / horizon;
        let py = |val: f64| y0 + h * (hi - val) / (hi - lo);
        let _ = writeln!(s, r#"<text x="{x0}" y="{}">{name}</text>"#, y0 - 4.0);
        let _ = writeln!(
            s,
            r##"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>"##
        );
        if lo < 0.0 && hi > 0.0 {
            let z = py(0.0);
            let _ = writeln!(
                s,
                r##"<line x1="{x0}" y1="{z}" x2="{}" y2="{z}" stroke="#bbb" stroke-dasharray="3,3"/>"##,
                x0 + w
            );
        }
        for (i, (_, b)) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let n = b.spec.quantiles.len();
            let mid = b.quantile_index(0.5);
            for (q, dash) in [(0, "4,2"), (mid, ""), (n - 1, "4,2")] {
                let pts: Vec<String> = b
                    .series(name, q)
                    .unwrap_or_default()
                    .iter()
                    .enumerate()
                    .map(|(k, val)| format!("{:.2},{:.2}", px(k), py(*val)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-dasharray="{dash}"/>"#,
                    pts.join(" ")
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(
            &p,
            r#"{"income_csv": "a.csv", "income_schema": "s.json", "macro_csv": "/abs/m.csv",
                "instrument": "term-spread", "seed": 1, "out": "o"}"#,
        )
        .unwrap();
        let c = RunConfig::from_file(&p).unwrap();
        assert_eq!(c.income_csv, dir.path().join("a.csv"));
        assert_eq!(c.macro_csv, PathBuf::from("/abs/m.csv"));
        assert_eq!(c.out, Some(dir.path().join("o")));
        assert_eq!(c.irf_spec().unwrap().shock_variable, "spread");
        assert_eq!(c.variables().unwrap()[0], INEQUALITY_STATE);
        // Inputs do not exist.
        assert!(matches!(c.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"income_csv": "a", "income_schema": "b", "macro_csv": "c", "sead": 1}"#).unwrap();
        assert_eq!(RunConfig::from_file(&p).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        let err = OutputLock::acquire(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        drop(a);
        assert!(!dir.path().join(LOCK_FILE).exists());
        OutputLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn seed_is_mandatory() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["a.csv", "s.json", "m.csv"] {
            fs::write(dir.path().join(f), "").unwrap();
        }
        let p = dir.path().join("c.json");
        fs::write(
            &p,
            r#"{"income_csv": "a.csv", "income_schema": "s.json", "macro_csv": "m.csv", "instrument": "shadow-rate"}"#,
        )
        .unwrap();
        let err = RunConfig::from_file(&p).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }
}
