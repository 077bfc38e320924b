use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kerr_modes::cavity::{Branch, CavityConfig};
use kerr_modes::continuation::{bistability_scan, DEFAULT_EPSILON};
use kerr_modes::coupling::{lambda_exact, mu_constants, CouplingIndex};
use kerr_modes::freespace::{
    added_noise_from_coefficients, integrate_truncated, propagate_mean, ThinMediumParams,
};
use kerr_modes::perturbative::steady_state_perturbative;
use kerr_modes::presets::{
    brute_at, brute_model, perturbative_at, perturbative_model, single_mode_at, single_mode_model, two_mode_at,
    two_mode_model, Figure, FigureKind, LoChoice, NoiseModel, Observable, Series,
};
use kerr_modes::spectra::{omega_grid, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_POINTS};
use kerr_modes::twomode::{two_mode_curve, TwoModeConfig};
use kerr_modes::Form;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

mod config;
mod output;
mod selftest;
mod svg;

use config::{pick, require, RunConfig};
use output::{csv, destination, directory, emit, json, num, series_csv, Format};
use svg::{export_svg, PlotStyle};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Solver(#[from] kerr_modes::Error),
    #[error("partial results: {0}")]
    Partial(String),
    #[error("{0} self-test check(s) failed")]
    SelfTest(usize),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Solver(kerr_modes::Error::InvalidParameter { .. }) => 1,
            Self::Solver(_) | Self::Partial(_) | Self::SelfTest(_) => 2,
        }
    }
}

/// Transverse-mode coupling in a Kerr medium: coefficients, bistability and
/// squeezing spectra.
#[derive(Debug, Parser)]
#[command(name = "kerr-modes", version)]
struct Cli {
    /// TOML file with `[model]`, `[scan]`, `[omega]` and `[output]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file, or directory for `preset`.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact coupling coefficient λ_pqrs^(lmno).
    Coeffs(CoeffArgs),
    /// The μ sums of the perturbative multimode treatment.
    Mu {
        #[arg(long, default_value_t = 60)]
        cutoff: u32,
    },
    /// Thin-medium propagation of a Gaussian beam.
    Freespace(FreeSpaceArgs),
    /// Intracavity fundamental intensity against detuning.
    Bistability {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Noise spectrum of the output field at one working point.
    Spectrum(SpectrumArgs),
    /// Regenerates the data behind one of the six figures.
    Preset {
        #[arg(value_parser = parse_figure)]
        name: Figure,
        /// Working point offset from the turning point.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        omega: OmegaArgs,
    },
    /// Runs the oracle equivalence checks.
    Selftest,
}

#[derive(Debug, Args)]
struct CoeffArgs {
    #[arg(long)]
    p: u32,
    #[arg(long, default_value_t = 0)]
    q: u32,
    #[arg(long, default_value_t = 0)]
    r: u32,
    #[arg(long, default_value_t = 0)]
    s: u32,
    #[arg(long, default_value_t = 0)]
    l: u32,
    #[arg(long, default_value_t = 0)]
    m: u32,
    #[arg(long, default_value_t = 0)]
    n: u32,
    #[arg(long, default_value_t = 0)]
    o: u32,
}

#[derive(Debug, Args)]
struct FreeSpaceArgs {
    /// Normalized Kerr strength K̂.
    #[arg(long)]
    k_hat: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a_im: f64,
    #[arg(long, value_enum)]
    form: Option<FormArg>,
    /// Also integrate the truncated mode equations.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Single,
    Twomode,
    Multimode,
    Brute,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BranchArg {
    Upper,
    Middle,
    Lower,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormArg {
    Printed,
    Rederived,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Printed => Form::Printed,
            FormArg::Rederived => Form::Rederived,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LoArg {
    Tem00,
    Optimized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObservableArg {
    Quadrature,
    Intensity,
    IntensityFundamental,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Normalized Kerr coefficient.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Detuning of the fundamental mode; without it the working point sits
    /// `epsilon` bistable widths inside the upper turning point.
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<f64>,
    /// Transverse mode spacing.
    #[arg(long)]
    phi_t: Option<f64>,
    /// Relative detuning of the perturbing mode.
    #[arg(long, allow_hyphen_values = true)]
    dphi: Option<f64>,
    /// Order of the perturbing mode.
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    n_modes: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long, value_enum)]
    form: Option<FormArg>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    phi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct OmegaArgs {
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_points: Option<usize>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    omega: OmegaArgs,
    #[arg(long, value_enum)]
    lo: Option<LoArg>,
    #[arg(long, value_enum)]
    observable: Option<ObservableArg>,
    /// JSON output of an earlier `spectrum` run; its working point is reused.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Accept a working point with unstable eigenvalues.
    #[arg(long)]
    allow_unstable: bool,
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    Figure::parse(s).ok_or_else(|| format!("unknown preset `{s}`; expected fig1 … fig6"))
}

/// Every field needed to reproduce a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SpectrumDoc {
    working_point: NoiseModel,
    description: String,
    observable: Observable,
    lo: LoChoice,
    omega: Vec<f64>,
    value: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct PresetDoc<'a> {
    figure: &'static str,
    k: f64,
    epsilon: f64,
    x_label: &'a str,
    y_label: &'a str,
    partial: bool,
    failed: Vec<String>,
    series: &'a [Series],
    working_points: &'a [NoiseModel],
}

struct Context {
    file: RunConfig,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Context {
    fn format(&self, default: Format) -> Result<Format, CliError> {
        match (self.format, &self.file.output.format) {
            (Some(f), _) => Ok(f),
            (None, Some(s)) => Format::parse(s),
            (None, None) => Ok(default),
        }
    }

    fn out(&self) -> Option<PathBuf> {
        self.out.clone().or_else(|| self.file.output.path.clone())
    }
}

fn positive(value: f64, field: &str) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Config(format!("`{field}` must be positive and finite, got {value}")))
    }
}

fn non_negative(value: f64, field: &str) -> Result<f64, CliError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Config(format!("`{field}` must be non-negative and finite, got {value}")))
    }
}

fn parse_enum<T: ValueEnum>(s: &str, field: &str) -> Result<T, CliError> {
    T::from_str(s, true).map_err(|_| CliError::Config(format!("invalid value `{s}` for `{field}`")))
}

struct Resolved {
    kind: ModelKind,
    k: f64,
    phi0: Option<f64>,
    phi_t: Option<f64>,
    dphi: f64,
    p: Option<u32>,
    n_modes: usize,
    epsilon: f64,
    branch: Branch,
    form: Form,
}

fn resolve(args: &ModelArgs, file: &RunConfig) -> Result<Resolved, CliError> {
    let m = &file.model;
    let kind = match (args.model, &m.kind) {
        (Some(k), _) => k,
        (None, Some(s)) => parse_enum(s, "model")?,
        (None, None) => ModelKind::Single,
    };
    let branch = match (args.branch, &m.branch) {
        (Some(b), _) => b,
        (None, Some(s)) => parse_enum(s, "branch")?,
        (None, None) => BranchArg::Upper,
    };
    let form = match (args.form, &m.form) {
        (Some(f), _) => f,
        (None, Some(s)) => parse_enum(s, "form")?,
        (None, None) => FormArg::Printed,
    };
    let resolved = Resolved {
        kind,
        k: non_negative(pick(args.k, &m.k, 2.5), "k")?,
        phi0: args.phi0.or(m.phi0),
        phi_t: args.phi_t.or(m.phi_t),
        dphi: pick(args.dphi, &m.delta_phi, 0.0),
        p: args.p.or(m.p),
        n_modes: pick(args.n_modes, &m.n_modes, 10),
        epsilon: non_negative(pick(args.epsilon, &m.epsilon, DEFAULT_EPSILON), "epsilon")?,
        branch: match branch {
            BranchArg::Upper => Branch::Upper,
            BranchArg::Middle => Branch::Middle,
            BranchArg::Lower => Branch::Lower,
        },
        form: form.into(),
    };
    match kind {
        ModelKind::Twomode if resolved.p.is_none() => {
            return Err(CliError::Config("model `twomode` needs `p`".into()));
        }
        ModelKind::Multimode | ModelKind::Brute => {
            positive(require(args.phi_t, &m.phi_t, "phi_t")?, "phi_t")?;
        }
        _ => {}
    }
    if kind == ModelKind::Brute && resolved.n_modes == 0 {
        return Err(CliError::Config("`n_modes` must be at least 1".into()));
    }
    Ok(resolved)
}

fn build_model(r: &Resolved) -> Result<NoiseModel, CliError> {
    let phi_t = r.phi_t.unwrap_or(f64::INFINITY);
    let model = match (r.kind, r.phi0) {
        (ModelKind::Single, Some(phi0)) => single_mode_at(r.k, phi0, r.branch)?,
        (ModelKind::Single, None) => single_mode_model(r.k, r.epsilon)?,
        (ModelKind::Twomode, phi0) => {
            let cfg = TwoModeConfig::new(r.k, r.p.unwrap_or(1), r.dphi)?;
            match phi0 {
                Some(phi_a) => two_mode_at(&cfg, phi_a, r.branch)?,
                None => two_mode_model(&cfg, r.epsilon)?,
            }
        }
        (ModelKind::Multimode, Some(phi0)) => perturbative_at(r.k, phi_t, phi0, r.branch, r.form)?,
        (ModelKind::Multimode, None) => perturbative_model(r.k, phi_t, r.epsilon, r.form)?,
        (ModelKind::Brute, Some(phi0)) => brute_at(r.k, phi_t, r.n_modes, phi0, r.branch)?,
        (ModelKind::Brute, None) => brute_model(r.k, phi_t, r.n_modes, r.epsilon)?,
    };
    Ok(model)
}

fn omegas(args: &OmegaArgs, file: &RunConfig) -> Result<Vec<f64>, CliError> {
    let max = non_negative(pick(args.omega_max, &file.omega.max, DEFAULT_OMEGA_MAX), "omega_max")?;
    let points = pick(args.omega_points, &file.omega.points, DEFAULT_OMEGA_POINTS);
    if points == 0 {
        return Err(CliError::Config("`omega_points` must be at least 1".into()));
    }
    Ok(omega_grid(max, points))
}

fn coeffs(ctx: &Context, a: &CoeffArgs) -> Result<(), CliError> {
    let index = CouplingIndex::new([a.p, a.q, a.r, a.s], [a.l, a.m, a.n, a.o]);
    let exact = lambda_exact(a.p, a.q, a.r, a.s, a.l, a.m, a.n, a.o);
    let value = kerr_modes::coupling::CouplingTensor::global().get_f64(index);
    let text = match ctx.format(Format::Csv)? {
        Format::Json => json(&serde_json::json!({
            "radial": [a.p, a.q, a.r, a.s],
            "angular": [a.l, a.m, a.n, a.o],
            "exact": exact.to_string(),
            "value": value,
            "selection_rule": index.satisfies_selection_rule(),
        })),
        _ => format!("{exact}\n{value}\n"),
    };
    emit(destination(ctx.out().as_deref(), "coeffs.txt").as_deref(), &text)
}

fn mu(ctx: &Context, cutoff: u32) -> Result<(), CliError> {
    if cutoff == 0 {
        return Err(CliError::Config("`cutoff` must be at least 1".into()));
    }
    let mu = mu_constants(cutoff);
    let text = match ctx.format(Format::Csv)? {
        Format::Json => json(&mu),
        _ => csv(
            &["name", "value"],
            [
                vec!["mu1".into(), num(mu.mu1)],
                vec!["mu2".into(), num(mu.mu2)],
                vec!["mu3".into(), num(mu.mu3)],
                vec!["tail_bound".into(), num(mu.tail_bound)],
            ],
        ),
    };
    emit(destination(ctx.out().as_deref(), "mu.csv").as_deref(), &text)
}

fn freespace(ctx: &Context, a: &FreeSpaceArgs) -> Result<(), CliError> {
    let params = ThinMediumParams::new(a.k_hat, Complex64::new(a.a_re, a.a_im))?;
    let form: Form = a.form.map(Into::into).unwrap_or_default();
    let result = propagate_mean(&params);
    let v_add = added_noise_from_coefficients(&params, form);
    let oracle = if a.oracle { Some(integrate_truncated(&params)?[0]) } else { None };
    if !result.perturbative {
        eprintln!(
            "warning: K̂|A_in|² = {} exceeds the validity threshold {}",
            result.phi_nl, params.validity_threshold
        );
    }
    let text = match ctx.format(Format::Csv)? {
        Format::Json => json(&serde_json::json!({
            "result": result,
            "v_add_from_coefficients": v_add,
            "oracle_a_out": oracle,
        })),
        _ => {
            let mut rows = vec![
                vec!["a_out_re".into(), num(result.a_out.re)],
                vec!["a_out_im".into(), num(result.a_out.im)],
                vec!["phi_nl".into(), num(result.phi_nl)],
                vec!["gamma_nl".into(), num(result.gamma_nl)],
            ];
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                rows.push(vec![format!("v_add_{i}{j}_re"), num(result.v_add[(i, j)].re)]);
                rows.push(vec![format!("v_add_{i}{j}_im"), num(result.v_add[(i, j)].im)]);
            }
            if let Some(o) = oracle {
                rows.push(vec!["oracle_a_out_re".into(), num(o.re)]);
                rows.push(vec!["oracle_a_out_im".into(), num(o.im)]);
            }
            csv(&["name", "value"], rows)
        }
    };
    emit(destination(ctx.out().as_deref(), "freespace.csv").as_deref(), &text)
}

fn bistability(ctx: &Context, model: &ModelArgs, scan: &ScanArgs) -> Result<(), CliError> {
    let r = resolve(model, &ctx.file)?;
    let s = &ctx.file.scan;
    let phi_min = pick(scan.phi_min, &s.phi_min, -2.0);
    let phi_max = pick(scan.phi_max, &s.phi_max, 6.0);
    let steps = pick(scan.steps, &s.steps, 400);
    if !(phi_min < phi_max) || !phi_min.is_finite() || !phi_max.is_finite() {
        return Err(CliError::Config(format!("scan range [{phi_min}, {phi_max}] is empty")));
    }
    if steps < 2 {
        return Err(CliError::Config("`steps` must be at least 2".into()));
    }
    let format = ctx.format(Format::Csv)?;
    let (label, text) = if r.kind == ModelKind::Multimode {
        let phi_t = r.phi_t.unwrap_or(f64::INFINITY);
        let mut rows = Vec::new();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..=steps {
            let phi = phi_min + (phi_max - phi_min) * i as f64 / steps as f64;
            let cfg = CavityConfig::family(r.k, phi, phi_t, 1);
            for (j, root) in steady_state_perturbative(&cfg, r.form)?.iter().enumerate() {
                rows.push(vec![num(phi), num(root.intensity), j.to_string()]);
                x.push(phi);
                y.push(root.intensity);
            }
        }
        let series = [Series { label: "multimode".into(), x, y, dashed: false }];
        let text = match format {
            Format::Csv => csv(&["phi", "intensity", "root"], rows),
            Format::Json => json(&series),
            Format::Svg => export_svg(&series, &PlotStyle::bistability("perturbative multimode")),
        };
        ("multimode", text)
    } else {
        let curve = match r.kind {
            ModelKind::Single => bistability_scan(&CavityConfig::single_mode(r.k, phi_min), phi_min, phi_max, steps)?,
            ModelKind::Twomode => {
                two_mode_curve(&TwoModeConfig::new(r.k, r.p.unwrap_or(1), r.dphi)?, phi_min, phi_max, steps)?
            }
            _ => {
                let cfg = CavityConfig::family(r.k, phi_min, r.phi_t.unwrap_or(f64::INFINITY), r.n_modes);
                bistability_scan(&cfg, phi_min, phi_max, steps)?
            }
        };
        let text = match format {
            Format::Csv => csv(
                &["phi", "intensity", "branch", "stable", "segment", "max_real_eigenvalue"],
                curve.samples.iter().map(|s| {
                    vec![
                        num(s.phi),
                        num(s.intensity),
                        s.branch.as_str().to_string(),
                        s.stable.to_string(),
                        s.segment.to_string(),
                        num(s.max_real_eigenvalue),
                    ]
                }),
            ),
            Format::Json => json(&curve),
            Format::Svg => {
                let series = [Series {
                    label: format!("{:?}", r.kind).to_lowercase(),
                    x: curve.samples.iter().map(|s| s.phi).collect(),
                    y: curve.samples.iter().map(|s| s.intensity).collect(),
                    dashed: false,
                }];
                export_svg(&series, &PlotStyle::bistability("bistability"))
            }
        };
        ("bistability", text)
    };
    let name = format!("{label}.{}", format.extension());
    emit(destination(ctx.out().as_deref(), &name).as_deref(), &text)
}

fn spectrum(ctx: &Context, a: &SpectrumArgs) -> Result<(), CliError> {
    let previous: Option<SpectrumDoc> = match &a.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: not a spectrum JSON document: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let model = match &previous {
        Some(doc) => doc.working_point.clone(),
        None => build_model(&resolve(&a.model, &ctx.file)?)?,
    };
    if !model.is_stable() && !a.allow_unstable {
        return Err(CliError::Config(format!(
            "working point {} is unstable; pass --allow-unstable to use it",
            model.describe()
        )));
    }
    let observable = match (a.observable, &previous) {
        (Some(ObservableArg::Quadrature), _) => Observable::Quadrature,
        (Some(ObservableArg::Intensity), _) => Observable::Intensity,
        (Some(ObservableArg::IntensityFundamental), _) => Observable::IntensityFundamental,
        (None, Some(doc)) => doc.observable,
        (None, None) => Observable::Quadrature,
    };
    let lo = match (a.lo, &previous) {
        (Some(LoArg::Tem00), _) => LoChoice::Tem00,
        (Some(LoArg::Optimized), _) => LoChoice::Optimized,
        (None, Some(doc)) => doc.lo,
        (None, None) => LoChoice::Tem00,
    };
    if lo == LoChoice::Optimized && matches!(model, NoiseModel::Perturbative { .. }) {
        eprintln!("note: the perturbative model only resolves the fundamental mode; the optimized LO acts on it alone");
    }
    let grid = match (&previous, a.omega.omega_max.or(a.omega.omega_points.map(|_| 0.0))) {
        (Some(doc), None) => doc.omega.clone(),
        _ => omegas(&a.omega, &ctx.file)?,
    };
    let series = model.spectrum(observable, lo, &grid)?;
    let doc = SpectrumDoc {
        description: model.describe(),
        working_point: model,
        observable,
        lo,
        omega: series.samples.iter().map(|s| s.0).collect(),
        value: series.samples.iter().map(|s| s.1).collect(),
    };
    let format = ctx.format(Format::Csv)?;
    let text = match format {
        Format::Csv => csv(&["omega", "value"], doc.omega.iter().zip(&doc.value).map(|(w, v)| vec![num(*w), num(*v)])),
        Format::Json => json(&doc),
        Format::Svg => export_svg(
            &[Series { label: doc.description.clone(), x: doc.omega.clone(), y: doc.value.clone(), dashed: false }],
            &PlotStyle::spectrum("noise spectrum"),
        ),
    };
    emit(destination(ctx.out().as_deref(), &format!("spectrum.{}", format.extension())).as_deref(), &text)
}

fn preset(ctx: &Context, figure: Figure, epsilon: Option<f64>, omega: &OmegaArgs) -> Result<(), CliError> {
    let epsilon = non_negative(pick(epsilon, &ctx.file.model.epsilon, DEFAULT_EPSILON), "epsilon")?;
    let grid = omegas(omega, &ctx.file)?;
    let preset = figure.preset();
    let (data, failures) = preset.run_partial(epsilon, Some(&grid));
    let dir = directory(ctx.out().as_deref());
    let name = figure.name();
    let doc = PresetDoc {
        figure: name,
        k: preset.k,
        epsilon,
        x_label: &data.x_label,
        y_label: &data.y_label,
        partial: !failures.is_empty(),
        failed: failures.iter().map(|(label, e)| format!("{label}: {e}")).collect(),
        series: &data.series,
        working_points: &data.models,
    };
    let style = match preset.kind {
        FigureKind::Bistability => PlotStyle::bistability(name),
        FigureKind::Spectrum(..) => PlotStyle::spectrum(name),
    };
    let wanted = |f: Format| ctx.format.is_none() && ctx.file.output.format.is_none() || ctx.format(f).ok() == Some(f);
    for f in [Format::Csv, Format::Json, Format::Svg] {
        if !wanted(f) {
            continue;
        }
        let text = match f {
            Format::Csv => series_csv(&data.series),
            Format::Json => json(&doc),
            Format::Svg => export_svg(&data.series, &style),
        };
        let path = dir.join(format!("{name}.{}", f.extension()));
        emit(Some(&path), &text)?;
        println!("{}", path.display());
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial(doc.failed.join("; ")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context { file, format: cli.format, out: cli.out };
    match &cli.command {
        Command::Coeffs(a) => coeffs(&ctx, a),
        Command::Mu { cutoff } => mu(&ctx, *cutoff),
        Command::Freespace(a) => freespace(&ctx, a),
        Command::Bistability { model, scan } => bistability(&ctx, model, scan),
        Command::Spectrum(a) => spectrum(&ctx, a),
        Command::Preset { name, epsilon, omega } => preset(&ctx, *name, *epsilon, omega),
        Command::Selftest => selftest::run(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
