//! The `subsurf` command line: conversion, synthesis, attributes, fault and
//! salt workflows, labeling and rendering.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, bad config), 2 on
//! data errors (unreadable or invalid inputs, failed computations).

pub mod config;
pub mod render;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use subsurf::attributes::{
    glcm_section, got3d, got_section, gtc, gtc_section, sobel_directional, sobel_magnitude, AttributeVolume, SobelAngle,
};
use subsurf::fault::{detect_faults, discontinuity_from_coherence, discontinuity_map, rasterize, track_faults_sections, FaultNetwork, Polyline};
use subsurf::labeling::{
    extract_features, label_section, textures::composite_dataset, write_dataset, label_volume, nmf_pixel_annotation, oversegment_slic_gray, read_dataset,
    retrieve_similar, FeatureVector, FilterBank, KnnClassifier, LabelParams, TextureExtractor,
};
use subsurf::salt::{delineate_salt_boundary, track_salt_sequence, BoundaryCurve};
use subsurf::volume::{generate_synthetic, load_segy, read_svol, write_segy_with, write_svol, SyntheticSpec, SVOL_MAGIC};
use subsurf::{SectionAxis, SeismicVolume};

use config::{write_sidecar, PipelineConfig};

/// A mistake in the invocation rather than in the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "subsurf", version, about = "Seismic structural interpretation toolkit")]
pub struct Cli {
    /// TOML configuration with one table per module.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed; falls back to SUBSURF_SEED, then the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert between SEG-Y and SVOL (format chosen by the output extension).
    Convert(ConvertArgs),
    /// Generate a synthetic volume with planted structures.
    Synth(SynthArgs),
    /// Compute seismic attributes.
    #[command(subcommand)]
    Attr(AttrCommand),
    /// Fault detection and tracking.
    #[command(subcommand)]
    Fault(FaultCommand),
    /// Salt-dome delineation and tracking.
    #[command(subcommand)]
    Salt(SaltCommand),
    /// Texture features, retrieval, over-segmentation and labeling.
    #[command(subcommand)]
    Label(LabelCommand),
    /// Render a section as PGM or PNG.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// `.svol`, `.sgy` or `.segy`.
    #[arg(long)]
    pub out: PathBuf,
    /// Trace-header byte of the inline number.
    #[arg(long)]
    pub inline_byte: Option<usize>,
    /// Trace-header byte of the crossline number.
    #[arg(long)]
    pub crossline_byte: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Synthetic spec as TOML; defaults to the `[synth]` config table.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the voxel labels as an SVOL volume (or, with
    /// `--dataset`, a directory of PGM pixel labels).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write the two-texture image dataset of the `[composite]` table to
    /// the `--out` directory instead of a volume.
    #[arg(long, conflicts_with = "spec")]
    pub dataset: bool,
}

/// `axis:index`, e.g. `inline:32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectionRef {
    pub axis: SectionAxis,
    pub index: usize,
}

impl std::str::FromStr for SectionRef {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (axis, index) = s.split_once(':').ok_or_else(|| format!("expected axis:index, got {s:?}"))?;
        Ok(SectionRef {
            axis: axis.parse().map_err(|e: subsurf::Error| e.to_string())?,
            index: index.parse().map_err(|_| format!("bad section index {index:?}"))?,
        })
    }
}

fn parse_axis(s: &str) -> std::result::Result<SectionAxis, String> {
    s.parse().map_err(|e: subsurf::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct AttrArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Multi-channel results go to `<stem>.ch<k>.<ext>`.
    #[arg(long)]
    pub out: PathBuf,
    /// Restrict the computation to one section (`axis:index`).
    #[arg(long)]
    pub section: Option<SectionRef>,
}

#[derive(Args, Debug)]
pub struct SectionAttrArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub section: SectionRef,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AngleArg {
    #[value(name = "0")]
    D0,
    #[value(name = "45")]
    D45,
    #[value(name = "90")]
    D90,
    #[value(name = "-45")]
    Dm45,
}

impl From<AngleArg> for SobelAngle {
    fn from(a: AngleArg) -> Self {
        match a {
            AngleArg::D0 => SobelAngle::Deg0,
            AngleArg::D45 => SobelAngle::Deg45,
            AngleArg::D90 => SobelAngle::Deg90,
            AngleArg::Dm45 => SobelAngle::DegMinus45,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum AttrCommand {
    /// Three-channel gradient-structure-tensor coherence.
    Gtc(AttrArgs),
    /// Gradient of texture.
    Got(AttrArgs),
    /// Directional Sobel response on one section.
    Sobel {
        #[command(flatten)]
        args: SectionAttrArgs,
        /// Single direction; without it the magnitude over `[sobel] angles`.
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<AngleArg>,
    },
    /// Sliding-window GLCM statistics on one section (four channels).
    Glcm(SectionAttrArgs),
}

#[derive(Subcommand, Debug)]
pub enum FaultCommand {
    /// Detect faults on one section of a coherence set or seismic volume.
    Detect {
        /// Coherence set from `attr gtc`, or a seismic volume.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        section: SectionRef,
        /// Polyline text output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Carry reference fault networks to nearby sections.
    Track {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_axis)]
        axis: SectionAxis,
        /// `index=file`, repeatable.
        #[arg(long = "ref", required = true)]
        refs: Vec<String>,
        /// Sections to predict, e.g. `33,34` or `33-36`.
        #[arg(long)]
        predict: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum SaltCommand {
    /// Outline the salt body on one section from its GoT map.
    Delineate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        section: SectionRef,
        #[arg(long)]
        out: PathBuf,
        /// The input already holds GoT values.
        #[arg(long)]
        got: bool,
    },
    /// Track a boundary away from consecutive reference sections.
    Track {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_axis)]
        axis: SectionAxis,
        /// Boundary files of consecutive sections, in order.
        #[arg(long = "ref", required = true, num_args = 1..)]
        refs: Vec<PathBuf>,
        #[arg(long)]
        count: usize,
        /// Track towards lower section indices.
        #[arg(long)]
        backward: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum LabelCommand {
    /// Texture features of every image in a dataset directory.
    Features {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Images most similar to an exemplar, best first.
    Retrieve {
        /// Feature file from `label features`.
        #[arg(long)]
        features: PathBuf,
        /// Id of the exemplar image.
        #[arg(long)]
        exemplar: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// SLIC superpixels of one section, stored as segment ids.
    Overseg {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        section: SectionRef,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a volume (or one section) with a classifier trained on a dataset.
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        section: Option<SectionRef>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pixel labels for every dataset image by constrained NMF.
    Annotate {
        #[arg(long)]
        dataset: PathBuf,
        /// Expected class count; must match the dataset.
        #[arg(long)]
        classes: usize,
        /// Output directory of PGM label grids.
        #[arg(long)]
        out: PathBuf,
        /// Also write palette PNGs.
        #[arg(long)]
        png: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RenderKind {
    /// RGB for a three-channel set, gray otherwise.
    Auto,
    /// Class ids: raw for PGM, palette for PNG.
    Labels,
    /// Min–max gray.
    Attr,
    /// Channels 1, 2, 3 as R, G, B.
    Rgb,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// `.pgm` or `.png`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "inline:0")]
    pub section: SectionRef,
    #[arg(long, value_enum, default_value = "auto")]
    pub kind: RenderKind,
    /// Fault or boundary polylines drawn on top (PNG, gray only).
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.resolve(cli.seed, cli.workers)?;
    info!("workers {}, seed {:?}", cfg.workers, cfg.rng_seed);
    match cli.command {
        Command::Convert(a) => convert(&mut cfg, a),
        Command::Synth(a) => synth(&mut cfg, a),
        Command::Attr(c) => attr(&cfg, c),
        Command::Fault(c) => fault(&cfg, c),
        Command::Salt(c) => salt(&cfg, c),
        Command::Label(c) => label(&cfg, c),
        Command::Render(a) => render_cmd(&cfg, a),
    }
}

fn sidecar(out: &Path, command: &str, cfg: &PipelineConfig) -> Result<()> {
    write_sidecar(out, command, cfg.nmf.seed, cfg)
}

// ---------- volume and channel files ----------

/// SVOL by magic number, SEG-Y otherwise.
pub fn read_volume(path: &Path, cfg: &PipelineConfig) -> Result<SeismicVolume> {
    let mut magic = [0u8; 4];
    let is_svol = fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .map(|_| &magic == SVOL_MAGIC)
        .unwrap_or(false);
    let vol = if is_svol {
        read_svol(path)
    } else {
        load_segy(path, cfg.segy.options())
    };
    vol.with_context(|| format!("reading {}", path.display()))
}

/// `c.svol` → `c.ch2.svol`.
pub fn channel_path(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.ch{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}.ch{k}"),
    };
    path.with_file_name(name)
}

/// The file itself, or else its `.ch1`, `.ch2`, ... set.
pub fn read_channels(path: &Path, cfg: &PipelineConfig) -> Result<Vec<SeismicVolume>> {
    if path.exists() {
        return Ok(vec![read_volume(path, cfg)?]);
    }
    let mut out = Vec::new();
    while channel_path(path, out.len() + 1).exists() {
        out.push(read_volume(&channel_path(path, out.len() + 1), cfg)?);
    }
    if out.is_empty() {
        bail!("{}: no such file or channel set", path.display());
    }
    Ok(out)
}

fn write_channels(path: &Path, channels: &[SeismicVolume]) -> Result<()> {
    if let [single] = channels {
        return write_svol(single, path).with_context(|| format!("writing {}", path.display()));
    }
    for (k, ch) in channels.iter().enumerate() {
        let p = channel_path(path, k + 1);
        write_svol(ch, &p).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

/// A section grid stored as a one-inline volume.
fn section_volume(rows: usize, cols: usize, values: impl IntoIterator<Item = f64>) -> Result<SeismicVolume> {
    Ok(SeismicVolume::new(1, rows, cols, values.into_iter().map(|v| v as f32).collect())?)
}

fn check_section(vol: &SeismicVolume, s: SectionRef) -> Result<(usize, usize)> {
    let len = vol.axis_len(s.axis);
    if s.index >= len {
        bail!("{} {} outside 0..{len}", s.axis, s.index);
    }
    Ok(vol.section_shape(s.axis))
}

// ---------- commands ----------

fn convert(cfg: &mut PipelineConfig, a: ConvertArgs) -> Result<()> {
    if let Some(b) = a.inline_byte {
        cfg.segy.inline_byte = b;
    }
    if let Some(b) = a.crossline_byte {
        cfg.segy.crossline_byte = b;
    }
    let ext = a.out.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let to_segy = match ext.as_deref() {
        Some("svol") => false,
        Some("sgy" | "segy") => true,
        _ => return Err(usage(format!("{}: output must end in .svol, .sgy or .segy", a.out.display()))),
    };
    let vol = read_volume(&a.input, cfg)?;
    info!("read {:?} from {}", vol.dims(), a.input.display());
    if to_segy {
        write_segy_with(&vol, &a.out, cfg.segy.options())?;
    } else {
        write_svol(&vol, &a.out)?;
    }
    sidecar(&a.out, "convert", cfg)
}

fn synth(cfg: &mut PipelineConfig, a: SynthArgs) -> Result<()> {
    if let Some(path) = &a.spec {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read spec {}: {e}", path.display())))?;
        let mut spec: SyntheticSpec = toml::from_str(&text).map_err(|e| usage(format!("spec {}: {e}", path.display())))?;
        if let Some(seed) = cfg.rng_seed {
            spec.seed = seed;
        }
        cfg.synth = spec;
    }
    if a.dataset {
        let ds = composite_dataset(&cfg.composite)?;
        write_dataset(&ds.data, &a.out)?;
        if let Some(t) = &a.truth {
            fs::create_dir_all(t)?;
            let (h, w) = ds.data.image_shape;
            for (n, labels) in ds.truth.iter().enumerate() {
                render::write_bytes(&t.join(format!("label_{n:05}.pgm")), &render::pgm_bytes(h, w, labels))?;
            }
        }
        return write_sidecar(&a.out, "synth --dataset", cfg.composite.seed, cfg);
    }
    let (vol, truth) = generate_synthetic(&cfg.synth)?;
    write_svol(&vol, &a.out)?;
    if let Some(t) = &a.truth {
        let (ni, nx, ns) = truth.dims();
        let labels = SeismicVolume::new(ni, nx, ns, truth.labels().iter().map(|&l| l as f32).collect())?;
        write_svol(&labels, t)?;
    }
    write_sidecar(&a.out, "synth", cfg.synth.seed, cfg)
}

fn attr(cfg: &PipelineConfig, c: AttrCommand) -> Result<()> {
    let w = cfg.workers;
    let (out, name, channels) = match c {
        AttrCommand::Gtc(a) => {
            let vol = read_volume(&a.input, cfg)?;
            let channels = match a.section {
                Some(s) => {
                    let (rows, cols) = check_section(&vol, s)?;
                    let e = gtc_section(&vol, &cfg.gtc, s.axis, s.index, w)?;
                    (0..3)
                        .map(|k| section_volume(rows, cols, e.iter().map(|v| v[k])))
                        .collect::<Result<Vec<_>>>()?
                }
                None => {
                    let att = gtc(&vol, &cfg.gtc, w)?;
                    (0..3).map(|k| Ok(att.channel_volume(k)?)).collect::<Result<Vec<_>>>()?
                }
            };
            (a.out, "attr gtc", channels)
        }
        AttrCommand::Got(a) => {
            let vol = read_volume(&a.input, cfg)?;
            let ch = match a.section {
                Some(s) => {
                    let (rows, cols) = check_section(&vol, s)?;
                    section_volume(rows, cols, got_section(&vol, &cfg.got, s.axis, s.index, w)?)?
                }
                None => got3d(&vol, &cfg.got, w)?.channel_volume(0)?,
            };
            (a.out, "attr got", vec![ch])
        }
        AttrCommand::Sobel { args, angle } => {
            let vol = read_volume(&args.input, cfg)?;
            let (rows, cols) = check_section(&vol, args.section)?;
            let section = vol.extract_section(args.section.axis, args.section.index)?;
            let values = match angle {
                Some(a) => sobel_directional(&section, a.into())?,
                None => sobel_magnitude(&section, &cfg.sobel.angles)?,
            };
            (args.out, "attr sobel", vec![section_volume(rows, cols, values)?])
        }
        AttrCommand::Glcm(args) => {
            let vol = read_volume(&args.input, cfg)?;
            let (rows, cols) = check_section(&vol, args.section)?;
            let section = vol.extract_section(args.section.axis, args.section.index)?;
            let f = glcm_section(&section, &cfg.glcm)?;
            let channels = (0..4)
                .map(|k| section_volume(rows, cols, f.iter().map(|v| v[k])))
                .collect::<Result<Vec<_>>>()?;
            (args.out, "attr glcm", channels)
        }
    };
    write_channels(&out, &channels)?;
    sidecar(&out, name, cfg)
}

/// `33,35,40-42` → `[33, 35, 40, 41, 42]`.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || usage(format!("bad section list entry {part:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(usage("empty section list"));
    }
    Ok(out)
}

fn fault(cfg: &PipelineConfig, c: FaultCommand) -> Result<()> {
    match c {
        FaultCommand::Detect { input, section: s, out } => {
            let channels = read_channels(&input, cfg)?;
            let (rows, cols) = check_section(&channels[0], s)?;
            let map = match channels.len() {
                3 => discontinuity_from_coherence(
                    &AttributeVolume::from_volumes(&channels)?,
                    &cfg.fault.coherence_modes,
                    s.axis,
                    s.index,
                )?,
                1 => discontinuity_map(&channels[0], &cfg.gtc, &cfg.fault.coherence_modes, s.axis, s.index, cfg.workers)?,
                n => bail!("{}: expected a seismic volume or three coherence channels, found {n}", input.display()),
            };
            let det = detect_faults(&map, rows, cols, &cfg.fault)?;
            info!(
                "threshold {:.4}: {} features, {} kept, {} polylines",
                det.threshold,
                det.features.len(),
                det.pruned.len(),
                det.network.polylines.len()
            );
            fs::write(&out, det.network.to_text())?;
            sidecar(&out, "fault detect", cfg)
        }
        FaultCommand::Track { input, axis, refs, predict, out } => {
            let vol = read_volume(&input, cfg)?;
            let mut references = BTreeMap::new();
            for r in &refs {
                let (idx, file) = r.split_once('=').ok_or_else(|| usage(format!("--ref expects index=file, got {r:?}")))?;
                let idx: usize = idx.parse().map_err(|_| usage(format!("bad reference index in {r:?}")))?;
                let text = fs::read_to_string(file).with_context(|| format!("reading {file}"))?;
                references.insert(idx, FaultNetwork::from_text(&text)?);
            }
            let predicted = parse_index_list(&predict)?;
            let tracked = track_faults_sections(&vol, axis, &references, &predicted, &cfg.fault_track)?;
            fs::create_dir_all(&out)?;
            for (idx, net) in &tracked {
                fs::write(out.join(format!("{axis}_{idx:05}.txt")), net.to_text())?;
            }
            sidecar(&out, "fault track", cfg)
        }
    }
}

fn salt(cfg: &PipelineConfig, c: SaltCommand) -> Result<()> {
    match c {
        SaltCommand::Delineate { input, section: s, out, got } => {
            let vol = read_volume(&input, cfg)?;
            let (rows, cols) = check_section(&vol, s)?;
            let map = if got {
                vol.extract_section(s.axis, s.index)?.to_f64()
            } else {
                got_section(&vol, &cfg.got, s.axis, s.index, cfg.workers)?
            };
            let curve = delineate_salt_boundary(&map, rows, cols, &cfg.salt, s.index)?;
            info!("boundary of {} points", curve.len());
            fs::write(&out, curve.to_text())?;
            sidecar(&out, "salt delineate", cfg)
        }
        SaltCommand::Track { input, axis, refs, count, backward, out } => {
            let vol = read_volume(&input, cfg)?;
            let references = refs
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    Ok(BoundaryCurve::from_text(&text)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let curves = track_salt_sequence(&vol, axis, &references, count, backward, &cfg.salt_track, cfg.workers)?;
            fs::create_dir_all(&out)?;
            for c in &curves {
                fs::write(out.join(format!("{axis}_{:05}.txt", c.section_index)), c.to_text())?;
            }
            sidecar(&out, "salt track", cfg)
        }
    }
}

// ---------- feature files ----------

/// `# extractor <id>` then `id class v1 v2 ...` per image.
pub fn features_to_text(features: &[FeatureVector], classes: &[u8]) -> String {
    let mut out = String::new();
    if let Some(f) = features.first() {
        let _ = writeln!(out, "# extractor {}", f.extractor_id);
    }
    for (n, (f, c)) in features.iter().zip(classes).enumerate() {
        let _ = write!(out, "{n} {c}");
        for v in &f.values {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn features_from_text(text: &str) -> Result<(Vec<FeatureVector>, Vec<u8>)> {
    let mut id = String::from("-");
    let mut feats = Vec::new();
    let mut classes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# extractor") {
            id = rest.trim().to_string();
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || anyhow!("feature line {}: expected `id class values...`", lineno + 1);
        let mut parts = line.split_whitespace();
        let n: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if n != feats.len() {
            bail!("feature line {}: id {n} out of order", lineno + 1);
        }
        classes.push(parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?);
        let values = parts.map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        feats.push(FeatureVector::new(values, id.clone())?);
    }
    Ok((feats, classes))
}

fn dataset_features(cfg: &PipelineConfig, dir: &Path) -> Result<(Vec<FeatureVector>, Vec<u8>)> {
    let ds = read_dataset(dir).with_context(|| format!("reading dataset {}", dir.display()))?;
    let bank = FilterBank::new(cfg.features.clone())?;
    let images: Vec<_> = (0..ds.len()).map(|n| ds.image(n)).collect();
    Ok((extract_features(&bank, &images, cfg.workers)?, ds.labels))
}

fn label(cfg: &PipelineConfig, c: LabelCommand) -> Result<()> {
    match c {
        LabelCommand::Features { dataset, out } => {
            let (feats, classes) = dataset_features(cfg, &dataset)?;
            fs::write(&out, features_to_text(&feats, &classes))?;
            sidecar(&out, "label features", cfg)
        }
        LabelCommand::Retrieve { features, exemplar, k, out } => {
            let text = fs::read_to_string(&features).with_context(|| format!("reading {}", features.display()))?;
            let (feats, classes) = features_from_text(&text)?;
            let ex = feats
                .get(exemplar)
                .ok_or_else(|| anyhow!("exemplar {exemplar} outside 0..{}", feats.len()))?;
            let top = retrieve_similar(ex, &feats, k.unwrap_or(cfg.label.retrieve))?;
            let mut s = String::from("# rank id class similarity\n");
            for (rank, (id, score)) in top.iter().enumerate() {
                let _ = writeln!(s, "{} {id} {} {score}", rank + 1, classes[*id]);
            }
            fs::write(&out, s)?;
            sidecar(&out, "label retrieve", cfg)
        }
        LabelCommand::Overseg { input, section: s, out } => {
            let vol = read_volume(&input, cfg)?;
            let (rows, cols) = check_section(&vol, s)?;
            let map = oversegment_slic_gray(&vol.extract_section(s.axis, s.index)?, &cfg.slic)?;
            info!("{} segments", map.segment_count);
            write_svol(&section_volume(rows, cols, map.labels.iter().map(|&l| l as f64))?, &out)?;
            sidecar(&out, "label overseg", cfg)
        }
        LabelCommand::Classify { input, dataset, section, out } => {
            let vol = read_volume(&input, cfg)?;
            let (feats, classes) = dataset_features(cfg, &dataset)?;
            let mut knn = KnnClassifier::new(cfg.label.k);
            knn.train(feats, classes)?;
            let labelled = match section {
                Some(s) => {
                    let (rows, cols) = check_section(&vol, s)?;
                    let bank = FilterBank::new(cfg.features.clone())?;
                    let extractor: &dyn TextureExtractor = &bank;
                    let (_, labels) = label_section(&vol.extract_section(s.axis, s.index)?, &knn, extractor, &cfg.slic)?;
                    section_volume(rows, cols, labels.iter().map(|&l| l as f64))?
                }
                None => {
                    let params = LabelParams {
                        axis: cfg.label.axis,
                        slic: cfg.slic.clone(),
                        features: cfg.features.clone(),
                        workers: cfg.workers,
                    };
                    let lv = label_volume(&vol, &knn, &params)?;
                    let (ni, nx, ns) = lv.dims;
                    SeismicVolume::new(ni, nx, ns, lv.labels.iter().map(|&l| l as f32).collect())?
                }
            };
            write_svol(&labelled, &out)?;
            sidecar(&out, "label classify", cfg)
        }
        LabelCommand::Annotate { dataset, classes, out, png } => {
            let ds = read_dataset(&dataset).with_context(|| format!("reading dataset {}", dataset.display()))?;
            if ds.class_count != classes {
                bail!("dataset {} has {} classes, --classes says {classes}", dataset.display(), ds.class_count);
            }
            let result = nmf_pixel_annotation(&ds, &cfg.nmf)?;
            info!(
                "{} iterations, final objective {:.6e}",
                result.model.objective_log.len(),
                result.model.objective_log.last().copied().unwrap_or(result.model.initial_objective)
            );
            fs::create_dir_all(&out)?;
            let (h, w) = ds.image_shape;
            for (n, labels) in result.labels.iter().enumerate() {
                render::write_bytes(&out.join(format!("label_{n:05}.pgm")), &render::pgm_bytes(h, w, labels))?;
                if png {
                    render::render_labels(&out.join(format!("label_{n:05}.png")), h, w, labels)?;
                }
            }
            sidecar(&out, "label annotate", cfg)
        }
    }
}

// ---------- render ----------

fn overlay_mask(path: &Path, rows: usize, cols: usize) -> Result<(Vec<bool>, [u8; 3])> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let boundary = text.lines().any(|l| l.trim() == "CLOSED");
    let (net, color) = if boundary {
        let curve = BoundaryCurve::from_text(&text)?;
        let mut points = curve.points.clone();
        if let Some(&first) = curve.points.first() {
            points.push(first);
        }
        let net = FaultNetwork {
            polylines: vec![Polyline { id: 0, points, features: Vec::new() }],
        };
        (net, render::palette_color(2))
    } else {
        (FaultNetwork::from_text(&text)?, render::palette_color(1))
    };
    Ok((rasterize(&net, rows, cols).data, color))
}

fn render_cmd(cfg: &PipelineConfig, a: RenderArgs) -> Result<()> {
    let channels = read_channels(&a.input, cfg)?;
    let s = a.section;
    let (rows, cols) = check_section(&channels[0], s)?;
    let grids = channels
        .iter()
        .map(|v| Ok(render::transpose(rows, cols, &v.extract_section(s.axis, s.index)?.to_f64())))
        .collect::<Result<Vec<_>>>()?;
    // depth runs down the image
    let (h, w) = (cols, rows);
    let kind = match a.kind {
        RenderKind::Auto if grids.len() == 3 => RenderKind::Rgb,
        RenderKind::Auto => RenderKind::Attr,
        k => k,
    };
    if a.overlay.is_some() && kind != RenderKind::Attr {
        return Err(usage("--overlay works with gray attribute rendering only"));
    }
    match kind {
        RenderKind::Labels => render::render_labels(&a.out, h, w, &render::class_ids(&grids[0])?)?,
        RenderKind::Rgb => {
            if grids.len() != 3 {
                bail!("rgb rendering needs three channels, found {}", grids.len());
            }
            render::render_rgb(&a.out, h, w, [&grids[0], &grids[1], &grids[2]])?
        }
        _ => match &a.overlay {
            Some(p) => {
                let (mask, color) = overlay_mask(p, rows, cols)?;
                render::render_gray_overlay(&a.out, h, w, &grids[0], &render::transpose(rows, cols, &mask), color)?
            }
            None => render::render_gray(&a.out, h, w, &grids[0])?,
        },
    }
    sidecar(&a.out, "render", cfg)
}
