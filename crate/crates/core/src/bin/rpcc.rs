use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rpcc::codec::{compress_detailed, decompress_detailed, read_stream, write_stream};
use rpcc::config::SensorPreset;
use rpcc::experiments::{bench, rows_to_csv, sweep};
use rpcc::io::{read_scan, rimg_bytes, write_points, write_rimg, ScanFormat};
use rpcc::metrics::{chamfer_sym, d2_psnr, f1_score, rate_report, QualityReport};
use rpcc::range_image::to_point_cloud;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::{BackendId, CodecConfig, Error, Mode, RangeImage, Segmentation, SensorGeometry};

#[derive(Parser)]
#[command(name = "rpcc", version, about = "Range-image LiDAR point cloud codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress one or more scans into a .rpcc stream (one frame per input).
    Compress {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Decode a .rpcc stream. Multi-frame streams write `<stem>_<n>.<ext>`.
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// kitti_bin, xyz_text or rimg; guessed from the extension if omitted.
        #[arg(long)]
        format: Option<ScanFormat>,
    },
    /// Compare an original and a reconstructed scan; prints a JSON report.
    Evaluate {
        original: PathBuf,
        reconstructed: PathBuf,
        /// Compressed stream, for the rate fields.
        #[arg(long)]
        compressed: Option<PathBuf>,
        #[arg(long, default_value_t = 0.02)]
        tau: f64,
        #[arg(long, default_value_t = 59.70)]
        peak: f64,
        #[command(flatten)]
        scan: ScanArgs,
        /// Emit CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Time every entropy backend on one frame.
    Bench {
        /// Scan to use; a generated 64-beam street if omitted.
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        codec: CodecArgs,
        #[arg(long)]
        csv: bool,
    },
    /// Compress every scan in a directory under a grid of configurations.
    Sweep {
        corpus: PathBuf,
        /// Comma-separated cluster counts.
        #[arg(long, value_delimiter = ',', default_value = "100")]
        clusters: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "bzip2")]
        backends: Vec<BackendId>,
        #[arg(long, value_delimiter = ',', default_value = "uniform")]
        modes: Vec<Mode>,
        /// Comma-separated: plane, point.
        #[arg(long, value_delimiter = ',', default_value = "plane")]
        modeling: Vec<String>,
        /// Also run DBSCAN with this eps (meters).
        #[arg(long)]
        dbscan_eps: Option<f64>,
        #[arg(long, default_value_t = 0.02)]
        accuracy: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        scan: ScanArgs,
        /// Write the CSV here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic scene (format from the output extension).
    GenScene {
        #[arg(long, default_value = "street")]
        kind: SceneKind,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.005)]
        noise: f64,
        #[arg(long, default_value_t = 0.01)]
        dropout: f64,
        #[command(flatten)]
        scan: ScanArgs,
    },
}

#[derive(Args, Clone)]
struct ScanArgs {
    /// Input format; guessed from the extension if omitted.
    #[arg(long = "input-format")]
    input_format: Option<ScanFormat>,
    /// vlp16, hdl32e or hdl64e. Ignored for rimg input.
    #[arg(long, default_value = "hdl64e")]
    sensor: SensorPreset,
    /// Override the preset beam count.
    #[arg(long)]
    beams: Option<usize>,
    /// Override the horizontal resolution, degrees.
    #[arg(long)]
    hres: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_max: Option<f64>,
}

impl ScanArgs {
    fn geometry(&self) -> rpcc::Result<SensorGeometry> {
        let mut g = self.sensor.geometry();
        g.num_beams = self.beams.unwrap_or(g.num_beams);
        g.horizontal_resolution_deg = self.hres.unwrap_or(g.horizontal_resolution_deg);
        g.phi_min_deg = self.phi_min.unwrap_or(g.phi_min_deg);
        g.phi_max_deg = self.phi_max.unwrap_or(g.phi_max_deg);
        g.validate()?;
        Ok(g)
    }

    fn format_of(&self, path: &Path) -> rpcc::Result<ScanFormat> {
        self.input_format
            .or_else(|| ScanFormat::from_path(path))
            .ok_or_else(|| Error::Config(format!("cannot tell the format of {}", path.display())))
    }

    /// Range image of a scan and the number of points lost in projection.
    fn load_image(&self, path: &Path) -> rpcc::Result<(RangeImage, usize)> {
        read_scan(path, self.format_of(path)?)?.into_image(&self.geometry()?)
    }
}

#[derive(Args, Clone)]
struct CodecArgs {
    #[arg(long, default_value = "uniform")]
    mode: Mode,
    /// Base quantization accuracy, meters.
    #[arg(long, default_value_t = 0.02)]
    accuracy: f64,
    #[arg(long, default_value_t = 100)]
    clusters: usize,
    /// lz4, deflate, bzip2 or arithmetic.
    #[arg(long, default_value = "bzip2")]
    backend: BackendId,
    /// Segment with DBSCAN at this eps instead of farthest point sampling.
    #[arg(long)]
    dbscan_eps: Option<f64>,
    #[arg(long, default_value_t = 5)]
    dbscan_min_pts: usize,
    /// Point models only.
    #[arg(long)]
    point_only: bool,
    #[arg(long, default_value_t = 100)]
    ransac_iterations: usize,
    /// Ground inlier threshold, meters.
    #[arg(long, default_value_t = 0.15)]
    ground_threshold: f64,
    /// Plane-model inlier threshold, meters.
    #[arg(long, default_value_t = 0.1)]
    plane_threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CodecArgs {
    fn config(&self) -> rpcc::Result<CodecConfig> {
        let mut c = CodecConfig {
            mode: self.mode,
            base_accuracy: self.accuracy,
            cluster_count: self.clusters,
            backend: self.backend,
            seed: self.seed,
            ..Default::default()
        };
        if let Some(eps) = self.dbscan_eps {
            c.segmentation = Segmentation::Dbscan { eps, min_pts: self.dbscan_min_pts };
        }
        c.modeling.allow_planes = !self.point_only;
        c.modeling.ransac.iterations = self.ransac_iterations;
        c.modeling.ransac.inlier_threshold = self.plane_threshold;
        c.ground.ransac.iterations = self.ransac_iterations;
        c.ground.ransac.inlier_threshold = self.ground_threshold;
        c.validate()?;
        Ok(c)
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_)) | Some(Error::OutOfFov { .. }) => 2,
        Some(Error::Parse { .. }) => 3,
        Some(Error::CorruptFrame(_)) | Some(Error::Decode(_)) => 4,
        Some(Error::Io(_)) => 5,
        _ if err.chain().any(|e| e.downcast_ref::<std::io::Error>().is_some()) => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Compress { inputs, output, scan, codec } => {
            let cfg = codec.config()?;
            let mut frames = Vec::new();
            let mut summary = Vec::new();
            for path in &inputs {
                let (img, dropped) =
                    scan.load_image(path).with_context(|| format!("reading {}", path.display()))?;
                let enc = compress_detailed(&img, &cfg)?;
                summary.push(json!({
                    "input": path.display().to_string(),
                    "dropped_count": dropped,
                    "stats": enc.stats,
                    "bpp": enc.stats.bpp(),
                }));
                frames.push(enc.frame);
            }
            fs::write(&output, write_stream(&frames))
                .with_context(|| format!("writing {}", output.display()))?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Decompress { input, output, format } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let frames = read_stream(&bytes)?;
            if frames.is_empty() {
                return Err(Error::CorruptFrame("stream holds no frames".into()).into());
            }
            let format = match format.or_else(|| ScanFormat::from_path(&output)) {
                Some(f) => f,
                None => bail!(Error::Config("cannot tell the output format; pass --format".into())),
            };
            for (i, frame) in frames.iter().enumerate() {
                let img = decompress_detailed(frame)?.image;
                let path = if frames.len() == 1 { output.clone() } else { numbered(&output, i) };
                match format {
                    ScanFormat::Rimg => write_rimg(&path, &img)?,
                    f => write_points(&path, &to_point_cloud(&img), f)?,
                }
            }
        }
        Command::Evaluate { original, reconstructed, compressed, tau, peak, scan, csv } => {
            let p = read_scan(&original, scan.format_of(&original)?)?.into_points();
            let q = read_scan(&reconstructed, scan.format_of(&reconstructed)?)?.into_points();
            let bytes = compressed.map(fs::metadata).transpose()?.map(|m| m.len() as usize);
            let report = QualityReport {
                original_points: p.len(),
                reconstructed_points: q.len(),
                rate: bytes.map(|b| rate_report(b, p.len())).transpose()?,
                tau,
                f1: f1_score(&p, &q, tau)?,
                cd_sym: chamfer_sym(&p, &q)?,
                d2_psnr: d2_psnr(&p, &q, peak)?,
                clusters: Vec::new(),
            };
            if csv {
                print!("{}", report.to_csv()?);
            } else {
                println!("{}", report.to_json());
            }
        }
        Command::Bench { input, repeats, scan, codec, csv } => {
            let img = match input {
                Some(path) => scan.load_image(&path)?.0,
                None => SceneKind::Street.generate(&SceneParams::new(SensorGeometry::hdl64e(), 0))?,
            };
            let rows = bench(&img, &codec.config()?, repeats)?;
            if csv {
                print!("{}", rows_to_csv(&rows)?);
            } else {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            }
        }
        Command::Sweep {
            corpus,
            clusters,
            backends,
            modes,
            modeling,
            dbscan_eps,
            accuracy,
            seed,
            scan,
            output,
        } => {
            let configs = sweep_grid(&clusters, &backends, &modes, &modeling, dbscan_eps, accuracy, seed)?;
            let mut files = Vec::new();
            let mut entries: Vec<PathBuf> = fs::read_dir(&corpus)
                .with_context(|| format!("listing {}", corpus.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for path in entries {
                match scan.load_image(&path) {
                    Ok((img, _)) => files.push((path.display().to_string(), img)),
                    Err(e) => log::warn!("skipping {}: {e}", path.display()),
                }
            }
            if files.is_empty() {
                bail!(Error::Config(format!("no readable scans in {}", corpus.display())));
            }
            let mut rows = Vec::new();
            for r in sweep(&files, &configs) {
                match r {
                    Ok(row) => rows.push(row),
                    Err(e) => log::warn!("sweep entry failed: {e}"),
                }
            }
            let table = rows_to_csv(&rows)?;
            match output {
                Some(p) => fs::write(&p, table)?,
                None => print!("{table}"),
            }
        }
        Command::GenScene { kind, output, seed, noise, dropout, scan } => {
            let mut params = SceneParams::new(scan.geometry()?, seed);
            params.noise_std = noise;
            params.dropout = dropout;
            let img = kind.generate(&params)?;
            match ScanFormat::from_path(&output) {
                Some(ScanFormat::Rimg) | None => fs::write(&output, rimg_bytes(&img))?,
                Some(f) => write_points(&output, &to_point_cloud(&img), f)?,
            }
            eprintln!("{}: {} points", output.display(), img.valid_count());
        }
    }
    Ok(())
}

fn numbered(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("frame");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{i:04}.{ext}"),
        None => format!("{stem}_{i:04}"),
    };
    path.with_file_name(name)
}

fn sweep_grid(
    clusters: &[usize],
    backends: &[BackendId],
    modes: &[Mode],
    modeling: &[String],
    dbscan_eps: Option<f64>,
    accuracy: f64,
    seed: u64,
) -> rpcc::Result<Vec<CodecConfig>> {
    let mut segs: Vec<(Segmentation, usize)> = clusters.iter().map(|k| (Segmentation::Fps, *k)).collect();
    if let Some(eps) = dbscan_eps {
        segs.push((Segmentation::Dbscan { eps, min_pts: 5 }, 1));
    }
    let mut out = Vec::new();
    for (seg, k) in &segs {
        for m in modeling {
            let allow_planes = match m.as_str() {
                "plane" => true,
                "point" => false,
                other => return Err(Error::Config(format!("unknown modeling '{other}'"))),
            };
            for mode in modes {
                for backend in backends {
                    let mut c = CodecConfig {
                        mode: *mode,
                        base_accuracy: accuracy,
                        cluster_count: *k,
                        backend: *backend,
                        segmentation: *seg,
                        seed,
                        ..Default::default()
                    };
                    c.modeling.allow_planes = allow_planes;
                    c.validate()?;
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}
