use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dcidc::checkpoint::save_checkpoint;
use dcidc::data::{self, DataFormat, NormalizeMode};
use dcidc::gradcheck::{self, GradCheckConfig};
use dcidc::network::mirror_dims;
use dcidc::trainer::{self, lambda1_sweep, mean_std, EpochReport, TrainConfig};
use dcidc::{metrics, Activations, Dataset, Matrix};

use crate::error::{CliError, CliResult};
use crate::manifest::{fingerprint, DataSpec, RunManifest, MANIFEST_FILE};
use crate::{DataArgs, EvaluateArgs, GradcheckArgs, ModelArgs, Normalize, ReplayArgs, SweepArgs, SynthArgs, TrainArgs};

const LABELS_CSV: &str = "labels.csv";
const LABELS_DCMX: &str = "labels.dcmx";
const LABEL_MAP_CSV: &str = "label_map.csv";
const LABEL_MAP_PGM: &str = "label_map.pgm";
const EPOCH_LOG: &str = "epochs.csv";
const CHECKPOINT: &str = "model.ckpt";

fn resolve_format(path: &Path, explicit: Option<DataFormat>) -> CliResult<DataFormat> {
    explicit.or_else(|| DataFormat::from_path(path)).ok_or_else(|| {
        CliError::Invalid(format!(
            "{}: cannot infer the format from the extension; pass --format csv|dcmx",
            path.display()
        ))
    })
}

fn data_spec(args: &DataArgs) -> CliResult<DataSpec> {
    let format = resolve_format(&args.data, args.format)?;
    let features = fingerprint(&args.data)?;
    let label_path = match &args.labels {
        Some(p) => Some(p.clone()),
        None => Some(data::companion_labels_path(&args.data)).filter(|p| p.is_file()),
    };
    let labels = label_path.as_deref().map(fingerprint).transpose()?;
    Ok(DataSpec {
        features,
        format,
        labels,
        normalize: match args.normalize {
            Normalize::Minmax => Some(NormalizeMode::MinmaxPerBand),
            Normalize::Zscore => Some(NormalizeMode::ZscorePerBand),
            Normalize::None => None,
        },
        mask_unlabeled: args.mask_unlabeled,
        image: args.image,
    })
}

fn train_config(model: &ModelArgs, input_dim: usize) -> CliResult<TrainConfig> {
    if model.dims.first() != Some(&input_dim) {
        return Err(CliError::Invalid(format!(
            "--dims must start with the input width {input_dim}, got {:?}",
            model.dims
        )));
    }
    let config = TrainConfig {
        dims: mirror_dims(&model.dims),
        activations: Activations {
            encoder: model.activation,
            decoder: model.dec_activation.unwrap_or(model.activation),
        },
        lambda1: model.lambda1,
        lambda2: model.lambda2,
        learning_rate: model.lr,
        k: model.k,
        max_epochs: model.epochs,
        tol: model.tol,
        seed: model.seed,
        batch_size: model.batch,
    };
    config.validate()?;
    Ok(config)
}

/// Loads, relabels, masks and normalizes exactly as `spec` describes.
fn prepare(spec: &DataSpec) -> CliResult<Dataset> {
    let mut ds = data::load(&spec.features.path, spec.format)?;
    if let Some(labels) = &spec.labels {
        let l = data::load_labels(&labels.path)?;
        if l.len() != ds.len() {
            return Err(CliError::Invalid(format!(
                "{}: {} labels for {} samples",
                labels.path.display(),
                l.len(),
                ds.len()
            )));
        }
        ds.labels = Some(l);
    } else {
        ds.labels = None;
    }
    if let Some([h, w]) = spec.image {
        ds.meta.height = Some(h);
        ds.meta.width = Some(w);
        if h * w != ds.len() {
            return Err(CliError::Invalid(format!(
                "--image {h}x{w} needs {} rows, {} has {}",
                h * w,
                spec.features.path.display(),
                ds.len()
            )));
        }
    }
    if spec.mask_unlabeled {
        if ds.labels.is_none() {
            return Err(CliError::Invalid("--mask-unlabeled needs ground-truth labels".into()));
        }
        ds = data::mask_unlabeled(&ds)?;
    }
    if let Some(mode) = spec.normalize {
        ds = data::normalize(&ds, mode);
    }
    Ok(ds)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| dcidc::Error::io(path, e).into())
}

fn run_training(spec: DataSpec, ds: Dataset, config: TrainConfig, out_dir: &Path, diagnostics: bool) -> CliResult<()> {
    fs::create_dir_all(out_dir).map_err(|e| dcidc::Error::io(out_dir, e))?;

    let mut log = String::from(EpochReport::CSV_HEADER);
    log.push('\n');
    let result = trainer::train_with(&ds.features, &config, ds.labels.as_deref(), |r| {
        log.push_str(&r.csv_line());
        log.push('\n');
        if diagnostics {
            eprintln!(
                "epoch {}: {} of {} samples differ from nearest-center assignment",
                r.epoch,
                r.nearest_center_disagreements,
                ds.len()
            );
        }
    });
    // the log is useful even when training fails part way
    write(&out_dir.join(EPOCH_LOG), &log)?;
    let outcome = result?;

    let labels = outcome.state.labels();
    let mut artifacts = BTreeMap::new();
    data::save_labels(&out_dir.join(LABELS_CSV), &labels)?;
    artifacts.insert("labels_csv".to_string(), PathBuf::from(LABELS_CSV));
    let column = Matrix::from_fn(labels.len(), 1, |r, _| labels[r] as f64);
    data::save_dcmx(&out_dir.join(LABELS_DCMX), &column)?;
    artifacts.insert("labels_dcmx".to_string(), PathBuf::from(LABELS_DCMX));
    artifacts.insert("epoch_log".to_string(), PathBuf::from(EPOCH_LOG));
    save_checkpoint(&out_dir.join(CHECKPOINT), &outcome.params, outcome.final_report().epoch)?;
    artifacts.insert("checkpoint".to_string(), PathBuf::from(CHECKPOINT));

    if let Some(mask) = &ds.mask {
        let original = ds.meta.original_len.unwrap_or(mask.len());
        let full = data::scatter_labels(&labels, mask, original)?;
        let mut text = String::new();
        for slot in &full {
            match slot {
                Some(l) => writeln!(text, "{l}").unwrap(),
                None => text.push_str("-1\n"),
            }
        }
        write(&out_dir.join(LABEL_MAP_CSV), text)?;
        artifacts.insert("label_map_csv".to_string(), PathBuf::from(LABEL_MAP_CSV));
    }
    if let Some([h, w]) = spec.image {
        let full = match &ds.mask {
            Some(mask) => data::scatter_labels(&labels, mask, h * w)?,
            None => labels.iter().map(|&l| Some(l)).collect(),
        };
        data::write_label_pgm(&out_dir.join(LABEL_MAP_PGM), &full, h, w)?;
        artifacts.insert("label_map_pgm".to_string(), PathBuf::from(LABEL_MAP_PGM));
    }

    let manifest = RunManifest {
        engine_version: dcidc::ENGINE_VERSION.to_string(),
        config,
        data: spec,
        artifacts,
    };
    manifest.save(&out_dir.join(MANIFEST_FILE))?;

    let last = outcome.final_report();
    let mut summary = format!(
        "epochs {} ({:?}) j_total {:.6} j1 {:.6} j2 {:.6} j3 {:.6}",
        last.epoch, outcome.stop, last.j_total, last.j1, last.j2, last.j3
    );
    if let (Some(acc), Some(nmi)) = (last.accuracy, last.nmi) {
        write!(summary, " accuracy {acc:.6} nmi {nmi:.6}").unwrap();
    }
    println!("{summary}");
    println!("wrote {}", out_dir.display());
    Ok(())
}

pub fn train(args: TrainArgs) -> CliResult<()> {
    let spec = data_spec(&args.data)?;
    let ds = prepare(&spec)?;
    let config = train_config(&args.model, ds.features.cols())?;
    run_training(spec, ds, config, &args.out_dir, args.diagnostics)
}

pub fn replay(args: ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    if manifest.engine_version != dcidc::ENGINE_VERSION {
        eprintln!(
            "warning: manifest written by engine {}, replaying with {}",
            manifest.engine_version,
            dcidc::ENGINE_VERSION
        );
    }
    manifest.data.features.verify()?;
    if let Some(labels) = &manifest.data.labels {
        labels.verify()?;
    }
    manifest.config.validate()?;
    let ds = prepare(&manifest.data)?;
    run_training(manifest.data, ds, manifest.config, &args.out_dir, false)
}

pub fn gradcheck(args: GradcheckArgs) -> CliResult<()> {
    let cfg = GradCheckConfig {
        dims: mirror_dims(&args.dims),
        activations: Activations {
            encoder: args.activation,
            decoder: args.dec_activation.unwrap_or(args.activation),
        },
        lambda1: args.lambda1,
        lambda2: args.lambda2,
        samples: args.samples,
        k: args.k,
        seed: args.seed,
        perturb: args.perturb,
        ..GradCheckConfig::default()
    };
    if !(cfg.lambda1 >= 0.0 && cfg.lambda2 >= 0.0) {
        return Err(CliError::Invalid("lambda1 and lambda2 must be >= 0".into()));
    }
    let report = gradcheck::run(&cfg)?;
    let line = format!(
        "max relative error {:.3e} over {} parameters (worst {}: analytic {:.9e}, numeric {:.9e})",
        report.max_relative_error, report.checked, report.worst, report.analytic, report.numeric
    );
    if report.passes(args.tol) {
        println!("{line}");
        Ok(())
    } else {
        Err(CliError::Failed(format!("gradient check failed, tolerance {:.1e}: {line}", args.tol)))
    }
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    let predicted = data::load_labels(&args.predicted)?;
    let truth = data::load_labels(&args.truth)?;
    let acc = metrics::accuracy(&predicted, &truth)?;
    let nmi = metrics::nmi(&predicted, &truth)?;
    println!("accuracy {acc:.6}");
    println!("nmi {nmi:.6}");
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep(args: SweepArgs) -> CliResult<()> {
    let spec = data_spec(&args.data)?;
    let ds = prepare(&spec)?;
    let labels = ds
        .labels
        .as_deref()
        .ok_or_else(|| CliError::Invalid("sweep needs ground-truth labels (--labels)".into()))?;
    let config = train_config(&args.model, ds.features.cols())?;
    for &l in &args.grid {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Invalid(format!("grid value {l} must be a finite value >= 0")));
        }
    }
    let seeds = args.seeds.clone().unwrap_or_else(|| vec![args.model.seed]);
    let rows = lambda1_sweep(&ds.features, labels, &config, &args.grid, &seeds);

    let mut table = String::from("lambda1,seed,accuracy,nmi,epochs,error\n");
    for r in &rows {
        let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
        writeln!(table, "{},{},{},{},{},{}", r.lambda1, r.seed, opt(r.accuracy), opt(r.nmi), r.epochs, error).unwrap();
    }
    let mut summary = String::from("lambda1,runs,accuracy_mean,accuracy_std,nmi_mean,nmi_std\n");
    for &l in &args.grid {
        let cell: Vec<_> = rows.iter().filter(|r| r.lambda1 == l && r.error.is_none()).collect();
        let accs: Vec<f64> = cell.iter().filter_map(|r| r.accuracy).collect();
        let nmis: Vec<f64> = cell.iter().filter_map(|r| r.nmi).collect();
        let (am, asd) = mean_std(&accs).map_or((None, None), |(m, s)| (Some(m), Some(s)));
        let (nm, nsd) = mean_std(&nmis).map_or((None, None), |(m, s)| (Some(m), Some(s)));
        writeln!(summary, "{l},{},{},{},{},{}", cell.len(), opt(am), opt(asd), opt(nm), opt(nsd)).unwrap();
    }
    print!("{table}");
    eprint!("{summary}");
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| dcidc::Error::io(dir, e))?;
        write(&dir.join("sweep.csv"), &table)?;
        write(&dir.join("sweep_summary.csv"), &summary)?;
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let format = resolve_format(&args.out, args.format)?;
    let ds = data::synth_blobs(args.n_per_cluster, args.k, args.dim, args.separation, args.noise, args.seed)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| dcidc::Error::io(dir, e))?;
    }
    data::save(&args.out, format, &ds)?;
    println!(
        "wrote {} ({} samples, {} features) and {}",
        args.out.display(),
        ds.len(),
        args.dim,
        data::companion_labels_path(&args.out).display()
    );
    Ok(())
}
