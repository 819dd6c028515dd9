use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use grainforge::dataset::{self, DatasetManifest, PairRecord, PatchMode};
use grainforge::metrics::{self, FeatureVector};
use grainforge::sim::{self, PhaseFieldState, StepOptions};
use grainforge::{appearance, io, morphometry, rendering, seeding, InstanceMap};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{LabelSource, RunConfig};
use crate::{Command, DatasetCommand};

/// Input problems detected by the CLI itself; maps to exit status 1.
#[derive(Debug)]
pub struct ValidationFailure(pub String);

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailure {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationFailure(msg.into()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    use grainforge::Error as E;
    for cause in e.chain() {
        if cause.is::<ValidationFailure>() {
            return 1;
        }
        if let Some(
            E::InvalidParameter(_)
            | E::InvalidInput(_)
            | E::DimensionMismatch { .. }
            | E::ImageTooSmall { .. }
            | E::EmptyGrain(_)
            | E::UnassignedPixel { .. },
        ) = cause.downcast_ref::<E>()
        {
            return 1;
        }
    }
    2
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Value> {
    io::write_json(&cfg.out.join("run_config.json"), cfg)?;
    match cmd {
        Command::Seed(_) => seed(cfg),
        Command::Simulate(_) => simulate(cfg),
        Command::Render(_) => render(cfg),
        Command::Texturize(a) => texturize(cfg, &a.phi, &a.instances),
        Command::Dataset(DatasetCommand::Build(a)) => dataset_build(cfg, &a.images, &a.masks),
        Command::Dataset(DatasetCommand::Validate(a)) => dataset_validate(cfg, &a.manifest),
        Command::Dataset(DatasetCommand::Ingest(a)) => dataset_ingest(cfg, &a.manifest, &a.images),
        Command::Evaluate(a) => match (&a.pred, &a.gt, &a.images, &a.reference) {
            (Some(p), Some(g), None, None) => evaluate_segmentation(cfg, p, g),
            (None, None, Some(i), Some(r)) => evaluate_realism(cfg, i, r),
            _ => Err(invalid("evaluate needs either --pred/--gt or --images/--reference")),
        },
        Command::Characterize(a) => characterize(cfg, &a.input),
        Command::Kinetics(a) => kinetics(cfg, &a.snapshots),
        Command::Tsne(a) => tsne(cfg, &a.groups, a.features.as_deref(), a.embeddings_file.as_deref()),
        Command::Clahe(a) => clahe(cfg, &a.input),
    }
}

fn pngs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(invalid(format!("{} does not exist", path.display())));
    }
    let files = io::list_pngs(path)?;
    if files.is_empty() {
        return Err(invalid(format!("no PNG files in {}", path.display())));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Finds the file with the same name as `reference` in `dir` (or `dir` itself if it is a file).
fn counterpart(dir: &Path, reference: &Path) -> Result<PathBuf> {
    if dir.is_file() {
        return Ok(dir.to_path_buf());
    }
    let p = dir.join(file_name(reference));
    if !p.is_file() {
        return Err(invalid(format!("{} has no counterpart {}", reference.display(), p.display())));
    }
    Ok(p)
}

fn seed(cfg: &RunConfig) -> Result<Value> {
    let s = &cfg.seeding;
    let t = Instant::now();
    let dir = cfg.out.join("structures");
    let indices: Vec<usize> = (0..s.count).collect();
    if s.count == 0 {
        return Err(invalid("--count must be at least 1"));
    }
    let results = cfg.exec.map(&indices, |&k| -> grainforge::Result<(String, f64, usize)> {
        let map = seeding::generate_structure(s.grains, s.width, s.height, cfg.seed.wrapping_add(k as u64), s.corpus)?;
        let name = format!("s{k:04}.png");
        io::write_instances(&dir.join(&name), &map)?;
        Ok((name, seeding::area_cv(&map, s.grains), map.grain_count()))
    });
    let results = results.into_iter().collect::<grainforge::Result<Vec<_>>>()?;
    let mean_cv = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    info!("seeded {} structures in {:.2?}", results.len(), t.elapsed());
    Ok(json!({
        "command": "seed",
        "structures": results.len(),
        "directory": dir,
        "grains_per_structure": s.grains,
        "width": s.width,
        "height": s.height,
        "mean_area_cv": mean_cv,
        "min_grain_count": results.iter().map(|r| r.2).min(),
        "seconds": t.elapsed().as_secs_f64(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesEntry {
    step: u64,
    time: f64,
    file: String,
}

/// A simulation input: a fresh instance map or a checkpoint to resume.
enum SimInput {
    Labels(PathBuf),
    Checkpoint(PathBuf),
}

fn is_checkpoint(dir: &Path) -> bool {
    dir.join("header.json").is_file()
}

fn checkpoint_name(dir: &Path) -> String {
    let own = file_name(dir);
    if own == "checkpoint" {
        dir.parent().map(file_name).unwrap_or(own)
    } else {
        own
    }
}

fn sim_inputs(paths: &[PathBuf]) -> Result<Vec<(String, SimInput)>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() && is_checkpoint(p) {
            out.push((checkpoint_name(p), SimInput::Checkpoint(p.clone())));
        } else {
            for f in pngs(p)? {
                out.push((stem(&f), SimInput::Labels(f)));
            }
        }
    }
    Ok(out)
}

fn simulate(cfg: &RunConfig) -> Result<Value> {
    let inputs = sim_inputs(cfg.inputs.get("input").map(Vec::as_slice).unwrap_or_default())?;
    let sc = &cfg.simulate;
    if sc.steps == 0 || sc.snapshot_every == 0 {
        return Err(invalid("--steps and --snapshot-every must be at least 1"));
    }
    let opts = StepOptions::new(sc.mode, cfg.exec);
    let mut runs = Vec::new();
    for (name, input) in inputs {
        let mut state = match &input {
            SimInput::Labels(p) => PhaseFieldState::from_labels(&io::read_instances(p)?, cfg.sim)
                .with_context(|| format!("initializing from {}", p.display()))?,
            SimInput::Checkpoint(d) => sim::read_checkpoint(d)?,
        };
        let dir = cfg.out.join(&name);
        let snap_dir = dir.join("snapshots");
        let start_step = state.steps();
        let mut series = Vec::new();
        let mut energy = String::from("step,time,bulk,interaction,gradient,total\n");
        let mut log_energy = |s: &PhaseFieldState| {
            let e = sim::free_energy(s);
            energy.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.steps(),
                s.time(),
                e.bulk,
                e.interaction,
                e.gradient,
                e.total
            ));
        };
        if sc.energy_every > 0 {
            log_energy(&state);
        }
        let t = Instant::now();
        for k in 1..=sc.steps {
            state.step_with(opts);
            if sc.energy_every > 0 && k % sc.energy_every == 0 {
                log_energy(&state);
            }
            if k % sc.snapshot_every == 0 {
                let file = format!("step_{:06}.png", state.steps());
                io::write_instances(&snap_dir.join(&file), &rendering::instance_map(&state)?)?;
                series.push(SeriesEntry { step: state.steps(), time: state.time(), file });
            }
        }
        let seconds = t.elapsed().as_secs_f64();
        sim::write_checkpoint(&dir.join("checkpoint"), &state)?;
        io::write_json(&snap_dir.join("series.json"), &series)?;
        if sc.energy_every > 0 {
            io::write_text(&dir.join("energy.csv"), &energy)?;
        }
        info!("{name}: {} steps in {seconds:.2}s", sc.steps);
        runs.push(json!({
            "name": name,
            "start_step": start_step,
            "steps": state.steps(),
            "time": state.time(),
            "surviving_grains": state.fields().len(),
            "snapshots": series.len(),
            "checkpoint": dir.join("checkpoint"),
            "seconds": seconds,
        }));
    }
    Ok(json!({ "command": "simulate", "mode": sc.mode, "runs": runs }))
}

fn find_checkpoints(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if is_checkpoint(p) {
            out.push(p.clone());
            continue;
        }
        if !p.is_dir() {
            return Err(invalid(format!("{} is not a directory", p.display())));
        }
        let mut children: Vec<PathBuf> = std::fs::read_dir(p)
            .with_context(|| format!("listing {}", p.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|c| c.is_dir())
            .collect();
        children.sort();
        for c in children {
            if is_checkpoint(&c) {
                out.push(c);
            } else if is_checkpoint(&c.join("checkpoint")) {
                out.push(c.join("checkpoint"));
            }
        }
    }
    if out.is_empty() {
        return Err(invalid("no checkpoints found"));
    }
    Ok(out)
}

fn render(cfg: &RunConfig) -> Result<Value> {
    let dirs = find_checkpoints(cfg.inputs.get("input").map(Vec::as_slice).unwrap_or_default())?;
    let rendered = cfg.exec.map(&dirs, |d| -> Result<Value> {
        let state = sim::read_checkpoint(d)?;
        let name = checkpoint_name(d);
        let phi = rendering::composite_field(&state);
        let mask = rendering::boundary_mask(&phi, cfg.tau)?;
        let instances = rendering::instance_map(&state)?;
        let file = format!("{name}.png");
        io::write_micrograph(&cfg.out.join("phi").join(&file), &phi)?;
        io::write_mask(&cfg.out.join("masks").join(&file), &mask)?;
        io::write_instances(&cfg.out.join("instances").join(&file), &instances)?;
        Ok(json!({
            "name": name,
            "grains": instances.grain_count(),
            "boundary_fraction": mask.boundary_count() as f64 / mask.data.len() as f64,
        }))
    });
    let rendered = rendered.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(json!({ "command": "render", "tau": cfg.tau, "images": rendered }))
}

fn texturize(cfg: &RunConfig, phi: &Path, instances: &Path) -> Result<Value> {
    let files = pngs(phi)?;
    let indexed: Vec<(usize, PathBuf)> = files.into_iter().enumerate().collect();
    let done = cfg.exec.map(&indexed, |(k, f)| -> Result<String> {
        let phi = io::read_micrograph(f)?;
        let labels = io::read_instances(&counterpart(instances, f)?)?;
        let params = appearance::AppearanceParams {
            rng_seed: cfg.appearance.rng_seed.wrapping_add(*k as u64),
            ..cfg.appearance
        };
        let out = appearance::texturize(&phi, &labels, &params)?;
        let name = file_name(f);
        io::write_micrograph(&cfg.out.join("textured").join(&name), &out)?;
        Ok(name)
    });
    let done = done.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(json!({ "command": "texturize", "images": done.len(), "directory": cfg.out.join("textured") }))
}

fn dataset_build(cfg: &RunConfig, images: &Path, masks: &Path) -> Result<Value> {
    let dc = &cfg.dataset;
    if dc.variants == 0 && !dc.include_original {
        return Err(invalid("--variants must be at least 1 unless --include-original is set"));
    }
    let mode = match dc.stride {
        Some(s) => PatchMode::Strided(s),
        None => PatchMode::NonOverlapping,
    };
    let files = pngs(images)?;
    let indexed: Vec<(usize, PathBuf)> = files.into_iter().enumerate().collect();
    let root = &cfg.out;
    let per_pair = cfg.exec.map(&indexed, |(i, f)| -> Result<Vec<PairRecord>> {
        let img = io::read_micrograph(f)?;
        let mask = io::read_mask(&counterpart(masks, f)?)?;
        if img.dims() != mask.dims() {
            return Err(grainforge::Error::DimensionMismatch { expected: img.dims(), actual: mask.dims() }.into());
        }
        let structure = stem(f);
        let img_patches = dataset::extract_patches(&img, dc.patch, mode)?;
        let mask_patches = dataset::extract_mask_patches(&mask, dc.patch, mode)?;
        let mut records = Vec::new();
        let mut variant = 0;
        for (j, (ip, mp)) in img_patches.iter().zip(&mask_patches).enumerate() {
            let mut outputs = Vec::new();
            if dc.include_original {
                outputs.push((ip.data.clone(), mp.data.clone(), None));
            }
            if dc.variants > 0 {
                let pair_seed = cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add((*i * img_patches.len() + j) as u64);
                for (a, m, d) in dataset::augment_pair(&ip.data, &mp.data, dc.variants, pair_seed)? {
                    outputs.push((a, m, Some(d)));
                }
            }
            for (a, m, d) in outputs {
                let name = dataset::pair_file_name(&structure, variant);
                let rec = PairRecord {
                    image: Path::new("images").join(&name),
                    mask: Path::new("masks").join(&name),
                    structure_id: structure.clone(),
                    variant,
                    augmentation: d,
                };
                io::write_micrograph(&root.join(&rec.image), &a)?;
                io::write_mask(&root.join(&rec.mask), &m)?;
                records.push(rec);
                variant += 1;
            }
        }
        Ok(records)
    });
    let mut records = Vec::new();
    for r in per_pair {
        records.extend(r?);
    }
    let mut manifest = dataset::build_manifest(&records, dc.split, cfg.seed)?;
    manifest.provenance.push(format!(
        "built from images {} and masks {}; patch {} ({:?}); {} variants per patch",
        images.display(),
        masks.display(),
        dc.patch,
        mode,
        dc.variants
    ));
    let manifest_path = root.join("manifest.json");
    manifest.write(&manifest_path)?;
    use grainforge::dataset::Split;
    Ok(json!({
        "command": "dataset build",
        "manifest": manifest_path,
        "source_pairs": indexed.len(),
        "entries": manifest.entries.len(),
        "structures": { "train": manifest.structures_in(Split::Train), "val": manifest.structures_in(Split::Val), "test": manifest.structures_in(Split::Test) },
        "entries_per_split": { "train": manifest.count(Split::Train), "val": manifest.count(Split::Val), "test": manifest.count(Split::Test) },
    }))
}

fn manifest_root(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn dataset_validate(cfg: &RunConfig, manifest_path: &Path) -> Result<Value> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let report = dataset::validate_manifest(&manifest, &manifest_root(manifest_path), cfg.exec);
    io::write_json(&cfg.out.join("validation.json"), &report)?;
    if !report.is_valid() {
        for v in report.violations.iter().take(20) {
            log::error!("{:?} (entry {:?}): {}", v.kind, v.entry, v.detail);
        }
        return Err(invalid(format!(
            "{} violation(s) in {} entries; see {}",
            report.violations.len(),
            report.entries_checked,
            cfg.out.join("validation.json").display()
        )));
    }
    Ok(json!({ "command": "dataset validate", "entries_checked": report.entries_checked, "violations": 0 }))
}

fn dataset_ingest(cfg: &RunConfig, manifest_path: &Path, images: &Path) -> Result<Value> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let root = std::path::absolute(manifest_root(manifest_path))?;
    let images = std::path::absolute(images)?;
    let mut out = appearance::ingest_translated(&images, &manifest, &root, cfg.dataset.min_score, cfg.exec);
    for e in &mut out.entries {
        e.mask = root.join(&e.mask);
        e.image = root.join(&e.image);
    }
    let path = cfg.out.join("manifest_ingested.json");
    out.write(&path)?;
    let passed = out.entries.iter().filter(|e| e.validation.as_ref().is_some_and(|v| v.pass)).count();
    let errors = out.entries.iter().filter(|e| e.validation.as_ref().is_some_and(|v| v.error.is_some())).count();
    Ok(json!({
        "command": "dataset ingest",
        "manifest": path,
        "entries": out.entries.len(),
        "passed": passed,
        "flagged": out.entries.len() - passed,
        "errors": errors,
        "min_score": cfg.dataset.min_score,
    }))
}

fn matched_pairs(a: &Path, b: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    pngs(a)?.into_iter().map(|f| Ok((f.clone(), counterpart(b, &f)?))).collect()
}

fn write_report(cfg: &RunConfig, report: &metrics::MetricsReport) -> Result<Value> {
    report.write(&cfg.out.join("metrics.json"), &cfg.out.join("metrics.csv"))?;
    Ok(json!({
        "command": "evaluate",
        "kind": report.kind,
        "bf1_tolerance": report.bf1_tolerance,
        "aggregate": report.aggregate,
        "report": cfg.out.join("metrics.json"),
    }))
}

fn evaluate_segmentation(cfg: &RunConfig, pred: &Path, gt: &Path) -> Result<Value> {
    let pairs = matched_pairs(pred, gt)?;
    let loaded = cfg.exec.map(&pairs, |(p, g)| -> Result<_> { Ok((stem(p), io::read_mask(p)?, io::read_mask(g)?)) });
    let loaded = loaded.into_iter().collect::<Result<Vec<_>>>()?;
    let report = metrics::evaluate_segmentation(&loaded, cfg.bf1_tolerance, cfg.exec)?;
    write_report(cfg, &report)
}

fn evaluate_realism(cfg: &RunConfig, images: &Path, reference: &Path) -> Result<Value> {
    let pairs = matched_pairs(images, reference)?;
    let loaded = cfg.exec.map(&pairs, |(i, r)| -> Result<_> {
        Ok((stem(i), io::read_micrograph(i)?, io::read_micrograph(r)?))
    });
    let loaded = loaded.into_iter().collect::<Result<Vec<_>>>()?;
    let report = metrics::evaluate_realism(&loaded, cfg.exec)?;
    write_report(cfg, &report)
}

fn load_instances(cfg: &RunConfig, path: &Path) -> Result<InstanceMap> {
    Ok(match cfg.characterize.source {
        LabelSource::Mask => morphometry::connected_components(&io::read_mask(path)?, cfg.characterize.periodic)?,
        LabelSource::Instances => io::read_instances(path)?,
    })
}

fn characterize(cfg: &RunConfig, input: &Path) -> Result<Value> {
    let cc = &cfg.characterize;
    let files = pngs(input)?;
    let dir = cfg.out.join("characterize");
    let per_image = cfg.exec.map(&files, |f| -> Result<Value> {
        let instances = load_instances(cfg, f)?;
        let stats = morphometry::grain_stats(&instances, cc.pixel_scale);
        let name = stem(f);
        morphometry::write_stats_csv(&dir.join(format!("{name}_grains.csv")), &stats)?;
        let kept: Vec<_> = stats.iter().filter(|s| cc.include_border || !s.touches_border).cloned().collect();
        let hist = if kept.is_empty() {
            log::warn!("{name}: no grains left for the size distribution");
            None
        } else {
            let h = morphometry::size_distribution(&kept, cc.bins)?;
            io::write_json(&dir.join(format!("{name}_sizes.json")), &h)?;
            io::write_text(&dir.join(format!("{name}_sizes.tsv")), &h.to_tsv())?;
            Some(h)
        };
        let mean = |f: fn(&morphometry::GrainStats) -> f64| {
            if kept.is_empty() {
                None
            } else {
                Some(kept.iter().map(f).sum::<f64>() / kept.len() as f64)
            }
        };
        Ok(json!({
            "name": name,
            "grains": stats.len(),
            "grains_in_distribution": kept.len(),
            "mean_area_px": mean(|s| s.area_px as f64),
            "mean_circularity": mean(|s| s.circularity),
            "mean_aspect_ratio": mean(|s| s.aspect_ratio),
            "histogram_total": hist.map(|h| h.total()),
        }))
    });
    let per_image = per_image.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(json!({ "command": "characterize", "source": cc.source, "periodic": cc.periodic, "images": per_image, "directory": dir }))
}

fn kinetics(cfg: &RunConfig, snapshots: &Path) -> Result<Value> {
    let index = snapshots.join("series.json");
    let entries: Vec<(f64, PathBuf)> = if index.is_file() {
        let series: Vec<SeriesEntry> = io::read_json(&index)?;
        series.into_iter().map(|e| (e.time, snapshots.join(e.file))).collect()
    } else {
        pngs(snapshots)?
            .into_iter()
            .map(|f| {
                let digits: String = stem(&f).chars().filter(char::is_ascii_digit).collect();
                let t = digits.parse::<f64>().map_err(|_| invalid(format!("no time in file name {}", f.display())))?;
                Ok((t, f))
            })
            .collect::<Result<_>>()?
    };
    let series = entries
        .into_iter()
        .map(|(t, f)| Ok((t, io::read_instances(&f)?)))
        .collect::<Result<Vec<_>>>()?;
    let traj = morphometry::kinetics(&series, cfg.characterize.pixel_scale)?;
    io::write_json(&cfg.out.join("kinetics.json"), &traj)?;
    io::write_text(&cfg.out.join("kinetics.tsv"), &traj.to_tsv())?;
    Ok(json!({
        "command": "kinetics",
        "snapshots": traj.times.len(),
        "mean_size_first": traj.mean_size.first(),
        "mean_size_last": traj.mean_size.last(),
        "grain_count_first": traj.grain_count.first(),
        "grain_count_last": traj.grain_count.last(),
        "trajectory": cfg.out.join("kinetics.json"),
    }))
}

fn image_features(cfg: &RunConfig, groups: &[(String, PathBuf)]) -> Result<Vec<FeatureVector>> {
    let mut jobs = Vec::new();
    for (tag, dir) in groups {
        for f in pngs(dir)? {
            jobs.push((tag.clone(), f));
        }
    }
    let per_file = cfg.exec.map(&jobs, |(tag, f)| -> Result<Vec<FeatureVector>> {
        let img = io::read_micrograph(f)?;
        let name = stem(f);
        let patches = match cfg.tsne.patch {
            Some(p) => dataset::extract_patches(&img, p, PatchMode::NonOverlapping)?
                .into_iter()
                .enumerate()
                .map(|(k, p)| (format!("{name}_p{k}"), p.data))
                .collect(),
            None => vec![(name, img)],
        };
        patches
            .into_iter()
            .map(|(id, img)| Ok(FeatureVector { id, tag: tag.clone(), values: metrics::texture_features(&img)? }))
            .collect()
    });
    let mut out = Vec::new();
    for v in per_file {
        out.extend(v?);
    }
    Ok(out)
}

fn tsne(
    cfg: &RunConfig,
    groups: &[(String, PathBuf)],
    features: Option<&Path>,
    embeddings: Option<&Path>,
) -> Result<Value> {
    let (source, vectors) = match (groups.is_empty(), features, embeddings) {
        (false, None, None) => {
            let v = image_features(cfg, groups)?;
            metrics::write_feature_csv(&cfg.out.join("features.csv"), &v)?;
            ("images", v)
        }
        (true, Some(f), None) => ("features", metrics::read_feature_csv(f)?),
        (true, None, Some(e)) => ("embeddings", metrics::read_feature_csv(e)?),
        _ => bail!(invalid("tsne needs exactly one of --group, --features or --embeddings-file")),
    };
    if vectors.is_empty() {
        return Err(invalid("no feature vectors"));
    }
    let input = if cfg.tsne.standardize { metrics::standardize(&vectors) } else { vectors };
    let run = metrics::tsne(&input, &cfg.tsne.params)?;
    metrics::write_embedding_csv(&cfg.out.join("embedding.csv"), &run.embedding)?;

    let mut tags: Vec<&str> = run.embedding.tags.iter().map(String::as_str).collect();
    tags.sort_unstable();
    tags.dedup();
    let silhouette = (tags.len() >= 2).then(|| {
        let labels: Vec<usize> = run.embedding.tags.iter().map(|t| tags.binary_search(&t.as_str()).unwrap()).collect();
        let pts: Vec<Vec<f64>> = run.embedding.points.iter().map(|p| vec![p.0, p.1]).collect();
        metrics::silhouette(&pts, &labels)
    });
    let target = cfg.tsne.params.perplexity.log2();
    let calibration_error = run.row_entropies.iter().map(|h| (h - target).abs()).fold(0.0, f64::max);
    let summary = json!({
        "command": "tsne",
        "source": source,
        "points": run.embedding.points.len(),
        "dimension": input[0].values.len(),
        "standardized": cfg.tsne.standardize,
        "perplexity": run.embedding.perplexity,
        "iterations": run.embedding.iterations,
        "seed": run.embedding.seed,
        "final_kl": run.kl_history.last(),
        "max_calibration_error_bits": calibration_error,
        "tags": tags,
        "silhouette": silhouette,
        "embedding": cfg.out.join("embedding.csv"),
    });
    io::write_json(&cfg.out.join("tsne.json"), &summary)?;
    Ok(summary)
}

fn clahe(cfg: &RunConfig, input: &Path) -> Result<Value> {
    let files = pngs(input)?;
    let dir = cfg.out.join("clahe");
    let done = cfg.exec.map(&files, |f| -> Result<Value> {
        let img = io::read_micrograph(f)?;
        let out = metrics::clahe(&img, &cfg.clahe)?;
        io::write_micrograph(&dir.join(file_name(f)), &out)?;
        Ok(json!({
            "name": file_name(f),
            "entropy_before": metrics::shannon_entropy(&img, 256),
            "entropy_after": metrics::shannon_entropy(&out, 256),
        }))
    });
    let done = done.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(json!({ "command": "clahe", "clip_limit": cfg.clahe.clip_limit, "tiles": cfg.clahe.tiles, "images": done, "directory": dir }))
}
