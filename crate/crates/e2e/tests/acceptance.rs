//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use grainforge::io::{read_instances, read_micrograph, write_mask, write_micrograph};
use grainforge::metrics::{boundary_f1, iou, shannon_entropy, ssim};
use grainforge::morphometry::{connected_components, grain_stats};
use grainforge::rendering::{boundary_mask, composite_field, instance_map, DEFAULT_TAU};
use grainforge::seeding::{generate_structure, CorpusOptions};
use grainforge::sim::{free_energy, read_checkpoint, PhaseFieldState, SimParams, StepMode, StepOptions};
use grainforge::{Exec, InstanceMap, Micrograph, SegmentationMask};
use grainforge_e2e::{grainforge, path_str as s, read_json, Outcome, Report};

fn fixed_points() -> Outcome {
    let n = 64;
    let mut drift: f64 = 0.0;
    for mode in [StepMode::Sparse, StepMode::Dense] {
        let one = InstanceMap::new(n, n, vec![1; n * n]).unwrap();
        let mut a = PhaseFieldState::from_labels(&one, SimParams::default()).unwrap();
        let mut z = PhaseFieldState::zeros(n, n, 3, SimParams::default()).unwrap();
        for _ in 0..100 {
            a.step_with(StepOptions::new(mode, Exec::Parallel));
            z.step_with(StepOptions::new(mode, Exec::Parallel));
        }
        drift = a.dense_field(0).iter().map(|v| (v - 1.0).abs()).fold(drift, f64::max);
        drift = z.sum_of_squares().iter().map(|v| v.abs()).fold(drift, f64::max);
    }
    Outcome::new(drift <= 1e-10, format!("max per-pixel drift after 100 steps {drift:.3e} (limit 1e-10)"))
}

fn energy_dissipation() -> Outcome {
    let labels = generate_structure(12, 128, 128, 0, CorpusOptions::default()).unwrap();
    let mut st = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
    let mut prev = free_energy(&st).total;
    let (first, mut worst) = (prev, f64::NEG_INFINITY);
    for _ in 0..500 {
        st.step();
        let e = free_energy(&st).total;
        worst = worst.max((e - prev) / prev.abs());
        prev = e;
    }
    Outcome::new(
        worst <= 1e-8,
        format!("F {first:.2} -> {prev:.2} over 500 steps, largest relative step change {worst:.3e} (limit +1e-8)"),
    )
}

fn curvature_flow() -> Outcome {
    let (n, r) = (256, 60.0);
    let labels: Vec<u16> = (0..n * n)
        .map(|i| {
            let x = (i % n) as f64 + 0.5 - n as f64 / 2.0;
            let y = (i / n) as f64 + 0.5 - n as f64 / 2.0;
            if x * x + y * y <= r * r { 1 } else { 2 }
        })
        .collect();
    let map = InstanceMap::new(n, n, labels).unwrap();
    let mut st = PhaseFieldState::from_labels(&map, SimParams::default()).unwrap();
    let (mut ts, mut areas) = (Vec::new(), Vec::new());
    for k in 0..=4000 {
        if k >= 200 && k % 100 == 0 {
            ts.push(st.time());
            areas.push(instance_map(&st).unwrap().areas()[1] as f64);
        }
        st.step();
    }
    let m = ts.len() as f64;
    let (mt, ma) = (ts.iter().sum::<f64>() / m, areas.iter().sum::<f64>() / m);
    let sxy: f64 = ts.iter().zip(&areas).map(|(t, a)| (t - mt) * (a - ma)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let syy: f64 = areas.iter().map(|a| (a - ma).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    let p = st.params();
    let expected = -2.0 * PI * p.mobility * p.kappa;
    let rel = (slope - expected).abs() / expected.abs();
    Outcome::new(
        rel <= 0.15 && r2 >= 0.98,
        format!("dA/dt = {slope:.3} vs {expected:.3} ({:.1}% off, limit 15%), R^2 = {r2:.5} (limit 0.98)", 100.0 * rel),
    )
}

fn boundary_value() -> Outcome {
    let (w, h) = (64, 4);
    let labels: Vec<u16> = (0..w * h).map(|i| if i % w < w / 2 { 1 } else { 2 }).collect();
    let map = InstanceMap::new(w, h, labels).unwrap();
    let mut st = PhaseFieldState::from_labels(&map, SimParams::default()).unwrap();
    for _ in 0..3000 {
        st.step();
    }
    let phi = composite_field(&st);
    let row = &phi.data[w / 4..3 * w / 4];
    let mid = row.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome::new(
        (0.60..=0.72).contains(&mid),
        format!("relaxed midline phi = {mid:.4} (window [0.60, 0.72], bulk estimate 2/3)"),
    )
}

struct Parity {
    outcome: Outcome,
    sim_dir: PathBuf,
}

fn paper_parity(work: &Path) -> Parity {
    let t0 = Instant::now();
    grainforge(work, &["seed", "--count", "300", "--grains", "112", "--size", "512"]);
    let seed_time = t0.elapsed().as_secs_f64();
    let files: std::collections::HashSet<Vec<u8>> = std::fs::read_dir(work.join("structures"))
        .unwrap()
        .map(|e| std::fs::read(e.unwrap().path()).unwrap())
        .collect();
    let structures = files.len();
    let first = work.join("structures/s0000.png");
    let k0 = read_instances(&first).unwrap().grain_count();

    let sim_root = work.join("sim");
    let t1 = Instant::now();
    grainforge(&sim_root, &["simulate", "--input", s(&first), "--steps", "1000", "--snapshot-every", "100"]);
    let sim_time = t1.elapsed().as_secs_f64();
    let sim_dir = sim_root.join("s0000");

    let evolved = read_checkpoint(&sim_dir.join("checkpoint")).unwrap();
    let mut sparse = evolved.clone();
    let mut dense = evolved.clone();
    dense.densify();
    let steps = 5;
    let ts = Instant::now();
    for _ in 0..steps {
        sparse.step_with(StepOptions::new(StepMode::Sparse, Exec::Parallel));
    }
    let sparse_time = ts.elapsed().as_secs_f64();
    let td = Instant::now();
    for _ in 0..steps {
        dense.step_with(StepOptions::new(StepMode::Dense, Exec::Parallel));
    }
    let dense_time = td.elapsed().as_secs_f64();
    let mut diff: f64 = 0.0;
    assert_eq!(sparse.fields().len(), dense.fields().len());
    for (a, b) in sparse.fields().iter().zip(dense.fields()) {
        assert_eq!(a.label, b.label);
        let (fa, fb) = (a.to_dense(512, 512), b.to_dense(512, 512));
        diff = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).fold(diff, f64::max);
    }
    let speedup = dense_time / sparse_time;
    let pass = structures == 300 && k0 == 112 && speedup >= 10.0 && diff <= 1e-12 && sim_time < 120.0;
    Parity {
        outcome: Outcome::new(
            pass,
            format!(
                "{structures} distinct structures ({k0} grains) seeded in {seed_time:.1} s; 1000 steps in {sim_time:.1} s (limit 120 s); \
                 sparse {:.1} ms/step vs dense {:.1} ms/step = {speedup:.1}x (limit 10x); max |sparse - dense| {diff:.2e} (limit 1e-12)",
                1e3 * sparse_time / steps as f64,
                1e3 * dense_time / steps as f64
            ),
        ),
        sim_dir,
    }
}

fn augmentation_arithmetic(work: &Path) -> Outcome {
    let (images, masks) = (work.join("pairs/images"), work.join("pairs/masks"));
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&masks).unwrap();
    let labels = generate_structure(6, 48, 48, 3, CorpusOptions::default()).unwrap();
    let mut st = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
    for _ in 0..40 {
        st.step();
    }
    let phi = composite_field(&st);
    let mask = boundary_mask(&phi, DEFAULT_TAU).unwrap();
    for k in 0..180 {
        let name = format!("p{k:03}.png");
        write_micrograph(&images.join(&name), &phi).unwrap();
        write_mask(&masks.join(&name), &mask).unwrap();
    }
    let ds = work.join("dataset");
    grainforge(&ds, &["dataset", "build", "--images", s(&images), "--masks", s(&masks), "--patch", "48", "--variants", "15"]);
    let manifest = read_json(&ds.join("manifest.json"));
    let entries = manifest["entries"].as_array().unwrap().len();
    grainforge(&work.join("validate"), &["dataset", "validate", "--manifest", s(&ds.join("manifest.json"))]);
    let violations = read_json(&work.join("validate/validation.json"))["violations"].as_array().unwrap().len();
    Outcome::new(
        entries == 2700 && violations == 0,
        format!("180 pairs x 15 variants -> {entries} manifest entries (expected 2700), {violations} validation violations"),
    )
}

fn metric_axioms() -> Outcome {
    let labels = generate_structure(10, 96, 96, 4, CorpusOptions::default()).unwrap();
    let mut st = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
    for _ in 0..100 {
        st.step();
    }
    let phi = composite_field(&st);
    let a = boundary_mask(&phi, DEFAULT_TAU).unwrap();
    let b = boundary_mask(&phi, 0.9).unwrap();
    let mut worst: f64 = 0.0;
    worst = worst.max((iou(&a, &a).unwrap() - 1.0).abs());
    worst = worst.max((ssim(&phi, &phi).unwrap() - 1.0).abs());
    for theta in [0.0, 1.0, 2.0, 5.0] {
        worst = worst.max((boundary_f1(&a, &a, theta).unwrap() - 1.0).abs());
    }
    worst = worst.max((iou(&a, &b).unwrap() - iou(&b, &a).unwrap()).abs());
    let mut monotone = true;
    let mut prev = 0.0;
    for k in 0..=20 {
        let f = boundary_f1(&b, &a, 0.25 * k as f64).unwrap();
        monotone &= f + 1e-9 >= prev;
        prev = f;
    }
    let constant = Micrograph::constant(16, 16, 0.3);
    let half = Micrograph::new(16, 16, (0..256).map(|i| if i < 128 { 0.0 } else { 1.0 }).collect()).unwrap();
    let uniform = Micrograph::new(16, 16, (0..256).map(|i| i as f64 / 255.0).collect()).unwrap();
    worst = worst.max(shannon_entropy(&constant, 256).abs());
    worst = worst.max((shannon_entropy(&half, 256) - 1.0).abs());
    worst = worst.max((shannon_entropy(&uniform, 256) - 8.0).abs());
    Outcome::new(
        worst <= 1e-9 && monotone,
        format!("largest deviation {worst:.2e} (limit 1e-9); BF1 monotone in theta: {monotone}"),
    )
}

fn shape_stats(inside: impl Fn(usize, usize) -> bool, n: usize) -> (f64, f64) {
    let data = (0..n * n).map(|i| u8::from(!inside(i % n, i / n))).collect();
    let mask = SegmentationMask::new(n, n, data).unwrap();
    let stats = grain_stats(&connected_components(&mask, false).unwrap(), 1.0);
    let g = stats.iter().find(|g| !g.touches_border).unwrap();
    (g.area_px as f64, g.circularity)
}

fn analytic_shapes() -> Outcome {
    let (disk_area, disk_circ) = shape_stats(
        |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - 64.0, y as f64 + 0.5 - 64.0);
            dx * dx + dy * dy <= 2500.0
        },
        128,
    );
    let (square_area, square_circ) = shape_stats(|x, y| (20..80).contains(&x) && (20..80).contains(&y), 100);
    let disk_err = (disk_area / (PI * 2500.0) - 1.0).abs();
    let pass = disk_err <= 0.02 && disk_circ >= 0.93 && square_area == 3600.0 && (square_circ - PI / 4.0).abs() <= 0.05;
    Outcome::new(
        pass,
        format!(
            "disk r=50: area {disk_area} ({:.2}% off pi*2500), circularity {disk_circ:.4}; square 60x60: area {square_area}, circularity {square_circ:.4} (pi/4 = {:.4})",
            100.0 * disk_err,
            PI / 4.0
        ),
    )
}

fn kinetics_trajectory(work: &Path, sim_dir: &Path) -> Outcome {
    let out = work.join("kinetics");
    grainforge(&out, &["kinetics", "--snapshots", s(&sim_dir.join("snapshots"))]);
    let traj = read_json(&out.join("kinetics.json"));
    let mean: Vec<f64> = traj["mean_size"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let count: Vec<u64> = traj["grain_count"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let drops: Vec<f64> = mean.windows(2).filter(|p| p[1] < p[0]).map(|p| (p[0] - p[1]) / p[0]).collect();
    let biggest = drops.iter().cloned().fold(0.0, f64::max);
    let size_ok = drops.len() <= 1 && biggest <= 0.01;
    let count_ok = count.windows(2).all(|p| p[1] <= p[0]);
    Outcome::new(
        size_ok && count_ok,
        format!(
            "{} snapshots: mean diameter {:.3} -> {:.3} px with {} inversions (largest {:.3}%; limit 1 inversion <= 1%); grain count {} -> {} non-increasing: {count_ok}",
            mean.len(),
            mean[0],
            mean[mean.len() - 1],
            drops.len(),
            100.0 * biggest,
            count[0],
            count[count.len() - 1]
        ),
    )
}

fn realism(work: &Path, sim_dir: &Path) -> Outcome {
    let render = work.join("render");
    grainforge(&render, &["render", "--input", s(&sim_dir.join("checkpoint"))]);
    let tex = work.join("tex");
    grainforge(&tex, &["texturize", "--phi", s(&render.join("phi")), "--instances", s(&render.join("instances"))]);
    let name = std::fs::read_dir(render.join("phi")).unwrap().next().unwrap().unwrap().file_name();
    let clean = read_micrograph(&render.join("phi").join(&name)).unwrap();
    let textured = read_micrograph(&tex.join("textured").join(&name)).unwrap();
    let (h0, h1) = (shannon_entropy(&clean, 256), shannon_entropy(&textured, 256));

    let groups = [("clean", &clean), ("textured", &textured)];
    let mut args = vec!["tsne".to_string()];
    for (tag, img) in groups {
        let dir = work.join("patches").join(tag);
        std::fs::create_dir_all(&dir).unwrap();
        for k in 0..20 {
            let (x, y) = (96 * (k % 5), 96 * (k / 5));
            write_micrograph(&dir.join(format!("{tag}_{k:02}.png")), &img.crop(x, y, 96, 96)).unwrap();
        }
        args.push("--group".into());
        args.push(format!("{tag}={}", dir.display()));
    }
    args.extend(["--perplexity", "10"].map(String::from));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = work.join("tsne");
    grainforge(&out, &args);
    let summary = read_json(&out.join("tsne.json"));
    let sil = summary["silhouette"].as_f64().unwrap();
    let cal = summary["max_calibration_error_bits"].as_f64().unwrap();
    let points = summary["points"].as_u64().unwrap_or(0);
    Outcome::new(
        h1 - h0 >= 1.0 && sil > 0.0 && cal <= 1e-3 && points == 40,
        format!(
            "entropy {h0:.3} -> {h1:.3} bits (+{:.3}, limit +1); t-SNE of 20 clean + 20 textured patches: silhouette {sil:.3} (limit > 0), calibration error {cal:.2e} bits (limit 1e-3)",
            h1 - h0
        ),
    )
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let mut report = Report::default();
    report.check("analytic fixed points", fixed_points);
    report.check("energy dissipation", energy_dissipation);
    report.check("curvature-flow law", curvature_flow);
    report.check("boundary value", boundary_value);

    let mut sim_dir = None;
    report.check("paper-parity pipeline shape", || {
        let p = paper_parity(work.path());
        sim_dir = Some(p.sim_dir);
        p.outcome
    });
    report.check("augmentation arithmetic", || augmentation_arithmetic(work.path()));
    report.check("metric axioms", metric_axioms);
    report.check("morphometry vs analytic shapes", analytic_shapes);
    match &sim_dir {
        Some(dir) => {
            report.check("kinetics", || kinetics_trajectory(work.path(), dir));
            report.check("realism surrogates", || realism(work.path(), dir));
        }
        None => {
            for name in ["kinetics", "realism surrogates"] {
                report.check(name, || Outcome::new(false, "no evolved structure to analyse".into()));
            }
        }
    }

    if !report.finish() {
        std::process::exit(1);
    }
}
