//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; the process fails if any criterion does.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use latwalk_core::baselines::{conditional_svm_direction, linear_traverse, train_svm, LinearDirectionModel, SvmConfig};
use latwalk_core::constraint::{project, ConditionSet};
use latwalk_core::data::synthesize_many;
use latwalk_core::linalg::{dot, Matrix};
use latwalk_core::metrics::{
    mppl, mppl_with_sampler, preservation_ratio, taylor_error, taylor_probes, DistanceBins, FixedT, ImageDistance,
    MppplConfig, TaylorReport,
};
use latwalk_core::proxy::{train, ClassificationLoss, ProxyModel, TrainConfig};
use latwalk_core::rng::{child_seed, seeded_rng, standard_normal};
use latwalk_core::traversal::{batch_traverse, start_point, traverse, Oracle, Sign, TraversalConfig};
use latwalk_core::victims::{
    Endpoint, ExternalVictimClient, LinearGaussianVictim, Victim, VictimError, VictimModel, VictimSpec,
};
use latwalk_core::{HeadKind, JacobianMatrix, LatentPoint, Trajectory};
use nalgebra::{DMatrix, DVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gaussian_vec(rng: &mut latwalk_core::rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

// 1 ──────────────────────────────────────────────────────────────────────

fn same_pattern(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (*x > 0.0) == (*y > 0.0))
}

/// Max-norm relative error between the analytic Jacobian and central
/// differences, at a point whose ReLU pattern is constant across all probes.
fn fd_error(model: &ProxyModel, rng: &mut latwalk_core::rng::Rng, h: f64) -> (f64, usize) {
    let n = model.input_dim();
    let mut redraws = 0;
    loop {
        let z = LatentPoint::new(gaussian_vec(rng, n)).unwrap();
        let centre = model.preactivations(&z).unwrap();
        let mut fd = Matrix::zeros(model.output_dim(), n);
        let mut stable = true;
        for i in 0..n {
            let mut plus = z.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let (plus, minus) = (LatentPoint::new(plus).unwrap(), LatentPoint::new(minus).unwrap());
            if !same_pattern(&centre, &model.preactivations(&plus).unwrap())
                || !same_pattern(&centre, &model.preactivations(&minus).unwrap())
            {
                stable = false;
                break;
            }
            let (fp, fm) = (model.forward(&plus).unwrap(), model.forward(&minus).unwrap());
            for j in 0..model.output_dim() {
                fd[(j, i)] = (fp[j] - fm[j]) / (2.0 * h);
            }
        }
        if !stable {
            redraws += 1;
            continue;
        }
        let jac = model.jacobian(&z).unwrap();
        let scale = jac.matrix().as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = jac
            .matrix()
            .as_slice()
            .iter()
            .zip(fd.as_slice())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        return (diff / scale.max(f64::MIN_POSITIVE), redraws);
    }
}

fn criterion_1() -> Outcome {
    let heads = vec![HeadKind::Classification; 4];
    let mut rng = seeded_rng(101);
    let (mut worst, mut redraws) = (0.0f64, 0);
    for depth in [3usize, 8] {
        for s in 0..100 {
            let model = ProxyModel::init(16, heads.clone(), depth, 64, 0.0, child_seed(depth as u64, s)).unwrap();
            let (e, r) = fd_error(&model, &mut rng, 1e-5);
            worst = worst.max(e);
            redraws += r;
        }
    }
    verdict(
        worst < 1e-4,
        format!("max rel err {worst:.2e} over 200 models (< 1e-4), {redraws} kink-straddling points redrawn"),
    )
}

// 2 ──────────────────────────────────────────────────────────────────────

/// Squared norm of the least-squares residual of `g` against the columns
/// spanned by `rows`, via SVD.
fn lsq_residual_sq(rows: &[Vec<f64>], g: &[f64]) -> f64 {
    let n = g.len();
    if rows.is_empty() {
        return dot(g, g);
    }
    let a = DMatrix::from_fn(n, rows.len(), |i, k| rows[k][i]);
    let b = DVector::from_column_slice(g);
    let c = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    (b - a * c).norm_squared()
}

fn criterion_2() -> Outcome {
    let n = 16;
    let mut rng = seeded_rng(202);
    let (mut ortho, mut rel) = (0.0f64, 0.0f64);
    for inst in 0..100 {
        let k = inst % 9;
        let rows: Vec<Vec<f64>> = (0..=k).map(|_| gaussian_vec(&mut rng, n)).collect();
        let jac = JacobianMatrix::new(Matrix::from_rows(&rows).unwrap()).unwrap();
        let cond = ConditionSet::new((1..=k).collect(), 0).unwrap();
        let d = project(&jac, 0, &cond).unwrap();
        if d.is_degenerate() {
            return verdict(false, format!("instance {inst} wrongly flagged degenerate"));
        }
        for r in &rows[1..] {
            ortho = ortho.max(dot(r, d.as_slice()).abs());
        }
        let ours = dot(&rows[0], d.as_slice()).powi(2);
        let oracle = lsq_residual_sq(&rows[1..], &rows[0]);
        rel = rel.max((ours - oracle).abs() / oracle);
    }

    let mut flagged = 0;
    for _ in 0..20 {
        let basis: Vec<Vec<f64>> = (0..4).map(|_| gaussian_vec(&mut rng, n)).collect();
        let w = gaussian_vec(&mut rng, 4);
        let g: Vec<f64> = (0..n).map(|i| (0..4).map(|k| w[k] * basis[k][i]).sum()).collect();
        let mut rows = vec![g];
        rows.extend(basis);
        let jac = JacobianMatrix::new(Matrix::from_rows(&rows).unwrap()).unwrap();
        if project(&jac, 0, &ConditionSet::new(vec![1, 2, 3, 4], 0).unwrap()).unwrap().is_degenerate() {
            flagged += 1;
        }
    }
    verdict(
        ortho < 1e-8 && rel < 1e-10 && flagged == 20,
        format!("orthogonality {ortho:.1e} (< 1e-8), objective rel err {rel:.1e} (< 1e-10), degenerate flagged {flagged}/20"),
    )
}

// 3 ──────────────────────────────────────────────────────────────────────

fn criterion_3() -> Outcome {
    let (mut worst, mut monotone) = (0.0f64, true);
    for seed in 0..20 {
        let mut rng = seeded_rng(child_seed(303, seed));
        let v = LinearGaussianVictim::random(16, 4, seed, true)
            .unwrap()
            .with_bias(gaussian_vec(&mut rng, 4))
            .unwrap();
        let cfg = TraversalConfig::attribute_protocol(0).with_condition(ConditionSet::new(vec![1, 2, 3], 0).unwrap());
        let z0 = start_point(child_seed(seed, 1), 16).unwrap();
        let t = traverse(&z0, &cfg, &Oracle(&v), Some(&v)).unwrap();
        if t.len() != 41 {
            return verdict(false, format!("seed {seed} stopped after {} points", t.len()));
        }
        for k in 1..4 {
            let s = t.attr_series(k);
            worst = worst.max(s.windows(2).map(|w| (w[1] - w[0]).abs()).sum());
        }
        monotone &= t.attr_series(0).windows(2).all(|w| w[1] < w[0]);
    }
    verdict(
        worst < 1e-9 && monotone,
        format!("non-target total variation {worst:.1e} (< 1e-9), target strictly monotone: {monotone}, 20 victims"),
    )
}

// 4-6 shared setup ───────────────────────────────────────────────────────

struct Frozen {
    victim: Victim,
    proxy: ProxyModel,
    data: Vec<latwalk_core::data::Sample>,
    seeds: Vec<u64>,
    train_time: Duration,
}

const THRESHOLD: f64 = 5.0;

fn frozen() -> Frozen {
    let started = Instant::now();
    let victim = VictimSpec::entangled_warp().build().unwrap();
    let data = synthesize_many(&victim, &[0, 1, 2, 3], 1250, 0.9, 11).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        width: 64,
        learning_rate: 0.01,
        dropout_rate: 0.2,
        layers: 3,
        classification_loss: ClassificationLoss::LogitMse,
        ..TrainConfig::default()
    };
    let init = ProxyModel::init(16, victim.heads().to_vec(), cfg.layers, cfg.width, cfg.dropout_rate, 3).unwrap();
    let proxy = train(&init, &data, &cfg).unwrap().model;
    Frozen {
        victim,
        proxy,
        data,
        seeds: (0..100).collect(),
        train_time: started.elapsed(),
    }
}

fn iterative(f: &Frozen, cfg: &TraversalConfig) -> Vec<Trajectory> {
    batch_traverse(&f.seeds, 16, cfg, &f.proxy, Some(&f.victim))
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect()
}

fn linear(f: &Frozen, steps: usize, step_size: f64) -> Vec<Trajectory> {
    f.seeds
        .iter()
        .map(|&s| {
            let z0 = start_point(s, 16).unwrap();
            let model = LinearDirectionModel::from_initial_gradient(&f.proxy, &z0, 0, Sign::Descend).unwrap();
            linear_traverse(&z0, &model, steps, step_size, 0, Some(&f.victim)).unwrap()
        })
        .collect()
}

fn steps_to_threshold(t: &Trajectory) -> usize {
    let s = t.attr_series(0);
    s.iter().position(|v| (v - s[0]).abs() >= THRESHOLD).unwrap_or(s.len())
}

fn final_change(t: &Trajectory) -> f64 {
    let s = t.attr_series(0);
    (s[s.len() - 1] - s[0]).abs()
}

fn criterion_4(f: &Frozen) -> Outcome {
    let it = iterative(f, &TraversalConfig::attribute_protocol(0));
    let lin = linear(f, 40, 0.2);
    let mean = |ts: &[Trajectory]| ts.iter().map(steps_to_threshold).sum::<usize>() as f64 / ts.len() as f64;
    let (m_it, m_lin) = (mean(&it), mean(&lin));
    let wins = it.iter().zip(&lin).filter(|(a, b)| final_change(a) > final_change(b)).count();
    verdict(
        m_it < m_lin && wins >= 80,
        format!(
            "mean steps to |Δ target| ≥ {THRESHOLD}: iterative {m_it:.2} vs linear {m_lin:.2}; larger final change on {wins}/100 seeds (≥ 80)"
        ),
    )
}

fn criterion_5(f: &Frozen) -> Outcome {
    let cond = ConditionSet::new(vec![1, 2, 3], 0).unwrap();
    let ratio = |ts: &[Trajectory]| {
        let refs: Vec<&Trajectory> = ts.iter().collect();
        preservation_ratio(&refs, 0).unwrap().ratio
    };
    let conditional = iterative(f, &TraversalConfig::attribute_protocol(0).with_condition(cond.clone()));
    let unconditional = iterative(f, &TraversalConfig::attribute_protocol(0));

    let normals: Vec<Vec<f64>> = (0..4)
        .map(|k| train_svm(&f.data, k, &SvmConfig::default(), child_seed(5, k as u64)).unwrap().weights)
        .collect();
    let dir = conditional_svm_direction(&normals, 0, &cond).unwrap();
    let model = LinearDirectionModel::from_normal(normals[0].clone(), dir, Sign::Descend, vec![1, 2, 3]);
    let svm: Vec<Trajectory> = f
        .seeds
        .iter()
        .map(|&s| linear_traverse(&start_point(s, 16).unwrap(), &model, 40, 0.2, 0, Some(&f.victim)).unwrap())
        .collect();

    let (c, u, s) = (ratio(&conditional), ratio(&unconditional), ratio(&svm));
    verdict(
        c > u && c > s,
        format!("preservation ratio: conditional {c:.3} vs unconditional {u:.3} and conditional SVM {s:.3}"),
    )
}

fn farthest(r: &TaylorReport) -> f64 {
    let last = &r.bins[r.bins.len() - 1];
    if last.empty {
        f64::NAN
    } else {
        last.mean_error
    }
}

fn criterion_6(f: &Frozen) -> Outcome {
    let it = iterative(f, &TraversalConfig::smoothness_protocol(0));
    let lin = linear(f, 600, 0.01);
    let it_refs: Vec<&Trajectory> = it.iter().collect();
    let lin_refs: Vec<&Trajectory> = lin.iter().collect();
    let (p_it, p_lin) = (taylor_probes(&it_refs, 0).unwrap(), taylor_probes(&lin_refs, 0).unwrap());
    let all: Vec<_> = p_it.iter().chain(&p_lin).cloned().collect();
    let bins = DistanceBins::covering(5, &all).unwrap();
    let (e_it, e_lin) = (farthest(&taylor_error(&p_it, &bins)), farthest(&taylor_error(&p_lin, &bins)));

    let mut rng = seeded_rng(606);
    let affine = LinearGaussianVictim::random(16, 4, 6, false)
        .unwrap()
        .with_bias(gaussian_vec(&mut rng, 4))
        .unwrap();
    let exact: Vec<Trajectory> = (0..10)
        .flat_map(|s| {
            let z0 = start_point(s, 16).unwrap();
            let a = traverse(&z0, &TraversalConfig::smoothness_protocol(0), &Oracle(&affine), Some(&affine)).unwrap();
            let model = LinearDirectionModel::from_initial_gradient(&Oracle(&affine), &z0, 0, Sign::Descend).unwrap();
            let b = linear_traverse(&z0, &model, 600, 0.01, 0, Some(&affine)).unwrap();
            [a, b]
        })
        .collect();
    let refs: Vec<&Trajectory> = exact.iter().collect();
    let probes = taylor_probes(&refs, 0).unwrap();
    let report = taylor_error(&probes, &DistanceBins::covering(5, &probes).unwrap());
    let affine_max = report
        .bins
        .iter()
        .filter(|b| !b.empty)
        .fold(0.0f64, |a, b| a.max(b.mean_error));

    verdict(
        e_it < e_lin && affine_max < 1e-10,
        format!(
            "farthest-bin Taylor error: iterative {e_it:.4} vs linear {e_lin:.4}; affine victim max bin error {affine_max:.1e} (< 1e-10)"
        ),
    )
}

// 7 ──────────────────────────────────────────────────────────────────────

struct ConstantImage(LinearGaussianVictim);

impl VictimModel for ConstantImage {
    fn latent_dim(&self) -> usize {
        self.0.latent_dim()
    }
    fn attribute_count(&self) -> usize {
        self.0.attribute_count()
    }
    fn image_dim(&self) -> Option<usize> {
        Some(8)
    }
    fn heads(&self) -> &[HeadKind] {
        self.0.heads()
    }
    fn query(&self, z: &LatentPoint) -> Result<latwalk_core::victims::QueryResult, VictimError> {
        let mut q = self.0.query(z)?;
        q.image = Some(vec![0.5; 8]);
        Ok(q)
    }
    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({"kind": "constant-image"})
    }
}

fn naive_mppl(t: &Trajectory, victim: &dyn VictimModel, ts: &[f64], eps: f64) -> f64 {
    let image = |a: &LatentPoint, b: &LatentPoint, s: f64| {
        let z: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + s * (y - x)).collect();
        victim.query(&LatentPoint::new(z).unwrap()).unwrap().image.unwrap()
    };
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..t.points.len() - 1 {
        for &s in ts {
            let (a, b) = (image(&t.points[i], &t.points[i + 1], s), image(&t.points[i], &t.points[i + 1], s + eps));
            let sq: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            sum += sq / a.len() as f64 / (eps * eps);
            count += 1;
        }
    }
    sum / count as f64
}

fn criterion_7() -> Outcome {
    let victim = VictimSpec::entangled_warp().build().unwrap();
    let cfg = MppplConfig::default();
    let z0 = start_point(7, 16).unwrap();
    let t = traverse(&z0, &TraversalConfig::new(3, 0.2, 0), &Oracle(victim.oracle().unwrap()), Some(&victim)).unwrap();
    let ts = vec![0.0, 0.25, 0.6, 0.9];
    let streamed = mppl_with_sampler(&[&t], &victim, &cfg, &ImageDistance::ScaledSquaredL2, &FixedT(ts.clone()))
        .unwrap()
        .mppl;
    let naive = naive_mppl(&t, &victim, &ts, 1e-4);

    let flat = ConstantImage(LinearGaussianVictim::random(16, 4, 1, true).unwrap());
    let lin = traverse(&z0, &TraversalConfig::attribute_protocol(0), &Oracle(&flat.0), Some(&flat)).unwrap();
    let constant = mppl(&[&lin], &flat, &cfg, 0).unwrap().mppl;

    verdict(
        streamed == naive && constant == 0.0 && cfg.epsilon == 1e-4,
        format!("streamed {streamed:.6e} == naive {naive:.6e}: {}; constant image {constant}; default ε {:e}", streamed == naive, cfg.epsilon),
    )
}

// 8 ──────────────────────────────────────────────────────────────────────

fn latwalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_latwalk")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| -> PathBuf { dir.path().join(name) };
    let runs: Vec<Vec<String>> = vec![
        vec!["synth", "--victim", "warp", "--attr", "0,1,2,3", "--per-class", "150", "--seed", "3", "--out", s(&p("d.jsonl"))],
        vec!["train", "--data", s(&p("d.jsonl")), "--out", s(&p("m.json")), "--epochs", "3", "--width", "32", "--seed", "4"],
        vec!["traverse", "--method", "iterative", "--checkpoint", s(&p("m.json")), "--victim", "warp", "--cond", "1,2", "--count", "6", "--out", s(&p("it.jsonl"))],
        vec!["traverse", "--method", "linear", "--checkpoint", s(&p("m.json")), "--victim", "warp", "--count", "6", "--out", s(&p("lin.jsonl"))],
        vec!["traverse", "--method", "svm", "--data", s(&p("d.jsonl")), "--victim", "warp", "--cond", "1", "--count", "6", "--out", s(&p("svm.jsonl"))],
        vec!["eval", "mppl", "-t", s(&p("it.jsonl")), "-t", s(&p("lin.jsonl")), "--victim", "warp", "--out", s(&p("e_mppl"))],
        vec!["eval", "curves", "-t", s(&p("it.jsonl")), "-t", s(&p("svm.jsonl")), "--out", s(&p("e_curves"))],
        vec!["eval", "preservation", "-t", s(&p("it.jsonl")), "-t", s(&p("svm.jsonl")), "--out", s(&p("e_pres"))],
        vec!["eval", "taylor", "-t", s(&p("it.jsonl")), "-t", s(&p("lin.jsonl")), "--bins", "5", "--out", s(&p("e_taylor"))],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(str::to_string).collect())
    .collect();
    for r in &runs {
        let args: Vec<&str> = r.iter().map(String::as_str).collect();
        let out = latwalk(&args);
        if !out.status.success() {
            return verdict(false, format!("`{}` failed: {}", r.join(" "), String::from_utf8_lossy(&out.stderr)));
        }
    }

    let manifests: Vec<PathBuf> = ["d.jsonl", "m.json", "it.jsonl", "lin.jsonl", "svm.jsonl", "e_mppl", "e_curves", "e_pres", "e_taylor"]
        .iter()
        .map(|n| p(&format!("{n}.manifest.json")))
        .collect();
    let (mut files, mut identical) = (0, 0);
    for (i, m) in manifests.iter().enumerate() {
        let redo = dir.path().join(format!("replay{i}"));
        let out = latwalk(&["replay", s(m), "--out-dir", s(&redo)]);
        if !out.status.success() {
            return verdict(false, format!("replay of {} exited {:?}", m.display(), out.status.code()));
        }
        let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(m).unwrap()).unwrap();
        for o in manifest["outputs"].as_array().unwrap() {
            let original = PathBuf::from(o["path"].as_str().unwrap());
            let copy = redo.join(original.file_name().unwrap());
            files += 1;
            if std::fs::read(&original).unwrap() == std::fs::read(&copy).unwrap() {
                identical += 1;
            }
        }
    }
    verdict(
        files > 0 && identical == files,
        format!("{} manifests replayed, {identical}/{files} output files byte-identical", manifests.len()),
    )
}

// 9 ──────────────────────────────────────────────────────────────────────

fn stub(behavior: &str, timeout: Duration) -> Result<ExternalVictimClient, VictimError> {
    let cmd = [env!("CARGO_BIN_EXE_latwalk"), "victim-stub", "--victim", "warp", "--behavior", behavior];
    ExternalVictimClient::connect(Endpoint::Command(cmd.iter().map(|s| s.to_string()).collect()), timeout, 64)
}

fn criterion_9() -> Outcome {
    let local = VictimSpec::entangled_warp().build().unwrap();
    let client = match stub("normal", Duration::from_secs(10)) {
        Ok(c) => c,
        Err(e) => return verdict(false, format!("handshake failed: {e}")),
    };
    let (mut errors, mut differ) = (0, 0);
    for q in 0..1000u64 {
        let z = start_point(child_seed(909, q), 16).unwrap();
        match client.query(&z) {
            Ok(r) => differ += (r != local.query(&z).unwrap()) as usize,
            Err(_) => errors += 1,
        }
    }
    drop(client);

    let probe = start_point(1, 16).unwrap();
    let wrong = stub("wrong-dim", Duration::from_secs(10)).and_then(|c| c.query(&probe));
    let wrong_ok = matches!(wrong, Err(VictimError::DimensionMismatch { .. }));
    let silent = stub("silent", Duration::from_millis(300)).and_then(|c| c.query(&probe));
    let silent_ok = matches!(silent, Err(VictimError::Timeout(_)));
    let name = |r: &Result<_, VictimError>| match r {
        Ok(_) => "no error".to_string(),
        Err(e) => e.to_string(),
    };
    verdict(
        errors == 0 && differ == 0 && wrong_ok && silent_ok,
        format!(
            "1000 queries, {errors} errors, {differ} differing from local; wrong-dim → {}; silent → {}",
            name(&wrong),
            name(&silent)
        ),
    )
}

// ────────────────────────────────────────────────────────────────────────

fn run(id: usize, limit: Duration, extra: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let started = Instant::now();
    let o = f();
    let took = started.elapsed() + extra;
    let in_time = took <= limit;
    let pass = o.pass && in_time;
    println!(
        "criterion {id}: {} ({:.2?}, limit {:?}{}) {}",
        if pass { "PASS" } else { "FAIL" },
        took,
        limit,
        if in_time { "" } else { ", over time" },
        o.detail
    );
    pass
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut ok = true;
    ok &= run(1, Duration::from_secs(10), Duration::ZERO, criterion_1);
    ok &= run(2, Duration::from_secs(1), Duration::ZERO, criterion_2);
    ok &= run(3, Duration::from_secs(1), Duration::ZERO, criterion_3);
    let f = frozen();
    println!("frozen setup: {} samples, proxy trained in {:.2?}", f.data.len(), f.train_time);
    ok &= run(4, Duration::from_secs(300), f.train_time, || criterion_4(&f));
    ok &= run(5, Duration::from_secs(300), f.train_time, || criterion_5(&f));
    ok &= run(6, Duration::from_secs(120), f.train_time, || criterion_6(&f));
    ok &= run(7, Duration::from_secs(10), Duration::ZERO, criterion_7);
    ok &= run(8, Duration::from_secs(600), Duration::ZERO, criterion_8);
    ok &= run(9, Duration::from_secs(10), Duration::ZERO, criterion_9);
    println!("acceptance: {}", if ok { "all criteria passed" } else { "FAILED" });
    if !ok {
        std::process::exit(1);
    }
}
