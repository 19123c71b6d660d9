//! Acceptance checks. Every criterion runs and prints one PASS/FAIL line
//! with its measured values; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use napforge::featurize::{
    kde_density, read_features, scott_bandwidth, write_features, z_range, Featurizer, KdeConfig, Pipeline,
};
use napforge::hdbscan::{
    core_distances, dendrogram, fit, mutual_reachability, Dendrogram, HdbscanConfig, Merge, Selection,
};
use napforge::ingest::{read_activations, write_activations, ActivationSet, MetadataTable};
use napforge::metric::{js_distance, pairwise_matrix, DistanceMatrix, Metric};
use napforge::normal::quantile;
use napforge::report::{sweep, SweepGrid};
use napforge::synth::{blob_assignment, generate, BlobCenter, SynthSpec};
use napforge::validity::{dbcv, ValidityError};
use napforge_cli::{cmd_ood, cmd_run, cmd_synth, ModeArg, OodArgs, RunArgs, SynthArgs};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn verdict(criterion: u32, pass: bool, detail: &str, started: Instant) {
    println!(
        "criterion {criterion} {}: {detail} ({:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

fn main() {
    let checks: [(&str, fn()); 13] = [
        ("criterion_01_constants", criterion_01_constants),
        ("criterion_02_kde_mass", criterion_02_kde_mass),
        ("criterion_03_jsd_metric", criterion_03_jsd_metric),
        ("criterion_04_dendrogram_oracle", criterion_04_dendrogram_oracle),
        ("criterion_05_blob_recovery_eom", criterion_05_blob_recovery_eom),
        ("criterion_05_blob_recovery_leaf", criterion_05_blob_recovery_leaf),
        ("criterion_05_blob_recovery_kde", criterion_05_blob_recovery_kde),
        ("criterion_06_selection_trends", criterion_06_selection_trends),
        ("criterion_07_manifold", criterion_07_manifold),
        ("criterion_08_dbcv_sanity", criterion_08_dbcv_sanity),
        ("criterion_09_ood_gate", criterion_09_ood_gate),
        ("criterion_10_determinism_and_round_trips", criterion_10_determinism_and_round_trips),
        ("criterion_11_scale_invariance", criterion_11_scale_invariance),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, check)| std::panic::catch_unwind(check).is_err())
        .map(|(name, _)| *name)
        .collect();
    println!("acceptance: {} passed, {} failed {:?}", checks.len() - failed.len(), failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

fn profile(n: usize, loc: f64, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|s| loc + scale * quantile((s as f64 + 0.5) / n as f64).unwrap())
        .collect()
}

/// True when every cluster is pure and no two clusters share a truth label.
fn agrees(labels: &[Option<usize>], truth: &[usize]) -> bool {
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (l, &t) in labels.iter().zip(truth) {
        if let Some(l) = *l {
            if *owner.entry(l).or_insert(t) != t {
                return false;
            }
        }
    }
    let mut seen: Vec<usize> = owner.values().copied().collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == owner.len()
}

fn blob_spec(n: usize, locations: &[f64], noise: f64, seed: u64) -> SynthSpec {
    let centers = locations.iter().map(|&l| BlobCenter::uniform(4, l, 1.0)).collect();
    SynthSpec::blobs(n, 4, 64, centers, noise, seed)
}

fn criterion_01_constants() {
    let t = Instant::now();
    let (lo, hi) = z_range(99.0).unwrap();
    let h = scott_bandwidth(100_000).unwrap();
    let grid = KdeConfig::default().grid().unwrap();
    let pass = (hi - 2.5758).abs() < 1e-3
        && (lo + 2.5758).abs() < 1e-3
        && h == 0.1
        && grid.len() == 10
        && grid[0] == lo
        && grid[9] == hi;
    verdict(
        1,
        pass,
        &format!("z_range(99)=[{lo:.6},{hi:.6}] tol 1e-3, scott(1e5)={h:?} exact, grid {} points [{}, {}]", grid.len(), grid[0], grid[9]),
        t,
    );
}

fn criterion_02_kde_mass() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points = 2000;
    let step = 16.0 / (points - 1) as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        let q = rng.random_range(1..=1000usize);
        let values: Vec<f64> = (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let h = scott_bandwidth(q).unwrap();
        let f: Vec<f64> = (0..points).map(|k| kde_density(&values, h, -8.0 + k as f64 * step)).collect();
        let mass = step * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[points - 1]));
        lo = lo.min(mass);
        hi = hi.max(mass);
    }
    let pass = lo >= 0.98 && hi <= 1.02;
    verdict(2, pass, &format!("200 inputs, mass in [{lo:.6}, {hi:.6}], required [0.98, 1.02]"), t);
}

fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl(p, &m) + 0.5 * kl(q, &m)).sqrt()
}

fn criterion_03_jsd_metric() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..8)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let s: f64 = v.iter().sum();
        if s == 0.0 {
            let mut e = vec![0.0; 8];
            e[0] = 1.0;
            e
        } else {
            v.iter().map(|x| x / s).collect()
        }
    };
    let (mut symmetric, mut identity, mut bounded, mut worst_slack) = (true, true, true, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let (a, b, c) = (vector(&mut rng), vector(&mut rng), vector(&mut rng));
        let ab = js_distance(&a, &b).unwrap();
        let bc = js_distance(&b, &c).unwrap();
        let ac = js_distance(&a, &c).unwrap();
        symmetric &= ab == js_distance(&b, &a).unwrap();
        identity &= js_distance(&a, &a).unwrap() == 0.0;
        bounded &= ab <= 1.0 && bc <= 1.0 && ac <= 1.0;
        worst_slack = worst_slack.max(ac - ab - bc);
    }
    let corners = js_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
    let half = js_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
    let oracle = jsd_oracle(&[0.5, 0.5], &[1.0, 0.0]);
    let pass = symmetric
        && identity
        && bounded
        && worst_slack <= 1e-9
        && (corners - 1.0).abs() <= 1e-12
        && (half - 0.5579).abs() <= 1e-4
        && (half - oracle).abs() <= 1e-12;
    verdict(
        3,
        pass,
        &format!(
            "symmetric={symmetric} identity={identity} bounded={bounded} max triangle excess {worst_slack:.3e} (tol 1e-9), \
             d([1,0],[0,1])={corners} (tol 1e-12), d([.5,.5],[1,0])={half:.6} oracle {oracle:.6} (tol 1e-4)"
        ),
        t,
    );
}

/// Agglomerates clusters by their smallest connecting edge under the
/// (weight, lower, higher) order, checking every cluster pair each step.
fn brute_force_dendrogram(d: &DistanceMatrix) -> Dendrogram {
    let n = d.n();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let key = |i: usize, j: usize| (d.get(i, j), i.min(j), i.max(j));
    while clusters.len() > 1 {
        let mut best: Option<((f64, usize, usize), usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                for &i in &clusters[x].1 {
                    for &j in &clusters[y].1 {
                        let k = key(i, j);
                        let better = match best {
                            None => true,
                            Some((b, _, _)) => {
                                k.0 < b.0 || (k.0 == b.0 && (k.1, k.2) < (b.1, b.2))
                            }
                        };
                        if better {
                            best = Some((k, x, y));
                        }
                    }
                }
            }
        }
        let (k, x, y) = best.unwrap();
        let (idy, my) = clusters.remove(y);
        let (idx, mx) = clusters.remove(x);
        let members: Vec<usize> = mx.into_iter().chain(my).collect();
        merges.push(Merge {
            left: idx.min(idy),
            right: idx.max(idy),
            distance: k.0,
            size: members.len(),
        });
        clusters.push((n + merges.len() - 1, members));
    }
    Dendrogram { n_points: n, merges }
}

fn criterion_04_dendrogram_oracle() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for instance in 0..200 {
        let n = rng.random_range(2..=12usize);
        // coarse values so that ties are common
        let coarse = instance % 2 == 0;
        let upper: Vec<f64> = (0..n * (n - 1) / 2)
            .map(|_| {
                if coarse {
                    rng.random_range(0..5u32) as f64
                } else {
                    rng.random::<f64>() * 10.0
                }
            })
            .collect();
        let d = DistanceMatrix::from_upper(n, Metric::Euclidean, upper).unwrap();
        let ms = rng.random_range(1..n.max(2));
        let core = core_distances(&d, ms.min(n - 1).max(1)).unwrap();
        let mr = mutual_reachability(&d, &core).unwrap();
        if dendrogram(&mr) != brute_force_dendrogram(&mr) {
            mismatches += 1;
        }
    }
    verdict(4, mismatches == 0, &format!("{mismatches} of 200 instances differ from the O(n^3) oracle (exact)"), t);
}

fn gaussian_blobs(seed: u64) -> (DistanceMatrix, Vec<usize>) {
    let centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 75f64.sqrt())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (k, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..50 {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            points.push((cx + dx, cy + dy));
            truth.push(k);
        }
    }
    let d = DistanceMatrix::from_fn(points.len(), Metric::Euclidean, |i, j| {
        (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1)
    })
    .unwrap();
    (d, truth)
}

fn criterion_05_blob_recovery_eom() {
    let t = Instant::now();
    let (d, truth) = gaussian_blobs(5);
    let model = fit(&d, &HdbscanConfig::new(5, Selection::Eom)).unwrap();
    let pass = model.n_clusters() == 3 && agrees(&model.labels, &truth);
    verdict(
        5,
        pass,
        &format!("euclidean EoM mcs 5: {} clusters {:?}, pure={}", model.n_clusters(), model.cluster_sizes(), agrees(&model.labels, &truth)),
        t,
    );
}

fn criterion_05_blob_recovery_leaf() {
    let t = Instant::now();
    let (d, truth) = gaussian_blobs(5);
    let model = fit(&d, &HdbscanConfig::new(5, Selection::Leaf)).unwrap();
    let pass = model.n_clusters() == 3 && agrees(&model.labels, &truth);
    verdict(
        5,
        pass,
        &format!("euclidean Leaf mcs 5: {} clusters {:?}, pure={}", model.n_clusters(), model.cluster_sizes(), agrees(&model.labels, &truth)),
        t,
    );
}

fn criterion_05_blob_recovery_kde() {
    let t = Instant::now();
    let (set, _) = generate(&blob_spec(150, &[0.0, 10.0, 20.0], 1.0, 0)).unwrap();
    let truth = blob_assignment(150, 3);
    let (_, features) = Featurizer::fit(&set, Pipeline::ProposedKde, &KdeConfig::default()).unwrap();
    let d = pairwise_matrix(&features, Metric::JensenShannon).unwrap();
    let mut detail = Vec::new();
    let mut pass = true;
    for selection in [Selection::Eom, Selection::Leaf] {
        let model = fit(&d, &HdbscanConfig::new(5, selection)).unwrap();
        let ok = model.n_clusters() == 3 && agrees(&model.labels, &truth);
        pass &= ok;
        detail.push(format!("{selection}: {:?} pure={}", model.cluster_sizes(), agrees(&model.labels, &truth)));
    }
    verdict(5, pass, &format!("proposed-kde 3 blobs U=4 Q=64: {}", detail.join(", ")), t);
}

fn nested_fixture() -> ActivationSet {
    let values: Vec<f32> = [(6, 0.0, 0.3), (10, 2.5, 0.3), (16, 6.0, 0.3), (40, 50.0, 1.0)]
        .iter()
        .flat_map(|&(n, loc, scale)| profile(n, loc, scale))
        .map(|v| v as f32)
        .collect();
    ActivationSet::new("nested", values.len(), 1, 1, values).unwrap()
}

fn criterion_06_selection_trends() {
    let t = Instant::now();
    let mcs: Vec<usize> = (3..=19).step_by(2).collect();
    let mut pass = true;
    let mut detail = Vec::new();

    let nested = nested_fixture();
    let (blobs, meta) = generate(&blob_spec(150, &[0.0, 10.0, 20.0], 1.0, 0)).unwrap();
    let fixtures = [
        ("nested", nested.clone(), MetadataTable::new(nested.n_samples()), Pipeline::Raw),
        ("blobs", blobs, meta, Pipeline::ProposedKde),
    ];
    for (name, set, meta, pipeline) in fixtures {
        let grid = SweepGrid::new(vec![pipeline], vec![Selection::Eom, Selection::Leaf], mcs.clone());
        let rows = sweep(&set, &meta, &grid).unwrap().rows;
        let (eom, leaf) = rows.split_at(mcs.len());
        let dominated = eom.iter().zip(leaf).all(|(e, l)| e.n_nonclustered <= l.n_nonclustered);
        pass &= dominated;
        let leaf_counts: Vec<usize> = leaf.iter().map(|r| r.n_clusters).collect();
        detail.push(format!(
            "{name}: EoM noise {:?} <= Leaf noise {:?}: {dominated}",
            eom.iter().map(|r| r.n_nonclustered).collect::<Vec<_>>(),
            leaf.iter().map(|r| r.n_nonclustered).collect::<Vec<_>>()
        ));
        if name == "nested" {
            let monotone = leaf_counts.windows(2).all(|w| w[1] <= w[0]);
            pass &= monotone;
            detail.push(format!("nested Leaf clusters {leaf_counts:?} non-increasing: {monotone}"));
        }
    }
    verdict(6, pass, &detail.join("; "), t);
}

fn criterion_07_manifold() {
    let t = Instant::now();
    let (set, _) = generate(&SynthSpec::manifold(2000, 4, 64, [-10.0, 25.0], 0.0, 1)).unwrap();
    let (_, features) = Featurizer::fit(&set, Pipeline::ProposedKde, &KdeConfig::default()).unwrap();
    let d = pairwise_matrix(&features, Metric::JensenShannon).unwrap();
    let model = fit(&d, &HdbscanConfig::new(5, Selection::Eom)).unwrap();
    let sizes = model.cluster_sizes();
    let clustered: usize = sizes.iter().sum();
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let share = if clustered == 0 { 0.0 } else { largest as f64 / clustered as f64 };
    verdict(
        7,
        share >= 0.8,
        &format!("{} clusters, largest holds {largest}/{clustered} = {share:.3} of clustered samples (required >= 0.8)", sizes.len()),
        t,
    );
}

fn criterion_08_dbcv_sanity() {
    let t = Instant::now();
    let (set, _) = generate(&blob_spec(40, &[0.0, 10.0], 0.1, 8)).unwrap();
    let (_, features) = Featurizer::fit(&set, Pipeline::BaselineMean, &KdeConfig::default()).unwrap();
    let truth: Vec<Option<usize>> = blob_assignment(40, 2).into_iter().map(Some).collect();
    let correct = dbcv(&features, &truth, Metric::Euclidean).unwrap().overall;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut best_permuted = f64::NEG_INFINITY;
    for _ in 0..20 {
        let mut labels = truth.clone();
        labels.shuffle(&mut rng);
        best_permuted = best_permuted.max(dbcv(&features, &labels, Metric::Euclidean).unwrap().overall);
    }
    let single = dbcv(&features, &vec![Some(0); 40], Metric::Euclidean);
    let single_errors = matches!(single, Err(ValidityError::TooFewClusters(1)));
    let pass = correct > 0.5 && correct > best_permuted && single_errors;
    verdict(
        8,
        pass,
        &format!("correct {correct:.4} > 0.5 and > best of 20 permutations {best_permuted:.4}; single cluster errors: {single_errors}"),
        t,
    );
}

fn synth_args(dir: &Path, locations: &[f64], seed: u64) -> SynthArgs {
    SynthArgs {
        spec: None,
        mode: ModeArg::Blobs,
        samples: 100,
        channels: 4,
        spatial: 64,
        centers: Some(locations.len()),
        gap: Some(if locations.len() > 1 { locations[1] - locations[0] } else { 10.0 }),
        offset: Some(locations[0]),
        scale: Some(1.0),
        latent_lo: None,
        latent_hi: None,
        noise: 0.1,
        seed,
        layer: None,
        output: dir.to_path_buf(),
    }
}

fn criterion_09_ood_gate() {
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| -> PathBuf { tmp.path().join(name) };
    cmd_synth(&synth_args(&dir("train"), &[0.0, 10.0], 1)).unwrap();
    cmd_synth(&synth_args(&dir("id"), &[0.0, 10.0], 2)).unwrap();
    cmd_synth(&synth_args(&dir("ood"), &[30.0], 3)).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for pipeline in [Pipeline::BaselineMean, Pipeline::ProposedKde] {
        let run = dir(pipeline.as_str());
        cmd_run(&RunArgs {
            activations: Some(dir("train").join("activations.napac")),
            metadata: Some(dir("train").join("metadata.csv")),
            output: Some(run.clone()),
            pipeline: Some(pipeline),
            min_cluster_size: Some(5),
            selection: Some(Selection::Eom),
            ..RunArgs::default()
        })
        .unwrap();
        let report = cmd_ood(&OodArgs {
            run,
            id: dir("id").join("activations.napac"),
            ood: dir("ood").join("activations.napac"),
            output: None,
        })
        .unwrap();
        pass &= report.id_clustered_fraction >= 0.95 && report.ood_clustered_fraction <= 0.05;
        detail.push(format!(
            "{pipeline}: id {:.3} (>= 0.95), ood {:.3} (<= 0.05)",
            report.id_clustered_fraction, report.ood_clustered_fraction
        ));
    }
    verdict(9, pass, &detail.join("; "), t);
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_10_determinism_and_round_trips() {
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let (set, _) = generate(&blob_spec(60, &[0.0, 10.0], 0.1, 10)).unwrap();
    write_activations(&set, tmp.path().join("a.napac")).unwrap();
    let back = read_activations(tmp.path().join("a.napac")).unwrap();
    let napac_exact = back == set
        && back.values().iter().zip(set.values()).all(|(a, b)| a.to_bits() == b.to_bits());

    let (_, features) = Featurizer::fit(&set, Pipeline::ProposedKde, &KdeConfig::default()).unwrap();
    write_features(&features, tmp.path().join("f.napf")).unwrap();
    let fback = read_features(tmp.path().join("f.napf")).unwrap();
    let napf_exact = fback.provenance() == features.provenance()
        && fback.values().iter().zip(features.values()).all(|(a, b)| a.to_bits() == b.to_bits());

    let (train, meta) = generate(&blob_spec(80, &[0.0, 10.0], 0.1, 11)).unwrap();
    write_activations(&train, tmp.path().join("train.napac")).unwrap();
    meta.write_csv(tmp.path().join("train.csv")).unwrap();
    let run = |name: &str| {
        cmd_run(&RunArgs {
            activations: Some(tmp.path().join("train.napac")),
            metadata: Some(tmp.path().join("train.csv")),
            output: Some(tmp.path().join(name)),
            dbcv: true,
            ..RunArgs::default()
        })
        .unwrap();
        dir_bytes(&tmp.path().join(name))
    };
    let (first, second) = (run("run1"), run("run2"));
    let identical = first == second;
    let pass = napac_exact && napf_exact && identical;
    verdict(
        10,
        pass,
        &format!(
            "NAPAC bit-exact {napac_exact}, NAPAC-F bit-exact {napf_exact}, two runs identical over {} files: {identical}",
            first.len()
        ),
        t,
    );
}

fn criterion_11_scale_invariance() {
    let t = Instant::now();
    let (set, _) = generate(&blob_spec(90, &[0.0, 10.0, 20.0], 1.0, 11)).unwrap();
    let (_, features) = Featurizer::fit(&set, Pipeline::BaselineMean, &KdeConfig::default()).unwrap();
    let d = pairwise_matrix(&features, Metric::Euclidean).unwrap();
    let scaled = d.scaled(7.3).unwrap();
    let mut pass = true;
    let mut worst = 0f64;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    for selection in [Selection::Eom, Selection::Leaf] {
        let config = HdbscanConfig::new(5, selection);
        let (a, b) = (fit(&d, &config).unwrap(), fit(&scaled, &config).unwrap());
        let nodes = |m: &napforge::ClusterModel| m.clusters.iter().map(|c| c.node).collect::<Vec<_>>();
        pass &= a.labels == b.labels && nodes(&a) == nodes(&b) && a.n_clusters() >= 2;
        for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
            worst = worst.max(rel(*x, *y));
        }
        for (x, y) in a.persistence_scores().iter().zip(b.persistence_scores()) {
            worst = worst.max(rel(*x, y));
        }
    }
    // probabilities and persistence are ratios of rounded reciprocals
    pass &= worst <= 1e-12;

    let labels = fit(&d, &HdbscanConfig::new(5, Selection::Eom)).unwrap().labels;
    let base = dbcv(&features, &labels, Metric::Euclidean).unwrap().cluster_values();
    let moved = dbcv(&features.scaled(7.3).unwrap(), &labels, Metric::Euclidean).unwrap().cluster_values();
    let dbcv_dev = base.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    pass &= dbcv_dev <= 1e-9 && base.len() == moved.len();
    verdict(
        11,
        pass,
        &format!(
            "x7.3: labels and selected nodes identical, max relative change of probability/persistence {worst:.2e} (tol 1e-12); \
             DBCV per-cluster max change {dbcv_dev:.2e} (tol 1e-9)"
        ),
        t,
    );
}
