use napforge::hdbscan::{fit, HdbscanConfig, Selection};
use napforge::metric::{pairwise_matrix, Metric};
use napforge::report::{nested_subsets, summarize, sweep, SweepGrid};
use napforge::synth::{generate, BlobCenter, SynthSpec};
use napforge::{Featurizer, KdeConfig, Pipeline};
use proptest::prelude::*;

fn blobs(n: usize, seed: u64) -> SynthSpec {
    let centers = (0..3).map(|k| BlobCenter::uniform(2, 8.0 * k as f64, 1.0)).collect();
    SynthSpec::blobs(n, 2, 16, centers, 0.5, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sweep_rows_account_for_every_sample(seed in any::<u64>(), mcs in prop::collection::vec(2usize..12, 1..4)) {
        let (set, meta) = generate(&blobs(45, seed)).unwrap();
        let mut grid = SweepGrid::new(vec![Pipeline::BaselineMean, Pipeline::ProposedKde], vec![Selection::Eom, Selection::Leaf], mcs);
        grid.sizes = vec![15, 30, 45];
        grid.seed = seed;
        let result = sweep(&set, &meta, &grid).unwrap();
        prop_assert_eq!(result.rows.len(), grid.n_cells(45));
        for row in &result.rows {
            prop_assert_eq!(row.cluster_sizes.iter().sum::<usize>() + row.n_nonclustered, row.n_samples);
            prop_assert_eq!(row.cluster_sizes.len(), row.n_clusters);
        }
    }

    #[test]
    fn subsets_are_nested(n in 5usize..200, seed in any::<u64>()) {
        let sizes = [n / 4 + 1, n / 2 + 1, n];
        let subsets = nested_subsets(n, &sizes, seed).unwrap();
        for w in subsets.windows(2) {
            prop_assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
        for (s, &size) in subsets.iter().zip(&sizes) {
            prop_assert_eq!(s.len(), size);
            prop_assert!(s.windows(2).all(|p| p[0] < p[1]));
        }
    }
}

#[test]
fn summary_text_is_reproducible() {
    let text = || {
        let (set, meta) = generate(&blobs(60, 3)).unwrap();
        let (_, f) = Featurizer::fit(&set, Pipeline::ProposedKde, &KdeConfig::default()).unwrap();
        let model = fit(&pairwise_matrix(&f, Metric::JensenShannon).unwrap(), &HdbscanConfig::new(5, Selection::Eom)).unwrap();
        summarize(&model, &meta).unwrap().to_text()
    };
    let first = text();
    assert_eq!(first, text());
    assert!(first.starts_with("Cluster #0, 20 samples\n"), "{first}");
    assert!(first.contains("\tPersistence score:"));
    assert!(first.contains("\tblob_id:\n"));
}
