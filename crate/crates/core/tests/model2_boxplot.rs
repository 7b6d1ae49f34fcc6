use trajfda::depth::{build_boxplot, BoxplotConfig};
use trajfda::simgen::{generate, Model, ModelSpec};
use trajfda::{PointwiseDepthMethod, RandomSeed};

#[test]
fn contaminated_curves_are_the_outliers() {
    for seed in [3, 7] {
        let sim = generate(&ModelSpec::new(Model::M2, RandomSeed(seed))).unwrap();
        let cfg = BoxplotConfig { method: PointwiseDepthMethod::Mahalanobis, ..Default::default() };
        let bp = build_boxplot(&sim.ensemble, &cfg).unwrap();

        let mut truth: Vec<&str> = sim.outlier_ids();
        truth.sort_unstable();
        let mut found: Vec<&str> = bp.outlier_ids.iter().map(String::as_str).collect();
        found.sort_unstable();
        assert_eq!(truth.len(), 4);
        assert_eq!(found, truth, "seed {seed}");
        assert!(!truth.contains(&bp.bands.median_id.as_str()));

        let m = sim.ensemble.n() - bp.outlier_ids.len();
        for (&level, members) in &bp.bands.bands {
            assert_eq!(members.len(), (level as usize * m).div_ceil(100));
            assert!(members.iter().all(|id| !truth.contains(&id.as_str())));
        }
        assert_eq!(bp.bands.outer_ids.len(), m - (75 * m).div_ceil(100));
    }
}
