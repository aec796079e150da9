use sliced_igw::analysis::{
    classical_mds_2d, cluster_distances, pairwise_distances, MeasureInput, OptimizerKind, PairwiseMethod,
};
use sliced_igw::experiments::{sample_from_factor, synthetic_users, GaussianPair, SyntheticUsersConfig};
use sliced_igw::gaussian::sliced_igw_gaussian;
use sliced_igw::io::{parse_directions, parse_distance_matrix, write_directions, write_distance_matrix};
use sliced_igw::rng::seeded;
use sliced_igw::slicing::{sample_directions, DirectionSet, SliceObjective};
use sliced_igw::stiefel::{run_cd_subgradient, run_riemannian_subgradient, Init, OptimizerConfig};

fn fixed_objective(m: usize, seed: u64) -> (SliceObjective, f64) {
    let (mu, nu) = GaussianPair::fixed().measures().unwrap();
    let target = sliced_igw_gaussian(&mu, &nu).unwrap().sliced_igw_squared;
    let dirs = sample_directions(nu.dim(), m, seed).unwrap();
    (SliceObjective::gaussian(mu, nu, dirs).unwrap(), target)
}

#[test]
fn riemannian_from_gaussian_alignment_reaches_closed_form() {
    let (obj, target) = fixed_objective(3000, 1);
    let trace = run_riemannian_subgradient(&obj, &OptimizerConfig::riemannian()).unwrap();
    assert!((trace.final_objective - target).abs() <= 0.1 * target, "{} vs {target}", trace.final_objective);
    assert!(trace.final_point.feasibility_residual() < 1e-10);
}

#[test]
fn dissolving_from_padded_identity_descends() {
    let (obj, target) = fixed_objective(1000, 2);
    let cfg = OptimizerConfig::dissolving().with_init(Init::PaddedIdentity);
    let trace = run_cd_subgradient(&obj, &cfg).unwrap();
    let first = trace.iterates[0].objective;
    assert!(trace.final_objective < first);
    assert!(trace.final_objective >= 0.9 * target);
    assert!(trace.final_h.is_some());
}

#[test]
fn empirical_estimate_approaches_closed_form_with_samples() {
    let pair = GaussianPair::fixed();
    let (mu, nu) = pair.measures().unwrap();
    let target = sliced_igw_gaussian(&mu, &nu).unwrap().sliced_igw_squared;
    let mut rng = seeded(7);
    let x = sample_from_factor(&mut rng, &pair.factor_mu, 4000).unwrap();
    let y = sample_from_factor(&mut rng, &pair.factor_nu, 4000).unwrap();
    let dirs = DirectionSet::sample_from(&mut rng, nu.dim(), 500, 7).unwrap();
    let obj = SliceObjective::empirical(x, y, dirs).unwrap();
    let trace = run_riemannian_subgradient(&obj, &OptimizerConfig::riemannian().with_max_iters(100)).unwrap();
    let err = (trace.distance() - target.sqrt()).abs() / target.sqrt();
    assert!(err < 0.1, "relative error {err}");
}

#[test]
fn gaussian_pipeline_clusters_synthetic_users() {
    let cfg = SyntheticUsersConfig {
        users_per_cluster: 5,
        ..SyntheticUsersConfig::default()
    };
    let users = synthetic_users(&cfg, 3).unwrap();
    let inputs: Vec<MeasureInput> = users.measures.into_iter().map(MeasureInput::Empirical).collect();
    let d = pairwise_distances(&inputs, users.labels, &PairwiseMethod::GaussianSlicedIgw, 0)
        .unwrap()
        .matrix;
    let c = cluster_distances(&d, 3, 3, Some(&users.truth)).unwrap();
    assert!(c.purity.unwrap() >= 0.8, "{c:?}");
    let mds = classical_mds_2d(&d).unwrap();
    assert_eq!(mds.coordinates.shape(), (15, 2));
}

#[test]
fn sliced_pairwise_is_reproducible_and_swaps_dimensions() {
    let cfg = SyntheticUsersConfig {
        users_per_cluster: 1,
        points_per_user: 40,
        dims: vec![8, 5],
        noise: 0.05,
    };
    let users = synthetic_users(&cfg, 5).unwrap();
    let inputs: Vec<MeasureInput> = users.measures.into_iter().map(MeasureInput::Empirical).collect();
    let method = PairwiseMethod::SlicedIgw {
        m: 50,
        optimizer: OptimizerKind::Riemannian,
        config: OptimizerConfig::riemannian().with_max_iters(30),
    };
    let a = pairwise_distances(&inputs, users.labels.clone(), &method, 9).unwrap();
    let b = pairwise_distances(&inputs, users.labels, &method, 9).unwrap();
    assert_eq!(a, b);
    assert!(a.pairs[0].swapped);
    assert!(!a.pairs[1].swapped);
}

#[test]
fn distance_matrix_and_directions_round_trip() {
    let d = parse_distance_matrix(b"a,b,c\n0,3,8\n3,0,5\n8,5,0\n").unwrap();
    let mut buf = Vec::new();
    write_distance_matrix(&mut buf, &d).unwrap();
    assert_eq!(parse_distance_matrix(&buf).unwrap().values(), d.values());

    let dirs = sample_directions(4, 16, 3).unwrap();
    let mut buf = Vec::new();
    write_directions(&mut buf, &dirs).unwrap();
    let back = parse_directions(&buf, 3).unwrap();
    assert_eq!(back.directions(), dirs.directions());
}
