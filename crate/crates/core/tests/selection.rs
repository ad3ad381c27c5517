use nalgebra::DMatrix;
use nystromite::bounds::{beta_default, lemma3_condition, SpectralSummary};
use nystromite::data::{synthetic_matrix, SyntheticSpec};
use nystromite::matrix::{full_svd, numerical_rank, partition, singular_values, spectral_norm};
use nystromite::nystrom::factorize;
use nystromite::sampling::{
    default_swap_budget, icd_sample, linear_time_svd, monte_carlo_select, rrqr_select,
    run_sampler, select_from_thin, select_sample, thin_from_svd, ColumnWeights, SamplerConfig,
    SamplerMethod,
};
use nystromite::DenseMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn sigma_s(m: &DenseMatrix, s: usize) -> f64 {
    singular_values(m).unwrap()[s - 1]
}

fn nystrom_error(m: &DenseMatrix, rows: &nystromite::IndexSet, cols: &nystromite::IndexSet) -> f64 {
    let f = factorize(&partition(m, rows.clone(), cols.clone()).unwrap()).unwrap();
    spectral_norm(&f.reconstruct().sub(m).unwrap()).unwrap()
}

fn det2(m: &DenseMatrix, r: [usize; 2], c: [usize; 2]) -> f64 {
    (m.get(r[0], c[0]) * m.get(r[1], c[1]) - m.get(r[0], c[1]) * m.get(r[1], c[0])).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rrqr_guarantee_on_selected_factors(seed in any::<u64>(), m in 8usize..40, n in 8usize..40, s in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = DenseMatrix::new(uniform(m, n, &mut rng)).unwrap();
        let cfg = SamplerConfig::new(SamplerMethod::Algorithm1, seed);
        let sel = select_sample(&mat, s, &cfg).unwrap();
        let audit = sel.audit.clone().unwrap();
        prop_assume!(audit.rows_converged && audit.cols_converged);
        let tol = 1.0 + 1e-10;
        prop_assert!(audit.sigma_s_g_sample * tol >= audit.sigma_s_g / ((s * (m - s) + 1) as f64).sqrt());
        prop_assert!(audit.sigma_s_s_sample * tol >= audit.sigma_s_s / ((s * (n - s) + 1) as f64).sqrt());
        prop_assert!(sel.is_ok());
    }

    #[test]
    fn multiplicativity_of_sampled_factors(seed in any::<u64>(), s in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DenseMatrix::new(uniform(s, s, &mut rng)).unwrap();
        let h = DenseMatrix::new(uniform(s, s, &mut rng)).unwrap();
        let gh = g.matmul(&h).unwrap();
        prop_assert!(sigma_s(&g, s) * sigma_s(&h, s) <= sigma_s(&gh, s) * (1.0 + 1e-10));
    }

    #[test]
    fn pivot_columns_keep_numerical_rank(seed in any::<u64>(), s in 2usize..6, k in 6usize..30, grade in 1.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Rows scaled over `grade` decades.
        let mut a = uniform(s, k, &mut rng);
        for i in 0..s {
            a.row_mut(i).scale_mut(10f64.powf(-grade * i as f64 / s as f64));
        }
        let a = DenseMatrix::new(a).unwrap();
        let sv = singular_values(&a).unwrap();
        let eps = 2.0 * sv[0] / sv[s - 1];
        prop_assume!(numerical_rank(&a, eps).unwrap() >= s);
        let piv = rrqr_select(&a, default_swap_budget(s)).unwrap();
        prop_assume!(piv.converged);
        let block = a.select(&(0..s).collect::<Vec<_>>(), &piv.indices);
        let beta = ((s * (k - s) + 1) as f64).sqrt() * (1.0 + 1e-10);
        prop_assert_eq!(numerical_rank(&block, beta * eps).unwrap(), s);
    }

    #[test]
    fn selection_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = DenseMatrix::new(uniform(20, 15, &mut rng)).unwrap();
        for method in [SamplerMethod::Algorithm1, SamplerMethod::Random] {
            let mut cfg = SamplerConfig::new(method, seed);
            cfg.front_end = nystromite::sampling::FrontEnd::LinearTimeSvd;
            prop_assert_eq!(run_sampler(&mat, 4, &cfg, None).unwrap(), run_sampler(&mat, 4, &cfg, None).unwrap());
        }
    }
}

#[test]
fn rrqr_bound_on_random_wide_matrices() {
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::new(uniform(5, 50, &mut rng)).unwrap();
        let piv = rrqr_select(&a, default_swap_budget(5)).unwrap();
        let block = a.select(&[0, 1, 2, 3, 4], &piv.indices);
        assert!(sigma_s(&block, 5) >= sigma_s(&a, 5) / 226f64.sqrt(), "seed {seed}");
    }
}

#[test]
fn exhaustive_two_by_two_blocks_of_rank_two() {
    let beta = beta_default(2, 6, 6).unwrap();
    let pairs: Vec<[usize; 2]> = (0..6).flat_map(|a| (a + 1..6).map(move |b| [a, b])).collect();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = DenseMatrix::new(uniform(6, 2, &mut rng) * uniform(2, 6, &mut rng)).unwrap();
        let sel = select_sample(&mat, 2, &SamplerConfig::new(SamplerMethod::Algorithm1, 0)).unwrap();
        assert!(sel.is_ok());
        let r = sel.rows.indices();
        let c = sel.cols.indices();
        let chosen = det2(&mat, [r[0], r[1]], [c[0], c[1]]);
        let best = pairs
            .iter()
            .flat_map(|&rp| pairs.iter().map(move |&cp| (rp, cp)))
            .map(|(rp, cp)| det2(&mat, rp, cp))
            .fold(0.0, f64::max);
        assert!(chosen * beta * beta >= best, "seed {seed}: {chosen} vs {best}");
    }
}

#[test]
fn linear_time_residual_tracks_optimum() {
    let mat = synthetic_matrix(&SyntheticSpec::exponential(200, 0.7, 1)).unwrap();
    let sigma11 = singular_values(&mat).unwrap()[10];
    let mean: f64 = (0..20)
        .map(|seed| linear_time_svd(&mat, 10, 100, ColumnWeights::SquaredNorm, seed).unwrap().residual)
        .sum::<f64>()
        / 20.0;
    assert!(mean <= 2.0 * sigma11, "mean e_s {mean} vs sigma_11 {sigma11}");
}

#[test]
fn selected_sample_respects_singular_value_floor() {
    let mat = synthetic_matrix(&SyntheticSpec::exponential(500, 0.5, 3)).unwrap();
    let svd = full_svd(&mat).unwrap();
    let s = 25;
    let thin = thin_from_svd(&svd, s).unwrap();
    let sel = select_from_thin(&mat, &thin, None).unwrap();
    let audit = sel.audit.clone().unwrap();
    let beta = audit.measured_beta();
    let ss = SpectralSummary::measure(&mat, &svd, &sel.rows, &sel.cols, thin.residual, beta, 1.0).unwrap();
    let floor = (ss.sigma_s - ss.residual) / (beta * beta) - ss.residual;
    if lemma3_condition(&ss) {
        assert!(ss.sigma_s_sample >= floor);
    }
}

#[test]
fn icd_beats_random_on_kernel() {
    let ds = nystromite::data::gaussian_blobs(100, 3, 5, 2).unwrap();
    let k = nystromite::data::gaussian_kernel(&ds, Default::default()).unwrap();
    let icd = icd_sample(&k, 10, None).unwrap();
    let icd_err = nystrom_error(&k, &icd.rows, &icd.cols);
    let mut cfg = SamplerConfig::new(SamplerMethod::Random, 0);
    cfg.symmetric = true;
    let mean_random: f64 = (0..20)
        .map(|t| {
            let sel = run_sampler(&k, 10, &cfg.with_seed(t), None).unwrap();
            nystrom_error(&k, &sel.rows, &sel.cols)
        })
        .sum::<f64>()
        / 20.0;
    assert!(icd_err <= mean_random, "icd {icd_err} random {mean_random}");
}

#[test]
fn monte_carlo_improves_on_single_draws() {
    let mat = synthetic_matrix(&SyntheticSpec::exponential(300, 0.8, 5)).unwrap();
    let cfg = SamplerConfig::new(SamplerMethod::Random, 11);
    let (mut mc_total, mut single_total) = (0.0, 0.0);
    for rep in 0..20u64 {
        let c = cfg.with_seed(1000 + rep);
        let mc = monte_carlo_select(&mat, 15, &c, 20, None).unwrap().best;
        mc_total += nystrom_error(&mat, &mc.rows, &mc.cols);
        let one = run_sampler(&mat, 15, &c, None).unwrap();
        single_total += nystrom_error(&mat, &one.rows, &one.cols);
    }
    assert!(mc_total < single_total);
}
