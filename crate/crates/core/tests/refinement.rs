//! Stage two of `robust_sft` re-estimates the stage-one support.

use sfft_core::recursive::{recursive_alpha, recursive_robust_sft, robust_sft_with, RecursiveParams};
use sfft_core::robust::RobustCtx;
use sfft_core::signal::{gen_high_snr, gen_random_support, SparseSpectrum};
use sfft_core::tree::{Dims, NodeId, SubTree};

#[test]
fn second_stage_lowers_the_error() {
    let dm = Dims::new(32, 2).unwrap();
    let (k, mu, eps) = (8, 1.0 / 3.0, 0.05);
    let alpha = recursive_alpha(k, dm.size());
    let (mut first_total, mut second_total, mut better) = (0.0, 0.0, 0);
    let seeds = 40;
    for seed in 0..seeds {
        let head = gen_random_support(k, dm, seed).unwrap();
        let x = gen_high_snr(&head, mu, seed + 500).unwrap();
        let full = SparseSpectrum::from_dense(dm, &x.spectrum_dense().unwrap(), 0.0).unwrap();
        let params = RecursiveParams::new(mu, eps, seed);

        let mut ctx = RobustCtx::new(&x, params.robust);
        let first = recursive_robust_sft(&mut ctx, &SparseSpectrum::new(dm), &SubTree::new(), NodeId::ROOT, k, alpha)
            .unwrap();
        assert!(first.ok, "seed {seed}");

        let mut ctx = RobustCtx::new(&x, params.robust);
        let out = robust_sft_with(&mut ctx, k, None).unwrap();
        assert!(out.identified);
        assert_eq!(out.spectrum.support(), first.chi.support(), "seed {seed}");

        let e1 = first.chi.dist_sq(&full).unwrap();
        let e2 = out.spectrum.dist_sq(&full).unwrap();
        first_total += e1;
        second_total += e2;
        better += (e2 < e1) as usize;
    }
    assert!(second_total < first_total, "{second_total} vs {first_total}");
    assert!(better * 4 >= seeds as usize * 3, "{better}/{seeds}");
}
