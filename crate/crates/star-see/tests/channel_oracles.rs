//! Statistical oracles for the channel model: distributional properties that
//! need sample counts beyond unit-test scale.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use star_see::channel::{
    cascaded_channel, generate_realization, sample_in_ball, Geometry, SystemParams,
    UncertaintyConfig,
};
use star_see::C64;

// ---------------------------------------------------------------------------
// Uniform-ball sampling law
// ---------------------------------------------------------------------------

/// The mean norm of a uniform draw from a ball of radius `r` in `R^d` is
/// `r d / (d + 1)`; for `C^n` the real dimension is `d = 2n`.
#[test]
fn ball_sampling_mean_norm_follows_dimension_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xba11);
    for &(dim, radius) in &[(2usize, 1.0f64), (5, 0.3), (12, 2.5)] {
        let samples = 100_000;
        let mean: f64 =
            (0..samples).map(|_| sample_in_ball(&mut rng, dim, radius).norm()).sum::<f64>()
                / samples as f64;
        let d = 2.0 * dim as f64;
        let expected = radius * d / (d + 1.0);
        let rel = (mean - expected).abs() / expected;
        assert!(
            rel < 0.02,
            "dim {dim}: mean norm {mean:.6} deviates {rel:.4} from law {expected:.6}"
        );
    }
}

/// Each coordinate of a ball sample is mean-zero (no directional bias).
#[test]
fn ball_sampling_is_isotropic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xba12);
    let dim = 4;
    let samples = 50_000;
    let mut acc = nalgebra::DVector::<C64>::zeros(dim);
    for _ in 0..samples {
        acc += sample_in_ball(&mut rng, dim, 1.0);
    }
    let mean = acc / C64::new(samples as f64, 0.0);
    for e in mean.iter() {
        assert!(e.norm() < 0.01, "coordinate mean {e} too far from zero");
    }
}

// ---------------------------------------------------------------------------
// Fading statistics
// ---------------------------------------------------------------------------

/// Average received direct-link power must match the path-loss model: the
/// scatter entries are unit-variance, so `E ||h||^2 = N * gain`.
#[test]
fn direct_link_power_matches_path_loss() {
    let params = SystemParams { n: 4, m: 4, j_r: 1, j_t: 1, ..SystemParams::default() };
    let geom = Geometry::default();
    let unc = UncertaintyConfig::perfect();

    let draws = 4_000;
    let mut acc = 0.0;
    for seed in 0..draws {
        let real = generate_realization(&params, &geom, &unc, seed).unwrap();
        acc += real.bobs[0][0].hhat.norm_squared();
    }
    let mean = acc / draws as f64;

    // Users scatter in a 4 m disk around (0, 25, 0) with the BS at
    // (0, 0, 10); use the centre distance as the reference scale.
    let d_center = (25.0f64.powi(2) + 10.0f64.powi(2)).sqrt();
    let expected = params.n as f64 * star_see::channel::path_loss(d_center, 3.2);
    let rel = (mean - expected).abs() / expected;
    assert!(
        rel < 0.25,
        "mean direct power {mean:.3e} vs centre-distance reference {expected:.3e} (rel {rel:.3})"
    );
}

/// The cascaded matrix must equal diag(g^H) H_b entry-recomputed from any
/// surface vector identity on freshly drawn realizations.
#[test]
fn realization_cascades_are_consistent_with_identity() {
    let params = SystemParams { n: 3, m: 6, j_r: 2, j_t: 1, ..SystemParams::default() };
    let real =
        generate_realization(&params, &Geometry::default(), &UncertaintyConfig::default(), 5)
            .unwrap();
    // Reconstruct a surface-side vector from the cascade and the known H_b:
    // row m of G is conj(g_m) times row m of H_b, so the ratio of first
    // entries recovers conj(g_m) wherever H_b is nonzero.
    let g_rec = nalgebra::DVector::<C64>::from_fn(params.m, |m, _| {
        (real.bobs[0][0].ghat[(m, 0)] / real.bs_ris[(m, 0)]).conj()
    });
    let rebuilt = cascaded_channel(&g_rec, &real.bs_ris);
    let diff = (&rebuilt - &real.bobs[0][0].ghat).norm() / real.bobs[0][0].ghat.norm();
    assert!(diff < 1e-10, "cascade should factor exactly, got rel err {diff:.3e}");
}

/// Distinct endpoints get independent scatter: cross-correlation of two
/// users' direct links is near zero.
#[test]
fn users_have_independent_fading() {
    let params = SystemParams { n: 4, m: 4, j_r: 2, j_t: 1, ..SystemParams::default() };
    let draws = 2_000;
    let mut cross = C64::new(0.0, 0.0);
    let mut pow_a = 0.0;
    let mut pow_b = 0.0;
    for seed in 0..draws {
        let real = generate_realization(
            &params,
            &Geometry::default(),
            &UncertaintyConfig::perfect(),
            seed,
        )
        .unwrap();
        let a = &real.bobs[0][0].hhat;
        let b = &real.bobs[0][1].hhat;
        cross += a.dotc(b);
        pow_a += a.norm_squared();
        pow_b += b.norm_squared();
    }
    let corr = cross.norm() / (pow_a * pow_b).sqrt();
    assert!(corr < 0.05, "user channels should decorrelate, got {corr:.4}");
}

/// Matrix-ball draws respect the Frobenius radius exactly.
#[test]
fn matrix_ball_respects_frobenius_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xba13);
    let mut max_norm: f64 = 0.0;
    for _ in 0..10_000 {
        let m: DMatrix<C64> = star_see::channel::sample_matrix_in_ball(&mut rng, 3, 2, 0.7);
        max_norm = max_norm.max(m.norm());
    }
    assert!(max_norm <= 0.7 * (1.0 + 1e-12));
    assert!(max_norm > 0.6, "draws should fill the ball, max {max_norm}");
}
