use ia_core::experiment::seeded_realization;
use ia_core::linalg::numerical_rank;
use ia_core::verify::{build_s_matrix, certify, check_alignment};
use ia_core::{
    build_effective, closed_form_dof, generate_channels, generate_gains, ChannelModel, ChannelSet,
    Coding, Layer, PrecoderSet,
};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn double_entry_depends_only_on_its_slot_pair(
        seed in any::<u64>(),
        q in 0usize..5,
        other in 0usize..10,
        bump in 0.1f64..3.0,
    ) {
        prop_assume!(other != q && other != q + 5);
        let ch = generate_channels(3, 10, ChannelModel::Iid, seed).unwrap();
        let g = generate_gains(3, 10, seed ^ 0x5eed).unwrap();
        let base = build_effective(&ch, Some(&g), Coding::Double).unwrap();

        let mut entries = ch.entries().to_vec();
        for link in 0..9 {
            entries[link * 10 + other] *= Complex64::new(bump, 0.5);
        }
        let ch2 = ChannelSet::from_entries(3, 10, entries, ChannelModel::Iid).unwrap();
        let moved = build_effective(&ch2, Some(&g), Coding::Double).unwrap();
        for rx in 0..3 {
            for tx in 0..3 {
                prop_assert_eq!(base.entry(rx, tx, q), moved.entry(rx, tx, q));
            }
        }
    }

    #[test]
    fn double_entry_is_sum_of_two_factored_layers(seed in any::<u64>()) {
        let ch = generate_channels(4, 8, ChannelModel::SlowChanging, seed).unwrap();
        let g = generate_gains(4, 8, seed.wrapping_add(1)).unwrap();
        let eff = build_effective(&ch, Some(&g), Coding::Double).unwrap();
        for rx in 0..4 {
            for tx in 0..4 {
                for q in 0..4 {
                    // first layer: slots 0..4, second layer: slots 4..8
                    let first = g.beta_row(rx)[..4][q] * ch.link(rx, tx)[..4][q] * g.alpha_row(tx)[..4][q];
                    let second = g.beta_row(rx)[4..][q] * ch.link(rx, tx)[4..][q] * g.alpha_row(tx)[4..][q];
                    let want = first + second;
                    let got = eff.entry(rx, tx, q);
                    prop_assert!((got - want).norm() <= 1e-14 * want.norm());
                }
            }
        }
    }

    #[test]
    fn naive_constant_entries_factor_through_gains(seed in any::<u64>()) {
        let ch = generate_channels(3, 7, ChannelModel::Constant, seed).unwrap();
        let g = generate_gains(3, 7, seed.wrapping_mul(3)).unwrap();
        let eff = build_effective(&ch, Some(&g), Coding::Naive).unwrap();
        for rx in 0..3 {
            for tx in 0..3 {
                let scaled: Vec<Complex64> = (0..7)
                    .map(|q| eff.entry(rx, tx, q) / (g.beta(rx, q) * g.alpha(tx, q)))
                    .collect();
                for z in &scaled {
                    prop_assert!((z - scaled[0]).norm() <= 1e-12 * scaled[0].norm());
                }
            }
        }
    }

    #[test]
    fn column_rescaling_leaves_certificate_unchanged(
        seed in 0u64..10_000,
        user in 1usize..=3,
        col in 0usize..2,
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
        naive in any::<bool>(),
    ) {
        let factor = Complex64::new(re, im);
        prop_assume!(factor.norm() > 1e-3);
        let coding = if naive { Coding::Naive } else { Coding::Double };
        let r = seeded_realization(3, 2, ChannelModel::Constant, coding, seed).unwrap();
        let before = certify(&r.effective, &r.precoders).unwrap();
        let mut ms = r.precoders.clone().into_matrices();
        ms[user - 1].column_mut(col).iter_mut().for_each(|z| *z *= factor);
        let scaled = PrecoderSet::from_matrices(ms).unwrap();
        let after = certify(&r.effective, &scaled).unwrap();
        for (a, b) in before.residuals.iter().zip(&after.residuals) {
            prop_assert!((a.value - b.value).abs() <= 1e-12);
        }
        prop_assert_eq!(before.pass, after.pass);
        let ranks_a: Vec<_> = before.ranks.iter().map(|r| r.rank).collect();
        let ranks_b: Vec<_> = after.ranks.iter().map(|r| r.rank).collect();
        prop_assert_eq!(ranks_a, ranks_b);
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>(), slots in 2usize..12) {
        let a = generate_channels(3, slots, ChannelModel::Iid, seed).unwrap();
        let b = generate_channels(3, slots, ChannelModel::Iid, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(generate_gains(3, slots, seed).unwrap() == generate_gains(3, slots, seed).unwrap());
    }
}

#[test]
fn double_layer_dof_rises_towards_quarter_k() {
    for users in 3..=5usize {
        let limit = users as f64 / 4.0;
        let mut prev = 0.0;
        for n in 1..=100 {
            let d = closed_form_dof(users, n, Layer::Double).unwrap();
            // exact: num/den < K/4  <=>  4 num < K den
            assert!(4 * d.num < users as i128 * d.den, "K={users} n={n}");
            assert!(d.value() > prev, "K={users} n={n}");
            prev = d.value();
        }
        assert!(limit - prev < 0.05);
    }
}

#[test]
fn single_layer_dof_rises_towards_half_k() {
    for users in 3..=5usize {
        let mut prev = 0.0;
        for n in 1..=100 {
            let d = closed_form_dof(users, n, Layer::Single).unwrap();
            assert!(2 * d.num < users as i128 * d.den);
            assert!(d.value() > prev);
            prev = d.value();
        }
        assert!(users as f64 / 2.0 - prev < 0.1);
    }
}

#[test]
fn s_transform_preserves_rank() {
    for seed in 0..100 {
        let r = seeded_realization(3, 2, ChannelModel::Constant, Coding::Double, seed).unwrap();
        let rep = certify(&r.effective, &r.precoders).unwrap();
        let s = build_s_matrix(&r.effective, &r.precoders).unwrap();
        assert_eq!(numerical_rank(&s).rank, rep.ranks[0].rank, "seed {seed}");
    }
}

#[test]
fn equality_conditions_hold_by_construction() {
    for seed in 0..20 {
        let r = seeded_realization(4, 1, ChannelModel::Iid, Coding::Plain, seed).unwrap();
        for res in check_alignment(&r.effective, &r.precoders).unwrap() {
            assert!(res.value <= 1e-12, "{res:?}");
        }
    }
}
