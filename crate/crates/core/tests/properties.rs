use pinch_core::asymptotics::{se_distributed_approx, se_lower_bound, se_upper_bound, t_factor};
use pinch_core::beamforming::{mrt, uniform_power, zf};
use pinch_core::channel::distributed_channel_matrix;
use pinch_core::metrics::{
    se_centralized_exact, se_distributed_exact, se_distributed_mrt_closed, se_equal_spacing,
};
use pinch_core::model::{derive_seed, sample_users, SystemConfig};
use pinch_core::oracle::mc_collect;
use pinch_core::placement::distributed_nearest;
use proptest::prelude::*;

fn config() -> impl Strategy<Value = SystemConfig> {
    (2usize..=8, 0.5f64..6.0, 2.0f64..12.0, -20.0f64..50.0).prop_map(|(n, d, h, pt)| {
        SystemConfig::default()
            .with_n(n)
            .with_d(d)
            .with_height(h)
            .with_pt_dbm(pt)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn users_stay_in_their_cells(cfg in config(), seed in any::<u64>(), worst in any::<bool>()) {
        let drop = sample_users(&cfg, seed, worst);
        prop_assert_eq!(drop.len(), cfg.n);
        let half = cfg.length / 2.0 - cfg.y_margin();
        for (k, u) in drop.positions.iter().enumerate() {
            let lo = (k as f64 - 0.5) * cfg.d;
            prop_assert!(u.x >= lo - 1e-12 && u.x <= lo + cfg.d + 1e-12);
            prop_assert!(u.y.abs() <= half + 1e-12);
            prop_assert_eq!(u.z, 0.0);
        }
        if worst {
            prop_assert!(drop.is_y_aligned());
        }
    }

    #[test]
    fn t_depends_only_on_index_gap(cfg in config(), k in 1usize..6, gap in 1usize..4, shift in 1usize..5) {
        let a = t_factor(k + gap, k, &cfg).unwrap();
        let b = t_factor(k + gap + shift, k + shift, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn bounds_squeeze_the_approximation(cfg in config(), seed in any::<u64>()) {
        let drop = sample_users(&cfg, seed, true);
        let lo = se_lower_bound(&drop, &cfg).unwrap().total_se;
        let mid = se_distributed_approx(&drop, &cfg).unwrap().total_se;
        let up = se_upper_bound(&drop, &cfg).unwrap().total_se;
        prop_assert!(lo <= mid * (1.0 + 1e-12), "{lo} > {mid}");
        prop_assert!(mid <= up * (1.0 + 1e-12), "{mid} > {up}");
    }

    #[test]
    fn mrt_closed_form_matches_exact(cfg in config(), seed in any::<u64>(), worst in any::<bool>()) {
        let drop = sample_users(&cfg, seed, worst);
        let placement = distributed_nearest(&drop, &cfg).unwrap();
        let h = distributed_channel_matrix(&drop, &placement, &cfg).unwrap();
        let exact = se_distributed_exact(&drop, &placement, &mrt(&h).unwrap(), &uniform_power(&cfg), &cfg)
            .unwrap()
            .total_se;
        let closed = se_distributed_mrt_closed(&drop, &cfg).unwrap().total_se;
        prop_assert!((exact - closed).abs() <= 1e-9 * exact.max(1e-12));
    }

    #[test]
    fn zf_nulls_cross_gains(cfg in config(), seed in any::<u64>()) {
        let drop = sample_users(&cfg, seed, false);
        let placement = distributed_nearest(&drop, &cfg).unwrap();
        let h = distributed_channel_matrix(&drop, &placement, &cfg).unwrap();
        if let Ok(w) = zf(&h) {
            for k in 0..cfg.n {
                let own = h.gain(k, &w.columns[k]).norm_sqr();
                for j in (0..cfg.n).filter(|&j| j != k) {
                    prop_assert!(h.gain(k, &w.columns[j]).norm_sqr() <= 1e-18 * own);
                }
            }
        }
    }

    #[test]
    fn centralized_se_grows_with_power(cfg in config(), seed in any::<u64>()) {
        let drop = sample_users(&cfg, seed, true);
        let low = se_centralized_exact(&drop, &cfg, cfg.n).unwrap().total_se;
        let high = se_centralized_exact(&drop, &cfg.with_pt(cfg.p_t * 2.0), cfg.n).unwrap().total_se;
        prop_assert!(high > low);
    }

    #[test]
    fn inphase_never_loses_to_equal_spacing(seed in any::<u64>(), n in 2usize..=8, pt in -20.0f64..50.0) {
        let cfg = SystemConfig::default().with_n(n).with_pt_dbm(pt);
        let drop = sample_users(&cfg, seed, true);
        let ip = se_centralized_exact(&drop, &cfg, n).unwrap().total_se;
        let eq = se_equal_spacing(&drop, &cfg, n).unwrap().coherent.total_se;
        prop_assert!(ip >= eq * (1.0 - 1e-12));
    }

    #[test]
    fn drop_results_ignore_evaluation_order(seed in any::<u64>(), pick in 0usize..32) {
        let cfg = SystemConfig::default();
        let all = mc_collect(
            |_, d| Ok(se_centralized_exact(d, &cfg, cfg.n)?.total_se),
            &cfg,
            32,
            seed,
            true,
        )
        .unwrap();
        let alone = sample_users(&cfg, derive_seed(seed, pick as u64), true);
        let single = se_centralized_exact(&alone, &cfg, cfg.n).unwrap().total_se;
        prop_assert_eq!(all[pick].to_bits(), single.to_bits());
    }
}
