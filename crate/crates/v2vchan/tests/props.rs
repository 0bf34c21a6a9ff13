//! Property tests for the structural invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use v2vchan::fitting::{gmm_cdf, ks_gof, Cdf, EmpiricalCdf};
use v2vchan::kfactor::estimate_k_mom;
use v2vchan::scenario::GmmParams;
use v2vchan::subband::{hann_window, subband_transform};
use v2vchan::synth::{synth_taps, taps_to_ctf, ChannelTransferFunction, KTrajectory};

fn ctf_from(values: Vec<(f64, f64)>, s: usize, n: usize) -> ChannelTransferFunction {
    ChannelTransferFunction {
        samples: values.into_iter().map(|(re, im)| Complex64::new(re, im)).collect(),
        s,
        n,
        t_s: 307.2e-6,
        f_s: 312.1e3,
        carrier_freq: 5.6e9,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_energy_is_always_one(n_c in 2usize..512) {
        let w = hann_window(n_c);
        let e: f64 = w.iter().map(|x| x * x).sum();
        prop_assert!((e - 1.0).abs() < 1e-9);
        prop_assert_eq!(w[0], 0.0);
    }

    #[test]
    fn parseval_holds_for_random_geometry(
        n_c in 3usize..24,
        q in 1usize..6,
        seed in 0u64..1000,
    ) {
        let n = q * (n_c - 1) + 1;
        let mut rng_state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) - 0.5
        };
        let samples: Vec<(f64, f64)> = (0..2 * n).map(|_| (next(), next())).collect();
        let ctf = ctf_from(samples, 2, n);
        let cir = subband_transform(&ctf, n_c, q).unwrap();
        let w = hann_window(n_c);
        for m in 0..2 {
            for qi in 0..q {
                let delay: f64 = cir.snapshot(m, qi).iter().map(|z| z.norm_sqr()).sum();
                let freq: f64 = (0..n_c)
                    .map(|c| (ctf.at(m, qi * (n_c - 1) + c) * w[c]).norm_sqr())
                    .sum();
                prop_assert!((delay - freq).abs() <= 1e-9 * freq.max(1e-30));
            }
        }
    }

    #[test]
    fn tap_round_trip_is_exact_for_random_gains(
        gains in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 5 * 4),
    ) {
        let taps = v2vchan::synth::TapMatrix {
            h: gains.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
            s: 4,
            n_taps: 5,
        };
        let ctf = taps_to_ctf(&taps, 769, 33, 307.2e-6, 312.1e3, 5.6e9).unwrap();
        let cir = subband_transform(&ctf, 33, 24).unwrap();
        for m in 0..4 {
            for qi in 0..24 {
                for t in 0..5 {
                    prop_assert!((cir.at(m, t, qi) - taps.at(m, t)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn k_estimate_is_scale_and_phase_invariant(
        scale in 0.01f64..100.0,
        phase in 0.0f64..std::f64::consts::TAU,
        seed in 0u64..1000,
    ) {
        let traj = KTrajectory { k_db: vec![6.0; 64], block_length: 64 };
        let taps = synth_taps(&traj, &[0.1], seed, 0.1).unwrap();
        let z: Vec<Complex64> = (0..64).map(|m| taps.at(m, 0)).collect();
        let c = Complex64::from_polar(scale, phase);
        let scaled: Vec<Complex64> = z.iter().map(|x| x * c).collect();
        let a = estimate_k_mom(&z).unwrap();
        let b = estimate_k_mom(&scaled).unwrap();
        prop_assert_eq!(a.valid, b.valid);
        if a.valid && a.k_linear.is_finite() {
            prop_assert!((a.k_linear - b.k_linear).abs() < 1e-9 * a.k_linear.max(1.0));
        }
    }

    #[test]
    fn gmm_cdf_is_monotone_and_bounded(
        w in 0.0f64..1.0,
        mu1 in -50.0f64..10.0,
        s1 in 0.1f64..20.0,
        dmu in 0.0f64..40.0,
        s2 in 0.1f64..20.0,
        xs in prop::collection::vec(-80.0f64..40.0, 2..20),
    ) {
        let p = GmmParams { w, mu1_db: mu1, sigma1_db: s1, mu2_db: mu1 + dmu, sigma2_db: s2 };
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let mut last = -1e-12;
        for &x in &xs {
            let f = gmm_cdf(&p, x);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= last - 1e-12);
            last = f;
        }
    }

    #[test]
    fn ks_distance_is_bounded_and_zero_on_self(
        samples in prop::collection::vec(-10.0f64..10.0, 2..200),
    ) {
        let emp = EmpiricalCdf::new(&samples).unwrap();
        let self_d = ks_gof(&emp, &emp);
        prop_assert!(self_d.abs() < 1e-12);
        let other = ks_gof(&emp, &|z: f64| gmm_cdf(
            &GmmParams { w: 0.5, mu1_db: 0.0, sigma1_db: 1.0, mu2_db: 0.0, sigma2_db: 1.0 },
            z,
        ));
        prop_assert!((0.0..=1.0).contains(&other));
    }

    #[test]
    fn ecdf_is_a_right_continuous_step(
        samples in prop::collection::vec(-5.0f64..5.0, 2..100),
        probe in -6.0f64..6.0,
    ) {
        let emp = EmpiricalCdf::new(&samples).unwrap();
        let n = samples.len() as f64;
        let exact = samples.iter().filter(|&&x| x <= probe).count() as f64 / n;
        prop_assert!((emp.cdf(probe) - exact).abs() < 1e-12);
    }
}
