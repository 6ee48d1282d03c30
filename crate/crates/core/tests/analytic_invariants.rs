use num_complex::Complex64;
use proptest::prelude::*;

use thermal_hbt::analytic::{
    coherence_factor, correlation_width, g2_spatial, g2_spatiotemporal, g2_window_averaged,
    spatial_curve, visibility, window_reduction, OpticalConfig,
};
use thermal_hbt::montecarlo::{PairFieldProcess, TemporalModel};

fn config(a: f64) -> OpticalConfig {
    OpticalConfig::default().with_source_diameter(a)
}

proptest! {
    #[test]
    fn shift_invariance(x1 in -5e-3f64..5e-3, x2 in -5e-3f64..5e-3, s in -5e-3f64..5e-3, a in 50e-6f64..2e-3) {
        let cfg = config(a);
        let base = g2_spatial(x1, x2, &cfg);
        prop_assert!((g2_spatial(x1 + s, x2 + s, &cfg) - base).abs() < 1e-9);
        prop_assert_eq!(g2_spatial(x2, x1, &cfg), base);
    }

    #[test]
    fn bounds(dx in -2e-2f64..2e-2, tau in -5e-6f64..5e-6, w in 1e-10f64..1e-4, a in 50e-6f64..2e-3) {
        let cfg = config(a);
        let g = g2_spatial(0.0, dx, &cfg);
        prop_assert!((1.0..=2.0).contains(&g));
        prop_assert!(coherence_factor(dx, &cfg).abs() <= 1.0);
        let gt = g2_spatiotemporal(dx, tau, &cfg);
        prop_assert!(1.0 <= gt && gt <= g + 1e-15);
        let r = window_reduction(w, &cfg);
        prop_assert!(r > 0.0 && r <= 1.0);
        let gw = g2_window_averaged(dx, w, &cfg);
        prop_assert!(1.0 <= gw && gw <= g + 1e-15);
    }

    #[test]
    fn width_scales_inversely_with_size(a in 50e-6f64..2e-3, k in 1.01f64..4.0) {
        let w = correlation_width(&config(a));
        prop_assert!(coherence_factor(w, &config(a)).abs() < 1e-12);
        prop_assert!((correlation_width(&config(k * a)) * k - w).abs() < 1e-12 * w);
    }

    #[test]
    fn visibility_never_exceeds_one_third(x1 in -3e-3f64..3e-3, a in 100e-6f64..1.5e-3) {
        let scan: Vec<f64> = (0..161).map(|i| -8e-3 + i as f64 * 1e-4).collect();
        let v = visibility(&spatial_curve(x1, &scan, &config(a))).unwrap();
        prop_assert!(v <= 1.0 / 3.0 + 1e-12);
    }
}

#[test]
fn window_reduction_limits() {
    let cfg = OpticalConfig::default();
    assert!((window_reduction(1e-12, &cfg) - 1.0).abs() < 1e-9);
    let long = 1e-3;
    assert!((window_reduction(long, &cfg) * long / cfg.coherence_time - 1.0).abs() < 1e-9);
}

#[test]
fn seek_reproduces_sequential_samples() {
    let cfg = OpticalConfig::default();
    let rho = Complex64::new(0.3, -0.2);
    let mut seq = PairFieldProcess::from_correlation(rho, &cfg, TemporalModel::GaussianTrack, 5);
    let (mut a1, mut a2) = (vec![0.0; 3000], vec![0.0; 3000]);
    seq.fill_intensities(&mut a1, &mut a2);
    let mut jump = PairFieldProcess::from_correlation(rho, &cfg, TemporalModel::GaussianTrack, 5);
    jump.seek(1234).unwrap();
    let (mut b1, mut b2) = (vec![0.0; 1766], vec![0.0; 1766]);
    jump.fill_intensities(&mut b1, &mut b2);
    assert_eq!(&a1[1234..], &b1[..]);
    assert_eq!(&a2[1234..], &b2[..]);
    assert_eq!(jump.position(), 3000);

    let mut ou = PairFieldProcess::from_correlation(rho, &cfg, TemporalModel::OrnsteinUhlenbeck, 5);
    assert!(ou.seek(0).is_ok());
    assert!(ou.seek(10).is_err());
}
