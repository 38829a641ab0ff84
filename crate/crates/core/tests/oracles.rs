mod common;

use common::*;
use uti_misalign::metrics::{
    complex_wavelet_decompose, cw_ssim, mse, ssim, CwSsimParams, MeanImage, SsimParams,
};

#[test]
fn mse_matches_double_loop() {
    let a = random_image(8, 8, 1);
    let b = random_image(8, 8, 2);
    let got = mse(&a, &b).unwrap();
    assert!(rel_close(got, mse_oracle(&a, &b), 1e-9));
    assert_eq!(got, mse(&b, &a).unwrap());
}

#[test]
fn ssim_matches_direct_windowed_formula_on_offset_texture() {
    let a = textured_image(32, 32, 11);
    // textures stay inside [40, 215] so +10 never saturates
    let b = MeanImage::new(32, 32, a.pixels().iter().map(|v| v + 10.0).collect()).unwrap();
    let p = SsimParams::default();
    let got = ssim(&a, &b, &p).unwrap();
    let want = ssim_oracle(&a, &b, &p);
    assert!((got - want).abs() < 1e-7, "{got} vs {want}");
}

#[test]
fn ssim_oracle_agrees_with_non_unit_exponents() {
    let a = textured_image(24, 20, 5);
    let b = textured_image(24, 20, 6);
    let p = SsimParams {
        alpha: 2.0,
        beta: 0.5,
        gamma: 1.0,
        ..SsimParams::default()
    };
    let got = ssim(&a, &b, &p).unwrap();
    assert!(rel_close(got, ssim_oracle(&a, &b, &p), 1e-7));
}

#[test]
fn cw_ssim_zero_vs_texture_matches_window_loop() {
    let zero = MeanImage::new(48, 40, vec![0.0; 48 * 40]).unwrap();
    let tex = textured_image(48, 40, 3);
    let p = CwSsimParams::default();
    let got = cw_ssim(&zero, &tex, &p).unwrap();
    let want = cwssim_oracle(&zero, &tex, &p);
    assert!(rel_close(got, want, 1e-9), "{got} vs {want}");
    assert!(got < 1e-3);
}

#[test]
fn pyramid_impulse_energies_match_frequency_domain_filters() {
    for &(w, h) in &[(64usize, 48usize), (63, 41), (412, 63)] {
        let mut pixels = vec![0.0; w * h];
        pixels[(h / 2) * w + w / 2] = 1.0;
        let img = MeanImage::new(w, h, pixels).unwrap();
        let p = CwSsimParams::default();
        let bands = complex_wavelet_decompose(&img, &p).unwrap();
        let want = impulse_energy_oracle(w, h, p.n_scales, p.n_orientations);
        assert_eq!(bands.len(), want.len());
        for (band, e) in bands.iter().zip(&want) {
            let got: f64 = band.coeffs.iter().map(|c| c.norm_sqr()).sum();
            assert!(
                rel_close(got, *e, 1e-6),
                "{w}x{h} scale {} orientation {}: {got} vs {e}",
                band.scale,
                band.orientation
            );
        }
    }
}

#[test]
fn pyramid_is_linear() {
    let x = textured_image(40, 40, 9);
    let half = MeanImage::new(40, 40, x.pixels().iter().map(|v| v / 2.0).collect()).unwrap();
    let p = CwSsimParams::default();
    let a = complex_wavelet_decompose(&half, &p).unwrap();
    let b = complex_wavelet_decompose(&x, &p).unwrap();
    for (ba, bb) in a.iter().zip(&b) {
        for (ca, cb) in ba.coeffs.iter().zip(&bb.coeffs) {
            let scaled = ca * 2.0;
            assert!((scaled - cb).norm() <= 1e-9 * cb.norm().max(1e-300));
        }
    }
}

#[test]
fn cw_ssim_exceeds_ssim_for_small_circular_shift() {
    let a = textured_image(64, 64, 21);
    let b = shifted(&a, 0, 2);
    let cw = cw_ssim(&a, &b, &CwSsimParams::default()).unwrap();
    let s = ssim(&a, &b, &SsimParams::default()).unwrap();
    assert!(cw > s, "cw_ssim {cw} vs ssim {s}");
}
