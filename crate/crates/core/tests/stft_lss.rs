mod oracles;

use mapf_core::linalg::{pseudo_inverse, CMatrix};
use mapf_core::lss::{
    direction_from_angles, separate_signals, steering_matrix, ArrayScene, SeparationMatrix, SPEED_OF_SOUND,
};
use mapf_core::mixer::{cube_array, mix, spatialize, NoiseKind, NoiseLevel, NoiseSpec, Perturbation, SceneSpec, SpeechSurrogate};
use mapf_core::metrics::{segsnr, SegSnrConfig};
use mapf_core::stft::{FrameConfig, SpectralFrame, Stft, Window};
use mapf_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn round_trip(stft: &Stft, x: &[f64]) -> Vec<f64> {
    let (front, back) = stft.config().reconstruction_padding(x.len());
    let mut padded = vec![0.0; front];
    padded.extend_from_slice(x);
    padded.resize(front + x.len() + back, 0.0);
    let frames = stft.analyze(&padded).unwrap();
    let mut y = stft.synthesize_mono(&frames).unwrap();
    y.drain(..front);
    y.truncate(x.len());
    y
}

fn rel_rms(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stft_round_trip(seed in any::<u64>(), len in 1usize..6000, shape in 0usize..3) {
        let (frame_len, hop) = [(1024, 512), (512, 128), (256, 64)][shape];
        let stft = Stft::new(FrameConfig::new(frame_len, hop, Window::SqrtHann, 16e3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = round_trip(&stft, &x);
        prop_assert!(rel_rms(&x, &y) < 1e-9);
    }

    #[test]
    fn parseval_per_frame(seed in any::<u64>()) {
        let stft = Stft::new(FrameConfig::default()).unwrap();
        let n = 1024;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
        let time: f64 = x.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
        let bins = stft.forward_segment(&x);
        let last = bins.len() - 1;
        let freq: f64 = bins
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 || k == last { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
            .sum::<f64>()
            / n as f64;
        prop_assert!(((time - freq) / time).abs() < 1e-10);
    }

    #[test]
    fn pseudo_inverse_inverts_steering(seed in any::<u64>(), m in 1usize..=8, extra in 0usize..=7) {
        let n = (m + extra).min(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mics: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)])
            .collect();
        let dirs: Vec<[f64; 3]> = (0..m)
            .map(|_| direction_from_angles(rng.gen_range(0.0..360.0), rng.gen_range(-60.0..60.0)))
            .collect();
        let scene = ArrayScene::new(mics, dirs, SPEED_OF_SOUND, 16e3).unwrap();
        let freq = rng.gen_range(300.0..8000.0);
        let a = steering_matrix(&scene, freq).unwrap().matrix;
        let w = pseudo_inverse(&a);
        prop_assume!(!w.regularized);
        let err = w.matrix.matmul(&a).unwrap().sub(&CMatrix::identity(m)).frobenius_norm();
        prop_assert!(err < 1e-8, "|WA - I| = {err:e}");
    }

    #[test]
    fn separation_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let cfg = FrameConfig::new(64, 32, Window::SqrtHann, 16e3).unwrap();
        let scene = ArrayScene::new(
            cube_array(0.2),
            vec![direction_from_angles(10.0, 0.0), direction_from_angles(130.0, 20.0)],
            SPEED_OF_SOUND,
            16e3,
        ).unwrap();
        let w = SeparationMatrix::pseudo_inverse(&scene, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut frame = || {
            let chans: Vec<Vec<Complex64>> = (0..8)
                .map(|_| (0..33).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
                .collect();
            SpectralFrame::from_channels(0, &chans).unwrap()
        };
        let (z1, z2) = (frame(), frame());
        let mut combo = z1.clone();
        for c in 0..8 {
            for k in 0..33 {
                combo.set_bin(c, k, z1.bin(c, k) * alpha + z2.bin(c, k) * beta);
            }
        }
        let (s1, s2, s) = (w.separate(&z1).unwrap(), w.separate(&z2).unwrap(), w.separate(&combo).unwrap());
        for m in 0..2 {
            for k in 0..33 {
                let want = s1.bin(m, k) * alpha + s2.bin(m, k) * beta;
                prop_assert!((s.bin(m, k) - want).norm() <= 1e-12 * (1.0 + want.norm()));
            }
        }
    }
}

#[test]
fn pseudo_inverse_agrees_with_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(m..=8);
        let a = CMatrix::from_fn(n, m, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let entries: Vec<(f64, f64)> = a.as_slice().iter().map(|c| (c.re, c.im)).collect();
        let want = oracles::svd_pinv(n, m, &entries);
        let got = pseudo_inverse(&a).matrix;
        for (g, w) in got.as_slice().iter().zip(&want) {
            assert!((g - Complex64::new(w.0, w.1)).norm() < 1e-9);
        }
    }
}

#[test]
fn two_sources_improve_on_best_microphone() {
    let fs = 16e3;
    let dirs = vec![direction_from_angles(30.0, 10.0), direction_from_angles(200.0, -10.0)];
    let array = ArrayScene::new(cube_array(0.3), dirs, SPEED_OF_SOUND, fs).unwrap();
    let sources: Vec<Vec<f64>> = [(120.0, 21), (210.0, 22)]
        .iter()
        .map(|&(f0, seed)| SpeechSurrogate { f0, duration_s: 4.0, seed }.render(fs))
        .collect();
    let spec = SceneSpec {
        array: array.clone(),
        sources,
        source_gains_db: vec![],
        noise: NoiseSpec { kind: NoiseKind::White, level: NoiseLevel::RelativeToSpeech(-20.0) },
        target_input_segsnr_db: None,
        perturbation: Perturbation::default(),
        seed: 5,
    };
    let out = mix(&spec).unwrap();
    let cfg = FrameConfig::default();
    let stft = Stft::new(cfg).unwrap();
    let w = SeparationMatrix::pseudo_inverse(&array, &cfg).unwrap();
    let sep = separate_signals(&w, &stft, &out.mixture).unwrap();
    let seg = SegSnrConfig::default();
    for (m, reference) in out.references.iter().enumerate() {
        let best_mic = out
            .mixture
            .iter()
            .map(|ch| segsnr(reference, ch, &seg).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let lss = segsnr(reference, &sep[m], &seg).unwrap();
        assert!(lss >= best_mic + 3.0, "source {m}: lss {lss:.2} dB, best mic {best_mic:.2} dB");
    }
}

#[test]
fn matched_separation_recovers_single_source() {
    let fs = 16e3;
    let array = ArrayScene::new(cube_array(0.3), vec![direction_from_angles(45.0, 20.0)], SPEED_OF_SOUND, fs).unwrap();
    let src = SpeechSurrogate { f0: 150.0, duration_s: 1.0, seed: 4 }.render(fs);
    let mics = spatialize(&src, &array.source_directions[0], &array).unwrap();
    let cfg = FrameConfig::default();
    let w = SeparationMatrix::pseudo_inverse(&array, &cfg).unwrap();
    let out = separate_signals(&w, &Stft::new(cfg).unwrap(), &mics).unwrap();
    // Residual is the per-frame circular approximation of the inter-mic delays.
    let e = rel_rms(&src, &out[0]);
    assert!(e < 0.05, "{e}");
}
