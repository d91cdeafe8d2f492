use mapf_core::lss::{direction_from_angles, ArrayScene, SPEED_OF_SOUND};
use mapf_core::metrics::SegSnrConfig;
use mapf_core::mixer::{cube_array, mix, NoiseKind, NoiseLevel, NoiseSpec, Perturbation, SceneSpec, SpeechSurrogate};
use mapf_core::pipeline::{evaluate, run, PipelineConfig, PipelineState, StageReport};
use mapf_core::stft::{FrameConfig, Stft};
use proptest::prelude::*;

const FS: f64 = 16e3;

struct Fixture {
    array: ArrayScene,
    mixture: Vec<Vec<f64>>,
    references: Vec<Vec<f64>>,
}

fn fixture(dirs: &[(f64, f64)], voices: &[(f64, u64)], seconds: f64, target: f64, seed: u64) -> Fixture {
    let directions = dirs.iter().map(|&(az, el)| direction_from_angles(az, el)).collect();
    let array = ArrayScene::new(cube_array(0.3), directions, SPEED_OF_SOUND, FS).unwrap();
    let sources = voices
        .iter()
        .map(|&(f0, s)| SpeechSurrogate { f0, duration_s: seconds, seed: s }.render(FS))
        .collect();
    let spec = SceneSpec {
        array: array.clone(),
        sources,
        source_gains_db: vec![],
        noise: NoiseSpec { kind: NoiseKind::White, level: NoiseLevel::RelativeToSpeech(0.0) },
        target_input_segsnr_db: Some(target),
        perturbation: Perturbation { position_jitter: 0.01, gain_jitter_db: 3.0, direction_error_deg: 3.0 },
        seed,
    };
    let out = mix(&spec).unwrap();
    Fixture { array, mixture: out.mixture, references: out.references }
}

fn taps() -> PipelineConfig {
    PipelineConfig { stage_taps: true, ..PipelineConfig::default() }
}

fn report(fx: &Fixture, cfg: &PipelineConfig) -> Vec<StageReport> {
    let out = run(&fx.array, &fx.mixture, cfg).unwrap();
    let rep = evaluate(&out, &fx.references, &cfg.frame, &SegSnrConfig::default()).unwrap();
    for s in &rep {
        let cells: Vec<String> = s.per_source.iter().map(|m| format!("{:6.2}/{:6.2}", m.lsd_db, m.segsnr_db)).collect();
        println!("{:15} {}", s.name, cells.join("  "));
    }
    rep
}

#[test]
fn two_sources_lsd_decreases_through_the_chain() {
    let fx = fixture(&[(30.0, 10.0), (200.0, -10.0)], &[(120.0, 31), (210.0, 32)], 5.0, 0.0, 3);
    let rep = report(&fx, &taps());
    let (mic, lss, post) = (&rep[0], &rep[1], &rep[3]);
    for m in 0..2 {
        assert!(mic.per_source[m].lsd_db > lss.per_source[m].lsd_db, "source {m}: mic vs lss");
        assert!(lss.per_source[m].lsd_db > post.per_source[m].lsd_db, "source {m}: lss vs post-filter");
    }
}

#[test]
fn three_sources_segsnr_gains() {
    let fx = fixture(
        &[(20.0, 5.0), (110.0, 25.0), (255.0, -15.0)],
        &[(120.0, 1), (210.0, 2), (140.0, 3)],
        5.0,
        -5.0,
        7,
    );
    let rep = report(&fx, &taps());
    let (lss, single, proposed) = (&rep[1], &rep[2], &rep[3]);
    for m in 0..3 {
        let p = proposed.per_source[m].segsnr_db;
        assert!(p >= lss.per_source[m].segsnr_db + 3.0, "source {m}");
        assert!(p > single.per_source[m].segsnr_db, "source {m}");
    }
}

#[test]
fn zero_leakage_reduces_to_single_channel_filter() {
    let fx = fixture(&[(30.0, 10.0), (200.0, -10.0)], &[(120.0, 31), (210.0, 32)], 2.0, 0.0, 3);
    let mut cfg = taps();
    cfg.postfilter.eta = 0.0;
    let out = run(&fx.array, &fx.mixture, &cfg).unwrap();
    assert_eq!(Some(&out.enhanced), out.single_channel.as_ref());
}

#[test]
fn one_source_equals_single_channel_filter() {
    let fx = fixture(&[(45.0, 0.0)], &[(150.0, 9)], 2.0, 5.0, 4);
    let out = run(&fx.array, &fx.mixture, &taps()).unwrap();
    assert_eq!(Some(&out.enhanced), out.single_channel.as_ref());
}

#[test]
fn runs_are_deterministic() {
    let fx = fixture(&[(30.0, 10.0), (200.0, -10.0)], &[(120.0, 31), (210.0, 32)], 2.0, 0.0, 3);
    let a = run(&fx.array, &fx.mixture, &taps()).unwrap();
    let b = run(&fx.array, &fx.mixture, &taps()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn prefix_of_input_gives_prefix_of_output() {
    let fx = fixture(&[(30.0, 10.0), (200.0, -10.0)], &[(120.0, 31), (210.0, 32)], 2.0, 0.0, 3);
    let cfg = PipelineConfig::default();
    let full = run(&fx.array, &fx.mixture, &cfg).unwrap();
    let cut = 20_000;
    let prefix: Vec<Vec<f64>> = fx.mixture.iter().map(|c| c[..cut].to_vec()).collect();
    let part = run(&fx.array, &prefix, &cfg).unwrap();
    let stable = cut - cfg.frame.frame_len;
    for (a, b) in full.enhanced.iter().zip(&part.enhanced) {
        assert_eq!(&a[..stable], &b[..stable]);
    }
}

#[test]
fn frame_outputs_do_not_depend_on_future_frames() {
    let fx = fixture(&[(30.0, 10.0), (200.0, -10.0)], &[(120.0, 31), (210.0, 32)], 2.0, 0.0, 3);
    let cfg = PipelineConfig::default();
    let stft = Stft::new(cfg.frame).unwrap();
    let frames = stft.analyze_channels(&fx.mixture).unwrap();
    let mut full = PipelineState::for_scene(&fx.array, cfg).unwrap();
    let mut part = PipelineState::for_scene(&fx.array, cfg).unwrap();
    let all: Vec<_> = frames.iter().map(|z| full.process_frame(z).unwrap()).collect();
    for (z, want) in frames[..frames.len() / 2].iter().zip(&all) {
        assert_eq!(&part.process_frame(z).unwrap(), want);
    }
}

#[test]
fn enhanced_energy_never_exceeds_separated() {
    let fx = fixture(
        &[(20.0, 5.0), (110.0, 25.0), (255.0, -15.0)],
        &[(120.0, 1), (210.0, 2), (140.0, 3)],
        2.0,
        -5.0,
        7,
    );
    let cfg = PipelineConfig { diagnostics: true, ..PipelineConfig::default() };
    let stft = Stft::new(cfg.frame).unwrap();
    let mut st = PipelineState::for_scene(&fx.array, cfg).unwrap();
    for z in stft.analyze_channels(&fx.mixture).unwrap() {
        let out = st.process_frame(&z).unwrap();
        for m in 0..3 {
            let e: f64 = out.enhanced.power(m).iter().sum();
            let s: f64 = out.separated.power(m).iter().sum();
            assert!(e <= s);
        }
        let diag = out.diagnostics.unwrap();
        for ch in &diag.channels {
            for v in [&ch.smoothed, &ch.stationary, &ch.leakage, &ch.gamma, &ch.xi, &ch.g_h1, &ch.q, &ch.p, &ch.gain] {
                assert!(v.iter().all(|x| x.is_finite()));
            }
        }
    }
}

#[test]
fn degenerate_inputs_stay_finite() {
    let array = ArrayScene::new(cube_array(0.3), vec![direction_from_angles(0.0, 0.0)], SPEED_OF_SOUND, FS).unwrap();
    let cfg = taps();
    for len in [0usize, 1, 1023, 1024, 3000] {
        let mics = vec![vec![0.0; len]; 8];
        let out = run(&array, &mics, &cfg).unwrap();
        assert!(out.enhanced.iter().all(|c| c.len() == len && c.iter().all(|v| *v == 0.0)));
    }
    let mut mics = vec![vec![0.0; 1]; 8];
    mics[0][0] = 1.0;
    let out = run(&array, &mics, &cfg).unwrap();
    assert!(out.enhanced.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn frame_config_is_validated() {
    let array = ArrayScene::new(cube_array(0.3), vec![direction_from_angles(0.0, 0.0)], SPEED_OF_SOUND, FS).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.frame = FrameConfig { frame_len: 1000, ..cfg.frame };
    assert!(run(&array, &vec![vec![0.0; 4000]; 8], &cfg).is_err());
    let mut cfg = PipelineConfig::default();
    cfg.frame.sample_rate = 8e3;
    assert!(run(&array, &vec![vec![0.0; 4000]; 8], &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn arbitrary_inputs_give_finite_bounded_outputs(seed in any::<u64>(), scale in 1e-8f64..1e3, len in 1usize..5000) {
        let array = ArrayScene::new(
            cube_array(0.3),
            vec![direction_from_angles(0.0, 0.0), direction_from_angles(120.0, 30.0)],
            SPEED_OF_SOUND,
            FS,
        ).unwrap();
        let mut s = seed;
        let mics: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..len).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                scale * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            }).collect())
            .collect();
        let out = run(&array, &mics, &taps()).unwrap();
        prop_assert!(out.enhanced.iter().flatten().all(|v| v.is_finite()));
        prop_assert!(out.separated.iter().flatten().all(|v| v.is_finite()));
    }
}
