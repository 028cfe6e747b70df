//! End-to-end checks of the receive chain against the channel simulator.

use echoface_core::channel::{add_noise, NoiseSpec, Reflector, Scene, Trajectory};
use echoface_core::chirp::{ChirpConfig, SampleBuffer};
use echoface_core::dsp::{
    analytic, capture_template, dechirp, extract_features, select_bin, spectrum, FrameSpectrum, Receiver,
    ReceiverConfig, SelectionMetric, SpectrumConfig, Template, Window,
};
use echoface_core::dsp::fft::rfft_padded;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 44_100.0;

fn chirp() -> ChirpConfig {
    ChirpConfig::default()
}

/// Dechirped spectrum of the first frame of `rx`, without filtering or sync.
fn first_frame_spectrum(rx: &[f64], window: Window) -> FrameSpectrum {
    let cfg = chirp();
    let tx = cfg.synthesize_frame().unwrap().samples;
    let tx_a = analytic(&tx).unwrap();
    let rx_a = analytic(&rx[..tx.len()]).unwrap();
    let r = dechirp(&tx_a, &rx_a).unwrap();
    let sc = SpectrumConfig { n_fft: 4096, active_len: Some(cfg.chirp_len()), window, sample_rate: FS };
    spectrum(&r, &sc, 0).unwrap()
}

fn magnitudes(s: &FrameSpectrum) -> Vec<f64> {
    s.bins.iter().map(|z| z.norm()).collect()
}

fn is_local_max_near(mag: &[f64], target_bin: f64) -> bool {
    let lo = (target_bin - 1.0).ceil().max(0.0) as usize;
    let hi = ((target_bin + 1.0).floor() as usize).min(mag.len() - 1);
    (lo..=hi).any(|k| {
        let left = if k == 0 { 0.0 } else { mag[k - 1] };
        let right = mag.get(k + 1).copied().unwrap_or(0.0);
        mag[k] >= left && mag[k] >= right
    })
}

#[test]
fn chirp_frequency_from_analytic_phase() {
    let cfg = chirp();
    let x = cfg.synthesize_chirp().unwrap().samples;
    let a = analytic(&x).unwrap();
    let n = x.len();
    let edge = n / 20;
    for i in edge..n - edge {
        let dphi = (a[i + 1] * a[i].conj()).arg();
        let f_est = dphi * FS / (2.0 * std::f64::consts::PI);
        let f_true = cfg.instantaneous_frequency((i as f64 + 0.5) / FS).unwrap();
        assert!((f_est - f_true).abs() <= 0.01 * f_true, "i={i}: {f_est} vs {f_true}");
    }
}

#[test]
fn single_path_beat_frequencies() {
    let tx = chirp().synthesize_frames(1).unwrap();
    let res = FS / 4096.0;
    for (tau, hz) in [(1e-3, 75.0), (0.0, 0.0)] {
        let rx = Scene::new(vec![Reflector::fixed(tau, 1.0)], 0).propagate(&tx).unwrap();
        let s = first_frame_spectrum(&rx.samples, Window::Rectangular);
        let peak = s.peak_bin() as f64;
        assert!((peak - hz / res).abs() <= 1.0, "tau {tau}: peak bin {peak}");
    }
    let rx = Scene::new(vec![Reflector::fixed(1e-3, 0.5), Reflector::fixed(3e-3, 0.5)], 0)
        .propagate(&tx)
        .unwrap();
    let mag = magnitudes(&first_frame_spectrum(&rx.samples, Window::Rectangular));
    assert!(is_local_max_near(&mag, 75.0 / res));
    assert!(is_local_max_near(&mag, 225.0 / res));
}

#[test]
fn static_paths_peak_at_their_beat_frequency() {
    let cfg = chirp();
    let tx = cfg.synthesize_frames(1).unwrap();
    let res = FS / 4096.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let tau = rng.random_range(0.5e-3..5e-3);
        let rx = Scene::new(vec![Reflector::fixed(tau, 0.7)], 0).propagate(&tx).unwrap();
        let mag = magnitudes(&first_frame_spectrum(&rx.samples, Window::Rectangular));
        assert!(is_local_max_near(&mag, cfg.chirp_rate() * tau / res), "tau {tau}");
    }
}

#[test]
fn sync_recovers_integer_delays() {
    let cfg = chirp();
    let tx = cfg.synthesize_frames(2).unwrap();
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut within_one = 0;
    for trial in 0..100u64 {
        let k = rng.random_range(0..400usize);
        let mut scene = Scene::new(vec![Reflector::fixed(k as f64 / FS, 0.8)], trial);
        scene.out_of_band_noise = Some(20.0);
        let rx = receiver.highpass(&scene.propagate(&tx).unwrap()).unwrap();
        assert_eq!(receiver.sync(&rx.samples).unwrap(), k as isize, "20 dB, k = {k}");

        scene.out_of_band_noise = None;
        scene.ambient_noise = Some(NoiseSpec { band_hz: [50.0, 15_000.0], snr_db: 0.0 });
        let rx = receiver.highpass(&scene.propagate(&tx).unwrap()).unwrap();
        if (receiver.sync(&rx.samples).unwrap() - k as isize).abs() <= 1 {
            within_one += 1;
        }
    }
    assert!(within_one >= 95, "{within_one}/100");
}

fn room(direct_samples: usize) -> Vec<Reflector> {
    vec![
        Reflector::fixed(direct_samples as f64 / FS, 0.6),
        Reflector::fixed(4.1e-3, 0.1),
        Reflector::fixed(5.3e-3, 0.07),
    ]
}

#[test]
fn static_template_is_frame_invariant() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let tx = chirp().synthesize_frames(8).unwrap();
    let rx = Scene::new(room(3), 0).propagate(&tx).unwrap();
    let (_, spectra) = receiver.spectra(&rx).unwrap();
    // Frame 0 has no echo tail from an earlier chirp; compare the rest.
    for k in 0..spectra[1].len() {
        let vals: Vec<_> = spectra[1..].iter().map(|s| s.bins[k]).collect();
        let mean = vals.iter().sum::<echoface_core::Complex>() / vals.len() as f64;
        let var = vals.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / vals.len() as f64;
        assert!(var < 1e-9, "bin {k}: {var}");
    }
    let template = capture_template(&Scene::new(room(3), 0), &receiver, 8).unwrap();
    for (k, z) in template.mean_spectrum.iter().enumerate() {
        assert!((z - spectra[3].bins[k]).norm() < 1e-4 * (1.0 + z.norm()), "bin {k}");
    }
}

#[test]
fn template_noise_shrinks_with_averaging() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let scene_for = |seed: u64| {
        let mut s = Scene::new(room(3), seed);
        s.out_of_band_noise = Some(10.0);
        s
    };
    let bins = 5..300;
    let var_of = |vals: &[echoface_core::Complex]| {
        let mean = vals.iter().sum::<echoface_core::Complex>() / vals.len() as f64;
        vals.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (vals.len() - 1) as f64
    };

    let tx = chirp().synthesize_frames(64).unwrap();
    let (_, single) = receiver.spectra(&scene_for(1000).propagate(&tx).unwrap()).unwrap();
    let single_var: f64 = bins
        .clone()
        .map(|k| var_of(&single[1..].iter().map(|s| s.bins[k]).collect::<Vec<_>>()))
        .sum();

    let templates: Vec<Template> = (0..24).map(|seed| capture_template(&scene_for(seed), &receiver, 64).unwrap()).collect();
    let template_var: f64 = bins
        .map(|k| var_of(&templates.iter().map(|t| t.mean_spectrum[k]).collect::<Vec<_>>()))
        .sum();
    let ratio = (template_var / single_var).sqrt();
    assert!((ratio * 8.0 - 1.0).abs() <= 0.3, "std ratio {ratio} (ideal 0.125)");
}

/// Static room, a moving reflector oscillating around `mean_delay`, and
/// `extra` more static reflectors placed at least eight bins from it.
fn moving_scene(rng: &mut ChaCha8Rng, mean_delay: f64, extra: usize) -> (Vec<Reflector>, Reflector) {
    let c = chirp().chirp_rate();
    let res = FS / 4096.0;
    let direct_samples = rng.random_range(2..10usize);
    let direct = direct_samples as f64 / FS;
    let mut statics = vec![Reflector::fixed(direct, 0.6)];
    let bin_of = |tau: f64| c * (tau - direct) / res;
    while statics.len() < extra + 1 {
        let tau = rng.random_range(0.4e-3..6e-3);
        let clear_of_moving = (bin_of(tau) - bin_of(mean_delay)).abs() >= 8.0;
        let clear_of_others = statics.iter().all(|r| (bin_of(r.delay.value(0.0)) - bin_of(tau)).abs() >= 2.0);
        if clear_of_moving && clear_of_others {
            statics.push(Reflector::fixed(tau, rng.random_range(0.03..0.2)));
        }
    }
    let moving = Reflector {
        name: "moving".into(),
        delay: Trajectory::Sine {
            base: mean_delay,
            swing: rng.random_range(1.5e-6..3e-6),
            freq_hz: rng.random_range(0.7..1.5),
            phase_rad: rng.random_range(0.0..6.0),
        },
        attenuation: Trajectory::constant(0.3),
        is_static: false,
    };
    (statics, moving)
}

#[test]
fn cancellation_removes_static_bins_and_keeps_motion() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n_frames = 57;
    let tx = chirp().synthesize_frames(n_frames).unwrap();
    for trial in 0..5u64 {
        let mean_delay = rng.random_range(1.2e-3..2.5e-3);
        let (statics, moving) = moving_scene(&mut rng, mean_delay, 4);
        let mut all = statics.clone();
        all.push(moving.clone());
        let scene = Scene::new(all, trial);
        let template = capture_template(&scene.without_subject(), &receiver, 16).unwrap();
        let (offset, raw) = receiver.spectra(&scene.propagate(&tx).unwrap()).unwrap();
        let cancelled = receiver.cancel(&raw, &template).unwrap();

        for r in &statics[1..] {
            let k = receiver.beat_bin(r.delay.value(0.0), offset);
            let before: f64 = raw[1..].iter().map(|s| s.bins[k].norm_sqr()).sum();
            let after: f64 = cancelled[1..].iter().map(|s| s.bins[k].norm_sqr()).sum();
            let db = 10.0 * (before / after).log10();
            assert!(db >= 30.0, "trial {trial}, bin {k}: {db:.1} dB");
        }

        let k = receiver.beat_bin(mean_delay, offset);
        let (_, alone) = receiver
            .spectra(&Scene::new(vec![statics[0].clone(), moving.clone()], trial).propagate(&tx).unwrap())
            .unwrap();
        let alone_template = capture_template(&Scene::new(vec![statics[0].clone()], 0), &receiver, 16).unwrap();
        let alone = receiver.cancel(&alone, &alone_template).unwrap();
        let phase_var = |frames: &[FrameSpectrum]| {
            let f = extract_features(frames, k).unwrap();
            let p: Vec<f64> = f.iter().map(|x| x.phase).collect();
            let m = p.iter().sum::<f64>() / p.len() as f64;
            p.iter().map(|v| (v - m).powi(2)).sum::<f64>() / p.len() as f64
        };
        let retained = phase_var(&cancelled) / phase_var(&alone);
        assert!(retained >= 0.9, "trial {trial}: retained {retained}");
    }
}

#[test]
fn selection_finds_moving_reflector_and_ignores_static_ones() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n_frames = receiver.config().calibration_frames();
    let tx = chirp().synthesize_frames(n_frames).unwrap();
    let trials = 20u64;
    let (mut hits, mut stable) = (0, 0);
    for trial in 0..trials {
        let mean_delay = rng.random_range(1.2e-3..2.5e-3);
        let (statics, moving) = moving_scene(&mut rng, mean_delay, 4);
        let mut all = statics.clone();
        all.push(moving);
        let scene = Scene::new(all, trial);
        let template = capture_template(&scene.without_subject(), &receiver, 16).unwrap();
        let out = receiver.process(&scene.propagate(&tx).unwrap(), Some(&template)).unwrap();
        hits += usize::from(out.selection.bin == receiver.beat_bin(mean_delay, out.sync_delay));
        assert!(!out.selection.low_confidence);

        let mut with_extra = scene.clone();
        let far = mean_delay + 1.5e-3;
        with_extra.reflectors.insert(1, Reflector::fixed(far, 0.15));
        let template = capture_template(&with_extra.without_subject(), &receiver, 16).unwrap();
        let again = receiver.process(&with_extra.propagate(&tx).unwrap(), Some(&template)).unwrap();
        stable += usize::from(again.selection.bin == out.selection.bin);
    }
    assert!(hits >= 19, "oracle bin hit in {hits}/{trials}");
    assert!(stable >= 19, "stable in {stable}/{trials}");
}

#[test]
fn static_noisy_scene_is_low_confidence() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let tx = chirp().synthesize_frames(57).unwrap();
    let mut scene = Scene::new(room(4), 3);
    scene.out_of_band_noise = Some(30.0);
    let template = capture_template(&scene.without_subject(), &receiver, 32).unwrap();
    let out = receiver.process(&scene.propagate(&tx).unwrap(), Some(&template)).unwrap();
    assert!(out.selection.low_confidence, "{:?}", (out.selection.max_score, out.selection.median_score));

    let spectra = &out.spectra[..];
    let phase = select_bin(spectra, SelectionMetric::PhaseVariance).unwrap();
    assert!(phase.bin < spectra[0].len());
}

#[test]
fn blink_gives_one_phase_jump() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let cfg = chirp();
    let n_frames = 80;
    let tx = cfg.synthesize_frames(n_frames).unwrap();
    let blink_frame = 40;
    let blink_t = blink_frame as f64 * cfg.frame_period() + 0.5 * cfg.duration;
    let face = Reflector {
        name: "face".into(),
        delay: Trajectory::Sum {
            terms: vec![
                Trajectory::Sine { base: 1.75e-3, swing: 0.5e-6, freq_hz: 0.25, phase_rad: 0.3 },
                Trajectory::PulseTrain { height: 2e-6, width_s: 0.04, times_s: vec![blink_t] },
            ],
        },
        attenuation: Trajectory::constant(0.3),
        is_static: false,
    };
    let statics = room(5);
    let mut all = statics.clone();
    all.push(face);
    let scene = Scene::new(all, 0);
    let template = capture_template(&Scene::new(statics, 1), &receiver, 16).unwrap();
    let out = receiver.process(&scene.propagate(&tx).unwrap(), Some(&template)).unwrap();
    let bin = receiver.beat_bin(1.75e-3, out.sync_delay);
    let f = extract_features(&out.spectra, bin).unwrap();
    let d: Vec<f64> = f[2..].iter().map(|x| x.d_phase).collect();
    let mut sorted = d.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let above: Vec<usize> = (0..d.len()).filter(|&i| d[i] > 5.0 * median).collect();
    assert!(!above.is_empty());
    let runs = 1 + above.windows(2).filter(|w| w[1] != w[0] + 1).count();
    assert_eq!(runs, 1, "prominent frames {above:?}");
    assert!(above.iter().all(|&i| (i + 2).abs_diff(blink_frame) <= 1));
}

#[test]
fn phase_is_continuous_after_unwrapping() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let tx = chirp().synthesize_frames(60).unwrap();
    let face = Reflector {
        name: String::new(),
        delay: Trajectory::Sine { base: 1.9e-3, swing: 40e-6, freq_hz: 0.5, phase_rad: 0.0 },
        attenuation: Trajectory::constant(0.3),
        is_static: false,
    };
    let statics = room(2);
    let mut all = statics.clone();
    all.push(face);
    let template = capture_template(&Scene::new(statics, 0), &receiver, 8).unwrap();
    let out = receiver.process(&Scene::new(all, 0).propagate(&tx).unwrap(), Some(&template)).unwrap();
    assert!(out.features.iter().all(|f| f.d_phase < std::f64::consts::PI));
    let total: f64 = out.features.iter().map(|f| f.d_phase).sum();
    assert!(total > 2.0 * std::f64::consts::PI, "phase should wind through several turns: {total}");
}

#[test]
fn pipeline_is_deterministic() {
    let receiver = Receiver::new(ReceiverConfig::default()).unwrap();
    let tx = chirp().synthesize_frames(30).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (statics, moving) = moving_scene(&mut rng, 1.6e-3, 3);
    let mut all = statics;
    all.push(moving);
    let mut scene = Scene::new(all, 77);
    scene.ambient_noise = Some(NoiseSpec { band_hz: [50.0, 15_000.0], snr_db: 0.0 });
    scene.out_of_band_noise = Some(40.0);
    let template = capture_template(&scene.without_subject(), &receiver, 8).unwrap();
    let a = receiver.process(&scene.propagate(&tx).unwrap(), Some(&template)).unwrap();
    let b = receiver.process(&scene.propagate(&tx).unwrap(), Some(&template)).unwrap();
    assert_eq!(a.features, b.features);
}

#[test]
fn ambient_noise_stays_out_of_the_chirp_band() {
    let tx: SampleBuffer = chirp().synthesize_frames(4).unwrap();
    let silent = SampleBuffer::zeros(tx.len(), FS);
    // Reference the noise to the chirp's power, then isolate it.
    let noisy = add_noise(&tx, 0.0, [100.0, 15_000.0], 3).unwrap();
    let noise: Vec<f64> = noisy.samples.iter().zip(&tx.samples).map(|(a, b)| a - b).collect();
    assert_eq!(add_noise(&silent, 0.0, [100.0, 15_000.0], 3).unwrap(), silent);
    let n = 16_384;
    let hann = Window::Hann.coefficients(noise.len());
    let windowed: Vec<f64> = noise.iter().zip(&hann).map(|(a, b)| a * b).collect();
    let spec = rfft_padded(&windowed, n).unwrap();
    let band_energy = |lo: f64, hi: f64| -> f64 {
        (0..=n / 2)
            .filter(|&k| {
                let f = k as f64 * FS / n as f64;
                f >= lo && f <= hi
            })
            .map(|k| spec[k].norm_sqr())
            .sum()
    };
    let in_band = band_energy(100.0, 15_000.0);
    let above = band_energy(16_000.0, FS / 2.0);
    let db = 10.0 * (in_band / above).log10();
    assert!(db >= 40.0, "{db:.1} dB");
}
