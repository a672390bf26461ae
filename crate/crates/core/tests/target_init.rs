use std::f64::consts::PI;

use proptest::prelude::*;
use siren2::math::{RealMatrix, SeededRng};
use siren2::signal::{synth_bandlimited, synth_composite, Signal, SyntheticPreset};
use siren2::target_init::{
    auto_scales, noise_scales, signal_centroid, spectral_centroid_1d, spectral_centroid_2d, NoiseSchedule, Window,
};
use siren2::Error;

/// `(psi, s0, s1)` for each audio target of the reference scale table.
const AUDIO_ROWS: [(&str, f64, f64, f64); 11] = [
    ("tetris", 0.5732, 3436.0, 1.72),
    ("tap", 0.7264, 3478.0, 2.18),
    ("whoosh", 0.5266, 3412.0, 1.58),
    ("radiation", 0.8368, 3489.0, 2.51),
    ("arch", 0.4996, 3394.0, 1.5),
    ("relay", 0.6310, 3457.0, 1.89),
    ("voltage", 0.4540, 3354.0, 1.36),
    ("foley", 0.1772, 2487.0, 0.53),
    ("shattered", 0.3942, 3278.0, 1.18),
    ("bach", 0.0737, 1410.0, 0.22),
    ("birds", 0.1789, 2499.0, 0.54),
];

const IMAGE_ROWS: [(&str, f64, f64, f64); 4] = [
    ("noise", 0.5934, 47.0, 0.24),
    ("camera", 0.3121, 39.0, 0.12),
    ("castle", 0.1097, 21.0, 0.04),
    ("rock", 0.4055, 43.0, 0.16),
];

fn closed_form(preset: SyntheticPreset) -> f64 {
    let a = SyntheticPreset::AMPLITUDES;
    let f = preset.frequencies();
    2.0 * a.iter().zip(&f).map(|(a, f)| a * f).sum::<f64>() / a.iter().sum::<f64>()
}

#[test]
fn reference_scale_table_is_reproduced() {
    for (name, psi, s0, s1) in AUDIO_ROWS {
        let got = noise_scales(psi, 1, &NoiseSchedule::audio()).unwrap();
        assert!((got.s0 - s0).abs() <= 1.0, "{name}: s0 {} vs {s0}", got.s0);
        assert!((got.s1 - s1).abs() <= 0.01, "{name}: s1 {} vs {s1}", got.s1);
    }
    for (name, psi, s0, s1) in IMAGE_ROWS {
        let got = noise_scales(psi, 1, &NoiseSchedule::image()).unwrap();
        assert!((got.s0 - s0).abs() <= 1.0, "{name}: s0 {} vs {s0}", got.s0);
        assert!((got.s1 - s1).abs() <= 0.01, "{name}: s1 {} vs {s1}", got.s1);
    }
}

#[test]
fn nominal_audio_constant_misses_the_table() {
    let misses = AUDIO_ROWS
        .iter()
        .filter(|(_, psi, s0, _)| (noise_scales(*psi, 1, &NoiseSchedule::audio_nominal()).unwrap().s0 - s0).abs() > 1.0)
        .count();
    assert!(misses >= 9, "a = 5 matched {} of 11 rows", 11 - misses);
}

#[test]
fn schedule_edge_cases() {
    let zero = noise_scales(0.0, 1, &NoiseSchedule::audio()).unwrap();
    assert_eq!((zero.s0, zero.s1), (0.0, 0.0));
    let three = noise_scales(0.9, 3, &NoiseSchedule::image()).unwrap();
    let one = noise_scales(0.3, 1, &NoiseSchedule::image()).unwrap();
    assert!((three.s0 - one.s0).abs() < 1e-12 && (three.s1 - one.s1).abs() < 1e-12);
    assert!(matches!(noise_scales(1.5, 1, &NoiseSchedule::image()), Err(Error::InvalidParameter(_))));
    assert!(matches!(noise_scales(0.5, 0, &NoiseSchedule::image()), Err(Error::InvalidParameter(_))));
}

proptest! {
    #[test]
    fn schedule_is_monotone_and_bounded(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 1usize..4) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        for schedule in [NoiseSchedule::audio(), NoiseSchedule::image()] {
            let p = noise_scales(lo, c, &schedule).unwrap();
            let q = noise_scales(hi, c, &schedule).unwrap();
            prop_assert!(p.s0 < q.s0 && p.s1 < q.s1);
            prop_assert!(q.s0 < schedule.s0_max && q.s1 <= schedule.b / c as f64);
        }
    }

    #[test]
    fn centroid_is_scale_invariant(seed in 0u64..1000, c in prop::sample::select(vec![-3.0, 0.01, 2.0, 1e4])) {
        let mut rng = SeededRng::new(seed, 0);
        let x: Vec<f64> = (0..257).map(|_| rng.next_f64() - 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v).collect();
        for w in [Window::Rectangular, Window::Hann] {
            let p = spectral_centroid_1d(&[&x], w).unwrap().psi;
            let q = spectral_centroid_1d(&[&y], w).unwrap().psi;
            prop_assert!((p - q).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn composite_centroids_match_the_weighted_mean() {
    for (preset, pinned) in [(SyntheticPreset::Eq6Low, 0.6071), (SyntheticPreset::Eq6High, 0.9214)] {
        let signal = synth_composite(&preset.spec(1 << 12)).unwrap();
        let psi = signal_centroid(&signal).unwrap().psi;
        let oracle = closed_form(preset);
        assert!((oracle - pinned).abs() < 5e-5);
        assert!((psi - oracle).abs() <= 0.005, "{}: {psi} vs {oracle}", preset.name());
    }
}

#[test]
fn composites_map_to_audio_scales() {
    let low = synth_composite(&SyntheticPreset::Eq6Low.spec(1 << 12)).unwrap();
    let high = synth_composite(&SyntheticPreset::Eq6High.spec(1 << 12)).unwrap();
    let (_, a) = auto_scales(&low, &NoiseSchedule::audio()).unwrap();
    let (_, b) = auto_scales(&high, &NoiseSchedule::audio()).unwrap();
    assert!(a.s0 < b.s0 && a.s1 < b.s1);
    assert!((b.s1 - 3.0 * signal_centroid(&high).unwrap().psi).abs() < 1e-12);
}

#[test]
fn single_tone_centroid_is_its_frequency() {
    let n = 1024;
    for k in [16usize, 100, 300, 500] {
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * (k * i) as f64 / n as f64).cos()).collect();
        let psi = spectral_centroid_1d(&[&x], Window::Rectangular).unwrap().psi;
        assert!((psi - 2.0 * k as f64 / n as f64).abs() < 1e-12);
    }
}

#[test]
fn band_ladder_is_monotone() {
    let mut last = -1.0;
    for lo in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let mut rng = SeededRng::new(3, 16);
        let s = synth_bandlimited(lo, lo + 0.1, 1 << 12, &mut rng).unwrap();
        let psi = signal_centroid(&s).unwrap().psi;
        assert!(psi > last, "band [{lo}, {}] gave {psi} after {last}", lo + 0.1);
        assert!((psi - (lo + 0.05) * 2.0).abs() < 0.03);
        last = psi;
    }
}

#[test]
fn image_centroid_examples() {
    let constant = RealMatrix::from_fn(16, 16, |_, _| 2.0);
    assert!(spectral_centroid_2d(&[constant]).unwrap().psi.abs() < 1e-12);
    let checker = RealMatrix::from_fn(16, 16, |i, j| if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
    assert!((spectral_centroid_2d(&[checker]).unwrap().psi - 1.0).abs() < 1e-12);
    let tone = RealMatrix::from_fn(32, 32, |_, j| (2.0 * PI * 0.25 * j as f64).cos());
    let psi = spectral_centroid_2d(&[tone]).unwrap().psi;
    assert!((psi - 0.25 / (0.5 * 2f64.sqrt())).abs() < 1e-12);
    assert!(matches!(
        spectral_centroid_2d(&[RealMatrix::zeros(8, 8)]),
        Err(Error::UndefinedCentroid)
    ));
}

#[test]
fn image_signal_centroid_averages_channels() {
    let (h, w) = (16, 16);
    let mut samples = Vec::with_capacity(h * w * 3);
    for i in 0..h {
        for j in 0..w {
            samples.push(1.0);
            samples.push(if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            samples.push(0.5);
        }
    }
    let img = Signal::image(h, w, 3, samples).unwrap();
    let r = signal_centroid(&img).unwrap();
    assert_eq!(r.channels, 3);
    // Two DC channels of magnitude 16 and 8 against one corner bin of magnitude 16.
    assert!((r.psi - 16.0 / 40.0).abs() < 1e-12);
}
