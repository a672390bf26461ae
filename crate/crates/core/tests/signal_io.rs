use proptest::prelude::*;
use siren2::signal::{
    read_json, read_pgm_ppm, read_wav, synth_composite, write_csv, write_json, write_pgm_ppm, write_wav, Cell,
    Signal, SignalKind, SyntheticPreset,
};
use siren2::Error;

/// Canonical 44-byte-header mono PCM16 file at 8 kHz holding `frames`.
fn wav_fixture(frames: &[i16]) -> Vec<u8> {
    let data_len = (frames.len() * 2) as u32;
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data_len).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&8000u32.to_le_bytes());
    b.extend_from_slice(&16000u32.to_le_bytes());
    b.extend_from_slice(&2u16.to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&data_len.to_le_bytes());
    for f in frames {
        b.extend_from_slice(&f.to_le_bytes());
    }
    b
}

#[test]
fn wav_fixture_decodes_and_reencodes_bytewise() {
    let dir = tempfile::tempdir().unwrap();
    let frames = [0i16, 16384, -16384, 32767, -32768];
    let bytes = wav_fixture(&frames);
    assert_eq!(bytes.len(), 44 + 10);
    let path = dir.path().join("a.wav");
    std::fs::write(&path, &bytes).unwrap();
    let s = read_wav(&path, usize::MAX).unwrap();
    assert_eq!(s.kind, SignalKind::Audio1d);
    assert_eq!(s.sample_rate, Some(8000));
    assert_eq!(s.samples, vec![0.0, 0.5, -0.5, 32767.0 / 32768.0, -1.0]);
    let out = dir.path().join("b.wav");
    write_wav(&s, &out).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), bytes);
    assert_eq!(read_wav(&path, 2).unwrap().samples, vec![0.0, 0.5]);
}

#[test]
fn wav_stereo_is_averaged_and_extra_chunks_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = wav_fixture(&[]);
    // Rewrite as stereo with a LIST chunk before data.
    b[22..24].copy_from_slice(&2u16.to_le_bytes());
    b[32..34].copy_from_slice(&4u16.to_le_bytes());
    b.truncate(36);
    b.extend_from_slice(b"LIST");
    b.extend_from_slice(&3u32.to_le_bytes());
    b.extend_from_slice(&[1, 2, 3, 0]);
    b.extend_from_slice(b"data");
    b.extend_from_slice(&8u32.to_le_bytes());
    for v in [1000i16, 3000, -2000, 2000] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    let path = dir.path().join("s.wav");
    std::fs::write(&path, &b).unwrap();
    let s = read_wav(&path, usize::MAX).unwrap();
    assert_eq!(s.channels, 1);
    assert_eq!(s.samples, vec![2000.0 / 32768.0, 0.0]);
}

#[test]
fn wav_errors_are_typed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.wav");
    std::fs::write(&path, b"RIFX....WAVE").unwrap();
    assert!(matches!(read_wav(&path, 10), Err(Error::UnsupportedFormat(_))));
    let mut float = wav_fixture(&[1, 2]);
    float[20..22].copy_from_slice(&3u16.to_le_bytes());
    std::fs::write(&path, &float).unwrap();
    assert!(matches!(read_wav(&path, 10), Err(Error::UnsupportedFormat(_))));
    let mut eight = wav_fixture(&[1, 2]);
    eight[34..36].copy_from_slice(&8u16.to_le_bytes());
    std::fs::write(&path, &eight).unwrap();
    assert!(matches!(read_wav(&path, 10), Err(Error::UnsupportedFormat(_))));
    let no_data = wav_fixture(&[])[..36].to_vec();
    std::fs::write(&path, &no_data).unwrap();
    assert!(matches!(read_wav(&path, 10), Err(Error::Malformed { .. })));
    assert!(matches!(read_wav(&dir.path().join("missing.wav"), 10), Err(Error::Io { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pcm_values_round_trip_exactly(frames in prop::collection::vec(any::<i16>(), 2..200)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.wav");
        std::fs::write(&path, wav_fixture(&frames)).unwrap();
        let s = read_wav(&path, usize::MAX).unwrap();
        let out = dir.path().join("o.wav");
        write_wav(&s, &out).unwrap();
        prop_assert_eq!(read_wav(&out, usize::MAX).unwrap().samples, s.samples);
    }

    #[test]
    fn netpbm_round_trips(h in 1usize..9, w in 2usize..9, rgb in any::<bool>(), wide in any::<bool>(), seed in 0u64..1000) {
        let channels = if rgb { 3 } else { 1 };
        let maxval: u32 = if wide { 65535 } else { 255 };
        let mut bytes = format!("P{}\n# fixture\n{w} {h}\n{maxval}\n", if rgb { 6 } else { 5 }).into_bytes();
        let mut state = seed;
        for _ in 0..h * w * channels {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = (state >> 33) as u32 % (maxval + 1);
            if wide {
                bytes.extend_from_slice(&(v as u16).to_be_bytes());
            } else {
                bytes.push(v as u8);
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if rgb { "i.ppm" } else { "i.pgm" });
        std::fs::write(&path, &bytes).unwrap();
        let s = read_pgm_ppm(&path).unwrap();
        prop_assert_eq!(s.dims.clone(), vec![h, w]);
        prop_assert_eq!(s.channels, channels);
        prop_assert!(s.samples.iter().all(|v| (0.0..=1.0).contains(v)));
        let out = dir.path().join(if rgb { "o.ppm" } else { "o.pgm" });
        write_pgm_ppm(&s, &out).unwrap();
        let back = read_pgm_ppm(&out).unwrap();
        prop_assert_eq!(back.samples, s.samples);
    }
}

#[test]
fn netpbm_rejects_ascii_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.pgm");
    std::fs::write(&path, b"P2\n2 2\n255\n0 1 2 3\n").unwrap();
    assert!(matches!(read_pgm_ppm(&path), Err(Error::UnsupportedFormat(_))));
    std::fs::write(&path, b"P5\n2 2\n255\n\x00\x01").unwrap();
    assert!(matches!(read_pgm_ppm(&path), Err(Error::Malformed { .. })));
}

#[test]
fn normalization_reverses_to_raw_units() {
    let s = Signal::image(2, 2, 1, vec![10.0, 20.0, 30.0, 50.0]).unwrap();
    let n = s.normalized().unwrap();
    assert_eq!(n.samples, vec![0.0, 0.25, 0.5, 1.0]);
    assert_eq!(n.raw_samples(), s.samples);
    let a = Signal::audio(vec![0.5, -0.25, 0.125], None).unwrap().normalized().unwrap();
    assert_eq!(a.samples, vec![1.0, -0.5, 0.25]);
    assert_eq!(a.raw_samples(), vec![0.5, -0.25, 0.125]);
}

#[test]
fn coordinates_span_the_unit_cube() {
    let s = Signal::image(3, 5, 1, vec![0.0; 15]).unwrap();
    let c = s.coordinates();
    assert_eq!((c.rows(), c.cols()), (15, 2));
    assert_eq!(c.row(0), &[-1.0, -1.0]);
    assert_eq!(c.row(4), &[-1.0, 1.0]);
    assert_eq!(c.row(7), &[0.0, 0.0]);
    assert_eq!(c.row(14), &[1.0, 1.0]);
    let a = synth_composite(&SyntheticPreset::Eq6High.spec(4096)).unwrap();
    let x = a.coordinates();
    assert_eq!(x[(0, 0)], -1.0);
    assert_eq!(x[(4095, 0)], 1.0);
}

#[test]
fn composite_matches_its_formula() {
    let s = synth_composite(&SyntheticPreset::Eq6Low.spec(64)).unwrap();
    for (n, v) in s.samples.iter().enumerate() {
        let want: f64 = [(1.0, 0.125), (2.0, 0.25), (4.0, 0.375)]
            .iter()
            .map(|(a, f)| a / 7.0 * (2.0 * std::f64::consts::PI * f * n as f64).sin())
            .sum();
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn csv_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let rows = vec![vec![Cell::from(0usize), Cell::from(0.1), Cell::from("a,b")], vec![
        Cell::from(1usize),
        Cell::from(f64::INFINITY),
        Cell::from("c"),
    ]];
    write_csv(&path, &["i", "v", "s"], &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "i,v,s\n0,1.0000000000000001e-1,\"a,b\"\n1,inf,c\n");
    let parsed: f64 = "1.0000000000000001e-1".parse().unwrap();
    assert_eq!(parsed, 0.1);
    assert!(matches!(
        write_csv(&path, &["i"], &[vec![Cell::from(1usize), Cell::from(2usize)]]),
        Err(Error::ContractViolation(_))
    ));

    let sig = synth_composite(&SyntheticPreset::Eq6High.spec(32)).unwrap();
    let jpath = dir.path().join("s.json");
    write_json(&sig, &jpath).unwrap();
    let back: Signal = read_json(&jpath).unwrap();
    assert_eq!(back, sig);
    std::fs::write(&jpath, "{").unwrap();
    assert!(matches!(read_json::<Signal>(&jpath), Err(Error::Json { .. })));
}
