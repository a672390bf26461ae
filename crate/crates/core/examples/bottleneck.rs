//! One desk-scale fit of a three-tone composite with per-epoch PSNR.
//!
//! `cargo run --release -p siren2 --example bottleneck -- <eq6-low|eq6-high> <uniform|winner> EPOCHS [SEED]`

use siren2::network::NetworkConfig;
use siren2::signal::{synth_composite, SyntheticPreset};
use siren2::target_init::NoiseSchedule;
use siren2::training::{fit, InitSpec, TrainSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let preset: SyntheticPreset = args[1].parse().unwrap();
    let init = match args[2].as_str() {
        "uniform" => InitSpec::Uniform,
        _ => InitSpec::WinnerAuto { schedule: NoiseSchedule::audio() },
    };
    let epochs: usize = args[3].parse().unwrap();
    let seed: u64 = args.get(4).map_or(0, |s| s.parse().unwrap());
    let signal = synth_composite(&preset.spec(1 << 12)).unwrap();
    let config = NetworkConfig::uniform(1, 3, 64, 1, 30.0).with_input_scale(10.0);
    let spec = TrainSpec { epochs, seed, snapshot_interval: 1, ..TrainSpec::default() };
    let out = fit(&config, &init, &signal, &spec).unwrap();
    let r = &out.report;
    for s in r.snapshots.iter().step_by((epochs / 20).max(1)) {
        println!("epoch {:5} psnr {:.3}", s.epoch, s.psnr.as_f64());
    }
    println!(
        "init {:?} best {:.3} @ {} floor {:.3} time {:.1}s",
        r.init, r.best_psnr.as_f64(), r.best_epoch, r.zero_prediction_psnr.as_f64(), r.wall_time_s
    );
}
