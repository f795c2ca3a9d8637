//! Trains the image autoencoder on a slice of the demonstration frames.

use hybrid_recovery::autoencoder::{train_cae, AeConfig, AeParams, CaeTrainConfig};
use hybrid_recovery::numerics::SeededRng;
use hybrid_recovery::sim::{build_dataset, GridSpec, SimConfig};

fn main() -> hybrid_recovery::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(10, |s| s.parse().expect("epochs"));
    let ds = build_dataset(&GridSpec::default(), 1, &SimConfig::default())?;
    let rasters: Vec<Vec<f64>> = ds.train.iter().take(8).flat_map(|t| t.rasters.iter().cloned()).collect();
    let init = AeParams::init(AeConfig::default(), &mut SeededRng::new(1))?;
    println!("{} frames, layers {:?}", rasters.len(), init.config.layers);
    let cfg = CaeTrainConfig {
        epochs,
        ..CaeTrainConfig::default()
    };
    let run = train_cae(&rasters, init, &cfg, &mut SeededRng::new(2))?;
    for (e, l) in run.loss_curve.iter().enumerate() {
        println!("epoch {e:3} loss {l:.5}");
    }
    let f = run.params.encode(&rasters[0])?;
    println!("features of frame 0: {:?}", f.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());
    println!("pixel mse {:.5}", run.params.pixel_mse(&rasters)?);
    Ok(())
}
