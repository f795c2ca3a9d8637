//! Scripted pick and place demonstrations over the object grid.

use hybrid_recovery::sim::{build_dataset, generate_demonstration, GridSpec, SimConfig};

fn main() -> hybrid_recovery::Result<()> {
    let cfg = SimConfig::default();
    let (pick, place) = generate_demonstration((0.0, 0.62), 1, &cfg)?;
    println!("pick: {} steps, place: {} steps", pick.len(), place.len());
    for t in (0..pick.len()).step_by(10) {
        let m = &pick.joints[t];
        println!("  t={t:3} joints [{:+.3}, {:+.3}, {:+.3}] gripper {:+.2}", m[0], m[1], m[2], m[3]);
    }

    let ds = build_dataset(&GridSpec::default(), 1, &cfg)?;
    println!(
        "\ndataset: {} training and {} validation demonstrations, rasters {}x{}",
        ds.train.len(),
        ds.validation.len(),
        ds.raster_size.0,
        ds.raster_size.1
    );
    println!("scaling lo {:?}\n        hi {:?}", ds.norm.lo, ds.norm.hi);
    Ok(())
}
