//! Principal axes of a noisy helix and the explained variance.

use hybrid_recovery::numerics::{pca_fit, SeededRng};

fn main() -> hybrid_recovery::Result<()> {
    let mut rng = SeededRng::new(3);
    let samples: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let t = i as f64 * 0.05;
            vec![t.cos(), t.sin(), 0.2 * t, rng.gaussian(0.01), rng.gaussian(0.01)]
        })
        .collect();
    let pca = pca_fit(&samples, 3)?;
    println!("explained variance ratio {:?}", pca.explained_variance_ratio);
    for i in (0..200).step_by(40) {
        let p = pca.project(&samples[i])?;
        println!("sample {i:3} -> [{:+.3}, {:+.3}, {:+.3}]", p[0], p[1], p[2]);
    }
    Ok(())
}
