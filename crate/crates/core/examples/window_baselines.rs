//! Nearest-neighbour and subspace window detectors on synthetic signals.

use hybrid_recovery::gate::BaselineDetector;

fn sine(phase: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|t| vec![(0.2 * t as f64 + phase).sin(), (0.1 * t as f64 + phase).cos()]).collect()
}

fn main() -> hybrid_recovery::Result<()> {
    let training: Vec<Vec<Vec<f64>>> = (0..4).map(|k| sine(0.3 * k as f64, 80)).collect();
    let knn = BaselineDetector::knn(&training, 10)?;
    let sm = BaselineDetector::sm(&training, 10, 2)?;

    let nominal = sine(0.15, 30);
    let mut frozen = nominal.clone();
    for m in frozen.iter_mut().skip(20) {
        *m = nominal[20].clone();
    }
    let mut jumped = nominal.clone();
    for m in jumped.iter_mut().skip(25) {
        m[0] += 0.8;
    }
    for (name, sig) in [("nominal", &nominal), ("frozen", &frozen), ("jumped", &jumped)] {
        let k = knn.score_recent(sig)?.expect("long enough");
        let s = sm.score_recent(sig)?.expect("long enough");
        println!("{name:8} knn {:?}  sm {:?}", round(&k), round(&s));
    }
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
