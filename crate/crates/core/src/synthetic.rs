//! Seeded generators for labelled 2-D benchmark shapes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::Result;

struct Builder {
    rows: Vec<Vec<f64>>,
    labels: Vec<i64>,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
}

impl Builder {
    fn new(seed: u64, noise: f64) -> Self {
        Self {
            rows: Vec::new(),
            labels: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise: Normal::new(0.0, noise.max(0.0)).expect("finite noise"),
        }
    }

    fn push(&mut self, x: f64, y: f64, label: i64) {
        let dx = self.noise.sample(&mut self.rng);
        let dy = self.noise.sample(&mut self.rng);
        self.rows.push(vec![x + dx, y + dy]);
        self.labels.push(label);
    }

    fn finish(self) -> Result<Dataset<f64>> {
        Dataset::from_rows(self.rows, Some(self.labels))
    }
}

/// Archimedean spiral arms `r = theta` rotated evenly around the origin,
/// `per_arm` points each, from `theta = start` over `turns` turns.
pub fn spirals(arms: usize, per_arm: usize, start: f64, turns: f64, noise: f64, seed: u64) -> Result<Dataset<f64>> {
    let mut b = Builder::new(seed, noise);
    let end = start + 2.0 * PI * turns;
    for arm in 0..arms {
        let phase = 2.0 * PI * arm as f64 / arms as f64;
        for i in 0..per_arm {
            // Equal arc length spacing: s ~ theta^2 / 2.
            let u = (i as f64 + 0.5) / per_arm as f64;
            let theta = (start * start + u * (end * end - start * start)).sqrt();
            b.push(theta * (theta + phase).cos(), theta * (theta + phase).sin(), arm as i64);
        }
    }
    b.finish()
}

/// Two interleaved spirals.
pub fn two_spirals(per_arm: usize, noise: f64, seed: u64) -> Result<Dataset<f64>> {
    spirals(2, per_arm, PI, 1.25, noise, seed)
}

/// Two interlocking half circles.
pub fn two_moons(per_moon: usize, noise: f64, seed: u64) -> Result<Dataset<f64>> {
    let mut b = Builder::new(seed, noise);
    for i in 0..per_moon {
        let t = PI * i as f64 / (per_moon - 1).max(1) as f64;
        b.push(t.cos(), t.sin(), 0);
    }
    for i in 0..per_moon {
        let t = PI * i as f64 / (per_moon - 1).max(1) as f64;
        b.push(1.0 - t.cos(), 0.5 - t.sin(), 1);
    }
    b.finish()
}

/// Annular sector; angles in units of pi.
struct Crescent {
    center: [f64; 2],
    radius: f64,
    width: f64,
    from: f64,
    to: f64,
}

impl Crescent {
    fn fill(&self, b: &mut Builder, n: usize, label: i64) {
        for _ in 0..n {
            let t = PI * b.rng.gen_range(self.from..self.to);
            let r = self.radius + b.rng.gen_range(-self.width / 2.0..self.width / 2.0);
            b.push(self.center[0] + r * t.cos(), self.center[1] + r * t.sin(), label);
        }
    }
}

/// Two stacked crescents of unequal density, lower one dense.
pub fn jain_like(seed: u64) -> Result<Dataset<f64>> {
    let mut b = Builder::new(seed, 0.0);
    let lower = Crescent {
        center: [0.0, 0.0],
        radius: 3.0,
        width: 0.6,
        from: 1.1,
        to: 1.9,
    };
    let upper = Crescent {
        center: [0.5, 4.5],
        radius: 3.0,
        width: 1.0,
        from: 1.15,
        to: 1.85,
    };
    lower.fill(&mut b, 276, 0);
    upper.fill(&mut b, 97, 1);
    b.finish()
}

/// A dense blob under an arched cap, 240 points in total.
pub fn flame_like(seed: u64) -> Result<Dataset<f64>> {
    let mut b = Builder::new(seed, 0.0);
    let blob = Normal::new(0.0, 0.55).expect("finite");
    for _ in 0..153 {
        let (x, y) = (blob.sample(&mut b.rng), blob.sample(&mut b.rng) * 1.2);
        b.push(x, y - 0.3, 1);
    }
    let cap = Crescent {
        center: [0.0, 0.0],
        radius: 3.0,
        width: 0.7,
        from: 0.1,
        to: 0.9,
    };
    cap.fill(&mut b, 87, 0);
    b.finish()
}

/// Isotropic Gaussian blobs, `per_blob` points around each center.
pub fn blobs(centers: &[[f64; 2]], per_blob: usize, std: f64, seed: u64) -> Result<Dataset<f64>> {
    let mut b = Builder::new(seed, std);
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            b.push(c[0], c[1], k as i64);
        }
    }
    b.finish()
}

/// Uniform points in the unit cube of dimension `m` with `m`-independent
/// labels; for stress tests.
pub fn uniform(n: usize, m: usize, seed: u64) -> Result<Dataset<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
    Dataset::from_rows(rows, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_labels() {
        let d = two_spirals(100, 0.0, 1).unwrap();
        assert_eq!((d.n(), d.m()), (200, 2));
        assert_eq!(flame_like(3).unwrap().n(), 240);
        assert_eq!(jain_like(3).unwrap().n(), 373);
        let labels = two_moons(50, 0.05, 2).unwrap().labels().unwrap().to_vec();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 50);
    }

    #[test]
    fn seeded_generation_repeats() {
        let a = jain_like(9).unwrap();
        let b = jain_like(9).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), jain_like(10).unwrap().values());
    }
}
