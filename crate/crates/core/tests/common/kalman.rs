//! Independent Kalman filter on plain arrays, with the textbook
//! covariance update.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamfuse::tracker::{BBox, KalmanParams, KalmanState};

type V7 = [f64; 7];
type M7 = [[f64; 7]; 7];

#[derive(Clone, Copy)]
pub struct RefKf {
    x: V7,
    p: M7,
}

fn mat_mul<const A: usize, const B: usize, const C: usize>(l: &[[f64; B]; A], r: &[[f64; C]; B]) -> [[f64; C]; A] {
    let mut o = [[0.0; C]; A];
    for i in 0..A {
        for j in 0..C {
            o[i][j] = (0..B).map(|k| l[i][k] * r[k][j]).sum();
        }
    }
    o
}

fn transpose<const A: usize, const B: usize>(m: &[[f64; B]; A]) -> [[f64; A]; B] {
    let mut o = [[0.0; A]; B];
    for i in 0..A {
        for j in 0..B {
            o[j][i] = m[i][j];
        }
    }
    o
}

fn inverse4(m: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut a = m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for c in 0..4 {
        let piv = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        inv.swap(c, piv);
        let d = a[c][c];
        for j in 0..4 {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..4 {
            if r != c {
                let f = a[r][c];
                for j in 0..4 {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

impl RefKf {
    pub fn new(b: &BBox) -> Self {
        let mut p = [[0.0; 7]; 7];
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = if i < 4 { 10.0 } else { 1e4 };
        }
        let (cx, cy) = (b.x + b.w / 2.0, b.y + b.h / 2.0);
        RefKf {
            x: [cx, cy, b.w * b.h, b.w / b.h, 0.0, 0.0, 0.0],
            p,
        }
    }

    fn f() -> M7 {
        let mut f = [[0.0; 7]; 7];
        for (i, row) in f.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        f[0][4] = 1.0;
        f[1][5] = 1.0;
        f[2][6] = 1.0;
        f
    }

    pub fn predict(&self) -> Self {
        let mut x = self.x;
        if x[2] + x[6] <= 0.0 {
            x[6] = 0.0;
        }
        let x = [x[0] + x[4], x[1] + x[5], x[2] + x[6], x[3], x[4], x[5], x[6]];
        let f = Self::f();
        let mut p = mat_mul(&mat_mul(&f, &self.p), &transpose(&f));
        let q = [1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4];
        for i in 0..7 {
            p[i][i] += q[i];
        }
        RefKf { x, p }
    }

    pub fn update(&self, b: &BBox) -> Self {
        let z = [b.x + b.w / 2.0, b.y + b.h / 2.0, b.w * b.h, b.w / b.h];
        let r = [1.0, 1.0, 10.0, 10.0];
        // S = P[0..4][0..4] + R, K = P[:, 0..4] S^-1
        let mut s = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                s[i][j] = self.p[i][j] + if i == j { r[i] } else { 0.0 };
            }
        }
        let si = inverse4(s);
        let mut pht = [[0.0; 4]; 7];
        for i in 0..7 {
            for j in 0..4 {
                pht[i][j] = self.p[i][j];
            }
        }
        let k = mat_mul(&pht, &si);
        let y: Vec<f64> = (0..4).map(|i| z[i] - self.x[i]).collect();
        let mut x = self.x;
        for i in 0..7 {
            x[i] += (0..4).map(|j| k[i][j] * y[j]).sum::<f64>();
        }
        let mut p = self.p;
        for i in 0..7 {
            for j in 0..7 {
                p[i][j] -= (0..4).map(|m| k[i][m] * self.p[m][j]).sum::<f64>();
            }
        }
        RefKf { x, p }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0f64).max(a.abs()).max(b.abs())
}

/// First state or covariance entry that differs beyond the tolerance.
pub fn state_mismatch(lib: &KalmanState, r: &RefKf) -> Option<String> {
    for i in 0..7 {
        if !close(lib.x[i], r.x[i]) {
            return Some(format!("x[{i}] {} vs {}", lib.x[i], r.x[i]));
        }
        for j in 0..7 {
            if !close(lib.p[(i, j)], r.p[i][j]) {
                return Some(format!("P[{i}][{j}] {} vs {}", lib.p[(i, j)], r.p[i][j]));
            }
        }
    }
    None
}

/// Why the covariance is not symmetric positive semidefinite, if it is not.
pub fn psd_violation(s: &KalmanState) -> Option<String> {
    let p = s.p;
    let scale = p.abs().max().max(1.0);
    if (p - p.transpose()).abs().max() > 1e-9 * scale {
        return Some("asymmetric covariance".into());
    }
    let eig = SymmetricEigen::new(p).eigenvalues;
    eig.iter().any(|&e| e < -1e-9 * scale).then(|| format!("eigenvalues {eig}"))
}

/// Runs one seeded 50-step constant-velocity sequence through the library
/// filter and the reference, checking agreement and PSD after every step.
pub fn check_sequence(seed: u64, steps: usize) -> Result<(), String> {
    let params = KalmanParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = BBox::new(rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0), rng.gen_range(10.0..100.0), rng.gen_range(10.0..100.0)).unwrap();
    let (vx, vy) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let mut lib = KalmanState::init(&truth, &params);
    let mut reference = RefKf::new(&truth);
    let check = |lib: &KalmanState, reference: &RefKf, what: &str| -> Result<(), String> {
        if let Some(m) = state_mismatch(lib, reference).or_else(|| psd_violation(lib)) {
            return Err(format!("seed {seed} {what}: {m}"));
        }
        Ok(())
    };
    check(&lib, &reference, "init")?;
    for step in 0..steps {
        lib = lib.predict(&params);
        reference = reference.predict();
        check(&lib, &reference, &format!("step {step} predict"))?;
        truth.x += vx;
        truth.y += vy;
        if rng.gen_bool(0.85) {
            let noisy = BBox::new(
                truth.x + rng.gen_range(-1.0..1.0),
                truth.y + rng.gen_range(-1.0..1.0),
                truth.w * rng.gen_range(0.95..1.05),
                truth.h * rng.gen_range(0.95..1.05),
            )
            .unwrap();
            lib = lib.update(&noisy, &params);
            reference = reference.update(&noisy);
            check(&lib, &reference, &format!("step {step} update"))?;
        }
    }
    Ok(())
}

