//! Independent reference implementations used by the integration tests.
//! Plain arrays on purpose: nothing here shares code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

pub type M4 = [[f64; 4]; 4];
pub type V4 = [f64; 4];

pub fn mat_mul(a: &M4, b: &M4) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &M4) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn add(a: &M4, b: &M4) -> M4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn trace(a: &M4) -> f64 {
    (0..4).map(|i| a[i][i]).sum()
}

pub fn diag(d: [f64; 4]) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        out[i][i] = d[i];
    }
    out
}

/// Constant-velocity transition for a step of `dt`.
pub fn transition(dt: f64) -> M4 {
    let mut a = diag([1.0; 4]);
    a[0][2] = dt;
    a[1][3] = dt;
    a
}

/// Textbook Kalman filter over `[x, y, vx, vy]` observing position.
#[derive(Debug, Clone, Copy)]
pub struct OracleKf {
    pub x: V4,
    pub p: M4,
    pub a: M4,
    pub q: M4,
}

impl OracleKf {
    pub fn predict(&mut self) {
        let mut x = [0.0; 4];
        for i in 0..4 {
            for k in 0..4 {
                x[i] += self.a[i][k] * self.x[k];
            }
        }
        self.x = x;
        self.p = add(&mat_mul(&mat_mul(&self.a, &self.p), &transpose(&self.a)), &self.q);
    }

    /// Position measurement `y` with isotropic noise variance `r`.
    pub fn update(&mut self, y: [f64; 2], r: f64) {
        let p = self.p;
        let s = [[p[0][0] + r, p[0][1]], [p[1][0], p[1][1] + r]];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let s_inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        // K = P Cᵀ S⁻¹, with P Cᵀ the first two columns of P
        let mut k = [[0.0; 2]; 4];
        for i in 0..4 {
            for j in 0..2 {
                k[i][j] = p[i][0] * s_inv[0][j] + p[i][1] * s_inv[1][j];
            }
        }
        let innov = [y[0] - self.x[0], y[1] - self.x[1]];
        for i in 0..4 {
            self.x[i] += k[i][0] * innov[0] + k[i][1] * innov[1];
        }
        // (I − K C) P
        let mut next = p;
        for i in 0..4 {
            for j in 0..4 {
                next[i][j] -= k[i][0] * p[0][j] + k[i][1] * p[1][j];
            }
        }
        self.p = next;
    }

    pub fn update_cov_only(&mut self, r: f64) {
        let x = self.x;
        self.update([x[0], x[1]], r);
        self.x = x;
    }
}

/// Sum over `k = 1..=horizon` of `tr(Aᵏ P₀ Aᵏᵀ + Σ_{i<k} Aⁱ Q Aⁱᵀ)`.
pub fn open_loop_trace_sum(p0: &M4, a: &M4, q: &M4, horizon: usize) -> f64 {
    let mut total = 0.0;
    for k in 1..=horizon {
        let ak = power(a, k);
        let mut p = mat_mul(&mat_mul(&ak, p0), &transpose(&ak));
        for i in 0..k {
            let ai = power(a, i);
            p = add(&p, &mat_mul(&mat_mul(&ai, q), &transpose(&ai)));
        }
        total += trace(&p);
    }
    total
}

pub fn power(a: &M4, n: usize) -> M4 {
    (0..n).fold(diag([1.0; 4]), |acc, _| mat_mul(&acc, a))
}

/// Closed footprint rectangle of a downward camera at `agent`, with full
/// opening angles `h_fov` and `v_fov`.
pub fn inside_rectangle(agent: [f64; 3], target: [f64; 2], h_fov: f64, v_fov: f64) -> bool {
    let half_w = agent[2] * (h_fov / 2.0).tan();
    let half_h = agent[2] * (v_fov / 2.0).tan();
    (target[0] - agent[0]).abs() <= half_w && (target[1] - agent[1]).abs() <= half_h
}

/// Per-axis noise std the planner assumes at altitude `z`.
pub fn ramp_sigma(z: f64, scale: f64, floor: f64, alpha1: f64, alpha2: f64) -> f64 {
    scale * ((z - alpha1) / (alpha2 - alpha1)).max(floor).min(1.0)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
