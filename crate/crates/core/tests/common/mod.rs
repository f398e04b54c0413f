//! Reference implementations used as test oracles. Deliberately naive and
//! independent of the library's internals: plain `Vec` matrices, exhaustive
//! search, quadratic loops.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn eye(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

pub fn col(v: &[f64]) -> Mat {
    v.iter().map(|x| vec![*x]).collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let d = m[c][c];
        assert!(d.abs() > 1e-300, "singular matrix");
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn diag_sq(std: &[f64]) -> Mat {
    let mut m = zeros(std.len(), std.len());
    for (i, s) in std.iter().enumerate() {
        m[i][i] = s * s;
    }
    m
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut m = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// Constant-velocity Kalman filter over (cx, cy, a, h, vcx, vcy, va, vh)
/// with height-proportional noise, written out longhand.
pub mod kalman {
    use super::*;

    pub const WP: f64 = 1.0 / 20.0;
    pub const WV: f64 = 1.0 / 160.0;

    #[derive(Clone, Debug)]
    pub struct State {
        pub x: Vec<f64>,
        pub p: Mat,
    }

    pub fn initiate(z: [f64; 4]) -> State {
        let h = z[3];
        let mut x = z.to_vec();
        x.extend([0.0; 4]);
        let p = diag_sq(&[
            2.0 * WP * h,
            2.0 * WP * h,
            1e-2,
            2.0 * WP * h,
            10.0 * WV * h,
            10.0 * WV * h,
            1e-5,
            10.0 * WV * h,
        ]);
        State { x, p }
    }

    fn transition() -> Mat {
        let mut f = eye(8);
        for i in 0..4 {
            f[i][i + 4] = 1.0;
        }
        f
    }

    fn observation() -> Mat {
        let mut h = zeros(4, 8);
        for i in 0..4 {
            h[i][i] = 1.0;
        }
        h
    }

    pub fn predict(s: &State) -> State {
        let h = s.x[3];
        let q = diag_sq(&[WP * h, WP * h, 1e-2, WP * h, WV * h, WV * h, 1e-5, WV * h]);
        let f = transition();
        let x = matmul(&f, &col(&s.x)).into_iter().map(|r| r[0]).collect();
        let p = add(&matmul(&matmul(&f, &s.p), &transpose(&f)), &q);
        State { x, p }
    }

    pub fn update(s: &State, z: [f64; 4]) -> State {
        let hgt = s.x[3];
        let r = diag_sq(&[WP * hgt, WP * hgt, 1e-1, WP * hgt]);
        let h = observation();
        let ht = transpose(&h);
        let s_mat = add(&matmul(&matmul(&h, &s.p), &ht), &r);
        let k = matmul(&matmul(&s.p, &ht), &inverse(&s_mat));
        let hx = matmul(&h, &col(&s.x));
        let innov: Vec<f64> = z.iter().zip(&hx).map(|(a, b)| a - b[0]).collect();
        let dx = matmul(&k, &col(&innov));
        let x = s.x.iter().zip(&dx).map(|(a, b)| a + b[0]).collect();
        let p = matmul(&sub(&eye(8), &matmul(&k, &h)), &s.p);
        State { x, p }
    }
}

/// Exhaustive optimal assignment: most finite pairs first, then least total
/// cost. Returns `(pairs, total)`.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> (usize, f64) {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, n: usize, c: f64, best: &mut (usize, f64)) {
        if row == cost.len() {
            if n > best.0 || (n == best.0 && c < best.1) {
                *best = (n, c);
            }
            return;
        }
        go(cost, row + 1, used, n, c, best);
        for j in 0..used.len() {
            if !used[j] && cost[row][j].is_finite() {
                used[j] = true;
                go(cost, row + 1, used, n + 1, c + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    let mut best = (0, 0.0);
    go(cost, 0, &mut vec![false; cols], 0, 0.0, &mut best);
    best
}

pub fn ref_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let iw = ((a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0])).max(0.0);
    let ih = ((a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let union = a[2] * a[3] + b[2] * b[3] - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Quadratic greedy suppression. Ties in score go to the lower index.
pub fn ref_nms(boxes: &[[f64; 4]], scores: &[f64], thr: f64) -> Vec<usize> {
    let mut alive = vec![true; boxes.len()];
    let mut kept = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in 0..boxes.len() {
            if alive[i] && best.map_or(true, |b| scores[i] > scores[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        alive[b] = false;
        kept.push(b);
        for i in 0..boxes.len() {
            if alive[i] && ref_iou(boxes[b], boxes[i]) > thr {
                alive[i] = false;
            }
        }
    }
    kept
}
