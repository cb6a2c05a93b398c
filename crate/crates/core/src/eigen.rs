//! Cyclic Jacobi eigensolver for real symmetric 3×3 matrices.

pub type Mat3 = [[f64; 3]; 3];

/// Eigen-decomposition with eigenvalues ascending; `vectors[k]` is the unit
/// eigenvector belonging to `values[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    pub values: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const MAX_SWEEPS: usize = 64;

fn off_diagonal_norm(a: &Mat3) -> f64 {
    (2.0 * (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2))).sqrt()
}

pub fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Diagonalizes `m`, which must be symmetric (only the upper triangle is
/// read).
pub fn sym_eigen3(m: &Mat3) -> SymEigen3 {
    let mut a = *m;
    for (i, j) in [(1, 0), (2, 0), (2, 1)] {
        a[i][j] = a[j][i];
    }
    // columns of v accumulate the rotations
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = frobenius(&a);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= 1e-18 * scale {
            break;
        }
        for &(p, q) in &PAIRS {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];

            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (k, &col) in order.iter().enumerate() {
        values[k] = a[col][col];
        for row in 0..3 {
            vectors[k][row] = v[row][col];
        }
    }
    SymEigen3 { values, vectors }
}

pub fn mat_vec(m: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..3 {
        y[i] = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2];
    }
    y
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &Mat3, e: &SymEigen3, k: usize) -> f64 {
        let hv = mat_vec(m, &e.vectors[k]);
        hv.iter()
            .zip(e.vectors[k].iter())
            .map(|(a, b)| (a - e.values[k] * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn diagonal_matrix_is_sorted() {
        let m = [[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let e = sym_eigen3(&m);
        assert_eq!(e.values, [-1.0, 2.0, 3.0]);
        assert_eq!(e.vectors[0], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn symmetric_resonance_has_dark_state() {
        let g = 2.0;
        let m = [[0.0, g, g], [g, 0.0, 0.0], [g, 0.0, 0.0]];
        let e = sym_eigen3(&m);
        let s = std::f64::consts::SQRT_2 * g;
        assert!((e.values[0] + s).abs() < 1e-14);
        assert!(e.values[1].abs() < 1e-14);
        assert!((e.values[2] - s).abs() < 1e-14);
        // dark state has no cavity component
        assert!(e.vectors[1][0].abs() < 1e-14);
    }

    #[test]
    fn residuals_and_orthonormality() {
        let m = [[1.3, -0.7, 2.1], [-0.7, 5.0, 0.4], [2.1, 0.4, -3.2]];
        let e = sym_eigen3(&m);
        let norm = frobenius(&m);
        for k in 0..3 {
            assert!(residual(&m, &e, k) <= 1e-13 * norm);
            for l in 0..3 {
                let d = dot(&e.vectors[k], &e.vectors[l]);
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-14);
            }
        }
        let trace = m[0][0] + m[1][1] + m[2][2];
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-13 * norm);
    }
}
