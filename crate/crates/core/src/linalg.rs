//! Small dense 4x4 helpers: pivoted determinants and linear solves.

// elimination kernels index two rows of the same matrix at once
#![allow(clippy::needless_range_loop)]

/// Determinant via Gaussian elimination with partial pivoting.
pub(crate) fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Solves `a x = b` with partial pivoting. `None` when a pivot vanishes.
pub(crate) fn solve4(m: &[[f64; 4]; 4], b: &[f64; 4]) -> Option<[f64; 4]> {
    let mut a = [[0.0; 5]; 4];
    for i in 0..4 {
        a[i][..4].copy_from_slice(&m[i]);
        a[i][4] = b[i];
    }
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(piv, col);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let mut acc = a[row][4];
        for k in row + 1..4 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Exact integer determinant by cofactor expansion. Entries stay tiny here
/// (corner matrices have entries in {-1, 0, 1}), so i64 cannot overflow.
pub(crate) fn det4_exact(m: &[[i64; 4]; 4]) -> i64 {
    fn det3(m: &[[i64; 3]; 3]) -> i64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
    let mut total = 0;
    for j in 0..4 {
        let mut minor = [[0i64; 3]; 3];
        for (mi, row) in m.iter().skip(1).enumerate() {
            let mut mj = 0;
            for (k, &v) in row.iter().enumerate() {
                if k != j {
                    minor[mi][mj] = v;
                    mj += 1;
                }
            }
        }
        let sign = if j % 2 == 0 { 1 } else { -1 };
        total += sign * m[0][j] * det3(&minor);
    }
    total
}
