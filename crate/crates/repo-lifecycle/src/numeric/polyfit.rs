use crate::error::{Error, Result};

/// Least-squares quadratic `y = c0 + c1*x + c2*x^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
}

impl QuadraticFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x + self.c2 * x * x
    }
}

/// Fit a quadratic by ordinary least squares.
///
/// The normal equations are formed on the centered regressor `x - mean(x)`
/// before squaring; cumulative-engagement regressors span many orders of
/// magnitude and the raw moments `sum(x^4)` are badly conditioned otherwise.
/// The coefficients are mapped back to the uncentered parameterization.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<QuadraticFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return Err(Error::DegenerateRegression(format!(
            "need at least 3 points for a quadratic fit, got {n}"
        )));
    }
    let c = x.iter().sum::<f64>() / n as f64;
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let z = xi - c;
        let z2 = z * z;
        s1 += z;
        s2 += z2;
        s3 += z2 * z;
        s4 += z2 * z2;
        t0 += yi;
        t1 += z * yi;
        t2 += z2 * yi;
    }
    let a = [[n as f64, s1, s2], [s1, s2, s3], [s2, s3, s4]];
    let b = solve3(a, [t0, t1, t2]).ok_or_else(|| {
        Error::DegenerateRegression("design matrix is singular (regressor has no spread)".into())
    })?;
    // un-center: b0 + b1 (x-c) + b2 (x-c)^2
    let c2 = b[2];
    let c1 = b[1] - 2.0 * b[2] * c;
    let c0 = b[0] - b[1] * c + b[2] * c * c;
    let fit = QuadraticFit {
        c0,
        c1,
        c2,
        r_squared: 0.0,
    };
    let mean_y = t0 / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        ss_res += (yi - fit.eval(xi)).powi(2);
        ss_tot += (yi - mean_y).powi(2);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(QuadraticFit { r_squared, ..fit })
}

/// Solve a 3x3 system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot is negligible relative to the matrix scale.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    let mut scale = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][j];
            scale = scale.max(a[i][j].abs());
        }
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot_row);
        if m[col][col].abs() <= scale * 1e-13 {
            return None;
        }
        let pivot = m[col];
        for row in &mut m[col + 1..] {
            let f = row[col] / pivot[col];
            for (rk, pk) in row[col..].iter_mut().zip(&pivot[col..]) {
                *rk -= f * pk;
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for j in i + 1..3 {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
