//! Tridiagonal solves shared by the descent preconditioner and the parabolic stepper.

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
/// `sub[i]` couples row i to i-1 (sub[0] unused), `sup[i]` couples row i to i+1.
/// On return `rhs` holds the solution. The matrix must be diagonally dominant or SPD.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}
