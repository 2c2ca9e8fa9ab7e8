//! Central finite differences, used as an independent oracle for the
//! analytic gradients. Nothing here touches the compute graph; `f` is any
//! function of the parameter values.

use super::tensor::{frobenius_norm, Matrix};

/// Norms below this are treated as equal to it when forming a relative
/// error, so two vanishing gradients compare as equal.
pub const NORM_FLOOR: f64 = 1e-7;

/// Numerical gradient of `f` with respect to every entry of every matrix
/// in `params`.
pub fn central_differences<F>(params: &[Matrix], step: f64, mut f: F) -> Vec<Matrix>
where
    F: FnMut(&[Matrix]) -> f64,
{
    let mut work: Vec<Matrix> = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let mut grad = Matrix::zeros(params[p].dim());
        let shape = params[p].dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let orig = work[p][[r, c]];
                work[p][[r, c]] = orig + step;
                let plus = f(&work);
                work[p][[r, c]] = orig - step;
                let minus = f(&work);
                work[p][[r, c]] = orig;
                grad[[r, c]] = (plus - minus) / (2.0 * step);
            }
        }
        out.push(grad);
    }
    out
}

/// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖, NORM_FLOOR)`.
pub fn relative_error(analytic: &Matrix, numeric: &Matrix) -> f64 {
    let diff = frobenius_norm(&(analytic - numeric));
    let scale = frobenius_norm(analytic)
        .max(frobenius_norm(numeric))
        .max(NORM_FLOOR);
    diff / scale
}
