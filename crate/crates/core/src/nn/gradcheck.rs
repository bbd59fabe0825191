use super::Scalar;

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Worst relative error between `analytic` and central differences of `f`
/// at `x`, over `coords` (all coordinates when `None`).
///
/// The step actually taken is `(x + ε) − (x − ε)` as represented in `T`,
/// which matters in single precision.
pub fn finite_diff_check<T: Scalar>(
    mut f: impl FnMut(&[T]) -> f64,
    x: &[T],
    analytic: &[T],
    epsilon: f64,
    coords: Option<&[usize]>,
) -> f64 {
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..x.len()).collect();
            &all
        }
    };
    let mut probe = x.to_vec();
    let eps = T::of(epsilon);
    coords
        .iter()
        .map(|&i| {
            let orig = probe[i];
            let (up, down) = (orig + eps, orig - eps);
            probe[i] = up;
            let f_up = f(&probe);
            probe[i] = down;
            let f_down = f(&probe);
            probe[i] = orig;
            let numeric = (f_up - f_down) / (up - down).f64();
            relative_error(analytic[i].f64(), numeric)
        })
        .fold(0.0, f64::max)
}

/// [`finite_diff_check`] for piecewise-linear `f` (ReLU, max pooling, hinge).
///
/// A central difference whose interval straddles a kink measures neither
/// one-sided slope. Per coordinate the step starts at `epsilon` and is halved,
/// at most `max_halvings` times, until the forward and backward slopes agree
/// within `slope_tol` relative. With a single kink on one side the central
/// difference is off by at most half that disagreement. The central
/// difference at the step with the smallest disagreement is used, so keep
/// `max_halvings` small enough that the last step is well above roundoff.
pub fn finite_diff_check_piecewise<T: Scalar>(
    mut f: impl FnMut(&[T]) -> f64,
    x: &[T],
    analytic: &[T],
    epsilon: f64,
    coords: Option<&[usize]>,
    max_halvings: u32,
    slope_tol: f64,
) -> f64 {
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..x.len()).collect();
            &all
        }
    };
    let mut probe = x.to_vec();
    let f_mid = f(&probe);
    coords
        .iter()
        .map(|&i| {
            let orig = probe[i];
            let mut eps = epsilon;
            // (slope disagreement, central difference)
            let mut best = (f64::INFINITY, 0.0);
            for _ in 0..=max_halvings {
                let (up, down) = (orig + T::of(eps), orig - T::of(eps));
                probe[i] = up;
                let f_up = f(&probe);
                probe[i] = down;
                let f_down = f(&probe);
                probe[i] = orig;
                let fwd = (f_up - f_mid) / (up - orig).f64();
                let bwd = (f_mid - f_down) / (orig - down).f64();
                let gap = (fwd - bwd).abs();
                if gap < best.0 {
                    best = (gap, (f_up - f_down) / (up - down).f64());
                }
                if relative_error(fwd, bwd) <= slope_tol {
                    break;
                }
                eps /= 2.0;
            }
            relative_error(analytic[i].f64(), best.1)
        })
        .fold(0.0, f64::max)
}
