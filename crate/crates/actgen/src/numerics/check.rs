//! Central finite-difference gradient checking. The oracle only ever
//! calls the forward path, so it stays independent of the tape's
//! backward closures it is used to verify.

/// Outcome of one gradient check: worst relative error across all
/// perturbed elements.
#[derive(Debug)]
pub struct CheckReport {
    pub max_rel_err: f64,
    pub worst: Option<(usize, usize)>, // (leaf index, element index)
}

/// Relative error with a unit floor, so tiny true gradients compare
/// absolutely instead of blowing up.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1.0)
}

/// Compare analytic gradients against central differences.
///
/// `forward` maps the full set of leaf buffers to the scalar output;
/// `analytic[i]` is the claimed gradient for `leaves[i]`.
pub fn finite_diff_check<F>(
    forward: F,
    leaves: &[Vec<f64>],
    analytic: &[Vec<f64>],
    h: f64,
) -> CheckReport
where
    F: Fn(&[Vec<f64>]) -> f64,
{
    assert_eq!(leaves.len(), analytic.len());
    let mut work: Vec<Vec<f64>> = leaves.to_vec();
    let mut max_rel_err: f64 = 0.0;
    let mut worst = None;
    for li in 0..leaves.len() {
        assert_eq!(leaves[li].len(), analytic[li].len(), "leaf {li} size");
        for ei in 0..leaves[li].len() {
            let orig = work[li][ei];
            work[li][ei] = orig + h;
            let f_plus = forward(&work);
            work[li][ei] = orig - h;
            let f_minus = forward(&work);
            work[li][ei] = orig;
            let numeric = (f_plus - f_minus) / (2.0 * h);
            let e = rel_err(analytic[li][ei], numeric);
            if e > max_rel_err {
                max_rel_err = e;
                worst = Some((li, ei));
            }
        }
    }
    CheckReport { max_rel_err, worst }
}
