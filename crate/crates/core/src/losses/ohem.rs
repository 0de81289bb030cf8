/// `ceil(keep * n)`, at least one when `n > 0`.
pub fn retained_count(n: usize, keep: f64) -> usize {
    if n == 0 {
        return 0;
    }
    // The small offset keeps exact products such as (2/3) * 3 from rounding up.
    let m = (keep * n as f64 - 1e-9).ceil();
    (m.max(1.0) as usize).min(n)
}

/// Indices of the `ceil(keep * n)` largest residuals, returned in ascending
/// index order. Ties go to the smaller index.
pub fn ohem_filter(residuals: &[f64], keep: f64) -> Vec<usize> {
    let m = retained_count(residuals.len(), keep);
    if m == residuals.len() {
        return (0..m).collect();
    }
    let mut order: Vec<usize> = (0..residuals.len()).collect();
    order.sort_by(|&a, &b| residuals[b].total_cmp(&residuals[a]).then(a.cmp(&b)));
    let mut kept = order[..m].to_vec();
    kept.sort_unstable();
    kept
}
