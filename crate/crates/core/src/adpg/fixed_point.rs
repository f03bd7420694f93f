/// Is `(rates, inflations)` a fixed point of the reward for flows sharing one
/// bottleneck of capacity `link_bps`? Either every flow runs at line rate with
/// `inflation * sqrt(rate) < target`, or every flow sits on the target and
/// together they fill the link. `tol` is relative.
pub fn fixed_point_check(rates_bps: &[f64], link_bps: f64, inflations: &[f64], target: f64, tol: f64) -> bool {
    let n = rates_bps.len();
    if n == 0 || inflations.len() != n || link_bps.is_nan() || link_bps <= 0.0 || target.is_nan() || target <= 0.0 {
        return false;
    }
    let norm = |r: f64| r / link_bps;
    let lhs = |i: usize| inflations[i] * libm::sqrt(norm(rates_bps[i]).max(0.0));

    let at_line_rate = (0..n).all(|i| (norm(rates_bps[i]) - 1.0).abs() <= tol && lhs(i) < target);
    if at_line_rate {
        return true;
    }
    let on_target = (0..n).all(|i| (lhs(i) - target).abs() <= tol * target);
    let total: f64 = rates_bps.iter().map(|&r| norm(r)).sum();
    on_target && (total - 1.0).abs() <= tol * n as f64
}
