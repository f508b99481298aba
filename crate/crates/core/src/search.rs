//! One-dimensional maximization on a closed interval: a uniform grid scan
//! followed by golden-section refinement around the best grid point.
//!
//! The objective returns `None` where the point is infeasible; those points
//! rank below every feasible one. Ties keep the smaller abscissa.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub argmax: f64,
    pub value: f64,
    pub evaluations: usize,
    pub golden_iterations: usize,
}

fn better(candidate: Option<f64>, incumbent: Option<f64>) -> bool {
    match (candidate, incumbent) {
        (Some(c), Some(i)) => c > i,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Points `lo + i (hi - lo) / (points - 1)` for `i in 0..points`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    (0..points).map(move |i| if i + 1 == points && points > 1 { hi } else { lo + step * i as f64 })
}

/// Maximizes `f` over `[lo, hi]`. Returns `None` if no grid point is feasible.
pub fn grid_golden_maximize<F>(mut f: F, lo: f64, hi: f64, grid_points: usize, tol: f64) -> Option<SearchOutcome>
where
    F: FnMut(f64) -> Option<f64>,
{
    assert!(grid_points >= 2 && lo <= hi);
    let grid: Vec<f64> = uniform_grid(lo, hi, grid_points).collect();
    let mut evaluations = 0;
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        evaluations += 1;
        if better(v, best.map(|b| b.1)) {
            best = Some((i, v.unwrap()));
        }
    }
    let (i, grid_value) = best?;

    let mut a = grid[i.saturating_sub(1)];
    let mut b = grid[(i + 1).min(grid_points - 1)];
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    evaluations += 2;
    let mut golden_iterations = 0;
    while b - a > tol {
        golden_iterations += 1;
        if better(f2, f1) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        evaluations += 1;
    }
    let (x_ref, f_ref) = if better(f2, f1) { (x2, f2) } else { (x1, f1) };

    let (argmax, value) = match f_ref {
        Some(v) if v > grid_value => (x_ref, v),
        _ => (grid[i], grid_value),
    };
    Some(SearchOutcome { argmax, value, evaluations, golden_iterations })
}
