use super::{hungarian, CostMatrix, Matching};

const UNASSIGNED: usize = usize::MAX;

/// Approximate minimum-cost perfect matching by forward auction.
///
/// The result satisfies `cost <= optimum * (1 + rel_tol)`. If ε underflows
/// before the bound is certified (near-zero optimum), the exact solver is
/// used instead.
pub fn auction(cost: &CostMatrix, rel_tol: f64) -> Matching {
    let n = cost.size();
    if n <= 1 {
        return hungarian(cost);
    }
    let scale = cost.max_abs();
    if scale == 0.0 {
        return hungarian(cost);
    }
    let floor = scale * 1e-14;
    let mut prices = vec![0.0f64; n];
    let mut eps = scale / 4.0;
    loop {
        let row_to_col = auction_round(cost, &mut prices, eps);
        let total = cost.total(&row_to_col);
        // Auction optimality: total <= optimum + n·eps.
        let gap = n as f64 * eps;
        let lower = total - gap;
        if total == 0.0 || (lower > 0.0 && gap <= rel_tol * lower) {
            return Matching {
                row_to_col,
                cost: total,
            };
        }
        if eps <= floor {
            return hungarian(cost);
        }
        eps = (eps / 5.0).max(floor);
    }
}

/// One ε phase of a Gauss–Seidel auction; prices persist across phases.
fn auction_round(cost: &CostMatrix, prices: &mut [f64], eps: f64) -> Vec<usize> {
    let n = cost.size();
    let mut row_to_col = vec![UNASSIGNED; n];
    let mut col_to_row = vec![UNASSIGNED; n];
    let mut queue: Vec<usize> = (0..n).rev().collect();
    while let Some(row) = queue.pop() {
        // Benefit of column j for this row is -(cost + price).
        let mut best_col = 0;
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for (j, &price) in prices.iter().enumerate() {
            let value = -cost.get(row, j) - price;
            if value > best {
                second = best;
                best = value;
                best_col = j;
            } else if value > second {
                second = value;
            }
        }
        prices[best_col] += best - second + eps;
        let previous = col_to_row[best_col];
        if previous != UNASSIGNED {
            row_to_col[previous] = UNASSIGNED;
            queue.push(previous);
        }
        col_to_row[best_col] = row;
        row_to_col[row] = best_col;
    }
    row_to_col
}
