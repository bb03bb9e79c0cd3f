//! Dense primal simplex for the packing relaxation of a WDP instance.
//!
//! max Σ v_c x_c  s.t.  Σ_{c ∋ i} x_c <= quota per item,
//! Σ_{c of bidder t} x_c <= 1 per bidder, x >= 0.
//! All right-hand sides are non-negative, so the slack basis is feasible
//! from the start. Only the item duals are returned.

const EPS: f64 = 1e-10;

/// One LP column: bundle mask, bidder level and value.
pub(super) struct Column {
    pub mask: u64,
    pub level: usize,
    pub value: f64,
}

/// Optimal LP solution: item duals indexed by item and the primal value of
/// every column.
pub(super) struct LpSolution {
    pub duals: [f64; 64],
    pub primal: Vec<f64>,
}

/// Solves the relaxation, or returns `None` if the pivot budget runs out.
///
/// The right-hand sides are perturbed to avoid stalling on degenerate
/// vertices; afterwards the true right-hand sides are restored and any
/// basic variable left negative is repaired with dual simplex pivots.
pub(super) fn solve_packing_lp(cols: &[Column], n_levels: usize, items: u64, quota: usize) -> Option<LpSolution> {
    let item_ids: Vec<usize> = (0..64).filter(|&i| items >> i & 1 == 1).collect();
    let mut row_of_item = [usize::MAX; 64];
    for (r, &i) in item_ids.iter().enumerate() {
        row_of_item[i] = r;
    }
    let n_item_rows = item_ids.len();
    let m = n_item_rows + n_levels;
    let n = cols.len();
    let w = n + m + 1;
    let rhs = w - 1;
    let b: Vec<f64> = (0..m).map(|r| if r < n_item_rows { quota as f64 } else { 1.0 }).collect();
    let mut t = vec![0.0f64; m * w];
    for (j, c) in cols.iter().enumerate() {
        let mut mm = c.mask;
        while mm != 0 {
            let i = mm.trailing_zeros() as usize;
            mm &= mm - 1;
            t[row_of_item[i] * w + j] = 1.0;
        }
        t[(n_item_rows + c.level) * w + j] = 1.0;
    }
    for r in 0..m {
        t[r * w + n + r] = 1.0;
        // distinct small offsets (golden-ratio sequence)
        let frac = (r as f64 * 0.618_033_988_749_895).fract();
        t[r * w + rhs] = b[r] + 1e-7 * (1.0 + frac);
    }
    let mut obj = vec![0.0f64; w];
    for (j, c) in cols.iter().enumerate() {
        obj[j] = -c.value;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut budget = 50 * (m + n).max(100);

    // primal phase
    loop {
        budget = budget.checked_sub(1)?;
        let (e, v) = (0..n + m).map(|j| (j, obj[j])).min_by(|a, b| a.1.total_cmp(&b.1))?;
        if v >= -EPS {
            break;
        }
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = t[r * w + e];
            if a > EPS {
                let ratio = t[r * w + rhs] / a;
                if leave.is_none_or(|(lr, lratio)| ratio < lratio || (ratio == lratio && basis[r] < basis[lr])) {
                    leave = Some((r, ratio));
                }
            }
        }
        // unbounded cannot happen with bounded packing rows
        let (r, _) = leave?;
        pivot(&mut t, &mut obj, w, m, r, e);
        basis[r] = e;
    }

    // restore the true right-hand side: x_B = B^-1 b, with B^-1 in the
    // slack columns
    for r in 0..m {
        let row = &t[r * w..(r + 1) * w];
        let x: f64 = (0..m).map(|k| row[n + k] * b[k]).sum();
        t[r * w + rhs] = x;
    }

    // dual phase
    while let Some(r) = (0..m).filter(|&r| t[r * w + rhs] < -1e-12).min_by(|&a, &b| t[a * w + rhs].total_cmp(&t[b * w + rhs])) {
        budget = budget.checked_sub(1)?;
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..n + m {
            let a = t[r * w + j];
            if a < -EPS {
                let ratio = obj[j] / -a;
                if enter.is_none_or(|(_, best)| ratio < best) {
                    enter = Some((j, ratio));
                }
            }
        }
        // primal infeasible cannot happen: zero is feasible
        let (e, _) = enter?;
        pivot(&mut t, &mut obj, w, m, r, e);
        basis[r] = e;
    }

    let mut duals = [0.0; 64];
    for (r, &i) in item_ids.iter().enumerate() {
        duals[i] = obj[n + r].max(0.0);
    }
    let mut primal = vec![0.0; n];
    for (r, &j) in basis.iter().enumerate() {
        if j < n {
            primal[j] = t[r * w + rhs].max(0.0);
        }
    }
    Some(LpSolution { duals, primal })
}

fn pivot(t: &mut [f64], obj: &mut [f64], w: usize, m: usize, r: usize, e: usize) {
    let a = t[r * w + e];
    let (before, rest) = t.split_at_mut(r * w);
    let (prow, after) = rest.split_at_mut(w);
    for x in prow.iter_mut() {
        *x /= a;
    }
    prow[e] = 1.0;
    let nz: Vec<usize> = (0..w).filter(|&j| prow[j] != 0.0).collect();
    let eliminate = |row: &mut [f64]| {
        let f = row[e];
        if f != 0.0 {
            for &j in &nz {
                row[j] -= f * prow[j];
            }
            row[e] = 0.0;
        }
    };
    for row in before.chunks_exact_mut(w) {
        eliminate(row);
    }
    for row in after.chunks_exact_mut(w).take(m - r - 1) {
        eliminate(row);
    }
    eliminate(obj);
}
