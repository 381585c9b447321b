//! Dense linear assignment by shortest augmenting paths (Jonker–Volgenant
//! style, with dual potentials and Dijkstra on reduced costs).

/// Minimum-cost perfect matching of an `n × n` cost function. Returns
/// `col_for_row`.
///
/// Costs are evaluated on demand, each `(row, col)` at most once per
/// augmentation, so no `n²` matrix is stored.
pub fn solve(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut col_for_row = vec![NONE; n];
    let mut row_for_col = vec![NONE; n];
    let mut shortest = vec![f64::INFINITY; n];
    let mut path = vec![NONE; n];
    let mut scanned_rows: Vec<usize> = Vec::with_capacity(n);
    let mut scanned_cols: Vec<usize> = Vec::with_capacity(n);
    let mut remaining: Vec<usize> = Vec::with_capacity(n);

    // Row reduction: `u_i = min_j c_ij` keeps every reduced cost
    // nonnegative with `v = 0`, and a row whose minimizing column is still
    // free takes it.
    for i in 0..n {
        let (mut best, mut arg) = (f64::INFINITY, 0);
        for j in 0..n {
            let c = cost(i, j);
            if c < best {
                best = c;
                arg = j;
            }
        }
        u[i] = best;
        if row_for_col[arg] == NONE {
            col_for_row[i] = arg;
            row_for_col[arg] = i;
        }
    }

    for start in 0..n {
        if col_for_row[start] != NONE {
            continue;
        }
        shortest.iter_mut().for_each(|s| *s = f64::INFINITY);
        scanned_rows.clear();
        scanned_cols.clear();
        remaining.clear();
        remaining.extend((0..n).rev());
        let mut min_val = 0.0;
        let mut i = start;
        let sink;
        loop {
            scanned_rows.push(i);
            let mut lowest = f64::INFINITY;
            let mut best = NONE;
            let ui = u[i];
            for (pos, &j) in remaining.iter().enumerate() {
                let r = min_val + cost(i, j) - ui - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row_for_col[j] == NONE) {
                    lowest = shortest[j];
                    best = pos;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(best);
            scanned_cols.push(j);
            if row_for_col[j] == NONE {
                sink = j;
                break;
            }
            i = row_for_col[j];
        }
        u[start] += min_val;
        for &r in &scanned_rows {
            if r != start {
                u[r] += min_val - shortest[col_for_row[r]];
            }
        }
        for &c in &scanned_cols {
            v[c] -= min_val - shortest[c];
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row_for_col[j] = r;
            let prev = std::mem::replace(&mut col_for_row[r], j);
            if r == start {
                break;
            }
            j = prev;
        }
    }
    col_for_row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_problem() {
        let c = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = solve(3, |i, j| c[i][j]);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn result_is_a_permutation() {
        let n = 50;
        let a = solve(n, |i, j| ((i * 7 + j * 13) % 17) as f64);
        let mut seen = vec![false; n];
        for &j in &a {
            assert!(!seen[j]);
            seen[j] = true;
        }
    }
}
