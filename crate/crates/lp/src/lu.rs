//! Sparse LU factorization of the simplex basis.
//!
//! Left-looking (Gilbert-Peierls) factorization with threshold partial
//! pivoting. Columns are processed sparsest first; among numerically
//! acceptable pivots the row with the fewest basis entries wins. Basis
//! changes between refactorizations are kept as a product-form eta file.

const NONE: usize = usize::MAX;
const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// Sparse column given as parallel index/value vectors (original row indices).
#[derive(Debug, Clone, Default)]
pub(crate) struct SparseColumn {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

/// Basis positions that could not be pivoted, paired with the rows left
/// without a pivot. Replacing each position with the logical column of the
/// matching row gives a nonsingular basis.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    /// step -> original row
    row_perm: Vec<usize>,
    /// step -> basis position
    col_perm: Vec<usize>,
}

impl LuFactors {
    pub fn factorize(m: usize, cols: &[SparseColumn]) -> Result<Self, Singular> {
        assert_eq!(cols.len(), m);
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &i in &c.idx {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].idx.len(), p));

        let mut pinv = vec![NONE; m];
        let mut f = LuFactors {
            m,
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            row_perm: Vec::with_capacity(m),
            col_perm: Vec::with_capacity(m),
        };

        let mut x = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut reach: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular_positions = Vec::new();

        for &pos in &order {
            let col = &cols[pos];
            reach.clear();
            for &start in &col.idx {
                if mark[start] {
                    continue;
                }
                mark[start] = true;
                stack.push((start, 0));
                while let Some(top) = stack.last_mut() {
                    let (r, ptr) = *top;
                    let s = pinv[r];
                    if s != NONE {
                        let begin = f.l_start[s];
                        let end = f.l_start[s + 1];
                        if begin + ptr < end {
                            top.1 += 1;
                            let child = f.l_idx[begin + ptr];
                            if !mark[child] {
                                mark[child] = true;
                                stack.push((child, 0));
                            }
                            continue;
                        }
                    }
                    stack.pop();
                    reach.push(r);
                }
            }
            for (&i, &v) in col.idx.iter().zip(&col.val) {
                x[i] = v;
            }
            // reverse postorder is a topological order of the elimination
            for &r in reach.iter().rev() {
                let s = pinv[r];
                if s == NONE {
                    continue;
                }
                let xr = x[r];
                if xr == 0.0 {
                    continue;
                }
                for e in f.l_start[s]..f.l_start[s + 1] {
                    x[f.l_idx[e]] -= f.l_val[e] * xr;
                }
            }

            let mut amax = 0.0f64;
            for &r in &reach {
                if pinv[r] == NONE {
                    amax = amax.max(x[r].abs());
                }
            }
            if amax <= SINGULAR_TOL {
                singular_positions.push(pos);
                for &r in &reach {
                    x[r] = 0.0;
                    mark[r] = false;
                }
                continue;
            }
            let mut pivot = NONE;
            for &r in &reach {
                if pinv[r] != NONE || x[r].abs() < PIVOT_THRESHOLD * amax {
                    continue;
                }
                if pivot == NONE {
                    pivot = r;
                    continue;
                }
                let better = (row_count[r], -x[r].abs(), r) < (row_count[pivot], -x[pivot].abs(), pivot);
                if better {
                    pivot = r;
                }
            }
            let step = f.col_perm.len();
            let pv = x[pivot];
            for &r in &reach {
                let v = x[r];
                if r != pivot && v.abs() > DROP_TOL {
                    if pinv[r] != NONE {
                        f.u_idx.push(pinv[r]);
                        f.u_val.push(v);
                    } else {
                        f.l_idx.push(r);
                        f.l_val.push(v / pv);
                    }
                }
                x[r] = 0.0;
                mark[r] = false;
            }
            f.u_start.push(f.u_idx.len());
            f.l_start.push(f.l_idx.len());
            f.u_diag.push(pv);
            pinv[pivot] = step;
            f.row_perm.push(pivot);
            f.col_perm.push(pos);
        }

        if !singular_positions.is_empty() {
            let rows = (0..m).filter(|&r| pinv[r] == NONE).collect();
            return Err(Singular {
                positions: singular_positions,
                rows,
            });
        }
        for r in f.l_idx.iter_mut() {
            *r = pinv[*r];
        }
        Ok(f)
    }

    /// Solves `B x = b` in place: `b` indexed by row on entry, by basis
    /// position on exit. `work` must have length m.
    fn solve(&self, b: &mut [f64], work: &mut [f64]) {
        for s in 0..self.m {
            work[s] = b[self.row_perm[s]];
        }
        for s in 0..self.m {
            let ws = work[s];
            if ws == 0.0 {
                continue;
            }
            for e in self.l_start[s]..self.l_start[s + 1] {
                work[self.l_idx[e]] -= self.l_val[e] * ws;
            }
        }
        for k in (0..self.m).rev() {
            if work[k] == 0.0 {
                continue;
            }
            work[k] /= self.u_diag[k];
            let wk = work[k];
            for e in self.u_start[k]..self.u_start[k + 1] {
                work[self.u_idx[e]] -= self.u_val[e] * wk;
            }
        }
        for k in 0..self.m {
            b[self.col_perm[k]] = work[k];
        }
    }

    /// Solves `Bᵀ y = c` in place: `c` indexed by basis position on entry,
    /// by row on exit.
    fn solve_transposed(&self, c: &mut [f64], work: &mut [f64]) {
        for k in 0..self.m {
            work[k] = c[self.col_perm[k]];
        }
        for k in 0..self.m {
            let mut acc = work[k];
            for e in self.u_start[k]..self.u_start[k + 1] {
                acc -= self.u_val[e] * work[self.u_idx[e]];
            }
            work[k] = acc / self.u_diag[k];
        }
        for s in (0..self.m).rev() {
            let mut acc = work[s];
            for e in self.l_start[s]..self.l_start[s + 1] {
                acc -= self.l_val[e] * work[self.l_idx[e]];
            }
            work[s] = acc;
        }
        for s in 0..self.m {
            c[self.row_perm[s]] = work[s];
        }
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

/// LU factors of the last refactorized basis plus the eta file of the
/// pivots performed since.
#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    lu: LuFactors,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

impl BasisFactor {
    pub fn new(m: usize, cols: &[SparseColumn]) -> Result<Self, Singular> {
        Ok(Self {
            lu: LuFactors::factorize(m, cols)?,
            etas: Vec::new(),
            work: vec![0.0; m],
        })
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// `B⁻¹ b`; input indexed by row, output by basis position.
    pub fn ftran(&mut self, b: &mut [f64]) {
        self.lu.solve(b, &mut self.work);
        for eta in &self.etas {
            let xr = b[eta.pos];
            if xr == 0.0 {
                continue;
            }
            let xr = xr / eta.pivot;
            b[eta.pos] = xr;
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                b[i] -= a * xr;
            }
        }
    }

    /// `B⁻ᵀ c`; input indexed by basis position, output by row.
    pub fn btran(&mut self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                acc -= a * c[i];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        self.lu.solve_transposed(c, &mut self.work);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// representation in the current basis is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> Vec<SparseColumn> {
        let m = a.len();
        (0..m)
            .map(|j| {
                let mut c = SparseColumn::default();
                for (i, row) in a.iter().enumerate() {
                    if row[j] != 0.0 {
                        c.idx.push(i);
                        c.val.push(row[j]);
                    }
                }
                c
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    #[test]
    fn solves_small_system_both_ways() {
        let a = vec![
            vec![4.0, 0.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.0, 0.0],
            vec![0.0, 2.0, 5.0, 1.0],
            vec![0.0, 0.0, 1.0, 2.0],
        ];
        let mut f = BasisFactor::new(4, &dense_cols(&a)).unwrap();
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let mut b = matvec(&a, &x);
        f.ftran(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-12);
        }
        let at: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| a[j][i]).collect()).collect();
        let mut c = matvec(&at, &x);
        f.btran(&mut c);
        for (p, q) in c.iter().zip(&x) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_update_matches_refactorization() {
        let mut a = vec![
            vec![2.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 3.0],
        ];
        let mut f = BasisFactor::new(3, &dense_cols(&a)).unwrap();
        let newcol = [1.0, 2.0, -1.0];
        let mut alpha = newcol.to_vec();
        f.ftran(&mut alpha);
        f.update(1, &alpha);
        for (i, row) in a.iter_mut().enumerate() {
            row[1] = newcol[i];
        }
        let x = vec![0.3, -1.0, 2.0];
        let mut b = matvec(&a, &x);
        f.ftran(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-12);
        }
        let at: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| a[j][i]).collect()).collect();
        let mut c = matvec(&at, &x);
        f.btran(&mut c);
        for (p, q) in c.iter().zip(&x) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_columns() {
        let a = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let err = LuFactors::factorize(3, &dense_cols(&a)).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
