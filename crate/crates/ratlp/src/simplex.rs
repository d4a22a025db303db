use num_traits::{One, Signed, Zero};

use crate::{LowerBound, LpSolution, LpStatus, RationalLp, Relation, Rational, Sense};

/// Sparse row: `(column, value)` sorted by column, no explicit zeros.
type SparseRow = Vec<(usize, Rational)>;

fn lookup(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|i| &row[i].1)
}

/// `target -= factor * source`, both sorted.
fn axpy(target: &SparseRow, factor: &Rational, source: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < source.len() {
        let tc = target.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let sc = source.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        if tc < sc {
            out.push(target[i].clone());
            i += 1;
        } else if sc < tc {
            out.push((sc, -(factor * &source[j].1)));
            j += 1;
        } else {
            let v = &target[i].1 - factor * &source[j].1;
            if !v.is_zero() {
                out.push((tc, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    /// Reduced costs `c_j - c_B B^-1 A_j` of the current phase objective (maximized).
    reduced: Vec<Rational>,
    value: Rational,
    enabled: Vec<bool>,
    pivots: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, p: usize, q: usize) {
        let piv = lookup(&self.rows[p], q).expect("pivot on zero entry").clone();
        if !piv.is_one() {
            let inv = piv.recip();
            for (_, v) in self.rows[p].iter_mut() {
                *v *= &inv;
            }
            self.rhs[p] *= &inv;
        }
        let prow = std::mem::take(&mut self.rows[p]);
        let prhs = self.rhs[p].clone();
        for i in 0..self.rows.len() {
            if i == p {
                continue;
            }
            if let Some(f) = lookup(&self.rows[i], q).cloned() {
                self.rows[i] = axpy(&self.rows[i], &f, &prow);
                self.rhs[i] -= &f * &prhs;
            }
        }
        let dq = self.reduced[q].clone();
        if !dq.is_zero() {
            for (j, v) in &prow {
                self.reduced[*j] -= &dq * v;
            }
            self.value += &dq * &prhs;
        }
        self.rows[p] = prow;
        self.basis[p] = q;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving basic variable on ties.
    fn run(&mut self) -> PhaseOutcome {
        loop {
            let entering = (0..self.reduced.len()).find(|&j| self.enabled[j] && self.reduced[j].is_positive());
            let Some(q) = entering else {
                return PhaseOutcome::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let Some(a) = lookup(&self.rows[i], q) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((p, _)) => self.pivot(p, q),
                None => return PhaseOutcome::Unbounded,
            }
        }
    }

    fn set_objective(&mut self, costs: &[Rational]) {
        self.reduced = costs.to_vec();
        self.value = Rational::zero();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &costs[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in row {
                self.reduced[*j] -= cb * v;
            }
            self.value += cb * &self.rhs[i];
        }
    }
}

pub(crate) fn solve(lp: &RationalLp) -> LpSolution {
    // Column layout: structural columns (free variables split into +/- parts),
    // then one slack/surplus per inequality, then artificials.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.names.len());
    let mut kinds = Vec::new();
    for lb in &lp.lower {
        let plus = kinds.len();
        kinds.push(ColumnKind::Structural);
        let minus = if *lb == LowerBound::Free {
            kinds.push(ColumnKind::Structural);
            Some(plus + 1)
        } else {
            None
        };
        var_cols.push((plus, minus));
    }

    let mut rows: Vec<SparseRow> = Vec::with_capacity(lp.constraints.len());
    let mut rhs = Vec::with_capacity(lp.constraints.len());
    let mut relations = Vec::with_capacity(lp.constraints.len());
    for c in &lp.constraints {
        let flip = c.rhs.is_negative();
        let sign = if flip { -Rational::one() } else { Rational::one() };
        let mut row: SparseRow = Vec::with_capacity(c.coeffs.len() * 2 + 2);
        for (v, coeff) in &c.coeffs {
            let (plus, minus) = var_cols[v.0];
            let a = &sign * coeff;
            if let Some(m) = minus {
                row.push((m, -a.clone()));
            }
            row.push((plus, a));
        }
        row.sort_by_key(|e| e.0);
        let relation = match (c.relation, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        };
        rows.push(row);
        rhs.push(&sign * &c.rhs);
        relations.push(relation);
    }

    let mut basis = vec![usize::MAX; rows.len()];
    for (i, rel) in relations.iter().enumerate() {
        if *rel == Relation::Eq {
            continue;
        }
        let col = kinds.len();
        kinds.push(ColumnKind::Slack);
        if *rel == Relation::Le {
            rows[i].push((col, Rational::one()));
            basis[i] = col;
        } else {
            rows[i].push((col, -Rational::one()));
        }
    }
    for (i, rel) in relations.iter().enumerate() {
        if *rel == Relation::Le {
            continue;
        }
        let col = kinds.len();
        kinds.push(ColumnKind::Artificial);
        rows[i].push((col, Rational::one()));
        basis[i] = col;
    }

    let ncols = kinds.len();
    let nrows = rows.len();
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        kinds,
        reduced: Vec::new(),
        value: Rational::zero(),
        enabled: vec![true; ncols],
        pivots: 0,
    };

    // Phase 1: maximize -(sum of artificials).
    let phase1: Vec<Rational> = t
        .kinds
        .iter()
        .map(|k| if *k == ColumnKind::Artificial { -Rational::one() } else { Rational::zero() })
        .collect();
    let has_artificial = phase1.iter().any(|c| !c.is_zero());
    if has_artificial {
        t.set_objective(&phase1);
        t.run();
        if t.value.is_negative() {
            return LpSolution {
                status: LpStatus::Infeasible,
                value: None,
                assignment: None,
                pivots: t.pivots,
                tableau_rows: nrows,
                tableau_cols: ncols,
            };
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.kinds[t.basis[i]] == ColumnKind::Artificial {
                let replacement = t.rows[i]
                    .iter()
                    .find(|(j, v)| t.kinds[*j] != ColumnKind::Artificial && !v.is_zero())
                    .map(|(j, _)| *j);
                match replacement {
                    Some(q) => t.pivot(i, q),
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for (j, k) in t.kinds.iter().enumerate() {
            if *k == ColumnKind::Artificial {
                t.enabled[j] = false;
            }
        }
        for row in t.rows.iter_mut() {
            row.retain(|(j, _)| t.kinds[*j] != ColumnKind::Artificial);
        }
    }

    // Phase 2: the real objective, always maximized internally.
    let flip = lp.sense == Sense::Minimize;
    let mut costs = vec![Rational::zero(); ncols];
    for (v, c) in lp.objective.iter().enumerate() {
        let c = if flip { -c.clone() } else { c.clone() };
        let (plus, minus) = var_cols[v];
        if let Some(m) = minus {
            costs[m] = -c.clone();
        }
        costs[plus] = c;
    }
    t.set_objective(&costs);
    if let PhaseOutcome::Unbounded = t.run() {
        return LpSolution {
            status: LpStatus::Unbounded,
            value: None,
            assignment: None,
            pivots: t.pivots,
            tableau_rows: nrows,
            tableau_cols: ncols,
        };
    }

    let mut col_values = vec![Rational::zero(); ncols];
    for (i, &b) in t.basis.iter().enumerate() {
        col_values[b] = t.rhs[i].clone();
    }
    let assignment: Vec<Rational> = var_cols
        .iter()
        .map(|(plus, minus)| match minus {
            Some(m) => &col_values[*plus] - &col_values[*m],
            None => col_values[*plus].clone(),
        })
        .collect();
    let value = lp.objective_value(&assignment);
    debug_assert_eq!(value, if flip { -t.value.clone() } else { t.value.clone() });
    LpSolution {
        status: LpStatus::Optimal,
        value: Some(value),
        assignment: Some(assignment),
        pivots: t.pivots,
        tableau_rows: nrows,
        tableau_cols: ncols,
    }
}
