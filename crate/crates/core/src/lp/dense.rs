//! Dense two-phase revised simplex.
//!
//! Keeps an explicit basis inverse that is updated by elementary row
//! operations after each pivot and rebuilt from scratch periodically. Pricing
//! is Dantzig's most-negative reduced cost; after a run of degenerate pivots
//! the solver switches to Bland's smallest-index rule (entering and leaving)
//! until the objective moves again, which rules out cycling.

use super::{LinearProgram, LpError, LpSolution, Relation};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 32;

/// Original variable expressed as `offset + sum(coef * column)`.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct StandardForm {
    /// Sparse columns of the constraint matrix (row, value).
    columns: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    is_artificial: Vec<bool>,
    initial_basis: Vec<usize>,
    var_maps: Vec<VarMap>,
    num_structural: usize,
}

fn to_standard_form(lp: &LinearProgram) -> StandardForm {
    let mut columns: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut cost = Vec::new();
    let mut var_maps = Vec::with_capacity(lp.vars.len());
    // rows (as sparse lists over structural columns) collected before slacks
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();

    for def in &lp.vars {
        let map = if def.lower.is_finite() {
            let col = columns.len();
            columns.push(Vec::new());
            cost.push(def.cost);
            if def.upper.is_finite() {
                bound_rows.push((col, def.upper - def.lower));
            }
            VarMap {
                offset: def.lower,
                cols: vec![(col, 1.0)],
            }
        } else if def.upper.is_finite() {
            let col = columns.len();
            columns.push(Vec::new());
            cost.push(-def.cost);
            VarMap {
                offset: def.upper,
                cols: vec![(col, -1.0)],
            }
        } else {
            let plus = columns.len();
            columns.push(Vec::new());
            columns.push(Vec::new());
            cost.push(def.cost);
            cost.push(-def.cost);
            VarMap {
                offset: 0.0,
                cols: vec![(plus, 1.0), (plus + 1, -1.0)],
            }
        };
        var_maps.push(map);
    }
    let num_structural = columns.len();

    // Each logical row: structural terms, relation, rhs.
    let mut logical: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for row in &lp.rows {
        let mut rhs = row.rhs;
        let mut terms = Vec::new();
        for &(v, c) in &row.terms {
            let map = &var_maps[v];
            rhs -= c * map.offset;
            for &(col, k) in &map.cols {
                terms.push((col, c * k));
            }
        }
        logical.push((terms, row.relation, rhs));
    }
    for (col, bound) in bound_rows {
        logical.push((vec![(col, 1.0)], Relation::Le, bound));
    }

    let m = logical.len();
    let mut rhs = vec![0.0; m];
    let mut is_artificial = vec![false; columns.len()];
    let mut initial_basis = vec![usize::MAX; m];
    for (i, (terms, relation, b)) in logical.into_iter().enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        rhs[i] = sign * b;
        for (col, c) in terms {
            columns[col].push((i, sign * c));
        }
        let slack = match relation {
            Relation::Le => Some(sign),
            Relation::Ge => Some(-sign),
            Relation::Eq => None,
        };
        if let Some(coef) = slack {
            let col = columns.len();
            columns.push(vec![(i, coef)]);
            cost.push(0.0);
            is_artificial.push(false);
            if coef > 0.0 {
                initial_basis[i] = col;
            }
        }
        if initial_basis[i] == usize::MAX {
            let col = columns.len();
            columns.push(vec![(i, 1.0)]);
            cost.push(0.0);
            is_artificial.push(true);
            initial_basis[i] = col;
        }
    }

    StandardForm {
        columns,
        rhs,
        cost,
        is_artificial,
        initial_basis,
        var_maps,
        num_structural,
    }
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    m: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major dense basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
}

enum Step {
    Optimal,
    Pivoted,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let m = sf.rhs.len();
        let mut is_basic = vec![false; sf.columns.len()];
        for &b in &sf.initial_basis {
            is_basic[b] = true;
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            sf,
            m,
            basis: sf.initial_basis.clone(),
            is_basic,
            binv,
            xb: sf.rhs.clone(),
            pivots_since_refactor: 0,
            iterations: 0,
        }
    }

    fn ftran(&self, col: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for &(k, a) in &self.sf.columns[col] {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.binv[i * m + k] * a;
            }
        }
        out
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, &r) in y.iter_mut().zip(row) {
                    *yi += cb * r;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[f64], y: &[f64], col: usize) -> f64 {
        cost[col]
            - self.sf.columns[col]
                .iter()
                .map(|&(i, a)| y[i] * a)
                .sum::<f64>()
    }

    fn pivot(&mut self, row: usize, col: usize, column: &[f64]) {
        let m = self.m;
        let step = self.xb[row] / column[row];
        for i in 0..m {
            if i != row {
                self.xb[i] -= step * column[i];
            }
        }
        self.xb[row] = step;
        let inv = 1.0 / column[row];
        for v in &mut self.binv[row * m..(row + 1) * m] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.binv[row * m..(row + 1) * m].to_vec();
        for i in 0..m {
            let f = column[i];
            if i != row && f != 0.0 {
                let dst = &mut self.binv[i * m..(i + 1) * m];
                for (d, &p) in dst.iter_mut().zip(&pivot_row) {
                    *d -= f * p;
                }
            }
        }
        self.is_basic[self.basis[row]] = false;
        self.is_basic[col] = true;
        self.basis[row] = col;
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting and recomputes the basic solution from the right-hand side.
    fn refactor(&mut self) {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &b) in self.basis.iter().enumerate() {
            for &(i, v) in &self.sf.columns[b] {
                a[i * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))
                .unwrap();
            if a[p * m + c].abs() < 1e-14 {
                // Singular basis; keep the incrementally updated inverse.
                return;
            }
            if p != c {
                for j in 0..m {
                    a.swap(p * m + j, c * m + j);
                    inv.swap(p * m + j, c * m + j);
                }
            }
            let d = 1.0 / a[c * m + c];
            for j in 0..m {
                a[c * m + j] *= d;
                inv[c * m + j] *= d;
            }
            for r in 0..m {
                let f = a[r * m + c];
                if r != c && f != 0.0 {
                    for j in 0..m {
                        a[r * m + j] -= f * a[c * m + j];
                        inv[r * m + j] -= f * inv[c * m + j];
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&self.sf.rhs).map(|(x, b)| x * b).sum();
            self.xb[i] = if v < 0.0 && v > -1e-9 { 0.0 } else { v };
        }
        self.pivots_since_refactor = 0;
    }

    fn step(&mut self, cost: &[f64], allow_artificial: bool, bland: bool) -> Step {
        self.iterations += 1;
        let y = self.duals(cost);
        let mut entering: Option<(usize, f64)> = None;
        for col in 0..self.sf.columns.len() {
            if self.is_basic[col] || (!allow_artificial && self.sf.is_artificial[col]) {
                continue;
            }
            let d = self.reduced_cost(cost, &y, col);
            if d < -COST_TOL {
                if bland {
                    entering = Some((col, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d < best) {
                    entering = Some((col, d));
                }
            }
        }
        let Some((col, _)) = entering else {
            return Step::Optimal;
        };
        let column = self.ftran(col);
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let u = column[i];
            // A zero-level artificial left in the basis must not turn positive.
            if !allow_artificial && self.sf.is_artificial[self.basis[i]] && u.abs() > PIVOT_TOL {
                leave = Some((i, 0.0));
                break;
            }
            if u > PIVOT_TOL {
                let ratio = self.xb[i].max(0.0) / u;
                let better = match leave {
                    None => true,
                    Some((j, best)) => {
                        if ratio < best - 1e-12 {
                            true
                        } else if ratio <= best + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[j]
                            } else {
                                u > column[j]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        match leave {
            None => Step::Unbounded,
            Some((row, _)) => {
                self.pivot(row, col, &column);
                Step::Pivoted
            }
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&b, &x)| cost[b] * x)
            .sum()
    }

    fn run(&mut self, cost: &[f64], allow_artificial: bool, limit: usize) -> Result<(), LpError> {
        let mut degenerate_run = 0usize;
        let mut last_obj = self.objective(cost);
        loop {
            if self.iterations > limit {
                return Err(LpError::Numerical(format!(
                    "dense simplex exceeded {limit} iterations"
                )));
            }
            match self.step(cost, allow_artificial, degenerate_run >= DEGENERATE_RUN) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(LpError::Unbounded),
                Step::Pivoted => {
                    let obj = self.objective(cost);
                    if obj < last_obj - 1e-12 {
                        degenerate_run = 0;
                    } else {
                        degenerate_run += 1;
                    }
                    last_obj = obj;
                }
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where a structural or
    /// slack column can replace them.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.m {
            if !self.sf.is_artificial[self.basis[row]] {
                continue;
            }
            let m = self.m;
            let candidate = (0..self.sf.columns.len()).find_map(|col| {
                if self.is_basic[col] || self.sf.is_artificial[col] {
                    return None;
                }
                let entry: f64 = self.sf.columns[col]
                    .iter()
                    .map(|&(k, a)| self.binv[row * m + k] * a)
                    .sum();
                (entry.abs() > 1e-7).then_some(col)
            });
            if let Some(col) = candidate {
                let column = self.ftran(col);
                self.pivot(row, col, &column);
            }
        }
    }
}

pub(crate) fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let sf = to_standard_form(lp);
    let m = sf.rhs.len();
    let n = sf.columns.len();
    let limit = 50 * (m + n) + 1000;
    let mut tab = Tableau::new(&sf);

    if sf.is_artificial.iter().any(|&a| a) {
        let phase1: Vec<f64> = sf
            .is_artificial
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect();
        tab.run(&phase1, true, limit)?;
        tab.refactor();
        let scale = sf.rhs.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
        if tab.objective(&phase1) > 1e-8 * scale {
            return Err(LpError::Infeasible);
        }
        tab.drive_out_artificials();
    }

    tab.run(&sf.cost, false, limit)?;
    tab.refactor();

    let mut std_values = vec![0.0; n];
    for (&b, &x) in tab.basis.iter().zip(&tab.xb) {
        std_values[b] = x.max(0.0);
    }
    debug_assert!(sf.num_structural <= n);
    let values: Vec<f64> = sf
        .var_maps
        .iter()
        .map(|map| {
            map.offset
                + map
                    .cols
                    .iter()
                    .map(|&(c, k)| k * std_values[c])
                    .sum::<f64>()
        })
        .collect();
    let objective = lp.evaluate(&values);
    Ok(LpSolution::new(objective, values))
}
