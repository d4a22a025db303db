//! Exact linear programming over arbitrary-precision rationals.
//!
//! Programs are built incrementally with [`RationalLp`] and solved by a
//! two-phase tableau simplex that uses Bland's pivoting rule, so every run
//! terminates and every optimum is reported as an exact [`Rational`].

mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use num_rational::BigRational as Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable index {index} out of range ({count} variables declared)")]
    VariableOutOfRange { index: usize, count: usize },
    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),
}

/// Handle to a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// Lower bound of a variable: either `0` or unbounded below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowerBound {
    Zero,
    Free,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(VarId, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    fn lhs_value(&self, assignment: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .fold(Rational::zero(), |acc, (v, c)| acc + c * &assignment[v.0])
    }

    pub fn is_satisfied_by(&self, assignment: &[Rational]) -> bool {
        let lhs = self.lhs_value(assignment);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// A linear program with named variables and exact rational data.
#[derive(Clone, Debug)]
pub struct RationalLp {
    sense: Sense,
    names: Vec<String>,
    index: HashMap<String, VarId>,
    lower: Vec<LowerBound>,
    objective: Vec<Rational>,
    constraints: Vec<Constraint>,
}

impl RationalLp {
    pub fn new(sense: Sense) -> Self {
        RationalLp {
            sense,
            names: Vec::new(),
            index: HashMap::new(),
            lower: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn maximize() -> Self {
        Self::new(Sense::Maximize)
    }

    pub fn minimize() -> Self {
        Self::new(Sense::Minimize)
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: LowerBound) -> Result<VarId, LpError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(LpError::DuplicateVariable(name));
        }
        let id = VarId(self.names.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.lower.push(lower);
        self.objective.push(Rational::zero());
        Ok(id)
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.names[id.0]
    }

    pub fn num_variables(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower_bound(&self, id: VarId) -> LowerBound {
        self.lower[id.0]
    }

    pub fn objective_coeff(&self, id: VarId) -> &Rational {
        &self.objective[id.0]
    }

    fn check(&self, id: VarId) -> Result<(), LpError> {
        if id.0 < self.names.len() {
            Ok(())
        } else {
            Err(LpError::VariableOutOfRange { index: id.0, count: self.names.len() })
        }
    }

    pub fn set_objective(&mut self, id: VarId, coeff: Rational) -> Result<(), LpError> {
        self.check(id)?;
        self.objective[id.0] = coeff;
        Ok(())
    }

    /// Adds `Σ coeff·var (relation) rhs`. Repeated variables are summed.
    pub fn add_constraint<I>(&mut self, coeffs: I, relation: Relation, rhs: Rational) -> Result<usize, LpError>
    where
        I: IntoIterator<Item = (VarId, Rational)>,
    {
        let mut merged: BTreeMap<VarId, Rational> = BTreeMap::new();
        for (id, c) in coeffs {
            self.check(id)?;
            *merged.entry(id).or_insert_with(Rational::zero) += c;
        }
        let coeffs = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(self.constraints.len() - 1)
    }

    /// Same as [`add_constraint`](Self::add_constraint) but references variables by name.
    pub fn add_named_constraint(
        &mut self,
        coeffs: &[(&str, Rational)],
        relation: Relation,
        rhs: Rational,
    ) -> Result<usize, LpError> {
        let resolved = coeffs
            .iter()
            .map(|(n, c)| {
                self.var(n)
                    .map(|id| (id, c.clone()))
                    .ok_or_else(|| LpError::UnknownVariable((*n).to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.add_constraint(resolved, relation, rhs)
    }

    pub fn objective_value(&self, assignment: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(assignment)
            .fold(Rational::zero(), |acc, (c, x)| acc + c * x)
    }

    /// Exact feasibility check of a full assignment (bounds and constraints).
    pub fn is_feasible(&self, assignment: &[Rational]) -> bool {
        assignment.len() == self.names.len()
            && assignment
                .iter()
                .zip(&self.lower)
                .all(|(x, lb)| *lb == LowerBound::Free || !x.is_negative())
            && self.constraints.iter().all(|c| c.is_satisfied_by(assignment))
    }

    pub fn solve(&self) -> LpSolution {
        simplex::solve(self)
    }

    /// Human-readable dump, one constraint per line.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let term_list = |terms: &mut dyn Iterator<Item = (usize, &Rational)>| {
            let parts: Vec<String> = terms.map(|(i, c)| format!("{} {}", c, self.names[i])).collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        let obj = term_list(&mut self.objective.iter().enumerate().filter(|(_, c)| !c.is_zero()));
        let _ = writeln!(out, "{sense}: {obj}");
        for (k, c) in self.constraints.iter().enumerate() {
            let lhs = term_list(&mut c.coeffs.iter().map(|(v, r)| (v.0, r)));
            let _ = writeln!(out, "c{k}: {lhs} {} {}", c.relation, c.rhs);
        }
        for (name, lb) in self.names.iter().zip(&self.lower) {
            match lb {
                LowerBound::Zero => {
                    let _ = writeln!(out, "bound: {name} >= 0");
                }
                LowerBound::Free => {
                    let _ = writeln!(out, "bound: {name} free");
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective value in the program's own sense.
    pub value: Option<Rational>,
    /// One entry per declared variable, in declaration order.
    pub assignment: Option<Vec<Rational>>,
    /// Total pivots over both phases.
    pub pivots: usize,
    /// Rows and columns of the standard-form tableau.
    pub tableau_rows: usize,
    pub tableau_cols: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value_of(&self, id: VarId) -> Option<&Rational> {
        self.assignment.as_ref().map(|a| &a[id.0])
    }

    pub fn named_assignment(&self, lp: &RationalLp) -> BTreeMap<String, Rational> {
        match &self.assignment {
            Some(a) => lp.names.iter().cloned().zip(a.iter().cloned()).collect(),
            None => BTreeMap::new(),
        }
    }

    /// `C(n + m, m)` for the tableau shape: the number of possible bases,
    /// an absolute ceiling on the pivot count of a non-cycling simplex run.
    pub fn pivot_bound(&self) -> BigUint {
        binomial(self.tableau_cols + self.tableau_rows, self.tableau_rows)
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Solves both programs and reports whether both are optimal with equal values.
pub fn dual_value_check(primal: &RationalLp, dual: &RationalLp) -> bool {
    let p = primal.solve();
    let d = dual.solve();
    match (p.value, d.value) {
        (Some(a), Some(b)) => p.status == LpStatus::Optimal && d.status == LpStatus::Optimal && a == b,
        _ => false,
    }
}

/// Parses `p/q`, `p`, or a finite decimal such as `0.25`.
pub fn parse_rational(text: &str) -> Result<Rational, LpError> {
    let t = text.trim();
    let bad = || LpError::InvalidRational(text.to_string());
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: num_bigint::BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Rational::new(num, den));
    }
    let r: Rational = t.parse().map_err(|_| bad())?;
    Ok(r)
}

/// Convenience constructor for small rationals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}
