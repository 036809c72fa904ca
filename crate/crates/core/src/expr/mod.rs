//! Closed-form expression trees.
//!
//! An [`Expression`] is an immutable tree over independent variables `x1..xM`,
//! field components `u1..uN`, real constants, the unary operations
//! `sin, exp, log, neg` and the binary operations `+, -, *, /`. Evaluation is
//! *protected* so that it is total: division by a near-zero denominator
//! returns 1, `log` acts on the absolute value and returns 0 near zero, the
//! argument of `exp` is clamped, and any non-finite intermediate result maps
//! to 0.
//!
//! Expressions are shared behind `Arc`, so cloning a subtree is cheap and
//! sharing across threads is safe.

mod diff;
mod form;
mod parse;

pub use diff::partial_derivative;
pub use form::{augmented_form, functional_form, matches, AugmentedForm, Form, FunctionalForm};
pub use parse::parse_expression;

use std::fmt;
use std::sync::Arc;

/// Denominators with absolute value below this are treated as protected.
pub const PROTECTED_EPS: f64 = 1e-6;
/// Upper clamp for the argument of `exp`.
pub const EXP_CLAMP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Sin,
    Exp,
    Log,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A node of a closed-form expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    /// A real constant.
    Constant(f64),
    /// Independent variable `x_{i+1}` (0-based index, `i < M`).
    Var(usize),
    /// Field component `u_{j+1}` (0-based index, `j < N`).
    Field(usize),
    Unary(UnaryOp, Arc<Expression>),
    Binary(BinaryOp, Arc<Expression>, Arc<Expression>),
}

impl Expression {
    pub fn constant(c: f64) -> Self {
        Expression::Constant(c)
    }

    pub fn var(i: usize) -> Self {
        Expression::Var(i)
    }

    pub fn field(j: usize) -> Self {
        Expression::Field(j)
    }

    pub fn unary(op: UnaryOp, a: Expression) -> Self {
        // Negated constants fold immediately so that printing round-trips.
        if op == UnaryOp::Neg {
            if let Expression::Constant(c) = a {
                return Expression::Constant(-c);
            }
        }
        Expression::Unary(op, Arc::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expression, b: Expression) -> Self {
        Expression::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn sin(a: Expression) -> Self {
        Self::unary(UnaryOp::Sin, a)
    }
    pub fn exp(a: Expression) -> Self {
        Self::unary(UnaryOp::Exp, a)
    }
    pub fn log(a: Expression) -> Self {
        Self::unary(UnaryOp::Log, a)
    }
    pub fn neg(a: Expression) -> Self {
        Self::unary(UnaryOp::Neg, a)
    }
    pub fn add(a: Expression, b: Expression) -> Self {
        Self::binary(BinaryOp::Add, a, b)
    }
    pub fn sub(a: Expression, b: Expression) -> Self {
        Self::binary(BinaryOp::Sub, a, b)
    }
    pub fn mul(a: Expression, b: Expression) -> Self {
        Self::binary(BinaryOp::Mul, a, b)
    }
    pub fn div(a: Expression, b: Expression) -> Self {
        Self::binary(BinaryOp::Div, a, b)
    }

    /// Number of nodes in the tree (`>= 1`).
    pub fn node_count(&self) -> usize {
        match self {
            Expression::Constant(_) | Expression::Var(_) | Expression::Field(_) => 1,
            Expression::Unary(_, a) => 1 + a.node_count(),
            Expression::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Depth of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expression::Constant(_) | Expression::Var(_) | Expression::Field(_) => 1,
            Expression::Unary(_, a) => 1 + a.depth(),
            Expression::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Largest independent-variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expression::Var(i) => Some(*i),
            Expression::Constant(_) | Expression::Field(_) => None,
            Expression::Unary(_, a) => a.max_var(),
            Expression::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Largest field-component index referenced, if any.
    pub fn max_field(&self) -> Option<usize> {
        match self {
            Expression::Field(j) => Some(*j),
            Expression::Constant(_) | Expression::Var(_) => None,
            Expression::Unary(_, a) => a.max_field(),
            Expression::Binary(_, a, b) => match (a.max_field(), b.max_field()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn references_fields(&self) -> bool {
        self.max_field().is_some()
    }

    /// Set of independent-variable indices occurring in the tree.
    pub fn occurring_vars(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        fn walk(e: &Expression, seen: &mut Vec<usize>) {
            match e {
                Expression::Var(i) => {
                    if !seen.contains(i) {
                        seen.push(*i);
                    }
                }
                Expression::Unary(_, a) => walk(a, seen),
                Expression::Binary(_, a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
                _ => {}
            }
        }
        walk(self, &mut seen);
        seen.sort_unstable();
        seen
    }

    /// Evaluate at a point: `x` holds the independent variables, `u` the
    /// field components. Protected semantics make this total.
    pub fn evaluate(&self, x: &[f64], u: &[f64]) -> f64 {
        let v = match self {
            Expression::Constant(c) => *c,
            Expression::Var(i) => x[*i],
            Expression::Field(j) => u[*j],
            Expression::Unary(op, a) => apply_unary(*op, a.evaluate(x, u)),
            Expression::Binary(op, a, b) => {
                apply_binary(*op, a.evaluate(x, u), b.evaluate(x, u))
            }
        };
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    /// Evaluate over a batch of points. `vars` supplies one column per
    /// independent variable and field component, all of equal length. Walks
    /// each tree node once per batch, which is substantially faster than
    /// point-by-point evaluation inside the search loop.
    pub fn eval_batch(&self, vars: &BatchVars<'_>) -> Vec<f64> {
        let n = vars.len;
        match self {
            Expression::Constant(c) => vec![*c; n],
            Expression::Var(i) => vars.x[*i].to_vec(),
            Expression::Field(j) => vars.u[*j].to_vec(),
            Expression::Unary(op, a) => {
                let mut va = a.eval_batch(vars);
                for v in va.iter_mut() {
                    let r = apply_unary(*op, *v);
                    *v = if r.is_finite() { r } else { 0.0 };
                }
                va
            }
            Expression::Binary(op, a, b) => {
                let mut va = a.eval_batch(vars);
                let vb = b.eval_batch(vars);
                for (v, w) in va.iter_mut().zip(vb.iter()) {
                    let r = apply_binary(*op, *v, *w);
                    *v = if r.is_finite() { r } else { 0.0 };
                }
                va
            }
        }
    }

    /// True if the subtree contains no variables or fields.
    pub fn is_constant(&self) -> bool {
        match self {
            Expression::Constant(_) => true,
            Expression::Var(_) | Expression::Field(_) => false,
            Expression::Unary(_, a) => a.is_constant(),
            Expression::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Canonical form: constant subtrees folded, associative chains of
    /// `+` and `*` flattened, commutative operands sorted by a deterministic
    /// key, constants within a chain merged into one.
    pub fn canonicalize(&self) -> Expression {
        if self.is_constant() {
            return Expression::Constant(self.evaluate(&[], &[]));
        }
        match self {
            Expression::Constant(_) | Expression::Var(_) | Expression::Field(_) => self.clone(),
            Expression::Unary(op, a) => Expression::unary(*op, a.canonicalize()),
            Expression::Binary(op @ (BinaryOp::Add | BinaryOp::Mul), _, _) => {
                let mut terms = Vec::new();
                flatten_chain(self, *op, &mut terms);
                let mut terms: Vec<Expression> = terms.into_iter().map(|t| t.canonicalize()).collect();
                // Merge all constant operands of the chain into a single one.
                let mut acc: Option<f64> = None;
                terms.retain(|t| {
                    if let Expression::Constant(c) = t {
                        acc = Some(match (acc, *op) {
                            (None, _) => *c,
                            (Some(a), BinaryOp::Add) => a + c,
                            (Some(a), _) => a * c,
                        });
                        false
                    } else {
                        true
                    }
                });
                terms.sort_by(cmp_expr);
                if let Some(c) = acc {
                    terms.insert(0, Expression::Constant(c));
                }
                let mut it = terms.into_iter();
                let first = it.next().expect("non-constant chain has a term");
                it.fold(first, |l, r| Expression::binary(*op, l, r))
            }
            Expression::Binary(op, a, b) => {
                Expression::binary(*op, a.canonicalize(), b.canonicalize())
            }
        }
    }
}

fn flatten_chain(e: &Expression, op: BinaryOp, out: &mut Vec<Expression>) {
    match e {
        Expression::Binary(o, a, b) if *o == op => {
            flatten_chain(a, op, out);
            flatten_chain(b, op, out);
        }
        other => out.push(other.clone()),
    }
}

/// Deterministic structural ordering used when sorting commutative operands.
pub(crate) fn cmp_expr(a: &Expression, b: &Expression) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    fn rank(e: &Expression) -> u8 {
        match e {
            Expression::Constant(_) => 0,
            Expression::Var(_) => 1,
            Expression::Field(_) => 2,
            Expression::Unary(..) => 3,
            Expression::Binary(..) => 4,
        }
    }
    match rank(a).cmp(&rank(b)) {
        Ordering::Equal => {}
        o => return o,
    }
    match (a, b) {
        (Expression::Constant(x), Expression::Constant(y)) => x.total_cmp(y),
        (Expression::Var(i), Expression::Var(j)) => i.cmp(j),
        (Expression::Field(i), Expression::Field(j)) => i.cmp(j),
        (Expression::Unary(o1, a1), Expression::Unary(o2, a2)) => {
            o1.cmp(o2).then_with(|| cmp_expr(a1, a2))
        }
        (Expression::Binary(o1, a1, b1), Expression::Binary(o2, a2, b2)) => o1
            .cmp(o2)
            .then_with(|| cmp_expr(a1, a2))
            .then_with(|| cmp_expr(b1, b2)),
        _ => unreachable!(),
    }
}

#[inline]
pub(crate) fn apply_unary(op: UnaryOp, a: f64) -> f64 {
    match op {
        UnaryOp::Sin => a.sin(),
        UnaryOp::Exp => a.min(EXP_CLAMP).exp(),
        UnaryOp::Log => {
            let m = a.abs();
            if m < PROTECTED_EPS {
                0.0
            } else {
                m.ln()
            }
        }
        UnaryOp::Neg => -a,
    }
}

#[inline]
pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b.abs() < PROTECTED_EPS {
                1.0
            } else {
                a / b
            }
        }
    }
}

/// Columns of points for batch evaluation.
pub struct BatchVars<'a> {
    pub x: Vec<&'a [f64]>,
    pub u: Vec<&'a [f64]>,
    pub len: usize,
}

impl<'a> BatchVars<'a> {
    pub fn new(x: Vec<&'a [f64]>, u: Vec<&'a [f64]>) -> Self {
        let len = x
            .first()
            .map(|c| c.len())
            .or_else(|| u.first().map(|c| c.len()))
            .unwrap_or(0);
        debug_assert!(x.iter().all(|c| c.len() == len));
        debug_assert!(u.iter().all(|c| c.len() == len));
        BatchVars { x, u, len }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Constant(c) => write!(f, "{c}"),
            Expression::Var(i) => write!(f, "x{}", i + 1),
            Expression::Field(j) => write!(f, "u{}", j + 1),
            Expression::Unary(UnaryOp::Sin, a) => write!(f, "sin({a})"),
            Expression::Unary(UnaryOp::Exp, a) => write!(f, "exp({a})"),
            Expression::Unary(UnaryOp::Log, a) => write!(f, "log({a})"),
            Expression::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expression::Binary(op, a, b) => {
                let s = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expression {
        Expression::var(0)
    }

    #[test]
    fn evaluates_product_of_variable_and_field() {
        let e = Expression::mul(x(), Expression::field(0));
        assert_eq!(e.evaluate(&[2.0], &[3.0]), 6.0);
    }

    #[test]
    fn evaluates_sin_at_zero() {
        let e = Expression::sin(Expression::mul(Expression::constant(3.0), x()));
        assert_eq!(e.evaluate(&[0.0], &[]), 0.0);
    }

    #[test]
    fn evaluates_scaled_exponential_against_series_oracle() {
        // Independent oracle: exp(2) via Taylor series with compensated
        // summation, kept apart from the libm path used by `evaluate`.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut term = 1.0f64;
        for k in 1..=60 {
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            term *= 2.0 / k as f64;
        }
        let expected = 1.3 * sum;
        let e = Expression::mul(
            Expression::constant(1.3),
            Expression::exp(Expression::mul(Expression::constant(2.0), x())),
        );
        let got = e.evaluate(&[1.0], &[]);
        assert!(
            (got - expected).abs() <= 1e-12 * expected.abs(),
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn protected_semantics_are_total() {
        let div = Expression::div(Expression::constant(1.0), Expression::constant(0.0));
        assert_eq!(div.evaluate(&[], &[]), 1.0);
        let log = Expression::log(Expression::constant(0.0));
        assert_eq!(log.evaluate(&[], &[]), 0.0);
        let log_neg = Expression::log(Expression::constant(-2.0));
        assert_eq!(log_neg.evaluate(&[], &[]), 2.0f64.ln());
        let big = Expression::exp(Expression::constant(1e6));
        assert_eq!(big.evaluate(&[], &[]), EXP_CLAMP.exp());
        // Overflowing product maps to zero instead of infinity.
        let huge = Expression::mul(
            Expression::constant(f64::MAX),
            Expression::constant(f64::MAX),
        );
        assert_eq!(huge.evaluate(&[], &[]), 0.0);
    }

    #[test]
    fn node_count_examples() {
        assert_eq!(Expression::constant(5.0).node_count(), 1);
        assert_eq!(Expression::add(x(), Expression::constant(1.0)).node_count(), 3);
        let e = Expression::sin(Expression::mul(Expression::constant(3.0), x()));
        assert_eq!(e.node_count(), 4);
    }

    #[test]
    fn canonicalize_folds_and_sorts() {
        // (2 + 3) * x -> 5 * x
        let e = Expression::mul(
            Expression::add(Expression::constant(2.0), Expression::constant(3.0)),
            x(),
        );
        let c = e.canonicalize();
        assert_eq!(
            c,
            Expression::mul(Expression::constant(5.0), x())
        );
        // x + 1 and 1 + x canonicalize identically.
        let a = Expression::add(x(), Expression::constant(1.0)).canonicalize();
        let b = Expression::add(Expression::constant(1.0), x()).canonicalize();
        assert_eq!(a, b);
    }

    #[test]
    fn canonicalize_preserves_value() {
        let e = Expression::add(
            Expression::mul(x(), Expression::constant(2.0)),
            Expression::add(Expression::constant(1.0), Expression::sin(x())),
        );
        let c = e.canonicalize();
        for k in 0..100 {
            let t = -3.0 + 0.06 * k as f64;
            let a = e.evaluate(&[t], &[]);
            let b = c.evaluate(&[t], &[]);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn batch_eval_matches_pointwise() {
        let e = Expression::div(
            Expression::sin(Expression::mul(Expression::constant(2.5), x())),
            Expression::add(Expression::field(0), Expression::constant(0.5)),
        );
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let us: Vec<f64> = (0..50).map(|i| (i as f64 * 0.07).cos()).collect();
        let batch = e.eval_batch(&BatchVars::new(vec![&xs], vec![&us]));
        for i in 0..50 {
            assert_eq!(batch[i], e.evaluate(&[xs[i]], &[us[i]]));
        }
    }
}
