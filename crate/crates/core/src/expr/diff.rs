//! Symbolic partial derivatives of expressions in the independent variables.
//!
//! Used to expand `d^alpha(a(x) phi(x))` by the product rule when assembling
//! the weak-form system: the coefficient functions `a(x)` are closed-form, so
//! their derivatives are computed symbolically once per dictionary entry.
//! Candidate expressions `g` are never differentiated anywhere in the
//! pipeline.

use super::{BinaryOp, Expression, UnaryOp};
use std::f64::consts::FRAC_PI_2;

/// Symbolic partial derivative with respect to independent variable `var`.
/// Derivatives of field components are zero by construction (`a` depends on
/// `x` only; callers validate that).
pub fn partial_derivative(e: &Expression, var: usize) -> Expression {
    let d = diff(e, var);
    d.canonicalize()
}

fn zero() -> Expression {
    Expression::Constant(0.0)
}

fn diff(e: &Expression, var: usize) -> Expression {
    match e {
        Expression::Constant(_) | Expression::Field(_) => zero(),
        Expression::Var(i) => {
            if *i == var {
                Expression::Constant(1.0)
            } else {
                zero()
            }
        }
        Expression::Unary(op, a) => {
            let da = diff(a, var);
            if is_zero(&da) {
                return zero();
            }
            match op {
                UnaryOp::Neg => Expression::neg(da),
                UnaryOp::Exp => Expression::mul(Expression::exp((**a).clone()), da),
                // cos(f) written with the available function set
                UnaryOp::Sin => Expression::mul(
                    Expression::sin(Expression::add(
                        (**a).clone(),
                        Expression::Constant(FRAC_PI_2),
                    )),
                    da,
                ),
                // d/dx log|f| = f'/f
                UnaryOp::Log => Expression::div(da, (**a).clone()),
            }
        }
        Expression::Binary(op, a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            match op {
                BinaryOp::Add => Expression::add(da, db),
                BinaryOp::Sub => Expression::sub(da, db),
                BinaryOp::Mul => Expression::add(
                    Expression::mul(da, (**b).clone()),
                    Expression::mul((**a).clone(), db),
                ),
                BinaryOp::Div => Expression::div(
                    Expression::sub(
                        Expression::mul(da, (**b).clone()),
                        Expression::mul((**a).clone(), db),
                    ),
                    Expression::mul((**b).clone(), (**b).clone()),
                ),
            }
        }
    }
}

fn is_zero(e: &Expression) -> bool {
    matches!(e, Expression::Constant(c) if *c == 0.0)
}

/// True when the canonicalized expression is the zero constant; lets callers
/// skip vanishing product-rule terms.
pub(crate) fn is_zero_expr(e: &Expression) -> bool {
    is_zero(&e.canonicalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_constant_and_other_variable_is_zero() {
        let c = Expression::constant(4.0);
        assert!(is_zero_expr(&partial_derivative(&c, 0)));
        let x2 = Expression::var(1);
        assert!(is_zero_expr(&partial_derivative(&x2, 0)));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // a(x) = x1^2 * sin(x2) + exp(0.5 x1)
        let a = Expression::add(
            Expression::mul(
                Expression::mul(Expression::var(0), Expression::var(0)),
                Expression::sin(Expression::var(1)),
            ),
            Expression::exp(Expression::mul(Expression::constant(0.5), Expression::var(0))),
        );
        for var in 0..2 {
            let da = partial_derivative(&a, var);
            for &(p, q) in &[(0.3, 1.1), (1.7, -0.4), (-0.9, 2.2)] {
                let h = 1e-6;
                let mut lo = [p, q];
                let mut hi = [p, q];
                lo[var] -= h;
                hi[var] += h;
                let fd = (a.evaluate(&hi, &[]) - a.evaluate(&lo, &[])) / (2.0 * h);
                let sym = da.evaluate(&[p, q], &[]);
                assert!(
                    (fd - sym).abs() < 1e-6 * (1.0 + sym.abs()),
                    "var {var} at ({p},{q}): fd {fd} vs sym {sym}"
                );
            }
        }
    }
}
