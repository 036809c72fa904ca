//! Functional forms and the augmented-form success metric.
//!
//! A *functional form* is an expression with every numeric constant replaced
//! by a placeholder. The *augmented form* of a target `f` is the functional
//! form of `C1 * f(C3 x + C4) + C2` after replacing and combining constants;
//! it is the reference a discovered expression is matched against, where any
//! placeholder may be absent from the candidate (0 for additive slots, 1 for
//! multiplicative ones, the identity for the inner affine map).
//!
//! Normalization rules beyond constant replacement: `a - b` and `-a` become
//! placeholder-coefficient terms (a sign is a constant), division by a
//! constant becomes a constant factor, and a constant factor in front of a
//! sum whose terms all carry their own constants is absorbed. These rules
//! make matching stable under the rescalings and shifts the metric is meant
//! to tolerate.

use super::{Expression, UnaryOp};
use std::cmp::Ordering;
use std::fmt;

/// Unary operations that survive into forms (`neg` is folded into slots).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FormUnary {
    Sin,
    Exp,
    Log,
}

/// Canonical shape of an expression with placeholder constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Form {
    /// A placeholder constant `C_k`.
    Slot,
    Var(usize),
    Field(usize),
    /// n-ary sum; sorted, at most one `Slot` element.
    Add(Vec<Form>),
    /// n-ary product; sorted, at most one `Slot` element.
    Mul(Vec<Form>),
    Div(Box<Form>, Box<Form>),
    Unary(FormUnary, Box<Form>),
}

/// Expression shape with constants abstracted away.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalForm {
    pub form: Form,
    pub placeholders: usize,
}

/// Matching target derived from a ground-truth expression.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedForm {
    pub form: Form,
    pub placeholders: usize,
}

/// Replace constants by placeholders (after canonicalization) and combine.
pub fn functional_form(e: &Expression) -> FunctionalForm {
    let form = normalize(to_form(&e.canonicalize()));
    let placeholders = count_slots(&form);
    FunctionalForm { form, placeholders }
}

/// Build the augmented form of a target expression: wrap the whole expression
/// as `C1 * f + C2` and each occurring independent variable as `C x + C'`,
/// then replace and combine constants.
pub fn augmented_form(f: &Expression) -> AugmentedForm {
    let base = functional_form(f).form;
    let wrapped = substitute_vars(&base);
    let outer = Form::Add(vec![Form::Mul(vec![Form::Slot, wrapped]), Form::Slot]);
    let form = normalize(outer);
    let placeholders = count_slots(&form);
    AugmentedForm { form, placeholders }
}

/// True iff the candidate's functional form unifies with the target, where
/// every target placeholder may be absent from the candidate.
pub fn matches(candidate: &Expression, target: &AugmentedForm) -> bool {
    let cand = functional_form(candidate);
    match_form(&target.form, &cand.form)
}

fn substitute_vars(f: &Form) -> Form {
    match f {
        Form::Var(i) => Form::Add(vec![Form::Mul(vec![Form::Slot, Form::Var(*i)]), Form::Slot]),
        Form::Slot | Form::Field(_) => f.clone(),
        Form::Add(ts) => Form::Add(ts.iter().map(substitute_vars).collect()),
        Form::Mul(ts) => Form::Mul(ts.iter().map(substitute_vars).collect()),
        Form::Div(a, b) => Form::Div(
            Box::new(substitute_vars(a)),
            Box::new(substitute_vars(b)),
        ),
        Form::Unary(op, a) => Form::Unary(*op, Box::new(substitute_vars(a))),
    }
}

fn to_form(e: &Expression) -> Form {
    match e {
        Expression::Constant(_) => Form::Slot,
        Expression::Var(i) => Form::Var(*i),
        Expression::Field(j) => Form::Field(*j),
        Expression::Unary(UnaryOp::Neg, a) => negate(to_form(a)),
        Expression::Unary(op, a) => {
            let k = match op {
                UnaryOp::Sin => FormUnary::Sin,
                UnaryOp::Exp => FormUnary::Exp,
                UnaryOp::Log => FormUnary::Log,
                UnaryOp::Neg => unreachable!(),
            };
            Form::Unary(k, Box::new(to_form(a)))
        }
        Expression::Binary(op, a, b) => {
            use super::BinaryOp::*;
            match op {
                Add => Form::Add(vec![to_form(a), to_form(b)]),
                Sub => Form::Add(vec![to_form(a), negate(to_form(b))]),
                Mul => Form::Mul(vec![to_form(a), to_form(b)]),
                Div => {
                    let num = to_form(a);
                    let den = to_form(b);
                    if den == Form::Slot {
                        // Dividing by a constant is a constant factor.
                        Form::Mul(vec![Form::Slot, num])
                    } else {
                        Form::Div(Box::new(num), Box::new(den))
                    }
                }
            }
        }
    }
}

/// A sign is a constant: `-f` is the `C * f` family.
fn negate(f: Form) -> Form {
    match f {
        Form::Slot => Form::Slot,
        Form::Mul(mut ts) => {
            ts.push(Form::Slot);
            Form::Mul(ts)
        }
        other => Form::Mul(vec![Form::Slot, other]),
    }
}

fn count_slots(f: &Form) -> usize {
    match f {
        Form::Slot => 1,
        Form::Var(_) | Form::Field(_) => 0,
        Form::Add(ts) | Form::Mul(ts) => ts.iter().map(count_slots).sum(),
        Form::Div(a, b) => count_slots(a) + count_slots(b),
        Form::Unary(_, a) => count_slots(a),
    }
}

/// Flatten nested chains, merge placeholders (at most one per chain), absorb
/// constant factors over fully slotted sums, unwrap singletons, sort.
fn normalize(f: Form) -> Form {
    match f {
        Form::Slot | Form::Var(_) | Form::Field(_) => f,
        Form::Unary(op, a) => Form::Unary(op, Box::new(normalize(*a))),
        Form::Div(a, b) => {
            let num = normalize(*a);
            let den = normalize(*b);
            if den == Form::Slot {
                return normalize(Form::Mul(vec![Form::Slot, num]));
            }
            if num == Form::Slot && den == Form::Slot {
                return Form::Slot;
            }
            Form::Div(Box::new(num), Box::new(den))
        }
        Form::Add(ts) => {
            let mut items = Vec::new();
            for t in ts {
                match normalize(t) {
                    Form::Add(inner) => items.extend(inner),
                    other => items.push(other),
                }
            }
            let had_slot = items.iter().any(|t| *t == Form::Slot);
            items.retain(|t| *t != Form::Slot);
            items.sort_by(cmp_form);
            if had_slot {
                items.push(Form::Slot);
            }
            match items.len() {
                0 => Form::Slot,
                1 => items.pop().unwrap(),
                _ => Form::Add(items),
            }
        }
        Form::Mul(ts) => {
            let mut items = Vec::new();
            for t in ts {
                match normalize(t) {
                    Form::Mul(inner) => items.extend(inner),
                    other => items.push(other),
                }
            }
            let mut had_slot = items.iter().any(|t| *t == Form::Slot);
            items.retain(|t| *t != Form::Slot);
            // C * (sum of slotted terms) absorbs into the sum's own slots.
            if had_slot && items.len() == 1 {
                if let Form::Add(terms) = &items[0] {
                    if terms.iter().all(term_is_slotted) {
                        had_slot = false;
                    }
                }
            }
            items.sort_by(cmp_form);
            if had_slot {
                items.push(Form::Slot);
            }
            match items.len() {
                0 => Form::Slot,
                1 => items.pop().unwrap(),
                _ => Form::Mul(items),
            }
        }
    }
}

/// True when an additive term carries its own placeholder coefficient.
fn term_is_slotted(t: &Form) -> bool {
    match t {
        Form::Slot => true,
        Form::Mul(fs) => fs.iter().any(|f| *f == Form::Slot),
        _ => false,
    }
}

fn cmp_form(a: &Form, b: &Form) -> Ordering {
    fn rank(f: &Form) -> u8 {
        match f {
            Form::Var(_) => 0,
            Form::Field(_) => 1,
            Form::Unary(..) => 2,
            Form::Add(_) => 3,
            Form::Mul(_) => 4,
            Form::Div(..) => 5,
            Form::Slot => 6,
        }
    }
    match rank(a).cmp(&rank(b)) {
        Ordering::Equal => {}
        o => return o,
    }
    match (a, b) {
        (Form::Var(i), Form::Var(j)) | (Form::Field(i), Form::Field(j)) => i.cmp(j),
        (Form::Slot, Form::Slot) => Ordering::Equal,
        (Form::Unary(o1, a1), Form::Unary(o2, a2)) => o1.cmp(o2).then_with(|| cmp_form(a1, a2)),
        (Form::Add(x), Form::Add(y)) | (Form::Mul(x), Form::Mul(y)) => {
            x.len().cmp(&y.len()).then_with(|| {
                for (p, q) in x.iter().zip(y.iter()) {
                    match cmp_form(p, q) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                Ordering::Equal
            })
        }
        (Form::Div(a1, b1), Form::Div(a2, b2)) => {
            cmp_form(a1, a2).then_with(|| cmp_form(b1, b2))
        }
        _ => unreachable!(),
    }
}

/// Unify a candidate form against a target form whose placeholders are all
/// optional. A target slot only ever matches a candidate slot.
fn match_form(target: &Form, cand: &Form) -> bool {
    match (target, cand) {
        (Form::Slot, Form::Slot) => true,
        (Form::Slot, _) => false,
        (Form::Var(i), Form::Var(j)) => i == j,
        (Form::Field(i), Form::Field(j)) => i == j,
        (Form::Unary(o1, a), Form::Unary(o2, b)) => o1 == o2 && match_form(a, b),
        (Form::Div(tn, td), Form::Div(cn, cd)) => match_form(tn, cn) && match_form(td, cd),
        (Form::Add(ts), c) => {
            let cs: Vec<&Form> = match c {
                Form::Add(items) => items.iter().collect(),
                other => vec![other],
            };
            match_lists(ts, &cs)
        }
        (Form::Mul(ts), c) => {
            let cs: Vec<&Form> = match c {
                Form::Mul(items) => items.iter().collect(),
                other => vec![other],
            };
            match_lists(ts, &cs)
        }
        _ => false,
    }
}

/// Injectively assign every candidate item to a target item; all structural
/// (non-slot) target items must be covered, a slot item may stay uncovered.
fn match_lists(targets: &[Form], cands: &[&Form]) -> bool {
    let structural: Vec<&Form> = targets.iter().filter(|t| **t != Form::Slot).collect();
    let slot_count = targets.len() - structural.len();
    if cands.len() > structural.len() + slot_count {
        return false;
    }
    if cands.len() < structural.len() {
        return false;
    }
    // Backtracking assignment: candidate index -> unused target.
    fn assign(structural: &[&Form], used: &mut [bool], cands: &[&Form], i: usize, slots_left: usize) -> bool {
        if i == cands.len() {
            return used.iter().all(|u| *u);
        }
        let c = cands[i];
        for (k, t) in structural.iter().enumerate() {
            if !used[k] && match_form(t, c) {
                used[k] = true;
                if assign(structural, used, cands, i + 1, slots_left) {
                    return true;
                }
                used[k] = false;
            }
        }
        if slots_left > 0 && *c == Form::Slot {
            // Consume the optional slot term.
            if assign(structural, used, cands, i + 1, slots_left - 1) {
                return true;
            }
        }
        false
    }
    let mut used = vec![false; structural.len()];
    assign(&structural, &mut used, cands, 0, slot_count)
}

impl Form {
    /// Instantiate placeholders with concrete constants (used by tests and
    /// the idempotence check): slot `k` becomes the constant `2 + k`.
    pub fn instantiate(&self) -> Expression {
        fn go(f: &Form, k: &mut usize) -> Expression {
            match f {
                Form::Slot => {
                    *k += 1;
                    Expression::constant(1.0 + *k as f64)
                }
                Form::Var(i) => Expression::var(*i),
                Form::Field(j) => Expression::field(*j),
                Form::Add(ts) => {
                    let mut it = ts.iter();
                    let first = go(it.next().unwrap(), k);
                    it.fold(first, |l, r| Expression::add(l, go(r, k)))
                }
                Form::Mul(ts) => {
                    let mut it = ts.iter();
                    let first = go(it.next().unwrap(), k);
                    it.fold(first, |l, r| Expression::mul(l, go(r, k)))
                }
                Form::Div(a, b) => Expression::div(go(a, k), go(b, k)),
                Form::Unary(op, a) => {
                    let inner = go(a, k);
                    match op {
                        FormUnary::Sin => Expression::sin(inner),
                        FormUnary::Exp => Expression::exp(inner),
                        FormUnary::Log => Expression::log(inner),
                    }
                }
            }
        }
        let mut k = 0;
        go(self, &mut k)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(form: &Form, k: &mut usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match form {
                Form::Slot => {
                    *k += 1;
                    write!(f, "C{k}")
                }
                Form::Var(i) => write!(f, "x{}", i + 1),
                Form::Field(j) => write!(f, "u{}", j + 1),
                Form::Add(ts) => {
                    write!(f, "(")?;
                    for (i, t) in ts.iter().enumerate() {
                        if i > 0 {
                            write!(f, " + ")?;
                        }
                        go(t, k, f)?;
                    }
                    write!(f, ")")
                }
                Form::Mul(ts) => {
                    write!(f, "(")?;
                    for (i, t) in ts.iter().enumerate() {
                        if i > 0 {
                            write!(f, "*")?;
                        }
                        go(t, k, f)?;
                    }
                    write!(f, ")")
                }
                Form::Div(a, b) => {
                    write!(f, "(")?;
                    go(a, k, f)?;
                    write!(f, " / ")?;
                    go(b, k, f)?;
                    write!(f, ")")
                }
                Form::Unary(op, a) => {
                    let name = match op {
                        FormUnary::Sin => "sin",
                        FormUnary::Exp => "exp",
                        FormUnary::Log => "log",
                    };
                    write!(f, "{name}(")?;
                    go(a, k, f)?;
                    write!(f, ")")
                }
            }
        }
        let mut k = 0;
        go(self, &mut k, f)
    }
}

impl fmt::Display for FunctionalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.form.fmt(f)
    }
}

impl fmt::Display for AugmentedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.form.fmt(f)
    }
}
