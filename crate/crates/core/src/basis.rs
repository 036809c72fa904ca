//! Compactly supported testing functions.
//!
//! Testing functions are tensor products of single B-spline bumps of degree
//! `K + 1`, so each one is `C^K`, vanishes together with its first `K`
//! derivatives at the support boundary, and has analytically computable mixed
//! derivatives through the standard knot-difference recursion. A testing set
//! tiles the domain with pairwise-disjoint support boxes, which makes the set
//! exactly orthogonal; each member is scaled to unit L2 norm.

use crate::error::CoreError;

/// Axis-aligned box in `R^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, CoreError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(CoreError::invalid("domain dimensions mismatch"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(CoreError::invalid("domain is degenerate"));
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// A single B-spline bump: the unique (up to scale) degree-`p` spline of
/// smoothness `C^{p-1}` supported on `[knots[0], knots[p+1]]`.
#[derive(Debug, Clone)]
pub struct BSpline1D {
    degree: usize,
    knots: Vec<f64>,
}

impl BSpline1D {
    /// Bump of the given degree with uniform knots across `[lo, hi]`.
    pub fn uniform(degree: usize, lo: f64, hi: f64) -> Self {
        let k = degree + 2;
        let step = (hi - lo) / (degree + 1) as f64;
        let knots = (0..k).map(|i| lo + step * i as f64).collect();
        BSpline1D { degree, knots }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.degree + 1])
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `r`-th derivative at `x`; exact, zero at and outside the support
    /// endpoints for `r <= degree - 1`.
    pub fn derivative(&self, r: usize, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x >= hi {
            return 0.0;
        }
        deriv_rec(&self.knots, 0, self.degree, r, x)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

fn basis_rec(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
    if p == 0 {
        return if knots[i] <= x && x < knots[i + 1] {
            1.0
        } else {
            0.0
        };
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * basis_rec(knots, i, p - 1, x);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - x) / d2 * basis_rec(knots, i + 1, p - 1, x);
    }
    v
}

fn deriv_rec(knots: &[f64], i: usize, p: usize, r: usize, x: f64) -> f64 {
    if r == 0 {
        return basis_rec(knots, i, p, x);
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += p as f64 / d1 * deriv_rec(knots, i, p - 1, r - 1, x);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v -= p as f64 / d2 * deriv_rec(knots, i + 1, p - 1, r - 1, x);
    }
    v
}

/// Tensor-product testing function with unit L2 norm and a compact support
/// box. Immutable and thread-safe after construction.
#[derive(Debug, Clone)]
pub struct TestingFunction {
    factors: Vec<BSpline1D>,
    norm: f64,
    smoothness: usize,
}

impl TestingFunction {
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.factors.iter().map(|f| f.support().0).collect();
        let hi = self.factors.iter().map(|f| f.support().1).collect();
        (lo, hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.factors
            .iter()
            .zip(x)
            .all(|(f, &xi)| {
                let (lo, hi) = f.support();
                xi >= lo && xi < hi
            })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.norm
            * self
                .factors
                .iter()
                .zip(x)
                .map(|(f, &xi)| f.value(xi))
                .product::<f64>()
    }

    /// Rescale the normalization constant (used to unit-normalize under the
    /// downstream integration rule).
    pub fn scale_norm(&mut self, factor: f64) {
        self.norm *= factor;
    }
}

/// Evaluate the mixed derivative `d^alpha phi` at `x`. Errors when
/// `|alpha|` exceeds the smoothness class of the testing function.
pub fn eval_test_derivative(
    phi: &TestingFunction,
    alpha: &[usize],
    x: &[f64],
) -> Result<f64, CoreError> {
    let order: usize = alpha.iter().sum();
    if order > phi.smoothness {
        return Err(CoreError::DerivativeOrderExceedsSmoothness {
            order,
            smoothness: phi.smoothness,
        });
    }
    let mut v = phi.norm;
    for ((f, &r), &xi) in phi.factors.iter().zip(alpha).zip(x) {
        v *= f.derivative(r, xi);
        if v == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(v)
}

/// Build `count` testing functions of smoothness class `C^K` tiling the
/// domain with disjoint support boxes, each with unit L2 norm. The tiling is
/// row-major over a `ceil(count^(1/M))` lattice, truncated to `count`;
/// deterministic given the inputs.
pub fn make_testing_set(
    domain: &DomainBox,
    count: usize,
    smoothness: usize,
) -> Result<Vec<TestingFunction>, CoreError> {
    if count == 0 {
        return Err(CoreError::invalid("testing set count must be >= 1"));
    }
    let m = domain.dim();
    let degree = smoothness + 1;
    let mut side = (count as f64).powf(1.0 / m as f64).floor() as usize;
    while side.pow(m as u32) < count {
        side += 1;
    }
    // Supports narrower than a millionth of the extent would degenerate the
    // knot vectors.
    let capacity_per_dim = 1_000_000usize;
    if side > capacity_per_dim {
        return Err(CoreError::TestingSetTooLarge {
            requested: count,
            capacity: capacity_per_dim.saturating_pow(m as u32),
        });
    }
    let widths: Vec<f64> = (0..m)
        .map(|d| (domain.hi[d] - domain.lo[d]) / side as f64)
        .collect();
    let mut set = Vec::with_capacity(count);
    for idx in 0..count {
        // Row-major unravel, last axis fastest.
        let mut rem = idx;
        let mut cell = vec![0usize; m];
        for d in (0..m).rev() {
            cell[d] = rem % side;
            rem /= side;
        }
        let factors: Vec<BSpline1D> = (0..m)
            .map(|d| {
                let lo = domain.lo[d] + widths[d] * cell[d] as f64;
                BSpline1D::uniform(degree, lo, lo + widths[d])
            })
            .collect();
        let norm_sq: f64 = factors.iter().map(l2_norm_sq_1d).product();
        set.push(TestingFunction {
            factors,
            norm: 1.0 / norm_sq.sqrt(),
            smoothness,
        });
    }
    Ok(set)
}

/// Exact squared L2 norm of a bump via Gauss-Legendre quadrature per knot
/// span (the integrand is a polynomial on each span).
fn l2_norm_sq_1d(b: &BSpline1D) -> f64 {
    let nodes = gauss_legendre(b.degree() + 2);
    let knots = b.knots();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, c) = (w[0], w[1]);
        let half = 0.5 * (c - a);
        let mid = 0.5 * (a + c);
        for &(t, wt) in &nodes {
            let x = mid + half * t;
            let v = b.value(x);
            total += wt * half * v * v;
        }
    }
    total
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Legendre polynomial `P_n` and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_bump_is_normalized() {
        let set = make_testing_set(&DomainBox::new(vec![0.0], vec![1.0]).unwrap(), 1, 2).unwrap();
        assert_eq!(set.len(), 1);
        let norm_sq: f64 = quad_1d(|x| set[0].value(&[x]).powi(2), 0.0, 1.0, 4000);
        assert_relative_eq!(norm_sq, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn tiling_in_one_dimension() {
        let set = make_testing_set(&DomainBox::new(vec![0.0], vec![2.0]).unwrap(), 10, 2).unwrap();
        assert_eq!(set.len(), 10);
        for (s, phi) in set.iter().enumerate() {
            let (lo, hi) = phi.support();
            assert_relative_eq!(lo[0], 0.2 * s as f64, epsilon = 1e-12);
            assert_relative_eq!(hi[0], 0.2 * (s + 1) as f64, epsilon = 1e-12);
            assert_eq!(phi.factors[0].degree(), 3);
        }
    }

    #[test]
    fn gram_matrix_is_identity_in_two_dimensions() {
        // 10x10 tiling of [0,2]^2; disjoint supports give exact off-diagonal
        // zeros, Gauss quadrature checks the diagonal.
        let domain = DomainBox::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let set = make_testing_set(&domain, 100, 2).unwrap();
        assert_eq!(set.len(), 100);
        for i in 0..set.len() {
            for j in i..set.len() {
                let (lo_i, hi_i) = set[i].support();
                let (lo_j, hi_j) = set[j].support();
                let overlap = (0..2).all(|d| lo_i[d] < hi_j[d] && lo_j[d] < hi_i[d]);
                if i == j {
                    let g = quad_2d(
                        |x, y| set[i].value(&[x, y]) * set[j].value(&[x, y]),
                        (lo_i[0], hi_i[0]),
                        (lo_i[1], hi_i[1]),
                        400,
                    );
                    assert_relative_eq!(g, 1.0, epsilon = 1e-6);
                } else {
                    assert!(!overlap, "supports {i} and {j} overlap");
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_sets_and_bad_orders() {
        let domain = DomainBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            make_testing_set(&domain, 2_000_000, 2),
            Err(CoreError::TestingSetTooLarge { .. })
        ));
        let set = make_testing_set(&domain, 1, 2).unwrap();
        assert!(matches!(
            eval_test_derivative(&set[0], &[3], &[0.5]),
            Err(CoreError::DerivativeOrderExceedsSmoothness { .. })
        ));
    }

    #[test]
    fn vanishes_outside_support_and_at_boundary() {
        let set = make_testing_set(&DomainBox::new(vec![0.0], vec![2.0]).unwrap(), 10, 2).unwrap();
        let phi = &set[3];
        let (lo, hi) = phi.support();
        for r in 0..=2usize {
            for x in [lo[0] - 0.1, lo[0], hi[0], hi[0] + 0.1, -5.0, 5.0] {
                let v = eval_test_derivative(phi, &[r], &[x]).unwrap();
                assert_eq!(v, 0.0, "order {r} at {x}");
            }
        }
    }

    #[test]
    fn first_derivative_vanishes_at_bump_center() {
        let set = make_testing_set(&DomainBox::new(vec![0.0], vec![1.0]).unwrap(), 1, 2).unwrap();
        let d = eval_test_derivative(&set[0], &[1], &[0.5]).unwrap();
        assert!(d.abs() < 1e-10, "symmetric bump derivative at center: {d}");
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let set = make_testing_set(&DomainBox::new(vec![0.0], vec![2.0]).unwrap(), 10, 2).unwrap();
        let phi = &set[4];
        let h = 1e-5;
        for x in [0.83, 0.9, 0.97] {
            let fd = (phi.value(&[x + h]) - 2.0 * phi.value(&[x]) + phi.value(&[x - h])) / (h * h);
            let exact = eval_test_derivative(phi, &[2], &[x]).unwrap();
            assert!(
                (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                "at {x}: fd {fd} vs exact {exact}"
            );
        }
    }

    #[test]
    fn integration_by_parts_identity() {
        // For u(t, x) = sin(t) cos(x) and alpha = (1, 0):
        // int (d_t u) phi = - int u d_t phi, both by midpoint quadrature.
        let domain = DomainBox::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let set = make_testing_set(&domain, 16, 2).unwrap();
        let n = 1000;
        let h = 2.0 / n as f64;
        for phi in &set {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for i in 0..n {
                let t = (i as f64 + 0.5) * h;
                for j in 0..n {
                    let x = (j as f64 + 0.5) * h;
                    if !phi.contains(&[t, x]) {
                        continue;
                    }
                    let du = t.cos() * x.cos();
                    let u = t.sin() * x.cos();
                    lhs += du * phi.value(&[t, x]) * h * h;
                    rhs -= u * eval_test_derivative(phi, &[1, 0], &[t, x]).unwrap() * h * h;
                }
            }
            assert!(
                (lhs - rhs).abs() < 1e-4,
                "integration by parts violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // degree-9 polynomial with 5 nodes
        let nodes = gauss_legendre(5);
        let integral: f64 = nodes
            .iter()
            .map(|&(x, w)| w * (x.powi(9) + 3.0 * x.powi(4) - x))
            .sum();
        assert_relative_eq!(integral, 6.0 / 5.0, epsilon = 1e-13);
    }

    fn quad_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h) * h).sum()
    }

    fn quad_2d(
        f: impl Fn(f64, f64) -> f64,
        (ax, bx): (f64, f64),
        (ay, by): (f64, f64),
        n: usize,
    ) -> f64 {
        let hx = (bx - ax) / n as f64;
        let hy = (by - ay) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = ax + (i as f64 + 0.5) * hx;
            for j in 0..n {
                let y = ay + (j as f64 + 0.5) * hy;
                s += f(x, y) * hx * hy;
            }
        }
        s
    }
}
