//! Ground-truth solvers for the synthetic experiments.
//!
//! All PDE solvers work on a fine internal lattice and can store every
//! `stride`-th time level to keep the returned sample compact. Returned grids
//! are integer refinements of the experiment sampling grids, so observation
//! by nearest-node lookup is exact.

use super::{AxisSpec, FieldSample, SamplingGrid};
use crate::error::CoreError;
use crate::expr::Expression;

/// Solve a tridiagonal system in place (Thomas algorithm).
/// `lower[0]` and `upper[n-1]` are ignored.
fn solve_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        debug_assert!(m.abs() > 0.0, "singular tridiagonal system");
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    rhs[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = d[i] - c[i] * rhs[i + 1];
    }
}

fn time_axis(t_max: f64, dt: f64, stride: usize) -> (usize, AxisSpec) {
    let steps = (t_max / dt).round() as usize;
    let stored = steps / stride + 1;
    (
        steps,
        AxisSpec {
            start: 0.0,
            step: dt * stride as f64,
            count: stored,
        },
    )
}

fn space_axis(x_max: f64, dx: f64) -> AxisSpec {
    let nx = (x_max / dx + 0.5).round() as usize;
    AxisSpec {
        start: 0.0,
        step: dx,
        count: nx + 1,
    }
}

/// Heat equation `u_t = theta1 u_xx + q(t)` on `[0,T] x [0,X]` with Neumann
/// boundaries `u_x(t,0) = u_x(t,X) = 0`, solved with the implicit
/// backward-time central-space scheme. `source` is an expression in `t`
/// (pass the zero constant for the homogeneous equation).
#[allow(clippy::too_many_arguments)]
pub fn solve_heat(
    theta1: f64,
    source: &Expression,
    u0: &[f64],
    t_max: f64,
    x_max: f64,
    dt: f64,
    dx: f64,
    stride: usize,
) -> Result<FieldSample, CoreError> {
    if !(theta1 > 0.0) || !(dt > 0.0) || !(dx > 0.0) || stride == 0 {
        return Err(CoreError::invalid("heat solver needs positive parameters"));
    }
    let x_axis = space_axis(x_max, dx);
    let nx = x_axis.count;
    if u0.len() != nx {
        return Err(CoreError::invalid(format!(
            "initial profile has {} points, lattice needs {nx}",
            u0.len()
        )));
    }
    let (steps, t_axis) = time_axis(t_max, dt, stride);
    let r = theta1 * dt / (dx * dx);
    // BTCS matrix rows; ghost-point Neumann closure doubles the off-diagonal
    // coupling at the ends.
    let mut lower = vec![-r; nx];
    let mut upper = vec![-r; nx];
    let diag = vec![1.0 + 2.0 * r; nx];
    upper[0] = -2.0 * r;
    lower[nx - 1] = -2.0 * r;

    let mut u = u0.to_vec();
    let mut stored = Vec::with_capacity(t_axis.count * nx);
    stored.extend_from_slice(&u);
    for n in 1..=steps {
        let t_next = n as f64 * dt;
        let q = source.evaluate(&[t_next], &[]);
        for v in u.iter_mut() {
            *v += dt * q;
        }
        solve_tridiag(&lower, &diag, &upper, &mut u);
        if n % stride == 0 {
            stored.extend_from_slice(&u);
        }
    }
    let grid = SamplingGrid::new(vec![t_axis, x_axis])?;
    FieldSample::new(grid, vec![stored])
}

/// Burgers' equation `u_t + u u_x = theta1 u_xx` with Dirichlet boundaries
/// pinned to the initial profile's endpoints, solved with Crank-Nicolson and
/// lagged (Picard) linearization of the advection term.
#[allow(clippy::too_many_arguments)]
pub fn solve_burgers(
    theta1: f64,
    u0: &[f64],
    t_max: f64,
    x_max: f64,
    dt: f64,
    dx: f64,
    stride: usize,
) -> Result<FieldSample, CoreError> {
    if !(theta1 > 0.0) || !(dt > 0.0) || !(dx > 0.0) || stride == 0 {
        return Err(CoreError::invalid("burgers solver needs positive parameters"));
    }
    let x_axis = space_axis(x_max, dx);
    let nx = x_axis.count;
    if u0.len() != nx {
        return Err(CoreError::invalid("initial profile does not match lattice"));
    }
    let (steps, t_axis) = time_axis(t_max, dt, stride);
    let r = theta1 * dt / (2.0 * dx * dx);
    let left = u0[0];
    let right = u0[nx - 1];

    let mut u = u0.to_vec();
    let mut stored = Vec::with_capacity(t_axis.count * nx);
    stored.extend_from_slice(&u);
    let mut lower = vec![0.0; nx];
    let mut diag = vec![0.0; nx];
    let mut upper = vec![0.0; nx];
    let mut rhs = vec![0.0; nx];
    for n in 1..=steps {
        // Explicit half of Crank-Nicolson evaluated at the current level.
        for i in 0..nx {
            rhs[i] = if i == 0 || i == nx - 1 {
                if i == 0 {
                    left
                } else {
                    right
                }
            } else {
                let diff = r * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
                let adv = u[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
                u[i] + diff - 0.5 * dt * adv
            };
        }
        let mut iterate = u.clone();
        let mut converged = false;
        for _ in 0..10 {
            for i in 0..nx {
                if i == 0 || i == nx - 1 {
                    lower[i] = 0.0;
                    diag[i] = 1.0;
                    upper[i] = 0.0;
                } else {
                    let c = iterate[i] * dt / (4.0 * dx);
                    lower[i] = -r - c;
                    diag[i] = 1.0 + 2.0 * r;
                    upper[i] = -r + c;
                }
            }
            let mut next = rhs.clone();
            solve_tridiag(&lower, &diag, &upper, &mut next);
            let delta = iterate
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            iterate = next;
            if delta < 1e-10 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(CoreError::NonlinearDivergence {
                step: n,
                residual: f64::NAN,
            });
        }
        u = iterate;
        if n % stride == 0 {
            stored.extend_from_slice(&u);
        }
    }
    let grid = SamplingGrid::new(vec![t_axis, x_axis])?;
    FieldSample::new(grid, vec![stored])
}

/// Wave equation `u_tt = theta1 u_xx + q(t)` with Dirichlet boundaries pinned
/// to the initial profile's endpoints and `u_t(0, .) = 0`, solved with an
/// implicit difference scheme that averages the spatial operator over the
/// `n+1` and `n-1` levels.
#[allow(clippy::too_many_arguments)]
pub fn solve_wave(
    theta1: f64,
    source: &Expression,
    u0: &[f64],
    t_max: f64,
    x_max: f64,
    dt: f64,
    dx: f64,
    stride: usize,
) -> Result<FieldSample, CoreError> {
    if !(theta1 > 0.0) || !(dt > 0.0) || !(dx > 0.0) || stride == 0 {
        return Err(CoreError::invalid("wave solver needs positive parameters"));
    }
    let x_axis = space_axis(x_max, dx);
    let nx = x_axis.count;
    if u0.len() != nx {
        return Err(CoreError::invalid("initial profile does not match lattice"));
    }
    let (steps, t_axis) = time_axis(t_max, dt, stride);
    let s = theta1 * dt * dt / (dx * dx);
    let half = 0.5 * s;

    let d2 = |u: &[f64], i: usize| u[i - 1] - 2.0 * u[i] + u[i + 1];

    let mut prev = u0.to_vec();
    // First step from the Taylor expansion with zero initial velocity.
    let mut curr = prev.clone();
    let q0 = source.evaluate(&[0.0], &[]);
    for i in 1..nx - 1 {
        curr[i] = prev[i] + 0.5 * s * d2(&prev, i) + 0.5 * dt * dt * q0;
    }

    let mut lower = vec![-half; nx];
    let mut upper = vec![-half; nx];
    let mut diag = vec![1.0 + s; nx];
    lower[nx - 1] = 0.0;
    upper[0] = 0.0;
    diag[0] = 1.0;
    diag[nx - 1] = 1.0;

    let mut stored = Vec::with_capacity(t_axis.count * nx);
    stored.extend_from_slice(&prev);
    if steps >= 1 && stride == 1 {
        stored.extend_from_slice(&curr);
    } else if steps >= 1 && 1 % stride == 0 {
        stored.extend_from_slice(&curr);
    }
    let mut rhs = vec![0.0; nx];
    for n in 2..=steps {
        let q = source.evaluate(&[(n as f64 - 1.0) * dt], &[]);
        for i in 0..nx {
            rhs[i] = if i == 0 || i == nx - 1 {
                u0[i]
            } else {
                2.0 * curr[i] - prev[i] + half * d2(&prev, i) + dt * dt * q
            };
        }
        solve_tridiag(&lower, &diag, &upper, &mut rhs);
        prev = std::mem::replace(&mut curr, rhs.clone());
        if n % stride == 0 {
            stored.extend_from_slice(&curr);
        }
    }
    let grid = SamplingGrid::new(vec![t_axis, x_axis])?;
    FieldSample::new(grid, vec![stored])
}

/// Closed-form solution of the forced and damped harmonic oscillator
/// `u'' + 2 theta1 theta2 u' + theta2^2 u = theta3 sin(theta4 t)`.
#[derive(Debug, Clone)]
pub struct OscillatorSolution {
    zeta: f64,
    omega: f64,
    omega_d: f64,
    c1: f64,
    c2: f64,
    a: f64,
    b: f64,
    theta4: f64,
}

impl OscillatorSolution {
    /// Underdamped closed form; requires `0 < theta1 < 1` and `theta2 > 0`.
    pub fn new(theta: [f64; 4], u0: f64, v0: f64) -> Result<Self, CoreError> {
        let [zeta, omega, amp, freq] = theta;
        if !(zeta > 0.0 && zeta < 1.0) || !(omega > 0.0) {
            return Err(CoreError::invalid(
                "closed form requires an underdamped oscillator",
            ));
        }
        let omega_d = omega * (1.0 - zeta * zeta).sqrt();
        let denom = (omega * omega - freq * freq).powi(2) + (2.0 * zeta * omega * freq).powi(2);
        let (a, b) = if amp == 0.0 {
            (0.0, 0.0)
        } else {
            (
                amp * (omega * omega - freq * freq) / denom,
                -amp * 2.0 * zeta * omega * freq / denom,
            )
        };
        let c1 = u0 - b;
        let c2 = (v0 + zeta * omega * c1 - freq * a) / omega_d;
        Ok(OscillatorSolution {
            zeta,
            omega,
            omega_d,
            c1,
            c2,
            a,
            b,
            theta4: freq,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        let decay = (-self.zeta * self.omega * t).exp();
        decay * (self.c1 * (self.omega_d * t).cos() + self.c2 * (self.omega_d * t).sin())
            + self.a * (self.theta4 * t).sin()
            + self.b * (self.theta4 * t).cos()
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let g = -self.zeta * self.omega;
        let decay = (g * t).exp();
        let (cw, sw) = ((self.omega_d * t).cos(), (self.omega_d * t).sin());
        decay * (g * (self.c1 * cw + self.c2 * sw) + self.omega_d * (-self.c1 * sw + self.c2 * cw))
            + self.theta4 * (self.a * (self.theta4 * t).cos() - self.b * (self.theta4 * t).sin())
    }

    pub fn second_deriv(&self, t: f64) -> f64 {
        let g = -self.zeta * self.omega;
        let decay = (g * t).exp();
        let (cw, sw) = ((self.omega_d * t).cos(), (self.omega_d * t).sin());
        let h = self.c1 * cw + self.c2 * sw;
        let hp = self.omega_d * (-self.c1 * sw + self.c2 * cw);
        let hpp = -self.omega_d * self.omega_d * h;
        decay * (g * g * h + 2.0 * g * hp + hpp)
            - self.theta4 * self.theta4
                * (self.a * (self.theta4 * t).sin() + self.b * (self.theta4 * t).cos())
    }
}

/// Evaluate the oscillator trajectory on a time lattice. Underdamped
/// parameters use the exact closed form; other regimes fall back to RK4 with
/// an internal step of 1e-4.
pub fn solve_oscillator(
    theta: [f64; 4],
    u0: f64,
    v0: f64,
    t_max: f64,
    dt: f64,
) -> Result<FieldSample, CoreError> {
    let axis = AxisSpec::from_range(0.0, dt, t_max)?;
    let values: Vec<f64> = match OscillatorSolution::new(theta, u0, v0) {
        Ok(sol) => axis.points().iter().map(|&t| sol.value(t)).collect(),
        Err(_) => oscillator_rk4(theta, u0, v0, &axis),
    };
    let grid = SamplingGrid::new(vec![axis])?;
    FieldSample::new(grid, vec![values])
}

fn oscillator_rk4(theta: [f64; 4], u0: f64, v0: f64, axis: &AxisSpec) -> Vec<f64> {
    let [zeta, omega, amp, freq] = theta;
    let f = |t: f64, u: f64, v: f64| -> (f64, f64) {
        (v, amp * (freq * t).sin() - 2.0 * zeta * omega * v - omega * omega * u)
    };
    let h = 1e-4f64;
    let mut out = Vec::with_capacity(axis.count);
    let (mut t, mut u, mut v) = (0.0, u0, v0);
    for i in 0..axis.count {
        let target = axis.at(i);
        while t < target - 1e-12 {
            let step = h.min(target - t);
            let (k1u, k1v) = f(t, u, v);
            let (k2u, k2v) = f(t + 0.5 * step, u + 0.5 * step * k1u, v + 0.5 * step * k1v);
            let (k3u, k3v) = f(t + 0.5 * step, u + 0.5 * step * k2u, v + 0.5 * step * k2v);
            let (k4u, k4v) = f(t + step, u + step * k3u, v + step * k3v);
            u += step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += step;
        }
        out.push(u);
    }
    out
}

/// Transport with age-specific decay, `u_t + u_a = -m(a) u`, integrated
/// exactly along the characteristics `t - a = const` with Gauss quadrature of
/// the decay exponent per step. Requires `dt == da`; the initial profile is a
/// function evaluable on `[-T, A]` (characteristics through the inflow
/// boundary reach back to negative arguments).
pub fn solve_transport_decay(
    mortality: &dyn Fn(f64) -> f64,
    u0: &dyn Fn(f64) -> f64,
    t_max: f64,
    a_max: f64,
    dt: f64,
    da: f64,
    stride: usize,
) -> Result<FieldSample, CoreError> {
    if (dt - da).abs() > 1e-12 {
        return Err(CoreError::invalid(
            "characteristic alignment requires dt == da",
        ));
    }
    if stride == 0 {
        return Err(CoreError::invalid("stride must be positive"));
    }
    let a_axis = space_axis(a_max, da);
    let na = a_axis.count;
    let (steps, t_axis) = time_axis(t_max, dt, stride);
    let gauss = crate::basis::gauss_legendre(5);
    let decay_step = |a_hi: f64| -> f64 {
        // exp(-int_{a_hi - da}^{a_hi} m)
        let half = 0.5 * da;
        let mid = a_hi - half;
        let integral: f64 = gauss
            .iter()
            .map(|&(x, w)| w * half * mortality(mid + half * x))
            .sum();
        (-integral).exp()
    };
    let step_factors: Vec<f64> = (0..na).map(|j| decay_step(a_axis.at(j))).collect();

    let mut row: Vec<f64> = a_axis.points().iter().map(|&a| u0(a)).collect();
    let mut stored = Vec::with_capacity(t_axis.count * na);
    stored.extend_from_slice(&row);
    for n in 1..=steps {
        let t = n as f64 * dt;
        let mut next = vec![0.0; na];
        // inflow boundary at a = 0: integrate the characteristic from the
        // extended initial profile
        let mut boundary = u0(-t);
        let mut a_hi = 0.0;
        while a_hi > -t + 1e-12 {
            // decay accumulated on [a_hi - da, a_hi] along the characteristic
            boundary *= decay_step(a_hi);
            a_hi -= da;
        }
        next[0] = boundary;
        for j in 1..na {
            next[j] = row[j - 1] * step_factors[j];
        }
        row = next;
        if n % stride == 0 {
            stored.extend_from_slice(&row);
        }
    }
    let grid = SamplingGrid::new(vec![t_axis, a_axis])?;
    FieldSample::new(grid, vec![stored])
}

/// Age-structured survival model with mortality `m(a) = 2 e^{theta a}`.
#[allow(clippy::too_many_arguments)]
pub fn solve_slm(
    theta: f64,
    u0: &dyn Fn(f64) -> f64,
    t_max: f64,
    a_max: f64,
    dt: f64,
    da: f64,
    stride: usize,
) -> Result<FieldSample, CoreError> {
    let m = move |a: f64| 2.0 * (theta * a).exp();
    solve_transport_decay(&m, u0, t_max, a_max, dt, da, stride)
}
