//! Sampling grids, field samples, synthetic ground truth, and noise.
//!
//! Ground-truth solvers for the experiment equations live in [`solvers`];
//! the text container format used by the CLI lives in [`container`].

pub mod container;
pub mod solvers;

use crate::basis::DomainBox;
use crate::error::CoreError;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// One axis of a regular lattice: `start + step * i` for `i in 0..count`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self, CoreError> {
        if !(step > 0.0) || count == 0 {
            return Err(CoreError::invalid("axis needs positive step and count"));
        }
        Ok(AxisSpec { start, step, count })
    }

    /// Axis covering `[start, stop]` with the given step; the last point is
    /// the largest `start + k*step` not exceeding `stop` (within rounding).
    pub fn from_range(start: f64, step: f64, stop: f64) -> Result<Self, CoreError> {
        if !(step > 0.0) || !(stop > start) {
            return Err(CoreError::invalid("axis range is degenerate"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(AxisSpec { start, step, count })
    }

    pub fn stop(&self) -> f64 {
        self.start + self.step * (self.count - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.at(i)).collect()
    }

    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.start) / self.step).round();
        (i.max(0.0) as usize).min(self.count - 1)
    }
}

/// Regular lattice over a box in `R^M`, flattened row-major with the last
/// axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    pub axes: Vec<AxisSpec>,
}

impl SamplingGrid {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self, CoreError> {
        if axes.is_empty() {
            return Err(CoreError::invalid("grid needs at least one axis"));
        }
        Ok(SamplingGrid { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut idx = vec![0usize; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = rem % self.axes[d].count;
            rem /= self.axes[d].count;
        }
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.at(i))
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (d, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[d].count + i;
        }
        flat
    }

    pub fn nearest_flat(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = self
            .axes
            .iter()
            .zip(x)
            .map(|(a, &xi)| a.nearest(xi))
            .collect();
        self.flat_index(&idx)
    }

    /// Per-axis coordinate columns in flattened order.
    pub fn coord_columns(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut cols = vec![Vec::with_capacity(n); self.dim()];
        for flat in 0..n {
            for (d, v) in self.point(flat).into_iter().enumerate() {
                cols[d].push(v);
            }
        }
        cols
    }

    /// Bounding box of the lattice.
    pub fn domain(&self) -> DomainBox {
        let lo = self.axes.iter().map(|a| a.start).collect();
        let hi = self.axes.iter().map(|a| a.stop()).collect();
        DomainBox::new(lo, hi).expect("grid axes are non-degenerate")
    }
}

/// Field values sampled on a grid, one flat array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: SamplingGrid,
    pub values: Vec<Vec<f64>>,
}

impl FieldSample {
    pub fn new(grid: SamplingGrid, values: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        if values.is_empty() {
            return Err(CoreError::invalid("field sample needs >= 1 component"));
        }
        let n = grid.len();
        for comp in &values {
            if comp.len() != n {
                return Err(CoreError::invalid("component length does not match grid"));
            }
            if comp.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::invalid("field sample contains non-finite values"));
            }
        }
        Ok(FieldSample { grid, values })
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }
}

/// Provenance carried with generated datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub equation: String,
    pub theta: Vec<f64>,
    pub sigma_r: f64,
    pub seed: u64,
}

/// A set of observed fields sharing one sampling grid.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<FieldSample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(samples: Vec<FieldSample>, provenance: Provenance) -> Result<Self, CoreError> {
        if samples.is_empty() {
            return Err(CoreError::invalid("dataset needs >= 1 sample"));
        }
        let grid = &samples[0].grid;
        if samples.iter().any(|s| &s.grid != grid) {
            return Err(CoreError::invalid("dataset samples must share one grid"));
        }
        Ok(Dataset {
            samples,
            provenance,
        })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.samples[0].grid
    }

    pub fn components(&self) -> usize {
        self.samples[0].components()
    }
}

/// Sample the true field at the observation grid (nearest lattice node) and
/// add Gaussian noise with standard deviation `sigma_r` times the
/// per-component standard deviation of the true field over that grid.
/// Deterministic per seed.
pub fn observe(
    truth: &FieldSample,
    grid: &SamplingGrid,
    sigma_r: f64,
    seed: u64,
) -> Result<FieldSample, CoreError> {
    if sigma_r < 0.0 {
        return Err(CoreError::invalid("noise ratio must be non-negative"));
    }
    let n = grid.len();
    let mapped: Vec<usize> = (0..n)
        .map(|flat| truth.grid.nearest_flat(&grid.point(flat)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(truth.components());
    for comp in &truth.values {
        let base: Vec<f64> = mapped.iter().map(|&i| comp[i]).collect();
        if sigma_r == 0.0 {
            values.push(base);
            continue;
        }
        let mean = base.iter().sum::<f64>() / n as f64;
        let var = base.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = sigma_r * var.sqrt();
        let noisy: Vec<f64> = base
            .iter()
            .map(|v| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                v + sd * eps
            })
            .collect();
        values.push(noisy);
    }
    FieldSample::new(grid.clone(), values)
}

/// Draw an initial profile from a zero-mean squared-exponential Gaussian
/// process on a 1-D lattice. Deterministic per seed.
pub fn sample_gp_initial_condition(
    length_scale: f64,
    amplitude: f64,
    axis: &AxisSpec,
    seed: u64,
) -> Result<Vec<f64>, CoreError> {
    if !(length_scale > 0.0) || amplitude < 0.0 {
        return Err(CoreError::invalid("bad GP prior parameters"));
    }
    let n = axis.count;
    if amplitude == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let xs = axis.points();
    let a2 = amplitude * amplitude;
    let mut cov = DMatrix::from_fn(n, n, |i, j| {
        let d = xs[i] - xs[j];
        a2 * (-d * d / (2.0 * length_scale * length_scale)).exp()
    });
    let mut jitter = 1e-10;
    let chol = loop {
        let mut k = cov.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        match k.cholesky() {
            Some(c) => break c,
            None => {
                jitter *= 10.0;
                if jitter > 1e-6 {
                    return Err(CoreError::IllConditionedKernel);
                }
            }
        }
    };
    // keep `cov` alive only for the factorization input
    cov.fill(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let profile = chol.l() * z;
    Ok(profile.iter().copied().collect())
}

/// Convenience: evaluate a closure over a lattice into a single-component
/// field sample.
pub fn field_from_fn(
    grid: &SamplingGrid,
    f: impl Fn(&[f64]) -> f64,
) -> Result<FieldSample, CoreError> {
    let vals: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
    FieldSample::new(grid.clone(), vec![vals])
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw helper used by experiment presets.
pub(crate) fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_flattening_round_trips() {
        let grid = SamplingGrid::new(vec![
            AxisSpec::new(0.0, 0.5, 3).unwrap(),
            AxisSpec::new(-1.0, 0.25, 4).unwrap(),
        ])
        .unwrap();
        assert_eq!(grid.len(), 12);
        assert_eq!(grid.point(0), vec![0.0, -1.0]);
        assert_eq!(grid.point(1), vec![0.0, -0.75]); // last axis fastest
        assert_eq!(grid.point(4), vec![0.5, -1.0]);
        for flat in 0..grid.len() {
            let p = grid.point(flat);
            assert_eq!(grid.nearest_flat(&p), flat);
        }
    }

    #[test]
    fn axis_from_range_matches_paper_style_grids() {
        // {0, 0.07, ..., 2} has 29 points ending at 1.96
        let a = AxisSpec::from_range(0.0, 0.07, 2.0).unwrap();
        assert_eq!(a.count, 29);
        assert_relative_eq!(a.stop(), 1.96, epsilon = 1e-12);
        // {0, 0.1, ..., 2} has 21 points ending at 2
        let b = AxisSpec::from_range(0.0, 0.1, 2.0).unwrap();
        assert_eq!(b.count, 21);
        assert_relative_eq!(b.stop(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn observe_with_zero_noise_is_exact() {
        let fine = SamplingGrid::new(vec![AxisSpec::new(0.0, 0.01, 201).unwrap()]).unwrap();
        let truth = field_from_fn(&fine, |x| (3.0 * x[0]).sin()).unwrap();
        let coarse = SamplingGrid::new(vec![AxisSpec::new(0.0, 0.1, 21).unwrap()]).unwrap();
        let obs = observe(&truth, &coarse, 0.0, 7).unwrap();
        for i in 0..coarse.len() {
            let x = coarse.point(i)[0];
            assert_relative_eq!(obs.values[0][i], (3.0 * x).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn observe_noise_ratio_matches_statistics() {
        let fine = SamplingGrid::new(vec![
            AxisSpec::new(0.0, 0.05, 41).unwrap(),
            AxisSpec::new(0.0, 0.05, 41).unwrap(),
        ])
        .unwrap();
        let truth = field_from_fn(&fine, |x| (2.0 * x[0]).sin() + (1.5 * x[1]).cos()).unwrap();
        let obs = observe(&truth, &fine, 0.1, 3).unwrap();
        let n = fine.len() as f64;
        let diffs: Vec<f64> = obs.values[0]
            .iter()
            .zip(&truth.values[0])
            .map(|(a, b)| a - b)
            .collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
        let u_mean = truth.values[0].iter().sum::<f64>() / n;
        let u_sd = (truth.values[0].iter().map(|v| (v - u_mean).powi(2)).sum::<f64>() / n).sqrt();
        let ratio = sd / u_sd;
        assert!((ratio - 0.1).abs() < 0.005, "empirical ratio {ratio}");
    }

    #[test]
    fn observe_is_deterministic_per_seed() {
        let grid = SamplingGrid::new(vec![AxisSpec::new(0.0, 0.1, 21).unwrap()]).unwrap();
        let truth = field_from_fn(&grid, |x| x[0]).unwrap();
        let a = observe(&truth, &grid, 0.05, 11).unwrap();
        let b = observe(&truth, &grid, 0.05, 11).unwrap();
        let c = observe(&truth, &grid, 0.05, 12).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn gp_initial_condition_properties() {
        let axis = AxisSpec::new(0.0, 0.02, 101).unwrap();
        let a = sample_gp_initial_condition(0.4, 1.0, &axis, 5).unwrap();
        let b = sample_gp_initial_condition(0.4, 1.0, &axis, 5).unwrap();
        assert_eq!(a, b);
        let z = sample_gp_initial_condition(0.4, 0.0, &axis, 5).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        // Monte-Carlo check of the marginal variance at a pinned location.
        let tiny = AxisSpec::new(0.0, 0.1, 3).unwrap();
        let mut acc = 0.0;
        let draws = 1000;
        for seed in 0..draws {
            let p = sample_gp_initial_condition(0.4, 1.0, &tiny, seed).unwrap();
            acc += p[1] * p[1];
        }
        let var = acc / draws as f64;
        assert!((var - 1.0).abs() < 0.1, "sample variance {var}");
    }
}
