use super::battery::TestFunction;
use crate::cell_solver::PeriodicProfile;
use crate::eps_solver::SolveRun;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::scalar::{pairwise_dot, Real};
use rayon::prelude::*;

/// Fast-scale resolution guard: consecutive samples at most `eps / 16`
/// apart.
pub const SAMPLES_PER_FAST_PERIOD: usize = 16;

/// Smallest `theta` resolution accepted by [`pair_limit`].
pub const MIN_LIMIT_THETA_STEPS: usize = 32;

/// Streaming `int int z(t, x) psi(t, t / eps, x) dt dx` for a battery:
/// trapezoid in `t`, midpoint in `x`.
#[derive(Debug, Clone)]
pub struct SequencePairing<T> {
    battery: Vec<TestFunction>,
    weights: Vec<Vec<T>>,
    epsilon: T,
    t_final: T,
    max_gap: T,
    previous: Option<(T, Vec<f64>)>,
    sums: Vec<f64>,
}

impl<T: Real> SequencePairing<T> {
    pub fn new(grid: &Grid<T>, battery: &[TestFunction], epsilon: T, t_final: T) -> Result<Self> {
        if battery.is_empty() {
            return Err(Error::Precondition("empty test-function battery".into()));
        }
        if !(epsilon > T::zero()) {
            return Err(Error::Precondition("epsilon must be positive".into()));
        }
        Ok(Self {
            battery: battery.to_vec(),
            weights: battery.iter().map(|p| p.space_weights(grid)).collect(),
            epsilon,
            t_final,
            max_gap: epsilon / T::from_usize_lossy(SAMPLES_PER_FAST_PERIOD) * T::lit(1.0 + 1e-9),
            previous: None,
            sums: vec![0.0; battery.len()],
        })
    }

    fn integrand(&self, t: T, z: &ScalarField<T>) -> Vec<f64> {
        let theta = t / self.epsilon;
        self.battery
            .iter()
            .zip(&self.weights)
            .map(|(psi, w)| {
                (psi.time_factor(t, self.t_final) * psi.fast_factor(theta) * pairwise_dot(w, z.values())).as_f64()
            })
            .collect()
    }

    /// Adds the sample `z(t)`; samples must come in increasing `t`.
    pub fn push(&mut self, t: T, z: &ScalarField<T>) -> Result<()> {
        let f = self.integrand(t, z);
        if let Some((t0, f0)) = &self.previous {
            let gap = t - *t0;
            if !(gap >= T::zero()) {
                return Err(Error::Precondition("pairing samples must increase in t".into()));
            }
            if gap > self.max_gap {
                return Err(Error::Precondition(format!(
                    "sample spacing {gap:.3e} exceeds eps / {SAMPLES_PER_FAST_PERIOD} = {:.3e}; the fast scale aliases",
                    self.epsilon / T::from_usize_lossy(SAMPLES_PER_FAST_PERIOD)
                )));
            }
            let h = 0.5 * gap.as_f64();
            for ((s, a), b) in self.sums.iter_mut().zip(f0).zip(&f) {
                *s += h * (a + b);
            }
        }
        self.previous = Some((t, f));
        Ok(())
    }

    pub fn finish(self) -> Vec<f64> {
        self.sums
    }
}

fn run_t_final<T: Real>(run: &SolveRun<T>) -> Result<T> {
    if run.times.len() != run.snapshots.len() || run.times.is_empty() {
        return Err(Error::Precondition("run has no snapshots".into()));
    }
    Ok(*run.times.last().expect("nonempty"))
}

/// Pairings of a stored run with every function of `battery`.
pub fn pair_battery<T: Real>(run: &SolveRun<T>, battery: &[TestFunction], epsilon: T) -> Result<Vec<f64>> {
    let t_final = run_t_final(run)?;
    let mut acc = SequencePairing::new(run.snapshots[0].grid(), battery, epsilon, t_final)?;
    for (&t, z) in run.times.iter().zip(&run.snapshots) {
        acc.push(t, z)?;
    }
    Ok(acc.finish())
}

/// `int_Omega int_0^T z^eps(t, x) psi(t, t / eps, x) dt dx` over the stored
/// snapshots of `run`, which must be at most `eps / 16` apart.
pub fn pair_sequence<T: Real>(run: &SolveRun<T>, psi: &TestFunction, epsilon: T) -> Result<f64> {
    Ok(pair_battery(run, std::slice::from_ref(psi), epsilon)?[0])
}

/// Two-scale limit `U(t, theta, x)`: periodic profiles at increasing slow
/// times, linearly interpolated in `t` (constant outside the samples) and
/// in `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProfile<T> {
    pub times: Vec<T>,
    pub profiles: Vec<PeriodicProfile<T>>,
}

impl<T: Real> LimitProfile<T> {
    pub fn new(times: Vec<T>, profiles: Vec<PeriodicProfile<T>>) -> Result<Self> {
        if times.is_empty() || times.len() != profiles.len() {
            return Err(Error::Precondition("limit profile needs one profile per slow time".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("slow times must increase".into()));
        }
        let n = profiles[0].theta_steps();
        let grid = *profiles[0].grid();
        if profiles
            .iter()
            .any(|p| p.theta_steps() != n || !p.grid().same_shape(&grid))
        {
            return Err(Error::Precondition("profiles differ in resolution".into()));
        }
        Ok(Self { times, profiles })
    }

    /// A slow-time independent limit.
    pub fn stationary(profile: PeriodicProfile<T>) -> Self {
        Self {
            times: vec![T::zero()],
            profiles: vec![profile],
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        self.profiles[0].grid()
    }

    pub fn theta_steps(&self) -> usize {
        self.profiles[0].theta_steps()
    }

    fn bracket(&self, t: T) -> (usize, usize, T) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0, T::zero());
        }
        if t >= self.times[n - 1] {
            return (n - 1, n - 1, T::zero());
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, k + 1, w)
    }

    /// `U(t, theta, .)`.
    pub fn at(&self, t: T, theta: T) -> ScalarField<T> {
        let (a, b, w) = self.bracket(t);
        let ua = self.profiles[a].at(theta);
        if a == b || w.is_zero() {
            ua
        } else {
            ua.lerp(&self.profiles[b].at(theta), w)
        }
    }
}

// Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];
const PANELS_PER_INTERVAL: usize = 16;

/// `int_Omega int_0^T int_0^1 U psi dtheta dt dx`: rectangle rule on the
/// profile's `theta` nodes, midpoint in `x`, composite Gauss-Legendre in `t`
/// against the piecewise-linear slow-time interpolant.
pub fn pair_limit<T: Real>(limit: &LimitProfile<T>, psi: &TestFunction, t_final: T) -> Result<f64> {
    if limit.theta_steps() < MIN_LIMIT_THETA_STEPS {
        return Err(Error::Precondition(format!(
            "profile has {} theta nodes, pairing needs at least {MIN_LIMIT_THETA_STEPS}",
            limit.theta_steps()
        )));
    }
    let w = psi.space_weights(limit.grid());
    let q: Vec<f64> = limit
        .profiles
        .iter()
        .map(|p| {
            let n = p.theta_steps() as f64;
            p.thetas
                .iter()
                .zip(&p.states)
                .map(|(&th, s)| (psi.fast_factor(th) * pairwise_dot(&w, s.values())).as_f64())
                .sum::<f64>()
                / n
        })
        .collect();
    let times: Vec<f64> = limit.times.iter().map(|t| t.as_f64()).collect();
    let tf = t_final.as_f64();
    let q_at = |t: f64| -> f64 {
        let n = times.len();
        if n == 1 || t <= times[0] {
            return q[0];
        }
        if t >= times[n - 1] {
            return q[n - 1];
        }
        let k = times.partition_point(|&s| s <= t) - 1;
        let w = (t - times[k]) / (times[k + 1] - times[k]);
        q[k] + w * (q[k + 1] - q[k])
    };
    let mut breaks = vec![0.0];
    breaks.extend(times.iter().copied().filter(|&t| t > 0.0 && t < tf));
    breaks.push(tf);
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let h = (seg[1] - seg[0]) / PANELS_PER_INTERVAL as f64;
        for m in 0..PANELS_PER_INTERVAL {
            let a = seg[0] + h * m as f64;
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let t = a + 0.5 * h * (1.0 + x);
                total += 0.5 * h * wt * psi.time_factor(t, tf) * q_at(t);
            }
        }
    }
    Ok(total)
}

/// [`pair_limit`] for every function of the battery, concurrently.
pub fn pair_limit_battery<T: Real>(
    limit: &LimitProfile<T>,
    battery: &[TestFunction],
    t_final: T,
) -> Result<Vec<f64>> {
    battery.par_iter().map(|psi| pair_limit(limit, psi, t_final)).collect()
}
