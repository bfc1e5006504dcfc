//! Nonlinear test problems with analytic sparse Jacobians.
//!
//! All problems are dimensionless. Residual and Jacobian evaluation are pure
//! and panic only on a state vector of the wrong length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{laplacian_1d, CsrMatrix, DenseVector};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
}

/// A square nonlinear system `R(u) = 0` with its Jacobian `R'(u)`.
pub trait NonlinearProblem<T: Real>: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn residual(&self, u: &[T]) -> DenseVector<T>;

    fn jacobian(&self, u: &[T]) -> CsrMatrix<T>;

    fn initial_guess(&self) -> DenseVector<T>;

    fn exact_solution(&self) -> Option<DenseVector<T>> {
        None
    }

    /// False when `u` lies outside the region where the model is meaningful.
    /// The residual is still defined there.
    fn is_physical(&self, _u: &[T]) -> bool {
        true
    }
}

fn check_len(u: &[impl Copy], n: usize) {
    assert_eq!(
        u.len(),
        n,
        "state vector has length {}, expected {n}",
        u.len()
    );
}

/// `-Δu - λ e^u = 0` on the unit square, homogeneous Dirichlet data,
/// five-point stencil on a `grid_n x grid_n` interior grid.
///
/// The residual is scaled by the cell area `h^2`:
/// `R_k = 4 u_k - Σ_neighbours u - h^2 λ e^{u_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bratu2d<T: Real> {
    grid_n: usize,
    lambda: T,
    h2: T,
}

impl<T: Real> Bratu2d<T> {
    pub fn new(grid_n: usize, lambda: T) -> Result<Self, ProblemError> {
        if grid_n < 3 {
            return Err(ProblemError::InvalidParameter(format!(
                "bratu2d grid_n must be >= 3, got {grid_n}"
            )));
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(ProblemError::InvalidParameter(
                "bratu2d lambda must be finite and >= 0".into(),
            ));
        }
        let h = T::one() / T::from_count(grid_n + 1);
        Ok(Self {
            grid_n,
            lambda,
            h2: h * h,
        })
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    fn neighbours(&self, k: usize) -> impl Iterator<Item = usize> {
        let n = self.grid_n;
        let (i, j) = (k / n, k % n);
        [
            (i > 0).then(|| k - n),
            (j > 0).then(|| k - 1),
            (j + 1 < n).then(|| k + 1),
            (i + 1 < n).then(|| k + n),
        ]
        .into_iter()
        .flatten()
    }
}

impl<T: Real> NonlinearProblem<T> for Bratu2d<T> {
    fn name(&self) -> String {
        format!("bratu2d(n={},lambda={})", self.grid_n, self.lambda)
    }

    fn dim(&self) -> usize {
        self.grid_n * self.grid_n
    }

    fn residual(&self, u: &[T]) -> DenseVector<T> {
        check_len(u, self.dim());
        let four = T::lit(4.0);
        let r: Vec<T> = (0..self.dim())
            .map(|k| {
                let nb: T = self.neighbours(k).map(|m| u[m]).sum();
                four * u[k] - nb - self.h2 * self.lambda * u[k].exp()
            })
            .collect();
        DenseVector::from_vec(r).expect("non-empty grid")
    }

    fn jacobian(&self, u: &[T]) -> CsrMatrix<T> {
        check_len(u, self.dim());
        let mut t = Vec::with_capacity(5 * self.dim());
        for (k, &uk) in u.iter().enumerate() {
            t.extend(self.neighbours(k).map(|m| (k, m, -T::one())));
            t.push((k, k, T::lit(4.0) - self.h2 * self.lambda * uk.exp()));
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &t).expect("stencil in range")
    }

    fn initial_guess(&self) -> DenseVector<T> {
        DenseVector::zeros(self.dim())
    }

    fn exact_solution(&self) -> Option<DenseVector<T>> {
        (self.lambda == T::zero()).then(|| DenseVector::zeros(self.dim()))
    }
}

/// Discretized Chandrasekhar H-equation with midpoint quadrature:
/// `R_i(H) = H_i - (1 - (c / 2n) Σ_j μ_i H_j / (μ_i + μ_j))^{-1}`, `μ_i = (i - 1/2) / n`.
///
/// The Jacobian is dense.
#[derive(Debug, Clone, PartialEq)]
pub struct ChandrasekharH<T: Real> {
    c: T,
    mu: Vec<T>,
}

impl<T: Real> ChandrasekharH<T> {
    pub fn new(n_points: usize, c: T) -> Result<Self, ProblemError> {
        if n_points < 2 {
            return Err(ProblemError::InvalidParameter(format!(
                "heq needs at least 2 points, got {n_points}"
            )));
        }
        if !(c >= T::zero() && c < T::one()) {
            return Err(ProblemError::InvalidParameter(
                "heq c must lie in [0, 1)".into(),
            ));
        }
        let nf = T::from_count(n_points);
        let mu = (0..n_points)
            .map(|i| (T::from_count(i) + T::lit(0.5)) / nf)
            .collect();
        Ok(Self { c, mu })
    }

    pub fn nodes(&self) -> &[T] {
        &self.mu
    }

    fn weight(&self) -> T {
        self.c / (T::lit(2.0) * T::from_count(self.mu.len()))
    }

    fn quadrature(&self, h: &[T]) -> Vec<T> {
        let w = self.weight();
        self.mu
            .iter()
            .map(|&mi| {
                w * self
                    .mu
                    .iter()
                    .zip(h)
                    .map(|(&mj, &hj)| mi * hj / (mi + mj))
                    .sum::<T>()
            })
            .collect()
    }
}

impl<T: Real> NonlinearProblem<T> for ChandrasekharH<T> {
    fn name(&self) -> String {
        format!("heq(n={},c={})", self.mu.len(), self.c)
    }

    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn residual(&self, h: &[T]) -> DenseVector<T> {
        check_len(h, self.dim());
        let s = self.quadrature(h);
        let r = h
            .iter()
            .zip(&s)
            .map(|(&hi, &si)| hi - T::one() / (T::one() - si))
            .collect();
        DenseVector::from_vec(r).expect("non-empty")
    }

    fn jacobian(&self, h: &[T]) -> CsrMatrix<T> {
        check_len(h, self.dim());
        let n = self.dim();
        let s = self.quadrature(h);
        let w = self.weight();
        let mut t = Vec::with_capacity(n * n);
        for (i, (&mi, &si)) in self.mu.iter().zip(&s).enumerate() {
            let d = T::one() - si;
            let scale = w / (d * d);
            for (k, &mk) in self.mu.iter().enumerate() {
                let mut v = -scale * mi / (mi + mk);
                if i == k {
                    v = v + T::one();
                }
                t.push((i, k, v));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).expect("dense pattern in range")
    }

    fn initial_guess(&self) -> DenseVector<T> {
        DenseVector::ones(self.dim())
    }

    fn exact_solution(&self) -> Option<DenseVector<T>> {
        (self.c == T::zero()).then(|| DenseVector::ones(self.dim()))
    }
}

/// Flow parameters of the 1D Buckley-Leverett saturation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPhaseParams<T: Real> {
    /// Water-to-oil viscosity ratio `M` in `f(s) = s^2 / (s^2 + M (1 - s)^2)`.
    pub mobility_ratio: T,
    /// Total Darcy velocity, equal to the injection and the production rate.
    pub velocity: T,
    /// Water fractional flow of the injected fluid.
    pub inflow_fraction: T,
}

impl<T: Real> Default for TwoPhaseParams<T> {
    fn default() -> Self {
        Self {
            mobility_ratio: T::lit(2.0),
            velocity: T::one(),
            inflow_fraction: T::one(),
        }
    }
}

impl<T: Real> TwoPhaseParams<T> {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(self.mobility_ratio > T::zero()) {
            return Err(ProblemError::InvalidParameter(
                "mobility_ratio must be positive".into(),
            ));
        }
        if !(self.velocity >= T::zero()) || !self.velocity.is_finite() {
            return Err(ProblemError::InvalidParameter(
                "velocity must be finite and non-negative".into(),
            ));
        }
        if !(self.inflow_fraction >= T::zero() && self.inflow_fraction <= T::one()) {
            return Err(ProblemError::InvalidParameter(
                "inflow_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn fractional_flow(&self, s: T) -> T {
        let s2 = s * s;
        let o = T::one() - s;
        s2 / (s2 + self.mobility_ratio * o * o)
    }

    pub fn fractional_flow_derivative(&self, s: T) -> T {
        let o = T::one() - s;
        let d = s * s + self.mobility_ratio * o * o;
        T::lit(2.0) * self.mobility_ratio * s * o / (d * d)
    }
}

/// One backward-Euler step of `s_t + f(s)_x = 0` on `[0, 1]` with upwind
/// fluxes, water injected at `x = 0` and produced at `x = 1`.
///
/// Residual per cell: `R_i = s_i - s_i^old + (dt / dx) (F_{i+1/2} - F_{i-1/2})`
/// with `F_{1/2} = v f_in` and `F_{i+1/2} = v f(s_i)`. The Jacobian is lower
/// bidiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhase1d<T: Real> {
    dt: T,
    dx: T,
    state_prev: DenseVector<T>,
    params: TwoPhaseParams<T>,
}

/// Saturations outside this band are flagged non-physical.
pub const SATURATION_BAND: (f64, f64) = (-0.1, 1.1);

impl<T: Real> TwoPhase1d<T> {
    pub fn new(
        cells: usize,
        dt: T,
        state_prev: DenseVector<T>,
        params: TwoPhaseParams<T>,
    ) -> Result<Self, ProblemError> {
        if cells < 2 {
            return Err(ProblemError::InvalidParameter(format!(
                "twophase1d needs at least 2 cells, got {cells}"
            )));
        }
        if state_prev.len() != cells {
            return Err(ProblemError::InvalidParameter(format!(
                "state_prev has {} entries for {cells} cells",
                state_prev.len()
            )));
        }
        if state_prev
            .iter()
            .any(|&s| !(s >= T::zero() && s <= T::one()))
        {
            return Err(ProblemError::InvalidParameter(
                "state_prev saturations must lie in [0, 1]".into(),
            ));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(ProblemError::InvalidParameter("dt must be positive".into()));
        }
        params.validate()?;
        Ok(Self {
            dt,
            dx: T::one() / T::from_count(cells),
            state_prev,
            params,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn state_prev(&self) -> &DenseVector<T> {
        &self.state_prev
    }

    pub fn params(&self) -> &TwoPhaseParams<T> {
        &self.params
    }

    /// Water flux `F_{i+1/2}` for `i = -1..n-1`, returned as `n + 1` interface values.
    pub fn interface_fluxes(&self, s: &[T]) -> Vec<T> {
        let v = self.params.velocity;
        std::iter::once(v * self.params.inflow_fraction)
            .chain(s.iter().map(|&si| v * self.params.fractional_flow(si)))
            .collect()
    }

    /// Net water influx through the boundaries over the step: `dt (F_in - F_out)`.
    pub fn boundary_influx(&self, s: &[T]) -> T {
        let f = self.interface_fluxes(s);
        self.dt * (f[0] - f[f.len() - 1])
    }
}

impl<T: Real> NonlinearProblem<T> for TwoPhase1d<T> {
    fn name(&self) -> String {
        format!("twophase1d(cells={},dt={})", self.state_prev.len(), self.dt)
    }

    fn dim(&self) -> usize {
        self.state_prev.len()
    }

    fn residual(&self, s: &[T]) -> DenseVector<T> {
        check_len(s, self.dim());
        let c = self.dt / self.dx;
        let f = self.interface_fluxes(s);
        let r = s
            .iter()
            .zip(self.state_prev.iter())
            .enumerate()
            .map(|(i, (&si, &so))| si - so + c * (f[i + 1] - f[i]))
            .collect();
        DenseVector::from_vec(r).expect("non-empty")
    }

    fn jacobian(&self, s: &[T]) -> CsrMatrix<T> {
        check_len(s, self.dim());
        let c = self.dt / self.dx * self.params.velocity;
        let mut t = Vec::with_capacity(2 * s.len());
        for (i, &si) in s.iter().enumerate() {
            let df = self.params.fractional_flow_derivative(si);
            t.push((i, i, T::one() + c * df));
            if i + 1 < s.len() {
                t.push((i + 1, i, -c * df));
            }
        }
        CsrMatrix::from_triplets(s.len(), s.len(), &t).expect("bidiagonal in range")
    }

    fn initial_guess(&self) -> DenseVector<T> {
        self.state_prev.clone()
    }

    fn is_physical(&self, s: &[T]) -> bool {
        let (lo, hi) = (T::lit(SATURATION_BAND.0), T::lit(SATURATION_BAND.1));
        s.iter().all(|&v| v >= lo && v <= hi)
    }
}

/// `R(u) = A u - b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineProblem<T: Real> {
    a: CsrMatrix<T>,
    b: DenseVector<T>,
    u0: DenseVector<T>,
    exact: Option<DenseVector<T>>,
}

impl<T: Real> AffineProblem<T> {
    pub fn new(
        a: CsrMatrix<T>,
        b: DenseVector<T>,
        u0: DenseVector<T>,
    ) -> Result<Self, ProblemError> {
        if !a.is_square() || a.n_rows() != b.len() || b.len() != u0.len() {
            return Err(ProblemError::InvalidParameter(
                "affine problem needs a square matrix matching b and u0".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            u0,
            exact: None,
        })
    }

    /// Builds `b = A u*` so that `u*` is the known root.
    pub fn with_solution(
        a: CsrMatrix<T>,
        solution: DenseVector<T>,
        u0: DenseVector<T>,
    ) -> Result<Self, ProblemError> {
        let b = a
            .spmv(&solution)
            .map_err(|e| ProblemError::InvalidParameter(e.to_string()))?;
        let mut p = Self::new(a, b, u0)?;
        p.exact = Some(solution);
        Ok(p)
    }

    /// 1D Laplacian system of size `n` with root `u*_i = sin(i + 1)`, started from zero.
    pub fn laplacian(n: usize) -> Self {
        let solution = DenseVector::from_vec((0..n).map(|i| T::from_count(i + 1).sin()).collect())
            .expect("n >= 1");
        Self::with_solution(laplacian_1d(n), solution, DenseVector::zeros(n)).expect("consistent")
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.a
    }
}

impl<T: Real> NonlinearProblem<T> for AffineProblem<T> {
    fn name(&self) -> String {
        format!("affine(n={})", self.b.len())
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn residual(&self, u: &[T]) -> DenseVector<T> {
        check_len(u, self.dim());
        let mut r = self.a.spmv(u).expect("dimension checked");
        for (ri, &bi) in r.iter_mut().zip(self.b.iter()) {
            *ri = *ri - bi;
        }
        r
    }

    fn jacobian(&self, _u: &[T]) -> CsrMatrix<T> {
        self.a.clone()
    }

    fn initial_guess(&self) -> DenseVector<T> {
        self.u0.clone()
    }

    fn exact_solution(&self) -> Option<DenseVector<T>> {
        self.exact.clone()
    }
}

/// `R(u) = B (u - u*) + κ (u∘u - u*∘u*)`, with known root `u*`.
///
/// `R'(u) = B + 2κ diag(u)`, so `||R'(u) - R'(u*)||_2 = 2|κ| max_i |u_i - u*_i|`
/// and the derivative is Lipschitz with constant `2|κ|` in the 2-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticMap<T: Real> {
    linear: CsrMatrix<T>,
    kappa: T,
    root: DenseVector<T>,
    u0: DenseVector<T>,
}

impl<T: Real> QuadraticMap<T> {
    pub fn new(
        linear: CsrMatrix<T>,
        kappa: T,
        root: DenseVector<T>,
        u0: DenseVector<T>,
    ) -> Result<Self, ProblemError> {
        if !linear.is_square() || linear.n_rows() != root.len() || root.len() != u0.len() {
            return Err(ProblemError::InvalidParameter(
                "quadratic map needs a square linear part matching u* and u0".into(),
            ));
        }
        Ok(Self {
            linear,
            kappa,
            root,
            u0,
        })
    }

    /// Scalar `R(u) = u^2 - a^2` started from `u0`.
    pub fn scalar_square(root: T, u0: T) -> Self {
        let zero = CsrMatrix::from_triplets(1, 1, &[]).expect("1x1");
        Self::new(
            zero,
            T::one(),
            DenseVector::filled(1, root),
            DenseVector::filled(1, u0),
        )
        .expect("consistent")
    }

    /// Lipschitz constant of `R'` in the 2-norm.
    pub fn lipschitz_constant(&self) -> T {
        T::lit(2.0) * self.kappa.abs()
    }
}

impl<T: Real> NonlinearProblem<T> for QuadraticMap<T> {
    fn name(&self) -> String {
        format!("quadratic(n={},kappa={})", self.root.len(), self.kappa)
    }

    fn dim(&self) -> usize {
        self.root.len()
    }

    fn residual(&self, u: &[T]) -> DenseVector<T> {
        check_len(u, self.dim());
        let d: Vec<T> = u
            .iter()
            .zip(self.root.iter())
            .map(|(&a, &b)| a - b)
            .collect();
        let mut r = self.linear.spmv(&d).expect("dimension checked");
        for ((ri, &ui), &si) in r.iter_mut().zip(u).zip(self.root.iter()) {
            *ri = *ri + self.kappa * (ui * ui - si * si);
        }
        r
    }

    fn jacobian(&self, u: &[T]) -> CsrMatrix<T> {
        check_len(u, self.dim());
        let mut t: Vec<(usize, usize, T)> = (0..self.dim())
            .flat_map(|i| self.linear.row(i).map(move |(j, v)| (i, j, v)))
            .collect();
        t.extend(
            u.iter()
                .enumerate()
                .map(|(i, &ui)| (i, i, T::lit(2.0) * self.kappa * ui)),
        );
        CsrMatrix::from_triplets(self.dim(), self.dim(), &t).expect("in range")
    }

    fn initial_guess(&self) -> DenseVector<T> {
        self.u0.clone()
    }

    fn exact_solution(&self) -> Option<DenseVector<T>> {
        Some(self.root.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Checks `||(R(u + h v) - R(u)) / h - J(u) v|| <= c h` for random unit `v`.
    fn fd_consistency<P: NonlinearProblem<f64>>(p: &P, u: &[f64], rng: &mut ChaCha8Rng) -> f64 {
        let n = p.dim();
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let h = 1e-6;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let r0 = p.residual(u);
        let r1 = p.residual(&up);
        let jv = p.jacobian(u).spmv(&v).unwrap();
        let diff: Vec<f64> = (0..n).map(|i| (r1[i] - r0[i]) / h - jv[i]).collect();
        norm2(&diff) / h
    }

    fn random_state(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bratu = Bratu2d::new(6, 3.0).unwrap();
        let heq = ChandrasekharH::new(12, 0.9).unwrap();
        let prev = DenseVector::from_vec(random_state(10, 0.0, 1.0, &mut rng)).unwrap();
        let tp = TwoPhase1d::new(10, 0.05, prev, TwoPhaseParams::default()).unwrap();
        let quad = QuadraticMap::new(
            laplacian_1d(5),
            0.7,
            DenseVector::ones(5),
            DenseVector::zeros(5),
        )
        .unwrap();
        for _ in 0..5 {
            let u = random_state(36, -0.5, 1.0, &mut rng);
            assert!(fd_consistency(&bratu, &u, &mut rng) < 10.0);
            let h = random_state(12, 0.8, 2.5, &mut rng);
            assert!(fd_consistency(&heq, &h, &mut rng) < 10.0);
            let s = random_state(10, 0.0, 1.0, &mut rng);
            assert!(fd_consistency(&tp, &s, &mut rng) < 100.0);
            let q = random_state(5, -2.0, 2.0, &mut rng);
            assert!(fd_consistency(&quad, &q, &mut rng) < 10.0);
        }
    }

    #[test]
    fn bratu_linear_case() {
        let p = Bratu2d::<f64>::new(5, 0.0).unwrap();
        let zero = p.initial_guess();
        assert_eq!(p.residual(&zero).norm2(), 0.0);
        assert_eq!(p.exact_solution().unwrap(), zero);
        let j = p.jacobian(&zero);
        let lap = {
            let n = 5;
            let mut t = Vec::new();
            for k in 0..n * n {
                let (i, jj) = (k / n, k % n);
                t.push((k, k, 4.0));
                if i > 0 {
                    t.push((k, k - n, -1.0));
                }
                if i + 1 < n {
                    t.push((k, k + n, -1.0));
                }
                if jj > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if jj + 1 < n {
                    t.push((k, k + 1, -1.0));
                }
            }
            CsrMatrix::from_triplets(n * n, n * n, &t).unwrap()
        };
        assert_eq!(j, lap);
    }

    #[test]
    fn bratu_residual_at_zero_is_scaled_source() {
        let p = Bratu2d::<f64>::new(4, 2.0).unwrap();
        let r = p.residual(&p.initial_guess());
        let h2 = 1.0 / 25.0;
        for v in r.iter() {
            assert_relative_eq!(*v, -2.0 * h2, max_relative = 1e-15);
        }
        assert!(p.exact_solution().is_none());
        assert!(Bratu2d::<f64>::new(2, 1.0).is_err());
    }

    #[test]
    fn heq_decoupled_case() {
        let p = ChandrasekharH::<f64>::new(8, 0.0).unwrap();
        assert_eq!(p.residual(&p.initial_guess()).norm2(), 0.0);
        let j = p.jacobian(&p.initial_guess());
        let id = CsrMatrix::identity(8);
        assert_eq!(j.to_dense(), id.to_dense());
    }

    #[test]
    fn heq_residual_at_ones_matches_direct_sum() {
        let n = 4;
        let c = 0.9;
        let p = ChandrasekharH::<f64>::new(n, c).unwrap();
        let r = p.residual(&[1.0; 4]);
        let mu: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += mu[i] / (mu[i] + mu[j]);
            }
            let expected = 1.0 - 1.0 / (1.0 - c / (2.0 * n as f64) * s);
            assert_relative_eq!(r[i], expected, max_relative = 1e-14);
        }
        assert!(ChandrasekharH::<f64>::new(4, 1.0).is_err());
    }

    #[test]
    fn twophase_no_flow_is_steady() {
        let prev = DenseVector::from_vec(vec![0.2, 0.9, 0.4]).unwrap();
        let params = TwoPhaseParams {
            velocity: 0.0,
            ..TwoPhaseParams::default()
        };
        let p = TwoPhase1d::new(3, 0.1, prev.clone(), params).unwrap();
        assert_eq!(p.residual(&prev).norm2(), 0.0);
    }

    #[test]
    fn twophase_hand_flux() {
        // two cells, dx = 1/2, dt = 1/2, v = 1: dt/dx = 1
        let prev = DenseVector::from_vec(vec![1.0, 0.0]).unwrap();
        let p = TwoPhase1d::new(2, 0.5, prev.clone(), TwoPhaseParams::default()).unwrap();
        let f = p.interface_fluxes(&prev);
        assert_eq!(f, vec![1.0, 1.0, 0.0]);
        let r = p.residual(&prev);
        assert_eq!(r.as_slice(), &[0.0, -1.0]);
        assert_eq!(p.params().fractional_flow(0.5), 0.25 / (0.25 + 2.0 * 0.25));
    }

    #[test]
    fn twophase_jacobian_is_lower_bidiagonal() {
        let prev = DenseVector::from_vec(vec![0.3; 8]).unwrap();
        let p = TwoPhase1d::new(8, 0.1, prev, TwoPhaseParams::default()).unwrap();
        let j = p.jacobian(&[0.5; 8]);
        for i in 0..8 {
            for (c, _) in j.row(i) {
                assert!(c == i || c + 1 == i, "entry ({i}, {c}) outside stencil");
            }
        }
        assert_eq!(j.nnz(), 15);
    }

    #[test]
    fn twophase_validation_and_physical_band() {
        let ok = DenseVector::from_vec(vec![0.0, 1.0]).unwrap();
        assert!(TwoPhase1d::new(2, 0.1, ok.clone(), TwoPhaseParams::default()).is_ok());
        let bad = DenseVector::from_vec(vec![-0.01, 1.0]).unwrap();
        assert!(TwoPhase1d::new(2, 0.1, bad, TwoPhaseParams::default()).is_err());
        assert!(TwoPhase1d::new(2, 0.0, ok.clone(), TwoPhaseParams::default()).is_err());
        assert!(TwoPhase1d::new(3, 0.1, ok.clone(), TwoPhaseParams::default()).is_err());
        let p = TwoPhase1d::new(2, 0.1, ok, TwoPhaseParams::default()).unwrap();
        assert!(p.is_physical(&[-0.05, 1.05]));
        assert!(!p.is_physical(&[-0.2, 0.5]));
        // residual still defined outside the band
        assert!(p.residual(&[-0.2, 1.3]).is_finite());
    }

    #[test]
    fn constructed_maps_vanish_at_root() {
        let q = QuadraticMap::new(
            laplacian_1d(4),
            0.5,
            DenseVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]).unwrap(),
            DenseVector::zeros(4),
        )
        .unwrap();
        assert!(q.residual(&q.exact_solution().unwrap()).norm2() <= 1e-10);
        let s = QuadraticMap::scalar_square(2.0, 3.0);
        assert_eq!(s.residual(&[3.0]).as_slice(), &[5.0]);
        assert_eq!(s.jacobian(&[3.0]).get(0, 0), 6.0);
        let a = AffineProblem::<f64>::laplacian(6);
        assert!(a.residual(&a.exact_solution().unwrap()).norm2() <= 1e-10);
    }
}
