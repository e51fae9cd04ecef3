//! Finite-difference solution of the drift-diffusion equation
//! `∂ρ/∂t = ½σ² ∂²ρ/∂E² - I_s ∂ρ/∂E` below an absorbing barrier.
//!
//! Crank–Nicolson in time with central differences in energy. The initial
//! delta is smoothed by Rannacher start-up: the first two Crank–Nicolson steps
//! are replaced by four backward-Euler half steps, which damps the
//! high-frequency modes Crank–Nicolson would otherwise carry as oscillations.
//! Probability that has left the grid is booked as absorbed.

use crate::analytic::FptLaw;
use crate::error::{invalid, positive, Error, Result};

/// Energies are nodes `e_min + j·ΔE`, `j = 0..=n_cells`, with the barrier at
/// the last node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeGrid {
    e_min: f64,
    e_max: f64,
    n_cells: usize,
    dt: f64,
    t_max: f64,
}

/// Lower truncation is placed this many noise widths below the drifted mean.
pub const LOWER_TAIL_WIDTHS: f64 = 8.0;

/// Largest admissible cell Péclet number `I_s ΔE / σ²`.
pub const MAX_CELL_PECLET: f64 = 2.0;

// Rows kept in memory are capped near this many grid values.
const SNAPSHOT_BUDGET: usize = 4_000_000;

impl PdeGrid {
    pub fn new(e_min: f64, e_max: f64, n_cells: usize, dt: f64, t_max: f64) -> Result<Self> {
        if !(e_min < 0.0 && e_min.is_finite()) {
            return Err(invalid(
                "e_min",
                format!("must be finite and < 0, got {e_min}"),
            ));
        }
        positive("e_max", e_max)?;
        if n_cells < 16 {
            return Err(invalid("n_cells", format!("must be >= 16, got {n_cells}")));
        }
        positive("dt", dt)?;
        positive("t_max", t_max)?;
        if t_max < dt {
            return Err(invalid(
                "t_max",
                format!("must be >= dt = {dt}, got {t_max}"),
            ));
        }
        Ok(Self {
            e_min,
            e_max,
            n_cells,
            dt,
            t_max,
        })
    }

    /// Grid for `law` with the barrier at its threshold and the lower edge far
    /// enough down that nothing reaches it before `t_max`. The spacing is
    /// adjusted so that `E = 0` falls on a node.
    pub fn for_law(law: &FptLaw, n_cells: usize, dt: f64, t_max: f64) -> Result<Self> {
        positive("t_max", t_max)?;
        let em = law.threshold();
        let needed = required_e_min(law, t_max);
        let above_zero = ((n_cells as f64) * em / (em - needed)).floor().max(1.0);
        let de = em / above_zero;
        Self::new(em - n_cells as f64 * de, em, n_cells, dt, t_max)
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn de(&self) -> f64 {
        (self.e_max - self.e_min) / self.n_cells as f64
    }

    pub fn energy(&self, j: usize) -> f64 {
        self.e_min + j as f64 * self.de()
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil() as usize
    }

    fn snapshot_stride(&self) -> usize {
        let rows = self.n_steps() + 1;
        let width = self.n_cells + 1;
        let mut stride = 1;
        while (rows / stride + 1) * width > SNAPSHOT_BUDGET {
            stride *= 10;
        }
        stride
    }
}

fn required_e_min(law: &FptLaw, t_max: f64) -> f64 {
    -(law.drift() * t_max + LOWER_TAIL_WIDTHS * law.noise_scale() * t_max.sqrt())
}

/// Discretized density with its probability bookkeeping.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    grid: PdeGrid,
    law: FptLaw,
    snapshot_stride: usize,
    // rows of ρ over the nodes, every `snapshot_stride` steps
    densities: Vec<Vec<f64>>,
    // per step: trapezoid mass on the grid and 1 - mass
    mass: Vec<f64>,
    absorbed: Vec<f64>,
    // cumulative probability carried out through the barrier by the scheme's
    // own discrete flux
    outflux: Vec<f64>,
    most_negative: f64,
}

impl PdeSolution {
    pub fn grid(&self) -> &PdeGrid {
        &self.grid
    }

    pub fn law(&self) -> &FptLaw {
        &self.law
    }

    /// Time of stored row `i`.
    pub fn row_time(&self, i: usize) -> f64 {
        (i * self.snapshot_stride) as f64 * self.grid.dt
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.densities
    }

    /// Stored row closest to `t`, with its time.
    pub fn density_near(&self, t: f64) -> (f64, &[f64]) {
        let step = (t / self.grid.dt).round().max(0.0) as usize;
        let i = ((step as f64 / self.snapshot_stride as f64).round() as usize)
            .min(self.densities.len() - 1);
        (self.row_time(i), &self.densities[i])
    }

    /// Trapezoid mass of the density after each step (index 0 is t = 0).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn absorbed(&self) -> &[f64] {
        &self.absorbed
    }

    /// Probability that has flowed through the barrier by each step,
    /// accumulated from the boundary flux rather than from the mass deficit.
    pub fn barrier_outflux(&self) -> &[f64] {
        &self.outflux
    }

    /// Most negative value produced by the scheme before clipping.
    pub fn most_negative_density(&self) -> f64 {
        self.most_negative
    }

    /// Absorbed probability by time `t`, linearly interpolated between steps.
    pub fn numeric_cdf(&self, t: f64) -> Result<f64> {
        let horizon = (self.absorbed.len() - 1) as f64 * self.grid.dt;
        if !(t >= 0.0 && t <= horizon.max(self.grid.t_max)) {
            return Err(Error::Domain(format!(
                "t = {t} outside the solved horizon [0, {}]",
                self.grid.t_max
            )));
        }
        let x = t / self.grid.dt;
        let k = (x.floor() as usize).min(self.absorbed.len() - 2);
        let w = x - k as f64;
        Ok((1.0 - w) * self.absorbed[k] + w * self.absorbed[k + 1])
    }
}

/// Pre-factored tridiagonal system with constant bands.
struct Tridiagonal {
    lower: f64,
    upper: f64,
    // modified diagonal and multipliers of the Thomas elimination
    pivots: Vec<f64>,
}

impl Tridiagonal {
    fn new(lower: f64, diag: f64, upper: f64, n: usize) -> Self {
        let mut pivots = Vec::with_capacity(n);
        pivots.push(diag);
        for i in 1..n {
            let prev = pivots[i - 1];
            pivots.push(diag - lower * upper / prev);
        }
        Self {
            lower,
            upper,
            pivots,
        }
    }

    fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for i in 1..n {
            rhs[i] -= self.lower / self.pivots[i - 1] * rhs[i - 1];
        }
        rhs[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.upper * rhs[i + 1]) / self.pivots[i];
        }
    }
}

/// One θ-scheme step `(I - θ dt L) ρ' = (I + (1-θ) dt L) ρ` over interior nodes.
struct Stepper {
    explicit: Option<(f64, f64, f64)>,
    system: Tridiagonal,
}

impl Stepper {
    fn new(sub: f64, diag: f64, sup: f64, dt: f64, theta: f64, n: usize) -> Self {
        let implicit = theta * dt;
        let explicit_w = (1.0 - theta) * dt;
        let explicit = (explicit_w > 0.0).then_some((
            explicit_w * sub,
            1.0 + explicit_w * diag,
            explicit_w * sup,
        ));
        Self {
            explicit,
            system: Tridiagonal::new(-implicit * sub, 1.0 - implicit * diag, -implicit * sup, n),
        }
    }

    fn apply(&self, interior: &mut [f64], scratch: &mut Vec<f64>) {
        if let Some((a, b, c)) = self.explicit {
            scratch.clear();
            scratch.extend_from_slice(interior);
            let n = interior.len();
            for i in 0..n {
                let left = if i > 0 { scratch[i - 1] } else { 0.0 };
                let right = if i + 1 < n { scratch[i + 1] } else { 0.0 };
                interior[i] = a * left + b * scratch[i] + c * right;
            }
        }
        self.system.solve_in_place(interior);
    }
}

/// Solves for the density of the unabsorbed process from a unit point mass
/// at `E = 0`.
pub fn solve(law: &FptLaw, grid: &PdeGrid) -> Result<PdeSolution> {
    let de = grid.de();
    if (grid.e_max - law.threshold()).abs() > 1e-12 * law.threshold() {
        return Err(Error::Config(format!(
            "grid barrier {} differs from the law threshold {}",
            grid.e_max,
            law.threshold()
        )));
    }
    let needed = required_e_min(law, grid.t_max);
    if grid.e_min > needed {
        return Err(Error::Config(format!(
            "lower edge e_min = {} too close: need e_min <= {needed} to keep leakage negligible",
            grid.e_min
        )));
    }
    let s2 = law.noise_scale() * law.noise_scale();
    let peclet = law.drift() * de / s2;
    if peclet > MAX_CELL_PECLET {
        return Err(Error::Config(format!(
            "cell Péclet number {peclet:.3} exceeds {MAX_CELL_PECLET} at n_cells = {} (ΔE = {de:e}); refine the energy grid",
            grid.n_cells
        )));
    }

    let diffusion = 0.5 * s2;
    let sub = diffusion / (de * de) + law.drift() / (2.0 * de);
    let diag = -2.0 * diffusion / (de * de);
    let sup = diffusion / (de * de) - law.drift() / (2.0 * de);
    let n_interior = grid.n_cells - 1;
    let startup = Stepper::new(sub, diag, sup, 0.5 * grid.dt, 1.0, n_interior);
    let crank = Stepper::new(sub, diag, sup, grid.dt, 0.5, n_interior);

    // node nearest E = 0 (exactly on it for grids from `for_law`)
    let zero_node = ((-grid.e_min) / de).round() as usize;
    if zero_node == 0 || zero_node >= grid.n_cells {
        return Err(Error::Config("E = 0 must be an interior node".into()));
    }
    let mut interior = vec![0.0; n_interior];
    interior[zero_node - 1] = 1.0 / de;

    let n_steps = grid.n_steps();
    let stride = grid.snapshot_stride();
    let mut densities = Vec::with_capacity(n_steps / stride + 1);
    let mut mass = Vec::with_capacity(n_steps + 1);
    let mut absorbed = Vec::with_capacity(n_steps + 1);
    let mut outflux = vec![0.0];
    let mut most_negative = 0.0f64;
    let mut scratch = Vec::with_capacity(n_interior);

    let record = |interior: &[f64],
                  step: usize,
                  densities: &mut Vec<Vec<f64>>,
                  mass: &mut Vec<f64>,
                  absorbed: &mut Vec<f64>| {
        let m = de * interior.iter().sum::<f64>();
        mass.push(m);
        absorbed.push(1.0 - m);
        if step.is_multiple_of(stride) {
            let mut row = Vec::with_capacity(grid.n_cells + 1);
            row.push(0.0);
            row.extend_from_slice(interior);
            row.push(0.0);
            densities.push(row);
        }
    };
    record(&interior, 0, &mut densities, &mut mass, &mut absorbed);

    // outflow rate through the barrier for edge-node density ρ
    let edge_rate = de * sub;
    let last = n_interior - 1;
    let mut carried = 0.0;
    for step in 1..=n_steps {
        if step <= 2 {
            startup.apply(&mut interior, &mut scratch);
            carried += 0.5 * grid.dt * edge_rate * interior[last];
            startup.apply(&mut interior, &mut scratch);
            carried += 0.5 * grid.dt * edge_rate * interior[last];
        } else {
            let before = interior[last];
            crank.apply(&mut interior, &mut scratch);
            carried += 0.5 * grid.dt * edge_rate * (before + interior[last]);
        }
        outflux.push(carried);
        for v in interior.iter_mut() {
            if *v < 0.0 {
                most_negative = most_negative.min(*v);
                *v = 0.0;
            }
        }
        record(&interior, step, &mut densities, &mut mass, &mut absorbed);
    }

    Ok(PdeSolution {
        grid: *grid,
        law: *law,
        snapshot_stride: stride,
        densities,
        mass,
        absorbed,
        outflux,
        most_negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (FptLaw, PdeGrid) {
        let law = FptLaw::new(1.0, 1.0, 1.0).unwrap();
        let grid = PdeGrid::for_law(&law, 2048, 1e-3, 5.0).unwrap();
        (law, grid)
    }

    fn max_density_error(sol: &PdeSolution, t: f64) -> f64 {
        let (row_t, row) = sol.density_near(t);
        assert!((row_t - t).abs() < 1e-12);
        row.iter()
            .enumerate()
            .map(|(j, &rho)| {
                let e = sol.grid().energy(j).min(sol.law().threshold());
                (rho - sol.law().transition_density(e, t).unwrap()).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_invariants() {
        assert!(PdeGrid::new(1.0, 1.0, 64, 0.1, 1.0).is_err());
        assert!(PdeGrid::new(-1.0, 1.0, 8, 0.1, 1.0).is_err());
        assert!(PdeGrid::new(-1.0, 1.0, 64, 0.0, 1.0).is_err());
        assert!(PdeGrid::new(-1.0, 1.0, 64, 0.1, 0.05).is_err());
        let (law, grid) = reference();
        assert!(grid.e_min() <= -(5.0 + 8.0 * 5f64.sqrt()));
        assert_eq!(grid.e_max(), law.threshold());
        let zero = -grid.e_min() / grid.de();
        assert!((zero - zero.round()).abs() < 1e-9);
    }

    #[test]
    fn matches_image_solution_at_reference_resolution() {
        let (law, grid) = reference();
        let sol = solve(&law, &grid).unwrap();
        let err = max_density_error(&sol, 1.0);
        assert!(err < 1e-3, "max abs density error {err}");
        assert!(
            sol.most_negative_density() > -1e-12,
            "{}",
            sol.most_negative_density()
        );
    }

    #[test]
    fn barrier_column_stays_zero_and_mass_is_conserved() {
        let (law, grid) = reference();
        let sol = solve(&law, &grid).unwrap();
        for row in sol.rows() {
            assert_eq!(*row.last().unwrap(), 0.0);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        for (m, a) in sol.mass().iter().zip(sol.barrier_outflux()) {
            assert!((m + a - 1.0).abs() < 1e-6, "{m} + {a}");
        }
        assert!((sol.mass()[0] - 1.0).abs() < 1e-12);
        assert!(sol.numeric_cdf(0.0).unwrap().abs() < 1e-6);
        assert!(sol.mass()[1] > 1.0 - 1e-6);
    }

    #[test]
    fn numeric_cdf_tracks_analytic() {
        let (law, grid) = reference();
        let sol = solve(&law, &grid).unwrap();
        assert!((sol.numeric_cdf(1.0).unwrap() - law.cdf(1.0).unwrap()).abs() < 1e-3);
        let mut prev = 0.0;
        for k in 0..=500 {
            let t = 0.01 * k as f64;
            let p = sol.numeric_cdf(t).unwrap();
            assert!(p >= prev - 1e-8);
            prev = p;
        }
        assert!(matches!(sol.numeric_cdf(5.5), Err(Error::Domain(_))));
        assert!(matches!(sol.numeric_cdf(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn strong_drift_is_absorbed_by_horizon() {
        let law = FptLaw::new(1.0, 2.0, 1.0).unwrap();
        let grid = PdeGrid::for_law(&law, 2048, 2e-3, 10.0).unwrap();
        let sol = solve(&law, &grid).unwrap();
        assert!((sol.numeric_cdf(10.0).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn second_order_convergence() {
        let (law, grid) = reference();
        let half =
            PdeGrid::for_law(&law, grid.n_cells() / 2, 2.0 * grid.dt(), grid.t_max()).unwrap();
        let coarse = solve(&law, &half).unwrap();
        let fine = solve(&law, &grid).unwrap();
        let ratio = max_density_error(&coarse, 1.0) / max_density_error(&fine, 1.0);
        assert!(ratio >= 3.0, "error ratio {ratio}");
    }

    #[test]
    fn peclet_violation_is_rejected() {
        let law = FptLaw::new(1.0, 50.0, 0.1).unwrap();
        let grid = PdeGrid::for_law(&law, 64, 1e-3, 1.0).unwrap();
        match solve(&law, &grid) {
            Err(Error::Config(msg)) => assert!(msg.contains("n_cells = 64"), "{msg}"),
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_too_shallow_is_rejected() {
        let law = FptLaw::new(1.0, 1.0, 1.0).unwrap();
        let grid = PdeGrid::new(-2.0, 1.0, 256, 1e-3, 5.0).unwrap();
        assert!(matches!(solve(&law, &grid), Err(Error::Config(_))));
        let other = FptLaw::new(2.0, 1.0, 1.0).unwrap();
        let grid = PdeGrid::for_law(&law, 256, 1e-3, 1.0).unwrap();
        assert!(matches!(solve(&other, &grid), Err(Error::Config(_))));
    }
}
