//! Monotone explicit finite-difference solver for the 1-d nonlinear heat
//! equation `du/dt = G(d^2u/dx^2)` and the backward recursion that evaluates
//! upper expectations of cylinder functionals with up to three time points.
//!
//! The scheme is the explicit Euler step
//!
//! ```text
//! u[k+1][i] = u[k][i] + dt * G( (u[k][i+1] - 2 u[k][i] + u[k][i-1]) / dx^2 )
//! ```
//!
//! which is monotone in every stencil value exactly when `dt <= dx^2 /
//! sigma_max_sq`. Monotonicity buys the discrete comparison principle that
//! the test suite leans on. Boundary nodes evolve with zero second
//! difference, i.e. they stay at their initial values; combined with the
//! 6-sigma domain rule and clamped initial data this keeps the boundary
//! influence at the centre negligible.

use crate::error::{Error, Result};
use crate::phi::Functional;
use crate::scalar::{real, Real};
use crate::uncertainty::Generator;

/// Space-time mesh for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeGrid<T> {
    x_half_width: T,
    nx: usize,
    t_final: T,
    dt: T,
}

impl<T: Real> PdeGrid<T> {
    /// `nx` must be odd and at least 3 so that `x = 0` is a node.
    pub fn new(x_half_width: T, nx: usize, t_final: T, dt: T) -> Result<Self> {
        if !(x_half_width > T::zero()) {
            return Err(Error::invalid("grid half-width must be > 0"));
        }
        if nx < 3 || nx % 2 == 0 {
            return Err(Error::invalid(format!("nx must be odd and >= 3, got {nx}")));
        }
        if !(t_final > T::zero()) || !(dt > T::zero()) {
            return Err(Error::invalid("t_final and dt must be > 0"));
        }
        Ok(Self {
            x_half_width,
            nx,
            t_final,
            dt,
        })
    }

    pub fn x_half_width(&self) -> T {
        self.x_half_width
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn dx(&self) -> T {
        let two = real::<T>(2.0);
        two * self.x_half_width / T::from_usize(self.nx - 1).unwrap()
    }

    /// Node coordinate, `i` in `0..nx`.
    pub fn node_x(&self, i: usize) -> T {
        -self.x_half_width + self.dx() * T::from_usize(i).unwrap()
    }
}

/// Discrete solution at a fixed time layer.
#[derive(Debug, Clone)]
pub struct SolutionField<T> {
    values: Vec<T>,
    time: T,
    x_half_width: T,
}

impl<T: Real> SolutionField<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Value at the centre node `x = 0`.
    pub fn center_value(&self) -> T {
        self.values[(self.values.len() - 1) / 2]
    }

    pub fn node_x(&self, i: usize) -> T {
        let dx = real::<T>(2.0) * self.x_half_width / T::from_usize(self.values.len() - 1).unwrap();
        -self.x_half_width + dx * T::from_usize(i).unwrap()
    }
}

/// Mesh presets. The time step is always `0.9` of the CFL bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accuracy {
    Coarse,
    Medium,
    Fine,
}

impl Accuracy {
    pub fn nx(self) -> usize {
        match self {
            Accuracy::Coarse => 201,
            Accuracy::Medium => 401,
            Accuracy::Fine => 801,
        }
    }

    /// Points per axis of the prefix tensor grid used by the cylinder
    /// recursion.
    pub fn prefix_points(self) -> usize {
        match self {
            Accuracy::Coarse => 41,
            Accuracy::Medium => 61,
            Accuracy::Fine => 81,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "coarse" => Ok(Accuracy::Coarse),
            "medium" => Ok(Accuracy::Medium),
            "fine" => Ok(Accuracy::Fine),
            other => Err(Error::invalid(format!(
                "unknown accuracy tier '{other}' (expected coarse|medium|fine)"
            ))),
        }
    }
}

/// Center value plus the mesh actually used, for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeReport<T> {
    pub value: T,
    pub nx: usize,
    pub dt: T,
    pub steps: usize,
}

const DOMAIN_SIGMAS: f64 = 6.0;
const CFL_FRACTION: f64 = 0.9;

/// Builds the tier mesh for a single expectation horizon `t`: half-width
/// `max(6 sqrt(sigma_max_sq t), 1)` and `dt = 0.9 dx^2 / sigma_max_sq`.
pub fn grid_for<T: Real>(gen: &Generator<T>, t: T, accuracy: Accuracy) -> Result<PdeGrid<T>> {
    if !(t > T::zero()) {
        return Err(Error::invalid(format!("time horizon must be > 0, got {t}")));
    }
    let sig_max = gen.band().sigma_max_sq();
    let width = (real::<T>(DOMAIN_SIGMAS) * (sig_max * t).sqrt()).max(T::one());
    let nx = accuracy.nx();
    let dx = real::<T>(2.0) * width / T::from_usize(nx - 1).unwrap();
    let dt = if sig_max > T::zero() {
        real::<T>(CFL_FRACTION) * dx * dx / sig_max
    } else {
        t / real::<T>(16.0)
    };
    PdeGrid::new(width, nx, t, dt)
}

/// Runs the explicit scheme for initial data `phi` (arity 1) and returns the
/// layer at `t_final`. The number of steps is `ceil(t_final / dt)` with the
/// step shrunk to land on `t_final` exactly, which can only tighten the CFL
/// condition.
pub fn solve<T: Real>(
    gen: &Generator<T>,
    phi: &Functional<T>,
    grid: &PdeGrid<T>,
) -> Result<SolutionField<T>> {
    if gen.dimension() != 1 {
        return Err(Error::UnsupportedDimension(gen.dimension()));
    }
    if phi.arity() != 1 {
        return Err(Error::invalid(format!(
            "PDE initial data must have arity 1, got {}",
            phi.arity()
        )));
    }
    validate_grid(gen, grid)?;
    let init: Vec<T> = (0..grid.nx())
        .map(|i| phi.eval(&[grid.node_x(i)]))
        .collect::<Result<_>>()?;
    let (values, _, _) = march(gen, init, grid.dx(), grid.t_final(), grid.dt());
    Ok(SolutionField {
        values,
        time: grid.t_final(),
        x_half_width: grid.x_half_width(),
    })
}

fn validate_grid<T: Real>(gen: &Generator<T>, grid: &PdeGrid<T>) -> Result<()> {
    let sig_max = gen.band().sigma_max_sq();
    let dx = grid.dx();
    let slack = real::<T>(1.0 + 1e-12);
    if grid.dt() * sig_max > dx * dx * slack {
        let max_dt = dx * dx / sig_max;
        return Err(Error::config(format!(
            "CFL violated: dt = {} exceeds dx^2/sigma_max_sq = {max_dt}; refuse to run",
            grid.dt()
        )));
    }
    let required = real::<T>(DOMAIN_SIGMAS) * (sig_max * grid.t_final()).sqrt();
    if grid.x_half_width() * slack < required {
        return Err(Error::config(format!(
            "domain too small: half-width {} below the 6-sigma truncation rule (needs >= {required})",
            grid.x_half_width()
        )));
    }
    Ok(())
}

/// Time-marches `init` over `[0, t]`; returns the final layer together with
/// the effective `dt` and step count.
fn march<T: Real>(
    gen: &Generator<T>,
    init: Vec<T>,
    dx: T,
    t: T,
    dt_target: T,
) -> (Vec<T>, T, usize) {
    let steps = (t / dt_target)
        .ceil()
        .to_usize()
        .expect("step count fits usize")
        .max(1);
    let dt = t / T::from_usize(steps).unwrap();
    let sig_min = gen.band().sigma_min_sq();
    let sig_max = gen.band().sigma_max_sq();
    let h = real::<T>(0.5);
    let inv_dx2 = T::one() / (dx * dx);
    let nx = init.len();
    let mut cur = init;
    let mut next = cur.clone();
    for _ in 0..steps {
        for i in 1..nx - 1 {
            let lap = (cur[i + 1] - cur[i] - cur[i] + cur[i - 1]) * inv_dx2;
            let g = h * (sig_max * lap.max(T::zero()) - sig_min * (-lap).max(T::zero()));
            next[i] = cur[i] + dt * g;
        }
        next[0] = cur[0];
        next[nx - 1] = cur[nx - 1];
        std::mem::swap(&mut cur, &mut next);
    }
    (cur, dt, steps)
}

/// `E_hat[phi(B_t)] = u(t, 0)` on the tier mesh.
pub fn expect_single<T: Real>(
    gen: &Generator<T>,
    phi: &Functional<T>,
    t: T,
    accuracy: Accuracy,
) -> Result<PdeReport<T>> {
    let grid = grid_for(gen, t, accuracy)?;
    if gen.dimension() != 1 {
        return Err(Error::UnsupportedDimension(gen.dimension()));
    }
    if phi.arity() != 1 {
        return Err(Error::invalid(format!(
            "expect_single needs an arity-1 functional, got {}",
            phi.arity()
        )));
    }
    validate_grid(gen, &grid)?;
    let init: Vec<T> = (0..grid.nx())
        .map(|i| phi.eval(&[grid.node_x(i)]))
        .collect::<Result<_>>()?;
    let (values, dt, steps) = march(gen, init, grid.dx(), t, grid.dt());
    Ok(PdeReport {
        value: values[(grid.nx() - 1) / 2],
        nx: grid.nx(),
        dt,
        steps,
    })
}

/// One backward-recursion solve over duration `tau` with initial data given
/// by a closure of the solve coordinate; returns the centre value.
fn solve_center<T: Real>(
    gen: &Generator<T>,
    tau: T,
    accuracy: Accuracy,
    mut init_at: impl FnMut(T) -> T,
) -> Result<(T, T, usize)> {
    let grid = grid_for(gen, tau, accuracy)?;
    let init: Vec<T> = (0..grid.nx()).map(|i| init_at(grid.node_x(i))).collect();
    let (values, dt, steps) = march(gen, init, grid.dx(), tau, grid.dt());
    Ok((values[(grid.nx() - 1) / 2], dt, steps))
}

/// Uniform grid of `points` values on `[-width, width]`.
fn uniform_grid<T: Real>(width: T, points: usize) -> Vec<T> {
    let step = real::<T>(2.0) * width / T::from_usize(points - 1).unwrap();
    (0..points)
        .map(|i| -width + step * T::from_usize(i).unwrap())
        .collect()
}

/// Piecewise-linear interpolation on a uniform grid, clamped at the ends.
/// Clamping is consistent with the clamped initial data: the tables are
/// constant beyond the truncation radius to the accuracy of the scheme.
fn interp1d<T: Real>(width: T, values: &[T], x: T) -> T {
    let n = values.len();
    let step = real::<T>(2.0) * width / T::from_usize(n - 1).unwrap();
    let pos = (x + width) / step;
    if pos <= T::zero() {
        return values[0];
    }
    let max_idx = T::from_usize(n - 1).unwrap();
    if pos >= max_idx {
        return values[n - 1];
    }
    let i = pos.floor().to_usize().unwrap().min(n - 2);
    let frac = pos - T::from_usize(i).unwrap();
    values[i] + (values[i + 1] - values[i]) * frac
}

/// `E_hat[phi(B_{t1}, ..., B_{tn})]` for `n <= 3` by the backward recursion:
/// the functional is rewritten in increment coordinates and integrated out
/// one increment at a time, each step being a PDE solve whose initial data
/// is the next-layer value table (interpolated linearly on the prefix grid).
pub fn expect_cylinder<T: Real>(
    gen: &Generator<T>,
    phi: &Functional<T>,
    times: &[T],
    accuracy: Accuracy,
) -> Result<PdeReport<T>> {
    let n = times.len();
    if phi.arity() != n {
        return Err(Error::invalid(format!(
            "functional arity {} does not match {} observation times",
            phi.arity(),
            n
        )));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one observation time"));
    }
    if n > 3 {
        return Err(Error::Unsupported(format!(
            "cylinder recursion supports n <= 3 time points, got {n} (use the tree engine)"
        )));
    }
    let mut prev = T::zero();
    for &t in times {
        if !(t > prev) {
            return Err(Error::invalid(
                "observation times must be strictly increasing and > 0",
            ));
        }
        prev = t;
    }
    if n == 1 {
        return expect_single(gen, phi, times[0], accuracy);
    }

    let taus: Vec<T> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| if i == 0 { t } else { t - times[i - 1] })
        .collect();
    let sig_max = gen.band().sigma_max_sq();
    let widths: Vec<T> = taus
        .iter()
        .map(|&tau| (real::<T>(DOMAIN_SIGMAS) * (sig_max * tau).sqrt()).max(T::one()))
        .collect();
    let points = accuracy.prefix_points();
    let grids: Vec<Vec<T>> = widths.iter().map(|&w| uniform_grid(w, points)).collect();

    let mut steps_total = 0usize;

    // Deepest layer: direct evaluation of phi at absolute coordinates.
    let mut table: Vec<T> = if n == 2 {
        let mut v = Vec::with_capacity(points);
        for &y1 in &grids[0] {
            let (c, _, st) = solve_center(gen, taus[1], accuracy, |x| {
                phi.eval(&[y1, y1 + x]).expect("arity checked")
            })?;
            steps_total += st;
            v.push(c);
        }
        v
    } else {
        // n == 3: table over (y1, y2), row-major in y2.
        let mut v = Vec::with_capacity(points * points);
        for &y1 in &grids[0] {
            for &y2 in &grids[1] {
                let s2 = y1 + y2;
                let (c, _, st) = solve_center(gen, taus[2], accuracy, |x| {
                    phi.eval(&[y1, s2, s2 + x]).expect("arity checked")
                })?;
                steps_total += st;
                v.push(c);
            }
        }
        v
    };

    if n == 3 {
        // Integrate out the second increment: one solve per y1.
        let mut v = Vec::with_capacity(points);
        for (i1, _) in grids[0].iter().enumerate() {
            let row = &table[i1 * points..(i1 + 1) * points];
            let (c, _, st) = solve_center(gen, taus[1], accuracy, |x| interp1d(widths[1], row, x))?;
            steps_total += st;
            v.push(c);
        }
        table = v;
    }

    // Final layer: integrate out the first increment.
    let (value, dt, st) = solve_center(gen, taus[0], accuracy, |x| interp1d(widths[0], &table, x))?;
    steps_total += st;
    Ok(PdeReport {
        value,
        nx: accuracy.nx(),
        dt,
        steps: steps_total,
    })
}
