//! Exact backward induction over adapted volatility controls on a finite
//! noise tree.
//!
//! Each step branches over `sigma_levels` variance choices (the adapted
//! control, picked before the step's noise is revealed) times a Rademacher
//! sign for the driving increment, times a second independent sign for the
//! auxiliary unit-variance driver `W` on product-space trees. The upper
//! expectation is the max-over-control / average-over-noise fold; the lower
//! expectation is the min fold. There is no sampling anywhere: values are
//! exact for the discrete tree and bitwise deterministic, with a fixed
//! summation order inside every node.
//!
//! The traversal is depth-first with O(steps) live state; per-path
//! accumulators for the stochastic integrals are carried in [`PathState`].

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use crate::stochastic::SimpleProcess;
use crate::uncertainty::VolatilityBand;

/// Default cap on the number of leaves of a tree run.
pub const DEFAULT_LEAF_BUDGET: u64 = 1 << 26;

/// Hard caps for the brute-force enumeration oracle.
const ORACLE_MAX_STEPS: usize = 8;
const ORACLE_MAX_LEVELS: usize = 3;
/// Full strategy-table enumeration is used below this many strategies.
const ORACLE_MAX_STRATEGIES: u128 = 1 << 21;
/// Layered-array fallback cap on leaves.
const ORACLE_MAX_LEAVES: u128 = 1 << 22;
/// Cap on the size of a `conditional_value` layer table.
const MAX_LAYER_TABLE: u128 = 1 << 22;

/// Configuration of one scenario tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec<T> {
    steps: usize,
    t_final: T,
    band: VolatilityBand<T>,
    sigma_levels: usize,
    product_space: bool,
    leaf_budget: u64,
}

impl<T: Real> TreeSpec<T> {
    pub fn new(
        steps: usize,
        t_final: T,
        band: VolatilityBand<T>,
        sigma_levels: usize,
    ) -> Result<Self> {
        let spec = Self {
            steps,
            t_final,
            band,
            sigma_levels,
            product_space: false,
            leaf_budget: DEFAULT_LEAF_BUDGET,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Carries an independent unit-variance driver `W`; doubles the per-step
    /// branching.
    pub fn with_product_space(mut self, product_space: bool) -> Result<Self> {
        self.product_space = product_space;
        self.validate()?;
        Ok(self)
    }

    pub fn with_leaf_budget(mut self, leaf_budget: u64) -> Result<Self> {
        self.leaf_budget = leaf_budget;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("tree needs at least one step"));
        }
        if !(self.t_final > T::zero()) {
            return Err(Error::invalid("t_final must be > 0"));
        }
        if self.sigma_levels < 2 {
            return Err(Error::invalid("sigma_levels must be >= 2"));
        }
        let leaves = self.leaf_count();
        if leaves > self.leaf_budget as u128 {
            return Err(Error::config(format!(
                "tree of {} leaves exceeds the budget of {} (branching {} over {} steps); reduce steps or sigma-levels",
                leaves,
                self.leaf_budget,
                self.branching(),
                self.steps
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn band(&self) -> &VolatilityBand<T> {
        &self.band
    }

    pub fn sigma_levels(&self) -> usize {
        self.sigma_levels
    }

    pub fn product_space(&self) -> bool {
        self.product_space
    }

    pub fn dt(&self) -> T {
        self.t_final / T::from_usize(self.steps).unwrap()
    }

    /// Noise-only branching: 2, or 4 on product-space trees.
    pub fn noise_branching(&self) -> usize {
        if self.product_space {
            4
        } else {
            2
        }
    }

    /// Full per-step branching: `sigma_levels * noise_branching`.
    pub fn branching(&self) -> usize {
        self.sigma_levels * self.noise_branching()
    }

    pub fn leaf_count(&self) -> u128 {
        (self.branching() as u128)
            .checked_pow(self.steps as u32)
            .unwrap_or(u128::MAX)
    }

    /// Maps observation times onto step indices; errors unless every time is
    /// a step boundary in `(0, t_final]`.
    pub fn steps_for_times(&self, times: &[T]) -> Result<Vec<usize>> {
        let dt = self.dt();
        let mut out = Vec::with_capacity(times.len());
        let mut prev = 0usize;
        for &t in times {
            let ratio = t / dt;
            let k = ratio.round().to_usize().unwrap_or(0);
            let tol = real::<T>(1e-9);
            if k == 0 || k > self.steps || (ratio - T::from_usize(k).unwrap()).abs() > tol {
                return Err(Error::invalid(format!(
                    "observation time {t} does not lie on the step grid (dt = {dt})"
                )));
            }
            if !out.is_empty() && k <= prev {
                return Err(Error::invalid(
                    "observation times must be strictly increasing",
                ));
            }
            prev = k;
            out.push(k);
        }
        Ok(out)
    }
}

/// Per-path accumulators, all left-endpoint (Ito) sums against the simple
/// integrand `h` supplied to the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState<T> {
    pub step: usize,
    /// Driving coordinate `B`.
    pub b: T,
    /// Auxiliary driver `W` (zero off product-space trees).
    pub w: T,
    /// Running quadratic variation of `B`: sum of `sigma_k^2 dt`.
    pub qv: T,
    /// `integral h dB`.
    pub int_h_db: T,
    /// `integral h^2 d<B>`.
    pub int_h2_dqv: T,
    /// `integral h dW` (zero off product-space trees).
    pub int_h_dw: T,
    /// `integral h^2 dt` (deterministic).
    pub int_h2_dt: T,
    /// Sum of `ln cosh(h_k sigma_k sqrt(dt))`: the per-step normalizer of
    /// the discrete exponential martingale.
    pub log_cosh_h_sigma: T,
}

impl<T: Real> PathState<T> {
    pub fn initial() -> Self {
        Self {
            step: 0,
            b: T::zero(),
            w: T::zero(),
            qv: T::zero(),
            int_h_db: T::zero(),
            int_h2_dqv: T::zero(),
            int_h_dw: T::zero(),
            int_h2_dt: T::zero(),
            log_cosh_h_sigma: T::zero(),
        }
    }
}

/// Leaf view handed to a [`PathFunctional`]: terminal accumulators plus the
/// recorded path.
#[derive(Debug)]
pub struct PathSample<'a, T> {
    pub state: &'a PathState<T>,
    /// `B` at each requested observation step, in order.
    pub b_obs: &'a [T],
    /// `W` at each requested observation step (zeros off product space).
    pub w_obs: &'a [T],
    /// The variance chosen at every step along this path.
    pub sigma_sq_path: &'a [T],
    pub dt: T,
}

impl<T: Real> PathSample<'_, T> {
    pub fn time(&self) -> T {
        self.dt * T::from_usize(self.state.step).unwrap()
    }

    /// Quadratic variation of the perturbed coordinate `B + eps W`:
    /// `qv + eps^2 t` (the cross variation vanishes because `W` branches
    /// independently of `B`).
    pub fn qv_perturbed(&self, eps: T) -> T {
        self.state.qv + eps * eps * self.time()
    }

    /// `integral h d(B + eps W)`.
    pub fn int_h_db_perturbed(&self, eps: T) -> T {
        self.state.int_h_db + eps * self.state.int_h_dw
    }

    /// `integral h^2 d<B + eps W>`.
    pub fn int_h2_dqv_perturbed(&self, eps: T) -> T {
        self.state.int_h2_dqv + eps * eps * self.state.int_h2_dt
    }
}

/// A bounded functional of the terminal path. Boundedness is the caller's
/// contract; the engine never samples, so the value it returns is the exact
/// optimum over the discrete control family.
pub trait PathFunctional<T> {
    /// Steps (1-based, ascending) at which `B` and `W` must be recorded.
    fn observation_steps(&self) -> &[usize];

    /// Whether evaluation reads the auxiliary driver `W`.
    fn requires_product_space(&self) -> bool {
        false
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T;
}

/// Closure-backed functional, mostly for tests and randomized checks.
pub struct FnFunctional<F> {
    obs: Vec<usize>,
    needs_w: bool,
    f: F,
}

impl<F> FnFunctional<F> {
    pub fn new(obs: Vec<usize>, f: F) -> Self {
        Self {
            obs,
            needs_w: false,
            f,
        }
    }

    pub fn with_product_space(obs: Vec<usize>, f: F) -> Self {
        Self {
            obs,
            needs_w: true,
            f,
        }
    }
}

impl<T: Real, F: Fn(&PathSample<'_, T>) -> T> PathFunctional<T> for FnFunctional<F> {
    fn observation_steps(&self) -> &[usize] {
        &self.obs
    }

    fn requires_product_space(&self) -> bool {
        self.needs_w
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        (self.f)(sample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fold {
    Upper,
    Lower,
}

/// Precomputed per-step increments. `db` and the `h`-weighted quantities are
/// stored for the positive sign; the negative branch subtracts.
#[derive(Debug, Clone, Copy)]
struct LevelDelta<T> {
    sigma_sq: T,
    db: T,
    dqv: T,
    d_int_h_db: T,
    d_int_h2_dqv: T,
    d_log_cosh: T,
}

#[derive(Debug, Clone, Copy)]
struct WDelta<T> {
    dw: T,
    d_int_h_dw: T,
    d_int_h2_dt: T,
}

struct StepTables<T> {
    levels: Vec<Vec<LevelDelta<T>>>,
    wsteps: Vec<WDelta<T>>,
    product: bool,
}

impl<T: Real> StepTables<T> {
    fn new(spec: &TreeSpec<T>, h: &SimpleProcess<T>) -> Self {
        let dt = spec.dt();
        let sqrt_dt = dt.sqrt();
        let grid = spec.band().variance_grid(spec.sigma_levels());
        let mut levels = Vec::with_capacity(spec.steps());
        let mut wsteps = Vec::with_capacity(spec.steps());
        for k in 0..spec.steps() {
            let hk = h.value(k);
            let row = grid
                .iter()
                .map(|&sigma_sq| {
                    let db = sigma_sq.sqrt() * sqrt_dt;
                    LevelDelta {
                        sigma_sq,
                        db,
                        dqv: sigma_sq * dt,
                        d_int_h_db: hk * db,
                        d_int_h2_dqv: hk * hk * sigma_sq * dt,
                        d_log_cosh: (hk * db).cosh().ln(),
                    }
                })
                .collect();
            levels.push(row);
            wsteps.push(WDelta {
                dw: sqrt_dt,
                d_int_h_dw: hk * sqrt_dt,
                d_int_h2_dt: hk * hk * dt,
            });
        }
        Self {
            levels,
            wsteps,
            product: spec.product_space(),
        }
    }

    #[inline]
    fn advance(
        &self,
        s: &PathState<T>,
        k: usize,
        level: usize,
        b_pos: bool,
        w_pos: bool,
    ) -> PathState<T> {
        let d = &self.levels[k][level];
        let w = &self.wsteps[k];
        PathState {
            step: s.step + 1,
            b: if b_pos { s.b + d.db } else { s.b - d.db },
            w: if self.product {
                if w_pos {
                    s.w + w.dw
                } else {
                    s.w - w.dw
                }
            } else {
                s.w
            },
            qv: s.qv + d.dqv,
            int_h_db: if b_pos {
                s.int_h_db + d.d_int_h_db
            } else {
                s.int_h_db - d.d_int_h_db
            },
            int_h2_dqv: s.int_h2_dqv + d.d_int_h2_dqv,
            int_h_dw: if self.product {
                if w_pos {
                    s.int_h_dw + w.d_int_h_dw
                } else {
                    s.int_h_dw - w.d_int_h_dw
                }
            } else {
                s.int_h_dw
            },
            int_h2_dt: s.int_h2_dt + w.d_int_h2_dt,
            log_cosh_h_sigma: s.log_cosh_h_sigma + d.d_log_cosh,
        }
    }
}

struct Traversal<'a, T, F: ?Sized> {
    tables: StepTables<T>,
    functional: &'a F,
    fold: Fold,
    steps: usize,
    sigma_levels: usize,
    dt: T,
    is_obs: Vec<bool>,
    b_obs: Vec<T>,
    w_obs: Vec<T>,
    sigma_sq_path: Vec<T>,
}

impl<'a, T: Real, F: PathFunctional<T> + ?Sized> Traversal<'a, T, F> {
    fn new(
        spec: &TreeSpec<T>,
        h: &SimpleProcess<T>,
        functional: &'a F,
        fold: Fold,
    ) -> Result<Self> {
        if h.len() != spec.steps() {
            return Err(Error::invalid(format!(
                "integrand has {} steps but the tree has {}",
                h.len(),
                spec.steps()
            )));
        }
        if functional.requires_product_space() && !spec.product_space() {
            return Err(Error::config(
                "functional reads the auxiliary driver W: the tree must be built with product_space".to_string(),
            ));
        }
        let mut is_obs = vec![false; spec.steps() + 1];
        let mut prev = 0usize;
        for &k in functional.observation_steps() {
            if k == 0 || k > spec.steps() || (prev > 0 && k <= prev) {
                return Err(Error::invalid(format!(
                    "observation step {k} out of range 1..={} or not ascending",
                    spec.steps()
                )));
            }
            is_obs[k] = true;
            prev = k;
        }
        Ok(Self {
            tables: StepTables::new(spec, h),
            functional,
            fold,
            steps: spec.steps(),
            sigma_levels: spec.sigma_levels(),
            dt: spec.dt(),
            is_obs,
            b_obs: Vec::with_capacity(functional.observation_steps().len()),
            w_obs: Vec::with_capacity(functional.observation_steps().len()),
            sigma_sq_path: Vec::with_capacity(spec.steps()),
        })
    }

    fn leaf(&mut self, state: &PathState<T>) -> T {
        let sample = PathSample {
            state,
            b_obs: &self.b_obs,
            w_obs: &self.w_obs,
            sigma_sq_path: &self.sigma_sq_path,
            dt: self.dt,
        };
        self.functional.eval(&sample)
    }

    fn child_value(&mut self, state: &PathState<T>, level: usize, b_pos: bool, w_pos: bool) -> T {
        let child = self.tables.advance(state, state.step, level, b_pos, w_pos);
        let record = self.is_obs[child.step];
        if record {
            self.b_obs.push(child.b);
            self.w_obs.push(child.w);
        }
        let v = self.value(child);
        if record {
            self.b_obs.pop();
            self.w_obs.pop();
        }
        v
    }

    /// DP value at a node: max (or min) over the control grid of the average
    /// over noise signs of the child values. Summation order is fixed.
    fn value(&mut self, state: PathState<T>) -> T {
        if state.step == self.steps {
            return self.leaf(&state);
        }
        let half = real::<T>(0.5);
        let quarter = real::<T>(0.25);
        let mut best: Option<T> = None;
        for level in 0..self.sigma_levels {
            self.sigma_sq_path
                .push(self.tables.levels[state.step][level].sigma_sq);
            let avg = if self.tables.product {
                let a = self.child_value(&state, level, true, true);
                let b = self.child_value(&state, level, true, false);
                let c = self.child_value(&state, level, false, true);
                let d = self.child_value(&state, level, false, false);
                ((a + b) + (c + d)) * quarter
            } else {
                let a = self.child_value(&state, level, true, true);
                let b = self.child_value(&state, level, false, true);
                (a + b) * half
            };
            self.sigma_sq_path.pop();
            best = Some(match best {
                None => avg,
                Some(cur) => match self.fold {
                    Fold::Upper => cur.max(avg),
                    Fold::Lower => cur.min(avg),
                },
            });
        }
        best.expect("sigma_levels >= 2")
    }

    /// Collects the DP value function over all layer-`k` nodes, in the
    /// traversal's branch order.
    fn collect_layer(&mut self, state: PathState<T>, k: usize, out: &mut Vec<T>) {
        if state.step == k {
            let v = self.value(state);
            out.push(v);
            return;
        }
        for level in 0..self.sigma_levels {
            self.sigma_sq_path
                .push(self.tables.levels[state.step][level].sigma_sq);
            let signs: &[(bool, bool)] = if self.tables.product {
                &[(true, true), (true, false), (false, true), (false, false)]
            } else {
                &[(true, true), (false, true)]
            };
            for &(b_pos, w_pos) in signs {
                let child = self.tables.advance(&state, state.step, level, b_pos, w_pos);
                let record = self.is_obs[child.step];
                if record {
                    self.b_obs.push(child.b);
                    self.w_obs.push(child.w);
                }
                self.collect_layer(child, k, out);
                if record {
                    self.b_obs.pop();
                    self.w_obs.pop();
                }
            }
            self.sigma_sq_path.pop();
        }
    }
}

fn expectation<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
    fold: Fold,
) -> Result<T> {
    let mut tr = Traversal::new(spec, h, f, fold)?;
    Ok(tr.value(PathState::initial()))
}

/// `sup` over adapted controls of the expected value of `f`.
pub fn upper_expectation<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
) -> Result<T> {
    expectation(spec, h, f, Fold::Upper)
}

/// `inf` over adapted controls; equals `-upper(-f)` exactly.
pub fn lower_expectation<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
) -> Result<T> {
    expectation(spec, h, f, Fold::Lower)
}

/// DP value function restricted to layer `k`, indexed by branch history:
/// step 0 is the most significant digit, and within one step the branch code
/// is `(level * 2 + b_sign) * w_factor + w_sign` with sign index 0 for `+`.
pub fn conditional_value<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
    k: usize,
) -> Result<Vec<T>> {
    if k > spec.steps() {
        return Err(Error::invalid(format!(
            "layer {k} out of range 0..={}",
            spec.steps()
        )));
    }
    let table_size = (spec.branching() as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if table_size > MAX_LAYER_TABLE {
        return Err(Error::config(format!(
            "layer table of {table_size} nodes exceeds the cap of {MAX_LAYER_TABLE}"
        )));
    }
    let mut tr = Traversal::new(spec, h, f, Fold::Upper)?;
    let mut out = Vec::with_capacity(table_size as usize);
    tr.collect_layer(PathState::initial(), k, &mut out);
    Ok(out)
}

/// Folds a layer-`k` value table back to the root with the same max/average
/// arithmetic the depth-first engine uses, so the tower property holds
/// exactly.
pub fn fold_layer<T: Real>(spec: &TreeSpec<T>, layer: &[T], k: usize) -> Result<T> {
    let branching = spec.branching();
    let expected = (branching as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if layer.len() as u128 != expected {
        return Err(Error::invalid(format!(
            "layer length {} does not match branching^{k} = {expected}",
            layer.len()
        )));
    }
    let half = real::<T>(0.5);
    let quarter = real::<T>(0.25);
    let wf = if spec.product_space() { 2 } else { 1 };
    let mut cur = layer.to_vec();
    for _ in 0..k {
        let parents = cur.len() / branching;
        let mut next = Vec::with_capacity(parents);
        for p in 0..parents {
            let base = p * branching;
            let mut best: Option<T> = None;
            for level in 0..spec.sigma_levels() {
                let code = |s: usize, w: usize| base + (level * 2 + s) * wf + w;
                let avg = if spec.product_space() {
                    ((cur[code(0, 0)] + cur[code(0, 1)]) + (cur[code(1, 0)] + cur[code(1, 1)]))
                        * quarter
                } else {
                    (cur[code(0, 0)] + cur[code(1, 0)]) * half
                };
                best = Some(match best {
                    None => avg,
                    Some(b) => b.max(avg),
                });
            }
            next.push(best.unwrap());
        }
        cur = next;
    }
    Ok(cur[0])
}

/// Visits every leaf path of the tree (all control choices times all noise
/// outcomes), in the engine's traversal order.
pub fn for_each_path<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    obs_steps: &[usize],
    visit: &mut dyn FnMut(&PathSample<'_, T>),
) -> Result<()> {
    struct Visitor<'v, T> {
        obs: Vec<usize>,
        needs_w: bool,
        sink: std::cell::RefCell<&'v mut dyn FnMut(&PathSample<'_, T>)>,
    }
    impl<T: Real> PathFunctional<T> for Visitor<'_, T> {
        fn observation_steps(&self) -> &[usize] {
            &self.obs
        }
        fn requires_product_space(&self) -> bool {
            self.needs_w
        }
        fn eval(&self, sample: &PathSample<'_, T>) -> T {
            (self.sink.borrow_mut())(sample);
            T::zero()
        }
    }
    let v = Visitor {
        obs: obs_steps.to_vec(),
        needs_w: false,
        sink: std::cell::RefCell::new(visit),
    };
    expectation(spec, h, &v, Fold::Upper).map(|_| ())
}

/// Replays one path from its per-step choices with arithmetic independent of
/// the engine's precomputed tables (different factorization of the same
/// quantities), for the enumeration oracle.
#[allow(clippy::too_many_arguments)]
fn replay_path<T: Real>(
    dt: T,
    h: &SimpleProcess<T>,
    product: bool,
    choices: &[(T, bool, bool)],
    is_obs: &[bool],
    b_obs: &mut Vec<T>,
    w_obs: &mut Vec<T>,
    sigma_sq_path: &mut Vec<T>,
) -> PathState<T> {
    b_obs.clear();
    w_obs.clear();
    sigma_sq_path.clear();
    let mut s = PathState::initial();
    for (k, &(sigma_sq, b_pos, w_pos)) in choices.iter().enumerate() {
        let hk = h.value(k);
        let db_abs = (sigma_sq * dt).sqrt();
        let db = if b_pos { db_abs } else { -db_abs };
        s.b = s.b + db;
        s.qv = s.qv + sigma_sq * dt;
        s.int_h_db = s.int_h_db + hk * db;
        s.int_h2_dqv = s.int_h2_dqv + hk * hk * sigma_sq * dt;
        s.log_cosh_h_sigma = s.log_cosh_h_sigma + (hk * db_abs).cosh().ln();
        if product {
            let dw = if w_pos { dt.sqrt() } else { -(dt.sqrt()) };
            s.w = s.w + dw;
            s.int_h_dw = s.int_h_dw + hk * dw;
        }
        s.int_h2_dt = s.int_h2_dt + hk * hk * dt;
        s.step = k + 1;
        sigma_sq_path.push(sigma_sq);
        if is_obs[s.step] {
            b_obs.push(s.b);
            w_obs.push(s.w);
        }
    }
    s
}

fn obs_flags<T: Real>(
    spec: &TreeSpec<T>,
    f: &(impl PathFunctional<T> + ?Sized),
) -> Result<Vec<bool>> {
    let mut is_obs = vec![false; spec.steps() + 1];
    for &k in f.observation_steps() {
        if k == 0 || k > spec.steps() {
            return Err(Error::invalid(format!(
                "observation step {k} out of range 1..={}",
                spec.steps()
            )));
        }
        is_obs[k] = true;
    }
    Ok(is_obs)
}

/// Brute-force oracle for [`upper_expectation`].
///
/// Below [`ORACLE_MAX_STRATEGIES`] it enumerates every adapted strategy as an
/// explicit table (control per noise history per step) and maximizes the
/// plain average of the functional over all noise paths, which checks the
/// dynamic-programming optimality principle itself. Above that count it
/// falls back to a structurally independent layered array induction over a
/// fully materialized tree, with every leaf replayed from scratch. Hard caps:
/// `steps <= 8`, `sigma_levels <= 3`.
pub fn enumerate_oracle<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
) -> Result<T> {
    if spec.steps() > ORACLE_MAX_STEPS || spec.sigma_levels() > ORACLE_MAX_LEVELS {
        return Err(Error::config(format!(
            "enumeration oracle is capped at steps <= {ORACLE_MAX_STEPS} and sigma_levels <= {ORACLE_MAX_LEVELS}"
        )));
    }
    if f.requires_product_space() && !spec.product_space() {
        return Err(Error::config(
            "functional reads the auxiliary driver W: the tree must be built with product_space"
                .to_string(),
        ));
    }
    if h.len() != spec.steps() {
        return Err(Error::invalid("integrand length must match tree steps"));
    }
    let nb = spec.noise_branching() as u128;
    let m = spec.steps();
    let mut decision_nodes: u128 = 0;
    let mut acc = 1u128;
    for _ in 0..m {
        decision_nodes += acc;
        acc *= nb;
    }
    let strategies = if decision_nodes <= u32::MAX as u128 {
        (spec.sigma_levels() as u128).checked_pow(decision_nodes as u32)
    } else {
        None
    };
    match strategies {
        Some(s) if s <= ORACLE_MAX_STRATEGIES => {
            oracle_strategy_tables(spec, h, f, decision_nodes as usize, s)
        }
        _ => oracle_layered(spec, h, f),
    }
}

fn oracle_strategy_tables<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
    decision_nodes: usize,
    strategies: u128,
) -> Result<T> {
    let m = spec.steps();
    let nb = spec.noise_branching();
    let dt = spec.dt();
    let grid = spec.band().variance_grid(spec.sigma_levels());
    let is_obs = obs_flags(spec, f)?;
    // offsets[j]: first decision-node id of step j.
    let mut offsets = Vec::with_capacity(m);
    let mut total = 0usize;
    let mut layer = 1usize;
    for _ in 0..m {
        offsets.push(total);
        total += layer;
        layer *= nb;
    }
    debug_assert_eq!(total, decision_nodes);

    let paths = nb.pow(m as u32);
    let inv_paths = T::one() / T::from_usize(paths).unwrap();
    let mut strategy = vec![0usize; decision_nodes];
    let mut best: Option<T> = None;
    let mut b_obs = Vec::new();
    let mut w_obs = Vec::new();
    let mut sig_path = Vec::new();
    let mut choices: Vec<(T, bool, bool)> = Vec::with_capacity(m);
    for _ in 0..strategies {
        let mut sum = T::zero();
        for p in 0..paths {
            choices.clear();
            let mut hist = 0usize;
            for j in 0..m {
                // Noise digit of step j, most significant first.
                let digit = (p / nb.pow((m - 1 - j) as u32)) % nb;
                let level = strategy[offsets[j] + hist];
                let b_pos = digit & 1 == 0;
                let w_pos = digit & 2 == 0;
                choices.push((grid[level], b_pos, w_pos));
                hist = hist * nb + digit;
            }
            let state = replay_path(
                dt,
                h,
                spec.product_space(),
                &choices,
                &is_obs,
                &mut b_obs,
                &mut w_obs,
                &mut sig_path,
            );
            let sample = PathSample {
                state: &state,
                b_obs: &b_obs,
                w_obs: &w_obs,
                sigma_sq_path: &sig_path,
                dt,
            };
            sum = sum + f.eval(&sample);
        }
        let ev = sum * inv_paths;
        best = Some(match best {
            None => ev,
            Some(b) => b.max(ev),
        });
        // Odometer increment of the strategy table, base sigma_levels.
        let mut i = 0;
        while i < decision_nodes {
            strategy[i] += 1;
            if strategy[i] < spec.sigma_levels() {
                break;
            }
            strategy[i] = 0;
            i += 1;
        }
    }
    Ok(best.expect("at least one strategy"))
}

fn oracle_layered<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
) -> Result<T> {
    let leaves = spec.leaf_count();
    if leaves > ORACLE_MAX_LEAVES {
        return Err(Error::config(format!(
            "layered oracle needs branching^steps <= {ORACLE_MAX_LEAVES}, got {leaves}"
        )));
    }
    let m = spec.steps();
    let branching = spec.branching();
    let nb = spec.noise_branching();
    let dt = spec.dt();
    let grid = spec.band().variance_grid(spec.sigma_levels());
    let is_obs = obs_flags(spec, f)?;
    let leaves = leaves as usize;
    let mut vals = Vec::with_capacity(leaves);
    let mut b_obs = Vec::new();
    let mut w_obs = Vec::new();
    let mut sig_path = Vec::new();
    let mut choices: Vec<(T, bool, bool)> = Vec::with_capacity(m);
    for idx in 0..leaves {
        choices.clear();
        for j in 0..m {
            let code = (idx / branching.pow((m - 1 - j) as u32)) % branching;
            let level = code / nb;
            let noise = code % nb;
            let b_pos = noise & 1 == 0;
            let w_pos = noise & 2 == 0;
            choices.push((grid[level], b_pos, w_pos));
        }
        let state = replay_path(
            dt,
            h,
            spec.product_space(),
            &choices,
            &is_obs,
            &mut b_obs,
            &mut w_obs,
            &mut sig_path,
        );
        let sample = PathSample {
            state: &state,
            b_obs: &b_obs,
            w_obs: &w_obs,
            sigma_sq_path: &sig_path,
            dt,
        };
        vals.push(f.eval(&sample));
    }
    // Backward induction on the materialized arrays.
    let noise_count = T::from_usize(nb).unwrap();
    let mut cur = vals;
    for _ in 0..m {
        let parents = cur.len() / branching;
        let mut next = Vec::with_capacity(parents);
        for p in 0..parents {
            let base = p * branching;
            let mut best: Option<T> = None;
            for level in 0..spec.sigma_levels() {
                let mut sum = T::zero();
                for noise in 0..nb {
                    sum = sum + cur[base + level * nb + noise];
                }
                let avg = sum / noise_count;
                best = Some(match best {
                    None => avg,
                    Some(b) => b.max(avg),
                });
            }
            next.push(best.unwrap());
        }
        cur = next;
    }
    Ok(cur[0])
}

/// Max over non-adaptive (open-loop) control sequences of the expected value
/// of `f`; a lower bound for [`upper_expectation`], tight when the optimal
/// control never reacts to the path.
pub fn open_loop_value<T: Real>(
    spec: &TreeSpec<T>,
    h: &SimpleProcess<T>,
    f: &(impl PathFunctional<T> + ?Sized),
) -> Result<T> {
    if spec.leaf_count() > ORACLE_MAX_LEAVES {
        return Err(Error::config(format!(
            "open-loop enumeration needs branching^steps <= {ORACLE_MAX_LEAVES}"
        )));
    }
    let m = spec.steps();
    let nb = spec.noise_branching();
    let dt = spec.dt();
    let grid = spec.band().variance_grid(spec.sigma_levels());
    let is_obs = obs_flags(spec, f)?;
    let paths = nb.pow(m as u32);
    let inv_paths = T::one() / T::from_usize(paths).unwrap();
    let mut seq = vec![0usize; m];
    let mut best: Option<T> = None;
    let mut b_obs = Vec::new();
    let mut w_obs = Vec::new();
    let mut sig_path = Vec::new();
    let mut choices: Vec<(T, bool, bool)> = Vec::with_capacity(m);
    loop {
        let mut sum = T::zero();
        for p in 0..paths {
            choices.clear();
            for j in 0..m {
                let digit = (p / nb.pow((m - 1 - j) as u32)) % nb;
                choices.push((grid[seq[j]], digit & 1 == 0, digit & 2 == 0));
            }
            let state = replay_path(
                dt,
                h,
                spec.product_space(),
                &choices,
                &is_obs,
                &mut b_obs,
                &mut w_obs,
                &mut sig_path,
            );
            let sample = PathSample {
                state: &state,
                b_obs: &b_obs,
                w_obs: &w_obs,
                sigma_sq_path: &sig_path,
                dt,
            };
            sum = sum + f.eval(&sample);
        }
        let ev = sum * inv_paths;
        best = Some(match best {
            None => ev,
            Some(b) => b.max(ev),
        });
        let mut i = 0;
        while i < m {
            seq[i] += 1;
            if seq[i] < spec.sigma_levels() {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }
    Ok(best.expect("at least one sequence"))
}
