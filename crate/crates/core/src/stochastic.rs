//! Path-functional building blocks of the change-of-measure machinery:
//! deterministic simple integrands, the exponential martingale and its
//! per-step-normalized discrete variant, the drift-shifted coordinate, the
//! epsilon-perturbed coordinate, and the `J_epsilon` family.
//!
//! All of these evaluate on a [`PathSample`] whose accumulators were filled
//! by the tree engine against the same integrand `h`; the structs here carry
//! only the parameters that are not already folded into the accumulators.

use crate::error::{Error, Result};
use crate::phi::Functional;
use crate::scalar::{half, Real};
use crate::tree::{PathFunctional, PathSample, PathState};

/// Deterministic piecewise-constant integrand, one value per tree step.
///
/// Determinism plus boundedness makes the exponential-moment condition on
/// `integral h^2 d<B>` automatic: pathwise it is at most
/// `sup_norm^2 * sigma_max_sq * T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleProcess<T> {
    values: Vec<T>,
}

impl<T: Real> SimpleProcess<T> {
    pub fn constant(value: T, steps: usize) -> Self {
        Self {
            values: vec![value; steps.max(1)],
        }
    }

    pub fn zero(steps: usize) -> Self {
        Self::constant(T::zero(), steps)
    }

    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("integrand needs at least one step value"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value on step `k` (left endpoint convention).
    pub fn value(&self, k: usize) -> T {
        self.values[k]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }
}

/// Step-count-independent description of an integrand, instantiated per
/// tree resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrandSpec<T> {
    Constant(T),
    /// Values on equally long subintervals of `[0, T]`, resampled onto the
    /// tree's step grid by left-endpoint lookup.
    PiecewiseConstant(Vec<T>),
}

impl<T: Real> IntegrandSpec<T> {
    pub fn instantiate(&self, steps: usize) -> Result<SimpleProcess<T>> {
        if steps == 0 {
            return Err(Error::invalid(
                "cannot instantiate an integrand on zero steps",
            ));
        }
        match self {
            IntegrandSpec::Constant(v) => Ok(SimpleProcess::constant(*v, steps)),
            IntegrandSpec::PiecewiseConstant(vals) => {
                if vals.is_empty() {
                    return Err(Error::invalid(
                        "piecewise integrand needs at least one value",
                    ));
                }
                let values = (0..steps).map(|j| vals[j * vals.len() / steps]).collect();
                SimpleProcess::from_values(values)
            }
        }
    }

    pub fn sup_norm(&self) -> T {
        match self {
            IntegrandSpec::Constant(v) => v.abs(),
            IntegrandSpec::PiecewiseConstant(vals) => {
                vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
            }
        }
    }
}

/// `exp( integral h dB - 1/2 integral h^2 d<B> )` at the terminal state.
pub fn exp_martingale<T: Real>(state: &PathState<T>) -> T {
    (state.int_h_db - half::<T>() * state.int_h2_dqv).exp()
}

/// The per-step-normalized discrete exponential:
/// `prod_k exp(h_k dB_k) / cosh(h_k sigma_k sqrt(dt))`. Mean one under every
/// control by construction, at any step count.
pub fn exp_martingale_normalized<T: Real>(state: &PathState<T>) -> T {
    (state.int_h_db - state.log_cosh_h_sigma).exp()
}

/// `J_eps = exp( alpha eps integral h dB - (beta eps^2 / 2) integral h^2 d<B> )`.
pub fn j_epsilon<T: Real>(state: &PathState<T>, alpha: T, beta: T, eps: T) -> T {
    (alpha * eps * state.int_h_db - half::<T>() * beta * eps * eps * state.int_h2_dqv).exp()
}

/// Exponential martingale of `h` against the perturbed coordinate
/// `B + eps W`, via the derived accumulators.
pub fn perturbed_exp_martingale<T: Real>(sample: &PathSample<'_, T>, eps: T) -> T {
    (sample.int_h_db_perturbed(eps) - half::<T>() * sample.int_h2_dqv_perturbed(eps)).exp()
}

/// Drift removed from `B` up to (exclusive) step `step`:
/// `sum_{j < step} h_j sigma_j^2 dt`.
pub fn shift_to_step<T: Real>(sample: &PathSample<'_, T>, h: &SimpleProcess<T>, step: usize) -> T {
    let mut acc = T::zero();
    for j in 0..step {
        acc = acc + h.value(j) * sample.sigma_sq_path[j] * sample.dt;
    }
    acc
}

/// Same against the perturbed quadratic variation `(sigma_j^2 + eps^2) dt`.
pub fn shift_to_step_perturbed<T: Real>(
    sample: &PathSample<'_, T>,
    h: &SimpleProcess<T>,
    step: usize,
    eps: T,
) -> T {
    let mut acc = T::zero();
    for j in 0..step {
        acc = acc + h.value(j) * (sample.sigma_sq_path[j] + eps * eps) * sample.dt;
    }
    acc
}

/// How the recorded coordinates are transformed before `phi` sees them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate<T> {
    /// `B` itself.
    Plain,
    /// `B - integral d<B> h` (the drift-shifted coordinate).
    Shifted,
    /// `B + eps W` on product-space trees.
    Perturbed { eps: T },
    /// `B + eps W - integral d<B + eps W> h`.
    ShiftedPerturbed { eps: T },
}

/// Density multiplying `phi` at the leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight<T> {
    One,
    ExpMartingale,
    ExpMartingaleNormalized,
    /// Exponential martingale of `h` against `B + eps W`.
    PerturbedExp {
        eps: T,
    },
    JEpsilon {
        alpha: T,
        beta: T,
        eps: T,
    },
}

const MAX_OBS: usize = 8;

/// `phi(coordinate at t_1, ..., t_n) * weight` as a tree functional. This is
/// the shape of every quantity in the change-of-measure identities.
pub struct WeightedCylinder<'a, T> {
    phi: &'a Functional<T>,
    obs_steps: Vec<usize>,
    h: &'a SimpleProcess<T>,
    coordinate: Coordinate<T>,
    weight: Weight<T>,
}

impl<'a, T: Real> WeightedCylinder<'a, T> {
    pub fn new(
        phi: &'a Functional<T>,
        obs_steps: Vec<usize>,
        h: &'a SimpleProcess<T>,
        coordinate: Coordinate<T>,
        weight: Weight<T>,
    ) -> Result<Self> {
        if phi.arity() != obs_steps.len() {
            return Err(Error::invalid(format!(
                "functional arity {} does not match {} observation steps",
                phi.arity(),
                obs_steps.len()
            )));
        }
        if obs_steps.len() > MAX_OBS {
            return Err(Error::Unsupported(format!(
                "at most {MAX_OBS} observation times are supported"
            )));
        }
        if !obs_steps.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "observation steps must be strictly increasing",
            ));
        }
        Ok(Self {
            phi,
            obs_steps,
            h,
            coordinate,
            weight,
        })
    }
}

impl<T: Real> PathFunctional<T> for WeightedCylinder<'_, T> {
    fn observation_steps(&self) -> &[usize] {
        &self.obs_steps
    }

    fn requires_product_space(&self) -> bool {
        matches!(
            self.coordinate,
            Coordinate::Perturbed { .. } | Coordinate::ShiftedPerturbed { .. }
        ) || matches!(self.weight, Weight::PerturbedExp { .. })
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        let mut xs = [T::zero(); MAX_OBS];
        for (i, &step) in self.obs_steps.iter().enumerate() {
            let b = sample.b_obs[i];
            xs[i] = match self.coordinate {
                Coordinate::Plain => b,
                Coordinate::Shifted => b - shift_to_step(sample, self.h, step),
                Coordinate::Perturbed { eps } => b + eps * sample.w_obs[i],
                Coordinate::ShiftedPerturbed { eps } => {
                    b + eps * sample.w_obs[i] - shift_to_step_perturbed(sample, self.h, step, eps)
                }
            };
        }
        let weight = match self.weight {
            Weight::One => T::one(),
            Weight::ExpMartingale => exp_martingale(sample.state),
            Weight::ExpMartingaleNormalized => exp_martingale_normalized(sample.state),
            Weight::PerturbedExp { eps } => perturbed_exp_martingale(sample, eps),
            Weight::JEpsilon { alpha, beta, eps } => j_epsilon(sample.state, alpha, beta, eps),
        };
        self.phi
            .eval(&xs[..self.obs_steps.len()])
            .expect("arity checked at construction")
            * weight
    }
}

/// `J_epsilon` as a standalone functional (no coordinate observations).
pub struct JEpsilonFunctional<T> {
    pub alpha: T,
    pub beta: T,
    pub eps: T,
}

impl<T: Real> PathFunctional<T> for JEpsilonFunctional<T> {
    fn observation_steps(&self) -> &[usize] {
        &[]
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        j_epsilon(sample.state, self.alpha, self.beta, self.eps)
    }
}

/// `exp( (1+delta)/2 * integral h^2 d<B> )`, the exponential-moment
/// certificate integrand.
pub struct NovikovIntegrand<T> {
    pub delta: T,
}

impl<T: Real> PathFunctional<T> for NovikovIntegrand<T> {
    fn observation_steps(&self) -> &[usize] {
        &[]
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        (half::<T>() * (T::one() + self.delta) * sample.state.int_h2_dqv).exp()
    }
}

/// `exp_martingale` as a standalone functional.
pub struct ExpMartingaleFunctional;

impl<T: Real> PathFunctional<T> for ExpMartingaleFunctional {
    fn observation_steps(&self) -> &[usize] {
        &[]
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        exp_martingale(sample.state)
    }
}

/// The per-step-normalized variant as a standalone functional.
pub struct NormalizedExpMartingaleFunctional;

impl<T: Real> PathFunctional<T> for NormalizedExpMartingaleFunctional {
    fn observation_steps(&self) -> &[usize] {
        &[]
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        exp_martingale_normalized(sample.state)
    }
}

/// `-f`, with `f`'s observations.
pub struct Negated<F>(pub F);

impl<T: Real, F: PathFunctional<T>> PathFunctional<T> for Negated<F> {
    fn observation_steps(&self) -> &[usize] {
        self.0.observation_steps()
    }

    fn requires_product_space(&self) -> bool {
        self.0.requires_product_space()
    }

    fn eval(&self, sample: &PathSample<'_, T>) -> T {
        -self.0.eval(sample)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{for_each_path, lower_expectation, upper_expectation, TreeSpec};
    use crate::uncertainty::VolatilityBand;
    use approx::assert_abs_diff_eq;

    fn band(min: f64, max: f64) -> VolatilityBand<f64> {
        VolatilityBand::new(min, max).unwrap()
    }

    #[test]
    fn one_step_exponential_martingale_arithmetic() {
        // Single step, sigma = 1, dt = 1, h = 1: paths are xi = +-1 with
        // E(h) = exp(+-1 - 1/2).
        let spec = TreeSpec::new(1, 1.0, band(1.0, 1.0), 2).unwrap();
        let h = SimpleProcess::constant(1.0, 1);
        let mut seen = Vec::new();
        for_each_path(&spec, &h, &[1], &mut |s| {
            seen.push((s.b_obs[0], exp_martingale(s.state)));
        })
        .unwrap();
        for (b, e) in seen {
            let expected = (b - 0.5f64).exp();
            assert_abs_diff_eq!(e, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_integrand_gives_unit_density_everywhere() {
        let spec = TreeSpec::new(4, 1.0, band(0.25, 1.0), 2).unwrap();
        let h = SimpleProcess::zero(4);
        for_each_path(&spec, &h, &[], &mut |s| {
            assert_eq!(exp_martingale(s.state), 1.0);
            assert_eq!(exp_martingale_normalized(s.state), 1.0);
            assert_eq!(j_epsilon(s.state, 1.0, 1.0, 0.0), 1.0);
        })
        .unwrap();
    }

    #[test]
    fn normalized_martingale_has_unit_expectation_under_both_folds() {
        let spec = TreeSpec::new(6, 1.0, band(0.25, 1.0), 3).unwrap();
        let h = SimpleProcess::constant(0.5, 6);
        let up = upper_expectation(&spec, &h, &NormalizedExpMartingaleFunctional).unwrap();
        let lo = lower_expectation(&spec, &h, &NormalizedExpMartingaleFunctional).unwrap();
        assert_abs_diff_eq!(up, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn continuous_form_approaches_the_normalized_form() {
        let h_spec = IntegrandSpec::Constant(0.5);
        let mut mass_devs = Vec::new();
        let mut ratio_devs = Vec::new();
        for m in [6usize, 12] {
            let spec = TreeSpec::new(m, 1.0, band(0.25, 1.0), 2).unwrap();
            let h = h_spec.instantiate(m).unwrap();
            let up = upper_expectation(&spec, &h, &ExpMartingaleFunctional).unwrap();
            mass_devs.push((up - 1.0).abs());
            // Pathwise ratio of the two densities on the same tree.
            let mut worst: f64 = 0.0;
            for_each_path(&spec, &h, &[], &mut |s| {
                let ratio = exp_martingale(s.state) / exp_martingale_normalized(s.state);
                worst = worst.max((ratio - 1.0).abs());
            })
            .unwrap();
            ratio_devs.push(worst);
        }
        assert!(
            mass_devs[1] < mass_devs[0],
            "mass deviation should shrink with refinement: {mass_devs:?}"
        );
        assert!(mass_devs[1] < 1e-2);
        assert!(
            ratio_devs[1] < ratio_devs[0],
            "pathwise ratio deviation should shrink: {ratio_devs:?}"
        );
    }

    #[test]
    fn j_epsilon_with_unit_parameters_is_the_martingale_of_scaled_h() {
        // J_eps(alpha = beta = 1) equals E(eps h) pathwise.
        let m = 5;
        let eps = 0.3;
        let spec = TreeSpec::new(m, 1.0, band(0.25, 1.0), 2).unwrap();
        let h = SimpleProcess::constant(1.0, m);
        let h_scaled = SimpleProcess::constant(eps, m);
        let mut lhs = Vec::new();
        for_each_path(&spec, &h, &[], &mut |s| {
            lhs.push(j_epsilon(s.state, 1.0, 1.0, eps));
        })
        .unwrap();
        let mut rhs = Vec::new();
        for_each_path(&spec, &h_scaled, &[], &mut |s| {
            rhs.push(exp_martingale(s.state));
        })
        .unwrap();
        assert_eq!(lhs.len(), rhs.len());
        for (a, b) in lhs.iter().zip(&rhs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn classical_shift_subtracts_the_drift() {
        // Singleton band, h = 1: the shifted coordinate at T is B - T.
        let m = 4;
        let spec = TreeSpec::new(m, 1.0, band(1.0, 1.0), 2).unwrap();
        let h = SimpleProcess::constant(1.0, m);
        for_each_path(&spec, &h, &[m], &mut |s| {
            let shift = shift_to_step(s, &h, m);
            assert_abs_diff_eq!(shift, 1.0, epsilon = 1e-14);
        })
        .unwrap();
    }

    #[test]
    fn shift_vanishes_along_zero_volatility_scenarios() {
        let m = 4;
        let spec = TreeSpec::new(m, 1.0, band(0.0, 1.0), 2).unwrap();
        let h = SimpleProcess::constant(0.5, m);
        for_each_path(&spec, &h, &[m], &mut |s| {
            if s.sigma_sq_path.iter().all(|v| *v == 0.0) {
                assert_eq!(s.b_obs[0], 0.0);
                assert_eq!(shift_to_step(s, &h, m), 0.0);
            }
        })
        .unwrap();
    }

    #[test]
    fn perturbed_quadratic_variation_identity_holds_pathwise() {
        let m = 5;
        let eps = 0.4;
        let spec = TreeSpec::new(m, 1.0, band(0.0, 1.0), 2)
            .unwrap()
            .with_product_space(true)
            .unwrap();
        let h = SimpleProcess::constant(0.5, m);
        for_each_path(&spec, &h, &[], &mut |s| {
            let gap = s.qv_perturbed(eps) - s.state.qv;
            assert_abs_diff_eq!(gap, eps * eps * 1.0, epsilon = 1e-14);
            // qv is non-decreasing: increments are sigma^2 dt >= 0.
            assert!(s.sigma_sq_path.iter().all(|v| *v >= 0.0));
            assert!(exp_martingale(s.state) > 0.0);
        })
        .unwrap();
    }

    #[test]
    fn perturbed_exponential_factorizes_pathwise() {
        // N^eps = E(h)(B part) * exp(eps int h dW - eps^2/2 int h^2 dt).
        let m = 5;
        let eps = 0.25;
        let spec = TreeSpec::new(m, 1.0, band(0.0, 1.0), 2)
            .unwrap()
            .with_product_space(true)
            .unwrap();
        let h = SimpleProcess::constant(0.5, m);
        for_each_path(&spec, &h, &[], &mut |s| {
            let lhs = perturbed_exp_martingale(s, eps);
            let w_factor = (eps * s.state.int_h_dw - 0.5 * eps * eps * s.state.int_h2_dt).exp();
            let rhs = exp_martingale(s.state) * w_factor;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
        })
        .unwrap();
    }

    #[test]
    fn jensen_lower_bound_for_the_martingale() {
        // E_hat[E(h)] >= exp(E_hat[-1/2 int h^2 d<B>]).
        let m = 6;
        let spec = TreeSpec::new(m, 1.0, band(0.25, 1.0), 3).unwrap();
        let h = SimpleProcess::constant(0.8, m);
        let up = upper_expectation(&spec, &h, &ExpMartingaleFunctional).unwrap();
        let inner = crate::tree::FnFunctional::new(vec![], |s: &PathSample<'_, f64>| {
            -0.5 * s.state.int_h2_dqv
        });
        let bound = upper_expectation(&spec, &h, &inner).unwrap().exp();
        assert!(up >= bound - 1e-12, "{up} < {bound}");
    }

    #[test]
    fn integrand_resampling_is_left_endpoint() {
        let spec = IntegrandSpec::PiecewiseConstant(vec![1.0, 2.0]);
        let h = spec.instantiate(4).unwrap();
        assert_eq!(h.values(), &[1.0, 1.0, 2.0, 2.0]);
        let h3 = spec.instantiate(3).unwrap();
        assert_eq!(h3.values(), &[1.0, 1.0, 2.0]);
        let c = IntegrandSpec::Constant(0.5).instantiate(3).unwrap();
        assert_eq!(c.values(), &[0.5, 0.5, 0.5]);
        assert_eq!(c.sup_norm(), 0.5);
    }

    #[test]
    fn weighted_cylinder_validates_its_inputs() {
        let phi = Functional::parse("x1 + x2", 2, 10.0).unwrap();
        let h = SimpleProcess::zero(4);
        assert!(WeightedCylinder::new(&phi, vec![2], &h, Coordinate::Plain, Weight::One).is_err());
        assert!(
            WeightedCylinder::new(&phi, vec![3, 2], &h, Coordinate::Plain, Weight::One).is_err()
        );
        let ok = WeightedCylinder::new(&phi, vec![2, 4], &h, Coordinate::Plain, Weight::One);
        assert!(ok.is_ok());
        assert!(!ok.unwrap().requires_product_space());
        let p = WeightedCylinder::new(
            &phi,
            vec![2, 4],
            &h,
            Coordinate::Perturbed { eps: 0.1 },
            Weight::One,
        )
        .unwrap();
        assert!(p.requires_product_space());
    }
}
