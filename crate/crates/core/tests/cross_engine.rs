//! Cross-engine agreement on cylinder functionals: the PDE backward
//! recursion against the tree engine, plus the classical closed form where
//! one exists.

use gexpect::pde::{expect_cylinder, Accuracy};
use gexpect::phi::Functional;
use gexpect::stochastic::{Coordinate, SimpleProcess, Weight, WeightedCylinder};
use gexpect::tree::{upper_expectation, TreeSpec};
use gexpect::uncertainty::{Generator, VolatilityBand};

fn tree_value(band: VolatilityBand<f64>, phi: &Functional<f64>, times: &[f64], m: usize) -> f64 {
    let spec = TreeSpec::new(m, 1.0, band, 2).unwrap();
    let h = SimpleProcess::zero(m);
    let obs = spec.steps_for_times(times).unwrap();
    let f = WeightedCylinder::new(phi, obs, &h, Coordinate::Plain, Weight::One).unwrap();
    upper_expectation(&spec, &h, &f).unwrap()
}

#[test]
fn running_minimum_two_times_all_bands() {
    let phi = Functional::parse("min(x1, x2)", 2, 10.0).unwrap();
    let times = [0.5, 1.0];

    // Classical band: the PDE value sits on the closed form
    // -1/2 sqrt(1/2) sqrt(2/pi); the tree at m = 12 carries a ~1.1e-2
    // Rademacher bias for this kinked functional (the budget caps m at 12
    // for these observation times), so the cross-engine gap is dominated by
    // the tree side.
    let band = VolatilityBand::new(1.0, 1.0).unwrap();
    let pde = expect_cylinder(&Generator::new(band), &phi, &times, Accuracy::Medium)
        .unwrap()
        .value;
    let exact = -0.5 * (0.5f64).sqrt() * (2.0 / std::f64::consts::PI).sqrt();
    assert!((pde - exact).abs() <= 5e-3, "pde {pde} vs exact {exact}");
    let tree = tree_value(band, &phi, &times, 12);
    assert!((pde - tree).abs() <= 1.5e-2, "pde {pde} vs tree {tree}");

    // Uncertain band: no closed form; engines must agree.
    let band = VolatilityBand::new(0.25, 1.0).unwrap();
    let pde = expect_cylinder(&Generator::new(band), &phi, &times, Accuracy::Medium)
        .unwrap()
        .value;
    let tree = tree_value(band, &phi, &times, 12);
    assert!((pde - tree).abs() <= 1e-2, "pde {pde} vs tree {tree}");

    // Degenerate band: the optimum is sigma = 0 with min(0, 0) = 0 exactly
    // on both engines.
    let band = VolatilityBand::new(0.0, 1.0).unwrap();
    let pde = expect_cylinder(&Generator::new(band), &phi, &times, Accuracy::Coarse)
        .unwrap()
        .value;
    let tree = tree_value(band, &phi, &times, 12);
    assert!(pde.abs() <= 1e-9);
    assert!(tree.abs() <= 1e-12);
}

#[test]
fn running_minimum_three_times() {
    let phi = Functional::parse("min(x1, min(x2, x3))", 3, 10.0).unwrap();
    let band = VolatilityBand::new(0.25, 1.0).unwrap();
    let pde = expect_cylinder(
        &Generator::new(band),
        &phi,
        &[0.25, 0.5, 1.0],
        Accuracy::Coarse,
    )
    .unwrap()
    .value;
    let tree = tree_value(band, &phi, &[0.25, 0.5, 1.0], 12);
    assert!((pde - tree).abs() <= 1e-2, "pde {pde} vs tree {tree}");
}

#[test]
fn smooth_two_time_functional_agrees_tightly() {
    let phi = Functional::parse("cos(x1) * cos(x2)", 2, 1.0).unwrap();
    for (lo, hi) in [(1.0, 1.0), (0.25, 1.0)] {
        let band = VolatilityBand::new(lo, hi).unwrap();
        let pde = expect_cylinder(&Generator::new(band), &phi, &[0.5, 1.0], Accuracy::Medium)
            .unwrap()
            .value;
        let tree = tree_value(band, &phi, &[0.5, 1.0], 12);
        assert!(
            (pde - tree).abs() <= 1e-2,
            "band [{lo},{hi}]: pde {pde} vs tree {tree}"
        );
    }
}
