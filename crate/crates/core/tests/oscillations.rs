use std::f64::consts::TAU;
use tidal_dunes::grid::Grid;
use tidal_dunes::twoscale::{pair_sequence, synthetic_run, FastFactor, SpaceFactor, TestFunction, TimeFactor};

// A purely fast oscillation pairs to zero against slow test functions and
// to its Fourier coefficient against the matching fast mode.
#[test]
fn fast_oscillation_is_annihilated_by_slow_tests() {
    let grid = Grid::unit_square(8).unwrap();
    let slow = TestFunction::new(TimeFactor::Linear, FastFactor::One, SpaceFactor::SinSin);
    let resonant = TestFunction::new(TimeFactor::One, FastFactor::Sin(1), SpaceFactor::One);
    let mut previous = f64::INFINITY;
    for eps in [1.0 / 8.0, 1.0 / 32.0, 1.0 / 128.0] {
        let run = synthetic_run(grid, eps, eps / 32.0, 1.0, |t, p| (TAU * t / eps).sin() * (1.0 + p.x));
        let s = pair_sequence(&run, &slow, eps).unwrap().abs();
        assert!(s < previous, "slow pairing {s} did not shrink at eps = {eps}");
        previous = s;
        // int_0^1 sin^2 = 1/2 and int (1 + x) = 3/2
        let r = pair_sequence(&run, &resonant, eps).unwrap();
        assert!((r - 0.75).abs() < 1e-3, "resonant pairing {r}");
    }
    // int t sin(2 pi t / eps) dt = -eps / (2 pi): first order in eps
    assert!(previous < 1e-3);
}

#[test]
fn incommensurate_mode_pairs_to_zero() {
    let grid = Grid::unit_square(8).unwrap();
    let eps = 1.0 / 64.0;
    let run = synthetic_run(grid, eps, eps / 32.0, 1.0, |t, _| (2.0 * TAU * t / eps).sin());
    let psi = TestFunction::new(TimeFactor::One, FastFactor::Sin(1), SpaceFactor::One);
    assert!(pair_sequence(&run, &psi, eps).unwrap().abs() < 1e-10);
}
