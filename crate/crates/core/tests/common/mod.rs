#![allow(dead_code)]

use nonlocal_core::kernels::{OrderFunction, Theta};
use nonlocal_core::{Kernel, LevyDensity, ScalarFunction};

pub fn mu() -> LevyDensity {
    LevyDensity::power_law(0.5, 1.0).unwrap()
}

pub fn fractional_heat() -> Kernel {
    Kernel::fractional_heat(1, 0.5, 1.0).unwrap()
}

pub fn porous_medium() -> Kernel {
    Kernel::porous_medium(1, ScalarFunction::power_odd(2.0).unwrap(), mu()).unwrap()
}

pub fn p_laplacian() -> Kernel {
    Kernel::p_laplacian(1, ScalarFunction::phi_power(3.0).unwrap(), mu()).unwrap()
}

/// The six families every acceptance criterion quantifies over.
pub fn zoo() -> Vec<(&'static str, Kernel)> {
    vec![
        ("fractional_heat", fractional_heat()),
        ("porous_medium", porous_medium()),
        ("convex", Kernel::convex_diffusion(1, ScalarFunction::power_abs(2.0).unwrap(), mu()).unwrap()),
        ("p_laplacian", p_laplacian()),
        (
            "doubly_nonlinear",
            Kernel::doubly_nonlinear(
                1,
                ScalarFunction::power_odd(2.0).unwrap(),
                ScalarFunction::phi_power(3.0).unwrap(),
                mu(),
            )
            .unwrap(),
        ),
        (
            "variable_order",
            Kernel::variable_order(
                1,
                OrderFunction::saturating(0.0, 0.25, 1.0),
                OrderFunction::constant(0.0),
                Theta::Constant(0.25),
                0.25,
                0.5,
            )
            .unwrap(),
        ),
    ]
}
