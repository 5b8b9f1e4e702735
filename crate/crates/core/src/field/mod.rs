//! Interaction kernels and the drift fields built from them.

pub mod drift;
pub mod holder;
pub mod kernel;

pub use drift::{empirical_drift, mean_field_drift, DriftField, InterpOrder};
pub use holder::{estimate_holder_norm, holder_net, HolderBallSpec, HolderProbe};
pub use kernel::{eval_kernel, HolderShape, Kernel, KernelTable};

use crate::error::Result;

/// Gaussian smoothing of `kernel` at scale `scale`; keeps the bound and the
/// declared Hölder constant.
pub fn mollify_kernel(kernel: &Kernel, scale: f64) -> Result<Kernel> {
    kernel.mollify(scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollified_sine_moves_by_at_most_lipschitz_times_scale() {
        let k = Kernel::sine(1).unwrap();
        let m = mollify_kernel(&k, 0.01).unwrap();
        for i in 0..20 {
            let x = -2.0 + 0.21 * i as f64;
            assert!((m.eval1(x, 0.3) - k.eval1(x, 0.3)).abs() <= 0.01);
        }
    }

    #[test]
    fn mollified_root_at_diagonal() {
        let k = Kernel::holder_power(1, 0.5, HolderShape::Magnitude).unwrap();
        for eps in [0.1, 0.01] {
            let m = mollify_kernel(&k, eps).unwrap();
            let v = m.eval1(0.0, 0.0);
            // Oracle: E sqrt(eps |Z|) = sqrt(eps) * E |Z|^(1/2), Z standard normal.
            let oracle = eps.sqrt() * 2f64.powf(0.25) * statrs::function::gamma::gamma(0.75)
                / std::f64::consts::PI.sqrt();
            assert!(v > 0.0 && v <= eps.sqrt() * 1.0);
            assert!((v - oracle).abs() < 0.05 * oracle, "{v} vs {oracle}");
        }
    }

    #[test]
    fn mollification_error_shrinks_with_scale() {
        let k = Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap();
        for &x in &[0.05, 0.3, -0.7] {
            let errs: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&e| (mollify_kernel(&k, e).unwrap().eval1(x, 0.0) - k.eval1(x, 0.0)).abs())
                .collect();
            assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
        }
    }

    #[test]
    fn nonpositive_scale_rejected() {
        let k = Kernel::sine(1).unwrap();
        assert!(mollify_kernel(&k, 0.0).is_err());
    }
}
