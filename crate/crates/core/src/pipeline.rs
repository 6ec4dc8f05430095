//! End-to-end exact solve: kernels, propagators and transport observables.

use crate::dynamics::{solve_propagators, PropagatorSet};
use crate::kernels::{build_kernel_set, KernelSet};
use crate::model::NetworkSpec;
use crate::transport::{transport_trace, TransportTrace};
use crate::Result;

#[derive(Debug, Clone)]
pub struct ExactRun {
    pub kernels: KernelSet,
    pub propagators: PropagatorSet,
    pub transport: TransportTrace,
}

/// Validates `spec` and runs the exact pipeline.
pub fn run_exact(spec: &NetworkSpec) -> Result<ExactRun> {
    spec.validate().into_result()?;
    let kernels = build_kernel_set(spec)?;
    let propagators = solve_propagators(spec, &kernels)?;
    let transport = transport_trace(spec, &propagators)?;
    Ok(ExactRun {
        kernels,
        propagators,
        transport,
    })
}
