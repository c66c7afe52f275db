//! Shared fixtures for the benchmarks.

use rectiflat_core::{generate, GeneratorKind, GeneratorSpec, MetricSpace};

/// Circle of `n` points, the default workload.
pub fn circle(n: usize) -> MetricSpace {
    generate(&GeneratorSpec::new(GeneratorKind::Circle, n, 0)).expect("circle generator")
}

/// Noisy segment, seeded.
pub fn perturbed_line(n: usize, seed: u64) -> MetricSpace {
    generate(&GeneratorSpec::new(GeneratorKind::PerturbedLine { noise: 0.02 }, n, seed)).expect("line generator")
}

pub fn cantor(depth: u32) -> MetricSpace {
    generate(&GeneratorSpec::new(GeneratorKind::Cantor4 { depth }, 0, 0)).expect("cantor generator")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_have_the_requested_size() {
        assert_eq!(super::circle(32).len(), 32);
        assert_eq!(super::perturbed_line(20, 1).len(), 20);
        assert_eq!(super::cantor(2).len(), 16);
    }
}
