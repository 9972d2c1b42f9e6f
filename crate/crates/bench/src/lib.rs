//! Shared fixtures for the benchmarks.

use ecs_spectra::{EllipticParams, FockBasis, RepCoeffs, Result};

/// Parameters, basis and representation at the sizes used by the Hamiltonian checks.
pub fn hamiltonian_fixture(q: f64, nu: f64, eps: f64, m: usize, l: usize) -> Result<(EllipticParams, FockBasis, RepCoeffs)> {
    let p = EllipticParams::from_nu(q, eps, nu)?;
    let b = FockBasis::new(m, l, 2)?;
    let r = RepCoeffs::from_q(q, m)?;
    Ok((p, b, r))
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_builds() {
        assert!(super::hamiltonian_fixture(0.3, 1.4, 1.0, 4, 8).is_ok());
    }
}
