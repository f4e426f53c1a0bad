//! Recursive NARX simulation and fixed-step integration of the Duffing
//! oscillator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::term::TermSpec;

/// Trajectories whose magnitude exceeds this are reported unstable.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// A known system structure: terms with their coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrueModel {
    pub name: String,
    pub terms: Vec<TermSpec>,
    pub coefficients: Vec<f64>,
}

impl TrueModel {
    pub fn new(name: impl Into<String>, pairs: Vec<(TermSpec, f64)>) -> Self {
        let (terms, coefficients) = pairs.into_iter().unzip();
        TrueModel { name: name.into(), terms, coefficients }
    }

    /// Known cardinality of the system.
    pub fn cardinality(&self) -> usize {
        self.terms.len()
    }
}

/// Runs the NARX recursion with zero initial conditions, adding `noise`
/// as the equation error e(k). `u` and `noise` must have equal length.
pub fn simulate_narx(model: &TrueModel, u: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    if u.len() != noise.len() {
        return Err(Error::InvalidSpec(format!(
            "input length {} != noise length {}",
            u.len(),
            noise.len()
        )));
    }
    let mut y = Vec::with_capacity(u.len());
    for k in 0..u.len() {
        let mut acc = noise[k];
        for (term, theta) in model.terms.iter().zip(&model.coefficients) {
            acc += theta * term.eval(u, &y, k);
        }
        if !acc.is_finite() || acc.abs() > OVERFLOW_GUARD {
            return Err(Error::Unstable { index: k, guard: OVERFLOW_GUARD });
        }
        y.push(acc);
    }
    Ok(y)
}

/// Continuous-time Duffing oscillator
/// y'' + 2ζω_n y' + ω_n² y + ω_n² ε y³ − u = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuffingSpec {
    pub omega_n: f64,
    pub zeta: f64,
    pub epsilon: f64,
    /// Output sample rate, Hz.
    pub sample_rate: f64,
    /// RK4 substeps per output sample.
    pub substeps: usize,
}

impl DuffingSpec {
    /// Paper parameters: ω_n = 45π, ζ = 0.01, ε = 3, sampled at 500 Hz.
    pub fn benchmark() -> Self {
        DuffingSpec {
            omega_n: 45.0 * std::f64::consts::PI,
            zeta: 0.01,
            epsilon: 3.0,
            sample_rate: 500.0,
            substeps: 20,
        }
    }

    fn accel(&self, y: f64, v: f64, u: f64) -> f64 {
        u - 2.0 * self.zeta * self.omega_n * v
            - self.omega_n * self.omega_n * (y + self.epsilon * y * y * y)
    }
}

/// Integrates the oscillator from zero initial state with classic RK4 and
/// zero-order-hold input: `u[k]` is held over the k-th sample interval and
/// `y[k]` is the state sampled at the *start* of that interval, so the
/// discrete record obeys y(k) ~ f(y(k-1), ..., u(k-1), ...).
///
/// At least 20 substeps per output sample are required; at the benchmark
/// rate that makes further refinement change outputs below 1e-8 relative.
pub fn simulate_duffing(spec: &DuffingSpec, u: &[f64]) -> Result<Vec<f64>> {
    if spec.sample_rate <= 0.0 {
        return Err(Error::InvalidSpec("sample rate must be positive".into()));
    }
    if spec.substeps < 20 {
        return Err(Error::InvalidSpec(format!(
            "need at least 20 RK4 substeps per sample, got {}",
            spec.substeps
        )));
    }
    let h = 1.0 / (spec.sample_rate * spec.substeps as f64);
    let mut pos = 0.0_f64;
    let mut vel = 0.0_f64;
    let mut out = Vec::with_capacity(u.len());
    for (k, &drive) in u.iter().enumerate() {
        out.push(pos);
        for _ in 0..spec.substeps {
            let (k1p, k1v) = (vel, spec.accel(pos, vel, drive));
            let (k2p, k2v) = (
                vel + 0.5 * h * k1v,
                spec.accel(pos + 0.5 * h * k1p, vel + 0.5 * h * k1v, drive),
            );
            let (k3p, k3v) = (
                vel + 0.5 * h * k2v,
                spec.accel(pos + 0.5 * h * k2p, vel + 0.5 * h * k2v, drive),
            );
            let (k4p, k4v) =
                (vel + h * k3v, spec.accel(pos + h * k3p, vel + h * k3v, drive));
            pos += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            vel += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        if !pos.is_finite() || !vel.is_finite() || pos.abs() > OVERFLOW_GUARD {
            return Err(Error::Unstable { index: k, guard: OVERFLOW_GUARD });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin_system;

    #[test]
    fn zero_input_zero_noise_keeps_a_constant_free_system_at_rest() {
        let s2 = builtin_system("S2").unwrap();
        let model = s2.narx_model().unwrap();
        let y = simulate_narx(model, &[0.0; 100], &[0.0; 100]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn s1_noise_free_converges_to_quadratic_fixed_point() {
        // y* = 0.5 + 0.5 y* - 0.05 y*^2  =>  y* = sqrt(35) - 5.
        let expected = 35.0_f64.sqrt() - 5.0;
        let s1 = builtin_system("S1").unwrap();
        let model = s1.narx_model().unwrap();
        let y = simulate_narx(model, &[0.0; 400], &[0.0; 400]).unwrap();
        let last = *y.last().unwrap();
        assert!((last - expected).abs() < 1e-10, "fixed point {last} vs {expected}");
    }

    #[test]
    fn unstable_recursions_name_the_sample() {
        let model = TrueModel::new(
            "blowup",
            vec![("y(k-1)".parse().unwrap(), 2.0), ("1".parse().unwrap(), 1.0)],
        );
        let err = simulate_narx(&model, &[0.0; 100], &[0.0; 100]).unwrap_err();
        match err {
            Error::Unstable { index, .. } => assert!(index > 0),
            other => panic!("expected instability, got {other}"),
        }
    }

    #[test]
    fn duffing_equilibrium_and_linear_step_gain() {
        let spec = DuffingSpec::benchmark();
        let y = simulate_duffing(&spec, &[0.0; 64]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));

        // With the cubic removed, a step of amplitude A settles at A/ω_n².
        let lin = DuffingSpec { epsilon: 0.0, ..spec };
        let amplitude = 2.0;
        let n = 4000; // 8 s: plenty for the 1% damping to settle
        let y = simulate_duffing(&lin, &vec![amplitude; n]).unwrap();
        let expected = amplitude / (lin.omega_n * lin.omega_n);
        let tail = &y[n - 100..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "steady state {mean} vs {expected}"
        );
    }

    #[test]
    fn duffing_substep_refinement_converges() {
        let spec = DuffingSpec::benchmark();
        let fine = DuffingSpec { substeps: 40, ..spec };
        let u: Vec<f64> = (0..200).map(|k| ((k * 37 % 100) as f64) / 100.0).collect();
        let a = simulate_duffing(&spec, &u).unwrap();
        let b = simulate_duffing(&fine, &u).unwrap();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let max_rel = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs() / scale)
            .fold(0.0_f64, f64::max);
        assert!(max_rel < 1e-8, "substep refinement changed outputs by {max_rel:e}");
    }
}
