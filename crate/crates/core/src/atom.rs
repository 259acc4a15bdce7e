//! Four-level ladder atom: Lindblad steady state, Doppler averaging and the
//! probe-laser susceptibility seen at the LO operating point.
//!
//! Levels are indexed 1..=4 in the physics and 0..=3 in the matrices. All
//! frequencies are angular (rad/s); the Hamiltonian is stored divided by ħ.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT, TWO_PI, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;

type Liouvillian = SMatrix<Complex64, 16, 16>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Level structure and laser settings of the four-level ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSystem {
    /// Spontaneous decay rates γ2, γ3, γ4 (rad/s).
    pub decay: [f64; 3],
    /// |1⟩→|2⟩ transition dipole moment (C·m).
    pub dipole_12: f64,
    /// |3⟩→|4⟩ transition dipole moment (C·m).
    pub dipole_34: f64,
    pub probe_detuning: f64,
    pub coupling_detuning: f64,
    pub rf_detuning: f64,
    pub probe_rabi: f64,
    pub coupling_rabi: f64,
    pub probe_wavelength: f64,
    pub coupling_wavelength: f64,
    /// Atomic mass (kg).
    pub atom_mass: f64,
    /// Atomic number density N0 (m⁻³).
    pub atomic_density: f64,
}

impl AtomSystem {
    pub fn validate(&self) -> Result<()> {
        if self.decay.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::invalid("decay", "decay rates must be >= 0"));
        }
        if !(self.probe_rabi >= 0.0) || !(self.coupling_rabi >= 0.0) {
            return Err(Error::invalid(
                "rabi",
                "laser Rabi frequencies must be >= 0",
            ));
        }
        if !(self.probe_wavelength > 0.0) || !(self.coupling_wavelength > 0.0) {
            return Err(Error::invalid(
                "wavelength",
                "laser wavelengths must be > 0",
            ));
        }
        if !(self.atomic_density > 0.0) {
            return Err(Error::invalid("atomic_density", "N0 must be > 0"));
        }
        if !(self.atom_mass > 0.0) {
            return Err(Error::invalid("atom_mass", "mass must be > 0"));
        }
        Ok(())
    }

    pub fn probe_angular_frequency(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.probe_wavelength
    }

    /// Probe wavenumber k_p = 2π/λp.
    pub fn probe_wavenumber(&self) -> f64 {
        TWO_PI / self.probe_wavelength
    }

    /// LO Rabi frequency Ω_l = μ34·E_l/ħ for a field strength in V/m.
    pub fn rf_rabi(&self, field: f64) -> f64 {
        self.dipole_34 * field / HBAR
    }

    fn with_detunings(&self, probe: f64, coupling: f64) -> AtomSystem {
        AtomSystem {
            probe_detuning: probe,
            coupling_detuning: coupling,
            ..self.clone()
        }
    }
}

/// 4×4 density matrix ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Matrix4<Complex64>);

impl DensityMatrix {
    pub fn ground() -> Self {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn diagonal(populations: [f64; 4]) -> Self {
        let mut m = Matrix4::zeros();
        for (i, p) in populations.into_iter().enumerate() {
            m[(i, i)] = Complex64::new(p, 0.0);
        }
        DensityMatrix(m)
    }

    /// Entry ρ_pq with 1-based level indices.
    pub fn entry(&self, p: usize, q: usize) -> Complex64 {
        self.0[(p - 1, q - 1)]
    }

    pub fn rho12(&self) -> Complex64 {
        self.entry(1, 2)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.0 - self.0.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigenvalues();
        let mut out = [eig[0], eig[1], eig[2], eig[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    /// Checks trace, Hermiticity, diagonal range and numerical positivity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let tr = self.trace();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(format!("trace {tr} != 1"));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(format!("not Hermitian: {herm:e}"));
        }
        for i in 0..4 {
            let d = self.0[(i, i)];
            if d.im.abs() > 1e-10 || d.re < -1e-8 || d.re > 1.0 + 1e-8 {
                return Err(format!("diagonal entry {i} out of range: {d}"));
            }
        }
        let ev = self.eigenvalues();
        if ev[0] < -1e-6 {
            return Err(format!("negative eigenvalue {:e}", ev[0]));
        }
        Ok(())
    }
}

/// Rotating-frame Hamiltonian divided by ħ (rad/s).
///
/// `rabi_rf` is the total RF Rabi frequency Ω_l + Ω_s + Ω_n; the (3,4)
/// element carries its conjugate and the (4,3) element the value itself.
pub fn build_hamiltonian(sys: &AtomSystem, rabi_rf: Complex64) -> Matrix4<Complex64> {
    let r = |x: f64| Complex64::new(x, 0.0);
    let mut h = Matrix4::zeros();
    h[(0, 1)] = r(sys.probe_rabi / 2.0);
    h[(1, 0)] = r(sys.probe_rabi / 2.0);
    h[(1, 1)] = r(-sys.probe_detuning);
    h[(1, 2)] = r(sys.coupling_rabi / 2.0);
    h[(2, 1)] = r(sys.coupling_rabi / 2.0);
    h[(2, 2)] = r(-sys.probe_detuning - sys.coupling_detuning);
    h[(2, 3)] = rabi_rf.conj() / 2.0;
    h[(3, 2)] = rabi_rf / 2.0;
    h[(3, 3)] = r(-sys.probe_detuning - sys.coupling_detuning - sys.rf_detuning);
    h
}

fn rhs_with(
    h: &Matrix4<Complex64>,
    decay: &[f64; 3],
    rho: &Matrix4<Complex64>,
) -> Matrix4<Complex64> {
    let j = Complex64::new(0.0, 1.0);
    let gamma = [0.0, decay[0], decay[1], decay[2]];
    let mut out = (h * rho - rho * h) * (-j);
    for p in 0..4 {
        for q in 0..4 {
            out[(p, q)] -= rho[(p, q)] * (0.5 * (gamma[p] + gamma[q]));
        }
    }
    // |2⟩ and |4⟩ decay to |1⟩, |3⟩ decays to |2⟩.
    out[(0, 0)] += rho[(1, 1)] * gamma[1] + rho[(3, 3)] * gamma[3];
    out[(1, 1)] += rho[(2, 2)] * gamma[2];
    out
}

/// Lindblad right-hand side dρ/dt = −j[H, ρ] − ½{Γ, ρ} + Λ(ρ).
pub fn lindblad_rhs(
    sys: &AtomSystem,
    rho: &DensityMatrix,
    rabi_rf: Complex64,
) -> Matrix4<Complex64> {
    let h = build_hamiltonian(sys, rabi_rf);
    rhs_with(&h, &sys.decay, &rho.0)
}

fn liouvillian(sys: &AtomSystem, rabi_rf: Complex64) -> Liouvillian {
    let h = build_hamiltonian(sys, rabi_rf);
    let mut l = Liouvillian::zeros();
    for k in 0..16 {
        let mut basis = Matrix4::zeros();
        basis[(k / 4, k % 4)] = Complex64::new(1.0, 0.0);
        let col = rhs_with(&h, &sys.decay, &basis);
        for i in 0..16 {
            l[(i, k)] = col[(i / 4, i % 4)];
        }
    }
    l
}

/// Steady state of the Lindblad equation by a direct 16×16 linear solve with
/// the ρ11 equation replaced by the trace constraint.
pub fn steady_state(sys: &AtomSystem, rabi_rf: Complex64) -> Result<DensityMatrix> {
    let mut a = liouvillian(sys, rabi_rf);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::SingularSystem { pivot_ratio: 0.0 });
    }
    a /= Complex64::new(scale, 0.0);
    for k in 0..16 {
        a[(0, k)] = if k % 5 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        };
    }
    let mut b = SVector::<Complex64, 16>::zeros();
    b[0] = Complex64::new(1.0, 0.0);

    let lu = a.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..16).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let pivot_ratio = if max > 0.0 { min / max } else { 0.0 };
    if pivot_ratio < 1e-13 {
        return Err(Error::SingularSystem { pivot_ratio });
    }
    let x = lu.solve(&b).ok_or(Error::SingularSystem { pivot_ratio })?;
    let mut rho = Matrix4::zeros();
    for i in 0..16 {
        rho[(i / 4, i % 4)] = x[i];
    }
    Ok(DensityMatrix(rho))
}

/// Velocity-averaging rule for the Maxwell–Boltzmann weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DopplerRule {
    GaussHermite {
        nodes: usize,
    },
    /// Uniform trapezoid over ±`truncation`·u.
    Trapezoid {
        nodes: usize,
        truncation: f64,
    },
}

/// Thermal environment and the velocity quadrature derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub temperature: f64,
    pub thermal_velocity: f64,
    pub rule: DopplerRule,
    // (velocity, normalized weight)
    samples: Vec<(f64, f64)>,
}

impl Environment {
    pub fn new(temperature: f64, atom_mass: f64, rule: DopplerRule) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::invalid("temperature", "T_env must be > 0"));
        }
        if !(atom_mass > 0.0) {
            return Err(Error::invalid("atom_mass", "mass must be > 0"));
        }
        let u = (BOLTZMANN * temperature / atom_mass).sqrt();
        let samples = match rule {
            DopplerRule::GaussHermite { nodes } => {
                if nodes < 3 || nodes % 2 == 0 {
                    return Err(Error::invalid("doppler_nodes", "need an odd count >= 3"));
                }
                let (x, w) = gauss_hermite(nodes);
                let norm = std::f64::consts::PI.sqrt();
                x.into_iter()
                    .zip(w)
                    .map(|(x, w)| (u * x, w / norm))
                    .collect()
            }
            DopplerRule::Trapezoid { nodes, truncation } => {
                if nodes < 3 || nodes % 2 == 0 {
                    return Err(Error::invalid("doppler_nodes", "need an odd count >= 3"));
                }
                if !(truncation > 0.0) {
                    return Err(Error::invalid("doppler_truncation", "must be > 0"));
                }
                let step = 2.0 * truncation / (nodes - 1) as f64;
                let norm = std::f64::consts::PI.sqrt();
                (0..nodes)
                    .map(|i| {
                        let x = -truncation + step * i as f64;
                        let end = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
                        (u * x, end * step * (-x * x).exp() / norm)
                    })
                    .collect()
            }
        };
        Ok(Environment {
            temperature,
            thermal_velocity: u,
            rule,
            samples,
        })
    }

    pub fn gauss_hermite(temperature: f64, atom_mass: f64, nodes: usize) -> Result<Self> {
        Self::new(temperature, atom_mass, DopplerRule::GaussHermite { nodes })
    }

    /// ∫ e^{−v²/u²}/(√π u) f(v) dv under the configured rule.
    pub fn velocity_average<F>(&self, f: F) -> Complex64
    where
        F: Fn(f64) -> Complex64,
    {
        self.samples.iter().map(|&(v, w)| f(v) * w).sum()
    }

    pub fn try_velocity_average<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let mut acc = ZERO;
        for &(v, w) in &self.samples {
            acc += f(v)? * w;
        }
        Ok(acc)
    }
}

/// Doppler-averaged coherence ρ̄12, with probe detuning shifted by −2πv/λp and
/// coupling detuning by +2πv/λc (counter-propagating beams).
pub fn doppler_average_rho12(
    sys: &AtomSystem,
    env: &Environment,
    rabi_rf: Complex64,
) -> Result<Complex64> {
    let kp = TWO_PI / sys.probe_wavelength;
    let kc = TWO_PI / sys.coupling_wavelength;
    env.try_velocity_average(|v| {
        let shifted =
            sys.with_detunings(sys.probe_detuning - kp * v, sys.coupling_detuning + kc * v);
        Ok(steady_state(&shifted, rabi_rf)?.rho12())
    })
}

/// Amplitude attenuation coefficient χ(Ω) in m⁻¹ at real RF Rabi amplitude Ω.
///
/// With the rotating-frame Hamiltonian above an absorbing medium has
/// Im ρ12 > 0, so χ is taken from the (2,1) coherence ρ21 = ρ12* to keep
/// absorption positive.
pub fn susceptibility(sys: &AtomSystem, env: &Environment, rabi_amplitude: f64) -> Result<f64> {
    if !(sys.probe_rabi > 0.0) {
        return Err(Error::invalid("probe_rabi", "Ω_p must be > 0"));
    }
    let rho12 = doppler_average_rho12(sys, env, Complex64::new(rabi_amplitude, 0.0))?;
    let prefactor = sys.probe_wavenumber() * sys.atomic_density * sys.dipole_12 * sys.dipole_12
        / (VACUUM_PERMITTIVITY * HBAR * sys.probe_rabi);
    Ok(-prefactor * rho12.conj().im)
}

/// Linearization point of χ around the LO Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityPoint {
    /// χ_l (m⁻¹).
    pub chi: f64,
    /// dχ/dΩ at Ω_l, m⁻¹·(rad/s)⁻¹.
    pub chi_slope: f64,
    /// Ω_l (rad/s).
    pub operating_rabi: f64,
}

/// dχ/dΩ at Ω_l by central differences, cross-checked at half the step.
pub fn susceptibility_slope(
    sys: &AtomSystem,
    env: &Environment,
    operating_rabi: f64,
) -> Result<f64> {
    if !(operating_rabi > 0.0) {
        return Err(Error::invalid("operating_rabi", "Ω_l must be > 0"));
    }
    let h = (1e-4 * operating_rabi).max(TWO_PI * 10.0);
    let central = |h: f64| -> Result<f64> {
        Ok((susceptibility(sys, env, operating_rabi + h)?
            - susceptibility(sys, env, operating_rabi - h)?)
            / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    // χ/Ω sets the slope scale where the slope itself passes through zero.
    let chi = susceptibility(sys, env, operating_rabi)?;
    let scale = d1.abs().max(d2.abs()).max(chi.abs() / operating_rabi);
    let relative = (d1 - d2).abs() / scale;
    if !(relative <= 1e-4) {
        return Err(Error::NonConverged { relative });
    }
    Ok(d1)
}

pub fn susceptibility_point(
    sys: &AtomSystem,
    env: &Environment,
    operating_rabi: f64,
) -> Result<SusceptibilityPoint> {
    Ok(SusceptibilityPoint {
        chi: susceptibility(sys, env, operating_rabi)?,
        chi_slope: susceptibility_slope(sys, env, operating_rabi)?,
        operating_rabi,
    })
}
