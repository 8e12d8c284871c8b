//! Polytropic closure and the Bernoulli inversion used by the stream-function
//! equation.
//!
//! Units are chosen so that the rest state has `rho = 1`, `c = 1` and
//! `p = 1/gamma`. The Bernoulli constant is fixed by that rest state. In the
//! momentum variable `q = |rho v|^2 / 2` the inversion reads `1/rho = h(q)`,
//! which exists on `[0, q_sonic]`. Beyond a subsonic threshold `q_bar` the
//! coefficient is replaced by a power law that keeps the operator uniformly
//! elliptic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasError {
    #[error("isentropic coefficient must exceed 1, got {0}")]
    InvalidGamma(f64),
    #[error("mach cap must lie in (0, 1), got {0}")]
    InvalidMachCap(f64),
    #[error("{quantity} = {value} lies outside [{lo}, {hi}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Values of the closure at a given density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoState {
    pub pressure: f64,
    pub sound_speed: f64,
    pub enthalpy: f64,
}

/// Coefficient `h` and its derivative with respect to `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub h: f64,
    pub dh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GasParams", into = "GasParams")]
pub struct GasModel {
    gamma: f64,
    mach_cap: f64,
    q_bar: f64,
    h_bar: f64,
    alpha_hat: f64,
    q_sonic: f64,
    rho_star: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GasParams {
    gamma: f64,
    mach_cap: f64,
}

impl TryFrom<GasParams> for GasModel {
    type Error = GasError;
    fn try_from(p: GasParams) -> Result<Self, GasError> {
        GasModel::new(p.gamma, p.mach_cap)
    }
}

impl From<GasModel> for GasParams {
    fn from(g: GasModel) -> Self {
        GasParams {
            gamma: g.gamma,
            mach_cap: g.mach_cap,
        }
    }
}

impl GasModel {
    pub fn new(gamma: f64, mach_cap: f64) -> Result<Self, GasError> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(GasError::InvalidGamma(gamma));
        }
        if !(mach_cap > 0.0 && mach_cap < 1.0) {
            return Err(GasError::InvalidMachCap(mach_cap));
        }
        let gm1 = gamma - 1.0;
        let rho_star = (2.0 / (gamma + 1.0)).powf(1.0 / gm1);
        let v_star2 = 2.0 / (gamma + 1.0);
        let q_sonic = 0.5 * rho_star * rho_star * v_star2;

        // speed s with s / c(s) = mach_cap, where c^2 = 1 - (gamma-1)/2 s^2
        let s2 = mach_cap * mach_cap / (1.0 + 0.5 * gm1 * mach_cap * mach_cap);
        let rho_cap = (1.0 - 0.5 * gm1 * s2).powf(1.0 / gm1);
        let q_bar = 0.5 * rho_cap * rho_cap * s2;

        let mut gas = GasModel {
            gamma,
            mach_cap,
            q_bar,
            h_bar: 0.0,
            alpha_hat: 0.0,
            q_sonic,
            rho_star,
        };
        let rho_bar = gas.density_from_momentum(q_bar)?;
        let h_bar = 1.0 / rho_bar;
        let dh_bar = gas.dh_from_density(q_bar, rho_bar)?;
        gas.h_bar = h_bar;
        gas.alpha_hat = q_bar * dh_bar / h_bar;
        Ok(gas)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mach_cap(&self) -> f64 {
        self.mach_cap
    }

    /// Cutoff threshold in `q`.
    pub fn q_bar(&self) -> f64 {
        self.q_bar
    }

    /// Exponent of the power-law tail of the cutoff coefficient.
    pub fn alpha_hat(&self) -> f64 {
        self.alpha_hat
    }

    pub fn q_sonic(&self) -> f64 {
        self.q_sonic
    }

    /// Density at the sonic state.
    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    fn enthalpy(&self, rho: f64) -> f64 {
        rho.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    /// `pi(1) - pi(rho)`, accurate for `rho` near 1.
    fn enthalpy_deficit(&self, rho: f64) -> f64 {
        -((self.gamma - 1.0) * rho.ln()).exp_m1() / (self.gamma - 1.0)
    }

    pub fn state_from_density(&self, rho: f64) -> Result<ThermoState, GasError> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(GasError::OutOfRange {
                quantity: "density",
                value: rho,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(ThermoState {
            pressure: rho.powf(self.gamma) / self.gamma,
            sound_speed: rho.powf(0.5 * (self.gamma - 1.0)),
            enthalpy: self.enthalpy(rho),
        })
    }

    /// Returns `(limit_speed, critical_speed)`.
    pub fn characteristic_speeds(&self) -> (f64, f64) {
        (
            (2.0 / (self.gamma - 1.0)).sqrt(),
            (2.0 / (self.gamma + 1.0)).sqrt(),
        )
    }

    pub fn density_from_speed(&self, speed: f64) -> Result<f64, GasError> {
        let (limit, _) = self.characteristic_speeds();
        if !(speed >= 0.0 && speed <= limit) {
            return Err(GasError::OutOfRange {
                quantity: "speed",
                value: speed,
                lo: 0.0,
                hi: limit,
            });
        }
        let base = 1.0 - 0.5 * (self.gamma - 1.0) * speed * speed;
        Ok(base.max(0.0).powf(1.0 / (self.gamma - 1.0)))
    }

    /// Solves `q rho^-2 + pi(rho) = pi(1)` on `[rho_star, 1]`.
    ///
    /// The residual is increasing on the subsonic branch, so the root is kept
    /// bracketed and Newton steps that leave the bracket fall back to
    /// bisection.
    pub fn density_from_momentum(&self, q: f64) -> Result<f64, GasError> {
        if !(q >= 0.0 && q <= self.q_sonic) {
            return Err(GasError::OutOfRange {
                quantity: "q",
                value: q,
                lo: 0.0,
                hi: self.q_sonic,
            });
        }
        if q == 0.0 {
            return Ok(1.0);
        }
        let g = self.gamma;
        let residual = |rho: f64| q / (rho * rho) - self.enthalpy_deficit(rho);
        let slope = |rho: f64| -2.0 * q / (rho * rho * rho) + rho.powf(g - 2.0);

        let mut lo = self.rho_star;
        let mut hi = 1.0;
        let mut rho = (1.0 - q).clamp(lo, hi);
        for _ in 0..200 {
            let f = residual(rho);
            if f == 0.0 {
                return Ok(rho);
            }
            if f > 0.0 {
                hi = rho;
            } else {
                lo = rho;
            }
            let d = slope(rho);
            let newton = rho - f / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - rho).abs();
            rho = next;
            if step <= 1e-15 * rho || hi - lo <= 2.0 * f64::EPSILON * hi {
                break;
            }
        }
        Ok(rho)
    }

    fn dh_from_density(&self, q: f64, rho: f64) -> Result<f64, GasError> {
        let denom = rho.powf(self.gamma + 2.0) - 2.0 * q * rho;
        if !(denom > 0.0) {
            return Err(GasError::OutOfRange {
                quantity: "q",
                value: q,
                lo: 0.0,
                hi: self.q_sonic,
            });
        }
        Ok(1.0 / denom)
    }

    /// Specific volume `1/rho` as a function of `q = |m|^2/2`.
    pub fn h(&self, q: f64) -> Result<f64, GasError> {
        Ok(1.0 / self.density_from_momentum(q)?)
    }

    /// Derivative of [`GasModel::h`] by implicit differentiation of the
    /// Bernoulli relation. Undefined at the sonic state.
    pub fn h_prime(&self, q: f64) -> Result<f64, GasError> {
        if !(q >= 0.0 && q < self.q_sonic) {
            return Err(GasError::OutOfRange {
                quantity: "q",
                value: q,
                lo: 0.0,
                hi: self.q_sonic,
            });
        }
        let rho = self.density_from_momentum(q)?;
        self.dh_from_density(q, rho)
    }

    /// `h` and `h'` with a single root solve.
    pub fn coefficient(&self, q: f64) -> Result<Coefficient, GasError> {
        let rho = self.density_from_momentum(q)?;
        Ok(Coefficient {
            h: 1.0 / rho,
            dh: self.dh_from_density(q, rho)?,
        })
    }

    /// Coefficient and potential from one root solve.
    pub fn values(&self, q: f64) -> Result<(Coefficient, f64), GasError> {
        let rho = self.density_from_momentum(q)?;
        let c = Coefficient {
            h: 1.0 / rho,
            dh: self.dh_from_density(q, rho)?,
        };
        Ok((c, self.potential_from_density(q, rho)))
    }

    /// [`GasModel::values`] with the elliptic cutoff beyond `q_bar`.
    pub fn cutoff_values(&self, q: f64) -> (Coefficient, f64) {
        let q = q.max(0.0);
        if q <= self.q_bar {
            self.values(q).expect("q below q_bar lies on the subsonic branch")
        } else {
            (self.cutoff_coefficient(q), self.cutoff_potential(q))
        }
    }

    /// `H(q) = int_0^q h`, in closed form through the density.
    pub fn potential(&self, q: f64) -> Result<f64, GasError> {
        let rho = self.density_from_momentum(q)?;
        Ok(self.potential_from_density(q, rho))
    }

    fn potential_from_density(&self, q: f64, rho: f64) -> f64 {
        let g = self.gamma;
        q / rho + ((rho - 1.0) - (g * rho.ln()).exp_m1() / g) / (g - 1.0)
    }

    /// Mach number of the subsonic state with momentum flux `q`.
    pub fn mach_from_momentum(&self, q: f64) -> Result<f64, GasError> {
        let rho = self.density_from_momentum(q)?;
        Ok((2.0 * q * rho.powf(-(self.gamma + 1.0))).sqrt())
    }

    /// Coefficient with the elliptic cutoff beyond `q_bar`. Identical to
    /// [`GasModel::coefficient`] on `[0, q_bar]`.
    pub fn cutoff_coefficient(&self, q: f64) -> Coefficient {
        let q = q.max(0.0);
        if q <= self.q_bar {
            self.coefficient(q)
                .expect("q below q_bar lies on the subsonic branch")
        } else {
            let h = (q / self.q_bar).powf(self.alpha_hat) * self.h_bar;
            Coefficient {
                h,
                dh: self.alpha_hat * h / q,
            }
        }
    }

    pub fn h_cutoff(&self, q: f64) -> f64 {
        self.cutoff_coefficient(q).h
    }

    pub fn h_cutoff_prime(&self, q: f64) -> f64 {
        self.cutoff_coefficient(q).dh
    }

    pub fn cutoff_potential(&self, q: f64) -> f64 {
        let q = q.max(0.0);
        if q <= self.q_bar {
            self.potential(q)
                .expect("q below q_bar lies on the subsonic branch")
        } else {
            let base = self.potential(self.q_bar).expect("q_bar is subsonic");
            let a1 = self.alpha_hat + 1.0;
            base + self.h_bar * self.q_bar / a1 * ((q / self.q_bar).powf(a1) - 1.0)
        }
    }

    /// Eigenvalues of `h~ I + h~' m m^T` in the directions `m_perp` and `m`.
    pub fn ellipticity_eigenvalues(&self, q: f64) -> (f64, f64) {
        let c = self.cutoff_coefficient(q);
        (c.h, c.h + 2.0 * q.max(0.0) * c.dh)
    }
}

/// Gas behaviour selected for a computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GasMode {
    Incompressible,
    Compressible(GasModel),
}

impl GasMode {
    pub fn gas(&self) -> Option<&GasModel> {
        match self {
            GasMode::Incompressible => None,
            GasMode::Compressible(g) => Some(g),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GasMode::Incompressible => "incompressible",
            GasMode::Compressible(_) => "compressible",
        }
    }
}

/// Coefficient law used by assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// `h = 1`.
    Incompressible,
    /// `h` replaced by the elliptic cutoff beyond `q_bar`.
    Cutoff(GasModel),
    /// Uncut `h`; fails beyond the sonic state.
    Raw(GasModel),
}

impl From<GasMode> for Closure {
    fn from(mode: GasMode) -> Self {
        match mode {
            GasMode::Incompressible => Closure::Incompressible,
            GasMode::Compressible(g) => Closure::Cutoff(g),
        }
    }
}

impl Closure {
    pub fn coefficient(&self, q: f64) -> Result<Coefficient, GasError> {
        match self {
            Closure::Incompressible => Ok(Coefficient { h: 1.0, dh: 0.0 }),
            Closure::Cutoff(g) => Ok(g.cutoff_coefficient(q)),
            Closure::Raw(g) => g.coefficient(q),
        }
    }

    pub fn potential(&self, q: f64) -> Result<f64, GasError> {
        match self {
            Closure::Incompressible => Ok(q),
            Closure::Cutoff(g) => Ok(g.cutoff_potential(q)),
            Closure::Raw(g) => g.potential(q),
        }
    }

    pub fn values(&self, q: f64) -> Result<(Coefficient, f64), GasError> {
        match self {
            Closure::Incompressible => Ok((Coefficient { h: 1.0, dh: 0.0 }, q)),
            Closure::Cutoff(g) => Ok(g.cutoff_values(q)),
            Closure::Raw(g) => g.values(q),
        }
    }

    pub fn gas(&self) -> Option<&GasModel> {
        match self {
            Closure::Incompressible => None,
            Closure::Cutoff(g) | Closure::Raw(g) => Some(g),
        }
    }
}
