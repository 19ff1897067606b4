//! Avalanche discharge current `I_D(t)` and the charge it releases.

use statrs::function::erf::erfc;

use crate::error::{Error, Module, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    /// Causal exponential decay convolved with a unit-area Gaussian. This is
    /// the measured discharge shape of a Geiger-mode APD.
    ExpGaussian,
    /// Causal exponential decay starting at the onset, no smoothing.
    Exponential,
    /// Constant `peak_current` for `width` seconds after the onset.
    Rectangular { width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvalanchePulseSpec {
    /// Maximum of `I_D(t)`, amperes.
    pub peak_current: f64,
    /// Exponential decay constant, seconds.
    pub decay_tau: f64,
    /// Width of the smoothing Gaussian, seconds.
    pub gauss_sigma: f64,
    /// Start of the charge integration interval, seconds.
    pub t_rise: f64,
    /// End of the charge integration interval, seconds.
    pub t_fall: f64,
    /// Start of the avalanche, seconds.
    pub onset: f64,
    pub shape: PulseShape,
}

impl Default for AvalanchePulseSpec {
    fn default() -> Self {
        Self {
            peak_current: 10e-3,
            decay_tau: 3e-9,
            gauss_sigma: 0.5e-9,
            t_rise: 0.0,
            t_fall: 50e-9,
            onset: 5e-9,
            shape: PulseShape::ExpGaussian,
        }
    }
}

impl AvalanchePulseSpec {
    pub fn validate(&self) -> Result<()> {
        let inv = |r: String| Err(Error::invalid(Module::Emission, r));
        let fields = [
            ("peak_current", self.peak_current),
            ("decay_tau", self.decay_tau),
            ("gauss_sigma", self.gauss_sigma),
            ("t_rise", self.t_rise),
            ("t_fall", self.t_fall),
            ("onset", self.onset),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return inv(format!("pulse.{name} must be finite, got {v}"));
            }
        }
        if self.peak_current < 0.0 {
            return inv(format!("pulse.peak_current must be >= 0, got {}", self.peak_current));
        }
        if self.decay_tau <= 0.0 {
            return inv(format!("pulse.decay_tau must be > 0, got {}", self.decay_tau));
        }
        if self.t_rise < 0.0 || self.onset < 0.0 {
            return inv("pulse.t_rise and pulse.onset must be >= 0".into());
        }
        if self.t_rise >= self.t_fall {
            return inv(format!(
                "degenerate integration interval: t_rise ({}) must be < t_fall ({})",
                self.t_rise, self.t_fall
            ));
        }
        match self.shape {
            PulseShape::ExpGaussian => {
                if self.gauss_sigma <= 0.0 || self.gauss_sigma >= self.decay_tau {
                    return inv(format!(
                        "pulse.gauss_sigma must lie in (0, decay_tau), got {} (decay_tau {})",
                        self.gauss_sigma, self.decay_tau
                    ));
                }
            }
            PulseShape::Exponential => {}
            PulseShape::Rectangular { width } => {
                if !(width.is_finite() && width > 0.0) {
                    return inv(format!("pulse width must be > 0, got {width}"));
                }
            }
        }
        Ok(())
    }

    /// Same pulse moved later by `dt` seconds, integration window included.
    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            t_rise: self.t_rise + dt,
            t_fall: self.t_fall + dt,
            onset: self.onset + dt,
            ..*self
        }
    }
}

/// Exponentially modified Gaussian with unit exponential amplitude, as a
/// function of time since onset.
fn exp_gaussian(x: f64, tau: f64, sigma: f64) -> f64 {
    if x < -40.0 * sigma {
        return 0.0;
    }
    let a = -x / tau + sigma * sigma / (2.0 * tau * tau);
    let b = -(x / sigma - sigma / tau) / std::f64::consts::SQRT_2;
    a.exp() * 0.5 * erfc(b)
}

/// Golden-section search for the maximum of the (unimodal) smoothed pulse.
fn exp_gaussian_peak(tau: f64, sigma: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-3.0 * sigma, 3.0 * tau + 8.0 * sigma);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = exp_gaussian(x1, tau, sigma);
    let mut f2 = exp_gaussian(x2, tau, sigma);
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = exp_gaussian(x2, tau, sigma);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = exp_gaussian(x1, tau, sigma);
        }
    }
    f1.max(f2)
}

/// Evaluator for `I_D(t)` with the peak normalisation precomputed.
#[derive(Debug, Clone)]
pub struct AvalanchePulse {
    spec: AvalanchePulseSpec,
    scale: f64,
}

impl AvalanchePulse {
    pub fn new(spec: AvalanchePulseSpec) -> Result<Self> {
        spec.validate()?;
        let scale = match spec.shape {
            PulseShape::ExpGaussian => {
                spec.peak_current / exp_gaussian_peak(spec.decay_tau, spec.gauss_sigma)
            }
            PulseShape::Exponential | PulseShape::Rectangular { .. } => spec.peak_current,
        };
        Ok(Self { spec, scale })
    }

    pub fn spec(&self) -> &AvalanchePulseSpec {
        &self.spec
    }

    /// Current in amperes at absolute time `t`.
    pub fn current(&self, t: f64) -> f64 {
        let x = t - self.spec.onset;
        let shape = match self.spec.shape {
            PulseShape::ExpGaussian => exp_gaussian(x, self.spec.decay_tau, self.spec.gauss_sigma),
            PulseShape::Exponential => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / self.spec.decay_tau).exp()
                }
            }
            PulseShape::Rectangular { width } => {
                if (0.0..width).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.scale * shape
    }

    /// Points where the integrand has a kink or a jump.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.spec.onset];
        if let PulseShape::Rectangular { width } = self.spec.shape {
            pts.push(self.spec.onset + width);
        }
        pts
    }

    /// Charge released over `[t_rise, t_fall]`, coulombs.
    pub fn charge(&self) -> f64 {
        let (a, b) = (self.spec.t_rise, self.spec.t_fall);
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&p| p > a && p < b));
        cuts.push(b);
        let tol = (1e-13 * self.spec.peak_current * (b - a)).max(f64::MIN_POSITIVE);
        let f = |t: f64| self.current(t);
        cuts.windows(2)
            .map(|w| adaptive_simpson(&f, w[0], w[1], tol))
            .sum()
    }
}

/// `I_D(t)` for a single time point. Prefer [`AvalanchePulse`] when
/// evaluating many points of the same pulse.
pub fn avalanche_current(t: f64, spec: &AvalanchePulseSpec) -> Result<f64> {
    Ok(AvalanchePulse::new(*spec)?.current(t))
}

/// Total avalanche charge `Q_D`: the integral of `I_D` over `[t_rise, t_fall]`.
pub fn discharge_charge(spec: &AvalanchePulseSpec) -> Result<f64> {
    Ok(AvalanchePulse::new(*spec)?.charge())
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
