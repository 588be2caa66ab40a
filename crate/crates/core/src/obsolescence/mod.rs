//! Readership obsolescence: mean reads per article per year as a function of
//! article age, modelled as a sum of four exponentials.
//!
//! | mode | meaning | default amplitude (reads/article/yr) | default decay (1/yr) |
//! |------|---------|------|-------|
//! | H | historical, read forever at a constant rate | 1.5 | 0 |
//! | I | interesting, ~10.7 yr half-life | 45 | 0.065 |
//! | C | current, ~1.7 yr half-life | 110 | 0.4 |
//! | N | new-issue browsing, ~16 day half-life | 1600 | 16 |
//!
//! The N mode is evaluated but never fitted: archival read curves cannot
//! constrain it, so fits hold it fixed.

mod curve;
mod fit;

use std::fmt;

use thiserror::Error;

use crate::config::{ConfigError, KeyValues};

pub use curve::{BinnedReadCurve, CurveError, CurvePoint, CURVE_HEADER};
pub use fit::{fit, FitConfig, FitError, FitResult, FIT_CONFIG_KEYS, FIT_HEADER, MIN_POINTS, MIN_SPAN_YEARS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("age {0} is negative")]
    NegativeAge(f64),
    #[error("decay constant {0} is negative")]
    NegativeDecay(f64),
    #[error("growth rate {0} is negative")]
    NegativeGrowth(f64),
    #[error("mode {mode} parameter {name} = {value} must be finite and non-negative")]
    InvalidParameter { mode: Mode, name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Historical,
    Interesting,
    Current,
    New,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Historical, Mode::Interesting, Mode::Current, Mode::New];

    pub fn symbol(self) -> char {
        match self {
            Mode::Historical => 'H',
            Mode::Interesting => 'I',
            Mode::Current => 'C',
            Mode::New => 'N',
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A subset of the four modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const ALL: ModeSet = ModeSet(0b1111);
    /// H + I + C: everything an archival read log can see.
    pub const ARCHIVAL: ModeSet = ModeSet(0b0111);
    /// I + C: the modes that generate citations.
    pub const CITED: ModeSet = ModeSet(0b0110);
    pub const EMPTY: ModeSet = ModeSet(0);

    pub fn of(modes: &[Mode]) -> Self {
        ModeSet(modes.iter().fold(0, |acc, m| acc | (1 << m.index())))
    }

    pub fn single(mode: Mode) -> Self {
        ModeSet(1 << mode.index())
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 & (1 << mode.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

/// Amplitude (reads/article/yr at age 0) and decay constant (1/yr) of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub amplitude: f64,
    pub decay: f64,
}

impl ModeParams {
    pub const fn new(amplitude: f64, decay: f64) -> Self {
        Self { amplitude, decay }
    }

    fn rate(&self, t: f64) -> f64 {
        self.amplitude * (-self.decay * t).exp()
    }

    /// Integral of the mode over ages `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        if self.decay == 0.0 {
            return self.amplitude * (b - a);
        }
        if b.is_infinite() {
            return if self.decay > 0.0 { self.amplitude * (-self.decay * a).exp() / self.decay } else { f64::INFINITY };
        }
        // A e^{-ka} (1 - e^{-k(b-a)}) / k, stable for small k
        -self.amplitude * (-self.decay * a).exp() * (-self.decay * (b - a)).exp_m1() / self.decay
    }
}

/// Four-mode readership model `R(t) = Σ A_m exp(-k_m t)`.
///
/// Constructed models have non-negative amplitudes and decay constants. The
/// diachronous form returned by [`ObsolescenceModel::growth_adjust`] may carry
/// negative decay constants (net growth), so it skips that check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsolescenceModel {
    components: [ModeParams; 4],
}

impl Default for ObsolescenceModel {
    fn default() -> Self {
        Self {
            components: [
                ModeParams::new(1.5, 0.0),
                ModeParams::new(45.0, 0.065),
                ModeParams::new(110.0, 0.4),
                ModeParams::new(1600.0, 16.0),
            ],
        }
    }
}

/// Direction of a literature-growth correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthDirection {
    /// Cross-sectional curve to the future-use curve of one cohort: decay constants minus g.
    SynchronousToDiachronous,
    /// The inverse: decay constants plus g.
    DiachronousToSynchronous,
}

pub const PARAM_KEYS: [&str; 8] = ["H0", "kH", "I0", "kI", "C0", "kC", "N0", "kN"];

impl ObsolescenceModel {
    pub fn new(
        historical: ModeParams,
        interesting: ModeParams,
        current: ModeParams,
        new: ModeParams,
    ) -> Result<Self, ModelError> {
        let model = Self { components: [historical, interesting, current, new] };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), ModelError> {
        for mode in Mode::ALL {
            let p = self.component(mode);
            for (name, value) in [("amplitude", p.amplitude), ("decay", p.decay)] {
                if !value.is_finite() || value < 0.0 {
                    return Err(ModelError::InvalidParameter { mode, name, value });
                }
            }
        }
        Ok(())
    }

    /// Build from `[H0, kH, I0, kI, C0, kC, N0, kN]`.
    pub fn from_params(p: [f64; 8]) -> Result<Self, ModelError> {
        Self::new(
            ModeParams::new(p[0], p[1]),
            ModeParams::new(p[2], p[3]),
            ModeParams::new(p[4], p[5]),
            ModeParams::new(p[6], p[7]),
        )
    }

    /// `[H0, kH, I0, kI, C0, kC, N0, kN]`.
    pub fn params(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, c) in self.components.iter().enumerate() {
            out[2 * i] = c.amplitude;
            out[2 * i + 1] = c.decay;
        }
        out
    }

    /// Default model with any of the keys in [`PARAM_KEYS`] overridden.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut p = Self::default().params();
        for (slot, key) in p.iter_mut().zip(PARAM_KEYS) {
            kv.update(key, slot)?;
        }
        Self::from_params(p).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn component(&self, mode: Mode) -> ModeParams {
        self.components[mode.index()]
    }

    pub fn with_component(mut self, mode: Mode, params: ModeParams) -> Result<Self, ModelError> {
        self.components[mode.index()] = params;
        self.validate()?;
        Ok(self)
    }

    /// Keep only the modes in `modes`; the others get zero amplitude.
    pub fn restricted_to(mut self, modes: ModeSet) -> Self {
        for mode in Mode::ALL {
            if !modes.contains(mode) {
                self.components[mode.index()].amplitude = 0.0;
            }
        }
        self
    }

    /// Reads per article per year at age `t`, summed over `modes`.
    pub fn eval(&self, t: f64, modes: ModeSet) -> Result<f64, ModelError> {
        if t < 0.0 {
            return Err(ModelError::NegativeAge(t));
        }
        Ok(self.rate(t, modes))
    }

    /// Unchecked [`eval`](Self::eval) for callers that guarantee `t >= 0`.
    pub(crate) fn rate(&self, t: f64, modes: ModeSet) -> f64 {
        modes.iter().map(|m| self.component(m).rate(t)).sum()
    }

    /// Expected reads per article over ages `[a, b]`, summed over `modes`.
    pub fn integral_between(&self, a: f64, b: f64, modes: ModeSet) -> f64 {
        modes.iter().map(|m| self.component(m).integral(a, b)).sum()
    }

    /// Per-mode share of [`integral_between`](Self::integral_between).
    pub fn mode_integral_between(&self, mode: Mode, a: f64, b: f64) -> f64 {
        self.component(mode).integral(a, b)
    }

    /// Lifetime reads per article contributed by `mode` when readership grows
    /// at rate `growth`: `A / (k - g)`, infinite when `k - g <= 0`.
    pub fn mode_integral(&self, mode: Mode, growth: f64) -> Result<f64, ModelError> {
        if growth < 0.0 {
            return Err(ModelError::NegativeGrowth(growth));
        }
        let p = self.component(mode);
        let exponent = p.decay - growth;
        Ok(if exponent <= 0.0 { f64::INFINITY } else { p.amplitude / exponent })
    }

    /// Apply a literature-growth correction of `g` per year to every decay
    /// constant. Amplitudes are unchanged.
    pub fn growth_adjust(&self, g: f64, direction: GrowthDirection) -> Result<Self, ModelError> {
        if g < 0.0 {
            return Err(ModelError::NegativeGrowth(g));
        }
        let shift = match direction {
            GrowthDirection::SynchronousToDiachronous => -g,
            GrowthDirection::DiachronousToSynchronous => g,
        };
        let mut out = *self;
        for c in out.components.iter_mut() {
            c.decay += shift;
        }
        Ok(out)
    }
}

impl fmt::Display for ObsolescenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            PARAM_KEYS.iter().zip(self.params()).map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// `ln 2 / k`; `None` for a constant mode (`k = 0`).
pub fn half_life(decay: f64) -> Result<Option<f64>, ModelError> {
    if decay < 0.0 || decay.is_nan() {
        return Err(ModelError::NegativeDecay(decay));
    }
    Ok((decay > 0.0).then(|| std::f64::consts::LN_2 / decay))
}
