use smallvec::SmallVec;

use super::RedoError;

/// Relative tolerance for `b^l == ε`.
const PRECISION_RTOL: f64 = 1e-12;

/// Base-`b` coarse-graining of a bounded coefficient.
///
/// A coefficient `Ω` is rounded to the nearest multiple of `ε = b^l` and
/// written as `Σ_{j=l..m} c_j b^j` with digits `c_j ∈ {0, …, b-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarseGrainSpec {
    base: u32,
    low: i32,
    high: i32,
    precision: f64,
    max_coefficient: f64,
    dt: f64,
    signed: bool,
}

impl CoarseGrainSpec {
    /// Spec with precision `ε = base^low`.
    pub fn new(
        base: u32,
        low: i32,
        high: i32,
        max_coefficient: f64,
        dt: f64,
        signed: bool,
    ) -> Result<Self, RedoError> {
        let precision = (base as f64).powi(low);
        Self::with_precision(base, low, high, precision, max_coefficient, dt, signed)
    }

    /// Spec with an explicitly stated precision, which must equal `base^low`.
    pub fn with_precision(
        base: u32,
        low: i32,
        high: i32,
        precision: f64,
        max_coefficient: f64,
        dt: f64,
        signed: bool,
    ) -> Result<Self, RedoError> {
        let spec = Self {
            base,
            low,
            high,
            precision,
            max_coefficient,
            dt,
            signed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Picks the smallest `m` covering `max_coefficient` for a given `l`.
    pub fn covering(
        base: u32,
        low: i32,
        max_coefficient: f64,
        dt: f64,
        signed: bool,
    ) -> Result<Self, RedoError> {
        if base < 2 {
            return Err(RedoError::InvalidSpec(format!("base {base} < 2")));
        }
        let high = covering_high(base, low, max_coefficient);
        Self::new(base, low, high, max_coefficient, dt, signed)
    }

    fn validate(&self) -> Result<(), RedoError> {
        let bad = |msg: String| Err(RedoError::InvalidSpec(msg));
        if self.base < 2 {
            return bad(format!("base {} < 2", self.base));
        }
        if self.high < self.low {
            return bad(format!("high digit {} below low digit {}", self.high, self.low));
        }
        if !(self.precision > 0.0 && self.precision.is_finite()) {
            return bad(format!("precision {} is not positive", self.precision));
        }
        let grid = (self.base as f64).powi(self.low);
        if ((grid - self.precision) / self.precision).abs() > PRECISION_RTOL {
            return bad(format!(
                "precision {} differs from base^low = {}",
                self.precision, grid
            ));
        }
        if !(self.max_coefficient > 0.0 && self.max_coefficient.is_finite()) {
            return bad(format!(
                "coefficient bound {} is not positive",
                self.max_coefficient
            ));
        }
        let levels = self.levels() as u32;
        if (self.base as u128)
            .checked_pow(levels)
            .is_none_or(|v| v > (1u128 << 62))
        {
            return bad(format!(
                "{} levels of base {} overflow the step counter",
                levels, self.base
            ));
        }
        let cover = (self.base as f64).powi(self.high + 1);
        if cover < self.max_coefficient * (1.0 - PRECISION_RTOL) {
            return bad(format!(
                "base^(high+1) = {} does not cover the bound {}",
                cover, self.max_coefficient
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("segment duration {} is not positive", self.dt));
        }
        Ok(())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn low(&self) -> i32 {
        self.low
    }

    pub fn high(&self) -> i32 {
        self.high
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn max_coefficient(&self) -> f64 {
        self.max_coefficient
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    /// Number of digit levels, `m - l + 1`.
    pub fn levels(&self) -> usize {
        (self.high - self.low + 1) as usize
    }

    /// `b^j`
    pub fn weight(&self, level: i32) -> f64 {
        (self.base as f64).powi(level)
    }

    /// Largest representable number of `ε` steps, `b^(m-l+1) - 1`.
    pub fn max_steps(&self) -> u64 {
        (self.base as u64).pow(self.levels() as u32) - 1
    }

    /// Largest coefficient on the grid.
    pub fn grid_max(&self) -> f64 {
        self.max_steps() as f64 * self.precision
    }

    pub fn cost(&self) -> CostModel {
        cost_model(self)
    }

    /// Digit vector of `omega` rounded to the grid.
    ///
    /// Rounding is half-up on `|omega| / ε`. Magnitudes that round past the
    /// largest grid value clamp to the all-`(b-1)` vector and are flagged as
    /// saturated.
    pub fn decompose(&self, omega: f64) -> Result<DigitVector, RedoError> {
        if !omega.is_finite() {
            return Err(RedoError::NonFiniteCoefficient);
        }
        if omega < 0.0 && !self.signed {
            return Err(RedoError::NegativeCoefficient(omega));
        }
        if omega.abs() > self.max_coefficient {
            return Err(RedoError::OutOfRange {
                value: omega,
                bound: self.max_coefficient,
            });
        }
        let raw = (omega.abs() / self.precision + 0.5).floor();
        let max = self.max_steps();
        let (steps, saturated) = if raw > max as f64 {
            (max, true)
        } else {
            (raw as u64, false)
        };
        let sign = if omega < 0.0 && steps > 0 {
            Sign::Negative
        } else {
            Sign::Positive
        };
        Ok(DigitVector::from_steps(sign, steps, self.base, self.levels(), saturated))
    }
}

/// Smallest `m ≥ l` with `b^(m+1) ≥ bound`.
pub(crate) fn covering_high(base: u32, low: i32, bound: f64) -> i32 {
    let mut high = low;
    while (base as f64).powi(high + 1) < bound * (1.0 - PRECISION_RTOL) {
        high += 1;
    }
    high
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

/// Base-`b` digits of a coarse-grained coefficient, least significant first.
///
/// Equality and hashing ignore the saturation flag, so a clamped value and
/// an exact hit on the grid maximum share a memo entry.
#[derive(Clone, Debug)]
pub struct DigitVector {
    sign: Sign,
    digits: SmallVec<[u32; 4]>,
    saturated: bool,
}

impl PartialEq for DigitVector {
    fn eq(&self, other: &Self) -> bool {
        self.sign == other.sign && self.digits == other.digits
    }
}

impl Eq for DigitVector {}

impl std::hash::Hash for DigitVector {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sign.hash(state);
        self.digits.hash(state);
    }
}

impl DigitVector {
    fn from_steps(sign: Sign, mut steps: u64, base: u32, levels: usize, saturated: bool) -> Self {
        let mut digits = SmallVec::with_capacity(levels);
        for _ in 0..levels {
            digits.push((steps % base as u64) as u32);
            steps /= base as u64;
        }
        Self {
            sign,
            digits,
            saturated,
        }
    }

    /// Builds a digit vector from digits listed least significant first.
    pub fn new(sign: Sign, digits: &[u32]) -> Self {
        let sign = if digits.iter().all(|&d| d == 0) {
            Sign::Positive
        } else {
            sign
        };
        Self {
            sign,
            digits: SmallVec::from_slice(digits),
            saturated: false,
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Digits `c_l, …, c_m`.
    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Digit at absolute level `j`, given the grid's low level.
    pub fn digit(&self, level: i32, low: i32) -> u32 {
        self.digits[(level - low) as usize]
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.digits.iter().filter(|&&d| d != 0).count()
    }

    /// `Σ_j c_j b^(j-l)` in exact integer arithmetic.
    pub fn steps(&self, base: u32) -> u64 {
        self.digits
            .iter()
            .rev()
            .fold(0u64, |acc, &d| acc * base as u64 + d as u64)
    }

    /// Reconstructed coefficient `±Σ_j c_j b^j`.
    pub fn value(&self, spec: &CoarseGrainSpec) -> f64 {
        let magnitude = self.steps(spec.base) as f64 * spec.precision;
        match self.sign {
            Sign::Positive => magnitude,
            Sign::Negative => -magnitude,
        }
    }

    pub(crate) fn check(&self, spec: &CoarseGrainSpec) -> Result<(), RedoError> {
        if self.digits.len() != spec.levels() {
            return Err(RedoError::MalformedDigits(format!(
                "{} digits for {} levels",
                self.digits.len(),
                spec.levels()
            )));
        }
        if let Some(&d) = self.digits.iter().find(|&&d| d >= spec.base) {
            return Err(RedoError::MalformedDigits(format!(
                "digit {d} outside base {}",
                spec.base
            )));
        }
        if self.sign == Sign::Negative && !spec.signed {
            return Err(RedoError::MalformedDigits(
                "negative digit vector for an unsigned table".into(),
            ));
        }
        Ok(())
    }
}

/// Work and storage of one table: `p = m - l` products per propagator at
/// most, `s = (b-1)(m-l+1)` stored operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub multiplications: usize,
    pub stored: usize,
}

pub fn cost_model(spec: &CoarseGrainSpec) -> CostModel {
    let p = (spec.high - spec.low) as usize;
    CostModel {
        multiplications: p,
        stored: (spec.base as usize - 1) * (p + 1),
    }
}

/// Cost model for a coefficient range `ratio = Ω_max / ε` with `l = 0`.
pub fn cost_for_ratio(base: u32, ratio: f64) -> Result<(i32, i32, CostModel), RedoError> {
    if base < 2 {
        return Err(RedoError::InvalidSpec(format!("base {base} < 2")));
    }
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return Err(RedoError::InvalidSpec(format!("ratio {ratio} below 1")));
    }
    let high = covering_high(base, 0, ratio);
    let spec = CoarseGrainSpec::new(base, 0, high, ratio, 1.0, false)?;
    Ok((0, high, cost_model(&spec)))
}
