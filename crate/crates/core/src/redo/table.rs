use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use lru::LruCache;
use parking_lot::Mutex;

use super::{CoarseGrainSpec, DigitVector, RedoError, Sign};
use crate::linalg::{expm, ComplexMatrix, ExpmMethod, HermitianEigen, C64};

/// Tolerance on `max |S - S†|` for the generator, relative to its largest entry.
const GENERATOR_HERMITIAN_RTOL: f64 = 1e-12;

/// How assembled propagators are remembered between calls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoPolicy {
    Unbounded,
    /// Keep at most this many products, evicting the least recently used.
    Lru(NonZeroUsize),
    Disabled,
}

impl MemoPolicy {
    pub fn lru(capacity: usize) -> Self {
        NonZeroUsize::new(capacity).map_or(MemoPolicy::Disabled, MemoPolicy::Lru)
    }
}

enum Memo {
    Unbounded(DashMap<DigitVector, Arc<ComplexMatrix>>),
    Lru(Mutex<LruCache<DigitVector, Arc<ComplexMatrix>>>),
    Disabled,
}

impl Memo {
    fn new(policy: MemoPolicy) -> Self {
        match policy {
            MemoPolicy::Unbounded => Memo::Unbounded(DashMap::new()),
            MemoPolicy::Lru(cap) => Memo::Lru(Mutex::new(LruCache::new(cap))),
            MemoPolicy::Disabled => Memo::Disabled,
        }
    }

    fn get(&self, key: &DigitVector) -> Option<Arc<ComplexMatrix>> {
        match self {
            Memo::Unbounded(map) => map.get(key).map(|e| Arc::clone(e.value())),
            Memo::Lru(cache) => cache.lock().get(key).cloned(),
            Memo::Disabled => None,
        }
    }

    fn insert(&self, key: DigitVector, value: Arc<ComplexMatrix>) {
        match self {
            Memo::Unbounded(map) => {
                map.insert(key, value);
            }
            Memo::Lru(cache) => {
                cache.lock().put(key, value);
            }
            Memo::Disabled => {}
        }
    }

    fn len(&self) -> usize {
        match self {
            Memo::Unbounded(map) => map.len(),
            Memo::Lru(cache) => cache.lock().len(),
            Memo::Disabled => 0,
        }
    }

    fn clear(&self) {
        match self {
            Memo::Unbounded(map) => map.clear(),
            Memo::Lru(cache) => cache.lock().clear(),
            Memo::Disabled => {}
        }
    }

    fn policy(&self) -> MemoPolicy {
        match self {
            Memo::Unbounded(_) => MemoPolicy::Unbounded,
            Memo::Lru(cache) => MemoPolicy::Lru(cache.lock().cap()),
            Memo::Disabled => MemoPolicy::Disabled,
        }
    }
}

/// Fixed left factor applied to every assembled product.
///
/// All table entries are functions of one generator and commute, so
/// `F · ∏ u_j` can be started from a precomputed `F · u_m` and still costs at
/// most `m - l` products.
struct Frame {
    left: ComplexMatrix,
    // left · u[m][c] for c = 0..b, and left · u[m][c]† for signed tables
    top: Vec<ComplexMatrix>,
    top_adjoint: Vec<ComplexMatrix>,
}

/// Counters accumulated since construction or the last [`reset_stats`].
///
/// [`reset_stats`]: DiscreteOperatorTable::reset_stats
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableStats {
    pub multiplications: u64,
    pub hits: u64,
    pub misses: u64,
    pub saturations: u64,
}

/// Precomputed `u[j][c] = exp(-i c b^j Δt S)` for `j = l..m`, `c = 1..b-1`,
/// plus a memo of assembled products keyed by digit vector.
///
/// The table is immutable after construction apart from the memo and the
/// counters, both of which are safe to use from several threads at once.
pub struct DiscreteOperatorTable {
    spec: CoarseGrainSpec,
    generator: ComplexMatrix,
    method: ExpmMethod,
    // index (j - l) * (b - 1) + (c - 1)
    ops: Vec<ComplexMatrix>,
    frame: Option<Frame>,
    memo: Memo,
    multiplications: AtomicU64,
    hits: AtomicU64,
    misses: AtomicU64,
    saturations: AtomicU64,
}

impl DiscreteOperatorTable {
    /// One-time evaluation of all `(b-1)(m-l+1)` discrete operators.
    ///
    /// With [`ExpmMethod::Eigen`] the generator is diagonalized once and every
    /// entry is `Q diag(e^{-iθλ}) Q†`; the other methods exponentiate each
    /// entry separately.
    pub fn build(
        spec: CoarseGrainSpec,
        generator: ComplexMatrix,
        method: ExpmMethod,
    ) -> Result<Self, RedoError> {
        check_generator(&generator)?;
        let b = spec.base();
        let mut ops = Vec::with_capacity(spec.cost().stored);
        match method {
            ExpmMethod::Eigen => {
                let eig = HermitianEigen::new(&generator)?;
                for level in spec.low()..=spec.high() {
                    for c in 1..b {
                        ops.push(eig.propagator(angle(&spec, level, c)));
                    }
                }
            }
            _ => {
                for level in spec.low()..=spec.high() {
                    for c in 1..b {
                        let a = generator.scale(C64::new(0.0, -angle(&spec, level, c)));
                        ops.push(expm(method, &a)?);
                    }
                }
            }
        }
        Ok(Self::assemble_parts(spec, generator, method, ops))
    }

    pub(crate) fn from_parts(
        spec: CoarseGrainSpec,
        generator: ComplexMatrix,
        method: ExpmMethod,
        ops: Vec<ComplexMatrix>,
        frame: Option<ComplexMatrix>,
    ) -> Result<Self, RedoError> {
        check_generator(&generator)?;
        if ops.len() != spec.cost().stored {
            return Err(RedoError::Format(format!(
                "{} operators stored, spec requires {}",
                ops.len(),
                spec.cost().stored
            )));
        }
        if ops.iter().any(|op| op.dim() != generator.dim()) {
            return Err(RedoError::Format("operator dimension mismatch".into()));
        }
        let table = Self::assemble_parts(spec, generator, method, ops);
        match frame {
            Some(left) => table.with_frame(left),
            None => Ok(table),
        }
    }

    fn assemble_parts(
        spec: CoarseGrainSpec,
        generator: ComplexMatrix,
        method: ExpmMethod,
        ops: Vec<ComplexMatrix>,
    ) -> Self {
        Self {
            spec,
            generator,
            method,
            ops,
            frame: None,
            memo: Memo::new(MemoPolicy::Unbounded),
            multiplications: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            saturations: AtomicU64::new(0),
        }
    }

    pub fn with_memo(mut self, policy: MemoPolicy) -> Self {
        self.memo = Memo::new(policy);
        self
    }

    /// Left-multiplies every assembled product by `left`.
    pub fn with_frame(mut self, left: ComplexMatrix) -> Result<Self, RedoError> {
        if left.dim() != self.dim() {
            return Err(RedoError::Linalg(
                crate::linalg::LinalgError::DimensionMismatch {
                    left: self.dim(),
                    right: left.dim(),
                },
            ));
        }
        let b = self.spec.base();
        let high = self.spec.high();
        let mut top = Vec::with_capacity(b as usize);
        let mut top_adjoint = Vec::new();
        top.push(left.clone());
        for c in 1..b {
            top.push(&left * self.op(high, c));
        }
        if self.spec.signed() {
            top_adjoint.push(left.clone());
            for c in 1..b {
                top_adjoint.push(&left * &self.op(high, c).adjoint());
            }
        }
        self.frame = Some(Frame {
            left,
            top,
            top_adjoint,
        });
        self.memo.clear();
        Ok(self)
    }

    pub fn spec(&self) -> &CoarseGrainSpec {
        &self.spec
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    pub fn method(&self) -> ExpmMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn frame(&self) -> Option<&ComplexMatrix> {
        self.frame.as_ref().map(|f| &f.left)
    }

    pub fn memo_policy(&self) -> MemoPolicy {
        self.memo.policy()
    }

    /// Number of stored discrete operators.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// `u[level][digit]`, or `None` for digit 0 and out-of-range indices.
    pub fn operator(&self, level: i32, digit: u32) -> Option<&ComplexMatrix> {
        if level < self.spec.low() || level > self.spec.high() {
            return None;
        }
        if digit == 0 || digit >= self.spec.base() {
            return None;
        }
        Some(self.op(level, digit))
    }

    fn op(&self, level: i32, digit: u32) -> &ComplexMatrix {
        let b = self.spec.base() as usize;
        &self.ops[(level - self.spec.low()) as usize * (b - 1) + digit as usize - 1]
    }

    pub fn stats(&self) -> TableStats {
        TableStats {
            multiplications: self.multiplications.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            saturations: self.saturations.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        for c in [
            &self.multiplications,
            &self.hits,
            &self.misses,
            &self.saturations,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn clear_memo(&self) {
        self.memo.clear();
    }

    /// Product of the table entries selected by `dv`, memoized.
    ///
    /// Zero digits contribute no factor, a negative sign yields the adjoint
    /// of the positive product, and a repeated digit vector is served from
    /// the memo without any multiplication.
    pub fn assemble(&self, dv: &DigitVector) -> Result<Arc<ComplexMatrix>, RedoError> {
        dv.check(&self.spec)?;
        if let Some(hit) = self.memo.get(dv) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let (product, mults) = self.multiply_out(dv);
        self.multiplications.fetch_add(mults, Ordering::Relaxed);
        let product = Arc::new(product);
        self.memo.insert(dv.clone(), Arc::clone(&product));
        Ok(product)
    }

    /// Assembles without consulting or filling the memo.
    pub fn assemble_uncached(&self, dv: &DigitVector) -> Result<ComplexMatrix, RedoError> {
        dv.check(&self.spec)?;
        let (product, mults) = self.multiply_out(dv);
        self.multiplications.fetch_add(mults, Ordering::Relaxed);
        Ok(product)
    }

    fn multiply_out(&self, dv: &DigitVector) -> (ComplexMatrix, u64) {
        let low = self.spec.low();
        let high = self.spec.high();
        let negative = dv.sign() == Sign::Negative;

        let (lower_top, start) = match &self.frame {
            Some(frame) => {
                let c = dv.digit(high, low) as usize;
                let top = if negative {
                    &frame.top_adjoint[c]
                } else {
                    &frame.top[c]
                };
                (high - 1, Some(top))
            }
            None => (high, None),
        };

        let mut mults = 0u64;
        let mut acc: Option<ComplexMatrix> = None;
        let mut scratch = ComplexMatrix::zeros(self.dim());
        for level in (low..=lower_top).rev() {
            let c = dv.digit(level, low);
            if c == 0 {
                continue;
            }
            let factor = self.op(level, c);
            acc = Some(match acc {
                None => factor.clone(),
                Some(prev) => {
                    ComplexMatrix::mul_into(&prev, factor, &mut scratch);
                    mults += 1;
                    std::mem::replace(&mut scratch, prev)
                }
            });
        }
        // entries commute, so (∏u)† = ∏u†
        if negative {
            acc = acc.map(|p| p.adjoint());
        }

        let product = match (start, acc) {
            (Some(top), Some(rest)) => {
                mults += 1;
                top * &rest
            }
            (Some(top), None) => top.clone(),
            (None, Some(rest)) => rest,
            (None, None) => ComplexMatrix::identity(self.dim()),
        };
        (product, mults)
    }

    /// `exp(-i ⌊ω⌉ Δt S)`, left-multiplied by the frame if one is set.
    pub fn propagator_for(&self, omega: f64) -> Result<Arc<ComplexMatrix>, RedoError> {
        let dv = self.spec.decompose(omega)?;
        if dv.saturated() {
            self.saturations.fetch_add(1, Ordering::Relaxed);
        }
        self.assemble(&dv)
    }

    /// The same propagator without coarse-graining, by direct exponentiation.
    pub fn exact_propagator(
        &self,
        omega: f64,
        method: ExpmMethod,
    ) -> Result<ComplexMatrix, RedoError> {
        let a = self
            .generator
            .scale(C64::new(0.0, -omega * self.spec.dt()));
        let u = expm(method, &a)?;
        Ok(match &self.frame {
            Some(f) => &f.left * &u,
            None => u,
        })
    }

    /// `|Tr[U_exact† U_table] / N|²` for one coefficient.
    pub fn coarse_grain_fidelity(&self, omega: f64, method: ExpmMethod) -> Result<f64, RedoError> {
        if omega.abs() > self.spec.max_coefficient() {
            return Err(RedoError::OutOfRange {
                value: omega,
                bound: self.spec.max_coefficient(),
            });
        }
        let exact = self.exact_propagator(omega, method)?;
        let approx = self.propagator_for(omega)?;
        Ok(super::trace_fidelity(&exact, &approx)?)
    }
}

fn angle(spec: &CoarseGrainSpec, level: i32, digit: u32) -> f64 {
    digit as f64 * spec.weight(level) * spec.dt()
}

fn check_generator(generator: &ComplexMatrix) -> Result<(), RedoError> {
    if !generator.is_finite() {
        return Err(crate::linalg::LinalgError::NonFinite.into());
    }
    let deviation = generator.hermiticity_error();
    if deviation > GENERATOR_HERMITIAN_RTOL * generator.max_abs().max(1.0) {
        return Err(crate::linalg::LinalgError::NotHermitian { deviation }.into());
    }
    Ok(())
}

impl std::fmt::Debug for DiscreteOperatorTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteOperatorTable")
            .field("spec", &self.spec)
            .field("dim", &self.dim())
            .field("operators", &self.ops.len())
            .field("framed", &self.frame.is_some())
            .field("memo", &self.memo.policy())
            .field("stats", &self.stats())
            .finish()
    }
}
