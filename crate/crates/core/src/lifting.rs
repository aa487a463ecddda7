//! Turns an online policy for integer items and offline bin size `g'` into
//! an algorithm for the upper game at granularity `g`.
//!
//! The lifted algorithm runs the wrapped policy alongside itself. Large
//! classes (`c*c >= g`) and small classes when no bin lags behind are
//! handed to the policy as items of size `c + 1`; the policy's bin is used.
//! A small class arriving while some bin has a negative gap is put into
//! the lowest such bin without asking the policy. The per-bin gap
//! `delta[j]` is the lifted load class minus the policy's simulated load.
//!
//! Gaps stay within `-m*sqrt(g) - 1 ..= sqrt(g)`, and the lifted score
//! satisfies `score * g <= r(A) * g' + m*sqrt(g) + 2`. Both are checked with
//! exact integer arithmetic.

use std::collections::HashMap;

use thiserror::Error;

use crate::bounds::g_prime_real;
use crate::feasibility::fits;
use crate::policy::{OnlinePolicy, PolicyError};
use crate::types::{Config, ItemMultiset, LoadVector, OverflowLegality, Score};
use crate::upper::{legal_moves_upper, UpperState};

/// True iff `g' <= c` for the real-valued enlarged bin size, decided exactly.
///
/// With `t = g + 1 + m*sqrt(g)` and `a = c - g - 1`, `t + sqrt(t) <= c`
/// reduces to `a - m*sqrt(g) >= 0` and `m*(2a + 1)*sqrt(g) <= a^2 + m^2*g - g - 1`,
/// both of which are settled by squaring nonnegative sides.
pub fn g_prime_at_most(g: u32, m: u32, c: i64) -> bool {
    let (g, m, c) = (g as i128, m as i128, c as i128);
    let a = c - g - 1;
    if a < 0 || a * a < m * m * g {
        return false;
    }
    let r = a * a + m * m * g - g - 1;
    r >= 0 && m * m * (2 * a + 1) * (2 * a + 1) * g <= r * r
}

/// Smallest integer at least `g(1 + m/sqrt(g) + 1/g) + sqrt(g(1 + m/sqrt(g) + 1/g))`.
pub fn compute_g_prime_int(g: u32, m: u32) -> u32 {
    let mut c = g_prime_real(g, m).ceil() as i64;
    while !g_prime_at_most(g, m, c) {
        c += 1;
    }
    while g_prime_at_most(g, m, c - 1) {
        c -= 1;
    }
    c as u32
}

/// `delta <= sqrt(g)`, exact.
pub fn delta_below_ceiling(delta: i64, g: u32) -> bool {
    delta <= 0 || (delta as i128).pow(2) <= g as i128
}

/// `delta >= -m*sqrt(g) - 1`, exact.
pub fn delta_above_floor(delta: i64, g: u32, m: u32) -> bool {
    let x = -(delta as i128) - 1;
    x <= 0 || x * x <= (m as i128).pow(2) * g as i128
}

/// `lifted_num <= inner_num + m*sqrt(g) + 2`, exact. Numerators are the
/// lifted score times `g` and the policy's worst max load (in units of `1/g'`).
pub fn performance_bound_holds(lifted_num: u64, inner_num: u64, g: u32, m: u32) -> bool {
    let x = lifted_num as i128 - inner_num as i128 - 2;
    x <= 0 || x * x <= (m as i128).pow(2) * g as i128
}

/// `c*c >= g`: the class is handed to the policy regardless of gaps.
pub fn is_large_class(class: u32, g: u32) -> bool {
    (class as u64).pow(2) >= g as u64
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error("policy expects {found} bins, the game has {expected}")]
    BinCount { expected: u32, found: u32 },
    #[error("policy bin size {found} is below the required {required}")]
    CapacityTooSmall { required: u32, found: u32 },
    #[error("class {class} outside 0..{g}")]
    ClassOutOfRange { class: u32, g: u32 },
    #[error("items {memory:?} fed to the policy no longer fit into {m} bins of size {capacity}")]
    InnerInfeasible { memory: Vec<u32>, m: u32, capacity: u32 },
    #[error("overflow reported for bin {got} but the last placement went to {expected:?}")]
    UnexpectedBin { expected: Option<usize>, got: usize },
    #[error("overflow bit must be 0 or 1, got {0}")]
    BadOverflowBit(u8),
    #[error("gap {delta} of bin {bin} outside [-m*sqrt(g)-1, sqrt(g)]")]
    GapOutOfRange { bin: usize, delta: i64 },
    #[error("policy returned bin {0}, which does not exist")]
    PolicyBin(usize),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Which branch of the lifted rule placed an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiftCase {
    Large,
    NoGap,
    BridgeGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pending {
    bin: usize,
    class: u32,
    case: LiftCase,
}

/// Stateful lifted algorithm. Bins are fixed physical indices here.
pub struct LiftedAlgorithm<'p, P: OnlinePolicy + ?Sized> {
    cfg: Config,
    policy: &'p P,
    delta: Vec<i64>,
    memory: Vec<u32>,
    inner_loads: Vec<u32>,
    own_load_classes: Vec<u32>,
    pending: Option<Pending>,
    last_case: Option<LiftCase>,
}

impl<P: OnlinePolicy + ?Sized> Clone for LiftedAlgorithm<'_, P> {
    fn clone(&self) -> Self {
        Self {
            cfg: self.cfg,
            policy: self.policy,
            delta: self.delta.clone(),
            memory: self.memory.clone(),
            inner_loads: self.inner_loads.clone(),
            own_load_classes: self.own_load_classes.clone(),
            pending: self.pending,
            last_case: self.last_case,
        }
    }
}

impl<'p, P: OnlinePolicy + ?Sized> LiftedAlgorithm<'p, P> {
    pub fn new(policy: &'p P, cfg: Config) -> Result<Self, LiftError> {
        if policy.bins() != cfg.m() {
            return Err(LiftError::BinCount { expected: cfg.m(), found: policy.bins() });
        }
        let required = compute_g_prime_int(cfg.g(), cfg.m());
        if policy.capacity() < required {
            return Err(LiftError::CapacityTooSmall { required, found: policy.capacity() });
        }
        let m = cfg.bins();
        Ok(Self {
            cfg,
            policy,
            delta: vec![0; m],
            memory: Vec::new(),
            inner_loads: vec![0; m],
            own_load_classes: vec![0; m],
            pending: None,
            last_case: None,
        })
    }

    pub fn config(&self) -> Config {
        self.cfg
    }

    pub fn g_prime(&self) -> u32 {
        self.policy.capacity()
    }

    pub fn delta(&self) -> &[i64] {
        &self.delta
    }

    pub fn memory(&self) -> &[u32] {
        &self.memory
    }

    pub fn inner_loads(&self) -> &[u32] {
        &self.inner_loads
    }

    pub fn own_load_classes(&self) -> &[u32] {
        &self.own_load_classes
    }

    pub fn last_case(&self) -> Option<LiftCase> {
        self.last_case
    }

    /// Score numerator: top own load class plus one.
    pub fn score_num(&self) -> u32 {
        self.own_load_classes.iter().copied().max().unwrap_or(0) + 1
    }

    /// Bin for an incoming item of class `class`.
    pub fn lift_step(&mut self, class: u32) -> Result<usize, LiftError> {
        let g = self.cfg.g();
        if class >= g {
            return Err(LiftError::ClassOutOfRange { class, g });
        }
        let lagging = self.delta.iter().position(|&d| d < 0);
        let case = match (is_large_class(class, g), lagging) {
            (true, _) => LiftCase::Large,
            (false, None) => LiftCase::NoGap,
            (false, Some(_)) => LiftCase::BridgeGap,
        };
        let bin = match (case, lagging) {
            (LiftCase::BridgeGap, Some(j)) => j,
            _ => {
                let mut fed = self.memory.clone();
                fed.push(class + 1);
                let capacity = self.policy.capacity();
                if !fits(&ItemMultiset::from_sizes(&fed), self.cfg.m(), capacity) {
                    return Err(LiftError::InnerInfeasible { memory: fed, m: self.cfg.m(), capacity });
                }
                let j = self.policy.place(&fed)?;
                if j >= self.cfg.bins() {
                    return Err(LiftError::PolicyBin(j));
                }
                j
            }
        };
        self.pending = Some(Pending { bin, class, case });
        self.last_case = Some(case);
        Ok(bin)
    }

    /// Applies the adversary's overflow decision for the last placement.
    pub fn lift_observe_overflow(&mut self, bin: usize, overflow: u8) -> Result<(), LiftError> {
        let p = match self.pending.take() {
            Some(p) if p.bin == bin => p,
            other => {
                return Err(LiftError::UnexpectedBin { expected: other.map(|p| p.bin), got: bin });
            }
        };
        if overflow > 1 {
            self.pending = Some(p);
            return Err(LiftError::BadOverflowBit(overflow));
        }
        let grow = p.class + overflow as u32;
        self.own_load_classes[bin] += grow;
        match p.case {
            LiftCase::Large | LiftCase::NoGap => {
                self.memory.push(p.class + 1);
                self.inner_loads[bin] += p.class + 1;
                if overflow == 0 {
                    self.delta[bin] -= 1;
                }
            }
            LiftCase::BridgeGap => self.delta[bin] += grow as i64,
        }
        self.check_gaps()
    }

    fn check_gaps(&self) -> Result<(), LiftError> {
        let (g, m) = (self.cfg.g(), self.cfg.m());
        for (bin, &delta) in self.delta.iter().enumerate() {
            debug_assert_eq!(delta, self.own_load_classes[bin] as i64 - self.inner_loads[bin] as i64);
            if !delta_below_ceiling(delta, g) || !delta_above_floor(delta, g, m) {
                return Err(LiftError::GapOutOfRange { bin, delta });
            }
        }
        Ok(())
    }
}

/// One scripted run: the adversary's `(class, overflow)` inputs and the
/// lifted algorithm's bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayoutRecord {
    pub inputs: Vec<(u32, u8)>,
    pub decisions: Vec<usize>,
    pub cases: Vec<LiftCase>,
    pub final_delta: Vec<i64>,
    pub memory: Vec<u32>,
    pub score: Score,
}

/// Feeds a fixed input script through a fresh lifted algorithm. Only the
/// state machine's own checks apply; the game's adversary rules are not
/// enforced here.
pub fn playout<P: OnlinePolicy + ?Sized>(
    policy: &P,
    cfg: Config,
    inputs: &[(u32, u8)],
) -> Result<PlayoutRecord, LiftError> {
    let mut lifted = LiftedAlgorithm::new(policy, cfg)?;
    let mut decisions = Vec::with_capacity(inputs.len());
    let mut cases = Vec::with_capacity(inputs.len());
    for &(class, o) in inputs {
        let bin = lifted.lift_step(class)?;
        cases.push(lifted.last_case().expect("set by lift_step"));
        lifted.lift_observe_overflow(bin, o)?;
        decisions.push(bin);
    }
    Ok(PlayoutRecord {
        inputs: inputs.to_vec(),
        decisions,
        cases,
        final_delta: lifted.delta.clone(),
        memory: lifted.memory.clone(),
        score: Score::new(lifted.score_num() as u64, cfg.g() as u64),
    })
}

/// Worst case of the lifted algorithm over the whole upper game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftEvaluation {
    pub score: Score,
    pub g_prime: u32,
    pub delta_min: i64,
    pub delta_max: i64,
    pub states: usize,
}

type LiftKey = (Vec<u32>, Vec<u32>, Vec<u32>, ItemMultiset);

struct Explorer {
    memo: HashMap<LiftKey, u32>,
    delta_min: i64,
    delta_max: i64,
}

/// Max over every adversary line of the upper game at `cfg` (lenient
/// overflow rules) against the lifted policy. Gap bounds are asserted at
/// every visited state.
pub fn evaluate_lifted<P: OnlinePolicy + ?Sized>(policy: &P, cfg: Config) -> Result<LiftEvaluation, LiftError> {
    let lifted = LiftedAlgorithm::new(policy, cfg)?;
    let mut ex = Explorer { memo: HashMap::new(), delta_min: 0, delta_max: 0 };
    let num = explore(&mut ex, &lifted, &ItemMultiset::new())?;
    Ok(LiftEvaluation {
        score: Score::new(num as u64, cfg.g() as u64),
        g_prime: policy.capacity(),
        delta_min: ex.delta_min,
        delta_max: ex.delta_max,
        states: ex.memo.len(),
    })
}

fn explore<P: OnlinePolicy + ?Sized>(
    ex: &mut Explorer,
    lifted: &LiftedAlgorithm<'_, P>,
    sent: &ItemMultiset,
) -> Result<u32, LiftError> {
    // the policy sees the memory in order, so the whole sequence is part of the key
    let key = (
        lifted.own_load_classes.clone(),
        lifted.inner_loads.clone(),
        lifted.memory.clone(),
        sent.clone(),
    );
    if let Some(&v) = ex.memo.get(&key) {
        return Ok(v);
    }
    let cfg = lifted.cfg;
    let state = UpperState {
        load_classes: LoadVector::from_loads(&lifted.own_load_classes),
        sent_classes: sent.clone(),
    };
    let mut best = lifted.score_num();
    for mv in legal_moves_upper(&state, &cfg, OverflowLegality::Lenient) {
        let mut placed = lifted.clone();
        let bin = placed.lift_step(mv.class)?;
        let next_sent = sent.with(mv.class);
        for &o in &mv.overflow {
            let mut next = placed.clone();
            next.lift_observe_overflow(bin, o)?;
            for &d in &next.delta {
                ex.delta_min = ex.delta_min.min(d);
                ex.delta_max = ex.delta_max.max(d);
            }
            best = best.max(explore(ex, &next, &next_sent)?);
        }
    }
    ex.memo.insert(key, best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{FirstBin, LeastLoaded};

    fn cfg(m: u32, g: u32) -> Config {
        Config::new(m, g).unwrap()
    }

    #[test]
    fn g_prime_examples() {
        assert_eq!(compute_g_prime_int(4, 2), 12);
        assert_eq!(compute_g_prime_int(1, 1), 5);
        assert_eq!(compute_g_prime_int(22, 4), 49);
    }

    #[test]
    fn g_prime_ceiling_matches_float_away_from_integers() {
        for g in 1..200 {
            for m in 1..6 {
                let real = g_prime_real(g, m);
                let c = compute_g_prime_int(g, m);
                assert!((c as f64) >= real - 1e-9 && (c as f64) < real + 1.0, "g={g} m={m}");
                if (real - real.round()).abs() > 1e-6 {
                    assert_eq!(c as f64, real.ceil(), "g={g} m={m}");
                }
            }
        }
    }

    #[test]
    fn gap_bounds_for_two_bins_granularity_four() {
        // -m*sqrt(g) - 1 = -5, sqrt(g) = 2
        assert!(delta_above_floor(-5, 4, 2));
        assert!(!delta_above_floor(-6, 4, 2));
        assert!(delta_below_ceiling(2, 4));
        assert!(!delta_below_ceiling(3, 4));
    }

    #[test]
    fn large_class_test_is_inclusive() {
        assert!(is_large_class(2, 4));
        assert!(!is_large_class(1, 4));
        assert!(!is_large_class(2, 5));
        assert!(is_large_class(3, 5));
    }

    #[test]
    fn fresh_state_consults_the_policy() {
        let policy = LeastLoaded { m: 2, capacity: 12 };
        for class in 0..4 {
            let mut l = LiftedAlgorithm::new(&policy, cfg(2, 4)).unwrap();
            l.lift_step(class).unwrap();
            assert_ne!(l.last_case(), Some(LiftCase::BridgeGap));
        }
    }

    #[test]
    fn three_step_trace() {
        let policy = LeastLoaded { m: 2, capacity: 12 };
        let c = cfg(2, 4);
        let mut l = LiftedAlgorithm::new(&policy, c).unwrap();

        assert_eq!(l.lift_step(3).unwrap(), 0);
        assert_eq!(l.last_case(), Some(LiftCase::Large));
        l.lift_observe_overflow(0, 1).unwrap();
        assert_eq!((l.delta(), l.memory()), (&[0, 0][..], &[4][..]));

        assert_eq!(l.lift_step(2).unwrap(), 1);
        l.lift_observe_overflow(1, 0).unwrap();
        assert_eq!((l.delta(), l.memory()), (&[0, -1][..], &[4, 3][..]));

        assert_eq!(l.lift_step(1).unwrap(), 1);
        assert_eq!(l.last_case(), Some(LiftCase::BridgeGap));
        l.lift_observe_overflow(1, 1).unwrap();
        assert_eq!((l.delta(), l.memory()), (&[0, 1][..], &[4, 3][..]));
    }

    #[test]
    fn overflow_for_wrong_bin_is_rejected() {
        let policy = LeastLoaded { m: 2, capacity: 12 };
        let mut l = LiftedAlgorithm::new(&policy, cfg(2, 4)).unwrap();
        assert!(matches!(l.lift_observe_overflow(0, 0), Err(LiftError::UnexpectedBin { .. })));
        let bin = l.lift_step(3).unwrap();
        assert!(matches!(l.lift_observe_overflow(bin + 1, 0), Err(LiftError::UnexpectedBin { .. })));
    }

    #[test]
    fn undersized_policy_is_rejected() {
        let policy = LeastLoaded { m: 2, capacity: 11 };
        assert!(matches!(
            LiftedAlgorithm::new(&policy, cfg(2, 4)),
            Err(LiftError::CapacityTooSmall { required: 12, found: 11 })
        ));
    }

    #[test]
    fn single_bin_first_bin_policy() {
        for g in 1..6 {
            let c = cfg(1, g);
            let policy = FirstBin { m: 1, capacity: compute_g_prime_int(g, 1) };
            let ev = evaluate_lifted(&policy, c).unwrap();
            assert!(ev.score <= Score::new(2, 1));
        }
    }

    #[test]
    fn performance_bound_arithmetic() {
        // m=2, g=4: slack m*sqrt(g) + 2 = 6
        assert!(performance_bound_holds(22, 16, 4, 2));
        assert!(!performance_bound_holds(23, 16, 4, 2));
    }
}
