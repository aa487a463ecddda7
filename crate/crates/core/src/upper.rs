//! Upper-bound game over item classes. Class `c` stands for sizes in
//! `(c/g, (c+1)/g]`. The adversary sends a class, the algorithm picks a
//! bin, then the adversary decides whether the bin's load class grows by
//! `c` or by `c + 1` (an overflow). The adversary must keep three rules:
//! the classes fit into `m` bins of size `g - 1`, the load classes sum to
//! at most `m*g - 1`, and class 0 always overflows. The score is the top
//! load class plus one, over `g`.

use dashmap::DashMap;
use rayon::prelude::*;

use crate::feasibility::FeasibilityCache;
use crate::proofs::{AlgorithmNode, Placement};
use crate::search::{run_parallel, Bounds, Budget, SolveError, SolveOptions, INF};
use crate::types::{Config, ItemMultiset, LoadVector, OverflowLegality, Score};

/// Canonical position: sorted bin load classes plus the sent class multiset.
/// The overflow count is `sum(loads) - sum(classes)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpperState {
    pub load_classes: LoadVector,
    pub sent_classes: ItemMultiset,
}

impl UpperState {
    pub fn initial(cfg: &Config) -> Self {
        Self { load_classes: LoadVector::empty(cfg.bins()), sent_classes: ItemMultiset::new() }
    }

    pub fn overflows(&self) -> u64 {
        self.load_classes.total() - self.sent_classes.total_mass()
    }

    /// Bin `bin` grows by `class + overflow`. `None` past the 2g cap, which
    /// the least loaded bin never reaches.
    pub fn place(&self, bin: usize, class: u32, overflow: u8, cfg: &Config) -> Option<Self> {
        let load_classes = self.load_classes.place(bin, class + overflow as u32, cfg.load_cap()).ok()?;
        Some(Self { load_classes, sent_classes: self.sent_classes.with(class) })
    }
}

/// An item class the adversary may send and the overflow bits it may then pick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMove {
    pub class: u32,
    pub overflow: Vec<u8>,
}

/// Legal adversary moves, ascending by class.
pub fn legal_moves_upper(state: &UpperState, cfg: &Config, legality: OverflowLegality) -> Vec<ClassMove> {
    let cache = FeasibilityCache::new(cfg.m(), cfg.g() - 1);
    moves_with(&cache, state, cfg, legality)
}

fn moves_with(
    cache: &FeasibilityCache,
    state: &UpperState,
    cfg: &Config,
    legality: OverflowLegality,
) -> Vec<ClassMove> {
    let total = state.load_classes.total();
    (0..cfg.g())
        .filter_map(|class| {
            let overflow = legality.overflow_bits(class, total, cfg);
            if overflow.is_empty() || !cache.fits(&state.sent_classes.with(class)) {
                return None;
            }
            Some(ClassMove { class, overflow })
        })
        .collect()
}

pub struct UpperSolver {
    cfg: Config,
    opts: SolveOptions,
    legality: OverflowLegality,
    feasible: FeasibilityCache,
    table: DashMap<UpperState, Bounds>,
    budget: Budget,
}

impl UpperSolver {
    pub fn new(cfg: Config, opts: SolveOptions, legality: OverflowLegality) -> Self {
        Self {
            cfg,
            opts,
            legality,
            feasible: FeasibilityCache::new(cfg.m(), cfg.g() - 1),
            table: DashMap::new(),
            budget: Budget::new(opts.max_states),
        }
    }

    pub fn config(&self) -> Config {
        self.cfg
    }

    pub fn legality(&self) -> OverflowLegality {
        self.legality
    }

    pub fn expanded(&self) -> u64 {
        self.budget.expanded()
    }

    pub fn solve(&self) -> Result<Score, SolveError> {
        let root = UpperState::initial(&self.cfg);
        let num = if self.opts.threads > 1 {
            let moves = self.moves(&root);
            let floor = root.load_classes.max_load() + 1;
            run_parallel(self.opts.threads, || {
                moves
                    .par_iter()
                    .map(|mv| self.algorithm(&root, mv, 0, INF))
                    .try_reduce(|| floor, |a, b| Ok(a.max(b)))
            })??
        } else {
            self.adversary(&root, 0, INF)?
        };
        Ok(Score::new(num as u64, self.cfg.g() as u64))
    }

    pub fn value(&self, state: &UpperState) -> Result<u32, SolveError> {
        self.adversary(state, 0, INF)
    }

    fn moves(&self, state: &UpperState) -> Vec<ClassMove> {
        moves_with(&self.feasible, state, &self.cfg, self.legality)
    }

    fn replies(&self, state: &UpperState) -> Vec<usize> {
        let mut bins = state.load_classes.distinct_moves();
        bins.reverse();
        bins
    }

    fn adversary(&self, state: &UpperState, alpha: u32, beta: u32) -> Result<u32, SolveError> {
        let prune = self.opts.prune;
        let floor = state.load_classes.max_load() + 1;
        if prune && floor >= beta {
            return Ok(floor);
        }
        let mut bounds = self.table.get(state).map(|b| *b).unwrap_or(Bounds { lo: floor, hi: INF });
        if let Some(v) = bounds.exact() {
            return Ok(v);
        }
        let (a, b) = if prune {
            if bounds.lo >= beta {
                return Ok(bounds.lo);
            }
            if bounds.hi <= alpha {
                return Ok(bounds.hi);
            }
            (alpha.max(bounds.lo), beta.min(bounds.hi))
        } else {
            (0, INF)
        };
        self.budget.charge()?;

        let mut best = floor;
        for mv in self.moves(state).iter().rev() {
            let v = self.algorithm(state, mv, a.max(best), b)?;
            best = best.max(v);
            if prune && best >= b {
                break;
            }
        }
        bounds.record(best, a, b);
        self.table.insert(state.clone(), bounds);
        Ok(best)
    }

    fn algorithm(&self, state: &UpperState, mv: &ClassMove, alpha: u32, beta: u32) -> Result<u32, SolveError> {
        let prune = self.opts.prune;
        let mut best = INF;
        for bin in self.replies(state) {
            let window = if prune { beta.min(best) } else { INF };
            let Some(v) = self.overflow(state, bin, mv, alpha, window)? else {
                continue;
            };
            best = best.min(v);
            if prune && best <= alpha {
                break;
            }
        }
        Ok(best)
    }

    /// Adversary's overflow decision after `mv` went into `bin`. `None` if
    /// the placement breaks the load cap.
    fn overflow(
        &self,
        state: &UpperState,
        bin: usize,
        mv: &ClassMove,
        alpha: u32,
        beta: u32,
    ) -> Result<Option<u32>, SolveError> {
        let mut best = 0;
        for &o in mv.overflow.iter().rev() {
            let Some(child) = state.place(bin, mv.class, o, &self.cfg) else {
                return Ok(None);
            };
            best = best.max(self.adversary(&child, alpha.max(best), beta)?);
            if self.opts.prune && best >= beta {
                break;
            }
        }
        Ok(Some(best))
    }

    /// Complete decision tree whose worst leaf equals the game value.
    pub fn extract_algorithm_strategy(&self) -> Result<AlgorithmNode, SolveError> {
        let target = self.solve()?.num as u32;
        self.build_algorithm(&UpperState::initial(&self.cfg), target)
    }

    fn build_algorithm(&self, state: &UpperState, target: u32) -> Result<AlgorithmNode, SolveError> {
        let mut node = AlgorithmNode::leaf(state.load_classes.as_slice().to_vec());
        for mv in self.moves(state) {
            let mut chosen = None;
            for bin in self.replies(state) {
                if let Some(v) = self.overflow(state, bin, &mv, target, target + 1)? {
                    if v <= target {
                        chosen = Some(bin);
                        break;
                    }
                }
            }
            let bin = chosen.expect("some reply keeps the position within the value");
            let mut placement = Placement { bin, no_overflow: None, overflow: None };
            for &o in &mv.overflow {
                let child = state.place(bin, mv.class, o, &self.cfg).expect("checked above");
                let sub = Box::new(self.build_algorithm(&child, target)?);
                if o == 0 {
                    placement.no_overflow = Some(sub);
                } else {
                    placement.overflow = Some(sub);
                }
            }
            node.moves.insert(mv.class, placement);
        }
        Ok(node)
    }
}

pub fn solve_upper(cfg: Config) -> Score {
    UpperSolver::new(cfg, SolveOptions::default(), OverflowLegality::Lenient)
        .solve()
        .expect("unbounded solve cannot hit a budget")
}

pub fn extract_algorithm_strategy(cfg: Config) -> AlgorithmNode {
    UpperSolver::new(cfg, SolveOptions::default(), OverflowLegality::Lenient)
        .extract_algorithm_strategy()
        .expect("unbounded solve cannot hit a budget")
}
