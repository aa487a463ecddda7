//! Lower-bound game: the adversary sends integer items of size `1..=g`
//! that must keep fitting into `m` bins of size `g`, the algorithm places
//! each one, and the game ends when no item can be sent. The score is the
//! final max load over `g`.
//!
//! Solved by fail-soft alpha-beta over canonical positions with a shared
//! transposition table of value bounds.

use dashmap::DashMap;
use rayon::prelude::*;

use crate::feasibility::{fits, FeasibilityCache};
use crate::policy::{check_sequence, OnlinePolicy, PolicyError};
use crate::proofs::AdversaryNode;
use crate::search::{run_parallel, Bounds, Budget, SolveError, SolveOptions, INF};
use crate::types::{canonicalize, Config, ItemMultiset, LoadVector, Score};

/// Canonical position: sorted loads plus the multiset of sizes sent so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LowerState {
    pub loads: LoadVector,
    pub sent: ItemMultiset,
}

impl LowerState {
    pub fn initial(cfg: &Config) -> Self {
        Self { loads: LoadVector::empty(cfg.bins()), sent: ItemMultiset::new() }
    }

    /// Places `item` into canonical bin `bin`. `None` if that would exceed
    /// the 2g load cap; such a move is never better than the least loaded bin.
    pub fn place(&self, bin: usize, item: u32, cfg: &Config) -> Option<Self> {
        let loads = self.loads.place(bin, item, cfg.load_cap()).ok()?;
        Some(Self { loads, sent: self.sent.with(item) })
    }
}

/// Every size in `1..=g` the adversary may send next, ascending.
pub fn legal_items_lower(state: &LowerState, cfg: &Config) -> Vec<u32> {
    (1..=cfg.g())
        .filter(|&y| fits(&state.sent.with(y), cfg.m(), cfg.g()))
        .collect()
}

pub struct LowerSolver {
    cfg: Config,
    opts: SolveOptions,
    feasible: FeasibilityCache,
    table: DashMap<LowerState, Bounds>,
    budget: Budget,
}

impl LowerSolver {
    pub fn new(cfg: Config, opts: SolveOptions) -> Self {
        Self {
            cfg,
            opts,
            feasible: FeasibilityCache::new(cfg.m(), cfg.g()),
            table: DashMap::new(),
            budget: Budget::new(opts.max_states),
        }
    }

    pub fn config(&self) -> Config {
        self.cfg
    }

    pub fn expanded(&self) -> u64 {
        self.budget.expanded()
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Game value from the empty position.
    pub fn solve(&self) -> Result<Score, SolveError> {
        let root = LowerState::initial(&self.cfg);
        let num = if self.opts.threads > 1 {
            let items = self.legal_items(&root);
            run_parallel(self.opts.threads, || {
                items
                    .par_iter()
                    .map(|&y| self.algorithm(&root, y, 0, INF))
                    .try_reduce(|| 0, |a, b| Ok(a.max(b)))
            })??
            .max(root.loads.max_load())
        } else {
            self.adversary(&root, 0, INF)?
        };
        Ok(Score::new(num as u64, self.cfg.g() as u64))
    }

    /// Exact value (numerator) of an arbitrary position.
    pub fn value(&self, state: &LowerState) -> Result<u32, SolveError> {
        self.adversary(state, 0, INF)
    }

    /// The legal sizes are a prefix `1..=k`: shrinking an item keeps a
    /// packing valid.
    fn legal_items(&self, state: &LowerState) -> Vec<u32> {
        let cfg = &self.cfg;
        let room = cfg.m() as u64 * cfg.g() as u64 - state.sent.total_mass();
        let mut top = (cfg.g() as u64).min(room) as u32;
        while top > 0 && !self.feasible.fits(&state.sent.with(top)) {
            top -= 1;
        }
        (1..=top).collect()
    }

    /// Canonical bins to try for `item`, least loaded first.
    fn replies(&self, state: &LowerState) -> Vec<usize> {
        let mut bins = state.loads.distinct_moves();
        bins.reverse();
        bins
    }

    fn adversary(&self, state: &LowerState, alpha: u32, beta: u32) -> Result<u32, SolveError> {
        let prune = self.opts.prune;
        let floor = state.loads.max_load();
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
        for y in self.legal_items(state).into_iter().rev() {
            let v = self.algorithm(state, y, a.max(best), b)?;
            best = best.max(v);
            if prune && best >= b {
                break;
            }
        }
        bounds.record(best, a, b);
        self.table.insert(state.clone(), bounds);
        Ok(best)
    }

    fn algorithm(&self, state: &LowerState, item: u32, alpha: u32, beta: u32) -> Result<u32, SolveError> {
        let prune = self.opts.prune;
        let mut best = INF;
        for bin in self.replies(state) {
            let Some(child) = state.place(bin, item, &self.cfg) else {
                continue;
            };
            let window = if prune { beta.min(best) } else { INF };
            let v = self.adversary(&child, alpha, window)?;
            best = best.min(v);
            if prune && best <= alpha {
                break;
            }
        }
        Ok(best)
    }

    /// Canonical bin achieving the min-max value for `item` at `state`.
    pub fn best_bin(&self, state: &LowerState, item: u32) -> Result<usize, SolveError> {
        let target = self.algorithm(state, item, 0, INF)?;
        for bin in self.replies(state) {
            if let Some(child) = state.place(bin, item, &self.cfg) {
                if self.adversary(&child, target, target + 1)? <= target {
                    return Ok(bin);
                }
            }
        }
        unreachable!("some reply attains the algorithm-node value")
    }

    /// Adversary strategy tree certifying the game value. Branches stop as
    /// soon as the max load reaches the value.
    pub fn extract_adversary_strategy(&self) -> Result<AdversaryNode, SolveError> {
        let target = self.solve()?.num as u32;
        self.build_adversary(&LowerState::initial(&self.cfg), target)
    }

    fn build_adversary(&self, state: &LowerState, target: u32) -> Result<AdversaryNode, SolveError> {
        let loads = state.loads.as_slice().to_vec();
        if state.loads.max_load() >= target {
            return Ok(AdversaryNode::leaf(loads));
        }
        let mut chosen = None;
        for y in self.legal_items(state).into_iter().rev() {
            if self.algorithm(state, y, target - 1, target)? >= target {
                chosen = Some(y);
                break;
            }
        }
        let item = chosen.expect("position value reaches the target");
        let mut node = AdversaryNode { loads: loads.clone(), item: Some(item), children: Default::default() };
        for bin in state.loads.distinct_moves() {
            let child = match state.place(bin, item, &self.cfg) {
                Some(child) => self.build_adversary(&child, target)?,
                None => {
                    // over the load cap, so certainly at least the target
                    let mut raw = loads.clone();
                    raw[bin] += item;
                    AdversaryNode::leaf(canonicalize(&raw))
                }
            };
            node.children.insert(bin, child);
        }
        Ok(node)
    }
}

/// Min-max value of the lower game, single-threaded with pruning.
pub fn solve_lower(cfg: Config) -> Score {
    LowerSolver::new(cfg, SolveOptions::default())
        .solve()
        .expect("unbounded solve cannot hit a budget")
}

pub fn extract_adversary_strategy(cfg: Config) -> AdversaryNode {
    LowerSolver::new(cfg, SolveOptions::default())
        .extract_adversary_strategy()
        .expect("unbounded solve cannot hit a budget")
}

/// Optimal algorithm side of the solved game as an online policy over
/// fixed bin indices. Decisions are looked up lazily in the solver's table.
pub struct LowerPolicy {
    solver: LowerSolver,
    decisions: DashMap<(LowerState, u32), u32>,
}

impl LowerPolicy {
    pub fn new(solver: LowerSolver) -> Self {
        Self { solver, decisions: DashMap::new() }
    }

    pub fn solver(&self) -> &LowerSolver {
        &self.solver
    }

    /// Load of the bin the policy puts `item` into at `state`.
    fn target_load(&self, state: &LowerState, item: u32) -> Result<u32, SolveError> {
        let key = (state.clone(), item);
        if let Some(load) = self.decisions.get(&key) {
            return Ok(*load);
        }
        let bin = self.solver.best_bin(state, item)?;
        let load = state.loads.as_slice()[bin];
        self.decisions.insert(key, load);
        Ok(load)
    }
}

pub fn algorithm_policy(cfg: Config) -> LowerPolicy {
    LowerPolicy::new(LowerSolver::new(cfg, SolveOptions::default()))
}

impl OnlinePolicy for LowerPolicy {
    fn bins(&self) -> u32 {
        self.solver.cfg.m()
    }

    fn capacity(&self) -> u32 {
        self.solver.cfg.g()
    }

    fn place(&self, items: &[u32]) -> Result<usize, PolicyError> {
        let cfg = self.solver.cfg;
        check_sequence(items, cfg.m(), cfg.g())?;
        if let Some(&bad) = items.iter().find(|&&y| y == 0) {
            return Err(PolicyError::IllegalSequence { items: vec![bad], m: cfg.m(), capacity: cfg.g() });
        }
        let mut physical = vec![0u32; cfg.bins()];
        let mut state = LowerState::initial(&cfg);
        let mut last = 0;
        for &y in items {
            let load = self.target_load(&state, y)?;
            last = physical.iter().position(|&l| l == load).expect("canonical load exists physically");
            physical[last] += y;
            state = LowerState { loads: LoadVector::from_loads(&physical), sent: state.sent.with(y) };
        }
        Ok(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: u32, g: u32) -> Config {
        Config::new(m, g).unwrap()
    }

    #[test]
    fn legal_items_examples() {
        let c = cfg(2, 3);
        assert_eq!(legal_items_lower(&LowerState::initial(&c), &c), vec![1, 2, 3]);
        let full = LowerState { loads: LoadVector::from_loads(&[3, 3]), sent: ItemMultiset::from_sizes(&[3, 3]) };
        assert!(legal_items_lower(&full, &c).is_empty());
        let two = LowerState { loads: LoadVector::from_loads(&[2, 2]), sent: ItemMultiset::from_sizes(&[2, 2]) };
        assert_eq!(legal_items_lower(&two, &c), vec![1]);
    }

    #[test]
    fn solver_prefix_agrees_with_direct_enumeration() {
        let c = cfg(3, 4);
        let s = LowerSolver::new(c, SolveOptions::default());
        let st = LowerState { loads: LoadVector::from_loads(&[4, 3, 0]), sent: ItemMultiset::from_sizes(&[4, 3]) };
        assert_eq!(s.legal_items(&st), legal_items_lower(&st, &c));
    }

    #[test]
    fn classic_two_bin_value() {
        assert_eq!(solve_lower(cfg(2, 3)), Score::new(4, 3));
    }

    #[test]
    fn single_bin_is_filled_exactly() {
        let v = solve_lower(cfg(1, 5));
        assert_eq!((v.num, v.denom), (5, 5));
    }

    #[test]
    fn classic_root_item_is_one_third() {
        let tree = extract_adversary_strategy(cfg(2, 3));
        assert_eq!(tree.item, Some(1));
    }

    #[test]
    fn single_bin_strategy_is_a_chain() {
        let tree = extract_adversary_strategy(cfg(1, 2));
        let mut node = &tree;
        let mut total = 0;
        while let Some(y) = node.item {
            total += y;
            assert_eq!(node.children.len(), 1);
            node = &node.children[&0];
        }
        assert_eq!(total, 2);
        assert_eq!(node.loads, vec![2]);
    }

    #[test]
    fn policy_first_move_and_single_bin() {
        let p = algorithm_policy(cfg(2, 3));
        assert_eq!(p.place(&[1]).unwrap(), 0);
        let p1 = algorithm_policy(cfg(1, 4));
        assert_eq!(p1.place(&[1, 2, 1]).unwrap(), 0);
    }

    #[test]
    fn policy_rejects_infeasible_sequences() {
        let p = algorithm_policy(cfg(2, 3));
        assert!(matches!(p.place(&[2, 2, 2]), Err(PolicyError::IllegalSequence { .. })));
    }

    #[test]
    fn budget_is_enforced() {
        let s = LowerSolver::new(cfg(2, 6), SolveOptions { max_states: Some(5), ..Default::default() });
        assert_eq!(s.solve(), Err(SolveError::ResourceLimit { limit: 5 }));
    }
}
