//! Strategy-tree proof documents and their verifiers.
//!
//! A lower-game proof is an adversary strategy: at each internal node the
//! item to send, and one child per distinct bin the algorithm may answer
//! with. A leaf certifies its current max load, since loads never decrease.
//! An upper-game proof is a complete algorithm decision tree: for every
//! legal item class a bin, and for every legal overflow bit a subtree.
//!
//! The verifiers here re-derive everything from the game rules and the
//! feasibility oracle. They do not call into the solvers.
//!
//! On disk a document is canonical JSON (sorted keys, unquoted integers,
//! `schema_version` "1"):
//!
//! ```text
//! { "g": 3, "game": "lower", "m": 2, "meta": {..}, "root": {..},
//!   "schema_version": "1", "value_num": 4 }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::fits;
use crate::types::{canonicalize, distinct_bin_moves, Config, ItemMultiset, OverflowLegality, Score};

pub const SCHEMA_VERSION: &str = "1";
pub const FILE_SUFFIX: &str = ".obsproof.json";

/// Adversary strategy node. Loads are canonical (non-increasing); children
/// are keyed by the representative bin index of each distinct load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryNode {
    pub loads: Vec<u32>,
    pub item: Option<u32>,
    pub children: BTreeMap<usize, AdversaryNode>,
}

impl AdversaryNode {
    pub fn leaf(loads: Vec<u32>) -> Self {
        Self { loads, item: None, children: BTreeMap::new() }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.values().map(Self::node_count).sum::<usize>()
    }
}

/// Algorithm decision node. No moves means a terminal position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgorithmNode {
    pub loads: Vec<u32>,
    pub moves: BTreeMap<u32, Placement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    /// Representative bin index into the node's canonical loads.
    pub bin: usize,
    pub no_overflow: Option<Box<AlgorithmNode>>,
    pub overflow: Option<Box<AlgorithmNode>>,
}

impl AlgorithmNode {
    pub fn leaf(loads: Vec<u32>) -> Self {
        Self { loads, moves: BTreeMap::new() }
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .moves
            .values()
            .flat_map(|p| [&p.no_overflow, &p.overflow])
            .flatten()
            .map(|n| n.node_count())
            .sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofTree {
    Lower(AdversaryNode),
    Upper(AlgorithmNode),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub tool: String,
    pub created_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overflow_legality: Option<OverflowLegality>,
}

impl Meta {
    pub fn now() -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool: concat!("stretch ", env!("CARGO_PKG_VERSION")).to_string(),
            created_unix,
            overflow_legality: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofDocument {
    pub m: u32,
    pub g: u32,
    /// Claimed value numerator; the denominator is `g`.
    pub value_num: u64,
    pub root: ProofTree,
    pub meta: Meta,
}

impl ProofDocument {
    pub fn lower(cfg: Config, value_num: u64, root: AdversaryNode) -> Self {
        Self { m: cfg.m(), g: cfg.g(), value_num, root: ProofTree::Lower(root), meta: Meta::now() }
    }

    pub fn upper(cfg: Config, value_num: u64, root: AlgorithmNode, legality: OverflowLegality) -> Self {
        let mut meta = Meta::now();
        if legality != OverflowLegality::Lenient {
            meta.overflow_legality = Some(legality);
        }
        Self { m: cfg.m(), g: cfg.g(), value_num, root: ProofTree::Upper(root), meta }
    }

    pub fn game(&self) -> GameKind {
        match self.root {
            ProofTree::Lower(_) => GameKind::Lower,
            ProofTree::Upper(_) => GameKind::Upper,
        }
    }

    pub fn claimed(&self) -> Score {
        Score::new(self.value_num, self.g.max(1) as u64)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported document: {0}")]
    Schema(String),
    #[error("expected a {expected:?} proof, found {found:?}")]
    WrongGame { expected: GameKind, found: GameKind },
    #[error("malformed tree at {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("infeasible item {item} at {path}: items sent so far no longer fit")]
    InfeasibleItem { path: String, item: u32 },
    #[error("incomplete strategy at {path}: no answer for class {class}{}", overflow.map(|o| format!(" with overflow bit {o}")).unwrap_or_default())]
    IncompleteStrategy { path: String, class: u32, overflow: Option<u8> },
}

fn malformed(path: &str, reason: impl Into<String>) -> ProofError {
    ProofError::Malformed { path: path.to_string(), reason: reason.into() }
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    loads: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    item: Option<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    children: BTreeMap<usize, RawNode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    moves: BTreeMap<u32, RawPlacement>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlacement {
    bin: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    no_overflow: Option<Box<RawNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overflow: Option<Box<RawNode>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema_version: String,
    game: GameKind,
    m: u32,
    g: u32,
    value_num: u64,
    root: RawNode,
    meta: Meta,
}

impl From<&AdversaryNode> for RawNode {
    fn from(n: &AdversaryNode) -> Self {
        RawNode {
            loads: n.loads.clone(),
            item: n.item,
            children: n.children.iter().map(|(&k, c)| (k, c.into())).collect(),
            moves: BTreeMap::new(),
        }
    }
}

impl From<&AlgorithmNode> for RawNode {
    fn from(n: &AlgorithmNode) -> Self {
        let branch = |b: &Option<Box<AlgorithmNode>>| b.as_deref().map(|c| Box::new(RawNode::from(c)));
        RawNode {
            loads: n.loads.clone(),
            item: None,
            children: BTreeMap::new(),
            moves: n
                .moves
                .iter()
                .map(|(&class, p)| {
                    (
                        class,
                        RawPlacement {
                            bin: p.bin,
                            no_overflow: branch(&p.no_overflow),
                            overflow: branch(&p.overflow),
                        },
                    )
                })
                .collect(),
        }
    }
}

fn lower_from_raw(raw: RawNode, path: &str) -> Result<AdversaryNode, ProofError> {
    if !raw.moves.is_empty() {
        return Err(malformed(path, "lower-game node carries upper-game moves"));
    }
    let children = raw
        .children
        .into_iter()
        .map(|(k, c)| lower_from_raw(c, &format!("{path}/{k}")).map(|c| (k, c)))
        .collect::<Result<_, _>>()?;
    Ok(AdversaryNode { loads: raw.loads, item: raw.item, children })
}

fn upper_from_raw(raw: RawNode, path: &str) -> Result<AlgorithmNode, ProofError> {
    if raw.item.is_some() || !raw.children.is_empty() {
        return Err(malformed(path, "upper-game node carries lower-game fields"));
    }
    let mut moves = BTreeMap::new();
    for (class, p) in raw.moves {
        let sub = |b: Option<Box<RawNode>>, tag: &str| {
            b.map(|n| upper_from_raw(*n, &format!("{path}/{class}/{tag}")).map(Box::new))
                .transpose()
        };
        let no_overflow = sub(p.no_overflow, "0")?;
        let overflow = sub(p.overflow, "1")?;
        moves.insert(class, Placement { bin: p.bin, no_overflow, overflow });
    }
    Ok(AlgorithmNode { loads: raw.loads, moves })
}

/// Canonical bytes: sorted keys, two-space indentation, trailing newline.
pub fn serialize(doc: &ProofDocument) -> Vec<u8> {
    let (game, root) = match &doc.root {
        ProofTree::Lower(n) => (GameKind::Lower, RawNode::from(n)),
        ProofTree::Upper(n) => (GameKind::Upper, RawNode::from(n)),
    };
    let raw = RawDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        game,
        m: doc.m,
        g: doc.g,
        value_num: doc.value_num,
        root,
        meta: doc.meta.clone(),
    };
    // serde_json's Value map is ordered by key, which gives the sorted layout.
    let value = serde_json::to_value(&raw).expect("proof documents always serialize");
    let mut out = serde_json::to_vec_pretty(&value).expect("values always serialize");
    out.push(b'\n');
    out
}

pub fn deserialize(bytes: &[u8]) -> Result<ProofDocument, ProofError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let raw: RawDocument = serde::Deserialize::deserialize(&mut de).and_then(|r| de.end().map(|_| r)).map_err(|e| {
        ProofError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    })?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(ProofError::Schema(format!("schema_version {:?}", raw.schema_version)));
    }
    let root = match raw.game {
        GameKind::Lower => ProofTree::Lower(lower_from_raw(raw.root, "root")?),
        GameKind::Upper => ProofTree::Upper(upper_from_raw(raw.root, "root")?),
    };
    Ok(ProofDocument { m: raw.m, g: raw.g, value_num: raw.value_num, root, meta: raw.meta })
}

pub fn read_file(path: &std::path::Path) -> Result<ProofDocument, ProofError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ProofError::Schema(format!("cannot read {}: {e}", path.display())))?;
    deserialize(&bytes)
}

pub fn write_file(path: &std::path::Path, doc: &ProofDocument) -> std::io::Result<()> {
    std::fs::write(path, serialize(doc))
}

// ---------------------------------------------------------------------------
// verification

fn config_of(doc: &ProofDocument) -> Result<Config, ProofError> {
    Config::new(doc.m, doc.g).map_err(|e| ProofError::Schema(e.to_string()))
}

fn check_loads(loads: &[u32], m: u32, path: &str) -> Result<(), ProofError> {
    if loads.len() != m as usize {
        return Err(malformed(path, format!("{} loads for {m} bins", loads.len())));
    }
    if loads.windows(2).any(|w| w[0] < w[1]) {
        return Err(malformed(path, "loads are not sorted non-increasing"));
    }
    Ok(())
}

fn check_root(loads: &[u32], m: u32) -> Result<(), ProofError> {
    check_loads(loads, m, "root")?;
    if loads.iter().any(|&l| l != 0) {
        return Err(malformed("root", "root loads must all be zero"));
    }
    Ok(())
}

fn successor(loads: &[u32], bin: usize, amount: u32) -> Vec<u32> {
    let mut next = loads.to_vec();
    next[bin] += amount;
    canonicalize(&next)
}

/// Certified lower bound of an adversary strategy: the minimum over leaves
/// of the leaf's max load, over `g`.
pub fn verify_lower(doc: &ProofDocument) -> Result<Score, ProofError> {
    let cfg = config_of(doc)?;
    let ProofTree::Lower(root) = &doc.root else {
        return Err(ProofError::WrongGame { expected: GameKind::Lower, found: doc.game() });
    };
    check_root(&root.loads, cfg.m())?;
    let num = walk_lower(root, &ItemMultiset::new(), cfg, "root")?;
    Ok(Score::new(num as u64, cfg.g() as u64))
}

fn walk_lower(node: &AdversaryNode, sent: &ItemMultiset, cfg: Config, path: &str) -> Result<u32, ProofError> {
    check_loads(&node.loads, cfg.m(), path)?;
    let Some(item) = node.item else {
        if !node.children.is_empty() {
            return Err(malformed(path, "children present but no item"));
        }
        return Ok(node.loads[0]);
    };
    if item == 0 || item > cfg.g() {
        return Err(malformed(path, format!("item {item} outside 1..={}", cfg.g())));
    }
    let sent = sent.with(item);
    if !fits(&sent, cfg.m(), cfg.g()) {
        return Err(ProofError::InfeasibleItem { path: path.to_string(), item });
    }
    let replies = distinct_bin_moves(&node.loads);
    if let Some(extra) = node.children.keys().find(|k| !replies.contains(k)) {
        return Err(malformed(path, format!("child for non-representative bin {extra}")));
    }
    let mut value = u32::MAX;
    for bin in replies {
        let Some(child) = node.children.get(&bin) else {
            return Err(malformed(path, format!("missing child for bin {bin}")));
        };
        let child_path = format!("{path}/{bin}");
        if child.loads != successor(&node.loads, bin, item) {
            return Err(malformed(&child_path, "loads inconsistent with parent move"));
        }
        value = value.min(walk_lower(child, &sent, cfg, &child_path)?);
    }
    Ok(value)
}

/// Worst-case score of an algorithm decision tree: every legal item class
/// and overflow bit must be answered; returns the max over terminals of
/// `(max load class + 1) / g`.
pub fn verify_upper(doc: &ProofDocument) -> Result<Score, ProofError> {
    let cfg = config_of(doc)?;
    let ProofTree::Upper(root) = &doc.root else {
        return Err(ProofError::WrongGame { expected: GameKind::Upper, found: doc.game() });
    };
    check_root(&root.loads, cfg.m())?;
    let legality = doc.meta.overflow_legality.unwrap_or_default();
    let num = walk_upper(root, &ItemMultiset::new(), cfg, legality, "root")?;
    Ok(Score::new(num as u64, cfg.g() as u64))
}

fn legal_bits(class: u32, total: u64, cfg: Config, legality: OverflowLegality) -> Vec<u8> {
    let limit = cfg.m() as u64 * cfg.g() as u64 - 1;
    let wanted: Vec<u8> = if class == 0 { vec![1] } else { vec![0, 1] };
    let ok: Vec<u8> = wanted.iter().copied().filter(|&o| total + (class + o as u32) as u64 <= limit).collect();
    if legality == OverflowLegality::Strict && ok.len() != wanted.len() {
        return Vec::new();
    }
    ok
}

fn walk_upper(
    node: &AlgorithmNode,
    sent: &ItemMultiset,
    cfg: Config,
    legality: OverflowLegality,
    path: &str,
) -> Result<u32, ProofError> {
    check_loads(&node.loads, cfg.m(), path)?;
    let total: u64 = node.loads.iter().map(|&l| l as u64).sum();
    let legal: Vec<(u32, Vec<u8>)> = (0..cfg.g())
        .filter(|&c| fits(&sent.with(c), cfg.m(), cfg.g() - 1))
        .map(|c| (c, legal_bits(c, total, cfg, legality)))
        .filter(|(_, bits)| !bits.is_empty())
        .collect();
    if let Some(extra) = node.moves.keys().find(|c| !legal.iter().any(|(l, _)| l == *c)) {
        return Err(malformed(path, format!("answer for illegal class {extra}")));
    }
    if legal.is_empty() {
        return Ok(node.loads[0] + 1);
    }
    let replies = distinct_bin_moves(&node.loads);
    let mut value = 0;
    for (class, bits) in legal {
        let Some(p) = node.moves.get(&class) else {
            return Err(ProofError::IncompleteStrategy { path: path.to_string(), class, overflow: None });
        };
        if !replies.contains(&p.bin) {
            return Err(malformed(path, format!("class {class}: bin {} is not a representative bin", p.bin)));
        }
        let sent = sent.with(class);
        for (o, branch) in [(0u8, &p.no_overflow), (1u8, &p.overflow)] {
            let child_path = format!("{path}/{class}/{o}");
            match (bits.contains(&o), branch) {
                (true, None) => {
                    return Err(ProofError::IncompleteStrategy {
                        path: path.to_string(),
                        class,
                        overflow: Some(o),
                    })
                }
                (false, Some(_)) => {
                    return Err(malformed(&child_path, "branch for an illegal overflow bit"))
                }
                (false, None) => {}
                (true, Some(child)) => {
                    if child.loads != successor(&node.loads, p.bin, class + o as u32) {
                        return Err(malformed(&child_path, "loads inconsistent with parent move"));
                    }
                    value = value.max(walk_upper(child, &sent, cfg, legality, &child_path)?);
                }
            }
        }
    }
    Ok(value)
}

/// Verifies either kind of document.
pub fn verify(doc: &ProofDocument) -> Result<Score, ProofError> {
    match doc.game() {
        GameKind::Lower => verify_lower(doc),
        GameKind::Upper => verify_upper(doc),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Verified(Score),
    ClaimMismatch { claimed: Score, verified: Score },
}

/// [`verify`] plus comparison against the document's claimed value.
pub fn check(doc: &ProofDocument) -> Result<Verdict, ProofError> {
    let verified = verify(doc)?;
    let claimed = doc.claimed();
    Ok(if verified == claimed {
        Verdict::Verified(verified)
    } else {
        Verdict::ClaimMismatch { claimed, verified }
    })
}
