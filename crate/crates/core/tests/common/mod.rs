//! Reference implementations for cross-checking the solvers. Everything
//! here is deliberately naive: physical bins, no symmetry reduction, no
//! memoization, no pruning, and no calls into the library's search code.

#![allow(dead_code)]

use proptest::prelude::*;
use serde_json::Value;
use stretch_core::{Config, OnlinePolicy, Packing};

/// Tries all `m^n` assignments of `sizes` to bins.
pub fn naive_fits(sizes: &[u32], m: u32, capacity: u32) -> bool {
    fn go(sizes: &[u32], bins: &mut [u32], capacity: u32) -> bool {
        let Some((&s, rest)) = sizes.split_first() else {
            return true;
        };
        for i in 0..bins.len() {
            if bins[i] + s <= capacity {
                bins[i] += s;
                let ok = go(rest, bins, capacity);
                bins[i] -= s;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    go(sizes, &mut vec![0; m as usize], capacity)
}

/// Every multiset of sizes `1..=max_size` with at most `max_n` items, as
/// non-increasing vectors.
pub fn all_multisets(max_n: usize, max_size: u32) -> Vec<Vec<u32>> {
    fn go(prefix: &mut Vec<u32>, top: u32, max_n: usize, out: &mut Vec<Vec<u32>>) {
        out.push(prefix.clone());
        if prefix.len() == max_n {
            return;
        }
        for s in 1..=top {
            prefix.push(s);
            go(prefix, s, max_n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), max_size, max_n, &mut out);
    out
}

fn naive_lower_rec(loads: &mut Vec<u32>, sent: &mut Vec<u32>, g: u32, voluntary_stop: bool) -> u32 {
    let m = loads.len() as u32;
    let here = *loads.iter().max().unwrap();
    let mut best = None;
    for y in 1..=g {
        sent.push(y);
        if naive_fits(sent, m, g) {
            let mut worst = u32::MAX;
            for i in 0..loads.len() {
                loads[i] += y;
                worst = worst.min(naive_lower_rec(loads, sent, g, voluntary_stop));
                loads[i] -= y;
            }
            best = Some(best.map_or(worst, |b: u32| b.max(worst)));
        }
        sent.pop();
    }
    match best {
        None => here,
        Some(b) if voluntary_stop => b.max(here),
        Some(b) => b,
    }
}

/// Lower-game value numerator by plain minimax over physical bins.
pub fn naive_lower(m: u32, g: u32) -> u32 {
    naive_lower_rec(&mut vec![0; m as usize], &mut Vec::new(), g, false)
}

/// Same game, but the adversary may also end the game at any point.
pub fn naive_lower_voluntary_stop(m: u32, g: u32) -> u32 {
    naive_lower_rec(&mut vec![0; m as usize], &mut Vec::new(), g, true)
}

fn naive_upper_rec(loads: &mut Vec<u32>, sent: &mut Vec<u32>, m: u32, g: u32) -> u32 {
    let limit = m * g - 1;
    let total: u32 = loads.iter().sum();
    let mut best = None;
    for c in 0..g {
        let bits: Vec<u32> = (0..=1).filter(|&o| (c > 0 || o == 1) && total + c + o <= limit).collect();
        if bits.is_empty() {
            continue;
        }
        sent.push(c);
        if naive_fits(sent, m, g - 1) {
            let mut worst = u32::MAX;
            for i in 0..loads.len() {
                let mut adv = 0;
                for &o in &bits {
                    loads[i] += c + o;
                    adv = adv.max(naive_upper_rec(loads, sent, m, g));
                    loads[i] -= c + o;
                }
                worst = worst.min(adv);
            }
            best = Some(best.map_or(worst, |b: u32| b.max(worst)));
        }
        sent.pop();
    }
    best.unwrap_or_else(|| loads.iter().max().unwrap() + 1)
}

/// Upper-game value numerator by plain minimax over physical bins.
pub fn naive_upper(m: u32, g: u32) -> u32 {
    naive_upper_rec(&mut vec![0; m as usize], &mut Vec::new(), m, g)
}

/// Worst final max load the policy allows over every legal item sequence
/// of the lower game, checked with the naive packing oracle.
pub fn policy_worst_case<P: OnlinePolicy>(policy: &P, cfg: Config) -> u32 {
    fn go<P: OnlinePolicy>(policy: &P, cfg: Config, seq: &mut Vec<u32>, loads: &mut Vec<u32>) -> u32 {
        let mut worst = *loads.iter().max().unwrap();
        for y in 1..=cfg.g() {
            seq.push(y);
            if naive_fits(seq, cfg.m(), cfg.g()) {
                let bin = policy.place(seq).expect("legal sequence");
                loads[bin] += y;
                worst = worst.max(go(policy, cfg, seq, loads));
                loads[bin] -= y;
            }
            seq.pop();
        }
        worst
    }
    go(policy, cfg, &mut Vec::new(), &mut vec![0; cfg.bins()])
}

/// Lowest physical bin index whose load equals the canonical
/// representative's load.
fn canonical_index(loads: &[u32], bin: usize) -> usize {
    let mut sorted = loads.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.iter().position(|&l| l == loads[bin]).unwrap()
}

/// Follows `policy` through an adversary tree and returns the max load of
/// the leaf it ends in.
pub fn policy_vs_tree<P: OnlinePolicy>(policy: &P, root: &stretch_core::AdversaryNode) -> u32 {
    let mut node = root;
    let mut seq = Vec::new();
    let mut loads = vec![0u32; root.loads.len()];
    while let Some(item) = node.item {
        seq.push(item);
        let bin = policy.place(&seq).expect("tree items are legal");
        let key = canonical_index(&loads, bin);
        loads[bin] += item;
        node = &node.children[&key];
    }
    assert_eq!(node.loads[0], *loads.iter().max().unwrap());
    node.loads[0]
}

/// All single-field mutations of a serialized proof: bump the claimed
/// value, change an item size, a class key, a bin index or a load entry,
/// or delete a child, move or overflow branch.
pub fn mutations(bytes: &[u8]) -> Vec<(String, Vec<u8>)> {
    let doc: Value = serde_json::from_slice(bytes).unwrap();
    let mut out = Vec::new();
    let mut push = |label: String, v: Value| out.push((label, serde_json::to_vec_pretty(&v).unwrap()));

    let mut v = doc.clone();
    v["value_num"] = Value::from(doc["value_num"].as_u64().unwrap() + 1);
    push("value_num+1".into(), v);
    if doc["value_num"].as_u64().unwrap() > 0 {
        let mut v = doc.clone();
        v["value_num"] = Value::from(doc["value_num"].as_u64().unwrap() - 1);
        push("value_num-1".into(), v);
    }

    let mut sites = Vec::new();
    collect_sites(&doc["root"], "/root", &mut sites);
    for (ptr, site) in sites {
        let mut v = doc.clone();
        let target = v.pointer_mut(&ptr).unwrap();
        let ok = match &site {
            Site::Int(delta) => {
                let n = target.as_i64().unwrap() + delta;
                if n < 0 {
                    false
                } else {
                    *target = Value::from(n);
                    true
                }
            }
            Site::Delete(key) => target.as_object_mut().unwrap().remove(key).is_some(),
            Site::Rename(key) => {
                let obj = target.as_object_mut().unwrap();
                let child = obj.remove(key).unwrap();
                let fresh = (0..).map(|k: u32| k.to_string()).find(|k| !obj.contains_key(k) && k != key).unwrap();
                obj.insert(fresh, child);
                true
            }
        };
        if ok {
            push(format!("{ptr} {site:?}"), v);
        }
    }
    out
}

#[derive(Debug)]
enum Site {
    Int(i64),
    Delete(String),
    Rename(String),
}

fn collect_sites(node: &Value, ptr: &str, out: &mut Vec<(String, Site)>) {
    let obj = node.as_object().unwrap();
    for (i, _) in obj["loads"].as_array().unwrap().iter().enumerate() {
        out.push((format!("{ptr}/loads/{i}"), Site::Int(1)));
    }
    if obj.contains_key("item") {
        out.push((format!("{ptr}/item"), Site::Int(1)));
        out.push((format!("{ptr}/item"), Site::Int(-1)));
    }
    if let Some(children) = obj.get("children").and_then(Value::as_object) {
        for (k, child) in children {
            out.push((format!("{ptr}/children"), Site::Delete(k.clone())));
            out.push((format!("{ptr}/children"), Site::Rename(k.clone())));
            collect_sites(child, &format!("{ptr}/children/{k}"), out);
        }
    }
    if let Some(moves) = obj.get("moves").and_then(Value::as_object) {
        for (k, p) in moves {
            out.push((format!("{ptr}/moves"), Site::Delete(k.clone())));
            out.push((format!("{ptr}/moves"), Site::Rename(k.clone())));
            out.push((format!("{ptr}/moves/{k}/bin"), Site::Int(1)));
            if p["bin"].as_u64().unwrap() > 0 {
                out.push((format!("{ptr}/moves/{k}/bin"), Site::Int(-1)));
            }
            for branch in ["no_overflow", "overflow"] {
                if let Some(child) = p.get(branch) {
                    out.push((format!("{ptr}/moves/{k}"), Site::Delete(branch.into())));
                    collect_sites(child, &format!("{ptr}/moves/{k}/{branch}"), out);
                }
            }
        }
    }
}

/// True iff the verifier refuses the document: it does not parse, does not
/// verify, or verifies to a value other than the claim.
pub fn rejected(bytes: &[u8]) -> bool {
    use stretch_core::proofs::{check, deserialize, Verdict};
    match deserialize(bytes) {
        Err(_) => true,
        Ok(doc) => !matches!(check(&doc), Ok(Verdict::Verified(_))),
    }
}

/// A packing into `m` bins of size `h` with `n + sum < m*h`, built by
/// truncating random bins and then dropping items from the back.
pub fn repack_instance() -> impl Strategy<Value = (Packing, u32, u32)> {
    (2u32..=25, 1u32..=4).prop_flat_map(|(h, m)| {
        let bin = prop::collection::vec(1..=h, 0..=h as usize);
        prop::collection::vec(bin, m as usize).prop_map(move |raw| {
            let mut bins: Vec<Vec<u32>> = raw
                .into_iter()
                .map(|b| {
                    let mut load = 0;
                    b.into_iter()
                        .take_while(|&s| {
                            load += s;
                            load <= h
                        })
                        .collect()
                })
                .collect();
            let cost = |bins: &Vec<Vec<u32>>| bins.iter().flatten().map(|&s| s as u64 + 1).sum::<u64>();
            while cost(&bins) >= (m * h) as u64 {
                let last = bins.iter().rposition(|b| !b.is_empty()).unwrap();
                bins[last].pop();
            }
            (Packing { bins }, h, m)
        })
    })
}
