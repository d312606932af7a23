//! Vertically partitioned training: all parties hold the same samples but
//! disjoint feature blocks, and one active party holds the labels and the
//! Paillier keypair. The active party broadcasts encrypted gradients;
//! passive parties return encrypted per-bin sums over each node's sample
//! space; the active party decrypts, picks the split across all features
//! and tells only the winning owner, which answers with the left sample
//! set. Thresholds stay with their owners, so prediction is a protocol too.

mod active;
mod messages;
mod model;
mod passive;

pub use active::VflActive;
pub use messages::{
    EncHistogramSubmit, EncNodeHistogram, GradientBroadcast, InferQuery, InferReply, LeftSet, NodeSamples, Notice,
    PartitionReply, SampleSpace, SplitNotice,
};
pub use model::{vfl_assemble, SplitLookupTable, SplitRecord, VflModel, VflNode, VflRoster, VflTree};
pub use passive::VflPassive;

use std::collections::{BTreeMap, HashSet};

use model::SkeletonBuilder;

use crate::data::{Matrix, PartyDataset};
use crate::error::{Error, Result};
use crate::gbt::{
    node_split, node_weight, subsample_rows, BinStats, BinningScope, GbtParams, GradHistogram, SplitCandidate,
};
use crate::orchestrator::{Bus, Envelope, MessageKind};
use crate::phe::{Keypair, PublicKey};

#[derive(Debug)]
pub struct VflOutcome {
    pub model: VflModel,
    pub active_table: SplitLookupTable,
    pub passive_tables: Vec<SplitLookupTable>,
    pub transcript: Vec<Envelope>,
    pub keypair: Keypair,
}

impl VflOutcome {
    pub fn tables(&self) -> Vec<SplitLookupTable> {
        let mut t = self.passive_tables.clone();
        t.push(self.active_table.clone());
        t
    }
}

fn abort(bus: &Bus, e: Error) -> Error {
    match e {
        Error::Protocol { .. } => e,
        other => Error::Protocol {
            position: bus.transcript().len(),
            reason: other.to_string(),
        },
    }
}

#[derive(Debug)]
struct Open {
    id: usize,
    depth: usize,
    rows: Vec<usize>,
    stats: BinStats,
}

#[derive(Debug)]
struct Remote {
    party: usize,
    node: usize,
    left_id: usize,
    right_id: usize,
    depth: usize,
    rows: Vec<usize>,
    split: SplitCandidate,
    slot: usize,
}

/// Leaf weight of `tree` for one sample, asking feature owners at every
/// split they hold.
#[allow(clippy::too_many_arguments)]
fn route(
    bus: &mut Bus,
    round: u64,
    active: &str,
    active_table: &SplitLookupTable,
    active_x: &Matrix,
    row: usize,
    sample: &str,
    passives: &[VflPassive],
    tree: &VflTree,
) -> Result<f64> {
    let mut i = 0;
    loop {
        match tree.nodes.get(i) {
            Some(VflNode::Leaf { weight, .. }) => return Ok(*weight),
            Some(VflNode::Split {
                party,
                record,
                left,
                right,
                ..
            }) => {
                let go_left = if party == active {
                    let r = active_table.get(*record).map_err(|e| abort(bus, e))?;
                    active_x.get(row, r.feature) <= r.threshold
                } else {
                    let p = passives
                        .iter()
                        .find(|p| &p.name == party)
                        .ok_or_else(|| abort(bus, Error::Consistency(format!("unknown owner {party}"))))?;
                    let q = InferQuery {
                        record: *record,
                        sample: sample.to_string(),
                    };
                    bus.send(active, party, round, MessageKind::InferQuery, &q)?;
                    let q: InferQuery = bus.recv(party, active, MessageKind::InferQuery)?;
                    let reply = p.on_query(&q).map_err(|e| abort(bus, e))?;
                    bus.send(party, active, round, MessageKind::InferReply, &reply)?;
                    let reply: InferReply = bus.recv(active, party, MessageKind::InferReply)?;
                    reply.go_left
                };
                i = if go_left { *left } else { *right };
            }
            None => return Err(abort(bus, Error::Consistency(format!("tree has no node {i}")))),
        }
    }
}

/// Trains across feature-partitioned parties. `passive` must follow the
/// roster order. Bins are recomputed over each node's samples, so `params`
/// must use per-node binning.
pub fn vfl_train(
    roster: &VflRoster,
    active: &PartyDataset,
    passive: &[PartyDataset],
    params: &GbtParams,
    seed: u64,
) -> Result<VflOutcome> {
    params.validate()?;
    if params.binning != BinningScope::PerNode {
        return Err(Error::Config("vertical training bins per node; set binning = per_node".into()));
    }
    if active.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    if roster.n_features() == 0 {
        return Err(Error::InvalidInput("no party holds features".into()));
    }
    let names: Vec<&str> = passive.iter().map(|p| p.party.as_str()).collect();
    if names != roster.passive.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Config("passive parties do not match the roster".into()));
    }
    for p in passive {
        if p.ids != roster.sample_ids {
            return Err(Error::Data(format!("{} is not aligned with the roster", p.party)));
        }
    }

    let mut act = VflActive::new(roster, active.clone(), params, seed)?;
    let mut pas: Vec<VflPassive> = passive
        .iter()
        .map(|p| VflPassive::new(p.clone(), params.max_bin))
        .collect();
    let a = act.name.clone();
    let pnames = roster.passive.clone();
    let n = act.data().len();
    let nb = params.max_bin;

    let mut bus = Bus::new();
    bus.register(&a);
    for p in &pnames {
        bus.register(p);
    }
    let mut round = 0;
    if !pas.is_empty() {
        let pk = act.public_key().clone();
        bus.broadcast(&a, &pnames, round, MessageKind::PublicKey, &pk)?;
        for p in pas.iter_mut() {
            let pk: PublicKey = bus.recv(&p.name, &a, MessageKind::PublicKey)?;
            p.on_public_key(pk).map_err(|e| abort(&bus, e))?;
        }
    }

    let mut model = VflModel {
        base_score_logit: params.base_score_logit,
        learning_rate: params.learning_rate,
        params: params.clone(),
        trees: Vec::new(),
    };
    for t in 0..params.n_estimators {
        round += 1;
        act.compute_gradients()?;
        if !pas.is_empty() {
            let b = act.encrypt_gradients(t).map_err(|e| abort(&bus, e))?;
            bus.broadcast(&a, &pnames, round, MessageKind::GradientBroadcast, &b)?;
            for p in pas.iter_mut() {
                let b: GradientBroadcast = bus.recv(&p.name, &a, MessageKind::GradientBroadcast)?;
                p.on_gradients(b).map_err(|e| abort(&bus, e))?;
            }
        }
        let rows = subsample_rows(n, params, seed, t);
        let root_stats = BinStats::of(rows.iter().map(|&i| act.grads()[i]));
        let mut builder = SkeletonBuilder::new();
        let mut level = vec![Open {
            id: 0,
            depth: 0,
            rows: rows.clone(),
            stats: root_stats,
        }];
        let mut leaves: Vec<(f64, Vec<usize>)> = Vec::new();

        while !level.is_empty() {
            round += 1;
            let needs = |o: &Open| o.depth < params.max_depth && o.stats.count >= 2;
            let mut remote_hists: Vec<BTreeMap<usize, GradHistogram>> = vec![BTreeMap::new(); pas.len()];
            if !pas.is_empty() && level.iter().any(needs) {
                let space = SampleSpace {
                    tree: t,
                    nodes: level
                        .iter()
                        .filter(|o| needs(o))
                        .map(|o| NodeSamples {
                            node: o.id,
                            samples: o.rows.clone(),
                        })
                        .collect(),
                };
                bus.broadcast(&a, &pnames, round, MessageKind::SampleSpace, &space)?;
                for p in pas.iter_mut() {
                    let s: SampleSpace = bus.recv(&p.name, &a, MessageKind::SampleSpace)?;
                    let sub = p.on_sample_space(&s).map_err(|e| abort(&bus, e))?;
                    bus.send(&p.name, &a, round, MessageKind::EncHistogramSubmit, &sub)?;
                }
                let subs: Vec<EncHistogramSubmit> = bus.collect(&a, &pnames, MessageKind::EncHistogramSubmit)?;
                for (k, sub) in subs.iter().enumerate() {
                    if sub.tree != t {
                        return Err(abort(&bus, Error::Consistency(format!("{}: stale histogram", pnames[k]))));
                    }
                    for e in &sub.nodes {
                        let h = act.decrypt_histogram(e, nb).map_err(|e| abort(&bus, e))?;
                        remote_hists[k].insert(e.node, h);
                    }
                }
            }

            let mut next: Vec<Option<(Open, Open)>> = Vec::new();
            let mut notices: Vec<Vec<Notice>> = vec![Vec::new(); pas.len()];
            let mut pending: Vec<Remote> = Vec::new();
            for o in level {
                let split = if needs(&o) {
                    let mut hist = GradHistogram::zeros(0, nb);
                    for (k, hs) in remote_hists.iter_mut().enumerate() {
                        let h = hs.remove(&o.id).ok_or_else(|| {
                            abort(&bus, Error::Consistency(format!("{} sent no histogram for node {}", pnames[k], o.id)))
                        })?;
                        if h.n_features() > 0 && h.totals().count != o.stats.count {
                            return Err(abort(&bus, Error::Consistency(format!("{}: node {} row count mismatch", pnames[k], o.id))));
                        }
                        hist = hist.concat_features(&h)?;
                    }
                    let (own_bounds, own) = act.own_histogram(&o.rows)?;
                    hist = hist.concat_features(&own)?;
                    node_split(params, o.depth, o.stats, &hist).map(|s| (s, own_bounds))
                } else {
                    None
                };
                let Some((split, own_bounds)) = split else {
                    builder.leaf(o.id, node_weight(params, o.stats)?);
                    leaves.push((node_weight(params, o.stats)?, o.rows));
                    continue;
                };
                let (owner, local) = roster
                    .owner_of(split.feature)
                    .ok_or_else(|| Error::Consistency(format!("feature {} has no owner", split.feature)))?;
                if owner == a {
                    let b = &own_bounds[local];
                    let record = act.table.push(SplitRecord {
                        tree: t,
                        node: o.id,
                        feature: local,
                        bin: split.bin,
                        threshold: b.threshold(split.bin),
                    });
                    let (l, r) = builder.split(o.id, &a, record);
                    let x = &act.data().features;
                    let (lr, rr): (Vec<usize>, Vec<usize>) =
                        o.rows.iter().partition(|&&i| b.bin(x.get(i, local)) <= split.bin);
                    next.push(Some(children(l, r, o.depth + 1, lr, rr, &split)));
                } else {
                    let k = roster.passive.iter().position(|p| p == owner).expect("owner is passive");
                    let (l, r) = builder.split(o.id, owner, usize::MAX);
                    notices[k].push(Notice {
                        node: o.id,
                        feature: local,
                        bin: split.bin,
                    });
                    pending.push(Remote {
                        party: k,
                        node: o.id,
                        left_id: l,
                        right_id: r,
                        depth: o.depth + 1,
                        rows: o.rows,
                        split,
                        slot: next.len(),
                    });
                    next.push(None);
                }
            }

            let notified: Vec<usize> = (0..pas.len()).filter(|&k| !notices[k].is_empty()).collect();
            for &k in &notified {
                let msg = SplitNotice {
                    tree: t,
                    notices: std::mem::take(&mut notices[k]),
                };
                bus.send(&a, &pnames[k], round, MessageKind::SplitNotice, &msg)?;
                let msg: SplitNotice = bus.recv(&pnames[k], &a, MessageKind::SplitNotice)?;
                let reply = pas[k].on_notice(&msg).map_err(|e| abort(&bus, e))?;
                bus.send(&pnames[k], &a, round, MessageKind::PartitionReply, &reply)?;
            }
            for &k in &notified {
                let reply: PartitionReply = bus.recv(&a, &pnames[k], MessageKind::PartitionReply)?;
                for part in reply.parts {
                    let pos = pending
                        .iter()
                        .position(|p| p.party == k && p.node == part.node)
                        .ok_or_else(|| abort(&bus, Error::Consistency(format!("unexpected reply for node {}", part.node))))?;
                    let p = pending.swap_remove(pos);
                    let in_node: HashSet<usize> = p.rows.iter().copied().collect();
                    let left: HashSet<usize> = part.left.iter().copied().collect();
                    if left.len() != part.left.len()
                        || !left.is_subset(&in_node)
                        || left.len() as u64 != p.split.left.count
                    {
                        return Err(abort(&bus, Error::Consistency(format!(
                            "{}: left set for node {} disagrees with the histogram",
                            pnames[k], p.node
                        ))));
                    }
                    builder.set_record(p.node, part.record);
                    let (lr, rr): (Vec<usize>, Vec<usize>) = p.rows.iter().partition(|i| left.contains(i));
                    next[p.slot] = Some(children(p.left_id, p.right_id, p.depth, lr, rr, &p.split));
                }
            }
            if let Some(p) = pending.first() {
                return Err(abort(&bus, Error::Consistency(format!("{} never resolved node {}", pnames[p.party], p.node))));
            }
            level = next
                .into_iter()
                .flat_map(|c| {
                    let (l, r) = c.expect("all children resolved");
                    [l, r]
                })
                .collect();
        }

        let tree = builder.finish()?;
        round += 1;
        let lr = params.learning_rate;
        let mut covered = vec![false; n];
        for (w, rows) in &leaves {
            for &i in rows {
                act.margins[i] += lr * w;
                covered[i] = true;
            }
        }
        for i in (0..n).filter(|&i| !covered[i]) {
            let id = roster.sample_ids[i].clone();
            let w = route(&mut bus, round, &a, &act.table, &act.data().features, i, &id, &pas, &tree)?;
            act.margins[i] += lr * w;
        }
        model.trees.push(tree);
    }

    Ok(VflOutcome {
        model,
        active_table: act.table.clone(),
        passive_tables: pas.iter().map(|p| p.table.clone()).collect(),
        transcript: bus.into_transcript(),
        keypair: act.keypair().clone(),
    })
}

fn children(l: usize, r: usize, depth: usize, lr: Vec<usize>, rr: Vec<usize>, s: &SplitCandidate) -> (Open, Open) {
    (
        Open {
            id: l,
            depth,
            rows: lr,
            stats: s.left,
        },
        Open {
            id: r,
            depth,
            rows: rr,
            stats: s.right,
        },
    )
}

/// Result of federated inference.
#[derive(Debug)]
pub struct VflPrediction {
    pub probabilities: Vec<f64>,
    pub transcript: Vec<Envelope>,
}

/// Scores the samples of `active` (its feature slice) with the help of the
/// passive parties, each holding its lookup table and its slice of the same
/// samples.
pub fn vfl_predict(
    model: &VflModel,
    active_table: &SplitLookupTable,
    active: &PartyDataset,
    passive: &[(SplitLookupTable, PartyDataset)],
) -> Result<VflPrediction> {
    let a = active_table.party.clone();
    let pas: Vec<VflPassive> = passive
        .iter()
        .map(|(t, d)| {
            if d.ids != active.ids {
                return Err(Error::Data(format!("{} is not aligned with {}", d.party, active.party)));
            }
            Ok(VflPassive::for_inference(d.clone(), t.clone()))
        })
        .collect::<Result<_>>()?;
    let mut bus = Bus::new();
    bus.register(&a);
    for p in &pas {
        bus.register(&p.name);
    }
    let mut probabilities = Vec::with_capacity(active.len());
    for (i, id) in active.ids.iter().enumerate() {
        let mut margin = model.base_score_logit;
        for tree in &model.trees {
            let w = route(&mut bus, i as u64, &a, active_table, &active.features, i, id, &pas, tree)?;
            margin += model.learning_rate * w;
        }
        probabilities.push(crate::gbt::sigmoid(margin));
    }
    Ok(VflPrediction {
        probabilities,
        transcript: bus.into_transcript(),
    })
}
